//! Counterfeit and recycled IC screening from the reflection signature
//! (|S11|) of a board's power delivery network.
//!
//! The pipeline: acquire or simulate S11 sweeps, convert them to dB
//! magnitude, build a golden mean/σ signature from known-genuine parts,
//! then flag devices whose deviation exceeds kσ over a contiguous band.

pub mod cli;
pub mod detect;
mod numfmt;
pub mod pdn;
pub mod report;
pub mod rf;
pub mod signature;
pub mod touchstone;
pub mod vna;

pub use detect::{deviation_trace, localize_bands, verify, Decision, DetectorConfig, FlaggedBand, Verdict};
pub use pdn::{PdnModel, PdnStage, RlcBranch};
pub use rf::{ComplexTrace, FrequencyGrid, MagnitudeTrace, ReferenceImpedance};
pub use signature::{average_trials, build_golden, GoldenSignature, SampleRecord};
