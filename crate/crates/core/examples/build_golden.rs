//! Build a golden signature from simulated genuine samples, save it and load
//! it back.
//!
//!     cargo run --example build_golden [out.golden]

use std::collections::BTreeMap;

use pdnprint::pdn::{sample_genuine, simulate_magnitude_trials, NoiseSpec, PdnModel, VariationSpec};
use pdnprint::rf::FrequencyGrid;
use pdnprint::signature::{load_golden, save_golden};
use pdnprint::{build_golden, SampleRecord};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = PdnModel::preset("cw308-like")?;
    let grid = FrequencyGrid::linear(1e6, 1e9, 5000)?;

    // 12 samples, each swept 10 times.
    let records = (1..=12u64)
        .map(|seed| {
            let chip = sample_genuine(&base, VariationSpec::new(0.02, seed)?)?;
            let trials = simulate_magnitude_trials(&chip, &grid, NoiseSpec::new(0.05, 1000 + seed)?, 10);
            Ok(SampleRecord::new(format!("chip-{seed:02}"), trials)?)
        })
        .collect::<Result<Vec<_>, Box<dyn std::error::Error>>>()?;

    let meta = BTreeMap::from([("device".to_string(), "cw308-like".to_string())]);
    let golden = build_golden(&records, meta)?;
    let sigma = golden.sigma_db();
    println!(
        "{} samples x {} trials, {} points, sigma {:.4}..{:.4} dB",
        golden.n_samples,
        golden.n_trials,
        golden.grid().len(),
        sigma.iter().copied().fold(f64::INFINITY, f64::min),
        sigma.iter().copied().fold(0.0, f64::max)
    );

    let bytes = save_golden(&golden);
    assert_eq!(load_golden(&bytes)?, golden);
    println!("{} bytes on disk, reloads identically", bytes.len());

    if let Some(out) = std::env::args().nth(1) {
        std::fs::write(&out, &bytes)?;
        println!("wrote {out}");
    }
    Ok(())
}
