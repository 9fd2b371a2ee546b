//! The kσ envelope rule and deviating-band localization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rf::MagnitudeTrace;
use crate::signature::GoldenSignature;

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("grid mismatch: golden has {golden} points from {golden_start} Hz, dut has {dut} points from {dut_start} Hz (re-measure on the golden grid)")]
    GridMismatch {
        golden: usize,
        golden_start: f64,
        dut: usize,
        dut_start: f64,
    },
    #[error("invalid detector config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub k_sigma: f64,
    pub min_band_points: usize,
    pub merge_gap_points: usize,
    pub sigma_floor_db: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            k_sigma: 6.0,
            min_band_points: 5,
            merge_gap_points: 3,
            sigma_floor_db: 1e-4,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), DetectError> {
        if !(self.k_sigma.is_finite() && self.k_sigma > 0.0) {
            return Err(DetectError::InvalidConfig(format!(
                "k_sigma {} must be > 0",
                self.k_sigma
            )));
        }
        if self.min_band_points < 1 {
            return Err(DetectError::InvalidConfig("min_band_points must be >= 1".into()));
        }
        if !(self.sigma_floor_db.is_finite() && self.sigma_floor_db > 0.0) {
            return Err(DetectError::InvalidConfig(format!(
                "sigma_floor_db {} must be > 0",
                self.sigma_floor_db
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedBand {
    pub f_start: f64,
    pub f_stop: f64,
    pub max_deviation_sigma: f64,
    pub mean_deviation_sigma: f64,
    /// Marked points in the band (bridged gap points are not counted).
    pub point_count: usize,
    /// Grid indices of the first and last marked point.
    pub first_index: usize,
    pub last_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Genuine,
    Counterfeit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub decision: Decision,
    pub bands: Vec<FlaggedBand>,
    pub deviation: Vec<f64>,
    pub config: DetectorConfig,
    pub golden_metadata: BTreeMap<String, String>,
}

impl Verdict {
    /// Sum of `f_stop - f_start` over all bands.
    pub fn flagged_bandwidth(&self) -> f64 {
        self.bands.iter().map(|b| b.f_stop - b.f_start).fold(0.0, |a, w| a + w)
    }

    pub fn max_deviation(&self) -> f64 {
        self.bands.iter().map(|b| b.max_deviation_sigma).fold(0.0, f64::max)
    }

    /// The band with the largest peak deviation.
    pub fn worst_band(&self) -> Option<&FlaggedBand> {
        self.bands
            .iter()
            .max_by(|a, b| a.max_deviation_sigma.total_cmp(&b.max_deviation_sigma))
    }
}

/// `|dut − μ| / max(σ, floor)` at every grid point.
pub fn deviation_trace(
    golden: &GoldenSignature,
    dut: &MagnitudeTrace,
    cfg: &DetectorConfig,
) -> Result<Vec<f64>, DetectError> {
    cfg.validate()?;
    if golden.grid() != dut.grid() {
        return Err(DetectError::GridMismatch {
            golden: golden.grid().len(),
            golden_start: golden.grid().start(),
            dut: dut.grid().len(),
            dut_start: dut.grid().start(),
        });
    }
    Ok(dut
        .values_db()
        .iter()
        .zip(golden.mean_db())
        .zip(golden.sigma_db())
        .map(|((x, mu), s)| (x - mu).abs() / s.max(cfg.sigma_floor_db))
        .collect())
}

/// Groups points with `d > k_sigma` into bands. `freqs` gives the frequency
/// of each point and must be as long as `d`.
pub fn localize_bands(d: &[f64], freqs: &[f64], cfg: &DetectorConfig) -> Vec<FlaggedBand> {
    assert_eq!(d.len(), freqs.len(), "one frequency per deviation value");
    let marked: Vec<usize> = (0..d.len()).filter(|&i| d[i] > cfg.k_sigma).collect();
    let mut runs: Vec<Vec<usize>> = Vec::new();
    for i in marked {
        match runs.last_mut() {
            Some(run) if i - run[run.len() - 1] - 1 <= cfg.merge_gap_points => run.push(i),
            _ => runs.push(vec![i]),
        }
    }
    runs.into_iter()
        .filter(|run| run.len() >= cfg.min_band_points)
        .map(|run| {
            let (first, last) = (run[0], run[run.len() - 1]);
            let max = run.iter().map(|&i| d[i]).fold(f64::NEG_INFINITY, f64::max);
            let mean = run.iter().map(|&i| d[i]).sum::<f64>() / run.len() as f64;
            FlaggedBand {
                f_start: freqs[first],
                f_stop: freqs[last],
                max_deviation_sigma: max,
                mean_deviation_sigma: mean,
                point_count: run.len(),
                first_index: first,
                last_index: last,
            }
        })
        .collect()
}

pub fn verify(golden: &GoldenSignature, dut: &MagnitudeTrace, cfg: &DetectorConfig) -> Result<Verdict, DetectError> {
    let deviation = deviation_trace(golden, dut, cfg)?;
    let bands = localize_bands(&deviation, golden.grid().points(), cfg);
    let decision = if bands.is_empty() {
        Decision::Genuine
    } else {
        Decision::Counterfeit
    };
    Ok(Verdict {
        decision,
        bands,
        deviation,
        config: *cfg,
        golden_metadata: golden.metadata.clone(),
    })
}
