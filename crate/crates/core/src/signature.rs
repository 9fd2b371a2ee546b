//! Golden signatures: per-frequency mean and standard deviation of |S11|
//! (dB) over known-genuine samples, plus the on-disk golden file format.
//!
//! Statistics are computed in the dB domain. Each sample's trials are
//! averaged first; the signature's mean and sample standard deviation
//! (n − 1) are then taken across the per-sample averages.
//!
//! Summation order: at every frequency the values being summed are sorted
//! ascending (`f64::total_cmp`) and accumulated left to right, both for the
//! means and for the squared deviations. This makes the result bit-identical
//! under any reordering of samples or trials.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::numfmt::decimal;
use crate::rf::{FrequencyGrid, MagnitudeTrace, RfError};

pub const GOLDEN_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "pdnprint-golden";

#[derive(Debug, Error)]
pub enum SignatureError {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("at least 2 samples are needed for a golden signature, got {0}")]
    TooFewSamples(usize),
    #[error("sample {0:?} has no trials")]
    EmptyRecord(String),
    #[error("golden file format version {0} is not supported")]
    FormatVersionUnknown(String),
    #[error("corrupt golden file: {0}")]
    CorruptFile(String),
    #[error(transparent)]
    Rf(#[from] RfError),
}

/// Repeated trials of one physical sample, all on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub sample_id: String,
    trials: Vec<MagnitudeTrace>,
}

impl SampleRecord {
    pub fn new(sample_id: impl Into<String>, trials: Vec<MagnitudeTrace>) -> Result<Self, SignatureError> {
        let sample_id = sample_id.into();
        let Some(first) = trials.first() else {
            return Err(SignatureError::EmptyRecord(sample_id));
        };
        if let Some(i) = trials.iter().position(|t| t.grid() != first.grid()) {
            return Err(SignatureError::GridMismatch(format!(
                "trial {i} of sample {sample_id:?} is on a different grid than trial 0"
            )));
        }
        Ok(Self { sample_id, trials })
    }

    pub fn trials(&self) -> &[MagnitudeTrace] {
        &self.trials
    }

    pub fn grid(&self) -> &FrequencyGrid {
        self.trials[0].grid()
    }
}

/// Sum of `values` in ascending order.
fn sorted_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

fn mean_of(values: &mut [f64]) -> f64 {
    sorted_sum(values) / values.len() as f64
}

/// Sample standard deviation (n − 1) around `mean`.
fn sample_sd(values: &[f64], mean: f64) -> f64 {
    let mut sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    (sorted_sum(&mut sq) / (values.len() - 1) as f64).sqrt()
}

/// Pointwise mean of a sample's trials, in dB.
pub fn average_trials(record: &SampleRecord) -> Result<MagnitudeTrace, SignatureError> {
    let grid = record.grid();
    if let Some(i) = record.trials.iter().position(|t| t.grid() != grid) {
        return Err(SignatureError::GridMismatch(format!(
            "trial {i} of {:?}",
            record.sample_id
        )));
    }
    let mut column = vec![0.0; record.trials.len()];
    let values = (0..grid.len())
        .map(|k| {
            for (slot, t) in column.iter_mut().zip(&record.trials) {
                *slot = t.values_db()[k];
            }
            mean_of(&mut column)
        })
        .collect();
    Ok(MagnitudeTrace::new(grid.clone(), values)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenSignature {
    grid: FrequencyGrid,
    mean_db: Vec<f64>,
    sigma_db: Vec<f64>,
    pub n_samples: usize,
    pub n_trials: usize,
    pub metadata: BTreeMap<String, String>,
}

impl GoldenSignature {
    pub fn new(
        grid: FrequencyGrid,
        mean_db: Vec<f64>,
        sigma_db: Vec<f64>,
        n_samples: usize,
        n_trials: usize,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self, SignatureError> {
        if mean_db.len() != grid.len() || sigma_db.len() != grid.len() {
            return Err(RfError::LengthMismatch {
                points: grid.len(),
                values: mean_db.len().min(sigma_db.len()),
            }
            .into());
        }
        if let Some(i) = sigma_db.iter().position(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(SignatureError::CorruptFile(format!(
                "sigma at point {i} is negative or not finite"
            )));
        }
        if let Some(i) = mean_db.iter().position(|m| !m.is_finite()) {
            return Err(SignatureError::CorruptFile(format!("mean at point {i} is not finite")));
        }
        if n_samples < 2 {
            return Err(SignatureError::TooFewSamples(n_samples));
        }
        if n_trials < 1 {
            return Err(SignatureError::CorruptFile("n_trials must be at least 1".into()));
        }
        Ok(Self {
            grid,
            mean_db,
            sigma_db,
            n_samples,
            n_trials,
            metadata,
        })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn mean_db(&self) -> &[f64] {
        &self.mean_db
    }

    pub fn sigma_db(&self) -> &[f64] {
        &self.sigma_db
    }
}

/// Builds the golden signature from at least two genuine samples.
///
/// `n_trials` records the smallest per-sample trial count.
pub fn build_golden(
    records: &[SampleRecord],
    metadata: BTreeMap<String, String>,
) -> Result<GoldenSignature, SignatureError> {
    if records.len() < 2 {
        return Err(SignatureError::TooFewSamples(records.len()));
    }
    let grid = records[0].grid().clone();
    if let Some(r) = records.iter().find(|r| r.grid() != &grid) {
        return Err(SignatureError::GridMismatch(format!(
            "sample {:?} is on a different grid than sample {:?}",
            r.sample_id, records[0].sample_id
        )));
    }
    let averaged = records.iter().map(average_trials).collect::<Result<Vec<_>, _>>()?;

    let mut column = vec![0.0; averaged.len()];
    let mut mean_db = Vec::with_capacity(grid.len());
    let mut sigma_db = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        for (slot, a) in column.iter_mut().zip(&averaged) {
            *slot = a.values_db()[k];
        }
        let mean = mean_of(&mut column);
        sigma_db.push(sample_sd(&column, mean));
        mean_db.push(mean);
    }
    let n_trials = records.iter().map(|r| r.trials.len()).min().unwrap_or(1);
    GoldenSignature::new(grid, mean_db, sigma_db, records.len(), n_trials, metadata)
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\n', "\\n").replace('\r', "\\r")
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some('r') => out.push('\r'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Serializes a signature to the versioned, checksummed text format
/// described in `docs/golden-format.md`.
pub fn save_golden(sig: &GoldenSignature) -> Vec<u8> {
    let mut body = String::new();
    body.push_str(MAGIC);
    body.push('\n');
    body.push_str(&format!("format_version = {GOLDEN_FORMAT_VERSION}\n"));
    body.push_str(&format!("n_samples = {}\n", sig.n_samples));
    body.push_str(&format!("n_trials = {}\n", sig.n_trials));
    body.push_str(&format!("points = {}\n", sig.grid.len()));
    for (k, v) in &sig.metadata {
        body.push_str(&format!(
            "meta.{} = {}\n",
            escape(k).replace([' ', '='], "_"),
            escape(v)
        ));
    }
    body.push_str("data f_hz mean_db sigma_db\n");
    for ((f, m), s) in sig.grid.points().iter().zip(&sig.mean_db).zip(&sig.sigma_db) {
        body.push_str(&format!("{} {} {}\n", decimal(*f, 0), decimal(*m, 0), decimal(*s, 0)));
    }
    body.push_str("end\n");
    let digest = hex::encode(Sha256::digest(body.as_bytes()));
    body.push_str(&format!("sha256 = {digest}\n"));
    body.into_bytes()
}

fn corrupt(msg: impl Into<String>) -> SignatureError {
    SignatureError::CorruptFile(msg.into())
}

pub fn load_golden(bytes: &[u8]) -> Result<GoldenSignature, SignatureError> {
    let text = std::str::from_utf8(bytes).map_err(|_| corrupt("not valid UTF-8"))?;
    let mut lines = text.split_inclusive('\n');
    if lines.next().map(str::trim_end) != Some(MAGIC) {
        return Err(corrupt("missing header line"));
    }
    let version_line = lines.next().ok_or_else(|| corrupt("missing format_version"))?;
    let version = version_line
        .trim_end()
        .strip_prefix("format_version = ")
        .ok_or_else(|| corrupt("missing format_version"))?;
    if version != GOLDEN_FORMAT_VERSION.to_string() {
        return Err(SignatureError::FormatVersionUnknown(version.to_string()));
    }

    // The checksum covers every byte before the final line.
    let body_end = text
        .trim_end_matches('\n')
        .rfind('\n')
        .map(|i| i + 1)
        .ok_or_else(|| corrupt("truncated"))?;
    let (body, tail) = text.split_at(body_end);
    let expected = tail
        .trim_end()
        .strip_prefix("sha256 = ")
        .ok_or_else(|| corrupt("missing checksum line (truncated file?)"))?;
    if !tail.ends_with('\n') {
        return Err(corrupt("truncated checksum line"));
    }
    let actual = hex::encode(Sha256::digest(body.as_bytes()));
    if actual != expected {
        return Err(corrupt("checksum mismatch"));
    }

    let mut n_samples = None;
    let mut n_trials = None;
    let mut points = None;
    let mut metadata = BTreeMap::new();
    let mut rows = body.lines().skip(2);
    for line in rows.by_ref() {
        if line.starts_with("data ") {
            break;
        }
        let (key, value) = line
            .split_once(" = ")
            .ok_or_else(|| corrupt(format!("bad header line {line:?}")))?;
        let parse_count = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| corrupt(format!("bad {key} value {v:?}")))
        };
        match key {
            "n_samples" => n_samples = Some(parse_count(value)?),
            "n_trials" => n_trials = Some(parse_count(value)?),
            "points" => points = Some(parse_count(value)?),
            k => match k.strip_prefix("meta.") {
                Some(name) => {
                    metadata.insert(unescape(name), unescape(value));
                }
                None => return Err(corrupt(format!("unknown header key {k:?}"))),
            },
        }
    }
    let points = points.ok_or_else(|| corrupt("missing points"))?;
    let mut freqs = Vec::with_capacity(points);
    let mut mean = Vec::with_capacity(points);
    let mut sigma = Vec::with_capacity(points);
    let mut ended = false;
    for line in rows {
        if line == "end" {
            ended = true;
            break;
        }
        let fields: Vec<f64> = line
            .split(' ')
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| corrupt(format!("bad data row {line:?}")))?;
        if fields.len() != 3 {
            return Err(corrupt(format!("data row {line:?} needs 3 fields")));
        }
        freqs.push(fields[0]);
        mean.push(fields[1]);
        sigma.push(fields[2]);
    }
    if !ended {
        return Err(corrupt("missing end marker"));
    }
    if freqs.len() != points {
        return Err(corrupt(format!("expected {points} rows, found {}", freqs.len())));
    }
    let grid = FrequencyGrid::new(freqs).map_err(|e| corrupt(e.to_string()))?;
    GoldenSignature::new(
        grid,
        mean,
        sigma,
        n_samples.ok_or_else(|| corrupt("missing n_samples"))?,
        n_trials.ok_or_else(|| corrupt("missing n_trials"))?,
        metadata,
    )
}
