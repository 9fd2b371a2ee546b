//! Frequency grids, complex and magnitude traces, and the reflection
//! coefficient / impedance conversions used throughout the pipeline.

use num_complex::Complex64;
use thiserror::Error;

/// Default guard distance from the conversion poles.
pub const DEFAULT_POLE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RfError {
    #[error("frequency grid is empty")]
    EmptyGrid,
    #[error("frequency grid point {index} ({value} Hz) is not positive and finite")]
    NonPositiveFrequency { index: usize, value: f64 },
    #[error("frequency grid is not strictly increasing at point {index}")]
    NonMonotonicGrid { index: usize },
    #[error("trace has {values} values but the grid has {points} points")]
    LengthMismatch { points: usize, values: usize },
    #[error("reference impedance must be positive and finite, got {0} ohm")]
    InvalidReference(f64),
    #[error("s11 is at the open-circuit pole (|1 - s11| < epsilon){}", at_index(*.index))]
    PoleAtOpen { index: Option<usize> },
    #[error("impedance is at the -z0 pole (|z + z0| < epsilon){}", at_index(*.index))]
    PoleAtNegativeZ0 { index: Option<usize> },
    #[error("zero magnitude has no decibel value{}", at_index(*.index))]
    ZeroMagnitude { index: Option<usize> },
    #[error("magnitude value at point {index} is not finite")]
    NonFiniteMagnitude { index: usize },
}

fn at_index(index: Option<usize>) -> String {
    match index {
        Some(i) => format!(" at frequency index {i}"),
        None => String::new(),
    }
}

impl RfError {
    fn with_index(self, i: usize) -> Self {
        match self {
            RfError::PoleAtOpen { .. } => RfError::PoleAtOpen { index: Some(i) },
            RfError::PoleAtNegativeZ0 { .. } => RfError::PoleAtNegativeZ0 { index: Some(i) },
            RfError::ZeroMagnitude { .. } => RfError::ZeroMagnitude { index: Some(i) },
            other => other,
        }
    }
}

/// Strictly increasing, positive frequency points in Hz.
///
/// Grid equality is exact pointwise equality.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    points: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(points: Vec<f64>) -> Result<Self, RfError> {
        if points.is_empty() {
            return Err(RfError::EmptyGrid);
        }
        for (i, &p) in points.iter().enumerate() {
            if !(p.is_finite() && p > 0.0) {
                return Err(RfError::NonPositiveFrequency { index: i, value: p });
            }
            if i > 0 && p <= points[i - 1] {
                return Err(RfError::NonMonotonicGrid { index: i });
            }
        }
        Ok(Self { points })
    }

    /// `points` equally spaced values from `start` to `stop` inclusive.
    ///
    /// Point `i` is computed as `start + i * (stop - start) / (points - 1)`
    /// and the last point is pinned to `stop`.
    pub fn linear(start: f64, stop: f64, points: usize) -> Result<Self, RfError> {
        if points == 0 {
            return Err(RfError::EmptyGrid);
        }
        if points == 1 {
            return Self::new(vec![start]);
        }
        let step = (stop - start) / (points - 1) as f64;
        let mut v: Vec<f64> = (0..points).map(|i| start + i as f64 * step).collect();
        v[points - 1] = stop;
        Self::new(v)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.points[0]
    }

    pub fn stop(&self) -> f64 {
        self.points[self.points.len() - 1]
    }
}

/// Positive reference (characteristic) impedance in ohms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceImpedance(f64);

impl ReferenceImpedance {
    pub fn new(z0: f64) -> Result<Self, RfError> {
        if z0.is_finite() && z0 > 0.0 {
            Ok(Self(z0))
        } else {
            Err(RfError::InvalidReference(z0))
        }
    }

    pub fn ohms(self) -> f64 {
        self.0
    }
}

impl Default for ReferenceImpedance {
    fn default() -> Self {
        Self(50.0)
    }
}

/// Complex values (S11, or impedance in ohms) sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTrace {
    grid: FrequencyGrid,
    values: Vec<Complex64>,
}

impl ComplexTrace {
    pub fn new(grid: FrequencyGrid, values: Vec<Complex64>) -> Result<Self, RfError> {
        if grid.len() != values.len() {
            return Err(RfError::LengthMismatch {
                points: grid.len(),
                values: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_parts(self) -> (FrequencyGrid, Vec<Complex64>) {
        (self.grid, self.values)
    }
}

/// Linear magnitudes expressed in dB (20·log10|x|) on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeTrace {
    grid: FrequencyGrid,
    values_db: Vec<f64>,
}

impl MagnitudeTrace {
    pub fn new(grid: FrequencyGrid, values_db: Vec<f64>) -> Result<Self, RfError> {
        if grid.len() != values_db.len() {
            return Err(RfError::LengthMismatch {
                points: grid.len(),
                values: values_db.len(),
            });
        }
        if let Some(index) = values_db.iter().position(|v| !v.is_finite()) {
            return Err(RfError::NonFiniteMagnitude { index });
        }
        Ok(Self { grid, values_db })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values_db(&self) -> &[f64] {
        &self.values_db
    }
}

/// Conversion settings shared by the scalar and trace-level operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conversion {
    pub z0: ReferenceImpedance,
    pub pole_epsilon: f64,
}

impl Conversion {
    pub fn new(z0: ReferenceImpedance) -> Self {
        Self {
            z0,
            pole_epsilon: DEFAULT_POLE_EPSILON,
        }
    }
}

impl Default for Conversion {
    fn default() -> Self {
        Self::new(ReferenceImpedance::default())
    }
}

/// `z0 · (1 + s11) / (1 − s11)`.
pub fn impedance_from_s11(s11: Complex64, z0: ReferenceImpedance) -> Result<Complex64, RfError> {
    impedance_from_s11_eps(s11, z0, DEFAULT_POLE_EPSILON)
}

pub fn impedance_from_s11_eps(s11: Complex64, z0: ReferenceImpedance, epsilon: f64) -> Result<Complex64, RfError> {
    let one = Complex64::new(1.0, 0.0);
    let den = one - s11;
    if den.norm() < epsilon {
        return Err(RfError::PoleAtOpen { index: None });
    }
    Ok((one + s11) / den * z0.ohms())
}

/// `(z − z0) / (z + z0)`.
pub fn s11_from_impedance(z: Complex64, z0: ReferenceImpedance) -> Result<Complex64, RfError> {
    s11_from_impedance_eps(z, z0, DEFAULT_POLE_EPSILON)
}

pub fn s11_from_impedance_eps(z: Complex64, z0: ReferenceImpedance, epsilon: f64) -> Result<Complex64, RfError> {
    let den = z + z0.ohms();
    if den.norm() < epsilon {
        return Err(RfError::PoleAtNegativeZ0 { index: None });
    }
    Ok((z - z0.ohms()) / den)
}

/// 20·log10 of a linear magnitude.
pub fn to_db(magnitude: f64) -> Result<f64, RfError> {
    if magnitude == 0.0 {
        return Err(RfError::ZeroMagnitude { index: None });
    }
    Ok(20.0 * magnitude.log10())
}

pub fn magnitude_db(trace: &ComplexTrace) -> Result<MagnitudeTrace, RfError> {
    let values_db = trace
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| to_db(v.norm()).map_err(|e| e.with_index(i)))
        .collect::<Result<Vec<_>, _>>()?;
    MagnitudeTrace::new(trace.grid.clone(), values_db)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    S11ToZ,
    ZToS11,
}

/// Applies the scalar conversion pointwise; errors carry the offending index.
pub fn convert_trace(trace: &ComplexTrace, direction: Direction, conv: Conversion) -> Result<ComplexTrace, RfError> {
    let values = trace
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            match direction {
                Direction::S11ToZ => impedance_from_s11_eps(v, conv.z0, conv.pole_epsilon),
                Direction::ZToS11 => s11_from_impedance_eps(v, conv.z0, conv.pole_epsilon),
            }
            .map_err(|e| e.with_index(i))
        })
        .collect::<Result<Vec<_>, _>>()?;
    ComplexTrace::new(trace.grid.clone(), values)
}
