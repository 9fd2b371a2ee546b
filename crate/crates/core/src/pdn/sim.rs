use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{PdnError, PdnModel};
use crate::rf::{magnitude_db, s11_from_impedance, ComplexTrace, FrequencyGrid, MagnitudeTrace};

/// Magnitude-only measurement noise, in dB, added to |S11|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma_db: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            sigma_db: 0.05,
            seed: 0,
        }
    }
}

impl NoiseSpec {
    pub fn new(sigma_db: f64, seed: u64) -> Result<Self, PdnError> {
        if !(sigma_db.is_finite() && sigma_db >= 0.0) {
            return Err(PdnError::InvalidParameter(format!(
                "noise sigma {sigma_db} dB must be >= 0"
            )));
        }
        Ok(Self { sigma_db, seed })
    }

    pub fn noiseless() -> Self {
        Self { sigma_db: 0.0, seed: 0 }
    }

    /// Independent noise stream for repeated trial `trial`.
    pub fn trial(&self, trial: u64) -> Self {
        Self {
            sigma_db: self.sigma_db,
            seed: mix_seed(self.seed, trial),
        }
    }

    /// Standard normal draw for grid point `index`. Each point has its own
    /// ChaCha stream, so the value does not depend on evaluation order.
    fn point_normal(&self, index: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng.sample(StandardNormal)
    }

    /// Scales each value's magnitude by this spec's dB noise, leaving the
    /// phase alone. A no-op when `sigma_db` is zero.
    pub fn perturb(&self, values: &mut [Complex64]) {
        if self.sigma_db == 0.0 {
            return;
        }
        for (i, v) in values.iter_mut().enumerate() {
            *v *= 10f64.powf(self.sigma_db * self.point_normal(i) / 20.0);
        }
    }
}

/// SplitMix64 finalizer over `(seed, salt)`.
pub(crate) fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Impedance seen at the probe port, evaluated from the die outward.
///
/// At each stage the shunt branch is placed in parallel with everything
/// downstream and the series branch is then added. When the model is
/// powered, the die-on branch is a further parallel path at the die node.
pub fn pdn_input_impedance(model: &PdnModel, f: f64) -> Complex64 {
    debug_assert!(f > 0.0);
    let omega = 2.0 * PI * f;
    let mut downstream: Option<Complex64> = None;
    for (i, stage) in model.stages().iter().rev().enumerate() {
        let mut y = Complex64::new(0.0, 0.0);
        if let Some(sh) = &stage.shunt {
            y += sh.impedance(omega).inv();
        }
        if i == 0 && model.powered() {
            y += model.die_on_branch().impedance(omega).inv();
        }
        if let Some(z) = downstream {
            y += z.inv();
        }
        let mut z = y.inv();
        if let Some(se) = &stage.series {
            z += se.impedance(omega);
        }
        downstream = Some(z);
    }
    downstream.expect("model has at least one stage")
}

/// S11 sweep of `model` over `grid` with optional dB magnitude noise.
pub fn simulate_sweep(model: &PdnModel, grid: &FrequencyGrid, noise: NoiseSpec) -> ComplexTrace {
    let mut values: Vec<Complex64> = grid
        .points()
        .iter()
        .map(|&f| {
            let z = pdn_input_impedance(model, f);
            // Re(z) >= 0 for a passive ladder, so z + z0 never vanishes.
            s11_from_impedance(z, model.z0()).expect("passive impedance is off the pole")
        })
        .collect();
    noise.perturb(&mut values);
    ComplexTrace::new(grid.clone(), values).expect("one value per grid point")
}

/// `n_trials` repeated sweeps with independent noise streams.
pub fn simulate_trials(model: &PdnModel, grid: &FrequencyGrid, noise: NoiseSpec, n_trials: usize) -> Vec<ComplexTrace> {
    (0..n_trials)
        .map(|t| simulate_sweep(model, grid, noise.trial(t as u64)))
        .collect()
}

/// [`simulate_trials`] converted to |S11| in dB.
pub fn simulate_magnitude_trials(
    model: &PdnModel,
    grid: &FrequencyGrid,
    noise: NoiseSpec,
    n_trials: usize,
) -> Vec<MagnitudeTrace> {
    simulate_trials(model, grid, noise, n_trials)
        .iter()
        .map(|t| magnitude_db(t).expect("a passive ladder never reflects exactly zero"))
        .collect()
}
