//! Model transforms: manufacturing spread, wear-out drift and electrical
//! overstress damage. All return a new model and leave the input untouched.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{PdnError, PdnModel, RlcBranch};

/// Lognormal per-element spread: each element is multiplied by
/// `exp(N(0, sigma_fraction))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationSpec {
    pub sigma_fraction: f64,
    pub seed: u64,
}

impl VariationSpec {
    pub fn new(sigma_fraction: f64, seed: u64) -> Result<Self, PdnError> {
        if !(sigma_fraction.is_finite() && (0.0..0.5).contains(&sigma_fraction)) {
            return Err(PdnError::InvalidParameter(format!(
                "sigma_fraction {sigma_fraction} must lie in [0, 0.5)"
            )));
        }
        Ok(Self { sigma_fraction, seed })
    }
}

impl Default for VariationSpec {
    fn default() -> Self {
        Self {
            sigma_fraction: 0.02,
            seed: 0,
        }
    }
}

/// Power-law drift of the die elements with stress time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgingSpec {
    pub stress_hours: f64,
    pub esr_drift_coeff: f64,
    pub cap_drift_coeff: f64,
    pub ron_drift_coeff: f64,
    pub time_exponent: f64,
    pub reference_hours: f64,
}

impl Default for AgingSpec {
    fn default() -> Self {
        Self {
            stress_hours: 0.0,
            esr_drift_coeff: 0.20,
            cap_drift_coeff: 0.10,
            ron_drift_coeff: 0.25,
            time_exponent: 0.2,
            reference_hours: 216.0,
        }
    }
}

impl AgingSpec {
    /// Defaults with the given stress duration.
    pub fn hours(stress_hours: f64) -> Self {
        Self {
            stress_hours,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), PdnError> {
        let fields = [
            ("stress_hours", self.stress_hours),
            ("esr_drift_coeff", self.esr_drift_coeff),
            ("cap_drift_coeff", self.cap_drift_coeff),
            ("ron_drift_coeff", self.ron_drift_coeff),
            ("time_exponent", self.time_exponent),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(PdnError::InvalidParameter(format!("{name} = {v} must be >= 0")));
            }
        }
        if !(self.reference_hours.is_finite() && self.reference_hours > 0.0) {
            return Err(PdnError::InvalidParameter(format!(
                "reference_hours = {} must be > 0",
                self.reference_hours
            )));
        }
        Ok(())
    }

    /// Normalized stress `(stress_hours / reference_hours)^time_exponent`.
    pub fn stress(&self) -> f64 {
        if self.stress_hours == 0.0 {
            return 0.0;
        }
        (self.stress_hours / self.reference_hours).powf(self.time_exponent)
    }

    /// Multipliers `(die ESR, die C, on-branch R)` for this spec.
    pub fn factors(&self) -> (f64, f64, f64) {
        let s = self.stress();
        (
            1.0 + self.esr_drift_coeff * s,
            1.0 - self.cap_drift_coeff * s,
            1.0 + self.ron_drift_coeff * s,
        )
    }
}

fn scale_branch(b: &mut RlcBranch, r: f64, l: f64, c: f64) {
    b.r *= r;
    b.l *= l;
    if let Some(cap) = b.c.as_mut() {
        *cap *= c;
    }
}

/// Draws a process-varied copy of `model`. Elements are visited in a fixed
/// order (stages probe to die, series then shunt, R then L then C, then the
/// die-on branch), one normal draw per element, so a seed fully determines
/// the sample.
pub fn sample_genuine(model: &PdnModel, var: VariationSpec) -> Result<PdnModel, PdnError> {
    VariationSpec::new(var.sigma_fraction, var.seed)?;
    let mut out = model.clone();
    if var.sigma_fraction == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(var.seed);
    let mut factor = || -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        (var.sigma_fraction * z).exp()
    };
    let mut vary = |b: &mut RlcBranch| {
        b.r *= factor();
        b.l *= factor();
        if let Some(c) = b.c.as_mut() {
            *c *= factor();
        }
    };
    for stage in out.stages_mut() {
        if let Some(b) = stage.series.as_mut() {
            vary(b);
        }
        if let Some(b) = stage.shunt.as_mut() {
            vary(b);
        }
    }
    vary(out.die_on_branch_mut());
    Ok(out)
}

/// Ages the die: shunt ESR up, shunt capacitance down, on-branch resistance
/// up. Off-chip stages are left as they are.
pub fn apply_aging(model: &PdnModel, aging: AgingSpec) -> Result<PdnModel, PdnError> {
    aging.validate()?;
    let drift = aging.cap_drift_coeff * aging.stress();
    if drift >= 1.0 {
        return Err(PdnError::DriftOutOfRange { drift });
    }
    let (esr, cap, ron) = aging.factors();
    let mut out = model.clone();
    let die = out.stages_mut().last_mut().expect("validated non-empty");
    let shunt = die.shunt.as_mut().expect("die stage has a shunt branch");
    scale_branch(shunt, esr, 1.0, cap);
    out.die_on_branch_mut().r *= ron;
    Ok(out)
}

/// Broadband overstress damage over every stage and the die-on branch:
/// R ×(1 + severity), C ×(1 − severity/2), L ×(1 + severity/5).
pub fn apply_damage(model: &PdnModel, severity: f64) -> Result<PdnModel, PdnError> {
    if !(severity.is_finite() && (0.0..=1.0).contains(&severity)) {
        return Err(PdnError::InvalidParameter(format!(
            "damage severity {severity} must lie in [0, 1]"
        )));
    }
    let (r, c, l) = (1.0 + severity, 1.0 - 0.5 * severity, 1.0 + 0.2 * severity);
    let mut out = model.clone();
    for stage in out.stages_mut() {
        if let Some(b) = stage.series.as_mut() {
            scale_branch(b, r, l, c);
        }
        if let Some(b) = stage.shunt.as_mut() {
            scale_branch(b, r, l, c);
        }
    }
    scale_branch(out.die_on_branch_mut(), r, l, c);
    Ok(out)
}
