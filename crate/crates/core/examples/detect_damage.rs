//! Damage versus aging: damage spreads into the board band and moves the
//! die anti-resonance, aging stays in the die band.
//!
//!     cargo run --example detect_damage

use std::collections::BTreeMap;

use pdnprint::pdn::{
    apply_aging, apply_damage, pdn_input_impedance, sample_genuine, simulate_magnitude_trials, AgingSpec, NoiseSpec,
    PdnModel, VariationSpec,
};
use pdnprint::rf::FrequencyGrid;
use pdnprint::{average_trials, build_golden, verify, DetectorConfig, SampleRecord};

type Result<T> = std::result::Result<T, Box<dyn std::error::Error>>;

fn measure(model: &PdnModel, grid: &FrequencyGrid, seed: u64) -> Result<SampleRecord> {
    let trials = simulate_magnitude_trials(model, grid, NoiseSpec::new(0.05, seed)?, 10);
    Ok(SampleRecord::new(format!("part-{seed}"), trials)?)
}

fn peak_mhz(model: &PdnModel, grid: &FrequencyGrid) -> f64 {
    grid.points()
        .iter()
        .filter(|f| **f >= 20e6)
        .max_by(|a, b| {
            pdn_input_impedance(model, **a)
                .norm()
                .total_cmp(&pdn_input_impedance(model, **b).norm())
        })
        .map_or(f64::NAN, |f| f / 1e6)
}

fn main() -> Result<()> {
    let base = PdnModel::preset("cw308-like")?;
    let grid = FrequencyGrid::linear(1e6, 1e9, 5000)?;
    let mut records = Vec::new();
    for seed in 1..=12 {
        records.push(measure(
            &sample_genuine(&base, VariationSpec::new(0.02, seed)?)?,
            &grid,
            seed,
        )?);
    }
    let golden = build_golden(&records, BTreeMap::new())?;

    println!("nominal anti-resonance {:.2} MHz", peak_mhz(&base, &grid));
    for (name, part) in [
        ("aged 216 h", apply_aging(&base, AgingSpec::hours(216.0))?),
        ("damaged 0.25", apply_damage(&base, 0.25)?),
        ("damaged 0.5", apply_damage(&base, 0.5)?),
    ] {
        let v = verify(
            &golden,
            &average_trials(&measure(&part, &grid, 600)?)?,
            &DetectorConfig::default(),
        )?;
        let lowest = v.bands.first().map_or(f64::NAN, |b| b.f_start / 1e6);
        println!(
            "{name:<13} {:?}: lowest flag {lowest:.2} MHz, {:.1} MHz flagged, anti-resonance {:.2} MHz",
            v.decision,
            v.flagged_bandwidth() / 1e6,
            peak_mhz(&part, &grid)
        );
    }
    Ok(())
}
