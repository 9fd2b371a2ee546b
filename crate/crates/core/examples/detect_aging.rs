//! Screen parts aged for 54, 108 and 216 hours against a golden, and write a
//! report for the worst one.
//!
//!     cargo run --example detect_aging [report_dir]

use std::collections::BTreeMap;

use pdnprint::pdn::{
    apply_aging, sample_genuine, simulate_magnitude_trials, AgingSpec, NoiseSpec, PdnModel, VariationSpec,
};
use pdnprint::report::write_report;
use pdnprint::rf::FrequencyGrid;
use pdnprint::{average_trials, build_golden, verify, DetectorConfig, GoldenSignature, MagnitudeTrace, SampleRecord};

type Result<T> = std::result::Result<T, Box<dyn std::error::Error>>;

fn measure(model: &PdnModel, grid: &FrequencyGrid, seed: u64) -> Result<SampleRecord> {
    let trials = simulate_magnitude_trials(model, grid, NoiseSpec::new(0.05, seed)?, 10);
    Ok(SampleRecord::new(format!("part-{seed}"), trials)?)
}

fn golden(base: &PdnModel, grid: &FrequencyGrid) -> Result<GoldenSignature> {
    let mut records = Vec::new();
    for seed in 1..=12 {
        records.push(measure(
            &sample_genuine(base, VariationSpec::new(0.02, seed)?)?,
            grid,
            seed,
        )?);
    }
    Ok(build_golden(&records, BTreeMap::new())?)
}

fn main() -> Result<()> {
    let base = PdnModel::preset("cw308-like")?;
    let grid = FrequencyGrid::linear(1e6, 1e9, 5000)?;
    let golden = golden(&base, &grid)?;
    let cfg = DetectorConfig::default();

    let mut last: Option<(pdnprint::Verdict, MagnitudeTrace)> = None;
    for hours in [0.0, 54.0, 108.0, 216.0] {
        let part = apply_aging(&base, AgingSpec::hours(hours))?;
        let dut = average_trials(&measure(&part, &grid, 500)?)?;
        let v = verify(&golden, &dut, &cfg)?;
        println!(
            "{hours:>5} h: {:?}, {} bands, {:.1} MHz flagged, peak {:.2} sigma",
            v.decision,
            v.bands.len(),
            v.flagged_bandwidth() / 1e6,
            v.max_deviation()
        );
        last = Some((v, dut));
    }

    let (verdict, dut) = last.expect("loop ran");
    if let Some(b) = verdict.worst_band() {
        println!("worst band {:.3}..{:.3} MHz", b.f_start / 1e6, b.f_stop / 1e6);
    }
    if let Some(dir) = std::env::args().nth(1) {
        let (json, svg) = write_report(dir.as_ref(), &verdict, &golden, &dut)?;
        println!("wrote {} and {}", json.display(), svg.display());
    }
    Ok(())
}
