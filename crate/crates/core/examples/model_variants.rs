//! Process variation, aging, damage and the powered-off state, side by side.
//!
//!     cargo run --example model_variants

use pdnprint::pdn::{
    apply_aging, apply_damage, sample_genuine, simulate_sweep, AgingSpec, NoiseSpec, PdnModel, VariationSpec,
};
use pdnprint::rf::{magnitude_db, FrequencyGrid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let nominal = PdnModel::preset("cw308-like")?;
    let grid = FrequencyGrid::linear(1e6, 1e9, 5000)?;

    let aging = AgingSpec::hours(216.0);
    let (esr, cap, on_r) = aging.factors();
    println!("216 h: ESR x{esr:.4}, C x{cap:.4}, die ON-resistance x{on_r:.4}");

    let variants = [
        ("genuine #7", sample_genuine(&nominal, VariationSpec::new(0.02, 7)?)?),
        ("aged 216 h", apply_aging(&nominal, aging)?),
        ("damaged 0.5", apply_damage(&nominal, 0.5)?),
        ("powered off", nominal.clone().with_powered(false)),
    ];
    let reference = magnitude_db(&simulate_sweep(&nominal, &grid, NoiseSpec::noiseless()))?;

    println!("{:<12} {:>14} {:>14}", "", "max dB < 20M", "max dB >= 20M");
    for (name, model) in &variants {
        let db = magnitude_db(&simulate_sweep(model, &grid, NoiseSpec::noiseless()))?;
        let (mut low, mut high) = (0.0f64, 0.0f64);
        for ((f, a), b) in grid.points().iter().zip(db.values_db()).zip(reference.values_db()) {
            let d = (a - b).abs();
            if *f < 20e6 {
                low = low.max(d);
            } else {
                high = high.max(d);
            }
        }
        println!("{name:<12} {low:>14.4} {high:>14.4}");
    }
    Ok(())
}
