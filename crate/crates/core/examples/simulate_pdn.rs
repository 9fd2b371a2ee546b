//! Sweep the reference PDN model and find its die-band anti-resonance.
//!
//!     cargo run --example simulate_pdn [out.s1p]

use pdnprint::pdn::{pdn_input_impedance, simulate_sweep, NoiseSpec, PdnModel};
use pdnprint::rf::{magnitude_db, FrequencyGrid};
use pdnprint::touchstone::{write_touchstone, DataFormat, TouchstoneNetwork, TouchstoneOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = PdnModel::preset("cw308-like")?;
    let grid = FrequencyGrid::linear(1e6, 1e9, 5000)?;

    for stage in model.stages() {
        println!(
            "stage {:<10} series {:?}  shunt {:?}",
            stage.name, stage.series, stage.shunt
        );
    }

    let (peak_f, peak_z) = grid
        .points()
        .iter()
        .filter(|f| **f >= 20e6)
        .map(|f| (*f, pdn_input_impedance(&model, *f).norm()))
        .fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    println!("anti-resonance: {:.2} MHz, |Z| = {peak_z:.3} ohm", peak_f / 1e6);

    let sweep = simulate_sweep(&model, &grid, NoiseSpec::new(0.05, 1)?);
    let db = magnitude_db(&sweep)?;
    for i in (0..grid.len()).step_by(1000) {
        println!("{:>8.2} MHz  {:>8.4} dB", grid.points()[i] / 1e6, db.values_db()[i]);
    }

    if let Some(out) = std::env::args().nth(1) {
        let net = TouchstoneNetwork::one_port(&sweep, TouchstoneOptions::hz_s(DataFormat::Ri, 50.0), vec![]);
        std::fs::write(&out, write_touchstone(&net, DataFormat::Ri))?;
        println!("wrote {out}");
    }
    Ok(())
}
