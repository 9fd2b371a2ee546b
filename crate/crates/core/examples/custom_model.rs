//! Load a PDN model from TOML and sweep it.
//!
//!     cargo run --example custom_model [model.toml]
//!
//! Without an argument, a small three-stage board is used. `pdnprint simulate
//! --model` accepts the same file.

use pdnprint::pdn::{pdn_input_impedance, PdnModel};

const BOARD: &str = r#"
name = "three-stage board"
z0 = 50.0
powered = true

[die_on_branch]
r = 0.8
l = 5e-11

[[stages]]
name = "vrm"
shunt = { r = 0.01, l = 1e-9, c = 1e-4 }

[[stages]]
name = "board"
series = { r = 0.001, l = 1e-9 }
shunt = { r = 0.02, l = 5e-10, c = 1e-6 }

[[stages]]
name = "die"
series = { r = 0.05, l = 3e-10 }
shunt = { r = 0.1, c = 2e-9 }
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = match std::env::args().nth(1) {
        Some(path) => PdnModel::load(path.as_ref())?,
        None => PdnModel::from_toml_str(BOARD)?,
    };
    println!(
        "{} ({} stages)",
        model.name().unwrap_or("unnamed"),
        model.stages().len()
    );
    for k in 0..=12 {
        let f = 1e6 * 10f64.powf(k as f64 / 4.0);
        let z = pdn_input_impedance(&model, f);
        println!(
            "{:>10.3} MHz  |Z| {:>10.5} ohm  {:>7.2} deg",
            f / 1e6,
            z.norm(),
            z.arg().to_degrees()
        );
    }

    let bad = "z0 = 50.0\nstages = []\n[die_on_branch]\nr = 1.0\n";
    if let Err(e) = PdnModel::from_toml_str(bad) {
        println!("rejected: {e}");
    }
    Ok(())
}
