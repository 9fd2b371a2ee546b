//! S11 and impedance conversions, plus the dB magnitude view.
//!
//!     cargo run --example rf_conversions

use num_complex::Complex64;
use pdnprint::rf::{
    convert_trace, impedance_from_s11, magnitude_db, s11_from_impedance, ComplexTrace, Conversion, Direction,
    FrequencyGrid, ReferenceImpedance,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let z0 = ReferenceImpedance::default();

    for s in [
        Complex64::new(0.0, 0.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.2, 0.0),
    ] {
        println!("s11 {s:>8} -> Z {}", impedance_from_s11(s, z0)?);
    }
    println!("Z 100 -> s11 {}", s11_from_impedance(Complex64::new(100.0, 0.0), z0)?);

    // The open circuit is a pole.
    match impedance_from_s11(Complex64::new(1.0, 0.0), z0) {
        Ok(z) => println!("unexpected {z}"),
        Err(e) => println!("s11 = 1: {e}"),
    }

    // A whole trace: a 10 mΩ + 1 nH load from 1 MHz to 1 GHz.
    let grid = FrequencyGrid::linear(1e6, 1e9, 4)?;
    let z: Vec<Complex64> = grid
        .points()
        .iter()
        .map(|f| Complex64::new(0.01, 2.0 * std::f64::consts::PI * f * 1e-9))
        .collect();
    let z = ComplexTrace::new(grid, z)?;
    let s11 = convert_trace(&z, Direction::ZToS11, Conversion::new(z0))?;
    let db = magnitude_db(&s11)?;
    for (f, v) in db.grid().points().iter().zip(db.values_db()) {
        println!("{:>7.1} MHz  |S11| {v:>9.5} dB", f / 1e6);
    }
    Ok(())
}
