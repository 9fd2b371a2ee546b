//! Acquire ten sweeps from an in-process mock instrument, then show how
//! injected faults surface as errors.
//!
//!     cargo run --example acquire_loopback

use std::time::Duration;

use pdnprint::average_trials;
use pdnprint::pdn::{simulate_sweep, NoiseSpec, PdnModel};
use pdnprint::rf::FrequencyGrid;
use pdnprint::vna::{repeat_acquire, InstrumentEndpoint, MockConfig, MockServer, SweepConfig, VnaClient};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = PdnModel::preset("cw308-like")?;
    let grid = FrequencyGrid::linear(1e6, 1e9, 5000)?;
    let mut base = MockConfig::new(simulate_sweep(&model, &grid, NoiseSpec::noiseless()));
    base.faults.noise_db = 0.05;

    let server = MockServer::start(base.clone())?;
    let ep = InstrumentEndpoint::new("127.0.0.1", server.port(), Duration::from_secs(10))?;
    let mut client = VnaClient::connect(&ep)?;
    println!("instrument: {}", client.identify()?);
    println!("calibration: {}", client.calibration_state()?);
    drop(client);

    let sweep = SweepConfig::default();
    let record = repeat_acquire(&ep, &sweep, 10)?;
    let avg = average_trials(&record)?;
    println!(
        "{} trials of {} points, averaged |S11| at 1 MHz = {:.4} dB",
        record.trials().len(),
        avg.grid().len(),
        avg.values_db()[0]
    );
    println!("wire commands for one sweep:");
    for line in server.transcript().iter().skip(2).take(12) {
        println!("  {line}");
    }

    type Inject = fn(&mut MockConfig);
    let faults: [(&str, Inject); 3] = [
        ("truncated", |c| c.faults.truncate_points = Some(4000)),
        ("slow sweep", |c| c.faults.sweep_delay_ms = 1500),
        ("link drop", |c| c.faults.fail_on_trial = Some(3)),
    ];
    for (name, inject) in faults {
        let mut cfg = base.clone();
        inject(&mut cfg);
        let server = MockServer::start(cfg)?;
        let ep = InstrumentEndpoint::new("127.0.0.1", server.port(), Duration::from_millis(500))?;
        match repeat_acquire(&ep, &sweep, 10) {
            Ok(_) => println!("{name}: unexpectedly succeeded"),
            Err(e) => println!("{name}: {e}"),
        }
    }
    Ok(())
}
