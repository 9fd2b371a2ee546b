//! Run the mock instrument on a TCP port so the CLI (or a real SCPI tool) can
//! talk to it.
//!
//!     cargo run --example mock_vna [mock.toml] [port]
//!     pdnprint acquire --host 127.0.0.1 --port 5025 --out captures/
//!
//! Without a config the server plays the reference model with 0.05 dB of
//! per-sweep noise. Stop it with Ctrl-C.

use pdnprint::pdn::{simulate_sweep, NoiseSpec, PdnModel};
use pdnprint::rf::FrequencyGrid;
use pdnprint::vna::{MockConfig, MockServer};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let config = match args.next() {
        Some(path) if path != "-" => MockConfig::load(path.as_ref())?,
        _ => {
            let model = PdnModel::preset("cw308-like")?;
            let grid = FrequencyGrid::linear(1e6, 1e9, 5000)?;
            let mut cfg = MockConfig::new(simulate_sweep(&model, &grid, NoiseSpec::noiseless()));
            cfg.faults.noise_db = 0.05;
            cfg
        }
    };
    let port: u16 = args.next().map(|p| p.parse()).transpose()?.unwrap_or(5025);
    let server = MockServer::bind(&format!("127.0.0.1:{port}"), config)?;
    println!("mock VNA listening on {}", server.addr());

    let mut seen = 0;
    loop {
        std::thread::sleep(std::time::Duration::from_millis(200));
        let transcript = server.transcript();
        for line in &transcript[seen..] {
            println!("<- {line}");
        }
        seen = transcript.len();
    }
}
