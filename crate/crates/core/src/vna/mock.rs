//! A mock SCPI instrument serving a stored sweep, with fault injection and
//! a transcript of every line it receives.
//!
//! Configuration file (TOML):
//!
//! ```toml
//! id = "pdnprint,mock-vna,0,1"
//! calibration = "OSL 1-port"
//! touchstone = "sweep.s1p"       # relative to the config file
//!
//! [faults]
//! empty_identify = false         # answer *IDN? with an empty line
//! drop_data_responses = 0        # answer this many data fetches with an empty line
//! truncate_points = 4999         # serve only the first N points
//! sweep_delay_ms = 0             # hold the *OPC? reply this long
//! fail_on_trial = 7              # close the connection on the Nth trigger (1-based)
//! noise_db = 0.05                # per-trial |S11| noise
//! noise_seed = 1
//!
//! [commands]                     # optional dialect override, see CommandMap
//! ```

use std::io::{BufRead, BufReader, ErrorKind, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use serde::Deserialize;

use super::{match_template, CommandMap, VnaError};
use crate::numfmt::decimal;
use crate::pdn::NoiseSpec;
use crate::rf::ComplexTrace;
use crate::touchstone::{extract_s11, read_touchstone};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MockFaults {
    pub empty_identify: bool,
    pub drop_data_responses: usize,
    pub truncate_points: Option<usize>,
    pub sweep_delay_ms: u64,
    pub fail_on_trial: Option<usize>,
    pub noise_db: f64,
    pub noise_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MockConfig {
    pub id: String,
    pub calibration: String,
    pub trace: ComplexTrace,
    pub faults: MockFaults,
    pub commands: CommandMap,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MockFile {
    #[serde(default = "default_id")]
    id: String,
    #[serde(default = "default_calibration")]
    calibration: String,
    touchstone: String,
    #[serde(default)]
    faults: MockFaults,
    #[serde(default)]
    commands: CommandMap,
}

fn default_id() -> String {
    "pdnprint,mock-vna,0,1".into()
}

fn default_calibration() -> String {
    "OSL 1-port".into()
}

impl MockConfig {
    pub fn new(trace: ComplexTrace) -> Self {
        Self {
            id: default_id(),
            calibration: default_calibration(),
            trace,
            faults: MockFaults::default(),
            commands: CommandMap::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, VnaError> {
        let text = std::fs::read_to_string(path)?;
        let file: MockFile = toml::from_str(&text).map_err(|e| VnaError::InvalidConfig(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let net = read_touchstone(&base.join(&file.touchstone))
            .map_err(|e| VnaError::InvalidConfig(format!("{}: {e}", file.touchstone)))?;
        let trace = extract_s11(&net).map_err(|e| VnaError::InvalidConfig(e.to_string()))?;
        Ok(Self {
            id: file.id,
            calibration: file.calibration,
            trace,
            faults: file.faults,
            commands: file.commands,
        })
    }
}

struct Shared {
    config: MockConfig,
    transcript: Mutex<Vec<String>>,
    sweeps: AtomicUsize,
    drops_left: AtomicUsize,
    stop: AtomicBool,
}

/// Runs until dropped (or [`MockServer::shutdown`]).
pub struct MockServer {
    addr: SocketAddr,
    shared: Arc<Shared>,
    accept: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Listens on `127.0.0.1` with an OS-assigned port.
    pub fn start(config: MockConfig) -> std::io::Result<Self> {
        Self::bind("127.0.0.1:0", config)
    }

    pub fn bind(addr: &str, config: MockConfig) -> std::io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        let addr = listener.local_addr()?;
        let shared = Arc::new(Shared {
            drops_left: AtomicUsize::new(config.faults.drop_data_responses),
            config,
            transcript: Mutex::new(Vec::new()),
            sweeps: AtomicUsize::new(0),
            stop: AtomicBool::new(false),
        });
        let worker = Arc::clone(&shared);
        let accept = std::thread::spawn(move || {
            for conn in listener.incoming() {
                if worker.stop.load(Ordering::SeqCst) {
                    break;
                }
                if let Ok(stream) = conn {
                    let w = Arc::clone(&worker);
                    std::thread::spawn(move || {
                        let _ = serve(stream, &w);
                    });
                }
            }
        });
        Ok(Self {
            addr,
            shared,
            accept: Some(accept),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn port(&self) -> u16 {
        self.addr.port()
    }

    /// Every line received so far, across connections, in arrival order.
    pub fn transcript(&self) -> Vec<String> {
        self.shared.transcript.lock().expect("transcript lock").clone()
    }

    /// The transcript as newline-terminated text.
    pub fn transcript_text(&self) -> String {
        self.transcript().iter().map(|l| format!("{l}\n")).collect()
    }

    /// Number of sweeps triggered so far.
    pub fn sweep_count(&self) -> usize {
        self.shared.sweeps.load(Ordering::SeqCst)
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        // Wake the accept loop.
        let _ = TcpStream::connect_timeout(&self.addr, Duration::from_secs(1));
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop();
    }
}

fn csv(values: impl Iterator<Item = f64>) -> String {
    values.map(|v| decimal(v, 0)).collect::<Vec<_>>().join(",")
}

fn serve(stream: TcpStream, shared: &Shared) -> std::io::Result<()> {
    stream.set_read_timeout(Some(Duration::from_millis(200)))?;
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    let cfg = &shared.config;
    let cmds = &cfg.commands;
    let faults = &cfg.faults;
    let served = faults.truncate_points.unwrap_or(usize::MAX).min(cfg.trace.grid().len());
    let mut current_sweep = 0usize;
    let mut line = String::new();
    loop {
        if shared.stop.load(Ordering::SeqCst) {
            return Ok(());
        }
        match reader.read_line(&mut line) {
            Ok(0) => return Ok(()),
            Ok(_) if !line.ends_with('\n') => continue,
            Ok(_) => {}
            Err(e)
                if matches!(
                    e.kind(),
                    ErrorKind::WouldBlock | ErrorKind::TimedOut | ErrorKind::Interrupted
                ) =>
            {
                continue
            }
            Err(e) => return Err(e),
        }
        let cmd = line.trim_end_matches(['\n', '\r']).to_string();
        line.clear();
        shared.transcript.lock().expect("transcript lock").push(cmd.clone());

        let reply = if match_template(&cmds.identify, &cmd).is_some() {
            Some(if faults.empty_identify {
                String::new()
            } else {
                cfg.id.clone()
            })
        } else if match_template(&cmds.calibration_state, &cmd).is_some() {
            Some(cfg.calibration.clone())
        } else if match_template(&cmds.trigger, &cmd).is_some() {
            current_sweep = shared.sweeps.fetch_add(1, Ordering::SeqCst) + 1;
            if faults.fail_on_trial == Some(current_sweep) {
                return Ok(());
            }
            None
        } else if match_template(&cmds.operation_complete, &cmd).is_some() {
            if faults.sweep_delay_ms > 0 {
                std::thread::sleep(Duration::from_millis(faults.sweep_delay_ms));
            }
            Some("1".to_string())
        } else if match_template(&cmds.freq_data, &cmd).is_some() {
            Some(csv(cfg.trace.grid().points()[..served].iter().copied()))
        } else if match_template(&cmds.sweep_data, &cmd).is_some() {
            let dropped = shared
                .drops_left
                .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
                .is_ok();
            if dropped {
                Some(String::new())
            } else {
                let mut values = cfg.trace.values()[..served].to_vec();
                let noise = NoiseSpec {
                    sigma_db: faults.noise_db,
                    seed: faults.noise_seed,
                };
                noise.trial(current_sweep.saturating_sub(1) as u64).perturb(&mut values);
                Some(csv(values.iter().flat_map(|c| [c.re, c.im])))
            }
        } else {
            // Setting commands and anything unknown get no reply.
            None
        };
        if let Some(r) = reply {
            writer.write_all(format!("{r}\n").as_bytes())?;
        }
    }
}
