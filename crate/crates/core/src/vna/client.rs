use std::io::{ErrorKind, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::time::{Duration, Instant};

use num_complex::Complex64;

use super::{parse_csv, CommandMap, InstrumentEndpoint, SweepConfig, VnaError};
use crate::rf::{magnitude_db, ComplexTrace, FrequencyGrid};
use crate::signature::SampleRecord;

/// One connection to an instrument. Operations run one at a time; each is
/// bounded by the endpoint timeout from the moment it starts.
#[derive(Debug)]
pub struct VnaClient {
    stream: TcpStream,
    pending: Vec<u8>,
    timeout: Duration,
    commands: CommandMap,
}

impl VnaClient {
    pub fn connect(endpoint: &InstrumentEndpoint) -> Result<Self, VnaError> {
        let deadline = Instant::now() + endpoint.timeout;
        let addr = endpoint.address();
        let fail = |detail: String| VnaError::ConnectTimeout {
            addr: addr.clone(),
            detail,
        };
        let candidates = (endpoint.host.as_str(), endpoint.port)
            .to_socket_addrs()
            .map_err(|e| fail(e.to_string()))?;
        let mut last = "no address resolved".to_string();
        for sa in candidates {
            let remaining = deadline.saturating_duration_since(Instant::now());
            if remaining.is_zero() {
                last = "timed out".into();
                break;
            }
            match TcpStream::connect_timeout(&sa, remaining) {
                Ok(stream) => {
                    stream.set_nodelay(true)?;
                    stream.set_write_timeout(Some(endpoint.timeout))?;
                    return Ok(Self {
                        stream,
                        pending: Vec::new(),
                        timeout: endpoint.timeout,
                        commands: CommandMap::default(),
                    });
                }
                Err(e) => last = e.to_string(),
            }
        }
        Err(fail(last))
    }

    pub fn with_commands(mut self, commands: CommandMap) -> Self {
        self.commands = commands;
        self
    }

    fn send(&mut self, line: &str) -> Result<(), VnaError> {
        let mut bytes = Vec::with_capacity(line.len() + 1);
        bytes.extend_from_slice(line.as_bytes());
        bytes.push(b'\n');
        self.stream.write_all(&bytes)?;
        Ok(())
    }

    /// Next response line, or `None` if the deadline passes first.
    fn read_line(&mut self, deadline: Instant) -> Result<Option<String>, VnaError> {
        let mut chunk = [0u8; 64 * 1024];
        loop {
            if let Some(pos) = self.pending.iter().position(|&b| b == b'\n') {
                let mut line: Vec<u8> = self.pending.drain(..=pos).collect();
                line.pop();
                if line.last() == Some(&b'\r') {
                    line.pop();
                }
                return String::from_utf8(line)
                    .map(Some)
                    .map_err(|_| VnaError::ProtocolError("response is not UTF-8".into()));
            }
            let remaining = deadline.saturating_duration_since(Instant::now());
            if remaining.is_zero() {
                return Ok(None);
            }
            self.stream.set_read_timeout(Some(remaining))?;
            match self.stream.read(&mut chunk) {
                Ok(0) => return Err(VnaError::ProtocolError("instrument closed the connection".into())),
                Ok(n) => self.pending.extend_from_slice(&chunk[..n]),
                Err(e)
                    if matches!(
                        e.kind(),
                        ErrorKind::WouldBlock | ErrorKind::TimedOut | ErrorKind::Interrupted
                    ) => {}
                Err(e) => return Err(e.into()),
            }
        }
    }

    fn query(&mut self, command: &str, deadline: Instant) -> Result<String, VnaError> {
        self.send(command)?;
        self.read_line(deadline)?
            .ok_or_else(|| VnaError::ProtocolError(format!("no response to {command:?} before timeout")))
    }

    /// `*IDN?` response. An empty line is a protocol error.
    pub fn identify(&mut self) -> Result<String, VnaError> {
        let deadline = Instant::now() + self.timeout;
        let cmd = self.commands.identify.clone();
        let id = self.query(&cmd, deadline)?;
        if id.trim().is_empty() {
            return Err(VnaError::ProtocolError("empty identification string".into()));
        }
        Ok(id)
    }

    /// The instrument's calibration state string, recorded verbatim.
    pub fn calibration_state(&mut self) -> Result<String, VnaError> {
        let deadline = Instant::now() + self.timeout;
        let cmd = self.commands.calibration_state.clone();
        self.query(&cmd, deadline)
    }

    /// Configures, triggers and reads back one sweep. A failed data fetch is
    /// retried once within the same deadline.
    pub fn acquire(&mut self, cfg: &SweepConfig) -> Result<ComplexTrace, VnaError> {
        cfg.validate()?;
        let deadline = Instant::now() + self.timeout;
        for cmd in self.commands.setup_commands(cfg) {
            self.send(&cmd)?;
        }
        let trigger = self.commands.trigger.clone();
        self.send(&trigger)?;
        let opc = self.commands.operation_complete.clone();
        self.send(&opc)?;
        match self.read_line(deadline)? {
            None => return Err(VnaError::SweepTimeout(self.timeout)),
            Some(r) if matches!(r.trim(), "1" | "+1") => {}
            Some(r) => return Err(VnaError::ProtocolError(format!("unexpected {opc:?} response {r:?}"))),
        }

        let freq_cmd = self.commands.freq_data.clone();
        let freqs = parse_csv(&self.query(&freq_cmd, deadline)?)?;
        if freqs.len() != cfg.points {
            return Err(VnaError::DataLengthMismatch {
                expected: cfg.points,
                received: freqs.len(),
            });
        }
        check_linear(&freqs, cfg)?;

        let values = match self.fetch_data(cfg.points, deadline) {
            Ok(v) => v,
            Err(_) => self.fetch_data(cfg.points, deadline)?,
        };
        let grid = FrequencyGrid::new(freqs).map_err(|e| VnaError::ProtocolError(e.to_string()))?;
        ComplexTrace::new(grid, values).map_err(|e| VnaError::ProtocolError(e.to_string()))
    }

    fn fetch_data(&mut self, points: usize, deadline: Instant) -> Result<Vec<Complex64>, VnaError> {
        let cmd = self.commands.sweep_data.clone();
        let raw = parse_csv(&self.query(&cmd, deadline)?)?;
        if raw.len() % 2 != 0 {
            return Err(VnaError::ProtocolError(format!(
                "data block has an odd number of values ({})",
                raw.len()
            )));
        }
        if raw.len() / 2 != points {
            return Err(VnaError::DataLengthMismatch {
                expected: points,
                received: raw.len() / 2,
            });
        }
        Ok(raw.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect())
    }
}

/// The reported frequencies must be the requested linear sweep, to within a
/// millionth of a step.
fn check_linear(freqs: &[f64], cfg: &SweepConfig) -> Result<(), VnaError> {
    let step = (cfg.f_stop - cfg.f_start) / (cfg.points - 1) as f64;
    for (i, f) in freqs.iter().enumerate() {
        let want = cfg.f_start + step * i as f64;
        if (f - want).abs() > 1e-6 * step {
            return Err(VnaError::ProtocolError(format!(
                "frequency point {i} is {f} Hz, the requested sweep has {want} Hz"
            )));
        }
    }
    Ok(())
}

pub fn identify(endpoint: &InstrumentEndpoint) -> Result<String, VnaError> {
    VnaClient::connect(endpoint)?.identify()
}

pub fn acquire_sweep(endpoint: &InstrumentEndpoint, cfg: &SweepConfig) -> Result<ComplexTrace, VnaError> {
    VnaClient::connect(endpoint)?.acquire(cfg)
}

/// `n_trials` sequential sweeps on one connection. Errors name the 1-based
/// trial that failed.
pub fn repeat_acquire(
    endpoint: &InstrumentEndpoint,
    cfg: &SweepConfig,
    n_trials: usize,
) -> Result<SampleRecord, VnaError> {
    if n_trials < 1 {
        return Err(VnaError::InvalidConfig("n_trials must be >= 1".into()));
    }
    let mut client = VnaClient::connect(endpoint)?;
    let mut trials = Vec::with_capacity(n_trials);
    for t in 1..=n_trials {
        let wrap = |e: VnaError| VnaError::Trial {
            trial: t,
            source: Box::new(e),
        };
        let trace = client.acquire(cfg).map_err(wrap)?;
        let mag = magnitude_db(&trace).map_err(|e| wrap(VnaError::ProtocolError(e.to_string())))?;
        trials.push(mag);
    }
    SampleRecord::new(endpoint.address(), trials).map_err(|e| VnaError::ProtocolError(e.to_string()))
}
