//! VNA acquisition over SCPI text on a raw TCP socket, plus a mock
//! instrument that speaks the same dialect for hardware-free testing.
//!
//! Sweep data travels as comma-separated ASCII: `re,im,re,im,...` for
//! `CALC:DATA? SDATA` and `f,f,...` for the frequency list. Calibration is
//! assumed to be done on the instrument; the client only reads back its
//! state string.

pub mod client;
pub mod mock;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numfmt::decimal;

pub use client::{acquire_sweep, identify, repeat_acquire, VnaClient};
pub use mock::{MockConfig, MockFaults, MockServer};

pub const DEFAULT_PORT: u16 = 5025;

#[derive(Debug, Error)]
pub enum VnaError {
    /// Covers refused connections as well as ones that never complete.
    #[error("could not connect to {addr}: {detail}")]
    ConnectTimeout { addr: String, detail: String },
    #[error("protocol error: {0}")]
    ProtocolError(String),
    #[error("sweep did not complete within {0:?}")]
    SweepTimeout(Duration),
    #[error("instrument returned {received} points, {expected} were requested")]
    DataLengthMismatch { expected: usize, received: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("trial {trial}: {source}")]
    Trial {
        /// 1-based trial number.
        trial: usize,
        #[source]
        source: Box<VnaError>,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl VnaError {
    /// The innermost error, looking through trial wrappers.
    pub fn root(&self) -> &VnaError {
        match self {
            VnaError::Trial { source, .. } => source.root(),
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstrumentEndpoint {
    pub host: String,
    pub port: u16,
    /// Upper bound for each client operation.
    pub timeout: Duration,
}

impl InstrumentEndpoint {
    pub fn new(host: impl Into<String>, port: u16, timeout: Duration) -> Result<Self, VnaError> {
        if timeout.is_zero() {
            return Err(VnaError::InvalidConfig("timeout must be > 0".into()));
        }
        Ok(Self {
            host: host.into(),
            port,
            timeout,
        })
    }

    /// Default port and a 30 s timeout.
    pub fn host(host: impl Into<String>) -> Self {
        Self {
            host: host.into(),
            port: DEFAULT_PORT,
            timeout: Duration::from_secs(30),
        }
    }

    pub fn address(&self) -> String {
        format!("{}:{}", self.host, self.port)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub f_start: f64,
    pub f_stop: f64,
    pub points: usize,
    pub if_bandwidth: f64,
    pub power_dbm: f64,
    pub trace: String,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            f_start: 1e6,
            f_stop: 1e9,
            points: 5000,
            if_bandwidth: 1e4,
            power_dbm: 5.0,
            trace: "S11".into(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), VnaError> {
        let bad = |m: String| Err(VnaError::InvalidConfig(m));
        if !(self.f_start.is_finite() && self.f_start > 0.0 && self.f_start < self.f_stop && self.f_stop.is_finite()) {
            return bad(format!(
                "need 0 < f_start < f_stop, got {} and {}",
                self.f_start, self.f_stop
            ));
        }
        if self.points < 2 {
            return bad(format!("points {} must be >= 2", self.points));
        }
        if !(self.if_bandwidth.is_finite() && self.if_bandwidth > 0.0) {
            return bad(format!("if_bandwidth {} must be > 0", self.if_bandwidth));
        }
        if !self.power_dbm.is_finite() {
            return bad("power_dbm must be finite".into());
        }
        if self.trace.is_empty() || self.trace.contains(char::is_whitespace) {
            return bad(format!("trace name {:?} must be one word", self.trace));
        }
        Ok(())
    }
}

/// SCPI command table. Templates containing `{}` take one argument; the
/// defaults are a generic dialect, and vendor quirks are handled by loading
/// a different table from TOML.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CommandMap {
    pub identify: String,
    pub calibration_state: String,
    pub freq_start: String,
    pub freq_stop: String,
    pub points: String,
    pub if_bandwidth: String,
    pub power: String,
    pub trace: String,
    pub trigger: String,
    pub operation_complete: String,
    pub freq_data: String,
    pub sweep_data: String,
}

impl Default for CommandMap {
    fn default() -> Self {
        Self {
            identify: "*IDN?".into(),
            calibration_state: "SENS:CORR:STAT?".into(),
            freq_start: "SENS:FREQ:STAR {}".into(),
            freq_stop: "SENS:FREQ:STOP {}".into(),
            points: "SENS:SWE:POIN {}".into(),
            if_bandwidth: "SENS:BAND {}".into(),
            power: "SOUR:POW {}".into(),
            trace: "CALC:PAR:DEF {}".into(),
            trigger: "INIT:IMM".into(),
            operation_complete: "*OPC?".into(),
            freq_data: "SENS:FREQ:DATA?".into(),
            sweep_data: "CALC:DATA? SDATA".into(),
        }
    }
}

impl CommandMap {
    pub fn from_toml_str(text: &str) -> Result<Self, VnaError> {
        toml::from_str(text).map_err(|e| VnaError::InvalidConfig(e.to_string()))
    }

    /// The configuration commands for `cfg`, in the order they are sent.
    pub fn setup_commands(&self, cfg: &SweepConfig) -> Vec<String> {
        vec![
            fill(&self.freq_start, &decimal(cfg.f_start, 0)),
            fill(&self.freq_stop, &decimal(cfg.f_stop, 0)),
            fill(&self.points, &cfg.points.to_string()),
            fill(&self.if_bandwidth, &decimal(cfg.if_bandwidth, 0)),
            fill(&self.power, &decimal(cfg.power_dbm, 0)),
            fill(&self.trace, &cfg.trace),
        ]
    }
}

pub(crate) fn fill(template: &str, arg: &str) -> String {
    template.replacen("{}", arg, 1)
}

/// Argument of `line` if it matches `template`.
pub(crate) fn match_template<'a>(template: &str, line: &'a str) -> Option<&'a str> {
    match template.split_once("{}") {
        Some((prefix, suffix)) => line.strip_prefix(prefix)?.strip_suffix(suffix).map(str::trim),
        None => (line == template).then_some(""),
    }
}

/// Comma-separated reals.
pub(crate) fn parse_csv(line: &str) -> Result<Vec<f64>, VnaError> {
    if line.trim().is_empty() {
        return Ok(Vec::new());
    }
    line.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| VnaError::ProtocolError(format!("bad number {t:?} in data block")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_sweep_settings() {
        let c = SweepConfig::default();
        assert_eq!((c.f_start, c.f_stop, c.points), (1e6, 1e9, 5000));
        assert_eq!((c.if_bandwidth, c.power_dbm), (1e4, 5.0));
        assert_eq!(c.trace, "S11");
        let e = InstrumentEndpoint::host("vna");
        assert_eq!((e.port, e.timeout), (5025, Duration::from_secs(30)));
    }

    #[test]
    fn setup_commands_render() {
        let cmds = CommandMap::default().setup_commands(&SweepConfig::default());
        assert_eq!(
            cmds,
            [
                "SENS:FREQ:STAR 1000000",
                "SENS:FREQ:STOP 1000000000",
                "SENS:SWE:POIN 5000",
                "SENS:BAND 10000",
                "SOUR:POW 5",
                "CALC:PAR:DEF S11"
            ]
        );
    }

    #[test]
    fn template_matching() {
        assert_eq!(match_template("SENS:SWE:POIN {}", "SENS:SWE:POIN 5000"), Some("5000"));
        assert_eq!(match_template("*OPC?", "*OPC?"), Some(""));
        assert_eq!(match_template("*OPC?", "*IDN?"), None);
    }

    #[test]
    fn command_map_from_toml() {
        let m = CommandMap::from_toml_str("trigger = \"INIT1:IMM\"\n").unwrap();
        assert_eq!(m.trigger, "INIT1:IMM");
        assert_eq!(m.identify, "*IDN?");
        assert!(CommandMap::from_toml_str("bogus = 1").is_err());
    }

    #[test]
    fn invalid_sweep_configs() {
        for cfg in [
            SweepConfig {
                f_start: 2e9,
                ..Default::default()
            },
            SweepConfig {
                points: 1,
                ..Default::default()
            },
            SweepConfig {
                if_bandwidth: 0.0,
                ..Default::default()
            },
            SweepConfig {
                trace: "S 11".into(),
                ..Default::default()
            },
        ] {
            assert!(cfg.validate().is_err());
        }
        assert!(InstrumentEndpoint::new("h", 1, Duration::ZERO).is_err());
    }
}
