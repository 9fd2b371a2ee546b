//! Touchstone version 1 reader and writer for one- and two-port files.
//!
//! Frequencies are normalized to Hz and values to complex numbers on read,
//! whatever unit and format the file declares. Full-line `!` comments are
//! kept in order and written back verbatim.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;

use crate::numfmt::{decimal, parse_scaled};
use crate::rf::{ComplexTrace, FrequencyGrid, RfError};

#[derive(Debug, Error)]
pub enum TouchstoneError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("line {line}: frequency is not strictly increasing")]
    NonMonotonicFrequency { line: usize },
    #[error("{0}-parameter data cannot be analyzed; only S-parameters are supported")]
    UnsupportedParameter(ParameterKind),
    #[error("line {line}: Touchstone 2.0 keyword files are not supported")]
    UnsupportedVersion { line: usize },
    #[error(transparent)]
    Grid(#[from] RfError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn syntax(line: usize, reason: impl Into<String>) -> TouchstoneError {
    TouchstoneError::Syntax {
        line,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyUnit {
    Hz,
    KHz,
    MHz,
    GHz,
}

impl FrequencyUnit {
    /// Power of ten that converts a value in this unit to Hz.
    pub fn exponent(self) -> i32 {
        match self {
            FrequencyUnit::Hz => 0,
            FrequencyUnit::KHz => 3,
            FrequencyUnit::MHz => 6,
            FrequencyUnit::GHz => 9,
        }
    }

    fn token(self) -> &'static str {
        match self {
            FrequencyUnit::Hz => "HZ",
            FrequencyUnit::KHz => "KHZ",
            FrequencyUnit::MHz => "MHZ",
            FrequencyUnit::GHz => "GHZ",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParameterKind {
    S,
    Y,
    Z,
}

impl fmt::Display for ParameterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParameterKind::S => "S",
            ParameterKind::Y => "Y",
            ParameterKind::Z => "Z",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DataFormat {
    /// Real / imaginary.
    #[value(name = "RI", alias = "ri")]
    Ri,
    /// Linear magnitude / angle in degrees.
    #[value(name = "MA", alias = "ma")]
    Ma,
    /// Magnitude in dB / angle in degrees.
    #[value(name = "DB", alias = "db")]
    Db,
}

impl DataFormat {
    fn token(self) -> &'static str {
        match self {
            DataFormat::Ri => "RI",
            DataFormat::Ma => "MA",
            DataFormat::Db => "DB",
        }
    }

    fn decode(self, a: f64, b: f64) -> Complex64 {
        match self {
            DataFormat::Ri => Complex64::new(a, b),
            DataFormat::Ma => Complex64::from_polar(a, b.to_radians()),
            DataFormat::Db => Complex64::from_polar(10f64.powf(a / 20.0), b.to_radians()),
        }
    }

    fn encode(self, v: Complex64) -> (f64, f64) {
        match self {
            DataFormat::Ri => (v.re, v.im),
            DataFormat::Ma => (v.norm(), v.arg().to_degrees()),
            DataFormat::Db => (20.0 * v.norm().log10(), v.arg().to_degrees()),
        }
    }
}

/// Contents of the `#` option line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TouchstoneOptions {
    pub freq_unit: FrequencyUnit,
    pub parameter: ParameterKind,
    pub format: DataFormat,
    pub reference: f64,
}

impl Default for TouchstoneOptions {
    /// `# GHZ S MA R 50`
    fn default() -> Self {
        Self {
            freq_unit: FrequencyUnit::GHz,
            parameter: ParameterKind::S,
            format: DataFormat::Ma,
            reference: 50.0,
        }
    }
}

impl TouchstoneOptions {
    /// Options used when writing synthetic or acquired sweeps.
    pub fn hz_s(format: DataFormat, reference: f64) -> Self {
        Self {
            freq_unit: FrequencyUnit::Hz,
            parameter: ParameterKind::S,
            format,
            reference,
        }
    }

    fn parse(line_no: usize, body: &str) -> Result<Self, TouchstoneError> {
        let mut opts = Self::default();
        let mut tokens = body.split_whitespace();
        while let Some(tok) = tokens.next() {
            match tok.to_ascii_uppercase().as_str() {
                "HZ" => opts.freq_unit = FrequencyUnit::Hz,
                "KHZ" => opts.freq_unit = FrequencyUnit::KHz,
                "MHZ" => opts.freq_unit = FrequencyUnit::MHz,
                "GHZ" => opts.freq_unit = FrequencyUnit::GHz,
                "S" => opts.parameter = ParameterKind::S,
                "Y" => opts.parameter = ParameterKind::Y,
                "Z" => opts.parameter = ParameterKind::Z,
                "G" | "H" => return Err(syntax(line_no, format!("parameter type {tok} is not supported"))),
                "RI" => opts.format = DataFormat::Ri,
                "MA" => opts.format = DataFormat::Ma,
                "DB" => opts.format = DataFormat::Db,
                "R" => {
                    let value = tokens
                        .next()
                        .ok_or_else(|| syntax(line_no, "R without a reference value"))?;
                    let r: f64 = value
                        .parse()
                        .map_err(|_| syntax(line_no, format!("invalid reference {value:?}")))?;
                    if !(r.is_finite() && r > 0.0) {
                        return Err(syntax(line_no, format!("reference must be positive, got {r}")));
                    }
                    opts.reference = r;
                }
                _ => return Err(syntax(line_no, format!("unknown option token {tok:?}"))),
            }
        }
        Ok(opts)
    }
}

/// A parsed one- or two-port Touchstone file.
#[derive(Debug, Clone, PartialEq)]
pub struct TouchstoneNetwork {
    pub options: TouchstoneOptions,
    ports: usize,
    grid: FrequencyGrid,
    /// Per frequency, `ports²` entries in row-major matrix order
    /// (for two ports: S11, S12, S21, S22).
    data: Vec<Vec<Complex64>>,
    pub comments: Vec<String>,
}

impl TouchstoneNetwork {
    pub fn new(
        options: TouchstoneOptions,
        ports: usize,
        grid: FrequencyGrid,
        data: Vec<Vec<Complex64>>,
        comments: Vec<String>,
    ) -> Result<Self, TouchstoneError> {
        if !(ports == 1 || ports == 2) {
            return Err(syntax(0, format!("{ports}-port networks are not supported")));
        }
        if data.len() != grid.len() {
            return Err(RfError::LengthMismatch {
                points: grid.len(),
                values: data.len(),
            }
            .into());
        }
        if let Some(i) = data.iter().position(|row| row.len() != ports * ports) {
            return Err(syntax(0, format!("row {i} does not hold {} entries", ports * ports)));
        }
        Ok(Self {
            options,
            ports,
            grid,
            data,
            comments,
        })
    }

    /// Wraps a single S11 trace as a one-port network.
    pub fn one_port(trace: &ComplexTrace, options: TouchstoneOptions, comments: Vec<String>) -> Self {
        let data = trace.values().iter().map(|v| vec![*v]).collect();
        Self {
            options,
            ports: 1,
            grid: trace.grid().clone(),
            data,
            comments,
        }
    }

    pub fn ports(&self) -> usize {
        self.ports
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn data(&self) -> &[Vec<Complex64>] {
        &self.data
    }

    /// Entry `(row, col)` (zero-based) at frequency index `k`.
    pub fn entry(&self, k: usize, row: usize, col: usize) -> Complex64 {
        self.data[k][row * self.ports + col]
    }
}

/// Parses a Touchstone v1 file, inferring the port count from the first data
/// line (3 columns: one port, 9 columns: two ports).
pub fn parse_touchstone(input: &[u8]) -> Result<TouchstoneNetwork, TouchstoneError> {
    parse_touchstone_with_ports(input, None)
}

pub fn parse_touchstone_with_ports(
    input: &[u8],
    ports_hint: Option<usize>,
) -> Result<TouchstoneNetwork, TouchstoneError> {
    let text = std::str::from_utf8(input).map_err(|e| syntax(0, format!("file is not valid UTF-8: {e}")))?;

    let mut options: Option<TouchstoneOptions> = None;
    let mut seen_data = false;
    let mut comments = Vec::new();
    let mut ports = ports_hint;
    let mut pending: Vec<f64> = Vec::new();
    let mut pending_line = 0;
    let mut freqs: Vec<f64> = Vec::new();
    let mut rows: Vec<Vec<Complex64>> = Vec::new();

    // The default option line applies only when the file has none at all.
    let has_option_line = text.lines().any(|l| l.trim_start().starts_with('#'));
    if !has_option_line {
        options = Some(TouchstoneOptions::default());
    }

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let trimmed = raw.trim_start();
        if let Some(comment) = trimmed.strip_prefix('!') {
            comments.push(comment.to_string());
            continue;
        }
        let content = match trimmed.find('!') {
            Some(i) => &trimmed[..i],
            None => trimmed,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            return Err(TouchstoneError::UnsupportedVersion { line: line_no });
        }
        if let Some(body) = content.strip_prefix('#') {
            if seen_data {
                return Err(syntax(line_no, "option line after data"));
            }
            // Only the first option line counts.
            if options.is_none() {
                options = Some(TouchstoneOptions::parse(line_no, body)?);
            }
            continue;
        }
        let opts = match options {
            Some(o) => o,
            None => return Err(syntax(line_no, "data line before the option line")),
        };
        seen_data = true;

        let n_ports = match ports {
            Some(p) => p,
            None => {
                let count = content.split_whitespace().count();
                let p = match count {
                    3 => 1,
                    9 => 2,
                    _ => return Err(syntax(line_no, format!("cannot infer port count from {count} columns"))),
                };
                ports = Some(p);
                p
            }
        };
        if !(n_ports == 1 || n_ports == 2) {
            return Err(syntax(line_no, format!("{n_ports}-port files are not supported")));
        }
        let row_len = 1 + 2 * n_ports * n_ports;

        if pending.is_empty() {
            pending_line = line_no;
        }
        for (col, tok) in content.split_whitespace().enumerate() {
            let value = if pending.is_empty() {
                parse_scaled(tok, opts.freq_unit.exponent())
            } else {
                tok.parse().ok()
            }
            .ok_or_else(|| syntax(line_no, format!("invalid number {tok:?} in column {}", col + 1)))?;
            pending.push(value);
            if pending.len() > row_len {
                return Err(syntax(
                    line_no,
                    format!("too many values; expected {row_len} per frequency"),
                ));
            }
        }
        if pending.len() == row_len {
            let f = pending[0];
            if !(f.is_finite() && f > 0.0) {
                return Err(syntax(pending_line, format!("frequency {f} is not positive")));
            }
            if let Some(&prev) = freqs.last() {
                if f <= prev {
                    return Err(TouchstoneError::NonMonotonicFrequency { line: pending_line });
                }
            }
            let file_order: Vec<Complex64> = pending[1..]
                .chunks_exact(2)
                .map(|p| opts.format.decode(p[0], p[1]))
                .collect();
            let row = if n_ports == 2 {
                // File order is S11 S21 S12 S22.
                vec![file_order[0], file_order[2], file_order[1], file_order[3]]
            } else {
                file_order
            };
            freqs.push(f);
            rows.push(row);
            pending.clear();
        }
    }

    if !pending.is_empty() {
        return Err(syntax(pending_line, "incomplete data row at end of file"));
    }
    if freqs.is_empty() {
        return Err(syntax(text.lines().count(), "file contains no data"));
    }
    let options = options.unwrap_or_default();
    let grid = FrequencyGrid::new(freqs)?;
    TouchstoneNetwork::new(options, ports.unwrap_or(1), grid, rows, comments)
}

/// Serializes `net` with the given data format. The frequency unit, parameter
/// kind and reference come from `net.options`.
pub fn write_touchstone(net: &TouchstoneNetwork, format: DataFormat) -> Vec<u8> {
    let opts = net.options;
    let mut out = String::new();
    out.push_str(&format!(
        "# {} {} {} R {}\n",
        opts.freq_unit.token(),
        opts.parameter,
        format.token(),
        decimal(opts.reference, 0)
    ));
    for c in &net.comments {
        out.push('!');
        out.push_str(c);
        out.push('\n');
    }
    let shift = opts.freq_unit.exponent();
    for (k, f) in net.grid.points().iter().enumerate() {
        out.push_str(&decimal(*f, shift));
        let row = &net.data[k];
        let ordered: Vec<Complex64> = if net.ports == 2 {
            vec![row[0], row[2], row[1], row[3]]
        } else {
            row.clone()
        };
        for v in ordered {
            let (a, b) = format.encode(v);
            out.push(' ');
            out.push_str(&decimal(a, 0));
            out.push(' ');
            out.push_str(&decimal(b, 0));
        }
        out.push('\n');
    }
    out.into_bytes()
}

/// Port count implied by a `.sNp` extension, if any.
pub fn ports_from_extension(path: &Path) -> Option<usize> {
    let ext = path.extension()?.to_str()?.to_ascii_lowercase();
    let n = ext.strip_prefix('s')?.strip_suffix('p')?;
    n.parse().ok()
}

pub fn read_touchstone(path: &Path) -> Result<TouchstoneNetwork, TouchstoneError> {
    let bytes = std::fs::read(path)?;
    parse_touchstone_with_ports(&bytes, ports_from_extension(path))
}

/// The (1,1) entry per frequency. Only S-parameter networks qualify.
pub fn extract_s11(net: &TouchstoneNetwork) -> Result<ComplexTrace, TouchstoneError> {
    if net.options.parameter != ParameterKind::S {
        return Err(TouchstoneError::UnsupportedParameter(net.options.parameter));
    }
    let values = (0..net.grid.len()).map(|k| net.entry(k, 0, 0)).collect();
    Ok(ComplexTrace::new(net.grid.clone(), values)?)
}
