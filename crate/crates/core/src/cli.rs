//! Command-line front end. Exit codes: 0 success, 1 counterfeit verdict,
//! 2 usage error, 3 runtime error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::detect::{verify, Decision, DetectorConfig, Verdict};
use crate::pdn::sim::mix_seed;
use crate::pdn::{
    apply_aging, apply_damage, sample_genuine, simulate_trials, AgingSpec, NoiseSpec, PdnModel, VariationSpec,
};
use crate::report::write_report;
use crate::rf::{magnitude_db, ComplexTrace, FrequencyGrid, MagnitudeTrace};
use crate::signature::{average_trials, build_golden, load_golden, save_golden, GoldenSignature, SampleRecord};
use crate::touchstone::{
    extract_s11, read_touchstone, write_touchstone, DataFormat, TouchstoneNetwork, TouchstoneOptions,
};
use crate::vna::{CommandMap, InstrumentEndpoint, SweepConfig, VnaClient};

pub const EXIT_OK: i32 = 0;
pub const EXIT_COUNTERFEIT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "pdnprint",
    version,
    about = "Counterfeit and recycled IC screening from PDN |S11| signatures"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate S11 sweeps of a PDN model and write Touchstone files.
    Simulate(SimulateArgs),
    /// Rewrite a Touchstone file in another data format.
    Convert(ConvertArgs),
    /// Build a golden signature from genuine-sample sweeps.
    Golden(GoldenArgs),
    /// Check a device sweep against a golden signature (exit 1 if counterfeit).
    Verify(VerifyArgs),
    /// Acquire repeated sweeps from a VNA over SCPI/TCP.
    Acquire(AcquireArgs),
    /// Render report artifacts without affecting the exit code.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PowerState {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

fn parse_grid(s: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b, n] = parts.as_slice() else {
        return Err("expected START,STOP,POINTS".into());
    };
    let start: f64 = a.parse().map_err(|_| format!("bad start {a:?}"))?;
    let stop: f64 = b.parse().map_err(|_| format!("bad stop {b:?}"))?;
    let points: usize = n.parse().map_err(|_| format!("bad point count {n:?}"))?;
    FrequencyGrid::linear(start, stop, points).map_err(|e| e.to_string())?;
    Ok(GridSpec { start, stop, points })
}

fn parse_meta(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or("expected KEY=VALUE")?;
    if k.is_empty() || k.contains(char::is_whitespace) {
        return Err(format!("bad metadata key {k:?}"));
    }
    Ok((k.to_string(), v.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrialLayout {
    /// Consecutive groups of N files (in sorted order) form one sample.
    Count(usize),
    /// Files sharing a parent directory form one sample.
    Directory,
}

fn parse_layout(s: &str) -> Result<TrialLayout, String> {
    if s == "dir" {
        return Ok(TrialLayout::Directory);
    }
    match s.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(TrialLayout::Count(n)),
        _ => Err("expected a positive count or \"dir\"".into()),
    }
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["model", "preset"]))]
pub struct SimulateArgs {
    /// PDN model file (TOML).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Built-in model preset.
    #[arg(long)]
    pub preset: Option<String>,
    /// Sweep grid as START,STOP,POINTS in Hz.
    #[arg(long, value_parser = parse_grid, default_value = "1e6,1e9,5000")]
    pub grid: GridSpec,
    /// Per-trial |S11| noise in dB.
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    /// Seed for process variation and noise.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Lognormal process spread per element (e.g. 0.02). Omitted: nominal model.
    #[arg(long)]
    pub variation: Option<f64>,
    /// Repeated sweeps. With more than one, --out names a directory.
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Accelerated-aging stress in hours.
    #[arg(long)]
    pub aged: Option<f64>,
    /// Overstress damage severity in [0, 1], applied after aging.
    #[arg(long)]
    pub damaged: Option<f64>,
    /// Override the model's powered state.
    #[arg(long, value_enum)]
    pub powered: Option<PowerState>,
    #[arg(long, value_enum, default_value = "RI")]
    pub format: DataFormat,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub format: DataFormat,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GoldenArgs {
    /// Glob matching the genuine-sample Touchstone files.
    #[arg(long)]
    pub inputs: String,
    /// How files map to samples: a count N, or "dir" to group by directory.
    #[arg(long, value_parser = parse_layout, default_value = "1")]
    pub trials_per_sample: TrialLayout,
    #[arg(long)]
    pub out: PathBuf,
    /// Metadata label, KEY=VALUE. Repeatable.
    #[arg(long, value_parser = parse_meta)]
    pub meta: Vec<(String, String)>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub golden: PathBuf,
    /// Device sweep(s); several files are averaged as trials.
    #[arg(long, num_args = 1.., required = true)]
    pub dut: Vec<PathBuf>,
    /// Envelope width in standard deviations.
    #[arg(long, default_value_t = 6.0)]
    pub k: f64,
    #[arg(long, default_value_t = 5)]
    pub min_band_points: usize,
    #[arg(long, default_value_t = 3)]
    pub merge_gap_points: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub sigma_floor: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub detect: DetectArgs,
    /// Directory for verdict.json and verdict.svg.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub detect: DetectArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AcquireArgs {
    #[arg(long)]
    pub host: String,
    #[arg(long, default_value_t = crate::vna::DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Per-operation timeout in seconds.
    #[arg(long, default_value_t = 30.0)]
    pub timeout: f64,
    /// Sweep configuration (TOML). Omitted: 1 MHz to 1 GHz, 5000 points.
    #[arg(long)]
    pub sweep: Option<PathBuf>,
    /// SCPI command table (TOML) for instruments with another dialect.
    #[arg(long)]
    pub commands: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

type CmdResult = Result<i32, Failure>;

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a, out),
        Command::Convert(a) => convert(a, out),
        Command::Golden(a) => golden(a, out),
        Command::Verify(a) => verify_cmd(a, out),
        Command::Acquire(a) => acquire(a, out),
        Command::Report(a) => report_cmd(a, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_RUNTIME
        }
    }
}

/// Writes via a temporary sibling and a rename, so readers never see a
/// partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> CmdResult {
    if a.trials < 1 {
        return Err(Failure::Usage("--trials must be >= 1".into()));
    }
    let mut model = match (&a.model, &a.preset) {
        (Some(p), None) => PdnModel::load(p).map_err(runtime)?,
        (None, Some(name)) => PdnModel::preset(name).map_err(|e| Failure::Usage(e.to_string()))?,
        _ => return Err(Failure::Usage("give exactly one of --model and --preset".into())),
    };
    let usage = |e: crate::pdn::PdnError| Failure::Usage(e.to_string());
    let noise = NoiseSpec::new(a.noise, mix_seed(a.seed, 0x006e_6f69_7365)).map_err(usage)?;
    if let Some(sigma) = a.variation {
        model = sample_genuine(&model, VariationSpec::new(sigma, a.seed).map_err(usage)?).map_err(usage)?;
    }
    if let Some(h) = a.aged {
        model = apply_aging(&model, AgingSpec::hours(h)).map_err(usage)?;
    }
    if let Some(sev) = a.damaged {
        model = apply_damage(&model, sev).map_err(usage)?;
    }
    if let Some(p) = a.powered {
        model = model.with_powered(p == PowerState::On);
    }
    let grid =
        FrequencyGrid::linear(a.grid.start, a.grid.stop, a.grid.points).map_err(|e| Failure::Usage(e.to_string()))?;
    let traces = simulate_trials(&model, &grid, noise, a.trials);

    let mut provenance = vec![format!(
        " pdnprint simulate {} seed={} noise_db={}",
        a.preset
            .as_deref()
            .map(|p| format!("preset={p}"))
            .unwrap_or_else(|| format!(
                "model={}",
                a.model.as_deref().map(|p| p.display().to_string()).unwrap_or_default()
            )),
        a.seed,
        a.noise
    )];
    if let Some(v) = a.variation {
        provenance.push(format!(" variation={v}"));
    }
    if let Some(h) = a.aged {
        provenance.push(format!(" aged_hours={h}"));
    }
    if let Some(s) = a.damaged {
        provenance.push(format!(" damage_severity={s}"));
    }
    provenance.push(format!(" powered={}", if model.powered() { "on" } else { "off" }));

    let write = |trace: &ComplexTrace, path: &Path, trial: usize| -> Result<(), Failure> {
        let mut comments = provenance.clone();
        comments.push(format!(" trial={trial}"));
        let net = TouchstoneNetwork::one_port(trace, TouchstoneOptions::hz_s(a.format, model.z0().ohms()), comments);
        write_atomic(path, &write_touchstone(&net, a.format)).map_err(runtime)
    };
    if a.trials == 1 {
        write(&traces[0], &a.out, 1)?;
        let _ = writeln!(out, "wrote {} ({} points)", a.out.display(), grid.len());
    } else {
        for (i, t) in traces.iter().enumerate() {
            write(t, &a.out.join(format!("trial_{:02}.s1p", i + 1)), i + 1)?;
        }
        let _ = writeln!(
            out,
            "wrote {} trials to {} ({} points each)",
            a.trials,
            a.out.display(),
            grid.len()
        );
    }
    Ok(EXIT_OK)
}

fn convert(a: ConvertArgs, out: &mut dyn Write) -> CmdResult {
    let net = read_touchstone(&a.input).map_err(runtime)?;
    write_atomic(&a.out, &write_touchstone(&net, a.format)).map_err(runtime)?;
    let _ = writeln!(out, "wrote {}", a.out.display());
    Ok(EXIT_OK)
}

fn read_magnitude(path: &Path) -> Result<MagnitudeTrace, Failure> {
    let net = read_touchstone(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    let s11 = extract_s11(&net).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    magnitude_db(&s11).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn group_samples(files: &[PathBuf], layout: &TrialLayout) -> Result<Vec<(String, Vec<PathBuf>)>, Failure> {
    match layout {
        TrialLayout::Count(n) => {
            if !files.len().is_multiple_of(*n) {
                return Err(runtime(format!(
                    "{} files do not split into samples of {n} trials",
                    files.len()
                )));
            }
            Ok(files
                .chunks(*n)
                .map(|chunk| {
                    let id = chunk[0]
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    (id, chunk.to_vec())
                })
                .collect())
        }
        TrialLayout::Directory => {
            let mut groups: BTreeMap<PathBuf, Vec<PathBuf>> = BTreeMap::new();
            for f in files {
                groups
                    .entry(f.parent().map(Path::to_path_buf).unwrap_or_default())
                    .or_default()
                    .push(f.clone());
            }
            Ok(groups
                .into_iter()
                .map(|(dir, fs)| {
                    let id = dir
                        .file_name()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| dir.display().to_string());
                    (id, fs)
                })
                .collect())
        }
    }
}

fn golden(a: GoldenArgs, out: &mut dyn Write) -> CmdResult {
    let paths = glob::glob(&a.inputs).map_err(|e| Failure::Usage(format!("bad glob: {e}")))?;
    let mut files: Vec<PathBuf> = paths.collect::<Result<_, _>>().map_err(runtime)?;
    files.sort();
    let groups = group_samples(&files, &a.trials_per_sample)?;
    let mut records = Vec::with_capacity(groups.len());
    for (id, fs) in groups {
        let trials = fs.iter().map(|p| read_magnitude(p)).collect::<Result<Vec<_>, _>>()?;
        records.push(SampleRecord::new(id, trials).map_err(runtime)?);
    }
    let metadata: BTreeMap<String, String> = a.meta.into_iter().collect();
    let sig = build_golden(&records, metadata).map_err(runtime)?;
    write_atomic(&a.out, &save_golden(&sig)).map_err(runtime)?;

    let mut sorted = sig.sigma_db().to_vec();
    sorted.sort_by(f64::total_cmp);
    let _ = writeln!(out, "n_samples: {}", sig.n_samples);
    let _ = writeln!(out, "n_trials: {}", sig.n_trials);
    let _ = writeln!(out, "points: {}", sig.grid().len());
    let _ = writeln!(
        out,
        "sigma_db: min {:.3e} median {:.3e} max {:.3e}",
        sorted[0],
        sorted[sorted.len() / 2],
        sorted[sorted.len() - 1]
    );
    let _ = writeln!(out, "wrote {}", a.out.display());
    Ok(EXIT_OK)
}

fn run_detection(a: &DetectArgs) -> Result<(GoldenSignature, MagnitudeTrace, Verdict), Failure> {
    let cfg = DetectorConfig {
        k_sigma: a.k,
        min_band_points: a.min_band_points,
        merge_gap_points: a.merge_gap_points,
        sigma_floor_db: a.sigma_floor,
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let bytes = std::fs::read(&a.golden).map_err(|e| runtime(format!("{}: {e}", a.golden.display())))?;
    let golden = load_golden(&bytes).map_err(|e| runtime(format!("{}: {e}", a.golden.display())))?;
    let trials = a.dut.iter().map(|p| read_magnitude(p)).collect::<Result<Vec<_>, _>>()?;
    let record = SampleRecord::new("dut", trials).map_err(runtime)?;
    let dut = average_trials(&record).map_err(runtime)?;
    let verdict = verify(&golden, &dut, &cfg).map_err(runtime)?;
    Ok((golden, dut, verdict))
}

fn print_verdict(v: &Verdict, out: &mut dyn Write) {
    let decision = match v.decision {
        Decision::Genuine => "genuine",
        Decision::Counterfeit => "counterfeit",
    };
    let _ = writeln!(out, "verdict: {decision}");
    for b in &v.bands {
        let _ = writeln!(
            out,
            "band: {:.3} MHz - {:.3} MHz  max {:.2} sigma  mean {:.2} sigma  {} points",
            b.f_start / 1e6,
            b.f_stop / 1e6,
            b.max_deviation_sigma,
            b.mean_deviation_sigma,
            b.point_count
        );
    }
}

fn verify_cmd(a: VerifyArgs, out: &mut dyn Write) -> CmdResult {
    let (golden, dut, verdict) = run_detection(&a.detect)?;
    print_verdict(&verdict, out);
    if let Some(dir) = &a.report {
        let (json, svg) = write_report(dir, &verdict, &golden, &dut).map_err(runtime)?;
        let _ = writeln!(out, "report: {} {}", json.display(), svg.display());
    }
    Ok(match verdict.decision {
        Decision::Genuine => EXIT_OK,
        Decision::Counterfeit => EXIT_COUNTERFEIT,
    })
}

fn report_cmd(a: ReportArgs, out: &mut dyn Write) -> CmdResult {
    let (golden, dut, verdict) = run_detection(&a.detect)?;
    print_verdict(&verdict, out);
    let (json, svg) = write_report(&a.out, &verdict, &golden, &dut).map_err(runtime)?;
    let _ = writeln!(out, "report: {} {}", json.display(), svg.display());
    Ok(EXIT_OK)
}

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize)]
struct Manifest {
    schema: &'static str,
    instrument: String,
    calibration: String,
    endpoint: String,
    sweep: SweepConfig,
    trials: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize)]
struct ManifestEntry {
    file: String,
    sha256: String,
}

/// Acquires every trial before touching the output directory, so a failed
/// run leaves no files behind. The manifest is written last.
fn acquire(a: AcquireArgs, out: &mut dyn Write) -> CmdResult {
    if a.trials < 1 {
        return Err(Failure::Usage("--trials must be >= 1".into()));
    }
    if !(a.timeout.is_finite() && a.timeout > 0.0) {
        return Err(Failure::Usage("--timeout must be > 0".into()));
    }
    let sweep = match &a.sweep {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(runtime)?;
            toml::from_str::<SweepConfig>(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?
        }
        None => SweepConfig::default(),
    };
    sweep.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let commands = match &a.commands {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(runtime)?;
            CommandMap::from_toml_str(&text).map_err(|e| Failure::Usage(e.to_string()))?
        }
        None => CommandMap::default(),
    };
    let endpoint = InstrumentEndpoint::new(a.host.clone(), a.port, Duration::from_secs_f64(a.timeout))
        .map_err(|e| Failure::Usage(e.to_string()))?;

    let mut client = VnaClient::connect(&endpoint).map_err(runtime)?.with_commands(commands);
    let instrument = client.identify().map_err(runtime)?;
    let calibration = client.calibration_state().map_err(runtime)?;
    let mut files = Vec::with_capacity(a.trials);
    for t in 1..=a.trials {
        let trace = client.acquire(&sweep).map_err(|e| runtime(format!("trial {t}: {e}")))?;
        let comments = vec![
            format!(" instrument: {instrument}"),
            format!(" calibration: {calibration}"),
            format!(" trial={t}"),
        ];
        let net = TouchstoneNetwork::one_port(&trace, TouchstoneOptions::hz_s(DataFormat::Ri, 50.0), comments);
        files.push((format!("trial_{t:02}.s1p"), write_touchstone(&net, DataFormat::Ri)));
    }

    let mut entries = Vec::with_capacity(files.len());
    for (name, bytes) in &files {
        write_atomic(&a.out.join(name), bytes).map_err(runtime)?;
        entries.push(ManifestEntry {
            file: name.clone(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
    }
    let manifest = Manifest {
        schema: "pdnprint-acquisition/1",
        instrument,
        calibration,
        endpoint: endpoint.address(),
        sweep,
        trials: entries,
    };
    let mut json = serde_json::to_string_pretty(&manifest).map_err(runtime)?;
    json.push('\n');
    write_atomic(&a.out.join(MANIFEST_FILE), json.as_bytes()).map_err(runtime)?;
    let _ = writeln!(out, "acquired {} trials into {}", a.trials, a.out.display());
    Ok(EXIT_OK)
}
