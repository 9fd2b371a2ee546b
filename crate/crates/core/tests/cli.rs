mod support;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

use pdnprint::pdn::{simulate_sweep, NoiseSpec, PdnModel};
use pdnprint::touchstone::read_touchstone;
use pdnprint::vna::{MockConfig, MockServer};

fn pdnprint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdnprint"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL_GRID: &str = "1e6,1e9,1000";

/// 12 genuine samples of 10 trials each under `dir/genuine/sNN/`, plus a
/// golden built from them.
fn golden_fixture(dir: &Path) -> PathBuf {
    for i in 1..=12 {
        let out = dir.join(format!("genuine/s{i:02}"));
        let seed = i.to_string();
        let o = pdnprint(&[
            "simulate",
            "--preset",
            "cw308-like",
            "--grid",
            SMALL_GRID,
            "--variation",
            "0.02",
            "--seed",
            &seed,
            "--trials",
            "10",
            "--out",
            s(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let golden = dir.join("ref.golden");
    let pattern = format!("{}/genuine/*/*.s1p", s(dir));
    let o = pdnprint(&[
        "golden",
        "--inputs",
        &pattern,
        "--trials-per-sample",
        "dir",
        "--out",
        s(&golden),
        "--meta",
        "device=cw308",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("n_samples: 12"));
    assert!(stdout(&o).contains("n_trials: 10"));
    golden
}

fn dut(dir: &Path, name: &str, extra: &[&str]) -> Vec<String> {
    let out = dir.join(name);
    let mut args = vec![
        "simulate",
        "--preset",
        "cw308-like",
        "--grid",
        SMALL_GRID,
        "--trials",
        "10",
        "--out",
        s(&out),
    ];
    args.extend_from_slice(extra);
    let o = pdnprint(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    (1..=10)
        .map(|t| s(&out.join(format!("trial_{t:02}.s1p"))).to_string())
        .collect()
}

fn verify_args<'a>(golden: &'a str, files: &'a [String], extra: &[&'a str]) -> Vec<&'a str> {
    let mut args = vec!["verify", "--golden", golden, "--dut"];
    args.extend(files.iter().map(String::as_str));
    args.extend_from_slice(extra);
    args
}

#[test]
fn simulate_defaults_to_the_standard_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.s1p");
    assert_eq!(
        code(&pdnprint(&["simulate", "--preset", "cw308-like", "--out", s(&out)])),
        0
    );
    let net = read_touchstone(&out).unwrap();
    assert_eq!(net.grid().len(), 5000);
    assert_eq!((net.grid().start(), net.grid().stop()), (1e6, 1e9));
}

#[test]
fn simulate_flag_rules() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.s1p");
    let both = [
        "simulate",
        "--preset",
        "cw308-like",
        "--aged",
        "216",
        "--damaged",
        "0.5",
        "--out",
        s(&out),
    ];
    assert_eq!(code(&pdnprint(&both)), 0);
    assert_eq!(code(&pdnprint(&["simulate", "--out", s(&out)])), 2);
    let model = dir.path().join("m.toml");
    std::fs::write(&model, PdnModel::preset("cw308-like").unwrap().to_toml_string()).unwrap();
    assert_eq!(
        code(&pdnprint(&[
            "simulate",
            "--preset",
            "cw308-like",
            "--model",
            s(&model),
            "--out",
            s(&out)
        ])),
        2
    );
    assert_eq!(
        code(&pdnprint(&["simulate", "--model", s(&model), "--out", s(&out)])),
        0
    );
    assert_eq!(code(&pdnprint(&["simulate", "--preset", "nope", "--out", s(&out)])), 2);
    assert_eq!(
        code(&pdnprint(&[
            "simulate",
            "--preset",
            "cw308-like",
            "--grid",
            "1,2",
            "--out",
            s(&out)
        ])),
        2
    );
    assert_eq!(
        code(&pdnprint(&[
            "simulate",
            "--preset",
            "cw308-like",
            "--damaged",
            "3",
            "--out",
            s(&out)
        ])),
        2
    );
    assert_eq!(code(&pdnprint(&["frobnicate"])), 2);
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.s1p"), dir.path().join("b.s1p"));
    for p in [&a, &b] {
        pdnprint(&[
            "simulate",
            "--preset",
            "cw308-like",
            "--seed",
            "9",
            "--variation",
            "0.02",
            "--out",
            s(p),
        ]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn convert_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ma = dir.path().join("x.s1p");
    std::fs::write(
        &ma,
        "! bench\n# MHz S MA R 50\n1 0.91 -12.5\n2 0.82 -25.25\n3 0.73 -37.125\n",
    )
    .unwrap();
    let ri = dir.path().join("x_ri.s1p");
    let back = dir.path().join("x_ma.s1p");
    assert_eq!(
        code(&pdnprint(&[
            "convert",
            "--in",
            s(&ma),
            "--format",
            "RI",
            "--out",
            s(&ri)
        ])),
        0
    );
    assert_eq!(
        code(&pdnprint(&[
            "convert",
            "--in",
            s(&ri),
            "--format",
            "MA",
            "--out",
            s(&back)
        ])),
        0
    );
    let (a, b) = (read_touchstone(&ma).unwrap(), read_touchstone(&back).unwrap());
    assert_eq!(a.grid(), b.grid());
    assert_eq!(b.comments, vec![" bench".to_string()]);
    for (x, y) in a.data().iter().zip(b.data()) {
        assert!((x[0] - y[0]).norm() <= 1e-7 * x[0].norm());
    }
    let missing = dir.path().join("none.s1p");
    assert_eq!(
        code(&pdnprint(&[
            "convert",
            "--in",
            s(&missing),
            "--format",
            "RI",
            "--out",
            s(&ri)
        ])),
        3
    );
}

#[test]
fn golden_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("one/a.s1p");
    pdnprint(&[
        "simulate",
        "--preset",
        "cw308-like",
        "--grid",
        SMALL_GRID,
        "--out",
        s(&a),
    ]);
    let out = dir.path().join("x.golden");
    let one = format!("{}/one/*.s1p", s(dir.path()));
    assert_eq!(code(&pdnprint(&["golden", "--inputs", &one, "--out", s(&out)])), 3);

    let b = dir.path().join("one/b.s1p");
    pdnprint(&[
        "simulate",
        "--preset",
        "cw308-like",
        "--grid",
        "1e6,1e9,999",
        "--out",
        s(&b),
    ]);
    assert_eq!(code(&pdnprint(&["golden", "--inputs", &one, "--out", s(&out)])), 3);
    assert!(!out.exists());
}

#[test]
fn verify_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let golden = golden_fixture(dir.path());
    let g = s(&golden);

    let fresh = dut(dir.path(), "fresh", &["--variation", "0.02", "--seed", "500"]);
    let o = pdnprint(&verify_args(g, &fresh, &[]));
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("verdict: genuine"));

    let aged = dut(dir.path(), "aged", &["--aged", "216", "--seed", "501"]);
    let report = dir.path().join("report");
    let o = pdnprint(&verify_args(g, &aged, &["--report", s(&report)]));
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("verdict: counterfeit"));
    assert!(stdout(&o).contains("band: "));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(report.join("verdict.json")).unwrap()).unwrap();
    assert_eq!(doc["decision"], "counterfeit");
    for b in doc["bands"].as_array().unwrap() {
        assert!(b["f_start"].as_f64().unwrap() >= 20e6);
    }
    let svg = std::fs::read(report.join("verdict.svg")).unwrap();
    let again = dir.path().join("report2");
    pdnprint(&verify_args(g, &aged, &["--report", s(&again)]));
    assert_eq!(svg, std::fs::read(again.join("verdict.svg")).unwrap());

    assert_eq!(code(&pdnprint(&verify_args(g, &aged, &["--k", "1000000"]))), 0);

    let rendered = dir.path().join("rendered");
    let mut args = verify_args(g, &aged, &["--out", s(&rendered)]);
    args[0] = "report";
    assert_eq!(code(&pdnprint(&args)), 0);
    assert!(rendered.join("verdict.svg").exists());

    let other = dir.path().join("other.s1p");
    pdnprint(&[
        "simulate",
        "--preset",
        "cw308-like",
        "--grid",
        "1e6,1e9,999",
        "--out",
        s(&other),
    ]);
    let mismatch = vec![s(&other).to_string()];
    assert_eq!(code(&pdnprint(&verify_args(g, &mismatch, &[]))), 3);

    let corrupt = dir.path().join("corrupt.golden");
    let mut bytes = std::fs::read(&golden).unwrap();
    bytes.truncate(bytes.len() / 2);
    std::fs::write(&corrupt, bytes).unwrap();
    assert_eq!(code(&pdnprint(&verify_args(s(&corrupt), &aged, &[]))), 3);
    assert_eq!(code(&pdnprint(&verify_args(g, &aged, &["--k", "-1"]))), 2);
}

fn mock(faults: impl FnOnce(&mut MockConfig)) -> MockServer {
    let m = PdnModel::preset("cw308-like").unwrap();
    let mut cfg = MockConfig::new(simulate_sweep(&m, &support::default_grid(), NoiseSpec::noiseless()));
    cfg.faults.noise_db = 0.05;
    faults(&mut cfg);
    MockServer::start(cfg).unwrap()
}

#[test]
fn acquire_writes_trials_and_manifest() {
    let server = mock(|_| {});
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("acq");
    let port = server.port().to_string();
    let o = pdnprint(&["acquire", "--host", "127.0.0.1", "--port", &port, "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let trials = manifest["trials"].as_array().unwrap();
    assert_eq!(trials.len(), 10);
    for t in trials {
        let bytes = std::fs::read(out.join(t["file"].as_str().unwrap())).unwrap();
        assert_eq!(t["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
    }
    assert_eq!(manifest["calibration"], "OSL 1-port");
    assert_eq!(server.sweep_count(), 10);
}

#[test]
fn failed_acquire_leaves_nothing_behind() {
    let dir = tempfile::tempdir().unwrap();
    let port = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port().to_string()
    };
    let out = dir.path().join("acq");
    let o = pdnprint(&[
        "acquire",
        "--host",
        "127.0.0.1",
        "--port",
        &port,
        "--timeout",
        "2",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 3);
    assert!(!out.exists());

    for fault in [
        (|c: &mut MockConfig| c.faults.fail_on_trial = Some(4)) as fn(&mut MockConfig),
        |c| c.faults.truncate_points = Some(4999),
        |c| c.faults.sweep_delay_ms = 2000,
        |c| c.faults.empty_identify = true,
    ] {
        let server = mock(fault);
        let port = server.port().to_string();
        let o = pdnprint(&[
            "acquire",
            "--host",
            "127.0.0.1",
            "--port",
            &port,
            "--timeout",
            "0.5",
            "--out",
            s(&out),
        ]);
        assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(!out.exists());
    }
}
