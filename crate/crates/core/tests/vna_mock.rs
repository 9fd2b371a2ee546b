mod support;

use std::net::TcpListener;
use std::path::Path;
use std::time::{Duration, Instant};

use pdnprint::pdn::{simulate_sweep, NoiseSpec, PdnModel};
use pdnprint::rf::{ComplexTrace, FrequencyGrid};
use pdnprint::touchstone::{write_touchstone, DataFormat, TouchstoneNetwork, TouchstoneOptions};
use pdnprint::vna::{
    acquire_sweep, identify, repeat_acquire, InstrumentEndpoint, MockConfig, MockServer, SweepConfig, VnaClient,
    VnaError,
};

fn reference_trace() -> ComplexTrace {
    let m = PdnModel::preset("cw308-like").unwrap();
    simulate_sweep(&m, &support::default_grid(), NoiseSpec::new(0.05, 5).unwrap())
}

fn endpoint(server: &MockServer, timeout: Duration) -> InstrumentEndpoint {
    InstrumentEndpoint::new("127.0.0.1", server.port(), timeout).unwrap()
}

fn write_s1p(dir: &Path, trace: &ComplexTrace) -> std::path::PathBuf {
    let net = TouchstoneNetwork::one_port(trace, TouchstoneOptions::hz_s(DataFormat::Ri, 50.0), vec![]);
    let path = dir.join("sweep.s1p");
    std::fs::write(&path, write_touchstone(&net, DataFormat::Ri)).unwrap();
    path
}

#[test]
fn loopback_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let trace = reference_trace();
    write_s1p(dir.path(), &trace);
    let cfg_path = dir.path().join("mock.toml");
    std::fs::write(&cfg_path, "id = \"ACME,VNA-1,42,1.0\"\ntouchstone = \"sweep.s1p\"\n").unwrap();
    let server = MockServer::start(MockConfig::load(&cfg_path).unwrap()).unwrap();
    let ep = endpoint(&server, Duration::from_secs(10));
    assert_eq!(identify(&ep).unwrap(), "ACME,VNA-1,42,1.0");
    let got = acquire_sweep(&ep, &SweepConfig::default()).unwrap();
    assert_eq!(got, trace);
    assert_eq!(got.grid(), &FrequencyGrid::linear(1e6, 1e9, 5000).unwrap());
}

#[test]
fn wire_transcript_is_locked() {
    let server = MockServer::start(MockConfig::new(reference_trace())).unwrap();
    let mut client = VnaClient::connect(&endpoint(&server, Duration::from_secs(10))).unwrap();
    client.identify().unwrap();
    client.calibration_state().unwrap();
    client.acquire(&SweepConfig::default()).unwrap();
    drop(client);
    let golden = include_str!("data/acquire_default.transcript");
    assert_eq!(server.transcript_text(), golden);
}

#[test]
fn truncated_data_is_a_length_mismatch() {
    let mut cfg = MockConfig::new(reference_trace());
    cfg.faults.truncate_points = Some(4999);
    let server = MockServer::start(cfg).unwrap();
    let err = acquire_sweep(&endpoint(&server, Duration::from_secs(10)), &SweepConfig::default()).unwrap_err();
    assert!(
        matches!(
            err,
            VnaError::DataLengthMismatch {
                expected: 5000,
                received: 4999
            }
        ),
        "{err}"
    );
}

#[test]
fn slow_sweep_times_out_within_bound() {
    let mut cfg = MockConfig::new(reference_trace());
    cfg.faults.sweep_delay_ms = 3000;
    let server = MockServer::start(cfg).unwrap();
    let timeout = Duration::from_millis(400);
    let t0 = Instant::now();
    let err = acquire_sweep(&endpoint(&server, timeout), &SweepConfig::default()).unwrap_err();
    assert!(matches!(err, VnaError::SweepTimeout(_)), "{err}");
    assert!(
        t0.elapsed() < timeout + Duration::from_millis(500),
        "{:?}",
        t0.elapsed()
    );
}

#[test]
fn dropped_fetch_is_retried_once() {
    let trace = reference_trace();
    let mut cfg = MockConfig::new(trace.clone());
    cfg.faults.drop_data_responses = 1;
    let server = MockServer::start(cfg).unwrap();
    let got = acquire_sweep(&endpoint(&server, Duration::from_secs(10)), &SweepConfig::default()).unwrap();
    assert_eq!(got, trace);
    let fetches = server.transcript().iter().filter(|l| *l == "CALC:DATA? SDATA").count();
    assert_eq!(fetches, 2);

    let mut cfg = MockConfig::new(trace);
    cfg.faults.drop_data_responses = 2;
    let server = MockServer::start(cfg).unwrap();
    assert!(acquire_sweep(&endpoint(&server, Duration::from_secs(10)), &SweepConfig::default()).is_err());
}

#[test]
fn closed_port_is_a_connect_timeout() {
    let port = {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let ep = InstrumentEndpoint::new("127.0.0.1", port, Duration::from_secs(2)).unwrap();
    assert!(matches!(identify(&ep).unwrap_err(), VnaError::ConnectTimeout { .. }));
}

#[test]
fn empty_identification_is_a_protocol_error() {
    let mut cfg = MockConfig::new(reference_trace());
    cfg.faults.empty_identify = true;
    let server = MockServer::start(cfg).unwrap();
    let err = identify(&endpoint(&server, Duration::from_secs(2))).unwrap_err();
    assert!(matches!(err, VnaError::ProtocolError(_)), "{err}");
}

#[test]
fn silent_instrument_is_a_protocol_error_within_bound() {
    // A listener that accepts but never answers.
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    let hold = std::thread::spawn(move || {
        let (s, _) = listener.accept().unwrap();
        std::thread::sleep(Duration::from_secs(2));
        drop(s);
    });
    let timeout = Duration::from_millis(300);
    let t0 = Instant::now();
    let err = identify(&InstrumentEndpoint::new("127.0.0.1", port, timeout).unwrap()).unwrap_err();
    assert!(matches!(err, VnaError::ProtocolError(_)), "{err}");
    assert!(t0.elapsed() < timeout + Duration::from_millis(500));
    hold.join().unwrap();
}

#[test]
fn repeated_trials_with_noise() {
    let mut cfg = MockConfig::new(reference_trace());
    cfg.faults.noise_db = 0.05;
    cfg.faults.noise_seed = 3;
    let server = MockServer::start(cfg).unwrap();
    let ep = endpoint(&server, Duration::from_secs(10));
    let one = repeat_acquire(&ep, &SweepConfig::default(), 1).unwrap();
    assert_eq!(one.trials().len(), 1);
    let rec = repeat_acquire(&ep, &SweepConfig::default(), 10).unwrap();
    assert_eq!(rec.trials().len(), 10);
    for (i, a) in rec.trials().iter().enumerate() {
        assert_eq!(a.grid(), rec.grid());
        for b in &rec.trials()[i + 1..] {
            assert_ne!(a.values_db(), b.values_db());
        }
    }
}

#[test]
fn failure_names_the_trial() {
    let mut cfg = MockConfig::new(reference_trace());
    cfg.faults.fail_on_trial = Some(7);
    let server = MockServer::start(cfg).unwrap();
    let err = repeat_acquire(&endpoint(&server, Duration::from_secs(10)), &SweepConfig::default(), 10).unwrap_err();
    assert!(matches!(err, VnaError::Trial { trial: 7, .. }), "{err}");
    assert!(err.to_string().contains("trial 7"));
}

#[test]
fn custom_dialect() {
    let mut cfg = MockConfig::new(reference_trace());
    cfg.commands.trigger = "INIT1:IMM".into();
    cfg.commands.sweep_data = "CALC1:DATA? SDATA".into();
    let commands = cfg.commands.clone();
    let server = MockServer::start(cfg).unwrap();
    let got = VnaClient::connect(&endpoint(&server, Duration::from_secs(10)))
        .unwrap()
        .with_commands(commands)
        .acquire(&SweepConfig::default())
        .unwrap();
    assert_eq!(got, reference_trace());
    assert!(server.transcript().contains(&"INIT1:IMM".to_string()));
}
