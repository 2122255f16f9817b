use std::fs;
use std::path::Path;
use std::process::Command;

use fdci_cli::{
    emit_table, from_json, parse_config, to_csv, CliError, ExperimentKind, Format, Overrides, RunConfig,
};
use fdci_core::experiments::ExperimentRecord;

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn with_file(path: std::path::PathBuf) -> Overrides {
    Overrides {
        config: Some(path),
        ..Overrides::default()
    }
}

fn record(scheme: &str, lambda1: f64, dl: Option<f64>) -> ExperimentRecord {
    ExperimentRecord {
        scheme: scheme.into(),
        lambda1,
        gamma_dl_db: 10.0,
        gamma_ul_db: 0.0,
        eps_h: 0.0,
        eps_f: 0.0,
        eps_g: 0.0,
        dl_power_db: dl,
        ul_power_db: dl.map(|v| v - 3.0),
        feasible_rate: if dl.is_some() { 1.0 } else { 0.0 },
        n_trials: 100,
        mean_solve_time_s: None,
    }
}

#[test]
fn minimal_file_gets_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.toml", "N = 9\nK = 6\nJ = 3\nexperiment = \"tradeoff\"\n");
    let cfg = parse_config(ExperimentKind::Tradeoff, &with_file(p)).unwrap();
    assert_eq!((cfg.n, cfg.k, cfg.j), (9, 6, 3));
    assert_eq!(cfg.gamma_dl_db, 10.0);
    assert_eq!(cfg.gamma_ul_db, 0.0);
    assert_eq!(cfg.n_trials, 100);
    assert_eq!(cfg.seed, 0);
    let sys = cfg.system().unwrap();
    assert_eq!(sys.gamma_dl[0], 10f64.powf(1.0));
    assert_eq!(sys.gamma_ul[0], 1.0);
}

#[test]
fn more_uplink_users_than_antennas_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.toml", "N = 2\nK = 2\nJ = 3\n");
    let err = parse_config(ExperimentKind::Tradeoff, &with_file(p)).unwrap_err();
    assert!(matches!(err, CliError::Config(_)));
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("ZF requires J ≤ N"), "{err}");
}

#[test]
fn unknown_keys_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.toml", "N = 4\n[grids]\nlambdas = [0.5]\n");
    let err = parse_config(ExperimentKind::Tradeoff, &with_file(p)).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("lambdas"), "{err}");
}

#[test]
fn missing_file_is_a_config_error() {
    let err = parse_config(ExperimentKind::Ser, &with_file("/nonexistent/fdci.toml".into())).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.toml", "gamma_dl_db = 10.0\nseed = 4\n");
    let o = Overrides {
        gamma_dl_db: Some(5.0),
        ..with_file(p)
    };
    let cfg = parse_config(ExperimentKind::SinrSweep, &o).unwrap();
    assert_eq!(cfg.gamma_dl_db, 5.0);
    assert_eq!(cfg.seed, 4);
}

#[test]
fn config_round_trips_through_toml() {
    let cfg = RunConfig::default();
    assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
}

#[test]
fn two_records_make_three_csv_lines() {
    let recs = [record("p3", 0.5, Some(12.345678)), record("p6", 0.5, None)];
    let csv = to_csv(&recs, None);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(!csv.contains('\r'));
    assert_eq!(
        lines[0],
        "scheme,lambda1,gamma_dl_db,gamma_ul_db,eps_h,eps_f,eps_g,dl_power_db,ul_power_db,feasible_rate,n_trials,mean_solve_time_s"
    );
    assert_eq!(lines[1], "p3,0.5,10,0,0,0,0,12.3457,9.34568,1,100,");
    assert_eq!(lines[2], "p6,0.5,10,0,0,0,0,,,0,100,");
}

#[test]
fn json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let recs = vec![record("p3", 0.25, Some(1.0 / 3.0)), record("p6", 0.75, None)];
    let cfg = RunConfig {
        seed: 17,
        ..RunConfig::default()
    };
    let path = dir.path().join("t.json");
    emit_table(&recs, Format::Json, &path, &cfg, true).unwrap();
    let doc = from_json::<ExperimentRecord>(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc.records, recs);
    assert_eq!(doc.seed, 17);
    assert_eq!(doc.config, cfg);
}

#[test]
fn unwritable_path_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = write(dir.path(), "file", "");
    let err = emit_table(&[record("p3", 0.0, None)], Format::Csv, &blocker.join("x.csv"), &RunConfig::default(), false)
        .unwrap_err();
    assert!(matches!(err, CliError::Write(..)));
}

fn fdci(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fdci")).args(args).output().unwrap()
}

#[test]
fn reruns_write_byte_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "N = 4\nK = 2\nJ = 1\nn_trials = 2\nseed = 3\n[grids]\nlambda = [0.0, 0.5, 1.0]\n",
    );
    let outs: Vec<_> = ["a", "b"]
        .iter()
        .map(|d| {
            let cwd = dir.path().join(d);
            fs::create_dir(&cwd).unwrap();
            let o = Command::new(env!("CARGO_BIN_EXE_fdci"))
                .args(["tradeoff", "-c", cfg.to_str().unwrap(), "--out", "out"])
                .current_dir(&cwd)
                .output()
                .unwrap();
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            cwd.join("out")
        })
        .collect();
    for name in ["tradeoff.csv", "tradeoff.json", "tradeoff_savings.csv", "tradeoff_savings.json"] {
        let a = fs::read(outs[0].join(name)).unwrap();
        assert_eq!(a, fs::read(outs[1].join(name)).unwrap(), "{name}");
        let a = String::from_utf8(a).unwrap();
        assert!(a.contains("seed"));
    }
}

#[test]
fn exit_codes() {
    assert_eq!(fdci(&["tradeoff", "--n", "2", "--j", "3"]).status.code(), Some(2));
    assert_eq!(fdci(&["tradeoff", "--modulation", "9qam"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    // Error balls larger than any channel contain h = 0.
    let cfg = write(dir.path(), "c.toml", "[grids]\ngamma_dl_db = [10.0]\neps = [10.0]\n");
    let all_bad = fdci(&[
        "robust-sweep",
        "-c",
        cfg.to_str().unwrap(),
        "--n",
        "2",
        "--k",
        "2",
        "--j",
        "1",
        "--trials",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(all_bad.status.code(), Some(3), "{}", String::from_utf8_lossy(&all_bad.stderr));
    let ok = fdci(&["complexity", "--out", out.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));
}
