use clap::Parser;
use jc_pcs::cli::config::{GridSpec, Mode, RunConfig};
use jc_pcs::cli::run::{compute, write_artifacts, Artifact};
use jc_pcs::cli::{parse_config, run, Args, ConfigError, RunError};

fn args(list: &[&str]) -> Args {
    Args::try_parse_from(std::iter::once("jc-pcs").chain(list.iter().copied())).unwrap()
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    std::fs::write(&path, "# test\nmode = peak\ndelta_grid = 0:1:0.5\nseed = 4\n").unwrap();
    let cfg =
        args(&["--config", path.to_str().unwrap(), "--delta-grid", "2.2:2.6:0.002", "--set", "e1=0.25", "--seed", "9"])
            .resolve()
            .unwrap();
    assert_eq!(cfg.mode, Mode::Peak);
    assert_eq!(cfg.delta_grid, GridSpec::Segments(vec![(2.2, 2.6, 0.002)]));
    assert_eq!((cfg.e1, cfg.seed), (0.25, 9));
}

#[test]
fn config_errors_name_the_key() {
    let cases: [(&str, &str); 4] = [
        ("n_max = banana", "n_max"),
        ("bogus = 1", "bogus"),
        ("mode = reproduce-figure", "figure"),
        ("distribution = file", "dist_file"),
    ];
    for (text, key) in cases {
        let err = parse_config(text, &[]).unwrap_err();
        assert_eq!(err.key(), Some(key), "{text}: {err}");
    }
    assert!(matches!(parse_config("preset = no-such", &[]), Err(ConfigError::Invalid { .. })));
    assert!(matches!(parse_config("just words", &[]), Err(ConfigError::Syntax { line: 1, .. })));
}

#[test]
fn output_header_reparses_to_same_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    for (k, v) in [("mode", "pg-dist"), ("n_positions", "20000"), ("n_bins", "12"), ("cutoff", "0.6"), ("seed", "77")] {
        cfg.set(k, v).unwrap();
    }
    cfg.out = dir.path().join("o");
    let outcome = run(&cfg).unwrap();
    let text = std::fs::read_to_string(&outcome.files[0]).unwrap();
    assert_eq!(RunConfig::from_echo(&text).unwrap(), cfg);
    assert_eq!(parse_config(&text, &[]).unwrap(), cfg);
}

#[test]
fn same_config_same_bytes() {
    let cfg = parse_config(
        "mode = scan-2pcr\ndistribution = mask\nn_positions = 20000\nn_bins = 4\ndelta_grid = 2.3:2.5:0.05",
        &[],
    )
    .unwrap();
    let a = compute(&cfg).unwrap();
    let b = compute(&RunConfig { threads: 1, ..cfg.clone() }).unwrap();
    assert_eq!(a.len(), 1);
    assert_eq!(a[0].contents, b[0].contents.replace("threads = 1", "threads = 0"));
    assert_eq!(a, compute(&cfg).unwrap());
}

#[test]
fn figure_three_reports_recentering() {
    let cfg = parse_config("mode = reproduce-figure\nfigure = 3\ndelta_grid = 2.2:2.65:0.005", &[]).unwrap();
    let files = compute(&cfg).unwrap();
    let names: Vec<&str> = files.iter().map(|a| a.name.as_str()).collect();
    assert_eq!(names, ["fig3-none.dat", "fig3-no-1m-2m.dat", "summary.txt"]);
    let summary = &files[2].contents;
    let shift = |label: &str| -> f64 {
        let line = summary.lines().find(|l| l.starts_with(label)).unwrap();
        line.split_whitespace().nth(1).unwrap().parse().unwrap()
    };
    assert!(shift("fig3-none ") < -0.01);
    assert!(shift("fig3-no-1m-2m ").abs() < 0.005);
}

#[test]
fn failed_write_leaves_nothing_behind() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("new");
    let artifacts = vec![
        Artifact { name: "a.dat".into(), contents: "1\n".into() },
        Artifact { name: "missing/b.dat".into(), contents: "2\n".into() },
    ];
    let err = write_artifacts(&out, &artifacts).unwrap_err();
    assert!(matches!(err, RunError::Io { .. }));
    assert!(!out.exists());
}

#[test]
fn solver_failure_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let cfg = parse_config(
        &format!("distribution = delta\nharmonic_tolerance = 1e-14\ndelta_grid = 2.3:2.5:0.1\nout = {}", out.display()),
        &[],
    )
    .unwrap();
    let err = run(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(!out.exists());
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_jc-pcs");
    let status = std::process::Command::new(bin).args(["--set", "n_max=banana"]).output().unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("n_max"));
}
