use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use licm_cli::output::{metrics_csv, read_metrics_csv, write_metrics_csv};
use licm_cli::presets;
use licm_cli::{execute, ExperimentFile, RunSpec};
use licm_core::{Attack, MetricsRow, Rule};

fn licm(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_licm"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = "
task = quadratic
dim = 4
noise_std = 0.1
workers = 8
byzantine = 0, 2
attack = gaussian
aggregators = mean, licm
schedule = polynomial
iterations = 40
eval_every = 5
seeds = 3
";

#[test]
fn fig2_preset_matches_protocol() {
    let tmp = tempfile::tempdir().unwrap();
    let out = licm(&["preset", "fig2-mlr-mnist-q8"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let file: ExperimentFile = String::from_utf8(out.stdout).unwrap().parse().unwrap();
    let specs = file.expand().unwrap();
    let rules: Vec<&str> = specs.iter().map(|s| s.rule.name()).collect();
    assert_eq!(rules, ["mean", "coormed", "trimmed_mean", "krum", "licm"]);
    for s in &specs {
        assert_eq!((s.workers, s.byzantine), (40, 8));
        assert!(matches!(s.attack, Some(Attack::Omniscient { .. })));
    }
    assert_eq!(specs[3].rule, Rule::Krum { q: 8 });
    assert!(matches!(specs[4].rule, Rule::Licm { gamma, .. } if gamma == 10.0));
}

#[test]
fn every_preset_expands() {
    for name in presets::names() {
        let specs = presets::preset(name).unwrap().parse::<ExperimentFile>().unwrap().expand().unwrap();
        assert!(!specs.is_empty(), "{name}");
        assert!(specs.iter().all(|s| s.workers == 40 || s.workers == 16), "{name}");
    }
    let sweep = presets::preset("fig6-gamma-sweep").unwrap().parse::<ExperimentFile>().unwrap();
    let qs: Vec<usize> = sweep.expand().unwrap().iter().map(|s| s.byzantine).collect();
    assert_eq!(qs, [0, 8, 12, 18]);
}

#[test]
fn preset_listing_and_unknown_name() {
    let tmp = tempfile::tempdir().unwrap();
    let list = licm(&["preset"], tmp.path());
    assert!(String::from_utf8_lossy(&list.stdout).contains("quad-convergence-desk"));
    let bad = licm(&["preset", "nope"], tmp.path());
    assert!(!bad.status.success());
    assert!(stderr(&bad).contains("no preset named"));
}

#[test]
fn validate_names_the_failing_precondition() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.exp");
    fs::write(&cfg, "task = quadratic\nworkers = 5\nbyzantine = 3\nattack = gaussian\naggregators = krum\niterations = 10\n").unwrap();
    let out = licm(&["validate", "bad.exp"], tmp.path());
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("Krum") && err.contains("m >= q + 3"), "{err}");

    fs::write(&cfg, "task = quadratic\nworkers = lots\n").unwrap();
    let out = licm(&["validate", "bad.exp"], tmp.path());
    assert!(!out.status.success());
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn validate_lists_the_grid() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("small.exp"), SMALL).unwrap();
    let out = licm(&["validate", "small.exp", "--output-dir", "o"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 4);
    assert!(stdout.contains("licm-g10_q2_gaussian200_s3  pending"), "{stdout}");
    assert!(!tmp.path().join("o").exists(), "validate must not execute anything");
}

#[test]
fn second_run_does_no_work() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("small.exp"), SMALL).unwrap();
    let first = licm(&["run", "small.exp", "--output-dir", "o"], tmp.path());
    assert!(first.status.success(), "{}", stderr(&first));
    let metrics = tmp.path().join("o/licm-g10_q2_gaussian200_s3/metrics.csv");
    let before = fs::metadata(&metrics).unwrap().modified().unwrap();

    let second = licm(&["run", "small.exp", "--output-dir", "o"], tmp.path());
    assert!(second.status.success());
    assert_eq!(stderr(&second).matches("already complete").count(), 4);
    assert!(second.stdout.is_empty());
    assert_eq!(fs::metadata(&metrics).unwrap().modified().unwrap(), before);
}

#[test]
fn identical_runs_and_echo_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("small.exp"), SMALL).unwrap();
    for dir in ["a", "b"] {
        let out = licm(&["run", "small.exp", "--output-dir", dir, "--quiet", "--threads", "2"], tmp.path());
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let run = "licm-g10_q2_gaussian200_s3";
    let a = fs::read(tmp.path().join("a").join(run).join("metrics.csv")).unwrap();
    let b = fs::read(tmp.path().join("b").join(run).join("metrics.csv")).unwrap();
    assert_eq!(a, b);

    let echo = tmp.path().join("a").join(run).join("config.exp");
    let out = licm(&["run", echo.to_str().unwrap(), "--output-dir", "c", "--quiet"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let c = fs::read(tmp.path().join("c").join(run).join("metrics.csv")).unwrap();
    assert_eq!(a, c);
}

#[test]
fn seed_override_replaces_the_seed_list() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("small.exp"), SMALL).unwrap();
    let out = licm(&["validate", "small.exp", "--seed-override", "99"], tmp.path());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().all(|l| l.contains("_s99")), "{stdout}");
}

fn small_spec() -> RunSpec {
    SMALL.parse::<ExperimentFile>().unwrap().expand().unwrap().remove(3)
}

#[test]
fn metrics_file_shape_and_exact_reread() {
    let spec = small_spec();
    assert!(matches!(spec.rule, Rule::Licm { .. }));
    let (result, _) = execute(&spec, None).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("m.csv");
    write_metrics_csv(&result, &path).unwrap();

    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), result.rows.len() + 1);
    let back = read_metrics_csv(&path).unwrap();
    let strip = |r: &MetricsRow| MetricsRow {
        sigma_hat: None,
        ..r.clone()
    };
    let expected: Vec<MetricsRow> = result.rows.iter().map(strip).collect();
    assert_eq!(back, expected);
    for (b, e) in back.iter().zip(&expected) {
        assert_eq!(b.loss.map(f64::to_bits), e.loss.map(f64::to_bits));
        assert_eq!(b.grad_norm.map(f64::to_bits), e.grad_norm.map(f64::to_bits));
    }
    assert!(back.iter().all(|r| r.accuracy.is_none()), "quadratic runs have no accuracy");
}

#[test]
fn three_rows_make_four_lines() {
    let rows: Vec<MetricsRow> = (0..3)
        .map(|k| MetricsRow {
            k,
            loss: Some(1.0 / (k as f64 + 3.0)),
            ..MetricsRow::default()
        })
        .collect();
    let text = String::from_utf8(metrics_csv(&rows).unwrap()).unwrap();
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn mlr_from_csv_reports_accuracy() {
    let tmp = tempfile::tempdir().unwrap();
    let mut train = String::from("label,x0,x1\n");
    for i in 0..60 {
        let (x0, x1) = ((i % 7) as f64 / 7.0, (i % 5) as f64 / 5.0);
        train.push_str(&format!("{},{x0},{x1}\n", usize::from(x0 > x1)));
    }
    fs::write(tmp.path().join("train.csv"), &train).unwrap();
    fs::write(tmp.path().join("test.csv"), &train).unwrap();
    let cfg = "task = mlr\ntrain_csv = train.csv\ntest_csv = test.csv\nbatch_size = 8\n\
               workers = 6\nbyzantine = 1\nattack = gaussian\naggregators = coormed\n\
               eta0 = 0.5\niterations = 200\neval_every = 50\noutput_dir = o\n";
    fs::write(tmp.path().join("m.exp"), cfg).unwrap();
    let out = licm(&["run", "m.exp", "--quiet"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_metrics_csv(&tmp.path().join("o/coormed_q1_gaussian200_s0/metrics.csv")).unwrap();
    let acc = rows.last().unwrap().accuracy.unwrap();
    assert!(acc > 0.6, "accuracy {acc}");
}

#[test]
fn bench_agg_prints_a_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = licm(&["bench-agg", "--dim", "64", "--workers", "10,20", "--rules", "licm,krum(2)", "--reps", "1"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 5);
    assert!(stdout.contains("krum(2)"));
}
