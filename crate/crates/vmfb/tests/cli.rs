use std::path::Path;
use std::process::{Command, Output};

use vmfb::output::TRACE_COLUMNS;

fn vmfb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vmfb")).args(args).output().unwrap()
}

fn run(config: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--config", config, "--out-dir", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    vmfb(&args)
}

fn summary(out: &Path) -> toml::Table {
    std::fs::read_to_string(out.join("summary.toml"))
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn halfspace_projection_converges() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("halfspace_projection.cfg", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(dir.path());
    assert_eq!(s["converged"].as_bool(), Some(true));
    assert!(s["final_residual"].as_float().unwrap() <= 1e-8);
    assert!(s["distance_to_reference"].as_float().unwrap() <= 1e-7);
    assert!(s["wall_time_s"].as_float().is_some());
    assert!(s["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["passed"].as_bool() == Some(true)));
}

#[test]
fn strict_refusal_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("gamma_out_of_range", dir.path(), &["--strict"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("trace.csv").exists());
    assert!(!dir.path().join("summary.toml").exists());
}

#[test]
fn warn_mode_runs_past_failed_hypotheses() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("gamma_out_of_range", dir.path(), &["--warn"]);
    assert_ne!(o.status.code(), Some(2));
    assert_eq!(summary(dir.path())["validation_passed"].as_bool(), Some(false));
}

#[test]
fn divergent_run_keeps_a_partial_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("divergent_warn", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(3));
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let rows = trace.lines().count() - 1;
    assert!(rows > 1 && rows < 10_000, "{rows} rows");
    assert_eq!(summary(dir.path())["termination"].as_str(), Some("diverged"));
}

#[test]
fn max_iterations_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("lasso_dim10", dir.path(), &["--max-iter-override", "5"]);
    assert_eq!(o.status.code(), Some(4));
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 6);
}

#[test]
fn traces_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run("lasso_inexact", a.path(), &[]).status.code(), Some(0));
    assert_eq!(run("lasso_inexact", b.path(), &[]).status.code(), Some(0));
    let ta = std::fs::read(a.path().join("trace.csv")).unwrap();
    let tb = std::fs::read(b.path().join("trace.csv")).unwrap();
    assert_eq!(ta, tb);
}

#[test]
fn seed_override_changes_random_data() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run("lasso_dim10", a.path(), &[]);
    run("lasso_dim10", b.path(), &["--seed", "8"]);
    let sa = summary(a.path());
    let sb = summary(b.path());
    assert_eq!(sb["seed"].as_integer(), Some(8));
    assert_ne!(sa["solution"], sb["solution"]);
}

#[test]
fn trace_csv_is_lossless() {
    let dir = tempfile::tempdir().unwrap();
    run("composite_elastic", dir.path(), &[]);
    let mut r = csv::Reader::from_path(dir.path().join("trace.csv")).unwrap();
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), TRACE_COLUMNS);
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec.unwrap();
        assert_eq!(rec[0].parse::<usize>().unwrap(), rows);
        for field in rec.iter().skip(1).take(6) {
            if field.is_empty() {
                continue;
            }
            let v: f64 = field.parse().unwrap();
            assert_eq!(vmfb::output::fmt_f64(v), field);
            let mantissa = field.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.len(), 18, "{field}");
        }
        rows += 1;
    }
    assert!(rows > 1);
}

#[test]
fn validate_reports_each_hypothesis() {
    let o = vmfb(&["validate", "--config", "strongly_convex"]);
    assert_eq!(o.status.code(), Some(0));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.lines().filter(|l| l.starts_with("[pass]")).count() >= 5, "{out}");
    assert!(!out.contains("[FAIL]"));
}

#[test]
fn understated_mu_names_the_offending_index() {
    let o = vmfb(&["validate", "--config", "mu_understated"]);
    assert_eq!(o.status.code(), Some(2));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("[FAIL] metric bound") && out.contains("‖U_3‖"), "{out}");
}

#[test]
fn infeasible_scaling_is_reported() {
    let o = vmfb(&["validate", "--config", "infeasible_scaling"]);
    assert_eq!(o.status.code(), Some(2));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(
        out.contains("infeasible scaling at n = 0") && out.contains("δ_n"),
        "{out}"
    );
}

#[test]
fn list_fixtures_names_every_bundled_config() {
    let o = vmfb(&["list-fixtures"]);
    assert_eq!(o.status.code(), Some(0));
    let out = String::from_utf8_lossy(&o.stdout);
    for (name, _) in vmfb::fixtures::BUNDLED {
        assert!(out.contains(name), "{name}");
    }
}

#[test]
fn bad_config_path_exits_one() {
    let o = vmfb(&["validate", "--config", "/nonexistent/exp.cfg"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn every_bundled_experiment_runs() {
    // expected exit codes: 0 converged, 2 refused, 3 diverged, 4 iteration budget
    let expected = [
        ("halfspace_projection", 0),
        ("lasso_dim10", 0),
        ("lasso_inexact", 0),
        ("box_vi_dim5", 0),
        ("fixed_metric", 0),
        ("strongly_convex", 0),
        ("best_approximation", 0),
        ("composite_elastic", 0),
        ("infeasible_best_approximation", 4),
        ("gamma_out_of_range", 2),
        ("divergent_warn", 3),
        ("mu_understated", 2),
        ("infeasible_scaling", 2),
    ];
    assert_eq!(expected.len(), vmfb::fixtures::BUNDLED.len());
    for (name, code) in expected {
        let dir = tempfile::tempdir().unwrap();
        let o = run(name, dir.path(), &[]);
        assert_eq!(
            o.status.code(),
            Some(code),
            "{name}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}
