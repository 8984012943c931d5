use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn ravine(args: &[&str], config: &Value, dir: &TempDir) -> (Output, PathBuf) {
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, serde_json::to_string_pretty(config).unwrap()).unwrap();
    let out = dir.path().join("out");
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ravine"));
    let (sub, flags) = args.split_first().unwrap();
    cmd.arg(sub).arg(&cfg).arg("--out").arg(&out).args(flags);
    (cmd.output().unwrap(), out)
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn verdict<'a>(rep: &'a Value, run: &str, check: &str) -> &'a Value {
    rep["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .find(|v| v["run"] == run && v["check"] == check)
        .unwrap_or_else(|| panic!("no verdict {run}/{check}"))
}

fn cond100(solvers: Value) -> Value {
    json!({ "problem": { "kind": "ill_conditioned", "condition": 100.0 }, "solvers": solvers })
}

#[test]
fn minimal_run_writes_one_csv_with_the_plain_header() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "problem": { "kind": "quadratic", "matrix": [[1.0]], "offset": [0.0] },
        "solvers": [{ "name": "nag", "step": 0.5, "max_iter": 50 }]
    });
    let (o, out) = ravine(&["run"], &cfg, &dir);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("nag.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "k,x0,y0,gap,grad_norm,step_norm,E");
    assert_eq!(csv.lines().count(), 52);
    let csvs = std::fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv"))
        .count();
    assert_eq!(csvs, 1);
}

#[test]
fn values_carry_seventeen_significant_digits() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "problem": { "kind": "quadratic", "matrix": [[1.0]], "offset": [0.0] },
        "solvers": [{ "name": "nag", "step": 0.3, "max_iter": 5 }]
    });
    let (o, out) = ravine(&["run"], &cfg, &dir);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(out.join("nag.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(3).unwrap().split(',').collect();
    let mantissa = row[1].split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17, "{}", row[1]);
    let x: f64 = row[1].parse().unwrap();
    assert_eq!(format!("{x:.16e}"), row[1]);
}

#[test]
fn step_above_one_over_l_is_a_config_error_unless_forced() {
    let dir = TempDir::new().unwrap();
    let cfg = cond100(json!([{ "name": "nag", "step_lipschitz": 1.5, "max_iter": 20 }]));
    let (o, out) = ravine(&["run"], &cfg, &dir);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("step.lipschitz"), "{}", stderr(&o));
    assert!(!out.join("report.json").exists());

    let (o, out) = ravine(&["run", "--force"], &cfg, &dir);
    assert_ne!(code(&o), 1, "{}", stderr(&o));
    assert!(out.join("nag.csv").exists());
}

#[test]
fn equivalence_residuals_are_reported_and_tiny() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "problem": { "kind": "random_psd", "dimension": 10, "condition": 50.0, "seed": 7 },
        "solvers": [{ "name": "nag", "max_iter": 500 }, { "name": "rag", "alpha": 3.5, "max_iter": 500 }],
        "diagnostics": { "equivalence": true }
    });
    let (o, out) = ravine(&["run"], &cfg, &dir);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let rep = report(&out);
    for run in rep["runs"].as_array().unwrap() {
        let eq = &run["equivalence"];
        let bound = 1e-11 * (1.0 + eq["max_iterate_norm"].as_f64().unwrap());
        assert!(eq["nag_to_rag"].as_f64().unwrap() <= bound);
        assert!(eq["rag_to_nag"].as_f64().unwrap() <= bound);
    }
    assert_eq!(verdict(&rep, "rag", "equivalence")["status"], "pass");
}

#[test]
fn report_has_exactly_the_three_top_level_keys() {
    let dir = TempDir::new().unwrap();
    let cfg = cond100(json!([{ "name": "gd", "max_iter": 30 }]));
    let (_, out) = ravine(&["run"], &cfg, &dir);
    let rep = report(&out);
    let mut keys: Vec<&String> = rep.as_object().unwrap().keys().collect();
    keys.sort();
    assert_eq!(keys, ["config_hash", "runs", "verdicts"]);
    assert!(rep["config_hash"].as_str().unwrap().starts_with("sha256:"));
}

#[test]
fn config_hash_ignores_key_order_and_whitespace() {
    let a = ravine_cli::config::ExperimentConfig::parse(
        r#"{"problem":{"kind":"zero","dimension":2},"solvers":[{"name":"gd"}]}"#,
    )
    .unwrap()
    .1;
    let b = ravine_cli::config::ExperimentConfig::parse(
        "{ \"solvers\": [ {\"name\": \"gd\"} ],\n  \"problem\": {\"dimension\": 2, \"kind\": \"zero\"} }",
    )
    .unwrap()
    .1;
    assert_eq!(a, b);
}

#[test]
fn unknown_keys_are_named_in_the_error() {
    let dir = TempDir::new().unwrap();
    let cfg = cond100(json!([{ "name": "nag", "stepsize": 0.01 }]));
    let (o, _) = ravine(&["run"], &cfg, &dir);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("stepsize"), "{}", stderr(&o));

    let cfg = cond100(json!([{ "name": "nesterov" }]));
    let (o, _) = ravine(&["run"], &cfg, &dir);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("solvers[0].name"), "{}", stderr(&o));
}

#[test]
fn smooth_schemes_reject_a_nonsmooth_g_before_running() {
    let dir = TempDir::new().unwrap();
    let mut cfg = cond100(json!([{ "name": "nag", "max_iter": 10 }]));
    cfg["g"] = json!({ "kind": "l1", "lambda": 0.1 });
    let (o, out) = ravine(&["run"], &cfg, &dir);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("solvers[0]"), "{}", stderr(&o));
    assert!(!out.join("report.json").exists());
}

#[test]
fn compare_nag_and_rag_on_the_condition_100_quadratic_passes() {
    let dir = TempDir::new().unwrap();
    let mut cfg = cond100(json!([
        { "name": "nag", "step_lipschitz": 0.9, "max_iter": 10000 },
        { "name": "rag", "step_lipschitz": 0.9, "max_iter": 10000 },
        { "name": "nag", "label": "nag4", "alpha": 4.0, "step_lipschitz": 0.9, "max_iter": 10000 },
        { "name": "rag", "label": "rag4", "alpha": 4.0, "step_lipschitz": 0.9, "max_iter": 10000 }
    ]));
    cfg["diagnostics"] = json!({ "summability": true, "min_grad": true });
    let (o, out) = ravine(&["compare"], &cfg, &dir);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    assert!(stdout.starts_with("label"));
    let rep = report(&out);
    for run in ["nag", "rag", "nag4", "rag4"] {
        assert_eq!(verdict(&rep, run, "energy_monotone")["status"], "pass", "{run}");
        assert_eq!(verdict(&rep, run, "equivalence")["status"], "pass", "{run}");
        assert_eq!(verdict(&rep, run, "summability_k2_grad2")["status"], "pass", "{run}");
    }
    assert!(rep["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .all(|v| v["status"] != "fail"));
}

#[test]
fn compare_needs_two_solvers() {
    let dir = TempDir::new().unwrap();
    let cfg = cond100(json!([{ "name": "nag", "max_iter": 10 }]));
    let (o, _) = ravine(&["compare"], &cfg, &dir);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("solvers"));
}

#[test]
fn hessian_damping_oscillates_less_than_nag() {
    let dir = TempDir::new().unwrap();
    let cfg = cond100(json!([
        { "name": "nag", "alpha": 3.1, "step_lipschitz": 1.0, "max_iter": 2000 },
        { "name": "igahd", "alpha": 3.1, "beta": 1.0, "step_lipschitz": 1.0, "max_iter": 2000, "force": true }
    ]));
    let (o, out) = ravine(&["compare"], &cfg, &dir);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let rep = report(&out);
    let v = verdict(&rep, "compare", "oscillations igahd < nag");
    assert_eq!(v["status"], "pass");
    assert!(v["measured"].as_f64().unwrap() < v["threshold"].as_f64().unwrap());
}

#[test]
fn beta_outside_range_needs_force() {
    let dir = TempDir::new().unwrap();
    let cfg = cond100(json!([{ "name": "igahd", "beta": 1.0, "max_iter": 10 }]));
    let (o, _) = ravine(&["run"], &cfg, &dir);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("beta"));
    let (o, _) = ravine(&["run", "--force"], &cfg, &dir);
    assert_ne!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn gd_is_the_contrast_row_on_the_power_law_problem() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "problem": { "kind": "power_law", "dimension": 200, "min_eigenvalue": 1e-8, "exponent": 0.2 },
        "solvers": [
            { "name": "nag", "x_init": vec![0.0; 200], "max_iter": 10000 },
            { "name": "gd", "x_init": vec![0.0; 200], "max_iter": 10000 }
        ]
    });
    let (o, out) = ravine(&["compare"], &cfg, &dir);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let rep = report(&out);
    assert!(verdict(&rep, "nag", "rate_slope")["measured"].as_f64().unwrap() <= -1.8);
    let gd = verdict(&rep, "gd", "contrast_slope");
    assert_eq!(gd["status"], "pass");
    assert!(gd["measured"].as_f64().unwrap() >= -1.3);
}

#[test]
fn a_failing_diagnostic_exits_two() {
    let dir = TempDir::new().unwrap();
    // mu overstated by eight orders of magnitude
    let cfg = json!({
        "problem": { "kind": "power_law", "dimension": 50, "min_eigenvalue": 1e-8, "exponent": 1.0 },
        "solvers": [{ "name": "sc_nesterov", "mu": 0.25, "max_iter": 1000 }]
    });
    let (o, out) = ravine(&["run"], &cfg, &dir);
    assert_eq!(code(&o), 2, "{}{}", String::from_utf8_lossy(&o.stdout), stderr(&o));
    let rep = report(&out);
    let v = verdict(&rep, "sc_nesterov", "geometric_ratio");
    assert_eq!(v["status"], "fail");
    assert!(v["measured"].as_f64().unwrap() > v["threshold"].as_f64().unwrap());
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL sc_nesterov geometric_ratio"));
}

#[test]
fn divergence_is_reported_without_aborting_siblings() {
    let dir = TempDir::new().unwrap();
    let cfg = cond100(json!([
        { "name": "gd", "step_lipschitz": 2.5, "max_iter": 2000, "force": true },
        { "name": "nag", "max_iter": 200 }
    ]));
    let (o, out) = ravine(&["run"], &cfg, &dir);
    assert_eq!(code(&o), 2);
    let rep = report(&out);
    assert_eq!(rep["runs"][0]["status"], "diverged");
    assert_eq!(verdict(&rep, "gd", "completed")["status"], "fail");
    assert_eq!(rep["runs"][1]["status"], "ok");
    assert!(out.join("nag.csv").exists());
}

#[test]
fn identical_configs_give_byte_identical_files_for_any_job_count() {
    let smooth = json!({
        "problem": { "kind": "random_psd", "dimension": 6, "condition": 20.0, "seed": 3 },
        "solvers": [
            { "name": "nag", "max_iter": 400 },
            { "name": "rag", "alpha": 4.0, "max_iter": 400 },
            { "name": "iprox", "max_iter": 400 }
        ],
        "odes": [{ "kind": "avd", "alpha": 3.0, "dt": 0.01, "t_end": 4.0 }]
    });
    let lasso = json!({
        "problem": { "kind": "lasso" },
        "solvers": [{ "name": "fista", "max_iter": 400 }, { "name": "rapg", "alpha": 4.0, "max_iter": 400 }]
    });
    let cases = [
        (
            smooth,
            vec!["nag.csv", "rag.csv", "iprox.csv", "ode_avd_0.csv", "report.json"],
        ),
        (lasso, vec!["fista.csv", "rapg.csv", "report.json"]),
    ];
    for (cfg, files) in cases {
        let runs: Vec<(TempDir, PathBuf)> = ["1", "4", "4"]
            .iter()
            .map(|jobs| {
                let dir = TempDir::new().unwrap();
                let (o, out) = ravine(&["run", "--jobs", jobs], &cfg, &dir);
                assert_ne!(code(&o), 1, "{}", stderr(&o));
                (dir, out)
            })
            .collect();
        for name in files {
            let first = std::fs::read(runs[0].1.join(name)).unwrap();
            for (_, out) in &runs[1..] {
                assert_eq!(first, std::fs::read(out.join(name)).unwrap(), "{name}");
            }
        }
    }
}

#[test]
fn avd_started_at_the_minimizer_stays_put() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "problem": { "kind": "quadratic", "matrix": [[2.0, 0.0], [0.0, 5.0]], "offset": [2.0, 5.0] },
        "odes": [{ "kind": "avd", "alpha": 3.0, "dt": 0.05, "t_end": 3.0, "x0": [1.0, 1.0] }]
    });
    let (o, out) = ravine(&["ode"], &cfg, &dir);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("ode_avd_0.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,x0,x1,v0,v1,f");
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    assert_eq!(rows.len(), 41);
    for r in &rows {
        assert_eq!(r[1..], rows[0][1..]);
    }
}

#[test]
fn ode_writes_the_resolution_table_and_checks_it() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "problem": { "kind": "quadratic", "matrix": [[1.0]], "offset": [0.0] },
        "resolution": { "alpha": 3.0, "steps": [0.01, 0.0025, 0.000625], "horizon": 5.0 }
    });
    let (o, out) = ravine(&["ode"], &cfg, &dir);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let csv = std::fs::read_to_string(out.join("resolution.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "which,s,lowres_err,highres_err");
    assert_eq!(lines.count(), 6);
    let rep = report(&out);
    assert_eq!(
        verdict(&rep, "resolution_nag", "resolution_contraction")["status"],
        "pass"
    );
    assert_eq!(
        verdict(&rep, "resolution_rag", "resolution_contraction")["status"],
        "pass"
    );
}

#[test]
fn heavy_ball_flow_decays_at_the_strongly_convex_rate() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "problem": { "kind": "quadratic", "matrix": [[1.0, 0.0], [0.0, 4.0]], "offset": [1.0, 1.0] },
        "odes": [{ "kind": "hbf_sc", "label": "hbf", "mu": 1.0, "t0": 0.0, "dt": 0.01, "t_end": 15.0 }]
    });
    let (o, out) = ravine(&["ode"], &cfg, &dir);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let rep = report(&out);
    let v = verdict(&rep, "hbf", "exp_rate");
    assert_eq!(v["status"], "pass");
    assert!(v["measured"].as_f64().unwrap() <= -1.0 + 0.1);
}

#[test]
fn inertial_newton_damping_oscillates_less_than_avd() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "problem": { "kind": "ill_conditioned", "condition": 100.0 },
        "odes": [
            { "kind": "avd", "label": "avd", "alpha": 3.1, "t0": 1.0, "dt": 0.01, "t_end": 40.0 },
            { "kind": "din_avd", "label": "din", "alpha": 3.1, "beta": 1.0, "t0": 1.0, "dt": 0.01, "t_end": 40.0 }
        ]
    });
    let (o, out) = ravine(&["ode"], &cfg, &dir);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let rep = report(&out);
    assert_eq!(verdict(&rep, "compare", "oscillations din < avd")["status"], "pass");
}

#[test]
fn ode_needs_something_to_integrate() {
    let dir = TempDir::new().unwrap();
    let cfg = cond100(json!([{ "name": "nag" }]));
    let (o, _) = ravine(&["ode"], &cfg, &dir);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("odes"));
}

#[test]
fn missing_config_file_is_exit_one() {
    let o = Command::new(env!("CARGO_BIN_EXE_ravine"))
        .args(["run", "/nonexistent/ravine.json"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("cannot read"));
}

fn collect_keys(v: &Value, out: &mut std::collections::BTreeSet<String>) {
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                out.insert(k.clone());
                collect_keys(v, out);
            }
        }
        Value::Array(items) => items.iter().for_each(|v| collect_keys(v, out)),
        _ => {}
    }
}

#[test]
fn every_report_key_is_documented() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "problem": { "kind": "ill_conditioned", "condition": 100.0 },
        "solvers": [
            { "name": "nag", "alpha": 4.0, "max_iter": 1200 },
            { "name": "sc_ravine", "mu": 1.0, "max_iter": 200 }
        ],
        "odes": [{ "kind": "hbf_sc", "mu": 1.0, "t0": 0.0, "dt": 0.05, "t_end": 10.0 }],
        "resolution": { "which": ["nag"], "steps": [0.01, 0.0025], "horizon": 5.0 },
        "diagnostics": { "summability": true, "min_grad": true, "oscillations": true, "equivalence": true }
    });
    let (o, out) = ravine(&["run"], &cfg, &dir);
    assert_ne!(code(&o), 1, "{}", stderr(&o));
    let mut keys = std::collections::BTreeSet::new();
    collect_keys(&report(&out), &mut keys);
    let doc = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/report-schema.md")).unwrap();
    let words: std::collections::HashSet<&str> =
        doc.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).collect();
    let missing: Vec<&String> = keys.iter().filter(|k| !words.contains(k.as_str())).collect();
    assert!(missing.is_empty(), "undocumented keys: {missing:?}");
    assert!(keys.len() > 60);
}
