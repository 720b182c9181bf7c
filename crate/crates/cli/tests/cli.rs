//! Behaviour of the scenario runner and the `liesys` binary.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use liesys::systems::SYSTEM_NAMES;
use liesys_cli::scenario::{Overrides, Pipeline, ScenarioFile};
use liesys_cli::{catalog, run_file, CliError};

const BIN: &str = env!("CARGO_BIN_EXE_liesys");

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn shipped() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(scenarios_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    v.sort();
    v
}

fn liesys(args: &[&str], out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("LIESYS_OUT_DIR")
        .output()
        .unwrap()
}

fn write_scenario(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn usage_field(body: &str) -> String {
    match ScenarioFile::parse(body).and_then(|f| f.validate("t", Overrides::default())) {
        Err(CliError::Usage { field, .. }) => field,
        other => panic!("expected a usage error, got {other:?}"),
    }
}

fn summary(dir: &Path, stem: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{stem}.summary.json"))).unwrap()).unwrap()
}

#[test]
fn every_shipped_scenario_passes() {
    let out = tempfile::tempdir().unwrap();
    for path in shipped() {
        let s = run_file(&path, Some(out.path()), Overrides::default()).unwrap();
        assert_eq!(s.exit_code, 0, "{}: {s:?}", path.display());
        assert!(!s.files.is_empty());
    }
}

#[test]
fn two_examples_per_pipeline() {
    let mut counts = std::collections::BTreeMap::new();
    for path in shipped() {
        let f = ScenarioFile::parse(&std::fs::read_to_string(&path).unwrap()).unwrap();
        *counts.entry(f.pipeline.name()).or_insert(0) += 1;
    }
    for p in Pipeline::ALL {
        assert!(counts.get(p.name()).copied().unwrap_or(0) >= 2, "{}", p.name());
    }
}

#[test]
fn equilibrium_series_is_constant() {
    let out = tempfile::tempdir().unwrap();
    let path = scenarios_dir().join("integrate_pinney_equilibrium.toml");
    run_file(&path, Some(out.path()), Overrides::default()).unwrap();
    let csv = std::fs::read_to_string(out.path().join("integrate_pinney_equilibrium.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x,v"));
    for line in lines {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((cells[1] - 1.0).abs() < 1e-12 && cells[2].abs() < 1e-12, "{line}");
    }
}

#[test]
fn pinney_superposition_error_column_is_small() {
    let out = tempfile::tempdir().unwrap();
    let s = run_file(&scenarios_dir().join("superpose_pinney.toml"), Some(out.path()), Overrides::default()).unwrap();
    assert_eq!(s.exit_code, 0);
    for file in &s.files {
        let csv = std::fs::read_to_string(out.path().join(file)).unwrap();
        assert!(csv.starts_with("t,value,oracle,abs_err\n"));
        let worst = csv
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
            .fold(0.0, f64::max);
        assert!(worst < 1e-5, "{file}: {worst}");
    }
}

#[test]
fn reduction_csv_layout() {
    let out = tempfile::tempdir().unwrap();
    let s = run_file(&scenarios_dir().join("reduce_dalembert.toml"), Some(out.path()), Overrides::default()).unwrap();
    let csv = std::fs::read_to_string(out.path().join(&s.files[0])).unwrap();
    assert!(csv.starts_with("t,tau,closed_form,oracle,abs_err,det_drift\n"));
}

#[test]
fn list_names_every_system_and_each_validates() {
    let text = catalog();
    for name in ["milne_pinney", "generalized_ermakov"] {
        assert!(text.contains(name));
    }
    for name in SYSTEM_NAMES {
        assert!(text.contains(name));
        let body = format!("pipeline = \"verify-algebra\"\n[system]\nname = \"{name}\"\n");
        let sc = ScenarioFile::parse(&body).unwrap().validate("t", Overrides::default()).unwrap();
        assert_eq!(sc.system.name(), name);
    }
    for p in Pipeline::ALL {
        assert!(text.contains(p.name()));
    }
    let out = tempfile::tempdir().unwrap();
    let o = liesys(&["list"], out.path());
    assert_eq!(o.status.code(), Some(2), "list takes no --out");
    let o = Command::new(BIN).arg("list").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(String::from_utf8(o.stdout).unwrap(), text);
}

#[test]
fn validation_names_the_field() {
    let base = "pipeline = \"integrate\"\nt_span = [0.0, 1.0]\n";
    assert_eq!(usage_field(&format!("{base}initial_states = [[1.0, 0.0]]\n[system]\nname = \"nope\"\n")), "system.name");
    assert_eq!(
        usage_field(&format!("{base}initial_states = [[1.0]]\n[system]\nname = \"oscillator_1d\"\n")),
        "initial_states[0]"
    );
    assert_eq!(
        usage_field(&format!(
            "{base}initial_states = [[1.0, 0.0]]\n[system]\nname = \"oscillator_1d\"\n[tolerances]\nabs = -1.0\n"
        )),
        "tolerances.abs"
    );
    assert_eq!(usage_field(&format!("{base}[system]\nname = \"oscillator_1d\"\n")), "initial_states");
    assert_eq!(
        usage_field("pipeline = \"integrate\"\ninitial_states = [[1.0, 0.0]]\n[system]\nname = \"oscillator_1d\"\n"),
        "t_span"
    );
    assert_eq!(
        usage_field(&format!("{base}initial_states = [[1.0, 0.0]]\n[system]\nname = \"oscillator_1d\"\nk = 2.0\n")),
        "system.k"
    );
    // Unknown keys are rejected at parse time with their location.
    let field = usage_field(&format!("{base}initial_states = [[1.0, 0.0]]\nbogus = 1\n[system]\nname = \"oscillator_1d\"\n"));
    assert!(field.starts_with("line "), "{field}");
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let body = |extra: &str| {
        format!(
            "pipeline = \"integrate\"\nt_span = [0.0, 5.0]\ninitial_states = [[1.2, 0.3]]\n[system]\nname = \"milne_pinney\"\n{extra}"
        )
    };
    let pass = write_scenario(dir.path(), "pass.toml", &body(""));
    let fail = write_scenario(dir.path(), "fail.toml", &body("[thresholds]\nmax_variation = 1e-6\n"));
    let bad = write_scenario(dir.path(), "bad.toml", &body("k = \"one\"\n"));
    let collapse = write_scenario(
        dir.path(),
        "collapse.toml",
        "pipeline = \"integrate\"\nt_span = [0.0, 5.0]\ninitial_states = [[0.5, 0.0]]\n[system]\nname = \"milne_pinney\"\nk = -1.0\n",
    );

    let code = |p: &Path| liesys(&["run", p.to_str().unwrap()], &out).status.code();
    assert_eq!(code(&pass), Some(0));
    assert_eq!(code(&fail), Some(1));
    assert_eq!(code(&bad), Some(2));
    assert_eq!(code(&collapse), Some(3));

    let s = summary(&out, "collapse");
    assert_eq!(s["status"], "error");
    let t = s["last_good_time"].as_f64().unwrap();
    assert!(t > 0.0 && t < 1.0, "{t}");

    let s = summary(&out, "fail");
    assert_eq!(s["status"], "fail");
    assert_eq!(s["thresholds"][0]["passed"], false);

    // A batch reports its worst member.
    let o = liesys(&["run", pass.to_str().unwrap(), fail.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(1));
    let o = Command::new(BIN).args(["run"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(BIN).arg("run").arg(&pass).args(["--tol-override", "-1"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

fn read_all(dir: &Path) -> BTreeSet<(String, Vec<u8>)> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect()
}

#[test]
fn reruns_are_byte_identical_and_seed_matters() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenarios_dir().join("drift_ermakov.toml");
    let s = scenario.to_str().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert_eq!(liesys(&["run", s], &a).status.code(), Some(0));
    assert_eq!(liesys(&["run", s], &b).status.code(), Some(0));
    assert_eq!(read_all(&a), read_all(&b));
    assert_eq!(liesys(&["run", s, "--seed", "1"], &c).status.code(), Some(0));
    let first = |d: &Path| std::fs::read(d.join("drift_ermakov_0.csv")).unwrap();
    assert_ne!(first(&a), first(&c));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenarios_dir().join("minimal_m_oscillator.toml");
    let o = Command::new(BIN)
        .arg("run")
        .arg(&scenario)
        .env("LIESYS_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("minimal_m_oscillator.csv").exists());
    let s = summary(dir.path(), "minimal_m_oscillator");
    assert_eq!(s["metrics"]["m"], 2.0);
}

#[test]
fn tolerance_override_changes_step_count() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenarios_dir().join("integrate_triple.toml");
    let s = scenario.to_str().unwrap();
    let (fine, coarse) = (dir.path().join("fine"), dir.path().join("coarse"));
    liesys(&["run", s], &fine);
    liesys(&["run", s, "--tol-override", "1e-5"], &coarse);
    let samples = |d: &Path| summary(d, "integrate_triple")["metrics"]["samples"].as_f64().unwrap();
    assert!(samples(&coarse) < samples(&fine));
}
