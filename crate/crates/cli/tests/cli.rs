use std::fs;
use std::path::Path;

use beamspec::continuation::{branch, ContinuationConfig};
use beamspec::grid::Grid;
use beamspec::nonlinear::{PerturbationG, ProblemSpec};
use beamspec::spectrum::eigen_pencil;
use beamspec::{Sign, Weight};
use beamspec_cli::{render_diagram, run, sha256_hex, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION};
use serde_json::Value;

fn beamspec(args: &[&str], out: &Path) -> i32 {
    let mut argv = vec!["beamspec".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.push("--out".into());
    argv.push(out.display().to_string());
    run(argv)
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn spectrum_reports_first_eigenvalue() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(beamspec(&["spectrum", "--n", "2000", "--kmax", "2"], dir.path()), EXIT_OK);
    let doc = read_json(&dir.path().join("spectrum.json"));
    let mu1 = doc["positive"][0]["mu"].as_f64().unwrap();
    assert!((mu1 - 97.409).abs() < 1e-2, "mu1 = {mu1}");
    assert!(doc["negative"].as_array().unwrap().is_empty());
    assert!(dir.path().join("phi/pos_2.csv").is_file());
}

#[test]
fn solve_accepts_admissible_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let code = beamspec(&["solve", "--n", "400", "--f", "saturating", "--gamma", "73.05"], dir.path());
    assert_eq!(code, EXIT_OK);
    let doc = read_json(&dir.path().join("solution.json"));
    assert!(doc["residual"].as_f64().unwrap() < 1e-8);
    assert_eq!(doc["profile"]["count"].as_u64(), Some(0));
}

#[test]
fn solve_rejects_gamma_outside_interval() {
    let dir = tempfile::tempdir().unwrap();
    let code = beamspec(&["solve", "--n", "400", "--gamma", "24.35"], dir.path());
    assert_eq!(code, EXIT_VALIDATION);
    assert!(!dir.path().join("manifest.json").exists());
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(beamspec(&["spectrum", "--n", "3"], dir.path()), EXIT_USAGE);
    assert_eq!(beamspec(&["spectrum", "--weight", "no_such_weight"], dir.path()), EXIT_USAGE);
    assert_eq!(beamspec(&["solve", "--f", "{not json", "--gamma", "70"], dir.path()), EXIT_USAGE);
    assert_eq!(run(["beamspec", "frobnicate"]), EXIT_USAGE);
}

#[test]
fn missing_spectral_side_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let code = beamspec(&["branch", "--n", "200", "--nu", "-", "--max-steps", "5"], dir.path());
    assert_eq!(code, EXIT_VALIDATION);
}

#[test]
fn manifest_checksums_match_files() {
    let dir = tempfile::tempdir().unwrap();
    let code = beamspec(&["branch", "--n", "200", "--k", "2", "--sigma", "-", "--max-steps", "40", "--save-every", "7"], dir.path());
    assert_eq!(code, EXIT_OK);
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["tool"], "beamspec");
    assert_eq!(manifest["command"], "branch");
    assert_eq!(manifest["config"]["k"], 2);
    let outputs = manifest["outputs"].as_array().unwrap();
    assert!(outputs.iter().any(|o| o["path"] == "branch.csv"));
    assert!(outputs.iter().any(|o| o["path"] == "solutions/point_00007.csv"));
    for o in outputs {
        let bytes = fs::read(dir.path().join(o["path"].as_str().unwrap())).unwrap();
        assert_eq!(o["bytes"].as_u64().unwrap() as usize, bytes.len());
        assert_eq!(o["sha256"].as_str().unwrap(), sha256_hex(&bytes));
    }
}

#[test]
fn json_nonlinearity_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let f = r#"{"type":"saturating","params":{"f0":1.0,"finf":2.0}}"#;
    assert_eq!(beamspec(&["solve", "--n", "300", "--f", f, "--gamma", "70"], dir.path()), EXIT_OK);
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["config"]["nonlinearity"]["type"], "saturating");
}

#[test]
fn sturm_and_degree_pass_on_small_grids() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(beamspec(&["sturm", "--n", "200", "--pairs", "8", "--seed", "7"], dir.path()), EXIT_OK);
    let report = read_json(&dir.path().join("sturm.json"));
    assert_eq!(report["pairs"].as_array().unwrap().len(), 8);
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(beamspec(&["degree", "--n", "400", "--weight", "cos2pi", "--samples", "4"], dir.path()), EXIT_OK);
}

#[test]
fn degree_accepts_explicit_samples() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(beamspec(&["degree", "--n", "400", "--mu", "50,-50,500"], dir.path()), EXIT_OK);
    let report = read_json(&dir.path().join("parity.json"));
    assert_eq!(report["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn diagram_is_deterministic() {
    let g: Grid<f64> = Grid::new(199).unwrap();
    let m = Weight::One.sample(g);
    let sp = eigen_pencil(&m, 2, 0).unwrap();
    let spec = ProblemSpec::perturbed(m, PerturbationG::cubic(1.0));
    let cfg = ContinuationConfig {
        max_steps: 30,
        ..ContinuationConfig::default()
    };
    let a = branch(&sp, 1, Sign::Plus, Sign::Plus, &spec, &cfg).unwrap();
    let b = branch(&sp, 1, Sign::Plus, Sign::Minus, &spec, &cfg).unwrap();
    let one = render_diagram(&[&a, &b]);
    let two = render_diagram(&[&a, &b]);
    assert_eq!(one, two);
    assert!(one.starts_with("<svg"));
    assert_eq!(one.matches("<polyline").count(), 2);
    assert!(one.contains("k=1 nu=+ sigma=-"));
}
