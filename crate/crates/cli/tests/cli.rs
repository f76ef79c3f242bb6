use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_fermi-scatter");

const SOLVE_ZERO: &str = r#"
spec_version = 1
command = "solve"
master_seed = 1

[parameters]
state = { kind = "fermi_dirac", beta = 1.0, mu = 1.0 }
potential.w1 = { kind = "gaussian", a = 1.0, sigma = 0.5 }
potential.w2 = { kind = "vanishing_origin", a = 1.0, sigma = 0.5 }
weights = { alpha = 1.1, beta_decay = 3.0, beta0 = 0.5 }
grid = { dim = 3, n = 4, horizon = 2.0, nt = 8 }
data = { kind = "zero" }
"#;

const WAVE: &str = r#"
spec_version = 1
command = "wave-series"
master_seed = 11

[parameters]
grid = { dim = 2, n = 8, horizon = 2.0, nt = 16 }
v_norm = 0.1
ensemble = 2
n_max = 4
"#;

fn run(dir: &Path, config: &str, extra: &[&str]) -> (Output, Option<PathBuf>) {
    let cfg = dir.join(format!("cfg-{}.toml", extra.join("").replace('-', "")));
    std::fs::write(&cfg, config).unwrap();
    let out_root = dir.join("out");
    let out = Command::new(BIN)
        .arg("--config")
        .arg(&cfg)
        .arg("--output")
        .arg(&out_root)
        .args(extra)
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    let run_dir = stdout.lines().find_map(|l| l.strip_prefix("artifacts: ")).map(PathBuf::from);
    (out, run_dir)
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn without_timestamp(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timestamp");
    v
}

#[test]
fn misspelled_keys_exit_one_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = SOLVE_ZERO.replace("series_order", "x").replace("data = {", "dta = {");
    let (out, dir) = run(tmp.path(), &bad, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(dir.is_none());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("dta") && err.contains("line"), "{err}");

    let top = SOLVE_ZERO.replace("master_seed", "master_sead");
    let (out, _) = run(tmp.path(), &top, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("master_sead"));

    let nested = SOLVE_ZERO.replace("beta0 = 0.5", "beta_0 = 0.5");
    assert_eq!(run(tmp.path(), &nested, &[]).0.status.code(), Some(1));

    let version = SOLVE_ZERO.replace("spec_version = 1", "spec_version = 2");
    let (out, _) = run(tmp.path(), &version, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("spec_version"));
}

#[test]
fn zero_data_solve_passes_with_zero_residual() {
    let tmp = tempfile::tempdir().unwrap();
    let (out, dir) = run(tmp.path(), SOLVE_ZERO, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = dir.unwrap();
    assert!(dir.file_name().unwrap().to_string_lossy().starts_with("solve-"));
    let r = report(&dir);
    assert_eq!(r["pass"], true);
    assert_eq!(r["result"]["residual"].as_f64(), Some(0.0));
    assert_eq!(r["result"]["global_bound"].as_f64(), Some(0.0));
    assert_eq!(r["result"]["iterates"].as_array().unwrap().len(), 1);
    assert!(r["result"]["scattering"].as_array().unwrap().iter().all(|row| row["s"].as_f64() == Some(0.0)));
    // resolved config is echoed, defaults included
    assert_eq!(r["config"]["parameters"]["series_order"], 4);
    assert_eq!(r["config"]["master_seed"], 1);

    let csv = std::fs::read_to_string(dir.join("iterates.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("k,delta,ratio"));
    let phi = fermi_scatter_cli::artifacts::read_field(&dir.join("fields/phi.bin")).unwrap();
    assert_eq!(phi.len(), 9 * 64);
    assert!(phi.iter().all(|&(re, im)| re == 0.0 && im == 0.0));
    let side: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("fields/phi.json")).unwrap()).unwrap();
    assert_eq!(side["shape"], serde_json::json!([9, 64]));
}

#[test]
fn gaussian_w2_audit_exits_two_naming_the_item() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"
spec_version = 1
command = "hypothesis-audit"
master_seed = 0

[parameters]
state = { kind = "fermi_dirac", beta = 1.0, mu = 1.0 }
potential.w1 = { kind = "gaussian", a = 1.0, sigma = 0.5 }
potential.w2 = { kind = "gaussian", a = 1.0, sigma = 0.5 }
weights = { alpha = 1.1, beta_decay = 3.0, beta0 = 0.5 }
dim = 3
"#;
    let (out, dir) = run(tmp.path(), cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    let r = report(&dir.unwrap());
    let failing: Vec<&str> = r["result"]["failing"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(failing.iter().any(|f| f.contains("ŵ₂")), "{failing:?}");

    // the solver refuses the same potential unless told otherwise
    let solve = SOLVE_ZERO.replace("kind = \"vanishing_origin\"", "kind = \"gaussian\"");
    let (out, dir) = run(tmp.path(), &solve, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&dir.unwrap())["result"]["stage"], "hypothesis audit");
    let (out, dir) = run(tmp.path(), &solve, &["--override-audit"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&dir.unwrap());
    assert_eq!(r["override_audit"], true);
    assert_eq!(r["result"]["audit"]["overridden"], true);
}

#[test]
fn low_frequency_probe_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"
spec_version = 1
command = "optimality-probe"
master_seed = 0

[parameters]
family = "low"
dim = 3
alpha_tilde = 0.4
"#;
    let (out, dir) = run(tmp.path(), cfg, &[]);
    assert_eq!(out.status.code(), Some(0));
    let dir = dir.unwrap();
    let r = report(&dir);
    let slope = r["result"]["slope"].as_f64().unwrap();
    assert!((slope - 0.2).abs() < 0.03, "{slope}");
    let rows = std::fs::read_to_string(dir.join("slope.csv")).unwrap();
    assert_eq!(rows.lines().count(), 5);

    let high = cfg.replace("\"low\"", "\"high\"");
    assert_eq!(run(tmp.path(), &high, &[]).0.status.code(), Some(1));
}

#[test]
fn reruns_are_bit_identical_and_seed_matters() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, da) = run(tmp.path(), WAVE, &[]);
    let (b, db) = run(tmp.path(), WAVE, &["--workers", "1"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    let (da, db) = (da.unwrap(), db.unwrap());
    assert_ne!(da, db);
    let (ra, rb) = (report(&da), report(&db));
    assert_eq!(without_timestamp(ra.clone())["result"], without_timestamp(rb.clone())["result"]);
    assert_eq!(std::fs::read(da.join("series.csv")).unwrap(), std::fs::read(db.join("series.csv")).unwrap());

    let (c, dc) = run(tmp.path(), WAVE, &["--seed", "12"]);
    assert_eq!(c.status.code(), Some(0));
    let rc = report(&dc.unwrap());
    assert_eq!(rc["config"]["master_seed"], 12);
    assert_ne!(rc["result"]["members"], ra["result"]["members"]);
}

#[test]
fn strichartz_scan_flags_over_regime_growth_as_expected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"
spec_version = 1
command = "strichartz-scan"
master_seed = 0

[parameters]
dim = 3
alpha0 = 0.5
alpha1 = 0.6
alpha2 = 0.6
"#;
    let (out, dir) = run(tmp.path(), cfg, &[]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&dir.unwrap());
    assert_eq!(r["result"]["scan"]["in_regime"], false);
    assert_eq!(r["result"]["scan"]["growth"], true);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for e in std::fs::read_dir(&dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "toml") {
            fermi_scatter_cli::config::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            seen += 1;
        }
    }
    assert!(seen >= 8);
}
