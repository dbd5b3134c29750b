use std::fs;
use std::process::Command;

use serde_json::Value;
use winfree::cli::{estimate_pathwise_critical_coupling, quantile_frequencies, run};
use winfree::equilibria::critical_coupling;
use winfree::integrate::SolverOptions;
use winfree::model::{InteractionSpec, PhaseState, SystemConfig};

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["winfree"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(s: &str) -> Value {
    serde_json::from_str(s).unwrap_or_else(|e| panic!("{e}: {s}"))
}

#[test]
fn simulate_minimal_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"n": 2, "omega": [0.1, -0.1], "kappa": 3.0, "horizon": 100.0}"#).unwrap();
    let out_dir = dir.path().join("out");
    let (code, out, err) =
        invoke(&["simulate", "--config", cfg.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let summary = json(&out);
    assert_eq!(summary["regime"], "CompleteDeath");
    assert_eq!(summary["death_flags"], serde_json::json!([true, true]));
    assert_eq!(json(&fs::read_to_string(out_dir.join("summary.json")).unwrap()), summary);
    let csv = fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    assert!(csv.lines().count() > 100);
}

#[test]
fn simulate_free_oscillator_locks() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, err) = invoke(&[
        "simulate", "--omega", "1", "--kappa", "0", "--horizon", "100", "--out-dir", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let summary = json(&out);
    assert_eq!(summary["regime"], "CompleteLocking");
    assert!((summary["rotation_numbers"][0].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(invoke(&["simulate", "--config", bad.to_str().unwrap()]).0, 2);
    let unknown = dir.path().join("unknown.json");
    fs::write(&unknown, r#"{"kapa": 1.0}"#).unwrap();
    assert_eq!(invoke(&["equilibria", "--config", unknown.to_str().unwrap()]).0, 2);
    assert_eq!(invoke(&["no-such-command"]).0, 2);
    assert_eq!(invoke(&["simulate", "--omega", "0.1,0.2", "--n", "3"]).0, 2);
    assert_eq!(invoke(&["bounds", "--kind", "Nonsense"]).0, 2);
    assert_eq!(invoke(&["sweep", "--n", "4"]).0, 2);
    let (code, _, err) = invoke(&[
        "simulate", "--omega", "0.1,0.2", "--kappa", "1e12", "--initial", "2,-2", "--abs-tol", "1e-15",
        "--rel-tol", "1e-15", "--horizon", "1", "--out-dir", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 3, "{err}");
    assert!(dir.path().join("trajectory.csv").exists());
    assert_eq!(invoke(&["--help"]).0, 0);
}

#[test]
fn critical_coupling_command() {
    let (code, out, _) = invoke(&["critical-coupling", "--omega", "1,1,1"]);
    assert_eq!(code, 0);
    let v = json(&out);
    let k = v["kappa_c"].as_f64().unwrap();
    assert!((k - 4.0 / (3.0 * 3f64.sqrt())).abs() < 1e-9);
    assert!(out.contains("0.7698003"));
}

#[test]
fn bounds_command_reports_crossover_time() {
    let (code, out, err) =
        invoke(&["bounds", "--kind", "SincosTime", "--n", "800", "--kappa", "6", "--epsilon", "1", "--T", "1"]);
    assert_eq!(code, 0, "{err}");
    let v = json(&out);
    assert!((v["bound"]["T0"].as_f64().unwrap() - 0.40156699).abs() < 1e-8);
    assert_eq!(v["N"], 800);
}

#[test]
fn equilibria_command() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) =
        invoke(&["equilibria", "--omega", "0.1", "--kappa", "1", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    let v = json(&out);
    let recs = v.as_array().unwrap();
    assert_eq!(recs.len(), 2);
    let mut rs: Vec<f64> = recs.iter().map(|r| r["R"].as_f64().unwrap()).collect();
    rs.sort_by(f64::total_cmp);
    assert!((rs[0] - 0.17634).abs() < 1e-4 && (rs[1] - 1.99875).abs() < 1e-5);
    assert!(dir.path().join("equilibria.json").exists());
}

#[test]
fn montecarlo_command() {
    let (code, out, _) =
        invoke(&["montecarlo", "--kind", "order-param-cdf", "--n", "10", "--t-level", "0.2", "--samples", "2000"]);
    assert_eq!(code, 0);
    let v = json(&out);
    for key in ["kind", "params", "estimate", "std_error", "bound", "dominated"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["dominated"], true);
    assert_eq!(invoke(&["montecarlo", "--kind", "bogus"]).0, 2);
}

#[test]
fn verify_command() {
    let (code, out, err) =
        invoke(&["verify", "--omega", "0.1,-0.2,0.05", "--kappa", "2", "--initial", "0.3,-0.2,0.1", "--horizon", "50"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("true"));
}

#[test]
fn sweep_is_reproducible_and_finds_death() {
    let dir = tempfile::tempdir().unwrap();
    let run_once = |sub: &str| {
        let d = dir.path().join(sub);
        let (code, _, err) = invoke(&[
            "sweep", "--n", "100", "--gamma-grid", "0.1", "--kappa-grid", "0.05,1.0", "--horizon", "500",
            "--seed", "7", "--workers", "2", "--out-dir", d.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
        fs::read(d.join("sweep.csv")).unwrap()
    };
    let a = run_once("a");
    assert_eq!(a, run_once("b"));
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "kappa,gamma,regime,death_fraction,mean_R_final");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    let strong = rows.iter().find(|r| r[0] == "1.0").unwrap();
    assert_eq!(strong[2], "CompleteDeath");
    assert_eq!(strong[3], "1.0");
    let weak = rows.iter().find(|r| r[0] == "0.05").unwrap();
    assert_ne!(weak[2], "CompleteDeath");
}

#[test]
fn uncoupled_sweep_column_follows_frequencies() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = invoke(&[
        "sweep", "--n", "20", "--gamma-grid", "0,0.5", "--kappa-grid", "0", "--horizon", "200", "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0][2], "CompleteLocking");
    assert_eq!(rows[1][2], "Incoherence");
    assert!(rows.iter().all(|r| r[3] == "0.0"));
}

#[test]
fn quantile_sample_is_equal_mass() {
    let w = quantile_frequencies(4, 0.2);
    let want = [0.85, 0.95, 1.05, 1.15];
    for (a, b) in w.iter().zip(want) {
        assert!((a - b).abs() < 1e-12);
    }
    assert_eq!(quantile_frequencies(3, 0.0), vec![1.0; 3]);
}

#[test]
fn pathwise_critical_coupling() {
    let spec = InteractionSpec::sinusoidal();
    let opts = SolverOptions::with_horizon(500.0);
    let c = SystemConfig::new(vec![1.0], 1.0).unwrap();
    let est = estimate_pathwise_critical_coupling(&c, &spec, &PhaseState::new(vec![0.3]), &opts).unwrap();
    let kc = critical_coupling(&[1.0]).unwrap().kappa_c;
    assert!((est.kappa_pc - kc).abs() < 0.01, "{} vs {kc}", est.kappa_pc);
    assert!(est.horizon_dependent);

    let c = SystemConfig::new(vec![0.4, -0.3, 0.2], 1.0).unwrap();
    let est = estimate_pathwise_critical_coupling(&c, &spec, &PhaseState::new(vec![1.0, -2.0, 0.5]), &opts).unwrap();
    let kc = critical_coupling(&c.omega).unwrap().kappa_c;
    assert!(est.kappa_pc >= kc - 0.01, "{} < {kc}", est.kappa_pc);

    let c = SystemConfig::new(vec![0.0; 3], 1.0).unwrap();
    let est = estimate_pathwise_critical_coupling(&c, &spec, &PhaseState::new(vec![1.0, -2.0, 0.5]), &opts).unwrap();
    assert_eq!(est.kappa_pc, 0.0);
}

#[test]
fn seed_environment_variable_overrides_config() {
    let exe = env!("CARGO_BIN_EXE_winfree");
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"n": 4, "omega_range": [-1.0, 1.0], "kappa": 1.0, "seed": 1}"#).unwrap();
    let omega = |seed: Option<&str>| {
        let mut cmd = Command::new(exe);
        cmd.args(["equilibria", "--config", cfg.to_str().unwrap()]).env_remove("WINFREE_SEED");
        if let Some(s) = seed {
            cmd.env("WINFREE_SEED", s);
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    let base = omega(None);
    assert_eq!(base, omega(Some("1")));
    assert_ne!(base, omega(Some("2")));
    let out = Command::new(exe)
        .args(["equilibria", "--config", cfg.to_str().unwrap()])
        .env("WINFREE_SEED", "x")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
