//! Acceptance suite. Prints one line per criterion and exits nonzero if any fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use winfree::equilibria::{build_w_polynomial, classify_stability, critical_coupling, enumerate_equilibria, Stability};
use winfree::integrate::{detect_death, simulate, verify_theorem_conclusions, SolverOptions};
use winfree::model::{divergence, jacobian, order_parameter, potential, vector_field, InteractionSpec, SystemConfig};
use winfree::montecarlo::{
    empirical_order_param_cdf, estimate_escape_measure, run_indexed, sample_frequencies, sample_state, McConfig,
};
use winfree::thresholds::{
    appendix_inequality_check, appendix_margin, corollary_mu, escape_measure_bound, probability_bound,
    sinusoidal_threshold, BoundKind, BoundParams,
};

type Verdict = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sin() -> InteractionSpec {
    InteractionSpec::sinusoidal()
}

fn kc_closed() -> f64 {
    4.0 / (3.0 * 3f64.sqrt())
}

fn random_omega(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Instance with equilibria likely: κ a random multiple of the largest frequency.
fn random_instance(rng: &mut ChaCha8Rng, max_n: usize) -> SystemConfig {
    let n = rng.gen_range(1..=max_n);
    let omega = random_omega(rng, n);
    let wmax = omega.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    SystemConfig::new(omega, wmax * rng.gen_range(0.6..3.0)).unwrap()
}

fn criterion_1() -> Verdict {
    let mut worst = 0.0f64;
    for n in 1..=16 {
        let k = critical_coupling(&vec![1.0; n]).map_err(|e| e.to_string())?.kappa_c;
        worst = worst.max((k - kc_closed()).abs());
    }
    ensure(worst <= 1e-9, || format!("max deviation {worst:e}"))?;
    Ok(format!("max |kappa_c - 4/(3 sqrt 3)| = {worst:.2e} over N = 1..16"))
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let n = rng.gen_range(1..=8);
        let omega = random_omega(&mut rng, n);
        let wmax = omega.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        let ratio = critical_coupling(&omega).map_err(|e| e.to_string())?.kappa_c / wmax;
        let lower = 2.0 * n as f64 / (4.0 * n as f64 - 1.0);
        ensure(ratio >= lower - 1e-12 && ratio <= kc_closed() + 1e-12, || {
            format!("ratio {ratio} outside [{lower}, {}] for {omega:?}", kc_closed())
        })?;
    }
    Ok("100 instances within [2N/(4N-1), 4/(3 sqrt 3)]".into())
}

fn criterion_3() -> Verdict {
    let c = SystemConfig::new(vec![0.1], 1.0).unwrap();
    let w = build_w_polynomial(&c).map_err(|e| e.to_string())?;
    let want = [0.01, 0.0, 0.0, -2.0, 1.0];
    ensure(w.coeffs.len() == want.len(), || format!("coefficients {:?}", w.coeffs))?;
    for (a, b) in w.coeffs.iter().zip(want) {
        ensure((a - b).abs() <= 1e-12, || format!("coefficients {:?}", w.coeffs))?;
    }
    let mut roots = w.real_roots_in(0.1, 2.0, 1e-9).map_err(|e| e.to_string())?;
    roots.sort_by(f64::total_cmp);
    let mut rs: Vec<f64> = enumerate_equilibria(&c).map_err(|e| e.to_string())?.iter().map(|e| e.r).collect();
    rs.sort_by(f64::total_cmp);
    ensure(roots.len() == rs.len(), || format!("roots {roots:?} vs R {rs:?}"))?;
    for (a, b) in roots.iter().zip(&rs) {
        ensure((a - b).abs() <= 1e-6, || format!("roots {roots:?} vs R {rs:?}"))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut matched = 0;
    for _ in 0..50 {
        let c = random_instance(&mut rng, 5);
        let eqs = enumerate_equilibria(&c).map_err(|e| e.to_string())?;
        ensure(eqs.len() <= 1 << (c.n + 1), || format!("{} equilibria for N = {}", eqs.len(), c.n))?;
        let w = build_w_polynomial(&c).map_err(|e| e.to_string())?;
        let lo = c.omega_max() / c.kappa.abs();
        let roots = w.real_roots_in(lo, 2.0, 1e-7).map_err(|e| e.to_string())?;
        for e in &eqs {
            let d = roots.iter().map(|r| (r - e.r).abs()).fold(f64::INFINITY, f64::min);
            ensure(d <= 1e-6, || format!("R = {} has no W root within 1e-6 (distance {d:e})", e.r))?;
            matched += 1;
        }
    }
    Ok(format!("N = 1 coefficients and roots exact; {matched} equilibria matched to W roots in 50 instances"))
}

fn criterion_4() -> Verdict {
    let spec = sin();
    let params = BoundParams { epsilon: Some(1.0), kappa: Some(6.0), t: Some(1.0), ..Default::default() };
    let time = probability_bound(BoundKind::SincosTime, 800, &params, &spec).map_err(|e| e.to_string())?;
    let t0 = time.t0.ok_or("no T0 reported")?;
    ensure((t0 - 0.40156699).abs() <= 1e-6, || format!("T0 = {t0}"))?;
    let params = BoundParams { epsilon: Some(1.0), ..Default::default() };
    let main = probability_bound(BoundKind::SincosMain, 800, &params, &spec).map_err(|e| e.to_string())?;
    let comp = main.complement.ok_or("no complement reported")?;
    ensure((comp - 1.266e-14).abs() <= 1e-17, || format!("1 - bound = {comp:e}"))?;
    ensure((main.value - (1.0 - 1.266e-14)).abs() <= 1e-17, || format!("bound = {}", main.value))?;
    Ok(format!("T0 = {t0:.8}, 1 - bound = {comp:.4e}"))
}

const C5_SEED: u64 = 5;

/// Returns the serialized per-seed outcomes and the number of failing runs.
fn death_campaign(workers: usize) -> Result<(String, usize), String> {
    let n = 50;
    let kappa = 2.5;
    let omega = sample_frequencies(n, -1.0, 1.0, C5_SEED);
    let c = SystemConfig::new(omega, kappa).map_err(|e| e.to_string())?;
    ensure(kappa > 2.0 * c.omega_max(), || "kappa <= 2 |Omega|".into())?;
    let floor = (0.5 + (0.25 - 1.0 / (kappa * kappa)).sqrt()).sqrt() - 0.02;
    let opts = SolverOptions::with_horizon(500.0);
    let mc = McConfig { samples: 200, seed: C5_SEED, workers };
    let runs = run_indexed(&mc, |k| {
        let init = sample_state(n, C5_SEED, k);
        let traj = simulate(&c, &sin(), &init, &opts).map_err(|e| e.to_string())?;
        let dead = detect_death(&traj, 0.0).map_err(|e| e.to_string())?.iter().all(|&d| d);
        Ok::<_, String>((dead, traj.final_r()))
    })
    .map_err(|e| e.to_string())?;
    let runs: Vec<(bool, f64)> = runs.into_iter().collect::<Result<_, _>>()?;
    let failures = runs.iter().filter(|(dead, r)| !dead || *r < floor).count();
    let bytes = serde_json::to_string(&runs).map_err(|e| e.to_string())?;
    Ok((bytes, failures))
}

fn criterion_5(out: &mut Option<String>) -> Verdict {
    let (bytes, failures) = death_campaign(4)?;
    *out = Some(bytes);
    ensure(failures == 0, || format!("{failures} of 200 runs failed"))?;
    Ok("200 of 200 runs dead with final R above the floor".into())
}

fn criterion_6() -> Verdict {
    let grid: Vec<f64> = (1..=10_000).map(|k| 2.0 * k as f64 / 10_000.0).collect();
    let (min, at) = appendix_inequality_check(&grid).map_err(|e| e.to_string())?;
    ensure(min >= -1e-9, || format!("min {min:e} at R0 = {at}"))?;
    for r0 in [1.0, 2.0] {
        let m = appendix_margin(r0).map_err(|e| e.to_string())?;
        ensure(m.abs() <= 1e-12, || format!("margin {m:e} at R0 = {r0}"))?;
    }
    Ok(format!("min margin {min:.2e} at R0 = {at}"))
}

fn criterion_7() -> Verdict {
    let spec = sin();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(1..=20);
        let c = SystemConfig::new(random_omega(&mut rng, n), rng.gen_range(0.1..4.0)).unwrap();
        let theta: Vec<f64> = (0..n).map(|_| rng.gen_range(-PI..PI)).collect();
        let f = vector_field(&c, &spec, &theta);
        let h = 1e-5;
        let mut err = 0.0f64;
        for i in 0..n {
            let (mut p, mut m) = (theta.clone(), theta.clone());
            p[i] += h;
            m[i] -= h;
            let g = (potential(&c, &spec, &p).unwrap() - potential(&c, &spec, &m).unwrap()) / (2.0 * h);
            err = err.max((g + f[i]).abs());
        }
        let norm = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        worst = worst.max(err / norm);
    }
    ensure(worst < 1e-6, || format!("relative gradient error {worst:e}"))?;

    let mut rise = f64::NEG_INFINITY;
    for s in 0..20u64 {
        let n = rng.gen_range(2..=12);
        let c = SystemConfig::new(random_omega(&mut rng, n), rng.gen_range(0.1..4.0)).unwrap();
        let opts = SolverOptions::with_horizon(100.0);
        let traj = simulate(&c, &spec, &sample_state(n, 70, s), &opts).map_err(|e| e.to_string())?;
        let v: Vec<f64> = traj.states.iter().map(|x| potential(&c, &spec, x).unwrap()).collect();
        let max_rise = v.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        ensure(max_rise <= 10.0 * opts.tolerance(), || format!("V rose by {max_rise:e} on trajectory {s}"))?;
        rise = rise.max(max_rise);
    }
    Ok(format!("gradient error {worst:.1e}; largest V increase {rise:.1e}"))
}

fn criterion_8() -> Verdict {
    let spec = sin();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let n = rng.gen_range(1..=20);
        let c = SystemConfig::new(random_omega(&mut rng, n), rng.gen_range(-4.0..4.0)).unwrap();
        let theta: Vec<f64> = (0..n).map(|_| rng.gen_range(-PI..PI)).collect();
        let tr = jacobian(&c, &spec, &theta).map_err(|e| e.to_string())?.trace();
        let div = divergence(&c, &spec, &theta);
        worst = worst.max((tr - div).abs() / div.abs().max(1.0));
    }
    ensure(worst <= 1e-12, || format!("trace vs divergence {worst:e}"))?;
    let mut checked = 0;
    for _ in 0..50 {
        let c = random_instance(&mut rng, 5);
        for e in enumerate_equilibria(&c).map_err(|e| e.to_string())? {
            if e.r > 0.0 && e.r < 1.0 {
                ensure(classify_stability(&c, &e) == Stability::Unstable, || format!("R = {} not Unstable", e.r))?;
                checked += 1;
            }
        }
    }
    Ok(format!("trace error {worst:.1e}; {checked} equilibria with 0 < R < 1 all Unstable"))
}

const C9_SEED: u64 = 9;

/// Returns the serialized estimates and the list of violations.
fn concentration_campaign(workers: usize) -> Result<(String, Vec<String>), String> {
    let mut rows = Vec::new();
    let mut bad = Vec::new();
    for n in [5usize, 10, 20] {
        for t in [0.2, 0.5, 0.8] {
            let mc = McConfig { samples: 100_000, seed: C9_SEED, workers };
            let est = empirical_order_param_cdf(n, t, &mc).map_err(|e| e.to_string())?;
            let params = BoundParams { t_level: Some(t), ..Default::default() };
            let bound = probability_bound(BoundKind::OrderParamCdf, n, &params, &sin()).map_err(|e| e.to_string())?;
            if est.estimate > bound.value + 3.0 * est.std_error {
                bad.push(format!("N={n} t={t}: {} > {}", est.estimate, bound.value));
            }
            rows.push((format!("cdf N={n} t={t}"), est));
        }
    }
    let c = SystemConfig::new(vec![0.0; 10], 2.0).unwrap();
    let mc = McConfig { samples: 10_000, seed: C9_SEED, workers };
    let est = estimate_escape_measure(&c, &sin(), 0.5, 10.0, &SolverOptions::default(), &mc)
        .map_err(|e| e.to_string())?;
    let bound = escape_measure_bound(10, 2.0, 0.5, 10.0).map_err(|e| e.to_string())?;
    if est.estimate > bound.value + 3.0 * est.std_error {
        bad.push(format!("escape: {} > {}", est.estimate, bound.value));
    }
    rows.push(("escape N=10 kappa=2 delta=0.5 T=10".into(), est));
    Ok((serde_json::to_string(&rows).map_err(|e| e.to_string())?, bad))
}

fn criterion_9(out: &mut Option<String>) -> Verdict {
    let (bytes, bad) = concentration_campaign(4)?;
    *out = Some(bytes);
    ensure(bad.is_empty(), || bad.join("; "))?;
    Ok("9 order-parameter estimates and the escape estimate within bound + 3 SE".into())
}

fn criterion_10() -> Verdict {
    let spec = sin();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for k in 0..50u64 {
        let n = rng.gen_range(2..=20);
        let omega = random_omega(&mut rng, n);
        let wmax = omega.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        let mut idx = 0;
        let init = loop {
            let s = sample_state(n, 1000 + k, idx);
            if order_parameter(&spec, &s) >= 0.2 {
                break s;
            }
            idx += 1;
        };
        let r0 = order_parameter(&spec, &init);
        let mu = corollary_mu(r0);
        let kappa = 1.5 * sinusoidal_threshold(r0, mu, wmax).map_err(|e| e.to_string())?;
        let c = SystemConfig::new(omega, kappa).unwrap();
        let opts = SolverOptions::with_horizon(50.0);
        let traj = simulate(&c, &spec, &init, &opts).map_err(|e| e.to_string())?;
        let check = verify_theorem_conclusions(&traj, &c, mu, opts.tolerance()).map_err(|e| e.to_string())?;
        ensure(check.all_pass(), || format!("instance {k}: {:?}", check.failures))?;
    }
    Ok("50 instances pass the lower-bound, trapping and ordering checks".into())
}

fn criterion_11(c5: &Option<String>, c9: &Option<String>) -> Verdict {
    let (c5, c9) = (c5.as_ref().ok_or("criterion 5 produced no output")?, c9.as_ref().ok_or("criterion 9 produced no output")?);
    let (again5, _) = death_campaign(1)?;
    ensure(&again5 == c5, || "criterion 5 output differs between 4 workers and 1 worker".into())?;
    let (again9, _) = concentration_campaign(1)?;
    ensure(&again9 == c9, || "criterion 9 output differs between 4 workers and 1 worker".into())?;
    let (third9, _) = concentration_campaign(3)?;
    ensure(&third9 == c9, || "criterion 9 output differs between 4 workers and 3 workers".into())?;
    Ok(format!("byte-identical outputs ({} and {} bytes) across worker counts", c5.len(), c9.len()))
}

fn main() {
    let mut c5 = None;
    let mut c9 = None;
    let mut results: Vec<(usize, &str, Duration, Duration, Verdict)> = Vec::new();
    let mut run = |id: usize, name: &'static str, limit: u64, f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let elapsed = start.elapsed();
        let line = match &verdict {
            Ok(d) if elapsed <= Duration::from_secs(limit) => format!("PASS  {d}"),
            Ok(d) => format!("FAIL  over the {limit} s budget ({d})"),
            Err(e) => format!("FAIL  {e}"),
        };
        println!("criterion {id:>2} [{name}] {line} ({:.2} s)", elapsed.as_secs_f64());
        results.push((id, name, elapsed, Duration::from_secs(limit), verdict));
    };
    run(1, "critical coupling closed form", 1, &mut criterion_1);
    run(2, "critical coupling bounds", 5, &mut criterion_2);
    run(3, "W polynomial", 30, &mut criterion_3);
    run(4, "worked numbers", 1, &mut criterion_4);
    run(5, "oscillator death", 180, &mut || criterion_5(&mut c5));
    run(6, "appendix inequality", 1, &mut criterion_6);
    run(7, "gradient flow", 30, &mut criterion_7);
    run(8, "jacobian and stability", 30, &mut criterion_8);
    run(9, "concentration bounds", 120, &mut || criterion_9(&mut c9));
    run(10, "theorem conclusions", 120, &mut criterion_10);
    // No budget is stated for this one; it reruns 5 and 9.
    run(11, "determinism", 600, &mut || criterion_11(&c5, &c9));
    let failed: Vec<usize> =
        results.iter().filter(|(_, _, t, lim, v)| v.is_err() || t > lim).map(|(id, ..)| *id).collect();
    if failed.is_empty() {
        println!("acceptance: all 11 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
