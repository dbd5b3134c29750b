use std::f64::consts::PI;

use winfree::integrate::SolverOptions;
use winfree::model::{InteractionSpec, SystemConfig};
use winfree::montecarlo::*;
use winfree::thresholds::{escape_measure_bound, probability_bound, BoundKind, BoundParams};

fn mc(samples: u64, seed: u64, workers: usize) -> McConfig {
    McConfig { samples, seed, workers }
}

fn sin() -> InteractionSpec {
    InteractionSpec::sinusoidal()
}

#[test]
fn sampling_is_deterministic_and_in_range() {
    let a = sample_uniform_initial(5, &mc(200, 17, 1)).unwrap();
    let b = sample_uniform_initial(5, &mc(200, 17, 3)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, sample_uniform_initial(5, &mc(200, 18, 1)).unwrap());
    assert!(a.iter().flat_map(|s| s.iter()).all(|&x| (-PI..PI).contains(&x)));
    // Sample k does not depend on how many samples are drawn.
    let short = sample_uniform_initial(5, &mc(10, 17, 2)).unwrap();
    assert_eq!(&a[..10], &short[..]);
}

#[test]
fn coordinate_mean_is_centred() {
    let n = 10;
    let samples = 100_000;
    let states = sample_uniform_initial(n, &mc(samples, 3, 4)).unwrap();
    let draws = (samples as usize * n) as f64;
    let mean = states.iter().flat_map(|s| s.iter()).sum::<f64>() / draws;
    let sigma = PI / (3.0 * draws).sqrt();
    assert!(mean.abs() < 4.0 * sigma, "mean {mean}, sigma {sigma}");
    let var = states.iter().flat_map(|s| s.iter()).map(|x| x * x).sum::<f64>() / draws;
    assert!((var - PI * PI / 3.0).abs() < 0.01);
}

#[test]
fn invalid_sampling_inputs() {
    assert!(sample_uniform_initial(0, &mc(1, 0, 1)).is_err());
    assert!(sample_uniform_initial(1, &mc(0, 0, 1)).is_err());
    assert!(sample_uniform_initial(1, &mc(1, 0, 0)).is_err());
}

#[test]
fn frequency_stream_is_separate() {
    let w = sample_frequencies(8, -1.0, 1.0, 5);
    assert_eq!(w, sample_frequencies(8, -1.0, 1.0, 5));
    assert!(w.iter().all(|x| (-1.0..1.0).contains(x)));
    assert_eq!(sample_frequencies(3, 0.5, 0.5, 1), vec![0.5; 3]);
}

#[test]
fn order_param_cdf_single_oscillator() {
    let est = empirical_order_param_cdf(1, 1.0, &mc(100_000, 9, 4)).unwrap();
    assert!((est.estimate - 0.5).abs() < 4.0 * est.std_error);
    let se = (est.estimate * (1.0 - est.estimate) / est.count as f64).sqrt();
    assert_eq!(est.std_error, se);
}

#[test]
fn order_param_cdf_respects_bound() {
    let est = empirical_order_param_cdf(10, 0.2, &mc(100_000, 11, 4)).unwrap();
    let params = BoundParams { t_level: Some(0.2), ..Default::default() };
    let bound = probability_bound(BoundKind::OrderParamCdf, 10, &params, &sin()).unwrap();
    assert!((bound.value - 1.662e-3).abs() < 1e-6);
    assert!(est.estimate <= bound.value + 3.0 * est.std_error, "{} > {}", est.estimate, bound.value);
}

#[test]
fn order_param_indicators_are_nested() {
    let levels: Vec<f64> = (1..20).map(|k| k as f64 / 20.0).collect();
    let ind = order_param_indicators(6, &levels, &mc(5_000, 2, 2)).unwrap();
    for row in &ind {
        assert!(row.windows(2).all(|w| w[0] <= w[1]));
    }
    let fractions: Vec<usize> = (0..levels.len()).map(|i| ind.iter().filter(|r| r[i]).count()).collect();
    assert!(fractions.windows(2).all(|w| w[0] <= w[1]));
    let direct = empirical_order_param_cdf(6, levels[7], &mc(5_000, 2, 1)).unwrap();
    assert_eq!(direct.estimate, fractions[7] as f64 / 5_000.0);
}

#[test]
fn strong_coupling_kills_every_sample() {
    let omega = sample_frequencies(20, -1.0, 1.0, 1);
    let c = SystemConfig::new(omega, 3.0).unwrap();
    let opts = SolverOptions::with_horizon(100.0);
    let est = empirical_death_probability(&c, &sin(), &opts, &mc(100, 1, 4)).unwrap();
    assert_eq!(est.epsilon, Some(1.0));
    assert_eq!(est.death.estimate, 1.0);
    assert_eq!(est.death_with_floor.estimate, 1.0);
    assert_eq!(est.failures, 0);
    let params = BoundParams { epsilon: Some(1.0), ..Default::default() };
    let bound = probability_bound(BoundKind::SincosMain, 20, &params, &sin()).unwrap();
    assert!((bound.value - (1.0 - (-0.8f64).exp())).abs() < 1e-12);
    assert!(est.death_with_floor.estimate >= bound.value);
}

#[test]
fn uncoupled_oscillators_never_die() {
    let c = SystemConfig::new(vec![0.7, -0.9, 1.0, 0.5], 0.0).unwrap();
    let opts = SolverOptions::with_horizon(50.0);
    let est = empirical_death_probability(&c, &sin(), &opts, &mc(20, 4, 2)).unwrap();
    assert_eq!(est.death.estimate, 0.0);
    assert_eq!(est.epsilon, None);
}

#[test]
fn identical_zero_frequencies_always_die() {
    let c = SystemConfig::new(vec![0.0; 6], 0.8).unwrap();
    let opts = SolverOptions::with_horizon(50.0);
    let est = empirical_death_probability(&c, &sin(), &opts, &mc(50, 8, 2)).unwrap();
    assert_eq!(est.death.estimate, 1.0);
}

#[test]
fn escape_measure_respects_bound() {
    let c = SystemConfig::new(vec![0.0; 10], 2.0).unwrap();
    let opts = SolverOptions::default();
    let est = estimate_escape_measure(&c, &sin(), 0.5, 10.0, &opts, &mc(10_000, 21, 4)).unwrap();
    let bound = escape_measure_bound(10, 2.0, 0.5, 10.0).unwrap();
    assert!(est.estimate <= bound.value + 3.0 * est.std_error, "{} > {}", est.estimate, bound.value);
}

#[test]
fn escape_measure_is_nested_in_time() {
    let c = SystemConfig::new(vec![0.1, -0.2, 0.05, 0.0], 1.0).unwrap();
    let opts = SolverOptions::default();
    let run = |t| estimate_escape_measure(&c, &sin(), 0.3, t, &opts, &mc(400, 5, 2)).unwrap().estimate;
    let (a, b, d) = (run(0.5), run(2.0), run(8.0));
    assert!(a >= b && b >= d, "{a} {b} {d}");
    // Small δ makes the bound vacuous.
    let tiny = estimate_escape_measure(&c, &sin(), 1e-3, 0.5, &opts, &mc(200, 5, 2)).unwrap();
    let bound = escape_measure_bound(4, 1.0, 1e-3, 0.5).unwrap();
    assert!(bound.value > 0.99 && tiny.estimate <= bound.value.min(1.0));
    assert!(estimate_escape_measure(&c, &sin(), 1.0, 1.0, &opts, &mc(1, 0, 1)).is_err());
    assert!(estimate_escape_measure(&c, &sin(), 0.5, 0.0, &opts, &mc(1, 0, 1)).is_err());
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let c = SystemConfig::new(sample_frequencies(8, -1.0, 1.0, 3), 2.5).unwrap();
    let opts = SolverOptions::with_horizon(40.0);
    let one = empirical_death_probability(&c, &sin(), &opts, &mc(64, 12, 1)).unwrap();
    let four = empirical_death_probability(&c, &sin(), &opts, &mc(64, 12, 4)).unwrap();
    assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&four).unwrap());
    let e1 = estimate_escape_measure(&c, &sin(), 0.4, 5.0, &opts, &mc(64, 12, 1)).unwrap();
    let e4 = estimate_escape_measure(&c, &sin(), 0.4, 5.0, &opts, &mc(64, 12, 4)).unwrap();
    assert_eq!(e1, e4);
}

#[test]
fn report_dominance() {
    let est = EstimateCI::from_hits(10, 100);
    assert!(McReport::upper("x", serde_json::json!({}), est, 0.05).dominated);
    assert!(!McReport::upper("x", serde_json::json!({}), est, 0.0).dominated);
    assert!(McReport::lower("x", serde_json::json!({}), est, 0.15).dominated);
    assert!(!McReport::lower("x", serde_json::json!({}), est, 0.5).dominated);
}
