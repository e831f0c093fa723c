use adaptive_epd::data::{alternating_schedule, gen_epd_series, gen_garch_series, gen_regime_switching, ReturnSeries};
use adaptive_epd::epd::EpdParams;
use adaptive_epd::eval::{
    cdf_normalize, compare_models, eval_adaptive, eval_static, eval_static_holdout, ks_critical_1pct, ks_statistic,
    run_adaptive, sweep_kappa, AdaptiveSpec, ModelSpec, SweepMode,
};
use adaptive_epd::garch::GarchParams;

fn regime_series(n_blocks: usize, seed: u64) -> ReturnSeries {
    gen_regime_switching(1.0, &alternating_schedule(&[0.01, 0.03], 500, n_blocks), seed)
        .unwrap()
        .0
}

#[test]
fn static_gaussian_matches_entropy() {
    let sigma = 0.013;
    let r = gen_epd_series(&EpdParams::new(2.0, 0.0004, sigma).unwrap(), 100_000, 1).unwrap();
    let report = eval_static(&r, Some(2.0)).unwrap();
    let entropy = -0.5 * (std::f64::consts::TAU * sigma * sigma).ln() - 0.5;
    assert!((report.mean_loglik - entropy).abs() < 0.01);
}

#[test]
fn static_sweep_equals_independent_fits() {
    let r = regime_series(4, 2);
    let grid = [0.6, 0.9, 1.0, 1.4, 2.0];
    let curve = sweep_kappa(&r, &grid, SweepMode::Static, &AdaptiveSpec::new(1.0)).unwrap();
    for (k, ll) in grid.iter().zip(&curve.loglik) {
        assert_eq!(ll.unwrap(), eval_static(&r, Some(*k)).unwrap().mean_loglik);
    }
}

#[test]
fn adaptive_sweep_sits_above_static_on_regimes() {
    let r = regime_series(10, 3);
    let grid: Vec<f64> = (0..9).map(|i| 0.6 + 0.2 * i as f64).collect();
    let base = AdaptiveSpec::new(1.0);
    let stat = sweep_kappa(&r, &grid, SweepMode::Static, &base).unwrap();
    let adap = sweep_kappa(&r, &grid, SweepMode::AdaptiveFixedRate, &base).unwrap();
    for (s, a) in stat.loglik.iter().zip(&adap.loglik) {
        assert!(a.unwrap() > s.unwrap());
    }
    let opt = sweep_kappa(&r, &grid[3..5], SweepMode::AdaptiveOptimizedRate, &base).unwrap();
    for (o, a) in opt.loglik.iter().zip(&adap.loglik[3..5]) {
        assert!(o.unwrap() >= a.unwrap() - 1e-9);
    }
}

#[test]
fn appending_an_observation_keeps_earlier_terms() {
    let r = regime_series(2, 4);
    let spec = AdaptiveSpec::new(1.3).with_adaptive_mu(0.99);
    let full = run_adaptive(&r.values, &spec).unwrap().log_densities;
    let short = run_adaptive(&r.values[..r.len() - 1], &spec).unwrap().log_densities;
    assert_eq!(&full[..short.len()], &short[..]);
}

#[test]
fn garch_outranks_static_gaussian_on_garch_data() {
    let (r, _) = gen_garch_series(&GarchParams::new(2e-6, 0.1, 0.88, 0.0).unwrap(), 5_000, 5);
    let out = compare_models(&r, &[ModelSpec::StaticEpd { kappa: Some(2.0) }, ModelSpec::Garch]).unwrap();
    assert_eq!(out[0].model_id, "garch(1,1)");
}

#[test]
fn adaptive_outranks_static_on_regimes_in_any_order() {
    let r = regime_series(6, 6);
    let specs: Vec<ModelSpec> = ["static:1", "adaptive:1", "garch", "aepd:1:1"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let a = compare_models(&r, &specs).unwrap();
    let mut reversed = specs.clone();
    reversed.reverse();
    let b = compare_models(&r, &reversed).unwrap();
    assert_eq!(a, b);
    let rank = |id: &str| a.iter().find(|o| o.model_id.starts_with(id)).unwrap().rank.unwrap();
    assert!(rank("adaptive-epd") < rank("static-epd"));
}

#[test]
fn normalized_static_data_is_uniform() {
    let r = gen_epd_series(&EpdParams::new(1.4, 0.0, 0.02).unwrap(), 10_000, 7).unwrap();
    let ys = cdf_normalize(&r, &ModelSpec::StaticEpd { kappa: Some(1.4) }).unwrap();
    assert!(ys.iter().all(|&y| y > 0.0 && y < 1.0));
    assert!(ks_statistic(&ys).unwrap() < ks_critical_1pct(ys.len()));
}

#[test]
fn adaptive_normalization_beats_static_on_regimes() {
    let r = regime_series(10, 8);
    let ks = |spec: &ModelSpec| ks_statistic(&cdf_normalize(&r, spec).unwrap()).unwrap();
    assert!(ks(&"adaptive:1".parse().unwrap()) < ks(&ModelSpec::StaticEpd { kappa: Some(1.0) }));
}

#[test]
fn uniform_draws_pass_ks() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
    let ys: Vec<f64> = (0..10_000).map(|_| rng.random_range(1e-12..1.0)).collect();
    assert!(ks_statistic(&ys).unwrap() < 0.0163);
}

#[test]
fn holdout_scores_unseen_data() {
    let r = gen_epd_series(&EpdParams::new(1.0, 0.0, 0.01).unwrap(), 2_000, 9).unwrap();
    let held = eval_static_holdout(&r, Some(1.0), 0.5).unwrap();
    let inside = eval_static(&r, Some(1.0)).unwrap();
    assert_eq!(held.n, 1_000);
    assert!((held.mean_loglik - inside.mean_loglik).abs() < 0.1);
    assert!(eval_static_holdout(&r, Some(1.0), 1.0).is_err());
}

#[test]
fn trajectories_cover_every_step() {
    let r = regime_series(2, 11);
    let report = eval_adaptive(&r, &AdaptiveSpec::new(1.0)).unwrap();
    let traj = report.trajectories.unwrap();
    assert_eq!(traj.sigma.len(), r.len());
    assert_eq!(traj.sigma[0], 0.01);
    assert!(traj.mu.iter().all(|&m| m == 0.0));
}
