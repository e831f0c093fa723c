use adaptive_epd::data::gen_garch_series;
use adaptive_epd::garch::{garch_filter, garch_fit, simulate, GarchParams};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn filter_is_causal(
        xs in prop::collection::vec(-0.1f64..0.1, 2..200),
        t in 0usize..200,
        bump in -1.0f64..1.0,
        alpha in 0.0f64..0.3,
        beta in 0.0f64..0.69,
    ) {
        let p = GarchParams::new(1e-5, alpha, beta, 0.001).unwrap();
        let t = t % xs.len();
        let mut ys = xs.clone();
        ys[t] += bump;
        let a = garch_filter(&p, &xs, 1e-4).unwrap();
        let b = garch_filter(&p, &ys, 1e-4).unwrap();
        prop_assert_eq!(&a.log_densities[..t], &b.log_densities[..t]);
        prop_assert_eq!(&a.variances[..=t], &b.variances[..=t]);
    }
}

#[test]
fn fit_recovers_parameters() {
    let truth = GarchParams::new(2e-6f64, 0.08, 0.9, 0.0003).unwrap();
    let (xs, _) = simulate(&truth, 20_000, 17);
    let fit = garch_fit(&xs).unwrap();
    assert!((fit.params.persistence() - 0.98).abs() < 0.015, "{:?}", fit.params);
    assert!((fit.params.alpha - 0.08).abs() < 0.03, "{:?}", fit.params);
    let at_truth = garch_filter(
        &GarchParams {
            mu: fit.params.mu,
            ..truth
        },
        &xs,
        fit.sigma2_init,
    )
    .unwrap();
    assert!(fit.mean_loglik >= at_truth.mean_loglik - 1e-9);
}

#[test]
fn iid_gaussian_when_alpha_beta_vanish() {
    let p = GarchParams::new(4e-4, 0.0, 0.0, 0.01).unwrap();
    let (series, vars) = gen_garch_series(&p, 50_000, 2);
    assert!(vars.iter().all(|&v| v == 4e-4));
    let n = series.len() as f64;
    let mean = series.values.iter().sum::<f64>() / n;
    let var = series.values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    assert!((mean - 0.01).abs() < 4.0 * (4e-4f64 / n).sqrt());
    assert!((var / 4e-4 - 1.0).abs() < 0.03);
}

#[test]
fn long_run_variance_is_unconditional() {
    let p = GarchParams::new(1e-6, 0.05, 0.9, 0.0).unwrap();
    let (series, _) = gen_garch_series(&p, 1_000_000, 4);
    let n = series.len() as f64;
    let var = series.values.iter().map(|x| x * x).sum::<f64>() / n;
    assert!((var / p.unconditional_variance() - 1.0).abs() < 0.05);
}

#[test]
fn latent_variance_obeys_recursion() {
    let p = GarchParams::new(1e-6, 0.1, 0.85, 0.0002).unwrap();
    let (series, vars) = gen_garch_series(&p, 1_000, 6);
    for t in 1..vars.len() {
        let e = series.values[t - 1] - p.mu;
        let expected = p.omega + p.alpha * e * e + p.beta * vars[t - 1];
        assert!((vars[t] - expected).abs() <= 1e-15 * expected);
    }
}
