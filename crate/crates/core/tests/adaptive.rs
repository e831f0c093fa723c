use adaptive_epd::adaptive::eta_gradient;
use adaptive_epd::adaptive::{
    exact_moving_mle, generic_moving_estimator, rate_from_variance_ratio, AdaptiveState, RateConfig, ETA_CLAMP,
};
use adaptive_epd::data::gen_regime_switching;
use adaptive_epd::epd::EpdParams;
use adaptive_epd::eval::{run_adaptive, AdaptiveSpec};
use proptest::prelude::*;

fn stream() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 2..120)
}

/// Mean log-likelihood following the vectorized form: prepend the initial
/// value, take the EMA, drop the last element.
fn shifted_ema_loglik(xs: &[f64], kappa: f64, eta: f64, nu: f64, mu_1: f64, sigma_1: f64) -> f64 {
    let ema = |seq: Vec<f64>, retention: f64| -> Vec<f64> {
        let mut out = Vec::with_capacity(seq.len());
        let mut acc = seq[0];
        out.push(acc);
        for &v in &seq[1..] {
            acc = retention * acc + (1.0 - retention) * v;
            out.push(acc);
        }
        out
    };
    let n = xs.len();
    let mut with_mu = vec![mu_1];
    with_mu.extend_from_slice(xs);
    let mu: Vec<f64> = ema(with_mu, nu)[..n].to_vec();
    let mut g = vec![sigma_1.powf(kappa)];
    g.extend(xs.iter().zip(&mu).map(|(x, m)| (x - m).abs().powf(kappa)));
    let sigma: Vec<f64> = ema(g, eta)[..n].iter().map(|b| b.powf(1.0 / kappa)).collect();
    let ln_c = -kappa.ln() / kappa - 2f64.ln() - adaptive_epd::special::ln_gamma(1.0 + 1.0 / kappa).unwrap();
    (0..n)
        .map(|t| ln_c - sigma[t].ln() - ((xs[t] - mu[t]).abs() / sigma[t]).powf(kappa) / kappa)
        .sum::<f64>()
        / n as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn debiased_recursion_equals_normalized_weights(xs in stream(), kappa in 0.5f64..3.0, eta in 0.5f64..0.999, mu in -0.5f64..0.5) {
        let rates = RateConfig { eta, debias: true, ..RateConfig::default() }.frozen_location();
        let mut s = AdaptiveState::init(1.0, mu, kappa, rates).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            s = s.step(x).0;
            let exact = exact_moving_mle(&xs, i + 2, kappa, mu, eta).unwrap();
            prop_assert!((s.sigma() / exact - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn state_matches_generic_estimator(xs in stream(), kappa in 0.5f64..3.0, eta in 0.5f64..0.999) {
        let rates = RateConfig::with_eta(eta).frozen_location();
        let generic = generic_moving_estimator(|x: f64| x.abs().powf(kappa), |b: f64| b.powf(1.0 / kappa), &xs, eta, 0.7f64.powf(kappa));
        let mut s = AdaptiveState::init(0.7, 0.0, kappa, rates).unwrap();
        for (x, g) in xs.iter().zip(&generic) {
            prop_assert!((s.sigma() / g - 1.0).abs() < 1e-13);
            s = s.step(*x).0;
        }
    }

    #[test]
    fn walk_forward_equals_shifted_ema(xs in stream(), kappa in 0.5f64..3.0, eta in 0.5f64..0.999, nu in 0.5f64..0.999) {
        prop_assume!(xs.windows(2).any(|w| w[0] != w[1]));
        let spec = AdaptiveSpec { kappa, sigma_1: 0.8, mu_1: 0.1, ..AdaptiveSpec::new(kappa).with_eta(eta).with_adaptive_mu(nu) };
        let run = run_adaptive(&xs, &spec).unwrap();
        let stepwise = run.log_densities.iter().sum::<f64>() / xs.len() as f64;
        let vectorized = shifted_ema_loglik(&xs, kappa, eta, nu, 0.1, 0.8);
        prop_assert!((stepwise - vectorized).abs() < 1e-12 * (1.0 + vectorized.abs()));
    }

    #[test]
    fn earlier_terms_ignore_later_observations(xs in stream(), t in 0usize..120, bump in -10.0f64..10.0, kappa in 0.5f64..3.0) {
        let t = t % xs.len();
        let mut ys = xs.clone();
        ys[t] += bump;
        prop_assume!(xs.windows(2).any(|w| w[0] != w[1]) && ys.windows(2).any(|w| w[0] != w[1]));
        let spec = AdaptiveSpec::new(kappa).with_adaptive_mu(0.9);
        let a = run_adaptive(&xs, &spec).unwrap().log_densities;
        let b = run_adaptive(&ys, &spec).unwrap().log_densities;
        prop_assert_eq!(&a[..t], &b[..t]);
    }

    #[test]
    fn eta_gradient_matches_finite_difference(
        b in 0.2f64..3.0,
        x_prev in -3.0f64..3.0,
        x in -3.0f64..3.0,
        kappa in 0.5f64..3.0,
    ) {
        let g_prev = x_prev.abs().powf(kappa);
        let delta = g_prev - b;
        let lp = |rate: f64| EpdParams::new(kappa, 0.0, (b + rate * delta).powf(1.0 / kappa)).unwrap().log_pdf(x);
        let h = 1e-5 * b / delta.abs().max(1e-3);
        let fd = (lp(h) - lp(-h)) / (2.0 * h);
        let g = eta_gradient(b, x_prev, x, kappa, 0.0);
        prop_assert!((g - fd).abs() <= 1e-4 * g.abs().max(fd.abs()) + 1e-9, "G={g} fd={fd}");
    }

    #[test]
    fn online_eta_stays_clamped(xs in prop::collection::vec(-3.0f64..3.0, 2..300), eps in 0.0f64..5.0) {
        let rates = RateConfig { epsilon_eta: eps, ..RateConfig::default() };
        let mut s = AdaptiveState::init(1.0, 0.0, 1.0, rates).unwrap();
        for &x in &xs {
            s = s.step(x).0;
            prop_assert!(s.eta >= ETA_CLAMP.0 && s.eta <= ETA_CLAMP.1);
            prop_assert!(s.b > 0.0 || xs.iter().all(|&v| v == 0.0));
        }
    }
}

#[test]
fn rate_ratio_recovers_update_speed() {
    let eta = 0.93;
    let (series, _) = gen_regime_switching(1.0, &[(5_000, 1.0)], 21).unwrap();
    let g: Vec<f64> = series.values.iter().map(|x| x.abs()).collect();
    let mut b = vec![1.0];
    for &gv in &g {
        let last = *b.last().unwrap();
        b.push(eta * last + (1.0 - eta) * gv);
    }
    let est = rate_from_variance_ratio(&b, &g).unwrap();
    assert!((est.eta_bar - (1.0 - eta)).abs() < 1e-12);
}

#[test]
fn adaptive_scale_tracks_regimes() {
    let (series, latent) = gen_regime_switching(1.0, &[(2_000, 0.01), (2_000, 0.04)], 3).unwrap();
    let run = run_adaptive(&series.values, &AdaptiveSpec::new(1.0)).unwrap();
    let mean_sigma =
        |r: std::ops::Range<usize>| run.params[r.clone()].iter().map(|p| p.sigma).sum::<f64>() / r.len() as f64;
    assert!((mean_sigma(200..2_000) / latent[1_000] - 1.0).abs() < 0.1);
    assert!((mean_sigma(2_200..4_000) / latent[3_000] - 1.0).abs() < 0.1);
}
