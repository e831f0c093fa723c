use adaptive_epd::adaptive::RateConfig;
use adaptive_epd::aepd::{AepdAdaptiveState, AepdParams, AlphaMode};
use proptest::prelude::*;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn params() -> impl Strategy<Value = AepdParams<f64>> {
    (
        0.6f64..3.0,
        0.6f64..3.0,
        0.2f64..2.0,
        0.2f64..2.0,
        -1.0f64..1.0,
        0.1f64..0.9,
    )
        .prop_map(|(kl, kr, sl, sr, mu, alpha)| AepdParams::new(kl, kr, sl, sr, mu, alpha).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn cdf_is_the_integral_of_the_density(p in params(), d in 0.05f64..3.0) {
        // u = d s² removes the cusp at μ
        let left = simpson(|s| p.pdf(p.mu - d * s * s) * 2.0 * d * s, 0.0, 1.0, 4000);
        let right = simpson(|s| p.pdf(p.mu + d * s * s) * 2.0 * d * s, 0.0, 1.0, 4000);
        prop_assert!((p.cdf(p.mu) - p.cdf(p.mu - d) - left).abs() < 1e-6);
        prop_assert!((p.cdf(p.mu + d) - p.cdf(p.mu) - right).abs() < 1e-6);
        prop_assert!((p.cdf(p.mu) - p.alpha).abs() < 1e-15);
        prop_assert!(p.cdf(p.mu - 80.0 * p.sigma_l) < 1e-6 && p.cdf(p.mu + 80.0 * p.sigma_r) > 1.0 - 1e-6);
    }

    #[test]
    fn continuous_variant_has_no_jump(kl in 0.6f64..3.0, kr in 0.6f64..3.0, sl in 0.2f64..2.0, sr in 0.2f64..2.0) {
        let p = AepdParams::continuous(kl, kr, sl, sr, 0.0).unwrap();
        let (l, r) = p.limits_at_mu();
        prop_assert!((l / r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn adaptive_state_stays_valid(xs in prop::collection::vec(-3.0f64..3.0, 1..200), xi in 0.001f64..0.2) {
        let init = AepdParams::continuous(1.0, 1.5, 0.5, 0.5, 0.0).unwrap();
        for mode in [AlphaMode::Continuity, AlphaMode::Frequency { xi }] {
            let mut s = AepdAdaptiveState::init(init, mode).unwrap();
            for &x in &xs {
                let (next, lp) = s.step(x, &RateConfig::default());
                prop_assert!(lp.is_finite());
                prop_assert!(next.params.alpha > 0.0 && next.params.alpha < 1.0);
                prop_assert!(next.params.sigma_l > 0.0 && next.params.sigma_r > 0.0);
                s = next;
            }
        }
    }
}
