//! Asymmetric EPD: two one-sided EPD halves glued at μ, with left mass α.

use serde::{Deserialize, Serialize};

use crate::adaptive::RateConfig;
use crate::epd::{ln_norm_const, EpdParams};
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use crate::special::gamma_pq;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AepdParams<T> {
    pub kappa_l: T,
    pub kappa_r: T,
    pub sigma_l: T,
    pub sigma_r: T,
    pub mu: T,
    /// Probability of x < μ.
    pub alpha: T,
}

/// ln C(κ) with C(κ) = κ^{-1/κ} / Γ(1 + 1/κ), the one-sided normalization.
fn ln_half_norm<T: Real>(kappa: T) -> T {
    ln_norm_const(kappa) + T::LN_2()
}

/// α = (C(κ_l) σ_r / (C(κ_r) σ_l) + 1)^{-1}, which makes the density
/// continuous at μ.
pub fn continuity_alpha<T: Real>(kappa_l: T, kappa_r: T, sigma_l: T, sigma_r: T) -> T {
    let log_ratio = ln_half_norm(kappa_l) - ln_half_norm(kappa_r) + sigma_r.ln() - sigma_l.ln();
    (log_ratio.exp() + T::one()).recip()
}

impl<T: Real> AepdParams<T> {
    pub fn new(kappa_l: T, kappa_r: T, sigma_l: T, sigma_r: T, mu: T, alpha: T) -> Result<Self> {
        for (name, v) in [
            ("kappa_l", kappa_l),
            ("kappa_r", kappa_r),
            ("sigma_l", sigma_l),
            ("sigma_r", sigma_r),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if !mu.is_finite() {
            return Err(Error::InvalidParams(format!("mu must be finite, got {mu}")));
        }
        if !(alpha > T::zero() && alpha < T::one()) {
            return Err(Error::InvalidParams(format!("alpha must be in (0, 1), got {alpha}")));
        }
        Ok(Self {
            kappa_l,
            kappa_r,
            sigma_l,
            sigma_r,
            mu,
            alpha,
        })
    }

    /// Parameters with α chosen by [`continuity_alpha`].
    pub fn continuous(kappa_l: T, kappa_r: T, sigma_l: T, sigma_r: T, mu: T) -> Result<Self> {
        Self::new(
            kappa_l,
            kappa_r,
            sigma_l,
            sigma_r,
            mu,
            continuity_alpha(kappa_l, kappa_r, sigma_l, sigma_r),
        )
    }

    /// The symmetric member equal to `p`.
    pub fn symmetric(p: &EpdParams<T>) -> Self {
        Self {
            kappa_l: p.kappa,
            kappa_r: p.kappa,
            sigma_l: p.sigma,
            sigma_r: p.sigma,
            mu: p.mu,
            alpha: lit(0.5),
        }
    }

    pub fn log_pdf(&self, x: T) -> T {
        if x < self.mu {
            let u = (self.mu - x) / self.sigma_l;
            self.alpha.ln() + ln_half_norm(self.kappa_l) - self.sigma_l.ln() - u.powf(self.kappa_l) / self.kappa_l
        } else {
            let u = (x - self.mu) / self.sigma_r;
            (T::one() - self.alpha).ln() + ln_half_norm(self.kappa_r)
                - self.sigma_r.ln()
                - u.powf(self.kappa_r) / self.kappa_r
        }
    }

    pub fn pdf(&self, x: T) -> T {
        self.log_pdf(x).exp()
    }

    /// Density limits at μ from the left and from the right.
    pub fn limits_at_mu(&self) -> (T, T) {
        let left = (self.alpha.ln() + ln_half_norm(self.kappa_l) - self.sigma_l.ln()).exp();
        let right = ((T::one() - self.alpha).ln() + ln_half_norm(self.kappa_r) - self.sigma_r.ln()).exp();
        (left, right)
    }

    pub fn cdf(&self, x: T) -> T {
        if x < self.mu {
            let z = ((self.mu - x) / self.sigma_l).powf(self.kappa_l) / self.kappa_l;
            self.alpha * gamma_pq(self.kappa_l.recip(), z).1
        } else if x == self.mu {
            self.alpha
        } else {
            let z = ((x - self.mu) / self.sigma_r).powf(self.kappa_r) / self.kappa_r;
            self.alpha + (T::one() - self.alpha) * gamma_pq(self.kappa_r.recip(), z).0
        }
    }

    fn left_half(&self) -> EpdParams<T> {
        EpdParams {
            kappa: self.kappa_l,
            mu: self.mu,
            sigma: self.sigma_l,
        }
    }

    fn right_half(&self) -> EpdParams<T> {
        EpdParams {
            kappa: self.kappa_r,
            mu: self.mu,
            sigma: self.sigma_r,
        }
    }
}

/// How α evolves in the adaptive AEPD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaMode<T> {
    /// Re-derived from the continuity condition after every step.
    Continuity,
    /// α ← ξ α + (1 - ξ)[x < μ].
    Frequency { xi: T },
}

/// Per-parameter learning rates for the optional gradient step; 0 disables
/// the corresponding update.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AepdGradientRates<T> {
    pub kappa: T,
    pub sigma: T,
    pub mu: T,
    pub alpha: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AepdAdaptiveState<T> {
    pub params: AepdParams<T>,
    pub alpha_mode: AlphaMode<T>,
    pub gradient: Option<AepdGradientRates<T>>,
    pub kappa_range: (T, T),
    pub t: usize,
}

impl<T: Real> AepdAdaptiveState<T> {
    /// Initial state; in continuity mode the supplied α is replaced.
    pub fn init(params: AepdParams<T>, alpha_mode: AlphaMode<T>) -> Result<Self> {
        if let AlphaMode::Frequency { xi } = alpha_mode {
            if !(xi > T::zero() && xi <= T::one()) {
                return Err(Error::InvalidParams(format!("xi must be in (0, 1], got {xi}")));
            }
        }
        let mut params = params;
        if alpha_mode == AlphaMode::Continuity {
            params.alpha = continuity_alpha(params.kappa_l, params.kappa_r, params.sigma_l, params.sigma_r);
        }
        Ok(Self {
            params,
            alpha_mode,
            gradient: None,
            kappa_range: (lit(0.3), lit(4.0)),
            t: 1,
        })
    }

    pub fn with_gradient(mut self, rates: AepdGradientRates<T>) -> Self {
        self.gradient = Some(rates);
        self
    }

    /// Emits ln ρ(x) under the current parameters, then updates the side of
    /// μ that `x` falls on (x ≥ μ goes right), the location, and α.
    pub fn step(&self, x: T, rates: &RateConfig<T>) -> (Self, T) {
        let p = self.params;
        let log_density = p.log_pdf(x);
        let one = T::one();
        let eta = rates.eta;
        let is_left = x < p.mu;
        let mut next = *self;

        let dev = (x - p.mu).abs();
        if is_left {
            let b = p.sigma_l.powf(p.kappa_l);
            next.params.sigma_l = (eta * b + (one - eta) * dev.powf(p.kappa_l)).powf(p.kappa_l.recip());
        } else {
            let b = p.sigma_r.powf(p.kappa_r);
            next.params.sigma_r = (eta * b + (one - eta) * dev.powf(p.kappa_r)).powf(p.kappa_r.recip());
        }
        next.params.mu = rates.update_location(p.mu, x);

        if let Some(g) = self.gradient {
            self.apply_gradient(&mut next.params, x, is_left, &g);
        }

        next.params.alpha = match self.alpha_mode {
            AlphaMode::Continuity => continuity_alpha(
                next.params.kappa_l,
                next.params.kappa_r,
                next.params.sigma_l,
                next.params.sigma_r,
            ),
            AlphaMode::Frequency { xi } => {
                let indicator = if is_left { one } else { T::zero() };
                let alpha = xi * next.params.alpha + (one - xi) * indicator;
                alpha.max(T::epsilon()).min(one - T::epsilon())
            }
        };
        next.t = self.t + 1;
        (next, log_density)
    }

    /// First-order ascent on the branch that generated `x`, using the
    /// symmetric-EPD partials of that branch.
    fn apply_gradient(&self, next: &mut AepdParams<T>, x: T, is_left: bool, g: &AepdGradientRates<T>) {
        let p = self.params;
        let half = if is_left { p.left_half() } else { p.right_half() };
        let grad = half.log_pdf_grad(x);
        let floor: T = lit(1e-12);
        let (k_lo, k_hi) = self.kappa_range;
        let step = |v: T, d: T, eps: T| if d.is_finite() { v + eps * d } else { v };
        let d_kappa = if grad.singular { T::zero() } else { grad.d_kappa };
        if is_left {
            next.kappa_l = step(next.kappa_l, d_kappa, g.kappa).max(k_lo).min(k_hi);
            next.sigma_l = step(next.sigma_l, grad.d_sigma, g.sigma).max(floor);
        } else {
            next.kappa_r = step(next.kappa_r, d_kappa, g.kappa).max(k_lo).min(k_hi);
            next.sigma_r = step(next.sigma_r, grad.d_sigma, g.sigma).max(floor);
        }
        next.mu = step(next.mu, grad.d_mu, g.mu);
        if matches!(self.alpha_mode, AlphaMode::Frequency { .. }) {
            let d_alpha = if is_left {
                p.alpha.recip()
            } else {
                -(T::one() - p.alpha).recip()
            };
            next.alpha = step(next.alpha, d_alpha, g.alpha);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_reduces_to_epd() {
        let e = EpdParams::new(1.0f64, 0.0, 1.0).unwrap();
        let a = AepdParams::symmetric(&e);
        assert!((a.pdf(0.0) - 0.5).abs() < 1e-15);
        let e = EpdParams::new(1.6, 0.3, 0.7).unwrap();
        let a = AepdParams::symmetric(&e);
        for i in 0..100 {
            let x = -4.0 + 0.083 * i as f64;
            assert!((a.pdf(x) - e.pdf(x)).abs() < 1e-14);
            assert!((a.cdf(x) - e.cdf(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn cdf_at_mu_is_alpha() {
        let a = AepdParams::new(1.0, 2.0, 1.0, 3.0, 0.4, 0.3).unwrap();
        assert_eq!(a.cdf(0.4), 0.3);
    }

    #[test]
    fn continuity_alpha_examples() {
        assert!((continuity_alpha(1.3f64, 1.3, 2.0, 2.0) - 0.5).abs() < 1e-15);
        assert!((continuity_alpha(1.0f64, 1.0, 1.0, 2.0) - 1.0 / 3.0).abs() < 1e-15);
        let a = AepdParams::continuous(0.8f64, 2.5, 0.4, 1.7, 0.0).unwrap();
        let (l, r) = a.limits_at_mu();
        assert!((l - r).abs() < 1e-12);
    }

    #[test]
    fn invalid_alpha_rejected() {
        assert!(AepdParams::new(1.0, 1.0, 1.0, 1.0, 0.0, 1.0).is_err());
        assert!(AepdParams::new(1.0, 1.0, 0.0, 1.0, 0.0, 0.5).is_err());
    }

    fn frozen() -> RateConfig<f64> {
        RateConfig::with_eta(0.9).frozen_location()
    }

    #[test]
    fn observation_at_mu_updates_right_side() {
        let p = AepdParams::new(1.0, 1.0, 1.0, 1.0, 0.0, 0.5).unwrap();
        let s = AepdAdaptiveState::init(p, AlphaMode::Continuity).unwrap();
        let (next, _) = s.step(0.0, &frozen());
        assert_eq!(next.params.sigma_l, 1.0);
        assert!((next.params.sigma_r - 0.9).abs() < 1e-15);
    }

    #[test]
    fn symmetric_stream_keeps_sides_equal() {
        let p = AepdParams::new(1.4, 1.4, 0.5, 0.5, 0.0, 0.5).unwrap();
        let mut s = AepdAdaptiveState::init(p, AlphaMode::Continuity).unwrap();
        for &x in &[0.3, 1.2, 0.05, 2.0, 0.7] {
            s = s.step(x, &frozen()).0;
            s = s.step(-x, &frozen()).0;
            assert!((s.params.sigma_l - s.params.sigma_r).abs() < 1e-15);
            let (l, r) = s.params.limits_at_mu();
            assert!((l - r).abs() < 1e-12);
        }
    }

    #[test]
    fn frequency_mode_tracks_left_share() {
        let p = AepdParams::new(1.0, 1.0, 1.0, 1.0, 0.0, 0.5).unwrap();
        let s = AepdAdaptiveState::init(p, AlphaMode::Frequency { xi: 0.5 }).unwrap();
        let (s, _) = s.step(-1.0, &frozen());
        assert!((s.params.alpha - 0.75).abs() < 1e-15);
        let (s, _) = s.step(1.0, &frozen());
        assert!((s.params.alpha - 0.375).abs() < 1e-15);
        assert!(AepdAdaptiveState::init(p, AlphaMode::Frequency { xi: 0.0 }).is_err());
    }

    #[test]
    fn gradient_step_moves_toward_observation_scale() {
        let p = AepdParams::new(1.0, 1.0, 1.0, 1.0, 0.0, 0.5).unwrap();
        let s = AepdAdaptiveState::init(p, AlphaMode::Continuity)
            .unwrap()
            .with_gradient(AepdGradientRates {
                sigma: 0.01,
                ..Default::default()
            });
        let rates = RateConfig::with_eta(1.0).frozen_location();
        let (next, _) = s.step(5.0, &rates);
        assert!(next.params.sigma_r > 1.0);
        assert_eq!(next.params.sigma_l, 1.0);
    }
}
