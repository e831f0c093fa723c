//! Moving (adaptive) estimation.
//!
//! For time T the parameters are the maximizer of the exponentially weighted
//! log-likelihood of x_1..x_{T-1} only. For the EPD scale this reduces to an
//! exponential moving average of |x - μ|^κ:
//!
//! ```text
//! b_{T+1} = η b_T + (1 - η) |x_T - μ|^κ,    σ_T = b_T^{1/κ}
//! ```
//!
//! Location and the second moment follow the same EMA pattern with rate ν.
//! The exact normalized-weight estimator is provided as a reference.

use serde::{Deserialize, Serialize};

use crate::epd::EpdParams;
use crate::error::{Error, Result};
use crate::estimate::kappa_from_moments;
use crate::scalar::{lit, Real};

/// Bounds applied to gradient-adapted η.
pub const ETA_CLAMP: (f64, f64) = (0.5, 0.9999);

/// Default burn-in (steps) before moment-based κ estimates are trusted.
pub const DEFAULT_KAPPA_BURN_IN: usize = 100;

/// How the location rate ν weights the previous estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LocationWeighting {
    /// μ̂ ← ν μ̂ + (1 - ν) x, so ν close to 1 means long memory.
    #[default]
    Retention,
    /// μ̂ ← (1 - ν) μ̂ + ν x.
    Innovation,
}

/// Forgetting rates of the moving estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConfig<T> {
    /// Retention of the scale accumulator b = σ^κ.
    pub eta: T,
    /// Location (and second-moment) rate.
    pub nu: T,
    /// Learning rate of the η gradient update; 0 disables it.
    pub epsilon_eta: T,
    /// Learning rate of the κ gradient update; 0 disables it.
    pub epsilon_kappa: T,
    /// Normalize the scale EMA by its weight mass so the weights sum to one.
    pub debias: bool,
    pub location_weighting: LocationWeighting,
}

impl<T: Real> Default for RateConfig<T> {
    fn default() -> Self {
        Self {
            eta: lit(0.94),
            nu: lit(0.997),
            epsilon_eta: T::zero(),
            epsilon_kappa: T::zero(),
            debias: false,
            location_weighting: LocationWeighting::Retention,
        }
    }
}

impl<T: Real> RateConfig<T> {
    pub fn with_eta(eta: T) -> Self {
        Self { eta, ..Self::default() }
    }

    /// Location frozen at its initial value.
    pub fn frozen_location(mut self) -> Self {
        self.nu = T::one();
        self.location_weighting = LocationWeighting::Retention;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: T| v > T::zero() && v <= T::one();
        if !unit(self.eta) {
            return Err(Error::InvalidParams(format!("eta must be in (0, 1], got {}", self.eta)));
        }
        let nu_ok = match self.location_weighting {
            LocationWeighting::Retention => unit(self.nu),
            LocationWeighting::Innovation => self.nu >= T::zero() && self.nu < T::one(),
        };
        if !nu_ok {
            return Err(Error::InvalidParams(format!("nu out of range: {}", self.nu)));
        }
        if !(self.epsilon_eta >= T::zero()) || !(self.epsilon_kappa >= T::zero()) {
            return Err(Error::InvalidParams("learning rates must be non-negative".into()));
        }
        Ok(())
    }

    /// One location EMA update.
    #[inline]
    pub fn update_location(&self, mu: T, x: T) -> T {
        match self.location_weighting {
            LocationWeighting::Retention => self.nu * mu + (T::one() - self.nu) * x,
            LocationWeighting::Innovation => (T::one() - self.nu) * mu + self.nu * x,
        }
    }
}

/// Evolving estimator state for one stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveState<T> {
    /// b_T = σ_T^κ.
    pub b: T,
    pub mu_hat: T,
    /// EMA of x².
    pub x2_hat: T,
    pub kappa: T,
    /// Current η_T (moves only when `rates.epsilon_eta > 0`).
    pub eta: T,
    /// 1-based index of the next observation.
    pub t: usize,
    pub rates: RateConfig<T>,
    /// Weight mass Σ η^k of the debiased accumulator.
    pub weight_mass: T,
    /// (b_{T-1}, g(x_{T-1})) for the η gradient.
    pub prev: Option<(T, T)>,
}

/// Outcome of a moment-based κ estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KappaStatus {
    Updated,
    BurnIn,
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentKappa<T> {
    pub kappa: T,
    pub status: KappaStatus,
}

impl<T: Real> AdaptiveState<T> {
    pub fn init(sigma_1: T, mu_1: T, kappa: T, rates: RateConfig<T>) -> Result<Self> {
        if !(sigma_1 > T::zero()) || !sigma_1.is_finite() {
            return Err(Error::InvalidParams(format!("sigma_1 must be positive, got {sigma_1}")));
        }
        if !(kappa > T::zero()) || !kappa.is_finite() {
            return Err(Error::InvalidParams(format!("kappa must be positive, got {kappa}")));
        }
        rates.validate()?;
        Ok(Self {
            b: sigma_1.powf(kappa),
            mu_hat: mu_1,
            x2_hat: sigma_1 * sigma_1,
            kappa,
            eta: rates.eta,
            t: 1,
            rates,
            weight_mass: T::zero(),
            prev: None,
        })
    }

    /// σ_T = b^{1/κ}, the scale used for the next observation.
    #[inline]
    pub fn sigma(&self) -> T {
        self.b.powf(self.kappa.recip())
    }

    /// Density parameters for the next observation.
    pub fn params(&self) -> EpdParams<T> {
        EpdParams {
            kappa: self.kappa,
            mu: self.mu_hat,
            sigma: self.sigma(),
        }
    }

    /// Log-density of `x` under the current (history-only) parameters.
    pub fn log_density(&self, x: T) -> T {
        self.params().log_pdf(x)
    }

    /// Emits ln ρ(x) under the pre-update parameters, then folds `x` into the
    /// scale, location and second-moment accumulators.
    pub fn step(&self, x: T) -> (Self, T) {
        let log_density = self.log_density(x);
        let one = T::one();
        let g = (x - self.mu_hat).abs().powf(self.kappa);

        let mut next = *self;
        if self.rates.epsilon_eta > T::zero() {
            if let Some((b_prev, g_prev)) = self.prev {
                let grad = eta_gradient_from_g(b_prev, g_prev, x, self.kappa, self.mu_hat);
                if grad.is_finite() {
                    next.eta = (self.eta - self.rates.epsilon_eta * grad)
                        .max(lit(ETA_CLAMP.0))
                        .min(lit(ETA_CLAMP.1));
                }
            }
        }
        let eta = next.eta;

        if self.rates.debias {
            let mass = eta * self.weight_mass + one;
            next.weight_mass = mass;
            next.b = self.b + (g - self.b) / mass;
        } else {
            next.b = eta * self.b + (one - eta) * g;
        }
        next.mu_hat = self.rates.update_location(self.mu_hat, x);
        next.x2_hat = self.rates.update_location(self.x2_hat, x * x);
        next.prev = Some((self.b, g));
        next.t = self.t + 1;
        (next, log_density)
    }

    /// Replaces κ while keeping the current scale σ fixed.
    pub fn with_kappa(&self, kappa: T) -> Self {
        let sigma = self.sigma();
        let mut next = *self;
        next.kappa = kappa;
        next.b = sigma.powf(kappa);
        next
    }

    /// Method-of-moments κ from variance_T = x̂²_T - μ̂_T² and σ_T.
    pub fn kappa_from_moments(&self, burn_in: usize, range: (T, T)) -> MomentKappa<T> {
        if self.t <= burn_in {
            return MomentKappa {
                kappa: self.kappa,
                status: KappaStatus::BurnIn,
            };
        }
        let variance = self.x2_hat - self.mu_hat * self.mu_hat;
        match kappa_from_moments(variance, self.sigma(), range) {
            Ok(kappa) => MomentKappa {
                kappa,
                status: KappaStatus::Updated,
            },
            Err(_) => MomentKappa {
                kappa: self.kappa,
                status: KappaStatus::Infeasible,
            },
        }
    }

    /// κ + ε ∂κ ln ρ(x), clamped to `range`. A singular gradient counts as 0.
    pub fn kappa_gradient_step(&self, x: T, epsilon: T, range: (T, T)) -> T {
        let grad = self.params().log_pdf_grad(x);
        let d = if grad.singular || !grad.d_kappa.is_finite() {
            T::zero()
        } else {
            grad.d_kappa
        };
        (self.kappa + epsilon * d).max(range.0).min(range.1)
    }
}

/// Scale σ̂_T from the explicitly normalized weights η^{T-t} / c_T over
/// x_1..x_{T-1} (`t_index` is 1-based). O(T) per call.
pub fn exact_moving_mle<T: Real>(history: &[T], t_index: usize, kappa: T, mu: T, eta: T) -> Result<T> {
    if t_index < 2 {
        return Err(Error::InsufficientHistory {
            needed: 2,
            got: t_index,
        });
    }
    if t_index - 1 > history.len() {
        return Err(Error::InsufficientHistory {
            needed: t_index - 1,
            got: history.len(),
        });
    }
    if !(eta > T::zero() && eta < T::one()) {
        return Err(Error::InvalidParams(format!("eta must be in (0, 1), got {eta}")));
    }
    let big_t = T::from_usize_lossy(t_index);
    let c_t = (eta - eta.powf(big_t)) / (T::one() - eta);
    let weighted: T = history[..t_index - 1]
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let lag = T::from_usize_lossy(t_index - (i + 1));
            eta.powf(lag) / c_t * (x - mu).abs().powf(kappa)
        })
        .sum();
    Ok(weighted.powf(kappa.recip()))
}

/// θ̂_T = f(b_T) with b_{T+1} = η b_T + (1 - η) g(x_T). One estimate per
/// observation, each emitted before that observation is consumed.
pub fn generic_moving_estimator<T: Real>(
    g: impl Fn(T) -> T,
    f: impl Fn(T) -> T,
    stream: &[T],
    eta: T,
    b_1: T,
) -> Vec<T> {
    let mut b = b_1;
    stream
        .iter()
        .map(|&x| {
            let estimate = f(b);
            b = eta * b + (T::one() - eta) * g(x);
            estimate
        })
        .collect()
}

/// G_T = (g(x_{T-1}) - b_{T-1}) f'(b_{T-1}) ∂σ ln ρ(f(b_{T-1}), x_T) for the
/// EPD scale, f(b) = b^{1/κ}, g(x) = |x - μ|^κ.
///
/// The caller's update is η_{T+1} = η_T - ε G_T.
pub fn eta_gradient<T: Real>(b_prev: T, x_prev: T, x: T, kappa: T, mu: T) -> T {
    eta_gradient_from_g(b_prev, (x_prev - mu).abs().powf(kappa), x, kappa, mu)
}

fn eta_gradient_from_g<T: Real>(b_prev: T, g_prev: T, x: T, kappa: T, mu: T) -> T {
    // f'(b) ∂σ ln ρ at σ = b^{1/κ} collapses to (|x-μ|^κ / b - 1) / (κ b).
    let g_now = (x - mu).abs().powf(kappa);
    (g_prev - b_prev) * (g_now / b_prev - T::one()) / (kappa * b_prev)
}

/// Clamps an updated η to the supported range.
pub fn clamp_eta<T: Real>(eta: T) -> T {
    eta.max(lit(ETA_CLAMP.0)).min(lit(ETA_CLAMP.1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate<T> {
    /// Estimated η̄ = 1 - η.
    pub eta_bar: T,
    /// Set when the step spread is zero, so the estimate is exactly 0.
    pub zero_steps: bool,
}

/// Estimates η̄ as RMS(b_{T+1} - b_T) / RMS(g(x_T) - b_T).
///
/// `b_trajectory[i]` is b before consuming `g_values[i]`; the trajectory may
/// be one longer than the g-values.
pub fn rate_from_variance_ratio<T: Real>(b_trajectory: &[T], g_values: &[T]) -> Result<RateEstimate<T>> {
    let steps = g_values.len().min(b_trajectory.len().saturating_sub(1));
    if steps < 2 {
        return Err(Error::InsufficientHistory { needed: 2, got: steps });
    }
    let n = T::from_usize_lossy(steps);
    let mut step_sq = T::zero();
    let mut innov_sq = T::zero();
    for i in 0..steps {
        let step = b_trajectory[i + 1] - b_trajectory[i];
        let innov = g_values[i] - b_trajectory[i];
        step_sq = step_sq + step * step;
        innov_sq = innov_sq + innov * innov;
    }
    if innov_sq == T::zero() {
        return Err(Error::UndefinedRate("g(x) - b has zero spread".into()));
    }
    let eta_bar = (step_sq / n).sqrt() / (innov_sq / n).sqrt();
    Ok(RateEstimate {
        eta_bar,
        zero_steps: step_sq == T::zero(),
    })
}

/// Exponentially weighted variant of [`rate_from_variance_ratio`] that can be
/// advanced one step at a time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnlineRateEstimator<T> {
    lambda: T,
    step_sq: T,
    innov_sq: T,
}

impl<T: Real> OnlineRateEstimator<T> {
    pub fn new(lambda: T) -> Self {
        Self {
            lambda,
            step_sq: T::zero(),
            innov_sq: T::zero(),
        }
    }

    pub fn update(&mut self, b_before: T, b_after: T, g: T) -> Option<T> {
        let one = T::one();
        let step = b_after - b_before;
        let innov = g - b_before;
        self.step_sq = self.lambda * self.step_sq + (one - self.lambda) * step * step;
        self.innov_sq = self.lambda * self.innov_sq + (one - self.lambda) * innov * innov;
        self.estimate()
    }

    pub fn estimate(&self) -> Option<T> {
        (self.innov_sq > T::zero()).then(|| (self.step_sq / self.innov_sq).sqrt())
    }
}
