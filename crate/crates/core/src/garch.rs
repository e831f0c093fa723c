//! GARCH(1,1) with Gaussian innovations, used as the comparison baseline.
//!
//! ```text
//! x_t = μ + ε_t,   ε_t ~ N(0, σ²_t)
//! σ²_t = ω + α (x_{t-1} - μ)² + β σ²_{t-1}
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::scalar::{lit, Real};

/// Cap on α + β in the fit parameterization.
const MAX_PERSISTENCE: f64 = 0.9999;
/// (α + β, α / (α + β)) starting points of the multi-start fit.
const STARTS: [(f64, f64); 5] = [(0.9, 0.1), (0.95, 0.05), (0.98, 0.08), (0.8, 0.25), (0.5, 0.5)];
const MIN_FIT_LEN: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchParams<T> {
    pub omega: T,
    pub alpha: T,
    pub beta: T,
    pub mu: T,
}

impl<T: Real> GarchParams<T> {
    pub fn new(omega: T, alpha: T, beta: T, mu: T) -> Result<Self> {
        if !(omega > T::zero()) || !omega.is_finite() {
            return Err(Error::InvalidParams(format!("omega must be positive, got {omega}")));
        }
        if !(alpha >= T::zero()) || !(beta >= T::zero()) {
            return Err(Error::InvalidParams(format!(
                "alpha and beta must be non-negative, got {alpha}, {beta}"
            )));
        }
        if !(alpha + beta < T::one()) {
            return Err(Error::InvalidParams(format!(
                "alpha + beta must be < 1 for stationarity, got {}",
                alpha + beta
            )));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidParams(format!("mu must be finite, got {mu}")));
        }
        Ok(Self { omega, alpha, beta, mu })
    }

    /// ω / (1 - α - β).
    pub fn unconditional_variance(&self) -> T {
        self.omega / (T::one() - self.alpha - self.beta)
    }

    pub fn persistence(&self) -> T {
        self.alpha + self.beta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GarchFilter<T> {
    /// One-step-ahead σ²_t, each computed from x_1..x_{t-1}.
    pub variances: Vec<T>,
    /// Per-observation Gaussian log-densities.
    pub log_densities: Vec<T>,
    pub mean_loglik: T,
}

/// Runs the variance recursion from σ²_1 = `sigma2_init`.
pub fn garch_filter<T: Real>(p: &GarchParams<T>, returns: &[T], sigma2_init: T) -> Result<GarchFilter<T>> {
    if returns.is_empty() {
        return Err(Error::InsufficientData("empty return series".into()));
    }
    if !(sigma2_init > T::zero()) {
        return Err(Error::InvalidParams(format!(
            "initial variance must be positive, got {sigma2_init}"
        )));
    }
    let half: T = lit(0.5);
    let ln_2pi = T::TAU().ln();
    let mut variances = Vec::with_capacity(returns.len());
    let mut log_densities = Vec::with_capacity(returns.len());
    let mut var = sigma2_init;
    for &x in returns {
        let e = x - p.mu;
        variances.push(var);
        log_densities.push(-half * (ln_2pi + var.ln()) - half * e * e / var);
        var = p.omega + p.alpha * e * e + p.beta * var;
    }
    let mean_loglik = log_densities.iter().copied().sum::<T>() / T::from_usize_lossy(returns.len());
    Ok(GarchFilter {
        variances,
        log_densities,
        mean_loglik,
    })
}

/// Mean log-likelihood only, without allocating trajectories.
fn garch_mean_loglik<T: Real>(p: &GarchParams<T>, returns: &[T], sigma2_init: T) -> T {
    let half: T = lit(0.5);
    let ln_2pi = T::TAU().ln();
    let mut var = sigma2_init;
    let mut acc = T::zero();
    for &x in returns {
        let e = x - p.mu;
        acc = acc - half * (ln_2pi + var.ln()) - half * e * e / var;
        var = p.omega + p.alpha * e * e + p.beta * var;
    }
    acc / T::from_usize_lossy(returns.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchFit<T> {
    pub params: GarchParams<T>,
    pub mean_loglik: T,
    /// σ²_1 used by the filter (the sample variance).
    pub sigma2_init: T,
    /// False when no start reached the simplex convergence criterion.
    pub converged: bool,
}

fn logistic<T: Real>(v: T) -> T {
    (T::one() + (-v).exp()).recip()
}

fn logit<T: Real>(p: T) -> T {
    (p / (T::one() - p)).ln()
}

/// Maps unconstrained (ln ω, logit persistence, logit α-share) to parameters.
fn decode<T: Real>(theta: &[T], mu: T) -> GarchParams<T> {
    let persistence = lit::<T>(MAX_PERSISTENCE) * logistic(theta[1]);
    let alpha = persistence * logistic(theta[2]);
    GarchParams {
        omega: theta[0].exp(),
        alpha,
        beta: persistence - alpha,
        mu,
    }
}

/// Two-stage Gaussian MLE: μ is the sample mean, σ²_1 the sample variance,
/// then (ω, α, β) by Nelder–Mead from several fixed starts.
pub fn garch_fit<T: Real>(returns: &[T]) -> Result<GarchFit<T>> {
    if returns.len() < MIN_FIT_LEN {
        return Err(Error::InsufficientData(format!(
            "GARCH fit needs at least {MIN_FIT_LEN} observations, got {}",
            returns.len()
        )));
    }
    let n = T::from_usize_lossy(returns.len());
    let mu = returns.iter().copied().sum::<T>() / n;
    let variance = returns.iter().map(|&x| (x - mu) * (x - mu)).sum::<T>() / n;
    if returns.windows(2).all(|w| w[0] == w[1]) || !(variance > T::zero()) {
        return Err(Error::DegenerateSample("return series has zero variance".into()));
    }

    let objective = |theta: &[T]| -garch_mean_loglik(&decode(theta, mu), returns, variance);
    let opts = NelderMeadOptions {
        max_iters: 3_000,
        f_tol: lit(1e-13),
        x_tol: lit(1e-7),
        initial_step: lit(0.5),
    };

    let results: Vec<_> = STARTS
        .par_iter()
        .map(|&(persistence, share)| {
            let persistence: T = lit(persistence);
            let share: T = lit(share);
            let omega = variance * (T::one() - persistence);
            let start = [omega.ln(), logit(persistence / lit(MAX_PERSISTENCE)), logit(share)];
            let first = nelder_mead(objective, &start, &opts);
            // Restart from the optimum to escape a collapsed simplex.
            let polished = nelder_mead(objective, &first.x, &opts);
            if polished.value <= first.value {
                polished
            } else {
                first
            }
        })
        .collect();

    let best = results
        .iter()
        .min_by(|a, b| a.value.partial_cmp(&b.value).unwrap_or(std::cmp::Ordering::Equal))
        .expect("at least one start");
    let converged = results.iter().any(|r| r.converged);

    let mut params = decode(&best.x, mu);
    let mut mean_loglik = -best.value;
    let constant = GarchParams {
        omega: variance,
        alpha: T::zero(),
        beta: T::zero(),
        mu,
    };
    let constant_ll = garch_mean_loglik(&constant, returns, variance);
    if !(mean_loglik >= constant_ll) {
        params = constant;
        mean_loglik = constant_ll;
    }
    Ok(GarchFit {
        params,
        mean_loglik,
        sigma2_init: variance,
        converged,
    })
}

/// Simulated path and its latent variances; σ²_1 is the unconditional variance.
pub fn simulate<T: Real>(p: &GarchParams<T>, n: usize, seed: u64) -> (Vec<T>, Vec<T>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = p.omega.to_f64_lossy();
    let alpha = p.alpha.to_f64_lossy();
    let beta = p.beta.to_f64_lossy();
    let mu = p.mu.to_f64_lossy();
    let mut var = omega / (1.0 - alpha - beta);
    let mut xs = Vec::with_capacity(n);
    let mut vars = Vec::with_capacity(n);
    for _ in 0..n {
        let z: f64 = StandardNormal.sample(&mut rng);
        let e = var.sqrt() * z;
        xs.push(T::lit(mu + e));
        vars.push(T::lit(var));
        var = omega + alpha * e * e + beta * var;
    }
    (xs, vars)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(GarchParams::new(0.0, 0.1, 0.8, 0.0).is_err());
        assert!(GarchParams::new(1e-6, 0.5, 0.5, 0.0).is_err());
        assert!(GarchParams::new(1e-6, -0.1, 0.5, 0.0).is_err());
        let p = GarchParams::new(1e-6f64, 0.08, 0.9, 0.0).unwrap();
        assert!((p.unconditional_variance() - 5e-5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_recursion_is_constant() {
        let p = GarchParams::new(0.04, 0.0, 0.0, 0.01).unwrap();
        let xs = [0.1f64, -0.3, 0.25, 0.0, 0.5];
        let f = garch_filter(&p, &xs, 0.04).unwrap();
        assert!(f.variances.iter().all(|&v| v == 0.04));
        let static_ll: f64 = xs
            .iter()
            .map(|x| -0.5 * (std::f64::consts::TAU * 0.04).ln() - (x - 0.01).powi(2) / 0.08)
            .sum::<f64>()
            / 5.0;
        assert!((f.mean_loglik - static_ll).abs() < 1e-14);
        let other = garch_filter(&p, &[5.0, 5.0, -9.0, 1.0, 0.0], 0.04).unwrap();
        assert_eq!(f.variances, other.variances);
    }

    #[test]
    fn filter_reproduces_simulator_variances() {
        let p = GarchParams::new(1e-6f64, 0.08, 0.9, 0.0005).unwrap();
        let (xs, latent) = simulate(&p, 2_000, 9);
        let f = garch_filter(&p, &xs, latent[0]).unwrap();
        for (a, b) in f.variances.iter().zip(&latent) {
            assert!((a - b).abs() <= 1e-12 * b);
        }
    }

    #[test]
    fn fit_requires_enough_data() {
        assert!(garch_fit(&[0.1; 10]).is_err());
        assert!(garch_fit(&[0.1; 200]).is_err());
    }

    #[test]
    fn fit_beats_constant_variance_start() {
        let p = GarchParams::new(2e-6, 0.1, 0.85, 0.0).unwrap();
        let (xs, _) = simulate(&p, 3_000, 4);
        let fit = garch_fit(&xs).unwrap();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let flat = GarchParams::new(var, 0.0, 0.0, mean).unwrap();
        let flat_ll = garch_filter(&flat, &xs, var).unwrap().mean_loglik;
        assert!(fit.mean_loglik >= flat_ll);
        assert!(fit.params.persistence() < 1.0);
    }

    #[test]
    fn simulation_is_deterministic() {
        let p = GarchParams::new(1e-6, 0.05, 0.9, 0.0).unwrap();
        assert_eq!(simulate(&p, 50, 1), simulate(&p, 50, 1));
    }
}
