//! Static (whole-sample) weighted maximum-likelihood estimation of EPD
//! parameters.
//!
//! For fixed κ and μ the scale has the closed form σ̂ = (Σ w_i |x_i - μ|^κ)^{1/κ}.
//! Location is a 1-D minimization, κ a profile search over the remaining
//! likelihood.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::epd::{ln_norm_const, variance_factor, EpdParams};
use crate::error::{Error, Result};
use crate::optimize::{bisect, golden_section_max};
use crate::scalar::{lit, Real};

/// Default κ search interval.
pub const DEFAULT_KAPPA_RANGE: (f64, f64) = (0.3, 4.0);
const KAPPA_GRID_STEP: f64 = 0.05;
/// Below this size the κ < 1 location search evaluates every data point.
const EXHAUSTIVE_LOCATION_LIMIT: usize = 2_048;
const LOCATION_CANDIDATES: usize = 64;
const LOCATION_NEIGHBORHOOD: usize = 16;

/// Observations with non-negative weights normalized to sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample<T> {
    values: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> WeightedSample<T> {
    pub fn new(values: Vec<T>, weights: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData("empty sample".into()));
        }
        if values.len() != weights.len() {
            return Err(Error::InvalidParams(format!(
                "{} values but {} weights",
                values.len(),
                weights.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("sample contains non-finite values".into()));
        }
        if weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidParams("weights must be finite and non-negative".into()));
        }
        let total: T = weights.iter().copied().sum();
        if !(total > T::zero()) {
            return Err(Error::InvalidParams("weights sum to zero".into()));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { values, weights })
    }

    /// Equal weights 1/n.
    pub fn equal(values: Vec<T>) -> Result<Self> {
        let n = values.len();
        let w = if n == 0 {
            T::zero()
        } else {
            T::from_usize_lossy(n).recip()
        };
        Self::new(values, vec![w; n])
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Σ w_i |x_i - μ|^κ.
    pub fn power_deviation(&self, kappa: T, mu: T) -> T {
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * (x - mu).abs().powf(kappa))
            .sum()
    }

    /// Weighted log-likelihood Σ w_i ln ρ(x_i).
    pub fn log_likelihood(&self, params: &EpdParams<T>) -> T {
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * params.log_pdf(x))
            .sum()
    }

    pub fn weighted_mean(&self) -> T {
        self.values.iter().zip(&self.weights).map(|(&x, &w)| w * x).sum()
    }

    fn is_constant(&self) -> bool {
        let first = self.values[0];
        self.values
            .iter()
            .zip(&self.weights)
            .all(|(&x, &w)| x == first || w == T::zero())
    }

    fn sorted_pairs(&self) -> Vec<(T, T)> {
        let mut pairs: Vec<(T, T)> = self.values.iter().copied().zip(self.weights.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values"));
        pairs
    }
}

/// Static fit result: parameters and the weighted mean log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticFit<T> {
    pub params: EpdParams<T>,
    pub mean_loglik: T,
}

/// σ̂ = (Σ w_i |x_i - μ|^κ)^{1/κ}.
pub fn sigma_mle<T: Real>(sample: &WeightedSample<T>, kappa: T, mu: T) -> Result<T> {
    check_kappa(kappa)?;
    let dev = sample.power_deviation(kappa, mu);
    if !(dev > T::zero()) {
        return Err(Error::DegenerateSample(format!("all observations equal mu = {mu}")));
    }
    Ok(dev.powf(kappa.recip()))
}

/// argmin_μ Σ w_i |x_i - μ|^κ.
///
/// κ > 1: the objective is strictly convex; its derivative is bisected on
/// [min x, max x]. κ ≤ 1: the objective is concave between adjacent
/// data points, so the minimizer is a data point. κ = 1 is the weighted
/// median; for κ < 1 every data point is evaluated on small samples and a
/// candidate scan plus local refinement is used on large ones.
pub fn mu_estimate<T: Real>(sample: &WeightedSample<T>, kappa: T) -> Result<T> {
    check_kappa(kappa)?;
    let (lo, hi) = sample
        .values
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    if lo == hi {
        return Ok(lo);
    }
    if kappa > T::one() {
        return Ok(convex_location(sample, kappa, lo, hi));
    }
    let sorted = sample.sorted_pairs();
    if kappa == T::one() {
        return Ok(weighted_median(&sorted));
    }
    Ok(best_data_point(sample, &sorted, kappa))
}

/// Root of the increasing derivative of Σ w |x - μ|^κ (κ > 1) by Newton
/// steps safeguarded with bisection.
fn convex_location<T: Real>(sample: &WeightedSample<T>, kappa: T, mut lo: T, mut hi: T) -> T {
    let km1 = kappa - T::one();
    let two: T = lit(2.0);
    let tol = (hi - lo) * T::epsilon() * lit(4.0);
    let mut mu = sample.weighted_mean();
    for _ in 0..200 {
        let (mut slope, mut curvature) = (T::zero(), T::zero());
        for (&x, &w) in sample.values.iter().zip(&sample.weights) {
            let d = mu - x;
            let a = d.abs();
            if a > T::zero() {
                let p = a.powf(km1);
                slope = slope + w * d.signum() * p;
                curvature = curvature + w * km1 * p / a;
            } else if km1 < T::one() {
                curvature = T::infinity();
            }
        }
        if slope == T::zero() {
            return mu;
        }
        if slope > T::zero() {
            hi = mu;
        } else {
            lo = mu;
        }
        let newton = mu - slope / curvature;
        let next = if newton > lo && newton < hi {
            newton
        } else {
            (lo + hi) / two
        };
        if (next - mu).abs() <= tol || hi - lo <= tol {
            return next;
        }
        mu = next;
    }
    mu
}

fn weighted_median<T: Real>(sorted: &[(T, T)]) -> T {
    let half: T = lit(0.5);
    let mut cum = T::zero();
    for &(x, w) in sorted {
        cum = cum + w;
        if cum >= half - lit(1e-12) {
            return x;
        }
    }
    sorted[sorted.len() - 1].0
}

fn best_data_point<T: Real>(sample: &WeightedSample<T>, sorted: &[(T, T)], kappa: T) -> T {
    let n = sorted.len();
    let objective = |i: usize| sample.power_deviation(kappa, sorted[i].0);
    let argmin = |range: std::ops::Range<usize>| {
        range
            .map(|i| (i, objective(i)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i)
            .expect("nonempty range")
    };

    if n <= EXHAUSTIVE_LOCATION_LIMIT {
        return sorted[argmin(0..n)].0;
    }

    let stride = n / LOCATION_CANDIDATES;
    let (coarse, _) = (0..LOCATION_CANDIDATES)
        .map(|k| k * stride)
        .map(|i| (i, objective(i)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
        .expect("candidates");

    // Ternary search over indices in the neighboring strides, then an
    // exhaustive scan around the result.
    let mut lo = coarse.saturating_sub(stride);
    let mut hi = (coarse + stride).min(n - 1);
    while hi - lo > 2 {
        let m1 = lo + (hi - lo) / 3;
        let m2 = hi - (hi - lo) / 3;
        if objective(m1) <= objective(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let center = argmin(lo..hi + 1);
    let start = center.saturating_sub(LOCATION_NEIGHBORHOOD);
    let end = (center + LOCATION_NEIGHBORHOOD + 1).min(n);
    let local = argmin(start..end);
    if objective(local) <= objective(coarse) {
        sorted[local].0
    } else {
        sorted[coarse].0
    }
}

/// Maximum-likelihood μ̂ and σ̂ at fixed κ.
///
/// At the optimum the mean log-likelihood is -ln(2σ̂κ^{1/κ}Γ(1+1/κ)) - 1/κ.
pub fn fit_fixed_kappa<T: Real>(sample: &WeightedSample<T>, kappa: T) -> Result<StaticFit<T>> {
    check_kappa(kappa)?;
    if sample.is_constant() {
        return Err(Error::DegenerateSample("sample has zero spread".into()));
    }
    let mu = mu_estimate(sample, kappa)?;
    let sigma = sigma_mle(sample, kappa, mu)?;
    Ok(StaticFit {
        params: EpdParams { kappa, mu, sigma },
        mean_loglik: optimum_loglik(kappa, sigma),
    })
}

fn optimum_loglik<T: Real>(kappa: T, sigma: T) -> T {
    ln_norm_const(kappa) - sigma.ln() - kappa.recip()
}

/// Profile-likelihood fit over κ in `kappa_range`: a 0.05-step grid scan
/// followed by golden-section refinement over ln κ around the best cell.
pub fn fit_full<T: Real>(sample: &WeightedSample<T>, kappa_range: (T, T)) -> Result<StaticFit<T>> {
    let (k_lo, k_hi) = kappa_range;
    if !(k_lo > T::zero() && k_hi > k_lo) || !k_hi.is_finite() {
        return Err(Error::InvalidParams(format!("invalid kappa range ({k_lo}, {k_hi})")));
    }
    if sample.is_constant() {
        return Err(Error::DegenerateSample("sample has zero spread".into()));
    }

    let grid = kappa_grid(k_lo, k_hi, lit(KAPPA_GRID_STEP));
    let fits: Vec<StaticFit<T>> = grid
        .par_iter()
        .map(|&k| fit_fixed_kappa(sample, k))
        .collect::<Result<_>>()?;
    let best = (0..fits.len())
        .max_by(|&a, &b| {
            fits[a]
                .mean_loglik
                .partial_cmp(&fits[b].mean_loglik)
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("nonempty grid");

    let lo = grid[best.saturating_sub(1)].ln();
    let hi = grid[(best + 1).min(grid.len() - 1)].ln();
    let mut refined = fits[best];
    if hi > lo {
        let profile = |log_k: T| {
            fit_fixed_kappa(sample, log_k.exp())
                .map(|f| f.mean_loglik)
                .unwrap_or(T::neg_infinity())
        };
        let (log_k, _) = golden_section_max(profile, lo, hi, lit(1e-6), 80);
        let candidate = fit_fixed_kappa(sample, log_k.exp())?;
        if candidate.mean_loglik >= refined.mean_loglik {
            refined = candidate;
        }
    }
    Ok(refined)
}

/// Grid lo, lo + step, ..., with `hi` always included.
pub fn kappa_grid<T: Real>(lo: T, hi: T, step: T) -> Vec<T> {
    let mut grid = Vec::new();
    let mut i = 0usize;
    loop {
        // snapped to 12 decimals
        let scale: T = lit(1e12);
        let k = ((lo + step * T::from_usize_lossy(i)) * scale).round() / scale;
        if k >= hi - step * lit(1e-6) {
            break;
        }
        grid.push(k);
        i += 1;
    }
    grid.push(hi);
    grid
}

/// Solves variance_of(κ, σ) = variance for κ by bisection over ln κ; the
/// variance factor is strictly decreasing in κ.
pub fn kappa_from_moments<T: Real>(variance: T, sigma: T, kappa_range: (T, T)) -> Result<T> {
    if !(variance > T::zero()) || !(sigma > T::zero()) {
        return Err(Error::NoSolution(format!(
            "variance {variance} and sigma {sigma} must be positive"
        )));
    }
    let (k_lo, k_hi) = kappa_range;
    if !(k_lo > T::zero() && k_hi > k_lo) {
        return Err(Error::InvalidParams(format!("invalid kappa range ({k_lo}, {k_hi})")));
    }
    let ratio = variance / (sigma * sigma);
    let target = ratio.ln();
    let residual = |log_k: T| variance_factor(log_k.exp()).ln() - target;
    bisect(residual, k_lo.ln(), k_hi.ln(), lit(1e-14), 200)
        .map(T::exp)
        .ok_or_else(|| {
            Error::NoSolution(format!(
                "variance ratio {ratio} outside [{}, {}]",
                variance_factor(k_hi),
                variance_factor(k_lo)
            ))
        })
}

fn check_kappa<T: Real>(kappa: T) -> Result<()> {
    if kappa > T::zero() && kappa.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("kappa must be positive, got {kappa}")))
    }
}
