//! Exponential power distribution ρ(x) ∝ exp(-|(x-μ)/σ|^κ / κ).
//!
//! κ = 2 is the Gaussian with standard deviation σ, κ = 1 the Laplace with
//! scale σ. The tails get heavier as κ decreases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::scalar::{lit, Real};
use crate::special::{digamma_unchecked, gamma_pq, inv_reg_lower_gamma, ln_gamma_unchecked};

/// Shape `kappa`, location `mu`, scale `sigma` of one EPD member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpdParams<T> {
    pub kappa: T,
    pub mu: T,
    pub sigma: T,
}

/// Partial derivatives of ln ρ with respect to (κ, μ, σ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPdfGrad<T> {
    pub d_kappa: T,
    pub d_mu: T,
    pub d_sigma: T,
    /// Set when x = μ and κ ≤ 1, where ln ρ has a kink or cusp. The κ and μ
    /// components are then reported as 0.
    pub singular: bool,
}

/// ln of the normalizing constant κ^{-1/κ} / (2 Γ(1 + 1/κ)).
pub(crate) fn ln_norm_const<T: Real>(kappa: T) -> T {
    -kappa.ln() / kappa - T::LN_2() - ln_gamma_unchecked(T::one() + kappa.recip())
}

impl<T: Real> EpdParams<T> {
    pub fn new(kappa: T, mu: T, sigma: T) -> Result<Self> {
        if !(kappa > T::zero()) || !kappa.is_finite() {
            return Err(Error::InvalidParams(format!("kappa must be positive, got {kappa}")));
        }
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidParams(format!("sigma must be positive, got {sigma}")));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidParams(format!("mu must be finite, got {mu}")));
        }
        Ok(Self { kappa, mu, sigma })
    }

    /// Standardized distance |x - μ| / σ.
    #[inline]
    fn standardized(&self, x: T) -> T {
        (x - self.mu).abs() / self.sigma
    }

    pub fn log_pdf(&self, x: T) -> T {
        let u = self.standardized(x);
        ln_norm_const(self.kappa) - self.sigma.ln() - u.powf(self.kappa) / self.kappa
    }

    pub fn pdf(&self, x: T) -> T {
        self.log_pdf(x).exp()
    }

    pub fn cdf(&self, x: T) -> T {
        let half: T = lit(0.5);
        if x == self.mu {
            return half;
        }
        let z = self.standardized(x).powf(self.kappa) / self.kappa;
        let upper = gamma_pq(self.kappa.recip(), z).1;
        if x < self.mu {
            half * upper
        } else {
            T::one() - half * upper
        }
    }

    /// Inverse CDF for q in (0, 1).
    pub fn quantile(&self, q: T) -> Result<T> {
        if !(q > T::zero() && q < T::one()) {
            return Err(domain(format!("quantile requires q in (0, 1), got {q}")));
        }
        let half: T = lit(0.5);
        if q == half {
            return Ok(self.mu);
        }
        let two: T = lit(2.0);
        let (p, sign) = if q < half {
            (T::one() - two * q, -T::one())
        } else {
            (two * q - T::one(), T::one())
        };
        let z = inv_reg_lower_gamma(self.kappa.recip(), p)?;
        Ok(self.mu + sign * self.sigma * (self.kappa * z).powf(self.kappa.recip()))
    }

    /// Variance κ^{2/κ} Γ(3/κ) / Γ(1/κ) · σ².
    pub fn variance(&self) -> T {
        variance_factor(self.kappa) * self.sigma * self.sigma
    }

    /// `n` i.i.d. draws, deterministic in `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, n)
    }

    /// Draws via μ + s·σ·(κG)^{1/κ} with G ~ Gamma(1/κ, 1) and a fair sign s.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<T> {
        let kappa = self.kappa.to_f64_lossy();
        let mu = self.mu.to_f64_lossy();
        let sigma = self.sigma.to_f64_lossy();
        let gamma = Gamma::new(1.0 / kappa, 1.0).expect("shape is positive");
        (0..n)
            .map(|_| {
                let g: f64 = gamma.sample(rng);
                let magnitude = sigma * (kappa * g).powf(1.0 / kappa);
                let x = if rng.random::<bool>() {
                    mu + magnitude
                } else {
                    mu - magnitude
                };
                T::lit(x)
            })
            .collect()
    }

    /// Analytic gradient of ln ρ(x) in (κ, μ, σ).
    pub fn log_pdf_grad(&self, x: T) -> LogPdfGrad<T> {
        let k = self.kappa;
        let s = self.sigma;
        let d = x - self.mu;
        let u = d.abs() / s;
        let one = T::one();

        if d == T::zero() {
            let singular = k <= one;
            // u^κ ln u → 0 as u → 0 for every κ > 0.
            let d_kappa = if singular {
                T::zero()
            } else {
                (k.ln() - one + digamma_unchecked(one + k.recip())) / (k * k)
            };
            return LogPdfGrad {
                d_kappa,
                d_mu: T::zero(),
                d_sigma: -s.recip(),
                singular,
            };
        }

        let u_k = u.powf(k);
        let d_mu = d.signum() * u_k / (u * s);
        let d_sigma = (u_k - one) / s;
        let d_kappa = (k.ln() - one + digamma_unchecked(one + k.recip()) + u_k) / (k * k) - u_k * u.ln() / k;
        LogPdfGrad {
            d_kappa,
            d_mu,
            d_sigma,
            singular: false,
        }
    }
}

/// κ^{2/κ} Γ(3/κ) / Γ(1/κ): the variance of a unit-scale EPD.
pub fn variance_factor<T: Real>(kappa: T) -> T {
    let two: T = lit(2.0);
    let three: T = lit(3.0);
    (two / kappa * kappa.ln() + ln_gamma_unchecked(three / kappa) - ln_gamma_unchecked(kappa.recip())).exp()
}
