//! Special-function kernel: log-gamma, regularized incomplete gamma and its
//! inverse, digamma.
//!
//! All routines are stateless. Accuracy figures are for `f64`.

use crate::error::{domain, Result};
use crate::scalar::{lit, Real};

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const MAX_SERIES_ITERS: usize = 100_000;
const MAX_CF_ITERS: usize = 10_000;

/// ln Γ(a) for a > 0.
pub fn ln_gamma<T: Real>(a: T) -> Result<T> {
    if !(a > T::zero()) || !a.is_finite() {
        return Err(domain(format!("ln_gamma requires a > 0, got {a}")));
    }
    Ok(ln_gamma_unchecked(a))
}

pub(crate) fn ln_gamma_unchecked<T: Real>(a: T) -> T {
    let one = T::one();
    if a == one || a == lit(2.0) {
        return T::zero();
    }
    if a < lit(0.5) {
        // Reflection: Γ(a)Γ(1-a) = π / sin(πa)
        let pi = T::PI();
        return (pi / (pi * a).sin()).ln() - ln_gamma_unchecked(one - a);
    }
    let x = a - one;
    let mut series = lit::<T>(LANCZOS_COEF[0]);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        series = series + lit::<T>(c) / (x + T::from_usize_lossy(i));
    }
    let t = x + lit(LANCZOS_G + 0.5);
    lit::<T>(0.5) * (T::TAU()).ln() + (x + lit(0.5)) * t.ln() - t + series.ln()
}

/// Regularized lower incomplete gamma P(a, z) = γ(a, z) / Γ(a).
pub fn reg_lower_gamma<T: Real>(a: T, z: T) -> Result<T> {
    check_gamma_args(a, z)?;
    Ok(gamma_pq(a, z).0)
}

/// Regularized upper incomplete gamma Q(a, z) = 1 - P(a, z), computed
/// without cancellation in the upper tail.
pub fn reg_upper_gamma<T: Real>(a: T, z: T) -> Result<T> {
    check_gamma_args(a, z)?;
    Ok(gamma_pq(a, z).1)
}

fn check_gamma_args<T: Real>(a: T, z: T) -> Result<()> {
    if !(a > T::zero()) || !a.is_finite() {
        return Err(domain(format!("incomplete gamma requires a > 0, got {a}")));
    }
    if !(z >= T::zero()) {
        return Err(domain(format!("incomplete gamma requires z >= 0, got {z}")));
    }
    Ok(())
}

/// Returns (P, Q). Series below z = a + 1, Lentz continued fraction above.
pub(crate) fn gamma_pq<T: Real>(a: T, z: T) -> (T, T) {
    let zero = T::zero();
    let one = T::one();
    if z == zero {
        return (zero, one);
    }
    if z.is_infinite() {
        return (one, zero);
    }
    let log_prefactor = a * z.ln() - z - ln_gamma_unchecked(a);
    if z < a + one {
        let p = (lower_series(a, z) + log_prefactor).exp().min(one);
        (p, one - p)
    } else {
        let q = (upper_continued_fraction(a, z).ln() + log_prefactor).exp().min(one);
        (one - q, q)
    }
}

/// ln of Σ z^n / (a (a+1) ... (a+n)).
fn lower_series<T: Real>(a: T, z: T) -> T {
    let eps = T::epsilon();
    let mut ap = a;
    let mut term = a.recip();
    let mut sum = term;
    for _ in 0..MAX_SERIES_ITERS {
        ap = ap + T::one();
        term = term * z / ap;
        sum = sum + term;
        if term.abs() < sum.abs() * eps {
            break;
        }
    }
    sum.ln()
}

fn upper_continued_fraction<T: Real>(a: T, z: T) -> T {
    let eps = T::epsilon();
    let tiny = T::min_positive_value() / eps;
    let one = T::one();
    let two: T = lit(2.0);
    let mut b = z + one - a;
    let mut c = tiny.recip();
    let mut d = b.recip();
    let mut h = d;
    for i in 1..=MAX_CF_ITERS {
        let i = T::from_usize_lossy(i);
        let an = -i * (i - a);
        b = b + two;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let delta = d * c;
        h = h * delta;
        if (delta - one).abs() < eps {
            break;
        }
    }
    h
}

/// Inverse of P(a, ·): the z ≥ 0 with P(a, z) = p, for p in [0, 1).
///
/// Bracketed search: the upper end is doubled until it straddles `p`, then
/// Newton steps are taken whenever they stay inside the bracket and bisection
/// otherwise.
pub fn inv_reg_lower_gamma<T: Real>(a: T, p: T) -> Result<T> {
    if !(a > T::zero()) || !a.is_finite() {
        return Err(domain(format!("inv_reg_lower_gamma requires a > 0, got {a}")));
    }
    if !(p >= T::zero() && p < T::one()) {
        return Err(domain(format!("inv_reg_lower_gamma requires p in [0, 1), got {p}")));
    }
    if p == T::zero() {
        return Ok(T::zero());
    }

    let two: T = lit(2.0);
    let mut lo = T::zero();
    let mut hi = a.max(T::one());
    let mut bracket_iters = 0;
    while gamma_pq(a, hi).0 < p {
        lo = hi;
        hi = hi * two;
        bracket_iters += 1;
        if bracket_iters > 2_000 || hi.is_infinite() {
            return Err(domain(format!("inv_reg_lower_gamma: p = {p} not bracketed")));
        }
    }

    let log_norm = ln_gamma_unchecked(a);
    let tol = T::epsilon() * lit(8.0);
    let mut x = (lo + hi) / two;
    for _ in 0..400 {
        let f = gamma_pq(a, x).0 - p;
        if f.abs() <= tol {
            return Ok(x);
        }
        if f < T::zero() {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= T::epsilon() * hi {
            return Ok(x);
        }
        let density = ((a - T::one()) * x.ln() - x - log_norm).exp();
        let newton = x - f / density;
        x = if density > T::zero() && newton > lo && newton < hi {
            newton
        } else {
            (lo + hi) / two
        };
    }
    Ok(x)
}

/// Digamma ψ(a) = d/da ln Γ(a), for a > 0.
pub fn digamma<T: Real>(a: T) -> Result<T> {
    if !(a > T::zero()) || !a.is_finite() {
        return Err(domain(format!("digamma requires a > 0, got {a}")));
    }
    Ok(digamma_unchecked(a))
}

pub(crate) fn digamma_unchecked<T: Real>(a: T) -> T {
    let mut x = a;
    let mut acc = T::zero();
    while x < lit(6.0) {
        acc = acc - x.recip();
        x = x + T::one();
    }
    // Asymptotic expansion in 1/x² (Bernoulli numbers).
    let inv2 = (x * x).recip();
    let tail = inv2
        * (lit::<T>(1.0 / 12.0)
            - inv2
                * (lit::<T>(1.0 / 120.0)
                    - inv2
                        * (lit::<T>(1.0 / 252.0)
                            - inv2
                                * (lit::<T>(1.0 / 240.0)
                                    - inv2 * (lit::<T>(1.0 / 132.0) - inv2 * lit::<T>(691.0 / 32_760.0))))));
    acc + x.ln() - lit::<T>(0.5) / x - tail
}
