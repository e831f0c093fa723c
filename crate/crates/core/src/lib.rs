//! Static and adaptive maximum-likelihood estimation for the exponential
//! power distribution (EPD), its asymmetric variant, a GARCH(1,1) baseline,
//! and walk-forward log-likelihood evaluation on return series.
//!
//! The numeric kernels are generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`, which is what the evaluation
//! harness and data loaders use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptive;
pub mod aepd;
pub mod data;
pub mod epd;
pub mod error;
pub mod estimate;
pub mod eval;
pub mod garch;
pub mod optimize;
pub mod scalar;
pub mod special;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Epd = epd::EpdParams<f64>;
pub type Epd32 = epd::EpdParams<f32>;
pub type Aepd = aepd::AepdParams<f64>;
pub type Aepd32 = aepd::AepdParams<f32>;
pub type Rates = adaptive::RateConfig<f64>;
pub type State = adaptive::AdaptiveState<f64>;
pub type Sample = estimate::WeightedSample<f64>;
pub type Garch = garch::GarchParams<f64>;
