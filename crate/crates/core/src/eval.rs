//! Walk-forward evaluation: mean one-step-ahead log-likelihood of static,
//! adaptive, AEPD and GARCH models, κ sweeps, model ranking, and CDF
//! normalization with a Kolmogorov–Smirnov check.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptive::{AdaptiveState, KappaStatus, RateConfig};
use crate::aepd::{AepdAdaptiveState, AepdParams, AlphaMode};
use crate::data::ReturnSeries;
use crate::epd::EpdParams;
use crate::error::{Error, Result};
use crate::estimate::{fit_fixed_kappa, fit_full, StaticFit, WeightedSample, DEFAULT_KAPPA_RANGE};
use crate::garch::{garch_filter, garch_fit, GarchFit};
use crate::optimize::golden_section_max;

/// η search interval for the per-κ optimized-rate curve.
pub const ETA_SEARCH_RANGE: (f64, f64) = (0.85, 0.999);
const MIN_STATIC_LEN: usize = 10;

/// How κ evolves during an adaptive run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum KappaAdaptation {
    #[default]
    Fixed,
    /// Method of moments on the EMA variance after `burn_in` steps.
    Moments { burn_in: usize },
    /// κ ← κ + ε ∂κ ln ρ(x_T) with ε = `rates.epsilon_kappa`.
    Gradient,
}

/// Adaptive EPD run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveSpec {
    pub kappa: f64,
    pub rates: RateConfig<f64>,
    pub adapt_mu: bool,
    pub sigma_1: f64,
    pub mu_1: f64,
    pub kappa_adaptation: KappaAdaptation,
    pub kappa_range: (f64, f64),
}

impl AdaptiveSpec {
    /// σ_1 = 0.01, μ_1 = 0, η = 0.94, ν = 0.997, fixed κ.
    pub fn new(kappa: f64) -> Self {
        Self {
            kappa,
            rates: RateConfig::default(),
            adapt_mu: false,
            sigma_1: 0.01,
            mu_1: 0.0,
            kappa_adaptation: KappaAdaptation::Fixed,
            kappa_range: DEFAULT_KAPPA_RANGE,
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.rates.eta = eta;
        self
    }

    pub fn with_adaptive_mu(mut self, nu: f64) -> Self {
        self.adapt_mu = true;
        self.rates.nu = nu;
        self
    }

    fn effective_rates(&self) -> RateConfig<f64> {
        if self.adapt_mu {
            self.rates
        } else {
            self.rates.frozen_location()
        }
    }

    pub fn id(&self) -> String {
        let mu = if self.adapt_mu {
            format!("nu={}", self.rates.nu)
        } else {
            "mu=fixed".to_string()
        };
        let kappa = match self.kappa_adaptation {
            KappaAdaptation::Fixed => String::new(),
            KappaAdaptation::Moments { .. } => ",kappa=moments".to_string(),
            KappaAdaptation::Gradient => ",kappa=gradient".to_string(),
        };
        format!("adaptive-epd(kappa={},eta={},{mu}{kappa})", self.kappa, self.rates.eta)
    }
}

/// Adaptive AEPD run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AepdSpec {
    pub kappa_l: f64,
    pub kappa_r: f64,
    pub rates: RateConfig<f64>,
    pub adapt_mu: bool,
    pub sigma_1: f64,
    pub mu_1: f64,
    pub alpha_mode: AlphaMode<f64>,
}

impl AepdSpec {
    pub fn new(kappa_l: f64, kappa_r: f64) -> Self {
        Self {
            kappa_l,
            kappa_r,
            rates: RateConfig::default(),
            adapt_mu: false,
            sigma_1: 0.01,
            mu_1: 0.0,
            alpha_mode: AlphaMode::Continuity,
        }
    }

    pub fn id(&self) -> String {
        let alpha = match self.alpha_mode {
            AlphaMode::Continuity => "continuity".to_string(),
            AlphaMode::Frequency { xi } => format!("xi={xi}"),
        };
        let mu = if self.adapt_mu {
            format!("nu={}", self.rates.nu)
        } else {
            "mu=fixed".to_string()
        };
        format!(
            "adaptive-aepd(kappa_l={},kappa_r={},eta={},{mu},alpha={alpha})",
            self.kappa_l, self.kappa_r, self.rates.eta
        )
    }

    fn effective_rates(&self) -> RateConfig<f64> {
        if self.adapt_mu {
            self.rates
        } else {
            self.rates.frozen_location()
        }
    }
}

/// A model evaluated by [`compare_models`] and [`cdf_normalize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "model")]
pub enum ModelSpec {
    /// In-sample static EPD; `kappa: None` fits κ as well.
    StaticEpd {
        kappa: Option<f64>,
    },
    AdaptiveEpd(AdaptiveSpec),
    Garch,
    AdaptiveAepd(AepdSpec),
}

impl ModelSpec {
    pub fn id(&self) -> String {
        match self {
            ModelSpec::StaticEpd { kappa: Some(k) } => format!("static-epd(kappa={k})"),
            ModelSpec::StaticEpd { kappa: None } => "static-epd(kappa=mle)".to_string(),
            ModelSpec::AdaptiveEpd(s) => s.id(),
            ModelSpec::Garch => "garch(1,1)".to_string(),
            ModelSpec::AdaptiveAepd(s) => s.id(),
        }
    }
}

/// Compact textual form used on the command line:
///
/// ```text
/// static | static:KAPPA
/// adaptive:KAPPA[:ETA]            μ fixed at 0
/// adaptive-mu:KAPPA[:ETA[:NU]]    adaptive μ
/// garch
/// aepd:KAPPA_L:KAPPA_R[:ETA]
/// ```
impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |i: usize, name: &str| -> Result<Option<f64>> {
            parts
                .get(i)
                .map(|p| {
                    p.parse::<f64>()
                        .map_err(|_| Error::InvalidParams(format!("model '{s}': bad {name} '{p}'")))
                })
                .transpose()
        };
        let required = |i: usize, name: &str| -> Result<f64> {
            num(i, name)?.ok_or_else(|| Error::InvalidParams(format!("model '{s}': missing {name}")))
        };
        let spec = match parts[0] {
            "static" => ModelSpec::StaticEpd {
                kappa: num(1, "kappa")?,
            },
            "garch" => ModelSpec::Garch,
            "adaptive" | "adaptive-mu" => {
                let mut spec = AdaptiveSpec::new(required(1, "kappa")?);
                if let Some(eta) = num(2, "eta")? {
                    spec.rates.eta = eta;
                }
                if parts[0] == "adaptive-mu" {
                    spec.adapt_mu = true;
                    if let Some(nu) = num(3, "nu")? {
                        spec.rates.nu = nu;
                    }
                }
                ModelSpec::AdaptiveEpd(spec)
            }
            "aepd" => {
                let mut spec = AepdSpec::new(required(1, "kappa_l")?, required(2, "kappa_r")?);
                if let Some(eta) = num(3, "eta")? {
                    spec.rates.eta = eta;
                }
                ModelSpec::AdaptiveAepd(spec)
            }
            other => return Err(Error::InvalidParams(format!("unknown model kind '{other}'"))),
        };
        Ok(spec)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Per-step parameters used for each observation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectories {
    pub sigma: Vec<f64>,
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ParamsSummary {
    Static {
        fit: StaticFit<f64>,
        in_sample: bool,
    },
    Adaptive {
        spec: AdaptiveSpec,
        final_sigma: f64,
        final_mu: f64,
        final_eta: f64,
        final_kappa: f64,
    },
    Aepd {
        spec: AepdSpec,
        final_params: AepdParams<f64>,
    },
    Garch {
        fit: GarchFit<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_id: String,
    /// Mean log-likelihood in nats per observation.
    pub mean_loglik: f64,
    pub params: ParamsSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<Trajectories>,
    pub n: usize,
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("return series contains non-finite values".into()));
    }
    Ok(())
}

fn is_constant(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

/// Static EPD fitted and evaluated on the whole series (in-sample). With
/// `kappa: None` κ is fitted by profile likelihood.
pub fn eval_static(returns: &ReturnSeries, kappa: Option<f64>) -> Result<EvalReport> {
    let xs = &returns.values;
    if xs.len() < MIN_STATIC_LEN {
        return Err(Error::InsufficientData(format!(
            "static evaluation needs at least {MIN_STATIC_LEN} observations, got {}",
            xs.len()
        )));
    }
    check_finite(xs)?;
    let sample = WeightedSample::equal(xs.clone())?;
    let fit = match kappa {
        Some(k) => fit_fixed_kappa(&sample, k)?,
        None => fit_full(&sample, DEFAULT_KAPPA_RANGE)?,
    };
    Ok(EvalReport {
        model_id: ModelSpec::StaticEpd { kappa }.id(),
        mean_loglik: fit.mean_loglik,
        params: ParamsSummary::Static { fit, in_sample: true },
        trajectories: None,
        n: xs.len(),
    })
}

/// Static EPD fitted on the first `train_fraction` of the series and scored
/// on the remainder.
pub fn eval_static_holdout(returns: &ReturnSeries, kappa: Option<f64>, train_fraction: f64) -> Result<EvalReport> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParams(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let xs = &returns.values;
    check_finite(xs)?;
    let split = (xs.len() as f64 * train_fraction).round() as usize;
    if split < MIN_STATIC_LEN || split >= xs.len() {
        return Err(Error::InsufficientData("holdout split leaves too little data".into()));
    }
    let sample = WeightedSample::equal(xs[..split].to_vec())?;
    let fit = match kappa {
        Some(k) => fit_fixed_kappa(&sample, k)?,
        None => fit_full(&sample, DEFAULT_KAPPA_RANGE)?,
    };
    let test = &xs[split..];
    let mean_loglik = test.iter().map(|&x| fit.params.log_pdf(x)).sum::<f64>() / test.len() as f64;
    Ok(EvalReport {
        model_id: format!("{}-holdout", ModelSpec::StaticEpd { kappa }.id()),
        mean_loglik,
        params: ParamsSummary::Static { fit, in_sample: false },
        trajectories: None,
        n: test.len(),
    })
}

/// Output of a walk-forward adaptive run.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveRun {
    pub log_densities: Vec<f64>,
    /// Parameters each observation was scored under.
    pub params: Vec<EpdParams<f64>>,
    pub final_state: AdaptiveState<f64>,
}

/// Drives the adaptive estimator over the series, scoring each observation
/// under parameters estimated from strictly earlier ones.
pub fn run_adaptive(xs: &[f64], spec: &AdaptiveSpec) -> Result<AdaptiveRun> {
    if xs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "adaptive evaluation needs at least 2 observations, got {}",
            xs.len()
        )));
    }
    check_finite(xs)?;
    if is_constant(xs) {
        return Err(Error::Diverged(
            "constant series: the scale estimate collapses towards zero".into(),
        ));
    }
    let mut state = AdaptiveState::init(spec.sigma_1, spec.mu_1, spec.kappa, spec.effective_rates())?;
    let mut log_densities = Vec::with_capacity(xs.len());
    let mut params = Vec::with_capacity(xs.len());
    for (i, &x) in xs.iter().enumerate() {
        params.push(state.params());
        let (next, lp) = state.step(x);
        if !lp.is_finite() || !(next.b > 0.0) || !next.b.is_finite() {
            return Err(Error::Diverged(format!(
                "non-finite density or scale at step {}",
                i + 1
            )));
        }
        log_densities.push(lp);
        state = match spec.kappa_adaptation {
            KappaAdaptation::Fixed => next,
            KappaAdaptation::Moments { burn_in } => {
                let est = next.kappa_from_moments(burn_in, spec.kappa_range);
                if est.status == KappaStatus::Updated {
                    next.with_kappa(est.kappa)
                } else {
                    next
                }
            }
            KappaAdaptation::Gradient => {
                // gradient of the just-scored observation under its own parameters
                let k = state.kappa_gradient_step(x, spec.rates.epsilon_kappa, spec.kappa_range);
                next.with_kappa(k)
            }
        };
    }
    Ok(AdaptiveRun {
        log_densities,
        params,
        final_state: state,
    })
}

/// Walk-forward mean log-likelihood of an adaptive EPD, with σ/μ trajectories.
pub fn eval_adaptive(returns: &ReturnSeries, spec: &AdaptiveSpec) -> Result<EvalReport> {
    let run = run_adaptive(&returns.values, spec)?;
    let n = run.log_densities.len();
    let mean_loglik = run.log_densities.iter().sum::<f64>() / n as f64;
    let trajectories = Trajectories {
        sigma: run.params.iter().map(|p| p.sigma).collect(),
        mu: run.params.iter().map(|p| p.mu).collect(),
    };
    let s = run.final_state;
    Ok(EvalReport {
        model_id: spec.id(),
        mean_loglik,
        params: ParamsSummary::Adaptive {
            spec: *spec,
            final_sigma: s.sigma(),
            final_mu: s.mu_hat,
            final_eta: s.eta,
            final_kappa: s.kappa,
        },
        trajectories: Some(trajectories),
        n,
    })
}

/// Output of a walk-forward adaptive AEPD run.
#[derive(Debug, Clone, PartialEq)]
pub struct AepdRun {
    pub log_densities: Vec<f64>,
    pub params: Vec<AepdParams<f64>>,
}

pub fn run_aepd(xs: &[f64], spec: &AepdSpec) -> Result<AepdRun> {
    if xs.len() < 2 {
        return Err(Error::InsufficientData(
            "AEPD evaluation needs at least 2 observations".into(),
        ));
    }
    check_finite(xs)?;
    if is_constant(xs) {
        return Err(Error::Diverged(
            "constant series: the scale estimate collapses towards zero".into(),
        ));
    }
    let rates = spec.effective_rates();
    rates.validate()?;
    let init = AepdParams::continuous(spec.kappa_l, spec.kappa_r, spec.sigma_1, spec.sigma_1, spec.mu_1)?;
    let mut state = AepdAdaptiveState::init(init, spec.alpha_mode)?;
    let mut log_densities = Vec::with_capacity(xs.len());
    let mut params = Vec::with_capacity(xs.len());
    for (i, &x) in xs.iter().enumerate() {
        params.push(state.params);
        let (next, lp) = state.step(x, &rates);
        if !lp.is_finite() || !(next.params.sigma_l > 0.0 && next.params.sigma_r > 0.0) {
            return Err(Error::Diverged(format!(
                "non-finite density or scale at step {}",
                i + 1
            )));
        }
        log_densities.push(lp);
        state = next;
    }
    Ok(AepdRun { log_densities, params })
}

pub fn eval_aepd(returns: &ReturnSeries, spec: &AepdSpec) -> Result<EvalReport> {
    let run = run_aepd(&returns.values, spec)?;
    let n = run.log_densities.len();
    Ok(EvalReport {
        model_id: spec.id(),
        mean_loglik: run.log_densities.iter().sum::<f64>() / n as f64,
        params: ParamsSummary::Aepd {
            spec: *spec,
            final_params: *run.params.last().expect("nonempty"),
        },
        trajectories: None,
        n,
    })
}

/// GARCH(1,1) fitted by MLE and evaluated by its one-step-ahead filter.
pub fn eval_garch(returns: &ReturnSeries) -> Result<EvalReport> {
    check_finite(&returns.values)?;
    let fit = garch_fit(&returns.values)?;
    let filter = garch_filter(&fit.params, &returns.values, fit.sigma2_init)?;
    Ok(EvalReport {
        model_id: ModelSpec::Garch.id(),
        mean_loglik: filter.mean_loglik,
        params: ParamsSummary::Garch { fit },
        trajectories: Some(Trajectories {
            sigma: filter.variances.iter().map(|v| v.sqrt()).collect(),
            mu: vec![fit.params.mu; filter.variances.len()],
        }),
        n: returns.len(),
    })
}

pub fn eval_model(returns: &ReturnSeries, spec: &ModelSpec) -> Result<EvalReport> {
    match spec {
        ModelSpec::StaticEpd { kappa } => eval_static(returns, *kappa),
        ModelSpec::AdaptiveEpd(s) => eval_adaptive(returns, s),
        ModelSpec::Garch => eval_garch(returns),
        ModelSpec::AdaptiveAepd(s) => eval_aepd(returns, s),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    Static,
    AdaptiveFixedRate,
    AdaptiveOptimizedRate,
}

impl FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(SweepMode::Static),
            "adaptive" | "adaptive-fixed-rate" => Ok(SweepMode::AdaptiveFixedRate),
            "adaptive-optimized" | "adaptive-optimized-rate" => Ok(SweepMode::AdaptiveOptimizedRate),
            other => Err(Error::InvalidParams(format!("unknown sweep mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub mode: SweepMode,
    pub kappa: Vec<f64>,
    /// `None` marks a κ whose evaluation failed.
    pub loglik: Vec<Option<f64>>,
    /// Per-κ optimized η (optimized-rate mode only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<Option<f64>>>,
    /// Best grid point.
    pub grid_argmax_kappa: f64,
    /// Golden-section refinement between the best point's grid neighbors.
    pub argmax_kappa: f64,
    pub max_loglik: f64,
}

/// One point of a sweep: mean log-likelihood and, in optimized-rate mode, η.
fn sweep_point(returns: &ReturnSeries, kappa: f64, mode: SweepMode, base: &AdaptiveSpec) -> Result<(f64, Option<f64>)> {
    match mode {
        SweepMode::Static => Ok((eval_static(returns, Some(kappa))?.mean_loglik, None)),
        SweepMode::AdaptiveFixedRate => {
            let spec = AdaptiveSpec { kappa, ..*base };
            Ok((eval_adaptive_mean(&returns.values, &spec)?, None))
        }
        SweepMode::AdaptiveOptimizedRate => {
            let (eta, ll) = optimize_eta(&returns.values, &AdaptiveSpec { kappa, ..*base })?;
            Ok((ll, Some(eta)))
        }
    }
}

fn eval_adaptive_mean(xs: &[f64], spec: &AdaptiveSpec) -> Result<f64> {
    let run = run_adaptive(xs, spec)?;
    Ok(run.log_densities.iter().sum::<f64>() / run.log_densities.len() as f64)
}

/// Golden-section search for the η maximizing the walk-forward likelihood.
pub fn optimize_eta(xs: &[f64], spec: &AdaptiveSpec) -> Result<(f64, f64)> {
    // surface errors (degenerate input) before searching
    eval_adaptive_mean(xs, spec)?;
    let objective = |eta: f64| {
        let s = AdaptiveSpec {
            rates: RateConfig { eta, ..spec.rates },
            ..*spec
        };
        eval_adaptive_mean(xs, &s).unwrap_or(f64::NEG_INFINITY)
    };
    let (eta, ll) = golden_section_max(objective, ETA_SEARCH_RANGE.0, ETA_SEARCH_RANGE.1, 1e-5, 60);
    Ok((eta, ll))
}

/// Mean log-likelihood as a function of κ over `grid`.
pub fn sweep_kappa(returns: &ReturnSeries, grid: &[f64], mode: SweepMode, base: &AdaptiveSpec) -> Result<SweepCurve> {
    if grid.is_empty() {
        return Err(Error::InvalidParams("empty kappa grid".into()));
    }
    if grid.iter().any(|k| !(*k > 0.0)) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParams(
            "kappa grid must be positive and strictly increasing".into(),
        ));
    }
    let points: Vec<Option<(f64, Option<f64>)>> = grid
        .par_iter()
        .map(|&k| sweep_point(returns, k, mode, base).ok())
        .collect();
    let loglik: Vec<Option<f64>> = points.iter().map(|p| p.map(|(ll, _)| ll)).collect();
    let eta =
        (mode == SweepMode::AdaptiveOptimizedRate).then(|| points.iter().map(|p| p.and_then(|(_, e)| e)).collect());

    let best = (0..grid.len())
        .filter_map(|i| loglik[i].map(|ll| (i, ll)))
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
        .ok_or_else(|| Error::InvalidParams("every kappa in the sweep failed".into()))?;

    let (i, grid_max) = best;
    let mut argmax = grid[i];
    let mut max_loglik = grid_max;
    if i > 0 && i + 1 < grid.len() && loglik[i - 1].is_some() && loglik[i + 1].is_some() {
        let objective = |k: f64| {
            sweep_point(returns, k, mode, base)
                .map(|p| p.0)
                .unwrap_or(f64::NEG_INFINITY)
        };
        let (k, ll) = golden_section_max(objective, grid[i - 1], grid[i + 1], 1e-4, 40);
        if ll > max_loglik {
            argmax = k;
            max_loglik = ll;
        }
    }
    Ok(SweepCurve {
        mode,
        kappa: grid.to_vec(),
        loglik,
        eta,
        grid_argmax_kappa: grid[i],
        argmax_kappa: argmax,
        max_loglik,
    })
}

/// One row of a model comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelOutcome {
    pub model_id: String,
    /// 1-based rank among successful models.
    pub rank: Option<usize>,
    pub mean_loglik: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub report: Option<EvalReport>,
}

/// Evaluates every spec and ranks by mean log-likelihood (ties by id).
/// Failures are listed after the ranked models, ordered by id.
pub fn compare_models(returns: &ReturnSeries, specs: &[ModelSpec]) -> Result<Vec<ModelOutcome>> {
    if specs.is_empty() {
        return Err(Error::InvalidParams("no models to compare".into()));
    }
    let mut outcomes: Vec<ModelOutcome> = specs
        .par_iter()
        .map(|spec| match eval_model(returns, spec) {
            Ok(report) => ModelOutcome {
                model_id: report.model_id.clone(),
                rank: None,
                mean_loglik: Some(report.mean_loglik),
                error: None,
                report: Some(report),
            },
            Err(e) => ModelOutcome {
                model_id: spec.id(),
                rank: None,
                mean_loglik: None,
                error: Some(e.to_string()),
                report: None,
            },
        })
        .collect();
    outcomes.sort_by(|a, b| match (a.mean_loglik, b.mean_loglik) {
        (Some(x), Some(y)) => y
            .partial_cmp(&x)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.model_id.cmp(&b.model_id)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.model_id.cmp(&b.model_id),
    });
    let mut rank = 0;
    for o in outcomes.iter_mut().filter(|o| o.mean_loglik.is_some()) {
        rank += 1;
        o.rank = Some(rank);
    }
    Ok(outcomes)
}

fn open_unit(y: f64) -> f64 {
    y.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// y_T = CDF_T(x_T) under each model's time-T parameters; values are clamped
/// into the open unit interval.
pub fn cdf_normalize(returns: &ReturnSeries, spec: &ModelSpec) -> Result<Vec<f64>> {
    let xs = &returns.values;
    let ys: Vec<f64> = match spec {
        ModelSpec::StaticEpd { kappa } => {
            let report = eval_static(returns, *kappa)?;
            let ParamsSummary::Static { fit, .. } = report.params else {
                unreachable!("static report")
            };
            xs.iter().map(|&x| fit.params.cdf(x)).collect()
        }
        ModelSpec::AdaptiveEpd(s) => {
            let run = run_adaptive(xs, s)?;
            xs.iter().zip(&run.params).map(|(&x, p)| p.cdf(x)).collect()
        }
        ModelSpec::Garch => {
            let fit = garch_fit(xs)?;
            let filter = garch_filter(&fit.params, xs, fit.sigma2_init)?;
            xs.iter()
                .zip(&filter.variances)
                .map(|(&x, &v)| EpdParams::new(2.0, fit.params.mu, v.sqrt()).map(|p| p.cdf(x)))
                .collect::<Result<_>>()?
        }
        ModelSpec::AdaptiveAepd(s) => {
            let run = run_aepd(xs, s)?;
            xs.iter().zip(&run.params).map(|(&x, p)| p.cdf(x)).collect()
        }
    };
    Ok(ys.into_iter().map(open_unit).collect())
}

/// sup_y |F_n(y) - y| for a sample on (0, 1).
pub fn ks_statistic(ys: &[f64]) -> Result<f64> {
    if ys.is_empty() {
        return Err(Error::InsufficientData("KS statistic of empty sample".into()));
    }
    if ys.iter().any(|y| !(*y > 0.0 && *y < 1.0)) {
        return Err(Error::Domain("KS input must lie in (0, 1)".into()));
    }
    let mut sorted = ys.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let above = (i as f64 + 1.0) / n - y;
            let below = y - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max))
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_examples() {
        assert_eq!(ks_statistic(&[0.5]).unwrap(), 0.5);
        let n = 20;
        let ys: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
        assert!((ks_statistic(&ys).unwrap() - 0.5 / n as f64).abs() < 1e-15);
        assert!(ks_statistic(&[0.0, 0.5]).is_err());
        assert!(ks_statistic(&[]).is_err());
    }

    #[test]
    fn model_spec_parsing() {
        assert_eq!(
            "static".parse::<ModelSpec>().unwrap(),
            ModelSpec::StaticEpd { kappa: None }
        );
        assert_eq!(
            "static:2".parse::<ModelSpec>().unwrap(),
            ModelSpec::StaticEpd { kappa: Some(2.0) }
        );
        let ModelSpec::AdaptiveEpd(a) = "adaptive-mu:1.15:0.94:0.997".parse().unwrap() else {
            panic!()
        };
        assert!(a.adapt_mu && a.kappa == 1.15 && a.rates.nu == 0.997);
        assert!("adaptive".parse::<ModelSpec>().is_err());
        assert!("nope:1".parse::<ModelSpec>().is_err());
        assert!(matches!(
            "aepd:1:1.5".parse::<ModelSpec>().unwrap(),
            ModelSpec::AdaptiveAepd(_)
        ));
    }

    #[test]
    fn constant_series_flags_divergence() {
        let r = ReturnSeries::new(vec![0.0; 200], "zeros");
        assert!(matches!(
            eval_adaptive(&r, &AdaptiveSpec::new(1.0)),
            Err(Error::Diverged(_))
        ));
    }

    #[test]
    fn center_maps_to_half() {
        let r = ReturnSeries::new(vec![0.0, 0.01, -0.02, 0.0], "x");
        let ys = cdf_normalize(&r, &ModelSpec::AdaptiveEpd(AdaptiveSpec::new(1.0))).unwrap();
        assert_eq!(ys[0], 0.5);
        assert_eq!(ys[3], 0.5);
    }

    #[test]
    fn single_point_grid() {
        let r = ReturnSeries::new(EpdParams::new(1.0, 0.0, 0.01).unwrap().sample(300, 1), "x");
        let c = sweep_kappa(&r, &[1.3], SweepMode::AdaptiveFixedRate, &AdaptiveSpec::new(1.0)).unwrap();
        assert_eq!(c.argmax_kappa, 1.3);
        assert_eq!(c.grid_argmax_kappa, 1.3);
        assert!(sweep_kappa(&r, &[], SweepMode::Static, &AdaptiveSpec::new(1.0)).is_err());
        assert!(sweep_kappa(&r, &[2.0, 1.0], SweepMode::Static, &AdaptiveSpec::new(1.0)).is_err());
    }

    #[test]
    fn single_spec_comparison() {
        let r = ReturnSeries::new(EpdParams::new(1.0, 0.0, 0.01).unwrap().sample(300, 1), "x");
        let out = compare_models(&r, &[ModelSpec::StaticEpd { kappa: Some(1.0) }]).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].rank, Some(1));
    }

    #[test]
    fn failures_are_recorded_inline() {
        let r = ReturnSeries::new(EpdParams::new(1.0, 0.0, 0.01).unwrap().sample(50, 1), "x");
        let out = compare_models(&r, &[ModelSpec::Garch, ModelSpec::StaticEpd { kappa: Some(1.0) }]).unwrap();
        assert_eq!(out[0].rank, Some(1));
        assert!(out[1].error.is_some() && out[1].rank.is_none());
    }
}
