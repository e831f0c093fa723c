//! Resolved run configuration. Every output embeds one of these, and
//! `--config FILE` replays it.

use std::path::{Path, PathBuf};

use adaptive_epd::adaptive::RateConfig;
use adaptive_epd::data::{load_price_csv, load_returns_csv, log_returns, ColumnRef, ReturnSeries};
use adaptive_epd::estimate::kappa_grid;
use adaptive_epd::eval::{AdaptiveSpec, KappaAdaptation, ModelSpec, SweepMode};
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InputKind {
    #[default]
    Prices,
    Returns,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputConfig {
    pub path: PathBuf,
    pub kind: InputKind,
    /// Price column, by header name or zero-based index.
    pub column: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub date_column: Option<String>,
}

impl InputConfig {
    pub fn load(&self) -> Result<ReturnSeries> {
        let id = self.path.display().to_string();
        match self.kind {
            InputKind::Returns => Ok(load_returns_csv(&self.path)?),
            InputKind::Prices => {
                let column: ColumnRef = self.column.parse().expect("infallible");
                let date: Option<ColumnRef> = self.date_column.as_deref().map(|c| c.parse().expect("infallible"));
                let prices = load_price_csv(&self.path, &column, date.as_ref())?;
                Ok(log_returns(&prices, id)?)
            }
        }
    }
}

/// A single κ or a `start:stop:step` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KappaArg {
    Value(f64),
    Grid { start: f64, stop: f64, step: f64 },
}

impl std::str::FromStr for KappaArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let num = |p: &str| p.trim().parse::<f64>().map_err(|_| format!("'{p}' is not a number"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [v] => Ok(KappaArg::Value(num(v)?)),
            [a, b, c] => Ok(KappaArg::Grid {
                start: num(a)?,
                stop: num(b)?,
                step: num(c)?,
            }),
            _ => Err(format!("expected KAPPA or START:STOP:STEP, got '{s}'")),
        }
    }
}

impl KappaArg {
    pub fn values(&self) -> Result<Vec<f64>> {
        match *self {
            KappaArg::Value(k) => {
                if !(k > 0.0 && k.is_finite()) {
                    bail!("kappa must be positive, got {k}");
                }
                Ok(vec![k])
            }
            KappaArg::Grid { start, stop, step } => {
                if !(start > 0.0 && stop >= start && step > 0.0 && stop.is_finite()) {
                    bail!("invalid kappa grid {start}:{stop}:{step}");
                }
                Ok(kappa_grid(start, stop, step))
            }
        }
    }

    pub fn single(&self) -> Result<f64> {
        match self.values()?.as_slice() {
            [k] => Ok(*k),
            _ => bail!("this command takes a single kappa, not a grid"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    pub eta: f64,
    pub nu: f64,
    pub adapt_mu: bool,
    pub sigma_1: f64,
    pub mu_1: f64,
    pub debias: bool,
    pub epsilon_eta: f64,
    pub kappa_adaptation: KappaAdaptation,
    pub epsilon_kappa: f64,
}

impl AdaptiveConfig {
    pub fn spec(&self, kappa: f64) -> Result<AdaptiveSpec> {
        if self.sigma_1.is_nan() || self.sigma_1 <= 0.0 {
            bail!("sigma1 must be positive, got {}", self.sigma_1);
        }
        let mut spec = AdaptiveSpec::new(kappa);
        spec.rates = RateConfig {
            eta: self.eta,
            nu: self.nu,
            epsilon_eta: self.epsilon_eta,
            epsilon_kappa: self.epsilon_kappa,
            debias: self.debias,
            ..RateConfig::default()
        };
        spec.rates.validate()?;
        spec.adapt_mu = self.adapt_mu;
        spec.sigma_1 = self.sigma_1;
        spec.mu_1 = self.mu_1;
        spec.kappa_adaptation = self.kappa_adaptation;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SimModel {
    Epd,
    Regime,
    Garch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub model: SimModel,
    pub n: usize,
    pub seed: u64,
    pub kappa: f64,
    pub mu: f64,
    pub sigma: f64,
    /// Regime model: σ values cycled in blocks of `block_len`.
    pub sigmas: Vec<f64>,
    pub block_len: usize,
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum CommandConfig {
    Returns {
        input: InputConfig,
    },
    FitStatic {
        input: InputConfig,
        /// `None` fits κ by maximum likelihood.
        kappa: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        holdout: Option<f64>,
    },
    FitAdaptive {
        input: InputConfig,
        kappa: f64,
        adaptive: AdaptiveConfig,
    },
    Sweep {
        input: InputConfig,
        mode: SweepMode,
        kappa: KappaArg,
        adaptive: AdaptiveConfig,
    },
    Garch {
        input: InputConfig,
    },
    Simulate(SimulateConfig),
    Normalize {
        input: InputConfig,
        model: ModelSpec,
    },
    Compare {
        input: InputConfig,
        models: Vec<ModelSpec>,
    },
}

impl CommandConfig {
    pub fn input(&self) -> Option<&InputConfig> {
        match self {
            CommandConfig::Returns { input }
            | CommandConfig::FitStatic { input, .. }
            | CommandConfig::FitAdaptive { input, .. }
            | CommandConfig::Sweep { input, .. }
            | CommandConfig::Garch { input }
            | CommandConfig::Normalize { input, .. }
            | CommandConfig::Compare { input, .. } => Some(input),
            CommandConfig::Simulate(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub command: CommandConfig,
    pub format: Format,
    /// Not echoed, so replaying an output never overwrites it.
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// Reads a bare config or any JSON output that embeds one under `config`.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("{}: invalid JSON", path.display()))?;
        if let Some(inner) = value.get_mut("config") {
            value = inner.take();
        }
        serde_json::from_value(value).with_context(|| format!("{}: not a run configuration", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if let (Some(input), Some(output)) = (self.command.input(), &self.output) {
            let same = match (input.path.canonicalize(), output.canonicalize()) {
                (Ok(a), Ok(b)) => a == b,
                _ => false,
            };
            if same {
                bail!("output {} would overwrite the input file", output.display());
            }
        }
        if let CommandConfig::Compare { models, .. } = &self.command {
            if models.is_empty() {
                bail!("compare needs at least one --model");
            }
        }
        if let CommandConfig::FitStatic { holdout: Some(h), .. } = &self.command {
            if !(*h > 0.0 && *h < 1.0) {
                bail!("holdout fraction must be in (0, 1), got {h}");
            }
        }
        Ok(())
    }
}
