use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use adaptive_epd::adaptive::DEFAULT_KAPPA_BURN_IN;
use adaptive_epd::eval::{KappaAdaptation, ModelSpec, SweepMode};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;

use config::{
    AdaptiveConfig, CommandConfig, Format, InputConfig, InputKind, KappaArg, RunConfig, SimModel, SimulateConfig,
};

/// Seed used by `simulate` when `--seed` is not given.
const DEFAULT_SEED: u64 = 42;

/// Adaptive exponential power distribution estimation and walk-forward
/// log-likelihood evaluation of return series.
#[derive(Debug, Parser)]
#[command(name = "adaptive-epd", version)]
struct Cli {
    /// Replay a configuration: a bare config or any JSON output of this tool.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output file (default: stdout).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    /// Output format (default: csv for a .csv output file, json otherwise).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Worker threads (default: available cores).
    #[arg(long, global = true, env = "ADAPTIVE_EPD_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load prices (or returns) and write the log-return series.
    Returns {
        #[command(flatten)]
        input: InputArgs,
    },
    /// In-sample static EPD fit; omit --kappa to fit it.
    FitStatic {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        kappa: Option<KappaArg>,
        /// Fit on this leading fraction and score the rest.
        #[arg(long)]
        holdout: Option<f64>,
    },
    /// Walk-forward adaptive EPD; CSV output is the t,sigma,mu trajectory.
    FitAdaptive {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "1")]
        kappa: KappaArg,
        #[command(flatten)]
        adaptive: AdaptiveArgs,
    },
    /// Mean log-likelihood over a κ grid.
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value = "adaptive")]
        mode: ModeArg,
        /// κ value or START:STOP:STEP grid.
        #[arg(long, default_value = "0.5:2.5:0.05")]
        kappa: KappaArg,
        #[command(flatten)]
        adaptive: AdaptiveArgs,
    },
    /// GARCH(1,1) maximum-likelihood fit and walk-forward evaluation.
    Garch {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Generate a synthetic return series.
    Simulate(SimulateArgs),
    /// CDF-normalize returns to uniforms under a model and report the KS statistic.
    Normalize {
        #[command(flatten)]
        input: InputArgs,
        /// Model: static[:K] | adaptive:K[:ETA] | adaptive-mu:K[:ETA[:NU]] | garch | aepd:KL:KR[:ETA]
        #[arg(long, default_value = "adaptive:1")]
        model: ModelSpec,
    },
    /// Rank models by walk-forward mean log-likelihood.
    Compare {
        #[command(flatten)]
        input: InputArgs,
        /// Model spec; repeat for each model (same syntax as `normalize`).
        #[arg(long = "model", required = true)]
        models: Vec<ModelSpec>,
    },
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Input CSV file.
    #[arg(long, short)]
    input: PathBuf,
    /// Whether the input holds prices or returns.
    #[arg(long, value_enum, default_value = "prices")]
    input_kind: InputKind,
    /// Price column: header name or zero-based index.
    #[arg(long, default_value = "0")]
    column: String,
    /// Date column used to order rows chronologically.
    #[arg(long)]
    date_column: Option<String>,
}

impl From<InputArgs> for InputConfig {
    fn from(a: InputArgs) -> Self {
        InputConfig {
            path: a.input,
            kind: a.input_kind,
            column: a.column,
            date_column: a.date_column,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KappaAdaptArg {
    Fixed,
    Moments,
    Gradient,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Static,
    Adaptive,
    AdaptiveOptimized,
}

#[derive(Debug, Args)]
struct AdaptiveArgs {
    /// Retention rate of the scale estimate.
    #[arg(long, default_value_t = 0.94)]
    eta: f64,
    /// Retention rate of the location estimate (used with --adapt-mu).
    #[arg(long, default_value_t = 0.997)]
    nu: f64,
    /// Estimate μ adaptively instead of fixing it at --mu1.
    #[arg(long)]
    adapt_mu: bool,
    #[arg(long, default_value_t = 0.01)]
    sigma1: f64,
    #[arg(long, default_value_t = 0.0)]
    mu1: f64,
    /// Normalize the scale EMA so its weights sum to one.
    #[arg(long)]
    debias: bool,
    /// Learning rate of the online η update (0 disables it).
    #[arg(long, default_value_t = 0.0)]
    epsilon_eta: f64,
    #[arg(long, value_enum, default_value = "fixed")]
    kappa_adapt: KappaAdaptArg,
    /// Steps before the moment-based κ update starts.
    #[arg(long, default_value_t = DEFAULT_KAPPA_BURN_IN)]
    burn_in: usize,
    /// Learning rate of the κ gradient update.
    #[arg(long, default_value_t = 0.0)]
    epsilon_kappa: f64,
}

impl From<AdaptiveArgs> for AdaptiveConfig {
    fn from(a: AdaptiveArgs) -> Self {
        AdaptiveConfig {
            eta: a.eta,
            nu: a.nu,
            adapt_mu: a.adapt_mu,
            sigma_1: a.sigma1,
            mu_1: a.mu1,
            debias: a.debias,
            epsilon_eta: a.epsilon_eta,
            kappa_adaptation: match a.kappa_adapt {
                KappaAdaptArg::Fixed => KappaAdaptation::Fixed,
                KappaAdaptArg::Moments => KappaAdaptation::Moments { burn_in: a.burn_in },
                KappaAdaptArg::Gradient => KappaAdaptation::Gradient,
            },
            epsilon_kappa: a.epsilon_kappa,
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "epd")]
    model: SimModel,
    #[arg(long, short)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    #[arg(long, default_value_t = 0.01)]
    sigma: f64,
    /// Regime model: comma-separated σ values cycled block by block.
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.03")]
    sigmas: Vec<f64>,
    #[arg(long, default_value_t = 500)]
    block_len: usize,
    #[arg(long, default_value_t = 1e-6)]
    omega: f64,
    #[arg(long, default_value_t = 0.08)]
    alpha: f64,
    #[arg(long, default_value_t = 0.9)]
    beta: f64,
}

fn resolve(command: Command) -> Result<CommandConfig> {
    Ok(match command {
        Command::Returns { input } => CommandConfig::Returns { input: input.into() },
        Command::FitStatic { input, kappa, holdout } => CommandConfig::FitStatic {
            input: input.into(),
            kappa: kappa.map(|k| k.single()).transpose()?,
            holdout,
        },
        Command::FitAdaptive { input, kappa, adaptive } => CommandConfig::FitAdaptive {
            input: input.into(),
            kappa: kappa.single()?,
            adaptive: adaptive.into(),
        },
        Command::Sweep {
            input,
            mode,
            kappa,
            adaptive,
        } => {
            kappa.values()?;
            CommandConfig::Sweep {
                input: input.into(),
                mode: match mode {
                    ModeArg::Static => SweepMode::Static,
                    ModeArg::Adaptive => SweepMode::AdaptiveFixedRate,
                    ModeArg::AdaptiveOptimized => SweepMode::AdaptiveOptimizedRate,
                },
                kappa,
                adaptive: adaptive.into(),
            }
        }
        Command::Garch { input } => CommandConfig::Garch { input: input.into() },
        Command::Simulate(s) => CommandConfig::Simulate(SimulateConfig {
            model: s.model,
            n: s.n,
            seed: s.seed,
            kappa: s.kappa,
            mu: s.mu,
            sigma: s.sigma,
            sigmas: s.sigmas,
            block_len: s.block_len,
            omega: s.omega,
            alpha: s.alpha,
            beta: s.beta,
        }),
        Command::Normalize { input, model } => CommandConfig::Normalize {
            input: input.into(),
            model,
        },
        Command::Compare { input, models } => CommandConfig::Compare {
            input: input.into(),
            models,
        },
    })
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure thread pool")?;
    }
    let config = match (cli.config, cli.command) {
        (Some(_), Some(_)) => bail!("--config replays a full run; do not combine it with a subcommand"),
        (None, None) => bail!("no subcommand given (see --help)"),
        (Some(path), None) => {
            let mut config = RunConfig::from_file(&path)?;
            if cli.output.is_some() {
                config.output = cli.output;
            }
            if let Some(f) = cli.format {
                config.format = f;
            }
            config
        }
        (None, Some(command)) => RunConfig {
            command: resolve(command)?,
            format: cli.format.unwrap_or_else(|| format_for(cli.output.as_deref())),
            output: cli.output,
        },
    };
    let rendered = commands::execute(&config)?;
    match &config.output {
        Some(path) => std::fs::write(path, rendered).with_context(|| format!("cannot write {}", path.display()))?,
        None => std::io::stdout().lock().write_all(rendered.as_bytes())?,
    }
    Ok(())
}

fn format_for(output: Option<&std::path::Path>) -> Format {
    match output.and_then(|p| p.extension()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
        _ => Format::default(),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e)
            if e.downcast_ref::<std::io::Error>()
                .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
