//! Command execution and output rendering.

use std::fmt::Write as _;

use adaptive_epd::data::{alternating_schedule, gen_epd_series, gen_garch_series, gen_regime_switching, ReturnSeries};
use adaptive_epd::eval::{
    cdf_normalize, compare_models, eval_adaptive, eval_garch, eval_static, eval_static_holdout, ks_critical_1pct,
    ks_statistic, sweep_kappa, EvalReport, SweepCurve,
};
use adaptive_epd::{Epd, Garch};
use anyhow::{bail, Result};
use serde::Serialize;
use serde_json::json;

use crate::config::{CommandConfig, Format, RunConfig, SimModel, SimulateConfig};

/// Runs the command and returns the rendered output.
pub fn execute(config: &RunConfig) -> Result<String> {
    config.validate()?;
    let header = serde_json::to_string(config)?;
    let out = match &config.command {
        CommandConfig::Returns { input } => render_series(config, &header, &input.load()?),
        CommandConfig::FitStatic { input, kappa, holdout } => {
            let returns = input.load()?;
            let report = match holdout {
                Some(h) => eval_static_holdout(&returns, *kappa, *h)?,
                None => eval_static(&returns, *kappa)?,
            };
            render_report(config, &header, &report)
        }
        CommandConfig::FitAdaptive { input, kappa, adaptive } => {
            let report = eval_adaptive(&input.load()?, &adaptive.spec(*kappa)?)?;
            render_report(config, &header, &report)
        }
        CommandConfig::Sweep {
            input,
            mode,
            kappa,
            adaptive,
        } => {
            let grid = kappa.values()?;
            let base = adaptive.spec(grid[0])?;
            let curve = sweep_kappa(&input.load()?, &grid, *mode, &base)?;
            render_curve(config, &header, &curve)
        }
        CommandConfig::Garch { input } => render_report(config, &header, &eval_garch(&input.load()?)?),
        CommandConfig::Simulate(sim) => render_series(config, &header, &simulate(sim)?),
        CommandConfig::Normalize { input, model } => {
            let ys = cdf_normalize(&input.load()?, model)?;
            let ks = ks_statistic(&ys)?;
            let critical = ks_critical_1pct(ys.len());
            match config.format {
                Format::Json => json_doc(
                    config,
                    json!({ "model_id": model.id(), "ks_statistic": ks, "ks_critical_1pct": critical, "y": ys }),
                ),
                Format::Csv => {
                    let mut s = csv_preamble(&header);
                    writeln!(s, "# model: {}", model.id())?;
                    writeln!(s, "# ks_statistic: {ks}")?;
                    writeln!(s, "# ks_critical_1pct: {critical}")?;
                    s.push_str("t,y\n");
                    for (t, y) in ys.iter().enumerate() {
                        writeln!(s, "{},{y}", t + 1)?;
                    }
                    Ok(s)
                }
            }
        }
        CommandConfig::Compare { input, models } => {
            let outcomes = compare_models(&input.load()?, models)?;
            match config.format {
                Format::Json => json_doc(config, json!({ "models": outcomes })),
                Format::Csv => {
                    let mut s = csv_preamble(&header);
                    s.push_str("rank,model,mean_loglik,error\n");
                    for o in &outcomes {
                        writeln!(
                            s,
                            "{},{},{},{}",
                            o.rank.map(|r| r.to_string()).unwrap_or_default(),
                            csv_field(&o.model_id),
                            o.mean_loglik.map(|v| v.to_string()).unwrap_or_default(),
                            csv_field(o.error.as_deref().unwrap_or("")),
                        )?;
                    }
                    Ok(s)
                }
            }
        }
    }?;
    Ok(out)
}

fn simulate(sim: &SimulateConfig) -> Result<ReturnSeries> {
    Ok(match sim.model {
        SimModel::Epd => gen_epd_series(&Epd::new(sim.kappa, sim.mu, sim.sigma)?, sim.n, sim.seed)?,
        SimModel::Regime => {
            if sim.sigmas.is_empty() || sim.block_len == 0 {
                bail!("regime model needs --sigmas and a positive --block-len");
            }
            let blocks = sim.n.div_ceil(sim.block_len);
            let mut schedule = alternating_schedule(&sim.sigmas, sim.block_len, blocks);
            let excess = blocks * sim.block_len - sim.n;
            if let Some(last) = schedule.last_mut() {
                last.0 -= excess;
            }
            gen_regime_switching(sim.kappa, &schedule, sim.seed)?.0
        }
        SimModel::Garch => {
            if sim.n == 0 {
                bail!("n must be positive");
            }
            gen_garch_series(&Garch::new(sim.omega, sim.alpha, sim.beta, sim.mu)?, sim.n, sim.seed).0
        }
    })
}

fn csv_preamble(header: &str) -> String {
    format!("# config: {header}\n")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn json_doc(config: &RunConfig, result: impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&json!({ "config": config, "result": result }))?;
    s.push('\n');
    Ok(s)
}

fn render_series(config: &RunConfig, header: &str, series: &ReturnSeries) -> Result<String> {
    match config.format {
        Format::Json => json_doc(
            config,
            json!({ "source_id": series.source_id, "n": series.len(), "x": series.values }),
        ),
        Format::Csv => {
            let mut buf = Vec::new();
            series.write_csv(&mut buf, true, &[format!("config: {header}")])?;
            Ok(String::from_utf8(buf)?)
        }
    }
}

/// JSON: the full report. CSV: the per-step trajectory dump `t,sigma,mu`
/// (or a single summary row when the model has no trajectory).
fn render_report(config: &RunConfig, header: &str, report: &EvalReport) -> Result<String> {
    match config.format {
        Format::Json => json_doc(config, report),
        Format::Csv => {
            let mut s = csv_preamble(header);
            writeln!(s, "# model: {}", report.model_id)?;
            writeln!(s, "# n: {}", report.n)?;
            writeln!(s, "# mean_loglik: {}", report.mean_loglik)?;
            writeln!(s, "# params: {}", serde_json::to_string(&report.params)?)?;
            if let Some(traj) = &report.trajectories {
                s.push_str("t,sigma,mu\n");
                for (t, (sigma, mu)) in traj.sigma.iter().zip(&traj.mu).enumerate() {
                    writeln!(s, "{},{sigma},{mu}", t + 1)?;
                }
            } else {
                s.push_str("model,n,mean_loglik\n");
                writeln!(s, "{},{},{}", csv_field(&report.model_id), report.n, report.mean_loglik)?;
            }
            Ok(s)
        }
    }
}

fn render_curve(config: &RunConfig, header: &str, curve: &SweepCurve) -> Result<String> {
    match config.format {
        Format::Json => json_doc(config, curve),
        Format::Csv => {
            let mut s = csv_preamble(header);
            writeln!(s, "# argmax_kappa: {}", curve.argmax_kappa)?;
            writeln!(s, "# max_loglik: {}", curve.max_loglik)?;
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            match &curve.eta {
                Some(etas) => {
                    s.push_str("kappa,loglik,eta\n");
                    for ((k, ll), eta) in curve.kappa.iter().zip(&curve.loglik).zip(etas) {
                        writeln!(s, "{k},{},{}", opt(*ll), opt(*eta))?;
                    }
                }
                None => {
                    s.push_str("kappa,loglik\n");
                    for (k, ll) in curve.kappa.iter().zip(&curve.loglik) {
                        writeln!(s, "{k},{}", opt(*ll))?;
                    }
                }
            }
            Ok(s)
        }
    }
}
