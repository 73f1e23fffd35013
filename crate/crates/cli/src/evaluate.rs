use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;
use tarifflab::mechanism::MechanismSpec;
use tarifflab::oracle::exact_mechanism_revenue;
use tarifflab::rational::{format_rational, half, to_f64};
use tarifflab::{run_sequential, stitch, EvalMode, Mechanism, Rational, SequentialTariff};

use crate::report::{check_trials, config_hash, emit, read_instance, require_seed, to_csv, to_json, usage, Outcome};
use crate::{Config, Format};

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    instance: PathBuf,
    /// Mechanism file: fees, price rows and optional order and limits.
    #[arg(long, value_name = "PATH")]
    mechanism: PathBuf,
    /// Treat the rows as standalone tariffs: report their separate
    /// revenues and evaluate the mechanism stitched from them under the
    /// instance's ex ante caps.
    #[arg(long)]
    standalone: bool,
}

#[derive(Serialize)]
struct Settings {
    seed: u64,
    trials: usize,
    format: Format,
    standalone: bool,
}

#[derive(Serialize)]
struct Comparison {
    standalone: Vec<f64>,
    standalone_total: f64,
    stitched_total: f64,
    /// `stitched_total - standalone_total / 2`.
    margin: f64,
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'static str,
    seed: u64,
    config_hash: String,
    settings: &'a Settings,
    instance: String,
    revenue: f64,
    std_error: f64,
    #[serde(with = "tarifflab::rational::serde_rational_opt")]
    exact: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<Comparison>,
    per_trial: Vec<f64>,
}

pub fn run(config: &Config, args: &EvaluateArgs) -> Result<Outcome> {
    let seed = require_seed(config)?;
    check_trials(config)?;
    let (inst, inst_bytes) = read_instance(&args.instance)?;
    let mech_bytes = fs::read(&args.mechanism).with_context(|| format!("reading {}", args.mechanism.display()))?;
    let spec: MechanismSpec = serde_json::from_slice(&mech_bytes)
        .map_err(|e| usage(format!("{}: {e}", args.mechanism.display())))?;
    let mech = spec.build()?;
    if mech.m() != inst.m() {
        return Err(tarifflab::Error::DimensionMismatch { what: "mechanism items", expected: inst.m(), got: mech.m() }.into());
    }
    if mech.n() != inst.n() {
        return Err(tarifflab::Error::DimensionMismatch { what: "mechanism agents", expected: inst.n(), got: mech.n() }.into());
    }
    let settings = Settings { seed, trials: config.trials, format: config.format, standalone: args.standalone };
    let hash = config_hash("evaluate", &settings, &[&inst_bytes, &mech_bytes]);

    let (target, comparison) = if args.standalone {
        let tariffs: Vec<_> = (0..mech.n()).map(|i| mech.tariff(i)).collect();
        let constraints: Vec<_> = (0..inst.n()).map(|i| inst.constraint(i)).collect();
        let stitched = stitch(&tariffs, &constraints, mech.order.clone())?;
        let standalone = tariffs
            .iter()
            .zip(&inst.agents)
            .map(|(t, a)| revenue_of(&Mechanism::Single(t.clone()), std::slice::from_ref(a), config.trials, seed))
            .collect::<Result<Vec<_>>>()?;
        (stitched, Some(standalone))
    } else {
        (mech, None)
    };
    let mc = run_sequential(&target, &inst.agents, EvalMode::monte_carlo(config.trials, seed))?;
    let exact = exact_or_none(&target, &inst.agents)?;
    let comparison = comparison.map(|standalone| {
        let total: f64 = standalone.iter().sum();
        let stitched = exact.as_ref().map(to_f64).unwrap_or(mc.revenue);
        Comparison { standalone, standalone_total: total, stitched_total: stitched, margin: stitched - to_f64(&half()) * total }
    });
    let per_trial: Vec<f64> = mc.trials.iter().map(|t| t.revenue).collect();
    let report = Report {
        command: "evaluate",
        seed,
        config_hash: hash,
        settings: &settings,
        instance: args.instance.display().to_string(),
        revenue: mc.revenue,
        std_error: mc.std_error,
        exact,
        comparison,
        per_trial,
    };
    let body = match config.format {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let mut rows = vec![vec!["row".to_string(), "revenue".into(), "std_error".into()]];
            for (k, r) in report.per_trial.iter().enumerate() {
                rows.push(vec![k.to_string(), r.to_string(), String::new()]);
            }
            rows.push(vec!["summary".into(), report.revenue.to_string(), report.std_error.to_string()]);
            if let Some(e) = &report.exact {
                rows.push(vec!["exact".into(), format_rational(e), String::new()]);
            }
            if let Some(c) = &report.comparison {
                rows.push(vec!["standalone_total".into(), c.standalone_total.to_string(), String::new()]);
                rows.push(vec!["stitched_total".into(), c.stitched_total.to_string(), String::new()]);
                rows.push(vec!["margin".into(), c.margin.to_string(), String::new()]);
            }
            rows.push(vec![format!("# seed={seed} config_hash={}", report.config_hash), String::new(), String::new()]);
            to_csv(rows)?
        }
    };
    emit(config, &body)?;
    Ok(Outcome::Pass)
}

fn exact_or_none(mech: &SequentialTariff, agents: &[tarifflab::Agent]) -> Result<Option<Rational>> {
    match exact_mechanism_revenue(&Mechanism::Sequential(mech.clone()), agents) {
        Ok(r) => Ok(Some(r)),
        Err(tarifflab::Error::Scale { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Exact when enumerable, otherwise a Monte Carlo estimate.
fn revenue_of(mech: &Mechanism, agents: &[tarifflab::Agent], trials: usize, seed: u64) -> Result<f64> {
    match exact_mechanism_revenue(mech, agents) {
        Ok(r) => Ok(to_f64(&r)),
        Err(tarifflab::Error::Scale { .. }) => Ok(tarifflab::mechanism::estimate_revenue(mech, agents, trials, seed)?.0),
        Err(e) => Err(e.into()),
    }
}
