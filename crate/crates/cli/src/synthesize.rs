use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;
use tarifflab::mechanism::MechanismSpec;
use tarifflab::oracle::exact_mechanism_revenue;
use tarifflab::rational::{format_rational, serde_rational, serde_rational_vec};
use tarifflab::symmetric::{synthesize, Branch, BranchValue, QRandomization};
use tarifflab::{run_sequential, EvalMode, Mechanism, Rational};

use crate::report::{check_trials, config_hash, emit, epsilon, read_instance, require_seed, to_csv, to_json, usage, Outcome};
use crate::{Config, Format};

#[derive(Args, Debug)]
pub struct SynthesizeArgs {
    /// A symmetric instance: one shared distribution and matroid.
    instance: PathBuf,
    /// Also write the mechanism alone to this file.
    #[arg(long, value_name = "PATH")]
    mechanism: Option<PathBuf>,
}

#[derive(Serialize)]
struct Settings<'a> {
    seed: u64,
    trials: usize,
    epsilon: &'a str,
    format: Format,
}

#[derive(Serialize)]
struct Revenue {
    estimate: f64,
    std_error: f64,
    trials: usize,
    #[serde(with = "tarifflab::rational::serde_rational_opt")]
    exact: Option<Rational>,
}

#[derive(Serialize)]
struct BundleReport {
    #[serde(with = "serde_rational")]
    fee: Rational,
    #[serde(with = "serde_rational_vec")]
    prices: Vec<Rational>,
    #[serde(with = "serde_rational")]
    empirical_revenue: Rational,
    value: BranchValue,
}

#[derive(Serialize)]
struct ItemReport {
    #[serde(with = "serde_rational_vec")]
    q: Vec<Rational>,
    #[serde(with = "serde_rational_vec")]
    q_mean: Vec<Rational>,
    #[serde(with = "serde_rational_vec")]
    beta: Vec<Rational>,
    #[serde(with = "serde_rational")]
    objective: Rational,
    randomization: QRandomization,
    value: BranchValue,
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'static str,
    seed: u64,
    config_hash: String,
    settings: &'a Settings<'a>,
    instance: String,
    n: usize,
    m: usize,
    branch: Branch,
    bundle_branch: BundleReport,
    item_branch: ItemReport,
    mechanism: MechanismSpec,
    revenue: Revenue,
}

pub fn run(config: &Config, args: &SynthesizeArgs) -> Result<Outcome> {
    let seed = require_seed(config)?;
    check_trials(config)?;
    let eps = epsilon(config)?;
    let (inst, bytes) = read_instance(&args.instance)?;
    let sym = inst.to_symmetric().map_err(|e| usage(format!("{}: {e}", args.instance.display())))?;
    let settings = Settings { seed, trials: config.trials, epsilon: &config.epsilon, format: config.format };
    let hash = config_hash("synthesize", &settings, &[&bytes]);

    let sol = synthesize(&sym, &eps, config.trials, seed)?;
    let agents = sym.agents();
    let mc = run_sequential(&sol.mechanism, &agents, EvalMode::monte_carlo(config.trials, seed))?;
    let exact = match exact_mechanism_revenue(&Mechanism::Sequential(sol.mechanism.clone()), &agents) {
        Ok(r) => Some(r),
        Err(tarifflab::Error::Scale { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let spec = MechanismSpec::from_mechanism(&sol.mechanism);
    if let Some(path) = &args.mechanism {
        fs::write(path, to_json(&spec)?).with_context(|| format!("writing {}", path.display()))?;
    }
    let revenue = Revenue { estimate: mc.revenue, std_error: mc.std_error, trials: config.trials, exact };
    let report = Report {
        command: "synthesize",
        seed,
        config_hash: hash,
        settings: &settings,
        instance: args.instance.display().to_string(),
        n: sym.n,
        m: sym.m(),
        branch: sol.branch,
        bundle_branch: BundleReport {
            fee: sol.bundle.fee.clone(),
            prices: sol.bundle.prices.clone(),
            empirical_revenue: sol.bundle.empirical_revenue.clone(),
            value: sol.bundle_value.clone(),
        },
        item_branch: ItemReport {
            q: sol.q().to_vec(),
            q_mean: sol.bq.randomization.mean(),
            beta: sol.beta.clone(),
            objective: sol.bq.objective.clone(),
            randomization: sol.bq.randomization.clone(),
            value: sol.item_value.clone(),
        },
        mechanism: spec,
        revenue,
    };
    let body = match config.format {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let branch = match report.branch {
                Branch::Bundle => "bundle",
                Branch::Item => "item",
            };
            let q: Vec<String> = report.item_branch.q.iter().map(format_rational).collect();
            let beta: Vec<String> = report.item_branch.beta.iter().map(format_rational).collect();
            to_csv([
                vec!["seed".to_string(), "config_hash".into(), "branch".into(), "q".into(), "beta".into(), "fee".into(), "revenue".into(), "std_error".into(), "exact".into()],
                vec![
                    seed.to_string(),
                    report.config_hash.clone(),
                    branch.into(),
                    q.join(" "),
                    beta.join(" "),
                    format_rational(&report.bundle_branch.fee),
                    report.revenue.estimate.to_string(),
                    report.revenue.std_error.to_string(),
                    report.revenue.exact.as_ref().map(format_rational).unwrap_or_default(),
                ],
            ])?
        }
    };
    emit(config, &body)?;
    Ok(Outcome::Pass)
}
