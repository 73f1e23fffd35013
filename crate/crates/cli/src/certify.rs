use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde::Serialize;
use tarifflab::coretail::{
    additive_certificates, agreement_certificate, core_bound_terms, core_decomposition_certificate,
    prophet_certificate, single_agent_certificate, split, stitching_certificates, tail_revenue_terms,
    unit_demand_reduction_certificate, BoundCertificate, SplitVariant,
};
use tarifflab::instance::Instance;
use tarifflab::oracle::{grid_pricing_opt, PricingFamily, PricingOptions};
use tarifflab::rational::{format_rational, half, parse_rational};
use tarifflab::{run_sequential, EvalMode, Matroid, Rational, TwoPartTariff};

use crate::report::{check_trials, config_hash, emit, read_instance, require_seed, to_csv, to_json, usage, Outcome};
use crate::{Config, Format};

#[derive(Args, Debug)]
pub struct CertifyArgs {
    /// Instance files, processed in the given order.
    #[arg(required = true)]
    instances: Vec<PathBuf>,
    /// Multiply every right-hand side by this factor before checking.
    #[arg(long, value_name = "RATIONAL")]
    scale_rhs: Option<String>,
}

#[derive(Serialize)]
struct Settings<'a> {
    seed: u64,
    trials: usize,
    tolerance: f64,
    format: Format,
    scale_rhs: Option<&'a str>,
}

#[derive(Serialize)]
struct Row {
    agent: Option<usize>,
    #[serde(flatten)]
    cert: BoundCertificate,
}

#[derive(Serialize)]
struct Skip {
    agent: Option<usize>,
    name: &'static str,
    reason: String,
}

#[derive(Serialize)]
struct InstanceReport {
    instance: String,
    n: usize,
    m: usize,
    certificates: Vec<Row>,
    skipped: Vec<Skip>,
}

#[derive(Serialize)]
struct Summary {
    certificates: usize,
    failed: usize,
    scale_limited: usize,
    max_ratio: Option<f64>,
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'static str,
    seed: u64,
    config_hash: String,
    settings: &'a Settings<'a>,
    instances: Vec<InstanceReport>,
    summary: Summary,
}

/// Collects certificates, recording checks that do not apply or exceed
/// the exact oracles' limits.
struct Batch {
    rows: Vec<Row>,
    skipped: Vec<Skip>,
    scale_limited: usize,
    tolerance: f64,
    scale: Option<Rational>,
}

impl Batch {
    fn add(&mut self, agent: Option<usize>, name: &'static str, r: tarifflab::Result<Vec<BoundCertificate>>) -> Result<()> {
        match r {
            Ok(certs) => {
                for cert in certs {
                    let cert = match &self.scale {
                        Some(f) => cert.rescaled(f),
                        None => cert,
                    };
                    self.rows.push(Row { agent, cert: cert.with_tolerance(self.tolerance) });
                }
            }
            Err(e @ tarifflab::Error::Scale { .. }) => {
                self.scale_limited += 1;
                self.skipped.push(Skip { agent, name, reason: e.to_string() });
            }
            Err(e @ (tarifflab::Error::UnsupportedConstraint(_) | tarifflab::Error::Precondition(_))) => {
                self.skipped.push(Skip { agent, name, reason: e.to_string() });
            }
            Err(e) => return Err(e.into()),
        }
        Ok(())
    }
}

pub fn run(config: &Config, args: &CertifyArgs) -> Result<Outcome> {
    let seed = require_seed(config)?;
    check_trials(config)?;
    let scale = args
        .scale_rhs
        .as_deref()
        .map(|s| parse_rational(s).map_err(|e| usage(format!("--scale-rhs: {e}"))))
        .transpose()?;
    let settings = Settings {
        seed,
        trials: config.trials,
        tolerance: config.tolerance,
        format: config.format,
        scale_rhs: args.scale_rhs.as_deref(),
    };
    let mut inputs = Vec::new();
    let mut loaded = Vec::new();
    for path in &args.instances {
        let (inst, bytes) = read_instance(path)?;
        inputs.push(bytes);
        loaded.push((path.display().to_string(), inst));
    }
    let hash = config_hash("certify", &settings, &inputs.iter().map(Vec::as_slice).collect::<Vec<_>>());

    let mut reports = Vec::new();
    let mut scale_limited = 0;
    for (k, (name, inst)) in loaded.iter().enumerate() {
        let mut batch = Batch { rows: Vec::new(), skipped: Vec::new(), scale_limited: 0, tolerance: config.tolerance, scale: scale.clone() };
        certify_instance(inst, seed.wrapping_add(k as u64), config.trials, &mut batch)?;
        scale_limited += batch.scale_limited;
        reports.push(InstanceReport { instance: name.clone(), n: inst.n(), m: inst.m(), certificates: batch.rows, skipped: batch.skipped });
    }
    let all: Vec<&Row> = reports.iter().flat_map(|r| &r.certificates).collect();
    let failed = all.iter().filter(|r| !r.cert.holds).count();
    let max_ratio = all.iter().filter_map(|r| r.cert.ratio()).fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))));
    let summary = Summary { certificates: all.len(), failed, scale_limited, max_ratio };

    let body = match config.format {
        Format::Json => to_json(&Report { command: "certify", seed, config_hash: hash, settings: &settings, instances: reports, summary })?,
        Format::Csv => {
            let mut rows = vec![vec![
                "instance".to_string(),
                "agent".into(),
                "certificate".into(),
                "lhs".into(),
                "rhs".into(),
                "ratio".into(),
                "tolerance".into(),
                "holds".into(),
            ]];
            for r in &reports {
                for row in &r.certificates {
                    let c = &row.cert;
                    rows.push(vec![
                        r.instance.clone(),
                        row.agent.map(|a| a.to_string()).unwrap_or_default(),
                        c.name.clone(),
                        c.lhs.to_f64().to_string(),
                        c.rhs.to_f64().to_string(),
                        c.ratio().map(|x| x.to_string()).unwrap_or_default(),
                        c.tolerance.to_string(),
                        c.holds.to_string(),
                    ]);
                }
            }
            rows.push(vec![
                format!("# seed={seed} config_hash={hash}"),
                String::new(),
                "summary".into(),
                String::new(),
                String::new(),
                summary.max_ratio.map(|x| x.to_string()).unwrap_or_default(),
                String::new(),
                (failed == 0).to_string(),
            ]);
            to_csv(rows)?
        }
    };
    emit(config, &body)?;
    Ok(if failed > 0 {
        Outcome::Fail
    } else if scale_limited > 0 {
        Outcome::ScaleLimited
    } else {
        Outcome::Pass
    })
}

fn certify_instance(inst: &Instance, seed: u64, trials: usize, batch: &mut Batch) -> Result<()> {
    let agents: Vec<usize> = if inst.symmetric { vec![0] } else { (0..inst.n()).collect() };
    for &i in &agents {
        let a = &inst.agents[i];
        let (d, f) = (&a.dist, &a.constraint);
        let c = inst.constraint(i);
        let tag = Some(i);
        batch.add(tag, "core_decomposition", core_decomposition_certificate(d, f, &c).map(|x| vec![x]))?;
        match split(d, &c, SplitVariant::UniformShift) {
            Ok(s) => {
                batch.add(tag, "tail_bound", tail_revenue_terms(&s, d, f).map(|x| vec![x]))?;
                batch.add(tag, "core_bounds", core_bound_terms(&s, d, f))?;
            }
            Err(e) => batch.add(tag, "split", Err(e))?,
        }
        batch.add(tag, "single_agent", single_agent_certificate(d, f, &c, inst.demand_limit.as_ref()))?;
        if !matches!(f, Matroid::Explicit { .. }) && f.in_scaled_polytope(&c.q, &half())? {
            batch.add(tag, "prophet_pricing", prophet_certificate(d, f, &c).map(|x| vec![x]))?;
        }
        if f.rank(tarifflab::matroid::full_set(f.m())) == f.m() {
            batch.add(tag, "additive", additive_certificates(d, &c))?;
        }
        batch.add(tag, "unit_demand_reduction", unit_demand_reduction_certificate(d, f).map(|x| vec![x]))?;
    }
    if inst.n() >= 2 {
        if let Some(r) = stitch_checks(inst, seed, trials)? {
            batch.add(None, "stitching", r)?;
        }
    }
    Ok(())
}

/// Stitches each agent's best tariff at its ex ante prices when the caps
/// leave every item available with probability at least 1/2.
fn stitch_checks(inst: &Instance, seed: u64, trials: usize) -> Result<Option<tarifflab::Result<Vec<BoundCertificate>>>> {
    let Some(constraints) = &inst.ex_ante else {
        return Ok(None);
    };
    for j in 0..inst.m() {
        let total = constraints.iter().fold(Rational::from_integer(0.into()), |acc, c| acc + &c.q[j]);
        if total > half() {
            return Ok(Some(Err(tarifflab::Error::Precondition(format!(
                "ex ante caps on item {j} sum to {}",
                format_rational(&total)
            )))));
        }
    }
    let run = || -> tarifflab::Result<Vec<BoundCertificate>> {
        let mut tariffs = Vec::new();
        for (a, c) in inst.agents.iter().zip(constraints) {
            let limit = match (&inst.demand_limit, &a.constraint) {
                (Some(l), _) => l.clone(),
                (None, Matroid::Explicit { .. }) => {
                    return Err(tarifflab::Error::UnsupportedConstraint("stitching an explicit matroid needs a demand limit".into()))
                }
                (None, f) => f.clone(),
            };
            let s = split(&a.dist, c, SplitVariant::UniformShift)?;
            let extras: Vec<Vec<Rational>> = s.thresholds.iter().map(|t| vec![t.clone()]).collect();
            let opts = PricingOptions { floor: Some(&c.beta), extras: Some(&extras) };
            let best = grid_pricing_opt(&a.dist, &limit, PricingFamily::Tariff, &opts)?;
            tariffs.push(TwoPartTariff::new(best.tariff.entry_fee, best.tariff.prices, Some(limit))?);
        }
        let check = stitching_certificates(&inst.agents, &tariffs, constraints, (0..inst.n()).collect())?;
        let exact = check.report.exact.as_ref().expect("exact mode").revenue.clone();
        let mc = run_sequential(&check.mechanism, &inst.agents, EvalMode::monte_carlo(trials, seed))?;
        let agree = agreement_certificate("monte_carlo_agreement", &exact, mc.revenue, mc.std_error);
        Ok(vec![check.revenue, check.availability, agree])
    };
    Ok(Some(run()))
}
