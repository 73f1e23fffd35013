//! Core-tail decomposition of a single buyer's values and executable checks
//! of the revenue bounds built on it.
//!
//! Every check produces a [`BoundCertificate`]: a claimed inequality
//! `lhs <= rhs` with its constituent terms. Terms that involve `ln 2` are
//! evaluated in `f64`; everything else is exact.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::dist::{ProductDist, Side, ValueDist};
use crate::error::{Error, Result};
use crate::matroid::{full_set, items, size, ItemSet, Matroid};
use crate::mechanism::{
    run_sequential, stitch, Agent, EvalMode, ExAnteConstraint, Mechanism, SequentialReport, SequentialTariff,
    TwoPartTariff,
};
use crate::oracle::{
    bundle_revenue, bundle_value_dist, exact_mechanism_revenue, expected_welfare, grid_pricing_opt, opt_bic,
    Objective, PricingFamily, PricingOptions,
};
use crate::rational::{format_rational, half, rat, to_f64, Rational};

/// Absolute slack, relative to `max(1, |rhs|)`, for comparisons in `f64`.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

const LN2: f64 = std::f64::consts::LN_2;

/// How thresholds are placed above the ex ante prices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitVariant {
    /// `t_j = beta_j + tau` with the smallest `tau` keeping all items in the
    /// core with probability at least 1/2.
    UniformShift,
    /// `t_j = max(beta_j, r)` where `r` is the sum of per-item constrained
    /// revenues; meant for additive buyers.
    RevenueFloor,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreTailSplit {
    pub variant: SplitVariant,
    pub q: Vec<Rational>,
    pub beta: Vec<Rational>,
    /// Zero for [`SplitVariant::RevenueFloor`].
    pub tau: Rational,
    pub thresholds: Vec<Rational>,
    /// `xi_j = Pr[v_j > t_j]`.
    pub tail_probs: Vec<Rational>,
    /// `r_j`: optimal revenue from item `j` alone under cap `q_j`.
    pub item_revenue: Vec<Rational>,
    /// `None` when the side has no mass.
    pub core: Vec<Option<ValueDist>>,
    pub tail: Vec<Option<ValueDist>>,
}

pub fn split(d: &ProductDist, c: &ExAnteConstraint, variant: SplitVariant) -> Result<CoreTailSplit> {
    let m = d.m();
    if c.m() != m {
        return Err(Error::DimensionMismatch { what: "ex ante caps", expected: m, got: c.m() });
    }
    let item_revenue: Vec<Rational> =
        d.items().iter().zip(&c.q).map(|(dj, qj)| dj.single_item_opt_rev(qj)).collect();
    let (tau, thresholds) = match variant {
        SplitVariant::UniformShift => {
            let tau = minimal_shift(d, &c.beta);
            let t = c.beta.iter().map(|b| b + &tau).collect();
            (tau, t)
        }
        SplitVariant::RevenueFloor => {
            let r = item_revenue.iter().fold(Rational::zero(), |acc, x| acc + x);
            (Rational::zero(), c.beta.iter().map(|b| b.clone().max(r.clone())).collect())
        }
    };
    let tail_probs = d.items().iter().zip(&thresholds).map(|(dj, t)| dj.sale_prob(t)).collect();
    let side = |s: Side| -> Vec<Option<ValueDist>> {
        d.items().iter().zip(&thresholds).map(|(dj, t)| dj.condition(t, s).ok()).collect()
    };
    Ok(CoreTailSplit {
        variant,
        q: c.q.clone(),
        beta: c.beta.clone(),
        tau,
        core: side(Side::Core),
        tail: side(Side::Tail),
        thresholds,
        tail_probs,
        item_revenue,
    })
}

/// Smallest `tau >= 0` with `prod_j Pr[v_j <= beta_j + tau] >= 1/2`. The
/// product is a step function of `tau`, so only atom offsets are candidates.
fn minimal_shift(d: &ProductDist, beta: &[Rational]) -> Rational {
    let mut candidates: Vec<Rational> = vec![Rational::zero()];
    for (dj, b) in d.items().iter().zip(beta) {
        candidates.extend(dj.values().map(|v| v - b).filter(|x| x.is_positive()));
    }
    candidates.sort();
    candidates.dedup();
    candidates
        .into_iter()
        .find(|tau| {
            let core = d.items().iter().zip(beta).fold(Rational::one(), |acc, (dj, b)| acc * dj.cdf(&(b + tau)));
            core >= half()
        })
        .expect("the largest offset puts every item in the core")
}

impl CoreTailSplit {
    pub fn m(&self) -> usize {
        self.q.len()
    }

    /// `xi_A`: exactly the items of `a` are in the tail.
    pub fn set_prob(&self, a: ItemSet) -> Rational {
        self.tail_probs.iter().enumerate().fold(Rational::one(), |acc, (j, x)| {
            if a >> j & 1 == 1 {
                acc * x
            } else {
                acc * (Rational::one() - x)
            }
        })
    }

    /// `xi_{empty}`.
    pub fn core_prob(&self) -> Rational {
        self.set_prob(0)
    }

    /// `sum_j r_j`.
    pub fn revenue_sum(&self) -> Rational {
        self.item_revenue.iter().fold(Rational::zero(), |acc, x| acc + x)
    }

    /// When all items are in the core with probability at least 1/2, the
    /// tail probabilities sum to at most `ln 2`.
    pub fn tail_mass_within_ln2(&self) -> bool {
        if self.core_prob() < half() {
            return true;
        }
        let total: f64 = self.tail_probs.iter().map(to_f64).sum();
        total <= LN2 + DEFAULT_TOLERANCE
    }

    /// `D^C`, the product of core conditionals.
    pub fn core_dist(&self) -> Result<ProductDist> {
        let items = self
            .core
            .iter()
            .enumerate()
            .map(|(j, c)| {
                c.clone().ok_or_else(|| Error::EmptyConditioning {
                    threshold: format!("item {j} at {}", format_rational(&self.thresholds[j])),
                    side: "core",
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ProductDist::new(items)
    }

    /// `D^T_A` over the items of `a`, in ascending order.
    pub fn tail_dist(&self, a: ItemSet) -> Result<ProductDist> {
        let items = items(a)
            .map(|j| {
                self.tail[j].clone().ok_or_else(|| Error::EmptyConditioning {
                    threshold: format!("item {j} at {}", format_rational(&self.thresholds[j])),
                    side: "tail",
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ProductDist::new(items)
    }

    /// `sum_A xi_A * Rev(D^T_A, F|_A)` by the mechanism LP on each `A`.
    pub fn tail_revenue(&self, f: &Matroid) -> Result<Rational> {
        let mut total = Rational::zero();
        for a in 1..=full_set(self.m()) {
            let w = self.set_prob(a);
            if w.is_zero() {
                continue;
            }
            let rev = opt_bic(&self.tail_dist(a)?, &f.restriction(a), None, Objective::Revenue)?.value;
            total += w * rev;
        }
        Ok(total)
    }
}

/// A term value: exact, or a float when `ln 2` is involved.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(Rational),
    Approx(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => to_f64(r),
            Value::Approx(x) => *x,
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Value::Exact(r) => s.serialize_str(&format_rational(r)),
            Value::Approx(x) => s.serialize_f64(*x),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// Exact enumeration.
    Exact,
    /// Exact optimum of the mechanism LP.
    Lp,
    MonteCarlo { std_error: f64 },
    /// Floating-point arithmetic.
    Float,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Term {
    pub name: String,
    pub value: Value,
    pub provenance: Provenance,
}

impl Term {
    pub fn exact(name: &str, value: Rational) -> Self {
        Self { name: name.into(), value: Value::Exact(value), provenance: Provenance::Exact }
    }

    pub fn lp(name: &str, value: Rational) -> Self {
        Self { name: name.into(), value: Value::Exact(value), provenance: Provenance::Lp }
    }

    pub fn float(name: &str, value: f64) -> Self {
        Self { name: name.into(), value: Value::Approx(value), provenance: Provenance::Float }
    }
}

/// A checked inequality `lhs <= rhs`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCertificate {
    pub name: String,
    pub lhs: Value,
    pub rhs: Value,
    pub terms: Vec<Term>,
    pub tolerance: f64,
    pub holds: bool,
}

impl BoundCertificate {
    /// Exact comparison when both sides are exact. Otherwise `f64` with
    /// [`DEFAULT_TOLERANCE`] plus three standard errors of any Monte Carlo
    /// term.
    pub fn new(name: &str, lhs: Value, rhs: Value, terms: Vec<Term>) -> Self {
        let mut cert = Self { name: name.into(), lhs, rhs, terms, tolerance: 0.0, holds: false };
        cert.evaluate(DEFAULT_TOLERANCE);
        cert
    }

    /// Re-evaluates with a different relative slack for `f64` comparisons.
    pub fn with_tolerance(mut self, relative: f64) -> Self {
        self.evaluate(relative);
        self
    }

    fn evaluate(&mut self, relative: f64) {
        let sigma: f64 = self
            .terms
            .iter()
            .map(|t| match t.provenance {
                Provenance::MonteCarlo { std_error } => 3.0 * std_error,
                _ => 0.0,
            })
            .sum();
        match (&self.lhs, &self.rhs) {
            (Value::Exact(l), Value::Exact(r)) if sigma == 0.0 => {
                self.tolerance = 0.0;
                self.holds = l <= r;
            }
            _ => {
                let r = self.rhs.to_f64();
                self.tolerance = relative * r.abs().max(1.0) + sigma;
                self.holds = self.lhs.to_f64() <= r + self.tolerance;
            }
        }
    }

    /// `lhs / rhs`, or `None` when the right side is not positive.
    pub fn ratio(&self) -> Option<f64> {
        let r = self.rhs.to_f64();
        (r > 0.0).then(|| self.lhs.to_f64() / r)
    }

    /// The same certificate with the right side multiplied by `factor`,
    /// evaluated at the default tolerance.
    pub fn rescaled(&self, factor: &Rational) -> Self {
        let rhs = match &self.rhs {
            Value::Exact(r) => Value::Exact(r * factor),
            Value::Approx(x) => Value::Approx(x * to_f64(factor)),
        };
        let mut out = Self { rhs, ..self.clone() };
        out.evaluate(DEFAULT_TOLERANCE);
        out
    }
}

fn sum(values: impl IntoIterator<Item = Rational>) -> Rational {
    values.into_iter().fold(Rational::zero(), |acc, x| acc + x)
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

fn constant(n: i64, d: i64) -> Rational {
    rat(n, d)
}

/// Best item pricing with every price at or above `floor`.
fn item_revenue(d: &ProductDist, f: &Matroid, floor: &[Rational], extras: Option<&[Vec<Rational>]>) -> Result<Rational> {
    let opts = PricingOptions { floor: Some(floor), extras };
    Ok(grid_pricing_opt(d, f, PricingFamily::Item, &opts)?.value)
}

fn tariff_revenue(d: &ProductDist, f: &Matroid, floor: &[Rational], extras: Option<&[Vec<Rational>]>) -> Result<Rational> {
    let opts = PricingOptions { floor: Some(floor), extras };
    Ok(grid_pricing_opt(d, f, PricingFamily::Tariff, &opts)?.value)
}

fn threshold_extras(s: &CoreTailSplit) -> Vec<Vec<Rational>> {
    s.thresholds.iter().map(|t| vec![t.clone()]).collect()
}

/// `Rev^q(D, F) <= Val^q(D^C, F) + sum_A xi_A Rev(D^T_A, F|_A)`, every term
/// from the mechanism LP.
pub fn core_decomposition_certificate(d: &ProductDist, f: &Matroid, c: &ExAnteConstraint) -> Result<BoundCertificate> {
    let s = split(d, c, SplitVariant::UniformShift)?;
    let rev = opt_bic(d, f, Some(&c.q), Objective::Revenue)?.value;
    let core_welfare = opt_bic(&s.core_dist()?, f, Some(&c.q), Objective::Welfare)?.value;
    let tail = s.tail_revenue(f)?;
    let rhs = &core_welfare + &tail;
    Ok(BoundCertificate::new(
        "core_decomposition",
        Value::Exact(rev.clone()),
        Value::Exact(rhs),
        vec![
            Term::lp("constrained_revenue", rev),
            Term::lp("core_constrained_welfare", core_welfare),
            Term::lp("tail_revenue", tail),
        ],
    ))
}

/// Tail revenue against `8(1 + ln 2)` times the best item pricing at or
/// above the ex ante prices, with the intermediate chain reported.
pub fn tail_revenue_terms(s: &CoreTailSplit, d: &ProductDist, f: &Matroid) -> Result<BoundCertificate> {
    let m = s.m();
    let lhs = s.tail_revenue(f)?;
    let mut unit_demand_bound = Rational::zero();
    for a in 1..=full_set(m) {
        let w = s.set_prob(a);
        if w.is_zero() {
            continue;
        }
        let ud = Matroid::unit_demand(size(a))?;
        let tail = s.tail_dist(a)?;
        let srev = grid_pricing_opt(&tail, &ud, PricingFamily::Item, &PricingOptions::default())?.value;
        unit_demand_bound += w * Rational::from_integer(BigInt::from(size(a))) * srev;
    }
    unit_demand_bound *= constant(4, 1);
    let total_xi = sum(s.tail_probs.iter().cloned());
    let mut separated = Rational::zero();
    for j in 0..m {
        if let Some(t) = &s.tail[j] {
            let expected_size = Rational::one() + &total_xi - &s.tail_probs[j];
            separated += &s.tail_probs[j] * t.single_item_opt_rev(&Rational::one()) * expected_size;
        }
    }
    separated *= constant(4, 1);
    let capped = sum(d.items().iter().zip(&s.tail_probs).map(|(dj, x)| dj.single_item_opt_rev(x)));
    let capped_bound = 4.0 * (1.0 + LN2) * to_f64(&capped);
    let at_thresholds = item_revenue(d, f, &s.thresholds, None)?;
    let core_prob = s.core_prob();
    let threshold_bound = if core_prob.is_positive() {
        4.0 * (1.0 + LN2) * to_f64(&(&at_thresholds / &core_prob))
    } else {
        f64::INFINITY
    };
    let extras = threshold_extras(s);
    let srev = item_revenue(d, f, &s.beta, Some(&extras))?;
    let rhs = 8.0 * (1.0 + LN2) * to_f64(&srev);
    Ok(BoundCertificate::new(
        "tail_bound",
        Value::Exact(lhs.clone()),
        Value::Approx(rhs),
        vec![
            Term::lp("tail_revenue", lhs),
            Term::exact("unit_demand_separate_bound", unit_demand_bound),
            Term::exact("per_item_tail_bound", separated),
            Term::float("tail_mass_bound", capped_bound),
            Term::float("threshold_pricing_bound", threshold_bound),
            Term::exact("item_pricing_at_thresholds", at_thresholds),
            Term::exact("constrained_item_pricing", srev),
        ],
    ))
}

/// `E[v([m])] <= 3a + 4 tau / ln 2` on `D^C - beta`, where `a` is the
/// upper median of the grand-bundle value.
pub fn schechtman_certificate(s: &CoreTailSplit, f: &Matroid) -> Result<BoundCertificate> {
    let core = s.core_dist()?;
    let dist = bundle_value_dist(&core, f, Some(&s.beta))?;
    let mean = dist.iter().fold(Rational::zero(), |acc, (v, p)| acc + v * p);
    let median = upper_median(&dist);
    let rhs = 3.0 * to_f64(&median) + 4.0 * to_f64(&s.tau) / LN2;
    Ok(BoundCertificate::new(
        "bundle_concentration",
        Value::Exact(mean.clone()),
        Value::Approx(rhs),
        vec![
            Term::exact("expected_bundle_value", mean),
            Term::exact("median_bundle_value", median),
            Term::exact("tau", s.tau.clone()),
        ],
    ))
}

/// Largest `a` with `Pr[V >= a] >= 1/2`.
fn upper_median(dist: &[(Rational, Rational)]) -> Rational {
    let mut upper = Rational::zero();
    for (v, p) in dist.iter().rev() {
        upper += p;
        if upper >= half() {
            return v.clone();
        }
    }
    Rational::zero()
}

/// The three core bounds: the welfare split at the ex ante prices, the
/// concentration of the shifted core, and the resulting bundle-plus-items
/// bound.
pub fn core_bound_terms(s: &CoreTailSplit, d: &ProductDist, f: &Matroid) -> Result<Vec<BoundCertificate>> {
    let core = s.core_dist()?;
    let core_welfare = opt_bic(&core, f, Some(&s.q), Objective::Welfare)?.value;
    let shifted_welfare = expected_welfare(&core, f, Some(&s.beta))?;
    let bq = dot(&s.beta, &s.q);
    let split_cert = BoundCertificate::new(
        "core_welfare_split",
        Value::Exact(core_welfare.clone()),
        Value::Exact(&bq + &shifted_welfare),
        vec![
            Term::lp("core_constrained_welfare", core_welfare),
            Term::exact("beta_dot_q", bq),
            Term::exact("shifted_core_welfare", shifted_welfare.clone()),
        ],
    );
    let concentration = schechtman_certificate(s, f)?;
    let brev = bundle_revenue(d, f, Some(&s.beta))?;
    let extras = threshold_extras(s);
    let srev = item_revenue(d, f, &s.beta, Some(&extras))?;
    let rhs = 6.0 * to_f64(&brev) + 8.0 / LN2 * to_f64(&srev);
    let bound = BoundCertificate::new(
        "core_welfare_bound",
        Value::Exact(shifted_welfare.clone()),
        Value::Approx(rhs),
        vec![
            Term::exact("shifted_core_welfare", shifted_welfare),
            Term::exact("shifted_bundle_revenue", brev),
            Term::exact("constrained_item_pricing", srev),
        ],
    );
    Ok(vec![split_cert, concentration, bound])
}

/// Revenue bounds for one buyer under caps `c.q`:
///
/// * `single_agent`: `Rev^q <= 6 BRev(D - beta) + 8(1 + ln 2 + 1/ln 2)
///   SRev^q + beta.q`;
/// * `separate_or_bundle` (all caps 1): `Rev <= 31.1 max{SRev, BRev}`;
/// * `tariff_half_polytope` (caps in half the polytope): `Rev^q <= 33.1
///   TRev^q`;
/// * `tariff_any_caps`: `Rev^q <= 35.1 TRev^q`.
///
/// The tariff bounds use `limit` as the demand limit when given; without it
/// they are only produced for uniform and partition matroids.
pub fn single_agent_certificate(
    d: &ProductDist,
    f: &Matroid,
    c: &ExAnteConstraint,
    limit: Option<&Matroid>,
) -> Result<Vec<BoundCertificate>> {
    let s = split(d, c, SplitVariant::UniformShift)?;
    let rev = opt_bic(d, f, Some(&c.q), Objective::Revenue)?.value;
    let brev = bundle_revenue(d, f, Some(&c.beta))?;
    let extras = threshold_extras(&s);
    let srev = item_revenue(d, f, &c.beta, Some(&extras))?;
    let bq = c.beta_dot_q();
    let rhs = 6.0 * to_f64(&brev) + 8.0 * (1.0 + LN2 + 1.0 / LN2) * to_f64(&srev) + to_f64(&bq);
    let mut out = vec![BoundCertificate::new(
        "single_agent",
        Value::Exact(rev.clone()),
        Value::Approx(rhs),
        vec![
            Term::lp("constrained_revenue", rev.clone()),
            Term::exact("shifted_bundle_revenue", brev),
            Term::exact("constrained_item_pricing", srev),
            Term::exact("beta_dot_q", bq),
        ],
    )];
    if c.q.iter().all(One::is_one) {
        let zero = vec![Rational::zero(); d.m()];
        let plain = item_revenue(d, f, &zero, None)?;
        let bundle = bundle_revenue(d, f, None)?;
        let best = plain.clone().max(bundle.clone());
        out.push(BoundCertificate::new(
            "separate_or_bundle",
            Value::Exact(rev.clone()),
            Value::Exact(constant(311, 10) * best),
            vec![
                Term::lp("revenue", rev.clone()),
                Term::exact("item_pricing", plain),
                Term::exact("bundle_pricing", bundle),
            ],
        ));
    }
    let demand = match (limit, f) {
        (Some(l), _) => Some(l),
        (None, Matroid::Uniform { .. } | Matroid::Partition { .. }) => Some(f),
        _ => None,
    };
    if let Some(demand) = demand {
        let trev = tariff_revenue(d, demand, &c.beta, Some(&extras))?;
        if f.in_scaled_polytope(&c.q, &half())? {
            out.push(BoundCertificate::new(
                "tariff_half_polytope",
                Value::Exact(rev.clone()),
                Value::Exact(constant(331, 10) * &trev),
                vec![Term::lp("constrained_revenue", rev.clone()), Term::exact("constrained_tariff", trev.clone())],
            ));
        }
        out.push(BoundCertificate::new(
            "tariff_any_caps",
            Value::Exact(rev.clone()),
            Value::Exact(constant(351, 10) * &trev),
            vec![Term::lp("constrained_revenue", rev), Term::exact("constrained_tariff", trev)],
        ));
    }
    Ok(out)
}

/// `beta.q <= 2 * (revenue of posting exactly beta)` for uniform and
/// partition matroids with caps in half the polytope.
pub fn prophet_certificate(d: &ProductDist, f: &Matroid, c: &ExAnteConstraint) -> Result<BoundCertificate> {
    if matches!(f, Matroid::Explicit { .. }) {
        return Err(Error::UnsupportedConstraint(
            "threshold pricing bound needs a uniform or partition matroid".into(),
        ));
    }
    if !f.in_scaled_polytope(&c.q, &half())? {
        return Err(Error::Precondition("ex ante caps are not in half the matroid polytope".into()));
    }
    let tariff = TwoPartTariff::item_pricing(c.beta.clone())?;
    let agent = Agent::new(d.clone(), f.clone())?;
    let posted = exact_mechanism_revenue(&Mechanism::Single(tariff), &[agent])?;
    let bq = c.beta_dot_q();
    Ok(BoundCertificate::new(
        "prophet_pricing",
        Value::Exact(bq.clone()),
        Value::Exact(constant(2, 1) * &posted),
        vec![Term::exact("beta_dot_q", bq), Term::exact("posted_ex_ante_prices", posted)],
    ))
}

/// Checks for an additive buyer with thresholds `max(beta_j, r)`: per-item
/// variance and tail conditions, the core and tail bounds they imply, and
/// `Rev^q <= 7 TRev^q`.
pub fn additive_certificates(d: &ProductDist, c: &ExAnteConstraint) -> Result<Vec<BoundCertificate>> {
    let m = d.m();
    let f = Matroid::free(m)?;
    let s = split(d, c, SplitVariant::RevenueFloor)?;
    let r = s.revenue_sum();
    let two_r = constant(2, 1) * &r;
    let mut out = Vec::new();
    for j in 0..m {
        let rj = &s.item_revenue[j];
        let core = s.core[j].as_ref().ok_or_else(|| Error::EmptyConditioning {
            threshold: format!("item {j} at {}", format_rational(&s.thresholds[j])),
            side: "core",
        })?;
        let var = core.shift(&s.beta[j]).positive_part().variance();
        out.push(BoundCertificate::new(
            &format!("additive_core_variance[{j}]"),
            Value::Exact(var.clone()),
            Value::Exact(&two_r * rj),
            vec![Term::exact("core_variance", var), Term::exact("item_revenue", rj.clone()), Term::exact("revenue_sum", r.clone())],
        ));
        let xi = &s.tail_probs[j];
        out.push(BoundCertificate::new(
            &format!("additive_tail_mass[{j}]"),
            Value::Exact(xi * &r),
            Value::Exact(rj.clone()),
            vec![Term::exact("tail_prob", xi.clone()), Term::exact("item_revenue", rj.clone()), Term::exact("revenue_sum", r.clone())],
        ));
        if let Some(tail) = &s.tail[j] {
            let tail_rev = tail.single_item_opt_rev(&Rational::one());
            out.push(BoundCertificate::new(
                &format!("additive_tail_revenue[{j}]"),
                Value::Exact(xi * &tail_rev),
                Value::Exact(rj.clone()),
                vec![Term::exact("tail_prob", xi.clone()), Term::exact("tail_item_revenue", tail_rev), Term::exact("item_revenue", rj.clone())],
            ));
        }
    }
    let core = s.core_dist()?;
    let shifted_welfare = expected_welfare(&core, &f, Some(&s.beta))?;
    let core_bundle = bundle_revenue(&core, &f, Some(&s.beta))?;
    out.push(BoundCertificate::new(
        "additive_core",
        Value::Exact(shifted_welfare.clone()),
        Value::Exact(constant(4, 1) * core_bundle.clone().max(r.clone())),
        vec![
            Term::exact("shifted_core_welfare", shifted_welfare),
            Term::exact("shifted_core_bundle_revenue", core_bundle),
            Term::exact("revenue_sum", r.clone()),
        ],
    ));
    let tail = s.tail_revenue(&f)?;
    out.push(BoundCertificate::new(
        "additive_tail",
        Value::Exact(tail.clone()),
        Value::Exact(two_r),
        vec![Term::lp("tail_revenue", tail), Term::exact("revenue_sum", r)],
    ));
    let rev = opt_bic(d, &f, Some(&c.q), Objective::Revenue)?.value;
    let trev = tariff_revenue(d, &f, &c.beta, Some(&threshold_extras(&s)))?;
    out.push(BoundCertificate::new(
        "additive_tariff",
        Value::Exact(rev.clone()),
        Value::Exact(constant(7, 1) * &trev),
        vec![Term::lp("constrained_revenue", rev), Term::exact("constrained_tariff", trev)],
    ));
    Ok(out)
}

/// `Rev(D, F) <= 4m * SRev(D, unit demand)`.
pub fn unit_demand_reduction_certificate(d: &ProductDist, f: &Matroid) -> Result<BoundCertificate> {
    let m = d.m();
    let rev = opt_bic(d, f, None, Objective::Revenue)?.value;
    let ud = Matroid::unit_demand(m)?;
    let srev = grid_pricing_opt(d, &ud, PricingFamily::Item, &PricingOptions::default())?.value;
    let factor = Rational::from_integer(BigInt::from(4 * m));
    Ok(BoundCertificate::new(
        "unit_demand_reduction",
        Value::Exact(rev.clone()),
        Value::Exact(factor * &srev),
        vec![Term::lp("revenue", rev), Term::exact("unit_demand_item_pricing", srev)],
    ))
}

/// Outcome of stitching single-agent tariffs.
#[derive(Clone, Debug)]
pub struct StitchCheck {
    pub mechanism: SequentialTariff,
    pub standalone: Vec<Rational>,
    pub report: SequentialReport,
    /// Stitched revenue at least half the standalone total.
    pub revenue: BoundCertificate,
    /// Every item unsold with probability at least 1/2 at every turn.
    pub availability: BoundCertificate,
}

pub fn stitching_certificates(
    agents: &[Agent],
    tariffs: &[TwoPartTariff],
    constraints: &[ExAnteConstraint],
    order: Vec<usize>,
) -> Result<StitchCheck> {
    let mechanism = stitch(tariffs, constraints, order)?;
    let standalone = agents
        .iter()
        .zip(tariffs)
        .map(|(a, t)| exact_mechanism_revenue(&Mechanism::Single(t.clone()), std::slice::from_ref(a)))
        .collect::<Result<Vec<_>>>()?;
    let report = run_sequential(&mechanism, agents, EvalMode::Exact)?;
    let detail = report.exact.as_ref().expect("exact mode fills the detail");
    let total = sum(standalone.iter().cloned());
    let revenue = BoundCertificate::new(
        "stitching",
        Value::Exact(half() * &total),
        Value::Exact(detail.revenue.clone()),
        vec![Term::exact("standalone_total", total), Term::exact("stitched_revenue", detail.revenue.clone())],
    );
    let least = detail.availability.iter().flatten().min().cloned().unwrap_or_else(Rational::one);
    let availability = BoundCertificate::new(
        "availability",
        Value::Exact(half()),
        Value::Exact(least.clone()),
        vec![Term::exact("least_availability", least)],
    );
    Ok(StitchCheck { mechanism, standalone, report, revenue, availability })
}

/// `|estimate - exact| <= 3 sigma`.
pub fn agreement_certificate(name: &str, exact: &Rational, estimate: f64, std_error: f64) -> BoundCertificate {
    let gap = (estimate - to_f64(exact)).abs();
    BoundCertificate::new(
        name,
        Value::Approx(gap),
        Value::Exact(Rational::zero()),
        vec![
            Term::exact("exact_revenue", exact.clone()),
            Term { name: "monte_carlo_revenue".into(), value: Value::Approx(estimate), provenance: Provenance::MonteCarlo { std_error } },
        ],
    )
}
