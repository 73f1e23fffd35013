//! Mechanism synthesis for a priori identical agents.
//!
//! Two candidates are built and the better one kept: a sequential tariff
//! whose entry fee is a sampled optimal bundle price over values shifted
//! by the `1/(2n)` quantile prices, and a sequential item pricing at the ex
//! ante prices of a quantile vector from [`solve_bq`].

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::Serialize;

use crate::dist::ProductDist;
use crate::error::{Error, Result};
use crate::matroid::{full_set, items, Matroid};
use crate::mechanism::{run_sequential, stitch, Agent, EvalMode, ExAnteConstraint, SequentialTariff, TwoPartTariff};
use crate::oracle::{brute_force_bq, opt_bic, Objective};
use crate::rational::{to_f64, Rational};
use crate::rng::substream;

const BUNDLE_STREAM: u64 = 0xb0;
const QUANTILE_STREAM: u64 = 0x9a;
const EVAL_STREAM: u64 = 0xe7;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetricInstance {
    pub n: usize,
    pub dist: ProductDist,
    pub constraint: Matroid,
    /// Submatroid buyers are restricted to. Required for explicit matroids.
    pub demand_limit: Option<Matroid>,
}

impl SymmetricInstance {
    pub fn new(n: usize, dist: ProductDist, constraint: Matroid) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("a symmetric instance needs at least one agent".into()));
        }
        if dist.m() != constraint.m() {
            return Err(Error::DimensionMismatch { what: "matroid ground set", expected: dist.m(), got: constraint.m() });
        }
        Ok(Self { n, dist, constraint, demand_limit: None })
    }

    pub fn with_demand_limit(mut self, limit: Matroid) -> Result<Self> {
        if !limit.is_submatroid_of(&self.constraint)? {
            return Err(Error::ConstraintMismatch);
        }
        self.demand_limit = Some(limit);
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.dist.m()
    }

    /// Per-agent cap `1/(2n)`.
    pub fn cap(&self) -> Rational {
        Rational::new(BigInt::one(), BigInt::from(2 * self.n))
    }

    pub fn agents(&self) -> Vec<Agent> {
        vec![Agent { dist: self.dist.clone(), constraint: self.constraint.clone() }; self.n]
    }

    fn effective_limit(&self) -> Result<Matroid> {
        match (&self.demand_limit, &self.constraint) {
            (Some(l), _) => Ok(l.clone()),
            (None, Matroid::Uniform { .. } | Matroid::Partition { .. }) => Ok(self.constraint.clone()),
            (None, Matroid::Explicit { .. }) => Err(Error::UnsupportedConstraint(
                "synthesis over an explicit matroid needs a demand limit".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WeightedQ {
    #[serde(with = "crate::rational::serde_rational_vec")]
    pub q: Vec<Rational>,
    #[serde(with = "crate::rational::serde_rational")]
    pub weight: Rational,
}

/// A distribution over quantile vectors. All points share one uniform draw:
/// item `j` takes its upper quantile when the draw exceeds its own split.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QRandomization {
    pub points: Vec<WeightedQ>,
}

impl QRandomization {
    pub fn deterministic(q: Vec<Rational>) -> Self {
        Self { points: vec![WeightedQ { q, weight: Rational::one() }] }
    }

    pub fn is_deterministic(&self) -> bool {
        self.points.len() == 1
    }

    pub fn mean(&self) -> Vec<Rational> {
        let m = self.points[0].q.len();
        (0..m)
            .map(|j| self.points.iter().fold(Rational::zero(), |acc, p| acc + &p.weight * &p.q[j]))
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, p) in self.points.iter().enumerate() {
            acc += to_f64(&p.weight);
            if u < acc {
                return i;
            }
        }
        self.points.len() - 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BqSolution {
    pub randomization: QRandomization,
    /// Expected `sum_j q_j * v_j(q_j)` under the randomization.
    pub objective: Rational,
    /// Grid cells selected per item.
    pub counts: Vec<usize>,
}

/// Greedy maximization of `q . D^{-1}(1 - q)` over the `1/epsilon`-fold
/// union of the matroid, each item's quantile axis cut into cells of width
/// `epsilon` up to `1/(2n)` and weighted by ironed virtual values.
pub fn solve_bq(inst: &SymmetricInstance, epsilon: &Rational) -> Result<BqSolution> {
    let copies = copies(epsilon)?;
    let cap = inst.cap();
    if *epsilon > cap {
        return Err(Error::Precondition("epsilon exceeds 1/(2n)".into()));
    }
    let curves = inst
        .dist
        .items()
        .iter()
        .map(|dj| dj.iron_capped(epsilon, &cap))
        .collect::<Result<Vec<_>>>()?;
    let mut elements = Vec::new();
    for (j, c) in curves.iter().enumerate() {
        elements.extend(c.slopes.iter().map(|s| (j, s.clone())));
    }
    let picked = inst.constraint.greedy_union_basis(copies, &elements);
    let mut counts = vec![0usize; inst.m()];
    for e in picked {
        counts[elements[e].0] += 1;
    }
    let objective = curves.iter().zip(&counts).fold(Rational::zero(), |acc, (c, &z)| acc + &c.envelope[z]);

    // Each item sits between two envelope touch points; mix them so the
    // mean is the greedy quantile and the objective is the envelope value.
    let mut splits = Vec::new();
    for (c, &z) in curves.iter().zip(&counts) {
        let touch = c.touch_points();
        let lo = *touch.iter().rev().find(|&&t| t <= z).expect("grid origin is a touch point");
        let hi = touch.iter().copied().find(|&t| t >= z).unwrap_or(lo);
        let lambda = if hi == lo {
            Rational::one()
        } else {
            Rational::from_integer(BigInt::from(hi - z)) / Rational::from_integer(BigInt::from(hi - lo))
        };
        splits.push((c.quantiles[lo].clone(), c.quantiles[hi].clone(), lambda));
    }
    let mut cuts: Vec<Rational> = splits.iter().map(|(_, _, l)| l.clone()).filter(|l| !l.is_one()).collect();
    cuts.push(Rational::zero());
    cuts.push(Rational::one());
    cuts.sort();
    cuts.dedup();
    let mut points = Vec::new();
    for w in cuts.windows(2) {
        let weight = &w[1] - &w[0];
        if weight.is_zero() {
            continue;
        }
        let q = splits.iter().map(|(lo, hi, l)| if *l >= w[1] { lo.clone() } else { hi.clone() }).collect();
        points.push(WeightedQ { q, weight });
    }
    Ok(BqSolution { randomization: QRandomization { points }, objective, counts })
}

fn copies(epsilon: &Rational) -> Result<usize> {
    if !epsilon.is_positive() || *epsilon > Rational::one() || !epsilon.recip().is_integer() {
        return Err(Error::Precondition("1/epsilon must be a positive integer".into()));
    }
    epsilon.recip().to_integer().to_usize().ok_or_else(|| Error::Precondition("epsilon too small".into()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BundleBranch {
    /// Optimal bundle price over the sampled shifted values.
    pub fee: Rational,
    /// `D_j^{-1}(1 - 1/(2n))`.
    pub prices: Vec<Rational>,
    pub samples: usize,
    pub accepted: usize,
    /// `fee * accepted / samples`.
    pub empirical_revenue: Rational,
}

pub fn bundle_branch(inst: &SymmetricInstance, samples: usize, seed: u64) -> Result<BundleBranch> {
    if samples == 0 {
        return Err(Error::Precondition("bundle sampling needs at least one sample".into()));
    }
    let cap = inst.cap();
    let prices: Vec<Rational> = inst.dist.items().iter().map(|dj| dj.quantile_price(&cap)).collect();
    let limit = inst.demand_limit.as_ref().unwrap_or(&inst.constraint);
    let mut rng = substream(seed, &[BUNDLE_STREAM]);
    let mut values: Vec<Rational> = (0..samples)
        .map(|_| {
            let v = inst.dist.sample(&mut rng);
            let w: Vec<Rational> = v.iter().zip(&prices).map(|(x, p)| x - p).collect();
            let basis = limit.max_weight_basis(&w, full_set(inst.m()));
            items(basis).fold(Rational::zero(), |acc, j| acc + &w[j])
        })
        .collect();
    values.sort();
    let mut best = (Rational::zero(), Rational::zero(), 0usize);
    let mut i = 0;
    while i < values.len() {
        let accepted = values.len() - i;
        let a = values[i].clone();
        let revenue = &a * Rational::from_integer(BigInt::from(accepted)) / Rational::from_integer(BigInt::from(samples));
        if revenue > best.1 {
            best = (a.clone(), revenue, accepted);
        }
        while i < values.len() && values[i] == a {
            i += 1;
        }
    }
    let (fee, empirical_revenue, accepted) = best;
    Ok(BundleBranch { fee, prices, samples, accepted, empirical_revenue })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Bundle,
    Item,
}

/// Revenue of one candidate mechanism: exact when the joint profile space
/// is small enough, Monte Carlo otherwise.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchValue {
    pub revenue: f64,
    pub std_error: f64,
    #[serde(with = "crate::rational::serde_rational_opt")]
    pub exact: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricSolution {
    pub branch: Branch,
    pub mechanism: SequentialTariff,
    pub bq: BqSolution,
    /// Index of the realized point of `bq.randomization`.
    pub realized: usize,
    pub bundle: BundleBranch,
    /// Item prices of the item branch at the realized point.
    pub beta: Vec<Rational>,
    pub bundle_value: BranchValue,
    /// Expectation over the randomization.
    pub item_value: BranchValue,
}

impl SymmetricSolution {
    pub fn q(&self) -> &[Rational] {
        &self.bq.randomization.points[self.realized].q
    }

    pub fn value(&self) -> &BranchValue {
        match self.branch {
            Branch::Bundle => &self.bundle_value,
            Branch::Item => &self.item_value,
        }
    }
}

/// Builds both candidates, evaluates them with `samples` draws where exact
/// evaluation is out of reach, and returns the better one.
pub fn synthesize(inst: &SymmetricInstance, epsilon: &Rational, samples: usize, seed: u64) -> Result<SymmetricSolution> {
    let limit = inst.effective_limit()?;
    let agents = inst.agents();
    let order: Vec<usize> = (0..inst.n).collect();
    let cap = inst.cap();

    let bundle = bundle_branch(inst, samples, seed)?;
    let bundle_tariff = TwoPartTariff::new(bundle.fee.clone(), bundle.prices.clone(), Some(limit.clone()))?;
    let cap_constraint = ExAnteConstraint::new(&inst.dist, vec![cap; inst.m()])?;
    let bundle_mech = stitch(&vec![bundle_tariff; inst.n], &vec![cap_constraint; inst.n], order.clone())?;
    let bundle_value = evaluate(&bundle_mech, &agents, samples, seed, 0)?;

    let bq = solve_bq(inst, epsilon)?;
    let mut item_mechs = Vec::new();
    let mut values = Vec::new();
    for (k, point) in bq.randomization.points.iter().enumerate() {
        let c = ExAnteConstraint::new(&inst.dist, point.q.clone())?;
        let tariff = TwoPartTariff::new(Rational::zero(), c.beta.clone(), Some(limit.clone()))?;
        let mech = stitch(&vec![tariff; inst.n], &vec![c.clone(); inst.n], order.clone())?;
        values.push(evaluate(&mech, &agents, samples, seed, 1 + k as u64)?);
        item_mechs.push((mech, c.beta));
    }
    let item_value = mix(&bq.randomization, &values);
    let realized = bq.randomization.sample(&mut substream(seed, &[QUANTILE_STREAM]));
    let (item_mech, beta) = item_mechs.swap_remove(realized);

    let (branch, mechanism) = if bundle_value.revenue > item_value.revenue {
        (Branch::Bundle, bundle_mech)
    } else {
        (Branch::Item, item_mech)
    };
    Ok(SymmetricSolution { branch, mechanism, bq, realized, bundle, beta, bundle_value, item_value })
}

fn evaluate(mech: &SequentialTariff, agents: &[Agent], samples: usize, seed: u64, tag: u64) -> Result<BranchValue> {
    match run_sequential(mech, agents, EvalMode::Exact) {
        Ok(r) => {
            let exact = r.exact.map(|d| d.revenue);
            Ok(BranchValue { revenue: r.revenue, std_error: 0.0, exact })
        }
        Err(Error::Scale { .. }) => {
            let seed = substream(seed, &[EVAL_STREAM, tag]).gen();
            let r = run_sequential(mech, agents, EvalMode::monte_carlo(samples, seed))?;
            Ok(BranchValue { revenue: r.revenue, std_error: r.std_error, exact: None })
        }
        Err(e) => Err(e),
    }
}

fn mix(r: &QRandomization, values: &[BranchValue]) -> BranchValue {
    let exact = values
        .iter()
        .zip(&r.points)
        .map(|(v, p)| v.exact.as_ref().map(|x| x * &p.weight))
        .sum::<Option<Rational>>();
    let mut revenue = 0.0;
    let mut var = 0.0;
    for (v, p) in values.iter().zip(&r.points) {
        let w = to_f64(&p.weight);
        revenue += w * v.revenue;
        var += (w * v.std_error).powi(2);
    }
    BranchValue { revenue: exact.as_ref().map(to_f64).unwrap_or(revenue), std_error: var.sqrt(), exact }
}

/// Revenue of `n` agents against `2n` times the best single-agent revenue
/// over grid quantile vectors in `P_F` capped at `1/(2n)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionCheck {
    pub revenue: Rational,
    pub single_agent_max: Rational,
    pub q: Vec<Rational>,
    pub holds: bool,
}

pub fn symmetric_reduction_check(inst: &SymmetricInstance, revenue: Rational, step: &Rational) -> Result<ReductionCheck> {
    let cap = inst.cap();
    let grid = brute_force_bq(&inst.dist, &inst.constraint, step, &cap)?;
    // Enumerate the same grid, scoring by the mechanism LP instead.
    let levels = (&cap / step).floor().to_integer().to_usize().unwrap_or(0);
    let axis: Vec<Rational> = (0..=levels).map(|z| step * Rational::from_integer(BigInt::from(z))).collect();
    let m = inst.m();
    let mut best = (Rational::zero(), grid.q);
    let mut idx = vec![0usize; m];
    'outer: loop {
        let q: Vec<Rational> = idx.iter().map(|&z| axis[z].clone()).collect();
        if inst.constraint.in_scaled_polytope(&q, &Rational::one())? {
            let v = opt_bic(&inst.dist, &inst.constraint, Some(&q), Objective::Revenue)?.value;
            if v > best.0 {
                best = (v, q);
            }
        }
        for j in (0..m).rev() {
            idx[j] += 1;
            if idx[j] < axis.len() {
                continue 'outer;
            }
            idx[j] = 0;
        }
        break;
    }
    let n = Rational::from_integer(BigInt::from(2 * inst.n));
    let holds = revenue <= &n * &best.0;
    Ok(ReductionCheck { revenue, single_agent_max: best.0, q: best.1, holds })
}
