//! Two-part tariffs, their sequential composition, and revenue evaluation.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::dist::ProductDist;
use crate::error::{check_scale, Error, Result};
use crate::matroid::{full_set, items, ItemSet, Matroid, MatroidSpec};
use crate::rational::{format_rational, half, to_f64, Rational};
use crate::rng::substream;
use crate::valuation::{BuyerType, Demand};

/// Joint-profile cap for exact sequential evaluation.
pub const EXACT_PROFILE_LIMIT: u128 = 1_000_000;
/// Cap on the per-agent `(profile, availability)` decision table.
pub const TABLE_LIMIT: u128 = 1 << 20;
pub const DEFAULT_INNER_TRIALS: usize = 2000;

/// Entry fee plus per-item prices, optionally restricted to a submatroid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoPartTariff {
    pub entry_fee: Rational,
    pub prices: Vec<Rational>,
    pub demand_limit: Option<Matroid>,
}

impl TwoPartTariff {
    pub fn new(entry_fee: Rational, prices: Vec<Rational>, demand_limit: Option<Matroid>) -> Result<Self> {
        if entry_fee.is_negative() || prices.iter().any(|p| p.is_negative()) {
            return Err(Error::Precondition("fees and prices must be non-negative".into()));
        }
        if let Some(l) = &demand_limit {
            if l.m() != prices.len() {
                return Err(Error::DimensionMismatch { what: "demand limit", expected: prices.len(), got: l.m() });
            }
        }
        Ok(Self { entry_fee, prices, demand_limit })
    }

    pub fn item_pricing(prices: Vec<Rational>) -> Result<Self> {
        Self::new(Rational::zero(), prices, None)
    }

    pub fn bundle_pricing(price: Rational, m: usize) -> Result<Self> {
        Self::new(price, vec![Rational::zero(); m], None)
    }

    pub fn m(&self) -> usize {
        self.prices.len()
    }

    /// All item prices zero and a positive fee. Buyers indifferent at such
    /// a tariff buy the bundle.
    pub fn is_bundle_pricing(&self) -> bool {
        self.entry_fee.is_positive() && self.prices.iter().all(Zero::is_zero)
    }
}

/// Per-item sale-probability caps and the induced ex ante prices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExAnteConstraint {
    pub q: Vec<Rational>,
    pub beta: Vec<Rational>,
}

impl ExAnteConstraint {
    pub fn new(d: &ProductDist, q: Vec<Rational>) -> Result<Self> {
        if q.len() != d.m() {
            return Err(Error::DimensionMismatch { what: "ex ante caps", expected: d.m(), got: q.len() });
        }
        if q.iter().any(|x| x.is_negative() || *x > Rational::one()) {
            return Err(Error::Precondition("ex ante caps must lie in [0, 1]".into()));
        }
        let beta = d.items().iter().zip(&q).map(|(dj, qj)| dj.quantile_price(qj)).collect();
        Ok(Self { q, beta })
    }

    /// `q = 1` on every item, so every price is admissible.
    pub fn unconstrained(d: &ProductDist) -> Self {
        Self::new(d, vec![Rational::one(); d.m()]).expect("unit caps are valid")
    }

    pub fn m(&self) -> usize {
        self.q.len()
    }

    /// `sum_j beta_j q_j`.
    pub fn beta_dot_q(&self) -> Rational {
        self.beta.iter().zip(&self.q).fold(Rational::zero(), |acc, (b, q)| acc + b * q)
    }
}

/// The ex post outcome for one buyer. Bundle pricings accept at zero surplus.
pub fn run_single(tariff: &TwoPartTariff, b: &BuyerType, available: ItemSet) -> Result<Demand> {
    b.respond(tariff, available, None, tariff.is_bundle_pricing())
}

pub fn satisfies_ex_ante(tariff: &TwoPartTariff, d: &ProductDist, c: &ExAnteConstraint) -> Result<bool> {
    if tariff.m() != d.m() || c.m() != d.m() {
        return Err(Error::DimensionMismatch { what: "tariff", expected: d.m(), got: tariff.m() });
    }
    Ok(tariff.prices.iter().zip(&c.beta).all(|(p, b)| p >= b))
}

/// Agents visited in `order`, each with its own tariff.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequentialTariff {
    pub order: Vec<usize>,
    pub fees: Vec<Rational>,
    pub prices: Vec<Vec<Rational>>,
    pub limits: Vec<Option<Matroid>>,
}

impl SequentialTariff {
    pub fn new(
        order: Vec<usize>,
        fees: Vec<Rational>,
        prices: Vec<Vec<Rational>>,
        limits: Vec<Option<Matroid>>,
    ) -> Result<Self> {
        let n = fees.len();
        if n == 0 {
            return Err(Error::Precondition("no agents".into()));
        }
        if prices.len() != n || limits.len() != n {
            return Err(Error::DimensionMismatch { what: "per-agent tariffs", expected: n, got: prices.len().min(limits.len()) });
        }
        let mut seen = vec![false; n];
        for &i in &order {
            if i >= n || seen[i] {
                return Err(Error::Precondition("order is not a permutation of the agents".into()));
            }
            seen[i] = true;
        }
        if order.len() != n {
            return Err(Error::Precondition("order is not a permutation of the agents".into()));
        }
        let m = prices[0].len();
        for (row, lim) in prices.iter().zip(&limits) {
            if row.len() != m {
                return Err(Error::DimensionMismatch { what: "price row", expected: m, got: row.len() });
            }
            if let Some(l) = lim {
                if l.m() != m {
                    return Err(Error::DimensionMismatch { what: "demand limit", expected: m, got: l.m() });
                }
            }
        }
        if fees.iter().chain(prices.iter().flatten()).any(|x| x.is_negative()) {
            return Err(Error::Precondition("fees and prices must be non-negative".into()));
        }
        Ok(Self { order, fees, prices, limits })
    }

    pub fn n(&self) -> usize {
        self.fees.len()
    }

    pub fn m(&self) -> usize {
        self.prices[0].len()
    }

    pub fn tariff(&self, agent: usize) -> TwoPartTariff {
        TwoPartTariff {
            entry_fee: self.fees[agent].clone(),
            prices: self.prices[agent].clone(),
            demand_limit: self.limits[agent].clone(),
        }
    }

    pub fn from_tariffs(tariffs: &[TwoPartTariff], order: Vec<usize>) -> Result<Self> {
        Self::new(
            order,
            tariffs.iter().map(|t| t.entry_fee.clone()).collect(),
            tariffs.iter().map(|t| t.prices.clone()).collect(),
            tariffs.iter().map(|t| t.demand_limit.clone()).collect(),
        )
    }
}

/// Composes single-agent tariffs into one sequential mechanism, keeping item
/// prices and halving entry fees.
pub fn stitch(
    tariffs: &[TwoPartTariff],
    constraints: &[ExAnteConstraint],
    order: Vec<usize>,
) -> Result<SequentialTariff> {
    if tariffs.len() != constraints.len() {
        return Err(Error::DimensionMismatch { what: "ex ante constraints", expected: tariffs.len(), got: constraints.len() });
    }
    let m = tariffs.first().map(TwoPartTariff::m).unwrap_or(0);
    for (t, c) in tariffs.iter().zip(constraints) {
        if t.m() != m || c.m() != m {
            return Err(Error::DimensionMismatch { what: "tariff", expected: m, got: t.m() });
        }
        if t.prices.iter().zip(&c.beta).any(|(p, b)| p < b) {
            return Err(Error::Precondition("a tariff prices below its ex ante price".into()));
        }
    }
    for j in 0..m {
        let total = constraints.iter().fold(Rational::zero(), |acc, c| acc + &c.q[j]);
        if total > half() {
            return Err(Error::Precondition(format!(
                "ex ante caps on item {j} sum to {} > 1/2",
                format_rational(&total)
            )));
        }
    }
    let halved: Vec<TwoPartTariff> = tariffs
        .iter()
        .map(|t| TwoPartTariff { entry_fee: &t.entry_fee * half(), ..t.clone() })
        .collect();
    SequentialTariff::from_tariffs(&halved, order)
}

/// One agent's value distribution and feasibility constraint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Agent {
    pub dist: ProductDist,
    pub constraint: Matroid,
}

impl Agent {
    pub fn new(dist: ProductDist, constraint: Matroid) -> Result<Self> {
        if dist.m() != constraint.m() {
            return Err(Error::DimensionMismatch { what: "agent constraint", expected: dist.m(), got: constraint.m() });
        }
        Ok(Self { dist, constraint })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    Exact,
    MonteCarlo { trials: usize, seed: u64, inner: usize },
}

impl EvalMode {
    pub fn monte_carlo(trials: usize, seed: u64) -> Self {
        EvalMode::MonteCarlo { trials, seed, inner: DEFAULT_INNER_TRIALS }
    }
}

/// Result of evaluating a sequential mechanism. Vectors are indexed by agent
/// id, not by position in the order.
#[derive(Clone, Debug, PartialEq)]
pub struct SequentialReport {
    pub revenue: f64,
    /// Standard error of `revenue`; 0 in exact mode.
    pub std_error: f64,
    pub agent_payments: Vec<f64>,
    pub participation: Vec<f64>,
    /// `availability[i][j]`: probability item `j` is unsold when agent `i` moves.
    pub availability: Vec<Vec<f64>>,
    /// `allocation[i][j]`: probability agent `i` receives item `j`.
    pub allocation: Vec<Vec<f64>>,
    pub exact: Option<ExactDetail>,
    /// Monte Carlo only: realized revenue and per-agent payments per trial.
    pub trials: Vec<TrialOutcome>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub revenue: f64,
    pub payments: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactDetail {
    pub revenue: Rational,
    pub agent_payments: Vec<Rational>,
    pub availability: Vec<Vec<Rational>>,
    /// Distribution of the unsold set when each agent moves.
    pub masks: Vec<Vec<(ItemSet, Rational)>>,
    /// Interim participation per agent and own profile, in
    /// [`ProductDist::profiles`] order.
    pub participates: Vec<Vec<bool>>,
}

#[derive(Clone, Debug)]
struct Entry {
    bundle: ItemSet,
    /// Surplus from items, before the entry fee.
    gain: Rational,
    item_payment: Rational,
}

/// Demand of one agent for every own profile and every unsold set.
struct AgentTable {
    profile_probs: Vec<Rational>,
    fee: Rational,
    accept_ties: bool,
    masks: usize,
    entries: Vec<Entry>,
}

impl AgentTable {
    fn build(agent: &Agent, tariff: &TwoPartTariff) -> Result<Self> {
        let m = agent.dist.m();
        if tariff.m() != m {
            return Err(Error::DimensionMismatch { what: "mechanism items", expected: m, got: tariff.m() });
        }
        let masks = 1usize << m;
        check_scale("agent decision table", agent.dist.support_size() * masks as u128, TABLE_LIMIT)?;
        let profiles = agent.dist.profiles(TABLE_LIMIT)?;
        let probe = BuyerType::new(vec![Rational::zero(); m], agent.constraint.clone())?;
        let constraint = probe.effective_constraint(tariff.demand_limit.as_ref())?.clone();
        let mut entries = Vec::with_capacity(profiles.len() * masks);
        for (values, _) in &profiles {
            let weights: Vec<Rational> = values.iter().zip(&tariff.prices).map(|(v, p)| v - p).collect();
            let mut order: Vec<usize> = (0..m).filter(|&j| weights[j].is_positive()).collect();
            order.sort_by(|&a, &b| weights[b].cmp(&weights[a]).then(a.cmp(&b)));
            for mask in 0..masks as ItemSet {
                let avail: Vec<usize> = order.iter().copied().filter(|&j| mask >> j & 1 == 1).collect();
                let bundle = constraint.greedy_in_order(&avail);
                let gain = items(bundle).fold(Rational::zero(), |acc, j| acc + &weights[j]);
                let item_payment = items(bundle).fold(Rational::zero(), |acc, j| acc + &tariff.prices[j]);
                entries.push(Entry { bundle, gain, item_payment });
            }
        }
        Ok(Self {
            profile_probs: profiles.into_iter().map(|(_, p)| p).collect(),
            fee: tariff.entry_fee.clone(),
            accept_ties: tariff.is_bundle_pricing(),
            masks,
            entries,
        })
    }

    fn entry(&self, profile: usize, mask: ItemSet) -> &Entry {
        &self.entries[profile * self.masks + mask as usize]
    }

    fn joins(&self, expected_utility: &Rational) -> bool {
        expected_utility.is_positive() || (self.accept_ties && expected_utility.is_zero())
    }

    /// Interim decision against availability weights summing to `total`.
    fn decide<'a, I>(&self, profile: usize, weighted: I, total: &Rational) -> bool
    where
        I: Iterator<Item = (ItemSet, &'a Rational)>,
    {
        let expected = weighted.fold(Rational::zero(), |acc, (mask, w)| acc + w * &self.entry(profile, mask).gain);
        self.joins(&(expected - &self.fee * total))
    }
}

pub fn run_sequential(mech: &SequentialTariff, agents: &[Agent], mode: EvalMode) -> Result<SequentialReport> {
    if agents.len() != mech.n() {
        return Err(Error::DimensionMismatch { what: "agents", expected: mech.n(), got: agents.len() });
    }
    let tables = agents
        .iter()
        .enumerate()
        .map(|(i, a)| AgentTable::build(a, &mech.tariff(i)))
        .collect::<Result<Vec<_>>>()?;
    match mode {
        EvalMode::Exact => {
            let joint = agents.iter().fold(1u128, |acc, a| acc.saturating_mul(a.dist.support_size()));
            check_scale("joint value profiles", joint, EXACT_PROFILE_LIMIT)?;
            Ok(run_exact(mech, &tables))
        }
        EvalMode::MonteCarlo { trials, seed, inner } => {
            if trials == 0 || inner == 0 {
                return Err(Error::Precondition("Monte Carlo needs at least one trial".into()));
            }
            Ok(run_monte_carlo(mech, agents, &tables, trials, seed, inner))
        }
    }
}

fn run_exact(mech: &SequentialTariff, tables: &[AgentTable]) -> SequentialReport {
    let n = mech.n();
    let m = mech.m();
    let mut avail: BTreeMap<ItemSet, Rational> = BTreeMap::new();
    avail.insert(full_set(m), Rational::one());
    let mut payments = vec![Rational::zero(); n];
    let mut availability = vec![vec![Rational::zero(); m]; n];
    let mut allocation = vec![vec![Rational::zero(); m]; n];
    let mut participation = vec![Rational::zero(); n];
    let mut masks = vec![Vec::new(); n];
    let mut participates = vec![Vec::new(); n];
    for &i in &mech.order {
        let table = &tables[i];
        for (&mask, p) in &avail {
            for (j, a) in availability[i].iter_mut().enumerate() {
                if mask >> j & 1 == 1 {
                    *a += p;
                }
            }
        }
        masks[i] = avail.iter().map(|(&k, v)| (k, v.clone())).collect();
        let mut next: BTreeMap<ItemSet, Rational> = BTreeMap::new();
        let one = Rational::one();
        for (profile, f) in table.profile_probs.iter().enumerate() {
            let joins = table.decide(profile, avail.iter().map(|(&k, v)| (k, v)), &one);
            participates[i].push(joins);
            if joins {
                participation[i] += f;
            }
            for (&mask, p) in &avail {
                let w = f * p;
                let after = if joins {
                    let e = table.entry(profile, mask);
                    payments[i] += &w * (&table.fee + &e.item_payment);
                    for j in items(e.bundle) {
                        allocation[i][j] += &w;
                    }
                    mask & !e.bundle
                } else {
                    mask
                };
                *next.entry(after).or_insert_with(Rational::zero) += w;
            }
        }
        avail = next;
    }
    let revenue = payments.iter().fold(Rational::zero(), |acc, p| acc + p);
    let to_f = |v: &Vec<Vec<Rational>>| v.iter().map(|r| r.iter().map(to_f64).collect()).collect();
    SequentialReport {
        revenue: to_f64(&revenue),
        std_error: 0.0,
        agent_payments: payments.iter().map(to_f64).collect(),
        participation: participation.iter().map(to_f64).collect(),
        availability: to_f(&availability),
        allocation: to_f(&allocation),
        exact: Some(ExactDetail { revenue, agent_payments: payments, availability, masks, participates }),
        trials: Vec::new(),
    }
}

/// Interim decisions for one outer trial: each agent's belief about the
/// unsold set is an empirical pool from fresh prefix simulations.
struct TrialPolicy<'a> {
    tables: &'a [AgentTable],
    pools: Vec<Vec<(ItemSet, Rational)>>,
    pool_size: Rational,
    cache: Vec<Vec<Option<bool>>>,
}

impl TrialPolicy<'_> {
    fn decide(&mut self, agent: usize, profile: usize) -> bool {
        if let Some(d) = self.cache[agent][profile] {
            return d;
        }
        let d = self.tables[agent].decide(profile, self.pools[agent].iter().map(|(k, w)| (*k, w)), &self.pool_size);
        self.cache[agent][profile] = Some(d);
        d
    }
}

fn run_monte_carlo(
    mech: &SequentialTariff,
    agents: &[Agent],
    tables: &[AgentTable],
    trials: usize,
    seed: u64,
    inner: usize,
) -> SequentialReport {
    let n = mech.n();
    let m = mech.m();
    let full = full_set(m);
    let mut outcomes = Vec::with_capacity(trials);
    let mut pay_sum = vec![0.0; n];
    let mut join_count = vec![0usize; n];
    let mut avail_count = vec![vec![0usize; m]; n];
    let mut alloc_count = vec![vec![0usize; m]; n];
    for t in 0..trials {
        let mut policy = TrialPolicy {
            tables,
            pools: vec![Vec::new(); n],
            pool_size: Rational::from_integer(BigInt::from(inner)),
            cache: tables.iter().map(|tb| vec![None; tb.profile_probs.len()]).collect(),
        };
        for (pos, &i) in mech.order.iter().enumerate() {
            let mut hist = vec![0usize; 1 << m];
            if pos == 0 {
                hist[full as usize] = inner;
            } else {
                let mut rng = substream(seed, &[t as u64, i as u64, 0]);
                for _ in 0..inner {
                    let mut mask = full;
                    for &a in &mech.order[..pos] {
                        let profile = agents[a].dist.sample_profile_index(&mut rng);
                        if policy.decide(a, profile) {
                            mask &= !tables[a].entry(profile, mask).bundle;
                        }
                    }
                    hist[mask as usize] += 1;
                }
            }
            policy.pools[i] = hist
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(k, &c)| (k as ItemSet, Rational::from_integer(BigInt::from(c))))
                .collect();
        }
        let mut rng = substream(seed, &[t as u64, u64::MAX]);
        let mut mask = full;
        let mut payments = vec![0.0; n];
        for &i in &mech.order {
            for (j, c) in avail_count[i].iter_mut().enumerate() {
                *c += (mask >> j & 1) as usize;
            }
            let profile = agents[i].dist.sample_profile_index(&mut rng);
            if policy.decide(i, profile) {
                let e = tables[i].entry(profile, mask);
                payments[i] = to_f64(&(&tables[i].fee + &e.item_payment));
                join_count[i] += 1;
                for j in items(e.bundle) {
                    alloc_count[i][j] += 1;
                }
                mask &= !e.bundle;
            }
        }
        for (s, p) in pay_sum.iter_mut().zip(&payments) {
            *s += p;
        }
        outcomes.push(TrialOutcome { revenue: payments.iter().sum(), payments });
    }
    let (mean, se) = mean_and_se(outcomes.iter().map(|o| o.revenue));
    let tf = trials as f64;
    let freq = |c: &Vec<Vec<usize>>| c.iter().map(|r| r.iter().map(|&x| x as f64 / tf).collect()).collect();
    SequentialReport {
        revenue: mean,
        std_error: se,
        agent_payments: pay_sum.iter().map(|s| s / tf).collect(),
        participation: join_count.iter().map(|&c| c as f64 / tf).collect(),
        availability: freq(&avail_count),
        allocation: freq(&alloc_count),
        exact: None,
        trials: outcomes,
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se<I: IntoIterator<Item = f64>>(xs: I) -> (f64, f64) {
    let xs: Vec<f64> = xs.into_iter().collect();
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Any mechanism the evaluator can run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mechanism {
    Single(TwoPartTariff),
    Sequential(SequentialTariff),
}

/// Monte Carlo revenue estimate with standard error.
pub fn estimate_revenue(mech: &Mechanism, agents: &[Agent], trials: usize, seed: u64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::Precondition("Monte Carlo needs at least one trial".into()));
    }
    match mech {
        Mechanism::Single(t) => {
            let agent = agents
                .first()
                .ok_or(Error::DimensionMismatch { what: "agents", expected: 1, got: 0 })?;
            if t.m() != agent.dist.m() {
                return Err(Error::DimensionMismatch { what: "mechanism items", expected: agent.dist.m(), got: t.m() });
            }
            let mut rng = substream(seed, &[0]);
            let mut revenues = Vec::with_capacity(trials);
            for _ in 0..trials {
                let values = agent.dist.sample(&mut rng);
                let b = BuyerType::new(values, agent.constraint.clone())?;
                let d = b.respond(t, full_set(t.m()), None, t.is_bundle_pricing())?;
                revenues.push(to_f64(&d.payment));
            }
            Ok(mean_and_se(revenues))
        }
        Mechanism::Sequential(s) => {
            let r = run_sequential(s, agents, EvalMode::monte_carlo(trials, seed))?;
            Ok((r.revenue, r.std_error))
        }
    }
}

/// JSON form of a tariff or sequential mechanism.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<usize>>,
    #[serde(with = "crate::rational::serde_rational_vec")]
    pub fees: Vec<Rational>,
    #[serde(with = "crate::rational::serde_rational_matrix")]
    pub prices: Vec<Vec<Rational>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub limits: Vec<Option<MatroidSpec>>,
}

impl MechanismSpec {
    pub fn build(&self) -> Result<SequentialTariff> {
        let n = self.fees.len();
        let m = self.prices.first().map(Vec::len).unwrap_or(0);
        let limits = if self.limits.is_empty() {
            vec![None; n]
        } else {
            self.limits
                .iter()
                .map(|l| l.as_ref().map(|s| s.build(m)).transpose())
                .collect::<Result<Vec<_>>>()?
        };
        let order = self.order.clone().unwrap_or_else(|| (0..n).collect());
        SequentialTariff::new(order, self.fees.clone(), self.prices.clone(), limits)
    }

    pub fn from_mechanism(s: &SequentialTariff) -> Self {
        let limits: Vec<Option<MatroidSpec>> = s.limits.iter().map(|l| l.as_ref().map(Matroid::to_spec)).collect();
        Self {
            order: Some(s.order.clone()),
            fees: s.fees.clone(),
            prices: s.prices.clone(),
            limits: if limits.iter().all(Option::is_none) { Vec::new() } else { limits },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ValueDist;
    use crate::rational::{int, rat};

    fn third() -> ValueDist {
        ValueDist::uniform(vec![int(1), int(2), int(3)]).unwrap()
    }

    fn agent(d: ValueDist, m: usize, k: usize) -> Agent {
        Agent::new(ProductDist::iid(d, m).unwrap(), Matroid::uniform(m, k).unwrap()).unwrap()
    }

    fn single_exact_revenue(t: &TwoPartTariff, a: &Agent) -> Rational {
        a.dist
            .profiles(1 << 20)
            .unwrap()
            .into_iter()
            .map(|(v, f)| {
                let b = BuyerType::new(v, a.constraint.clone()).unwrap();
                f * run_single(t, &b, full_set(a.dist.m())).unwrap().payment
            })
            .fold(Rational::zero(), |acc, x| acc + x)
    }

    #[test]
    fn run_single_examples() {
        let b = BuyerType::new(vec![int(2), int(1)], Matroid::free(2).unwrap()).unwrap();
        let bundle = TwoPartTariff::bundle_pricing(int(3), 2).unwrap();
        assert_eq!(run_single(&bundle, &b, 0b11).unwrap().payment, int(3));
        let bundle = TwoPartTariff::bundle_pricing(rat(7, 2), 2).unwrap();
        assert!(!run_single(&bundle, &b, 0b11).unwrap().participates);

        let items = TwoPartTariff::item_pricing(vec![int(1), int(0)]).unwrap();
        let d = run_single(&items, &b, 0b11).unwrap();
        assert_eq!((d.bundle, d.payment), (0b11, int(1)));

        let high = TwoPartTariff::new(int(1), vec![int(5), int(5)], None).unwrap();
        let d = run_single(&high, &b, 0b11).unwrap();
        assert_eq!((d.bundle, d.payment), (0, int(0)));
    }

    #[test]
    fn ex_ante_examples() {
        let d = ProductDist::iid(third(), 2).unwrap();
        let c = ExAnteConstraint::new(&d, vec![rat(1, 3), rat(1, 3)]).unwrap();
        assert_eq!(c.beta, vec![int(2), int(2)]);
        let at = TwoPartTariff::new(int(1), c.beta.clone(), None).unwrap();
        assert!(satisfies_ex_ante(&at, &d, &c).unwrap());
        let below = TwoPartTariff::item_pricing(vec![int(2), rat(19, 10)]).unwrap();
        assert!(!satisfies_ex_ante(&below, &d, &c).unwrap());
        let free = ExAnteConstraint::unconstrained(&d);
        let zero = TwoPartTariff::item_pricing(vec![int(0), int(0)]).unwrap();
        assert!(satisfies_ex_ante(&zero, &d, &free).unwrap());
    }

    #[test]
    fn stitch_examples() {
        let d = ProductDist::iid(third(), 2).unwrap();
        let t = TwoPartTariff::new(int(2), vec![int(3), int(3)], None).unwrap();
        let c = ExAnteConstraint::new(&d, vec![rat(1, 4), rat(1, 4)]).unwrap();
        let one = stitch(&[t.clone()], &[c.clone()], vec![0]).unwrap();
        assert_eq!(one.fees, vec![int(1)]);
        assert_eq!(one.prices[0], t.prices);

        let zero_fee = TwoPartTariff::item_pricing(vec![int(3), int(3)]).unwrap();
        let s = stitch(&[zero_fee.clone(), zero_fee.clone()], &[c.clone(), c.clone()], vec![0, 1]).unwrap();
        assert!(s.fees.iter().all(Zero::is_zero));

        let c3 = ExAnteConstraint::new(&d, vec![rat(3, 10), rat(3, 10)]).unwrap();
        assert!(matches!(
            stitch(&[zero_fee.clone(), zero_fee.clone()], &[c3.clone(), c3], vec![0, 1]),
            Err(Error::Precondition(_))
        ));
        let cheap = TwoPartTariff::item_pricing(vec![int(1), int(1)]).unwrap();
        assert!(stitch(&[cheap], &[c], vec![0]).is_err());
    }

    #[test]
    fn sequential_single_agent_matches_run_single() {
        let a = agent(third(), 2, 1);
        for t in [
            TwoPartTariff::new(int(1), vec![int(1), int(2)], None).unwrap(),
            TwoPartTariff::bundle_pricing(int(2), 2).unwrap(),
            TwoPartTariff::item_pricing(vec![int(2), int(2)]).unwrap(),
        ] {
            let s = SequentialTariff::from_tariffs(&[t.clone()], vec![0]).unwrap();
            let r = run_sequential(&s, &[a.clone()], EvalMode::Exact).unwrap();
            assert_eq!(r.exact.unwrap().revenue, single_exact_revenue(&t, &a));
        }
    }

    #[test]
    fn contention_for_one_item() {
        let a = agent(ValueDist::point(int(5)), 1, 1);
        let t = TwoPartTariff::item_pricing(vec![int(3)]).unwrap();
        let s = SequentialTariff::from_tariffs(&[t.clone(), t], vec![1, 0]).unwrap();
        let r = run_sequential(&s, &[a.clone(), a.clone()], EvalMode::Exact).unwrap();
        let e = r.exact.unwrap();
        assert_eq!(e.revenue, int(3));
        assert_eq!(e.agent_payments, vec![int(0), int(3)]);
        assert_eq!(e.availability[0], vec![int(0)]);
        assert_eq!(r.allocation[0], vec![0.0]);
    }

    #[test]
    fn everyone_declines() {
        let a = agent(third(), 2, 2);
        let t = TwoPartTariff::new(int(100), vec![int(0), int(0)], None).unwrap();
        let s = SequentialTariff::from_tariffs(&[t.clone(), t], vec![0, 1]).unwrap();
        let r = run_sequential(&s, &[a.clone(), a], EvalMode::Exact).unwrap();
        assert_eq!(r.exact.unwrap().revenue, int(0));
    }

    #[test]
    fn monte_carlo_agrees_with_exact() {
        let d = ValueDist::new(vec![(int(1), rat(1, 2)), (int(3), rat(1, 4)), (int(4), rat(1, 4))]).unwrap();
        let a = agent(d, 2, 1);
        let t0 = TwoPartTariff::new(rat(1, 2), vec![int(2), int(3)], None).unwrap();
        let t1 = TwoPartTariff::item_pricing(vec![int(1), int(1)]).unwrap();
        let s = SequentialTariff::from_tariffs(&[t0, t1], vec![0, 1]).unwrap();
        let agents = [a.clone(), a];
        let exact = run_sequential(&s, &agents, EvalMode::Exact).unwrap();
        let mc = run_sequential(&s, &agents, EvalMode::MonteCarlo { trials: 4000, seed: 3, inner: 500 }).unwrap();
        assert!((mc.revenue - exact.revenue).abs() <= 3.0 * mc.std_error, "{} vs {}", mc.revenue, exact.revenue);
        let again = run_sequential(&s, &agents, EvalMode::MonteCarlo { trials: 4000, seed: 3, inner: 500 }).unwrap();
        assert_eq!(mc, again);
    }

    #[test]
    fn estimate_revenue_examples() {
        let point = agent(ValueDist::point(int(4)), 1, 1);
        let t = TwoPartTariff::item_pricing(vec![int(3)]).unwrap();
        let (mean, se) = estimate_revenue(&Mechanism::Single(t.clone()), &[point], 100, 1).unwrap();
        assert_eq!((mean, se), (3.0, 0.0));

        let a = agent(third(), 1, 1);
        let t = TwoPartTariff::item_pricing(vec![rat(3, 2)]).unwrap();
        let (mean, se) = estimate_revenue(&Mechanism::Single(t.clone()), &[a.clone()], 20_000, 8).unwrap();
        assert!((mean - 1.0).abs() <= 3.0 * se);
        assert_eq!(
            estimate_revenue(&Mechanism::Single(t.clone()), &[a.clone()], 500, 8).unwrap(),
            estimate_revenue(&Mechanism::Single(t), &[a], 500, 8).unwrap()
        );
    }

    #[test]
    fn spec_round_trip() {
        let s = SequentialTariff::new(
            vec![1, 0],
            vec![int(1), rat(1, 2)],
            vec![vec![int(2), int(3)], vec![int(0), int(1)]],
            vec![None, Some(Matroid::unit_demand(2).unwrap())],
        )
        .unwrap();
        let json = serde_json::to_string(&MechanismSpec::from_mechanism(&s)).unwrap();
        let back: MechanismSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.build().unwrap(), s);
    }
}
