//! Ground truth at desk scale: the optimal BIC mechanism as a linear program,
//! exact mechanism revenue by enumeration, and brute-force pricing optima.
//!
//! Pricing optima are suprema. A price above its floor is treated as
//! approached from below, so a buyer whose value equals it still buys; at
//! the floor itself the strict rule applies. The same convention applies
//! to entry fees. For discrete supports this makes every optimum attainable
//! on a finite grid of candidate prices.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::dist::ProductDist;
use crate::error::{check_scale, Error, Result};
use crate::lp::{Certification, LinearProgram};
use crate::matroid::{full_set, items, size, ItemSet, Matroid};
use crate::mechanism::{run_sequential, run_single, Agent, EvalMode, Mechanism, TwoPartTariff, EXACT_PROFILE_LIMIT};
use crate::rational::Rational;
use crate::valuation::BuyerType;

/// Default cap on the number of types in the mechanism LP.
pub const TYPE_SPACE_LIMIT: u128 = 729;
/// The LP writes one polytope row per subset for explicit matroids.
pub const LP_MAX_ITEMS: usize = 4;
/// Cap on `price vectors * profiles` in pricing enumeration.
pub const PRICING_WORK_LIMIT: u128 = 20_000_000;
/// Cap on grid points in [`brute_force_bq`].
pub const GRID_LIMIT: u128 = 1_000_000;

/// Every value profile of one agent with its probability.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscreteTypeSpace {
    pub types: Vec<Vec<Rational>>,
    pub probs: Vec<Rational>,
}

impl DiscreteTypeSpace {
    pub fn new(d: &ProductDist, cap: u128) -> Result<Self> {
        let (types, probs) = d.profiles(cap)?.into_iter().unzip();
        Ok(Self { types, probs })
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Revenue,
    Welfare,
}

/// The lottery and payment assigned to one type.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MenuEntry {
    #[serde(with = "crate::rational::serde_rational_vec")]
    pub values: Vec<Rational>,
    #[serde(with = "crate::rational::serde_rational")]
    pub probability: Rational,
    #[serde(with = "crate::rational::serde_rational_vec")]
    pub allocation: Vec<Rational>,
    #[serde(with = "crate::rational::serde_rational")]
    pub payment: Rational,
}

#[derive(Clone, Debug)]
pub struct BicSolution {
    pub value: Rational,
    pub menu: Vec<MenuEntry>,
    pub certification: Certification,
}

/// Rows `sum_{j in S} x_j <= r` that cut out the matroid polytope together
/// with `x >= 0`.
fn polytope_rows(f: &Matroid) -> Vec<(ItemSet, usize)> {
    let m = f.m();
    let mut rows: Vec<(ItemSet, usize)> = Vec::new();
    match f {
        Matroid::Uniform { k, .. } => {
            rows.extend((0..m).map(|j| (1 << j, usize::from(*k >= 1))));
            if *k < m {
                rows.push((full_set(m), *k));
            }
        }
        Matroid::Partition { parts, caps, .. } => {
            for (&p, &c) in parts.iter().zip(caps) {
                rows.extend(items(p).map(|j| (1 << j, usize::from(c >= 1))));
                if c < size(p) && size(p) > 1 {
                    rows.push((p, c));
                }
            }
        }
        Matroid::Explicit { .. } => {
            for s in 1..=full_set(m) {
                let r = f.rank(s);
                if size(s) == 1 || r < size(s) {
                    rows.push((s, r));
                }
            }
        }
    }
    rows
}

/// Optimal expected revenue or welfare over single-agent BIC, IR,
/// demand-feasible mechanisms, optionally with per-item sale caps.
///
/// Variables are the allocation `x(t)` and the utility `u(t) >= 0` of each
/// type; the payment is `v(t).x(t) - u(t)`.
pub fn opt_bic(d: &ProductDist, f: &Matroid, caps: Option<&[Rational]>, objective: Objective) -> Result<BicSolution> {
    let m = d.m();
    if f.m() != m {
        return Err(Error::DimensionMismatch { what: "matroid ground set", expected: m, got: f.m() });
    }
    if let Some(q) = caps {
        if q.len() != m {
            return Err(Error::DimensionMismatch { what: "ex ante caps", expected: m, got: q.len() });
        }
    }
    check_scale("mechanism LP items", m as u128, LP_MAX_ITEMS as u128)?;
    let space = DiscreteTypeSpace::new(d, TYPE_SPACE_LIMIT)?;
    let n = space.len();
    let x = |t: usize, j: usize| t * m + j;
    let u = |t: usize| n * m + t;
    let mut lp = LinearProgram::new(n * m + n);
    for (t, (v, p)) in space.types.iter().zip(&space.probs).enumerate() {
        for j in 0..m {
            lp.set_objective(x(t, j), p * &v[j]);
        }
        if objective == Objective::Revenue {
            lp.set_objective(u(t), -p.clone());
        }
    }
    // A type `a` reporting `b` gets `u(b) + x(b).(v(a) - v(b))`.
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let mut row = vec![(u(b), Rational::one()), (u(a), -Rational::one())];
            for j in 0..m {
                row.push((x(b, j), &space.types[a][j] - &space.types[b][j]));
            }
            lp.add_row(row, Rational::zero())?;
        }
    }
    let rows = polytope_rows(f);
    for t in 0..n {
        for (s, r) in &rows {
            lp.add_row(
                items(*s).map(|j| (x(t, j), Rational::one())).collect(),
                Rational::from_integer(BigInt::from(*r)),
            )?;
        }
    }
    if let Some(q) = caps {
        for (j, qj) in q.iter().enumerate() {
            if qj.is_negative() {
                return Err(Error::Precondition("ex ante caps must be non-negative".into()));
            }
            lp.add_row((0..n).map(|t| (x(t, j), space.probs[t].clone())).collect(), qj.clone())?;
        }
    }
    let sol = lp.solve()?;
    let menu = (0..n)
        .map(|t| {
            let allocation: Vec<Rational> = (0..m).map(|j| sol.x[x(t, j)].clone()).collect();
            let gross = allocation
                .iter()
                .zip(&space.types[t])
                .fold(Rational::zero(), |acc, (a, v)| acc + a * v);
            MenuEntry {
                values: space.types[t].clone(),
                probability: space.probs[t].clone(),
                payment: gross - &sol.x[u(t)],
                allocation,
            }
        })
        .collect();
    Ok(BicSolution { value: sol.value, menu, certification: sol.certification })
}

/// Exact expected revenue of a mechanism by enumerating value profiles.
pub fn exact_mechanism_revenue(mech: &Mechanism, agents: &[Agent]) -> Result<Rational> {
    match mech {
        Mechanism::Single(t) => {
            let agent = agents
                .first()
                .ok_or(Error::DimensionMismatch { what: "agents", expected: 1, got: 0 })?;
            if t.m() != agent.dist.m() {
                return Err(Error::DimensionMismatch { what: "mechanism items", expected: agent.dist.m(), got: t.m() });
            }
            let mut total = Rational::zero();
            for (values, p) in agent.dist.profiles(EXACT_PROFILE_LIMIT)? {
                let b = BuyerType::new(values, agent.constraint.clone())?;
                total += p * run_single(t, &b, full_set(t.m()))?.payment;
            }
            Ok(total)
        }
        Mechanism::Sequential(s) => {
            let report = run_sequential(s, agents, EvalMode::Exact)?;
            Ok(report.exact.map(|e| e.revenue).unwrap_or_default())
        }
    }
}

/// Distribution of the grand-bundle value `max_{S in F} sum_{j in S} (v_j -
/// shift_j)`, as sorted `(value, probability)` pairs. Shifted values may be
/// negative; such items are simply left out.
pub fn bundle_value_dist(d: &ProductDist, f: &Matroid, shift: Option<&[Rational]>) -> Result<Vec<(Rational, Rational)>> {
    let m = d.m();
    if f.m() != m {
        return Err(Error::DimensionMismatch { what: "matroid ground set", expected: m, got: f.m() });
    }
    let mut out: BTreeMap<Rational, Rational> = BTreeMap::new();
    for (values, p) in d.profiles(EXACT_PROFILE_LIMIT)? {
        let w: Vec<Rational> = match shift {
            Some(b) => values.iter().zip(b).map(|(v, b)| v - b).collect(),
            None => values,
        };
        let basis = f.max_weight_basis(&w, full_set(m));
        let total = items(basis).fold(Rational::zero(), |acc, j| acc + &w[j]);
        *out.entry(total).or_insert_with(Rational::zero) += p;
    }
    Ok(out.into_iter().collect())
}

/// `E[max_{S in F} v(S)]`, the unconstrained optimal welfare.
pub fn expected_welfare(d: &ProductDist, f: &Matroid, shift: Option<&[Rational]>) -> Result<Rational> {
    Ok(bundle_value_dist(d, f, shift)?
        .iter()
        .fold(Rational::zero(), |acc, (v, p)| acc + v * p))
}

/// Optimal bundle-pricing revenue, with values optionally shifted.
pub fn bundle_revenue(d: &ProductDist, f: &Matroid, shift: Option<&[Rational]>) -> Result<Rational> {
    Ok(best_posted_price(&bundle_value_dist(d, f, shift)?).0)
}

/// `max_a a * Pr[V >= a]` and its argmax over a sorted distribution.
fn best_posted_price(dist: &[(Rational, Rational)]) -> (Rational, Rational) {
    let mut best = (Rational::zero(), Rational::zero());
    let mut upper = Rational::zero();
    for (v, p) in dist.iter().rev() {
        upper += p;
        if v.is_positive() {
            let r = v * &upper;
            if r > best.0 || (r == best.0 && best.1.is_zero()) {
                best = (r, v.clone());
            }
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PricingFamily {
    Item,
    Bundle,
    Tariff,
}

/// Restrictions on the price grid.
#[derive(Clone, Debug, Default)]
pub struct PricingOptions<'a> {
    /// Per-item lower bounds on prices (the ex ante prices).
    pub floor: Option<&'a [Rational]>,
    /// Extra candidate prices per item, kept when at or above the floor.
    pub extras: Option<&'a [Vec<Rational>]>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PricingOpt {
    pub value: Rational,
    pub tariff: TwoPartTariff,
    /// Items whose price is approached from below.
    pub shaded: Vec<bool>,
    pub fee_shaded: bool,
}

/// Optimal revenue of the given pricing family over a grid of candidate
/// prices: each item's atoms at or above its floor, the floor, the extras,
/// and a price above every value.
pub fn grid_pricing_opt(
    d: &ProductDist,
    f: &Matroid,
    family: PricingFamily,
    opts: &PricingOptions<'_>,
) -> Result<PricingOpt> {
    let m = d.m();
    if f.m() != m {
        return Err(Error::DimensionMismatch { what: "matroid ground set", expected: m, got: f.m() });
    }
    for (what, len) in [("price floor", opts.floor.map(<[_]>::len)), ("extra prices", opts.extras.map(<[_]>::len))] {
        if let Some(len) = len {
            if len != m {
                return Err(Error::DimensionMismatch { what, expected: m, got: len });
            }
        }
    }
    if family == PricingFamily::Bundle {
        if opts.floor.is_some() {
            return Err(Error::Precondition("a bundle pricing has no item prices to floor".into()));
        }
        let dist = bundle_value_dist(d, f, None)?;
        let (value, price) = best_posted_price(&dist);
        return Ok(PricingOpt {
            value,
            tariff: TwoPartTariff::bundle_pricing(price.clone(), m)?,
            shaded: vec![false; m],
            fee_shaded: price.is_positive(),
        });
    }
    let grids: Vec<Vec<(Rational, bool)>> = (0..m)
        .map(|j| {
            let floor = opts.floor.map(|fl| fl[j].clone()).unwrap_or_default();
            let extras: &[Rational] = opts.extras.map(|e| e[j].as_slice()).unwrap_or(&[]);
            item_grid(d, j, &floor, extras)
        })
        .collect();
    if family == PricingFamily::Item && f.rank(full_set(m)) == m {
        return Ok(separable_item_opt(d, &grids));
    }
    let profiles = d.profiles(EXACT_PROFILE_LIMIT)?;
    let points = grids.iter().fold(1u128, |acc, g| acc.saturating_mul(g.len() as u128));
    check_scale("pricing grid work", points.saturating_mul(profiles.len() as u128), PRICING_WORK_LIMIT)?;
    let mut best: Option<PricingOpt> = None;
    let mut idx = vec![0usize; m];
    loop {
        let prices: Vec<&(Rational, bool)> = idx.iter().enumerate().map(|(j, &i)| &grids[j][i]).collect();
        let outcomes: Vec<(Rational, Rational, bool, &Rational)> = profiles
            .iter()
            .map(|(v, p)| {
                let (bundle, gain, pay) = shaded_demand(v, &prices, f);
                (gain, pay, bundle != 0, p)
            })
            .collect();
        let (value, fee, fee_shaded) = match family {
            PricingFamily::Item => (
                outcomes.iter().fold(Rational::zero(), |acc, (_, pay, _, p)| acc + pay * *p),
                Rational::zero(),
                false,
            ),
            _ => best_fee(&outcomes),
        };
        if best.as_ref().map_or(true, |b| value > b.value) {
            best = Some(PricingOpt {
                value,
                tariff: TwoPartTariff::new(fee, prices.iter().map(|(p, _)| p.clone()).collect(), None)?,
                shaded: prices.iter().map(|(_, s)| *s).collect(),
                fee_shaded,
            });
        }
        if !advance(&mut idx, &grids) {
            break;
        }
    }
    Ok(best.expect("grid is non-empty"))
}

fn item_grid(d: &ProductDist, j: usize, floor: &Rational, extras: &[Rational]) -> Vec<(Rational, bool)> {
    let mut ps: BTreeSet<Rational> = BTreeSet::new();
    ps.insert(floor.clone());
    ps.extend(d.item(j).values().filter(|v| *v >= floor).cloned());
    ps.extend(extras.iter().filter(|v| *v >= floor).cloned());
    let never = d.item(j).max_value().max(floor) + Rational::one();
    let mut grid: Vec<(Rational, bool)> = ps.into_iter().map(|p| {
        let shaded = p > *floor;
        (p, shaded)
    }).collect();
    grid.push((never, false));
    grid
}

fn advance(idx: &mut [usize], grids: &[Vec<(Rational, bool)>]) -> bool {
    for j in (0..idx.len()).rev() {
        idx[j] += 1;
        if idx[j] < grids[j].len() {
            return true;
        }
        idx[j] = 0;
    }
    false
}

/// Demand when shaded prices sit infinitesimally below their value: items
/// are ranked by `(v - p, shaded)` and taken while that key beats `(0, no)`.
fn shaded_demand(values: &[Rational], prices: &[&(Rational, bool)], f: &Matroid) -> (ItemSet, Rational, Rational) {
    let keys: Vec<(Rational, bool)> = values.iter().zip(prices).map(|(v, (p, s))| (v - p, *s)).collect();
    let zero = (Rational::zero(), false);
    let mut order: Vec<usize> = (0..values.len()).filter(|&j| keys[j] > zero).collect();
    order.sort_by(|&a, &b| keys[b].cmp(&keys[a]).then(a.cmp(&b)));
    let bundle = f.greedy_in_order(&order);
    let gain = items(bundle).fold(Rational::zero(), |acc, j| acc + &keys[j].0);
    let pay = items(bundle).fold(Rational::zero(), |acc, j| acc + &prices[j].0);
    (bundle, gain, pay)
}

/// Best entry fee given each profile's item gain and item payment. A
/// positive fee equal to the gain is accepted (it is approached from below).
fn best_fee(outcomes: &[(Rational, Rational, bool, &Rational)]) -> (Rational, Rational, bool) {
    let mut best = (
        outcomes.iter().fold(Rational::zero(), |acc, (_, pay, _, p)| acc + pay * *p),
        Rational::zero(),
        false,
    );
    let mut order: Vec<usize> = (0..outcomes.len()).filter(|&i| outcomes[i].0.is_positive()).collect();
    order.sort_by(|&a, &b| outcomes[b].0.cmp(&outcomes[a].0));
    let mut mass = Rational::zero();
    let mut pays = Rational::zero();
    for (k, &i) in order.iter().enumerate() {
        let (gain, pay, _, p) = &outcomes[i];
        mass += *p;
        pays += pay * *p;
        let last_of_level = order.get(k + 1).map_or(true, |&n| outcomes[n].0 != *gain);
        if last_of_level {
            let r = gain * &mass + &pays;
            if r > best.0 {
                best = (r, gain.clone(), true);
            }
        }
    }
    best
}

/// Item pricing for an additive buyer decomposes across items.
fn separable_item_opt(d: &ProductDist, grids: &[Vec<(Rational, bool)>]) -> PricingOpt {
    let mut value = Rational::zero();
    let mut prices = Vec::with_capacity(grids.len());
    let mut shaded = Vec::with_capacity(grids.len());
    for (j, grid) in grids.iter().enumerate() {
        let dj = d.item(j);
        let mut best: Option<(Rational, &(Rational, bool))> = None;
        for entry in grid {
            let (p, s) = entry;
            let mass = if *s { dj.upper_mass(p) } else { dj.sale_prob(p) };
            let r = p * mass;
            if best.as_ref().map_or(true, |(b, _)| r > *b) {
                best = Some((r, entry));
            }
        }
        let (r, (p, s)) = best.expect("grid is non-empty");
        value += r;
        prices.push(p.clone());
        shaded.push(*s);
    }
    PricingOpt {
        value,
        tariff: TwoPartTariff { entry_fee: Rational::zero(), prices, demand_limit: None },
        shaded,
        fee_shaded: false,
    }
}

/// Grid maximizer of `sum_j q_j * v_j(q_j)` over `q` in `P_F` with every
/// coordinate a multiple of `step` in `[0, cap]`, where `v_j(q)` is the
/// largest value whose upper tail has mass at least `q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridOptimum {
    pub value: Rational,
    pub q: Vec<Rational>,
}

pub fn brute_force_bq(d: &ProductDist, f: &Matroid, step: &Rational, cap: &Rational) -> Result<GridOptimum> {
    let m = d.m();
    if f.m() != m {
        return Err(Error::DimensionMismatch { what: "matroid ground set", expected: m, got: f.m() });
    }
    if !step.is_positive() {
        return Err(Error::Precondition("grid step must be positive".into()));
    }
    let cap = cap.clone().min(Rational::one());
    let levels = if cap.is_negative() {
        0
    } else {
        (&cap / step).floor().to_integer().to_usize().unwrap_or(usize::MAX)
    };
    let axis: Vec<Rational> = (0..=levels).map(|z| step * Rational::from_integer(BigInt::from(z))).collect();
    let points = (axis.len() as u128).saturating_pow(m as u32);
    check_scale("quantile grid points", points, GRID_LIMIT)?;
    let revenue: Vec<Vec<Rational>> = d.items().iter().map(|dj| axis.iter().map(|q| dj.revenue_at(q)).collect()).collect();
    let mut best = GridOptimum { value: Rational::zero(), q: vec![Rational::zero(); m] };
    let mut idx = vec![0usize; m];
    'outer: loop {
        let value = idx.iter().enumerate().fold(Rational::zero(), |acc, (j, &z)| acc + &revenue[j][z]);
        if value.cmp(&best.value) == Ordering::Greater {
            let q: Vec<Rational> = idx.iter().map(|&z| axis[z].clone()).collect();
            if f.in_scaled_polytope(&q, &Rational::one())? {
                best = GridOptimum { value, q };
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
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ValueDist;
    use crate::mechanism::SequentialTariff;
    use crate::rational::{int, rat};
    use proptest::prelude::*;

    fn third() -> ValueDist {
        ValueDist::uniform(vec![int(1), int(2), int(3)]).unwrap()
    }

    fn dist(atoms: &[(i64, i64, i64)]) -> ValueDist {
        ValueDist::new(atoms.iter().map(|&(v, n, d)| (int(v), rat(n, d))).collect()).unwrap()
    }

    /// Revenue of posting item prices exactly, buyers at zero surplus
    /// declining; a direct enumeration independent of the grid code.
    fn posted_revenue(d: &ProductDist, f: &Matroid, prices: &[Rational]) -> Rational {
        let t = TwoPartTariff::item_pricing(prices.to_vec()).unwrap();
        let agent = Agent::new(d.clone(), f.clone()).unwrap();
        exact_mechanism_revenue(&Mechanism::Single(t), &[agent]).unwrap()
    }

    #[test]
    fn single_item_lp_matches_myerson() {
        let d = ProductDist::new(vec![third()]).unwrap();
        let f = Matroid::free(1).unwrap();
        let sol = opt_bic(&d, &f, None, Objective::Revenue).unwrap();
        assert_eq!(sol.value, rat(4, 3));
        assert_eq!(sol.value, third().single_item_opt_rev(&int(1)));
        for q in [rat(1, 4), rat(1, 2), rat(5, 6)] {
            let capped = opt_bic(&d, &f, Some(&[q.clone()]), Objective::Revenue).unwrap();
            assert_eq!(capped.value, third().single_item_opt_rev(&q));
        }
    }

    #[test]
    fn menu_is_consistent() {
        let d = ProductDist::iid(third(), 2).unwrap();
        let f = Matroid::unit_demand(2).unwrap();
        let sol = opt_bic(&d, &f, None, Objective::Revenue).unwrap();
        let total = sol.menu.iter().fold(Rational::zero(), |acc, e| acc + &e.probability * &e.payment);
        assert_eq!(total, sol.value);
        for a in &sol.menu {
            let own = a.allocation.iter().zip(&a.values).fold(-a.payment.clone(), |acc, (x, v)| acc + x * v);
            assert!(!own.is_negative());
            for b in &sol.menu {
                let dev = b.allocation.iter().zip(&a.values).fold(-b.payment.clone(), |acc, (x, v)| acc + x * v);
                assert!(own >= dev);
            }
            assert!(f.in_scaled_polytope(&a.allocation, &int(1)).unwrap());
        }
    }

    #[test]
    fn welfare_and_zero_caps() {
        let d = ProductDist::new(vec![third(), dist(&[(0, 1, 2), (4, 1, 2)])]).unwrap();
        for f in [Matroid::unit_demand(2).unwrap(), Matroid::free(2).unwrap()] {
            let w = opt_bic(&d, &f, Some(&[int(1), int(1)]), Objective::Welfare).unwrap();
            assert_eq!(w.value, expected_welfare(&d, &f, None).unwrap());
            for obj in [Objective::Revenue, Objective::Welfare] {
                let z = opt_bic(&d, &f, Some(&[int(0), int(0)]), obj).unwrap();
                assert!(z.value.is_zero());
            }
        }
    }

    #[test]
    fn lp_item_limit() {
        let d = ProductDist::iid(ValueDist::point(int(1)), 5).unwrap();
        let err = opt_bic(&d, &Matroid::free(5).unwrap(), None, Objective::Revenue).unwrap_err();
        assert!(matches!(err, Error::Scale { .. }));
    }

    #[test]
    fn bundle_price_unit_demand() {
        let d = ProductDist::iid(third(), 2).unwrap();
        let f = Matroid::unit_demand(2).unwrap();
        let b = grid_pricing_opt(&d, &f, PricingFamily::Bundle, &PricingOptions::default()).unwrap();
        assert_eq!(b.value, rat(16, 9));
        assert_eq!(b.tariff.entry_fee, int(2));
        let floor = [int(0), int(0)];
        let opts = PricingOptions { floor: Some(&floor), extras: None };
        assert!(grid_pricing_opt(&d, &f, PricingFamily::Bundle, &opts).is_err());
    }

    #[test]
    fn additive_item_pricing_is_separable() {
        let d = ProductDist::new(vec![third(), dist(&[(1, 1, 2), (5, 1, 4), (6, 1, 4)])]).unwrap();
        let f = Matroid::free(2).unwrap();
        let s = grid_pricing_opt(&d, &f, PricingFamily::Item, &PricingOptions::default()).unwrap();
        let sum = d.items().iter().fold(Rational::zero(), |acc, dj| acc + dj.single_item_opt_rev(&int(1)));
        assert_eq!(s.value, sum);
        // The generic enumeration agrees with the separable path.
        let g = grid_pricing_opt(&d, &Matroid::uniform(2, 2).unwrap(), PricingFamily::Tariff, &PricingOptions::default())
            .unwrap();
        assert!(g.value >= s.value);
    }

    #[test]
    fn unsellable_floor() {
        let d = ProductDist::new(vec![third(), dist(&[(2, 1, 2), (4, 1, 2)])]).unwrap();
        let floor: Vec<Rational> = d.items().iter().map(|dj| dj.max_value() + int(1)).collect();
        let opts = PricingOptions { floor: Some(&floor), extras: None };
        for f in [Matroid::free(2).unwrap(), Matroid::unit_demand(2).unwrap()] {
            for fam in [PricingFamily::Item, PricingFamily::Tariff] {
                assert!(grid_pricing_opt(&d, &f, fam, &opts).unwrap().value.is_zero());
            }
        }
    }

    #[test]
    fn floor_price_is_strict() {
        // Posting exactly the floor 2 sells only to value 3.
        let d = ProductDist::new(vec![third()]).unwrap();
        let floor = [int(2)];
        let opts = PricingOptions { floor: Some(&floor), extras: None };
        let s = grid_pricing_opt(&d, &Matroid::free(1).unwrap(), PricingFamily::Item, &opts).unwrap();
        assert_eq!(s.value, int(1));
        let floor = [rat(3, 2)];
        let opts = PricingOptions { floor: Some(&floor), extras: None };
        let s = grid_pricing_opt(&d, &Matroid::free(1).unwrap(), PricingFamily::Item, &opts).unwrap();
        assert_eq!(s.value, rat(4, 3));
    }

    #[test]
    fn brute_force_examples() {
        let d = ProductDist::new(vec![third()]).unwrap();
        let f = Matroid::free(1).unwrap();
        let g = brute_force_bq(&d, &f, &rat(1, 6), &rat(1, 2)).unwrap();
        assert_eq!(g.value, int(1));
        assert_eq!(g.q, vec![rat(1, 3)]);
        let z = brute_force_bq(&d, &f, &rat(1, 6), &int(0)).unwrap();
        assert!(z.value.is_zero());

        let d2 = ProductDist::new(vec![third(), dist(&[(1, 1, 2), (5, 1, 4), (6, 1, 4)])]).unwrap();
        let g = brute_force_bq(&d2, &Matroid::free(2).unwrap(), &rat(1, 12), &int(1)).unwrap();
        let sum = d2.items().iter().fold(Rational::zero(), |acc, dj| acc + dj.single_item_opt_rev(&int(1)));
        assert_eq!(g.value, sum);

        let big = ProductDist::iid(third(), 4).unwrap();
        assert!(matches!(
            brute_force_bq(&big, &Matroid::free(4).unwrap(), &rat(1, 40), &int(1)),
            Err(Error::Scale { .. })
        ));
    }

    #[test]
    fn exact_revenue_examples() {
        let d = ProductDist::iid(third(), 2).unwrap();
        let f = Matroid::unit_demand(2).unwrap();
        let agent = Agent::new(d.clone(), f.clone()).unwrap();
        let zero = TwoPartTariff::item_pricing(vec![int(0), int(0)]).unwrap();
        assert!(exact_mechanism_revenue(&Mechanism::Single(zero.clone()), &[agent.clone()]).unwrap().is_zero());
        let seq = SequentialTariff::from_tariffs(&[zero.clone(), zero], vec![0, 1]).unwrap();
        assert!(exact_mechanism_revenue(&Mechanism::Sequential(seq), &[agent.clone(), agent.clone()]).unwrap().is_zero());

        let t = TwoPartTariff::new(int(1), vec![int(1), int(2)], None).unwrap();
        let direct = d.profiles(100).unwrap().into_iter().fold(Rational::zero(), |acc, (v, p)| {
            let b = BuyerType::new(v, f.clone()).unwrap();
            acc + p * b.demand_response(&t, 0b11, None).unwrap().payment
        });
        assert_eq!(exact_mechanism_revenue(&Mechanism::Single(t), &[agent]).unwrap(), direct);
    }

    fn arb_small() -> impl Strategy<Value = ValueDist> {
        prop::collection::btree_map(0i64..6, 1i64..4, 1..=3).prop_map(|m| {
            let total: i64 = m.values().sum();
            ValueDist::new(m.into_iter().map(|(v, w)| (int(v), rat(w, total))).collect()).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn pricings_never_beat_lp(items in prop::collection::vec(arb_small(), 1..=2), k in 1usize..=2) {
            let m = items.len();
            let d = ProductDist::new(items).unwrap();
            let f = Matroid::uniform(m, k.min(m)).unwrap();
            let rev = opt_bic(&d, &f, None, Objective::Revenue).unwrap().value;
            for fam in [PricingFamily::Item, PricingFamily::Bundle, PricingFamily::Tariff] {
                let p = grid_pricing_opt(&d, &f, fam, &PricingOptions::default()).unwrap();
                prop_assert!(p.value <= rev);
            }
        }

        #[test]
        fn grid_optimum_dominates_posted_prices(items in prop::collection::vec(arb_small(), 1..=3), k in 1usize..=3) {
            let m = items.len();
            let d = ProductDist::new(items).unwrap();
            let f = Matroid::uniform(m, k.min(m)).unwrap();
            let best = grid_pricing_opt(&d, &f, PricingFamily::Item, &PricingOptions::default()).unwrap();
            // Every exactly posted grid price vector is dominated by the supremum.
            let mut idx = vec![0usize; m];
            let grids: Vec<Vec<(Rational, bool)>> = (0..m).map(|j| item_grid(&d, j, &int(0), &[])).collect();
            loop {
                let prices: Vec<Rational> = idx.iter().enumerate().map(|(j, &i)| grids[j][i].0.clone()).collect();
                prop_assert!(posted_revenue(&d, &f, &prices) <= best.value);
                if !advance(&mut idx, &grids) { break; }
            }
        }
    }
}
