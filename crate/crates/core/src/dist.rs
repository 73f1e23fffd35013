//! Finite discrete value distributions, quantiles, conditioning and ironing.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{format_rational, to_f64, Rational};

/// A finite distribution over values, stored as atoms sorted by value.
#[derive(Clone)]
pub struct ValueDist {
    atoms: Vec<(Rational, Rational)>,
    sampler: Sampler,
}

#[derive(Clone, Debug)]
enum Sampler {
    /// Cumulative integer weights over a common denominator.
    Exact { cum: Vec<u64>, total: u64 },
    Float { cum: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Values `<= t`.
    Core,
    /// Values `> t`.
    Tail,
}

impl ValueDist {
    /// Builds a distribution with non-negative values. Atoms may arrive in any
    /// order; duplicate values are rejected.
    pub fn new(atoms: Vec<(Rational, Rational)>) -> Result<Self> {
        if let Some((v, _)) = atoms.iter().find(|(v, _)| v.is_negative()) {
            return Err(Error::InvalidDistribution(format!(
                "negative value {}",
                format_rational(v)
            )));
        }
        Self::new_signed(atoms)
    }

    /// Like [`ValueDist::new`] but allows negative values, as produced by shifting.
    pub fn new_signed(mut atoms: Vec<(Rational, Rational)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        atoms.sort_by(|a, b| a.0.cmp(&b.0));
        for w in atoms.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidDistribution(format!(
                    "duplicate value {}",
                    format_rational(&w[0].0)
                )));
            }
        }
        let mut total = Rational::zero();
        for (v, p) in &atoms {
            if !p.is_positive() || *p > Rational::one() {
                return Err(Error::InvalidDistribution(format!(
                    "probability {} of value {} outside (0, 1]",
                    format_rational(p),
                    format_rational(v)
                )));
            }
            total += p;
        }
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {}",
                format_rational(&total)
            )));
        }
        Ok(Self::from_sorted(atoms))
    }

    fn from_sorted(atoms: Vec<(Rational, Rational)>) -> Self {
        let sampler = Sampler::build(&atoms);
        Self { atoms, sampler }
    }

    pub fn point(v: Rational) -> Self {
        Self::from_sorted(vec![(v, Rational::one())])
    }

    /// Uniform distribution over the given distinct values.
    pub fn uniform(values: Vec<Rational>) -> Result<Self> {
        let p = Rational::new(BigInt::one(), BigInt::from(values.len().max(1)));
        Self::new(values.into_iter().map(|v| (v, p.clone())).collect())
    }

    pub fn atoms(&self) -> &[(Rational, Rational)] {
        &self.atoms
    }

    pub fn values(&self) -> impl Iterator<Item = &Rational> {
        self.atoms.iter().map(|(v, _)| v)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn min_value(&self) -> &Rational {
        &self.atoms[0].0
    }

    pub fn max_value(&self) -> &Rational {
        &self.atoms[self.atoms.len() - 1].0
    }

    /// `Pr[V <= v]`.
    pub fn cdf(&self, v: &Rational) -> Rational {
        self.atoms
            .iter()
            .take_while(|(a, _)| a <= v)
            .fold(Rational::zero(), |acc, (_, p)| acc + p)
    }

    /// `Pr[V > v]`.
    pub fn sale_prob(&self, v: &Rational) -> Rational {
        Rational::one() - self.cdf(v)
    }

    /// `Pr[V >= v]`.
    pub fn upper_mass(&self, v: &Rational) -> Rational {
        self.atoms
            .iter()
            .filter(|(a, _)| a >= v)
            .fold(Rational::zero(), |acc, (_, p)| acc + p)
    }

    /// The ex ante price for a sale-probability cap `q`: the smallest atom `p`
    /// with `Pr[V > p] <= q`, and 0 when `q >= 1`.
    pub fn quantile_price(&self, q: &Rational) -> Rational {
        if *q >= Rational::one() {
            return Rational::zero();
        }
        let mut above = Rational::one();
        for (v, p) in &self.atoms {
            above -= p;
            if above <= *q {
                return v.clone();
            }
        }
        self.max_value().clone()
    }

    /// `max { v : Pr[V >= v] >= q }`, the inverse CDF used by revenue curves.
    /// Returns 0 for `q > 1` and the top atom for `q = 0`.
    pub fn value_at_quantile(&self, q: &Rational) -> Rational {
        if *q > Rational::one() {
            return Rational::zero();
        }
        let mut upper = Rational::zero();
        for (v, p) in self.atoms.iter().rev() {
            upper += p;
            if upper >= *q {
                return v.clone();
            }
        }
        self.min_value().clone()
    }

    /// Revenue curve `R(q) = q * v(q)`.
    pub fn revenue_at(&self, q: &Rational) -> Rational {
        if q.is_zero() {
            return Rational::zero();
        }
        q * self.value_at_quantile(q)
    }

    pub fn condition(&self, t: &Rational, side: Side) -> Result<ValueDist> {
        let kept: Vec<_> = self
            .atoms
            .iter()
            .filter(|(v, _)| match side {
                Side::Core => v <= t,
                Side::Tail => v > t,
            })
            .cloned()
            .collect();
        let mass = kept.iter().fold(Rational::zero(), |acc, (_, p)| acc + p);
        if mass.is_zero() {
            return Err(Error::EmptyConditioning {
                threshold: format_rational(t),
                side: match side {
                    Side::Core => "core",
                    Side::Tail => "tail",
                },
            });
        }
        Ok(Self::from_sorted(
            kept.into_iter().map(|(v, p)| (v, p / &mass)).collect(),
        ))
    }

    pub fn shift(&self, beta: &Rational) -> ValueDist {
        Self::from_sorted(
            self.atoms
                .iter()
                .map(|(v, p)| (v - beta, p.clone()))
                .collect(),
        )
    }

    /// Distribution of `max(V, 0)`.
    pub fn positive_part(&self) -> ValueDist {
        let zero_mass = self
            .atoms
            .iter()
            .filter(|(v, _)| !v.is_positive())
            .fold(Rational::zero(), |acc, (_, p)| acc + p);
        let mut atoms = Vec::new();
        if zero_mass.is_positive() {
            atoms.push((Rational::zero(), zero_mass));
        }
        atoms.extend(self.atoms.iter().filter(|(v, _)| v.is_positive()).cloned());
        Self::from_sorted(atoms)
    }

    pub fn mean(&self) -> Rational {
        self.atoms
            .iter()
            .fold(Rational::zero(), |acc, (v, p)| acc + v * p)
    }

    pub fn variance(&self) -> Rational {
        let mu = self.mean();
        self.atoms.iter().fold(Rational::zero(), |acc, (v, p)| {
            let d = v - &mu;
            acc + &d * &d * p
        })
    }

    /// Optimal revenue from one buyer when the item may be sold with
    /// probability at most `qcap` (lotteries allowed, so the revenue curve is
    /// ironed). With `qcap = 1` this is the optimal posted-price revenue.
    pub fn single_item_opt_rev(&self, qcap: &Rational) -> Rational {
        if !qcap.is_positive() {
            return Rational::zero();
        }
        let hull = self.revenue_hull();
        let cap = qcap.clone().min(Rational::one());
        let mut best = Rational::zero();
        for w in hull.windows(2) {
            let (q0, r0) = &w[0];
            let (q1, r1) = &w[1];
            if *q1 <= cap {
                best = best.max(r1.clone());
            } else {
                if *q0 < cap {
                    let r = r0 + (r1 - r0) * (&cap - q0) / (q1 - q0);
                    best = best.max(r);
                }
                break;
            }
        }
        best
    }

    /// Upper concave hull of `(0, 0)` and `(Pr[V >= v], v * Pr[V >= v])` over
    /// the atoms, in increasing quantile order.
    pub fn revenue_hull(&self) -> Vec<(Rational, Rational)> {
        let mut pts = vec![(Rational::zero(), Rational::zero())];
        let mut upper = Rational::zero();
        for (v, p) in self.atoms.iter().rev() {
            upper += p;
            pts.push((upper.clone(), v * &upper));
        }
        upper_hull(&pts)
    }

    /// The revenue curve on the grid `z * epsilon`, `z = 0..=1/epsilon`, with
    /// its upper concave envelope.
    pub fn iron(&self, epsilon: &Rational) -> Result<IronedCurve> {
        self.iron_capped(epsilon, &Rational::one())
    }

    /// Like [`ValueDist::iron`] with the grid truncated to quantiles `<= cap`.
    pub fn iron_capped(&self, epsilon: &Rational, cap: &Rational) -> Result<IronedCurve> {
        let k = grid_cells(epsilon)?;
        let cells = (cap.clone().min(Rational::one()) / epsilon)
            .floor()
            .to_integer()
            .to_usize()
            .unwrap_or(0)
            .min(k);
        let quantiles: Vec<Rational> = (0..=cells)
            .map(|z| epsilon * Rational::from_integer(BigInt::from(z)))
            .collect();
        let revenue: Vec<Rational> = quantiles.iter().map(|q| self.revenue_at(q)).collect();
        let pts: Vec<_> = quantiles
            .iter()
            .cloned()
            .zip(revenue.iter().cloned())
            .collect();
        let hull = upper_hull(&pts);
        let mut envelope = Vec::with_capacity(cells + 1);
        let mut seg = 0;
        for q in &quantiles {
            while seg + 1 < hull.len() - 1 && hull[seg + 1].0 < *q {
                seg += 1;
            }
            envelope.push(interpolate(&hull, seg, q));
        }
        let slopes = envelope
            .windows(2)
            .map(|w| (&w[1] - &w[0]) / epsilon)
            .collect();
        Ok(IronedCurve {
            epsilon: epsilon.clone(),
            quantiles,
            revenue,
            envelope,
            slopes,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &Rational {
        &self.atoms[self.sample_index(rng)].0
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match &self.sampler {
            Sampler::Exact { cum, total } => {
                let u = rng.gen_range(0..*total);
                cum.partition_point(|&c| c <= u)
            }
            Sampler::Float { cum } => {
                let u: f64 = rng.gen();
                cum.partition_point(|&c| c <= u).min(cum.len() - 1)
            }
        }
    }
}

impl Sampler {
    fn build(atoms: &[(Rational, Rational)]) -> Self {
        let mut denom = BigInt::one();
        for (_, p) in atoms {
            denom = denom.lcm(p.denom());
        }
        if let Some(total) = denom.to_u64() {
            let mut acc = 0u64;
            let cum = atoms
                .iter()
                .map(|(_, p)| {
                    let w = (p.numer() * (&denom / p.denom())).to_u64().unwrap_or(0);
                    acc += w;
                    acc
                })
                .collect();
            return Sampler::Exact { cum, total };
        }
        let mut acc = 0.0;
        let cum = atoms
            .iter()
            .map(|(_, p)| {
                acc += to_f64(p);
                acc
            })
            .collect();
        Sampler::Float { cum }
    }
}

fn grid_cells(epsilon: &Rational) -> Result<usize> {
    let inv = epsilon.recip();
    if !epsilon.is_positive() || !inv.is_integer() || *epsilon > Rational::new(1.into(), 2.into()) {
        return Err(Error::Precondition(format!(
            "grid step {} must be 1/K for an integer K >= 2",
            format_rational(epsilon)
        )));
    }
    inv.to_integer()
        .to_usize()
        .ok_or_else(|| Error::Precondition("grid step too small".into()))
}

/// Upper concave hull of points sorted by strictly increasing x.
pub(crate) fn upper_hull(pts: &[(Rational, Rational)]) -> Vec<(Rational, Rational)> {
    let mut hull: Vec<(Rational, Rational)> = Vec::with_capacity(pts.len());
    for p in pts {
        while hull.len() >= 2 {
            let a = &hull[hull.len() - 2];
            let b = &hull[hull.len() - 1];
            // Drop b when it lies on or below the chord a -> p.
            let cross = (&b.0 - &a.0) * (&p.1 - &a.1) - (&b.1 - &a.1) * (&p.0 - &a.0);
            if !cross.is_negative() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p.clone());
    }
    hull
}

fn interpolate(hull: &[(Rational, Rational)], seg: usize, q: &Rational) -> Rational {
    if hull.len() == 1 {
        return hull[0].1.clone();
    }
    let (q0, r0) = &hull[seg];
    let (q1, r1) = &hull[seg + 1];
    r0 + (r1 - r0) * (q - q0) / (q1 - q0)
}

/// Revenue curve on a quantile grid and its upper concave envelope.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IronedCurve {
    pub epsilon: Rational,
    /// `q_z = z * epsilon`.
    pub quantiles: Vec<Rational>,
    pub revenue: Vec<Rational>,
    pub envelope: Vec<Rational>,
    /// Ironed virtual value of cell `z`, the envelope slope on `[q_z, q_{z+1}]`.
    pub slopes: Vec<Rational>,
}

impl IronedCurve {
    pub fn cells(&self) -> usize {
        self.slopes.len()
    }

    /// Grid indices where the envelope touches the revenue curve.
    pub fn touch_points(&self) -> Vec<usize> {
        (0..self.quantiles.len())
            .filter(|&z| self.envelope[z] == self.revenue[z])
            .collect()
    }
}

impl PartialEq for ValueDist {
    fn eq(&self, other: &Self) -> bool {
        self.atoms == other.atoms
    }
}

impl Eq for ValueDist {}

impl fmt::Debug for ValueDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, p)) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}:{}", format_rational(v), format_rational(p))?;
        }
        f.write_str("}")
    }
}

#[derive(Serialize, Deserialize)]
struct RawDist {
    atoms: Vec<RawAtom>,
}

#[derive(Serialize, Deserialize)]
struct RawAtom(
    #[serde(with = "crate::rational::serde_rational")] Rational,
    #[serde(with = "crate::rational::serde_rational")] Rational,
);

impl Serialize for ValueDist {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawDist {
            atoms: self
                .atoms
                .iter()
                .map(|(v, p)| RawAtom(v.clone(), p.clone()))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ValueDist {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawDist::deserialize(d)?;
        ValueDist::new(raw.atoms.into_iter().map(|RawAtom(v, p)| (v, p)).collect())
            .map_err(serde::de::Error::custom)
    }
}

/// Independent item values, one distribution per item.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProductDist {
    items: Vec<ValueDist>,
}

impl ProductDist {
    pub fn new(items: Vec<ValueDist>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidDistribution("product of zero items".into()));
        }
        Ok(Self { items })
    }

    pub fn iid(d: ValueDist, m: usize) -> Result<Self> {
        Self::new(vec![d; m])
    }

    pub fn m(&self) -> usize {
        self.items.len()
    }

    pub fn items(&self) -> &[ValueDist] {
        &self.items
    }

    pub fn item(&self, j: usize) -> &ValueDist {
        &self.items[j]
    }

    /// Number of joint value profiles.
    pub fn support_size(&self) -> u128 {
        self.items
            .iter()
            .fold(1u128, |acc, d| acc.saturating_mul(d.len() as u128))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Rational> {
        self.items.iter().map(|d| d.sample(rng).clone()).collect()
    }

    /// Every joint profile with its probability, item 0 varying slowest.
    /// Profile `i` has atom index `(i / stride_j) % len_j` on item `j`.
    pub fn profiles(&self, limit: u128) -> Result<Vec<(Vec<Rational>, Rational)>> {
        crate::error::check_scale("joint value profiles", self.support_size(), limit)?;
        let mut out = vec![(Vec::with_capacity(self.m()), Rational::one())];
        for d in &self.items {
            out = out
                .into_iter()
                .flat_map(|(vals, p)| {
                    d.atoms.iter().map(move |(v, q)| {
                        let mut vals = vals.clone();
                        vals.push(v.clone());
                        (vals, &p * q)
                    })
                })
                .collect();
        }
        Ok(out)
    }

    /// Draws a profile and returns its index in [`ProductDist::profiles`] order.
    pub fn sample_profile_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.items
            .iter()
            .fold(0, |acc, d| acc * d.len() + d.sample_index(rng))
    }

    pub fn map_items<F>(&self, f: F) -> Result<ProductDist>
    where
        F: FnMut(&ValueDist) -> Result<ValueDist>,
    {
        Ok(ProductDist {
            items: self.items.iter().map(f).collect::<Result<_>>()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn third() -> ValueDist {
        ValueDist::uniform(vec![int(1), int(2), int(3)]).unwrap()
    }

    fn brute_opt_rev(d: &ValueDist, qcap: &Rational) -> Rational {
        // Lotteries between two posted prices: any sale probability mix of two
        // atom thresholds, capped.
        let mut pts = vec![(Rational::zero(), Rational::zero())];
        for (v, _) in d.atoms() {
            let t = d.upper_mass(v);
            pts.push((t.clone(), v * t));
        }
        let mut best = Rational::zero();
        for a in &pts {
            for b in &pts {
                if a.0 <= *qcap && b.0 <= *qcap {
                    best = best.clone().max(a.1.clone()).max(b.1.clone());
                }
                if a.0 <= *qcap && b.0 > *qcap {
                    let lam = (&b.0 - qcap) / (&b.0 - &a.0);
                    let r = &lam * &a.1 + (Rational::one() - &lam) * &b.1;
                    best = best.max(r);
                }
            }
        }
        best
    }

    #[test]
    fn cdf_examples() {
        let d = third();
        assert_eq!(d.cdf(&int(2)), rat(2, 3));
        assert_eq!(d.cdf(&int(0)), int(0));
        assert_eq!(d.cdf(&int(7)), int(1));
    }

    #[test]
    fn quantile_price_examples() {
        let d = third();
        assert_eq!(d.quantile_price(&rat(1, 3)), int(2));
        assert_eq!(d.quantile_price(&int(1)), int(0));
        assert_eq!(d.quantile_price(&int(0)), int(3));
    }

    #[test]
    fn condition_examples() {
        let d = third();
        let core = d.condition(&int(2), Side::Core).unwrap();
        assert_eq!(core.atoms(), &[(int(1), rat(1, 2)), (int(2), rat(1, 2))]);
        let tail = d.condition(&int(2), Side::Tail).unwrap();
        assert_eq!(tail.atoms(), &[(int(3), int(1))]);
        assert!(matches!(
            d.condition(&int(3), Side::Tail),
            Err(Error::EmptyConditioning { .. })
        ));
    }

    #[test]
    fn shift_examples() {
        let d = ValueDist::new(vec![(int(1), rat(1, 2)), (int(3), rat(1, 2))]).unwrap();
        assert_eq!(d.shift(&int(1)).atoms(), &[(int(0), rat(1, 2)), (int(2), rat(1, 2))]);
        assert_eq!(d.shift(&int(0)), d);
        assert_eq!(ValueDist::point(int(1)).shift(&int(2)).atoms(), &[(int(-1), int(1))]);
    }

    #[test]
    fn opt_rev_examples() {
        let d = third();
        assert_eq!(d.single_item_opt_rev(&int(1)), rat(4, 3));
        assert_eq!(d.single_item_opt_rev(&rat(1, 3)), int(1));
        assert_eq!(d.single_item_opt_rev(&int(0)), int(0));
    }

    #[test]
    fn iron_examples() {
        let c = ValueDist::point(int(1)).iron(&rat(1, 4)).unwrap();
        assert!(c.slopes.iter().all(|s| *s == int(1)));

        let d = ValueDist::new(vec![(int(1), rat(1, 2)), (int(2), rat(1, 2))]).unwrap();
        let c = d.iron(&rat(1, 4)).unwrap();
        assert_eq!(c.revenue, vec![int(0), rat(1, 2), int(1), rat(3, 4), int(1)]);
        assert_eq!(c.envelope, vec![int(0), rat(1, 2), int(1), int(1), int(1)]);
        assert_eq!(c.slopes, vec![int(2), int(2), int(0), int(0)]);
        assert!(c.envelope.iter().zip(&c.revenue).all(|(e, r)| e >= r));
    }

    #[test]
    fn iron_rejects_bad_grid() {
        assert!(third().iron(&rat(2, 3)).is_err());
        assert!(third().iron(&rat(2, 7)).is_err());
        assert!(third().iron(&int(1)).is_err());
    }

    #[test]
    fn sample_frequencies() {
        let d = ValueDist::point(int(5));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..100).all(|_| *d.sample(&mut rng) == int(5)));

        let d = ValueDist::new(vec![(int(1), rat(1, 6)), (int(2), rat(1, 3)), (int(4), rat(1, 2))]).unwrap();
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[d.sample_index(&mut rng)] += 1;
        }
        for (c, (_, p)) in counts.iter().zip(d.atoms()) {
            let p = to_f64(p);
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((*c as f64 / n as f64 - p).abs() <= 3.0 * sigma, "{counts:?}");
        }

        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| d.sample_index(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
    }

    #[test]
    fn json_round_trip() {
        let d: ValueDist = serde_json::from_str(r#"{"atoms": [[1, "1/3"], ["2.5", "2/3"]]}"#).unwrap();
        assert_eq!(d.atoms(), &[(int(1), rat(1, 3)), (rat(5, 2), rat(2, 3))]);
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"atoms":[["1","1/3"],["5/2","2/3"]]}"#);
        assert!(serde_json::from_str::<ValueDist>(r#"{"atoms": [[1, "1/3"]]}"#).is_err());
    }

    fn arb_dist() -> impl Strategy<Value = ValueDist> {
        prop::collection::btree_map(0i64..12, 1i64..6, 1..5).prop_map(|m| {
            let total: i64 = m.values().sum();
            ValueDist::new(m.into_iter().map(|(v, w)| (int(v), rat(w, total))).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn quantile_round_trip(d in arb_dist()) {
            for (v, _) in d.atoms() {
                let q = d.sale_prob(v);
                let p = d.quantile_price(&q);
                prop_assert_eq!(d.sale_prob(&p), q.clone());
                for grid in [q.clone(), d.upper_mass(v)] {
                    let p = d.quantile_price(&grid);
                    prop_assert!(d.sale_prob(&p) <= grid);
                }
            }
        }

        #[test]
        fn core_tail_recombine(d in arb_dist(), t in 0i64..12) {
            let t = int(t);
            let xi = Rational::one() - d.cdf(&t);
            let core = d.condition(&t, Side::Core).ok();
            let tail = d.condition(&t, Side::Tail).ok();
            for (v, p) in d.atoms() {
                let mut mix = Rational::zero();
                if let Some(c) = &core {
                    mix += (Rational::one() - &xi) * c.cdf(v) - (Rational::one() - &xi) * c.cdf(&(v - rat(1, 2)));
                }
                if let Some(tl) = &tail {
                    mix += &xi * tl.cdf(v) - &xi * tl.cdf(&(v - rat(1, 2)));
                }
                prop_assert_eq!(&mix, p);
            }
        }

        #[test]
        fn iron_invariants(d in arb_dist(), k in 2usize..10) {
            let eps = rat(1, k as i64);
            let c = d.iron(&eps).unwrap();
            prop_assert!(c.envelope[0].is_zero());
            for w in c.slopes.windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
            for (e, r) in c.envelope.iter().zip(&c.revenue) {
                prop_assert!(e >= r);
            }
            let total = c.slopes.iter().fold(Rational::zero(), |acc, s| acc + s * &eps);
            prop_assert_eq!(&total, c.envelope.last().unwrap());
            let touch = c.touch_points();
            prop_assert!(touch.contains(&0) && touch.contains(&k));
            // Every kink of the envelope is a touch point.
            for z in 1..k {
                if c.slopes[z - 1] != c.slopes[z] {
                    prop_assert!(touch.contains(&z));
                }
            }
        }

        #[test]
        fn opt_rev_matches_lottery_oracle(d in arb_dist(), a in 0i64..=12) {
            let q = rat(a, 12);
            prop_assert_eq!(d.single_item_opt_rev(&q), brute_opt_rev(&d, &q));
        }

        #[test]
        fn opt_rev_monotone_concave(d in arb_dist()) {
            let grid: Vec<Rational> = (0..=12).map(|a| rat(a, 12)).collect();
            let r: Vec<Rational> = grid.iter().map(|q| d.single_item_opt_rev(q)).collect();
            for w in r.windows(3) {
                prop_assert!(w[1] >= w[0]);
                prop_assert!(&w[1] * int(2) >= &w[0] + &w[2]);
            }
        }
    }
}
