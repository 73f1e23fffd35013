//! Matroid constraints over a small item ground set.
//!
//! Item sets are bitmasks (`ItemSet`), so the ground set holds at most 32
//! items; explicit rank tables are limited to 16.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

pub type ItemSet = u32;

pub const MAX_ITEMS: usize = 32;
pub const MAX_EXPLICIT: usize = 16;

pub fn full_set(m: usize) -> ItemSet {
    if m >= 32 {
        u32::MAX
    } else {
        (1u32 << m) - 1
    }
}

pub fn contains(s: ItemSet, j: usize) -> bool {
    s >> j & 1 == 1
}

pub fn size(s: ItemSet) -> usize {
    s.count_ones() as usize
}

/// Indices of the items in `s`, ascending.
pub fn items(s: ItemSet) -> impl Iterator<Item = usize> {
    let mut rest = s;
    std::iter::from_fn(move || {
        if rest == 0 {
            None
        } else {
            let j = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(j)
        }
    })
}

pub fn from_items<I: IntoIterator<Item = usize>>(it: I) -> ItemSet {
    it.into_iter().fold(0, |s, j| s | 1 << j)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Matroid {
    Uniform { m: usize, k: usize },
    Partition { m: usize, parts: Vec<ItemSet>, caps: Vec<usize> },
    Explicit { m: usize, rank: Vec<u8> },
}

impl Matroid {
    pub fn uniform(m: usize, k: usize) -> Result<Self> {
        check_ground(m)?;
        Ok(Matroid::Uniform { m, k })
    }

    /// Additive buyer: every set is independent.
    pub fn free(m: usize) -> Result<Self> {
        Self::uniform(m, m)
    }

    pub fn unit_demand(m: usize) -> Result<Self> {
        Self::uniform(m, 1)
    }

    /// Parts must be disjoint and cover `0..m`.
    pub fn partition(m: usize, parts: Vec<Vec<usize>>, caps: Vec<usize>) -> Result<Self> {
        check_ground(m)?;
        if parts.len() != caps.len() {
            return Err(Error::InvalidMatroid(format!(
                "{} parts but {} caps",
                parts.len(),
                caps.len()
            )));
        }
        let mut seen: ItemSet = 0;
        let mut masks = Vec::with_capacity(parts.len());
        for part in &parts {
            let mut mask = 0;
            for &j in part {
                if j >= m {
                    return Err(Error::InvalidMatroid(format!("item {j} outside ground set of size {m}")));
                }
                if contains(seen, j) {
                    return Err(Error::InvalidMatroid(format!("item {j} in more than one part")));
                }
                seen |= 1 << j;
                mask |= 1 << j;
            }
            masks.push(mask);
        }
        if seen != full_set(m) {
            return Err(Error::InvalidMatroid("parts do not cover every item".into()));
        }
        Ok(Matroid::Partition { m, parts: masks, caps })
    }

    /// Downward closure of the listed sets, validated as a matroid.
    pub fn explicit(m: usize, independent: &[ItemSet]) -> Result<Self> {
        check_explicit(m)?;
        let n = 1usize << m;
        let mut indep = vec![false; n];
        indep[0] = true;
        for &s in independent {
            if s & !full_set(m) != 0 {
                return Err(Error::InvalidMatroid(format!("set {s:#b} outside ground set")));
            }
            indep[s as usize] = true;
        }
        for s in (0..n).rev() {
            if !indep[s] {
                indep[s] = (0..m).any(|j| s >> j & 1 == 0 && indep[s | 1 << j]);
            }
        }
        let mut rank = vec![0u8; n];
        for s in 1..n {
            rank[s] = if indep[s] {
                size(s as ItemSet) as u8
            } else {
                items(s as ItemSet).map(|j| rank[s & !(1 << j)]).max().unwrap_or(0)
            };
        }
        Self::from_rank_table(m, rank)
    }

    /// Validates a full rank table via the local rank axioms.
    pub fn from_rank_table(m: usize, rank: Vec<u8>) -> Result<Self> {
        check_explicit(m)?;
        let n = 1usize << m;
        if rank.len() != n {
            return Err(Error::InvalidMatroid(format!("rank table has {} entries, need {n}", rank.len())));
        }
        if rank[0] != 0 {
            return Err(Error::InvalidMatroid("rank of the empty set is not 0".into()));
        }
        for s in 0..n {
            for j in 0..m {
                if s >> j & 1 == 1 {
                    continue;
                }
                let sj = s | 1 << j;
                if rank[sj] < rank[s] || rank[sj] > rank[s] + 1 {
                    return Err(Error::InvalidMatroid(format!("rank jump at set {s:#b} + item {j}")));
                }
                for k in j + 1..m {
                    if s >> k & 1 == 1 {
                        continue;
                    }
                    let sk = s | 1 << k;
                    if (rank[sj] as u16) + (rank[sk] as u16) < (rank[sj | 1 << k] as u16) + (rank[s] as u16) {
                        return Err(Error::InvalidMatroid(format!("rank not submodular at set {s:#b}")));
                    }
                }
            }
        }
        Ok(Matroid::Explicit { m, rank })
    }

    /// Linear matroid over GF(2): item `j` is the bit vector `columns[j]`.
    pub fn binary(columns: &[u32]) -> Result<Self> {
        let m = columns.len();
        check_explicit(m)?;
        let rank = (0..1usize << m)
            .map(|s| gf2_rank(items(s as ItemSet).map(|j| columns[j])) as u8)
            .collect();
        Ok(Matroid::Explicit { m, rank })
    }

    pub fn m(&self) -> usize {
        match self {
            Matroid::Uniform { m, .. } | Matroid::Partition { m, .. } | Matroid::Explicit { m, .. } => *m,
        }
    }

    pub fn rank(&self, s: ItemSet) -> usize {
        match self {
            Matroid::Uniform { k, .. } => size(s).min(*k),
            Matroid::Partition { parts, caps, .. } => parts
                .iter()
                .zip(caps)
                .map(|(&p, &c)| size(s & p).min(c))
                .sum(),
            Matroid::Explicit { rank, .. } => rank[s as usize] as usize,
        }
    }

    pub fn is_independent(&self, s: ItemSet) -> bool {
        self.rank(s) == size(s)
    }

    /// Greedy over positive weights in `restrict_to`: descending weight, ties
    /// by ascending item index. Zero and negative weights are never taken.
    pub fn max_weight_basis(&self, weights: &[Rational], restrict_to: ItemSet) -> ItemSet {
        let mut order: Vec<usize> = items(restrict_to & full_set(self.m()))
            .filter(|&j| weights[j].is_positive())
            .collect();
        order.sort_by(|&a, &b| weights[b].cmp(&weights[a]).then(a.cmp(&b)));
        self.greedy_in_order(&order)
    }

    /// Adds items in the given order whenever independence is preserved.
    pub fn greedy_in_order(&self, order: &[usize]) -> ItemSet {
        let mut s: ItemSet = 0;
        for &j in order {
            if self.is_independent(s | 1 << j) {
                s |= 1 << j;
            }
        }
        s
    }

    /// Whether `q` lies in `b * P_F`, i.e. `sum_{j in S} q_j <= b * rank(S)`
    /// for every `S`.
    pub fn in_scaled_polytope(&self, q: &[Rational], b: &Rational) -> Result<bool> {
        let m = self.m();
        if q.len() != m {
            return Err(Error::DimensionMismatch { what: "probability vector", expected: m, got: q.len() });
        }
        if q.iter().any(|x| x.is_negative()) {
            return Ok(false);
        }
        let box_and_sum = |mask: ItemSet, cap: usize| {
            let total = items(mask).fold(Rational::zero(), |acc, j| acc + &q[j]);
            let single = if cap >= 1 { b.clone() } else { Rational::zero() };
            items(mask).all(|j| q[j] <= single) && total <= b * Rational::from_integer(BigInt::from(cap))
        };
        Ok(match self {
            Matroid::Uniform { m, k } => box_and_sum(full_set(*m), (*k).min(*m)),
            Matroid::Partition { parts, caps, .. } => {
                parts.iter().zip(caps).all(|(&p, &c)| box_and_sum(p, c.min(size(p))))
            }
            Matroid::Explicit { m, .. } => {
                check_explicit(*m)?;
                (1..=full_set(*m)).all(|s| {
                    let total = items(s).fold(Rational::zero(), |acc, j| acc + &q[j]);
                    total <= b * Rational::from_integer(BigInt::from(self.rank(s)))
                })
            }
        })
    }

    /// Rank of `s` in the union of `k` copies of the matroid.
    pub fn union_rank(&self, k: usize, s: ItemSet) -> usize {
        let counts: Vec<usize> = (0..self.m()).map(|j| usize::from(contains(s, j))).collect();
        self.union_rank_counts(k, &counts)
    }

    /// Rank of a multiset (item `j` repeated `counts[j]` times, copies being
    /// parallel elements) in the `k`-fold union:
    /// `min_T sum_{j not in T} c_j + k * rank(T)`.
    pub fn union_rank_counts(&self, k: usize, counts: &[usize]) -> usize {
        match self {
            Matroid::Uniform { m, k: r } => uniform_union_rank(&counts[..*m], k, *r),
            Matroid::Partition { parts, caps, .. } => parts
                .iter()
                .zip(caps)
                .map(|(&p, &c)| {
                    let sub: Vec<usize> = items(p).map(|j| counts[j]).collect();
                    uniform_union_rank(&sub, k, c)
                })
                .sum(),
            Matroid::Explicit { m, .. } => {
                let support = from_items((0..*m).filter(|&j| counts[j] > 0));
                let mut best = usize::MAX;
                let mut t = support;
                loop {
                    let outside: usize = items(support & !t).map(|j| counts[j]).sum();
                    best = best.min(outside + k * self.rank(t));
                    if t == 0 {
                        break;
                    }
                    t = (t - 1) & support;
                }
                best
            }
        }
    }

    /// Greedy maximum-weight independent multiset in the `k`-fold union.
    /// Elements are `(item, weight)`; order is descending weight, then item,
    /// then position. Returns the selected element positions in pick order.
    pub fn greedy_union_basis(&self, k: usize, elements: &[(usize, Rational)]) -> Vec<usize> {
        let mut order: Vec<usize> = (0..elements.len()).filter(|&e| elements[e].1.is_positive()).collect();
        order.sort_by(|&a, &b| {
            elements[b].1.cmp(&elements[a].1).then(elements[a].0.cmp(&elements[b].0)).then(a.cmp(&b))
        });
        let mut counts = vec![0usize; self.m()];
        let mut total = 0;
        let mut picked = Vec::new();
        for e in order {
            let j = elements[e].0;
            counts[j] += 1;
            if self.union_rank_counts(k, &counts) == total + 1 {
                total += 1;
                picked.push(e);
            } else {
                counts[j] -= 1;
            }
        }
        picked
    }

    pub fn restrict(&self, available: ItemSet) -> RestrictedMatroid<'_> {
        RestrictedMatroid { base: self, mask: available & full_set(self.m()) }
    }

    /// The restriction to `a`, reindexed onto `0..|a|` in ascending item order.
    pub fn restriction(&self, a: ItemSet) -> Matroid {
        let kept: Vec<usize> = items(a & full_set(self.m())).collect();
        let m = kept.len();
        let lift = |s: ItemSet| from_items(items(s).map(|i| kept[i]));
        match self {
            Matroid::Uniform { k, .. } => Matroid::Uniform { m, k: *k },
            Matroid::Partition { parts, caps, .. } => {
                let mut new_parts = Vec::new();
                let mut new_caps = Vec::new();
                for (&p, &c) in parts.iter().zip(caps) {
                    let mask = from_items((0..m).filter(|&i| contains(p, kept[i])));
                    if mask != 0 {
                        new_parts.push(mask);
                        new_caps.push(c);
                    }
                }
                Matroid::Partition { m, parts: new_parts, caps: new_caps }
            }
            Matroid::Explicit { .. } => Matroid::Explicit {
                m,
                rank: (0..1u32 << m).map(|s| self.rank(lift(s)) as u8).collect(),
            },
        }
    }

    /// Whether every set independent here is independent in `other`.
    pub fn is_submatroid_of(&self, other: &Matroid) -> Result<bool> {
        let m = self.m();
        if other.m() != m {
            return Err(Error::DimensionMismatch { what: "matroid ground set", expected: other.m(), got: m });
        }
        if m > MAX_EXPLICIT {
            return Ok(true);
        }
        Ok((0..=full_set(m)).all(|s| !self.is_independent(s) || other.is_independent(s)))
    }

    /// Maximal independent sets, ascending by mask.
    pub fn bases(&self) -> Vec<ItemSet> {
        let r = self.rank(full_set(self.m()));
        (0..=full_set(self.m())).filter(|&s| size(s) == r && self.is_independent(s)).collect()
    }

    pub fn to_spec(&self) -> MatroidSpec {
        match self {
            Matroid::Uniform { k, .. } => MatroidSpec::Uniform { k: *k },
            Matroid::Partition { parts, caps, .. } => MatroidSpec::Partition {
                parts: parts.iter().map(|&p| items(p).collect()).collect(),
                caps: caps.clone(),
            },
            Matroid::Explicit { m, .. } => MatroidSpec::Explicit {
                m: *m,
                independent_sets: self.bases().into_iter().map(|s| items(s).collect()).collect(),
            },
        }
    }
}

fn uniform_union_rank(counts: &[usize], k: usize, r: usize) -> usize {
    let mut sorted: Vec<usize> = counts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let total: usize = sorted.iter().sum();
    let mut best = total;
    let mut removed = 0;
    for (t, c) in sorted.iter().enumerate() {
        removed += c;
        best = best.min(total - removed + k * (t + 1).min(r));
    }
    best
}

fn gf2_rank(vectors: impl Iterator<Item = u32>) -> usize {
    let mut basis: Vec<u32> = Vec::new();
    for mut v in vectors {
        for &b in &basis {
            v = v.min(v ^ b);
        }
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len()
}

fn check_ground(m: usize) -> Result<()> {
    if m == 0 || m > MAX_ITEMS {
        return Err(Error::InvalidMatroid(format!("ground set size {m} outside 1..={MAX_ITEMS}")));
    }
    Ok(())
}

fn check_explicit(m: usize) -> Result<()> {
    if m == 0 || m > MAX_EXPLICIT {
        return Err(Error::InvalidMatroid(format!(
            "explicit matroids need 1..={MAX_EXPLICIT} items, got {m}"
        )));
    }
    Ok(())
}

/// A matroid with every item outside `mask` deleted.
#[derive(Clone, Copy, Debug)]
pub struct RestrictedMatroid<'a> {
    pub base: &'a Matroid,
    pub mask: ItemSet,
}

impl RestrictedMatroid<'_> {
    pub fn rank(&self, s: ItemSet) -> usize {
        self.base.rank(s & self.mask)
    }

    pub fn is_independent(&self, s: ItemSet) -> bool {
        s & !self.mask == 0 && self.base.is_independent(s)
    }

    pub fn max_weight_basis(&self, weights: &[Rational]) -> ItemSet {
        self.base.max_weight_basis(weights, self.mask)
    }
}

/// JSON form. `m` for uniform and partition matroids comes from the
/// surrounding instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase", deny_unknown_fields)]
pub enum MatroidSpec {
    Uniform { k: usize },
    Partition { parts: Vec<Vec<usize>>, caps: Vec<usize> },
    Explicit { m: usize, independent_sets: Vec<Vec<usize>> },
}

impl MatroidSpec {
    pub fn build(&self, m: usize) -> Result<Matroid> {
        match self {
            MatroidSpec::Uniform { k } => Matroid::uniform(m, *k),
            MatroidSpec::Partition { parts, caps } => Matroid::partition(m, parts.clone(), caps.clone()),
            MatroidSpec::Explicit { m: em, independent_sets } => {
                if *em != m {
                    return Err(Error::DimensionMismatch { what: "explicit matroid", expected: m, got: *em });
                }
                check_explicit(m)?;
                let mut sets = Vec::with_capacity(independent_sets.len());
                for set in independent_sets {
                    if let Some(&j) = set.iter().find(|&&j| j >= m) {
                        return Err(Error::InvalidMatroid(format!("item {j} outside ground set of size {m}")));
                    }
                    sets.push(from_items(set.iter().copied()));
                }
                Matroid::explicit(m, &sets)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn w(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| int(x)).collect()
    }

    fn brute_best(mat: &Matroid, weights: &[Rational], restrict: ItemSet) -> Rational {
        (0..=full_set(mat.m()))
            .filter(|&s| s & !restrict == 0 && mat.is_independent(s))
            .map(|s| items(s).fold(Rational::zero(), |acc, j| acc + weights[j].clone().max(Rational::zero())))
            .max()
            .unwrap()
    }

    fn weight_of(s: ItemSet, weights: &[Rational]) -> Rational {
        items(s).fold(Rational::zero(), |acc, j| acc + &weights[j])
    }

    fn random_matroid(rng: &mut ChaCha8Rng, m: usize) -> Matroid {
        match rng.gen_range(0..3) {
            0 => Matroid::uniform(m, rng.gen_range(0..=m)).unwrap(),
            1 => {
                let groups = rng.gen_range(1..=m);
                let mut parts = vec![Vec::new(); groups];
                for j in 0..m {
                    parts[rng.gen_range(0..groups)].push(j);
                }
                parts.retain(|p| !p.is_empty());
                let caps = parts.iter().map(|p| rng.gen_range(0..=p.len())).collect();
                Matroid::partition(m, parts, caps).unwrap()
            }
            _ => {
                let dim = rng.gen_range(1..=m.min(5));
                let cols: Vec<u32> = (0..m).map(|_| rng.gen_range(0..1u32 << dim)).collect();
                Matroid::binary(&cols).unwrap()
            }
        }
    }

    #[test]
    fn rank_examples() {
        assert_eq!(Matroid::uniform(2, 1).unwrap().rank(0b11), 1);
        let p = Matroid::partition(3, vec![vec![0, 1], vec![2]], vec![1, 1]).unwrap();
        assert_eq!(p.rank(0b111), 2);
        assert_eq!(p.rank(0), 0);
    }

    #[test]
    fn basis_examples() {
        let u = Matroid::uniform(3, 2).unwrap();
        let b = u.max_weight_basis(&w(&[5, 3, 2]), full_set(3));
        assert_eq!(b, 0b011);
        let p = Matroid::partition(3, vec![vec![0, 1], vec![2]], vec![1, 1]).unwrap();
        let b = p.max_weight_basis(&w(&[5, 3, 2]), full_set(3));
        assert_eq!(b, 0b101);
        assert_eq!(weight_of(b, &w(&[5, 3, 2])), int(7));
        assert_eq!(u.max_weight_basis(&w(&[-1, -2, -3]), full_set(3)), 0);
        assert_eq!(u.max_weight_basis(&w(&[0, 0, 1]), full_set(3)), 0b100);
    }

    #[test]
    fn polytope_examples() {
        use crate::rational::rat;
        let u = Matroid::uniform(2, 1).unwrap();
        assert!(u.in_scaled_polytope(&[rat(1, 4), rat(1, 4)], &rat(1, 2)).unwrap());
        assert!(!u.in_scaled_polytope(&[rat(1, 2), rat(1, 2)], &rat(1, 2)).unwrap());
        assert!(u.in_scaled_polytope(&[int(0), int(0)], &rat(1, 9)).unwrap());
        assert!(u.in_scaled_polytope(&[int(0)], &int(1)).is_err());
    }

    #[test]
    fn union_examples() {
        let u = Matroid::uniform(3, 1).unwrap();
        assert_eq!(u.union_rank(4, 0b111), 3);
        let p = Matroid::partition(4, vec![vec![0, 1, 2], vec![3]], vec![1, 1]).unwrap();
        assert_eq!(p.union_rank(2, 0b0111), 2);
        for s in 0..16 {
            assert_eq!(p.union_rank(1, s), p.rank(s));
        }
    }

    #[test]
    fn greedy_union_examples() {
        let u = Matroid::uniform(2, 1).unwrap();
        let elements = vec![(0, int(5)), (0, int(4)), (1, int(3))];
        let picked = u.greedy_union_basis(2, &elements);
        assert_eq!(picked, vec![0, 1]);
        assert_eq!(brute_union_best(&u, 2, &elements), int(9));

        let single = vec![(0, int(5)), (1, int(3)), (2, int(2))];
        let p = Matroid::partition(3, vec![vec![0, 1], vec![2]], vec![1, 1]).unwrap();
        let picked: ItemSet = from_items(p.greedy_union_basis(1, &single).into_iter().map(|e| single[e].0));
        assert_eq!(picked, p.max_weight_basis(&w(&[5, 3, 2]), full_set(3)));

        let neg = vec![(0, int(0)), (1, int(-3))];
        assert!(u.greedy_union_basis(2, &neg).is_empty());
    }

    #[test]
    fn restrict_examples() {
        let mat = Matroid::binary(&[1, 2, 3]).unwrap();
        let full = mat.restrict(full_set(3));
        let none = mat.restrict(0);
        for s in 0..8 {
            assert_eq!(full.is_independent(s), mat.is_independent(s));
            assert_eq!(none.is_independent(s), s == 0);
        }
        let a = mat.restrict(0b101);
        assert_eq!(a.rank(0b101), mat.rank(0b101));
        let sub = mat.restriction(0b101);
        assert_eq!(sub.m(), 2);
        assert_eq!(sub.rank(0b11), mat.rank(0b101));
    }

    #[test]
    fn explicit_validation() {
        // {0,1} and {2} as bases violate augmentation.
        assert!(Matroid::explicit(3, &[0b011, 0b100]).is_err());
        let ok = Matroid::explicit(3, &[0b011, 0b101, 0b110]).unwrap();
        assert_eq!(ok, Matroid::from_rank_table(3, (0..8).map(|s: u32| s.count_ones().min(2) as u8).collect()).unwrap());
        let spec = ok.to_spec();
        assert_eq!(spec.build(3).unwrap(), ok);
        let json: MatroidSpec = serde_json::from_str(r#"{"variant":"partition","parts":[[0,1],[2]],"caps":[1,1]}"#).unwrap();
        assert_eq!(json.build(3).unwrap().rank(0b111), 2);
        assert!(json.build(4).is_err());
    }

    #[test]
    fn closed_forms_match_explicit_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let m = rng.gen_range(1..=6);
            let mat = random_matroid(&mut rng, m);
            let table: Vec<u8> = (0..1u32 << m).map(|s| mat.rank(s) as u8).collect();
            let exp = Matroid::from_rank_table(m, table).unwrap();
            let k = rng.gen_range(1..4);
            for s in 0..1u32 << m {
                assert_eq!(mat.union_rank(k, s), exp.union_rank(k, s));
            }
            let counts: Vec<usize> = (0..m).map(|_| rng.gen_range(0..4)).collect();
            assert_eq!(mat.union_rank_counts(k, &counts), exp.union_rank_counts(k, &counts));
            let q: Vec<Rational> = (0..m).map(|_| crate::rational::rat(rng.gen_range(0..5), 8)).collect();
            let b = crate::rational::rat(rng.gen_range(1..5), 4);
            assert_eq!(mat.in_scaled_polytope(&q, &b).unwrap(), exp.in_scaled_polytope(&q, &b).unwrap());
        }
    }

    #[test]
    fn rank_axioms_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..60 {
            let m = rng.gen_range(1..=8);
            let mat = random_matroid(&mut rng, m);
            let k = rng.gen_range(1..=3);
            for r in [|mat: &Matroid, _k: usize, s: ItemSet| mat.rank(s), |mat: &Matroid, k, s| mat.union_rank(k, s)] {
                assert_eq!(r(&mat, k, 0), 0);
                for s in 0..=full_set(m) {
                    assert!(r(&mat, k, s) <= size(s));
                    for j in 0..m {
                        let sj = s | 1 << j;
                        assert!(r(&mat, k, sj) >= r(&mat, k, s));
                        for l in 0..m {
                            let sl = s | 1 << l;
                            assert!(r(&mat, k, sj) + r(&mat, k, sl) >= r(&mat, k, sj | sl) + r(&mat, k, s));
                        }
                    }
                }
            }
        }
    }

    fn brute_union_best(mat: &Matroid, k: usize, elements: &[(usize, Rational)]) -> Rational {
        let n = elements.len();
        let mut best = Rational::zero();
        for pick in 0..1u32 << n {
            let mut counts = vec![0; mat.m()];
            let mut total = Rational::zero();
            for e in items(pick) {
                counts[elements[e].0] += 1;
                total += &elements[e].1;
            }
            if mat.union_rank_counts(k, &counts) == size(pick) {
                best = best.max(total);
            }
        }
        best
    }

    #[test]
    fn greedy_union_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..300 {
            let m = rng.gen_range(1..=4);
            let mat = random_matroid(&mut rng, m);
            let k = rng.gen_range(1..=3);
            let n = rng.gen_range(1..=9);
            let elements: Vec<(usize, Rational)> =
                (0..n).map(|_| (rng.gen_range(0..m), int(rng.gen_range(-2..8)))).collect();
            let picked = mat.greedy_union_basis(k, &elements);
            let mut counts = vec![0; m];
            let mut total = Rational::zero();
            for &e in &picked {
                counts[elements[e].0] += 1;
                total += &elements[e].1;
            }
            assert_eq!(mat.union_rank_counts(k, &counts), picked.len());
            assert_eq!(total, brute_union_best(&mat, k, &elements));
        }
    }

    proptest! {
        #[test]
        fn greedy_is_optimal(seed in 0u64..10_000, m in 1usize..=7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mat = random_matroid(&mut rng, m);
            let weights: Vec<Rational> = (0..m).map(|_| int(rng.gen_range(-3..6))).collect();
            let restrict = rng.gen_range(0..=full_set(m));
            let b = mat.max_weight_basis(&weights, restrict);
            prop_assert!(mat.restrict(restrict).is_independent(b));
            prop_assert!(items(b).all(|j| weights[j].is_positive()));
            prop_assert_eq!(weight_of(b, &weights), brute_best(&mat, &weights, restrict));
        }

        #[test]
        fn polytope_scale_invariance(seed in 0u64..10_000, m in 1usize..=5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mat = random_matroid(&mut rng, m);
            let q: Vec<Rational> = (0..m).map(|_| crate::rational::rat(rng.gen_range(0..6), 12)).collect();
            let b = crate::rational::rat(rng.gen_range(1..=4), 4);
            let scaled: Vec<Rational> = q.iter().map(|x| x / &b).collect();
            prop_assert_eq!(
                mat.in_scaled_polytope(&q, &b).unwrap(),
                mat.in_scaled_polytope(&scaled, &Rational::from_integer(1.into())).unwrap()
            );
        }
    }
}
