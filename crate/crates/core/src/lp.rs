//! Linear programs of the form `max c.x  s.t.  A x <= b, x >= 0` with
//! `b >= 0`, so the origin is always feasible.
//!
//! Solving runs a floating-point dictionary simplex on a slightly perturbed
//! right-hand side and solves the final basis exactly against the true one;
//! the result is accepted only if the exact primal and dual are feasible with
//! equal objectives. Failing that, the unperturbed float optimum is rounded
//! to nearby rationals or its basis solved exactly, and as a last resort the
//! simplex is rerun over rationals.

use std::collections::BTreeMap;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rational::{to_f64, Rational};

const MAX_PIVOTS: usize = 200_000;
const DEGENERATE_SWITCH: usize = 50;

#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    n_vars: usize,
    rows: Vec<Vec<(usize, Rational)>>,
    rhs: Vec<Rational>,
    objective: Vec<Rational>,
}

/// How the exact optimum was certified.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Certification {
    Rounded,
    BasisSolve,
    ExactSimplex,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub value: Rational,
    pub x: Vec<Rational>,
    /// One multiplier per row; `y >= 0`, `A^T y >= c` and `b.y = value`.
    pub dual: Vec<Rational>,
    pub certification: Certification,
}

impl LinearProgram {
    pub fn new(n_vars: usize) -> Self {
        Self {
            n_vars,
            objective: vec![Rational::zero(); n_vars],
            ..Default::default()
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn set_objective(&mut self, var: usize, c: Rational) {
        self.objective[var] = c;
    }

    /// Adds `sum coef * x_var <= rhs`. Repeated variables are merged.
    pub fn add_row(&mut self, terms: Vec<(usize, Rational)>, rhs: Rational) -> Result<()> {
        if rhs.is_negative() {
            return Err(Error::Precondition("constraint right-hand sides must be non-negative".into()));
        }
        let mut merged: BTreeMap<usize, Rational> = BTreeMap::new();
        for (j, a) in terms {
            if j >= self.n_vars {
                return Err(Error::DimensionMismatch { what: "LP variable", expected: self.n_vars, got: j });
            }
            *merged.entry(j).or_insert_with(Rational::zero) += a;
        }
        self.rows.push(merged.into_iter().filter(|(_, a)| !a.is_zero()).collect());
        self.rhs.push(rhs);
        Ok(())
    }

    pub fn solve(&self) -> Result<LpSolution> {
        // Degenerate programs stall the simplex; a perturbed right-hand side
        // usually ends at an optimal basis of the original program.
        if let Ok(state) = simplex(self.float_problem_perturbed()) {
            if let Some((x, y)) = self.solve_basis(&state) {
                if let Some(value) = self.certify(&x, &y) {
                    return Ok(LpSolution { value, x, dual: y, certification: Certification::BasisSolve });
                }
            }
        }
        let float = self.float_problem();
        let basis = match simplex(float) {
            Ok(state) => Some(state),
            Err(Error::Lp(_)) => None,
            Err(e) => return Err(e),
        };
        if let Some(state) = &basis {
            let (x, y) = state.primal_dual();
            let x: Vec<Rational> = x.iter().map(|&v| round_rational(v)).collect();
            let y: Vec<Rational> = y.iter().map(|&v| round_rational(v)).collect();
            if let Some(value) = self.certify(&x, &y) {
                return Ok(LpSolution { value, x, dual: y, certification: Certification::Rounded });
            }
            if let Some((x, y)) = self.solve_basis(state) {
                if let Some(value) = self.certify(&x, &y) {
                    return Ok(LpSolution { value, x, dual: y, certification: Certification::BasisSolve });
                }
            }
        }
        let state = simplex(self.exact_problem())?;
        let (x, y) = state.primal_dual();
        let value = self
            .certify(&x, &y)
            .ok_or(Error::Lp("inconsistent after exact simplex"))?;
        Ok(LpSolution { value, x, dual: y, certification: Certification::ExactSimplex })
    }

    /// Floating-point optimum only, for exploratory use.
    pub fn solve_approx(&self) -> Result<f64> {
        Ok(simplex(self.float_problem())?.objective_value)
    }

    /// Checks primal and dual feasibility and equal objectives; returns the
    /// common value.
    pub fn certify(&self, x: &[Rational], y: &[Rational]) -> Option<Rational> {
        if x.len() != self.n_vars || y.len() != self.rows.len() {
            return None;
        }
        if x.iter().chain(y).any(|v| v.is_negative()) {
            return None;
        }
        let mut reduced: Vec<Rational> = self.objective.iter().map(|c| -c).collect();
        let mut dual_value = Rational::zero();
        for ((row, b), yi) in self.rows.iter().zip(&self.rhs).zip(y) {
            let lhs = row.iter().fold(Rational::zero(), |acc, (j, a)| acc + a * &x[*j]);
            if lhs > *b {
                return None;
            }
            if !yi.is_zero() {
                dual_value += b * yi;
                for (j, a) in row {
                    reduced[*j] += a * yi;
                }
            }
        }
        if reduced.iter().any(|r| r.is_negative()) {
            return None;
        }
        let primal = self.objective.iter().zip(x).fold(Rational::zero(), |acc, (c, v)| acc + c * v);
        (primal == dual_value).then_some(primal)
    }

    fn float_problem(&self) -> Problem<f64> {
        Problem {
            n: self.n_vars,
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|(j, a)| (*j, to_f64(a))).collect())
                .collect(),
            rhs: self.rhs.iter().map(to_f64).collect(),
            objective: self.objective.iter().map(to_f64).collect(),
        }
    }

    fn float_problem_perturbed(&self) -> Problem<f64> {
        let mut p = self.float_problem();
        let scale = p.rhs.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        for (i, b) in p.rhs.iter_mut().enumerate() {
            // Distinct deterministic offsets in (1e-7, 2e-7) relative to the largest entry.
            let u = (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) >> 11;
            *b += scale * 1e-7 * (1.0 + u as f64 / (1u64 << 53) as f64);
        }
        p
    }

    fn exact_problem(&self) -> Problem<Rational> {
        Problem {
            n: self.n_vars,
            rows: self.rows.clone(),
            rhs: self.rhs.clone(),
            objective: self.objective.clone(),
        }
    }

    /// Solves the optimal basis of the float run exactly: the tight rows
    /// against the basic structural variables, for both primal and dual.
    fn solve_basis(&self, state: &Dictionary<f64>) -> Option<(Vec<Rational>, Vec<Rational>)> {
        let n = self.n_vars;
        let basic: Vec<usize> = state.basic.iter().copied().filter(|&v| v < n).collect();
        let tight: Vec<usize> = state.nonbasic.iter().copied().filter(|&v| v >= n).map(|v| v - n).collect();
        if basic.len() != tight.len() {
            return None;
        }
        let col_of: BTreeMap<usize, usize> = basic.iter().enumerate().map(|(k, &j)| (j, k)).collect();
        let mut primal_rows = Vec::with_capacity(tight.len());
        let mut dual_rows: Vec<BTreeMap<usize, Rational>> = vec![BTreeMap::new(); basic.len()];
        for (t, &i) in tight.iter().enumerate() {
            let mut row = BTreeMap::new();
            for (j, a) in &self.rows[i] {
                if let Some(&k) = col_of.get(j) {
                    row.insert(k, a.clone());
                    dual_rows[k].insert(t, a.clone());
                }
            }
            primal_rows.push(row);
        }
        let xb = sparse_solve(primal_rows, tight.iter().map(|&i| self.rhs[i].clone()).collect())?;
        let yt = sparse_solve(dual_rows, basic.iter().map(|&j| self.objective[j].clone()).collect())?;
        let mut x = vec![Rational::zero(); n];
        for (k, &j) in basic.iter().enumerate() {
            x[j] = xb[k].clone();
        }
        let mut y = vec![Rational::zero(); self.rows.len()];
        for (t, &i) in tight.iter().enumerate() {
            y[i] = yt[t].clone();
        }
        Some((x, y))
    }
}

/// Nearest simple rational: the first continued-fraction convergent within
/// `1e-9` relative error, with denominators up to `1e12`.
fn round_rational(v: f64) -> Rational {
    if !v.is_finite() {
        return Rational::zero();
    }
    let tol = 1e-9 * v.abs().max(1.0);
    if v.abs() < tol {
        return Rational::zero();
    }
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut rest = v;
    for _ in 0..64 {
        let a = rest.floor();
        let ai = BigInt::from(a as i64);
        let h2 = &ai * &h1 + &h0;
        let k2 = &ai * &k1 + &k0;
        (h0, h1) = (h1, h2);
        (k0, k1) = (k1, k2);
        let approx = Rational::new(h1.clone(), k1.clone());
        if (to_f64(&approx) - v).abs() <= tol || k1.to_f64().unwrap_or(f64::MAX) > 1e12 {
            return approx;
        }
        let frac = rest - a;
        if frac.abs() < 1e-15 {
            return approx;
        }
        rest = 1.0 / frac;
    }
    Rational::new(h1, k1)
}

/// Gaussian elimination on a square sparse system; `None` if singular.
fn sparse_solve(mut rows: Vec<BTreeMap<usize, Rational>>, mut rhs: Vec<Rational>) -> Option<Vec<Rational>> {
    let k = rows.len();
    let mut pivot_of_row: Vec<Option<usize>> = vec![None; k];
    let mut col_done = vec![false; k];
    let mut order = Vec::with_capacity(k);
    for _ in 0..k {
        // Sparsest remaining row first, then its sparsest remaining column.
        let r = (0..k)
            .filter(|&r| pivot_of_row[r].is_none())
            .min_by_key(|&r| rows[r].len())?;
        let c = *rows[r].keys().find(|c| !col_done[**c])?;
        pivot_of_row[r] = Some(c);
        col_done[c] = true;
        order.push(r);
        let prow = rows[r].clone();
        let pval = prow[&c].clone();
        let pb = rhs[r].clone();
        for i in 0..k {
            if i == r {
                continue;
            }
            let Some(f) = rows[i].get(&c).map(|a| a / &pval) else { continue };
            for (cc, a) in &prow {
                let e = rows[i].entry(*cc).or_insert_with(Rational::zero);
                *e -= &f * a;
                if e.is_zero() {
                    rows[i].remove(cc);
                }
            }
            rhs[i] -= &f * &pb;
        }
    }
    let mut sol = vec![Rational::zero(); k];
    for r in order {
        let c = pivot_of_row[r]?;
        let a = rows[r].get(&c)?;
        if rows[r].len() != 1 {
            return None;
        }
        sol[c] = &rhs[r] / a;
    }
    Some(sol)
}

trait Scalar: Clone + PartialOrd + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self> {
    const EPS: f64;
    fn is_pos(&self) -> bool;
    fn is_nz(&self) -> bool;
}

impl Scalar for f64 {
    const EPS: f64 = 1e-9;
    fn is_pos(&self) -> bool {
        *self > Self::EPS
    }
    fn is_nz(&self) -> bool {
        self.abs() > 1e-12
    }
}

impl Scalar for Rational {
    const EPS: f64 = 0.0;
    fn is_pos(&self) -> bool {
        self.is_positive()
    }
    fn is_nz(&self) -> bool {
        !Zero::is_zero(self)
    }
}

struct Problem<T> {
    n: usize,
    rows: Vec<Vec<(usize, T)>>,
    rhs: Vec<T>,
    objective: Vec<T>,
}

/// `x_B = beta - D x_N`, `z = z0 + cbar . x_N`. Variables `0..n` are
/// structural, `n..n+rows` are slacks.
struct Dictionary<T> {
    n: usize,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    beta: Vec<T>,
    d: Vec<Vec<T>>,
    cbar: Vec<T>,
    objective_value: T,
}

impl<T: Scalar> Dictionary<T> {
    fn pivot(&mut self, r: usize, k: usize) {
        let a = self.d[r][k].clone();
        let inv = T::one() / a;
        for v in self.d[r].iter_mut() {
            *v = v.clone() * inv.clone();
        }
        self.d[r][k] = inv.clone();
        self.beta[r] = self.beta[r].clone() * inv;
        let prow = self.d[r].clone();
        let pb = self.beta[r].clone();
        for i in 0..self.d.len() {
            if i == r {
                continue;
            }
            let f = self.d[i][k].clone();
            if !f.is_nz() {
                continue;
            }
            let row = &mut self.d[i];
            for (kk, p) in prow.iter().enumerate() {
                if kk == k {
                    row[kk] = -(f.clone() * p.clone());
                } else if p.is_nz() {
                    row[kk] = row[kk].clone() - f.clone() * p.clone();
                }
            }
            self.beta[i] = self.beta[i].clone() - f * pb.clone();
        }
        let f = self.cbar[k].clone();
        for (kk, p) in prow.iter().enumerate() {
            if kk == k {
                self.cbar[kk] = -(f.clone() * p.clone());
            } else if p.is_nz() {
                self.cbar[kk] = self.cbar[kk].clone() - f.clone() * p.clone();
            }
        }
        self.objective_value = self.objective_value.clone() + f * pb;
        std::mem::swap(&mut self.basic[r], &mut self.nonbasic[k]);
    }

    fn primal_dual(&self) -> (Vec<T>, Vec<T>) {
        let mut x = vec![T::zero(); self.n];
        for (r, &v) in self.basic.iter().enumerate() {
            if v < self.n {
                x[v] = self.beta[r].clone();
            }
        }
        let mut y = vec![T::zero(); self.basic.len()];
        for (k, &v) in self.nonbasic.iter().enumerate() {
            if v >= self.n {
                y[v - self.n] = -self.cbar[k].clone();
            }
        }
        (x, y)
    }
}

fn simplex<T: Scalar>(p: Problem<T>) -> Result<Dictionary<T>> {
    let rows = p.rows.len();
    let mut d = vec![vec![T::zero(); p.n]; rows];
    for (i, row) in p.rows.into_iter().enumerate() {
        for (j, a) in row {
            d[i][j] = a;
        }
    }
    let mut dict = Dictionary {
        n: p.n,
        basic: (p.n..p.n + rows).collect(),
        nonbasic: (0..p.n).collect(),
        beta: p.rhs,
        d,
        cbar: p.objective,
        objective_value: T::zero(),
    };
    let mut degenerate_run = 0;
    for _ in 0..MAX_PIVOTS {
        let bland = degenerate_run >= DEGENERATE_SWITCH;
        let entering = if bland {
            (0..dict.nonbasic.len())
                .filter(|&k| dict.cbar[k].is_pos())
                .min_by_key(|&k| dict.nonbasic[k])
        } else {
            let mut best: Option<usize> = None;
            for k in 0..dict.nonbasic.len() {
                if dict.cbar[k].is_pos() && best.map_or(true, |b| dict.cbar[k] > dict.cbar[b]) {
                    best = Some(k);
                }
            }
            best
        };
        let Some(k) = entering else {
            return Ok(dict);
        };
        let mut leave: Option<(usize, T)> = None;
        for r in 0..rows {
            let a = &dict.d[r][k];
            if !a.is_pos() {
                continue;
            }
            let ratio = dict.beta[r].clone() / a.clone();
            let better = match &leave {
                None => true,
                Some((lr, best)) => {
                    let lower = (best.clone() - ratio.clone()).is_pos();
                    let tie = !lower && !(ratio.clone() - best.clone()).is_pos();
                    lower || (tie && dict.basic[r] < dict.basic[*lr])
                }
            };
            if better {
                leave = Some((r, ratio));
            }
        }
        let Some((r, ratio)) = leave else {
            return Err(Error::Lp("unbounded"));
        };
        if ratio.is_pos() {
            degenerate_run = 0;
        } else {
            degenerate_run += 1;
        }
        dict.pivot(r, k);
    }
    Err(Error::Lp("not solved within the pivot limit"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn lp(c: &[i64], rows: &[(&[i64], i64)]) -> LinearProgram {
        let mut p = LinearProgram::new(c.len());
        for (j, &cj) in c.iter().enumerate() {
            p.set_objective(j, int(cj));
        }
        for (a, b) in rows {
            p.add_row(a.iter().enumerate().map(|(j, &v)| (j, int(v))).collect(), int(*b)).unwrap();
        }
        p
    }

    #[test]
    fn textbook_problem() {
        // max 3x + 2y, x + y <= 4, x + 3y <= 6, x <= 3
        let p = lp(&[3, 2], &[(&[1, 1], 4), (&[1, 3], 6), (&[1, 0], 3)]);
        let s = p.solve().unwrap();
        assert_eq!(s.value, int(11));
        assert_eq!(s.x, vec![int(3), int(1)]);
        assert_eq!(p.certify(&s.x, &s.dual), Some(int(11)));
    }

    #[test]
    fn fractional_optimum() {
        // max x + y, 3x + y <= 2, x + 3y <= 2 -> (1/2, 1/2)
        let p = lp(&[1, 1], &[(&[3, 1], 2), (&[1, 3], 2)]);
        let s = p.solve().unwrap();
        assert_eq!(s.value, int(1));
        assert_eq!(s.x, vec![rat(1, 2), rat(1, 2)]);
    }

    #[test]
    fn unbounded_and_trivial() {
        let p = lp(&[1, 0], &[(&[-1, 1], 1)]);
        assert_eq!(p.solve().unwrap_err(), Error::Lp("unbounded"));
        let p = lp(&[-1, -2], &[(&[1, 1], 1)]);
        assert_eq!(p.solve().unwrap().value, int(0));
        let mut neg = LinearProgram::new(1);
        assert!(neg.add_row(vec![(0, int(1))], int(-1)).is_err());
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Beale's cycling example, rescaled to integers.
        let mut p = LinearProgram::new(4);
        for (j, c) in [rat(3, 4), int(-150), rat(1, 50), int(-6)].into_iter().enumerate() {
            p.set_objective(j, c);
        }
        p.add_row(vec![(0, rat(1, 4)), (1, int(-60)), (2, rat(-1, 25)), (3, int(9))], int(0)).unwrap();
        p.add_row(vec![(0, rat(1, 2)), (1, int(-90)), (2, rat(-1, 50)), (3, int(3))], int(0)).unwrap();
        p.add_row(vec![(2, int(1))], int(1)).unwrap();
        let s = p.solve().unwrap();
        assert_eq!(s.value, rat(1, 20));
    }

    #[test]
    fn exact_paths_agree() {
        let p = lp(&[5, 4, 3], &[(&[2, 3, 1], 5), (&[4, 1, 2], 11), (&[3, 4, 2], 8)]);
        let float = p.float_problem();
        let state = simplex(float).unwrap();
        let (x, y) = p.solve_basis(&state).unwrap();
        assert_eq!(p.certify(&x, &y), Some(int(13)));
        let exact = simplex(p.exact_problem()).unwrap();
        assert_eq!(exact.objective_value, int(13));
    }

    #[test]
    fn rounding() {
        assert_eq!(round_rational(0.333_333_333_333_333_3), rat(1, 3));
        assert_eq!(round_rational(-2.5), rat(-5, 2));
        assert_eq!(round_rational(1e-13), int(0));
        assert_eq!(round_rational(4.0 / 27.0), rat(4, 27));
    }
}
