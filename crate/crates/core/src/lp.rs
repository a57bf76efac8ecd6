//! Exact rational linear programming.
//!
//! Two-phase dense tableau simplex with Bland's rule. Every LP is a
//! maximization; variables are nonnegative unless flagged free.
//!
//! When the duality audit is switched on ([`set_duality_audit`]), every
//! solve also builds and solves the dual program and records whether the
//! two optima agree (or, for infeasible/unbounded primals, whether the dual
//! is in the matching state).

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
    /// `free[j]` lifts the nonnegativity bound on variable `j`.
    pub free: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { value: Rational, x: Vec<Rational> },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn value(&self) -> Option<&Rational> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            objective: vec![Rational::zero(); num_vars],
            constraints: Vec::new(),
            free: vec![false; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coeffs: Vec<Rational>, relation: Relation, rhs: Rational) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    fn check_dims(&self) -> Result<()> {
        let n = self.num_vars();
        if self.free.len() != n {
            return Err(Error::Dimension(format!("{} free flags for {n} variables", self.free.len())));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(Error::Dimension(format!(
                    "constraint {i} has {} coefficients, expected {n}",
                    c.coeffs.len()
                )));
            }
        }
        Ok(())
    }

    /// The dual program, itself written as a maximization whose optimum is
    /// the negated dual minimum.
    pub fn dual(&self) -> LinearProgram {
        // min b·y  s.t.  A^T y (≥ for x_j ≥ 0, = for free x_j) c,
        // y_i ≥ 0 for ≤ rows, ≤ 0 for ≥ rows, free for = rows.
        // Substitute y_i = -y'_i on ≥ rows so every dual variable is ≥ 0 or free.
        let m = self.constraints.len();
        let sign = |r: Relation| if r == Relation::Ge { -1 } else { 1 };
        let mut dual = LinearProgram::new(m);
        for (i, c) in self.constraints.iter().enumerate() {
            dual.objective[i] = -(c.rhs.clone() * rational::int(sign(c.relation)));
            dual.free[i] = c.relation == Relation::Eq;
        }
        for j in 0..self.num_vars() {
            let coeffs =
                self.constraints.iter().map(|c| c.coeffs[j].clone() * rational::int(sign(c.relation))).collect();
            let rel = if self.free[j] { Relation::Eq } else { Relation::Ge };
            dual.add(coeffs, rel, self.objective[j].clone());
        }
        dual
    }
}

static AUDIT: AtomicBool = AtomicBool::new(false);
static SOLVED: AtomicU64 = AtomicU64::new(0);
static CERTIFIED: AtomicU64 = AtomicU64::new(0);
static MISMATCHED: AtomicU64 = AtomicU64::new(0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DualityStats {
    pub solved: u64,
    pub certified: u64,
    pub mismatched: u64,
}

pub fn set_duality_audit(on: bool) {
    AUDIT.store(on, Ordering::SeqCst);
}

pub fn duality_stats() -> DualityStats {
    DualityStats {
        solved: SOLVED.load(Ordering::SeqCst),
        certified: CERTIFIED.load(Ordering::SeqCst),
        mismatched: MISMATCHED.load(Ordering::SeqCst),
    }
}

/// Solves `lp` exactly.
pub fn solve_lp_exact(lp: &LinearProgram) -> Result<LpOutcome> {
    lp.check_dims()?;
    let out = solve_unaudited(lp);
    SOLVED.fetch_add(1, Ordering::Relaxed);
    if AUDIT.load(Ordering::Relaxed) {
        if strong_duality_holds(lp, &out) {
            CERTIFIED.fetch_add(1, Ordering::Relaxed);
        } else {
            MISMATCHED.fetch_add(1, Ordering::Relaxed);
        }
    }
    Ok(out)
}

/// Solves the dual and compares: equal optima, or the dual state matching
/// an infeasible/unbounded primal.
pub fn strong_duality_holds(lp: &LinearProgram, primal: &LpOutcome) -> bool {
    let dual = solve_unaudited(&lp.dual());
    match (primal, &dual) {
        (LpOutcome::Optimal { value, .. }, LpOutcome::Optimal { value: dv, .. }) => *value == -dv.clone(),
        (LpOutcome::Infeasible, LpOutcome::Infeasible | LpOutcome::Unbounded) => true,
        (LpOutcome::Unbounded, LpOutcome::Infeasible) => true,
        _ => false,
    }
}

fn solve_unaudited(lp: &LinearProgram) -> LpOutcome {
    // Split free variables into positive and negative parts.
    let mut cols: Vec<(usize, bool)> = Vec::new();
    for j in 0..lp.num_vars() {
        cols.push((j, false));
        if lp.free[j] {
            cols.push((j, true));
        }
    }
    let coef = |v: &Rational, neg: bool| if neg { -v.clone() } else { v.clone() };
    let objective: Vec<Rational> = cols.iter().map(|&(j, neg)| coef(&lp.objective[j], neg)).collect();
    let rows: Vec<(Vec<Rational>, Relation, Rational)> = lp
        .constraints
        .iter()
        .map(|c| {
            let mut a: Vec<Rational> = cols.iter().map(|&(j, neg)| coef(&c.coeffs[j], neg)).collect();
            let (mut rel, mut b) = (c.relation, c.rhs.clone());
            if b.is_negative() {
                a.iter_mut().for_each(|v| *v = -v.clone());
                b = -b;
                rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            (a, rel, b)
        })
        .collect();

    match Tableau::solve(&objective, rows) {
        Solved::Optimal(value, x) => {
            let mut out = vec![Rational::zero(); lp.num_vars()];
            for (k, &(j, neg)) in cols.iter().enumerate() {
                if neg {
                    out[j] -= &x[k];
                } else {
                    out[j] += &x[k];
                }
            }
            LpOutcome::Optimal { value, x: out }
        }
        Solved::Infeasible => LpOutcome::Infeasible,
        Solved::Unbounded => LpOutcome::Unbounded,
    }
}

enum Solved {
    Optimal(Rational, Vec<Rational>),
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    /// Columns barred from entering (artificials in phase two).
    barred: Vec<bool>,
}

impl Tableau {
    fn solve(objective: &[Rational], constraints: Vec<(Vec<Rational>, Relation, Rational)>) -> Solved {
        let n = objective.len();
        let m = constraints.len();
        let slack_count = constraints.iter().filter(|c| c.1 != Relation::Eq).count();
        let art_count = constraints.iter().filter(|c| c.1 != Relation::Le).count();
        let width = n + slack_count + art_count;
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut is_art = vec![false; width];
        let (mut next_slack, mut next_art) = (n, n + slack_count);
        for (a, rel, b) in constraints {
            let mut row = a;
            row.resize(width, Rational::zero());
            match rel {
                Relation::Le => {
                    row[next_slack] = rational::one();
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -rational::one();
                    next_slack += 1;
                    row[next_art] = rational::one();
                    is_art[next_art] = true;
                    basis.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = rational::one();
                    is_art[next_art] = true;
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            rows.push(row);
            rhs.push(b);
        }
        let mut t = Tableau { rows, rhs, basis, barred: vec![false; width] };

        if art_count > 0 {
            let phase1: Vec<Rational> =
                (0..width).map(|j| if is_art[j] { -rational::one() } else { Rational::zero() }).collect();
            match t.optimize(&phase1) {
                Some(v) if v.is_zero() => {}
                _ => return Solved::Infeasible,
            }
            t.evict_artificials(&is_art);
            for (j, art) in is_art.iter().enumerate() {
                t.barred[j] = *art;
            }
        }

        let mut full = objective.to_vec();
        full.resize(width, Rational::zero());
        match t.optimize(&full) {
            Some(value) => {
                let mut x = vec![Rational::zero(); n];
                for (i, &b) in t.basis.iter().enumerate() {
                    if b < n {
                        x[b] = t.rhs[i].clone();
                    }
                }
                Solved::Optimal(value, x)
            }
            None => Solved::Unbounded,
        }
    }

    /// Maximizes `c·x` from the current feasible basis. `None` if unbounded.
    fn optimize(&mut self, c: &[Rational]) -> Option<Rational> {
        let width = c.len();
        // reduced costs d_j = c_j - sum_i c_{B_i} a_ij
        let mut reduced: Vec<Rational> = c.to_vec();
        let mut value = Rational::zero();
        for (i, &b) in self.basis.iter().enumerate() {
            if c[b].is_zero() {
                continue;
            }
            for (r, a) in reduced.iter_mut().zip(&self.rows[i]) {
                if !a.is_zero() {
                    *r -= &c[b] * a;
                }
            }
            value += &c[b] * &self.rhs[i];
        }
        loop {
            // Bland: lowest-index improving column.
            let Some(enter) = (0..width).find(|&j| !self.barred[j] && reduced[j].is_positive()) else {
                return Some(value);
            };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][enter];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &leave {
                    None => true,
                    Some((k, best)) => ratio < *best || (ratio == *best && self.basis[i] < self.basis[*k]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let (row, _) = leave?;
            self.pivot(row, enter);
            let factor = reduced[enter].clone();
            for (r, a) in reduced.iter_mut().zip(&self.rows[row]) {
                if !a.is_zero() {
                    *r -= &factor * a;
                }
            }
            value += &factor * &self.rhs[row];
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col].clone();
        if !rational::one().eq(&p) {
            for v in self.rows[row].iter_mut() {
                if !v.is_zero() {
                    *v /= &p;
                }
            }
            self.rhs[row] /= &p;
        }
        let pivot_row = self.rows[row].clone();
        let pivot_rhs = self.rhs[row].clone();
        for i in 0..self.rows.len() {
            if i == row || self.rows[i][col].is_zero() {
                continue;
            }
            let f = self.rows[i][col].clone();
            for (j, v) in pivot_row.iter().enumerate() {
                if !v.is_zero() {
                    self.rows[i][j] -= &f * v;
                }
            }
            self.rhs[i] -= &f * &pivot_rhs;
        }
        self.basis[row] = col;
    }

    /// Pivots zero-level artificials out of the basis; drops redundant rows.
    fn evict_artificials(&mut self, is_art: &[bool]) {
        let mut i = 0;
        while i < self.rows.len() {
            if is_art[self.basis[i]] {
                match (0..is_art.len()).find(|&j| !is_art[j] && !self.rows[i][j].is_zero()) {
                    Some(j) => {
                        self.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        self.rows.remove(i);
                        self.rhs.remove(i);
                        self.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }
}
