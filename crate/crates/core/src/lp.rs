//! Exact rational linear programming over `{x : A x = b, x >= 0}`.
//!
//! Dense two-phase tableau simplex with Bland's rule. Rows are first
//! reduced to an independent set by exact elimination; an inconsistent row
//! or a positive phase-one optimum yields a Farkas certificate `y` with
//! `yᵀA <= 0` componentwise and `yᵀb > 0`.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{format_rational, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpRow {
    pub coeffs: Vec<Rational>,
    pub rhs: Rational,
    pub label: String,
}

/// Equality-constrained problem over nonnegative variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpProblem {
    pub columns: usize,
    pub rows: Vec<LpRow>,
}

impl LpProblem {
    pub fn new(columns: usize) -> Self {
        LpProblem { columns, rows: Vec::new() }
    }

    pub fn add_row(&mut self, coeffs: Vec<Rational>, rhs: Rational, label: impl Into<String>) {
        assert_eq!(coeffs.len(), self.columns, "row width must match the column count");
        self.rows.push(LpRow { coeffs, rhs, label: label.into() });
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpSolution {
    pub value: Rational,
    pub x: Vec<Rational>,
}

/// Multipliers, one per problem row, proving that no `x >= 0` satisfies
/// the constraints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub multipliers: Vec<Rational>,
}

impl Certificate {
    /// Checks `yᵀA <= 0` and `yᵀb > 0` exactly.
    pub fn verify(&self, problem: &LpProblem) -> bool {
        if self.multipliers.len() != problem.rows.len() {
            return false;
        }
        let combined_rhs: Rational = problem
            .rows
            .iter()
            .zip(&self.multipliers)
            .map(|(r, y)| &r.rhs * y)
            .sum();
        if !combined_rhs.is_positive() {
            return false;
        }
        (0..problem.columns).all(|j| {
            let s: Rational = problem
                .rows
                .iter()
                .zip(&self.multipliers)
                .filter(|(_, y)| !y.is_zero())
                .map(|(r, y)| &r.coeffs[j] * y)
                .sum();
            !s.is_positive()
        })
    }

    /// Human-readable combination of the contradicting rows.
    pub fn describe(&self, problem: &LpProblem) -> String {
        let parts: Vec<String> = problem
            .rows
            .iter()
            .zip(&self.multipliers)
            .filter(|(_, y)| !y.is_zero())
            .map(|(r, y)| format!("({}) x [{}]", format_rational(y), r.label))
            .collect();
        let rhs: Rational = problem
            .rows
            .iter()
            .zip(&self.multipliers)
            .map(|(r, y)| &r.rhs * y)
            .sum();
        format!(
            "{} has a nonpositive left side on every nonnegative point but right side {}",
            parts.join(" + "),
            format_rational(&rhs)
        )
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.multipliers.iter().map(format_rational).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// A problem brought to a feasible basis, ready to optimize any number of
/// objectives. Each objective starts from the same basis, so results do
/// not depend on the order of queries.
#[derive(Clone, Debug)]
pub struct Simplex {
    columns: usize,
    /// `rows x (columns + 1)`; the last entry of each row is its value.
    tableau: Vec<Vec<Rational>>,
    basis: Vec<usize>,
}

fn pivot(tableau: &mut [Vec<Rational>], cost: &mut [Rational], row: usize, col: usize) {
    let p = tableau[row][col].clone();
    if !p.is_one() {
        for e in tableau[row].iter_mut().filter(|e| !e.is_zero()) {
            *e /= &p;
        }
    }
    let nz: Vec<usize> = (0..tableau[row].len()).filter(|&j| !tableau[row][j].is_zero()).collect();
    let pivot_row = tableau[row].clone();
    let eliminate = |target: &mut [Rational]| {
        let f = target[col].clone();
        if f.is_zero() {
            return;
        }
        for &j in &nz {
            target[j] -= &f * &pivot_row[j];
        }
    };
    for (i, r) in tableau.iter_mut().enumerate() {
        if i != row {
            eliminate(r);
        }
    }
    eliminate(cost);
}

/// Runs Bland's rule minimizing the objective whose reduced costs are in
/// `cost` (last entry holds minus the objective value). Only the first
/// `eligible` columns may enter. Returns false when unbounded.
fn run(tableau: &mut [Vec<Rational>], basis: &mut [usize], cost: &mut [Rational], eligible: usize) -> bool {
    let rhs = cost.len() - 1;
    loop {
        let Some(col) = (0..eligible).find(|&j| cost[j].is_negative()) else {
            return true;
        };
        let mut best: Option<(usize, Rational)> = None;
        for (i, row) in tableau.iter().enumerate() {
            if !row[col].is_positive() {
                continue;
            }
            let ratio = &row[rhs] / &row[col];
            let better = match &best {
                None => true,
                Some((bi, br)) => ratio < *br || (ratio == *br && basis[i] < basis[*bi]),
            };
            if better {
                best = Some((i, ratio));
            }
        }
        let Some((row, _)) = best else {
            return false;
        };
        pivot(tableau, cost, row, col);
        basis[row] = col;
    }
}

impl Simplex {
    /// Phase one. Fails with a verified certificate when infeasible.
    pub fn new(problem: &LpProblem) -> std::result::Result<Simplex, Certificate> {
        let n = problem.columns;
        let m0 = problem.rows.len();
        // Exact elimination keeping, for each surviving row, the combination
        // of original rows it came from.
        let mut kept: Vec<(Vec<Rational>, Vec<Rational>)> = Vec::new();
        let mut pivots: Vec<usize> = Vec::new();
        for (i, row) in problem.rows.iter().enumerate() {
            let mut vals: Vec<Rational> = row.coeffs.clone();
            vals.push(row.rhs.clone());
            let mut comb = vec![Rational::zero(); m0];
            comb[i] = Rational::one();
            for ((kv, kc), &pc) in kept.iter().zip(&pivots) {
                let f = vals[pc].clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..=n {
                    if !kv[j].is_zero() {
                        vals[j] -= &f * &kv[j];
                    }
                }
                for j in 0..m0 {
                    if !kc[j].is_zero() {
                        comb[j] -= &f * &kc[j];
                    }
                }
            }
            match (0..n).find(|&j| !vals[j].is_zero()) {
                Some(pc) => {
                    let p = vals[pc].clone();
                    vals.iter_mut().for_each(|v| *v /= &p);
                    comb.iter_mut().for_each(|v| *v /= &p);
                    // keep earlier rows reduced in this column
                    for (kv, kc) in kept.iter_mut() {
                        let f = kv[pc].clone();
                        if f.is_zero() {
                            continue;
                        }
                        for j in 0..=n {
                            if !vals[j].is_zero() {
                                kv[j] -= &f * &vals[j];
                            }
                        }
                        for j in 0..m0 {
                            if !comb[j].is_zero() {
                                kc[j] -= &f * &comb[j];
                            }
                        }
                    }
                    kept.push((vals, comb));
                    pivots.push(pc);
                }
                None if vals[n].is_zero() => {}
                None => {
                    let sign = if vals[n].is_positive() { Rational::one() } else { -Rational::one() };
                    let cert = Certificate { multipliers: comb.into_iter().map(|c| c * &sign).collect() };
                    debug_assert!(cert.verify(problem));
                    return Err(cert);
                }
            }
        }

        // The reduced system is in row echelon form with unit pivots, so its
        // pivot columns already form a basis; phase one is only needed to
        // repair negative values.
        let m = kept.len();
        let mut tableau: Vec<Vec<Rational>> = Vec::with_capacity(m);
        let mut combs = Vec::with_capacity(m);
        for (mut vals, mut comb) in kept {
            if vals[n].is_negative() {
                vals.iter_mut().for_each(|v| *v = -v.clone());
                comb.iter_mut().for_each(|v| *v = -v.clone());
            }
            // insert artificial columns between the structural ones and rhs
            let rhs = vals.pop().expect("row has a value entry");
            vals.extend(std::iter::repeat_n(Rational::zero(), m));
            vals.push(rhs);
            tableau.push(vals);
            combs.push(comb);
        }
        for (i, row) in tableau.iter_mut().enumerate() {
            row[n + i] = Rational::one();
        }
        let width = n + m + 1;
        let mut cost = vec![Rational::zero(); width];
        for row in &tableau {
            for j in (0..n).chain(std::iter::once(width - 1)) {
                if !row[j].is_zero() {
                    cost[j] -= &row[j];
                }
            }
        }
        let mut basis: Vec<usize> = (n..n + m).collect();
        run(&mut tableau, &mut basis, &mut cost, n);
        let phase1 = -cost[width - 1].clone();
        if phase1.is_positive() {
            // dual of reduced row i is 1 - reduced cost of its artificial
            let mut multipliers = vec![Rational::zero(); m0];
            for (i, comb) in combs.iter().enumerate() {
                let pi = Rational::one() - &cost[n + i];
                if pi.is_zero() {
                    continue;
                }
                for (y, c) in multipliers.iter_mut().zip(comb) {
                    if !c.is_zero() {
                        *y += &pi * c;
                    }
                }
            }
            let cert = Certificate { multipliers };
            debug_assert!(cert.verify(problem));
            return Err(cert);
        }
        // drive zero-level artificials out of the basis
        for i in 0..m {
            if basis[i] >= n {
                let col = (0..n)
                    .find(|&j| !tableau[i][j].is_zero())
                    .expect("independent rows keep a structural entry");
                let mut dummy = vec![Rational::zero(); width];
                pivot(&mut tableau, &mut dummy, i, col);
                basis[i] = col;
            }
        }
        for row in tableau.iter_mut() {
            let rhs = row.pop().expect("row has a value entry");
            row.truncate(n);
            row.push(rhs);
        }
        Ok(Simplex { columns: n, tableau, basis })
    }

    /// The basic feasible point found by phase one.
    pub fn feasible_point(&self) -> Vec<Rational> {
        let mut x = vec![Rational::zero(); self.columns];
        for (row, &b) in self.tableau.iter().zip(&self.basis) {
            x[b] = row[self.columns].clone();
        }
        x
    }

    /// Optimal value and vertex for `objective`. Errors only if unbounded.
    pub fn optimize(&self, objective: &[Rational], sense: Sense) -> Result<LpSolution> {
        let n = self.columns;
        assert_eq!(objective.len(), n, "objective width must match the column count");
        let c: Vec<Rational> = match sense {
            Sense::Min => objective.to_vec(),
            Sense::Max => objective.iter().map(|v| -v.clone()).collect(),
        };
        let mut tableau = self.tableau.clone();
        let mut basis = self.basis.clone();
        let mut cost: Vec<Rational> = c.clone();
        cost.push(Rational::zero());
        for (row, &b) in tableau.iter().zip(&basis) {
            let cb = &c[b];
            if cb.is_zero() {
                continue;
            }
            for j in 0..=n {
                if !row[j].is_zero() {
                    cost[j] -= cb * &row[j];
                }
            }
        }
        if !run(&mut tableau, &mut basis, &mut cost, n) {
            return Err(Error::Internal("linear program is unbounded".into()));
        }
        let mut x = vec![Rational::zero(); n];
        for (row, &b) in tableau.iter().zip(&basis) {
            x[b] = row[n].clone();
        }
        let value: Rational = x.iter().zip(objective).map(|(a, b)| a * b).sum();
        Ok(LpSolution { value, x })
    }
}

/// One-shot solve. Infeasibility is reported with the certificate spelled
/// out over the row labels.
pub fn lp_solve(problem: &LpProblem, objective: &[Rational], sense: Sense) -> Result<LpSolution> {
    let simplex = Simplex::new(problem).map_err(|c| Error::Infeasible(c.describe(problem)))?;
    simplex.optimize(objective, sense)
}
