//! Small dense linear programs with finite boxes on every free variable.
//!
//! After fixed variables are substituted out, every constraint (including
//! both sides of each box) is written as `g'x <= h` and the LP
//! `max c'x` is attacked through its dual `min h'λ, G'λ = c, λ >= 0` with a
//! revised simplex. The box rows give a feasible starting dual basis, so no
//! phase one is needed: the initial basis picks the upper box row for
//! `c_i >= 0` and the lower one otherwise. Each basis defines a primal vertex;
//! a violated row enters, and an empty ratio test certifies that the primal
//! is infeasible. When the loop stops, the vertex is primal feasible and the
//! multipliers are dual feasible, so the two objectives agree.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Absolute tolerance on constraint slack.
pub const FEAS_TOL: f64 = 1e-9;
/// Smallest ratio-test pivot accepted.
pub const PIVOT_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Sense {
    /// `a'b >= rhs`
    Ge,
    /// `a'b <= rhs`
    Le,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Objective {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn ge(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self { coeffs, sense: Sense::Ge, rhs }
    }

    pub fn le(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self { coeffs, sense: Sense::Le, rhs }
    }

    /// Signed slack: nonnegative iff the point satisfies the row.
    pub fn slack(&self, b: &[f64]) -> f64 {
        let lhs: f64 = self.coeffs.iter().zip(b).map(|(a, x)| a * x).sum();
        match self.sense {
            Sense::Ge => lhs - self.rhs,
            Sense::Le => self.rhs - lhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearProgram {
    pub num_vars: usize,
    /// `(index, value)` pairs; pinned variables ignore their box.
    pub fixed: Vec<(usize, f64)>,
    pub boxes: Vec<(f64, f64)>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<f64>,
    pub sense: Objective,
}

impl LinearProgram {
    /// A program with the same box on every variable and no rows yet.
    pub fn new(num_vars: usize, lo: f64, hi: f64, objective: Vec<f64>, sense: Objective) -> Self {
        Self { num_vars, fixed: Vec::new(), boxes: vec![(lo, hi); num_vars], constraints: Vec::new(), objective, sense }
    }

    pub fn fix(mut self, index: usize, value: f64) -> Self {
        self.fixed.push((index, value));
        self
    }

    pub fn with_constraint(mut self, c: Constraint) -> Self {
        self.constraints.push(c);
        self
    }

    fn fixed_value(&self, i: usize) -> Option<f64> {
        self.fixed.iter().rev().find(|(k, _)| *k == i).map(|(_, v)| *v)
    }

    fn validate(&self) -> Result<()> {
        let q = self.num_vars;
        if self.objective.len() != q {
            return Err(Error::DimensionMismatch { expected: q, actual: self.objective.len() });
        }
        if self.boxes.len() != q {
            return Err(Error::DimensionMismatch { expected: q, actual: self.boxes.len() });
        }
        for c in &self.constraints {
            if c.coeffs.len() != q {
                return Err(Error::DimensionMismatch { expected: q, actual: c.coeffs.len() });
            }
            if c.coeffs.iter().any(|a| !a.is_finite()) || !c.rhs.is_finite() {
                return Err(Error::validation("constraint has a non-finite coefficient"));
            }
        }
        if self.objective.iter().any(|r| !r.is_finite()) {
            return Err(Error::validation("objective has a non-finite coefficient"));
        }
        for &(i, v) in &self.fixed {
            if i >= q {
                return Err(Error::validation("fixed variable index out of range"));
            }
            if !v.is_finite() {
                return Err(Error::Domain { name: "fixed value", value: v });
            }
        }
        for (i, &(lo, hi)) in self.boxes.iter().enumerate() {
            if self.fixed_value(i).is_some() {
                continue;
            }
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::validation("every free variable needs a finite box with lo <= hi"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Status {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LpResult {
    pub status: Status,
    /// Optimal value; NaN when infeasible.
    pub value: f64,
    /// Optimal point in the original variables; empty when infeasible.
    pub witness: Vec<f64>,
    /// Objective of the dual certificate (equal to `value` at optimum).
    pub dual_value: f64,
    /// True when a box side carries a positive multiplier, i.e. widening
    /// the box would move the optimum.
    pub box_binding: bool,
    pub pivots: usize,
}

impl LpResult {
    fn infeasible(pivots: usize) -> Self {
        Self {
            status: Status::Infeasible,
            value: f64::NAN,
            witness: Vec::new(),
            dual_value: f64::NAN,
            box_binding: false,
            pivots,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

/// Dense LU factorization with partial pivoting.
struct Lu {
    n: usize,
    a: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(n: usize, mut a: Vec<f64>) -> Option<Self> {
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))?;
            if a[p * n + k].abs() < 1e-13 {
                return None;
            }
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                a[i * n + k] = f;
                for c in k + 1..n {
                    a[i * n + c] -= f * a[k * n + c];
                }
            }
        }
        Some(Self { n, a, perm })
    }

    /// Solve `A x = b`.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.a[i * n + k] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.a[i * n + k] * x[k];
            }
            x[i] /= self.a[i * n + i];
        }
        x
    }

    /// Solve `A' y = b`.
    fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut z = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                z[i] -= self.a[k * n + i] * z[k];
            }
            z[i] /= self.a[i * n + i];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                z[i] -= self.a[k * n + i] * z[k];
            }
        }
        let mut y = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            y[p] = z[i];
        }
        y
    }
}

/// Reduced problem `max c'x s.t. g_i'x <= h_i` over the free variables.
struct Reduced {
    k: usize,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    /// Number of leading rows that come from boxes (two per variable).
    box_rows: usize,
}

impl Reduced {
    fn dot(&self, i: usize, x: &[f64]) -> f64 {
        self.rows[i].iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

/// Solve the program to global optimality.
pub fn solve(lp: &LinearProgram) -> Result<LpResult> {
    lp.validate()?;
    let pinned: Vec<Option<f64>> = (0..lp.num_vars).map(|i| lp.fixed_value(i)).collect();
    let free: Vec<usize> = (0..lp.num_vars).filter(|&i| pinned[i].is_none()).collect();
    let full_point = |x: &[f64]| -> Vec<f64> {
        let mut out: Vec<f64> = pinned.iter().map(|v| v.unwrap_or(0.0)).collect();
        for (pos, &i) in free.iter().enumerate() {
            out[i] = x[pos];
        }
        out
    };
    let sign = match lp.sense {
        Objective::Maximize => 1.0,
        Objective::Minimize => -1.0,
    };
    let k = free.len();

    let mut rows = Vec::with_capacity(2 * k + lp.constraints.len());
    let mut rhs = Vec::with_capacity(rows.capacity());
    for (pos, &i) in free.iter().enumerate() {
        let (lo, hi) = lp.boxes[i];
        let mut up = vec![0.0; k];
        up[pos] = 1.0;
        rows.push(up);
        rhs.push(hi);
        let mut down = vec![0.0; k];
        down[pos] = -1.0;
        rows.push(down);
        rhs.push(-lo);
    }
    for c in &lp.constraints {
        let offset: f64 = pinned.iter().zip(&c.coeffs).filter_map(|(v, a)| v.map(|v| a * v)).sum();
        let flip = match c.sense {
            Sense::Le => 1.0,
            Sense::Ge => -1.0,
        };
        let g: Vec<f64> = free.iter().map(|&i| flip * c.coeffs[i]).collect();
        let h = flip * (c.rhs - offset);
        if g.iter().all(|a| *a == 0.0) {
            if h < -FEAS_TOL {
                return Ok(LpResult::infeasible(0));
            }
            continue;
        }
        rows.push(g);
        rhs.push(h);
    }
    let red = Reduced { k, rows, rhs, box_rows: 2 * k };

    let constant: f64 = pinned.iter().zip(&lp.objective).filter_map(|(v, r)| v.map(|v| r * v)).sum();
    let c: Vec<f64> = free.iter().map(|&i| sign * lp.objective[i]).collect();

    if k == 0 {
        // every row was checked above
        let witness = full_point(&[]);
        let value: f64 = lp.objective.iter().zip(&witness).map(|(r, b)| r * b).sum();
        return Ok(LpResult {
            status: Status::Optimal,
            value,
            witness,
            dual_value: value,
            box_binding: false,
            pivots: 0,
        });
    }

    match dual_simplex(&red, &c)? {
        None => Ok(LpResult::infeasible(0)),
        Some(sol) => {
            let witness = full_point(&sol.x);
            let value: f64 = lp.objective.iter().zip(&witness).map(|(r, b)| r * b).sum();
            let dual_value = sign * sol.dual + constant;
            Ok(LpResult {
                status: Status::Optimal,
                value,
                witness,
                dual_value,
                box_binding: sol.box_binding,
                pivots: sol.pivots,
            })
        }
    }
}

struct Solution {
    x: Vec<f64>,
    dual: f64,
    box_binding: bool,
    pivots: usize,
}

fn dual_simplex(red: &Reduced, c: &[f64]) -> Result<Option<Solution>> {
    let k = red.k;
    let m = red.rows.len();
    let mut basis: Vec<usize> = (0..k).map(|i| if c[i] >= 0.0 { 2 * i } else { 2 * i + 1 }).collect();
    let mut in_basis = vec![false; m];
    for &b in &basis {
        in_basis[b] = true;
    }
    let norms: Vec<f64> = red.rows.iter().map(|g| libm::sqrt(g.iter().map(|a| a * a).sum::<f64>())).collect();

    let bland_after = 10 * (k + m);
    let limit = 50 * (k + m) + 1000;
    let mut pivots = 0;
    loop {
        // column j of B is row basis[j]; store B row-major
        let mut bmat = vec![0.0; k * k];
        for (j, &r) in basis.iter().enumerate() {
            for i in 0..k {
                bmat[i * k + j] = red.rows[r][i];
            }
        }
        let lu = Lu::factor(k, bmat).ok_or(Error::Numerical("singular simplex basis"))?;
        let lambda: Vec<f64> = lu.solve(c).into_iter().map(|v| v.max(0.0)).collect();
        let h_b: Vec<f64> = basis.iter().map(|&r| red.rhs[r]).collect();
        let x = lu.solve_transpose(&h_b);

        let bland = pivots >= bland_after;
        let mut entering: Option<(usize, f64)> = None;
        for r in 0..m {
            if in_basis[r] {
                continue;
            }
            let slack = red.rhs[r] - red.dot(r, &x);
            if slack >= -FEAS_TOL {
                continue;
            }
            if bland {
                entering = Some((r, slack));
                break;
            }
            let score = slack / norms[r];
            if entering.is_none_or(|(_, best)| score < best) {
                entering = Some((r, score));
            }
        }
        let Some((e, _)) = entering else {
            let dual: f64 = basis.iter().zip(&lambda).map(|(&r, l)| red.rhs[r] * l).sum();
            let box_binding = basis.iter().zip(&lambda).any(|(&r, &l)| r < red.box_rows && l > 1e-12);
            return Ok(Some(Solution { x, dual, box_binding, pivots }));
        };

        if pivots >= limit {
            return Err(Error::IterationLimit { limit });
        }
        let w = lu.solve(&red.rows[e]);
        let mut leave: Option<(usize, f64)> = None;
        for (pos, (&wi, &li)) in w.iter().zip(&lambda).enumerate() {
            if wi <= PIVOT_TOL {
                continue;
            }
            let ratio = li / wi;
            let better = match leave {
                None => true,
                Some((best_pos, best)) => {
                    if bland {
                        ratio < best || (ratio == best && basis[pos] < basis[best_pos])
                    } else {
                        ratio < best || (ratio == best && wi > w[best_pos])
                    }
                }
            };
            if better {
                leave = Some((pos, ratio));
            }
        }
        let Some((pos, _)) = leave else {
            return Ok(None);
        };
        in_basis[basis[pos]] = false;
        in_basis[e] = true;
        basis[pos] = e;
        pivots += 1;
    }
}
