//! Sign screening and the two linear programs that bound `r'β`.

use alloc::vec::Vec;

use crate::confidence::Region;
use crate::data::GroupedData;
use crate::error::{Error, Result};
use crate::lp::{solve, Constraint, LinearProgram, Objective, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Direction {
    Positive,
    Negative,
    Skipped,
}

impl Direction {
    /// Population direction from an exact sign of `g₀`.
    pub fn from_sign(g: f64) -> Self {
        if g > 0.0 {
            Direction::Positive
        } else if g < 0.0 {
            Direction::Negative
        } else {
            Direction::Skipped
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Screening {
    pub directions: Vec<Direction>,
}

impl Screening {
    pub fn count(&self, d: Direction) -> usize {
        self.directions.iter().filter(|x| **x == d).count()
    }
}

/// Keep group `j` as a constraint only when `ĝ_j ± ŝ_j` excludes zero.
/// Ties at the threshold are skipped.
pub fn screen(g_hat: &[f64], s: &[f64]) -> Result<Screening> {
    if g_hat.len() != s.len() {
        return Err(Error::DimensionMismatch { expected: g_hat.len(), actual: s.len() });
    }
    let directions = g_hat
        .iter()
        .zip(s)
        .map(|(&g, &s)| {
            if g - s > 0.0 {
                Direction::Positive
            } else if g + s < 0.0 {
                Direction::Negative
            } else {
                Direction::Skipped
            }
        })
        .collect();
    Ok(Screening { directions })
}

/// Target, parameter box, normalization, and margin for one bound problem.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundsSpec {
    pub target: Vec<f64>,
    /// Box applied to every free coefficient.
    pub bounds: (f64, f64),
    /// Coefficient pinned to +1.
    pub normalized_index: usize,
    pub epsilon: f64,
    /// First coefficient of the interval-observed block, whose entries are
    /// restricted to be nonnegative. `None` for fully observed covariates.
    pub monotone_from: Option<usize>,
}

impl BoundsSpec {
    pub const DEFAULT_BOX: (f64, f64) = (-10.0, 10.0);

    pub fn new(target: Vec<f64>) -> Self {
        Self { target, bounds: Self::DEFAULT_BOX, normalized_index: 0, epsilon: 0.0, monotone_from: None }
    }

    /// Spec for `q` point-observed and some interval-observed covariates,
    /// normalizing the first interval coefficient.
    pub fn interval(target: Vec<f64>, q: usize) -> Self {
        Self { normalized_index: q, monotone_from: Some(q), ..Self::new(target) }
    }

    pub fn with_box(mut self, lo: f64, hi: f64) -> Self {
        self.bounds = (lo, hi);
        self
    }

    pub fn with_normalized(mut self, index: usize) -> Self {
        self.normalized_index = index;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn dim(&self) -> usize {
        self.target.len()
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.target.len();
        if self.target.iter().all(|r| *r == 0.0) {
            return Err(Error::validation("target vector is all zeros"));
        }
        if self.target.iter().any(|r| !r.is_finite()) {
            return Err(Error::validation("target vector has a non-finite entry"));
        }
        if self.normalized_index >= q {
            return Err(Error::validation("normalized coefficient index out of range"));
        }
        let (lo, hi) = self.bounds;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::validation("box needs finite endpoints with lo <= hi"));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Domain { name: "epsilon", value: self.epsilon });
        }
        if self.monotone_from.is_some_and(|m| m >= q) {
            return Err(Error::validation("interval coefficient block out of range"));
        }
        Ok(())
    }

    fn program(&self, rows: &[Constraint], objective: Vec<f64>, sense: Objective) -> LinearProgram {
        let q = self.dim();
        let (lo, hi) = self.bounds;
        let boxes = (0..q)
            .map(|i| match self.monotone_from {
                Some(m) if i >= m => (lo.max(0.0), hi),
                _ => (lo, hi),
            })
            .collect();
        LinearProgram {
            num_vars: q,
            fixed: alloc::vec![(self.normalized_index, 1.0)],
            boxes,
            constraints: rows.to_vec(),
            objective,
            sense,
        }
    }
}

/// One row per non-skipped group: `x_j'b >= ε` (Positive) or
/// `x_j'b <= -ε` (Negative).
pub fn build_constraints(support: &[Vec<f64>], screening: &Screening, spec: &BoundsSpec) -> Result<Vec<Constraint>> {
    if support.len() != screening.directions.len() {
        return Err(Error::DimensionMismatch { expected: support.len(), actual: screening.directions.len() });
    }
    let q = spec.dim();
    let mut rows = Vec::new();
    for (x, d) in support.iter().zip(&screening.directions) {
        if x.len() != q {
            return Err(Error::DimensionMismatch { expected: q, actual: x.len() });
        }
        match d {
            Direction::Positive => rows.push(Constraint::ge(x.clone(), spec.epsilon)),
            Direction::Negative => rows.push(Constraint::le(x.clone(), -spec.epsilon)),
            Direction::Skipped => {}
        }
    }
    Ok(rows)
}

/// A support point with interval-observed covariates `v0 <= v <= v1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalPoint {
    pub x: Vec<f64>,
    pub v0: Vec<f64>,
    pub v1: Vec<f64>,
}

/// Interval-covariate rows: a Positive group uses the upper endpoint `v1`,
/// a Negative group the lower endpoint `v0`. With monotone (nonnegative)
/// `δ` these are the sharp implications of each sign.
pub fn build_constraints_interval(
    support: &[IntervalPoint],
    screening: &Screening,
    spec: &BoundsSpec,
) -> Result<Vec<Constraint>> {
    let mut points = Vec::with_capacity(support.len());
    let mut lower = Vec::with_capacity(support.len());
    for (i, p) in support.iter().enumerate() {
        if p.v0.len() != p.v1.len() {
            return Err(Error::DimensionMismatch { expected: p.v0.len(), actual: p.v1.len() });
        }
        if p.v0.iter().zip(&p.v1).any(|(a, b)| a > b) {
            return Err(Error::validation(alloc::format!(
                "support point {i}: interval lower endpoint exceeds upper endpoint"
            )));
        }
        let mut hi = p.x.clone();
        hi.extend_from_slice(&p.v1);
        let mut lo = p.x.clone();
        lo.extend_from_slice(&p.v0);
        points.push(hi);
        lower.push(lo);
    }
    let mut rows = build_constraints(&points, screening, spec)?;
    let mut r = 0;
    for (d, lo) in screening.directions.iter().zip(lower) {
        match d {
            Direction::Positive => r += 1,
            Direction::Negative => {
                rows[r].coeffs = lo;
                r += 1;
            }
            Direction::Skipped => {}
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundInterval {
    pub lower: f64,
    pub upper: f64,
    pub lower_status: Status,
    pub upper_status: Status,
    /// Whether the lower endpoint is held by the parameter box.
    pub lower_binding: bool,
    pub upper_binding: bool,
}

impl BoundInterval {
    pub fn is_feasible(&self) -> bool {
        self.lower_status == Status::Optimal && self.upper_status == Status::Optimal
    }

    /// `[self] ⊇ [inner]` up to `tol`.
    pub fn contains(&self, inner: &BoundInterval, tol: f64) -> bool {
        self.lower <= inner.lower + tol && inner.upper <= self.upper + tol
    }
}

/// Minimize `r_lo'b` and maximize `r_hi'b` over the given rows and the box.
/// With `r_lo = r_hi = r` this is the identified-interval estimate.
pub fn bound_rows(rows: &[Constraint], spec: &BoundsSpec, r_lo: &[f64], r_hi: &[f64]) -> Result<BoundInterval> {
    spec.validate()?;
    let min = solve(&spec.program(rows, r_lo.to_vec(), Objective::Minimize))?;
    let max = solve(&spec.program(rows, r_hi.to_vec(), Objective::Maximize))?;
    Ok(BoundInterval {
        lower: min.value,
        upper: max.value,
        lower_status: min.status,
        upper_status: max.status,
        lower_binding: min.box_binding,
        upper_binding: max.box_binding,
    })
}

/// Support points of the grouped data, as used by the builders.
pub fn support_points(grouped: &GroupedData) -> Vec<IntervalPoint> {
    grouped.groups.iter().map(|g| IntervalPoint { x: g.x.clone(), v0: g.v_lo.clone(), v1: g.v_hi.clone() }).collect()
}

/// Screened rows for the grouped data; interval rows when the data carry
/// interval-observed covariates.
pub fn screened_rows(grouped: &GroupedData, region: &Region, spec: &BoundsSpec) -> Result<Vec<Constraint>> {
    let screening = screen(&region.g_hat, &region.halfwidths.s)?;
    let support = support_points(grouped);
    if grouped.qv > 0 {
        build_constraints_interval(&support, &screening, spec)
    } else {
        let points: Vec<Vec<f64>> = support.into_iter().map(|p| p.x).collect();
        build_constraints(&points, &screening, spec)
    }
}

/// `[ĉ_L, ĉ_U]` for `spec.target`.
pub fn bound_interval(grouped: &GroupedData, region: &Region, spec: &BoundsSpec) -> Result<BoundInterval> {
    let rows = screened_rows(grouped, region, spec)?;
    bound_rows(&rows, spec, &spec.target, &spec.target)
}
