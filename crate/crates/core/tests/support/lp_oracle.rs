//! Brute-force reference for small LPs: scan every free variable but the last
//! on a grid, and solve the last one exactly on each grid fiber.

use scorebounds_core::lp::{Constraint, LinearProgram, Objective, Sense};

pub const GRID_STEP: f64 = 1e-3;

/// Best objective over the grid, or `None` if no grid fiber is feasible.
pub fn grid_optimum(lp: &LinearProgram, step: f64) -> Option<f64> {
    let pinned: Vec<Option<f64>> =
        (0..lp.num_vars).map(|i| lp.fixed.iter().rev().find(|(k, _)| *k == i).map(|(_, v)| *v)).collect();
    let free: Vec<usize> = (0..lp.num_vars).filter(|&i| pinned[i].is_none()).collect();
    let sign = if lp.sense == Objective::Maximize { 1.0 } else { -1.0 };
    let mut point: Vec<f64> = pinned.iter().map(|v| v.unwrap_or(0.0)).collect();

    if free.is_empty() {
        let ok = lp.constraints.iter().all(|c| c.slack(&point) >= -1e-12);
        return ok.then(|| dot(&lp.objective, &point));
    }
    let (outer, last) = free.split_at(free.len() - 1);
    let last = last[0];
    let axes: Vec<Vec<f64>> = outer.iter().map(|&i| axis(lp.boxes[i], step)).collect();
    let mut best: Option<f64> = None;
    let mut idx = vec![0usize; outer.len()];
    loop {
        for (k, &i) in outer.iter().enumerate() {
            point[i] = axes[k][idx[k]];
        }
        if let Some(v) = fiber_best(lp, &mut point, last, sign) {
            let v = sign * v;
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
        // odometer over the outer grid
        let mut k = 0;
        loop {
            if k == outer.len() {
                return best.map(|b| sign * b);
            }
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn axis((lo, hi): (f64, f64), step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).floor() as usize;
    let mut v: Vec<f64> = (0..=n).map(|i| lo + i as f64 * step).filter(|x| *x <= hi).collect();
    if v.last().is_none_or(|x| *x < hi) {
        v.push(hi);
    }
    v
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Exact optimum of the objective over the last variable, others held.
fn fiber_best(lp: &LinearProgram, point: &mut [f64], last: usize, sign: f64) -> Option<f64> {
    let (mut lo, mut hi) = lp.boxes[last];
    for c in &lp.constraints {
        point[last] = 0.0;
        let rest = dot(&c.coeffs, point);
        let a = c.coeffs[last];
        // a t + rest (>= | <=) rhs
        let (a, bound) = match c.sense {
            Sense::Ge => (a, c.rhs - rest),
            Sense::Le => (-a, rest - c.rhs),
        };
        // a t >= bound
        if a.abs() < 1e-14 {
            if bound > 1e-12 {
                return None;
            }
        } else if a > 0.0 {
            lo = lo.max(bound / a);
        } else {
            hi = hi.min(bound / a);
        }
    }
    if lo > hi + 1e-12 {
        return None;
    }
    let r = lp.objective[last];
    point[last] = if sign * r >= 0.0 { hi } else { lo };
    let ok = lp.constraints.iter().all(|c: &Constraint| c.slack(point) >= -1e-9);
    ok.then(|| dot(&lp.objective, point))
}
