//! Minimax abstention and minimax-regret randomized classification.

use alloc::format;

use crate::bounds::BoundInterval;
use crate::error::{Error, Result};

/// Endpoints within this distance of zero are treated as zero, so LP
/// round-off never turns an exactly-zero endpoint into a signed one.
pub const DECISION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Action {
    One,
    Zero,
    Abstain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Decision {
    pub outcome: Action,
    /// The external bit, when the rule had to fall back on it.
    pub draw_used: Option<u8>,
}

/// `C_b` (correct), `C_∅` (abstain), `C` (wrong).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CostTriple {
    pub c_base: f64,
    pub c_abstain: f64,
    pub c_wrong: f64,
}

impl CostTriple {
    pub fn new(c_base: f64, c_abstain: f64, c_wrong: f64) -> Self {
        Self { c_base, c_abstain, c_wrong }
    }

    /// `0 <= C_b < C_∅ < C < ∞`.
    pub fn validate_abstention(&self) -> Result<()> {
        let ok = 0.0 <= self.c_base
            && self.c_base < self.c_abstain
            && self.c_abstain < self.c_wrong
            && self.c_wrong.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::validation(format!(
                "costs must satisfy 0 <= C_b < C_abstain < C < inf, got ({}, {}, {})",
                self.c_base, self.c_abstain, self.c_wrong
            )))
        }
    }

    /// `0 <= C_b < C < ∞`.
    pub fn validate_randomized(&self) -> Result<()> {
        if 0.0 <= self.c_base && self.c_base < self.c_wrong && self.c_wrong.is_finite() {
            Ok(())
        } else {
            Err(Error::validation(format!(
                "costs must satisfy 0 <= C_b < C < inf, got ({}, {})",
                self.c_base, self.c_wrong
            )))
        }
    }
}

fn certified_positive(iv: &BoundInterval) -> bool {
    iv.lower > DECISION_TOL
}

fn certified_negative(iv: &BoundInterval) -> bool {
    iv.upper < -DECISION_TOL
}

fn require_feasible(iv: &BoundInterval) -> Result<()> {
    if iv.is_feasible() {
        Ok(())
    } else {
        Err(Error::EmptyFeasibleSet)
    }
}

/// Classify 1 when the whole interval is positive, 0 when it is negative,
/// abstain otherwise (including zero endpoints).
pub fn classify_abstain(iv: &BoundInterval) -> Result<Decision> {
    require_feasible(iv)?;
    let outcome = if certified_positive(iv) {
        Action::One
    } else if certified_negative(iv) {
        Action::Zero
    } else {
        Action::Abstain
    };
    Ok(Decision { outcome, draw_used: None })
}

/// As [`classify_abstain`], but an unsigned interval is resolved by the
/// caller's fair bit.
pub fn classify_random(iv: &BoundInterval, r_bit: u8) -> Result<Decision> {
    require_feasible(iv)?;
    if r_bit > 1 {
        return Err(Error::validation("randomization bit must be 0 or 1"));
    }
    Ok(if certified_positive(iv) {
        Decision { outcome: Action::One, draw_used: None }
    } else if certified_negative(iv) {
        Decision { outcome: Action::Zero, draw_used: None }
    } else {
        let outcome = if r_bit == 1 { Action::One } else { Action::Zero };
        Decision { outcome, draw_used: Some(r_bit) }
    })
}

/// Loss under the least favorable sign of `β'x` consistent with `iv`.
pub fn worst_case_loss(action: Action, iv: &BoundInterval, costs: &CostTriple) -> f64 {
    let pos = certified_positive(iv);
    let neg = certified_negative(iv);
    match action {
        Action::Abstain => costs.c_abstain,
        Action::One if pos => costs.c_base,
        Action::Zero if neg => costs.c_base,
        Action::One | Action::Zero => costs.c_wrong,
    }
}

/// Brute-force minimizer of [`worst_case_loss`]; ties go to abstention.
pub fn minimax_action(iv: &BoundInterval, costs: &CostTriple) -> Result<Action> {
    costs.validate_abstention()?;
    let mut best = Action::Abstain;
    let mut best_loss = worst_case_loss(best, iv, costs);
    for a in [Action::One, Action::Zero] {
        let loss = worst_case_loss(a, iv, costs);
        if loss < best_loss {
            best = a;
            best_loss = loss;
        }
    }
    Ok(best)
}

/// Largest regret of classifying 1 with probability `p` on an unsigned
/// interval: `(C - C_b) max(p, 1 - p)`.
pub fn max_regret(p: f64, costs: &CostTriple) -> f64 {
    (costs.c_wrong - costs.c_base) * p.max(1.0 - p)
}

/// Grid minimizer of [`max_regret`] over `p = i / 10000`.
pub fn minimax_regret_prob(costs: &CostTriple) -> Result<f64> {
    costs.validate_randomized()?;
    let mut best_p = 0.0;
    let mut best = f64::INFINITY;
    for i in 0..=10_000u32 {
        let p = f64::from(i) / 10_000.0;
        let r = max_regret(p, costs);
        if r < best {
            best = r;
            best_p = p;
        }
    }
    Ok(best_p)
}

/// Inputs of the misclassification-probability bound.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MisclassificationInputs {
    pub alpha: f64,
    /// `P(ĉ_L - c_L <= -ε)`
    pub p_lo_err: f64,
    /// `P(ĉ_U - c_U >= ε)`
    pub p_up_err: f64,
    pub m_l: f64,
    pub m_u: f64,
    pub eps: f64,
    pub randomized: bool,
    pub random_design: bool,
    /// Probability that the interval straddles zero, when the randomized
    /// rule uses an independent device instead of a shared one.
    pub p_straddle: Option<f64>,
}

impl MisclassificationInputs {
    pub fn new(alpha: f64, p_lo_err: f64, p_up_err: f64) -> Self {
        Self {
            alpha,
            p_lo_err,
            p_up_err,
            m_l: 0.0,
            m_u: 0.0,
            eps: 0.0,
            randomized: false,
            random_design: false,
            p_straddle: None,
        }
    }
}

/// `α + k (P_L + P_U)` plus `k (M_L + M_U) ε` under the random design, with
/// `k = 1/2` for the randomized rule.
pub fn misclassification_bound(inp: &MisclassificationInputs) -> Result<f64> {
    if !(inp.alpha > 0.0 && inp.alpha < 1.0) {
        return Err(Error::Domain { name: "alpha", value: inp.alpha });
    }
    for (name, v) in [
        ("p_lo_err", inp.p_lo_err),
        ("p_up_err", inp.p_up_err),
        ("m_l", inp.m_l),
        ("m_u", inp.m_u),
        ("eps", inp.eps),
        ("p_straddle", inp.p_straddle.unwrap_or(0.0)),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Domain { name, value: v });
        }
    }
    let k = if inp.randomized { 0.5 } else { 1.0 };
    let mut bound = inp.alpha + k * inp.p_lo_err + k * inp.p_up_err;
    if inp.random_design {
        bound += k * (inp.m_l + inp.m_u) * inp.eps;
    }
    if inp.randomized {
        if let Some(p) = inp.p_straddle {
            bound += 0.5 * p;
        }
    }
    Ok(bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::Status;

    fn iv(lower: f64, upper: f64) -> BoundInterval {
        BoundInterval {
            lower,
            upper,
            lower_status: Status::Optimal,
            upper_status: Status::Optimal,
            lower_binding: false,
            upper_binding: false,
        }
    }

    const COSTS: CostTriple = CostTriple { c_base: 0.0, c_abstain: 1.0, c_wrong: 2.0 };

    #[test]
    fn abstain_rule_examples() {
        assert_eq!(classify_abstain(&iv(0.3, 1.2)).unwrap().outcome, Action::One);
        assert_eq!(classify_abstain(&iv(-2.0, -0.1)).unwrap().outcome, Action::Zero);
        assert_eq!(classify_abstain(&iv(-1.0, 1.0)).unwrap().outcome, Action::Abstain);
        assert_eq!(classify_abstain(&iv(0.0, 1.0)).unwrap().outcome, Action::Abstain);
        assert_eq!(classify_abstain(&iv(-1.0, 0.0)).unwrap().outcome, Action::Abstain);
    }

    #[test]
    fn infeasible_interval_errors() {
        let mut bad = iv(f64::NAN, f64::NAN);
        bad.lower_status = Status::Infeasible;
        let err = classify_abstain(&bad).unwrap_err();
        assert_eq!(err.to_string(), "no classification possible: empty feasible set");
        assert!(classify_random(&bad, 1).is_err());
    }

    #[test]
    fn random_rule_examples() {
        assert_eq!(classify_random(&iv(0.3, 1.2), 0).unwrap(), Decision { outcome: Action::One, draw_used: None });
        assert_eq!(classify_random(&iv(-1.0, 1.0), 1).unwrap(), Decision { outcome: Action::One, draw_used: Some(1) });
        assert_eq!(classify_random(&iv(-1.0, 1.0), 0).unwrap(), Decision { outcome: Action::Zero, draw_used: Some(0) });
    }

    #[test]
    fn loss_examples() {
        assert_eq!(worst_case_loss(Action::Abstain, &iv(0.2, 0.5), &COSTS), 1.0);
        assert_eq!(worst_case_loss(Action::One, &iv(0.2, 0.5), &COSTS), 0.0);
        assert_eq!(worst_case_loss(Action::One, &iv(-1.0, 1.0), &COSTS), 2.0);
        assert_eq!(worst_case_loss(Action::Zero, &iv(0.2, 0.5), &COSTS), 2.0);
    }

    #[test]
    fn minimax_examples() {
        assert_eq!(minimax_action(&iv(0.1, 2.0), &COSTS).unwrap(), Action::One);
        assert_eq!(minimax_action(&iv(-1.0, 1.0), &COSTS).unwrap(), Action::Abstain);
        assert!(minimax_action(&iv(-1.0, 1.0), &CostTriple::new(0.0, 3.0, 2.0)).is_err());
    }

    #[test]
    fn regret_examples() {
        assert_eq!(max_regret(0.5, &COSTS), 1.0);
        assert!((max_regret(0.9, &COSTS) - 1.8).abs() < 1e-15);
        assert_eq!(minimax_regret_prob(&COSTS).unwrap(), 0.5);
        assert!(minimax_regret_prob(&CostTriple::new(2.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn bound_examples() {
        let base = MisclassificationInputs::new(0.05, 0.0, 0.0);
        assert_eq!(misclassification_bound(&base).unwrap(), 0.05);
        let errs = MisclassificationInputs::new(0.05, 0.02, 0.04);
        assert!((misclassification_bound(&errs).unwrap() - 0.11).abs() < 1e-15);
        let rand = MisclassificationInputs { randomized: true, ..errs };
        assert!((misclassification_bound(&rand).unwrap() - 0.08).abs() < 1e-15);
        let design =
            MisclassificationInputs { m_l: 1.0, m_u: 1.0, eps: 0.01, randomized: true, random_design: true, ..base };
        assert!((misclassification_bound(&design).unwrap() - 0.06).abs() < 1e-15);
        let device = MisclassificationInputs { p_straddle: Some(0.2), ..rand };
        assert!((misclassification_bound(&device).unwrap() - 0.18).abs() < 1e-15);
        assert!(misclassification_bound(&MisclassificationInputs::new(0.0, 0.0, 0.0)).is_err());
    }
}
