//! Monte Carlo replications: bound coverage and classification error.
//!
//! Each replication draws from its own RNG stream, so a run can be split
//! across threads and reassembled in replication order with identical
//! results.

use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;

use crate::bounds::{bound_interval, bound_rows, screened_rows, BoundInterval};
use crate::classify::{classify_abstain, classify_random, Action};
use crate::confidence::{region, Variant};
use crate::data::{group, Design, GroupedData};
use crate::dgp::{open_uniform, rep_rng, Clustering, DgpSpec, Population};
use crate::error::Result;
use crate::lp::Status;

/// Slack allowed when comparing estimated and population endpoints.
pub const COVER_TOL: f64 = 1e-9;

/// Mean and standard deviation (`n - 1` divisor; zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, sqrt(ss / (n - 1.0)))
}

/// Position of each group's support point in `support`.
fn align(grouped: &GroupedData, support: &[Vec<f64>]) -> Vec<Option<usize>> {
    grouped.groups.iter().map(|g| support.iter().position(|x| *x == g.x)).collect()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundsConfig {
    pub dgp: DgpSpec,
    pub n: usize,
    pub reps: usize,
    pub alpha: f64,
    pub variant: Variant,
    pub design: Design,
    pub cluster: Option<Clustering>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundsRep {
    pub lower: f64,
    pub upper: f64,
    pub feasible: bool,
    /// `[ĉ_L, ĉ_U] ⊇ [c_L, c_U]`
    pub covers: bool,
    /// `g₀` lies in the confidence rectangle.
    pub g0_covered: bool,
    pub lower_binding: bool,
    pub upper_binding: bool,
}

/// Population quantities shared by every replication of a bounds run.
#[derive(Debug, Clone)]
pub struct BoundsContext {
    pub config: BoundsConfig,
    pub population: Population,
    f: Vec<f64>,
    g0_random: Vec<f64>,
}

impl BoundsContext {
    pub fn new(config: BoundsConfig) -> Result<Self> {
        let population = config.dgp.population_oracle()?;
        let f = config.dgp.f_values();
        let g0_random = config.dgp.g0_random();
        Ok(Self { config, population, f, g0_random })
    }

    pub fn rep(&self, rep: usize) -> Result<BoundsRep> {
        let cfg = &self.config;
        let data = cfg.dgp.generate(cfg.n, cfg.design, cfg.seed, rep as u64, cfg.cluster)?;
        let grouped = group(&data);
        let reg = region(&grouped, cfg.alpha, cfg.variant)?;
        let g0: Vec<f64> = align(&grouped, &self.population.support)
            .into_iter()
            .zip(&grouped.groups)
            .map(|(j, g)| {
                let j = j.expect("generated points lie on the support");
                match cfg.design {
                    Design::Fixed => self.f[j] * g.mass,
                    Design::Random => self.g0_random[j],
                }
            })
            .collect();
        let iv = bound_interval(&grouped, &reg, &cfg.dgp.target_spec())?;
        let feasible = iv.is_feasible();
        Ok(BoundsRep {
            lower: iv.lower,
            upper: iv.upper,
            feasible,
            covers: feasible && iv.contains(&self.population.target, COVER_TOL),
            g0_covered: reg.contains(&g0),
            lower_binding: iv.lower_binding,
            upper_binding: iv.upper_binding,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundsRow {
    pub n: usize,
    pub reps: usize,
    pub mean_lower: f64,
    pub mean_upper: f64,
    pub std_lower: f64,
    pub std_upper: f64,
    /// Share of replications whose interval contains the population one.
    pub coverage: f64,
    /// Share of replications whose region contains `g₀`.
    pub g0_coverage: f64,
    /// Replications with an empty screened feasible set (excluded from the
    /// means, counted as non-covering).
    pub infeasible: usize,
    pub upper_binding: f64,
}

pub fn summarize_bounds(n: usize, reps: &[BoundsRep]) -> BoundsRow {
    let feasible: Vec<&BoundsRep> = reps.iter().filter(|r| r.feasible).collect();
    let lowers: Vec<f64> = feasible.iter().map(|r| r.lower).collect();
    let uppers: Vec<f64> = feasible.iter().map(|r| r.upper).collect();
    let (mean_lower, std_lower) = mean_std(&lowers);
    let (mean_upper, std_upper) = mean_std(&uppers);
    let total = reps.len() as f64;
    let share = |pred: &dyn Fn(&BoundsRep) -> bool| reps.iter().filter(|r| pred(r)).count() as f64 / total;
    BoundsRow {
        n,
        reps: reps.len(),
        mean_lower,
        mean_upper,
        std_lower,
        std_upper,
        coverage: share(&|r| r.covers),
        g0_coverage: share(&|r| r.g0_covered),
        infeasible: reps.len() - feasible.len(),
        upper_binding: share(&|r| r.upper_binding),
    }
}

/// Run every replication in order on the current thread.
pub fn run_bounds_experiment(config: BoundsConfig) -> Result<BoundsRow> {
    let n = config.n;
    let reps = config.reps;
    let ctx = BoundsContext::new(config)?;
    let out = (0..reps).map(|r| ctx.rep(r)).collect::<Result<Vec<_>>>()?;
    Ok(summarize_bounds(n, &out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Rule {
    Abstain,
    Random,
    SampleFrequency,
}

impl Rule {
    pub const ALL: [Rule; 3] = [Rule::Abstain, Rule::Random, Rule::SampleFrequency];
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassConfig {
    pub dgp: DgpSpec,
    pub n: usize,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
}

/// Mismatch counts for the three rules on one replication's draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassRep {
    pub abstain: usize,
    pub random: usize,
    pub frequency: usize,
    pub points: usize,
    /// Screened sign pattern had no solution; every bound-based decision
    /// counts as a mismatch.
    pub infeasible: bool,
}

impl ClassRep {
    pub fn mismatches(&self, rule: Rule) -> usize {
        match rule {
            Rule::Abstain => self.abstain,
            Rule::Random => self.random,
            Rule::SampleFrequency => self.frequency,
        }
    }
}

/// Stream offset for the shared randomization bits, disjoint from the data
/// streams.
const BIT_STREAM: u64 = 1 << 63;

#[derive(Debug, Clone)]
pub struct ClassContext {
    pub config: ClassConfig,
    pub support: Vec<Vec<f64>>,
    pub population_bounds: Vec<BoundInterval>,
}

impl ClassContext {
    pub fn new(config: ClassConfig) -> Result<Self> {
        let population_bounds = config.dgp.population_point_bounds()?;
        let support = config.dgp.support();
        Ok(Self { config, support, population_bounds })
    }

    /// Population abstention decisions per support point.
    pub fn oracle_actions(&self) -> Result<Vec<Action>> {
        self.population_bounds.iter().map(|iv| Ok(classify_abstain(iv)?.outcome)).collect()
    }

    pub fn rep(&self, rep: usize) -> Result<ClassRep> {
        let cfg = &self.config;
        let data = cfg.dgp.generate(cfg.n, Design::Fixed, cfg.seed, rep as u64, None)?;
        let grouped = group(&data);
        let reg = region(&grouped, cfg.alpha, Variant::AsympFixed)?;
        let rows = screened_rows(&grouped, &reg, &cfg.dgp.target_spec())?;
        let positions = align(&grouped, &self.support);
        let mut ybar = vec![f64::NAN; self.support.len()];
        for (j, g) in positions.iter().zip(&grouped.groups) {
            if let Some(j) = j {
                ybar[*j] = g.ybar;
            }
        }

        let mut bits = rep_rng(cfg.seed, BIT_STREAM | rep as u64);
        let mut out = ClassRep { abstain: 0, random: 0, frequency: 0, points: self.support.len(), infeasible: false };
        for (j, x) in self.support.iter().enumerate() {
            let r_bit = u8::from(open_uniform(&mut bits) < 0.5);
            let pop = &self.population_bounds[j];
            let oracle_abstain = classify_abstain(pop)?.outcome;
            let oracle_random = classify_random(pop, r_bit)?.outcome;

            let est = bound_rows(&rows, &cfg.dgp.bounds_spec(x.clone()), x, x)?;
            if est.lower_status == Status::Infeasible || est.upper_status == Status::Infeasible {
                out.infeasible = true;
                out.abstain += 1;
                out.random += 1;
            } else {
                out.abstain += usize::from(classify_abstain(&est)?.outcome != oracle_abstain);
                out.random += usize::from(classify_random(&est, r_bit)?.outcome != oracle_random);
            }

            let f_hat = ybar[j] - cfg.dgp.tau;
            let freq = if f_hat > 0.0 {
                Action::One
            } else if f_hat < 0.0 {
                Action::Zero
            } else if r_bit == 1 {
                Action::One
            } else {
                Action::Zero
            };
            out.frequency += usize::from(freq != oracle_random);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassRow {
    pub n: usize,
    pub reps: usize,
    pub rule: Rule,
    /// Mean disagreement over replications and support points.
    pub avg_pointwise: f64,
    /// Share of replications with at least one disagreement.
    pub uniform: f64,
    pub infeasible: usize,
}

pub fn summarize_classification(n: usize, reps: &[ClassRep]) -> Vec<ClassRow> {
    let total = reps.len() as f64;
    let cells: usize = reps.iter().map(|r| r.points).sum();
    let infeasible = reps.iter().filter(|r| r.infeasible).count();
    Rule::ALL
        .iter()
        .map(|&rule| ClassRow {
            n,
            reps: reps.len(),
            rule,
            avg_pointwise: reps.iter().map(|r| r.mismatches(rule)).sum::<usize>() as f64 / cells as f64,
            uniform: reps.iter().filter(|r| r.mismatches(rule) > 0).count() as f64 / total,
            infeasible,
        })
        .collect()
}

pub fn run_classification_experiment(config: ClassConfig) -> Result<Vec<ClassRow>> {
    let n = config.n;
    let reps = config.reps;
    let ctx = ClassContext::new(config)?;
    let out = (0..reps).map(|r| ctx.rep(r)).collect::<Result<Vec<_>>>()?;
    Ok(summarize_classification(n, &out))
}
