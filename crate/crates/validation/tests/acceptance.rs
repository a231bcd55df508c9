//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any
//! criterion fails.

use std::time::{Duration, Instant};

use rayon::ThreadPool;
use scorebounds::runner::{run_bounds, run_classification, thread_pool};
use scorebounds_core::bounds::{
    bound_rows, build_constraints, build_constraints_interval, screen, BoundInterval, BoundsSpec, IntervalPoint,
};
use scorebounds_core::classify::{classify_abstain, minimax_action, minimax_regret_prob, CostTriple};
use scorebounds_core::confidence::{
    halfwidth_cluster_asymp, halfwidth_cluster_finite, halfwidth_finite_fixed, halfwidth_finite_random, Inference,
    Variant,
};
use scorebounds_core::data::{estimate_g, group, Dataset, Design, Observation};
use scorebounds_core::dgp::{open_uniform, rep_rng, Clustering, DgpSpec};
use scorebounds_core::experiment::{BoundsConfig, BoundsRow, ClassConfig, ClassRow, Rule};
use scorebounds_core::lp::{solve, Constraint, LinearProgram, Objective, Status};

#[path = "../../core/tests/support/lp_oracle.rs"]
mod lp_oracle;

const SEED: u64 = 1;
const ALPHA: f64 = 0.05;

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = fn(&ThreadPool) -> Outcome;

fn main() {
    let pool = thread_pool().expect("thread pool");
    let criteria: [(&str, Option<Duration>, Check); 8] = [
        ("population bounds", Some(Duration::from_secs(1)), population_bounds),
        ("finite-sample table", Some(Duration::from_secs(300)), finite_table),
        ("asymptotic table", Some(Duration::from_secs(600)), asymptotic_table),
        ("misclassification table", Some(Duration::from_secs(1200)), misclassification_table),
        ("coverage suite", None, coverage_suite),
        ("decision oracles", Some(Duration::from_secs(1)), decision_oracles),
        ("lp oracle", None, lp_oracle_equivalence),
        ("reduction identities", None, reductions),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut out = check(&pool);
        let elapsed = start.elapsed();
        if let Some(limit) = limit {
            if elapsed > *limit {
                out.pass = false;
                out.detail.push_str(&format!("; over the {} s limit", limit.as_secs()));
            }
        }
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        println!("criterion {} ({name}): {verdict} [{:.2} s] {}", i + 1, elapsed.as_secs_f64(), out.detail);
        failed += usize::from(!out.pass);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

/// Agreement with a value printed to three decimals.
fn shows(value: f64, printed: &str) -> bool {
    format!("{value:.3}") == printed
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol + 1e-12
}

/// Collects failed sub-checks into one line.
#[derive(Default)]
struct Tally {
    notes: Vec<String>,
    failures: Vec<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if !ok {
            self.failures.push(what.clone());
        }
        self.notes.push(what);
    }

    fn outcome(self) -> Outcome {
        let detail = if self.failures.is_empty() {
            self.notes.join(", ")
        } else {
            format!("failed: {}", self.failures.join(", "))
        };
        Outcome { pass: self.failures.is_empty(), detail }
    }
}

fn population_bounds(_: &ThreadPool) -> Outcome {
    let pop = DgpSpec::binned_normal().population_oracle().expect("population oracle");
    let iv = pop.target;
    let mut t = Tally::default();
    t.check(iv.is_feasible(), "feasible");
    t.check(within(iv.lower, 1.5, 1e-9), format!("lower {:.12}", iv.lower));
    t.check(within(iv.upper, 3.0, 1e-9), format!("upper {:.12}", iv.upper));
    t.outcome()
}

fn bounds_row(
    pool: &ThreadPool,
    n: usize,
    reps: usize,
    variant: Variant,
    design: Design,
    cluster: Option<Clustering>,
) -> BoundsRow {
    let cfg =
        BoundsConfig { dgp: DgpSpec::binned_normal(), n, reps, alpha: ALPHA, variant, design, cluster, seed: SEED };
    run_bounds(pool, cfg).expect("bounds experiment")
}

fn describe(row: &BoundsRow) -> String {
    format!(
        "n={} mean ({:.3}, {:.3}) std ({:.3}, {:.3}) coverage {:.3}",
        row.n, row.mean_lower, row.mean_upper, row.std_lower, row.std_upper, row.coverage
    )
}

/// Hoeffding region under the random design.
fn finite_table(pool: &ThreadPool) -> Outcome {
    let mut t = Tally::default();
    let big = bounds_row(pool, 25_000, 100, Variant::FiniteRandom, Design::Random, None);
    let ok = shows(big.mean_lower, "1.500")
        && shows(big.mean_upper, "3.000")
        && shows(big.std_lower, "0.000")
        && shows(big.std_upper, "0.000")
        && big.coverage == 1.0;
    t.check(ok, describe(&big));
    let small = bounds_row(pool, 5_000, 100, Variant::FiniteRandom, Design::Random, None);
    let ok = within(small.mean_lower, -1.038, 0.15) && shows(small.mean_upper, "10.000");
    t.check(ok, describe(&small));
    t.outcome()
}

/// Bonferroni region under the random design.
fn asymptotic_table(pool: &ThreadPool) -> Outcome {
    let mut t = Tally::default();
    let mid = bounds_row(pool, 1_000, 1000, Variant::AsympRandom, Design::Random, None);
    let ok = shows(mid.mean_lower, "1.500") && shows(mid.mean_upper, "3.000") && within(mid.std_lower, 0.016, 0.01);
    t.check(ok, describe(&mid));
    let big = bounds_row(pool, 2_000, 1000, Variant::AsympRandom, Design::Random, None);
    let ok = shows(big.std_lower, "0.000") && shows(big.std_upper, "0.000") && big.coverage == 1.0;
    t.check(ok, describe(&big));
    t.outcome()
}

fn class_rows(pool: &ThreadPool, n: usize) -> Vec<ClassRow> {
    let cfg = ClassConfig { dgp: DgpSpec::kls(false), n, reps: 1000, alpha: ALPHA, seed: SEED };
    run_classification(pool, cfg).expect("classification experiment")
}

fn rule_row(rows: &[ClassRow], rule: Rule) -> &ClassRow {
    rows.iter().find(|r| r.rule == rule).expect("every rule is reported")
}

fn misclassification_table(pool: &ThreadPool) -> Outcome {
    let base = 2880;
    let runs: Vec<Vec<ClassRow>> = [1, 2, 3].iter().map(|k| class_rows(pool, k * base)).collect();
    let mut t = Tally::default();
    let a1 = rule_row(&runs[0], Rule::Abstain);
    let a3 = rule_row(&runs[2], Rule::Abstain);
    t.check(within(a1.avg_pointwise, 0.058, 0.02), format!("abstain avg(n) {:.3}", a1.avg_pointwise));
    t.check(within(a3.avg_pointwise, 0.003, 0.01), format!("abstain avg(3n) {:.3}", a3.avg_pointwise));
    t.check(within(a1.uniform, 0.608, 0.06), format!("abstain uniform(n) {:.3}", a1.uniform));
    let r1 = rule_row(&runs[0], Rule::Random);
    t.check(within(r1.avg_pointwise, 0.027, 0.015), format!("random avg(n) {:.3}", r1.avg_pointwise));
    for (k, rows) in runs.iter().enumerate() {
        let f = rule_row(rows, Rule::SampleFrequency);
        t.check(within(f.avg_pointwise, 0.127, 0.02), format!("frequency avg({}n) {:.3}", k + 1, f.avg_pointwise));
    }
    t.outcome()
}

fn coverage_suite(pool: &ThreadPool) -> Outcome {
    let reps = 500;
    let floor = 0.95 - 3.0 * (0.95 * 0.05 / reps as f64).sqrt();
    let mut t = Tally::default();
    let mut cases = 0;
    for inference in [Inference::Finite, Inference::Asymptotic] {
        for design in [Design::Fixed, Design::Random] {
            for cluster in [None, Some(Clustering::DEFAULT)] {
                let variant = Variant::select(inference, design, cluster.is_some());
                for n in [1000, 5000] {
                    let row = bounds_row(pool, n, reps, variant, design, cluster);
                    cases += 1;
                    let tag =
                        format!("{variant:?}/{design:?}/{} n={n}", if cluster.is_some() { "clustered" } else { "iid" });
                    if row.g0_coverage < floor {
                        t.failures.push(format!("{tag} g0 coverage {:.3}", row.g0_coverage));
                    }
                    if row.coverage < floor {
                        t.failures.push(format!("{tag} interval coverage {:.3}", row.coverage));
                    }
                }
            }
        }
    }
    t.notes.push(format!("{cases} cases at or above {floor:.4}"));
    t.outcome()
}

fn interval(lower: f64, upper: f64) -> BoundInterval {
    BoundInterval {
        lower,
        upper,
        lower_status: Status::Optimal,
        upper_status: Status::Optimal,
        lower_binding: false,
        upper_binding: false,
    }
}

fn decision_oracles(_: &ThreadPool) -> Outcome {
    let ends = [-2.0, -1.0, -0.5, -1e-12, 0.0, 1e-12, 0.5, 1.0, 2.0];
    let costs = [0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0];
    let mut combos = 0;
    let mut mismatches = 0;
    for (i, &lo) in ends.iter().enumerate() {
        for &hi in &ends[i..] {
            let iv = interval(lo, hi);
            for (a, &cb) in costs.iter().enumerate() {
                for (b, &ca) in costs.iter().enumerate().skip(a + 1) {
                    for &cw in &costs[b + 1..] {
                        let c = CostTriple::new(cb, ca, cw);
                        combos += 1;
                        let rule = classify_abstain(&iv).expect("feasible interval").outcome;
                        if minimax_action(&iv, &c).expect("ordered costs") != rule {
                            mismatches += 1;
                        }
                    }
                }
            }
        }
    }
    let mut pairs = 0;
    let mut off = 0;
    for (a, &cb) in costs.iter().enumerate() {
        for &cw in &costs[a + 1..] {
            pairs += 1;
            if minimax_regret_prob(&CostTriple::new(cb, cb, cw)).expect("ordered costs") != 0.5 {
                off += 1;
            }
        }
    }
    let mut t = Tally::default();
    t.check(combos >= 500 && mismatches == 0, format!("{mismatches} mismatches in {combos} interval x cost cases"));
    t.check(off == 0, format!("{off} of {pairs} cost pairs off 0.5"));
    t.outcome()
}

/// Random program with `k` free coefficients and one pinned to 1. Most rows
/// pass near a known interior point; the rest are arbitrary, so some
/// programs are infeasible.
fn random_lp(index: u64) -> LinearProgram {
    let mut rng = rep_rng(7, index);
    let mut u = || open_uniform(&mut rng);
    let k = 1 + (u() * 3.0) as usize;
    let m = (u() * 21.0) as usize;
    let arbitrary = u() < 0.3;
    let q = k + 1;
    let mut point = vec![1.0];
    point.extend((0..k).map(|_| u() - 0.5));
    let objective: Vec<f64> = (0..q).map(|_| 2.0 * u() - 1.0).collect();
    let sense = if u() < 0.5 { Objective::Maximize } else { Objective::Minimize };
    let mut lp = LinearProgram::new(q, -0.5, 0.5, objective, sense).fix(0, 1.0);
    for _ in 0..m {
        let coeffs: Vec<f64> = (0..q).map(|_| 2.0 * u() - 1.0).collect();
        let at: f64 = coeffs.iter().zip(&point).map(|(a, x)| a * x).sum();
        let ge = u() < 0.5;
        let rhs = if arbitrary {
            2.0 * u() - 1.0
        } else if ge {
            at - 0.3 * u()
        } else {
            at + 0.3 * u()
        };
        lp = lp.with_constraint(if ge { Constraint::ge(coeffs, rhs) } else { Constraint::le(coeffs, rhs) });
    }
    lp
}

fn lp_oracle_equivalence(_: &ThreadPool) -> Outcome {
    let h = lp_oracle::GRID_STEP;
    let (mut agree, mut infeasible, mut false_infeasible, mut disagree, mut bad_witness, mut missed) =
        (0, 0, 0, 0, 0, 0);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let lp = random_lp(i);
        let res = solve(&lp).expect("solver terminates");
        let grid = lp_oracle::grid_optimum(&lp, h);
        match (res.status, grid) {
            (Status::Optimal, Some(g)) => {
                let tol = h * lp.objective.iter().map(|r| r.abs()).sum::<f64>() + 1e-9;
                let gap = (res.value - g).abs();
                worst = worst.max(gap);
                if gap <= tol {
                    agree += 1;
                } else {
                    disagree += 1;
                }
            }
            (Status::Infeasible, Some(_)) => false_infeasible += 1,
            (Status::Infeasible, None) => infeasible += 1,
            // the grid can miss a sliver; the witness must still be feasible
            (Status::Optimal, None) => missed += 1,
        }
        if res.status == Status::Optimal && lp.constraints.iter().any(|c| c.slack(&res.witness) < -1e-9) {
            bad_witness += 1;
        }
    }
    let mut t = Tally::default();
    t.check(disagree == 0, format!("{agree} values agree (worst gap {worst:.1e}), {disagree} disagree"));
    t.check(false_infeasible == 0, format!("{infeasible} infeasible, {false_infeasible} falsely infeasible"));
    t.check(bad_witness == 0, format!("{bad_witness} infeasible witnesses, {missed} grid misses"));
    t.outcome()
}

fn random_dataset(index: u64, rows: usize) -> Dataset {
    let mut rng = rep_rng(11, index);
    let mut u = || open_uniform(&mut rng);
    let tau = 0.1 + 0.8 * u();
    let obs = (0..rows)
        .map(|_| {
            let a = (u() * 3.0).floor() - 1.0;
            let b = (u() * 3.0).floor() - 1.0;
            Observation::new(u8::from(u() < 0.5), vec![a, b, 1.0])
        })
        .collect();
    Dataset::new(obs, Design::Fixed, tau).expect("valid rows")
}

fn ulp_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs())
}

/// Equality that treats the NaN of an infeasible side as equal to itself.
fn bitwise_eq(a: &BoundInterval, b: &BoundInterval) -> bool {
    a.lower.to_bits() == b.lower.to_bits()
        && a.upper.to_bits() == b.upper.to_bits()
        && (a.lower_status, a.upper_status, a.lower_binding, a.upper_binding)
            == (b.lower_status, b.upper_status, b.lower_binding, b.upper_binding)
}

fn reductions(_: &ThreadPool) -> Outcome {
    let mut t = Tally::default();
    let (mut finite, mut ghat, mut asymp) = (0, 0, 0);
    for i in 0..50 {
        let data = random_dataset(i, 200);
        let grouped = group(&data);
        let (j, n) = (grouped.num_groups(), data.len());
        let same = halfwidth_cluster_finite(&grouped, ALPHA, Design::Fixed).unwrap().s
            == halfwidth_finite_fixed(&grouped, ALPHA).unwrap().s
            && halfwidth_cluster_finite(&grouped, ALPHA, Design::Random).unwrap().s
                == halfwidth_finite_random(j, n, ALPHA).unwrap().s;
        finite += usize::from(!same);
        let fixed = estimate_g(&grouped, data.tau(), Design::Fixed).unwrap();
        let random = estimate_g(&grouped, data.tau(), Design::Random).unwrap();
        ghat += usize::from(!fixed.iter().zip(&random).all(|(a, b)| ulp_close(*a, *b)));
    }
    for rep in 0..50 {
        let data =
            DgpSpec::binned_normal().generate(1000, Design::Fixed, SEED, rep, Some(Clustering::DEFAULT)).unwrap();
        let grouped = group(&data);
        let f = halfwidth_cluster_asymp(&grouped, ALPHA, Design::Fixed).unwrap().s;
        let r = halfwidth_cluster_asymp(&grouped, ALPHA, Design::Random).unwrap().s;
        asymp += usize::from(!f.iter().zip(&r).all(|(a, b)| ulp_close(*a, *b)));
    }
    t.check(finite == 0, format!("cluster/iid Hoeffding widths differ on {finite} of 50 datasets"));
    t.check(ghat == 0, format!("fixed/random estimates differ on {ghat} of 50 datasets"));
    t.check(asymp == 0, format!("cluster Bonferroni fixed/random differ on {asymp} of 50 datasets"));

    let mut lp_diffs = 0;
    for i in 0..50 {
        let mut rng = rep_rng(13, i);
        let mut u = || open_uniform(&mut rng);
        let points: Vec<IntervalPoint> = (0..8)
            .map(|_| {
                let v = 4.0 * u() - 2.0;
                IntervalPoint { x: vec![4.0 * u() - 2.0, 1.0], v0: vec![v], v1: vec![v] }
            })
            .collect();
        let g: Vec<f64> = (0..points.len()).map(|_| u() - 0.5).collect();
        let screening = screen(&g, &vec![0.1; g.len()]).unwrap();
        let spec = BoundsSpec::interval(vec![1.0, 0.0, 0.0], 2);
        let full: Vec<Vec<f64>> = points.iter().map(|p| [p.x.clone(), p.v1.clone()].concat()).collect();
        let a = build_constraints_interval(&points, &screening, &spec).unwrap();
        let b = build_constraints(&full, &screening, &spec).unwrap();
        let solved = |rows: &[Constraint]| bound_rows(rows, &spec, &spec.target, &spec.target).unwrap();
        let same = a == b && bitwise_eq(&solved(&a), &solved(&b));
        lp_diffs += usize::from(!same);
    }
    t.check(lp_diffs == 0, format!("degenerate interval programs differ on {lp_diffs} of 50"));
    t.outcome()
}
