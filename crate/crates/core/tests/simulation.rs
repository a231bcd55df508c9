//! Monte Carlo checks of the estimators against population quantities.

use scorebounds_core::confidence::Variant;
use scorebounds_core::data::{group, Design};
use scorebounds_core::dgp::DgpSpec;
use scorebounds_core::experiment::{
    mean_std, run_bounds_experiment, run_classification_experiment, BoundsConfig, ClassConfig, Rule,
};

/// Per-point mean of `ĝ` over replications, with its standard error.
fn replicate_g(dgp: &DgpSpec, n: usize, design: Design, reps: usize) -> Vec<(f64, f64)> {
    let support = dgp.support();
    let mut draws = vec![Vec::with_capacity(reps); support.len()];
    for rep in 0..reps {
        let grouped = group(&dgp.generate(n, design, 7, rep as u64, None).unwrap());
        for (j, x) in support.iter().enumerate() {
            let g = grouped.groups.iter().find(|g| &g.x == x).map_or(0.0, |g| g.g_hat);
            draws[j].push(g);
        }
    }
    draws
        .iter()
        .map(|d| {
            let (m, s) = mean_std(d);
            (m, s / (reps as f64).sqrt())
        })
        .collect()
}

#[test]
fn estimates_are_unbiased_under_fixed_design() {
    let dgp = DgpSpec::kls(false);
    let n = 1200;
    let mass = 1.0 / dgp.support().len() as f64;
    let est = replicate_g(&dgp, n, Design::Fixed, 400);
    for ((m, se), f) in est.iter().zip(dgp.f_values()) {
        let truth = f * mass;
        assert!((m - truth).abs() <= 4.0 * se + 1e-12, "{m} vs {truth} (se {se})");
    }
}

#[test]
fn estimates_are_unbiased_under_random_design() {
    let dgp = DgpSpec::binned_normal();
    let est = replicate_g(&dgp, 500, Design::Random, 400);
    for ((m, se), truth) in est.iter().zip(dgp.g0_random()) {
        assert!((m - truth).abs() <= 4.0 * se + 1e-12, "{m} vs {truth} (se {se})");
    }
}

#[test]
fn hoeffding_regions_cover() {
    for (variant, design) in [(Variant::FiniteFixed, Design::Fixed), (Variant::FiniteRandom, Design::Random)] {
        let row = run_bounds_experiment(BoundsConfig {
            dgp: DgpSpec::binned_normal(),
            n: 500,
            reps: 200,
            alpha: 0.05,
            variant,
            design,
            cluster: None,
            seed: 3,
        })
        .unwrap();
        assert!(row.g0_coverage >= 0.95, "{variant:?}: {}", row.g0_coverage);
        assert!(row.coverage >= 0.95, "{variant:?}: {}", row.coverage);
    }
}

#[test]
fn classification_error_shrinks_with_n() {
    let avg = |n: usize| {
        let rows =
            run_classification_experiment(ClassConfig { dgp: DgpSpec::kls(false), n, reps: 200, alpha: 0.05, seed: 5 })
                .unwrap();
        let get = |rule: Rule| rows.iter().find(|r| r.rule == rule).unwrap().avg_pointwise;
        (get(Rule::Abstain), get(Rule::Random), get(Rule::SampleFrequency))
    };
    let (a1, r1, f1) = avg(2880);
    let (a3, r3, f3) = avg(8640);
    assert!(r1 <= a1 && r3 <= a3);
    assert!(a3 < a1 && r3 < r1);
    // the sample-frequency rule gains nothing from n on the zero-margin cells
    assert!((f1 - f3).abs() <= 0.03, "{f1} vs {f3}");
}
