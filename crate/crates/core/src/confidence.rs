//! Per-group half-widths `ŝ(x_j, α)` of the rectangular confidence region
//! for the vector `g₀`.

use alloc::vec;
use alloc::vec::Vec;

use libm::{log, sqrt};

use crate::data::{estimate_g_clustered, ClusterEstimates, Design, GroupedData};
use crate::error::{check_unit_open, Error, Result};
use crate::normal::bonferroni_z;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Variant {
    FiniteFixed,
    FiniteRandom,
    AsympFixed,
    AsympRandom,
    ClusterFiniteFixed,
    ClusterFiniteRandom,
    ClusterAsymp,
    /// `ŝ ≡ 0`: treat `ĝ` as if it were `g₀`.
    None,
}

/// Family of confidence region, before the design is taken into account.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Inference {
    None,
    Finite,
    Asymptotic,
}

impl Variant {
    pub fn select(inference: Inference, design: Design, cluster: bool) -> Self {
        match (inference, design, cluster) {
            (Inference::None, _, _) => Variant::None,
            (Inference::Finite, Design::Fixed, false) => Variant::FiniteFixed,
            (Inference::Finite, Design::Random, false) => Variant::FiniteRandom,
            (Inference::Asymptotic, Design::Fixed, false) => Variant::AsympFixed,
            (Inference::Asymptotic, Design::Random, false) => Variant::AsympRandom,
            (Inference::Finite, Design::Fixed, true) => Variant::ClusterFiniteFixed,
            (Inference::Finite, Design::Random, true) => Variant::ClusterFiniteRandom,
            (Inference::Asymptotic, _, true) => Variant::ClusterAsymp,
        }
    }

    pub fn is_clustered(self) -> bool {
        matches!(self, Variant::ClusterFiniteFixed | Variant::ClusterFiniteRandom | Variant::ClusterAsymp)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HalfWidths {
    pub alpha: f64,
    pub variant: Variant,
    pub s: Vec<f64>,
}

impl HalfWidths {
    pub fn zero(num_groups: usize) -> Self {
        Self { alpha: f64::NAN, variant: Variant::None, s: vec![0.0; num_groups] }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

/// `log(2J/α)`, the Hoeffding-Bonferroni exponent.
fn hoeffding_log(j: usize, alpha: f64) -> f64 {
    log(2.0 * j as f64 / alpha)
}

/// `(c / 2 · log(2J/α))^{1/2}` for concentration `c` (`1/n` in the iid case).
/// Every Hoeffding variant goes through this one expression so the clustered
/// forms reduce to the iid ones bit for bit.
fn hoeffding_width(concentration: f64, l: f64) -> f64 {
    sqrt(concentration / 2.0 * l)
}

/// Fixed-design Hoeffding region: `ŝ_j = p(x_j) (log(2J/α) / (2 n_j))^{1/2}`.
pub fn halfwidth_finite_fixed(grouped: &GroupedData, alpha: f64) -> Result<HalfWidths> {
    check_unit_open("alpha", alpha)?;
    let l = hoeffding_log(grouped.num_groups(), alpha);
    let s = grouped.groups.iter().map(|g| g.mass * hoeffding_width(1.0 / g.count as f64, l)).collect();
    Ok(HalfWidths { alpha, variant: Variant::FiniteFixed, s })
}

/// Random-design Hoeffding region, uniform across groups.
pub fn halfwidth_finite_random(j: usize, n: usize, alpha: f64) -> Result<HalfWidths> {
    check_unit_open("alpha", alpha)?;
    if j == 0 || n == 0 {
        return Err(Error::validation("group count and sample size must be positive"));
    }
    let t = hoeffding_width(1.0 / n as f64, hoeffding_log(j, alpha));
    Ok(HalfWidths { alpha, variant: Variant::FiniteRandom, s: vec![t; j] })
}

/// Fixed-design Bonferroni region: `ŝ_j = (n_j^{1/2} σ̂_j / n) z_{1-α/(2J)}`.
pub fn halfwidth_asymp_fixed(grouped: &GroupedData, alpha: f64) -> Result<HalfWidths> {
    let z = bonferroni_z(alpha, grouped.num_groups())?;
    let n = grouped.n as f64;
    let s = grouped.groups.iter().map(|g| sqrt(g.count as f64) * sqrt(g.sigma2_hat) / n * z).collect();
    Ok(HalfWidths { alpha, variant: Variant::AsympFixed, s })
}

/// Random-design Bonferroni region: `ŝ_j = (ŝ_j / n^{1/2}) z_{1-α/(2J)}` with
/// the `1/n` variance divisor.
pub fn halfwidth_asymp_random(grouped: &GroupedData, alpha: f64) -> Result<HalfWidths> {
    let z = bonferroni_z(alpha, grouped.num_groups())?;
    let root_n = sqrt(grouped.n as f64);
    let s = grouped.groups.iter().map(|g| sqrt(g.s2_hat) / root_n * z).collect();
    Ok(HalfWidths { alpha, variant: Variant::AsympRandom, s })
}

fn check_clusters(grouped: &GroupedData) -> Result<()> {
    if grouped.groups.iter().any(|g| g.clusters.is_empty()) {
        return Err(Error::MissingClusterStats);
    }
    Ok(())
}

/// Clustered Hoeffding region, governed by the effective sample size
/// `(Σ γ²)⁻¹`.
pub fn halfwidth_cluster_finite(grouped: &GroupedData, alpha: f64, design: Design) -> Result<HalfWidths> {
    check_unit_open("alpha", alpha)?;
    check_clusters(grouped)?;
    let est = estimate_g_clustered(grouped, grouped.tau, design)?;
    Ok(cluster_finite_from(grouped, &est, alpha, design))
}

fn cluster_finite_from(grouped: &GroupedData, est: &ClusterEstimates, alpha: f64, design: Design) -> HalfWidths {
    let l = hoeffding_log(grouped.num_groups(), alpha);
    match design {
        Design::Fixed => {
            let s = grouped
                .groups
                .iter()
                .zip(&est.group_concentration)
                .map(|(g, c)| g.mass * hoeffding_width(*c, l))
                .collect();
            HalfWidths { alpha, variant: Variant::ClusterFiniteFixed, s }
        }
        Design::Random => {
            let t = hoeffding_width(est.cluster_concentration, l);
            HalfWidths { alpha, variant: Variant::ClusterFiniteRandom, s: vec![t; grouped.num_groups()] }
        }
    }
}

/// Clustered Bonferroni region built from `Σ_c Υ_{j,c}²`, the second moment
/// of the cluster sums of `w (Y - τ)`.
///
/// The fixed form `(N_j^{1/2} V̂_j^{1/2} / N) z` with `V̂_j = N_j⁻¹ Σ_c Υ²` and
/// the random form `(V̂_j^{1/2} / N^{1/2}) z` with `V̂_j = N⁻¹ Σ_c Υ²` agree,
/// so the design only changes the arithmetic path.
pub fn halfwidth_cluster_asymp(grouped: &GroupedData, alpha: f64, design: Design) -> Result<HalfWidths> {
    check_clusters(grouped)?;
    let z = bonferroni_z(alpha, grouped.num_groups())?;
    let tau = grouped.tau;
    let big_n = grouped.total_weight;
    let s = grouped
        .groups
        .iter()
        .map(|g| {
            let sum_sq: f64 = g.clusters.iter().map(|c| c.upsilon(tau) * c.upsilon(tau)).sum();
            match design {
                Design::Fixed => {
                    let v = sum_sq / g.weight;
                    sqrt(g.weight) * sqrt(v) / big_n * z
                }
                Design::Random => {
                    let v = sum_sq / big_n;
                    sqrt(v) / sqrt(big_n) * z
                }
            }
        })
        .collect();
    Ok(HalfWidths { alpha, variant: Variant::ClusterAsymp, s })
}

/// Fixed-design clustered region with the uncentered outcome products,
/// `V̂_j = N_j⁻¹ Σ_c (Σ_ℓ w Y)²`.
///
/// Kept for comparison; [`halfwidth_cluster_asymp`] is what the pipeline uses.
pub fn halfwidth_cluster_asymp_raw(grouped: &GroupedData, alpha: f64) -> Result<HalfWidths> {
    check_clusters(grouped)?;
    let z = bonferroni_z(alpha, grouped.num_groups())?;
    let big_n = grouped.total_weight;
    let s = grouped
        .groups
        .iter()
        .map(|g| {
            let v: f64 = g.clusters.iter().map(|c| c.weighted_ones * c.weighted_ones).sum::<f64>() / g.weight;
            sqrt(g.weight) * sqrt(v) / big_n * z
        })
        .collect();
    Ok(HalfWidths { alpha, variant: Variant::ClusterAsymp, s })
}

/// Point estimates paired with the half-widths of one variant.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Region {
    pub g_hat: Vec<f64>,
    pub halfwidths: HalfWidths,
}

impl Region {
    /// True when `g` lies in the rectangle `ĝ ± ŝ`.
    pub fn contains(&self, g: &[f64]) -> bool {
        g.len() == self.g_hat.len()
            && self.g_hat.iter().zip(&self.halfwidths.s).zip(g).all(|((gh, s), g0)| (gh - g0).abs() <= *s)
    }
}

/// Estimate `g` and build the confidence region for the requested variant.
/// Clustered variants use the weighted estimator; the others use
/// [`GroupSummary::g_hat`](crate::data::GroupSummary).
pub fn region(grouped: &GroupedData, alpha: f64, variant: Variant) -> Result<Region> {
    if variant != Variant::None {
        check_unit_open("alpha", alpha)?;
    }
    let g_hat = if variant.is_clustered() {
        estimate_g_clustered(grouped, grouped.tau, grouped.design)?.g_hat
    } else {
        grouped.g_hat()
    };
    let halfwidths = match variant {
        Variant::FiniteFixed => halfwidth_finite_fixed(grouped, alpha)?,
        Variant::FiniteRandom => halfwidth_finite_random(grouped.num_groups(), grouped.n, alpha)?,
        Variant::AsympFixed => halfwidth_asymp_fixed(grouped, alpha)?,
        Variant::AsympRandom => halfwidth_asymp_random(grouped, alpha)?,
        Variant::ClusterFiniteFixed => halfwidth_cluster_finite(grouped, alpha, Design::Fixed)?,
        Variant::ClusterFiniteRandom => halfwidth_cluster_finite(grouped, alpha, Design::Random)?,
        Variant::ClusterAsymp => halfwidth_cluster_asymp(grouped, alpha, grouped.design)?,
        Variant::None => HalfWidths { alpha, ..HalfWidths::zero(grouped.num_groups()) },
    };
    Ok(Region { g_hat, halfwidths })
}
