//! Observations, grouping by support point, and the unbiased estimators of
//! `g(x_j)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{check_unit_open, Error, Result};

/// Whether covariates are treated as design constants or as random draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Design {
    Fixed,
    Random,
}

/// Cluster membership of one observation. Rows without an explicit cluster
/// form a cluster of their own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ClusterKey {
    Id(u64),
    Row(usize),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Observation {
    pub y: u8,
    pub x: Vec<f64>,
    /// Lower endpoints of interval-observed covariates (empty if none).
    pub v_lo: Vec<f64>,
    /// Upper endpoints of interval-observed covariates (empty if none).
    pub v_hi: Vec<f64>,
    pub weight: f64,
    pub cluster: Option<u64>,
}

impl Observation {
    pub fn new(y: u8, x: Vec<f64>) -> Self {
        Self { y, x, v_lo: Vec::new(), v_hi: Vec::new(), weight: 1.0, cluster: None }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_cluster(mut self, cluster: u64) -> Self {
        self.cluster = Some(cluster);
        self
    }

    pub fn with_interval(mut self, v_lo: Vec<f64>, v_hi: Vec<f64>) -> Self {
        self.v_lo = v_lo;
        self.v_hi = v_hi;
        self
    }
}

/// A validated sample together with the quantile level and design flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    observations: Vec<Observation>,
    q: usize,
    qv: usize,
    design: Design,
    tau: f64,
}

impl Dataset {
    pub fn new(observations: Vec<Observation>, design: Design, tau: f64) -> Result<Self> {
        check_unit_open("tau", tau)?;
        let first = observations.first().ok_or_else(|| Error::validation("dataset is empty"))?;
        let q = first.x.len();
        let qv = first.v_lo.len();
        if q + qv == 0 {
            return Err(Error::validation("observations have no covariates"));
        }
        for (i, obs) in observations.iter().enumerate() {
            if obs.y > 1 {
                return Err(Error::validation(format!("observation {i}: outcome {} is not 0 or 1", obs.y)));
            }
            if obs.x.len() != q || obs.v_lo.len() != qv || obs.v_hi.len() != qv {
                return Err(Error::validation(format!(
                    "observation {i}: covariate dimension differs from the first row"
                )));
            }
            if obs.x.iter().chain(&obs.v_lo).chain(&obs.v_hi).any(|v| !v.is_finite()) {
                return Err(Error::validation(format!("observation {i}: non-finite covariate")));
            }
            if obs.v_lo.iter().zip(&obs.v_hi).any(|(lo, hi)| lo > hi) {
                return Err(Error::validation(format!(
                    "observation {i}: interval lower endpoint exceeds upper endpoint"
                )));
            }
            if !(obs.weight > 0.0 && obs.weight.is_finite()) {
                return Err(Error::validation(format!("observation {i}: weight {} is not positive", obs.weight)));
            }
        }
        Ok(Self { observations, q, qv, design, tau })
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Number of point-observed covariates.
    pub fn q(&self) -> usize {
        self.q
    }

    /// Number of interval-observed covariates.
    pub fn qv(&self) -> usize {
        self.qv
    }

    pub fn design(&self) -> Design {
        self.design
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Per-(group, cluster) sums.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClusterCell {
    pub cluster: ClusterKey,
    /// Number of rows.
    pub count: usize,
    /// Sum of weights.
    pub weight: f64,
    /// Sum of `w * Y`.
    pub weighted_ones: f64,
}

impl ClusterCell {
    /// `Υ_{j,c} = Σ w (Y - tau)`.
    pub fn upsilon(&self, tau: f64) -> f64 {
        self.weighted_ones - tau * self.weight
    }
}

/// Sufficient statistics for one support point.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupSummary {
    pub x: Vec<f64>,
    pub v_lo: Vec<f64>,
    pub v_hi: Vec<f64>,
    /// `n_j`
    pub count: usize,
    /// Number of rows with `Y = 1`.
    pub ones: usize,
    /// `N_j`, the summed weight.
    pub weight: f64,
    /// `p(x_j) = N_j / N`; equals `n_j / n` for unit weights.
    pub mass: f64,
    pub ybar: f64,
    /// Estimate of `g(x_j)` under the dataset's design.
    pub g_hat: f64,
    /// Fixed-design variance `Ybar (1 - Ybar)`.
    pub sigma2_hat: f64,
    /// Random-design variance of `(Y - tau) 1{X = x_j}` with the `1/n` divisor.
    pub s2_hat: f64,
    pub clusters: Vec<ClusterCell>,
}

impl GroupSummary {
    /// `Σ_ℓ (Y_ℓ - tau)` over the group, computed from counts.
    pub fn centered_sum(&self, tau: f64) -> f64 {
        self.ones as f64 - tau * self.count as f64
    }

    /// Full covariate vector `(x, v)` used when interval endpoints coincide.
    pub fn support_point(&self) -> Vec<f64> {
        let mut point = self.x.clone();
        point.extend_from_slice(&self.v_hi);
        point
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupedData {
    pub groups: Vec<GroupSummary>,
    /// Total number of rows.
    pub n: usize,
    /// Total weight `N`.
    pub total_weight: f64,
    pub tau: f64,
    pub design: Design,
    /// Total weight per cluster across all groups, in first-seen order.
    pub cluster_weights: Vec<(ClusterKey, f64)>,
    pub q: usize,
    pub qv: usize,
}

impl GroupedData {
    /// Number of distinct support points `J`.
    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn g_hat(&self) -> Vec<f64> {
        self.groups.iter().map(|g| g.g_hat).collect()
    }

    /// True when every observation sits in its own cluster.
    pub fn has_explicit_clusters(&self) -> bool {
        self.cluster_weights.iter().any(|(key, _)| matches!(key, ClusterKey::Id(_)))
    }
}

/// Canonical decimal form of a covariate value: 12 significant digits,
/// with negative zero folded into zero.
pub fn canonical_value(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.11e}")
}

fn group_key(obs: &Observation) -> String {
    let mut key = String::new();
    for (tag, values) in [('x', &obs.x), ('l', &obs.v_lo), ('h', &obs.v_hi)] {
        for v in values.iter() {
            let _ = write!(key, "{tag}{}", canonical_value(*v));
        }
    }
    key
}

/// Group a dataset by distinct support point (first-seen order) and fill in
/// the per-group statistics for the dataset's `tau` and design.
pub fn group(dataset: &Dataset) -> GroupedData {
    let tau = dataset.tau;
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut groups: Vec<GroupSummary> = Vec::new();
    let mut cells: Vec<BTreeMap<ClusterKey, usize>> = Vec::new();
    let mut cluster_index: BTreeMap<ClusterKey, usize> = BTreeMap::new();
    let mut cluster_weights: Vec<(ClusterKey, f64)> = Vec::new();
    let mut total_weight = 0.0;

    for (row, obs) in dataset.observations.iter().enumerate() {
        let key = group_key(obs);
        let j = *index.entry(key).or_insert_with(|| {
            groups.push(GroupSummary {
                x: obs.x.clone(),
                v_lo: obs.v_lo.clone(),
                v_hi: obs.v_hi.clone(),
                count: 0,
                ones: 0,
                weight: 0.0,
                mass: 0.0,
                ybar: 0.0,
                g_hat: 0.0,
                sigma2_hat: 0.0,
                s2_hat: 0.0,
                clusters: Vec::new(),
            });
            cells.push(BTreeMap::new());
            groups.len() - 1
        });
        let cluster = obs.cluster.map_or(ClusterKey::Row(row), ClusterKey::Id);
        let w = obs.weight;
        let y = f64::from(obs.y);

        let g = &mut groups[j];
        g.count += 1;
        g.ones += usize::from(obs.y);
        g.weight += w;
        let c = *cells[j].entry(cluster).or_insert_with(|| {
            g.clusters.push(ClusterCell { cluster, count: 0, weight: 0.0, weighted_ones: 0.0 });
            g.clusters.len() - 1
        });
        let cell = &mut g.clusters[c];
        cell.count += 1;
        cell.weight += w;
        cell.weighted_ones += w * y;

        let k = *cluster_index.entry(cluster).or_insert_with(|| {
            cluster_weights.push((cluster, 0.0));
            cluster_weights.len() - 1
        });
        cluster_weights[k].1 += w;
        total_weight += w;
    }

    let n = dataset.len();
    for g in &mut groups {
        g.mass = g.weight / total_weight;
        g.ybar = g.ones as f64 / g.count as f64;
        g.sigma2_hat = g.ybar * (1.0 - g.ybar);
    }
    let mut grouped = GroupedData {
        groups,
        n,
        total_weight,
        tau,
        design: dataset.design,
        cluster_weights,
        q: dataset.q,
        qv: dataset.qv,
    };
    let g_hat = estimate_g_unchecked(&grouped, tau, dataset.design);
    for (g, est) in grouped.groups.iter_mut().zip(g_hat) {
        g.g_hat = est;
    }
    let s2 = random_design_variances(&grouped, tau);
    for (g, s2) in grouped.groups.iter_mut().zip(s2) {
        g.s2_hat = s2;
    }
    grouped
}

fn estimate_g_unchecked(grouped: &GroupedData, tau: f64, design: Design) -> Vec<f64> {
    let n = grouped.n as f64;
    grouped
        .groups
        .iter()
        .map(|g| match design {
            Design::Fixed => g.centered_sum(tau) / g.count as f64 * g.mass,
            Design::Random => g.centered_sum(tau) / n,
        })
        .collect()
}

/// `ŝ_j² = n⁻¹ Σ_i (a_ij - ā_j)²` with `a_ij = (Y_i - tau) 1{X_i = x_j}`.
fn random_design_variances(grouped: &GroupedData, tau: f64) -> Vec<f64> {
    let n = grouped.n as f64;
    grouped
        .groups
        .iter()
        .map(|g| {
            let mean = g.centered_sum(tau) / n;
            let zeros = (g.count - g.ones) as f64;
            let inside = g.ones as f64 * (1.0 - tau - mean) * (1.0 - tau - mean) + zeros * (tau + mean) * (tau + mean);
            let outside = (n - g.count as f64) * mean * mean;
            (inside + outside) / n
        })
        .collect()
}

/// Unbiased estimates of `g(x_j)`.
///
/// Fixed design: `[n_j⁻¹ Σ_ℓ (Y_ℓj - tau)] p(x_j)`.
/// Random design: `n⁻¹ Σ_i (Y_i - tau) 1{X_i = x_j}`.
pub fn estimate_g(grouped: &GroupedData, tau: f64, design: Design) -> Result<Vec<f64>> {
    check_unit_open("tau", tau)?;
    Ok(estimate_g_unchecked(grouped, tau, design))
}

/// Weighted, clustered estimates together with the cluster weight shares.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClusterEstimates {
    pub g_hat: Vec<f64>,
    /// `γ_{j,c} = N_j⁻¹ Σ_ℓ w_ℓjc`, one vector per group.
    pub group_shares: Vec<Vec<f64>>,
    /// `γ_c = N⁻¹ Σ_i w_ic`, one entry per cluster.
    pub cluster_shares: Vec<f64>,
    /// `Σ_c γ_{j,c}²`, the reciprocal effective sample size of each group.
    pub group_concentration: Vec<f64>,
    /// `Σ_c γ_c²`.
    pub cluster_concentration: f64,
}

/// `Σ w_c² / (Σ w_c)²`; exactly `1/m` for `m` unit weights.
fn concentration(weights: impl Iterator<Item = f64> + Clone) -> f64 {
    let total: f64 = weights.clone().sum();
    weights.map(|w| w * w).sum::<f64>() / (total * total)
}

/// Survey-weighted estimator with cluster shares.
///
/// Both designs give `ĝ(x_j) = Σ_c Υ_{j,c} / N`; they differ only in which
/// shares govern the finite-sample widths.
pub fn estimate_g_clustered(grouped: &GroupedData, tau: f64, design: Design) -> Result<ClusterEstimates> {
    check_unit_open("tau", tau)?;
    let _ = design;
    if grouped.total_weight <= 0.0 || !grouped.total_weight.is_finite() {
        return Err(Error::validation("total weight must be positive"));
    }
    let total: f64 = grouped.groups.iter().map(|g| g.weight).sum();
    let g_hat = grouped
        .groups
        .iter()
        .map(|g| {
            let ones: f64 = g.clusters.iter().map(|c| c.weighted_ones).sum();
            let weight: f64 = g.clusters.iter().map(|c| c.weight).sum();
            (ones - tau * weight) / total
        })
        .collect();
    let group_shares =
        grouped.groups.iter().map(|g| g.clusters.iter().map(|c| c.weight / g.weight).collect()).collect();
    let cluster_shares = grouped.cluster_weights.iter().map(|(_, w)| w / grouped.total_weight).collect();
    let group_concentration =
        grouped.groups.iter().map(|g| concentration(g.clusters.iter().map(|c| c.weight))).collect();
    let cluster_concentration = concentration(grouped.cluster_weights.iter().map(|(_, w)| *w));
    Ok(ClusterEstimates { g_hat, group_shares, cluster_shares, group_concentration, cluster_concentration })
}
