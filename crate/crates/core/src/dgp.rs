//! Simulation designs: the binned-bivariate-normal design with
//! heteroskedastic probit noise, and the GPA / internship design.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::bounds::{bound_rows, build_constraints, BoundInterval, BoundsSpec, Direction, Screening};
use crate::data::{Dataset, Design, Observation};
use crate::error::{check_unit_open, Error, Result};
use crate::normal::{bivariate_rect_prob, inv_norm_cdf, norm_cdf};

/// Deterministic stream for replication `rep` of a run seeded with `seed`.
pub fn rep_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Uniform on the open interval (0, 1) with 53 random bits.
pub fn open_uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

pub fn std_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    inv_norm_cdf(open_uniform(rng)).expect("open uniform lies in (0, 1)")
}

/// How covariates are drawn.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CovariateLaw {
    /// `X = (1, X1, X2)` with `(W1, W2)` standard bivariate normal with
    /// correlation `rho`, each binned at `cuts` into levels centered on 0.
    BinnedNormal { rho: f64, cuts: Vec<f64> },
    /// Fixed grid of support points, each repeated `n / J` times.
    EqualCells { points: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Noise {
    Homoskedastic(f64),
    /// `0.15 (1 + (x1 + x2)²)` on `x = (1, x1, x2)`.
    SumSquared,
    /// `0.2 (1 + (gpa / 3 + ti)²)` on `x = (gpa, ti, 1)`.
    GpaInternship,
}

impl Noise {
    pub fn sigma(&self, x: &[f64]) -> f64 {
        match *self {
            Noise::Homoskedastic(s) => s,
            Noise::SumSquared => 0.15 * (1.0 + (x[1] + x[2]) * (x[1] + x[2])),
            Noise::GpaInternship => {
                let t = x[0] / 3.0 + x[1];
                0.2 * (1.0 + t * t)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DgpSpec {
    pub name: String,
    pub covariates: CovariateLaw,
    pub beta0: Vec<f64>,
    pub noise: Noise,
    pub tau: f64,
    /// Coefficient pinned to 1 in the bound problems.
    pub normalized_index: usize,
    /// Coefficient whose identified interval the bound experiments report.
    pub target_index: usize,
}

/// Noise sharing within clusters of consecutive rows.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Clustering {
    pub size: usize,
    /// Within-cluster correlation of the standardized noise.
    pub rho: f64,
}

impl Clustering {
    pub const DEFAULT: Clustering = Clustering { size: 5, rho: 0.5 };
}

impl DgpSpec {
    pub fn binned_normal() -> Self {
        let cuts = [0.2, 0.4, 0.6, 0.8].iter().map(|&p| inv_norm_cdf(p).expect("interior level")).collect();
        Self {
            name: "appendixB".into(),
            covariates: CovariateLaw::BinnedNormal { rho: 0.25, cuts },
            beta0: vec![0.5, 1.0, 2.0],
            noise: Noise::SumSquared,
            tau: 0.5,
            normalized_index: 1,
            target_index: 2,
        }
    }

    pub fn kls(heteroskedastic: bool) -> Self {
        let mut points = Vec::with_capacity(12);
        for ti in [0.0, 1.0] {
            for step in 0..6 {
                points.push(vec![3.0 + 0.2 * f64::from(step), ti, 1.0]);
            }
        }
        Self {
            name: "kls".into(),
            covariates: CovariateLaw::EqualCells { points },
            beta0: vec![1.0, 0.4, -3.7],
            noise: if heteroskedastic { Noise::GpaInternship } else { Noise::Homoskedastic(0.5) },
            tau: 0.5,
            normalized_index: 0,
            target_index: 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.beta0.len()
    }

    /// Population support in a fixed order.
    pub fn support(&self) -> Vec<Vec<f64>> {
        match &self.covariates {
            CovariateLaw::EqualCells { points } => points.clone(),
            CovariateLaw::BinnedNormal { cuts, .. } => {
                let levels = cuts.len() + 1;
                let center = (levels / 2) as f64;
                let mut pts = Vec::with_capacity(levels * levels);
                for a in 0..levels {
                    for b in 0..levels {
                        pts.push(vec![1.0, a as f64 - center, b as f64 - center]);
                    }
                }
                pts
            }
        }
    }

    /// Population cell probabilities, aligned with [`support`](Self::support).
    pub fn cell_probabilities(&self) -> Vec<f64> {
        match &self.covariates {
            CovariateLaw::EqualCells { points } => vec![1.0 / points.len() as f64; points.len()],
            CovariateLaw::BinnedNormal { rho, cuts } => {
                let mut edges = vec![f64::NEG_INFINITY];
                edges.extend_from_slice(cuts);
                edges.push(f64::INFINITY);
                let levels = cuts.len() + 1;
                let mut probs = Vec::with_capacity(levels * levels);
                for a in 0..levels {
                    for b in 0..levels {
                        probs.push(bivariate_rect_prob(edges[a], edges[a + 1], edges[b], edges[b + 1], *rho));
                    }
                }
                probs
            }
        }
    }

    pub fn index(&self, x: &[f64]) -> f64 {
        self.beta0.iter().zip(x).map(|(b, v)| b * v).sum()
    }

    /// `P(Y = 1 | X = x) = Φ(x'β₀ / σ(x))`.
    pub fn prob_one(&self, x: &[f64]) -> f64 {
        norm_cdf(self.index(x) / self.noise.sigma(x))
    }

    /// `f(x_j) = P(Y = 1 | x_j) - τ` over the support.
    pub fn f_values(&self) -> Vec<f64> {
        self.support().iter().map(|x| self.prob_one(x) - self.tau).collect()
    }

    /// Random-design `g₀(x_j) = f(x_j) p(x_j)`.
    pub fn g0_random(&self) -> Vec<f64> {
        self.f_values().iter().zip(self.cell_probabilities()).map(|(f, p)| f * p).collect()
    }

    /// Bound spec for coefficient vector `r` under this design's normalization.
    pub fn bounds_spec(&self, target: Vec<f64>) -> BoundsSpec {
        BoundsSpec::new(target).with_normalized(self.normalized_index)
    }

    /// Bound spec for the design's target coefficient.
    pub fn target_spec(&self) -> BoundsSpec {
        let mut r = vec![0.0; self.dim()];
        r[self.target_index] = 1.0;
        self.bounds_spec(r)
    }

    /// Draw `n` observations for replication `rep`.
    pub fn generate(
        &self,
        n: usize,
        design: Design,
        seed: u64,
        rep: u64,
        cluster: Option<Clustering>,
    ) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::validation("sample size must be positive"));
        }
        if let Some(c) = cluster {
            if c.size == 0 {
                return Err(Error::validation("cluster size must be positive"));
            }
            check_unit_open("cluster rho", c.rho)?;
        }
        let mut rng = rep_rng(seed, rep);
        let mut obs = Vec::with_capacity(n);
        let mut shared = 0.0;
        match &self.covariates {
            CovariateLaw::EqualCells { points } => {
                if !n.is_multiple_of(points.len()) {
                    return Err(Error::validation(format!(
                        "sample size {n} is not a multiple of the {} design cells",
                        points.len()
                    )));
                }
                for i in 0..n {
                    let x = points[i % points.len()].clone();
                    let v = self.draw_noise(&mut rng, i, cluster, &mut shared);
                    obs.push(self.observation(x, v, i, cluster));
                }
            }
            CovariateLaw::BinnedNormal { rho, cuts } => {
                let center = (cuts.len() / 2) as f64;
                let bin = |w: f64| cuts.iter().filter(|c| w > **c).count() as f64 - center;
                let tail = sqrt(1.0 - rho * rho);
                for i in 0..n {
                    let z1 = std_normal(&mut rng);
                    let z2 = std_normal(&mut rng);
                    let x = vec![1.0, bin(z1), bin(rho * z1 + tail * z2)];
                    let v = self.draw_noise(&mut rng, i, cluster, &mut shared);
                    obs.push(self.observation(x, v, i, cluster));
                }
            }
        }
        Dataset::new(obs, design, self.tau)
    }

    fn draw_noise(&self, rng: &mut ChaCha8Rng, i: usize, cluster: Option<Clustering>, shared: &mut f64) -> f64 {
        match cluster {
            None => std_normal(rng),
            Some(c) => {
                if i.is_multiple_of(c.size) {
                    *shared = std_normal(rng);
                }
                sqrt(c.rho) * *shared + sqrt(1.0 - c.rho) * std_normal(rng)
            }
        }
    }

    fn observation(&self, x: Vec<f64>, v: f64, i: usize, cluster: Option<Clustering>) -> Observation {
        let y = u8::from(self.index(&x) + self.noise.sigma(&x) * v >= 0.0);
        let obs = Observation::new(y, x);
        match cluster {
            Some(c) => obs.with_cluster((i / c.size) as u64),
            None => obs,
        }
    }

    /// Exact population signs and the identified interval of the target.
    pub fn population_oracle(&self) -> Result<Population> {
        let support = self.support();
        let f = self.f_values();
        if let Some(j) = f.iter().position(|v| v.abs() < 1e-12) {
            return Err(Error::MarginViolated { index: j });
        }
        let screening = Screening { directions: f.iter().map(|v| Direction::from_sign(*v)).collect() };
        let spec = self.target_spec();
        let rows = build_constraints(&support, &screening, &spec)?;
        let target = bound_rows(&rows, &spec, &spec.target, &spec.target)?;
        Ok(Population { support, f, screening, target })
    }

    /// Population identified interval of `x'β` at every support point.
    pub fn population_point_bounds(&self) -> Result<Vec<BoundInterval>> {
        let pop = self.population_oracle()?;
        let spec = self.target_spec();
        let rows = build_constraints(&pop.support, &pop.screening, &spec)?;
        pop.support
            .iter()
            .map(|x| {
                let s = self.bounds_spec(x.clone());
                bound_rows(&rows, &s, x, x)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub support: Vec<Vec<f64>>,
    pub f: Vec<f64>,
    pub screening: Screening,
    pub target: BoundInterval,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::group;

    #[test]
    fn binned_normal_population_interval() {
        let pop = DgpSpec::binned_normal().population_oracle().unwrap();
        assert!((pop.target.lower - 1.5).abs() <= 1e-9);
        assert!((pop.target.upper - 3.0).abs() <= 1e-9);
        for (x, d) in pop.support.iter().zip(&pop.screening.directions) {
            assert_eq!(*d, Direction::from_sign(0.5 + x[1] + 2.0 * x[2]));
        }
    }

    #[test]
    fn binned_normal_cells_and_margins() {
        let dgp = DgpSpec::binned_normal();
        let probs = dgp.cell_probabilities();
        assert_eq!(probs.len(), 25);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let data = dgp.generate(20_000, Design::Fixed, 3, 0, None).unwrap();
        let grouped = group(&data);
        assert_eq!(grouped.num_groups(), 25);
        for level in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            let freq = data.observations().iter().filter(|o| o.x[1] == level).count() as f64 / 20_000.0;
            assert!((freq - 0.2).abs() <= 3.0 * sqrt(0.16 / 20_000.0), "{level}: {freq}");
        }
    }

    #[test]
    fn kls_signs_and_groups() {
        let dgp = DgpSpec::kls(false);
        let pop = dgp.population_oracle().unwrap();
        for (x, d) in pop.support.iter().zip(&pop.screening.directions) {
            assert_eq!(*d, Direction::from_sign(x[0] + 0.4 * x[1] - 3.7));
        }
        let data = dgp.generate(2880, Design::Fixed, 1, 0, None).unwrap();
        assert_eq!(group(&data).num_groups(), 12);
        assert!(dgp.generate(100, Design::Fixed, 1, 0, None).is_err());
    }

    #[test]
    fn boundary_cell_is_a_margin_error() {
        let mut dgp = DgpSpec::kls(false);
        dgp.beta0 = vec![1.0, 0.0, -3.0];
        assert!(matches!(dgp.population_oracle(), Err(Error::MarginViolated { index: 0 })));
    }

    #[test]
    fn generation_is_deterministic_per_stream() {
        let dgp = DgpSpec::binned_normal();
        let a = dgp.generate(50, Design::Random, 9, 4, None).unwrap();
        let b = dgp.generate(50, Design::Random, 9, 4, None).unwrap();
        let c = dgp.generate(50, Design::Random, 9, 5, None).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn clusters_are_consecutive_blocks() {
        let data = DgpSpec::kls(true).generate(60, Design::Fixed, 2, 0, Some(Clustering::DEFAULT)).unwrap();
        let ids: Vec<u64> = data.observations().iter().map(|o| o.cluster.unwrap()).collect();
        assert_eq!(ids[..6], [0, 0, 0, 0, 0, 1]);
        assert_eq!(*ids.last().unwrap(), 11);
    }
}
