//! Standard normal distribution functions.
//!
//! `Φ` is evaluated through `erfc` so both tails keep full relative
//! accuracy. The quantile starts from Acklam's rational approximation and
//! takes one Halley step against that `Φ`.

use crate::error::{Error, Result};

const SQRT_2: f64 = core::f64::consts::SQRT_2;
/// `sqrt(2 * pi)`
const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / SQRT_2PI
}

/// Standard normal CDF `Φ(x)`.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Upper tail `1 - Φ(x)` without cancellation.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const D: [f64; 4] = [7.784_695_709_041_462e-3, 3.224_671_290_700_398e-1, 2.445_134_137_142_996, 3.754_408_661_907_416];
const P_LOW: f64 = 0.02425;

/// Rational initial guess, relative error about 1e-9.
fn acklam(p: f64) -> f64 {
    if p < P_LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Quantile for `p <= 0.5`, where `Φ(x)` carries full relative precision.
fn lower_quantile(p: f64) -> f64 {
    let x = acklam(p);
    let e = norm_cdf(x) - p;
    let u = e * SQRT_2PI * libm::exp(0.5 * x * x);
    x - u / (1.0 + 0.5 * x * u)
}

/// Inverse standard normal CDF, `Φ(z) = p`.
///
/// Upper-half arguments are reflected through `1 - p`, which is exact in
/// binary floating point for `p >= 0.5`.
pub fn inv_norm_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain { name: "p", value: p });
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if p < 0.5 {
        Ok(lower_quantile(p))
    } else {
        Ok(-lower_quantile(1.0 - p))
    }
}

/// Critical value `z_{1 - alpha / (2J)}` for a Bonferroni rectangle over `j` cells.
pub fn bonferroni_z(alpha: f64, j: usize) -> Result<f64> {
    crate::error::check_unit_open("alpha", alpha)?;
    inv_norm_cdf(1.0 - alpha / (2.0 * j.max(1) as f64))
}

const GL_NODES: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_3,
    0.219_086_362_515_982,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// `P(a1 < W1 <= b1, a2 < W2 <= b2)` for a standard bivariate normal with
/// correlation `rho`. Infinite limits are allowed.
///
/// Integrates the conditional probability of `W2` against the density of
/// `W1` with composite 10-point Gauss-Legendre on panels of width 0.1.
pub fn bivariate_rect_prob(a1: f64, b1: f64, a2: f64, b2: f64, rho: f64) -> f64 {
    const CUT: f64 = 9.0;
    let lo = a1.max(-CUT);
    let hi = b1.min(CUT);
    if hi <= lo {
        return 0.0;
    }
    let s = libm::sqrt(1.0 - rho * rho);
    let cond = |w: f64| {
        let upper = if b2.is_infinite() && b2 > 0.0 { 1.0 } else { norm_cdf((b2 - rho * w) / s) };
        let lower = if a2.is_infinite() && a2 < 0.0 { 0.0 } else { norm_cdf((a2 - rho * w) / s) };
        norm_pdf(w) * (upper - lower)
    };
    let panels = libm::ceil((hi - lo) / 0.1).max(1.0) as usize;
    let width = (hi - lo) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let mid = lo + (k as f64 + 0.5) * width;
        let half = 0.5 * width;
        let mut acc = 0.0;
        for (node, weight) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
            acc += weight * (cond(mid - half * node) + cond(mid + half * node));
        }
        total += acc * half;
    }
    total
}
