//! Univariate, bivariate and structured trivariate standard normal
//! distribution functions.
//!
//! Infinite arguments are resolved analytically before any quadrature is
//! attempted, so `±∞` can be passed wherever a cutoff may be unbounded.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use crate::error::{Error, Result};
use crate::quad;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const QUAD_TOL: f64 = 1e-14;

/// Arguments of the standard bivariate normal CDF `P(X < u, Y < v)` with
/// correlation `rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateArgs {
    pub u: f64,
    pub v: f64,
    pub rho: f64,
}

impl BivariateArgs {
    pub fn new(u: f64, v: f64, rho: f64) -> Self {
        Self { u, v, rho }
    }

    pub fn cdf(&self) -> f64 {
        bivariate_cdf(self.u, self.v, self.rho)
    }
}

/// Arguments of the structured trivariate CDF
/// `P(U₁ < a, U₂ < b, (V₁ − V₂)/√2 < c)` where `(U₁, V₁)` and `(U₂, V₂)` are
/// independent standard bivariate normal pairs with correlation `r`.
///
/// The implied covariance has unit diagonal, `Cov(U₁, U₂) = 0`,
/// `Cov(U₁, W) = r/√2` and `Cov(U₂, W) = −r/√2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrivariateArgs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r: f64,
}

impl TrivariateArgs {
    pub fn new(a: f64, b: f64, c: f64, r: f64) -> Self {
        Self { a, b, c, r }
    }

    pub fn cdf(&self) -> f64 {
        trivariate_cdf(self.a, self.b, self.c, self.r)
    }
}

pub fn std_pdf(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF.
pub fn std_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Inverse of [`std_cdf`]. Returns `∓∞` at `p ∈ {0, 1}`.
pub fn std_quantile(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityDomain(p));
    }
    if p == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if p == 1.0 {
        return Ok(f64::INFINITY);
    }
    if p > 0.5 {
        return Ok(-lower_quantile(1.0 - p));
    }
    Ok(lower_quantile(p))
}

// p in (0, 0.5]; rational initial guess followed by Halley steps on the CDF.
fn lower_quantile(p: f64) -> f64 {
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
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let mut x = if p < 0.02425 {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    for _ in 0..4 {
        let err = std_cdf(x) - p;
        let dens = std_pdf(x);
        if dens <= 0.0 {
            break;
        }
        let u = err / dens;
        let step = u / (1.0 + 0.5 * x * u);
        x -= step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Standard bivariate normal density.
pub fn bivariate_pdf(u: f64, v: f64, rho: f64) -> f64 {
    if u.is_infinite() || v.is_infinite() {
        return 0.0;
    }
    let one_minus = 1.0 - rho * rho;
    if one_minus <= 0.0 {
        return 0.0;
    }
    let q = (u * u - 2.0 * rho * u * v + v * v) / one_minus;
    (-0.5 * q).exp() / (2.0 * PI * one_minus.sqrt())
}

/// Standard bivariate normal CDF `P(X < u, Y < v)` with correlation `rho`.
///
/// Finite arguments use the integral over the correlation parameter,
/// `Φ(u)Φ(v) + (1/2π) ∫₀^{asin ρ} exp(−(u² + v² − 2uv sin θ) / (2cos²θ)) dθ`,
/// which has a bounded, smooth integrand on the whole of `(−1, 1)`.
pub fn bivariate_cdf(u: f64, v: f64, rho: f64) -> f64 {
    if u == f64::NEG_INFINITY || v == f64::NEG_INFINITY {
        return 0.0;
    }
    if u == f64::INFINITY {
        return std_cdf(v);
    }
    if v == f64::INFINITY {
        return std_cdf(u);
    }
    if rho >= 1.0 {
        return std_cdf(u.min(v));
    }
    if rho <= -1.0 {
        return (std_cdf(u) - std_cdf(-v)).max(0.0);
    }
    (std_cdf(u) * std_cdf(v) + bivariate_cdf_excess(u, v, rho)).clamp(0.0, 1.0)
}

/// `Φ₂(u, v, ρ) − Φ(u)Φ(v)` for finite `u, v` and `|ρ| < 1`, computed
/// without forming the difference so that it keeps full relative accuracy.
pub fn bivariate_cdf_excess(u: f64, v: f64, rho: f64) -> f64 {
    if rho == 0.0 || !u.is_finite() || !v.is_finite() {
        return 0.0;
    }
    let s = u * u + v * v;
    let p = 2.0 * u * v;
    let integrand = |theta: f64| {
        let (sin, cos) = theta.sin_cos();
        let c2 = cos * cos;
        if c2 <= 0.0 {
            return 0.0;
        }
        (-(s - p * sin) / (2.0 * c2)).exp()
    };
    quad::integrate(integrand, 0.0, rho.clamp(-1.0, 1.0).asin(), QUAD_TOL) / (2.0 * PI)
}

/// `∂Φ₂(u, v, ρ)/∂ρ`, which is the bivariate density.
pub fn bivariate_cdf_drho(u: f64, v: f64, rho: f64) -> f64 {
    bivariate_pdf(u, v, rho)
}

/// Structured trivariate normal CDF; see [`TrivariateArgs`].
///
/// Conditioning on `U₁ = x` leaves `(U₂, W)` bivariate normal with fixed
/// correlation `−κ/s` (`κ = r/√2`, `s = √(1 − κ²)`) and a mean shift linear in
/// `x`. Expanding that bivariate CDF over its correlation parameter makes the
/// integral over `x` Gaussian, so it is carried out in closed form and only a
/// single bounded integral over the correlation angle remains.
pub fn trivariate_cdf(a: f64, b: f64, c: f64, r: f64) -> f64 {
    if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY || c == f64::NEG_INFINITY {
        return 0.0;
    }
    let kappa = r * FRAC_1_SQRT_2;
    if a == f64::INFINITY {
        return bivariate_cdf(b, c, -kappa);
    }
    if b == f64::INFINITY {
        return bivariate_cdf(a, c, kappa);
    }
    if c == f64::INFINITY {
        return std_cdf(a) * std_cdf(b);
    }
    if r == 0.0 {
        return std_cdf(a) * std_cdf(b) * std_cdf(c);
    }
    let s = (1.0 - kappa * kappa).sqrt();
    let alpha = c / s;
    let beta = -kappa / s;
    let rho_c = (-kappa / s).clamp(-1.0, 1.0);
    let beta2 = beta * beta;
    let integrand = |theta: f64| {
        let (t, cos) = theta.sin_cos();
        if cos <= 0.0 {
            return 0.0;
        }
        let d2 = cos * cos + beta2;
        let d = d2.sqrt();
        let expo = -(b * b + alpha * alpha - 2.0 * b * t * alpha + beta2 * b * b) / (2.0 * d2);
        let arg = (a * d2 + beta * (alpha - b * t)) / (cos * d);
        cos / d * expo.exp() * std_cdf(arg)
    };
    let first = std_cdf(b) * bivariate_cdf(a, c, kappa);
    let second = quad::integrate(integrand, 0.0, rho_c.asin(), QUAD_TOL) / (2.0 * PI);
    (first + second).clamp(0.0, 1.0)
}

/// `∂Φ₃(a, b, c; r)/∂r` for `r ∈ (−1, 1)`.
pub fn trivariate_cdf_dr(a: f64, b: f64, c: f64, r: f64) -> f64 {
    if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY || c.is_infinite() {
        return 0.0;
    }
    let kappa = r * FRAC_1_SQRT_2;
    let k2 = kappa * kappa;
    let s2 = 1.0 - k2;
    let cond_sd = ((1.0 - 2.0 * k2) / s2).sqrt();
    let cond_cdf = |x: f64, mean: f64| {
        if x.is_infinite() {
            return std_cdf(x);
        }
        if cond_sd <= 0.0 {
            return if x > mean { 1.0 } else { 0.0 };
        }
        std_cdf((x - mean) / cond_sd)
    };
    // U₂ | U₁ = a, W = c and U₁ | U₂ = b, W = c
    let g13 = if a.is_infinite() {
        0.0
    } else {
        let mean2 = -kappa * (c - kappa * a) / s2;
        bivariate_pdf(a, c, kappa) * cond_cdf(b, mean2)
    };
    let g23 = if b.is_infinite() {
        0.0
    } else {
        let mean1 = kappa * (c + kappa * b) / s2;
        bivariate_pdf(b, c, -kappa) * cond_cdf(a, mean1)
    };
    (g13 - g23) / SQRT_2
}
