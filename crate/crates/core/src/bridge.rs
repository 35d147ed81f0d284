//! Bridge functions linking a latent Gaussian correlation to the population
//! Kendall statistic of the observed (possibly discretized) pair, cutoff
//! estimation, and the monotone inversion used to turn a sample τ into a
//! latent correlation estimate.
//!
//! Supported pairs:
//!
//! | pair                         | τᵃ bridge                     | τᵇ bridge (first order) |
//! |------------------------------|-------------------------------|-------------------------|
//! | continuous – continuous      | `(2/π) asin r`                | same                    |
//! | p-level ordinal – continuous | sum over adjacent cutoffs     | binary only             |
//! | ordinal – ordinal, ≤ 3 × 3   | ternary/binary closed forms   | binary – binary only    |
//!
//! All bridges are strictly increasing in `r`, so inversion is a bracketed
//! root find.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_2_PI, FRAC_PI_2, SQRT_2};

use crate::error::{Error, Result};
pub use crate::kendall::TauVariant;
use crate::normal::{
    bivariate_cdf_excess,
    bivariate_cdf, bivariate_pdf, std_cdf, std_quantile, trivariate_cdf, trivariate_cdf_dr,
};

/// Half-width of the excluded neighbourhood of `±1` for inverted correlations.
pub const CLAMP_DELTA: f64 = 1e-6;

/// Largest `binom(n, 2)` accepted by [`tau_b_second_order`].
pub const SECOND_ORDER_MAX_PAIRS: u64 = 10_000;

// Newton step size at which the root counts as found; a tolerance on the
// residual alone stops too early where the bridge is nearly flat.
const STEP_TOL: f64 = 1e-13;
const MAX_ITERATIONS: usize = 200;
const PRUNE: f64 = 1e-16;

/// Thresholds `Δ¹ ≤ … ≤ Δ^{p−1}` of one ordinal variable on the latent normal
/// scale. Finite entries are strictly increasing; `±∞` may repeat at the ends
/// (empty extreme levels).
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CutoffVector(Vec<f64>);

impl CutoffVector {
    pub fn new(cutoffs: Vec<f64>) -> Result<Self> {
        if cutoffs.iter().any(|c| c.is_nan()) {
            return Err(Error::InvalidCutoffs("NaN cutoff".into()));
        }
        for w in cutoffs.windows(2) {
            let ok = w[0] < w[1] || (w[0] == w[1] && w[0].is_infinite());
            if !ok {
                return Err(Error::InvalidCutoffs(format!(
                    "cutoffs must be increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self(cutoffs))
    }

    /// Cutoffs at `Φ⁻¹(l/p)`, giving equal mass to every level.
    pub fn equal_mass(levels: usize) -> Self {
        let p = levels as f64;
        Self(
            (1..levels)
                .map(|l| std_quantile(l as f64 / p).expect("l/p lies in (0, 1)"))
                .collect(),
        )
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Declared level count, `len + 1`.
    pub fn levels(&self) -> usize {
        self.0.len() + 1
    }

    /// Only the finite cutoffs; infinite ones bound empty levels.
    pub fn finite(&self) -> Vec<f64> {
        self.0.iter().copied().filter(|c| c.is_finite()).collect()
    }

    /// Number of levels with positive probability.
    pub fn effective_levels(&self) -> usize {
        self.finite().len() + 1
    }
}

/// Estimates cutoffs `Δ̂^l = Φ⁻¹(#{X ≤ l − 1} / n)` for codes in `0..levels`.
pub fn estimate_cutoffs(codes: &[usize], levels: usize) -> Result<CutoffVector> {
    if codes.is_empty() {
        return Err(Error::TooFewObservations { needed: 1, got: 0 });
    }
    if levels < 2 {
        return Err(Error::InvalidCutoffs(format!("need at least 2 levels, got {levels}")));
    }
    let mut counts = vec![0usize; levels];
    for &c in codes {
        if c >= levels {
            return Err(Error::CodeOutOfRange {
                code: c as f64,
                levels,
            });
        }
        counts[c] += 1;
    }
    let n = codes.len() as f64;
    let mut cumulative = 0usize;
    let mut cutoffs = Vec::with_capacity(levels - 1);
    for &count in &counts[..levels - 1] {
        cumulative += count;
        cutoffs.push(std_quantile(cumulative as f64 / n)?);
    }
    // Empty interior levels give coincident finite cutoffs; callers collapse
    // such levels before building a bridge.
    Ok(CutoffVector(cutoffs))
}

/// Declared types of a variable pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum BridgeKind {
    ContinuousContinuous,
    /// First variable ordinal with `levels` levels, second continuous.
    OrdinalContinuous { levels: usize },
    OrdinalOrdinal { levels_j: usize, levels_k: usize },
}

/// Value and slope of a bridge at one correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeEval {
    pub value: f64,
    /// `∂F/∂r`, strictly positive.
    pub derivative: f64,
}

/// Result of inverting a bridge at a sample statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion {
    pub r: f64,
    /// The statistic lay outside the achievable range and was clamped.
    pub clamped: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Form {
    Sine,
    OrdinalContinuous(Vec<f64>),
    BinaryBinary(f64, f64),
    BinaryTernary(f64, [f64; 2]),
    TernaryTernary([f64; 2], [f64; 2]),
    TauBBinaryContinuous(f64),
    TauBBinaryBinary(f64, f64),
}

/// A bridge function with its cutoffs fixed, ready for evaluation and
/// inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct Bridge {
    kind: BridgeKind,
    variant: TauVariant,
    form: Form,
}

impl Bridge {
    /// Builds the bridge for `kind` under `variant`. Cutoffs are required for
    /// every ordinal side; the ordinal side of an ordinal–continuous pair is
    /// always `cutoffs_j`.
    pub fn new(
        kind: BridgeKind,
        variant: TauVariant,
        cutoffs_j: Option<&CutoffVector>,
        cutoffs_k: Option<&CutoffVector>,
    ) -> Result<Self> {
        let need = |c: Option<&CutoffVector>, levels: usize, side: &str| -> Result<Vec<f64>> {
            let c = c.ok_or_else(|| Error::InvalidCutoffs(format!("missing cutoffs for {side}")))?;
            if c.levels() != levels {
                return Err(Error::InvalidCutoffs(format!(
                    "{side}: {} cutoffs for {levels} levels",
                    c.as_slice().len()
                )));
            }
            let f = c.finite();
            if f.is_empty() {
                return Err(Error::DegenerateBridge(format!(
                    "{side} has a single populated level"
                )));
            }
            Ok(f)
        };
        let form = match kind {
            BridgeKind::ContinuousContinuous => Form::Sine,
            BridgeKind::OrdinalContinuous { levels } => {
                let d = need(cutoffs_j, levels, "ordinal variable")?;
                match variant {
                    TauVariant::TauA => Form::OrdinalContinuous(d),
                    TauVariant::TauB if d.len() == 1 => Form::TauBBinaryContinuous(d[0]),
                    TauVariant::TauB => {
                        return Err(Error::UnsupportedBridge(format!(
                            "tau-b bridge for a {}-level ordinal and a continuous variable",
                            d.len() + 1
                        )))
                    }
                }
            }
            BridgeKind::OrdinalOrdinal { levels_j, levels_k } => {
                let dj = need(cutoffs_j, levels_j, "first ordinal variable")?;
                let dk = need(cutoffs_k, levels_k, "second ordinal variable")?;
                match (variant, dj.len(), dk.len()) {
                    (TauVariant::TauB, 1, 1) => Form::TauBBinaryBinary(dj[0], dk[0]),
                    (TauVariant::TauB, a, b) => {
                        return Err(Error::UnsupportedBridge(format!(
                            "tau-b bridge for {} x {} levels",
                            a + 1,
                            b + 1
                        )))
                    }
                    (TauVariant::TauA, 1, 1) => Form::BinaryBinary(dj[0], dk[0]),
                    (TauVariant::TauA, 1, 2) => Form::BinaryTernary(dj[0], [dk[0], dk[1]]),
                    (TauVariant::TauA, 2, 1) => Form::BinaryTernary(dk[0], [dj[0], dj[1]]),
                    (TauVariant::TauA, 2, 2) => {
                        Form::TernaryTernary([dj[0], dj[1]], [dk[0], dk[1]])
                    }
                    (TauVariant::TauA, a, b) => {
                        return Err(Error::UnsupportedBridge(format!(
                            "tau-a bridge for {} x {} ordinal levels",
                            a + 1,
                            b + 1
                        )))
                    }
                }
            }
        };
        Ok(Self {
            kind,
            variant,
            form,
        })
    }

    pub fn kind(&self) -> BridgeKind {
        self.kind
    }

    pub fn variant(&self) -> TauVariant {
        self.variant
    }

    /// Evaluates the bridge and its slope at `r`.
    pub fn forward(&self, r: f64) -> BridgeEval {
        match &self.form {
            Form::Sine => BridgeEval {
                value: FRAC_2_PI * r.asin(),
                derivative: FRAC_2_PI / (1.0 - r * r).sqrt(),
            },
            Form::OrdinalContinuous(d) => ordinal_continuous(r, d),
            Form::BinaryBinary(dj, dk) => binary_binary(r, *dj, *dk),
            Form::BinaryTernary(dj, dk) => binary_ternary(r, *dj, *dk),
            Form::TernaryTernary(dj, dk) => ternary_ternary(r, *dj, *dk),
            Form::TauBBinaryContinuous(d) => tau_b_binary_continuous(r, *d),
            Form::TauBBinaryBinary(dj, dk) => tau_b_binary_binary(r, *dj, *dk),
        }
    }

    /// Achievable statistic range `[F(−1 + δ), F(1 − δ)]`.
    pub fn range(&self) -> (f64, f64) {
        let hi = 1.0 - CLAMP_DELTA;
        (self.forward(-hi).value, self.forward(hi).value)
    }

    /// Solves `F(r) = tau_hat` for `r ∈ [−1 + δ, 1 − δ]`.
    ///
    /// Newton's method starts from `sin(π τ̂ / 2)` and falls back to bisection
    /// whenever a step leaves the current bracket. Statistics outside the
    /// achievable range are clamped to its endpoints.
    pub fn invert(&self, tau_hat: f64) -> Result<Inversion> {
        if tau_hat.is_nan() {
            return Err(Error::InvalidConfig("statistic is NaN".into()));
        }
        let hi = 1.0 - CLAMP_DELTA;
        let lo = -hi;
        if self.form == Form::Sine {
            let r = (FRAC_PI_2 * tau_hat.clamp(-1.0, 1.0)).sin();
            return Ok(Inversion {
                r: r.clamp(lo, hi),
                clamped: r.abs() > hi,
                iterations: 0,
            });
        }
        let f_lo = self.forward(lo).value;
        let f_hi = self.forward(hi).value;
        if tau_hat <= f_lo {
            return Ok(Inversion {
                r: lo,
                clamped: tau_hat < f_lo,
                iterations: 0,
            });
        }
        if tau_hat >= f_hi {
            return Ok(Inversion {
                r: hi,
                clamped: tau_hat > f_hi,
                iterations: 0,
            });
        }
        let (mut a, mut b) = (lo, hi);
        let mut r = (FRAC_PI_2 * tau_hat).sin().clamp(lo, hi);
        let mut residual = f64::INFINITY;
        for it in 1..=MAX_ITERATIONS {
            let eval = self.forward(r);
            residual = eval.value - tau_hat;
            if residual == 0.0 || residual.abs() <= STEP_TOL * eval.derivative {
                return Ok(Inversion {
                    r,
                    clamped: false,
                    iterations: it,
                });
            }
            if residual < 0.0 {
                a = r;
            } else {
                b = r;
            }
            if b - a <= 4.0 * f64::EPSILON {
                return Ok(Inversion {
                    r,
                    clamped: false,
                    iterations: it,
                });
            }
            let newton = r - residual / eval.derivative;
            r = if eval.derivative > 0.0 && newton > a && newton < b {
                newton
            } else {
                0.5 * (a + b)
            };
        }
        Err(Error::NoConvergence {
            iterations: MAX_ITERATIONS,
            lo: a,
            hi: b,
            residual,
        })
    }
}

/// Evaluates the bridge of `kind` at `r`; see [`Bridge::forward`].
pub fn bridge_forward(
    r: f64,
    kind: BridgeKind,
    cutoffs_j: Option<&CutoffVector>,
    cutoffs_k: Option<&CutoffVector>,
) -> Result<BridgeEval> {
    Ok(Bridge::new(kind, TauVariant::TauA, cutoffs_j, cutoffs_k)?.forward(r))
}

/// First-order τᵇ bridge; defined for binary–continuous and binary–binary.
pub fn bridge_forward_tau_b(
    r: f64,
    kind: BridgeKind,
    cutoffs_j: Option<&CutoffVector>,
    cutoffs_k: Option<&CutoffVector>,
) -> Result<f64> {
    Ok(Bridge::new(kind, TauVariant::TauB, cutoffs_j, cutoffs_k)?
        .forward(r)
        .value)
}

/// Inverts the τᵃ bridge of `kind` at `tau_hat`; see [`Bridge::invert`].
pub fn invert_bridge(
    tau_hat: f64,
    kind: BridgeKind,
    cutoffs_j: Option<&CutoffVector>,
    cutoffs_k: Option<&CutoffVector>,
) -> Result<Inversion> {
    Bridge::new(kind, TauVariant::TauA, cutoffs_j, cutoffs_k)?.invert(tau_hat)
}

/// Ordinal–continuous τᵃ bridge
/// `Σ_l 4Φ₃(Δ^l, Δ^{l+1}, 0) − 2Φ(Δ^l)Φ(Δ^{l+1})` with `Δ^p = +∞`.
///
/// Terms whose cutoffs are both infinite vanish, so trailing `+∞` cutoffs
/// leave the value unchanged.
pub fn ordinal_continuous(r: f64, cutoffs: &[f64]) -> BridgeEval {
    let mut value = 0.0;
    let mut derivative = 0.0;
    for l in 0..cutoffs.len() {
        let lower = cutoffs[l];
        let upper = cutoffs.get(l + 1).copied().unwrap_or(f64::INFINITY);
        if lower.is_infinite() {
            continue;
        }
        value += 4.0 * trivariate_cdf(lower, upper, 0.0, r) - 2.0 * std_cdf(lower) * std_cdf(upper);
        derivative += 4.0 * trivariate_cdf_dr(lower, upper, 0.0, r);
    }
    BridgeEval { value, derivative }
}

/// Binary–binary τᵃ bridge `2(Φ₂(Δ_j, Δ_k, r) − Φ(Δ_j)Φ(Δ_k))`.
pub fn binary_binary(r: f64, dj: f64, dk: f64) -> BridgeEval {
    BridgeEval {
        value: 2.0 * bivariate_cdf_excess(dj, dk, r),
        derivative: 2.0 * bivariate_pdf(dj, dk, r),
    }
}

/// Binary–ternary τᵃ bridge with the binary cutoff `dj` and the ternary
/// cutoffs `dk`.
pub fn binary_ternary(r: f64, dj: f64, dk: [f64; 2]) -> BridgeEval {
    let [k1, k2] = dk;
    let p_j = std_cdf(dj);
    let value = 2.0 * bivariate_cdf(dj, k2, r) * (1.0 - std_cdf(k1))
        - 2.0 * std_cdf(k2) * (p_j - bivariate_cdf(dj, k1, r));
    let derivative = 2.0 * bivariate_pdf(dj, k2, r) * (1.0 - std_cdf(k1))
        + 2.0 * std_cdf(k2) * bivariate_pdf(dj, k1, r);
    BridgeEval { value, derivative }
}

/// Ternary–ternary τᵃ bridge
/// `2Φ₂(Δ_j², Δ_k², r)Φ₂(−Δ_j¹, −Δ_k¹, r) − 2[Φ(Δ_j²) − Φ₂(Δ_j², Δ_k¹, r)][Φ(Δ_k²) − Φ₂(Δ_j¹, Δ_k², r)]`.
///
/// Second cutoffs may be `+∞`, reducing to the binary cases.
pub fn ternary_ternary(r: f64, dj: [f64; 2], dk: [f64; 2]) -> BridgeEval {
    let [j1, j2] = dj;
    let [k1, k2] = dk;
    let upper = bivariate_cdf(j2, k2, r);
    let lower = bivariate_cdf(-j1, -k1, r);
    let left = std_cdf(j2) - bivariate_cdf(j2, k1, r);
    let right = std_cdf(k2) - bivariate_cdf(j1, k2, r);
    let value = 2.0 * upper * lower - 2.0 * left * right;
    let derivative = 2.0
        * (bivariate_pdf(j2, k2, r) * lower + upper * bivariate_pdf(-j1, -k1, r))
        + 2.0 * (bivariate_pdf(j2, k1, r) * right + left * bivariate_pdf(j1, k2, r));
    BridgeEval { value, derivative }
}

/// First-order τᵇ bridge for a binary variable with cutoff `d` against a
/// continuous one: `(4Φ₂(Δ, 0, r/√2) − 2Φ(Δ)) / √(2Φ(Δ) − 2Φ(Δ)²)`.
pub fn tau_b_binary_continuous(r: f64, d: f64) -> BridgeEval {
    let p = std_cdf(d);
    let denom = (2.0 * p - 2.0 * p * p).sqrt();
    let kappa = r * FRAC_1_SQRT_2;
    BridgeEval {
        value: (4.0 * bivariate_cdf(d, 0.0, kappa) - 2.0 * p) / denom,
        derivative: 4.0 * FRAC_1_SQRT_2 * bivariate_pdf(d, 0.0, kappa) / denom,
    }
}

/// First-order τᵇ bridge for two binary variables:
/// `(Φ₂(Δ_j, Δ_k, r) − Φ(Δ_j)Φ(Δ_k)) / √((Φ(Δ_j) − Φ(Δ_j)²)(Φ(Δ_k) − Φ(Δ_k)²))`.
pub fn tau_b_binary_binary(r: f64, dj: f64, dk: f64) -> BridgeEval {
    let pj = std_cdf(dj);
    let pk = std_cdf(dk);
    let denom = ((pj - pj * pj) * (pk - pk * pk)).sqrt();
    BridgeEval {
        value: (bivariate_cdf(dj, dk, r) - pj * pk) / denom,
        derivative: bivariate_pdf(dj, dk, r) / denom,
    }
}

/// Second-order Taylor approximation of `E(τ̂ᵇ)` for a binary variable with
/// cutoff `delta_j` against a continuous one at sample size `n`.
///
/// Writing `τ̂ᵇ = (C − D) / (√N √(C + D))` with `N = binom(n, 2)`, the
/// approximation is `[μ_Y/μ_X + σ_X² μ_Y/μ_X³ − σ_XY/μ_X²] / √N` for
/// `Y = C − D` and `X = √(C + D)`. `μ_X` and `σ_X²` come from the binomial law
/// of the number of zeros; the covariance is an exact double sum over the
/// multinomial law of `(C, D)` with per-pair probabilities
/// `p_C = 2(Φ₂(Δ, 0, r/√2) − Φ₃(Δ, Δ, 0))` and
/// `p_D = 2(Φ₂(Δ, 0, −r/√2) − Φ₃(Δ, Δ, 0))`, pruning terms below `1e−16`.
pub fn tau_b_second_order(r: f64, delta_j: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: n });
    }
    let pairs = (n as u64) * (n as u64 - 1) / 2;
    if pairs > SECOND_ORDER_MAX_PAIRS {
        let max = (1..).take_while(|m: &usize| (m * (m - 1) / 2) as u64 <= SECOND_ORDER_MAX_PAIRS).last().unwrap_or(2);
        return Err(Error::Intractable { n, max });
    }
    let p0 = std_cdf(delta_j);
    if p0 <= 0.0 || p0 >= 1.0 {
        return Err(Error::DegenerateBridge("binary cutoff at infinity".into()));
    }
    let nf = pairs as f64;
    let kappa = r * FRAC_1_SQRT_2;
    let tau_a = 4.0 * bivariate_cdf(delta_j, 0.0, kappa) - 2.0 * p0;
    let mu_y = nf * tau_a;

    // μ_X = E√(n₀ n₁), n₀ ~ Bin(n, Φ(Δ))
    let mu_x: f64 = (0..=n)
        .map(|n0| {
            let w = binomial_pmf(n as u64, n0 as u64, p0);
            w * ((n0 * (n - n0)) as f64).sqrt()
        })
        .sum();
    let var_x = nf * (2.0 * p0 - 2.0 * p0 * p0) - mu_x * mu_x;

    let both_low = trivariate_cdf(delta_j, delta_j, 0.0, r);
    let p_c = (2.0 * (bivariate_cdf(delta_j, 0.0, kappa) - both_low)).max(0.0);
    let p_d = (2.0 * (bivariate_cdf(delta_j, 0.0, -kappa) - both_low)).max(0.0);
    let moments = multinomial_moments(pairs, p_c, p_d);
    let cov = moments.cross - moments.diff * moments.root;

    let first = mu_y / mu_x;
    let value = (first + var_x * mu_y / mu_x.powi(3) - cov / (mu_x * mu_x)) / nf.sqrt();
    Ok(value)
}

/// Moments of `(C, D)` under the multinomial pair model.
struct PairMoments {
    /// `E[(C − D)√(C + D)]`
    cross: f64,
    /// `E[C − D]`
    diff: f64,
    /// `E[√(C + D)]`
    root: f64,
}

fn ln_binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    if p <= 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p >= 1.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()
}

fn binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    ln_binomial_pmf(n, k, p).exp()
}

fn ln_choose(n: u64, k: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

// Walks outward from the mode of a binomial until the pmf drops below the
// pruning threshold on both sides.
fn binomial_support(n: u64, p: f64) -> (u64, u64) {
    let mode = (((n + 1) as f64) * p).floor().min(n as f64) as u64;
    let mut lo = mode;
    while lo > 0 && binomial_pmf(n, lo - 1, p) >= PRUNE {
        lo -= 1;
    }
    let mut hi = mode;
    while hi < n && binomial_pmf(n, hi + 1, p) >= PRUNE {
        hi += 1;
    }
    (lo, hi)
}

// Double sum over (C, D) of the multinomial pmf, factorised as
// Bin(C; N, p_C) · Bin(D; N − C, p_D / (1 − p_C)).
fn multinomial_moments(pairs: u64, p_c: f64, p_d: f64) -> PairMoments {
    let mut cross = 0.0;
    let mut diff = 0.0;
    let mut root = 0.0;
    let (c_lo, c_hi) = binomial_support(pairs, p_c);
    let q = if p_c < 1.0 { (p_d / (1.0 - p_c)).min(1.0) } else { 0.0 };
    for c in c_lo..=c_hi {
        let w_c = binomial_pmf(pairs, c, p_c);
        if w_c < PRUNE {
            continue;
        }
        let rest = pairs - c;
        let (d_lo, d_hi) = binomial_support(rest, q);
        for d in d_lo..=d_hi {
            let w = w_c * binomial_pmf(rest, d, q);
            if w < PRUNE {
                continue;
            }
            let s = ((c + d) as f64).sqrt();
            let t = c as f64 - d as f64;
            cross += w * t * s;
            diff += w * t;
            root += w * s;
        }
    }
    PairMoments { cross, diff, root }
}

/// First-order τᵇ value for a binary–continuous pair; convenience wrapper
/// matching [`tau_b_second_order`]'s arguments.
pub fn tau_b_first_order(r: f64, delta_j: f64) -> f64 {
    tau_b_binary_continuous(r, delta_j).value
}

/// The binary–continuous τᵃ bridge `4Φ₂(Δ, 0, r/√2) − 2Φ(Δ)`.
pub fn binary_continuous(r: f64, d: f64) -> f64 {
    4.0 * bivariate_cdf(d, 0.0, r / SQRT_2) - 2.0 * std_cdf(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(v: &[f64]) -> CutoffVector {
        CutoffVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn cutoff_estimates() {
        let mut codes = vec![0usize; 25];
        codes.extend(vec![1usize; 75]);
        let c = estimate_cutoffs(&codes, 2).unwrap();
        assert!((c.as_slice()[0] + 0.674_489_750_196_081_7).abs() < 1e-12);

        let c = estimate_cutoffs(&[0; 10], 2).unwrap();
        assert_eq!(c.as_slice(), &[f64::INFINITY]);
        assert_eq!(c.effective_levels(), 1);

        let codes: Vec<usize> = (0..300).map(|i| i % 3).collect();
        let c = estimate_cutoffs(&codes, 3).unwrap();
        assert!((c.as_slice()[0] + 0.430_727_299_295_457_6).abs() < 1e-12);
        assert!((c.as_slice()[1] - 0.430_727_299_295_457_6).abs() < 1e-12);

        assert!(matches!(
            estimate_cutoffs(&[0, 3], 3),
            Err(Error::CodeOutOfRange { .. })
        ));
    }

    #[test]
    fn cutoff_vector_validation() {
        assert!(CutoffVector::new(vec![0.5, 0.1]).is_err());
        assert!(CutoffVector::new(vec![0.5, 0.5]).is_err());
        assert!(CutoffVector::new(vec![0.5, f64::INFINITY, f64::INFINITY]).is_ok());
        assert!(CutoffVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn zero_correlation_gives_zero() {
        let bb = binary_binary(0.0, 0.3, -1.1);
        assert!(bb.value.abs() < 1e-15);
        let tc = ordinal_continuous(0.0, &[-0.5, 0.7]);
        assert!(tc.value.abs() < 1e-14);
        assert!(tau_b_first_order(0.0, 0.0).abs() < 1e-15);
    }

    #[test]
    fn tau_b_binary_binary_limit() {
        let v = tau_b_binary_binary(1.0, 0.0, 0.0).value;
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ternary_reduces_to_binary_ternary() {
        for &r in &[-0.8, -0.2, 0.4, 0.9] {
            let full = ternary_ternary(r, [0.3, f64::INFINITY], [-0.4, 0.6]);
            let bt = binary_ternary(r, 0.3, [-0.4, 0.6]);
            assert!((full.value - bt.value).abs() < 1e-12);
            assert!((full.derivative - bt.derivative).abs() < 1e-10);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        let check = |f: &dyn Fn(f64) -> BridgeEval| {
            for &r in &[-0.85, -0.3, 0.0, 0.45, 0.9] {
                let fd = (f(r + h).value - f(r - h).value) / (2.0 * h);
                let an = f(r).derivative;
                assert!((fd - an).abs() < 1e-6, "r = {r}: {fd} vs {an}");
                assert!(an > 0.0);
            }
        };
        check(&|r| ordinal_continuous(r, &[-0.5, 0.7]));
        check(&|r| ordinal_continuous(r, &[-1.0, -0.2, 0.4, 1.3]));
        check(&|r| ternary_ternary(r, [-0.3, 0.8], [-1.0, 0.2]));
        check(&|r| binary_ternary(r, 0.4, [-0.6, 0.9]));
        check(&|r| binary_binary(r, -0.2, 0.7));
        check(&|r| tau_b_binary_continuous(r, 0.3));
        check(&|r| tau_b_binary_binary(r, 0.3, -0.5));
    }

    #[test]
    fn continuous_inversion_closed_form() {
        let inv = invert_bridge(0.5, BridgeKind::ContinuousContinuous, None, None).unwrap();
        assert!((inv.r - FRAC_1_SQRT_2).abs() < 1e-15);
        let inv = invert_bridge(1.0, BridgeKind::ContinuousContinuous, None, None).unwrap();
        assert_eq!(inv.r, 1.0 - CLAMP_DELTA);
        assert!(inv.clamped);
    }

    #[test]
    fn binary_binary_zero_inverts_to_zero() {
        let c = cv(&[0.0]);
        let kind = BridgeKind::OrdinalOrdinal {
            levels_j: 2,
            levels_k: 2,
        };
        let inv = invert_bridge(0.0, kind, Some(&c), Some(&c)).unwrap();
        assert!(inv.r.abs() < 1e-12);
    }

    #[test]
    fn ternary_continuous_round_trip() {
        let c = cv(&[-0.5, 0.7]);
        let kind = BridgeKind::OrdinalContinuous { levels: 3 };
        for i in -9..=9 {
            let r = i as f64 / 10.0;
            let tau = bridge_forward(r, kind, Some(&c), None).unwrap().value;
            let back = invert_bridge(tau, kind, Some(&c), None).unwrap();
            assert!((back.r - r).abs() < 1e-7, "r = {r}, got {}", back.r);
            assert!(!back.clamped);
        }
    }

    #[test]
    fn out_of_range_statistic_is_clamped() {
        let c = cv(&[0.0]);
        let b = Bridge::new(
            BridgeKind::OrdinalContinuous { levels: 2 },
            TauVariant::TauA,
            Some(&c),
            None,
        )
        .unwrap();
        let (_, top) = b.range();
        assert!(top < 0.51);
        let inv = b.invert(0.9).unwrap();
        assert!(inv.clamped);
        assert_eq!(inv.r, 1.0 - CLAMP_DELTA);
        let inv = b.invert(-0.9).unwrap();
        assert_eq!(inv.r, -1.0 + CLAMP_DELTA);
    }

    #[test]
    fn unsupported_kinds() {
        let c4 = CutoffVector::equal_mass(4);
        let kind = BridgeKind::OrdinalOrdinal {
            levels_j: 4,
            levels_k: 4,
        };
        assert!(matches!(
            Bridge::new(kind, TauVariant::TauA, Some(&c4), Some(&c4)),
            Err(Error::UnsupportedBridge(_))
        ));
        let c3 = CutoffVector::equal_mass(3);
        assert!(matches!(
            Bridge::new(
                BridgeKind::OrdinalContinuous { levels: 3 },
                TauVariant::TauB,
                Some(&c3),
                None
            ),
            Err(Error::UnsupportedBridge(_))
        ));
        let inf = cv(&[f64::INFINITY]);
        assert!(matches!(
            Bridge::new(
                BridgeKind::OrdinalContinuous { levels: 2 },
                TauVariant::TauB,
                Some(&inf),
                None
            ),
            Err(Error::DegenerateBridge(_))
        ));
    }

    #[test]
    fn second_order_ceiling() {
        assert!(tau_b_second_order(0.3, 0.0, 141).is_ok());
        assert!(matches!(
            tau_b_second_order(0.3, 0.0, 142),
            Err(Error::Intractable { n: 142, max: 141 })
        ));
    }

    #[test]
    fn second_order_symmetric_at_zero() {
        let v = tau_b_second_order(0.0, 0.0, 84).unwrap();
        assert!(v.abs() < 1e-3);
    }

    // E[(C−D)√(C+D)] conditioned on M = C + D ~ Bin(N, p_C + p_D):
    // E[C − D | M] = M (p_C − p_D)/(p_C + p_D).
    #[test]
    fn multinomial_double_sum_matches_conditional_form() {
        let (pairs, p_c, p_d) = (300u64, 0.31, 0.17);
        let m = multinomial_moments(pairs, p_c, p_d);
        let q = p_c + p_d;
        let mut cross = 0.0;
        let mut root = 0.0;
        for k in 0..=pairs {
            let w = binomial_pmf(pairs, k, q);
            let kf = k as f64;
            cross += w * kf * kf.sqrt() * (p_c - p_d) / q;
            root += w * kf.sqrt();
        }
        assert!((m.cross - cross).abs() < 1e-8 * cross.abs());
        assert!((m.root - root).abs() < 1e-10 * root);
        assert!((m.diff - pairs as f64 * (p_c - p_d)).abs() < 1e-8);
    }
}
