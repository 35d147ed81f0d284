//! Latent Gaussian copula sampling, the error-curve experiments, and
//! Monte-Carlo references for the bridge functions.
//!
//! Randomness comes from ChaCha8 seeded with the user seed; each replicate
//! gets its own stream (`set_stream`), so results do not depend on how
//! replicates are scheduled across threads.

use std::io::{self, Write};

use nalgebra::{Cholesky, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bridge::CutoffVector;
use crate::error::{Error, Result};
use crate::estimator::{estimate_with_config, ColumnSpec, EstimatorConfig};
use crate::kendall::{tau_statistics, TauVariant};

/// Correlations closer to ±1 than this are pulled back before sampling.
pub const CORRELATION_CAP: f64 = 1.0 - 1e-9;

/// Strictly increasing transform applied to a continuous latent column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub enum Transform {
    #[default]
    Identity,
    Exp,
    Cube,
    /// `1 / (1 + e^{−z})`
    Logistic,
}

impl Transform {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Transform::Identity => z,
            Transform::Exp => z.exp(),
            Transform::Cube => z * z * z,
            Transform::Logistic => 1.0 / (1.0 + (-z).exp()),
        }
    }
}

/// Generative model for one data set.
#[derive(Debug, Clone, PartialEq)]
pub struct CopulaSpec {
    pub sigma: DMatrix<f64>,
    pub transforms: Vec<Transform>,
    /// Cutoffs for discretized columns; `None` keeps the column continuous.
    pub discretization: Vec<Option<CutoffVector>>,
}

impl CopulaSpec {
    /// All columns continuous and untransformed.
    pub fn gaussian(sigma: DMatrix<f64>) -> Self {
        let d = sigma.nrows();
        Self {
            sigma,
            transforms: vec![Transform::Identity; d],
            discretization: vec![None; d],
        }
    }

    /// Two continuous columns with correlation `r`, capped at
    /// [`CORRELATION_CAP`] in magnitude.
    pub fn bivariate(r: f64) -> Self {
        let r = r.clamp(-CORRELATION_CAP, CORRELATION_CAP);
        Self::gaussian(DMatrix::from_row_slice(2, 2, &[1.0, r, r, 1.0]))
    }

    pub fn with_discretization(mut self, column: usize, cutoffs: CutoffVector) -> Self {
        self.discretization[column] = Some(cutoffs);
        self
    }

    pub fn with_transform(mut self, column: usize, t: Transform) -> Self {
        self.transforms[column] = t;
        self
    }

    /// Column specs matching this model's discretization.
    pub fn column_specs(&self) -> Vec<ColumnSpec> {
        self.discretization
            .iter()
            .enumerate()
            .map(|(j, c)| match c {
                Some(c) => ColumnSpec::ordinal(format!("V{}", j + 1), c.levels()),
                None => ColumnSpec::continuous(format!("V{}", j + 1)),
            })
            .collect()
    }

    fn validate(&self) -> Result<Cholesky<f64, nalgebra::Dyn>> {
        let d = self.sigma.nrows();
        if !self.sigma.is_square() {
            return Err(Error::InvalidMatrix("correlation matrix must be square".into()));
        }
        if self.transforms.len() != d || self.discretization.len() != d {
            return Err(Error::LengthMismatch {
                left: d,
                right: self.transforms.len().min(self.discretization.len()),
            });
        }
        for i in 0..d {
            if self.sigma[(i, i)] != 1.0 {
                return Err(Error::InvalidMatrix(format!("diagonal entry {i} is not 1")));
            }
            for j in 0..i {
                if self.sigma[(i, j)] != self.sigma[(j, i)] {
                    return Err(Error::InvalidMatrix(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Cholesky::new(self.sigma.clone()).ok_or(Error::NotPositiveDefinite)
    }
}

/// Level of `z` under `cutoffs`: the number of cutoffs strictly below `z`.
pub fn discretize(z: f64, cutoffs: &[f64]) -> usize {
    cutoffs.partition_point(|&c| c < z)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `n` rows from the copula model.
pub fn sample_copula(spec: &CopulaSpec, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    let chol = spec.validate()?;
    let mut rng = rng_for(seed, 0);
    Ok(sample_with(spec, &chol.l(), n, &mut rng))
}

fn sample_with(spec: &CopulaSpec, l: &DMatrix<f64>, n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let d = spec.sigma.nrows();
    let mut out = DMatrix::zeros(n, d);
    let mut e = vec![0.0; d];
    for i in 0..n {
        for v in e.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        for j in 0..d {
            let z: f64 = (0..=j).map(|k| l[(j, k)] * e[k]).sum();
            out[(i, j)] = match &spec.discretization[j] {
                Some(c) => discretize(z, c.as_slice()) as f64,
                None => spec.transforms[j].apply(z),
            };
        }
    }
    out
}

fn bivariate_draw(rng: &mut ChaCha8Rng, r: f64) -> (f64, f64) {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    (a, r * a + (1.0 - r * r).sqrt() * b)
}

/// One MSE bin of an error curve.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MseBin {
    pub low: f64,
    pub high: f64,
    pub mse: f64,
}

/// Binned mean squared error of the latent correlation estimate.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ErrorCurve {
    /// Level count of the discretized variable; `None` for the continuous
    /// baseline.
    pub p: Option<usize>,
    pub bins: Vec<MseBin>,
    pub reps: usize,
    /// Replicates where the discretized column came out constant; these are
    /// scored with the uninformative estimate `r̂ = 0`.
    pub degenerate: usize,
}

impl ErrorCurve {
    /// Average of the bin MSEs.
    pub fn mean_mse(&self) -> f64 {
        self.bins.iter().map(|b| b.mse).sum::<f64>() / self.bins.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScenarioConfig {
    pub p_values: Vec<usize>,
    pub r_grid: Vec<f64>,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    /// `p = 2..16`, `r = 0, 0.01, …, 0.99`, `n = 100`, 80 replicates.
    fn default() -> Self {
        Self {
            p_values: (2..=16).collect(),
            r_grid: (0..100).map(|i| i as f64 / 100.0).collect(),
            n: 100,
            reps: 80,
            seed: 1,
        }
    }
}

/// Curves for each requested `p` plus the continuous baseline.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScenarioResult {
    pub curves: Vec<ErrorCurve>,
    pub baseline: ErrorCurve,
}

impl ScenarioResult {
    pub fn curve(&self, p: usize) -> Option<&ErrorCurve> {
        self.curves.iter().find(|c| c.p == Some(p))
    }

    /// Writes `p, bin_low, bin_high, mse, reps` rows, baseline last with
    /// `p = continuous`.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "p\tbin_low\tbin_high\tmse\treps")?;
        for c in self.curves.iter().chain(std::iter::once(&self.baseline)) {
            let label = c.p.map_or_else(|| "continuous".to_string(), |p| p.to_string());
            for b in &c.bins {
                writeln!(w, "{label}\t{:.2}\t{:.2}\t{:.10e}\t{}", b.low, b.high, b.mse, c.reps)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Protocol {
    /// Equal-mass cutoffs at each `p`.
    EqualMass,
    /// Sixteen equal-mass levels, top levels merged down to `p`.
    Collapse,
}

/// Error curves when one variable of a bivariate normal pair is discretized
/// into `p` equal-mass levels and the other stays continuous.
pub fn scenario1(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    run_scenario(cfg, Protocol::EqualMass)
}

/// As [`scenario1`], but the `p`-level variable is obtained from the
/// 16-level one by repeatedly merging the highest level into the one below.
pub fn scenario2(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    if cfg.p_values.iter().any(|&p| p > 16) {
        return Err(Error::InvalidConfig("collapse protocol starts from 16 levels".into()));
    }
    run_scenario(cfg, Protocol::Collapse)
}

fn run_scenario(cfg: &ScenarioConfig, protocol: Protocol) -> Result<ScenarioResult> {
    if cfg.n < 2 || cfg.reps == 0 || cfg.r_grid.is_empty() {
        return Err(Error::InvalidConfig("need n >= 2, reps >= 1 and a nonempty r grid".into()));
    }
    if cfg.p_values.iter().any(|&p| p < 2) {
        return Err(Error::InvalidConfig("level counts must be at least 2".into()));
    }
    if cfg.r_grid.iter().any(|r| !(r.abs() < 1.0)) {
        return Err(Error::InvalidConfig("r grid must lie inside (-1, 1)".into()));
    }
    let sixteen = CutoffVector::equal_mass(16);
    let cutoffs: Vec<CutoffVector> = cfg.p_values.iter().map(|&p| CutoffVector::equal_mass(p)).collect();
    let n_p = cfg.p_values.len();
    let est_cfg = EstimatorConfig::default();
    let specs_cont = [ColumnSpec::continuous("x"), ColumnSpec::continuous("y")];

    // (squared error, degenerate) per task: [baseline, p_1, …, p_m]
    let task = |t: usize| -> Result<Vec<(f64, bool)>> {
        let ri = t / cfg.reps;
        let r = cfg.r_grid[ri];
        let mut rng = rng_for(cfg.seed, t as u64);
        let draws: Vec<(f64, f64)> = (0..cfg.n).map(|_| bivariate_draw(&mut rng, r)).collect();
        let mut data = DMatrix::zeros(cfg.n, 2);
        for (i, &(a, b)) in draws.iter().enumerate() {
            data[(i, 0)] = a;
            data[(i, 1)] = b;
        }
        let mut out = Vec::with_capacity(n_p + 1);
        let base = estimate_with_config(&data, &specs_cont, &est_cfg)?;
        out.push(((base.matrix[(0, 1)] - r).powi(2), false));
        for (pi, &p) in cfg.p_values.iter().enumerate() {
            for (i, &(a, _)) in draws.iter().enumerate() {
                data[(i, 0)] = match protocol {
                    Protocol::EqualMass => discretize(a, cutoffs[pi].as_slice()),
                    Protocol::Collapse => discretize(a, sixteen.as_slice()).min(p - 1),
                } as f64;
            }
            let specs = [ColumnSpec::ordinal("x", p), ColumnSpec::continuous("y")];
            match estimate_with_config(&data, &specs, &est_cfg) {
                Ok(est) => out.push(((est.matrix[(0, 1)] - r).powi(2), false)),
                Err(Error::DegenerateColumn { column: 0 }) => out.push((r * r, true)),
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    };
    let tasks = cfg.r_grid.len() * cfg.reps;
    #[cfg(feature = "parallel")]
    let results: Vec<Result<Vec<(f64, bool)>>> = {
        use rayon::prelude::*;
        (0..tasks).into_par_iter().map(task).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<Vec<(f64, bool)>>> = (0..tasks).map(task).collect();
    let results: Vec<Vec<(f64, bool)>> = results.into_iter().collect::<Result<_>>()?;

    // per grid point MSE, then averaged within bins
    let grid_mse = |col: usize| -> Vec<f64> {
        (0..cfg.r_grid.len())
            .map(|ri| {
                let s: f64 = (0..cfg.reps).map(|rep| results[ri * cfg.reps + rep][col].0).sum();
                s / cfg.reps as f64
            })
            .collect()
    };
    let binned = |p: Option<usize>, col: usize| -> ErrorCurve {
        let mse = grid_mse(col);
        let mut sums = [0.0; 10];
        let mut counts = [0usize; 10];
        for (ri, &r) in cfg.r_grid.iter().enumerate() {
            let b = ((r.abs() * 10.0).floor() as usize).min(9);
            sums[b] += mse[ri];
            counts[b] += 1;
        }
        let bins = (0..10)
            .filter(|&b| counts[b] > 0)
            .map(|b| MseBin {
                low: b as f64 / 10.0,
                high: (b + 1) as f64 / 10.0,
                mse: sums[b] / counts[b] as f64,
            })
            .collect();
        ErrorCurve {
            p,
            bins,
            reps: cfg.reps,
            degenerate: results.iter().filter(|row| row[col].1).count(),
        }
    };
    Ok(ScenarioResult {
        curves: cfg
            .p_values
            .iter()
            .enumerate()
            .map(|(pi, &p)| binned(Some(p), pi + 1))
            .collect(),
        baseline: binned(None, 0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ConcentrationRow {
    pub n: usize,
    /// `max_{j<k} |R̂_jk − Σ_jk|`, averaged over seeds.
    pub mean_sup_error: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConcentrationTable {
    pub rows: Vec<ConcentrationRow>,
    /// Least-squares slope of `log(mean_sup_error)` against `log(n)`.
    pub slope: f64,
}

/// Sup-norm estimation error as `n` grows, for `Σ_jk = 0.5^{|j−k|}` with the
/// first `d/2` columns discretized into `p` equal-mass levels.
pub fn concentration_check(d: usize, p: usize, n_grid: &[usize], seeds: usize, seed: u64) -> Result<ConcentrationTable> {
    if d < 2 || p < 2 || n_grid.is_empty() || seeds == 0 {
        return Err(Error::InvalidConfig("need d >= 2, p >= 2, a nonempty n grid and seeds >= 1".into()));
    }
    let sigma = DMatrix::from_fn(d, d, |j, k| 0.5f64.powi((j as i32 - k as i32).abs()));
    let mut spec = CopulaSpec::gaussian(sigma.clone());
    for j in 0..d / 2 {
        spec = spec.with_discretization(j, CutoffVector::equal_mass(p));
    }
    let chol = spec.validate()?;
    let l = chol.l();
    let specs = spec.column_specs();
    let cfg = EstimatorConfig::default();

    let task = |t: usize| -> Result<f64> {
        let mut rng = rng_for(seed, t as u64);
        let data = sample_with(&spec, &l, n_grid[t / seeds], &mut rng);
        let est = estimate_with_config(&data, &specs, &cfg)?;
        let mut sup = 0.0f64;
        for j in 0..d {
            for k in (j + 1)..d {
                sup = sup.max((est.matrix[(j, k)] - sigma[(j, k)]).abs());
            }
        }
        Ok(sup)
    };
    let tasks = n_grid.len() * seeds;
    #[cfg(feature = "parallel")]
    let sups: Vec<Result<f64>> = {
        use rayon::prelude::*;
        (0..tasks).into_par_iter().map(task).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let sups: Vec<Result<f64>> = (0..tasks).map(task).collect();
    let sups: Vec<f64> = sups.into_iter().collect::<Result<_>>()?;

    let rows: Vec<ConcentrationRow> = n_grid
        .iter()
        .enumerate()
        .map(|(ni, &n)| ConcentrationRow {
            n,
            mean_sup_error: sups[ni * seeds..(ni + 1) * seeds].iter().sum::<f64>() / seeds as f64,
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_sup_error.ln()).collect();
    Ok(ConcentrationTable {
        slope: ols_slope(&xs, &ys),
        rows,
    })
}

fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub draws: usize,
}

impl McEstimate {
    fn from_samples(n: usize, sum: f64, sum_sq: f64) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = (sum_sq / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
        Self {
            mean,
            se: (var / nf).sqrt(),
            draws: n,
        }
    }
}

const MC_CHUNK: usize = 1 << 14;

/// Population Kendall τᵃ of a discretized bivariate normal pair, estimated as
/// `E[sgn(X₁ − X₁′) sgn(X₂ − X₂′)]` over `draws` independent pairs of
/// observations. `None` cutoffs leave that side continuous.
pub fn population_tau_mc(
    r: f64,
    cutoffs_j: Option<&CutoffVector>,
    cutoffs_k: Option<&CutoffVector>,
    draws: usize,
    seed: u64,
) -> Result<McEstimate> {
    if draws < 2 || !(r.abs() < 1.0) {
        return Err(Error::InvalidConfig("need at least 2 draws and |r| < 1".into()));
    }
    let level = |z: f64, c: Option<&CutoffVector>| match c {
        Some(c) => discretize(z, c.as_slice()) as f64,
        None => z,
    };
    // products lie in {−1, 0, 1}, so the sum of squares counts nonzero ones
    let run = |ci: usize| -> (f64, f64) {
        let mut rng = rng_for(seed, ci as u64);
        let count = MC_CHUNK.min(draws - ci * MC_CHUNK);
        let (mut s, mut q) = (0.0, 0.0);
        for _ in 0..count {
            let (a1, b1) = bivariate_draw(&mut rng, r);
            let (a2, b2) = bivariate_draw(&mut rng, r);
            let sx = sign(level(a1, cutoffs_j) - level(a2, cutoffs_j));
            let sy = sign(level(b1, cutoffs_k) - level(b2, cutoffs_k));
            s += sx * sy;
            q += (sx * sy).abs();
        }
        (s, q)
    };
    let chunks = draws.div_ceil(MC_CHUNK);
    #[cfg(feature = "parallel")]
    let parts: Vec<(f64, f64)> = {
        use rayon::prelude::*;
        (0..chunks).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<(f64, f64)> = (0..chunks).map(run).collect();
    let (sum, sum_sq) = parts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    Ok(McEstimate::from_samples(draws, sum, sum_sq))
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Replicate mean of the sample τᵇ for a binary variable (cutoff `delta`)
/// against a continuous one, at sample size `n`.
pub fn tau_b_replicates(r: f64, delta: f64, n: usize, reps: usize, seed: u64) -> Result<McEstimate> {
    if reps < 2 || n < 2 || !(r.abs() < 1.0) {
        return Err(Error::InvalidConfig("need reps >= 2, n >= 2 and |r| < 1".into()));
    }
    let rep = |k: usize| -> Result<f64> {
        let mut rng = rng_for(seed, k as u64);
        loop {
            let (xs, ys): (Vec<f64>, Vec<f64>) = (0..n)
                .map(|_| {
                    let (a, b) = bivariate_draw(&mut rng, r);
                    (if a > delta { 1.0 } else { 0.0 }, b)
                })
                .unzip();
            let stats = tau_statistics(&xs, &ys)?;
            // an all-equal binary sample has no τᵇ; redraw from the same stream
            if stats.degenerate_side().is_none() {
                return Ok(stats.value(TauVariant::TauB));
            }
        }
    };
    #[cfg(feature = "parallel")]
    let values: Vec<Result<f64>> = {
        use rayon::prelude::*;
        (0..reps).into_par_iter().map(rep).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let values: Vec<Result<f64>> = (0..reps).map(rep).collect();
    let values: Vec<f64> = values.into_iter().collect::<Result<_>>()?;
    let sum: f64 = values.iter().sum();
    let sum_sq: f64 = values.iter().map(|v| v * v).sum();
    Ok(McEstimate::from_samples(reps, sum, sum_sq))
}
