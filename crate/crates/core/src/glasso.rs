//! Graphical lasso by block coordinate descent, with a λ path and HBIC
//! selection.
//!
//! The solver works on the covariance estimate `W ≈ Ω⁻¹` one column at a
//! time: with row/column `j` removed, the off-diagonal column is the solution
//! of a lasso problem in the Gram matrix `W₁₁`, solved by cyclic coordinate
//! descent. `Ω` is recovered from the final lasso coefficients.

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};

/// Off-diagonal precision entries with larger magnitude count as edges.
pub const EDGE_THRESHOLD: f64 = 1e-8;

const LASSO_TOL: f64 = 1e-12;
const LASSO_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GlassoConfig {
    /// Penalties to try; `None` uses [`default_lambda_path`].
    pub lambda_path: Option<Vec<f64>>,
    pub penalize_diagonal: bool,
    /// Stop once the mean absolute change of `W` over a sweep is below this.
    pub convergence_tol: f64,
    pub max_sweeps: usize,
    /// Multiplier on the HBIC complexity term.
    pub hbic_scale: f64,
}

impl Default for GlassoConfig {
    fn default() -> Self {
        Self {
            lambda_path: None,
            penalize_diagonal: false,
            convergence_tol: 1e-6,
            max_sweeps: 500,
            hbic_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlassoFit {
    pub omega: DMatrix<f64>,
    /// `tr(SΩ) − log det Ω + λ Σ_{j≠k} |Ω_jk|` (diagonal included when
    /// penalized).
    pub objective: f64,
    pub sweeps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct HbicPoint {
    pub lambda: f64,
    pub hbic: f64,
    pub edges: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionEstimate {
    pub omega: DMatrix<f64>,
    pub chosen_lambda: f64,
    /// One point per λ, in path order.
    pub hbic_trace: Vec<HbicPoint>,
    /// Pairs `(j, k)`, `j < k`, with `|Ω_jk| > EDGE_THRESHOLD`.
    pub edges: Vec<(usize, usize)>,
}

fn check_input(s: &DMatrix<f64>) -> Result<()> {
    if !s.is_square() {
        return Err(Error::InvalidMatrix(format!(
            "expected a square matrix, got {} x {}",
            s.nrows(),
            s.ncols()
        )));
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMatrix("non-finite entry".into()));
    }
    for i in 0..s.nrows() {
        if s[(i, i)] <= 0.0 {
            return Err(Error::InvalidMatrix(format!("non-positive diagonal at {i}")));
        }
        for j in 0..i {
            if s[(i, j)] != s[(j, i)] {
                return Err(Error::InvalidMatrix(format!("asymmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

fn others(d: usize, j: usize) -> impl Iterator<Item = usize> + Clone {
    (0..d).filter(move |&i| i != j)
}

/// Fits the graphical lasso at one penalty.
pub fn glasso_fit(s: &DMatrix<f64>, lambda: f64, cfg: &GlassoConfig) -> Result<GlassoFit> {
    check_input(s)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidConfig(format!("penalty {lambda} is not a finite non-negative number")));
    }
    let d = s.nrows();
    let diag_shift = if cfg.penalize_diagonal { lambda } else { 0.0 };
    let mut w = s.clone();
    for i in 0..d {
        w[(i, i)] += diag_shift;
    }
    // beta[(k, j)]: coefficient of variable k in the regression for column j
    let mut beta = DMatrix::<f64>::zeros(d, d);
    let mut sweeps = 0;
    if d > 1 {
        let off_count = (d * (d - 1)) as f64;
        loop {
            sweeps += 1;
            let mut change = 0.0;
            for j in 0..d {
                lasso_column(&w, s, j, lambda, &mut beta);
                for i in others(d, j) {
                    let new: f64 = others(d, j).map(|k| w[(i, k)] * beta[(k, j)]).sum();
                    change += 2.0 * (new - w[(i, j)]).abs();
                    w[(i, j)] = new;
                    w[(j, i)] = new;
                }
            }
            let mean_change = change / off_count;
            if mean_change < cfg.convergence_tol {
                break;
            }
            if sweeps >= cfg.max_sweeps {
                return Err(Error::GlassoNoConvergence {
                    sweeps,
                    change: mean_change,
                });
            }
        }
    }

    let mut omega = DMatrix::<f64>::zeros(d, d);
    for j in 0..d {
        let w12b: f64 = others(d, j).map(|k| w[(k, j)] * beta[(k, j)]).sum();
        let theta = 1.0 / (w[(j, j)] - w12b);
        omega[(j, j)] = theta;
        for k in others(d, j) {
            omega[(k, j)] = -beta[(k, j)] * theta;
        }
    }
    for i in 0..d {
        for j in 0..i {
            let v = 0.5 * (omega[(i, j)] + omega[(j, i)]);
            omega[(i, j)] = v;
            omega[(j, i)] = v;
        }
    }
    let objective = objective(s, &omega, lambda, cfg.penalize_diagonal)?;
    Ok(GlassoFit {
        omega,
        objective,
        sweeps,
    })
}

// Cyclic coordinate descent for
// min ½ βᵀ W₁₁ β − s₁₂ᵀ β + λ‖β‖₁, warm-started from the stored column.
fn lasso_column(w: &DMatrix<f64>, s: &DMatrix<f64>, j: usize, lambda: f64, beta: &mut DMatrix<f64>) {
    let d = w.nrows();
    for _ in 0..LASSO_MAX_ITER {
        let mut max_step = 0.0f64;
        for k in others(d, j) {
            let partial: f64 = others(d, j)
                .filter(|&l| l != k)
                .map(|l| w[(k, l)] * beta[(l, j)])
                .sum();
            let new = soft_threshold(s[(k, j)] - partial, lambda) / w[(k, k)];
            max_step = max_step.max((new - beta[(k, j)]).abs());
            beta[(k, j)] = new;
        }
        if max_step < LASSO_TOL {
            break;
        }
    }
}

fn log_det(omega: &DMatrix<f64>) -> Result<f64> {
    let chol = Cholesky::new(omega.clone()).ok_or(Error::NotPositiveDefinite)?;
    Ok(2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
}

/// Penalized negative log-likelihood of `omega` for the matrix `s`.
pub fn objective(s: &DMatrix<f64>, omega: &DMatrix<f64>, lambda: f64, penalize_diagonal: bool) -> Result<f64> {
    let d = s.nrows();
    let trace: f64 = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| s[(i, j)] * omega[(j, i)])
        .sum();
    let penalty: f64 = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .filter(|&(i, j)| penalize_diagonal || i != j)
        .map(|(i, j)| omega[(i, j)].abs())
        .sum();
    Ok(trace - log_det(omega)? + lambda * penalty)
}

/// Ten equally spaced penalties from `m/10` to `m`, with `m` the largest
/// off-diagonal magnitude; `[1e−8]` when every off-diagonal entry is zero.
pub fn default_lambda_path(r: &DMatrix<f64>) -> Vec<f64> {
    let d = r.nrows();
    let m = (0..d)
        .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| r[(i, j)].abs())
        .fold(0.0, f64::max);
    if m == 0.0 {
        return vec![1e-8];
    }
    (1..=10).map(|i| i as f64 * m / 10.0).collect()
}

/// Edge set of a precision matrix.
pub fn edge_set(omega: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let d = omega.nrows();
    (0..d)
        .flat_map(|j| ((j + 1)..d).map(move |k| (j, k)))
        .filter(|&(j, k)| omega[(j, k)].abs() > EDGE_THRESHOLD)
        .collect()
}

/// `tr(RΩ) − log det Ω + scale · |E| · ln(ln n) · ln(d) / n`.
pub fn hbic(r: &DMatrix<f64>, omega: &DMatrix<f64>, n: usize, scale: f64) -> Result<f64> {
    let d = r.nrows() as f64;
    let nf = n as f64;
    let edges = edge_set(omega).len() as f64;
    Ok(objective(r, omega, 0.0, false)? + scale * edges * nf.ln().ln() * d.ln() / nf)
}

/// Fits every penalty on the path and keeps the HBIC minimizer, breaking
/// ties toward the smallest penalty.
pub fn select_hbic(r: &DMatrix<f64>, n: usize, cfg: &GlassoConfig) -> Result<PrecisionEstimate> {
    check_input(r)?;
    if n < 3 {
        return Err(Error::TooFewObservations { needed: 3, got: n });
    }
    let path = match &cfg.lambda_path {
        Some(p) => {
            if p.is_empty() || p.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
                return Err(Error::InvalidConfig(
                    "lambda path must be nonempty with positive entries".into(),
                ));
            }
            p.clone()
        }
        None => default_lambda_path(r),
    };
    let fit = |&lambda: &f64| -> Result<(DMatrix<f64>, HbicPoint)> {
        let f = glasso_fit(r, lambda, cfg)?;
        let point = HbicPoint {
            lambda,
            hbic: hbic(r, &f.omega, n, cfg.hbic_scale)?,
            edges: edge_set(&f.omega).len(),
        };
        Ok((f.omega, point))
    };
    #[cfg(feature = "parallel")]
    let fits: Vec<Result<(DMatrix<f64>, HbicPoint)>> = {
        use rayon::prelude::*;
        path.par_iter().map(fit).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let fits: Vec<Result<(DMatrix<f64>, HbicPoint)>> = path.iter().map(fit).collect();
    let fits: Vec<(DMatrix<f64>, HbicPoint)> = fits.into_iter().collect::<Result<_>>()?;

    let best = fits
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            a.1.hbic
                .total_cmp(&b.1.hbic)
                .then(a.1.lambda.total_cmp(&b.1.lambda))
        })
        .map(|(i, _)| i)
        .expect("path is nonempty");
    let hbic_trace = fits.iter().map(|f| f.1).collect();
    let omega = fits[best].0.clone();
    Ok(PrecisionEstimate {
        edges: edge_set(&omega),
        chosen_lambda: fits[best].1.lambda,
        omega,
        hbic_trace,
    })
}

/// Partial correlation `−Ω_jk / √(Ω_jj Ω_kk)`.
pub fn partial_correlation(omega: &DMatrix<f64>, j: usize, k: usize) -> f64 {
    -omega[(j, k)] / (omega[(j, j)] * omega[(k, k)]).sqrt()
}
