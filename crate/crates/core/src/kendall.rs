//! Kendall's τᵃ and τᵇ with tie accounting.
//!
//! Counting is done in `O(n log n)`: rows are sorted by `(x, y)`, tie runs in
//! `x` and in `(x, y)` are tallied, then a stable merge sort on `y` counts the
//! discordant pairs as inversions. Rows where either value is `NaN` are
//! dropped pairwise.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Which Kendall statistic to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
pub enum TauVariant {
    /// τᵃ, `(C − D) / binom(n, 2)`.
    #[default]
    TauA,
    /// τᵇ, τᵃ deflated by the tie counts of both variables.
    TauB,
}

/// Pair counts and both statistics for one variable pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauStatistics {
    pub tau_a: f64,
    /// `NaN` when one of the variables is constant.
    pub tau_b: f64,
    pub concordant: u64,
    pub discordant: u64,
    /// Pairs tied in the first variable (`t_Xj`).
    pub ties_j: u64,
    /// Pairs tied in the second variable (`t_Xk`).
    pub ties_k: u64,
    /// Pairs tied in both.
    pub ties_both: u64,
    pub n_pairs: u64,
    /// Number of complete rows used.
    pub n: usize,
}

impl TauStatistics {
    fn from_counts(n: usize, discordant: u64, ties_j: u64, ties_k: u64, ties_both: u64) -> Self {
        let n_pairs = (n as u64) * (n as u64 - 1) / 2;
        let concordant = n_pairs + ties_both - ties_j - ties_k - discordant;
        let diff = concordant as f64 - discordant as f64;
        let tau_a = diff / n_pairs as f64;
        let denom = ((n_pairs - ties_j) as f64 * (n_pairs - ties_k) as f64).sqrt();
        let tau_b = if ties_j == n_pairs || ties_k == n_pairs {
            f64::NAN
        } else {
            diff / denom
        };
        Self {
            tau_a,
            tau_b,
            concordant,
            discordant,
            ties_j,
            ties_k,
            ties_both,
            n_pairs,
            n,
        }
    }

    /// Which input (0 = first, 1 = second) is constant, if any.
    pub fn degenerate_side(&self) -> Option<usize> {
        if self.ties_j == self.n_pairs {
            Some(0)
        } else if self.ties_k == self.n_pairs {
            Some(1)
        } else {
            None
        }
    }

    pub fn value(&self, variant: TauVariant) -> f64 {
        match variant {
            TauVariant::TauA => self.tau_a,
            TauVariant::TauB => self.tau_b,
        }
    }
}

fn tie_pairs(run: u64) -> u64 {
    run * run.saturating_sub(1) / 2
}

/// Concordance counts for `x` against `y`.
pub fn tau_statistics(x: &[f64], y: &[f64]) -> Result<TauStatistics> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let mut rows: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| !a.is_nan() && !b.is_nan())
        .map(|(&a, &b)| (a, b))
        .collect();
    let n = rows.len();
    if n < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: n });
    }
    rows.sort_unstable_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));

    let mut ties_j = 0;
    let mut ties_both = 0;
    let mut run_x = 1u64;
    let mut run_xy = 1u64;
    for w in rows.windows(2) {
        if w[0].0 == w[1].0 {
            run_x += 1;
            if w[0].1 == w[1].1 {
                run_xy += 1;
            } else {
                ties_both += tie_pairs(run_xy);
                run_xy = 1;
            }
        } else {
            ties_j += tie_pairs(run_x);
            ties_both += tie_pairs(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    ties_j += tie_pairs(run_x);
    ties_both += tie_pairs(run_xy);

    let mut ys: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let mut buf = vec![0.0; n];
    let discordant = merge_count(&mut ys, &mut buf);

    let mut ties_k = 0;
    let mut run_y = 1u64;
    for w in ys.windows(2) {
        if w[0] == w[1] {
            run_y += 1;
        } else {
            ties_k += tie_pairs(run_y);
            run_y = 1;
        }
    }
    ties_k += tie_pairs(run_y);

    Ok(TauStatistics::from_counts(n, discordant, ties_j, ties_k, ties_both))
}

// Bottom-up stable merge sort; returns the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    let mut swaps = 0u64;
    let mut width = 1;
    while width < n {
        let mut start = 0;
        while start < n {
            let mid = (start + width).min(n);
            let end = (start + 2 * width).min(n);
            if mid < end {
                let (mut i, mut j, mut k) = (start, mid, start);
                while i < mid && j < end {
                    if v[j] < v[i] {
                        buf[k] = v[j];
                        swaps += (mid - i) as u64;
                        j += 1;
                    } else {
                        buf[k] = v[i];
                        i += 1;
                    }
                    k += 1;
                }
                buf[k..k + (mid - i)].copy_from_slice(&v[i..mid]);
                k += mid - i;
                buf[k..k + (end - j)].copy_from_slice(&v[j..end]);
                v[start..end].copy_from_slice(&buf[start..end]);
            }
            start += 2 * width;
        }
        width *= 2;
    }
    swaps
}

/// Sample Kendall's τᵃ.
pub fn tau_a(x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(tau_statistics(x, y)?.tau_a)
}

/// Sample Kendall's τᵇ with all counts. A constant input is reported as a
/// degenerate column (0 for `x`, 1 for `y`).
pub fn tau_b(x: &[f64], y: &[f64]) -> Result<TauStatistics> {
    let stats = tau_statistics(x, y)?;
    if let Some(column) = stats.degenerate_side() {
        return Err(Error::DegenerateColumn { column });
    }
    Ok(stats)
}

/// Pairwise τ matrix over the columns of an `n × d` data matrix. The diagonal
/// is 1 for both variants.
pub fn pairwise_tau(data: &DMatrix<f64>, which: TauVariant) -> Result<DMatrix<f64>> {
    let d = data.ncols();
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|j| ((j + 1)..d).map(move |k| (j, k)))
        .collect();
    let compute = |&(j, k): &(usize, usize)| -> Result<f64> {
        let x = data.column(j);
        let y = data.column(k);
        let stats = tau_statistics(x.as_slice(), y.as_slice())?;
        if which == TauVariant::TauB {
            if let Some(side) = stats.degenerate_side() {
                return Err(Error::DegeneratePair {
                    j,
                    k,
                    column: if side == 0 { j } else { k },
                });
            }
        }
        Ok(stats.value(which))
    };
    #[cfg(feature = "parallel")]
    let values: Vec<Result<f64>> = {
        use rayon::prelude::*;
        pairs.par_iter().map(compute).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let values: Vec<Result<f64>> = pairs.iter().map(compute).collect();

    let mut out = DMatrix::identity(d, d);
    for (&(j, k), v) in pairs.iter().zip(values) {
        let v = v?;
        out[(j, k)] = v;
        out[(k, j)] = v;
    }
    Ok(out)
}
