//! Assembles the latent correlation matrix from a mixed-type data matrix.
//!
//! Ordinal columns are rank-recoded to consecutive codes first, so unused
//! levels disappear and the bridge is chosen from the levels actually
//! observed. Every off-diagonal entry carries a tag saying how it was
//! produced.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::bridge::{estimate_cutoffs, Bridge, BridgeKind, CutoffVector};
use crate::error::{Error, Result};
use crate::kendall::{tau_statistics, TauVariant};

/// Largest level count for which ordinal–ordinal bridges exist.
pub const MAX_ORDINAL_PAIR_LEVELS: usize = 3;

/// Distinct-value threshold used by [`infer_column_specs`].
pub const INFER_MAX_LEVELS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ColumnKind {
    Continuous,
    Ordinal { levels: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

impl ColumnSpec {
    pub fn continuous(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Continuous,
        }
    }

    pub fn ordinal(name: impl Into<String>, levels: usize) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Ordinal { levels },
        }
    }
}

/// What to do with an ordinal–ordinal pair that has no bridge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub enum UnsupportedPolicy {
    /// Abort with [`Error::UnsupportedPair`].
    #[default]
    Error,
    /// Use `sin(π τ̂ᵃ / 2)`, ignoring the discretization.
    Fallback,
    /// Leave the entry as `NaN`.
    Missing,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct EstimatorConfig {
    pub variant: TauVariant,
    pub unsupported: UnsupportedPolicy,
}

/// How one entry of the matrix was obtained.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum EntryMethod {
    Diagonal,
    /// Inverted bridge of the given kind under the given statistic.
    Bridge { kind: BridgeKind, variant: TauVariant },
    /// τᵇ was requested but has no bridge for this pair; τᵃ was used.
    TauAFallback { kind: BridgeKind },
    /// Unsupported ordinal pair estimated with the continuous formula.
    SineFallback { levels_j: usize, levels_k: usize },
    /// Unsupported ordinal pair left undetermined.
    Missing { levels_j: usize, levels_k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EntryReport {
    pub method: EntryMethod,
    /// Sample statistic that was inverted.
    pub statistic: f64,
    /// The statistic fell outside the bridge's range.
    pub clamped: bool,
}

impl EntryReport {
    fn diagonal() -> Self {
        Self {
            method: EntryMethod::Diagonal,
            statistic: 1.0,
            clamped: false,
        }
    }
}

/// Estimated latent correlations with per-entry provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCorrelationMatrix {
    pub matrix: DMatrix<f64>,
    /// Row-major `d × d` reports; `(j, k)` and `(k, j)` are identical.
    pub entries: Vec<EntryReport>,
    /// Estimated cutoffs of each ordinal column after recoding.
    pub cutoffs: Vec<Option<CutoffVector>>,
}

impl LatentCorrelationMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn entry(&self, j: usize, k: usize) -> &EntryReport {
        &self.entries[j * self.dim() + k]
    }

    pub fn has_missing(&self) -> bool {
        self.matrix.iter().any(|v| v.is_nan())
    }
}

/// A column ready for pairing: values for Kendall's τ and, for ordinal
/// columns, recoded levels with their cutoffs.
#[derive(Debug, Clone)]
struct Prepared {
    values: Vec<f64>,
    ordinal: Option<CutoffVector>,
}

impl Prepared {
    fn levels(&self) -> Option<usize> {
        self.ordinal.as_ref().map(|c| c.levels())
    }
}

fn prepare_column(column: usize, values: &[f64], kind: ColumnKind) -> Result<Prepared> {
    let mut distinct: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    distinct.sort_unstable_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::DegenerateColumn { column });
    }
    match kind {
        ColumnKind::Continuous => Ok(Prepared {
            values: values.to_vec(),
            ordinal: None,
        }),
        ColumnKind::Ordinal { levels } => {
            if levels < 2 {
                return Err(Error::InvalidConfig(format!(
                    "column {column} declared ordinal with {levels} levels"
                )));
            }
            if distinct.len() > levels {
                return Err(Error::TooManyLevels {
                    column,
                    observed: distinct.len(),
                    declared: levels,
                });
            }
            let rank = |v: f64| distinct.partition_point(|&u| u < v);
            let recoded: Vec<f64> = values
                .iter()
                .map(|&v| if v.is_nan() { f64::NAN } else { rank(v) as f64 })
                .collect();
            let codes: Vec<usize> = recoded
                .iter()
                .filter(|v| !v.is_nan())
                .map(|&v| v as usize)
                .collect();
            let cutoffs = estimate_cutoffs(&codes, distinct.len())?;
            Ok(Prepared {
                values: recoded,
                ordinal: Some(cutoffs),
            })
        }
    }
}

// Sort key making pair orientation independent of column order.
fn orientation_key(p: &Prepared) -> (usize, Vec<u64>) {
    match &p.ordinal {
        None => (usize::MAX, Vec::new()),
        Some(c) => (c.levels(), c.as_slice().iter().map(|v| v.to_bits()).collect()),
    }
}

fn estimate_pair(
    j: usize,
    k: usize,
    a: &Prepared,
    b: &Prepared,
    cfg: &EstimatorConfig,
) -> Result<(f64, EntryReport)> {
    let (first, second) = if orientation_key(a) <= orientation_key(b) {
        (a, b)
    } else {
        (b, a)
    };
    let stats = tau_statistics(&first.values, &second.values)?;
    let kind = match (first.levels(), second.levels()) {
        (None, None) => BridgeKind::ContinuousContinuous,
        (Some(levels), None) => BridgeKind::OrdinalContinuous { levels },
        (None, Some(_)) => unreachable!("ordinal columns sort first"),
        (Some(levels_j), Some(levels_k)) => {
            if levels_j > MAX_ORDINAL_PAIR_LEVELS || levels_k > MAX_ORDINAL_PAIR_LEVELS {
                let (lj, lk) = if std::ptr::eq(first, a) {
                    (levels_j, levels_k)
                } else {
                    (levels_k, levels_j)
                };
                return match cfg.unsupported {
                    UnsupportedPolicy::Error => Err(Error::UnsupportedPair {
                        j,
                        k,
                        levels_j: lj,
                        levels_k: lk,
                    }),
                    UnsupportedPolicy::Fallback => {
                        let inv = Bridge::new(
                            BridgeKind::ContinuousContinuous,
                            TauVariant::TauA,
                            None,
                            None,
                        )?
                        .invert(stats.tau_a)?;
                        Ok((
                            inv.r,
                            EntryReport {
                                method: EntryMethod::SineFallback {
                                    levels_j: lj,
                                    levels_k: lk,
                                },
                                statistic: stats.tau_a,
                                clamped: inv.clamped,
                            },
                        ))
                    }
                    UnsupportedPolicy::Missing => Ok((
                        f64::NAN,
                        EntryReport {
                            method: EntryMethod::Missing {
                                levels_j: lj,
                                levels_k: lk,
                            },
                            statistic: stats.tau_a,
                            clamped: false,
                        },
                    )),
                };
            }
            BridgeKind::OrdinalOrdinal { levels_j, levels_k }
        }
    };

    let tau_b_defined = match kind {
        BridgeKind::ContinuousContinuous => true,
        BridgeKind::OrdinalContinuous { levels } => levels == 2,
        BridgeKind::OrdinalOrdinal { levels_j, levels_k } => levels_j == 2 && levels_k == 2,
    };
    let (variant, method) = match cfg.variant {
        TauVariant::TauB if tau_b_defined => (
            TauVariant::TauB,
            EntryMethod::Bridge {
                kind,
                variant: TauVariant::TauB,
            },
        ),
        TauVariant::TauB => (TauVariant::TauA, EntryMethod::TauAFallback { kind }),
        TauVariant::TauA => (
            TauVariant::TauA,
            EntryMethod::Bridge {
                kind,
                variant: TauVariant::TauA,
            },
        ),
    };
    if variant == TauVariant::TauB {
        if let Some(side) = stats.degenerate_side() {
            let column = if (side == 0) == std::ptr::eq(first, a) { j } else { k };
            return Err(Error::DegeneratePair { j, k, column });
        }
    }
    let bridge = Bridge::new(kind, variant, first.ordinal.as_ref(), second.ordinal.as_ref())?;
    let statistic = stats.value(variant);
    let inv = bridge.invert(statistic)?;
    Ok((
        inv.r,
        EntryReport {
            method,
            statistic,
            clamped: inv.clamped,
        },
    ))
}

/// Estimates the latent correlation matrix of an `n × d` data matrix.
///
/// `NaN` cells are treated as missing and dropped pairwise.
pub fn estimate_latent_correlation(
    data: &DMatrix<f64>,
    specs: &[ColumnSpec],
    variant: TauVariant,
) -> Result<LatentCorrelationMatrix> {
    estimate_with_config(
        data,
        specs,
        &EstimatorConfig {
            variant,
            ..EstimatorConfig::default()
        },
    )
}

pub fn estimate_with_config(
    data: &DMatrix<f64>,
    specs: &[ColumnSpec],
    cfg: &EstimatorConfig,
) -> Result<LatentCorrelationMatrix> {
    let (n, d) = data.shape();
    if specs.len() != d {
        return Err(Error::LengthMismatch {
            left: specs.len(),
            right: d,
        });
    }
    if n < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: n });
    }
    let prepared: Vec<Prepared> = (0..d)
        .map(|j| prepare_column(j, data.column(j).as_slice(), specs[j].kind))
        .collect::<Result<_>>()?;

    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|j| ((j + 1)..d).map(move |k| (j, k)))
        .collect();
    let run = |&(j, k): &(usize, usize)| estimate_pair(j, k, &prepared[j], &prepared[k], cfg);
    #[cfg(feature = "parallel")]
    let results: Vec<Result<(f64, EntryReport)>> = {
        use rayon::prelude::*;
        pairs.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<(f64, EntryReport)>> = pairs.iter().map(run).collect();

    let mut matrix = DMatrix::identity(d, d);
    let mut entries = vec![EntryReport::diagonal(); d * d];
    for (&(j, k), res) in pairs.iter().zip(results) {
        let (r, report) = res?;
        matrix[(j, k)] = r;
        matrix[(k, j)] = r;
        entries[j * d + k] = report;
        entries[k * d + j] = report;
    }
    Ok(LatentCorrelationMatrix {
        matrix,
        entries,
        cutoffs: prepared.into_iter().map(|p| p.ordinal).collect(),
    })
}

/// Guesses column kinds: a column whose observed values are all integers with
/// at most ten distinct values is ordinal with that many levels.
pub fn infer_column_specs(data: &DMatrix<f64>, names: &[String]) -> Vec<ColumnSpec> {
    (0..data.ncols())
        .map(|j| {
            let name = names.get(j).cloned().unwrap_or_else(|| format!("V{}", j + 1));
            let mut values: Vec<f64> = data.column(j).iter().copied().filter(|v| !v.is_nan()).collect();
            let integral = values.iter().all(|v| v.fract() == 0.0);
            values.sort_unstable_by(f64::total_cmp);
            values.dedup();
            if integral && values.len() >= 2 && values.len() <= INFER_MAX_LEVELS {
                ColumnSpec::ordinal(name, values.len())
            } else {
                ColumnSpec::continuous(name)
            }
        })
        .collect()
}

/// Projects a symmetric matrix onto the correlation matrices with eigenvalues
/// at least `eps`, up to the final unit-diagonal rescaling.
///
/// Matrices that are already PSD with unit diagonal are returned unchanged.
/// Otherwise eigenvalues below `eps` are raised to `eps` and the result is
/// rescaled as `D^{-1/2} A D^{-1/2}`.
pub fn project_psd(r: &DMatrix<f64>, eps: f64) -> DMatrix<f64> {
    let d = r.nrows();
    let unit_diagonal = (0..d).all(|i| r[(i, i)] == 1.0);
    let eig = SymmetricEigen::new(r.clone());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if unit_diagonal && min >= 0.0 {
        return r.clone();
    }
    let clipped = eig.eigenvalues.map(|l| l.max(eps));
    let q = &eig.eigenvectors;
    let a = q * DMatrix::from_diagonal(&clipped) * q.transpose();
    let scale: Vec<f64> = (0..d).map(|i| 1.0 / a[(i, i)].sqrt()).collect();
    let mut out = DMatrix::from_fn(d, d, |i, j| a[(i, j)] * scale[i] * scale[j]);
    for i in 0..d {
        for j in 0..i {
            let v = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
        out[(i, i)] = 1.0;
    }
    out
}
