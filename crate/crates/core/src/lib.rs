//! Latent Gaussian copula correlation for mixed ordinal and continuous data.
//!
//! Each variable is assumed to be a monotone transform (continuous) or a
//! thresholding (ordinal) of a latent Gaussian. Pairwise Kendall statistics
//! are mapped to latent correlations through bridge functions, projected to
//! the correlation cone, and fed to the graphical lasso.

pub mod bridge;
pub mod error;
pub mod estimator;
pub mod glasso;
pub mod kendall;
pub mod normal;
pub mod simulate;

mod quad;

#[cfg(feature = "cli")]
pub mod cli;

pub use bridge::{Bridge, BridgeKind, CutoffVector, Inversion};
pub use error::{Error, Result};
pub use kendall::TauVariant;
