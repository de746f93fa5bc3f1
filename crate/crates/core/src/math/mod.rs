//! Probability and linear-algebra primitives used throughout the crate.

mod bivariate;
mod cholesky;
mod copula;
mod merton;
pub mod normal;

pub use bivariate::{bivariate_cdf, bivariate_norm_cdf};
pub use cholesky::{
    cholesky_lower, CorrelationMatrix, EquicorrelationFactor, LowerTriangular, PIVOT_TOLERANCE,
};
pub use copula::{default_correlation, implied_double_default_pd};
pub use merton::{merton_pd, merton_sigma, merton_sigma_for_horizon, MertonParams};
pub use normal::{norm_cdf, norm_inv};
