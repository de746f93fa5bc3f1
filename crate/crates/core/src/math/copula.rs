//! Joint default quantities implied by the Gaussian latent variable model.

use super::bivariate::bivariate_cdf;
use super::normal::inv_cdf;
use crate::error::{Error, Result};

/// Probability that both names default in one period:
/// `Φ₂(Φ⁻¹(pd_i), Φ⁻¹(pd_j); ρ)`.
pub fn implied_double_default_pd(pd_i: f64, pd_j: f64, rho: f64) -> Result<f64> {
    for pd in [pd_i, pd_j] {
        if !(pd > 0.0 && pd < 1.0) {
            return Err(Error::domain(format!("default probability {pd} is not in (0, 1)")));
        }
    }
    if !(rho.abs() <= 1.0) {
        return Err(Error::domain(format!("correlation {rho} is outside [-1, 1]")));
    }
    let joint = bivariate_cdf(inv_cdf(pd_i), inv_cdf(pd_j), rho);
    Ok(joint.min(pd_i).min(pd_j))
}

/// Pearson correlation of the two default indicators.
pub fn default_correlation(pd_i: f64, pd_j: f64, pd_ij: f64) -> Result<f64> {
    for p in [pd_i, pd_j, pd_ij] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("probability {p} is not in [0, 1]")));
        }
    }
    if pd_i == 0.0 || pd_i == 1.0 || pd_j == 0.0 || pd_j == 1.0 {
        return Err(Error::domain(
            "default_correlation: degenerate marginal (pd equal to 0 or 1)",
        ));
    }
    if pd_ij > pd_i.min(pd_j) {
        return Err(Error::domain(format!(
            "joint probability {pd_ij} exceeds a marginal ({pd_i}, {pd_j})"
        )));
    }
    Ok((pd_ij - pd_i * pd_j) / (pd_i * (1.0 - pd_i) * pd_j * (1.0 - pd_j)).sqrt())
}
