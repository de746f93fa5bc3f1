use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::CorrelationMatrix;
use crate::model::{DiscountCurve, UpdateRule};

/// Asset-return correlation of the latent variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CorrelationSpec {
    Uniform(f64),
    Matrix(CorrelationMatrix),
}

impl CorrelationSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            CorrelationSpec::Uniform(rho) => {
                CorrelationMatrix::uniform(n.max(1), *rho)?;
                Ok(())
            }
            CorrelationSpec::Matrix(m) if m.dim() != n => Err(Error::config(format!(
                "correlation matrix is {0}×{0} but there are {n} banks",
                m.dim()
            ))),
            CorrelationSpec::Matrix(_) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Number of periods `M`.
    pub periods: usize,
    /// Period length in years.
    pub dt: f64,
    pub correlation: CorrelationSpec,
    pub discount: DiscountCurve,
    pub rule: UpdateRule,
    pub n_paths: usize,
    pub seed: u64,
    /// Keep every path's per-period losses in the output.
    pub retain_period_losses: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            periods: 7,
            dt: 1.0,
            correlation: CorrelationSpec::Uniform(0.5),
            discount: DiscountCurve::default(),
            rule: UpdateRule::Merton,
            n_paths: 100_000,
            seed: 1,
            retain_period_losses: false,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.periods == 0 {
            return Err(Error::config("periods must be at least 1"));
        }
        if self.n_paths == 0 {
            return Err(Error::config("n_paths must be at least 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config(format!("dt = {} must be positive", self.dt)));
        }
        DiscountCurve::flat(self.discount.rate)?;
        self.correlation.validate(n)
    }

    /// `D(t)` for periods `1..=M`.
    pub fn discount_factors(&self) -> Vec<f64> {
        (1..=self.periods)
            .map(|t| self.discount.factor(t as f64 * self.dt))
            .collect()
    }
}
