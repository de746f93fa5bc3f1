//! Monte Carlo over many paths.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SimulationConfig;
use super::path::{Engine, PathOutcome};
use super::scenario::ScenarioOverride;
use crate::error::Result;
use crate::model::{BankNode, ExposureNetwork};

/// Per-path discounted total losses, in path order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossDistribution {
    pub losses: Vec<f64>,
    /// `period_losses[p][t]` when retention was requested.
    pub period_losses: Option<Vec<Vec<f64>>>,
    /// `Σ_k A_k(0)·LGD_k·max_t D(t)`, an upper bound on every path's loss.
    pub max_loss: f64,
}

impl LossDistribution {
    pub fn len(&self) -> usize {
        self.losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.losses.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.losses.iter().sum::<f64>() / self.losses.len() as f64
    }

    /// Standard error of the mean (sample standard deviation over `√n`).
    pub fn std_error(&self) -> f64 {
        let n = self.losses.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        let var = self.losses.iter().map(|l| (l - m) * (l - m)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    }
}

/// Runs every path of `config` under `scenario` and maps each outcome through
/// `f`. Results are in path order and do not depend on the size of the
/// thread pool.
pub fn simulate_paths<T, F>(
    banks: &[BankNode],
    net: &ExposureNetwork,
    config: &SimulationConfig,
    scenario: &ScenarioOverride,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&PathOutcome) -> T + Sync,
{
    let engine = Engine::new(banks, net, config, scenario)?;
    Ok((0..config.n_paths as u64)
        .into_par_iter()
        .map_init(
            || engine.workspace(),
            |ws, p| f(engine.run_path_in(ws, p)),
        )
        .collect())
}

pub fn run_scenario(
    banks: &[BankNode],
    net: &ExposureNetwork,
    config: &SimulationConfig,
    scenario: &ScenarioOverride,
) -> Result<LossDistribution> {
    let max_discount = config.discount_factors().into_iter().fold(0.0, f64::max);
    let max_loss = banks.iter().map(|b| b.total_asset * b.lgd).sum::<f64>() * max_discount;
    let (losses, period_losses) = if config.retain_period_losses {
        let rows = simulate_paths(banks, net, config, scenario, |o| {
            (o.total_loss, o.period_losses.clone())
        })?;
        let (l, p): (Vec<f64>, Vec<Vec<f64>>) = rows.into_iter().unzip();
        (l, Some(p))
    } else {
        (simulate_paths(banks, net, config, scenario, |o| o.total_loss)?, None)
    };
    Ok(LossDistribution {
        losses,
        period_losses,
        max_loss,
    })
}

pub fn run_simulation(
    banks: &[BankNode],
    net: &ExposureNetwork,
    config: &SimulationConfig,
) -> Result<LossDistribution> {
    run_scenario(banks, net, config, &ScenarioOverride::baseline())
}
