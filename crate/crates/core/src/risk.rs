//! PDImpact, PDRank, PDBeta and loss-distribution summaries.
//!
//! Every comparison between scenarios reuses the configured seed, so the
//! compared runs see the same random numbers path by path.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_scenario, LossDistribution, NodeMode, ScenarioOverride, SimulationConfig};
use crate::error::{Error, Result};
use crate::model::{BankNode, ExposureNetwork};

fn mean_loss(
    banks: &[BankNode],
    net: &ExposureNetwork,
    config: &SimulationConfig,
    scenario: &ScenarioOverride,
) -> Result<f64> {
    Ok(run_scenario(banks, net, config, scenario)?.mean())
}

/// `C(δPD) = L̄(PD + δPD) − L̄(PD)`.
pub fn pd_impact(
    banks: &[BankNode],
    net: &ExposureNetwork,
    config: &SimulationConfig,
    delta_pd: &[f64],
) -> Result<f64> {
    let stressed = ScenarioOverride::shift(delta_pd.to_vec());
    if stressed.is_baseline() {
        // Validate anyway so a malformed vector is still reported.
        stressed.initial_state(banks)?;
        return Ok(0.0);
    }
    let base = mean_loss(banks, net, config, &ScenarioOverride::baseline())?;
    Ok(mean_loss(banks, net, config, &stressed)? - base)
}

/// The two scenario means behind one PDRank value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankTerms {
    pub pd: f64,
    /// `L̄(PD^{Di})`: the node defaults in the first period.
    pub forced_default: f64,
    /// `L̄(PD^{Ii})`: the node never defaults.
    pub immune: f64,
}

impl RankTerms {
    pub fn pd_rank(&self) -> f64 {
        self.pd * (self.forced_default - self.immune)
    }
}

pub fn pd_rank_terms(
    banks: &[BankNode],
    net: &ExposureNetwork,
    config: &SimulationConfig,
    node: usize,
) -> Result<RankTerms> {
    let n = banks.len();
    if node >= n {
        return Err(Error::domain(format!("node {node} out of range for {n} banks")));
    }
    let forced = ScenarioOverride::single(n, node, NodeMode::ForceDefault);
    let immune = ScenarioOverride::single(n, node, NodeMode::Immune);
    Ok(RankTerms {
        pd: banks[node].pd0,
        forced_default: mean_loss(banks, net, config, &forced)?,
        immune: mean_loss(banks, net, config, &immune)?,
    })
}

/// `PDRank_i = PD_i·(L̄(PD^{Di}) − L̄(PD^{Ii}))`.
pub fn pd_rank(banks: &[BankNode], net: &ExposureNetwork, config: &SimulationConfig, node: usize) -> Result<f64> {
    if node < banks.len() && banks[node].pd0 == 0.0 {
        return Ok(0.0);
    }
    Ok(pd_rank_terms(banks, net, config, node)?.pd_rank())
}

/// PDRank terms of every node.
pub fn pd_rank_all(banks: &[BankNode], net: &ExposureNetwork, config: &SimulationConfig) -> Result<Vec<RankTerms>> {
    (0..banks.len())
        .into_par_iter()
        .map(|i| pd_rank_terms(banks, net, config, i))
        .collect()
}

/// Zero-intercept least-squares fit of PDImpact against the percentage
/// increase `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdBeta {
    /// Loss increase per 1% increase of every probability.
    pub slope: f64,
    /// Root mean square residual of the fit.
    pub residual: f64,
    /// `1 − SS_res/SS_tot` with the total sum of squares about the mean.
    pub r_squared: f64,
    pub x: Vec<f64>,
    pub impact: Vec<f64>,
}

/// `δPD* = PD·x/100` for every `x` in the grid.
pub fn pd_impact_series(
    banks: &[BankNode],
    net: &ExposureNetwork,
    config: &SimulationConfig,
    x_grid: &[f64],
) -> Result<Vec<f64>> {
    let base = mean_loss(banks, net, config, &ScenarioOverride::baseline())?;
    x_grid
        .iter()
        .map(|&x| {
            let shift: Vec<f64> = banks.iter().map(|b| b.pd0 * x / 100.0).collect();
            let scen = ScenarioOverride::shift(shift);
            if scen.is_baseline() {
                return Ok(0.0);
            }
            Ok(mean_loss(banks, net, config, &scen)? - base)
        })
        .collect()
}

pub fn pd_beta(
    banks: &[BankNode],
    net: &ExposureNetwork,
    config: &SimulationConfig,
    x_grid: &[f64],
) -> Result<PdBeta> {
    if x_grid.is_empty() || x_grid.iter().all(|&x| x == 0.0) {
        return Err(Error::domain("pd_beta needs at least one nonzero percentage"));
    }
    let impact = pd_impact_series(banks, net, config, x_grid)?;
    Ok(fit_through_origin(x_grid, &impact))
}

/// Least squares `y ≈ βx` without intercept.
pub fn fit_through_origin(x: &[f64], y: &[f64]) -> PdBeta {
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a).powi(2)).sum();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|b| (b - mean).powi(2)).sum();
    PdBeta {
        slope,
        residual: (ss_res / y.len() as f64).sqrt(),
        r_squared: if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 },
        x: x.to_vec(),
        impact: y.to_vec(),
    }
}

/// Ordinary least squares `y ≈ a + bx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    LineFit {
        intercept: my - slope * mx,
        slope,
        r_squared: if sxx > 0.0 && syy > 0.0 { sxy * sxy / (sxx * syy) } else { 0.0 },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Binning {
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub bins: usize,
    pub binning: Binning,
    /// Lower edge of the first log bin as a fraction of the maximum loss.
    /// Positive losses below it are counted in the first bin.
    pub log_floor: f64,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        Self {
            bins: 50,
            binning: Binning::Log,
            log_floor: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Paths with zero loss; not part of any bin.
    pub zero_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSummary {
    pub n_paths: usize,
    pub mean: f64,
    pub std_error: f64,
    pub max_loss: f64,
    /// `(level, value)` pairs.
    pub quantiles: Vec<(f64, f64)>,
    pub histogram: Histogram,
}

/// Smallest loss `l` with `P(L ≤ l) ≥ level` under the empirical law.
pub fn empirical_quantile(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    let k = ((level * n as f64).ceil() as usize).clamp(1, n);
    sorted[k - 1]
}

pub fn summarize(dist: &LossDistribution, levels: &[f64], spec: &HistogramSpec) -> Result<LossSummary> {
    if dist.is_empty() {
        return Err(Error::domain("cannot summarise an empty loss distribution"));
    }
    if spec.bins == 0 {
        return Err(Error::domain("histogram needs at least one bin"));
    }
    if let Some(&l) = levels.iter().find(|l| !(**l > 0.0 && **l <= 1.0)) {
        return Err(Error::domain(format!("quantile level {l} is not in (0, 1]")));
    }
    let mut sorted = dist.losses.clone();
    sorted.sort_by(f64::total_cmp);
    let quantiles = levels.iter().map(|&q| (q, empirical_quantile(&sorted, q))).collect();
    Ok(LossSummary {
        n_paths: dist.len(),
        mean: dist.mean(),
        std_error: dist.std_error(),
        max_loss: dist.max_loss,
        quantiles,
        histogram: histogram(&dist.losses, dist.max_loss, spec),
    })
}

pub fn histogram(losses: &[f64], max_loss: f64, spec: &HistogramSpec) -> Histogram {
    let bins = spec.bins;
    let hi = if max_loss > 0.0 { max_loss } else { 1.0 };
    let edges: Vec<f64> = match spec.binning {
        Binning::Linear => (0..=bins).map(|k| hi * k as f64 / bins as f64).collect(),
        Binning::Log => {
            let lo = hi * spec.log_floor;
            let step = (hi / lo).ln() / bins as f64;
            (0..=bins)
                .map(|k| if k == bins { hi } else { lo * (step * k as f64).exp() })
                .collect()
        }
    };
    let mut counts = vec![0u64; bins];
    let mut zero_count = 0;
    for &l in losses {
        if l <= 0.0 {
            zero_count += 1;
            continue;
        }
        // First edge strictly greater than or equal to l closes its bin.
        let k = edges[1..].partition_point(|&e| e < l).min(bins - 1);
        counts[k] += 1;
    }
    Histogram {
        edges,
        counts,
        zero_count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(losses: Vec<f64>, max_loss: f64) -> LossDistribution {
        LossDistribution {
            losses,
            period_losses: None,
            max_loss,
        }
    }

    #[test]
    fn constant_losses() {
        let s = summarize(&dist(vec![4.0; 10], 10.0), &[0.1, 0.5, 0.999], &HistogramSpec::default()).unwrap();
        assert!(s.quantiles.iter().all(|&(_, v)| v == 4.0));
        assert_eq!(s.std_error, 0.0);
    }

    #[test]
    fn two_point_mean() {
        let s = summarize(&dist(vec![0.0, 60.0], 60.0), &[0.5, 1.0], &HistogramSpec::default()).unwrap();
        assert_eq!(s.mean, 30.0);
        assert_eq!(s.quantiles, vec![(0.5, 0.0), (1.0, 60.0)]);
        assert_eq!(s.histogram.zero_count, 1);
        assert_eq!(s.histogram.counts.iter().sum::<u64>(), 1);
        assert_eq!(*s.histogram.counts.last().unwrap(), 1);
    }

    #[test]
    fn histogram_accounts_for_every_path() {
        let losses: Vec<f64> = (0..1000).map(|i| (i % 97) as f64 * 0.37).collect();
        for binning in [Binning::Log, Binning::Linear] {
            let spec = HistogramSpec { bins: 13, binning, log_floor: 1e-3 };
            let h = histogram(&losses, 40.0, &spec);
            assert_eq!(h.counts.iter().sum::<u64>() + h.zero_count, 1000);
            assert_eq!(h.edges.len(), 14);
            assert!((h.edges[13] - 40.0).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_is_an_error() {
        assert!(summarize(&dist(vec![], 1.0), &[0.5], &HistogramSpec::default()).is_err());
        assert!(summarize(&dist(vec![1.0], 1.0), &[1.5], &HistogramSpec::default()).is_err());
    }

    #[test]
    fn origin_fit() {
        let x = [10.0, 20.0, 30.0];
        let f = fit_through_origin(&x, &[20.0, 40.0, 60.0]);
        assert!((f.slope - 2.0).abs() < 1e-15);
        assert!((f.r_squared - 1.0).abs() < 1e-15);
        let l = fit_line(&x, &[21.0, 41.0, 61.0]);
        assert!((l.intercept - 1.0).abs() < 1e-12 && (l.slope - 2.0).abs() < 1e-12);
    }
}
