//! Exact Markov chain of the symmetric two-bank system.
//!
//! States are indexed `[0, 1, 2, 12]`: nobody has defaulted, only bank 1,
//! only bank 2, both. Both banks share `A`, `E`, `PD` and `LGD` and are
//! exposed to each other by `a`, with `â = a·LGD`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::normal::{cdf, inv_cdf};
use crate::math::{bivariate_cdf, merton_sigma};

pub const STATE_LABELS: [&str; 4] = ["0", "1", "2", "12"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoNodeParams {
    pub asset: f64,
    pub capital: f64,
    pub pd: f64,
    pub lgd: f64,
    pub a_hat: f64,
    pub rho: f64,
    /// Calibrated from `(asset, capital, pd)`.
    pub sigma: f64,
}

impl TwoNodeParams {
    pub fn new(asset: f64, capital: f64, pd: f64, lgd: f64, a_hat: f64, rho: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lgd) {
            return Err(Error::domain(format!("lgd {lgd} is not in [0, 1]")));
        }
        if !(a_hat >= 0.0) {
            return Err(Error::domain(format!("â = {a_hat} must be nonnegative")));
        }
        if !(rho.abs() <= 1.0) {
            return Err(Error::domain(format!("correlation {rho} is outside [-1, 1]")));
        }
        if a_hat >= asset {
            return Err(Error::domain(format!(
                "â = {a_hat} would leave a nonpositive asset (A = {asset})"
            )));
        }
        Ok(Self {
            asset,
            capital,
            pd,
            lgd,
            a_hat,
            rho,
            sigma: merton_sigma(asset, capital, pd)?,
        })
    }

    pub fn with_rho(&self, rho: f64) -> Self {
        Self { rho, ..*self }
    }

    pub fn with_capital(&self, capital: f64) -> Result<Self> {
        Self::new(self.asset, capital, self.pd, self.lgd, self.a_hat, self.rho)
    }

    /// Default probability of the survivor after its counterparty defaulted.
    pub fn contagion_pd(&self) -> f64 {
        if self.a_hat >= self.capital {
            return 1.0;
        }
        if self.a_hat == 0.0 {
            return self.pd;
        }
        let s = self.sigma;
        let d = (((self.asset - self.a_hat) / (self.asset - self.capital)).ln() - 0.5 * s * s) / s;
        cdf(-d)
    }

    /// Probability that both banks default in one period from state 0.
    pub fn joint_pd(&self) -> f64 {
        let t = inv_cdf(self.pd);
        bivariate_cdf(t, t, self.rho).min(self.pd)
    }
}

pub type TransitionMatrix = [[f64; 4]; 4];

pub fn transition_matrix(p: &TwoNodeParams) -> Result<TransitionMatrix> {
    if p.a_hat >= p.asset {
        return Err(Error::domain("â must be smaller than the total asset"));
    }
    let both = p.joint_pd();
    let single = p.pd - both;
    let c = p.contagion_pd();
    Ok([
        [1.0 - 2.0 * single - both, single, single, both],
        [0.0, 1.0 - c, 0.0, c],
        [0.0, 0.0, 1.0 - c, c],
        [0.0, 0.0, 0.0, 1.0],
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub pi: [f64; 4],
}

impl ChainState {
    pub fn start() -> Self {
        Self {
            pi: [1.0, 0.0, 0.0, 0.0],
        }
    }

    pub fn both_defaulted(&self) -> f64 {
        self.pi[3]
    }

    pub fn step(&self, t: &TransitionMatrix) -> Self {
        let mut pi = [0.0; 4];
        for (s, row) in t.iter().enumerate() {
            for (s2, &prob) in row.iter().enumerate() {
                pi[s2] += self.pi[s] * prob;
            }
        }
        Self { pi }
    }
}

/// `π(t)` for `t = 0..=m`.
pub fn evolve(p: &TwoNodeParams, m: usize) -> Result<Vec<ChainState>> {
    let t = transition_matrix(p)?;
    let mut out = Vec::with_capacity(m + 1);
    let mut s = ChainState::start();
    out.push(s);
    for _ in 0..m {
        s = s.step(&t);
        out.push(s);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateLossDistribution {
    /// `(loss, probability)` for losses `0`, `A·LGD` and `2A·LGD`.
    pub points: Vec<(f64, f64)>,
    pub expected: f64,
}

pub fn state_loss_distribution(p: &TwoNodeParams, m: usize) -> Result<StateLossDistribution> {
    let pi = evolve(p, m)?.last().copied().unwrap_or_else(ChainState::start).pi;
    let unit = p.asset * p.lgd;
    let points = vec![(0.0, pi[0]), (unit, pi[1] + pi[2]), (2.0 * unit, pi[3])];
    let expected = points.iter().map(|(l, q)| l * q).sum();
    Ok(StateLossDistribution { points, expected })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    NonMonotone,
    Flat,
}

/// Differences smaller than this are treated as zero.
pub const FLAT_TOLERANCE: f64 = 1e-14;

pub fn classify(values: &[f64]) -> Monotonicity {
    let (mut up, mut down) = (false, false);
    for w in values.windows(2) {
        let d = w[1] - w[0];
        if d > FLAT_TOLERANCE {
            up = true;
        } else if d < -FLAT_TOLERANCE {
            down = true;
        }
    }
    match (up, down) {
        (true, false) => Monotonicity::Increasing,
        (false, true) => Monotonicity::Decreasing,
        (true, true) => Monotonicity::NonMonotone,
        (false, false) => Monotonicity::Flat,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub capital: f64,
    /// `π₁₂(M)` along the correlation grid.
    pub pi12: Vec<f64>,
    pub class: Monotonicity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContagionScan {
    pub rho: Vec<f64>,
    pub periods: usize,
    pub rows: Vec<ScanRow>,
    /// Capitals where the classification changes between neighbours on the
    /// (ascending) capital grid.
    pub flips: Vec<(f64, f64)>,
    /// Capital at which `π₁₂(M)` takes the same value at both ends of the
    /// correlation grid, located by bisection inside the first
    /// decreasing-to-increasing bracket.
    pub crossover: Option<f64>,
}

fn pi12_at(base: &TwoNodeParams, capital: f64, rho: f64, m: usize) -> Result<f64> {
    let p = base.with_capital(capital)?.with_rho(rho);
    Ok(evolve(&p, m)?[m].both_defaulted())
}

pub fn strong_contagion_scan(
    base: &TwoNodeParams,
    capital_grid: &[f64],
    rho_grid: &[f64],
    m: usize,
) -> Result<ContagionScan> {
    if capital_grid.is_empty() || rho_grid.len() < 2 {
        return Err(Error::domain("scan needs a capital and at least two correlations"));
    }
    if rho_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("correlation grid must be strictly increasing"));
    }
    let mut caps = capital_grid.to_vec();
    caps.sort_by(f64::total_cmp);
    let rows = caps
        .iter()
        .map(|&e| {
            let pi12 = rho_grid
                .iter()
                .map(|&r| pi12_at(base, e, r, m))
                .collect::<Result<Vec<_>>>()?;
            Ok(ScanRow {
                capital: e,
                class: classify(&pi12),
                pi12,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let flips: Vec<(f64, f64)> = rows
        .windows(2)
        .filter(|w| w[0].class != w[1].class)
        .map(|w| (w[0].capital, w[1].capital))
        .collect();

    let (lo_rho, hi_rho) = (rho_grid[0], *rho_grid.last().unwrap());
    let gap = |e: f64| -> Result<f64> { Ok(pi12_at(base, e, hi_rho, m)? - pi12_at(base, e, lo_rho, m)?) };
    let mut crossover = None;
    if let Some(w) = rows
        .windows(2)
        .find(|w| w[0].class == Monotonicity::Decreasing && w[1].class != Monotonicity::Decreasing)
    {
        let (mut lo, mut hi) = (w[0].capital, w[1].capital);
        if gap(lo)? < 0.0 && gap(hi)? > 0.0 {
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if gap(mid)? < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            crossover = Some(0.5 * (lo + hi));
        }
    }
    Ok(ContagionScan {
        rho: rho_grid.to_vec(),
        periods: m,
        rows,
        flips,
        crossover,
    })
}
