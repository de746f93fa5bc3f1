//! Banks, the exposure network and the evolving state of the system.

use serde::{Deserialize, Serialize};

use crate::engine::update::{linear_update, merton_update};
use crate::error::{Error, Result};
use crate::math::merton_sigma_for_horizon;

/// Lowest default probability a live node can carry after an update.
pub const PD_FLOOR: f64 = 1e-6;

/// Static data of one institution. Amounts are in billions of EUR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankNode {
    pub id: usize,
    pub name: String,
    /// Total asset `A`.
    pub total_asset: f64,
    /// Capital `E`.
    pub capital: f64,
    /// Default probability per period at `t = 0`.
    pub pd0: f64,
    /// Loss given default.
    pub lgd: f64,
}

impl BankNode {
    pub fn new(
        id: usize,
        name: impl Into<String>,
        total_asset: f64,
        capital: f64,
        pd0: f64,
        lgd: f64,
    ) -> Result<Self> {
        let node = BankNode {
            id,
            name: name.into(),
            total_asset,
            capital,
            pd0,
            lgd,
        };
        node.validate()?;
        Ok(node)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| {
            Err(Error::domain(format!(
                "bank {} ({}): {what}",
                self.id, self.name
            )))
        };
        if !(self.total_asset > 0.0 && self.total_asset.is_finite()) {
            return bad("total asset must be positive");
        }
        if !(self.capital > 0.0 && self.capital < self.total_asset) {
            return bad("capital must satisfy 0 < E < A");
        }
        if !(0.0..1.0).contains(&self.pd0) {
            return bad("pd0 must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.lgd) {
            return bad("lgd must lie in [0, 1]");
        }
        Ok(())
    }

    /// Liability `B = A − E`, held constant by the Merton rule.
    pub fn liability(&self) -> f64 {
        self.total_asset - self.capital
    }
}

/// Weighted directed exposures: `a[i][j]` is what `i` loses per unit of
/// `j`'s loss given default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureNetwork {
    n: usize,
    a: Vec<f64>,
}

impl ExposureNetwork {
    /// Row-major `n × n` matrix.
    pub fn new(n: usize, a: Vec<f64>) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::domain(format!(
                "exposure matrix has {} entries, expected {}",
                a.len(),
                n * n
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = a[i * n + j];
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::domain(format!(
                        "exposure a[{i}][{j}] = {v} is not a finite nonnegative number"
                    )));
                }
                if i == j && v != 0.0 {
                    return Err(Error::domain(format!("self-exposure a[{i}][{i}] = {v}")));
                }
            }
        }
        Ok(Self { n, a })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            a: vec![0.0; n * n],
        }
    }

    /// Builds a network from `(from, to, amount)` triples; repeated pairs add up.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut a = vec![0.0; n * n];
        for (i, j, v) in edges {
            if i >= n || j >= n {
                return Err(Error::domain(format!("edge ({i}, {j}) outside {n} nodes")));
            }
            a[i * n + j] += v;
        }
        Self::new(n, a)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    /// Nonzero entries in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        self.a
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(move |(k, &v)| (k / n, k % n, v))
    }

    /// Total exposure of each node, `Σ_j a_ij`.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    /// Total liability of each node, `Σ_i a_ij`.
    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j)).sum())
            .collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.a
    }
}

/// Flat annual discount rate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DiscountCurve {
    pub rate: f64,
}

impl DiscountCurve {
    pub fn flat(rate: f64) -> Result<Self> {
        if !(rate > -1.0 && rate.is_finite()) {
            return Err(Error::domain(format!("discount rate {rate} must exceed -1")));
        }
        Ok(Self { rate })
    }

    /// `D(t) = (1 + r)^(−t)` with `t` in years.
    pub fn factor(&self, t: f64) -> f64 {
        if self.rate == 0.0 {
            1.0
        } else {
            (1.0 + self.rate).powf(-t)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateRule {
    #[default]
    Merton,
    Linear,
}

impl std::str::FromStr for UpdateRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "merton" => Ok(UpdateRule::Merton),
            "linear" => Ok(UpdateRule::Linear),
            other => Err(Error::config(format!(
                "unknown update rule `{other}` (expected merton or linear)"
            ))),
        }
    }
}

impl std::fmt::Display for UpdateRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            UpdateRule::Merton => "merton",
            UpdateRule::Linear => "linear",
        })
    }
}

/// The per-node constants an update rule needs: the Merton liability and
/// calibrated volatility.
#[derive(Debug, Clone)]
pub struct PdUpdater {
    pub rule: UpdateRule,
    pub dt: f64,
    liability: Vec<f64>,
    sigma: Vec<f64>,
}

impl PdUpdater {
    /// Calibrates σ for every node against `initial_pd`. Nodes whose initial
    /// probability is 0 or 1 never go through the Merton formula and get σ = 0.
    pub fn new(rule: UpdateRule, dt: f64, banks: &[BankNode], initial_pd: &[f64]) -> Result<Self> {
        let liability: Vec<f64> = banks.iter().map(BankNode::liability).collect();
        let sigma = match rule {
            UpdateRule::Linear => vec![0.0; banks.len()],
            UpdateRule::Merton => banks
                .iter()
                .zip(initial_pd)
                .map(|(b, &pd)| {
                    if pd > 0.0 && pd < 1.0 {
                        merton_sigma_for_horizon(b.total_asset, b.capital, pd, dt)
                    } else {
                        Ok(0.0)
                    }
                })
                .collect::<Result<_>>()?,
        };
        Ok(Self {
            rule,
            dt,
            liability,
            sigma,
        })
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// New default probability of node `i` after an impact.
    #[inline]
    pub fn update(&self, i: usize, pd: f64, asset: f64, capital: f64, impact: f64) -> f64 {
        if impact == 0.0 {
            return pd;
        }
        let next = match self.rule {
            UpdateRule::Merton => {
                if impact >= capital {
                    1.0
                } else {
                    merton_update(asset, impact, self.liability[i], self.sigma[i], self.dt)
                }
            }
            UpdateRule::Linear => linear_update(pd, impact, capital),
        };
        next.max(PD_FLOOR)
    }
}

/// State of the system at the start of a period.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t: usize,
    pub alive: Vec<bool>,
    pub capital: Vec<f64>,
    pub asset: Vec<f64>,
    pub pd: Vec<f64>,
    /// Nodes whose probability is pinned at 0 for the whole run.
    pub immune: Vec<bool>,
    pub defaulted_this_period: Vec<bool>,
}

impl SystemState {
    pub fn initial(banks: &[BankNode]) -> Self {
        let n = banks.len();
        Self {
            t: 0,
            alive: vec![true; n],
            capital: banks.iter().map(|b| b.capital).collect(),
            asset: banks.iter().map(|b| b.total_asset).collect(),
            pd: banks.iter().map(|b| b.pd0.max(PD_FLOOR)).collect(),
            immune: vec![false; n],
            defaulted_this_period: vec![false; n],
        }
    }

    pub fn alive_count(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }
}

/// `I_i = Σ_j a_ij δ_j LGD_j` over this period's defaults, for live `i`.
pub fn impact(state: &SystemState, net: &ExposureNetwork, banks: &[BankNode]) -> Vec<f64> {
    let mut out = vec![0.0; banks.len()];
    impact_into(state, net, banks, &mut out);
    out
}

pub(crate) fn impact_into(
    state: &SystemState,
    net: &ExposureNetwork,
    banks: &[BankNode],
    out: &mut [f64],
) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (j, bank) in banks.iter().enumerate() {
        if !state.defaulted_this_period[j] || bank.lgd == 0.0 {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            if state.alive[i] && !state.defaulted_this_period[i] {
                *o += net.get(i, j) * bank.lgd;
            }
        }
    }
}

/// Advances the state past the current period: removes this period's
/// defaults, writes the impacts down on capital and assets and updates the
/// default probabilities.
pub fn apply_impact_in_place(state: &mut SystemState, impacts: &[f64], updater: &PdUpdater) {
    for i in 0..state.alive.len() {
        if state.defaulted_this_period[i] {
            state.alive[i] = false;
            state.defaulted_this_period[i] = false;
            continue;
        }
        if !state.alive[i] {
            continue;
        }
        let hit = impacts[i];
        if hit == 0.0 {
            continue;
        }
        let (asset, capital) = (state.asset[i], state.capital[i]);
        if !state.immune[i] {
            state.pd[i] = updater.update(i, state.pd[i], asset, capital, hit);
        }
        state.capital[i] = capital - hit;
        state.asset[i] = asset - hit;
    }
    state.t += 1;
}

/// Value-returning form of [`apply_impact_in_place`].
pub fn apply_impact(state: &SystemState, impacts: &[f64], updater: &PdUpdater) -> SystemState {
    let mut next = state.clone();
    apply_impact_in_place(&mut next, impacts, updater);
    next
}
