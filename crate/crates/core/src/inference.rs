//! Reconstruction of bilateral exposures from each bank's aggregate
//! interbank assets and liabilities.
//!
//! Borrowers are served one at a time, smallest total liabilities first. A
//! borrower repeatedly draws a lender with probability proportional to the
//! lender's residual assets raised to `alpha` and takes a loan of
//! `min_loan_fraction` of its total liabilities, capped by both residuals.
//! If the only residual assets left belong to the borrower itself, earlier
//! loans are routed through it so the diagonal stays empty.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ExposureNetwork;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMarginals {
    /// `Σ_j a_ij` per node.
    pub assets: Vec<f64>,
    /// `Σ_j a_ji` per node.
    pub liabilities: Vec<f64>,
}

impl AggregateMarginals {
    pub fn new(assets: Vec<f64>, liabilities: Vec<f64>) -> Result<Self> {
        if assets.len() != liabilities.len() {
            return Err(Error::domain("assets and liabilities differ in length"));
        }
        if let Some(v) = assets.iter().chain(&liabilities).find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::domain(format!("marginal {v} is not a finite nonnegative number")));
        }
        Ok(Self { assets, liabilities })
    }

    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }

    /// Scales liabilities so both sides have the same total. Returns the
    /// scaled marginals and the factor applied.
    pub fn normalized(&self) -> Result<(Self, f64)> {
        let ta: f64 = self.assets.iter().sum();
        let tl: f64 = self.liabilities.iter().sum();
        if ta == 0.0 && tl == 0.0 {
            return Ok((self.clone(), 1.0));
        }
        if !(ta > 0.0 && tl > 0.0) {
            return Err(Error::Inference(format!(
                "cannot balance total assets {ta} against total liabilities {tl}"
            )));
        }
        let factor = ta / tl;
        Ok((
            Self {
                assets: self.assets.clone(),
                liabilities: self.liabilities.iter().map(|l| l * factor).collect(),
            },
            factor,
        ))
    }

    /// Whether a matrix with zero diagonal can match these marginals:
    /// no node may need to lend or borrow more than the others can absorb.
    pub fn is_feasible(&self) -> bool {
        let total: f64 = self.assets.iter().sum();
        let slack = 1e-12 * total.max(1.0);
        self.assets
            .iter()
            .zip(&self.liabilities)
            .all(|(a, l)| a + l <= total + slack)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    pub alpha: f64,
    pub min_loan_fraction: f64,
    pub ensemble_size: usize,
    pub seed: u64,
    /// Upper bound on loans split while routing around a self-pair.
    pub max_reroutes: usize,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            min_loan_fraction: 0.05,
            ensemble_size: 10,
            seed: 1,
            max_reroutes: 100_000,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::config(format!("alpha = {} must be nonnegative", self.alpha)));
        }
        if !(self.min_loan_fraction > 0.0 && self.min_loan_fraction <= 1.0) {
            return Err(Error::config(format!(
                "min_loan_fraction = {} must lie in (0, 1]",
                self.min_loan_fraction
            )));
        }
        if self.ensemble_size == 0 {
            return Err(Error::config("ensemble_size must be at least 1"));
        }
        Ok(())
    }
}

/// Generator of ensemble member `k`.
pub fn member_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

struct Builder<'a, R> {
    n: usize,
    a: Vec<f64>,
    res_assets: Vec<f64>,
    res_liab: Vec<f64>,
    eps: f64,
    config: &'a InferenceConfig,
    rng: &'a mut R,
    weights: Vec<f64>,
    reroutes: usize,
}

impl<R: Rng> Builder<'_, R> {
    fn draw_lender(&mut self, borrower: usize) -> Option<usize> {
        let alpha = self.config.alpha;
        let mut total = 0.0;
        for j in 0..self.n {
            let r = self.res_assets[j];
            let w = if j != borrower && r > 0.0 {
                if alpha == 0.0 {
                    1.0
                } else if alpha == 1.0 {
                    r
                } else {
                    r.powf(alpha)
                }
            } else {
                0.0
            };
            self.weights[j] = w;
            total += w;
        }
        if !(total > 0.0) {
            return None;
        }
        let mut u = self.rng.random::<f64>() * total;
        let mut last = None;
        for (j, &w) in self.weights.iter().enumerate() {
            if w > 0.0 {
                last = Some(j);
                if u < w {
                    return Some(j);
                }
                u -= w;
            }
        }
        last
    }

    fn lend(&mut self, lender: usize, borrower: usize, amount: f64) {
        self.a[lender * self.n + borrower] += amount;
        self.res_assets[lender] = settle(self.res_assets[lender] - amount, self.eps);
        self.res_liab[borrower] = settle(self.res_liab[borrower] - amount, self.eps);
    }

    /// Routes earlier loans `j → k` through `b` until `b`'s residual
    /// liabilities are met from its own residual assets.
    fn reroute(&mut self, b: usize) -> Result<()> {
        let n = self.n;
        while self.res_liab[b] > 0.0 {
            if self.res_assets[b] <= 0.0 {
                return Err(Error::Inference(format!(
                    "node {b} still owes {} with no assets left to match",
                    self.res_liab[b]
                )));
            }
            if self.reroutes >= self.config.max_reroutes {
                return Err(Error::Inference(format!(
                    "gave up after {} re-routing attempts",
                    self.reroutes
                )));
            }
            let candidates: Vec<usize> = (0..n * n)
                .filter(|&k| {
                    let (j, c) = (k / n, k % n);
                    j != b && c != b && self.a[k] > 0.0
                })
                .collect();
            if candidates.is_empty() {
                return Err(Error::Inference(format!(
                    "node {b} can only borrow from itself and no loan can be re-routed"
                )));
            }
            self.reroutes += 1;
            let k = candidates[self.rng.random_range(0..candidates.len())];
            let (j, c) = (k / n, k % n);
            let y = self.a[k].min(self.res_liab[b]).min(self.res_assets[b]);
            // j → c becomes j → b → c: j's assets and c's liabilities are
            // unchanged, b lends and borrows y more.
            self.a[k] -= y;
            self.a[j * n + b] += y;
            self.a[b * n + c] += y;
            self.res_liab[b] = settle(self.res_liab[b] - y, self.eps);
            self.res_assets[b] = settle(self.res_assets[b] - y, self.eps);
        }
        Ok(())
    }
}

#[inline]
fn settle(x: f64, eps: f64) -> f64 {
    if x <= eps {
        0.0
    } else {
        x
    }
}

/// Builds one exposure network. `marginals` must already balance; see
/// [`AggregateMarginals::normalized`].
pub fn infer_network<R: Rng>(
    marginals: &AggregateMarginals,
    config: &InferenceConfig,
    rng: &mut R,
) -> Result<ExposureNetwork> {
    config.validate()?;
    let n = marginals.len();
    let ta: f64 = marginals.assets.iter().sum();
    let tl: f64 = marginals.liabilities.iter().sum();
    if (ta - tl).abs() > 1e-9 * ta.max(tl).max(1.0) {
        return Err(Error::Inference(format!(
            "marginals are not balanced: assets {ta}, liabilities {tl}"
        )));
    }
    if !marginals.is_feasible() {
        return Err(Error::Inference(
            "infeasible marginals: a node's assets plus liabilities exceed the system total".into(),
        ));
    }
    // Residuals below this are rounding left over from the balancing.
    let eps = 1e-13 * ta.max(1.0);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        marginals.liabilities[x]
            .total_cmp(&marginals.liabilities[y])
            .then(x.cmp(&y))
    });
    let mut b = Builder {
        n,
        a: vec![0.0; n * n],
        res_assets: marginals.assets.iter().map(|&v| settle(v, eps)).collect(),
        res_liab: marginals.liabilities.iter().map(|&v| settle(v, eps)).collect(),
        eps,
        config,
        rng,
        weights: vec![0.0; n],
        reroutes: 0,
    };
    for &borrower in &order {
        let min_loan = config.min_loan_fraction * marginals.liabilities[borrower];
        while b.res_liab[borrower] > 0.0 {
            match b.draw_lender(borrower) {
                Some(lender) => {
                    let (ra, rl) = (b.res_assets[lender], b.res_liab[borrower]);
                    let mut loan = min_loan.min(ra).min(rl);
                    // Close out a residual rather than leave dust behind.
                    if rl - loan <= b.eps || ra - loan <= b.eps {
                        loan = ra.min(rl);
                    }
                    b.lend(lender, borrower, loan);
                }
                None if b.res_assets[borrower] > 0.0 => b.reroute(borrower)?,
                // Only rounding dust is left on the liability side.
                None => b.res_liab[borrower] = 0.0,
            }
        }
    }
    ExposureNetwork::new(n, b.a)
}

/// `config.ensemble_size` networks, member `k` drawn from [`member_rng`].
pub fn generate_ensemble(marginals: &AggregateMarginals, config: &InferenceConfig) -> Result<Vec<ExposureNetwork>> {
    config.validate()?;
    (0..config.ensemble_size)
        .into_par_iter()
        .map(|k| {
            infer_network(marginals, config, &mut member_rng(config.seed, k)).map_err(|e| {
                Error::Inference(format!("ensemble member {k} (seed {}, stream {k}): {e}", config.seed))
            })
        })
        .collect()
}

/// Largest relative deviation of the network's row and column sums from the
/// marginals.
pub fn marginal_deviation(net: &ExposureNetwork, marginals: &AggregateMarginals) -> f64 {
    let rel = |got: f64, want: f64| {
        if want == 0.0 {
            got.abs()
        } else {
            (got - want).abs() / want
        }
    };
    let rows = net.row_sums();
    let cols = net.column_sums();
    (0..net.dim())
        .map(|i| rel(rows[i], marginals.assets[i]).max(rel(cols[i], marginals.liabilities[i])))
        .fold(0.0, f64::max)
}
