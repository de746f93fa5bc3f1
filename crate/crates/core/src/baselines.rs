//! Network-only contagion models: the Furfine default cascade and the
//! generalised DebtRank iteration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BankNode, ExposureNetwork};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FurfineOutcome {
    pub defaulted: Vec<bool>,
    /// Round in which each node defaulted, 0 if it survived.
    pub round: Vec<usize>,
    pub rounds: usize,
    /// `Σ A_i·LGD_i` over defaulted nodes.
    pub loss: f64,
}

fn check_sizes(banks: &[BankNode], net: &ExposureNetwork, v: &[f64], what: &str) -> Result<()> {
    if net.dim() != banks.len() || v.len() != banks.len() {
        return Err(Error::domain(format!(
            "{what}: {} banks, {}-node network, {} values",
            banks.len(),
            net.dim(),
            v.len()
        )));
    }
    Ok(())
}

/// A node defaults once its shock plus the write-downs `a_ij·LGD_j` from
/// defaulted counterparties exceed its capital.
pub fn furfine_cascade(banks: &[BankNode], net: &ExposureNetwork, shocks: &[f64]) -> Result<FurfineOutcome> {
    check_sizes(banks, net, shocks, "furfine_cascade")?;
    if let Some(s) = shocks.iter().find(|s| !(**s >= 0.0)) {
        return Err(Error::domain(format!("shock {s} is negative")));
    }
    let n = banks.len();
    let mut received = shocks.to_vec();
    let mut round = vec![0usize; n];
    let mut defaulted = vec![false; n];
    let mut rounds = 0;
    loop {
        let fresh: Vec<usize> = (0..n)
            .filter(|&i| !defaulted[i] && received[i] > banks[i].capital)
            .collect();
        if fresh.is_empty() {
            break;
        }
        rounds += 1;
        for &j in &fresh {
            defaulted[j] = true;
            round[j] = rounds;
        }
        for &j in &fresh {
            for (i, r) in received.iter_mut().enumerate() {
                *r += net.get(i, j) * banks[j].lgd;
            }
        }
    }
    let loss = banks
        .iter()
        .zip(&defaulted)
        .filter(|(_, &d)| d)
        .map(|(b, _)| b.total_asset * b.lgd)
        .fold(0.0, |acc, l| acc + l);
    Ok(FurfineOutcome {
        defaulted,
        round,
        rounds,
        loss,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DebtRankSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DebtRankSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebtRankOutcome {
    /// Converged relative capital loss per node.
    pub h: Vec<f64>,
    /// `Σ h_i E_i`.
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Leverage matrix `Λ_ij = a_ij·LGD_j / E_i`, row-major.
pub fn leverage_matrix(banks: &[BankNode], net: &ExposureNetwork) -> Vec<f64> {
    let n = banks.len();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = net.get(i, j) * banks[j].lgd / banks[i].capital;
        }
    }
    out
}

/// `h_i(t+1) = min[1, h_i(t) + Σ_j Λ_ij (h_j(t) − h_j(t−1))]` from
/// `h(0) = initial_stress`, `h(−1) = 0`.
pub fn gen_debtrank(
    banks: &[BankNode],
    net: &ExposureNetwork,
    initial_stress: &[f64],
    settings: DebtRankSettings,
) -> Result<DebtRankOutcome> {
    check_sizes(banks, net, initial_stress, "gen_debtrank")?;
    if let Some(h) = initial_stress.iter().find(|h| !(0.0..=1.0).contains(*h)) {
        return Err(Error::domain(format!("initial stress {h} is not in [0, 1]")));
    }
    if !(settings.tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let n = banks.len();
    let lambda = leverage_matrix(banks, net);
    let mut prev = vec![0.0; n];
    let mut h = initial_stress.to_vec();
    let mut next = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < settings.max_iter {
        iterations += 1;
        let mut change: f64 = 0.0;
        for i in 0..n {
            let push: f64 = (0..n).map(|j| lambda[i * n + j] * (h[j] - prev[j])).sum();
            next[i] = (h[i] + push).min(1.0);
            change = change.max((next[i] - h[i]).abs());
        }
        std::mem::swap(&mut prev, &mut h);
        std::mem::swap(&mut h, &mut next);
        if change < settings.tol {
            converged = true;
            break;
        }
    }
    let loss = h.iter().zip(banks).map(|(x, b)| x * b.capital).sum();
    Ok(DebtRankOutcome {
        h,
        loss,
        iterations,
        converged,
    })
}

/// Perron root of the leverage matrix by power iteration on `Λ + I`.
pub fn spectral_radius(banks: &[BankNode], net: &ExposureNetwork) -> f64 {
    let n = banks.len();
    if n == 0 {
        return 0.0;
    }
    let lambda = leverage_matrix(banks, net);
    let mut v = vec![1.0 / n as f64; n];
    let mut estimate = 0.0;
    for _ in 0..10_000 {
        let w: Vec<f64> = (0..n)
            .map(|i| v[i] + (0..n).map(|j| lambda[i * n + j] * v[j]).sum::<f64>())
            .collect();
        let norm: f64 = w.iter().sum();
        let next = norm / v.iter().sum::<f64>() - 1.0;
        v = w.iter().map(|x| x / norm).collect();
        if (next - estimate).abs() <= 1e-13 * next.abs().max(1.0) {
            return next;
        }
        estimate = next;
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(e1: f64, e2: f64, a12: f64, a21: f64) -> (Vec<BankNode>, ExposureNetwork) {
        (
            vec![
                BankNode::new(0, "one", 100.0, e1, 0.01, 0.6).unwrap(),
                BankNode::new(1, "two", 80.0, e2, 0.01, 0.6).unwrap(),
            ],
            ExposureNetwork::new(2, vec![0.0, a12, a21, 0.0]).unwrap(),
        )
    }

    #[test]
    fn furfine_truth_table() {
        let (b, net) = pair(10.0, 5.0, 0.0, 20.0);
        let none = furfine_cascade(&b, &net, &[10.0, 0.0]).unwrap().loss;
        assert!(none == 0.0 && none.is_sign_positive());
        let both = furfine_cascade(&b, &net, &[10.5, 0.0]).unwrap();
        assert_eq!(both.defaulted, vec![true, true]);
        assert_eq!(both.loss, 60.0 + 48.0);
        assert_eq!(both.round, vec![1, 2]);
        let (b, net) = pair(10.0, 5.0, 0.0, 5.0 / 0.6);
        let one = furfine_cascade(&b, &net, &[10.5, 0.0]).unwrap();
        assert_eq!(one.defaulted, vec![true, false]);
        assert_eq!(one.loss, 60.0);
    }

    #[test]
    fn debtrank_without_exposures() {
        let (b, net) = pair(10.0, 5.0, 0.0, 0.0);
        let out = gen_debtrank(&b, &net, &[0.3, 0.0], DebtRankSettings::default()).unwrap();
        assert!((out.loss - 3.0).abs() < 1e-15);
        assert!(out.converged);
    }

    #[test]
    fn debtrank_geometric_series() {
        let (b, net) = pair(10.0, 5.0, 8.0, 4.0);
        let (k1, k2) = (8.0 * 0.6 / 10.0, 4.0 * 0.6 / 5.0);
        let s = 0.01;
        let out = gen_debtrank(&b, &net, &[s, 0.0], DebtRankSettings::default()).unwrap();
        assert!((out.h[0] - s / (1.0 - k1 * k2)).abs() < 1e-8);
        assert!((out.h[1] - k2 * s / (1.0 - k1 * k2)).abs() < 1e-8);
    }

    #[test]
    fn debtrank_supercritical() {
        let (b, net) = pair(10.0, 5.0, 30.0, 20.0);
        let out = gen_debtrank(&b, &net, &[1e-9, 0.0], DebtRankSettings::default()).unwrap();
        assert!(out.h.iter().any(|&h| h == 1.0));
    }

    #[test]
    fn spectral_radius_of_pair() {
        let (b, net) = pair(10.0, 5.0, 8.0, 4.0);
        let want = (0.48f64 * 0.48).sqrt();
        assert!((spectral_radius(&b, &net) - want).abs() < 1e-9);
    }
}
