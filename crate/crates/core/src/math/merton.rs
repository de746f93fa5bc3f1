//! Merton structural model: default probability from the capital structure
//! and calibration of asset volatility from an observed default probability.

use serde::{Deserialize, Serialize};

use super::normal::{cdf, inv_cdf};
use crate::error::{Error, Result};

/// Inputs of the Merton default probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MertonParams {
    /// Total assets `A`.
    pub asset: f64,
    /// Liability `B = A − E` due at the horizon.
    pub liability: f64,
    /// Asset drift `μ` per year.
    pub drift: f64,
    /// Asset volatility `σ` per √year.
    pub volatility: f64,
    /// Horizon `Δt` in years.
    pub horizon: f64,
}

impl MertonParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.asset > 0.0
            && self.liability > 0.0
            && self.volatility > 0.0
            && self.horizon > 0.0
            && self.drift.is_finite()
            && self.asset.is_finite()
            && self.liability.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("invalid Merton parameters {self:?}")))
        }
    }
}

/// Distance-to-default form of the Merton probability, no validation.
#[inline]
pub(crate) fn merton_pd_unchecked(
    asset: f64,
    liability: f64,
    drift: f64,
    volatility: f64,
    horizon: f64,
) -> f64 {
    let s = volatility * horizon.sqrt();
    let dd = ((asset / liability).ln() + (drift - 0.5 * volatility * volatility) * horizon) / s;
    // 1 − Φ(d) = Φ(−d) keeps precision when d is large.
    cdf(-dd)
}

/// `1 − Φ((ln A − ln B + (μ − σ²/2)Δt) / (σ√Δt))`.
pub fn merton_pd(params: &MertonParams) -> Result<f64> {
    params.validate()?;
    Ok(merton_pd_unchecked(
        params.asset,
        params.liability,
        params.drift,
        params.volatility,
        params.horizon,
    ))
}

/// Volatility `σ` such that a zero-drift Merton model over one year with
/// `A` and `B = A − E` reproduces `pd0`.
pub fn merton_sigma(asset: f64, capital: f64, pd0: f64) -> Result<f64> {
    merton_sigma_for_horizon(asset, capital, pd0, 1.0)
}

/// As [`merton_sigma`] over a horizon `dt`.
///
/// With `s = σ√Δt` and `z = Φ⁻¹(1 − pd0)` the calibration condition is the
/// quadratic `s²/2 + z s − ln(A/B) = 0`, whose positive root is
/// `s = −z + √(z² + 2 ln(A/B))`.
pub fn merton_sigma_for_horizon(asset: f64, capital: f64, pd0: f64, dt: f64) -> Result<f64> {
    if !(asset > capital && capital > 0.0 && asset.is_finite()) {
        return Err(Error::domain(format!(
            "merton_sigma needs A > E > 0, got A = {asset}, E = {capital}"
        )));
    }
    if !(pd0 > 0.0 && pd0 < 1.0) {
        return Err(Error::domain(format!("merton_sigma: pd0 = {pd0} is not in (0, 1)")));
    }
    if !(dt > 0.0) {
        return Err(Error::domain(format!("merton_sigma: horizon {dt} is not positive")));
    }
    let log_leverage = -(-capital / asset).ln_1p();
    let z = -inv_cdf(pd0);
    // −z + √(z² + 2c) rewritten as 2c / (z + √(z² + 2c)) to avoid cancellation
    // when z is large and c small.
    let root = (z * z + 2.0 * log_leverage).sqrt();
    let s = if z > 0.0 {
        2.0 * log_leverage / (z + root)
    } else {
        root - z
    };
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Calibration(format!(
            "no positive volatility reproduces pd0 = {pd0} with A = {asset}, E = {capital}"
        )));
    }
    Ok(s / dt.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(asset: f64, liability: f64, volatility: f64) -> MertonParams {
        MertonParams {
            asset,
            liability,
            drift: 0.0,
            volatility,
            horizon: 1.0,
        }
    }

    /// Independent route: bisection on σ over the forward formula.
    fn bisect_sigma(asset: f64, capital: f64, pd0: f64) -> f64 {
        let b = asset - capital;
        let (mut lo, mut hi) = (1e-12, 5.0);
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            // For A > B and pd0 < 0.5 the PD increases with σ on this bracket.
            if merton_pd(&params(asset, b, mid)).unwrap() < pd0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn zero_distance_gives_half() {
        let sigma = 0.2;
        let p = MertonParams {
            asset: 100.0,
            liability: 100.0,
            drift: 0.5 * sigma * sigma,
            volatility: sigma,
            horizon: 1.0,
        };
        assert_eq!(merton_pd(&p).unwrap(), 0.5);
    }

    #[test]
    fn far_from_default() {
        assert!(merton_pd(&params(1e12, 1.0, 0.1)).unwrap() < 1e-300);
    }

    #[test]
    fn calibration_reference_value() {
        let sigma = merton_sigma(200.0, 50.0, 0.001).unwrap();
        let bisected = bisect_sigma(200.0, 50.0, 0.001);
        assert!((sigma - bisected).abs() < 1e-9);
        assert!((sigma - 0.0918).abs() < 5e-4, "sigma = {sigma}");
        let pd = merton_pd(&params(200.0, 150.0, sigma)).unwrap();
        assert!((pd - 0.001).abs() < 1e-10);
    }

    #[test]
    fn forward_value_at_rounded_sigma() {
        let pd = merton_pd(&params(200.0, 150.0, 0.0918)).unwrap();
        assert!((pd - 0.001).abs() < 2e-5, "pd = {pd}");
    }

    #[test]
    fn round_trip_grid() {
        for &pd0 in &[1e-4, 5e-4, 1e-3, 5e-3, 0.01, 0.05, 0.1, 0.2] {
            for &ratio in &[0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5] {
                let a = 1000.0;
                let e = ratio * a;
                let s = merton_sigma(a, e, pd0).unwrap();
                let back = merton_pd(&params(a, a - e, s)).unwrap();
                assert!((back - pd0).abs() < 1e-10, "pd0 {pd0} ratio {ratio}");
            }
        }
    }

    #[test]
    fn vanishing_capital_vanishing_sigma() {
        let mut prev = f64::INFINITY;
        for &e in &[1.0, 1e-2, 1e-4, 1e-6, 1e-9] {
            let s = merton_sigma(100.0, e, 0.001).unwrap();
            assert!(s > 0.0 && s < prev);
            prev = s;
        }
        assert!(prev < 1e-9);
    }

    #[test]
    fn monotonicity() {
        let base = params(200.0, 150.0, 0.0918);
        let pd = merton_pd(&base).unwrap();
        assert!(merton_pd(&params(210.0, 150.0, 0.0918)).unwrap() < pd);
        assert!(merton_pd(&params(200.0, 160.0, 0.0918)).unwrap() > pd);
        assert!(merton_pd(&params(200.0, 150.0, 0.1)).unwrap() > pd);
    }

    #[test]
    fn invalid_inputs() {
        assert!(merton_pd(&params(-1.0, 1.0, 0.1)).is_err());
        assert!(merton_pd(&params(1.0, 1.0, 0.0)).is_err());
        assert!(merton_sigma(100.0, 100.0, 0.01).is_err());
        assert!(merton_sigma(100.0, 0.0, 0.01).is_err());
        assert!(merton_sigma(100.0, 10.0, 1.0).is_err());
    }
}
