//! The two default-probability update rules.

use crate::math::normal::cdf;

/// Merton update from the cumulative state: the asset after the impact is
/// `A_t − I`, the liability `B` and the volatility `σ` are fixed at `t = 0`.
/// Returns 1 once the impact wipes out the remaining capital `A_t − B`.
#[inline]
pub fn merton_update(asset: f64, impact: f64, liability: f64, sigma: f64, dt: f64) -> f64 {
    let remaining = asset - impact;
    if remaining <= liability {
        return 1.0;
    }
    let s = sigma * dt.sqrt();
    let d = ((remaining / liability).ln() - 0.5 * sigma * sigma * dt) / s;
    cdf(-d)
}

/// `min(1, pd + (1 − pd)·I/E)`.
#[inline]
pub fn linear_update(pd: f64, impact: f64, capital: f64) -> f64 {
    if impact >= capital {
        return 1.0;
    }
    (pd + (1.0 - pd) * impact / capital).min(1.0)
}
