//! Univariate standard normal distribution.
//!
//! The unchecked functions ([`cdf`], [`inv_cdf`]) are total over the extended
//! reals and are what the simulation hot path uses. [`norm_cdf`] and
//! [`norm_inv`] validate their argument and return a domain error instead.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF, `Φ(x) = erfc(-x/√2)/2`.
///
/// The complementary error function keeps full relative precision in the
/// lower tail, which matters for default thresholds around `Φ⁻¹(1e-6)`.
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

// Acklam's rational approximation, relative error below 1.15e-9 before the
// Newton step.
const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_690e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];
const P_LOW: f64 = 0.024_25;

fn tail_approx(q: f64) -> f64 {
    (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
        / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
}

fn rational_approx(p: f64) -> f64 {
    if p < P_LOW {
        tail_approx((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail_approx((-2.0 * (1.0 - p).ln()).sqrt())
    }
}

/// Inverse of [`cdf`]. Returns `-∞` at 0, `+∞` at 1 and NaN outside `[0, 1]`.
pub fn inv_cdf(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    // Work in the lower half so the residual Φ(x) - p is computed where Φ
    // carries relative precision.
    let (q, sign) = if p > 0.5 { (1.0 - p, -1.0) } else { (p, 1.0) };
    let mut x = rational_approx(q);
    let density = pdf(x);
    if density > 0.0 {
        x -= (cdf(x) - q) / density;
    }
    sign * x
}

/// Checked standard normal CDF.
pub fn norm_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("norm_cdf: argument {x} is not finite")));
    }
    Ok(cdf(x))
}

/// Checked inverse normal CDF for `p` strictly inside `(0, 1)`.
pub fn norm_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("norm_inv: probability {p} is not in (0, 1)")));
    }
    Ok(inv_cdf(p))
}

pub(crate) const TWO_PI: f64 = 2.0 * PI;

#[cfg(test)]
mod tests {
    use super::*;

    /// Maclaurin series of Φ, summed until terms vanish. Accurate to a few ulps
    /// for |x| ≤ 3 and independent of erfc.
    fn series_cdf(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        let x2 = x * x;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= -x2 / (2.0 * n);
            let contribution = term / (2.0 * n + 1.0);
            sum += contribution;
            if contribution.abs() < 1e-20 {
                break;
            }
        }
        0.5 + FRAC_1_SQRT_2PI * sum
    }

    #[test]
    fn cdf_matches_series_oracle() {
        let mut x = -3.0;
        while x <= 3.0 {
            assert!((cdf(x) - series_cdf(x)).abs() < 1e-13, "x = {x}");
            x += 0.0625;
        }
    }

    #[test]
    fn cdf_reference_points() {
        assert_eq!(norm_cdf(0.0).unwrap(), 0.5);
        assert!((norm_cdf(1.959_963_985).unwrap() - 0.975).abs() < 1e-9);
        assert!((series_cdf(1.959_963_985) - 0.975).abs() < 1e-9);
        for &x in &[0.3, 1.7, 4.2, 7.5] {
            assert!((cdf(x) + cdf(-x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn inverse_reference_points() {
        assert_eq!(norm_inv(0.5).unwrap(), 0.0);
        // Root of Φ(x) = 0.001 by bisection on the series oracle.
        let (mut lo, mut hi) = (-4.0_f64, -2.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if series_cdf(mid) < 0.001 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        assert!((root - (-3.090_232)).abs() < 1e-6);
        assert!((norm_inv(0.001).unwrap() - root).abs() < 1e-10);
        assert!((norm_inv(cdf(1.3)).unwrap() - 1.3).abs() < 1e-10);
    }

    // Above x ≈ 5.1 the double nearest to Φ(x) is within half an ulp of 1 and
    // no inverse can recover x to 1e-10; the lower tail has no such limit.
    #[test]
    fn inverse_round_trip_on_grid() {
        let mut x = -6.0;
        while x <= 5.0 {
            let back = inv_cdf(cdf(x));
            assert!((back - x).abs() < 1e-10, "x = {x}, back = {back}");
            x += 0.01;
        }
    }

    #[test]
    fn domain_errors() {
        assert!(norm_cdf(f64::NAN).is_err());
        assert!(norm_cdf(f64::INFINITY).is_err());
        assert!(norm_inv(0.0).is_err());
        assert!(norm_inv(1.0).is_err());
        assert!(norm_inv(-0.1).is_err());
        assert_eq!(inv_cdf(0.0), f64::NEG_INFINITY);
        assert_eq!(inv_cdf(1.0), f64::INFINITY);
        assert_eq!(cdf(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn inverse_is_strictly_increasing() {
        let mut prev = f64::NEG_INFINITY;
        for k in 1..10_000 {
            let x = inv_cdf(k as f64 / 10_000.0);
            assert!(x > prev);
            prev = x;
        }
    }
}
