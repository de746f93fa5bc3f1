use pdmodel::oracle::{classify, evolve, strong_contagion_scan, transition_matrix, Monotonicity, TwoNodeParams};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = TwoNodeParams> {
    (50.0f64..500.0, 0.005f64..0.3, 1e-4f64..0.2, 0.0f64..=1.0, 0.0f64..20.0, -0.95f64..0.99).prop_map(
        |(a, ratio, pd, lgd, a_hat, rho)| TwoNodeParams::new(a, ratio * a, pd, lgd, a_hat.min(0.9 * a), rho).unwrap(),
    )
}

proptest! {
    #[test]
    fn rows_are_probability_vectors(p in params()) {
        let t = transition_matrix(&p).unwrap();
        for row in t {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn both_defaulted_never_decreases(p in params()) {
        let path = evolve(&p, 12).unwrap();
        prop_assert!(path.windows(2).all(|w| w[1].both_defaulted() >= w[0].both_defaulted()));
        for s in &path {
            prop_assert!((s.pi.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn joint_default_grows_with_correlation(p in params(), r1 in -0.95f64..0.99, r2 in -0.95f64..0.99) {
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        prop_assert!(p.with_rho(hi).joint_pd() >= p.with_rho(lo).joint_pd());
    }

    #[test]
    fn contagion_pd_brackets(p in params()) {
        let c = p.contagion_pd();
        prop_assert!(c >= p.pd * (1.0 - 1e-12) && c <= 1.0);
    }
}

#[test]
fn zero_exposure_contagion_is_calibration() {
    let p = TwoNodeParams::new(200.0, 20.0, 0.003, 0.6, 0.0, 0.3).unwrap();
    assert_eq!(p.contagion_pd(), 0.003);
}

#[test]
fn single_period_scan_is_increasing_everywhere() {
    let base = TwoNodeParams::new(200.0, 1.0, 0.001, 0.6, 1.0, 0.0).unwrap();
    let caps = [0.25, 0.5, 1.0, 2.0, 8.0, 50.0];
    let rho: Vec<f64> = (0..20).map(|k| k as f64 / 20.0).collect();
    let scan = strong_contagion_scan(&base, &caps, &rho, 1).unwrap();
    assert!(scan.rows.iter().all(|r| r.class == Monotonicity::Increasing));
    assert!(scan.flips.is_empty());
}

#[test]
fn classification_edge_cases() {
    assert_eq!(classify(&[1.0, 1.0, 1.0]), Monotonicity::Flat);
    assert_eq!(classify(&[1.0, 2.0, 1.5]), Monotonicity::NonMonotone);
}
