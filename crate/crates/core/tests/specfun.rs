use gff4::specfun::{bessel_i, bessel_i_scaled, bessel_k, bessel_k_scaled, f_coeffs, turan, BesselOrder};
use gff4::verify::oracle;
use proptest::prelude::*;

const ORDERS: [BesselOrder; 3] = [BesselOrder::Zero, BesselOrder::One, BesselOrder::Two];

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn bessel_i_matches_double_double_series() {
    for x in oracle::log_grid(1e-4, 30.0, 1000) {
        for order in ORDERS {
            let e = rel(bessel_i(order, x).unwrap(), oracle::bessel_i(order.as_u32(), x));
            assert!(e < 1e-13, "I{} at {x}: {e:e}", order.as_u32());
        }
    }
}

#[test]
fn bessel_k_matches_quadrature() {
    for x in oracle::log_grid(1e-4, 30.0, 1000) {
        for order in [BesselOrder::Zero, BesselOrder::One] {
            let e = rel(bessel_k(order, x).unwrap(), oracle::bessel_k(order.as_u32(), x));
            assert!(e < 1e-13, "K{} at {x}: {e:e}", order.as_u32());
        }
    }
}

#[test]
fn scaled_variants_agree_beyond_switchover() {
    for x in [20.0_f64, 25.0, 26.0, 40.0, 80.0] {
        let i = bessel_i_scaled(BesselOrder::One, x).unwrap() * x.exp();
        assert!(rel(i, oracle::bessel_i(1, x)) < 1e-13);
        let k = bessel_k_scaled(BesselOrder::Zero, x).unwrap() * (-x).exp();
        assert!(rel(k, oracle::bessel_k(0, x)) < 1e-13);
    }
}

#[test]
fn turan_matches_oracle() {
    for x in oracle::log_grid(1e-4, 30.0, 500) {
        let e = rel(turan(x).unwrap(), oracle::turan(x));
        assert!(e < 1e-12, "turan at {x}: {e:e}");
    }
}

#[test]
fn f_coeffs_match_oracle() {
    for eps in oracle::log_grid(1e-3, 20.0, 300) {
        let (f1, f2) = f_coeffs(eps).unwrap();
        let (o1, o2) = oracle::f_coeffs(eps);
        assert!(rel(f1, o1) < 1e-11, "f1 at {eps}");
        assert!(rel(f2, o2) < 1e-11, "f2 at {eps}");
    }
}

#[test]
fn order_conversion() {
    assert_eq!(BesselOrder::try_from(2).unwrap(), BesselOrder::Two);
    assert!(BesselOrder::try_from(3).is_err());
    assert!(bessel_k(BesselOrder::Two, 1.0).is_err());
    assert!(bessel_i(BesselOrder::Zero, -1.0).is_err());
}

proptest! {
    #[test]
    fn wronskian_holds(x in 1e-3f64..60.0) {
        let w = bessel_i_scaled(BesselOrder::Zero, x).unwrap() * bessel_k_scaled(BesselOrder::One, x).unwrap()
            + bessel_i_scaled(BesselOrder::One, x).unwrap() * bessel_k_scaled(BesselOrder::Zero, x).unwrap();
        prop_assert!((x * w - 1.0).abs() < 1e-13);
    }

    #[test]
    fn turan_positive_and_bounded_below(x in 1e-4f64..10.0) {
        let t = turan(x).unwrap();
        prop_assert!(t > 0.0);
        prop_assert!(t / (x * x) >= 0.12);
    }

    #[test]
    fn single_precision_tracks_double(x in 1e-2f32..20.0) {
        for order in ORDERS {
            let a = bessel_i(order, x).unwrap() as f64;
            let b = bessel_i(order, x as f64).unwrap();
            prop_assert!(rel(a, b) < 1e-5);
        }
    }
}
