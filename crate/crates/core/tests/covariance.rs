use gff4::covariance::{
    assemble, classify, green_g, green_g_inv, kc_difference_bound, kernel, GeometryCase, KcSample, SphereSpec,
};
use gff4::{Error, FieldGridSpec64, SphereSpec64};
use proptest::prelude::*;

#[test]
fn inverse_refuses_unreachable_times() {
    assert!(matches!(green_g_inv(1e6_f64), Err(Error::Precision { .. })));
    assert!(matches!(green_g_inv(-1.0_f64), Err(Error::Domain { .. })));
}

#[test]
fn lattice_covariance_is_positive_definite() {
    let spec = FieldGridSpec64::lattice(3, vec![0.1]).unwrap();
    let specs: Vec<SphereSpec64> = spec.centers.iter().map(|&c| SphereSpec::new(c, 0.1).unwrap()).collect();
    let mut cov = assemble(&specs).unwrap();
    cov.factorize().unwrap();
    assert_eq!(cov.jitter_applied(), 0.0);
}

#[test]
fn overlapping_pair_is_rejected_with_indices() {
    let specs = [SphereSpec64::new([0.0; 4], 1.0).unwrap(), SphereSpec64::new([1.0, 0.0, 0.0, 0.0], 0.5).unwrap()];
    let err = assemble(&specs).unwrap_err();
    assert!(matches!(err, Error::Geometry { .. }));
    assert!(err.to_string().contains("(0, 1)") || err.to_string().contains("(1, 0)"));
}

#[test]
fn kc_bound_is_finite_over_all_cases() {
    let samples = vec![
        KcSample { x: [0.0; 4], y: [0.0; 4], eps1: 0.3, eps2: 0.1 },
        KcSample { x: [0.0; 4], y: [1.0, 0.0, 0.0, 0.0], eps1: 0.3, eps2: 0.2 },
        KcSample { x: [0.0; 4], y: [0.05, 0.0, 0.0, 0.0], eps1: 0.3, eps2: 0.1 },
        KcSample { x: [0.0; 4], y: [0.3, 0.0, 0.0, 0.0], eps1: 0.3, eps2: 0.2 },
    ];
    let report = kc_difference_bound(&samples).unwrap();
    assert!(report.all_finite());
    assert_eq!(report.skipped_unsupported, 1);
}

fn sphere() -> impl Strategy<Value = SphereSpec64> {
    (prop::array::uniform4(-2.0f64..2.0), 0.01f64..1.0).prop_map(|(c, r)| SphereSpec::new(c, r).unwrap())
}

proptest! {
    #[test]
    fn inverse_round_trip(t in 1e-3f64..30.0) {
        let r = green_g_inv(t).unwrap();
        let back = green_g(r).unwrap();
        prop_assert!((back - t).abs() <= 1e-12 * t.max(1.0));
    }

    #[test]
    fn kernel_symmetric_and_bounded(a in sphere(), b in sphere()) {
        if classify(&a, &b) != GeometryCase::Unsupported {
            let k = kernel(&a, &b).unwrap();
            prop_assert_eq!(k, kernel(&b, &a).unwrap());
            let bound = (green_g(a.radius).unwrap() * green_g(b.radius).unwrap()).sqrt();
            prop_assert!(k <= bound * (1.0 + 1e-12));
        } else {
            prop_assert!(kernel(&a, &b).is_err());
        }
    }

    #[test]
    fn g_decreasing(r in 1e-8f64..10.0, f in 1.001f64..2.0) {
        prop_assert!(green_g(r * f).unwrap() < green_g(r).unwrap());
    }
}
