use std::f64::consts::PI;

use gff4::liouville::{
    cm_tilt_check, convergence_diagnostic, liouville_grid, moment_check, second_moment_exact, LiouvilleParams,
    TestFunction, TiltOptions,
};
use gff4::{RngStream, SphereSpec64};

#[test]
fn moments_on_small_grid() {
    let params = LiouvilleParams::new(2.0, 1.0 / 8.0, 1).unwrap();
    let spec = liouville_grid(3, &params).unwrap();
    let r = moment_check(&spec, 0, &params, 4000, RngStream::new(21, 0)).unwrap();
    assert!(r.first_ok(3.0), "{r:?}");
    assert!(r.second_ok(3.0), "{r:?}");
}

#[test]
fn moments_depend_on_gamma_squared_only() {
    let plus = LiouvilleParams::new(2.5, 1.0 / 8.0, 1).unwrap();
    let minus = LiouvilleParams::new(-2.5, 1.0 / 8.0, 1).unwrap();
    let spec = liouville_grid(3, &plus).unwrap();
    assert_eq!(second_moment_exact(&spec, 0, &plus).unwrap(), second_moment_exact(&spec, 0, &minus).unwrap());
    let r = moment_check(&spec, 0, &minus, 4000, RngStream::new(22, 0)).unwrap();
    assert!(r.first_ok(3.0), "{r:?}");
}

#[test]
fn squared_differences_match_exact_identity() {
    let params = LiouvilleParams::new(2.0, 1.0 / 8.0, 3).unwrap();
    let spec = liouville_grid(3, &params).unwrap();
    let r = convergence_diagnostic(&spec, &params, TestFunction::Bump, 3000, RngStream::new(23, 0)).unwrap();
    assert!(!r.out_of_regime);
    assert!(r.matches_exact, "{:?}", r.differences);
}

#[test]
fn supercritical_gamma_is_flagged() {
    let params = LiouvilleParams::new(2.0 * PI, 1.0 / 8.0, 2).unwrap();
    assert!(!params.in_l2_regime());
    let spec = liouville_grid(2, &params).unwrap();
    let r = convergence_diagnostic(&spec, &params, TestFunction::Indicator, 10, RngStream::new(24, 0)).unwrap();
    assert!(r.out_of_regime);
}

#[test]
fn plain_monte_carlo_tilt_agrees() {
    let params = LiouvilleParams::new(PI, 1.0 / 16.0, 1).unwrap();
    let spec = SphereSpec64::new([0.0; 4], 1.0).unwrap();
    let opts = TiltOptions { lambda: 0.0, ..Default::default() };
    let r = cm_tilt_check(&spec, 1.0, &params, opts, 200_000, RngStream::new(25, 0)).unwrap();
    assert!(r.estimate.within(r.target, 3.0), "{r:?}");
}

#[test]
fn tilt_rejects_bad_lambda() {
    let params = LiouvilleParams::new(PI, 1.0 / 16.0, 1).unwrap();
    let spec = SphereSpec64::new([0.0; 4], 1.0).unwrap();
    let opts = TiltOptions { lambda: 1.0, ..Default::default() };
    assert!(cm_tilt_check(&spec, 1.0, &params, opts, 10, RngStream::new(0, 0)).is_err());
}
