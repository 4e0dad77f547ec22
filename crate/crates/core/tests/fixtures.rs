//! Values frozen from independent Python computations in polar coordinates
//! about the cap centre: a nested Gauss rule for the finite-n variance and an
//! mpmath ring reduction for the Gaussian-regime constant.

use std::f64::consts::PI;

use spheredpp::cumulants::{cumulant_via_graphs, variance_direct};
use spheredpp::kernel::KernelSpec;
use spheredpp::sphere::{product_quadrature, SpherePoint};
use spheredpp::stats::TestFunction;
use spheredpp::theory::predicted_variance_clt;

/// `Var L_n 1_C` for a cap of radius 1 on S^2 at `n = 6`.
const CAP_VARIANCE_N6: f64 = 2.131233890536903;
/// Gaussian-regime `Var / k_n` for a cap of radius pi/3 on S^2.
const CAP_CLT_CONSTANT: f64 = 0.17490477613752237;

fn cap(delta: f64) -> TestFunction {
    TestFunction::cap_indicator(SpherePoint::north_pole(2), delta).unwrap()
}

#[test]
fn finite_cap_variance() {
    let spec = KernelSpec::new(2, 6).unwrap();
    let quad = product_quadrature(2, 16).unwrap();
    let f = cap(1.0);
    let graphs = cumulant_via_graphs(&f, 2, &spec, &quad).unwrap();
    let direct = variance_direct(&f, &spec, &quad).unwrap();
    assert!((graphs / CAP_VARIANCE_N6 - 1.0).abs() < 1e-9);
    assert!((direct / CAP_VARIANCE_N6 - 1.0).abs() < 1e-9);
}

#[test]
fn clt_cap_constant() {
    let spec = KernelSpec::new(2, 16).unwrap();
    let quad = product_quadrature(2, 32).unwrap();
    let v = predicted_variance_clt(&cap(PI / 3.0), &spec, &quad).unwrap() / spec.k_n as f64;
    assert!((v / CAP_CLT_CONSTANT - 1.0).abs() < 1e-9);
}
