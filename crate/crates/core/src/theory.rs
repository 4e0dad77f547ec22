//! Asymptotic predictions: the two-term mean, the variance constants of the
//! Gaussian and chaos regimes, and the singular double-integral functional
//! behind them.

use std::f64::consts::PI;

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::chaos::ChaosSpectrum;
use crate::error::{Error, Result};
use crate::gauss::{breakpoints, compensated_sum, integrate_pieces};
use crate::kernel::KernelSpec;
use crate::sphere::{
    cap_area, ring_directions_within, singular_quadrature_about, surface_area, QuadratureRule, SpherePoint,
};
use crate::stats::{f_of, margin_ij, Kind, PairMargin, TestFunction, ZonalProfile};

const NODES: usize = 48;

/// Range below which `F` counts as constant.
pub const DEGENERACY_TOLERANCE: f64 = 1e-6;

/// `2^{d-1} Gamma(d/2)^2 / (Gamma(d) pi)`.
fn mean_constant(d: usize) -> f64 {
    let df = d as f64;
    ((df - 1.0) * 2f64.ln() + 2.0 * ln_gamma(0.5 * df) - ln_gamma(df) - PI.ln()).exp()
}

/// `int int f(x, y) sin^{-(d-1)}(dist(x, y)) dx dy` with the outer variable on
/// `quad` and a singular rule about each outer node.
fn singular_double_integral(f: &(dyn Fn(&SpherePoint, &SpherePoint) -> f64 + Sync), quad: &QuadratureRule) -> Result<f64> {
    let res = quad.resolution;
    let parts: Vec<f64> = quad
        .nodes
        .par_iter()
        .zip(&quad.weights)
        .map(|(x, &w)| Ok(w * singular_quadrature_about(x, res)?.integrate_singular(|y| f(x, y))))
        .collect::<Result<_>>()?;
    Ok(compensated_sum(parts))
}

/// `(2^{d-1} / (Gamma(d) pi)) (Gamma(d/2) / s_d)^2 int int f(x, y) sin^{-(d-1)}(dist(x, y)) dx dy`,
/// the limit of `(1/k_n) int int f K_n^2`.
pub fn lemma_sc_functional(
    d: usize,
    f: &(dyn Fn(&SpherePoint, &SpherePoint) -> f64 + Sync),
    quad: &QuadratureRule,
) -> Result<f64> {
    if quad.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: quad.dim() });
    }
    let sd = surface_area(d);
    Ok(mean_constant(d) / (sd * sd) * singular_double_integral(f, quad)?)
}

/// The same functional for `f(x, y) = g(dist(x, y))`, as the 1-D integral
/// `s_d s_{d-1} int_0^pi g(theta) dtheta`.
pub fn lemma_sc_zonal(g: &ZonalProfile) -> f64 {
    let d = g.d;
    let sd = surface_area(d);
    let br = breakpoints(0.0, PI, g.breaks.iter().copied());
    let line = integrate_pieces(&br, NODES, |t| g.eval(t));
    mean_constant(d) / (sd * sd) * sd * surface_area(d - 1) * line
}

fn pair_functional(m: &PairMargin, d: usize, quad: &QuadratureRule) -> Result<f64> {
    match m {
        PairMargin::Zonal(g) => Ok(lemma_sc_zonal(g)),
        PairMargin::General(h) => lemma_sc_functional(d, &|x: &SpherePoint, y: &SpherePoint| h(x, y), quad),
    }
}

/// Two-term expansion of `E L_n f`:
/// `(k_n/s_d)^k int f - (k_n^{k-1}/s_d^{k-2}) sum_{i<j} lemma_sc(f_{i,j})`.
pub fn predicted_mean(f: &TestFunction, spec: &KernelSpec, quad: &QuadratureRule) -> Result<f64> {
    check_spec(f, spec)?;
    let k = f.k as i32;
    let kn = spec.k_n as f64;
    let first = spec.intensity().powi(k) * f.total_integral(quad)?;
    if f.k == 1 {
        return Ok(first);
    }
    let correction = if f.symmetric {
        let pairs = (f.k * (f.k - 1) / 2) as f64;
        pairs * pair_functional(&margin_ij(f, 1, 2, quad)?, f.d, quad)?
    } else {
        let mut s = 0.0;
        for i in 1..f.k {
            for j in i + 1..=f.k {
                s += pair_functional(&margin_ij(f, i, j, quad)?, f.d, quad)?;
            }
        }
        s
    };
    Ok(first - kn.powi(k - 1) / spec.s_d.powi(k - 2) * correction)
}

fn check_spec(f: &TestFunction, spec: &KernelSpec) -> Result<()> {
    if f.d != spec.d {
        return Err(Error::DimensionMismatch { expected: spec.d, got: f.d });
    }
    Ok(())
}

/// Whether `F = f_1 + ... + f_k` is constant on the nodes of `quad`.
pub fn is_degenerate(f: &TestFunction, quad: &QuadratureRule) -> Result<bool> {
    let big_f = f_of(f, quad)?;
    let (lo, hi) = quad
        .nodes
        .par_iter()
        .map(|x| big_f(x))
        .fold(|| (f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
        .reduce(|| (f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1)));
    Ok(hi - lo <= DEGENERACY_TOLERANCE)
}

/// `int int (1_C(x) - 1_C(y))^2 sin^{-(d-1)}(dist(x, y))` for a cap `C` of
/// radius `delta`, reduced to polar angles about the cap centre.
fn cap_energy(d: usize, delta: f64) -> f64 {
    let s1 = surface_area(d - 1);
    let outside = |theta: f64| {
        let br = breakpoints(0.0, PI, [(theta - delta).abs(), theta + delta, 2.0 * PI - theta - delta]);
        integrate_pieces(&br, NODES, |a| s1 - ring_directions_within(d, theta, a, delta))
    };
    let br = breakpoints(0.0, delta, []);
    2.0 * s1 * integrate_pieces(&br, NODES, |t| t.sin().powi(d as i32 - 1) * outside(t))
}

/// `k_n^{2k-1} (2^{d-2} Gamma(d/2)^2 / (s_d^{2k} Gamma(d) pi)) int int (F(x) - F(y))^2 sin^{-(d-1)}(dist(x, y))`.
pub fn predicted_variance_clt(f: &TestFunction, spec: &KernelSpec, quad: &QuadratureRule) -> Result<f64> {
    check_spec(f, spec)?;
    if is_degenerate(f, quad)? {
        return Err(Error::Degenerate(
            "F = f_1 + ... + f_k is constant; use the chaos variance instead".into(),
        ));
    }
    let d = f.d;
    let energy = match &f.kind {
        Kind::CapIndicator { delta, .. } if f.k == 1 => cap_energy(d, *delta),
        _ => {
            let big_f = f_of(f, quad)?;
            singular_double_integral(&|x: &SpherePoint, y: &SpherePoint| (big_f(x) - big_f(y)).powi(2), quad)?
        }
    };
    let k = f.k as i32;
    let c = 0.5 * mean_constant(d) / spec.s_d.powi(2 * k);
    Ok((spec.k_n as f64).powi(2 * k - 1) * c * energy)
}

/// The pair margin `f_{1,2}` as a distance profile, as required by the chaos regime.
pub fn chaos_profile(f: &TestFunction, quad: &QuadratureRule) -> Result<ZonalProfile> {
    if f.k < 2 {
        return Err(Error::Domain("the chaos regime needs k >= 2".into()));
    }
    match margin_ij(f, 1, 2, quad)? {
        PairMargin::Zonal(g) => Ok(g),
        PairMargin::General(_) => Err(Error::Structure("f_{1,2} is not known to be zonal".into())),
    }
}

/// `k_n^{2k-2} (2 C_d^2 k^2 (k-1)^2 / (Gamma(d)^2 s_d^{2k})) sum_j z_j^2`.
pub fn predicted_variance_chaos(
    f: &TestFunction,
    spec: &KernelSpec,
    spectrum: &ChaosSpectrum,
    quad: &QuadratureRule,
) -> Result<f64> {
    check_spec(f, spec)?;
    if f.k < 2 {
        return Err(Error::Domain("the chaos regime needs k >= 2".into()));
    }
    if !is_degenerate(f, quad)? {
        return Err(Error::NonDegenerate("F is not constant; use the Gaussian variance instead".into()));
    }
    let (k, d) = (f.k as f64, spec.d);
    let lg = ln_gamma(d as f64);
    let c = 2.0 * spec.c_d.powi(2) * (k * (k - 1.0)).powi(2) * (-2.0 * lg).exp() / spec.s_d.powi(2 * f.k as i32);
    Ok((spec.k_n as f64).powi(2 * f.k as i32 - 2) * c * spectrum.hs_norm_sq)
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Standardization {
    pub center: f64,
    pub scale: f64,
}

impl Standardization {
    pub fn apply(&self, value: f64) -> f64 {
        (value - self.center) / self.scale
    }
}

/// `(k_n/s_d)^k C_d k (k-1) / n^{d-1}`.
pub fn chaos_scale(spec: &KernelSpec, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::Domain(format!("chaos standardization needs k >= 2, got {k}")));
    }
    if spec.n == 0 {
        return Err(Error::Domain("chaos standardization needs n >= 1".into()));
    }
    let kf = k as f64;
    Ok(spec.intensity().powi(k as i32) * spec.c_d * kf * (kf - 1.0) / (spec.n as f64).powi(spec.d as i32 - 1))
}

/// Centre and scale of the chaos-regime limit, with the caller's choice of centre.
pub fn standardization_constants(spec: &KernelSpec, k: usize, center: f64) -> Result<Standardization> {
    Ok(Standardization { center, scale: chaos_scale(spec, k)? })
}

/// Area-weighted cap fraction `|C| / s_d`, handy for sanity checks.
pub fn cap_fraction(d: usize, delta: f64) -> f64 {
    cap_area(d, delta) / surface_area(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::{spectrum, SpectralMethod, SpectrumOptions};
    use crate::cumulants::variance_direct;
    use crate::sphere::product_quadrature;
    use crate::stats::TestFunction;

    #[test]
    fn functional_of_one_is_one() {
        for d in [2, 3] {
            let g = ZonalProfile::constant(d, 1.0);
            assert!((lemma_sc_zonal(&g) - 1.0).abs() < 1e-12);
        }
        let quad = product_quadrature(2, 24).unwrap();
        let v = lemma_sc_functional(2, &|_: &SpherePoint, _: &SpherePoint| 1.0, &quad).unwrap();
        assert!((v - 1.0).abs() < 1e-10, "{v}");
        let w = lemma_sc_functional(2, &|_: &SpherePoint, _: &SpherePoint| 2.0, &quad).unwrap();
        assert_eq!(w, 2.0 * v);
    }

    #[test]
    fn constant_mean_counts_ordered_pairs() {
        let quad = product_quadrature(2, 8).unwrap();
        for n in [1, 5, 11] {
            let spec = KernelSpec::new(2, n).unwrap();
            let f = TestFunction::constant(2, 2, 1.0).unwrap();
            let kn = spec.k_n as f64;
            let m = predicted_mean(&f, &spec, &quad).unwrap();
            assert!((m - kn * (kn - 1.0)).abs() < 1e-9 * kn * kn, "{m}");
        }
    }

    #[test]
    fn pair_indicator_mean_below_first_term() {
        let quad = product_quadrature(2, 8).unwrap();
        let spec = KernelSpec::new(2, 6).unwrap();
        let f = TestFunction::pair_indicator(2, 0.8).unwrap();
        let m = predicted_mean(&f, &spec, &quad).unwrap();
        let first = spec.intensity().powi(2) * f.total_integral(&quad).unwrap();
        assert!(m < first);
    }

    #[test]
    fn cap_energy_routes_agree() {
        let (d, delta) = (2, PI / 3.0);
        let one_d = cap_energy(d, delta);
        let quad = product_quadrature(2, 40).unwrap();
        let c = SpherePoint::north_pole(2);
        let ind = |x: &SpherePoint| if x.dot(&c) > delta.cos() { 1.0f64 } else { 0.0 };
        let full = singular_double_integral(&|x: &SpherePoint, y: &SpherePoint| (ind(x) - ind(y)).powi(2), &quad).unwrap();
        assert!((one_d - full).abs() < 2e-2 * one_d, "{one_d} {full}");
    }

    #[test]
    fn clt_variance_tracks_direct_variance() {
        let quad = product_quadrature(2, 8).unwrap();
        let spec = KernelSpec::new(2, 32).unwrap();
        let f = TestFunction::cap_indicator(SpherePoint::north_pole(2), PI / 3.0).unwrap();
        let pred = predicted_variance_clt(&f, &spec, &quad).unwrap();
        let direct = variance_direct(&f, &spec, &quad).unwrap();
        assert!((pred - direct).abs() < 0.05 * direct, "{pred} {direct}");
        let c = SpherePoint::north_pole(2);
        let cap = move |x: &[&SpherePoint]| if x[0].dot(&c) > 0.5 { 1.0f64 } else { 0.0 };
        let single = TestFunction::generic(2, 1, std::sync::Arc::new(cap.clone()), 1.0, true).unwrap();
        let double = TestFunction::generic(2, 1, std::sync::Arc::new(move |x| 2.0 * cap(x)), 2.0, true).unwrap();
        let a = predicted_variance_clt(&single, &spec, &quad).unwrap();
        let b = predicted_variance_clt(&double, &spec, &quad).unwrap();
        assert_eq!(b, 4.0 * a);
        let constant = TestFunction::constant(2, 1, 3.0).unwrap();
        assert!(matches!(predicted_variance_clt(&constant, &spec, &quad), Err(Error::Degenerate(_))));
    }

    #[test]
    fn chaos_variance_matches_rescaled_limit() {
        let quad = product_quadrature(2, 8).unwrap();
        let f = TestFunction::pair_indicator(2, 0.8).unwrap();
        let g = chaos_profile(&f, &quad).unwrap();
        let s = spectrum(&g, SpectralMethod::FunkHecke, &SpectrumOptions { epsilon: 1.0, ..Default::default() }).unwrap();
        let spec = KernelSpec::new(2, 64).unwrap();
        let pred = predicted_variance_chaos(&f, &spec, &s, &quad).unwrap();
        let scale = chaos_scale(&spec, 2).unwrap();
        let ratio = pred / (0.5 * s.hs_norm_sq * scale * scale);
        assert!((ratio - 1.0).abs() < 0.04, "{ratio}");
        let cap = TestFunction::cap_indicator(SpherePoint::north_pole(2), 1.0).unwrap();
        assert!(predicted_variance_chaos(&cap, &spec, &s, &quad).is_err());
    }

    #[test]
    fn chaos_scale_arithmetic() {
        let spec = KernelSpec::new(2, 8).unwrap();
        let s = chaos_scale(&spec, 2).unwrap();
        let expect = 2.0 * 17.0f64.powi(2) / (16.0 * PI.powi(3) * 8.0);
        assert!((s - expect).abs() < 1e-12 * expect);
    }
}
