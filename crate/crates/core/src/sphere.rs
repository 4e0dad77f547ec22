//! Points on S^d, geodesic distance, spherical coordinates, uniform sampling
//! and quadrature rules over the sphere.
//!
//! A point of S^d is stored through its embedding in R^{d+1}. Spherical
//! coordinates follow `x_0 = cos(theta)`,
//! `x_i = sin(theta) sin(phi_1)...sin(phi_{i-1}) cos(phi_i)` and
//! `x_d = sin(theta) sin(phi_1)...sin(phi_{d-1})`, with the last angle periodic.
//!
//! Every rule is a tensor rule in spherical coordinates about some centre.
//! [`product_quadrature`] is centred at the north pole; [`quadrature_about`]
//! allows an arbitrary centre and polar breakpoints (so that caps of a known
//! radius are integrated without discontinuities inside a panel); and
//! [`singular_quadrature_about`] additionally keeps the reduced weights in
//! which the Jacobian `sin^{d-1}(theta)` is cancelled.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::gauss::{gauss_gegenbauer, gauss_legendre, GaussRule};

const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    coords: Vec<f64>,
}

impl SpherePoint {
    /// Wraps unit-norm coordinates; the norm must be 1 within 1e-12.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_dim(coords.len().saturating_sub(1))?;
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Domain(format!("coordinates have norm {norm}, expected 1")));
        }
        Ok(Self { coords })
    }

    /// Normalizes a nonzero vector onto the sphere.
    pub fn normalize(mut coords: Vec<f64>) -> Result<Self> {
        check_dim(coords.len().saturating_sub(1))?;
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Domain("cannot normalize a zero vector".into()));
        }
        coords.iter_mut().for_each(|c| *c /= norm);
        Ok(Self { coords })
    }

    pub(crate) fn from_unit_unchecked(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    /// The point `(1, 0, ..., 0)`.
    pub fn north_pole(d: usize) -> Self {
        let mut coords = vec![0.0; d + 1];
        coords[0] = 1.0;
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dot(&self, other: &SpherePoint) -> f64 {
        dot(&self.coords, &other.coords)
    }

    pub fn antipode(&self) -> SpherePoint {
        Self { coords: self.coords.iter().map(|c| -c).collect() }
    }

    /// Geodesic distance, assuming matching dimensions.
    /// Geodesic distance, computed as `2 atan2(|x - y|, |x + y|)` so that
    /// nearby and nearly antipodal pairs keep full precision.
    pub fn distance(&self, other: &SpherePoint) -> f64 {
        let (mut diff, mut sum) = (0.0, 0.0);
        for (a, b) in self.coords.iter().zip(&other.coords) {
            diff += (a - b) * (a - b);
            sum += (a + b) * (a + b);
        }
        2.0 * diff.sqrt().atan2(sum.sqrt())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        Err(Error::UnsupportedDimension(d))
    } else {
        Ok(())
    }
}

pub fn geodesic_distance(x: &SpherePoint, y: &SpherePoint) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: y.dim() });
    }
    Ok(x.distance(y))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphericalCoord {
    pub theta: f64,
    pub phi: Vec<f64>,
}

pub fn to_spherical(x: &SpherePoint) -> SphericalCoord {
    let c = x.coords();
    let d = x.dim();
    let theta = c[0].clamp(-1.0, 1.0).acos();
    let mut phi = Vec::with_capacity(d - 1);
    for i in 1..d {
        let tail = c[i..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if i == d - 1 {
            let a = c[d].atan2(c[d - 1]);
            phi.push(if a < 0.0 { a + 2.0 * PI } else { a });
        } else {
            phi.push(if tail > 0.0 { (c[i] / tail).clamp(-1.0, 1.0).acos() } else { 0.0 });
        }
    }
    SphericalCoord { theta, phi }
}

pub fn from_spherical(s: &SphericalCoord) -> Result<SpherePoint> {
    let d = s.phi.len() + 1;
    check_dim(d)?;
    if !(0.0..=PI).contains(&s.theta) {
        return Err(Error::Domain(format!("theta = {} outside [0, pi]", s.theta)));
    }
    for (i, &p) in s.phi.iter().enumerate() {
        let hi = if i + 1 == s.phi.len() { 2.0 * PI } else { PI };
        if !(0.0..=hi).contains(&p) {
            return Err(Error::Domain(format!("phi_{} = {p} outside [0, {hi}]", i + 1)));
        }
    }
    let mut coords = vec![0.0; d + 1];
    coords[0] = s.theta.cos();
    let mut prod = s.theta.sin();
    for i in 1..d {
        coords[i] = prod * s.phi[i - 1].cos();
        prod *= s.phi[i - 1].sin();
    }
    coords[d] = prod;
    Ok(SpherePoint::from_unit_unchecked(coords))
}

pub fn uniform_sample<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Result<SpherePoint> {
    check_dim(d)?;
    loop {
        let v: Vec<f64> = (0..=d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-150 {
            return Ok(SpherePoint::from_unit_unchecked(v.into_iter().map(|c| c / norm).collect()));
        }
    }
}

/// Surface area of S^m in R^{m+1}; `s_0 = 2`.
pub fn surface_area(m: usize) -> f64 {
    let h = 0.5 * (m as f64 + 1.0);
    2.0 * (h * PI.ln() - ln_gamma(h)).exp()
}

/// `int_0^a sin^m(phi) dphi` for `a` in [0, pi].
pub fn sin_power_integral(m: usize, a: f64) -> f64 {
    match m {
        0 => a,
        1 => 1.0 - a.cos(),
        _ => {
            let mf = m as f64;
            -a.sin().powi(m as i32 - 1) * a.cos() / mf + (mf - 1.0) / mf * sin_power_integral(m - 2, a)
        }
    }
}

/// Area of a geodesic cap of radius `delta` on S^d.
pub fn cap_area(d: usize, delta: f64) -> f64 {
    surface_area(d - 1) * sin_power_integral(d - 1, delta.clamp(0.0, PI))
}

/// Measure of `{u in S^{m} : u_1 > c}` for the unit sphere S^m (m >= 1).
pub fn direction_cap_measure(m: usize, c: f64) -> f64 {
    if c >= 1.0 {
        return 0.0;
    }
    let a = c.max(-1.0).acos();
    surface_area(m - 1) * sin_power_integral(m - 1, a)
}

/// Fraction-free ring measure: for points `y`, `x` at distance `alpha`,
/// the (d-1)-measure of directions `u` at `y` such that the point at
/// distance `theta` from `y` in direction `u` lies within `delta` of `x`.
/// The ring itself has total direction measure `s_{d-1}`.
pub fn ring_directions_within(d: usize, alpha: f64, theta: f64, delta: f64) -> f64 {
    let (sa, ca) = alpha.sin_cos();
    let (st, ct) = theta.sin_cos();
    let denom = sa * st;
    let num = delta.cos() - ca * ct;
    if denom <= 1e-300 {
        return if ca * ct > delta.cos() { surface_area(d - 1) } else { 0.0 };
    }
    direction_cap_measure(d - 1, num / denom)
}

/// Orthonormal frame (as rows) whose first vector is `y`, from a Householder
/// reflection exchanging `e_0` and `y`.
pub fn frame_about(y: &SpherePoint) -> Vec<Vec<f64>> {
    let n = y.coords().len();
    let mut v: Vec<f64> = y.coords().iter().map(|c| -c).collect();
    v[0] += 1.0;
    let vv = dot(&v, &v);
    (0..n)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let id = if i == j { 1.0 } else { 0.0 };
                    if vv < 1e-30 {
                        id
                    } else {
                        id - 2.0 * v[i] * v[j] / vv
                    }
                })
                .collect()
        })
        .collect()
}

/// Tensor rule on the unit sphere S^{m} of directions (m >= 1), total weight
/// `s_m`, with `2 res` uniform nodes in the periodic angle.
#[derive(Debug, Clone)]
pub struct AngularRule {
    pub dirs: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

pub fn angular_rule(m: usize, res: usize) -> AngularRule {
    let nphi = 2 * res;
    let base: Vec<(Vec<f64>, f64)> = (0..nphi)
        .map(|j| {
            let p = 2.0 * PI * (j as f64 + 0.5) / nphi as f64;
            (vec![p.cos(), p.sin()], 2.0 * PI / nphi as f64)
        })
        .collect();
    let mut cur = base;
    // Build S^{m} from S^{m-1}: u = (cos a, sin a * v), weight sin^{m-1}(a).
    for level in 2..=m {
        let alpha = 0.5 * (level as f64 - 2.0);
        let rule = gauss_gegenbauer(res, alpha);
        let mut next = Vec::with_capacity(cur.len() * rule.len());
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            let s = (1.0 - t * t).sqrt();
            for (v, wv) in &cur {
                let mut u = Vec::with_capacity(level + 1);
                u.push(t);
                u.extend(v.iter().map(|c| s * c));
                next.push((u, w * wv));
            }
        }
        cur = next;
    }
    AngularRule {
        dirs: cur.iter().map(|p| p.0.clone()).collect(),
        weights: cur.iter().map(|p| p.1).collect(),
    }
}

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<SpherePoint>,
    pub weights: Vec<f64>,
    pub resolution: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.nodes[0].dim()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, mut f: impl FnMut(&SpherePoint) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, &w)| w * f(x)).sum()
    }
}

/// Polar nodes as `(theta, weight, reduced weight)` with
/// `weight = reduced * sin^{d-1}(theta)`. With `cos_variable` the panels are
/// Gauss rules in `cos(theta)` (exact for polynomials when d = 2), otherwise
/// Gauss–Legendre in `theta` itself.
fn polar_nodes(d: usize, res: usize, breaks: &[f64], cos_variable: bool) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    let mut pts: Vec<f64> = vec![0.0, PI];
    pts.extend(breaks.iter().copied().filter(|&b| b > 1e-12 && b < PI - 1e-12));
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if cos_variable && pts.len() == 2 {
        let rule: GaussRule = gauss_gegenbauer(res, 0.5 * (d as f64 - 2.0));
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            let theta = t.clamp(-1.0, 1.0).acos();
            let s = theta.sin().powi(d as i32 - 1);
            out.push((theta, w, if s > 0.0 { w / s } else { 0.0 }));
        }
        return out;
    }
    let gl = gauss_legendre(res);
    for win in pts.windows(2) {
        let (a, b) = (win[0], win[1]);
        if cos_variable && d == 2 {
            let (ta, tb) = (b.cos(), a.cos());
            let (h, c) = (0.5 * (tb - ta), 0.5 * (tb + ta));
            for (&u, &w) in gl.nodes.iter().zip(&gl.weights) {
                let t = c + h * u;
                let theta = t.clamp(-1.0, 1.0).acos();
                let s = theta.sin();
                out.push((theta, h * w, if s > 0.0 { h * w / s } else { 0.0 }));
            }
        } else {
            let (h, c) = (0.5 * (b - a), 0.5 * (b + a));
            for (&u, &w) in gl.nodes.iter().zip(&gl.weights) {
                let theta = c + h * u;
                let s = theta.sin().powi(d as i32 - 1);
                out.push((theta, h * w * s, h * w));
            }
        }
    }
    out
}

fn assemble(
    center: &SpherePoint,
    res: usize,
    polar: &[(f64, f64, f64)],
) -> (Vec<SpherePoint>, Vec<f64>, Vec<f64>) {
    let d = center.dim();
    let frame = frame_about(center);
    let ang = angular_rule(d - 1, res);
    let mut nodes = Vec::with_capacity(polar.len() * ang.dirs.len());
    let mut weights = Vec::with_capacity(nodes.capacity());
    let mut reduced = Vec::with_capacity(nodes.capacity());
    for &(theta, w, wr) in polar {
        let (st, ct) = theta.sin_cos();
        for (dir, &wa) in ang.dirs.iter().zip(&ang.weights) {
            let mut x = frame[0].iter().map(|c| ct * c).collect::<Vec<_>>();
            for (k, &u) in dir.iter().enumerate() {
                let row = &frame[k + 1];
                for (xi, ri) in x.iter_mut().zip(row) {
                    *xi += st * u * ri;
                }
            }
            let norm = dot(&x, &x).sqrt();
            x.iter_mut().for_each(|c| *c /= norm);
            nodes.push(SpherePoint::from_unit_unchecked(x));
            weights.push(w * wa);
            reduced.push(wr * wa);
        }
    }
    (nodes, weights, reduced)
}

/// Tensor rule about the north pole: Gauss–Gegenbauer in `cos(theta)` (plain
/// Gauss–Legendre when d = 2), Gauss–Gegenbauer in the cosine of each extra
/// polar angle and `2 resolution` uniform nodes in the periodic angle.
pub fn product_quadrature(d: usize, resolution: usize) -> Result<QuadratureRule> {
    check_dim(d)?;
    if resolution < 4 {
        return Err(Error::Domain(format!("resolution {resolution} below the minimum of 4")));
    }
    quadrature_about(&SpherePoint::north_pole(d), resolution, &[])
}

/// Tensor rule in spherical coordinates about `center`, with the polar
/// interval split at `theta_breaks`; each panel receives `resolution` nodes.
pub fn quadrature_about(center: &SpherePoint, resolution: usize, theta_breaks: &[f64]) -> Result<QuadratureRule> {
    check_dim(center.dim())?;
    let polar = polar_nodes(center.dim(), resolution, theta_breaks, true);
    let (nodes, weights, _) = assemble(center, resolution, &polar);
    Ok(QuadratureRule { nodes, weights, resolution })
}

/// A rule centred at a singular point `y`, carrying reduced weights in which
/// the Jacobian `sin^{d-1}(theta)` has been divided out.
#[derive(Debug, Clone)]
pub struct SingularRule {
    pub center: SpherePoint,
    pub rule: QuadratureRule,
    pub reduced_weights: Vec<f64>,
}

impl SingularRule {
    /// `int g(z) sin^{-(d-1)}(dist(z, center)) dz`.
    pub fn integrate_singular(&self, mut g: impl FnMut(&SpherePoint) -> f64) -> f64 {
        self.rule.nodes.iter().zip(&self.reduced_weights).map(|(z, &w)| w * g(z)).sum()
    }

    /// Ordinary surface integral with the same nodes.
    pub fn integrate(&self, g: impl FnMut(&SpherePoint) -> f64) -> f64 {
        self.rule.integrate(g)
    }
}

pub fn singular_quadrature_about(y: &SpherePoint, resolution: usize) -> Result<SingularRule> {
    singular_quadrature_with_breaks(y, resolution, &[])
}

/// Singular rule about `y` with polar breakpoints.
pub fn singular_quadrature_with_breaks(y: &SpherePoint, resolution: usize, theta_breaks: &[f64]) -> Result<SingularRule> {
    check_dim(y.dim())?;
    let polar = polar_nodes(y.dim(), resolution, theta_breaks, false);
    let (nodes, weights, reduced_weights) = assemble(y, resolution, &polar);
    Ok(SingularRule {
        center: y.clone(),
        rule: QuadratureRule { nodes, weights, resolution },
        reduced_weights,
    })
}
