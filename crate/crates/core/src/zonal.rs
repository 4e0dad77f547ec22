//! Zonal functions on S^d x S^d and integrals of products of zonal edge
//! functions over the vertices of a small graph.
//!
//! A zonal function is either a finite Legendre series `sum_l c_l P_l(t)`
//! (kernels, constants and their products) or a numeric distance profile with
//! known breakpoints (indicators and their convolutions). Graph integrals are
//! reduced by merging parallel edges, integrating out leaves and convolving
//! through degree-2 vertices; whatever core remains is integrated by
//! quasi-Monte Carlo.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::gauss::{breakpoints, gauss_gegenbauer, integrate_pieces};
use crate::kernel::{dimension, KernelSpec};
use crate::special::{legendre_all, legendre_raw};
use crate::sphere::{surface_area, SpherePoint};
use crate::stats::ZonalProfile;

const NODES: usize = 32;
/// Points used for irreducible cores.
pub const QMC_POINTS: usize = 1 << 16;

#[derive(Clone, Debug)]
enum Repr {
    /// Coefficients of `P_0, P_1, ...`.
    Poly(Vec<f64>),
    Numeric(ZonalProfile),
}

#[derive(Clone, Debug)]
pub struct Zonal {
    d: usize,
    repr: Repr,
}

fn mult(d: usize, l: usize) -> f64 {
    dimension(d, l).map(|v| v as f64).unwrap_or(f64::INFINITY)
}

impl Zonal {
    pub fn poly(d: usize, coeffs: Vec<f64>) -> Self {
        Self { d, repr: Repr::Poly(coeffs) }
    }

    pub fn constant(d: usize, c: f64) -> Self {
        Self::poly(d, vec![c])
    }

    /// `K_n(x, y) = (k_n / s_d) P_n(x . y)`.
    pub fn kernel(spec: &KernelSpec) -> Self {
        let mut c = vec![0.0; spec.n + 1];
        c[spec.n] = spec.intensity();
        Self::poly(spec.d, c)
    }

    pub fn numeric(profile: ZonalProfile) -> Self {
        Self { d: profile.d, repr: Repr::Numeric(profile) }
    }

    pub fn is_poly(&self) -> bool {
        matches!(self.repr, Repr::Poly(_))
    }

    pub fn breaks(&self) -> &[f64] {
        match &self.repr {
            Repr::Poly(_) => &[],
            Repr::Numeric(p) => &p.breaks,
        }
    }

    /// Value at geodesic distance `theta`.
    pub fn eval(&self, theta: f64) -> f64 {
        match &self.repr {
            Repr::Poly(c) => {
                let t = theta.cos();
                let dm1 = self.d as f64 - 1.0;
                let (mut p0, mut p1) = (1.0, t);
                let mut s = c[0];
                for (k, &ck) in c.iter().enumerate().skip(1) {
                    if k > 1 {
                        let kf = (k - 1) as f64;
                        let p2 = ((2.0 * kf + dm1) * t * p1 - kf * p0) / (kf + dm1);
                        p0 = p1;
                        p1 = p2;
                    }
                    s += ck * p1;
                }
                s
            }
            Repr::Numeric(p) => p.eval(theta),
        }
    }


    /// `int_{S^d} g(x . y) dy`.
    pub fn integral(&self) -> f64 {
        match &self.repr {
            Repr::Poly(c) => c[0] * surface_area(self.d),
            Repr::Numeric(p) => p.integral(),
        }
    }

    /// Funk–Hecke multiplier on degree-`l` harmonics:
    /// `s_{d-1} int_0^pi g(theta) P_l(cos theta) sin^{d-1}(theta) dtheta`.
    pub fn eigenvalue(&self, l: usize) -> f64 {
        let d = self.d;
        match &self.repr {
            Repr::Poly(c) => c.get(l).copied().unwrap_or(0.0) * surface_area(d) / mult(d, l),
            Repr::Numeric(p) => {
                let br = breakpoints(0.0, PI, p.breaks.iter().copied());
                let nodes = NODES.max(l + 16);
                surface_area(d - 1)
                    * integrate_pieces(&br, nodes, |t| {
                        p.eval(t) * legendre_raw(d, l, t.cos()) * t.sin().powi(d as i32 - 1)
                    })
            }
        }
    }

    fn degree(&self) -> Option<usize> {
        match &self.repr {
            Repr::Poly(c) => Some(c.len() - 1),
            Repr::Numeric(_) => None,
        }
    }

    fn scale(&self, s: f64) -> Self {
        match &self.repr {
            Repr::Poly(c) => Self::poly(self.d, c.iter().map(|v| v * s).collect()),
            Repr::Numeric(p) => {
                let f = p.profile.clone();
                Self::numeric(ZonalProfile::new(self.d, Arc::new(move |t| s * f(t)), p.breaks.clone()))
            }
        }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Zonal) -> Zonal {
        let d = self.d;
        if let (Some(0), Repr::Poly(c)) = (self.degree(), &self.repr) {
            return other.scale(c[0]);
        }
        if let (Some(0), Repr::Poly(c)) = (other.degree(), &other.repr) {
            return self.scale(c[0]);
        }
        match (&self.repr, &other.repr) {
            (Repr::Poly(_), Repr::Poly(_)) => {
                let deg = self.degree().unwrap() + other.degree().unwrap();
                let rule = gauss_gegenbauer(deg + 1, 0.5 * (d as f64 - 2.0));
                let vals: Vec<f64> = rule.nodes.iter().map(|&t| {
                    let th = t.clamp(-1.0, 1.0).acos();
                    self.eval(th) * other.eval(th)
                }).collect();
                let sd1 = surface_area(d - 1);
                let sd = surface_area(d);
                let mut p = vec![0.0; deg + 1];
                let mut coeffs = vec![0.0; deg + 1];
                for ((&t, &w), &v) in rule.nodes.iter().zip(&rule.weights).zip(&vals) {
                    legendre_all(d, t, &mut p);
                    for (c, &pl) in coeffs.iter_mut().zip(&p) {
                        *c += w * v * pl;
                    }
                }
                for (l, c) in coeffs.iter_mut().enumerate() {
                    *c *= sd1 * mult(d, l) / sd;
                }
                Zonal::poly(d, coeffs)
            }
            _ => {
                let (a, b) = (self.clone(), other.clone());
                let mut br = self.breaks().to_vec();
                br.extend_from_slice(other.breaks());
                Zonal::numeric(ZonalProfile::new(d, Arc::new(move |t| a.eval(t) * b.eval(t)), br))
            }
        }
    }

    /// `(g * h)(x . y) = int g(x . z) h(z . y) dz`.
    pub fn conv(&self, other: &Zonal) -> Zonal {
        let d = self.d;
        match (&self.repr, &other.repr) {
            (Repr::Poly(c), _) => {
                Zonal::poly(d, c.iter().enumerate().map(|(l, &v)| if v == 0.0 { 0.0 } else { v * other.eigenvalue(l) }).collect())
            }
            (_, Repr::Poly(c)) => {
                Zonal::poly(d, c.iter().enumerate().map(|(l, &v)| if v == 0.0 { 0.0 } else { v * self.eigenvalue(l) }).collect())
            }
            (Repr::Numeric(g), Repr::Numeric(h)) => {
                let (g, h) = (g.clone(), h.clone());
                let mut br = Vec::new();
                for &a in &g.breaks {
                    for &b in &h.breaks {
                        br.push(a + b);
                        br.push((a - b).abs());
                        br.push(2.0 * PI - a - b);
                    }
                }
                let br: Vec<f64> = br.into_iter().filter(|&x| x > 1e-12 && x < PI - 1e-12).collect();
                let table = Table::build(&breakpoints(0.0, PI, br.iter().copied()), TABLE_NODES, |alpha| numeric_conv(d, &g, &h, alpha));
                Zonal::numeric(ZonalProfile::new(d, Arc::new(move |alpha| table.eval(alpha)), br))
            }
        }
    }
}

/// Chebyshev nodes per piece of a tabulated convolution.
const TABLE_NODES: usize = 40;

/// Piecewise interpolant on `[0, pi]`. Each piece `[a, b]` is mapped from
/// `u` in `[-1, 1]` by `a + (b - a) sin^2(pi (u + 1) / 4)`, which flattens
/// algebraic endpoint singularities, and sampled at interior Chebyshev points
/// so jumps at the breaks are never sampled.
pub(crate) struct Table {
    breaks: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl Table {
    pub(crate) fn build(breaks: &[f64], count: usize, f: impl Fn(f64) -> f64 + Sync) -> Self {
        let angle = |j: usize| PI * (2 * j + 1) as f64 / (2 * count) as f64;
        let nodes: Vec<f64> = (0..count).map(|j| angle(j).cos()).collect();
        let weights: Vec<f64> =
            (0..count).map(|j| if j % 2 == 0 { angle(j).sin() } else { -angle(j).sin() }).collect();
        let values = breaks
            .windows(2)
            .map(|p| {
                let (a, b) = (p[0], p[1]);
                nodes.par_iter().map(|&u| f(a + (b - a) * (0.25 * PI * (u + 1.0)).sin().powi(2))).collect()
            })
            .collect();
        Self { breaks: breaks.to_vec(), nodes, weights, values }
    }

    pub(crate) fn eval(&self, theta: f64) -> f64 {
        let i = match self.breaks.iter().position(|&b| b > theta) {
            Some(0) => 0,
            Some(i) => i - 1,
            None => self.values.len() - 1,
        };
        let (a, b) = (self.breaks[i], self.breaks[i + 1]);
        let s = ((theta - a) / (b - a)).clamp(0.0, 1.0);
        let u = 4.0 / PI * s.sqrt().asin() - 1.0;
        let (mut num, mut den) = (0.0, 0.0);
        for ((&x, &w), &v) in self.nodes.iter().zip(&self.weights).zip(&self.values[i]) {
            let diff = u - x;
            if diff == 0.0 {
                return v;
            }
            let w = w / diff;
            num += w * v;
            den += w;
        }
        num / den
    }
}

/// Distance from `x` (at distance `alpha` from the pole) to the point at
/// polar angle `theta` and relative azimuth `psi`.
#[inline]
fn dist_at(alpha: f64, theta: f64, psi: f64) -> f64 {
    let c = alpha.cos() * theta.cos() + alpha.sin() * theta.sin() * psi.cos();
    c.clamp(-1.0, 1.0).acos()
}

/// `int g(dist(x, z)) h(dist(z, y)) dz` with `y` at the pole and
/// `dist(x, y) = alpha`.
fn numeric_conv(d: usize, g: &ZonalProfile, h: &ZonalProfile, alpha: f64) -> f64 {
    let mut tb: Vec<f64> = h.breaks.clone();
    for &b in &g.breaks {
        tb.extend([(alpha - b).abs(), alpha + b, 2.0 * PI - alpha - b]);
    }
    let tbr = breakpoints(0.0, PI, tb);
    let sd2 = surface_area(d - 2);
    let (sa, ca) = alpha.sin_cos();
    integrate_pieces(&tbr, NODES, |theta| {
        let hv = h.eval(theta);
        if hv == 0.0 {
            return 0.0;
        }
        let (st, ct) = theta.sin_cos();
        let denom = sa * st;
        let inner = if denom < 1e-14 {
            g.eval(dist_at(alpha, theta, 0.0)) * crate::sphere::sin_power_integral(d - 2, PI)
        } else {
            let pb = g.breaks.iter().filter_map(|&b| {
                let c = (b.cos() - ca * ct) / denom;
                (c > -1.0 && c < 1.0).then(|| c.acos())
            });
            let pbr = breakpoints(0.0, PI, pb);
            integrate_pieces(&pbr, NODES, |psi| g.eval(dist_at(alpha, theta, psi)) * psi.sin().powi(d as i32 - 2))
        };
        hv * sd2 * inner * st.powi(d as i32 - 1)
    })
}

/// An edge of a zonal graph.
#[derive(Clone, Debug)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub f: Zonal,
}

/// Result of a graph integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphIntegral {
    pub value: f64,
    /// Whether a quasi-Monte Carlo core was needed.
    pub approximate: bool,
}

/// `int_{(S^d)^V} prod_e f_e(x_u . x_v) dx` for a graph on `vertices`
/// labelled `0..vertices`.
pub fn integrate_graph(d: usize, vertices: usize, edges: Vec<Edge>) -> GraphIntegral {
    let mut alive = vec![true; vertices];
    let mut edges = edges;
    let mut factor = 1.0;
    let sd = surface_area(d);
    loop {
        merge_parallel(&mut edges);
        if edges.iter().any(|e| e.u == e.v) {
            // Self-loops carry a constant value at distance 0.
            let (loops, rest): (Vec<Edge>, Vec<Edge>) = edges.into_iter().partition(|e| e.u == e.v);
            factor *= loops.iter().map(|e| e.f.eval(0.0)).product::<f64>();
            edges = rest;
            continue;
        }
        let degree = |v: usize, edges: &[Edge]| edges.iter().filter(|e| e.u == v || e.v == v).count();
        let live: Vec<usize> = (0..vertices).filter(|&v| alive[v]).collect();
        if live.is_empty() {
            return GraphIntegral { value: factor, approximate: false };
        }
        if factor == 0.0 {
            return GraphIntegral { value: 0.0, approximate: false };
        }
        if let Some(&v) = live.iter().find(|&&v| degree(v, &edges) == 0) {
            factor *= sd;
            alive[v] = false;
            continue;
        }
        if let Some(&v) = live.iter().find(|&&v| degree(v, &edges) == 1) {
            let idx = edges.iter().position(|e| e.u == v || e.v == v).unwrap();
            let e = edges.swap_remove(idx);
            factor *= e.f.integral();
            alive[v] = false;
            continue;
        }
        // Degree-2 vertex: prefer one with a polynomial edge.
        let deg2: Vec<usize> = live.iter().copied().filter(|&v| degree(v, &edges) == 2).collect();
        let pick = deg2
            .iter()
            .copied()
            .find(|&v| edges.iter().any(|e| (e.u == v || e.v == v) && e.f.is_poly()))
            .or_else(|| deg2.first().copied());
        if let Some(v) = pick {
            let mut incident: Vec<Edge> = Vec::with_capacity(2);
            edges.retain(|e| {
                if e.u == v || e.v == v {
                    incident.push(e.clone());
                    false
                } else {
                    true
                }
            });
            let other = |e: &Edge| if e.u == v { e.v } else { e.u };
            let (a, b) = (other(&incident[0]), other(&incident[1]));
            edges.push(Edge { u: a, v: b, f: incident[0].f.conv(&incident[1].f) });
            alive[v] = false;
            continue;
        }
        let value = qmc_core(d, &live, &edges);
        return GraphIntegral { value: factor * value, approximate: true };
    }
}

fn merge_parallel(edges: &mut Vec<Edge>) {
    let mut out: Vec<Edge> = Vec::with_capacity(edges.len());
    for e in edges.drain(..) {
        let (u, v) = (e.u.min(e.v), e.u.max(e.v));
        if let Some(x) = out.iter_mut().find(|x| x.u == u && x.v == v) {
            x.f = x.f.mul(&e.f);
        } else {
            out.push(Edge { u, v, f: e.f });
        }
    }
    *edges = out;
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while i > 0 {
        f /= b;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

fn primes(count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut c = 2u64;
    while out.len() < count {
        if out.iter().all(|&p| c % p != 0) {
            out.push(c);
        }
        c += 1;
    }
    out
}

/// Quasi-Monte Carlo estimate of `int_{(S^d)^vertices} f`, using Halton
/// points mapped to spheres through normalized Gaussian vectors. With
/// `pin_first` the first point sits at the north pole, which is exact for
/// rotation-invariant integrands.
pub fn qmc_integrate(d: usize, vertices: usize, pin_first: bool, mut f: impl FnMut(&[SpherePoint]) -> f64) -> f64 {
    let pinned = usize::from(pin_first && vertices > 0);
    let free = vertices - pinned;
    let bases = primes(free * (d + 1));
    let normal = Normal::standard();
    let mut pts: Vec<SpherePoint> = vec![SpherePoint::north_pole(d); vertices];
    let mut total = 0.0;
    for i in 1..=QMC_POINTS as u64 {
        for s in 0..free {
            let mut g: Vec<f64> = (0..=d)
                .map(|c| normal.inverse_cdf(radical_inverse(i, bases[s * (d + 1) + c]).clamp(1e-12, 1.0 - 1e-12)))
                .collect();
            let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            g.iter_mut().for_each(|x| *x /= norm);
            pts[s + pinned] = SpherePoint::from_unit_unchecked(g);
        }
        total += f(&pts);
    }
    surface_area(d).powi(vertices as i32) * total / QMC_POINTS as f64
}

fn qmc_core(d: usize, live: &[usize], edges: &[Edge]) -> f64 {
    let pos: Vec<(usize, usize, &Zonal)> = edges
        .iter()
        .map(|e| {
            let at = |v: usize| live.iter().position(|&x| x == v).unwrap();
            (at(e.u), at(e.v), &e.f)
        })
        .collect();
    qmc_integrate(d, live.len(), true, |pts| pos.iter().map(|(a, b, f)| f.eval(pts[*a].distance(&pts[*b]))).product())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::cap_area;

    fn ind(d: usize, delta: f64) -> Zonal {
        Zonal::numeric(ZonalProfile::indicator(d, delta))
    }

    #[test]
    fn kernel_algebra_reproduces() {
        let spec = KernelSpec::new(2, 5).unwrap();
        let k = Zonal::kernel(&spec);
        let kk = k.conv(&k);
        for th in [0.0, 0.4, 2.0] {
            assert!((kk.eval(th) - k.eval(th)).abs() < 1e-12);
        }
        let sq = k.mul(&k);
        assert!((sq.integral() - spec.intensity()).abs() < 1e-12);
    }

    #[test]
    fn indicator_convolution_is_lens_area() {
        let (d, delta) = (2, 0.8);
        let c = ind(d, delta).conv(&ind(d, delta));
        for a in [0.1, 0.5, 1.2] {
            let want = crate::stats::lens_area(d, a, delta);
            assert!((c.eval(a) - want).abs() < 1e-9, "{a}: {} vs {want}", c.eval(a));
        }
        assert!(c.eval(1.7).abs() < 1e-12);
    }

    #[test]
    fn graph_reductions() {
        let spec = KernelSpec::new(2, 4).unwrap();
        let k = Zonal::kernel(&spec);
        // Triangle of kernels: int K K K = k_n.
        let edges = vec![
            Edge { u: 0, v: 1, f: k.clone() },
            Edge { u: 1, v: 2, f: k.clone() },
            Edge { u: 2, v: 0, f: k.clone() },
        ];
        let r = integrate_graph(2, 3, edges);
        assert!(!r.approximate);
        assert!((r.value / spec.k_n as f64 - 1.0).abs() < 1e-12);
        // Pair indicator with a leaf: s_d * cap.
        let r = integrate_graph(2, 2, vec![Edge { u: 0, v: 1, f: ind(2, 0.6) }]);
        assert!((r.value - surface_area(2) * cap_area(2, 0.6)).abs() < 1e-10);
    }

    #[test]
    fn qmc_core_handles_k4() {
        let c = Zonal::constant(2, 0.5);
        let mut edges = Vec::new();
        for a in 0..4 {
            for b in a + 1..4 {
                edges.push(Edge { u: a, v: b, f: c.clone() });
            }
        }
        let r = integrate_graph(2, 4, edges);
        let want = 0.5f64.powi(6) * surface_area(2).powi(4);
        assert!((r.value - want).abs() < 1e-9 * want);
        // A non-trivial K4 of indicators: the QMC answer is flagged.
        let mut edges = Vec::new();
        for a in 0..4 {
            for b in a + 1..4 {
                edges.push(Edge { u: a, v: b, f: ind(2, 1.4) });
            }
        }
        assert!(integrate_graph(2, 4, edges).approximate);
    }
}
