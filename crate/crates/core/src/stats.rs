//! Test functions of `k` points, their margins, and the U-statistic
//! `L_n f = sum over ordered k-tuples of distinct points of f`.
//!
//! Indicator kinds compare inner products against `cos(delta)`, so
//! `dist < delta` is decided without an `acos`. A test function may carry a
//! constant shift (see [`TestFunction::centered`]); every evaluation and every
//! margin subtracts it.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gauss::{breakpoints, integrate_pieces};
use crate::sampler::Configuration;
use crate::sphere::{cap_area, ring_directions_within, surface_area, QuadratureRule, SpherePoint};

pub type PointFn = Arc<dyn Fn(&SpherePoint) -> f64 + Send + Sync>;
pub type PairFn = Arc<dyn Fn(&SpherePoint, &SpherePoint) -> f64 + Send + Sync>;
pub type TupleFn = Arc<dyn Fn(&[&SpherePoint]) -> f64 + Send + Sync>;
pub type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const PROFILE_NODES: usize = 48;

/// A function of the geodesic distance, with the distances at which it
/// jumps or kinks.
#[derive(Clone)]
pub struct ZonalProfile {
    pub d: usize,
    pub profile: ProfileFn,
    pub breaks: Vec<f64>,
    step: Option<Step>,
}

/// `inside` below `radius`, `outside` beyond it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub radius: f64,
    pub inside: f64,
    pub outside: f64,
}

impl fmt::Debug for ZonalProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ZonalProfile").field("d", &self.d).field("breaks", &self.breaks).finish()
    }
}

impl ZonalProfile {
    pub fn new(d: usize, profile: ProfileFn, breaks: Vec<f64>) -> Self {
        Self { d, profile, breaks, step: None }
    }

    pub fn indicator(d: usize, delta: f64) -> Self {
        let mut p = Self::new(d, Arc::new(move |t| if t < delta { 1.0 } else { 0.0 }), vec![delta]);
        p.step = Some(Step { radius: delta, inside: 1.0, outside: 0.0 });
        p
    }

    /// Present when the profile is a two-valued step.
    pub fn step(&self) -> Option<Step> {
        self.step
    }

    pub fn constant(d: usize, c: f64) -> Self {
        Self::new(d, Arc::new(move |_| c), vec![])
    }

    #[inline]
    pub fn eval(&self, theta: f64) -> f64 {
        (self.profile)(theta)
    }

    pub fn at(&self, x: &SpherePoint, y: &SpherePoint) -> f64 {
        self.eval(x.distance(y))
    }

    /// `int_{S^d} g(dist(x, y)) dy`, independent of `x`.
    pub fn integral(&self) -> f64 {
        let d = self.d;
        let br = breakpoints(0.0, PI, self.breaks.iter().copied());
        surface_area(d - 1) * integrate_pieces(&br, PROFILE_NODES, |t| self.eval(t) * t.sin().powi(d as i32 - 1))
    }

    /// The profile minus a constant.
    pub fn shifted(&self, c: f64) -> Self {
        if c == 0.0 {
            return self.clone();
        }
        let p = self.profile.clone();
        let mut out = Self::new(self.d, Arc::new(move |t| p(t) - c), self.breaks.clone());
        out.step = self.step.map(|s| Step { inside: s.inside - c, outside: s.outside - c, ..s });
        out
    }
}

#[derive(Clone)]
pub enum Kind {
    /// Arbitrary bounded function of `k` points (`k <= 3` for margins).
    Generic(TupleFn),
    Constant(f64),
    /// `1[dist(x, center) < delta]`, `k = 1`.
    CapIndicator { center: SpherePoint, delta: f64 },
    /// `1[dist(x1, x2) < delta]`, `k = 2`.
    PairIndicator { delta: f64 },
    /// All three pairwise distances below `delta`, `k = 3`.
    TriangleIndicator { delta: f64 },
    /// `g(dist(x1, x2))`, `k = 2`.
    PairwiseZonal(ZonalProfile),
}

impl fmt::Debug for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Generic(_) => write!(f, "Generic"),
            Kind::Constant(c) => write!(f, "Constant({c})"),
            Kind::CapIndicator { delta, .. } => write!(f, "CapIndicator(delta = {delta})"),
            Kind::PairIndicator { delta } => write!(f, "PairIndicator(delta = {delta})"),
            Kind::TriangleIndicator { delta } => write!(f, "TriangleIndicator(delta = {delta})"),
            Kind::PairwiseZonal(p) => write!(f, "PairwiseZonal({p:?})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TestFunction {
    pub d: usize,
    pub k: usize,
    pub kind: Kind,
    /// Sup-norm bound of the unshifted function.
    pub bound: f64,
    pub symmetric: bool,
    /// Constant subtracted from every value.
    pub shift: f64,
    /// Closed-form `f_1` of the unshifted triangle indicator.
    triangle_margin: Option<f64>,
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= PI) {
        return Err(Error::Domain(format!("radius delta = {delta} must lie in (0, pi]")));
    }
    Ok(())
}

fn check_d(d: usize) -> Result<()> {
    if d < 2 {
        Err(Error::UnsupportedDimension(d))
    } else {
        Ok(())
    }
}

/// Measure of `{z : dist(z, x) < delta, dist(z, y) < delta}` for
/// `dist(x, y) = alpha` on S^d.
pub fn lens_area(d: usize, alpha: f64, delta: f64) -> f64 {
    if alpha >= 2.0 * delta {
        return 0.0;
    }
    let br = breakpoints(0.0, delta, [(delta - alpha).abs()]);
    integrate_pieces(&br, PROFILE_NODES, |t| {
        t.sin().powi(d as i32 - 1) * ring_directions_within(d, alpha, t, delta)
    })
}

fn triangle_pair_mass(d: usize, delta: f64) -> f64 {
    surface_area(d - 1)
        * integrate_pieces(&[0.0, delta], 64, |a| a.sin().powi(d as i32 - 1) * lens_area(d, a, delta))
}

impl TestFunction {
    fn build(d: usize, k: usize, kind: Kind, bound: f64, symmetric: bool) -> Self {
        Self { d, k, kind, bound, symmetric, shift: 0.0, triangle_margin: None }
    }

    pub fn generic(d: usize, k: usize, f: TupleFn, bound: f64, symmetric: bool) -> Result<Self> {
        check_d(d)?;
        if k == 0 {
            return Err(Error::Domain("arity k must be at least 1".into()));
        }
        Ok(Self::build(d, k, Kind::Generic(f), bound, symmetric))
    }

    pub fn constant(d: usize, k: usize, c: f64) -> Result<Self> {
        check_d(d)?;
        if k == 0 {
            return Err(Error::Domain("arity k must be at least 1".into()));
        }
        Ok(Self::build(d, k, Kind::Constant(c), c.abs(), true))
    }

    pub fn cap_indicator(center: SpherePoint, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        let d = center.dim();
        Ok(Self::build(d, 1, Kind::CapIndicator { center, delta }, 1.0, true))
    }

    pub fn pair_indicator(d: usize, delta: f64) -> Result<Self> {
        check_d(d)?;
        check_delta(delta)?;
        Ok(Self::build(d, 2, Kind::PairIndicator { delta }, 1.0, true))
    }

    pub fn triangle_indicator(d: usize, delta: f64) -> Result<Self> {
        check_d(d)?;
        check_delta(delta)?;
        let mut f = Self::build(d, 3, Kind::TriangleIndicator { delta }, 1.0, true);
        f.triangle_margin = Some(triangle_pair_mass(d, delta));
        Ok(f)
    }

    pub fn pairwise_zonal(profile: ZonalProfile, bound: f64) -> Result<Self> {
        check_d(profile.d)?;
        Ok(Self::build(profile.d, 2, Kind::PairwiseZonal(profile), bound, true))
    }

    /// Copy with the shift replaced so the total integral over `(S^d)^k` is 0.
    pub fn centered(&self, quad: &QuadratureRule) -> Result<Self> {
        let mut raw = self.clone();
        raw.shift = 0.0;
        let total = raw.total_integral(quad)?;
        raw.shift = total / surface_area(self.d).powi(self.k as i32);
        Ok(raw)
    }

    pub fn is_centered(&self) -> bool {
        self.shift != 0.0
    }

    /// Value at a `k`-tuple of points.
    pub fn eval(&self, xs: &[&SpherePoint]) -> f64 {
        self.raw(xs) - self.shift
    }

    fn raw(&self, xs: &[&SpherePoint]) -> f64 {
        let ind = |b: bool| if b { 1.0 } else { 0.0 };
        match &self.kind {
            Kind::Generic(f) => f(xs),
            Kind::Constant(c) => *c,
            Kind::CapIndicator { center, delta } => ind(xs[0].dot(center) > delta.cos()),
            Kind::PairIndicator { delta } => ind(xs[0].dot(xs[1]) > delta.cos()),
            Kind::TriangleIndicator { delta } => {
                let c = delta.cos();
                ind(xs[0].dot(xs[1]) > c && xs[0].dot(xs[2]) > c && xs[1].dot(xs[2]) > c)
            }
            Kind::PairwiseZonal(p) => p.at(xs[0], xs[1]),
        }
    }

    /// `f` restricted to a univariate function; `k = 1` only.
    pub fn as_point_fn(&self) -> Result<PointFn> {
        if self.k != 1 {
            return Err(Error::Structure(format!("expected a univariate function, got k = {}", self.k)));
        }
        let f = self.clone();
        Ok(Arc::new(move |x| f.eval(&[x])))
    }

    /// `int_{(S^d)^k} f`.
    pub fn total_integral(&self, quad: &QuadratureRule) -> Result<f64> {
        let sd = surface_area(self.d);
        let shift_part = self.shift * sd.powi(self.k as i32);
        let raw = match &self.kind {
            Kind::Constant(c) => c * sd.powi(self.k as i32),
            Kind::CapIndicator { delta, .. } => cap_area(self.d, *delta),
            Kind::PairIndicator { delta } => sd * cap_area(self.d, *delta),
            Kind::TriangleIndicator { .. } => sd * self.triangle_margin.unwrap_or(0.0),
            Kind::PairwiseZonal(p) => sd * p.integral(),
            Kind::Generic(_) => {
                let m1 = self.margin_raw(0, quad)?;
                quad.integrate(|x| m1(x))
            }
        };
        Ok(raw - shift_part)
    }

    fn margin_raw(&self, i: usize, quad: &QuadratureRule) -> Result<PointFn> {
        let d = self.d;
        Ok(match &self.kind {
            Kind::Constant(c) => {
                let v = c * surface_area(d).powi(self.k as i32 - 1);
                Arc::new(move |_| v)
            }
            Kind::CapIndicator { .. } => {
                let f = self.clone();
                Arc::new(move |x| f.raw(&[x]))
            }
            Kind::PairIndicator { delta } => {
                let v = cap_area(d, *delta);
                Arc::new(move |_| v)
            }
            Kind::TriangleIndicator { .. } => {
                let v = self.triangle_margin.unwrap_or(0.0);
                Arc::new(move |_| v)
            }
            Kind::PairwiseZonal(p) => {
                let v = p.integral();
                Arc::new(move |_| v)
            }
            Kind::Generic(f) => {
                let f = f.clone();
                let q = quad.clone();
                match self.k {
                    1 => Arc::new(move |x| f(&[x])),
                    2 => Arc::new(move |x| {
                        q.integrate(|y| if i == 0 { f(&[x, y]) } else { f(&[y, x]) })
                    }),
                    3 => Arc::new(move |x| {
                        q.integrate(|y| {
                            q.integrate(|z| match i {
                                0 => f(&[x, y, z]),
                                1 => f(&[y, x, z]),
                                _ => f(&[y, z, x]),
                            })
                        })
                    }),
                    k => {
                        return Err(Error::SizeGuard(format!(
                            "margins of generic functions need k <= 3, got k = {k}"
                        )))
                    }
                }
            }
        })
    }
}

/// `f_i`, the integral of `f` over every variable except the `i`-th
/// (1-based). For indicator kinds the closed forms ignore `quad`.
pub fn margin_i(f: &TestFunction, i: usize, quad: &QuadratureRule) -> Result<PointFn> {
    if i == 0 || i > f.k {
        return Err(Error::Domain(format!("margin index {i} outside 1..={}", f.k)));
    }
    let raw = f.margin_raw(i - 1, quad)?;
    let s = f.shift * surface_area(f.d).powi(f.k as i32 - 1);
    if s == 0.0 {
        return Ok(raw);
    }
    Ok(Arc::new(move |x| raw(x) - s))
}

/// An `(i, j)`-margin, kept as a distance profile whenever that is known
/// structurally.
#[derive(Clone)]
pub enum PairMargin {
    Zonal(ZonalProfile),
    General(PairFn),
}

impl PairMargin {
    pub fn eval(&self, x: &SpherePoint, y: &SpherePoint) -> f64 {
        match self {
            PairMargin::Zonal(p) => p.at(x, y),
            PairMargin::General(f) => f(x, y),
        }
    }

    pub fn zonal(&self) -> Option<&ZonalProfile> {
        match self {
            PairMargin::Zonal(p) => Some(p),
            PairMargin::General(_) => None,
        }
    }
}

/// `f_{i,j}` (1-based, `i < j`).
pub fn margin_ij(f: &TestFunction, i: usize, j: usize, quad: &QuadratureRule) -> Result<PairMargin> {
    if f.k < 2 || i == 0 || i >= j || j > f.k {
        return Err(Error::Domain(format!("pair margin ({i}, {j}) invalid for k = {}", f.k)));
    }
    let d = f.d;
    let s = f.shift * surface_area(d).powi(f.k as i32 - 2);
    Ok(match &f.kind {
        Kind::Constant(c) => PairMargin::Zonal(ZonalProfile::constant(d, c * surface_area(d).powi(f.k as i32 - 2) - s)),
        Kind::PairIndicator { delta } => PairMargin::Zonal(ZonalProfile::indicator(d, *delta).shifted(s)),
        Kind::PairwiseZonal(p) => PairMargin::Zonal(p.shifted(s)),
        Kind::TriangleIndicator { delta } => {
            let delta = *delta;
            PairMargin::Zonal(ZonalProfile::new(
                d,
                Arc::new(move |t| if t < delta { lens_area(d, t, delta) - s } else { -s }),
                vec![delta],
            ))
        }
        Kind::CapIndicator { .. } => unreachable!("cap indicator has k = 1"),
        Kind::Generic(g) => {
            let g = g.clone();
            let q = quad.clone();
            match f.k {
                2 => PairMargin::General(Arc::new(move |x, y| g(&[x, y]) - s)),
                3 => {
                    let free = 6 - i - j;
                    PairMargin::General(Arc::new(move |x, y| {
                        q.integrate(|z| {
                            let mut slot: [&SpherePoint; 3] = [z, z, z];
                            slot[i - 1] = x;
                            slot[j - 1] = y;
                            slot[free - 1] = z;
                            g(&slot)
                        }) - s
                    }))
                }
                k => {
                    return Err(Error::SizeGuard(format!(
                        "margins of generic functions need k <= 3, got k = {k}"
                    )))
                }
            }
        }
    })
}

/// `F = f_1 + ... + f_k`.
pub fn f_of(f: &TestFunction, quad: &QuadratureRule) -> Result<PointFn> {
    if f.symmetric {
        let m = margin_i(f, 1, quad)?;
        let k = f.k as f64;
        return Ok(Arc::new(move |x| k * m(x)));
    }
    let margins: Vec<PointFn> = (1..=f.k).map(|i| margin_i(f, i, quad)).collect::<Result<_>>()?;
    Ok(Arc::new(move |x| margins.iter().map(|m| m(x)).sum()))
}

/// Falling factorial `n (n-1) ... (n-k+1)`.
fn ordered_tuples(n: usize, k: usize) -> f64 {
    (0..k).map(|i| n.saturating_sub(i) as f64).product()
}

/// `L_n f` on one configuration.
pub fn evaluate_l(points: &[SpherePoint], f: &TestFunction) -> f64 {
    let n = points.len();
    if n < f.k {
        return 0.0;
    }
    let shift = f.shift * ordered_tuples(n, f.k);
    let raw = match &f.kind {
        Kind::Constant(c) => c * ordered_tuples(n, f.k),
        Kind::CapIndicator { center, delta } => {
            let c = delta.cos();
            points.iter().filter(|p| p.dot(center) > c).count() as f64
        }
        Kind::PairIndicator { delta } => {
            let c = delta.cos();
            let mut count = 0usize;
            for a in 0..n {
                for b in a + 1..n {
                    if points[a].dot(&points[b]) > c {
                        count += 1;
                    }
                }
            }
            2.0 * count as f64
        }
        Kind::TriangleIndicator { delta } => {
            let c = delta.cos();
            let mut count = 0usize;
            for a in 0..n {
                for b in a + 1..n {
                    if points[a].dot(&points[b]) <= c {
                        continue;
                    }
                    for e in b + 1..n {
                        if points[a].dot(&points[e]) > c && points[b].dot(&points[e]) > c {
                            count += 1;
                        }
                    }
                }
            }
            6.0 * count as f64
        }
        Kind::PairwiseZonal(p) => {
            let mut sum = 0.0;
            for a in 0..n {
                for b in a + 1..n {
                    sum += p.at(&points[a], &points[b]);
                }
            }
            2.0 * sum
        }
        Kind::Generic(g) => {
            let mut sum = 0.0;
            let mut idx = vec![0usize; f.k];
            generic_sum(points, g, &mut idx, 0, &mut sum);
            sum
        }
    };
    raw - shift
}

fn generic_sum(points: &[SpherePoint], g: &TupleFn, idx: &mut Vec<usize>, depth: usize, sum: &mut f64) {
    if depth == idx.len() {
        let xs: Vec<&SpherePoint> = idx.iter().map(|&i| &points[i]).collect();
        *sum += g(&xs);
        return;
    }
    for i in 0..points.len() {
        if idx[..depth].contains(&i) {
            continue;
        }
        idx[depth] = i;
        generic_sum(points, g, idx, depth + 1, sum);
    }
}

/// [`evaluate_l`] on a sampled configuration.
pub fn evaluate_config(config: &Configuration, f: &TestFunction) -> Result<f64> {
    if config.spec.d != f.d {
        return Err(Error::DimensionMismatch { expected: f.d, got: config.spec.d });
    }
    Ok(evaluate_l(&config.points, f))
}
