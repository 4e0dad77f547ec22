//! The symmetric kernel `h_hat` built from a zonal pair margin, its
//! finite-`n` precursor `h_n`, its spectrum, and the chi-square mixture law
//! `sum_j z_j (chi_j - 1) / 2`.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gauss::{breakpoints, clustered_rule, compensated_sum, gauss_legendre, integrate_pieces};
use crate::kernel::{dimension, KernelSpec};
use crate::sampler::replicate_stream;
use crate::special::{legendre_all, legendre_raw};
use crate::sphere::{ring_directions_within, surface_area, uniform_sample, SingularRule, SpherePoint};
use crate::stats::{PairFn, ZonalProfile};
use crate::zonal::Table;

const NODES: usize = 48;

/// `int_{S^{d-1}} g(dist(x, z(theta, u))) du` where `z(theta, u)` is the
/// point at distance `theta` from the pole in direction `u`, and `x` lies
/// at distance `alpha` from the pole.
pub fn ring_integral(g: &ZonalProfile, alpha: f64, theta: f64) -> f64 {
    let d = g.d;
    if let Some(s) = g.step() {
        return s.outside * surface_area(d - 1)
            + (s.inside - s.outside) * ring_directions_within(d, alpha, theta, s.radius);
    }
    let (sa, ca) = alpha.sin_cos();
    let (st, ct) = theta.sin_cos();
    let denom = sa * st;
    let at = |psi: f64| (ca * ct + denom * psi.cos()).clamp(-1.0, 1.0).acos();
    if denom < 1e-14 {
        return surface_area(d - 1) * g.eval(at(0.0));
    }
    let pb = g.breaks.iter().filter_map(|&b| {
        let c = (b.cos() - ca * ct) / denom;
        (c > -1.0 && c < 1.0).then(|| c.acos())
    });
    let br = breakpoints(0.0, PI, pb);
    surface_area(d - 2) * integrate_pieces(&br, NODES, |psi| g.eval(at(psi)) * psi.sin().powi(d as i32 - 2))
}

fn theta_breaks(g: &ZonalProfile, alpha: f64) -> Vec<f64> {
    let mut br = Vec::new();
    for &b in &g.breaks {
        br.extend([(alpha - b).abs(), alpha + b, 2.0 * PI - alpha - b]);
    }
    breakpoints(0.0, PI, br)
}

/// Distances at which `h_hat` jumps or has singular derivatives.
pub fn h_hat_breaks(g: &ZonalProfile) -> Vec<f64> {
    let mut br: Vec<f64> = g.breaks.iter().flat_map(|&b| [b, PI - b]).collect();
    br.retain(|&b| b > 1e-12 && b < PI - 1e-12);
    br.sort_by(f64::total_cmp);
    br.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    br
}

/// `h_hat` as a function of `alpha = dist(x, y)`:
/// `pi s_{d-1} g(alpha) - int_0^pi ring_integral(g, alpha, theta) dtheta`.
pub fn h_hat_profile(g: &ZonalProfile, alpha: f64) -> f64 {
    let br = theta_breaks(g, alpha);
    PI * surface_area(g.d - 1) * g.eval(alpha) - integrate_pieces(&br, NODES, |t| ring_integral(g, alpha, t))
}

pub fn h_hat(g: &ZonalProfile, x: &SpherePoint, y: &SpherePoint) -> f64 {
    h_hat_profile(g, x.distance(y))
}

/// `h_hat(x, y)` for a bivariate function given pointwise, by singular
/// quadrature about `y`.
pub fn h_hat_quadrature(f12: &PairFn, x: &SpherePoint, y: &SpherePoint, rule: &SingularRule) -> Result<f64> {
    if rule.center.distance(y) > 1e-12 {
        return Err(Error::Domain("singular rule must be centred at y".into()));
    }
    let fxy = f12(x, y);
    Ok(rule.integrate_singular(|z| fxy - f12(x, z)))
}

fn random_rotation(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q;
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Checks that `f12(Rx, Ry) = f12(x, y)` for random rotations `R`.
pub fn probe_zonal(f12: &PairFn, d: usize, probes: usize, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..probes {
        let x = uniform_sample(&mut rng, d)?;
        let y = uniform_sample(&mut rng, d)?;
        let r = random_rotation(&mut rng, d + 1);
        let rot = |p: &SpherePoint| -> Result<SpherePoint> {
            SpherePoint::normalize((&r * nalgebra::DVector::from_column_slice(p.coords())).iter().copied().collect())
        };
        let (a, b) = (f12(&x, &y), f12(&rot(&x)?, &rot(&y)?));
        if (a - b).abs() > 1e-6 {
            return Err(Error::Structure(format!(
                "function is not zonal: values {a} and {b} at pairs with equal distance"
            )));
        }
    }
    Ok(())
}

/// `h_n` as a function of `alpha`:
/// `(s_d / k_n) g(alpha) - int g(dist(x, z)) P_n(z . y)^2 dz`.
pub fn h_n_profile(g: &ZonalProfile, spec: &KernelSpec, alpha: f64) -> f64 {
    let d = g.d;
    let br = theta_breaks(g, alpha);
    let nodes = NODES.max(spec.n + 32);
    let integral = integrate_pieces(&br, nodes, |t| {
        let p = legendre_raw(d, spec.n, t.cos());
        p * p * t.sin().powi(d as i32 - 1) * ring_integral(g, alpha, t)
    });
    g.eval(alpha) / spec.intensity() - integral
}

pub fn compute_h_n(g: &ZonalProfile, spec: &KernelSpec, x: &SpherePoint, y: &SpherePoint) -> Result<f64> {
    if g.d != spec.d || x.dim() != spec.d || y.dim() != spec.d {
        return Err(Error::DimensionMismatch { expected: spec.d, got: x.dim() });
    }
    Ok(h_n_profile(g, spec, x.distance(y)))
}

/// `int int h_hat(x, y)^2 dx dy` from the profile.
pub fn hs_reference(g: &ZonalProfile) -> f64 {
    let d = g.d;
    let br = breakpoints(0.0, PI, h_hat_breaks(g));
    let inner = integrate_pieces(&br, 64, |a| {
        let h = h_hat_profile(g, a);
        h * h * a.sin().powi(d as i32 - 1)
    });
    surface_area(d) * surface_area(d - 1) * inner
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectralMethod {
    FunkHecke,
    Nystrom,
}

impl fmt::Display for SpectralMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FunkHecke => "funk-hecke",
            Self::Nystrom => "nystrom",
        })
    }
}

/// One distinct eigenvalue with its multiplicity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Level {
    pub degree: usize,
    pub value: f64,
    pub multiplicity: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Truncation {
    /// Eigenvalue copies sampled explicitly.
    pub copies: usize,
    /// Levels sampled explicitly (the first entries of `levels`).
    pub levels: usize,
    /// `sum z^2` carried by everything beyond the explicit copies.
    pub tail_sq: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChaosSpectrum {
    pub d: usize,
    /// Explicit copies, sorted by decreasing `|z|`.
    pub eigenvalues: Vec<f64>,
    /// Every computed level, sorted by decreasing `|z|`.
    pub levels: Vec<Level>,
    /// `sum z^2` including the tail.
    pub hs_norm_sq: f64,
    pub method: SpectralMethod,
    pub truncation: Truncation,
}

#[derive(Clone, Copy, Debug)]
pub struct SpectrumOptions {
    /// Relative tolerance on the tail estimate of `sum z^2`.
    pub epsilon: f64,
    pub max_copies: usize,
    pub max_degree: usize,
    pub nystrom_nodes: usize,
    pub nystrom_modes: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { epsilon: 1e-6, max_copies: 2000, max_degree: 4096, nystrom_nodes: 64, nystrom_modes: 16 }
    }
}

/// `s_{d-1} int_0^pi w(theta) P_l(cos theta) dtheta` for `l = 0..=max_l`.
fn legendre_moments(d: usize, max_l: usize, breaks: &[f64], w: impl Fn(f64) -> f64 + Sync) -> Vec<f64> {
    let br = breakpoints(0.0, PI, breaks.iter().copied());
    let nodes: Vec<(f64, f64)> = br
        .windows(2)
        .flat_map(|p| {
            let n = (1.5 * max_l as f64 * (p[1] - p[0]) / PI).ceil() as usize + 64;
            let r = clustered_rule(p[0], p[1], n);
            r.nodes.into_iter().zip(r.weights).collect::<Vec<_>>()
        })
        .collect();
    let sums = nodes
        .par_chunks(64)
        .map(|chunk| {
            let mut acc = vec![0.0; max_l + 1];
            let mut p = vec![0.0; max_l + 1];
            for &(t, wt) in chunk {
                let v = wt * w(t);
                if v == 0.0 {
                    continue;
                }
                legendre_all(d, t.cos(), &mut p);
                for (a, &pl) in acc.iter_mut().zip(&p) {
                    *a += v * pl;
                }
            }
            acc
        })
        .reduce(|| vec![0.0; max_l + 1], |mut a, b| {
            a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            a
        });
    let s = surface_area(d - 1);
    sums.into_iter().map(|v| s * v).collect()
}

/// Funk–Hecke eigenvalues `z_l` of `h_hat` on degree-`l` harmonics:
/// `z_l = lambda_l(g) (pi s_{d-1} - lambda_l(sin^{-(d-1)}))`.
pub fn funk_hecke_values(g: &ZonalProfile, max_degree: usize) -> Vec<f64> {
    let d = g.d;
    let lg = legendre_moments(d, max_degree, &g.breaks, |t| g.eval(t) * t.sin().powi(d as i32 - 1));
    let lw = legendre_moments(d, max_degree, &[], |_| 1.0);
    let full = PI * surface_area(d - 1);
    lg.iter().zip(&lw).map(|(a, b)| a * (full - b)).collect()
}

fn sort_levels(levels: &mut [Level]) {
    levels.sort_by(|a, b| b.value.abs().total_cmp(&a.value.abs()).then(a.degree.cmp(&b.degree)));
}

fn assemble(d: usize, mut levels: Vec<Level>, hs_norm_sq: f64, method: SpectralMethod, max_copies: usize) -> ChaosSpectrum {
    sort_levels(&mut levels);
    let mut eigenvalues = Vec::new();
    let mut used = 0;
    let mut explicit_sq = 0.0;
    for l in &levels {
        if eigenvalues.len() + l.multiplicity as usize > max_copies {
            break;
        }
        eigenvalues.extend(std::iter::repeat_n(l.value, l.multiplicity as usize));
        explicit_sq += l.multiplicity as f64 * l.value * l.value;
        used += 1;
    }
    let truncation = Truncation { copies: eigenvalues.len(), levels: used, tail_sq: (hs_norm_sq - explicit_sq).max(0.0) };
    ChaosSpectrum { d, eigenvalues, levels, hs_norm_sq, method, truncation }
}

/// Tail of `sum_l a_l` beyond `L` from partial sums at `L`, `L/2`, `L/4`,
/// assuming algebraic decay.
fn tail_estimate(partial: &[f64], top: usize) -> Option<f64> {
    let (s1, s2, s4) = (partial[top], partial[top / 2], partial[top / 4]);
    let (d1, d2) = (s1 - s2, s2 - s4);
    if d1 == 0.0 {
        return Some(0.0);
    }
    let r = d2 / d1;
    if !(r > 1.0) {
        return None;
    }
    Some(d1 / (r - 1.0))
}

fn funk_hecke_spectrum(g: &ZonalProfile, opts: &SpectrumOptions) -> Result<ChaosSpectrum> {
    let d = g.d;
    let top = opts.max_degree.max(64);
    let z = funk_hecke_values(g, top);
    let mut partial = Vec::with_capacity(z.len());
    let mut acc = 0.0;
    let mut levels = Vec::with_capacity(z.len());
    for (l, &v) in z.iter().enumerate() {
        let k = dimension(d, l)?;
        acc += k as f64 * v * v;
        partial.push(acc);
        levels.push(Level { degree: l, value: v, multiplicity: k });
    }
    let head = partial[top];
    let scale = head.abs().max(f64::MIN_POSITIVE);
    let size = PI * surface_area(d - 1) * surface_area(d) * (0..=256).map(|j| g.eval(PI * j as f64 / 256.0).abs()).fold(0.0, f64::max);
    let (t1, t2) = (tail_estimate(&partial, top), tail_estimate(&partial, 3 * top / 4));
    let tail = match (t1, t2) {
        _ if head <= (1e-12 * size).powi(2) => 0.0,
        (Some(a), Some(b)) if (a - b).abs() <= opts.epsilon.max(1e-12) * scale * 1e3 => a,
        (a, b) => {
            return Err(Error::Truncation {
                tail: a.or(b).unwrap_or(f64::NAN) / scale,
                tolerance: opts.epsilon,
                levels: top,
                copies: opts.max_copies,
            })
        }
    };
    Ok(assemble(d, levels, head + tail, SpectralMethod::FunkHecke, opts.max_copies))
}

/// Azimuthal Nyström on S^2: for each Fourier mode `m` of the relative
/// azimuth, a symmetric Gauss–Legendre discretization in `cos(theta)` of
/// `H_m(theta, theta') = int_0^{2 pi} h_hat(alpha) cos(m phi) dphi`.
/// Azimuthal modes `2 int_0^pi h(alpha(phi)) cos(m phi) dphi` between colatitudes `t1`, `t2`.
fn azimuthal_modes(h: &Table, hb: &[f64], t1: f64, t2: f64, modes: usize) -> Vec<f64> {
    let (a, b) = (t1.cos() * t2.cos(), t1.sin() * t2.sin());
    let mut out = vec![0.0; modes + 1];
    if b <= 0.0 {
        out[0] = 2.0 * PI * h.eval((t1 - t2).abs().min(t1 + t2));
        return out;
    }
    let pb = hb.iter().filter_map(|&x| {
        let c = (x.cos() - a) / b;
        (c > -1.0 && c < 1.0).then(|| c.acos())
    });
    for p in breakpoints(0.0, PI, pb).windows(2) {
        let r = clustered_rule(p[0], p[1], 24);
        for (&phi, &w) in r.nodes.iter().zip(&r.weights) {
            let v = 2.0 * w * h.eval((a + b * phi.cos()).clamp(-1.0, 1.0).acos());
            for (m, o) in out.iter_mut().enumerate() {
                *o += v * (m as f64 * phi).cos();
            }
        }
    }
    out
}

/// Colatitudes where the azimuthal modes of row `t` lose smoothness.
fn singular_columns(hb: &[f64], t: f64) -> impl Iterator<Item = f64> + '_ {
    hb.iter().flat_map(move |&x| [t - x, t + x, x - t, 2.0 * PI - x - t])
}

const PANEL_NODES: usize = 16;

/// Product-integration Nystrom: the unknown is interpolated by Lagrange
/// polynomials on Gauss panels in colatitude, and the weights are integrated
/// against the kernel with its singular columns as breakpoints.
fn nystrom_spectrum(g: &ZonalProfile, opts: &SpectrumOptions) -> Result<ChaosSpectrum> {
    if g.d != 2 {
        return Err(Error::UnsupportedDimension(g.d));
    }
    let modes = opts.nystrom_modes;
    let panels = opts.nystrom_nodes.div_ceil(PANEL_NODES).max(1);
    let n = panels * PANEL_NODES;
    let hb = h_hat_breaks(g);
    let table = Table::build(&breakpoints(0.0, PI, hb.iter().copied()), 128, |alpha| h_hat_profile(g, alpha));
    let width = PI / panels as f64;
    let base = gauss_legendre(PANEL_NODES);
    let local: Vec<f64> = base.nodes.clone();
    let nodes: Vec<f64> =
        (0..n).map(|i| width * ((i / PANEL_NODES) as f64 + 0.5 * (local[i % PANEL_NODES] + 1.0))).collect();
    let lagrange = |u: f64| -> Vec<f64> {
        (0..PANEL_NODES)
            .map(|j| {
                (0..PANEL_NODES).filter(|&k| k != j).map(|k| (u - local[k]) / (local[j] - local[k])).product()
            })
            .collect()
    };
    let rows: Vec<Vec<Vec<f64>>> = nodes
        .par_iter()
        .map(|&ti| {
            let mut row = vec![vec![0.0; n]; modes + 1];
            let cuts: Vec<f64> = singular_columns(&hb, ti).collect();
            for p in 0..panels {
                let (lo, hi) = (p as f64 * width, (p + 1) as f64 * width);
                for q in breakpoints(lo, hi, cuts.iter().copied()).windows(2) {
                    let r = clustered_rule(q[0], q[1], 24);
                    for (&t, &w) in r.nodes.iter().zip(&r.weights) {
                        let hm = azimuthal_modes(&table, &hb, ti, t, modes);
                        let basis = lagrange(2.0 * (t - lo) / width - 1.0);
                        let ws = w * t.sin();
                        for (m, h) in hm.iter().enumerate() {
                            let out = &mut row[m][p * PANEL_NODES..(p + 1) * PANEL_NODES];
                            for (o, l) in out.iter_mut().zip(&basis) {
                                *o += ws * h * l;
                            }
                        }
                    }
                }
            }
            row
        })
        .collect();
    let mut levels = Vec::new();
    let mut hs = 0.0;
    for m in 0..=modes {
        let a = DMatrix::from_fn(n, n, |i, j| rows[i][m][j]);
        let mult = if m == 0 { 1 } else { 2 };
        let mut vals: Vec<f64> = a.complex_eigenvalues().iter().map(|z| z.re).collect();
        vals.sort_by(|x, y| y.abs().total_cmp(&x.abs()));
        for (r, &v) in vals.iter().enumerate() {
            hs += mult as f64 * v * v;
            levels.push(Level { degree: m + r, value: v, multiplicity: mult });
        }
    }
    // Degrees are nominal: mode m holds the levels l >= m.
    Ok(assemble(2, levels, hs, SpectralMethod::Nystrom, opts.max_copies))
}

/// Spectrum of `h_hat` for the zonal pair margin `g`.
pub fn spectrum(g: &ZonalProfile, method: SpectralMethod, opts: &SpectrumOptions) -> Result<ChaosSpectrum> {
    match method {
        SpectralMethod::FunkHecke => funk_hecke_spectrum(g, opts),
        SpectralMethod::Nystrom => nystrom_spectrum(g, opts),
    }
}

impl ChaosSpectrum {
    /// A spectrum given by explicit eigenvalue copies.
    pub fn from_eigenvalues(d: usize, values: &[f64]) -> Self {
        let levels: Vec<Level> =
            values.iter().enumerate().map(|(i, &v)| Level { degree: i, value: v, multiplicity: 1 }).collect();
        let hs = values.iter().map(|v| v * v).sum();
        assemble(d, levels, hs, SpectralMethod::FunkHecke, usize::MAX)
    }

    /// The `count` largest eigenvalues in absolute value, with multiplicity.
    pub fn top(&self, count: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(count);
        for l in &self.levels {
            for _ in 0..l.multiplicity {
                if out.len() == count {
                    return out;
                }
                out.push(l.value);
            }
        }
        out
    }

    /// Tab-separated `(j, z_j, multiplicity)` per level.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "j\tz_j\tmultiplicity")?;
        for l in &self.levels {
            writeln!(out, "{}\t{:.15e}\t{}", l.degree, l.value, l.multiplicity)?;
        }
        Ok(())
    }
}

/// `(m - 1)! / 2 * sum_j z_j^m`; for `m = 2` the tail is included.
pub fn limit_cumulants(spec: &ChaosSpectrum, m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::Domain(format!("limit cumulants start at m = 2, got {m}")));
    }
    let fact: f64 = (1..m).map(|i| i as f64).product();
    let power = if m == 2 {
        spec.hs_norm_sq
    } else {
        compensated_sum(spec.levels.iter().map(|l| l.multiplicity as f64 * l.value.powi(m as i32)))
    };
    Ok(0.5 * fact * power)
}

fn draw_one<R: Rng + ?Sized>(spec: &ChaosSpectrum, chis: &[ChiSquared<f64>], tail_sd: f64, rng: &mut R) -> f64 {
    let mut s = 0.0;
    for (l, chi) in spec.levels[..spec.truncation.levels].iter().zip(chis) {
        let k = l.multiplicity as f64;
        s += 0.5 * l.value * (chi.sample(rng) - k);
    }
    if tail_sd > 0.0 {
        s += tail_sd * rng.sample::<f64, _>(StandardNormal);
    }
    s
}

fn chi_table(spec: &ChaosSpectrum) -> Vec<ChiSquared<f64>> {
    spec.levels[..spec.truncation.levels]
        .iter()
        .map(|l| ChiSquared::new(l.multiplicity as f64).expect("positive degrees of freedom"))
        .collect()
}

/// Draws of `sum_j z_j (chi_j - 1) / 2`. Each explicit level of
/// multiplicity `k` contributes `z (chi^2_k - k) / 2`; the remaining tail is
/// added as a centred Gaussian with variance `tail_sq / 2`.
pub fn sample_limit_law<R: Rng + ?Sized>(spec: &ChaosSpectrum, rng: &mut R, count: usize) -> Vec<f64> {
    let chis = chi_table(spec);
    let tail_sd = (0.5 * spec.truncation.tail_sq).sqrt();
    (0..count).map(|_| draw_one(spec, &chis, tail_sd, rng)).collect()
}

/// Parallel draws in blocks of 4096, block `b` using stream `b` of `seed`.
pub fn sample_limit_law_par(spec: &ChaosSpectrum, seed: u64, count: usize) -> Vec<f64> {
    const BLOCK: usize = 4096;
    let chis = chi_table(spec);
    let tail_sd = (0.5 * spec.truncation.tail_sq).sqrt();
    (0..count.div_ceil(BLOCK))
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = replicate_stream(seed, b as u64);
            let len = BLOCK.min(count - b * BLOCK);
            (0..len).map(|_| draw_one(spec, &chis, tail_sd, &mut rng)).collect::<Vec<_>>()
        })
        .collect()
}
