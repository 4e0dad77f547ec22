//! Exact sampling of the projection DPP with kernel `K_n`.
//!
//! Points are drawn one at a time from the chain-rule conditionals
//! `[K(x,x) - v(x)^T G^{-1} v(x)] / (k_n - j)`, each by rejection against the
//! uniform law on S^d. The conditional never exceeds `K(x,x)/(k_n - j)`, so a
//! uniform proposal is accepted with probability
//! `[K(x,x) - v^T G^{-1} v] / K(x,x)`. The Gram matrix of the selected points
//! is kept as a Cholesky factor extended by one row per accepted point.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::sphere::{uniform_sample, SpherePoint};

/// Default cap on `k_n` for sampling.
pub const DEFAULT_MAX_POINTS: u64 = 64;
/// Default proposal budget per point.
pub const DEFAULT_MAX_TRIALS: u64 = 1_000_000;

/// Random stream for replicate `r` under `seed`.
pub fn replicate_stream(seed: u64, r: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r);
    rng
}

#[derive(Debug, Clone)]
pub struct SamplerState {
    spec: KernelSpec,
    selected: Vec<SpherePoint>,
    /// Row-major packed lower-triangular factor.
    factor: Vec<Vec<f64>>,
    jitter: f64,
    /// Proposals spent on each selected point.
    pub trials: Vec<u64>,
}

impl SamplerState {
    pub fn new(spec: KernelSpec) -> Self {
        Self {
            spec,
            selected: Vec::with_capacity(spec.k_n as usize),
            factor: Vec::with_capacity(spec.k_n as usize),
            jitter: 1e-12 * spec.intensity(),
            trials: Vec::new(),
        }
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn selected(&self) -> &[SpherePoint] {
        &self.selected
    }

    /// The lower-triangular factor `L` with `L L^T = G + jitter I`.
    pub fn gram_factor(&self) -> &[Vec<f64>] {
        &self.factor
    }

    /// Forward substitution `L w = v(x)`; returns `(K(x,x) - |w|^2, w)`.
    fn schur(&self, x: &SpherePoint) -> (f64, Vec<f64>) {
        let j = self.selected.len();
        let mut w = Vec::with_capacity(j);
        let mut norm = 0.0;
        for i in 0..j {
            let row = &self.factor[i];
            let mut s = self.spec.eval_t(x.dot(&self.selected[i]));
            for (l, wl) in row[..i].iter().zip(&w) {
                s -= l * wl;
            }
            let wi = s / row[i];
            norm += wi * wi;
            w.push(wi);
        }
        (self.spec.intensity() - norm, w)
    }

    fn clamp_schur(&self, value: f64) -> Result<f64> {
        if value < -1e-9 * self.spec.intensity() {
            return Err(Error::Degeneracy(format!(
                "negative conditional density numerator {value:.3e} with {} points selected",
                self.selected.len()
            )));
        }
        Ok(value.max(0.0))
    }

    /// Conditional density of the next point given the selected ones.
    pub fn conditional_density(&self, x: &SpherePoint) -> Result<f64> {
        let j = self.selected.len() as u64;
        if j >= self.spec.k_n {
            return Err(Error::Domain(format!("all {} points already selected", self.spec.k_n)));
        }
        if x.dim() != self.spec.d {
            return Err(Error::DimensionMismatch { expected: self.spec.d, got: x.dim() });
        }
        let (num, _) = self.schur(x);
        Ok(self.clamp_schur(num)? / (self.spec.k_n - j) as f64)
    }

    /// Appends `x` to the selection and extends the factor.
    pub fn push(&mut self, x: SpherePoint) -> Result<()> {
        let (num, mut w) = self.schur(&x);
        let diag = self.clamp_schur(num)? + self.jitter;
        if diag <= 0.0 {
            return Err(Error::Degeneracy("Gram factor lost positive definiteness".into()));
        }
        w.push(diag.sqrt());
        self.factor.push(w);
        self.selected.push(x);
        Ok(())
    }

    /// Draws the next point by rejection; returns the number of proposals.
    pub fn draw_next<R: Rng + ?Sized>(&mut self, rng: &mut R, max_trials: u64) -> Result<u64> {
        let k = self.spec.intensity();
        for trial in 1..=max_trials {
            let x = uniform_sample(rng, self.spec.d)?;
            let (num, _) = self.schur(&x);
            let num = self.clamp_schur(num)?;
            let u: f64 = rng.random();
            if u * k < num {
                self.push(x)?;
                self.trials.push(trial);
                return Ok(trial);
            }
        }
        Err(Error::SamplerStall { point: self.selected.len(), k_n: self.spec.k_n, trials: max_trials })
    }
}

/// One exact draw from the DPP plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub points: Vec<SpherePoint>,
    pub spec: KernelSpec,
    pub seed: u64,
    pub rejection_count: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct SamplerOptions {
    pub max_points: u64,
    pub max_trials: u64,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self { max_points: DEFAULT_MAX_POINTS, max_trials: DEFAULT_MAX_TRIALS }
    }
}

fn check_envelope(spec: &KernelSpec, opts: &SamplerOptions) -> Result<()> {
    if spec.k_n > opts.max_points {
        return Err(Error::Envelope(format!(
            "k_n = {} exceeds the sampling cap of {} points (d = {}, n = {})",
            spec.k_n, opts.max_points, spec.d, spec.n
        )));
    }
    Ok(())
}

/// Draws one configuration from an explicit random stream.
pub fn sample_with<R: Rng + ?Sized>(spec: &KernelSpec, rng: &mut R, seed: u64, opts: &SamplerOptions) -> Result<Configuration> {
    check_envelope(spec, opts)?;
    let mut state = SamplerState::new(*spec);
    let mut proposals = 0;
    for _ in 0..spec.k_n {
        proposals += state.draw_next(rng, opts.max_trials)?;
    }
    Ok(Configuration {
        points: state.selected,
        spec: *spec,
        seed,
        rejection_count: proposals - spec.k_n,
    })
}

/// Deterministic draw keyed by `seed` (stream 0).
pub fn sample(spec: &KernelSpec, seed: u64) -> Result<Configuration> {
    sample_replicate(spec, seed, 0, &SamplerOptions::default())
}

/// Replicate `r` of a run keyed by `seed`.
pub fn sample_replicate(spec: &KernelSpec, seed: u64, r: u64, opts: &SamplerOptions) -> Result<Configuration> {
    let mut rng = replicate_stream(seed, r);
    sample_with(spec, &mut rng, seed, opts)
}

/// Replicates `0..count` in parallel; the output order is the replicate order.
pub fn sample_many(spec: &KernelSpec, seed: u64, count: usize, opts: &SamplerOptions) -> Result<Vec<Configuration>> {
    check_envelope(spec, opts)?;
    (0..count as u64).into_par_iter().map(|r| sample_replicate(spec, seed, r, opts)).collect()
}

/// Runs `f` on replicates `0..count` in parallel without keeping them.
pub fn map_replicates<T, F>(spec: &KernelSpec, seed: u64, count: usize, opts: &SamplerOptions, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&Configuration) -> T + Sync + Send,
{
    check_envelope(spec, opts)?;
    (0..count as u64)
        .into_par_iter()
        .map(|r| sample_replicate(spec, seed, r, opts).map(|c| f(&c)))
        .collect()
}

impl Configuration {
    /// Header `d n k_n seed`, then one point per line with 17 significant digits.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {} {} {}", self.spec.d, self.spec.n, self.spec.k_n, self.seed)?;
        for p in &self.points {
            let line: Vec<String> = p.coords().iter().map(|c| format!("{c:.16e}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::Config("empty configuration file".into()))??;
        let fields: Vec<u64> = header
            .split_whitespace()
            .map(|s| s.parse::<u64>().map_err(|e| Error::Config(format!("bad header field {s:?}: {e}"))))
            .collect::<Result<_>>()?;
        if fields.len() != 4 {
            return Err(Error::Config(format!("header needs 4 fields, found {}", fields.len())));
        }
        let spec = KernelSpec::new(fields[0] as usize, fields[1] as usize)?;
        if spec.k_n != fields[2] {
            return Err(Error::Config(format!("header k_n = {} but dimension gives {}", fields[2], spec.k_n)));
        }
        let mut points = Vec::with_capacity(spec.k_n as usize);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let coords: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Config(format!("bad coordinate {s:?}: {e}"))))
                .collect::<Result<_>>()?;
            if coords.len() != spec.d + 1 {
                return Err(Error::DimensionMismatch { expected: spec.d, got: coords.len().saturating_sub(1) });
            }
            points.push(SpherePoint::normalize(coords)?);
        }
        if points.len() as u64 != spec.k_n {
            return Err(Error::Config(format!("expected {} points, found {}", spec.k_n, points.len())));
        }
        Ok(Self { points, spec, seed: fields[3], rejection_count: 0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{product_quadrature, surface_area};

    #[test]
    fn empty_state_is_uniform() {
        let spec = KernelSpec::new(2, 4).unwrap();
        let st = SamplerState::new(spec);
        let mut rng = replicate_stream(3, 0);
        for _ in 0..20 {
            let x = uniform_sample(&mut rng, 2).unwrap();
            let v = st.conditional_density(&x).unwrap();
            assert!((v - 1.0 / surface_area(2)).abs() < 1e-15);
        }
    }

    #[test]
    fn selected_point_has_zero_density() {
        let spec = KernelSpec::new(2, 5).unwrap();
        let mut st = SamplerState::new(spec);
        let mut rng = replicate_stream(4, 0);
        for _ in 0..3 {
            st.draw_next(&mut rng, DEFAULT_MAX_TRIALS).unwrap();
        }
        let x = st.selected()[1].clone();
        assert!(st.conditional_density(&x).unwrap() < 1e-9);
    }

    #[test]
    fn conditional_density_integrates_to_one() {
        let spec = KernelSpec::new(2, 6).unwrap();
        let mut st = SamplerState::new(spec);
        let mut rng = replicate_stream(5, 0);
        for _ in 0..4 {
            st.draw_next(&mut rng, DEFAULT_MAX_TRIALS).unwrap();
        }
        let q = product_quadrature(2, 24).unwrap();
        let total = q.integrate(|x| st.conditional_density(x).unwrap());
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn gram_factor_reproduces_kernel_matrix() {
        let spec = KernelSpec::new(2, 7).unwrap();
        let mut rng = replicate_stream(6, 0);
        let mut st = SamplerState::new(spec);
        for _ in 0..spec.k_n {
            st.draw_next(&mut rng, DEFAULT_MAX_TRIALS).unwrap();
        }
        let l = st.gram_factor();
        let m = l.len();
        let (mut err, mut norm) = (0.0, 0.0);
        for i in 0..m {
            for j in 0..=i {
                let g = spec.eval(&st.selected()[i], &st.selected()[j]);
                let llt: f64 = (0..=j).map(|k| l[i][k] * l[j][k]).sum();
                err += (g - llt).powi(2);
                norm += g * g;
            }
        }
        assert!((err / norm).sqrt() < 1e-9);
    }

    #[test]
    fn sampling_is_deterministic_and_exact_in_size() {
        let spec = KernelSpec::new(2, 5).unwrap();
        let a = sample(&spec, 42).unwrap();
        let b = sample(&spec, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.points.len(), 11);
        let c = sample(&spec, 43).unwrap();
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn envelope_guard() {
        let spec = KernelSpec::new(2, 40).unwrap();
        assert!(matches!(sample(&spec, 1), Err(Error::Envelope(_))));
    }

    #[test]
    fn serialization_roundtrip() {
        let spec = KernelSpec::new(2, 3).unwrap();
        let c = sample(&spec, 9).unwrap();
        let mut buf = Vec::new();
        c.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("2 3 7 9\n"));
        let back = Configuration::read_from(buf.as_slice()).unwrap();
        for (p, q) in c.points.iter().zip(&back.points) {
            assert!(p.distance(q) < 1e-15);
        }
    }
}
