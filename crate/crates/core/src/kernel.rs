//! The spectral projection kernel `K_n(x, y) = (k_n / s_d) P_n(x . y)` onto
//! degree-n spherical harmonics of S^d, and its constants.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::gauss::compensated_sum;
use crate::special::legendre_raw;
use crate::sphere::{product_quadrature, uniform_sample, SpherePoint};

pub use crate::sphere::surface_area;

/// Exact dimension of the space of degree-n harmonics on S^d:
/// `((2n+d-1)/(n+d-1)) * binomial(n+d-1, d-1)`.
pub fn dimension(d: usize, n: usize) -> Result<u64> {
    if d < 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    let overflow = || Error::Domain(format!("dimension({d}, {n}) overflows 64 bits"));
    let top = (n + d - 1) as u128;
    let mut binom: u128 = 1;
    for i in 0..(d as u128 - 1) {
        binom = binom.checked_mul(top - i).ok_or_else(overflow)? / (i + 1);
    }
    let num = binom.checked_mul((2 * n + d - 1) as u128).ok_or_else(overflow)?;
    let value = num / top;
    debug_assert_eq!(num % top, 0);
    u64::try_from(value).map_err(|_| overflow())
}

/// `C_d = 2^{d-2} Gamma(d/2)^2 / pi`.
pub fn chaos_constant(d: usize) -> f64 {
    let df = d as f64;
    ((df - 2.0) * 2f64.ln() + 2.0 * ln_gamma(0.5 * df) - PI.ln()).exp()
}

/// Identity card of one DPP model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub d: usize,
    pub n: usize,
    pub k_n: u64,
    pub s_d: f64,
    pub c_d: f64,
}

impl KernelSpec {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        let k_n = dimension(d, n)?;
        Ok(Self { d, n, k_n, s_d: surface_area(d), c_d: chaos_constant(d) })
    }

    /// Diagonal value `K_n(x, x) = k_n / s_d`.
    pub fn intensity(&self) -> f64 {
        self.k_n as f64 / self.s_d
    }

    /// Kernel as a function of `t = x . y`.
    #[inline]
    pub fn eval_t(&self, t: f64) -> f64 {
        self.intensity() * legendre_raw(self.d, self.n, t.clamp(-1.0, 1.0))
    }

    /// Kernel at two points, assuming both lie on this S^d. Identical points
    /// take `t = 1` exactly so the diagonal is bitwise constant.
    #[inline]
    pub fn eval(&self, x: &SpherePoint, y: &SpherePoint) -> f64 {
        if x.coords() == y.coords() {
            return self.intensity();
        }
        self.eval_t(x.dot(y))
    }
}

pub fn kernel_eval(spec: &KernelSpec, x: &SpherePoint, y: &SpherePoint) -> Result<f64> {
    for p in [x, y] {
        if p.dim() != spec.d {
            return Err(Error::DimensionMismatch { expected: spec.d, got: p.dim() });
        }
    }
    Ok(spec.eval(x, y))
}

/// Quadrature residuals of the exact kernel identities.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KernelResiduals {
    /// `|int int K_n^2 - k_n| / k_n`.
    pub hilbert_schmidt: f64,
    /// Largest `|int K_n(x, z) K_n(z, y) dz - K_n(x, y)| / K_n(x, x)` over the test pairs.
    pub reproducing: f64,
    /// Largest `|int K_n(x, z) K_{n+1}(z, y) dz| / K_n(x, x)` over the test pairs.
    pub orthogonality: f64,
}

impl KernelResiduals {
    /// Name and value of the first residual above `tol`.
    pub fn breach(&self, tol: f64) -> Option<(&'static str, f64)> {
        [
            ("hilbert-schmidt", self.hilbert_schmidt),
            ("reproducing", self.reproducing),
            ("orthogonality", self.orthogonality),
        ]
        .into_iter()
        .find(|&(_, v)| !(v <= tol))
    }
}

/// Checks the reproducing identities on a product rule of the given
/// resolution at `pairs` random point pairs drawn from `seed`. The rule is
/// exact for them once `resolution > n + 1`.
pub fn kernel_residuals(spec: &KernelSpec, resolution: usize, pairs: usize, seed: u64) -> Result<KernelResiduals> {
    let q = product_quadrature(spec.d, resolution)?;
    let kn = spec.k_n as f64;
    let rows: Vec<f64> = q
        .nodes
        .par_iter()
        .zip(&q.weights)
        .map(|(x, &wx)| wx * compensated_sum(q.nodes.iter().zip(&q.weights).map(|(y, &wy)| wy * spec.eval(x, y).powi(2))))
        .collect();
    let hilbert_schmidt = (compensated_sum(rows) - kn).abs() / kn;
    let next = KernelSpec::new(spec.d, spec.n + 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reproducing = 0.0f64;
    let mut orthogonality = 0.0f64;
    for _ in 0..pairs {
        let x = uniform_sample(&mut rng, spec.d)?;
        let y = uniform_sample(&mut rng, spec.d)?;
        let same = q.integrate(|z| spec.eval(&x, z) * spec.eval(z, &y));
        let cross = q.integrate(|z| spec.eval(&x, z) * next.eval(z, &y));
        reproducing = reproducing.max((same - spec.eval(&x, &y)).abs() / spec.intensity());
        orthogonality = orthogonality.max(cross.abs() / spec.intensity());
    }
    Ok(KernelResiduals { hilbert_schmidt, reproducing, orthogonality })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{product_quadrature, uniform_sample};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dimension_examples() {
        assert_eq!(dimension(2, 3).unwrap(), 7);
        for d in 2..8 {
            assert_eq!(dimension(d, 0).unwrap(), 1);
        }
        assert_eq!(dimension(3, 4).unwrap(), 25);
        assert_eq!(dimension(4, 2).unwrap(), 14);
        let ratio = dimension(2, 100).unwrap() as f64 / 200.0;
        assert!((ratio - 1.0).abs() < 0.02);
        assert!(dimension(1, 3).is_err());
        assert!(dimension(40, 1_000_000).is_err());
    }

    #[test]
    fn constants() {
        let s = KernelSpec::new(2, 8).unwrap();
        assert_eq!(s.k_n, 17);
        assert!((s.s_d - 4.0 * PI).abs() < 1e-13);
        assert!((s.c_d - 1.0 / PI).abs() < 1e-15);
        assert!((chaos_constant(3) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn diagonal_and_symmetry() {
        let spec = KernelSpec::new(2, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let first = {
            let x = uniform_sample(&mut rng, 2).unwrap();
            kernel_eval(&spec, &x, &x).unwrap()
        };
        for _ in 0..100 {
            let x = uniform_sample(&mut rng, 2).unwrap();
            let y = uniform_sample(&mut rng, 2).unwrap();
            assert_eq!(kernel_eval(&spec, &x, &x).unwrap().to_bits(), first.to_bits());
            assert_eq!(spec.eval(&x, &y), spec.eval(&y, &x));
        }
        let z = SpherePoint::north_pole(3);
        assert!(kernel_eval(&spec, &z, &z).is_err());
    }

    #[test]
    fn residuals_vanish_on_exact_rules() {
        for n in [0, 3, 8] {
            let spec = KernelSpec::new(2, n).unwrap();
            let r = kernel_residuals(&spec, n + 4, 5, 1).unwrap();
            assert!(r.breach(1e-10).is_none(), "{r:?}");
        }
        let spec = KernelSpec::new(2, 12).unwrap();
        let coarse = kernel_residuals(&spec, 5, 5, 1).unwrap();
        assert!(coarse.breach(1e-7).is_some());
    }

    #[test]
    fn row_norm_is_intensity() {
        let spec = KernelSpec::new(2, 9).unwrap();
        let q = product_quadrature(2, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = uniform_sample(&mut rng, 2).unwrap();
        let got = q.integrate(|y| spec.eval(&x, y).powi(2));
        assert!((got / spec.intensity() - 1.0).abs() < 1e-7);
    }
}
