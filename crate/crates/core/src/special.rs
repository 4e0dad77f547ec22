//! Normalized Gegenbauer ("d-dimensional Legendre") polynomials, the Hilb
//! cosine approximation `p_n`, Bessel functions of the first kind, and an
//! empirical certification of the Hilb error bound.

use std::f64::consts::PI;

use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};

const DOMAIN_SLACK: f64 = 1e-12;

fn check_t(t: f64) -> Result<f64> {
    if !(-1.0 - DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&t) || t.is_nan() {
        return Err(Error::Domain(format!("legendre argument {t} outside [-1, 1]")));
    }
    Ok(t.clamp(-1.0, 1.0))
}

/// `P_n(t)` normalized by `P_n(1) = 1`, for parameter `lambda = (d-1)/2`.
///
/// Uses `P_{n+1} = ((2n+d-1) t P_n - n P_{n-1}) / (n+d-1)`.
pub fn legendre(d: usize, n: usize, t: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    Ok(legendre_raw(d, n, check_t(t)?))
}

/// Unchecked recurrence for hot loops; `t` must already lie in [-1, 1].
#[inline]
pub fn legendre_raw(d: usize, n: usize, t: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let dm1 = d as f64 - 1.0;
    let (mut p0, mut p1) = (1.0, t);
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + dm1) * t * p1 - kf * p0) / (kf + dm1);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Fills `out[j] = P_j(t)` for `j = 0..out.len()`.
pub fn legendre_all(d: usize, t: f64, out: &mut [f64]) {
    let dm1 = d as f64 - 1.0;
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = t;
    }
    for k in 1..out.len().saturating_sub(1) {
        let kf = k as f64;
        out[k + 1] = ((2.0 * kf + dm1) * t * out[k] - kf * out[k - 1]) / (kf + dm1);
    }
}

/// Evaluator for all levels up to `max_n` in a fixed dimension.
#[derive(Debug, Clone, Copy)]
pub struct LegendreEvaluator {
    pub d: usize,
    pub max_n: usize,
}

impl LegendreEvaluator {
    pub fn new(d: usize, max_n: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::UnsupportedDimension(d));
        }
        Ok(Self { d, max_n })
    }

    pub fn eval(&self, n: usize, t: f64) -> Result<f64> {
        if n > self.max_n {
            return Err(Error::Domain(format!("level {n} above max_n = {}", self.max_n)));
        }
        legendre(self.d, n, t)
    }

    /// `P_0(t), ..., P_{max_n}(t)`.
    pub fn all(&self, t: f64) -> Result<Vec<f64>> {
        let t = check_t(t)?;
        let mut out = vec![0.0; self.max_n + 1];
        legendre_all(self.d, t, &mut out);
        Ok(out)
    }
}

/// The Hilb cosine form `p_n(theta)`, reflected through
/// `p_n(theta) = (-1)^n p_n(pi - theta)` above `pi/2`.
///
/// Returns `+inf` at `theta = 0` and `(-1)^n inf` at `theta = pi`, where the
/// `sin^{-(d-1)/2}` factor diverges.
pub fn hilb_p(d: usize, n: usize, theta: f64) -> f64 {
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    if theta <= 0.0 {
        return f64::INFINITY;
    }
    if theta >= PI {
        return sign * f64::INFINITY;
    }
    if theta > PI / 2.0 {
        return sign * hilb_p_lower(d, n, PI - theta);
    }
    hilb_p_lower(d, n, theta)
}

fn hilb_p_lower(d: usize, n: usize, theta: f64) -> f64 {
    let df = d as f64;
    let nu = n as f64 + 0.5 * (df - 1.0);
    let pref = gamma(0.5 * df) * (2f64.powf(df - 1.0) / PI).sqrt();
    pref * nu.powf(-0.5 * (df - 1.0))
        * theta.sin().powf(-0.5 * (df - 1.0))
        * (nu * theta - (df - 1.0) * PI / 4.0).cos()
}

/// `theta` range `[c/n, pi - c/n]` on which `p_n` is used.
pub fn hilb_validity_window(n: usize, c: f64) -> (f64, f64) {
    let a = c / n.max(1) as f64;
    (a, PI - a)
}

/// Bessel function `J_nu(x)` for `nu >= 0` and `x >= 0`: ascending series
/// below `x = nu + 12`, Hankel asymptotic expansion above.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(Error::Domain(format!("bessel_j needs x >= 0, got {x}")));
    }
    if nu < 0.0 {
        return Err(Error::Domain(format!("bessel_j needs nu >= 0, got {nu}")));
    }
    if x == 0.0 {
        return Ok(if nu == 0.0 { 1.0 } else { 0.0 });
    }
    if x <= nu + 12.0 {
        Ok(bessel_series(nu, x))
    } else {
        Ok(bessel_asymptotic(nu, x))
    }
}

fn bessel_series(nu: f64, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut term = (nu * h.ln() - ln_gamma(nu + 1.0)).exp();
    let mut sum = term;
    let q = -h * h;
    for k in 1..500 {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && kf > h {
            break;
        }
    }
    sum
}

fn bessel_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        a *= (mu - odd * odd) / (kf * 8.0 * x);
        if a.abs() > last {
            break;
        }
        last = a.abs();
        // a_k carries (-1)^{floor(k/2)} in P (even k) and Q (odd k).
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * a;
        } else {
            q += sign * a;
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Outcome of [`certify_hilb_bound`].
#[derive(Debug, Clone)]
pub struct BoundFit {
    /// Fitted `C` in `|P_n - p_n| ~ C (n min(theta, pi - theta))^s`.
    pub constant: f64,
    /// Fitted exponent `s`.
    pub exponent: f64,
    /// Largest `|P_n - p_n| / min((n min(theta, pi-theta))^{-d/2}, 1)`.
    pub max_ratio: f64,
    /// Largest raw error on the grid.
    pub max_error: f64,
    /// Grid points used (inside the validity window, nonzero error).
    pub points: usize,
}

/// Least-squares fit of `ln y = a + s ln x`; returns `(a, s)`.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let s = sxy / sxx;
    (my - s * mx, s)
}

/// Fits the Hilb remainder over the grid `n_list x theta_grid`, keeping
/// `theta` inside the window `[c/n, pi - c/n]`.
pub fn certify_hilb_bound(d: usize, n_list: &[usize], theta_grid: &[f64], c: f64) -> Result<BoundFit> {
    if d < 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    if n_list.iter().any(|&n| n < 4) {
        return Err(Error::Domain("certification needs n >= 4".into()));
    }
    if theta_grid.iter().any(|&t| !(t > 0.0 && t < PI)) {
        return Err(Error::Domain("theta grid must lie in (0, pi)".into()));
    }
    let half = 0.5 * d as f64;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let (mut max_ratio, mut max_error) = (0.0f64, 0.0f64);
    for &n in n_list {
        let (lo, hi) = hilb_validity_window(n, c);
        for &theta in theta_grid {
            if theta < lo || theta > hi {
                continue;
            }
            let err = (legendre_raw(d, n, theta.cos()) - hilb_p(d, n, theta)).abs();
            let scale = n as f64 * theta.min(PI - theta);
            max_error = max_error.max(err);
            max_ratio = max_ratio.max(err / scale.powf(-half).min(1.0));
            if err > 0.0 {
                xs.push(scale);
                ys.push(err);
            }
        }
    }
    if xs.len() < 2 {
        return Err(Error::Domain("too few grid points inside the validity window".into()));
    }
    let (a, s) = loglog_fit(&xs, &ys);
    Ok(BoundFit { constant: a.exp(), exponent: s, max_ratio, max_error, points: xs.len() })
}

/// Local error envelope: `max |P_n(cos t) - p_n(t)|` over one oscillation
/// period of `p_n` centred at `theta`.
pub fn hilb_error_envelope(d: usize, n: usize, theta: f64) -> f64 {
    let nu = n as f64 + 0.5 * (d as f64 - 1.0);
    let half = PI / nu;
    let samples = 64;
    (0..=samples)
        .map(|j| {
            let t = theta - half + 2.0 * half * j as f64 / samples as f64;
            (legendre_raw(d, n, t.cos()) - hilb_p(d, n, t)).abs()
        })
        .fold(0.0, f64::max)
}

/// Exponent of the error envelope against `n` at a fixed angle.
pub fn hilb_exponent_at(d: usize, n_list: &[usize], theta: f64) -> f64 {
    let xs: Vec<f64> = n_list.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = n_list.iter().map(|&n| hilb_error_envelope(d, n, theta)).collect();
    loglog_fit(&xs, &ys).1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_examples() {
        for d in 2..=5 {
            for n in 0..30 {
                assert!((legendre(d, n, 1.0).unwrap() - 1.0).abs() < 1e-13);
                let t = 0.37;
                let s = if n % 2 == 0 { 1.0 } else { -1.0 };
                assert!((legendre(d, n, -t).unwrap() - s * legendre(d, n, t).unwrap()).abs() < 1e-14);
            }
        }
        assert!((legendre(2, 2, 0.0).unwrap() + 0.5).abs() < 1e-15);
        assert!(legendre(2, 3, 1.1).is_err());
        assert!(legendre(2, 3, 1.0 + 5e-13).is_ok());
    }

    #[test]
    fn legendre_matches_classical_polynomials() {
        let t: f64 = 0.3;
        assert!((legendre(2, 3, t).unwrap() - 0.5 * (5.0 * t.powi(3) - 3.0 * t)).abs() < 1e-15);
        // d = 3: Chebyshev U_n(t)/(n+1).
        let th = t.acos();
        for n in 0..10 {
            let u = ((n as f64 + 1.0) * th).sin() / th.sin() / (n as f64 + 1.0);
            assert!((legendre(3, n, t).unwrap() - u).abs() < 1e-14);
        }
    }

    #[test]
    fn legendre_is_bounded_and_stable() {
        for d in [2, 3] {
            for n in [50, 200] {
                for j in 0..=10_000 {
                    let t = -1.0 + 2.0 * j as f64 / 10_000.0;
                    assert!(legendre_raw(d, n, t).abs() <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn hilb_examples() {
        for n in [5, 12, 33] {
            for &th in &[0.3, 0.9, 1.4] {
                let s = if n % 2 == 0 { 1.0 } else { -1.0 };
                assert!((hilb_p(2, n, PI - th) - s * hilb_p(2, n, th)).abs() < 1e-13);
            }
            let nu = n as f64 + 0.5;
            let want = (2.0 / PI).sqrt() * nu.powf(-0.5) * (nu * PI / 2.0 - PI / 4.0).cos();
            assert!((hilb_p(2, n, PI / 2.0) - want).abs() < 1e-14);
        }
        assert!(hilb_p(2, 4, 0.0).is_infinite());
        assert_eq!(hilb_p(2, 3, PI), f64::NEG_INFINITY);
        let e16 = (legendre_raw(2, 16, (PI / 3.0).cos()) - hilb_p(2, 16, PI / 3.0)).abs();
        let e64 = (legendre_raw(2, 64, (PI / 3.0).cos()) - hilb_p(2, 64, PI / 3.0)).abs();
        assert!(e64 / e16 < 0.25f64.powf(0.8));
    }

    #[test]
    fn bessel_examples() {
        assert_eq!(bessel_j(0.0, 0.0).unwrap(), 1.0);
        for x in [1.0, 5.0, 20.0, 80.0] {
            let want = (2.0 / (PI * x)).sqrt() * x.sin();
            assert!((bessel_j(0.5, x).unwrap() - want).abs() < 1e-8, "x = {x}");
            let want = (2.0 / (PI * x)).sqrt() * (x.sin() / x - x.cos());
            assert!((bessel_j(1.5, x).unwrap() - want).abs() < 1e-8, "x = {x}");
        }
        let approx = (2.0 / (100.0 * PI)).sqrt() * (100.0 - PI / 4.0).cos();
        assert!((bessel_j(0.0, 100.0).unwrap() - approx).abs() < 2e-3);
        assert!(bessel_j(0.0, -1.0).is_err());
    }

    #[test]
    fn bessel_branches_agree_at_switch() {
        for nu in [0.0, 0.5, 1.0, 2.5] {
            let x = nu + 12.0;
            let a = bessel_series(nu, x);
            let b = bessel_asymptotic(nu, x);
            assert!((a - b).abs() < 1e-9, "nu = {nu}: {a} vs {b}");
        }
    }

    #[test]
    fn certification_respects_bound_and_symmetry() {
        let grid: Vec<f64> = (1..200).map(|j| PI * j as f64 / 200.0).collect();
        let fit = certify_hilb_bound(2, &[8, 16, 32, 64, 128], &grid, 1.0).unwrap();
        assert!(fit.max_error <= 1.0 + 1e-9);
        assert!(fit.exponent < -0.8);
        for n in [9, 20] {
            for &th in &[0.4f64, 1.0] {
                let a = (legendre_raw(2, n, th.cos()) - hilb_p(2, n, th)).abs();
                let b = (legendre_raw(2, n, (PI - th).cos()) - hilb_p(2, n, PI - th)).abs();
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
