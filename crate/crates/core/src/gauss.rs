//! One-dimensional Gauss rules and piecewise integration on intervals.
//!
//! Gauss–Legendre nodes come from Newton iteration on the three-term
//! recurrence; rules for the symmetric Jacobi weight `(1 - t^2)^alpha` use
//! Golub–Welsch on the Jacobi matrix. Legendre rules are cached per order.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Sum of `w_i f(t_i)` on the reference interval.
    pub fn apply(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }
}

fn legendre_newton(n: usize) -> GaussRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm = if n <= 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        // Recompute the derivative at the converged node.
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        if n >= 2 {
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        } else if n == 1 {
            dp = 1.0;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussRule { nodes, weights }
}

/// Cached `n`-point Gauss–Legendre rule on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> Arc<GaussRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().unwrap().get(&n) {
        return rule.clone();
    }
    let rule = Arc::new(legendre_newton(n));
    cache.lock().unwrap().insert(n, rule.clone());
    rule
}

/// Gauss rule on [-1, 1] for the weight `(1 - t^2)^alpha`, `alpha > -1`.
pub fn gauss_gegenbauer(n: usize, alpha: f64) -> GaussRule {
    assert!(alpha > -1.0, "weight exponent must exceed -1");
    if alpha == 0.0 {
        return (*gauss_legendre(n)).clone();
    }
    let lambda = alpha + 0.5;
    let mu0 = (0.5 * PI.ln() + ln_gamma(lambda + 0.5) - ln_gamma(lambda + 1.0)).exp();
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let kf = k as f64;
        let b = (kf * (kf + 2.0 * lambda - 1.0) / (4.0 * (kf + lambda) * (kf + lambda - 1.0))).sqrt();
        jac[(k, k - 1)] = b;
        jac[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Symmetrize to remove the small asymmetry left by the eigensolver.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[i].1 + pairs[j].1);
        pairs[i] = (-x, w);
        pairs[j] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    GaussRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Integral of `f` over [a, b] with an `n`-point Gauss–Legendre rule.
pub fn integrate(a: f64, b: f64, n: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let rule = gauss_legendre(n);
    let (h, c) = (0.5 * (b - a), 0.5 * (b + a));
    h * rule.apply(|t| f(c + h * t))
}

/// Like [`integrate`] but with nodes clustered at both endpoints through
/// `x = a + (b - a) sin^2(pi u / 2)`, which restores fast convergence for
/// integrands with square-root behaviour at the ends.
pub fn integrate_clustered(a: f64, b: f64, n: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let rule = gauss_legendre(n);
    let len = b - a;
    0.5 * rule.apply(|t| {
        let u = 0.5 * (t + 1.0);
        let x = a + len * (0.5 * PI * u).sin().powi(2);
        let jac = len * 0.5 * PI * (PI * u).sin();
        jac * f(x)
    })
}

/// Nodes and weights of the clustered rule on [a, b].
pub fn clustered_rule(a: f64, b: f64, n: usize) -> GaussRule {
    let rule = gauss_legendre(n);
    let len = b - a;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let u = 0.5 * (t + 1.0);
        nodes.push(a + len * (0.5 * PI * u).sin().powi(2));
        weights.push(0.5 * w * len * 0.5 * PI * (PI * u).sin());
    }
    GaussRule { nodes, weights }
}

/// Sorted, deduplicated breakpoints of [lo, hi] including the ends.
pub fn breakpoints(lo: f64, hi: f64, interior: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut pts = vec![lo, hi];
    pts.extend(interior.into_iter().filter(|&x| x > lo + 1e-14 && x < hi - 1e-14));
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    pts
}

/// Clustered integration over consecutive pieces of `breaks`.
pub fn integrate_pieces(breaks: &[f64], n: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    breaks
        .windows(2)
        .map(|w| integrate_clustered(w[0], w[1], n, &mut f))
        .sum()
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        for n in [1, 2, 5, 16, 64, 301] {
            let rule = gauss_legendre(n);
            let total: f64 = rule.weights.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "n = {n}");
            let deg = 2 * n - 2;
            let got = rule.apply(|t| t.powi(deg as i32));
            let want = 2.0 / (deg as f64 + 1.0);
            assert!((got - want).abs() < 1e-13, "n = {n}: {got} vs {want}");
        }
    }

    #[test]
    fn gegenbauer_rule_matches_weighted_moments() {
        // (1 - t^2)^(1/2): moments 0 and 2 are pi/2 and pi/8.
        let rule = gauss_gegenbauer(12, 0.5);
        assert!((rule.apply(|_| 1.0) - PI / 2.0).abs() < 1e-13);
        assert!((rule.apply(|t| t * t) - PI / 8.0).abs() < 1e-13);
        let rule = gauss_gegenbauer(9, 1.0);
        // int (1-t^2) t^4 = 2/5 - 2/7
        assert!((rule.apply(|t| t.powi(4)) - (0.4 - 2.0 / 7.0)).abs() < 1e-13);
    }

    #[test]
    fn clustered_rule_handles_sqrt_ends() {
        let got = integrate_clustered(0.0, 1.0, 40, |x| (x * (1.0 - x)).sqrt());
        assert!((got - PI / 8.0).abs() < 1e-12);
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }
}
