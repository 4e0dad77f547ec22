//! Moment/cumulant conversion through sums over set partitions.

use crate::error::{Error, Result};

/// Longest sequence accepted by the converters.
pub const MAX_ORDER: usize = 8;

/// Calls `visit` with the block sizes of every set partition of `{0..n}`.
pub fn for_each_partition(n: usize, mut visit: impl FnMut(&[usize])) {
    // Restricted growth strings: a[i] <= 1 + max(a[..i]).
    let mut a = vec![0usize; n];
    let mut sizes = Vec::with_capacity(n);
    fn rec(i: usize, blocks: usize, a: &mut [usize], sizes: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if i == a.len() {
            visit(sizes);
            return;
        }
        for b in 0..=blocks {
            a[i] = b;
            if b == blocks {
                sizes.push(1);
                rec(i + 1, blocks + 1, a, sizes, visit);
                sizes.pop();
            } else {
                sizes[b] += 1;
                rec(i + 1, blocks, a, sizes, visit);
                sizes[b] -= 1;
            }
        }
    }
    if n == 0 {
        visit(&[]);
        return;
    }
    rec(0, 0, &mut a, &mut sizes, &mut visit);
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn check_len(len: usize) -> Result<()> {
    if len > MAX_ORDER {
        return Err(Error::SizeGuard(format!("conversion supports at most {MAX_ORDER} orders, got {len}")));
    }
    Ok(())
}

/// Raw moments `m_1..m_r` from cumulants `Q_1..Q_r`:
/// `m_r = sum over partitions pi of [r] of prod_{B in pi} Q_{|B|}`.
pub fn moments_from_cumulants(q: &[f64]) -> Result<Vec<f64>> {
    check_len(q.len())?;
    Ok((1..=q.len())
        .map(|r| {
            let mut s = 0.0;
            for_each_partition(r, |blocks| s += blocks.iter().map(|&b| q[b - 1]).product::<f64>());
            s
        })
        .collect())
}

/// Cumulants from raw moments:
/// `Q_r = sum over pi of (-1)^{|pi|-1} (|pi|-1)! prod_{B in pi} m_{|B|}`.
pub fn cumulants_from_moments(m: &[f64]) -> Result<Vec<f64>> {
    check_len(m.len())?;
    Ok((1..=m.len())
        .map(|r| {
            let mut s = 0.0;
            for_each_partition(r, |blocks| {
                let l = blocks.len();
                let sign = if l % 2 == 1 { 1.0 } else { -1.0 };
                s += sign * factorial(l - 1) * blocks.iter().map(|&b| m[b - 1]).product::<f64>();
            });
            s
        })
        .collect())
}

/// Central moments `mu_2..` from cumulants, by zeroing `Q_1`.
pub fn central_moments_from_cumulants(q: &[f64]) -> Result<Vec<f64>> {
    let mut z = q.to_vec();
    if let Some(first) = z.first_mut() {
        *first = 0.0;
    }
    moments_from_cumulants(&z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: usize, k: usize) -> f64 {
        factorial(n) / (factorial(k) * factorial(n - k))
    }

    /// Recursive reference: `m_n = sum_j C(n-1, j-1) Q_j m_{n-j}`.
    fn moments_recursive(q: &[f64]) -> Vec<f64> {
        let mut m = vec![1.0];
        for n in 1..=q.len() {
            let s = (1..=n).map(|j| binom(n - 1, j - 1) * q[j - 1] * m[n - j]).sum();
            m.push(s);
        }
        m[1..].to_vec()
    }

    #[test]
    fn bell_numbers() {
        let bell = [1, 1, 2, 5, 15, 52, 203, 877, 4140];
        for (n, &b) in bell.iter().enumerate() {
            let mut c = 0;
            for_each_partition(n, |_| c += 1);
            assert_eq!(c, b);
        }
    }

    #[test]
    fn gaussian_moments() {
        let (mu, s2) = (0.7, 1.9);
        let m = moments_from_cumulants(&[mu, s2, 0.0, 0.0]).unwrap();
        assert!((m[1] - (s2 + mu * mu)).abs() < 1e-12);
        assert!((m[2] - (mu.powi(3) + 3.0 * mu * s2)).abs() < 1e-12);
        assert!((m[3] - (mu.powi(4) + 6.0 * mu * mu * s2 + 3.0 * s2 * s2)).abs() < 1e-12);
    }

    #[test]
    fn chi_square_moments() {
        let q: Vec<f64> = (1..=3).map(|m| 2f64.powi(m - 1) * factorial(m as usize - 1)).collect();
        let m = moments_from_cumulants(&q).unwrap();
        assert_eq!(m, vec![1.0, 3.0, 15.0]);
    }

    #[test]
    fn matches_recursion_and_roundtrips() {
        let q = [0.3, -1.2, 2.5, 0.4, -3.0, 1.1, 0.9, -0.2];
        let m = moments_from_cumulants(&q).unwrap();
        let r = moments_recursive(&q);
        for (a, b) in m.iter().zip(&r) {
            assert!((a - b).abs() < 1e-10 * b.abs().max(1.0));
        }
        let back = cumulants_from_moments(&m).unwrap();
        for (a, b) in back.iter().zip(&q) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(moments_from_cumulants(&[0.0; 9]).is_err());
    }
}
