//! Row-major dense LU with partial pivoting, used for capacitance systems and
//! the coarsest multigrid level.

use crate::error::{EmiError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct DenseLu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
    rcond: T,
}

impl<T: Real> DenseLu<T> {
    /// Factorizes the `n x n` row-major matrix `a`.
    pub fn factor(n: usize, mut a: Vec<T>) -> Result<Self> {
        if a.len() != n * n {
            return Err(EmiError::DimensionMismatch(format!("dense LU expects {} entries", n * n)));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut umax = T::zero();
        let mut umin = T::infinity();
        for k in 0..n {
            let (mut p, mut best) = (k, a[k * n + k].abs());
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > best {
                    p = i;
                    best = v;
                }
            }
            if best.is_zero() || !best.is_finite() {
                return Err(EmiError::FactorizationFailed {
                    index: k,
                    pivot: best.as_f64(),
                });
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let piv = a[k * n + k];
            umax = umax.max(piv.abs());
            umin = umin.min(piv.abs());
            for i in k + 1..n {
                let l = a[i * n + k] / piv;
                a[i * n + k] = l;
                if !l.is_zero() {
                    for j in k + 1..n {
                        let u = a[k * n + j];
                        a[i * n + j] -= l * u;
                    }
                }
            }
        }
        let rcond = if n == 0 { T::one() } else { umin / umax };
        Ok(Self { n, lu: a, perm, rcond })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Ratio of smallest to largest pivot magnitude; a cheap conditioning proxy.
    pub fn pivot_ratio(&self) -> T {
        self.rcond
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }
}
