use std::ops::Range;

use crate::scalar::Real;
use crate::sparse::{CsrMatrix, Preconditioner, TripletBuilder};

/// Zero fill-in incomplete LU: `L` (unit lower) and `U` share the pattern of `A`.
#[derive(Debug, Clone)]
pub struct Ilu0<T> {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
    diag_pos: Vec<usize>,
    shifts: Vec<(usize, T)>,
}

impl<T: Real> Ilu0<T> {
    /// Natural (given) ordering. A zero or vanishing pivot is replaced by a
    /// small shift and recorded in [`Ilu0::shifts`].
    pub fn factor(a: &CsrMatrix<T>) -> Self {
        let n = a.nrows();
        // ensure every diagonal is structurally present
        let a = if (0..n).all(|i| a.row(i).0.binary_search(&i).is_ok()) {
            a.clone()
        } else {
            let mut b = TripletBuilder::new(n, n);
            b.push_block(0, 0, a, T::one());
            let mut m = b.build();
            let mut extra = TripletBuilder::new(n, n);
            for i in 0..n {
                if m.row(i).0.binary_search(&i).is_err() {
                    extra.push(i, i, T::min_positive_value());
                }
            }
            m = m.lincomb(T::one(), &extra.build(), T::one()).expect("same shape");
            m
        };
        let indptr = a.indptr().to_vec();
        let indices = a.indices().to_vec();
        let mut values = a.values().to_vec();
        let diag_pos: Vec<usize> = (0..n)
            .map(|i| indptr[i] + indices[indptr[i]..indptr[i + 1]].binary_search(&i).expect("diagonal present"))
            .collect();
        let scale = (0..n).map(|i| values[diag_pos[i]].abs()).fold(T::zero(), T::max);
        let floor = if scale > T::zero() { scale * T::of(1e-10) } else { T::of(1e-10) };
        let mut shifts = Vec::new();
        let mut pos = vec![usize::MAX; n];

        for i in 0..n {
            let (lo, hi) = (indptr[i], indptr[i + 1]);
            for k in lo..hi {
                pos[indices[k]] = k;
            }
            for kk in lo..diag_pos[i] {
                let k = indices[kk];
                let factor = values[kk] / values[diag_pos[k]];
                values[kk] = factor;
                for jj in diag_pos[k] + 1..indptr[k + 1] {
                    let p = pos[indices[jj]];
                    if p != usize::MAX {
                        let u = values[jj];
                        values[p] -= factor * u;
                    }
                }
            }
            let d = values[diag_pos[i]];
            if !d.is_finite() || d.abs() < floor {
                let shifted = if d < T::zero() { -floor } else { floor };
                shifts.push((i, shifted - d));
                values[diag_pos[i]] = shifted;
            }
            for k in lo..hi {
                pos[indices[k]] = usize::MAX;
            }
        }
        Self {
            n,
            indptr,
            indices,
            values,
            diag_pos,
            shifts,
        }
    }

    /// Rows whose pivot had to be shifted, with the added amount.
    pub fn shifts(&self) -> &[(usize, T)] {
        &self.shifts
    }

    pub fn lower_upper_product(&self) -> CsrMatrix<T> {
        let l = {
            let mut b = TripletBuilder::new(self.n, self.n);
            for i in 0..self.n {
                b.push(i, i, T::one());
                for k in self.indptr[i]..self.diag_pos[i] {
                    b.push(i, self.indices[k], self.values[k]);
                }
            }
            b.build()
        };
        let u = {
            let mut b = TripletBuilder::new(self.n, self.n);
            for i in 0..self.n {
                for k in self.diag_pos[i]..self.indptr[i + 1] {
                    b.push(i, self.indices[k], self.values[k]);
                }
            }
            b.build()
        };
        l.matmul(&u).expect("square factors")
    }
}

impl<T: Real> Preconditioner<T> for Ilu0<T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        for i in 0..self.n {
            let mut s = r[i];
            for k in self.indptr[i]..self.diag_pos[i] {
                s -= self.values[k] * z[self.indices[k]];
            }
            z[i] = s;
        }
        for i in (0..self.n).rev() {
            let mut s = z[i];
            for k in self.diag_pos[i] + 1..self.indptr[i + 1] {
                s -= self.values[k] * z[self.indices[k]];
            }
            z[i] = s / self.values[self.diag_pos[i]];
        }
    }
}

/// Block Jacobi with ILU(0) on each diagonal block.
#[derive(Debug, Clone)]
pub struct BlockIlu0<T> {
    blocks: Vec<(Range<usize>, Ilu0<T>)>,
}

impl<T: Real> BlockIlu0<T> {
    pub fn factor(a: &CsrMatrix<T>, ranges: &[Range<usize>]) -> Self {
        let blocks = ranges
            .iter()
            .map(|r| (r.clone(), Ilu0::factor(&a.submatrix(r.clone(), r.clone()))))
            .collect();
        Self { blocks }
    }
}

impl<T: Real> Preconditioner<T> for BlockIlu0<T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        for (range, ilu) in &self.blocks {
            ilu.apply(&r[range.clone()], &mut z[range.clone()]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> CsrMatrix<f64> {
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            b.push(i, i, 2.0 + 0.1 * i as f64);
            if i > 0 {
                b.push(i, i - 1, -1.0);
                b.push(i - 1, i, -1.0);
            }
        }
        b.build_symmetric()
    }

    #[test]
    fn tridiagonal_is_factored_exactly() {
        let a = tridiag(20);
        let ilu = Ilu0::factor(&a);
        assert!(ilu.shifts().is_empty());
        let lu = ilu.lower_upper_product();
        assert!(lu.max_abs_diff(&a).unwrap() < 1e-13);
        let x: Vec<f64> = (0..20).map(|i| (i as f64).cos()).collect();
        let b = a.mul_vec(&x);
        let mut z = vec![0.0; 20];
        ilu.apply(&b, &mut z);
        for (zi, xi) in z.iter().zip(&x) {
            assert!((zi - xi).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_pivot_is_shifted_and_flagged() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 0.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        let ilu = Ilu0::factor(&a);
        assert_eq!(ilu.shifts().len(), 1);
        assert_eq!(ilu.shifts()[0].0, 0);
        let mut z = [0.0; 2];
        ilu.apply(&[1.0, 1.0], &mut z);
        assert!(z.iter().all(|v: &f64| v.is_finite()));
    }

    #[test]
    fn block_version_ignores_coupling() {
        let a = tridiag(6);
        let bj = BlockIlu0::factor(&a, &[0..3, 3..6]);
        let mut z = vec![0.0; 6];
        bj.apply(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], &mut z);
        assert!(z[3..].iter().all(|&v| v == 0.0));
    }
}
