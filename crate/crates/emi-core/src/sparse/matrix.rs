use std::ops::Range;

use crate::error::{EmiError, Result};
use crate::scalar::{Real, Scalar};

/// Compressed sparse row matrix.
///
/// Column indices are strictly increasing within each row and exact zeros are
/// never stored. `symmetric` is a structural promise made by the producer
/// (assembly, Galerkin products); [`CsrMatrix::is_exactly_symmetric`] checks it.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
    symmetric: bool,
}

/// Accumulates `(row, col, value)` contributions; duplicates are summed in
/// insertion order so symmetric element loops yield bit-identical pairs.
#[derive(Debug, Clone)]
pub struct TripletBuilder<T> {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Scalar> TripletBuilder<T> {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: T) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    /// Adds every stored entry of `block` shifted by `(row0, col0)`, scaled by `alpha`.
    pub fn push_block(&mut self, row0: usize, col0: usize, block: &CsrMatrix<T>, alpha: T) {
        for (i, j, v) in block.iter() {
            self.push(row0 + i, col0 + j, alpha * v);
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn build(self) -> CsrMatrix<T> {
        CsrMatrix::from_triplets(self.nrows, self.ncols, self.entries)
    }

    pub fn build_symmetric(self) -> CsrMatrix<T> {
        let mut m = self.build();
        m.symmetric = m.nrows == m.ncols;
        m
    }
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn new(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self> {
        if indptr.len() != nrows + 1 || indices.len() != values.len() || indptr[nrows] != values.len() {
            return Err(EmiError::DimensionMismatch("inconsistent CSR arrays".into()));
        }
        for i in 0..nrows {
            if indptr[i] > indptr[i + 1] {
                return Err(EmiError::DimensionMismatch(format!("row pointer decreases at row {i}")));
            }
            let cols = &indices[indptr[i]..indptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.iter().any(|&c| c >= ncols) {
                return Err(EmiError::DimensionMismatch(format!(
                    "row {i}: column indices must be strictly increasing and < {ncols}"
                )));
            }
        }
        Ok(Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
            symmetric: false,
        })
    }

    pub fn from_triplets(nrows: usize, ncols: usize, mut entries: Vec<(usize, usize, T)>) -> Self {
        // stable: duplicates keep insertion order
        entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut values: Vec<T> = Vec::with_capacity(entries.len());
        let mut k = 0;
        while k < entries.len() {
            let (i, j, mut acc) = entries[k];
            k += 1;
            while k < entries.len() && entries[k].0 == i && entries[k].1 == j {
                acc = acc + entries[k].2;
                k += 1;
            }
            if !acc.is_zero() {
                indices.push(j);
                values.push(acc);
                indptr[i + 1] += 1;
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
            symmetric: false,
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
            symmetric: nrows == ncols,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal_matrix(&vec![T::one(); n])
    }

    pub fn diagonal_matrix(diag: &[T]) -> Self {
        let n = diag.len();
        let entries = diag.iter().enumerate().map(|(i, &d)| (i, i, d)).collect();
        let mut m = Self::from_triplets(n, n, entries);
        m.symmetric = true;
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Declares the matrix symmetric; call only when the producer guarantees it.
    pub fn assume_symmetric(mut self) -> Self {
        self.symmetric = self.nrows == self.ncols;
        self
    }

    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`
    pub fn spmv(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = T::zero();
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc = acc + self.values[k] * x[self.indices[k]];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.nrows];
        self.spmv(x, &mut y);
        y
    }

    /// `y = Aᵀ x`
    pub fn mul_vec_transpose(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![T::zero(); self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            for k in self.indptr[i]..self.indptr[i + 1] {
                y[self.indices[k]] = y[self.indices[k]] + self.values[k] * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut indices = vec![0usize; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[k];
                let dst = next[j];
                indices[dst] = i;
                values[dst] = self.values[k];
                next[j] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr: counts,
            indices,
            values,
            symmetric: self.symmetric,
        }
    }

    /// Sparse product `self * other` (row-wise Gustavson).
    pub fn matmul(&self, other: &CsrMatrix<T>) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(EmiError::DimensionMismatch(format!(
                "matmul {}x{} * {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut marker = vec![usize::MAX; other.ncols];
        let mut acc = vec![T::zero(); other.ncols];
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut row_cols: Vec<usize> = Vec::new();
        for i in 0..self.nrows {
            row_cols.clear();
            let (acols, avals) = self.row(i);
            for (&k, &a) in acols.iter().zip(avals) {
                let (bcols, bvals) = other.row(k);
                for (&j, &b) in bcols.iter().zip(bvals) {
                    if marker[j] != i {
                        marker[j] = i;
                        acc[j] = T::zero();
                        row_cols.push(j);
                    }
                    acc[j] = acc[j] + a * b;
                }
            }
            row_cols.sort_unstable();
            for &j in &row_cols {
                if !acc[j].is_zero() {
                    indices.push(j);
                    values.push(acc[j]);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            nrows: self.nrows,
            ncols: other.ncols,
            indptr,
            indices,
            values,
            symmetric: false,
        })
    }

    /// `alpha * self + beta * other`
    pub fn lincomb(&self, alpha: T, other: &CsrMatrix<T>, beta: T) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(EmiError::DimensionMismatch("lincomb shapes differ".into()));
        }
        let mut b = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        for i in 0..self.nrows {
            let (c1, v1) = self.row(i);
            let (c2, v2) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < c1.len() || q < c2.len() {
                if q == c2.len() || (p < c1.len() && c1[p] < c2[q]) {
                    b.push(i, c1[p], alpha * v1[p]);
                    p += 1;
                } else if p == c1.len() || c2[q] < c1[p] {
                    b.push(i, c2[q], beta * v2[q]);
                    q += 1;
                } else {
                    b.push(i, c1[p], alpha * v1[p] + beta * v2[q]);
                    p += 1;
                    q += 1;
                }
            }
        }
        let mut m = b.build();
        m.symmetric = self.symmetric && other.symmetric;
        Ok(m)
    }

    pub fn scale(&self, alpha: T) -> Self {
        if alpha.is_zero() {
            return Self::zeros(self.nrows, self.ncols);
        }
        let mut m = self.clone();
        for v in &mut m.values {
            *v = *v * alpha;
        }
        m
    }

    /// Two-sided diagonal scaling `diag(l) A diag(r)`.
    pub fn scale_rows_cols(&self, left: &[T], right: &[T]) -> Self {
        assert_eq!(left.len(), self.nrows);
        assert_eq!(right.len(), self.ncols);
        let entries = self.iter().map(|(i, j, v)| (i, j, left[i] * v * right[j])).collect();
        let mut m = Self::from_triplets(self.nrows, self.ncols, entries);
        m.symmetric = self.symmetric && left == right;
        m
    }

    /// Copy of the `rows x cols` window with local indices.
    pub fn submatrix(&self, rows: Range<usize>, cols: Range<usize>) -> Self {
        let mut b = TripletBuilder::new(rows.len(), cols.len());
        for i in rows.clone() {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if cols.contains(&j) {
                    b.push(i - rows.start, j - cols.start, x);
                }
            }
        }
        let mut m = b.build();
        m.symmetric = self.symmetric && rows == cols;
        m
    }

    /// Exact structural and numerical symmetry test.
    pub fn is_exactly_symmetric(&self) -> bool {
        self.nrows == self.ncols && self.iter().all(|(i, j, v)| self.get(j, i) == v)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> T {
        (0..self.nrows)
            .map(|i| self.row(i).1.iter().fold(T::zero(), |s, v| s + v.abs()))
            .fold(T::zero(), |m, s| if s > m { s } else { m })
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |m, v| if v.abs() > m { v.abs() } else { m })
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> CsrMatrix<U> {
        let entries = self.iter().map(|(i, j, v)| (i, j, f(v))).collect();
        let mut m = CsrMatrix::from_triplets(self.nrows, self.ncols, entries);
        m.symmetric = self.symmetric;
        m
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.ncols]; self.nrows];
        for (i, j, v) in self.iter() {
            d[i][j] = v;
        }
        d
    }
}

impl<T: Real> CsrMatrix<T> {
    /// `‖self - other‖_∞` over all entries.
    pub fn max_abs_diff(&self, other: &CsrMatrix<T>) -> Result<T> {
        Ok(self.lincomb(T::one(), other, -T::one())?.max_abs())
    }
}

pub fn dot<T: Real>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).map(|(&a, &b)| a * b).sum()
}

pub fn norm2<T: Real>(x: &[T]) -> T {
    dot(x, x).sqrt()
}
