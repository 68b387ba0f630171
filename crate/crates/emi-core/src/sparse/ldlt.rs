//! Envelope (skyline) LDLᵀ factorization for sparse symmetric matrices.
//!
//! Rows are renumbered with reverse Cuthill–McKee first, which keeps the
//! profile of structured-grid operators at O(grid width) per row. No pivoting
//! is performed, so the factorization is intended for symmetric positive
//! definite (or at least strongly nonsingular) operators.

use std::collections::VecDeque;

use crate::error::{EmiError, Result};
use crate::scalar::Real;
use crate::sparse::CsrMatrix;

/// Reverse Cuthill–McKee ordering of the symmetrized pattern of `a`.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee<T: Real>(a: &CsrMatrix<T>) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in a.iter() {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for nb in &mut adj {
        nb.sort_unstable();
        nb.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut level = vec![usize::MAX; n];
    let mut seeds: Vec<usize> = (0..n).collect();
    seeds.sort_by_key(|&v| (degree[v], v));

    for &seed in &seeds {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(seed, &adj, &degree, &mut level);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(start: usize, adj: &[Vec<usize>], level: &mut [usize]) -> Vec<usize> {
    let mut reached = vec![start];
    level[start] = 0;
    let mut head = 0;
    while head < reached.len() {
        let v = reached[head];
        head += 1;
        for &w in &adj[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                reached.push(w);
            }
        }
    }
    reached
}

fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], degree: &[usize], level: &mut [usize]) -> usize {
    let mut node = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let reached = bfs_levels(node, adj, level);
        let depth = reached.iter().map(|&v| level[v]).max().unwrap_or(0);
        let candidate = reached
            .iter()
            .copied()
            .filter(|&v| level[v] == depth)
            .min_by_key(|&v| (degree[v], v))
            .unwrap_or(node);
        for &v in &reached {
            level[v] = usize::MAX;
        }
        if depth <= ecc {
            break;
        }
        ecc = depth;
        node = candidate;
    }
    node
}

#[derive(Debug, Clone)]
pub struct SparseLdlt<T> {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    row_ptr: Vec<usize>,
    lower: Vec<T>,
    diag: Vec<T>,
}

impl<T: Real> SparseLdlt<T> {
    /// Factorizes with a reverse Cuthill–McKee renumbering.
    pub fn factor(a: &CsrMatrix<T>) -> Result<Self> {
        let perm = reverse_cuthill_mckee(a);
        Self::factor_with_ordering(a, perm)
    }

    pub fn factor_with_ordering(a: &CsrMatrix<T>, perm: Vec<usize>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || perm.len() != n {
            return Err(EmiError::DimensionMismatch("LDLt needs a square matrix and a full ordering".into()));
        }
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (i, j, _) in a.iter() {
            let (p, q) = (inv[i], inv[j]);
            let (hi, lo) = if p >= q { (p, q) } else { (q, p) };
            first[hi] = first[hi].min(lo);
        }
        let mut row_ptr = vec![0usize; n + 1];
        for i in 0..n {
            row_ptr[i + 1] = row_ptr[i] + (i - first[i]);
        }
        let mut lower = vec![T::zero(); row_ptr[n]];
        let mut diag = vec![T::zero(); n];
        let mut scale = T::zero();
        for (i, j, v) in a.iter() {
            let (p, q) = (inv[i], inv[j]);
            if p == q {
                diag[p] = v;
                scale = scale.max(v.abs());
            } else if q < p {
                lower[row_ptr[p] + q - first[p]] = v;
            }
        }
        let tiny = scale * T::epsilon() * T::of(16.0);

        for i in 0..n {
            let fi = first[i];
            let base_i = row_ptr[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let base_j = row_ptr[j];
                let mut s = lower[base_i + j - fi];
                for k in k0..j {
                    s -= lower[base_i + k - fi] * lower[base_j + k - fj];
                }
                lower[base_i + j - fi] = s;
            }
            let mut d = diag[i];
            for j in fi..i {
                let u = lower[base_i + j - fi];
                let l = u / diag[j];
                d -= u * l;
                lower[base_i + j - fi] = l;
            }
            if !d.is_finite() || d.abs() <= tiny {
                return Err(EmiError::FactorizationFailed {
                    index: perm[i],
                    pivot: d.as_f64(),
                });
            }
            diag[i] = d;
        }
        Ok(Self {
            n,
            perm,
            first,
            row_ptr,
            lower,
            diag,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Stored entries of the unit lower factor.
    pub fn envelope_size(&self) -> usize {
        self.lower.len()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.diag.iter().all(|&d| d > T::zero())
    }

    /// Pivot magnitudes (min, max).
    pub fn pivot_range(&self) -> (T, T) {
        self.diag.iter().fold((T::infinity(), T::zero()), |(lo, hi), d| {
            (lo.min(d.abs()), hi.max(d.abs()))
        })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = vec![T::zero(); self.n];
        self.solve_into(b, &mut x);
        x
    }

    pub fn solve_into(&self, b: &[T], out: &mut [T]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut z: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.lower[self.row_ptr[i]..self.row_ptr[i + 1]];
            let mut s = z[i];
            for (k, &l) in row.iter().enumerate() {
                s -= l * z[fi + k];
            }
            z[i] = s;
        }
        for (zi, &d) in z.iter_mut().zip(&self.diag) {
            *zi /= d;
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let xi = z[i];
            let row = &self.lower[self.row_ptr[i]..self.row_ptr[i + 1]];
            for (k, &l) in row.iter().enumerate() {
                z[fi + k] -= l * xi;
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = z[new];
        }
    }
}
