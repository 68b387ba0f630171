//! Full symmetric spectra: dense for moderate sizes, Lanczos with full
//! reorthogonalization beyond a threshold.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{EmiError, Result};
use crate::sparse::{dot, norm2, CsrMatrix};

pub const DENSE_THRESHOLD: usize = 6000;
const RESIDUAL_SAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Largest `‖M v − λ v‖ / ‖M‖_∞` over the sampled pairs.
    pub max_residual: f64,
    pub dense: bool,
}

pub fn to_dense(m: &CsrMatrix<f64>) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.nrows(), m.ncols());
    for (i, j, v) in m.iter() {
        d[(i, j)] = v;
    }
    d
}

fn sample_indices(n: usize) -> Vec<usize> {
    if n <= RESIDUAL_SAMPLES {
        return (0..n).collect();
    }
    (0..RESIDUAL_SAMPLES).map(|k| k * (n - 1) / (RESIDUAL_SAMPLES - 1)).collect()
}

pub fn eig_rearranged(m: &CsrMatrix<f64>) -> Result<Spectrum> {
    eig_rearranged_with(m, DENSE_THRESHOLD)
}

/// Sorted spectrum of a symmetric matrix, with a residual check on sampled pairs.
pub fn eig_rearranged_with(m: &CsrMatrix<f64>, dense_threshold: usize) -> Result<Spectrum> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(EmiError::DimensionMismatch("eigenvalues need a square matrix".into()));
    }
    if n == 0 {
        return Ok(Spectrum {
            values: Vec::new(),
            max_residual: 0.0,
            dense: true,
        });
    }
    let norm = m.norm_inf().max(f64::MIN_POSITIVE);
    let (values, pairs, dense) = if n <= dense_threshold {
        let eig = SymmetricEigen::new(to_dense(m));
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let pairs: Vec<(f64, Vec<f64>)> = sample_indices(n)
            .into_iter()
            .map(|s| {
                let k = order[s];
                (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect())
            })
            .collect();
        (values, pairs, true)
    } else {
        let (values, pairs) = lanczos_full(m)?;
        (values, pairs, false)
    };
    let max_residual = pairs
        .iter()
        .map(|(lambda, v)| {
            let mv = m.mul_vec(v);
            let r: Vec<f64> = mv.iter().zip(v).map(|(a, b)| a - lambda * b).collect();
            norm2(&r) / norm2(v).max(f64::MIN_POSITIVE) / norm
        })
        .fold(0.0, f64::max);
    if !(max_residual <= 1e-8) {
        return Err(EmiError::EigenNoConvergence(format!(
            "eigenpair residual {max_residual:e} exceeds 1e-8·‖M‖"
        )));
    }
    Ok(Spectrum {
        values,
        max_residual,
        dense,
    })
}

/// `n` Lanczos steps with two passes of Gram–Schmidt against all previous
/// vectors; invariant subspaces are left by restarting from a deterministic
/// vector orthogonalized against the basis.
fn lanczos_full(m: &CsrMatrix<f64>) -> Result<(Vec<f64>, Vec<(f64, Vec<f64>)>)> {
    let n = m.nrows();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut alpha = Vec::with_capacity(n);
    let mut beta: Vec<f64> = Vec::with_capacity(n);
    let scale = m.norm_inf().max(f64::MIN_POSITIVE);
    let mut seed = 0x9E37_79B9_7F4A_7C15u64;
    let mut fresh = |basis: &[Vec<f64>]| -> Option<Vec<f64>> {
        for _ in 0..8 {
            let mut v: Vec<f64> = (0..n)
                .map(|_| {
                    seed ^= seed << 13;
                    seed ^= seed >> 7;
                    seed ^= seed << 17;
                    (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
                })
                .collect();
            for _ in 0..2 {
                for q in basis {
                    let c = dot(&v, q);
                    v.iter_mut().zip(q).for_each(|(vi, qi)| *vi -= c * qi);
                }
            }
            let nv = norm2(&v);
            if nv > 1e-8 {
                v.iter_mut().for_each(|x| *x /= nv);
                return Some(v);
            }
        }
        None
    };
    let mut q = fresh(&basis).ok_or_else(|| EmiError::EigenNoConvergence("no start vector".into()))?;
    for k in 0..n {
        let mut w = m.mul_vec(&q);
        let a = dot(&w, &q);
        alpha.push(a);
        basis.push(q);
        for _ in 0..2 {
            for qj in &basis {
                let c = dot(&w, qj);
                w.iter_mut().zip(qj).for_each(|(wi, qi)| *wi -= c * qi);
            }
        }
        if k + 1 == n {
            break;
        }
        let b = norm2(&w);
        if b <= 1e-12 * scale {
            beta.push(0.0);
            q = fresh(&basis).ok_or_else(|| EmiError::EigenNoConvergence("Krylov basis exhausted early".into()))?;
        } else {
            beta.push(b);
            q = w.into_iter().map(|x| x / b).collect();
        }
    }
    let mut t = DMatrix::zeros(n, n);
    for k in 0..n {
        t[(k, k)] = alpha[k];
        if k + 1 < n {
            t[(k, k + 1)] = beta[k];
            t[(k + 1, k)] = beta[k];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let pairs = sample_indices(n)
        .into_iter()
        .map(|s| {
            let k = order[s];
            let y = eig.eigenvectors.column(k);
            let mut v = vec![0.0; n];
            for (j, qj) in basis.iter().enumerate() {
                let c = y[j];
                v.iter_mut().zip(qj).for_each(|(vi, qi)| *vi += c * qi);
            }
            (eig.eigenvalues[k], v)
        })
        .collect();
    Ok((values, pairs))
}

/// Ascending eigenvalues of the pencil `(A, P)` with `P` symmetric positive
/// definite, via `L⁻¹ A L⁻ᵀ` for the Cholesky factor `P = L Lᵀ`.
pub fn generalized_eigenvalues(a: &CsrMatrix<f64>, p: &CsrMatrix<f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n || p.nrows() != n || p.ncols() != n {
        return Err(EmiError::DimensionMismatch("pencil matrices must be square and equal".into()));
    }
    let chol = to_dense(p)
        .cholesky()
        .ok_or_else(|| EmiError::FactorizationFailed { index: 0, pivot: 0.0 })?;
    let l = chol.l();
    let mut c = to_dense(a);
    // C ← L⁻¹ C L⁻ᵀ
    if !l.solve_lower_triangular_mut(&mut c) {
        return Err(EmiError::EigenNoConvergence("triangular solve failed".into()));
    }
    let mut ct = c.transpose();
    if !l.solve_lower_triangular_mut(&mut ct) {
        return Err(EmiError::EigenNoConvergence("triangular solve failed".into()));
    }
    let sym = (&ct + ct.transpose()) * 0.5;
    let mut vals: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Number of singular values above `tol · σ_max` of a dense copy of `m`.
pub fn numerical_rank(m: &CsrMatrix<f64>, rel_tol: f64) -> usize {
    let sv = to_dense(m).singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::TripletBuilder;

    fn tridiag(n: usize) -> CsrMatrix<f64> {
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            b.push(i, i, 2.0);
            if i > 0 {
                b.push(i, i - 1, -1.0);
                b.push(i - 1, i, -1.0);
            }
        }
        b.build_symmetric()
    }

    fn closed_form(n: usize) -> Vec<f64> {
        (1..=n)
            .map(|j| 2.0 - 2.0 * (j as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
            .collect()
    }

    #[test]
    fn identity_spectrum() {
        let s = eig_rearranged(&CsrMatrix::identity(5)).unwrap();
        assert!(s.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn dense_tridiagonal_matches_closed_form() {
        let s = eig_rearranged(&tridiag(10)).unwrap();
        for (a, b) in s.values.iter().zip(closed_form(10)) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn lanczos_matches_dense() {
        let m = tridiag(120);
        let s = eig_rearranged_with(&m, 0).unwrap();
        assert!(!s.dense);
        for (a, b) in s.values.iter().zip(closed_form(120)) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        // repeated eigenvalue forces an invariant subspace and a restart
        let s = eig_rearranged_with(&CsrMatrix::identity(7), 0).unwrap();
        assert!(s.values.iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn pencil_with_identity_is_ordinary_spectrum() {
        let m = tridiag(8);
        let g = generalized_eigenvalues(&m, &CsrMatrix::identity(8)).unwrap();
        for (a, b) in g.iter().zip(closed_form(8)) {
            assert!((a - b).abs() < 1e-13);
        }
        let g = generalized_eigenvalues(&m, &m).unwrap();
        assert!(g.iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }
}
