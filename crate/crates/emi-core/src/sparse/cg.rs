use std::time::Instant;

use crate::scalar::Real;
use crate::sparse::{dot, norm2, CsrMatrix};

/// Action `z = M⁻¹ r` of a symmetric positive definite preconditioner.
pub trait Preconditioner<T> {
    fn apply(&self, r: &[T], z: &mut [T]);
}

/// `M = I`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl<T: Copy> Preconditioner<T> for Identity {
    fn apply(&self, r: &[T], z: &mut [T]) {
        z.copy_from_slice(r);
    }
}

impl<T, P: Preconditioner<T> + ?Sized> Preconditioner<T> for Box<P> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        (**self).apply(r, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PreconditionerKind {
    None,
    Ilu0,
    /// ILU(0) applied independently on each subdomain block (block Jacobi).
    BlockIlu0,
    /// Exact block-diagonal `τ·diag(A_i + ε·M̃_i)`.
    BlockDiag { eps: f64 },
    /// One smoothed-aggregation V-cycle.
    Amg1,
}

impl PreconditionerKind {
    pub fn label(&self) -> &'static str {
        match self {
            PreconditionerKind::None => "CG",
            PreconditionerKind::Ilu0 => "ILU-CG",
            PreconditionerKind::BlockIlu0 => "BJILU-CG",
            PreconditionerKind::BlockDiag { .. } => "Peps-CG",
            PreconditionerKind::Amg1 => "AMG1-CG",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative residual target `‖b − Ax‖₂ / ‖b‖₂`.
    pub tol: f64,
    pub max_iter: usize,
    pub preconditioner: PreconditionerKind,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 20_000,
            preconditioner: PreconditionerKind::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    /// `pᵀAp ≤ 0` at the given iteration: the operator is not SPD on the Krylov space.
    Breakdown { iteration: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_rel_residual: f64,
    pub wall_time: f64,
    /// Recursive relative residual after each iteration (index 0 is the start).
    pub residual_history: Vec<f64>,
    pub status: SolveStatus,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

/// Preconditioned conjugate gradients from a zero initial guess.
pub fn cg_solve<T: Real>(
    a: &CsrMatrix<T>,
    b: &[T],
    config: &SolverConfig,
    prec: &dyn Preconditioner<T>,
) -> (Vec<T>, SolveReport) {
    cg_solve_observed(a, b, config, prec, |_, _| {})
}

/// As [`cg_solve`], calling `observer(iteration, x)` after every update.
pub fn cg_solve_observed<T: Real>(
    a: &CsrMatrix<T>,
    b: &[T],
    config: &SolverConfig,
    prec: &dyn Preconditioner<T>,
    mut observer: impl FnMut(usize, &[T]),
) -> (Vec<T>, SolveReport) {
    let start = Instant::now();
    let n = b.len();
    let mut x = vec![T::zero(); n];
    let bnorm = norm2(b);
    if bnorm.is_zero() {
        return (
            x,
            SolveReport {
                iterations: 0,
                final_rel_residual: 0.0,
                wall_time: start.elapsed().as_secs_f64(),
                residual_history: vec![0.0],
                status: SolveStatus::Converged,
            },
        );
    }
    let tol = T::of(config.tol);
    let mut r = b.to_vec();
    let mut z = vec![T::zero(); n];
    prec.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![T::zero(); n];
    let mut history = vec![1.0];
    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;

    for k in 1..=config.max_iter {
        a.spmv(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if curvature <= T::zero() || !curvature.is_finite() {
            status = SolveStatus::Breakdown { iteration: k };
            break;
        }
        let alpha = rz / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations = k;
        observer(k, &x);
        let rel = norm2(&r) / bnorm;
        history.push(rel.as_f64());
        if rel <= tol {
            status = SolveStatus::Converged;
            break;
        }
        prec.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    let ax = a.mul_vec(&x);
    let true_res: Vec<T> = b.iter().zip(&ax).map(|(&bi, &yi)| bi - yi).collect();
    let report = SolveReport {
        iterations,
        final_rel_residual: (norm2(&true_res) / bnorm).as_f64(),
        wall_time: start.elapsed().as_secs_f64(),
        residual_history: history,
        status,
    };
    (x, report)
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

    #[test]
    fn identity_converges_in_one_step() {
        let a = CsrMatrix::<f64>::identity(7);
        let b: Vec<f64> = (0..7).map(|i| i as f64 - 2.5).collect();
        let (x, rep) = cg_solve(&a, &b, &SolverConfig::default(), &Identity);
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged());
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = tridiag(5);
        let (x, rep) = cg_solve(&a, &[0.0; 5], &SolverConfig::default(), &Identity);
        assert_eq!(rep.iterations, 0);
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tridiagonal_converges_within_n_steps() {
        let a = tridiag(40);
        let b = vec![1.0; 40];
        let (x, rep) = cg_solve(&a, &b, &SolverConfig::default(), &Identity);
        assert!(rep.converged());
        assert!(rep.iterations <= 40);
        assert!(rep.final_rel_residual <= 1e-9);
        let r = a.mul_vec(&x);
        assert!((r[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn indefinite_matrix_reports_breakdown() {
        let a = CsrMatrix::diagonal_matrix(&[1.0, -1.0]);
        let (_, rep) = cg_solve(&a, &[1.0, 1.0], &SolverConfig::default(), &Identity);
        assert_eq!(rep.status, SolveStatus::Breakdown { iteration: 1 });
    }

    #[test]
    fn iteration_cap_reported() {
        let a = tridiag(50);
        let cfg = SolverConfig {
            max_iter: 3,
            ..Default::default()
        };
        let (_, rep) = cg_solve(&a, &vec![1.0; 50], &cfg, &Identity);
        assert_eq!(rep.status, SolveStatus::MaxIterations);
        assert_eq!(rep.iterations, 3);
    }
}
