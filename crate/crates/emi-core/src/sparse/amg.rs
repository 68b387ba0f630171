//! Smoothed-aggregation algebraic multigrid used as a one-cycle preconditioner.
//!
//! Setup: strength graph `|a_ij| ≥ θ·√(a_ii·a_jj)`, greedy three-phase
//! aggregation, piecewise-constant tentative prolongator smoothed by one damped
//! Jacobi step, Galerkin coarse operators `Pᵀ A P`. The cycle is V(1,1) with a
//! forward Gauss–Seidel pre-sweep and a backward post-sweep, which keeps the
//! preconditioner symmetric.

use crate::error::{EmiError, Result};
use crate::scalar::Real;
use crate::sparse::{CsrMatrix, DenseLu, Preconditioner, TripletBuilder};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmgOptions {
    pub strength_threshold: f64,
    pub jacobi_weight: f64,
    /// Stop coarsening once a level has at most this many unknowns.
    pub max_coarse: usize,
    pub max_levels: usize,
    /// Abort if `coarse / fine` exceeds this ratio.
    pub max_shrink: f64,
}

impl Default for AmgOptions {
    fn default() -> Self {
        Self {
            strength_threshold: 0.08,
            jacobi_weight: 2.0 / 3.0,
            max_coarse: 200,
            max_levels: 25,
            max_shrink: 0.9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AmgLevel<T> {
    pub matrix: CsrMatrix<T>,
    pub prolongation: CsrMatrix<T>,
    restriction: CsrMatrix<T>,
    pub damping: T,
    diag_pos: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct AmgHierarchy<T> {
    levels: Vec<AmgLevel<T>>,
    coarsest: CsrMatrix<T>,
    coarse_solver: DenseLu<T>,
}

const UNAGGREGATED: usize = usize::MAX;
const ISOLATED: usize = usize::MAX - 1;

/// Aggregate index per node; nodes without strong neighbours are left out
/// (`None`) and handled by the smoother alone.
pub fn aggregate<T: Real>(a: &CsrMatrix<T>, theta: f64) -> (Vec<Option<usize>>, usize) {
    let n = a.nrows();
    let diag = a.diagonal();
    let theta = T::of(theta);
    let strong: Vec<Vec<(usize, T)>> = (0..n)
        .map(|i| {
            let (cols, vals) = a.row(i);
            cols.iter()
                .zip(vals)
                .filter(|&(&j, &v)| j != i && v.abs() >= theta * (diag[i] * diag[j]).abs().sqrt())
                .map(|(&j, &v)| (j, v.abs()))
                .collect()
        })
        .collect();

    let mut agg = vec![UNAGGREGATED; n];
    for i in 0..n {
        if strong[i].is_empty() {
            agg[i] = ISOLATED;
        }
    }
    let mut count = 0;
    // phase 1: seed aggregates from untouched neighbourhoods
    for i in 0..n {
        if agg[i] != UNAGGREGATED || strong[i].iter().any(|&(j, _)| agg[j] < ISOLATED) {
            continue;
        }
        agg[i] = count;
        for &(j, _) in &strong[i] {
            if agg[j] == UNAGGREGATED {
                agg[j] = count;
            }
        }
        count += 1;
    }
    // phase 2: attach leftovers to the most strongly connected aggregate
    let snapshot = agg.clone();
    for i in 0..n {
        if snapshot[i] != UNAGGREGATED {
            continue;
        }
        let best = strong[i]
            .iter()
            .filter(|&&(j, _)| snapshot[j] < ISOLATED)
            .fold(None, |best: Option<(usize, T)>, &(j, w)| match best {
                Some((_, bw)) if bw >= w => best,
                _ => Some((j, w)),
            });
        if let Some((j, _)) = best {
            agg[i] = snapshot[j];
        }
    }
    // phase 3: whatever remains forms new aggregates
    for i in 0..n {
        if agg[i] != UNAGGREGATED {
            continue;
        }
        agg[i] = count;
        for &(j, _) in &strong[i] {
            if agg[j] == UNAGGREGATED {
                agg[j] = count;
            }
        }
        count += 1;
    }
    let out = agg.into_iter().map(|g| if g == ISOLATED { None } else { Some(g) }).collect();
    (out, count)
}

fn diagonal_positions<T: Real>(a: &CsrMatrix<T>) -> Vec<usize> {
    (0..a.nrows())
        .map(|i| {
            let (cols, _) = a.row(i);
            a.indptr()[i] + cols.binary_search(&i).unwrap_or_else(|_| panic!("AMG: missing diagonal in row {i}"))
        })
        .collect()
}

impl<T: Real> AmgHierarchy<T> {
    pub fn build(a: &CsrMatrix<T>, options: &AmgOptions) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(EmiError::DimensionMismatch("AMG needs a square matrix".into()));
        }
        if a.diagonal().iter().any(|&d| d <= T::zero()) {
            return Err(EmiError::InvalidParameter("AMG needs a positive diagonal".into()));
        }
        let omega = T::of(options.jacobi_weight);
        let mut levels = Vec::new();
        let mut current = a.clone();
        while current.nrows() > options.max_coarse && levels.len() + 1 < options.max_levels {
            let fine = current.nrows();
            let (agg, count) = aggregate(&current, options.strength_threshold);
            if count == 0 || count as f64 > options.max_shrink * fine as f64 {
                return Err(EmiError::CoarseningStagnated {
                    level: levels.len(),
                    fine,
                    coarse: count,
                });
            }
            let mut tb = TripletBuilder::new(fine, count);
            for (i, g) in agg.iter().enumerate() {
                if let Some(g) = g {
                    tb.push(i, *g, T::one());
                }
            }
            let tentative = tb.build();
            let dinv: Vec<T> = current.diagonal().iter().map(|&d| omega / d).collect();
            let ones = vec![T::one(); fine];
            let jacobi = CsrMatrix::identity(fine).lincomb(
                T::one(),
                &current.scale_rows_cols(&dinv, &ones),
                -T::one(),
            )?;
            let p = jacobi.matmul(&tentative)?;
            let r = p.transpose();
            let coarse = r.matmul(&current.matmul(&p)?)?;
            let coarse = coarse.lincomb(T::of(0.5), &coarse.transpose(), T::of(0.5))?.assume_symmetric();
            let diag_pos = diagonal_positions(&current);
            levels.push(AmgLevel {
                matrix: current,
                prolongation: p,
                restriction: r,
                damping: omega,
                diag_pos,
            });
            current = coarse;
        }
        let n = current.nrows();
        let mut dense = vec![T::zero(); n * n];
        for (i, j, v) in current.iter() {
            dense[i * n + j] = v;
        }
        let coarse_solver = DenseLu::factor(n, dense)?;
        Ok(Self {
            levels,
            coarsest: current,
            coarse_solver,
        })
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len() + 1
    }

    /// Unknowns per level, finest first.
    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels
            .iter()
            .map(|l| l.matrix.nrows())
            .chain(std::iter::once(self.coarsest.nrows()))
            .collect()
    }

    pub fn levels(&self) -> &[AmgLevel<T>] {
        &self.levels
    }

    pub fn coarsest(&self) -> &CsrMatrix<T> {
        &self.coarsest
    }

    /// Operator complexity `Σ nnz(A_l) / nnz(A_0)`.
    pub fn operator_complexity(&self) -> f64 {
        let fine = self.levels.first().map_or(self.coarsest.nnz(), |l| l.matrix.nnz()) as f64;
        let total: usize = self.levels.iter().map(|l| l.matrix.nnz()).sum::<usize>() + self.coarsest.nnz();
        total as f64 / fine
    }

    pub fn vcycle(&self, r: &[T]) -> Vec<T> {
        self.cycle(0, r)
    }

    fn cycle(&self, l: usize, b: &[T]) -> Vec<T> {
        if l == self.levels.len() {
            return self.coarse_solver.solve(b);
        }
        let level = &self.levels[l];
        let a = &level.matrix;
        let mut x = vec![T::zero(); b.len()];
        gauss_seidel(a, &level.diag_pos, &mut x, b, false);
        let ax = a.mul_vec(&x);
        let res: Vec<T> = b.iter().zip(&ax).map(|(&bi, &yi)| bi - yi).collect();
        let rc = level.restriction.mul_vec(&res);
        let xc = self.cycle(l + 1, &rc);
        let corr = level.prolongation.mul_vec(&xc);
        for (xi, ci) in x.iter_mut().zip(&corr) {
            *xi += *ci;
        }
        gauss_seidel(a, &level.diag_pos, &mut x, b, true);
        x
    }
}

fn gauss_seidel<T: Real>(a: &CsrMatrix<T>, diag_pos: &[usize], x: &mut [T], b: &[T], backward: bool) {
    let n = a.nrows();
    let (ptr, idx, val) = (a.indptr(), a.indices(), a.values());
    let mut sweep = |i: usize| {
        let mut s = b[i];
        for k in ptr[i]..ptr[i + 1] {
            if k != diag_pos[i] {
                s -= val[k] * x[idx[k]];
            }
        }
        x[i] = s / val[diag_pos[i]];
    };
    if backward {
        (0..n).rev().for_each(&mut sweep);
    } else {
        (0..n).for_each(&mut sweep);
    }
}

impl<T: Real> Preconditioner<T> for AmgHierarchy<T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        z.copy_from_slice(&self.vcycle(r));
    }
}
