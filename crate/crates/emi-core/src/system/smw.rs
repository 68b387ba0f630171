//! Low-rank splittings of the arrowhead system and the Woodbury solves built
//! on them.
//!
//! With `D` the block diagonal and `U V = 𝒜 − D`,
//! `(D + U V)⁻¹ = D⁻¹ − D⁻¹ U (I + V D⁻¹ U)⁻¹ V D⁻¹`.
//! The augmented splitting adds one unit entry per cell block to `D`
//! (`D̃ = D + E`) and compensates with extra columns `−e_{1,i}` in `Ũ` and rows
//! `e_{1,i}ᵀ` in `Ṽ`, so that `D̃ + Ũ Ṽ = 𝒜` again.

use std::ops::Range;

use crate::error::{EmiError, Result};
use crate::meshgen::Model;
use crate::scalar::{Real, Scalar};
use crate::sparse::{CsrMatrix, DenseLu, TripletBuilder};
use crate::system::{BlockDiagSolver, BlockSystem};

#[derive(Debug, Clone)]
pub struct ArrowheadFactors<T> {
    pub d: CsrMatrix<T>,
    pub u: CsrMatrix<T>,
    pub v: CsrMatrix<T>,
    pub e: CsrMatrix<T>,
    pub u_aug: CsrMatrix<T>,
    pub v_aug: CsrMatrix<T>,
    ranges: Vec<Range<usize>>,
}

/// Result of a Woodbury solve.
#[derive(Debug, Clone)]
pub struct SmwSolution<T> {
    pub x: Vec<T>,
    /// Order of the dense capacitance system.
    pub capacitance_size: usize,
    /// `min |pivot| / max |pivot|` of its LU factorization.
    pub pivot_ratio: f64,
}

impl<T: Scalar> ArrowheadFactors<T> {
    pub fn build(system: &BlockSystem<T>) -> Result<Self> {
        if system.model != Model::A || !system.is_arrowhead() {
            return Err(EmiError::NotArrowhead(match system.model {
                Model::A => 'A',
                Model::B => 'B',
            }));
        }
        let n = system.n();
        let ranges = system.block_ranges.clone();
        let n0 = ranges[0].len();
        let cells = ranges.len() - 1;
        let d = system.block_diagonal();

        let mut u = TripletBuilder::new(n, 2 * n0);
        let mut v = TripletBuilder::new(2 * n0, n);
        for k in 0..n0 {
            u.push(k, k, T::one());
            v.push(n0 + k, k, T::one());
        }
        for (i, r) in ranges.iter().enumerate().skip(1) {
            u.push_block(r.start, n0, &system.block(i, 0), T::one());
            v.push_block(0, r.start, &system.block(0, i), T::one());
        }
        let (u, v) = (u.build(), v.build());

        let mut e = TripletBuilder::new(n, n);
        let mut ue = TripletBuilder::new(n, 2 * n0 + cells);
        let mut ve = TripletBuilder::new(2 * n0 + cells, n);
        ue.push_block(0, 0, &u, T::one());
        ve.push_block(0, 0, &v, T::one());
        for (c, r) in ranges.iter().enumerate().skip(1) {
            e.push(r.start, r.start, T::one());
            ue.push(r.start, 2 * n0 + c - 1, -T::one());
            ve.push(2 * n0 + c - 1, r.start, T::one());
        }
        Ok(Self {
            d,
            u,
            v,
            e: e.build_symmetric(),
            u_aug: ue.build(),
            v_aug: ve.build(),
            ranges,
        })
    }

    /// `2·n₀`.
    pub fn width(&self) -> usize {
        self.u.ncols()
    }

    /// `2·n₀ + N`.
    pub fn augmented_width(&self) -> usize {
        self.u_aug.ncols()
    }

    /// `D + U V`.
    pub fn reconstruct(&self) -> Result<CsrMatrix<T>> {
        self.d.lincomb(T::one(), &self.u.matmul(&self.v)?, T::one())
    }

    /// `D̃ + Ũ Ṽ`.
    pub fn reconstruct_augmented(&self) -> Result<CsrMatrix<T>> {
        let dt = self.d.lincomb(T::one(), &self.e, T::one())?;
        dt.lincomb(T::one(), &self.u_aug.matmul(&self.v_aug)?, T::one())
    }

}

impl<T: Real> ArrowheadFactors<T> {
    /// Solves `(D + ε I + U V) x = rhs`.
    pub fn solve_smw_eps(&self, rhs: &[T], eps: f64) -> Result<SmwSolution<T>> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(EmiError::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        let shift = CsrMatrix::identity(self.d.nrows()).scale(T::of(eps));
        let d_eps = self.d.lincomb(T::one(), &shift, T::one())?;
        let solver = BlockDiagSolver::from_matrix(&d_eps, &self.ranges)?;
        woodbury(&solver, &self.u, &self.v, rhs, eps)
    }

    /// Solves `𝒜 x = rhs` through the augmented splitting.
    pub fn solve_smw_exact(&self, rhs: &[T]) -> Result<SmwSolution<T>> {
        let dt = self.d.lincomb(T::one(), &self.e, T::one())?;
        let solver = BlockDiagSolver::from_matrix(&dt, &self.ranges)?;
        woodbury(&solver, &self.u_aug, &self.v_aug, rhs, 0.0)
    }
}

fn woodbury<T: Real>(
    d: &BlockDiagSolver<T>,
    u: &CsrMatrix<T>,
    v: &CsrMatrix<T>,
    rhs: &[T],
    eps: f64,
) -> Result<SmwSolution<T>> {
    let n = d.size();
    if rhs.len() != n {
        return Err(EmiError::DimensionMismatch(format!("rhs has {} entries, system {n}", rhs.len())));
    }
    let k = u.ncols();
    let ut = u.transpose();
    // Y = D⁻¹ U, stored column by column
    let y: Vec<Vec<T>> = (0..k)
        .map(|c| {
            let mut col = vec![T::zero(); n];
            let (rows, vals) = ut.row(c);
            for (&r, &val) in rows.iter().zip(vals) {
                col[r] = val;
            }
            d.solve(&col)
        })
        .collect();
    let mut cap = vec![T::zero(); k * k];
    for (c, yc) in y.iter().enumerate() {
        let vy = v.mul_vec(yc);
        for (r, val) in vy.into_iter().enumerate() {
            cap[r * k + c] = val;
        }
        cap[c * k + c] += T::one();
    }
    let lu = DenseLu::factor(k, cap).map_err(|_| EmiError::SingularCapacitance { eps, rcond: 0.0 })?;
    let pivot_ratio = lu.pivot_ratio().as_f64();
    if pivot_ratio < 1e3 * f64::EPSILON {
        return Err(EmiError::SingularCapacitance { eps, rcond: pivot_ratio });
    }
    let x0 = d.solve(rhs);
    let z = lu.solve(&v.mul_vec(&x0));
    let mut x = x0;
    for (zc, yc) in z.iter().zip(&y) {
        if !zc.is_zero() {
            for (xi, &yi) in x.iter_mut().zip(yc) {
                *xi -= *zc * yi;
            }
        }
    }
    Ok(SmwSolution {
        x,
        capacitance_size: k,
        pivot_ratio,
    })
}
