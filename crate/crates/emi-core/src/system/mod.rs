//! The global block system `𝒜 u = f`, nullspace pinning, diagonal scaling and
//! the solver/preconditioner plumbing built on top of it.

mod smw;

pub use smw::{ArrowheadFactors, SmwSolution};

use std::ops::Range;

use crate::error::{EmiError, Result};
use crate::fem::{OperatorSet, ProblemConfig};
use crate::meshgen::Model;
use crate::scalar::{Real, Scalar};
use crate::sparse::{
    cg_solve, AmgHierarchy, AmgOptions, BlockIlu0, CsrMatrix, Identity, Ilu0, Preconditioner,
    PreconditionerKind, SolveReport, SolverConfig, SparseLdlt, TripletBuilder,
};

#[derive(Debug, Clone)]
pub struct BlockSystem<T> {
    pub matrix: CsrMatrix<T>,
    pub rhs: Vec<T>,
    pub block_ranges: Vec<Range<usize>>,
    pub config: ProblemConfig,
    pub model: Model,
    /// Global dof of the extracellular vertex at the origin.
    pub anchor: usize,
    /// Dof whose row and column were replaced by the identity, if any.
    pub pinned: Option<usize>,
}

/// `D_i = τ_i·A_i + M_i` on the diagonal, `B_ij` off the diagonal.
pub fn build_system<T: Scalar>(ops: &OperatorSet<T>, config: &ProblemConfig, model: Model) -> Result<BlockSystem<T>> {
    let ns = ops.num_subdomains();
    config.validate(ns)?;
    if ops.stiffness.len() != ns || ops.membrane_mass.len() != ns || ops.rhs.len() != ns {
        return Err(EmiError::DimensionMismatch("operator set is incomplete".into()));
    }
    let ranges = ops.block_ranges();
    let n = ranges.last().map_or(0, |r| r.end);
    for (i, r) in ranges.iter().enumerate() {
        let len = r.len();
        for (name, m) in [("A", &ops.stiffness[i]), ("M", &ops.membrane_mass[i])] {
            if m.nrows() != len || m.ncols() != len {
                return Err(EmiError::DimensionMismatch(format!(
                    "{name}[{i}] is {}x{}, block has {len} dofs",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        if ops.rhs[i].len() != len {
            return Err(EmiError::DimensionMismatch(format!("rhs[{i}] has wrong length")));
        }
    }
    for (&(i, j), b) in &ops.coupling {
        if i >= ns || j >= ns || b.nrows() != ranges[i].len() || b.ncols() != ranges[j].len() {
            return Err(EmiError::DimensionMismatch(format!("B[({i},{j})] does not match the blocks")));
        }
    }
    let nnz: usize = ops.stiffness.iter().map(CsrMatrix::nnz).sum::<usize>()
        + ops.membrane_mass.iter().map(CsrMatrix::nnz).sum::<usize>()
        + ops.coupling.values().map(CsrMatrix::nnz).sum::<usize>();
    let mut tb = TripletBuilder::with_capacity(n, n, nnz);
    for (i, r) in ranges.iter().enumerate() {
        let tau_i = T::from_f64(config.tau_i(i)).ok_or_else(|| EmiError::InvalidParameter("tau not representable".into()))?;
        tb.push_block(r.start, r.start, &ops.stiffness[i], tau_i);
        tb.push_block(r.start, r.start, &ops.membrane_mass[i], T::one());
    }
    for (&(i, j), b) in &ops.coupling {
        tb.push_block(ranges[i].start, ranges[j].start, b, T::one());
    }
    Ok(BlockSystem {
        matrix: tb.build_symmetric(),
        rhs: ops.rhs.concat(),
        block_ranges: ranges,
        config: config.clone(),
        model,
        anchor: ops.anchor,
        pinned: None,
    })
}

/// Symmetric elimination of one dof: its row and column become the identity.
pub fn pin_matrix<T: Scalar>(a: &CsrMatrix<T>, dof: usize) -> CsrMatrix<T> {
    let mut tb = TripletBuilder::with_capacity(a.nrows(), a.ncols(), a.nnz());
    for (i, j, v) in a.iter() {
        if i != dof && j != dof {
            tb.push(i, j, v);
        }
    }
    tb.push(dof, dof, T::one());
    if a.is_symmetric() {
        tb.build_symmetric()
    } else {
        tb.build()
    }
}

impl<T: Scalar> BlockSystem<T> {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_blocks(&self) -> usize {
        self.block_ranges.len()
    }

    pub fn block(&self, i: usize, j: usize) -> CsrMatrix<T> {
        self.matrix.submatrix(self.block_ranges[i].clone(), self.block_ranges[j].clone())
    }

    /// Pins the origin dof of `Ω₀`.
    pub fn pin_nullspace(&self) -> Self {
        self.pin_at(self.anchor)
    }

    pub fn pin_at(&self, dof: usize) -> Self {
        let mut rhs = self.rhs.clone();
        rhs[dof] = T::zero();
        Self {
            matrix: pin_matrix(&self.matrix, dof),
            rhs,
            pinned: Some(dof),
            ..self.clone()
        }
    }

    /// `D_n`: the diagonal blocks only.
    pub fn block_diagonal(&self) -> CsrMatrix<T> {
        let n = self.n();
        let mut tb = TripletBuilder::with_capacity(n, n, self.matrix.nnz());
        for r in &self.block_ranges {
            tb.push_block(r.start, r.start, &self.matrix.submatrix(r.clone(), r.clone()), T::one());
        }
        tb.build_symmetric()
    }

    /// `𝒜 − D_n`: the interface coupling only.
    pub fn off_diagonal(&self) -> CsrMatrix<T> {
        let owner = self.block_owner();
        let mut tb = TripletBuilder::with_capacity(self.n(), self.n(), self.matrix.nnz());
        for (i, j, v) in self.matrix.iter() {
            if owner[i] != owner[j] {
                tb.push(i, j, v);
            }
        }
        tb.build_symmetric()
    }

    /// Block index of every dof.
    pub fn block_owner(&self) -> Vec<usize> {
        let mut owner = vec![0; self.n()];
        for (b, r) in self.block_ranges.iter().enumerate() {
            owner[r.clone()].iter_mut().for_each(|o| *o = b);
        }
        owner
    }

    /// True when every block coupling touches `Ω₀`.
    pub fn is_arrowhead(&self) -> bool {
        let owner = self.block_owner();
        self.matrix.iter().all(|(i, j, _)| owner[i] == owner[j] || owner[i] == 0 || owner[j] == 0)
    }
}

impl<T: Real> BlockSystem<T> {
    /// Attempts a sparse factorization; `Ok(false)` means a vanishing pivot.
    pub fn probe_nonsingular(&self) -> bool {
        SparseLdlt::factor(&self.matrix).is_ok()
    }

    pub fn direct_solve(&self) -> Result<Vec<T>> {
        Ok(SparseLdlt::factor(&self.matrix)?.solve(&self.rhs))
    }

    pub fn residual_norm(&self, x: &[T]) -> f64 {
        relative_residual(&self.matrix, x, &self.rhs)
    }
}

pub fn relative_residual<T: Real>(a: &CsrMatrix<T>, x: &[T], b: &[T]) -> f64 {
    let ax = a.mul_vec(x);
    let r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &yi)| bi - yi).collect();
    let bn = crate::sparse::norm2(b);
    let rn = crate::sparse::norm2(&r);
    if bn.is_zero() {
        rn.as_f64()
    } else {
        (rn / bn).as_f64()
    }
}

#[derive(Debug, Clone)]
pub struct ScaledSystem<T> {
    pub matrix: CsrMatrix<T>,
    /// `h_i / √τ_i` per block.
    pub factors: Vec<T>,
}

/// `S 𝒜 S` with `S = diag(h_i/√τ_i · I_{n_i})`.
pub fn build_scaled<T: Real>(system: &BlockSystem<T>, h: &[f64], tau: &[f64]) -> Result<ScaledSystem<T>> {
    let nb = system.num_blocks();
    if h.len() != nb || tau.len() != nb {
        return Err(EmiError::DimensionMismatch(format!("{nb} blocks need {nb} values of h and tau")));
    }
    let factors: Vec<T> = h.iter().zip(tau).map(|(&h, &t)| T::of(h / t.sqrt())).collect();
    let mut d = vec![T::zero(); system.n()];
    for (r, &s) in system.block_ranges.iter().zip(&factors) {
        d[r.clone()].iter_mut().for_each(|x| *x = s);
    }
    Ok(ScaledSystem {
        matrix: system.matrix.scale_rows_cols(&d, &d),
        factors,
    })
}

/// Exact block-diagonal solver: one sparse LDLᵀ per diagonal block.
#[derive(Debug, Clone)]
pub struct BlockDiagSolver<T> {
    blocks: Vec<(Range<usize>, SparseLdlt<T>)>,
}

impl<T: Real> BlockDiagSolver<T> {
    pub fn new(blocks: Vec<(Range<usize>, SparseLdlt<T>)>) -> Self {
        Self { blocks }
    }

    /// Factors the diagonal blocks of `a` given by `ranges`.
    pub fn from_matrix(a: &CsrMatrix<T>, ranges: &[Range<usize>]) -> Result<Self> {
        let blocks = ranges
            .iter()
            .map(|r| {
                let f = SparseLdlt::factor(&a.submatrix(r.clone(), r.clone())).map_err(|e| match e {
                    EmiError::FactorizationFailed { index, pivot } => EmiError::FactorizationFailed {
                        index: index + r.start,
                        pivot,
                    },
                    other => other,
                })?;
                Ok((r.clone(), f))
            })
            .collect::<Result<_>>()?;
        Ok(Self { blocks })
    }

    pub fn size(&self) -> usize {
        self.blocks.last().map_or(0, |(r, _)| r.end)
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = vec![T::zero(); b.len()];
        self.apply(b, &mut x);
        x
    }
}

impl<T: Real> Preconditioner<T> for BlockDiagSolver<T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        for (range, f) in &self.blocks {
            let rb = &r[range.clone()];
            if rb.iter().all(|v| v.is_zero()) {
                z[range.clone()].iter_mut().for_each(|v| *v = T::zero());
            } else {
                f.solve_into(rb, &mut z[range.clone()]);
            }
        }
    }
}

/// `P_ε = blockdiag(τ_i·(A_i + ε·M̃_i))`, with the pinned dof (if any) eliminated
/// in the same way as in the system.
pub fn blockdiag_matrix<T: Real>(ops: &OperatorSet<T>, config: &ProblemConfig, eps: f64, pinned: Option<usize>) -> Result<CsrMatrix<T>> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(EmiError::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let ranges = ops.block_ranges();
    let n = ranges.last().map_or(0, |r| r.end);
    let mut tb = TripletBuilder::new(n, n);
    for (i, r) in ranges.iter().enumerate() {
        let tau_i = T::of(config.tau_i(i));
        tb.push_block(r.start, r.start, &ops.stiffness[i], tau_i);
        tb.push_block(r.start, r.start, &ops.bulk_mass[i], tau_i * T::of(eps));
    }
    let p = tb.build_symmetric();
    Ok(match pinned {
        Some(dof) => pin_matrix(&p, dof),
        None => p,
    })
}

pub fn blockdiag_prec<T: Real>(ops: &OperatorSet<T>, config: &ProblemConfig, eps: f64, pinned: Option<usize>) -> Result<BlockDiagSolver<T>> {
    let p = blockdiag_matrix(ops, config, eps, pinned)?;
    BlockDiagSolver::from_matrix(&p, &ops.block_ranges())
}

/// Builds the preconditioner selected by `kind` for a (pinned) system.
pub fn build_preconditioner<T: Real>(
    kind: PreconditionerKind,
    system: &BlockSystem<T>,
    ops: &OperatorSet<T>,
) -> Result<Box<dyn Preconditioner<T>>> {
    Ok(match kind {
        PreconditionerKind::None => Box::new(Identity),
        PreconditionerKind::Ilu0 => Box::new(Ilu0::factor(&system.matrix)),
        PreconditionerKind::BlockIlu0 => Box::new(BlockIlu0::factor(&system.matrix, &system.block_ranges)),
        PreconditionerKind::BlockDiag { eps } => Box::new(blockdiag_prec(ops, &system.config, eps, system.pinned)?),
        PreconditionerKind::Amg1 => Box::new(AmgHierarchy::build(&system.matrix, &AmgOptions::default())?),
    })
}

/// Preconditioned CG on the system with the configured preconditioner.
pub fn solve_system<T: Real>(system: &BlockSystem<T>, ops: &OperatorSet<T>, config: &SolverConfig) -> Result<(Vec<T>, SolveReport)> {
    let prec = build_preconditioner(config.preconditioner, system, ops)?;
    Ok(cg_solve(&system.matrix, &system.rhs, config, prec.as_ref()))
}
