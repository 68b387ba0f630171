//! Sparse storage, direct factorizations, Krylov solver and preconditioners.

mod amg;
mod cg;
mod dense;
mod ilu;
mod ldlt;
mod matrix;
mod mm;

pub use amg::{aggregate, AmgHierarchy, AmgLevel, AmgOptions};
pub use cg::{cg_solve, cg_solve_observed, Identity, Preconditioner, PreconditionerKind, SolveReport, SolveStatus, SolverConfig};
pub use dense::DenseLu;
pub use ilu::{BlockIlu0, Ilu0};
pub use ldlt::{reverse_cuthill_mckee, SparseLdlt};
pub use matrix::{dot, norm2, CsrMatrix, TripletBuilder};
pub use mm::{read_matrix_market, read_vector, write_matrix_market, write_vector};
