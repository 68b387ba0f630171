//! Experiment driver: iteration tables and the spectral suite.

use std::time::Instant;

use emi_core::fem::{assemble_operators, Discretization, OperatorSet, ProblemConfig};
use emi_core::meshgen::Model;
use emi_core::spectral::{
    distribution_distance, eig_rearranged, generalized_eigenvalues, p1_laplacian_symbol, toeplitz_from_symbol,
    CombinedSymbol, ConstantSymbol, DistributionReport,
};
use emi_core::sparse::{cg_solve, SolveStatus, SolverConfig};
use emi_core::system::{blockdiag_matrix, build_preconditioner, build_scaled, build_system, BlockSystem};
use emi_core::{EmiError, Result};
use serde::Serialize;

use crate::config::{ConfigError, ExperimentSpec, SolverChoice};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    #[serde(serialize_with = "display")]
    pub model: Model,
    #[serde(rename = "N")]
    pub cells: usize,
    pub nh: usize,
    pub tau: f64,
    pub eps: f64,
    #[serde(serialize_with = "display")]
    pub solver: SolverChoice,
    pub iterations: usize,
    #[serde(rename = "relres")]
    pub rel_residual: f64,
    pub seconds: f64,
    pub n: usize,
    pub n0: usize,
    #[serde(rename = "nGamma")]
    pub n_gamma: usize,
    pub status: String,
}

fn display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

impl ResultRow {
    pub fn converged(&self) -> bool {
        self.status == "converged"
    }
}

pub fn status_label(status: SolveStatus) -> String {
    match status {
        SolveStatus::Converged => "converged".into(),
        SolveStatus::MaxIterations => "max_iter".into(),
        SolveStatus::Breakdown { iteration } => format!("breakdown@{iteration}"),
    }
}

/// An assembled and pinned problem instance shared by all solvers.
pub struct Problem {
    pub model: Model,
    pub nh: usize,
    pub cells: usize,
    pub tau: f64,
    pub disc: Discretization,
    pub ops: OperatorSet<f64>,
    pub system: BlockSystem<f64>,
}

impl Problem {
    pub fn build(model: Model, nh: usize, cells: usize, tau: f64, eps: f64) -> Result<Self> {
        let disc = Discretization::build(model, nh, cells)?;
        let config = ProblemConfig::new(tau, eps);
        config.validate(disc.num_subdomains())?;
        let ops = assemble_operators::<f64>(&disc, &config)?;
        let system = build_system(&ops, &config, model)?.pin_nullspace();
        Ok(Self {
            model,
            nh,
            cells,
            tau,
            disc,
            ops,
            system,
        })
    }

    fn row(&self, solver: SolverChoice, eps: f64) -> ResultRow {
        let d = &self.disc.dofmap;
        ResultRow {
            model: self.model,
            cells: self.cells,
            nh: self.nh,
            tau: self.tau,
            eps,
            solver,
            iterations: 0,
            rel_residual: f64::NAN,
            seconds: 0.0,
            n: d.n(),
            n0: d.n0(),
            n_gamma: d.n_gamma(),
            status: String::new(),
        }
    }

    /// Preconditioner setup plus CG; failures are recorded in the row.
    pub fn solve(&self, solver: SolverChoice, eps: f64, tol: f64, max_iter: usize) -> (Option<Vec<f64>>, ResultRow) {
        let mut row = self.row(solver, eps);
        let config = SolverConfig {
            tol,
            max_iter,
            preconditioner: solver.kind(eps),
        };
        let start = Instant::now();
        let prec = match build_preconditioner(config.preconditioner, &self.system, &self.ops) {
            Ok(p) => p,
            Err(e) => {
                row.seconds = start.elapsed().as_secs_f64();
                row.status = format!("error: {e}");
                return (None, row);
            }
        };
        let (x, report) = cg_solve(&self.system.matrix, &self.system.rhs, &config, prec.as_ref());
        row.seconds = start.elapsed().as_secs_f64();
        row.iterations = report.iterations;
        row.rel_residual = report.final_rel_residual;
        row.status = status_label(report.status);
        (Some(x), row)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Refinement,
    Tau,
    Cells,
}

impl std::str::FromStr for TableKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> std::result::Result<Self, ConfigError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "refinement" | "nh" => Ok(TableKind::Refinement),
            "tau" => Ok(TableKind::Tau),
            "cells" | "n" => Ok(TableKind::Cells),
            other => Err(ConfigError::InvalidValue {
                key: "kind".into(),
                value: other.into(),
            }),
        }
    }
}

/// Runs every solver on every `(N, nh, τ)` instance of the spec. Rows are
/// grouped by solver; within a solver they follow the list order of the spec.
fn run_grid(spec: &ExperimentSpec) -> std::result::Result<Vec<ResultRow>, ConfigError> {
    spec.validate()?;
    let mut rows: Vec<(usize, ResultRow)> = Vec::new();
    if spec.solvers.is_empty() {
        return Ok(Vec::new());
    }
    for &cells in &spec.cells {
        for &nh in &spec.nh {
            for &tau in &spec.tau {
                match Problem::build(spec.model, nh, cells, tau, spec.eps) {
                    Ok(problem) => {
                        for (k, &solver) in spec.solvers.iter().enumerate() {
                            let (_, row) = problem.solve(solver, spec.eps, spec.tol, spec.max_iter);
                            rows.push((k, row));
                        }
                    }
                    Err(e) => {
                        for (k, &solver) in spec.solvers.iter().enumerate() {
                            rows.push((k, failed_row(spec, cells, nh, tau, solver, &e)));
                        }
                    }
                }
            }
        }
    }
    rows.sort_by_key(|(k, _)| *k);
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

fn failed_row(spec: &ExperimentSpec, cells: usize, nh: usize, tau: f64, solver: SolverChoice, e: &EmiError) -> ResultRow {
    ResultRow {
        model: spec.model,
        cells,
        nh,
        tau,
        eps: spec.eps,
        solver,
        iterations: 0,
        rel_residual: f64::NAN,
        seconds: 0.0,
        n: 0,
        n0: 0,
        n_gamma: 0,
        status: format!("error: {e}"),
    }
}

/// Iterations under mesh refinement at fixed `N`.
pub fn run_table_refinement(spec: &ExperimentSpec) -> std::result::Result<Vec<ResultRow>, ConfigError> {
    run_grid(spec)
}

/// Iterations over the time step at fixed `nh` and `N` (model A only).
pub fn run_table_tau(spec: &ExperimentSpec) -> std::result::Result<Vec<ResultRow>, ConfigError> {
    if spec.model != Model::A {
        return Err(ConfigError::Invalid("the time-step table is defined for model A".into()));
    }
    run_grid(spec)
}

/// Iterations over the number of cells at fixed `nh`.
pub fn run_table_cells(spec: &ExperimentSpec) -> std::result::Result<Vec<ResultRow>, ConfigError> {
    run_grid(spec)
}

pub fn run_table(kind: TableKind, spec: &ExperimentSpec) -> std::result::Result<Vec<ResultRow>, ConfigError> {
    match kind {
        TableKind::Refinement => run_table_refinement(spec),
        TableKind::Tau => run_table_tau(spec),
        TableKind::Cells => run_table_cells(spec),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralCheck {
    /// Eigenvalues of the scaled system against the combined symbol.
    ScaledSymbol,
    /// Eigenvalues of `𝒜 − D` against zero.
    OffDiagonalZero,
    /// Eigenvalues of `P_ε⁻¹ 𝒜` against one.
    PepsClustering,
    /// Two-level Toeplitz matrix of `4 − 2cos θ₁ − 2cos θ₂` against its symbol.
    Toeplitz,
}

#[derive(Debug, Clone)]
pub struct SpectralRecord {
    pub check: SpectralCheck,
    pub model: Model,
    pub nh: usize,
    pub cells: usize,
    pub n: usize,
    /// Upper bound on the outlier fraction where one is known (`2nΓ/n`).
    pub bound: Option<f64>,
    pub outcome: std::result::Result<DistributionReport, String>,
}

/// Full-spectrum checks for every `(nh, N)` of the spec at its first `τ`.
pub fn run_spectral_suite(spec: &ExperimentSpec) -> std::result::Result<Vec<SpectralRecord>, ConfigError> {
    spec.validate()?;
    let tau = spec.tau[0];
    let mut out = Vec::new();
    for &cells in &spec.cells {
        for &nh in &spec.nh {
            let record = |check, n, bound, outcome: Result<DistributionReport>| SpectralRecord {
                check,
                model: spec.model,
                nh,
                cells,
                n,
                bound,
                outcome: outcome.map_err(|e| e.to_string()),
            };
            let disc = match Discretization::build(spec.model, nh, cells) {
                Ok(d) => d,
                Err(e) => {
                    out.push(record(SpectralCheck::ScaledSymbol, 0, None, Err(e)));
                    continue;
                }
            };
            let n = disc.dofmap.n();
            let config = ProblemConfig::new(tau, spec.eps);
            let prepared = assemble_operators::<f64>(&disc, &config)
                .and_then(|ops| build_system(&ops, &config, spec.model).map(|s| (ops, s)));
            let (ops, system) = match prepared {
                Ok(p) => p,
                Err(e) => {
                    out.push(record(SpectralCheck::ScaledSymbol, n, None, Err(e)));
                    continue;
                }
            };
            out.push(record(SpectralCheck::ScaledSymbol, n, None, scaled_check(&system)));
            let bound = 2.0 * disc.dofmap.n_gamma() as f64 / n as f64;
            out.push(record(SpectralCheck::OffDiagonalZero, n, Some(bound), off_diagonal_check(&system)));
            out.push(record(SpectralCheck::PepsClustering, n, None, peps_check(&system, &ops, spec.eps)));
            out.push(record(SpectralCheck::Toeplitz, nh * nh, None, toeplitz_check(nh)));
        }
    }
    Ok(out)
}

fn scaled_check(system: &BlockSystem<f64>) -> Result<DistributionReport> {
    let nb = system.num_blocks();
    let tau: Vec<f64> = (0..nb).map(|i| system.config.tau_i(i)).collect();
    let scaled = build_scaled(system, &vec![1.0; nb], &tau)?;
    let eig = eig_rearranged(&scaled.matrix)?;
    let sizes: Vec<usize> = system.block_ranges.iter().map(|r| r.len()).collect();
    let target = CombinedSymbol::from_block_sizes(vec![p1_laplacian_symbol(); nb], &sizes)?;
    distribution_distance(&eig.values, &target, 0.1)
}

fn off_diagonal_check(system: &BlockSystem<f64>) -> Result<DistributionReport> {
    let eig = eig_rearranged(&system.off_diagonal())?;
    distribution_distance(&eig.values, &ConstantSymbol(0.0), 1e-10 * system.matrix.norm_inf())
}

fn peps_check(system: &BlockSystem<f64>, ops: &OperatorSet<f64>, eps: f64) -> Result<DistributionReport> {
    let pinned = system.pin_nullspace();
    let p = blockdiag_matrix(ops, &pinned.config, eps, pinned.pinned)?;
    let eigs = generalized_eigenvalues(&pinned.matrix, &p)?;
    distribution_distance(&eigs, &ConstantSymbol(1.0), 0.1)
}

fn toeplitz_check(nh: usize) -> Result<DistributionReport> {
    let f = p1_laplacian_symbol();
    let t = toeplitz_from_symbol(&f, &[nh, nh])?;
    distribution_distance(&eig_rearranged(&t)?.values, &f, 0.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(text: &str) -> ExperimentSpec {
        ExperimentSpec::parse(text).unwrap()
    }

    #[test]
    fn empty_solver_list_gives_no_rows() {
        assert!(run_table_refinement(&spec("nh=8\nsolver=")).unwrap().is_empty());
    }

    #[test]
    fn rows_grouped_by_solver() {
        let rows = run_table_refinement(&spec("nh=8,16\nsolver=cg,amg")).unwrap();
        let labels: Vec<_> = rows.iter().map(|r| (r.solver, r.nh)).collect();
        assert_eq!(
            labels,
            vec![
                (SolverChoice::Cg, 8),
                (SolverChoice::Cg, 16),
                (SolverChoice::Amg, 8),
                (SolverChoice::Amg, 16)
            ]
        );
        assert!(rows.iter().all(|r| r.converged() && r.iterations >= 1 && r.rel_residual <= 1e-9));
    }

    #[test]
    fn single_tau_gives_one_row_per_solver() {
        let rows = run_table_tau(&spec("nh=8\ntau=0.1\nsolver=cg,blockdiag,ilu")).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(run_table_tau(&spec("model=B\nnh=8\ncells=1")).is_err());
    }

    #[test]
    fn invalid_geometry_is_a_config_error() {
        assert!(run_table_cells(&spec("nh=16\ncells=4")).is_err());
    }

    #[test]
    fn spectral_suite_reports_all_checks() {
        let recs = run_spectral_suite(&spec("nh=8")).unwrap();
        assert_eq!(recs.len(), 4);
        assert!(recs.iter().all(|r| r.outcome.is_ok()));
        let off = recs.iter().find(|r| r.check == SpectralCheck::OffDiagonalZero).unwrap();
        assert!(off.outcome.as_ref().unwrap().outlier_fraction() <= off.bound.unwrap() + 1e-15);
    }
}
