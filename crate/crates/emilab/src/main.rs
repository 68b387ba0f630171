use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use emi_core::fem::Discretization;
use emi_core::meshgen::{write_mesh, Model};
use emi_core::sparse::{
    cg_solve, read_matrix_market, read_vector, write_matrix_market, write_vector, AmgHierarchy, AmgOptions, Identity,
    Ilu0, Preconditioner, SolverConfig,
};
use emi_core::EmiError;
use emilab::harness::status_label;
use emilab::{
    run_spectral_suite, run_table, summary_json, write_quantiles, write_results, ConfigError, ExperimentSpec, Problem,
    ResultRow, SolverChoice, TableKind,
};

#[derive(Parser)]
#[command(name = "emilab", version, about = "EMI model numerical laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand)]
enum Command {
    /// Build the mesh and partition, print dof counts.
    Mesh,
    /// Assemble the pinned block system.
    Assemble,
    /// Assemble (or import) a system and solve it.
    Solve,
    /// Run the spectral distribution suite.
    Spectra,
    /// Run an iteration-count table.
    Table,
}

#[derive(Args)]
struct Opts {
    /// Geometry: A (isolated cells) or B (tiled cells).
    #[arg(long, global = true)]
    model: Option<Model>,
    /// Mesh resolution (power of two); this, `--cells`, `--tau` and `--solver` take comma lists.
    #[arg(long, global = true, value_delimiter = ',')]
    nh: Vec<usize>,
    /// Number of cells N.
    #[arg(long, global = true, value_delimiter = ',')]
    cells: Vec<usize>,
    /// Time step τ.
    #[arg(long, global = true, value_delimiter = ',')]
    tau: Vec<f64>,
    /// Regularization ε of the block preconditioner.
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// cg, ilu, bjilu, blockdiag or amg.
    #[arg(long, global = true, value_delimiter = ',')]
    solver: Vec<SolverChoice>,
    /// Relative residual tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// CG iteration limit.
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    /// Matrix Market output; the right-hand side goes next to it with extension `.rhs`.
    #[arg(long, global = true)]
    export_mm: Option<PathBuf>,
    /// CSV output instead of stdout (quantiles for `spectra`).
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// key=value experiment file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Table kind: refinement, tau or cells.
    #[arg(long, global = true, default_value = "refinement")]
    kind: TableKind,
    /// Mesh file output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Solve an imported Matrix Market system instead of assembling one.
    #[arg(long, global = true)]
    matrix: Option<PathBuf>,
    /// Right-hand side for `--matrix`; defaults to all ones.
    #[arg(long, global = true)]
    rhs: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Solver(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Solver(m) | Failure::Io(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<EmiError> for Failure {
    fn from(e: EmiError) -> Self {
        let msg = e.to_string();
        match e {
            EmiError::InvalidResolution(_)
            | EmiError::IncompatibleGeometry { .. }
            | EmiError::InvalidParameter(_)
            | EmiError::NotArrowhead(_)
            | EmiError::EmptySubdomain(_)
            | EmiError::EmptyInterface(..)
            | EmiError::DimensionMismatch(_)
            | EmiError::MatrixMarket(_) => Failure::Config(msg),
            EmiError::FactorizationFailed { .. }
            | EmiError::SingularCapacitance { .. }
            | EmiError::CoarseningStagnated { .. }
            | EmiError::EigenNoConvergence(_) => Failure::Solver(msg),
            EmiError::Io(_) => Failure::Io(msg),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn spec_from(opts: &Opts) -> Result<ExperimentSpec, Failure> {
    let mut spec = match &opts.config {
        Some(path) => ExperimentSpec::from_file(path)?,
        None => ExperimentSpec::default(),
    };
    if let Some(m) = opts.model {
        spec.model = m;
    }
    if !opts.nh.is_empty() {
        spec.nh = opts.nh.clone();
    }
    if !opts.cells.is_empty() {
        spec.cells = opts.cells.clone();
    }
    if !opts.tau.is_empty() {
        spec.tau = opts.tau.clone();
    }
    if !opts.solver.is_empty() {
        spec.solvers = opts.solver.clone();
    }
    if let Some(e) = opts.eps {
        spec.eps = e;
    }
    if let Some(t) = opts.tol {
        spec.tol = t;
    }
    if let Some(m) = opts.max_iter {
        spec.max_iter = m;
    }
    spec.validate()?;
    Ok(spec)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

/// `--csv` if given, otherwise `name` inside the spec's output directory.
fn csv_target(opts: &Opts, spec: &ExperimentSpec, name: &str) -> Result<Option<PathBuf>, Failure> {
    if let Some(path) = &opts.csv {
        return Ok(Some(path.clone()));
    }
    match &spec.output_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
            Ok(Some(dir.join(name)))
        }
        None => Ok(None),
    }
}

fn emit_rows(target: Option<PathBuf>, rows: &[ResultRow]) -> Result<(), Failure> {
    match &target {
        Some(path) => write_results(create(path)?, rows)?,
        None => write_results(io::stdout().lock(), rows)?,
    }
    Ok(())
}

fn cmd_mesh(opts: &Opts) -> Result<(), Failure> {
    let spec = spec_from(opts)?;
    let mut stdout = io::stdout().lock();
    for &cells in &spec.cells {
        for &nh in &spec.nh {
            let disc = Discretization::build(spec.model, nh, cells)?;
            let d = &disc.dofmap;
            writeln!(
                stdout,
                "model={} nh={nh} N={cells} n0={} n_in={} n_gamma={} n={} ratio={:.3}",
                spec.model,
                d.n0(),
                d.n_in(),
                d.n_gamma(),
                d.n(),
                d.n_gamma() as f64 / d.n() as f64
            )?;
            if let Some(path) = &opts.out {
                write_mesh(&disc.mesh, &disc.labeling, create(path)?)?;
            }
        }
    }
    Ok(())
}

fn rhs_path(path: &Path) -> PathBuf {
    path.with_extension("rhs")
}

fn cmd_assemble(opts: &Opts) -> Result<(), Failure> {
    let spec = spec_from(opts)?;
    let problem = Problem::build(spec.model, spec.nh[0], spec.cells[0], spec.tau[0], spec.eps)?;
    let sys = &problem.system;
    println!(
        "model={} nh={} N={} n={} nnz={} blocks={} pinned={}",
        spec.model,
        problem.nh,
        problem.cells,
        sys.n(),
        sys.matrix.nnz(),
        sys.num_blocks(),
        sys.pinned.map_or("none".to_string(), |d| d.to_string())
    );
    if let Some(path) = &opts.export_mm {
        write_matrix_market(&sys.matrix, create(path)?)?;
        write_vector(&sys.rhs, create(&rhs_path(path))?)?;
    }
    Ok(())
}

fn cmd_solve(opts: &Opts) -> Result<(), Failure> {
    if let Some(path) = &opts.matrix {
        return solve_imported(opts, path);
    }
    let spec = spec_from(opts)?;
    let solver = *spec.solvers.first().unwrap_or(&SolverChoice::Cg);
    let problem = Problem::build(spec.model, spec.nh[0], spec.cells[0], spec.tau[0], spec.eps)?;
    if let Some(path) = &opts.export_mm {
        write_matrix_market(&problem.system.matrix, create(path)?)?;
        write_vector(&problem.system.rhs, create(&rhs_path(path))?)?;
    }
    let (_, row) = problem.solve(solver, spec.eps, spec.tol, spec.max_iter);
    emit_rows(csv_target(opts, &spec, "solve.csv")?, std::slice::from_ref(&row))?;
    if row.converged() {
        Ok(())
    } else {
        Err(Failure::Solver(format!("{} did not converge: {}", row.solver, row.status)))
    }
}

fn solve_imported(opts: &Opts, path: &Path) -> Result<(), Failure> {
    let a = read_matrix_market::<f64, _>(open(path)?)?;
    if a.nrows() != a.ncols() {
        return Err(Failure::Config("imported matrix is not square".into()));
    }
    let b = match &opts.rhs {
        Some(p) => read_vector::<f64, _>(open(p)?)?,
        None => vec![1.0; a.nrows()],
    };
    if b.len() != a.nrows() {
        return Err(Failure::Config(format!("rhs has {} entries, matrix {} rows", b.len(), a.nrows())));
    }
    let solver = *opts.solver.first().unwrap_or(&SolverChoice::Cg);
    let config = SolverConfig {
        tol: opts.tol.unwrap_or(1e-9),
        max_iter: opts.max_iter.unwrap_or(20_000),
        preconditioner: solver.kind(opts.eps.unwrap_or(1e-4)),
    };
    let prec: Box<dyn Preconditioner<f64>> = match solver {
        SolverChoice::Cg => Box::new(Identity),
        SolverChoice::Ilu => Box::new(Ilu0::factor(&a)),
        SolverChoice::Amg => Box::new(AmgHierarchy::build(&a, &AmgOptions::default())?),
        SolverChoice::BlockIlu | SolverChoice::BlockDiag => {
            return Err(Failure::Config(format!(
                "solver {solver} needs the block structure of an assembled system"
            )))
        }
    };
    let (_, report) = cg_solve(&a, &b, &config, prec.as_ref());
    println!(
        "solver={solver} n={} iterations={} relres={:e} seconds={:.6} status={}",
        a.nrows(),
        report.iterations,
        report.final_rel_residual,
        report.wall_time,
        status_label(report.status)
    );
    if report.converged() {
        Ok(())
    } else {
        Err(Failure::Solver(format!("{solver} did not converge")))
    }
}

fn cmd_spectra(opts: &Opts) -> Result<(), Failure> {
    let spec = spec_from(opts)?;
    let records = run_spectral_suite(&spec)?;
    print!("{}", summary_json(&records));
    if let Some(path) = csv_target(opts, &spec, "quantiles.csv")? {
        write_quantiles(create(&path)?, &records)?;
    }
    match records.iter().find_map(|r| r.outcome.as_ref().err()) {
        Some(e) => Err(Failure::Solver(e.clone())),
        None => Ok(()),
    }
}

fn cmd_table(opts: &Opts) -> Result<(), Failure> {
    let spec = spec_from(opts)?;
    let rows = run_table(opts.kind, &spec)?;
    emit_rows(csv_target(opts, &spec, &format!("table_{:?}.csv", opts.kind).to_lowercase())?, &rows)?;
    let failed = rows.iter().filter(|r| !r.converged()).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Solver(format!("{failed} of {} runs did not converge", rows.len())))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Mesh => cmd_mesh(&cli.opts),
        Command::Assemble => cmd_assemble(&cli.opts),
        Command::Solve => cmd_solve(&cli.opts),
        Command::Spectra => cmd_spectra(&cli.opts),
        Command::Table => cmd_table(&cli.opts),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("emilab: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
