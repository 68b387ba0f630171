use emi_core::fem::{assemble_matrices, assemble_operators, Discretization, ProblemConfig};
use emi_core::meshgen::Model;
use emi_core::spectral::{eig_rearranged, numerical_rank};
use emi_core::system::{build_scaled, build_system, relative_residual, ArrowheadFactors, BlockSystem};
use num_rational::Ratio;

type Q = Ratio<i64>;

fn system(model: Model, nh: usize, cells: usize) -> (Discretization, BlockSystem<f64>) {
    let disc = Discretization::build(model, nh, cells).unwrap();
    let cfg = ProblemConfig::default();
    let ops = assemble_operators::<f64>(&disc, &cfg).unwrap();
    let sys = build_system(&ops, &cfg, model).unwrap();
    (disc, sys)
}

#[test]
fn coupling_rank_is_bounded_by_twice_the_membrane_dofs() {
    for (nh, cells) in [(8, 1), (16, 1), (16, 25)] {
        let (disc, sys) = system(Model::A, nh, cells);
        let rank = numerical_rank(&sys.off_diagonal(), 1e-12);
        assert_eq!(rank, 2 * disc.dofmap.n_gamma(), "nh={nh} N={cells}");
    }
}

#[test]
fn arrowhead_splittings_are_exact_in_rationals() {
    let disc = Discretization::build(Model::A, 8, 1).unwrap();
    let cfg = ProblemConfig::new(0.25, 1e-4);
    let ops = assemble_matrices::<Q>(&disc).unwrap();
    let sys = build_system(&ops, &cfg, Model::A).unwrap();
    let f = ArrowheadFactors::build(&sys).unwrap();
    assert_eq!(f.reconstruct().unwrap().to_dense(), sys.matrix.to_dense());
    assert_eq!(f.reconstruct_augmented().unwrap().to_dense(), sys.matrix.to_dense());
    let pinned = sys.pin_nullspace();
    let f = ArrowheadFactors::build(&pinned).unwrap();
    assert_eq!(f.reconstruct_augmented().unwrap().to_dense(), pinned.matrix.to_dense());
}

#[test]
fn both_woodbury_paths_agree_with_the_direct_solve() {
    let (_, sys) = system(Model::A, 16, 25);
    let sys = sys.pin_nullspace();
    let direct = sys.direct_solve().unwrap();
    let f = ArrowheadFactors::build(&sys).unwrap();
    let exact = f.solve_smw_exact(&sys.rhs).unwrap().x;
    let rel = |a: &[f64], b: &[f64]| {
        let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        d / b.iter().map(|x| x * x).sum::<f64>().sqrt()
    };
    assert!(rel(&exact, &direct) < 1e-8);
    let mut last = f64::INFINITY;
    for eps in [1e-2, 1e-4, 1e-6, 1e-8] {
        let x = f.solve_smw_eps(&sys.rhs, eps).unwrap().x;
        let r = relative_residual(&sys.matrix, &x, &sys.rhs);
        assert!(r < last, "eps={eps}: {r:e} ≥ {last:e}");
        last = r;
    }
}

#[test]
fn pinning_removes_the_constant_nullspace() {
    let (_, sys) = system(Model::A, 8, 1);
    let n = sys.n();
    let ones = vec![1.0; n];
    assert!(sys.matrix.mul_vec(&ones).iter().all(|v| v.abs() < 1e-12));
    let unpinned = eig_rearranged(&sys.matrix).unwrap().values;
    assert!(unpinned[0].abs() < 1e-12 && unpinned[1] > 1e-6);
    let pinned = sys.pin_nullspace();
    assert!(pinned.probe_nonsingular());
    let lmin = eig_rearranged(&pinned.matrix).unwrap().values[0];
    assert!(lmin > 1e-6);
}

fn inertia(values: &[f64], tol: f64) -> (usize, usize, usize) {
    let neg = values.iter().filter(|&&v| v < -tol).count();
    let pos = values.iter().filter(|&&v| v > tol).count();
    (neg, values.len() - neg - pos, pos)
}

#[test]
fn congruence_scaling_preserves_inertia() {
    for (model, cells) in [(Model::A, 1), (Model::B, 4)] {
        let (_, sys) = system(model, 16, cells);
        let nb = sys.num_blocks();
        let tau: Vec<f64> = (0..nb).map(|i| sys.config.tau_i(i)).collect();
        let scaled = build_scaled(&sys, &vec![1.0 / 16.0; nb], &tau).unwrap();
        let a = eig_rearranged(&sys.matrix).unwrap().values;
        let s = eig_rearranged(&scaled.matrix).unwrap().values;
        let tol = |v: &[f64]| 1e-10 * v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert_eq!(inertia(&a, tol(&a)), inertia(&s, tol(&s)));
        assert_eq!(inertia(&a, tol(&a)), (0, 1, sys.n() - 1));
    }
}

#[test]
fn model_b_is_not_arrowhead() {
    let (_, sys) = system(Model::B, 16, 4);
    assert!(!sys.is_arrowhead());
    let (_, sys) = system(Model::A, 16, 25);
    assert!(sys.is_arrowhead());
}
