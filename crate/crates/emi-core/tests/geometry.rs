use std::collections::BTreeSet;

use emi_core::fem::Discretization;
use emi_core::meshgen::{build_dofmap, build_mesh, label, Model};
use num_rational::Ratio;
use proptest::prelude::*;

/// Closed-form counts from the cell side length `L` (in mesh steps): each cell
/// has `(L+1)²` vertices, `(L−1)²` of them strictly inside, `4L` on its
/// boundary.
fn model_a_counts(nh: usize, cells: usize) -> [usize; 4] {
    let r = (cells as f64).sqrt() as usize;
    let side = 2 * nh / (3 * r + 1);
    let n_in = cells * (side + 1) * (side + 1);
    let n0 = (nh + 1) * (nh + 1) - cells * (side - 1) * (side - 1);
    [n0, n_in, cells * 4 * side, n0 + n_in]
}

/// Cells tile `(1/8, 7/8)²`; the bath loses the strict interior of that square.
fn model_b_counts(nh: usize, cells: usize) -> [usize; 4] {
    let r = (cells as f64).sqrt() as usize;
    let side = 3 * nh / (4 * r);
    let n_in = cells * (side + 1) * (side + 1);
    let outer = r * side;
    let n0 = (nh + 1) * (nh + 1) - (outer - 1) * (outer - 1);
    [n0, n_in, cells * 4 * side, n0 + n_in]
}

fn counts(model: Model, nh: usize, cells: usize) -> [usize; 4] {
    let d = Discretization::build(model, nh, cells).unwrap().dofmap;
    [d.n0(), d.n_in(), d.n_gamma(), d.n()]
}

#[test]
fn model_a_counts_match_closed_form() {
    for (nh, cells) in [(4, 1), (8, 1), (64, 1), (256, 1), (16, 25), (64, 25), (64, 441), (256, 441)] {
        assert_eq!(counts(Model::A, nh, cells), model_a_counts(nh, cells), "nh={nh} N={cells}");
    }
}

#[test]
fn model_b_counts_match_closed_form() {
    for (nh, cells) in [(8, 1), (16, 1), (16, 4), (16, 16), (64, 16), (64, 64), (64, 576), (128, 36)] {
        assert_eq!(counts(Model::B, nh, cells), model_b_counts(nh, cells), "nh={nh} N={cells}");
    }
}

#[test]
fn empty_configuration_is_the_bath_alone() {
    for model in [Model::A, Model::B] {
        assert_eq!(counts(model, 8, 0), [81, 0, 0, 81]);
    }
}

fn cell_area(model: Model, nh: usize, cells: usize) -> Ratio<i64> {
    let mesh = build_mesh(nh).unwrap();
    let lab = label(&mesh, model, cells).unwrap();
    let tri = Ratio::new(1, 2 * (nh * nh) as i64);
    lab.cell_of.iter().filter(|&&c| c > 0).map(|_| tri).sum()
}

#[test]
fn cell_areas_are_exact() {
    for (nh, cells) in [(8, 1), (16, 4), (64, 16), (64, 576)] {
        assert_eq!(cell_area(Model::B, nh, cells), Ratio::new(9, 16));
    }
    for (nh, cells) in [(4, 1), (16, 25), (64, 441)] {
        let s = 3 * (cells as f64).sqrt() as i64 + 1;
        assert_eq!(cell_area(Model::A, nh, cells), Ratio::new(4 * cells as i64, s * s));
    }
}

#[test]
fn model_a_membranes_touch_only_the_bath() {
    let mesh = build_mesh(64).unwrap();
    for cells in [1, 25, 441] {
        let lab = label(&mesh, Model::A, cells).unwrap();
        assert!(lab.membrane_edges.iter().all(|e| e.i == 0 && e.j > 0));
    }
    let lab = label(&mesh, Model::B, 16).unwrap();
    assert!(lab.membrane_edges.iter().any(|e| e.i > 0));
}

#[test]
fn membrane_perimeter_halves_with_refinement_in_edges() {
    let edges = |nh| label(&build_mesh(nh).unwrap(), Model::A, 1).unwrap().membrane_edges.len();
    assert_eq!(edges(8), 16);
    assert_eq!(edges(16), 32);
    assert_eq!(edges(32), 64);
}

#[test]
fn incompatible_pairs_rejected() {
    let mesh = build_mesh(16).unwrap();
    assert!(label(&mesh, Model::A, 4).is_err());
    assert!(label(&mesh, Model::A, 441).is_err());
    assert!(label(&mesh, Model::B, 2).is_err());
    assert!(label(&mesh, Model::B, 25).is_err());
    assert!(build_mesh(24).is_err());
    assert!(build_mesh(2).is_err());
}

fn compatible_pairs() -> Vec<(Model, usize, usize)> {
    let mut out = Vec::new();
    for nh in [4usize, 8, 16, 32] {
        let mesh = build_mesh(nh).unwrap();
        for model in [Model::A, Model::B] {
            for r in 0..=8usize {
                if label(&mesh, model, r * r).is_ok() {
                    out.push((model, nh, r * r));
                }
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dofmap_invariants(idx in 0usize..1000) {
        let pairs = compatible_pairs();
        let (model, nh, cells) = pairs[idx % pairs.len()];
        let mesh = build_mesh(nh).unwrap();
        let lab = label(&mesh, model, cells).unwrap();
        let d = build_dofmap(&mesh, &lab).unwrap();

        prop_assert_eq!(d.n(), d.n0() + d.n_in());
        prop_assert_eq!(d.n(), d.subdomains().iter().map(|s| s.len()).sum::<usize>());
        let gamma: usize = d.subdomains().iter().skip(1).map(|s| s.n_membrane).sum();
        prop_assert_eq!(d.n_gamma(), gamma);

        // duplication consistency
        let mut incident = vec![BTreeSet::new(); mesh.num_vertices()];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            for &v in tri {
                incident[v].insert(lab.cell_of[t]);
            }
        }
        for (v, subs) in incident.iter().enumerate() {
            let owned: BTreeSet<usize> = d.dofs_of_vertex(v).iter().map(|&(s, _)| s).collect();
            prop_assert_eq!(&owned, subs);
            for &(s, g) in d.dofs_of_vertex(v) {
                prop_assert_eq!(d.global_dof(v, s), Some(g));
                let local = d.local_dof(v, s).unwrap();
                prop_assert_eq!(d.subdomain(s).offset + local, g);
                prop_assert_eq!(d.subdomain(s).vertices[local], v);
            }
        }

        // membrane dofs are exactly the vertices on the subdomain's membrane edges
        for (s, sub) in d.subdomains().iter().enumerate() {
            let on_membrane: BTreeSet<usize> = lab
                .membrane_edges
                .iter()
                .filter(|e| e.i == s || e.j == s)
                .flat_map(|e| e.vertices)
                .collect();
            let listed: BTreeSet<usize> = sub.membrane_range().map(|k| sub.vertices[k]).collect();
            prop_assert_eq!(listed, on_membrane);
            let interior = &sub.vertices[..sub.len() - sub.n_membrane];
            prop_assert!(interior.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
