//! P1 operators per subdomain: bulk stiffness `A_i`, membrane mass `M_i`, bulk
//! mass `M̃_i`, interface coupling `B_ij` and membrane source vectors.
//!
//! Matrices are generic over [`Scalar`], so exact rational assembly is
//! available; the source term involves `sin` and needs [`Real`].

use std::collections::BTreeMap;

use crate::error::{EmiError, Result};
use crate::meshgen::{DofMap, StructuredMesh, SubdomainLabeling};
use crate::scalar::{Real, Scalar};
use crate::sparse::{CsrMatrix, TripletBuilder};

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    /// `τ = Δt / C_M`.
    pub tau: f64,
    /// Conductivity per subdomain; empty means `σ_i = 1` everywhere.
    pub sigma: Vec<f64>,
    /// Bulk-mass regularization of the block-diagonal preconditioner.
    pub epsilon: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            tau: 0.01,
            sigma: Vec::new(),
            epsilon: 1e-4,
        }
    }
}

impl ProblemConfig {
    pub fn new(tau: f64, epsilon: f64) -> Self {
        Self {
            tau,
            sigma: Vec::new(),
            epsilon,
        }
    }

    pub fn validate(&self, subdomains: usize) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.tau) {
            return Err(EmiError::InvalidParameter(format!("tau must be positive, got {}", self.tau)));
        }
        if !positive(self.epsilon) {
            return Err(EmiError::InvalidParameter(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !self.sigma.is_empty() && self.sigma.len() != subdomains {
            return Err(EmiError::InvalidParameter(format!(
                "{} conductivities given for {subdomains} subdomains",
                self.sigma.len()
            )));
        }
        if let Some(s) = self.sigma.iter().find(|&&s| !positive(s)) {
            return Err(EmiError::InvalidParameter(format!("conductivity must be positive, got {s}")));
        }
        Ok(())
    }

    pub fn sigma(&self, i: usize) -> f64 {
        self.sigma.get(i).copied().unwrap_or(1.0)
    }

    /// `τ_i = τ·σ_i`.
    pub fn tau_i(&self, i: usize) -> f64 {
        self.tau * self.sigma(i)
    }
}

/// Mesh, partition and dof numbering bundled for assembly.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: StructuredMesh,
    pub labeling: SubdomainLabeling,
    pub dofmap: DofMap,
}

impl Discretization {
    pub fn new(mesh: StructuredMesh, labeling: SubdomainLabeling) -> Result<Self> {
        let dofmap = crate::meshgen::build_dofmap(&mesh, &labeling)?;
        Ok(Self { mesh, labeling, dofmap })
    }

    pub fn build(model: crate::meshgen::Model, nh: usize, cells: usize) -> Result<Self> {
        let mesh = crate::meshgen::build_mesh(nh)?;
        let labeling = crate::meshgen::label(&mesh, model, cells)?;
        Self::new(mesh, labeling)
    }

    pub fn num_subdomains(&self) -> usize {
        self.dofmap.num_subdomains()
    }

    fn check_subdomain(&self, i: usize) -> Result<()> {
        if i >= self.num_subdomains() {
            return Err(EmiError::InvalidParameter(format!(
                "subdomain {i} out of range (0..{})",
                self.num_subdomains()
            )));
        }
        Ok(())
    }

    fn local(&self, v: usize, i: usize) -> usize {
        self.dofmap.local_dof(v, i).expect("vertex of subdomain element has a dof")
    }
}

/// `∫ ∇φ_k·∇φ_l` over `Ω_i`; dimensionless in 2D.
pub fn assemble_stiffness<T: Scalar>(disc: &Discretization, i: usize) -> Result<CsrMatrix<T>> {
    disc.check_subdomain(i)?;
    let tris = disc.dofmap.triangles_of(i);
    if tris.is_empty() {
        return Err(EmiError::EmptySubdomain(i));
    }
    let n = disc.dofmap.subdomain(i).len();
    let mut b = TripletBuilder::with_capacity(n, n, 9 * tris.len());
    for &t in tris {
        let tri = disc.mesh.triangles()[t];
        let p = tri.map(|v| disc.mesh.lattice(v));
        let gy = [p[1].1 - p[2].1, p[2].1 - p[0].1, p[0].1 - p[1].1];
        let gx = [p[2].0 - p[1].0, p[0].0 - p[2].0, p[1].0 - p[0].0];
        // 4·area in lattice units
        let den = 2 * disc.mesh.orientation(t);
        let dofs = tri.map(|v| disc.local(v, i));
        for a in 0..3 {
            for c in 0..3 {
                let num = gy[a] * gy[c] + gx[a] * gx[c];
                b.push(dofs[a], dofs[c], T::ratio(num, den));
            }
        }
    }
    Ok(b.build_symmetric())
}

/// `∫ φ_k φ_l` over `Ω_i`.
pub fn assemble_bulk_mass<T: Scalar>(disc: &Discretization, i: usize) -> Result<CsrMatrix<T>> {
    disc.check_subdomain(i)?;
    let tris = disc.dofmap.triangles_of(i);
    if tris.is_empty() {
        return Err(EmiError::EmptySubdomain(i));
    }
    let n = disc.dofmap.subdomain(i).len();
    let nh = disc.mesh.nh() as i64;
    let off = T::ratio(1, 24 * nh * nh);
    let diag = off + off;
    let mut b = TripletBuilder::with_capacity(n, n, 9 * tris.len());
    for &t in tris {
        let dofs = disc.mesh.triangles()[t].map(|v| disc.local(v, i));
        for a in 0..3 {
            for c in 0..3 {
                b.push(dofs[a], dofs[c], if a == c { diag } else { off });
            }
        }
    }
    Ok(b.build_symmetric())
}

fn edge_mass<T: Scalar>(nh: usize) -> [[T; 2]; 2] {
    let off = T::ratio(1, 6 * nh as i64);
    let diag = off + off;
    [[diag, off], [off, diag]]
}

/// `∫_{Γ_i} φ_k φ_l ds`, embedded in the `n_i × n_i` block.
pub fn assemble_membrane_mass<T: Scalar>(disc: &Discretization, i: usize) -> Result<CsrMatrix<T>> {
    disc.check_subdomain(i)?;
    let n = disc.dofmap.subdomain(i).len();
    let me = edge_mass::<T>(disc.mesh.nh());
    let edges = disc.dofmap.membrane_edges_of(i);
    let mut b = TripletBuilder::with_capacity(n, n, 4 * edges.len());
    for &k in edges {
        let dofs = disc.labeling.membrane_edges[k].vertices.map(|v| disc.local(v, i));
        for a in 0..2 {
            for c in 0..2 {
                b.push(dofs[a], dofs[c], me[a][c]);
            }
        }
    }
    Ok(b.build_symmetric())
}

/// `−∫_{Γ_ij} φ_{i,k} φ_{j,l} ds` as an `n_i × n_j` block.
pub fn assemble_coupling<T: Scalar>(disc: &Discretization, i: usize, j: usize) -> Result<CsrMatrix<T>> {
    disc.check_subdomain(i)?;
    disc.check_subdomain(j)?;
    let (lo, hi) = (i.min(j), i.max(j));
    let edges: Vec<usize> = disc
        .dofmap
        .membrane_edges_of(lo)
        .iter()
        .copied()
        .filter(|&k| {
            let e = disc.labeling.membrane_edges[k];
            e.i == lo && e.j == hi
        })
        .collect();
    if i == j || edges.is_empty() {
        return Err(EmiError::EmptyInterface(i, j));
    }
    let me = edge_mass::<T>(disc.mesh.nh());
    let (ni, nj) = (disc.dofmap.subdomain(i).len(), disc.dofmap.subdomain(j).len());
    let mut b = TripletBuilder::with_capacity(ni, nj, 4 * edges.len());
    for k in edges {
        let vs = disc.labeling.membrane_edges[k].vertices;
        let (ri, cj) = (vs.map(|v| disc.local(v, i)), vs.map(|v| disc.local(v, j)));
        for a in 0..2 {
            for c in 0..2 {
                b.push(ri[a], cj[c], -me[a][c]);
            }
        }
    }
    Ok(b.build())
}

/// Intracellular potential used as membrane data.
pub fn v_in(x: f64, y: f64) -> f64 {
    0.5 * (10.0 * (x * x + y * y)).sin()
}

/// Membrane source vectors for the passive current `I_ion(v) = v`:
/// `g = (1 − τ)·v_in` integrated against the traces with two-point Gauss per
/// edge, entering block `i` with sign `−1` on `Γ_ij` for `j > i` and `+1` for
/// `j < i`.
pub fn assemble_rhs<T: Real>(disc: &Discretization, config: &ProblemConfig) -> Result<Vec<Vec<T>>> {
    config.validate(disc.num_subdomains())?;
    let h = disc.mesh.h();
    let gauss = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()];
    let mut f: Vec<Vec<T>> = disc.dofmap.subdomains().iter().map(|s| vec![T::zero(); s.len()]).collect();
    for e in &disc.labeling.membrane_edges {
        let [pa, pb] = e.vertices.map(|v| disc.mesh.vertices()[v]);
        let mut load = [0.0f64; 2];
        for &s in &gauss {
            let x = pa[0] * (1.0 - s) + pb[0] * s;
            let y = pa[1] * (1.0 - s) + pb[1] * s;
            let g = v_in(x, y) * (1.0 - config.tau) * 0.5 * h;
            load[0] += g * (1.0 - s);
            load[1] += g * s;
        }
        for (sub, sign) in [(e.i, -1.0), (e.j, 1.0)] {
            for (k, &v) in e.vertices.iter().enumerate() {
                f[sub][disc.local(v, sub)] += T::of(sign * load[k]);
            }
        }
    }
    Ok(f)
}

#[derive(Debug, Clone)]
pub struct OperatorSet<T> {
    pub stiffness: Vec<CsrMatrix<T>>,
    pub membrane_mass: Vec<CsrMatrix<T>>,
    pub bulk_mass: Vec<CsrMatrix<T>>,
    /// `B_ij` for every ordered pair with nonempty `Γ_ij`.
    pub coupling: BTreeMap<(usize, usize), CsrMatrix<T>>,
    pub rhs: Vec<Vec<T>>,
    pub block_sizes: Vec<usize>,
    /// Global dof of the extracellular vertex at the origin.
    pub anchor: usize,
}

impl<T> OperatorSet<T> {
    pub fn num_subdomains(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn block_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.block_sizes
            .iter()
            .map(|&n| {
                let r = start..start + n;
                start += n;
                r
            })
            .collect()
    }
}

/// All matrices of the discretization; the source vectors are left at zero.
pub fn assemble_matrices<T: Scalar>(disc: &Discretization) -> Result<OperatorSet<T>> {
    let ns = disc.num_subdomains();
    let mut set = OperatorSet {
        stiffness: Vec::with_capacity(ns),
        membrane_mass: Vec::with_capacity(ns),
        bulk_mass: Vec::with_capacity(ns),
        coupling: BTreeMap::new(),
        rhs: disc.dofmap.subdomains().iter().map(|s| vec![T::zero(); s.len()]).collect(),
        block_sizes: disc.dofmap.subdomains().iter().map(|s| s.len()).collect(),
        anchor: disc.dofmap.global_dof(0, 0).ok_or(EmiError::EmptySubdomain(0))?,
    };
    for i in 0..ns {
        set.stiffness.push(assemble_stiffness(disc, i)?);
        set.membrane_mass.push(assemble_membrane_mass(disc, i)?);
        set.bulk_mass.push(assemble_bulk_mass(disc, i)?);
    }
    let mut pairs: Vec<(usize, usize)> = disc.labeling.membrane_edges.iter().map(|e| (e.i, e.j)).collect();
    pairs.sort_unstable();
    pairs.dedup();
    for (i, j) in pairs {
        let bij = assemble_coupling(disc, i, j)?;
        set.coupling.insert((j, i), bij.transpose());
        set.coupling.insert((i, j), bij);
    }
    Ok(set)
}

pub fn assemble_operators<T: Real>(disc: &Discretization, config: &ProblemConfig) -> Result<OperatorSet<T>> {
    let mut set = assemble_matrices(disc)?;
    set.rhs = assemble_rhs(disc, config)?;
    Ok(set)
}
