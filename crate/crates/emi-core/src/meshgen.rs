//! Structured triangulation of the unit square and the subdomain partitions of
//! the two idealized geometries.
//!
//! Vertex `(i, j)` of the `(nh+1)²` lattice has index `j·(nh+1) + i`. Square
//! `(i, j)` is split along its lower-left to upper-right diagonal into
//! triangles `2·(j·nh + i)` = `(v00, v10, v11)` and `2·(j·nh + i) + 1` =
//! `(v00, v11, v01)`, both counter-clockwise.

use std::fmt;
use std::io::Write;
use std::ops::Range;
use std::str::FromStr;

use crate::error::{EmiError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Model {
    /// Separated square cells in a bath: the nervous-system geometry.
    A,
    /// A contiguous grid of cells joined by gap junctions: the cardiac geometry.
    B,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::A => "A",
            Model::B => "B",
        })
    }
}

impl FromStr for Model {
    type Err = EmiError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Model::A),
            "B" | "b" => Ok(Model::B),
            other => Err(EmiError::InvalidParameter(format!("unknown model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredMesh {
    nh: usize,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
}

pub fn build_mesh(nh: usize) -> Result<StructuredMesh> {
    if nh < 4 || !nh.is_power_of_two() {
        return Err(EmiError::InvalidResolution(nh));
    }
    let h = 1.0 / nh as f64;
    let m = nh + 1;
    let vertices = (0..m * m).map(|v| [(v % m) as f64 * h, (v / m) as f64 * h]).collect();
    let mut triangles = Vec::with_capacity(2 * nh * nh);
    for j in 0..nh {
        for i in 0..nh {
            let v00 = j * m + i;
            let (v10, v01, v11) = (v00 + 1, v00 + m, v00 + m + 1);
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    Ok(StructuredMesh { nh, vertices, triangles })
}

impl StructuredMesh {
    pub fn nh(&self) -> usize {
        self.nh
    }

    pub fn h(&self) -> f64 {
        1.0 / self.nh as f64
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Integer lattice coordinates `(i, j)` of a vertex.
    pub fn lattice(&self, v: usize) -> (i64, i64) {
        let m = self.nh + 1;
        ((v % m) as i64, (v / m) as i64)
    }

    /// Sum of the lattice coordinates of a triangle's vertices, i.e. the
    /// barycenter times `3·nh`.
    pub fn barycenter_sum(&self, t: usize) -> (i64, i64) {
        self.triangles[t].iter().fold((0, 0), |(x, y), &v| {
            let (i, j) = self.lattice(v);
            (x + i, y + j)
        })
    }

    /// Twice the signed area in lattice units.
    pub fn orientation(&self, t: usize) -> i64 {
        let [a, b, c] = self.triangles[t].map(|v| self.lattice(v));
        (b.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (b.1 - a.1)
    }

    /// Triangles on either side of every interior edge, in deterministic order
    /// (per square: bottom edge, left edge, diagonal).
    pub fn interior_edges(&self) -> Vec<([usize; 2], [usize; 2])> {
        let nh = self.nh;
        let m = nh + 1;
        let mut edges = Vec::with_capacity(3 * nh * nh);
        for j in 0..nh {
            for i in 0..nh {
                let t = 2 * (j * nh + i);
                let v00 = j * m + i;
                if j > 0 {
                    edges.push(([v00, v00 + 1], [t, 2 * ((j - 1) * nh + i) + 1]));
                }
                if i > 0 {
                    edges.push(([v00, v00 + m], [t + 1, 2 * (j * nh + i - 1)]));
                }
                edges.push(([v00, v00 + m + 1], [t, t + 1]));
            }
        }
        edges
    }
}

/// An edge of `Γ_ij` with `i < j`; vertices in ascending order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MembraneEdge {
    pub vertices: [usize; 2],
    pub i: usize,
    pub j: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubdomainLabeling {
    pub model: Model,
    pub cells: usize,
    pub cell_of: Vec<usize>,
    pub membrane_edges: Vec<MembraneEdge>,
}

impl SubdomainLabeling {
    pub fn num_subdomains(&self) -> usize {
        self.cells + 1
    }

    fn from_cells(mesh: &StructuredMesh, model: Model, cells: usize, cell_of: Vec<usize>) -> Result<Self> {
        let mut counts = vec![0usize; cells + 1];
        for &c in &cell_of {
            counts[c] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(EmiError::EmptySubdomain(empty));
        }
        let membrane_edges = mesh
            .interior_edges()
            .into_iter()
            .filter_map(|(vertices, [s, t])| {
                let (a, b) = (cell_of[s], cell_of[t]);
                (a != b).then(|| MembraneEdge {
                    vertices,
                    i: a.min(b),
                    j: a.max(b),
                })
            })
            .collect();
        Ok(Self {
            model,
            cells,
            cell_of,
            membrane_edges,
        })
    }
}

fn exact_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

fn incompatible(model: char, nh: usize, cells: usize, reason: impl Into<String>) -> EmiError {
    EmiError::IncompatibleGeometry {
        model,
        nh,
        cells,
        reason: reason.into(),
    }
}

/// Cells are the squares where `(x·s mod 3, y·s mod 3) ≥ (1, 1)` with
/// `s = 3√N + 1`, numbered row-major from the origin.
pub fn label_model_a(mesh: &StructuredMesh, cells: usize) -> Result<SubdomainLabeling> {
    let nh = mesh.nh();
    if cells == 0 {
        return SubdomainLabeling::from_cells(mesh, Model::A, 0, vec![0; mesh.num_triangles()]);
    }
    let r = exact_sqrt(cells).ok_or_else(|| incompatible('A', nh, cells, "N must be a perfect square"))?;
    let s = 3 * r + 1;
    if !s.is_power_of_two() || s.trailing_zeros() % 2 != 0 {
        return Err(incompatible('A', nh, cells, format!("scale 3√N+1 = {s} is not a power of four")));
    }
    if nh % s != 0 {
        return Err(incompatible('A', nh, cells, format!("scale {s} does not divide nh")));
    }
    let (s, d, r) = (s as i64, 3 * nh as i64, r as i64);
    let cell_of = (0..mesh.num_triangles())
        .map(|t| {
            let (bx, by) = mesh.barycenter_sum(t);
            let (qx, qy) = (bx * s, by * s);
            if qx % (3 * d) >= d && qy % (3 * d) >= d {
                let (kx, ky) = (qx / (3 * d), qy / (3 * d));
                (1 + ky * r + kx) as usize
            } else {
                0
            }
        })
        .collect();
    SubdomainLabeling::from_cells(mesh, Model::A, cells, cell_of)
}

/// `(1/8, 7/8)²` split into a `√N × √N` grid of equal square cells.
pub fn label_model_b(mesh: &StructuredMesh, cells: usize) -> Result<SubdomainLabeling> {
    let nh = mesh.nh();
    if cells == 0 {
        return SubdomainLabeling::from_cells(mesh, Model::B, 0, vec![0; mesh.num_triangles()]);
    }
    let r = exact_sqrt(cells).ok_or_else(|| incompatible('B', nh, cells, "N must be a perfect square"))?;
    if nh % 8 != 0 || (3 * nh) % (4 * r) != 0 {
        return Err(incompatible('B', nh, cells, "cell edges do not fall on mesh lines"));
    }
    let (n, r) = (nh as i64, r as i64);
    let cell_of = (0..mesh.num_triangles())
        .map(|t| {
            let (bx, by) = mesh.barycenter_sum(t);
            let inside = |b: i64| 3 * n < 8 * b && 8 * b < 21 * n;
            if inside(bx) && inside(by) {
                let k = |b: i64| ((8 * b - 3 * n) * r) / (18 * n);
                (1 + k(by) * r + k(bx)) as usize
            } else {
                0
            }
        })
        .collect();
    SubdomainLabeling::from_cells(mesh, Model::B, cells, cell_of)
}

pub fn label(mesh: &StructuredMesh, model: Model, cells: usize) -> Result<SubdomainLabeling> {
    match model {
        Model::A => label_model_a(mesh, cells),
        Model::B => label_model_b(mesh, cells),
    }
}

/// Degrees of freedom of one subdomain: `vertices[local]` is the mesh vertex
/// of each local dof, interior ones first, the last `n_membrane` on `Γ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdomainDofs {
    pub offset: usize,
    pub vertices: Vec<usize>,
    pub n_membrane: usize,
}

impl SubdomainDofs {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.vertices.len()
    }

    pub fn membrane_range(&self) -> Range<usize> {
        self.vertices.len() - self.n_membrane..self.vertices.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    subdomains: Vec<SubdomainDofs>,
    vertex_ptr: Vec<usize>,
    /// `(subdomain, global dof)` pairs grouped by vertex.
    vertex_dofs: Vec<(usize, usize)>,
    triangle_ptr: Vec<usize>,
    triangles: Vec<usize>,
    membrane_ptr: Vec<usize>,
    membrane: Vec<usize>,
}

fn group_by<I: Copy + Default>(keys: impl Iterator<Item = (usize, I)>, groups: usize) -> (Vec<usize>, Vec<I>) {
    let pairs: Vec<(usize, I)> = keys.collect();
    let mut ptr = vec![0usize; groups + 1];
    for &(g, _) in &pairs {
        ptr[g + 1] += 1;
    }
    for g in 0..groups {
        ptr[g + 1] += ptr[g];
    }
    let mut fill = ptr.clone();
    let mut items = vec![I::default(); pairs.len()];
    for (g, item) in pairs {
        items[fill[g]] = item;
        fill[g] += 1;
    }
    (ptr, items)
}

pub fn build_dofmap(mesh: &StructuredMesh, labeling: &SubdomainLabeling) -> Result<DofMap> {
    let nv = mesh.num_vertices();
    let ns = labeling.num_subdomains();
    if labeling.cell_of.len() != mesh.num_triangles() {
        return Err(EmiError::DimensionMismatch(format!(
            "labeling covers {} triangles, mesh has {}",
            labeling.cell_of.len(),
            mesh.num_triangles()
        )));
    }
    // sorted list of incident subdomains per vertex
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let s = labeling.cell_of[t];
        for &v in tri {
            if let Err(pos) = incident[v].binary_search(&s) {
                incident[v].insert(pos, s);
            }
        }
    }
    let mut on_membrane: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for e in &labeling.membrane_edges {
        for &v in &e.vertices {
            for s in [e.i, e.j] {
                if let Err(pos) = on_membrane[v].binary_search(&s) {
                    on_membrane[v].insert(pos, s);
                }
            }
        }
    }
    let mut interior: Vec<Vec<usize>> = vec![Vec::new(); ns];
    let mut membrane: Vec<Vec<usize>> = vec![Vec::new(); ns];
    for v in 0..nv {
        for &s in &incident[v] {
            if on_membrane[v].binary_search(&s).is_ok() {
                membrane[s].push(v);
            } else {
                interior[s].push(v);
            }
        }
    }
    let mut subdomains = Vec::with_capacity(ns);
    let mut offset = 0;
    for (s, (mut verts, memb)) in interior.into_iter().zip(membrane).enumerate() {
        if verts.is_empty() && memb.is_empty() {
            return Err(EmiError::EmptySubdomain(s));
        }
        let n_membrane = memb.len();
        verts.extend(memb);
        let len = verts.len();
        subdomains.push(SubdomainDofs {
            offset,
            vertices: verts,
            n_membrane,
        });
        offset += len;
    }
    let (vertex_ptr, vertex_dofs) = group_by(
        subdomains
            .iter()
            .enumerate()
            .flat_map(|(s, sd)| sd.vertices.iter().enumerate().map(move |(l, &v)| (v, (s, sd.offset + l)))),
        nv,
    );
    let (triangle_ptr, triangles) = group_by(labeling.cell_of.iter().enumerate().map(|(t, &s)| (s, t)), ns);
    let (membrane_ptr, membrane) = group_by(
        labeling
            .membrane_edges
            .iter()
            .enumerate()
            .flat_map(|(k, e)| [(e.i, k), (e.j, k)]),
        ns,
    );
    Ok(DofMap {
        subdomains,
        vertex_ptr,
        vertex_dofs,
        triangle_ptr,
        triangles,
        membrane_ptr,
        membrane,
    })
}

impl DofMap {
    pub fn num_subdomains(&self) -> usize {
        self.subdomains.len()
    }

    pub fn subdomain(&self, i: usize) -> &SubdomainDofs {
        &self.subdomains[i]
    }

    pub fn subdomains(&self) -> &[SubdomainDofs] {
        &self.subdomains
    }

    pub fn block_ranges(&self) -> Vec<Range<usize>> {
        self.subdomains.iter().map(SubdomainDofs::range).collect()
    }

    pub fn n(&self) -> usize {
        self.subdomains.iter().map(SubdomainDofs::len).sum()
    }

    pub fn n0(&self) -> usize {
        self.subdomains[0].len()
    }

    pub fn n_in(&self) -> usize {
        self.subdomains[1..].iter().map(SubdomainDofs::len).sum()
    }

    /// Membrane dofs counted on the cell side only.
    pub fn n_gamma(&self) -> usize {
        self.subdomains[1..].iter().map(|s| s.n_membrane).sum()
    }

    /// `(subdomain, global dof)` pairs owned by a vertex, by subdomain.
    pub fn dofs_of_vertex(&self, v: usize) -> &[(usize, usize)] {
        &self.vertex_dofs[self.vertex_ptr[v]..self.vertex_ptr[v + 1]]
    }

    pub fn global_dof(&self, v: usize, subdomain: usize) -> Option<usize> {
        self.dofs_of_vertex(v).iter().find(|&&(s, _)| s == subdomain).map(|&(_, d)| d)
    }

    /// Index of `(v, subdomain)` within its block.
    pub fn local_dof(&self, v: usize, subdomain: usize) -> Option<usize> {
        self.global_dof(v, subdomain).map(|d| d - self.subdomains[subdomain].offset)
    }

    pub fn triangles_of(&self, subdomain: usize) -> &[usize] {
        &self.triangles[self.triangle_ptr[subdomain]..self.triangle_ptr[subdomain + 1]]
    }

    /// Indices into the labeling's membrane edge list touching `Γ_i`.
    pub fn membrane_edges_of(&self, subdomain: usize) -> &[usize] {
        &self.membrane[self.membrane_ptr[subdomain]..self.membrane_ptr[subdomain + 1]]
    }

    pub fn dof_coordinates(&self, mesh: &StructuredMesh) -> Vec<[f64; 2]> {
        self.subdomains
            .iter()
            .flat_map(|s| s.vertices.iter().map(|&v| mesh.vertices()[v]))
            .collect()
    }
}

/// Text export: a `vertices triangles` count line, one `x y` line per vertex,
/// then one `v0 v1 v2 subdomain` line per triangle.
pub fn write_mesh<W: Write>(mesh: &StructuredMesh, labeling: &SubdomainLabeling, mut out: W) -> Result<()> {
    writeln!(out, "{} {}", mesh.num_vertices(), mesh.num_triangles())?;
    for [x, y] in mesh.vertices() {
        writeln!(out, "{x} {y}")?;
    }
    for (t, [a, b, c]) in mesh.triangles().iter().enumerate() {
        writeln!(out, "{a} {b} {c} {}", labeling.cell_of[t])?;
    }
    Ok(())
}
