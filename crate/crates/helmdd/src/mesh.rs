//! Structured simplicial meshes of rectangles, uniform refinement and the
//! quadratic Lagrange (P2) finite element space.
//!
//! Meshes are immutable after construction. Rectangles are meshed on a
//! regular grid of cells, each cell split along the lower-left to
//! upper-right diagonal so that refinement and partitioning are fully
//! reproducible. Degrees of freedom of the P2 space sit at vertices and
//! edge midpoints; free (non-Dirichlet) dofs are numbered first, Dirichlet
//! dofs after them.

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

/// Physical boundary condition tag carried by boundary edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
    Robin,
}

impl BoundaryTag {
    /// Integer code used in the plain-text dump format.
    pub fn code(self) -> u8 {
        match self {
            BoundaryTag::Dirichlet => 1,
            BoundaryTag::Neumann => 2,
            BoundaryTag::Robin => 3,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            1 => Some(BoundaryTag::Dirichlet),
            2 => Some(BoundaryTag::Neumann),
            3 => Some(BoundaryTag::Robin),
            _ => None,
        }
    }
}

/// Boundary tags for the four sides of a rectangle.
#[derive(Debug, Clone, Copy)]
pub struct SideTags {
    pub left: BoundaryTag,
    pub right: BoundaryTag,
    pub bottom: BoundaryTag,
    pub top: BoundaryTag,
}

impl SideTags {
    pub fn all(tag: BoundaryTag) -> Self {
        SideTags {
            left: tag,
            right: tag,
            bottom: tag,
            top: tag,
        }
    }
}

/// Immutable simplicial mesh of a 2D domain.
#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    /// vertex index triples, positively oriented
    triangles: Vec<[usize; 3]>,
    /// (v0, v1, tag) with v0 < v1
    boundary_edges: Vec<(usize, usize, BoundaryTag)>,
    /// unique undirected edges (v0 < v1), sorted lexicographically
    edges: Vec<(usize, usize)>,
    /// triangles incident to each unique edge (1 for boundary, 2 interior)
    edge_tris: Vec<[Option<usize>; 2]>,
    edge_lookup: HashMap<(usize, usize), usize>,
    /// map (v0, v1) sorted -> tag, for boundary queries
    boundary_lookup: HashMap<(usize, usize), BoundaryTag>,
    /// triangles incident to each vertex
    vertex_tris: Vec<Vec<usize>>,
}

impl Mesh {
    /// Build a mesh from raw arrays, deriving connectivity tables and
    /// checking the mesh invariants (positive orientation, tagged boundary
    /// covering exactly the topological boundary).
    pub fn from_parts(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<(usize, usize, BoundaryTag)>,
    ) -> Result<Mesh> {
        for (t, tri) in triangles.iter().enumerate() {
            let a2 = signed_area2(&vertices, tri);
            if a2 <= 0.0 {
                return Err(Error::Mesh(format!(
                    "triangle {t} has non-positive signed area {}",
                    0.5 * a2
                )));
            }
        }
        // unique edge table
        let mut edge_map: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                edge_map.entry(key).or_default().push(t);
            }
        }
        let mut edges: Vec<(usize, usize)> = edge_map.keys().copied().collect();
        edges.sort_unstable();
        let mut edge_lookup = HashMap::with_capacity(edges.len());
        let mut edge_tris = Vec::with_capacity(edges.len());
        for (i, &e) in edges.iter().enumerate() {
            edge_lookup.insert(e, i);
            let tris = &edge_map[&e];
            match tris.len() {
                1 => edge_tris.push([Some(tris[0]), None]),
                2 => edge_tris.push([Some(tris[0]), Some(tris[1])]),
                n => {
                    return Err(Error::Mesh(format!(
                        "edge {e:?} belongs to {n} triangles"
                    )))
                }
            }
        }
        // boundary edges must exactly cover the topological boundary
        let mut boundary_lookup = HashMap::with_capacity(boundary_edges.len());
        for &(a, b, tag) in &boundary_edges {
            let key = (a.min(b), a.max(b));
            let idx = edge_lookup
                .get(&key)
                .ok_or_else(|| Error::Mesh(format!("boundary edge {key:?} not in mesh")))?;
            if edge_tris[*idx][1].is_some() {
                return Err(Error::Mesh(format!(
                    "tagged edge {key:?} is interior (two adjacent triangles)"
                )));
            }
            if boundary_lookup.insert(key, tag).is_some() {
                return Err(Error::Mesh(format!("edge {key:?} tagged twice")));
            }
        }
        for (i, &e) in edges.iter().enumerate() {
            if edge_tris[i][1].is_none() && !boundary_lookup.contains_key(&e) {
                return Err(Error::Mesh(format!(
                    "topological boundary edge {e:?} carries no tag"
                )));
            }
        }
        let mut vertex_tris = vec![Vec::new(); vertices.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                vertex_tris[v].push(t);
            }
        }
        Ok(Mesh {
            vertices,
            triangles,
            boundary_edges,
            edges,
            edge_tris,
            edge_lookup,
            boundary_lookup,
            vertex_tris,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex(&self, v: usize) -> [f64; 2] {
        self.vertices[v]
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn boundary_edges(&self) -> &[(usize, usize, BoundaryTag)] {
        &self.boundary_edges
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_lookup.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn edge_triangles(&self, e: usize) -> [Option<usize>; 2] {
        self.edge_tris[e]
    }

    pub fn boundary_tag(&self, a: usize, b: usize) -> Option<BoundaryTag> {
        self.boundary_lookup.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.vertex_tris[v]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * signed_area2(&self.vertices, &self.triangles[t])
    }

    pub fn triangle_centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        [
            (pa[0] + pb[0] + pc[0]) / 3.0,
            (pa[1] + pb[1] + pc[1]) / 3.0,
        ]
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    /// Characteristic element diameter: the maximum edge length.
    pub fn h_max(&self) -> f64 {
        self.edges
            .iter()
            .map(|&(a, b)| dist(self.vertices[a], self.vertices[b]))
            .fold(0.0, f64::max)
    }

    pub fn edge_length(&self, a: usize, b: usize) -> f64 {
        dist(self.vertices[a], self.vertices[b])
    }

    /// True when the Robin part of the boundary is empty; the continuous
    /// problem may then be ill-posed for resonant wave numbers. Flagged,
    /// not forbidden.
    pub fn robin_boundary_is_empty(&self) -> bool {
        !self
            .boundary_edges
            .iter()
            .any(|&(_, _, t)| t == BoundaryTag::Robin)
    }

    /// Plain-text dump: header `nv nt nbe`, vertex coordinates, triangle
    /// index triples, boundary edges with integer tag.
    pub fn dump(&self, w: &mut impl Write) -> Result<()> {
        writeln!(
            w,
            "{} {} {}",
            self.n_vertices(),
            self.n_triangles(),
            self.boundary_edges.len()
        )?;
        for v in &self.vertices {
            writeln!(w, "{:.17e} {:.17e}", v[0], v[1])?;
        }
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        for &(a, b, tag) in &self.boundary_edges {
            writeln!(w, "{} {} {}", a, b, tag.code())?;
        }
        Ok(())
    }
}

fn signed_area2(vertices: &[[f64; 2]], tri: &[usize; 3]) -> f64 {
    let (a, b, c) = (vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
    (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Structured triangulation of `[x0,x1] x [y0,y1]` with `nx x ny` cells,
/// each split along the lower-left to upper-right diagonal.
pub fn build_rect_mesh(
    x_extent: (f64, f64),
    y_extent: (f64, f64),
    nx: usize,
    ny: usize,
    tags: SideTags,
) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::invalid("cell counts must be at least 1"));
    }
    let (x0, x1) = x_extent;
    let (y0, y1) = y_extent;
    if !(x1 > x0) || !(y1 > y0) {
        return Err(Error::invalid("degenerate rectangle extents"));
    }
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = x0 + (x1 - x0) * (i as f64) / (nx as f64);
            let y = y0 + (y1 - y0) * (j as f64) / (ny as f64);
            vertices.push([x, y]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let v00 = vid(i, j);
            let v10 = vid(i + 1, j);
            let v01 = vid(i, j + 1);
            let v11 = vid(i + 1, j + 1);
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let mut boundary = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary.push((vid(i, 0), vid(i + 1, 0), tags.bottom));
    }
    for j in 0..ny {
        boundary.push((vid(nx, j), vid(nx, j + 1), tags.right));
    }
    for i in 0..nx {
        boundary.push((vid(i, ny), vid(i + 1, ny), tags.top));
    }
    for j in 0..ny {
        boundary.push((vid(0, j), vid(0, j + 1), tags.left));
    }
    Mesh::from_parts(vertices, triangles, boundary)
}

/// Uniform refinement: every triangle is split into `s^2` similar
/// triangles. Vertices of the input mesh keep their indices; boundary
/// tags are inherited by the sub-edges of each tagged edge.
pub fn refine_uniform(mesh: &Mesh, s: usize) -> Result<Mesh> {
    if s == 0 {
        return Err(Error::invalid("refinement factor must be at least 1"));
    }
    if s == 1 {
        return Mesh::from_parts(
            mesh.vertices.clone(),
            mesh.triangles.clone(),
            mesh.boundary_edges.clone(),
        );
    }
    let mut vertices = mesh.vertices.clone();
    // points interior to parent edges, keyed (edge index, step from smaller vertex)
    let mut edge_points: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edge_point = |verts: &mut Vec<[f64; 2]>, mesh: &Mesh, a: usize, b: usize, step: usize| -> usize {
        // orient the key from the smaller vertex id so both adjacent
        // triangles agree on the point identity and coordinates
        let (lo, hi, t) = if a < b { (a, b, step) } else { (b, a, s - step) };
        debug_assert!(t >= 1 && t < s);
        let e = mesh.edge_index(lo, hi).expect("edge exists");
        *edge_points.entry((e, t)).or_insert_with(|| {
            let pa = mesh.vertices[lo];
            let pb = mesh.vertices[hi];
            let f = t as f64 / s as f64;
            verts.push([pa[0] + f * (pb[0] - pa[0]), pa[1] + f * (pb[1] - pa[1])]);
            verts.len() - 1
        })
    };

    let mut triangles = Vec::with_capacity(mesh.n_triangles() * s * s);
    for t in 0..mesh.n_triangles() {
        let [a, b, c] = mesh.triangles[t];
        let (pa, pb, pc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
        // lattice point (i, j): a + i/s (b-a) + j/s (c-a), 0 <= i+j <= s
        let mut lattice: HashMap<(usize, usize), usize> = HashMap::new();
        for i in 0..=s {
            for j in 0..=(s - i) {
                let id = if i == 0 && j == 0 {
                    a
                } else if i == s {
                    b
                } else if j == s {
                    c
                } else if j == 0 {
                    edge_point(&mut vertices, mesh, a, b, i)
                } else if i == 0 {
                    edge_point(&mut vertices, mesh, a, c, j)
                } else if i + j == s {
                    edge_point(&mut vertices, mesh, b, c, j)
                } else {
                    let f_i = i as f64 / s as f64;
                    let f_j = j as f64 / s as f64;
                    vertices.push([
                        pa[0] + f_i * (pb[0] - pa[0]) + f_j * (pc[0] - pa[0]),
                        pa[1] + f_i * (pb[1] - pa[1]) + f_j * (pc[1] - pa[1]),
                    ]);
                    vertices.len() - 1
                };
                lattice.insert((i, j), id);
            }
        }
        for i in 0..s {
            for j in 0..(s - i) {
                triangles.push([lattice[&(i, j)], lattice[&(i + 1, j)], lattice[&(i, j + 1)]]);
                if i + j < s - 1 {
                    triangles.push([
                        lattice[&(i + 1, j)],
                        lattice[&(i + 1, j + 1)],
                        lattice[&(i, j + 1)],
                    ]);
                }
            }
        }
    }

    let mut boundary = Vec::with_capacity(mesh.boundary_edges.len() * s);
    for &(a, b, tag) in &mesh.boundary_edges {
        let mut prev = a;
        for t in 1..s {
            let p = edge_point(&mut vertices, mesh, a, b, t);
            boundary.push((prev, p, tag));
            prev = p;
        }
        boundary.push((prev, b, tag));
    }
    Mesh::from_parts(vertices, triangles, boundary)
}

/// Target mesh size for a given maximum wave number and points-per-wavelength
/// count: `h = 2 pi / (k_max * n_ppwl)`, i.e. `n_ppwl * h` equals one
/// wavelength.
pub fn mesh_resolution_for(k_max: f64, n_ppwl: f64) -> Result<f64> {
    if !(k_max > 0.0) || !(n_ppwl > 0.0) {
        return Err(Error::invalid(
            "wave number and points per wavelength must be positive",
        ));
    }
    Ok(2.0 * std::f64::consts::PI / (k_max * n_ppwl))
}

/// Classification of a P2 degree of freedom by the boundary it sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofClass {
    Interior,
    Dirichlet,
    Neumann,
    Robin,
}

/// Quadratic Lagrange finite element space on a [`Mesh`].
///
/// Dofs are vertex values plus edge-midpoint values. After classification
/// the dofs are renumbered so that indices `0..n_free` are non-Dirichlet
/// and `n_free..n_free+n_dirichlet` are Dirichlet.
#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    /// global dof index of each mesh vertex
    vertex_dof: Vec<usize>,
    /// global dof index of each unique mesh edge (its midpoint)
    edge_dof: Vec<usize>,
    dof_coords: Vec<[f64; 2]>,
    dof_class: Vec<DofClass>,
    n_free: usize,
    n_dirichlet: usize,
}

impl FeSpace {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> Arc<Mesh> {
        Arc::clone(&self.mesh)
    }

    /// Number of non-Dirichlet dofs (the dimension of the linear system).
    pub fn n_free(&self) -> usize {
        self.n_free
    }

    /// Number of Dirichlet dofs.
    pub fn n_dirichlet(&self) -> usize {
        self.n_dirichlet
    }

    pub fn n_total(&self) -> usize {
        self.n_free + self.n_dirichlet
    }

    pub fn dof_coord(&self, dof: usize) -> [f64; 2] {
        self.dof_coords[dof]
    }

    pub fn dof_class(&self, dof: usize) -> DofClass {
        self.dof_class[dof]
    }

    pub fn vertex_dof(&self, v: usize) -> usize {
        self.vertex_dof[v]
    }

    pub fn edge_midpoint_dof(&self, e: usize) -> usize {
        self.edge_dof[e]
    }

    /// The six dofs of triangle `t`, ordered vertices `(0,1,2)` then
    /// midpoints of edges `(0,1)`, `(1,2)`, `(2,0)`.
    pub fn tri_dofs(&self, t: usize) -> [usize; 6] {
        let [a, b, c] = self.mesh.triangle(t);
        let eab = self.mesh.edge_index(a, b).unwrap();
        let ebc = self.mesh.edge_index(b, c).unwrap();
        let eca = self.mesh.edge_index(c, a).unwrap();
        [
            self.vertex_dof[a],
            self.vertex_dof[b],
            self.vertex_dof[c],
            self.edge_dof[eab],
            self.edge_dof[ebc],
            self.edge_dof[eca],
        ]
    }

    /// The three trace dofs of an edge: (first endpoint, midpoint, second
    /// endpoint) in the orientation given.
    pub fn edge_trace_dofs(&self, a: usize, b: usize) -> [usize; 3] {
        let e = self.mesh.edge_index(a, b).expect("edge exists");
        [self.vertex_dof[a], self.edge_dof[e], self.vertex_dof[b]]
    }
}

/// Build the P2 space and classify/renumber its dofs.
///
/// Dirichlet wins over Robin wins over Neumann wherever boundary pieces
/// with different tags meet at a vertex.
pub fn build_p2_space(mesh: impl Into<Arc<Mesh>>) -> FeSpace {
    let mesh: Arc<Mesh> = mesh.into();
    let nv = mesh.n_vertices();
    let ne = mesh.n_edges();
    let n_raw = nv + ne;
    // raw numbering: vertices then edge midpoints
    let mut class = vec![DofClass::Interior; n_raw];
    let rank = |c: DofClass| match c {
        DofClass::Dirichlet => 3u8,
        DofClass::Robin => 2,
        DofClass::Neumann => 1,
        DofClass::Interior => 0,
    };
    let mut bump = |slot: &mut DofClass, tag: BoundaryTag| {
        let new = match tag {
            BoundaryTag::Dirichlet => DofClass::Dirichlet,
            BoundaryTag::Robin => DofClass::Robin,
            BoundaryTag::Neumann => DofClass::Neumann,
        };
        if rank(new) > rank(*slot) {
            *slot = new;
        }
    };
    for &(a, b, tag) in mesh.boundary_edges() {
        let e = mesh.edge_index(a, b).unwrap();
        bump(&mut class[a], tag);
        bump(&mut class[b], tag);
        bump(&mut class[nv + e], tag);
    }
    // renumber: free dofs first (in raw order), then Dirichlet
    let mut raw_to_global = vec![usize::MAX; n_raw];
    let mut next = 0usize;
    for (raw, &c) in class.iter().enumerate() {
        if c != DofClass::Dirichlet {
            raw_to_global[raw] = next;
            next += 1;
        }
    }
    let n_free = next;
    for (raw, &c) in class.iter().enumerate() {
        if c == DofClass::Dirichlet {
            raw_to_global[raw] = next;
            next += 1;
        }
    }
    let n_dirichlet = next - n_free;

    let mut dof_coords = vec![[0.0; 2]; n_raw];
    let mut dof_class = vec![DofClass::Interior; n_raw];
    let mut vertex_dof = vec![0usize; nv];
    let mut edge_dof = vec![0usize; ne];
    for v in 0..nv {
        let g = raw_to_global[v];
        vertex_dof[v] = g;
        dof_coords[g] = mesh.vertex(v);
        dof_class[g] = class[v];
    }
    for e in 0..ne {
        let g = raw_to_global[nv + e];
        edge_dof[e] = g;
        let (a, b) = mesh.edges()[e];
        let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
        dof_coords[g] = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        dof_class[g] = class[nv + e];
    }

    FeSpace {
        mesh,
        vertex_dof,
        edge_dof,
        dof_coords,
        dof_class,
        n_free,
        n_dirichlet,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_square(nx: usize, ny: usize, tags: SideTags) -> Mesh {
        build_rect_mesh((0.0, 1.0), (0.0, 1.0), nx, ny, tags).unwrap()
    }

    #[test]
    fn smallest_mesh() {
        let m = unit_square(1, 1, SideTags::all(BoundaryTag::Robin));
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(m.n_triangles(), 2);
        assert_eq!(m.boundary_edges().len(), 4);
    }

    #[test]
    fn rect_2x1_euler_characteristic() {
        let m = build_rect_mesh((0.0, 2.0), (0.0, 1.0), 2, 1, SideTags::all(BoundaryTag::Robin))
            .unwrap();
        assert_eq!(m.n_vertices(), 6);
        assert_eq!(m.n_triangles(), 4);
        // edges by enumeration: V - E + F = 2 with the outer face counted
        assert_eq!(m.n_edges(), 9);
        assert_eq!(
            m.n_vertices() as i64 - m.n_edges() as i64 + (m.n_triangles() as i64 + 1),
            2
        );
    }

    #[test]
    fn areas_sum_to_rectangle_area() {
        for (nx, ny) in [(1, 1), (3, 2), (7, 5)] {
            let m = build_rect_mesh(
                (0.0, 2.5),
                (-1.0, 0.5),
                nx,
                ny,
                SideTags::all(BoundaryTag::Robin),
            )
            .unwrap();
            let area = 2.5 * 1.5;
            assert!((m.total_area() - area).abs() <= 1e-12 * area);
        }
    }

    #[test]
    fn zero_cells_rejected() {
        assert!(build_rect_mesh((0.0, 1.0), (0.0, 1.0), 0, 1, SideTags::all(BoundaryTag::Robin))
            .is_err());
        assert!(
            build_rect_mesh((0.0, 0.0), (0.0, 1.0), 1, 1, SideTags::all(BoundaryTag::Robin))
                .is_err()
        );
    }

    #[test]
    fn refine_identity() {
        let m = unit_square(2, 2, SideTags::all(BoundaryTag::Robin));
        let r = refine_uniform(&m, 1).unwrap();
        assert_eq!(r.n_vertices(), m.n_vertices());
        assert_eq!(r.n_triangles(), m.n_triangles());
    }

    #[test]
    fn refine_two_triangles_by_two() {
        let m = unit_square(1, 1, SideTags::all(BoundaryTag::Robin));
        let r = refine_uniform(&m, 2).unwrap();
        assert_eq!(r.n_triangles(), 8);
        // input vertices are a prefix of the output
        for v in 0..m.n_vertices() {
            assert_eq!(m.vertex(v), r.vertex(v));
        }
        assert!((r.h_max() - m.h_max() / 2.0).abs() <= 1e-14);
    }

    #[test]
    fn refine_preserves_area() {
        let m = build_rect_mesh((0.0, 3.0), (0.0, 2.0), 3, 2, SideTags::all(BoundaryTag::Robin))
            .unwrap();
        for s in [2usize, 3, 4] {
            let r = refine_uniform(&m, s).unwrap();
            assert!((r.total_area() - 6.0).abs() <= 1e-12 * 6.0);
            assert_eq!(r.n_triangles(), m.n_triangles() * s * s);
        }
    }

    #[test]
    fn refine_zero_rejected() {
        let m = unit_square(1, 1, SideTags::all(BoundaryTag::Robin));
        assert!(refine_uniform(&m, 0).is_err());
    }

    #[test]
    fn resolution_rule() {
        let tau = 2.0 * std::f64::consts::PI;
        assert!((mesh_resolution_for(tau, 10.0).unwrap() - 0.1).abs() < 1e-15);
        assert!((mesh_resolution_for(tau, 5.0).unwrap() - 0.2).abs() < 1e-15);
        assert!((mesh_resolution_for(2.0 * tau, 10.0).unwrap() - 0.05).abs() < 1e-15);
        assert!(mesh_resolution_for(0.0, 10.0).is_err());
        assert!(mesh_resolution_for(1.0, -1.0).is_err());
    }

    #[test]
    fn p2_space_unit_square_counts() {
        let m = unit_square(1, 1, SideTags::all(BoundaryTag::Robin));
        let sp = build_p2_space(m);
        // 4 vertices + 5 edges
        assert_eq!(sp.n_total(), 9);
        assert_eq!(sp.n_dirichlet(), 0);
        assert_eq!(sp.n_free(), 9);
    }

    #[test]
    fn p2_space_all_dirichlet() {
        let m = unit_square(1, 1, SideTags::all(BoundaryTag::Dirichlet));
        let sp = build_p2_space(m);
        assert_eq!(sp.n_dirichlet(), 8);
        assert_eq!(sp.n_free(), 1);
        // the single free dof is the diagonal midpoint
        let c = sp.dof_coord(0);
        assert!((c[0] - 0.5).abs() < 1e-15 && (c[1] - 0.5).abs() < 1e-15);
        assert_eq!(sp.dof_class(0), DofClass::Interior);
    }

    #[test]
    fn p2_dof_ordering_contract() {
        let m = unit_square(3, 2, SideTags::all(BoundaryTag::Dirichlet));
        let sp = build_p2_space(m);
        for d in 0..sp.n_free() {
            assert_ne!(sp.dof_class(d), DofClass::Dirichlet);
        }
        for d in sp.n_free()..sp.n_total() {
            assert_eq!(sp.dof_class(d), DofClass::Dirichlet);
        }
    }

    #[test]
    fn corner_precedence_dirichlet_wins() {
        let m = unit_square(
            2,
            2,
            SideTags {
                left: BoundaryTag::Dirichlet,
                right: BoundaryTag::Neumann,
                bottom: BoundaryTag::Robin,
                top: BoundaryTag::Robin,
            },
        );
        let sp = build_p2_space(m.clone());
        // bottom-left corner vertex is shared by a Dirichlet and a Robin edge
        let corner = (0..m.n_vertices())
            .find(|&v| m.vertex(v) == [0.0, 0.0])
            .unwrap();
        assert_eq!(sp.dof_class(sp.vertex_dof(corner)), DofClass::Dirichlet);
        // bottom-right corner: Robin beats Neumann
        let corner = (0..m.n_vertices())
            .find(|&v| m.vertex(v) == [1.0, 0.0])
            .unwrap();
        assert_eq!(sp.dof_class(sp.vertex_dof(corner)), DofClass::Robin);
    }

    #[test]
    fn dof_classification_is_a_partition() {
        let m = unit_square(
            4,
            3,
            SideTags {
                left: BoundaryTag::Dirichlet,
                right: BoundaryTag::Robin,
                bottom: BoundaryTag::Neumann,
                top: BoundaryTag::Robin,
            },
        );
        let sp = build_p2_space(m);
        let mut counts = [0usize; 4];
        for d in 0..sp.n_total() {
            counts[match sp.dof_class(d) {
                DofClass::Interior => 0,
                DofClass::Dirichlet => 1,
                DofClass::Neumann => 2,
                DofClass::Robin => 3,
            }] += 1;
        }
        assert_eq!(counts.iter().sum::<usize>(), sp.n_total());
        assert!(counts.iter().all(|&c| c > 0));
    }

    #[test]
    fn interior_edges_have_opposite_orientations() {
        let m = unit_square(3, 3, SideTags::all(BoundaryTag::Robin));
        for e in 0..m.n_edges() {
            if let [Some(t1), Some(t2)] = m.edge_triangles(e) {
                let (a, b) = m.edges()[e];
                // directed occurrence of (a,b) in each triangle
                let dir = |t: usize| {
                    let tri = m.triangle(t);
                    (0..3).find_map(|k| {
                        let (u, v) = (tri[k], tri[(k + 1) % 3]);
                        if (u, v) == (a, b) {
                            Some(1)
                        } else if (u, v) == (b, a) {
                            Some(-1)
                        } else {
                            None
                        }
                    })
                };
                assert_eq!(dir(t1).unwrap() + dir(t2).unwrap(), 0);
            }
        }
    }

    #[test]
    fn dump_format() {
        let m = unit_square(1, 1, SideTags::all(BoundaryTag::Robin));
        let mut buf = Vec::new();
        m.dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(first, "4 2 4");
        assert_eq!(text.lines().count(), 1 + 4 + 2 + 4);
    }

    proptest! {
        #[test]
        fn refinement_composes(nx in 1usize..4, ny in 1usize..4, a in 1usize..4, b in 1usize..4) {
            let m = unit_square(nx, ny, SideTags::all(BoundaryTag::Robin));
            let r1 = refine_uniform(&refine_uniform(&m, a).unwrap(), b).unwrap();
            let r2 = refine_uniform(&m, a * b).unwrap();
            prop_assert_eq!(r1.n_vertices(), r2.n_vertices());
            prop_assert_eq!(r1.n_triangles(), r2.n_triangles());
            prop_assert_eq!(r1.n_edges(), r2.n_edges());
        }
    }
}
