//! Complex P2 finite element assembly for the heterogeneous Helmholtz
//! operator, with optional absorption, Robin boundary terms, right-hand
//! sides and Dirichlet elimination.
//!
//! Volume integrals use a symmetric 6-point order-4 triangle rule (exact
//! for products of P2 functions with constant coefficients); boundary
//! integrals use 3-point Gauss on each edge. The wave number is sampled at
//! quadrature points.

use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, FeSpace};
use crate::sparse::{ComplexSparseMatrix, CooBuilder};
use num_complex::Complex64;

/// Spatially varying wave number `k(x) > 0`.
pub trait WaveNumberField: Sync {
    fn eval(&self, x: [f64; 2]) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantWaveNumber(pub f64);

impl WaveNumberField for ConstantWaveNumber {
    fn eval(&self, _x: [f64; 2]) -> f64 {
        self.0
    }
}

/// Which volume term to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeTerm {
    /// grad-grad minus (k^2 + i eps) mass
    Helmholtz,
    /// grad-grad only; ignores the wave number and absorption
    Laplace,
}

/// Which edges receive the `i k` impedance mass term.
#[derive(Debug, Clone)]
pub enum RobinRule {
    None,
    /// all boundary edges tagged Robin
    PhysicalRobinEdges,
}

/// Everything `assemble` needs to know besides the space and wave number.
#[derive(Debug, Clone)]
pub struct AssemblyRecipe {
    pub volume: VolumeTerm,
    /// absorption coefficient; 0 reproduces the plain Helmholtz form
    pub absorption: f64,
    pub robin: RobinRule,
    /// must be at least 4 (the built-in rule is order 4)
    pub quadrature_order: usize,
}

impl AssemblyRecipe {
    pub fn helmholtz() -> Self {
        AssemblyRecipe {
            volume: VolumeTerm::Helmholtz,
            absorption: 0.0,
            robin: RobinRule::PhysicalRobinEdges,
            quadrature_order: 4,
        }
    }

    pub fn helmholtz_absorbed(eps: f64) -> Self {
        AssemblyRecipe {
            absorption: eps,
            ..AssemblyRecipe::helmholtz()
        }
    }

    pub fn laplace() -> Self {
        AssemblyRecipe {
            volume: VolumeTerm::Laplace,
            absorption: 0.0,
            robin: RobinRule::None,
            quadrature_order: 4,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.quadrature_order < 4 {
            return Err(Error::invalid(
                "quadrature order below 4 is not exact for P2 products",
            ));
        }
        Ok(())
    }
}

// 6-point order-4 symmetric triangle rule; weights sum to 1.
const TRI_QUAD: [([f64; 3], f64); 6] = [
    (
        [0.108103018168070, 0.445948490915965, 0.445948490915965],
        0.223381589678011,
    ),
    (
        [0.445948490915965, 0.108103018168070, 0.445948490915965],
        0.223381589678011,
    ),
    (
        [0.445948490915965, 0.445948490915965, 0.108103018168070],
        0.223381589678011,
    ),
    (
        [0.816847572980459, 0.091576213509771, 0.091576213509771],
        0.109951743655322,
    ),
    (
        [0.091576213509771, 0.816847572980459, 0.091576213509771],
        0.109951743655322,
    ),
    (
        [0.091576213509771, 0.091576213509771, 0.816847572980459],
        0.109951743655322,
    ),
];

// 3-point Gauss on [0,1]; weights sum to 1.
const EDGE_QUAD: [(f64, f64); 3] = [
    (0.1127016653792583, 0.2777777777777778),
    (0.5, 0.4444444444444444),
    (0.8872983346207417, 0.2777777777777778),
];

/// P2 shape functions at barycentric coordinates, local ordering
/// `[v0, v1, v2, m01, m12, m20]`.
#[inline]
fn shape(l: [f64; 3]) -> [f64; 6] {
    let [l0, l1, l2] = l;
    [
        l0 * (2.0 * l0 - 1.0),
        l1 * (2.0 * l1 - 1.0),
        l2 * (2.0 * l2 - 1.0),
        4.0 * l0 * l1,
        4.0 * l1 * l2,
        4.0 * l2 * l0,
    ]
}

/// Reference gradients (d/dxi, d/deta) of the P2 shape functions, with
/// barycentric l0 = 1 - xi - eta, l1 = xi, l2 = eta.
#[inline]
fn shape_grad_ref(l: [f64; 3]) -> [[f64; 2]; 6] {
    let [l0, l1, l2] = l;
    // dl0 = (-1,-1), dl1 = (1,0), dl2 = (0,1)
    [
        [1.0 - 4.0 * l0, 1.0 - 4.0 * l0],
        [4.0 * l1 - 1.0, 0.0],
        [0.0, 4.0 * l2 - 1.0],
        [4.0 * (l0 - l1), -4.0 * l1],
        [4.0 * l2, 4.0 * l1],
        [-4.0 * l2, 4.0 * (l0 - l2)],
    ]
}

/// Trace of the P2 basis on an edge, parameter t in [0,1] from the first
/// endpoint: ordering (first endpoint, midpoint, second endpoint).
#[inline]
fn edge_shape(t: f64) -> [f64; 3] {
    [
        (1.0 - t) * (1.0 - 2.0 * t),
        4.0 * t * (1.0 - t),
        t * (2.0 * t - 1.0),
    ]
}

struct ElementGeometry {
    /// physical gradients of the 6 shape functions at each quadrature point
    grads: [[[f64; 2]; 6]; 6],
    /// shape values at each quadrature point
    shapes: [[f64; 6]; 6],
    /// quadrature points in physical coordinates
    points: [[f64; 2]; 6],
    /// quadrature weights scaled by the element area
    weights: [f64; 6],
}

fn element_geometry(space: &FeSpace, t: usize) -> ElementGeometry {
    let mesh = space.mesh();
    let [a, b, c] = mesh.triangle(t);
    let (pa, pb, pc) = (mesh.vertex(a), mesh.vertex(b), mesh.vertex(c));
    let j = [[pb[0] - pa[0], pc[0] - pa[0]], [pb[1] - pa[1], pc[1] - pa[1]]];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let area = 0.5 * det;
    // J^{-T} rows
    let jinv_t = [
        [j[1][1] / det, -j[1][0] / det],
        [-j[0][1] / det, j[0][0] / det],
    ];
    let mut geo = ElementGeometry {
        grads: [[[0.0; 2]; 6]; 6],
        shapes: [[0.0; 6]; 6],
        points: [[0.0; 2]; 6],
        weights: [0.0; 6],
    };
    for (q, &(l, w)) in TRI_QUAD.iter().enumerate() {
        geo.shapes[q] = shape(l);
        let gr = shape_grad_ref(l);
        for i in 0..6 {
            geo.grads[q][i] = [
                jinv_t[0][0] * gr[i][0] + jinv_t[0][1] * gr[i][1],
                jinv_t[1][0] * gr[i][0] + jinv_t[1][1] * gr[i][1],
            ];
        }
        geo.points[q] = [
            pa[0] + j[0][0] * l[1] + j[0][1] * l[2],
            pa[1] + j[1][0] * l[1] + j[1][1] * l[2],
        ];
        geo.weights[q] = w * area;
    }
    geo
}

fn sample_k(k: &dyn WaveNumberField, x: [f64; 2]) -> Result<f64> {
    let v = k.eval(x);
    if !(v > 0.0) {
        return Err(Error::invalid(format!(
            "non-positive wave number {v} sampled at ({}, {})",
            x[0], x[1]
        )));
    }
    Ok(v)
}

/// Assemble the volume part of the form over a set of elements, mapping
/// global dofs through `map` (dofs mapped to `None` are dropped, which is
/// how Dirichlet elimination is expressed locally).
pub(crate) fn assemble_volume_into(
    builder: &mut CooBuilder,
    space: &FeSpace,
    elements: &[usize],
    volume: VolumeTerm,
    absorption: f64,
    k: &dyn WaveNumberField,
    map: &dyn Fn(usize) -> Option<usize>,
) -> Result<()> {
    for &t in elements {
        let geo = element_geometry(space, t);
        let dofs = space.tri_dofs(t);
        let mut elem = [[Complex64::new(0.0, 0.0); 6]; 6];
        for q in 0..6 {
            let w = geo.weights[q];
            let mass_coeff = match volume {
                VolumeTerm::Laplace => Complex64::new(0.0, 0.0),
                VolumeTerm::Helmholtz => {
                    let kq = sample_k(k, geo.points[q])?;
                    -Complex64::new(kq * kq, absorption)
                }
            };
            for i in 0..6 {
                let gi = geo.grads[q][i];
                let ni = geo.shapes[q][i];
                for j in 0..6 {
                    let gj = geo.grads[q][j];
                    let dot = gi[0] * gj[0] + gi[1] * gj[1];
                    elem[i][j] += w * (Complex64::new(dot, 0.0) + mass_coeff * ni * geo.shapes[q][j]);
                }
            }
        }
        for i in 0..6 {
            let Some(ri) = map(dofs[i]) else { continue };
            for j in 0..6 {
                let Some(cj) = map(dofs[j]) else { continue };
                builder.push(ri, cj, elem[i][j]);
            }
        }
    }
    Ok(())
}

/// Assemble an edge mass term `coeff(x) * phi_j phi_i` over the listed
/// edges (given as vertex pairs), mapping dofs through `map`.
pub(crate) fn assemble_edge_mass_into(
    builder: &mut CooBuilder,
    space: &FeSpace,
    edges: &[(usize, usize)],
    coeff: &dyn Fn([f64; 2]) -> Result<Complex64>,
    map: &dyn Fn(usize) -> Option<usize>,
) -> Result<()> {
    let mesh = space.mesh();
    for &(a, b) in edges {
        let pa = mesh.vertex(a);
        let pb = mesh.vertex(b);
        let len = mesh.edge_length(a, b);
        let dofs = space.edge_trace_dofs(a, b);
        let mut elem = [[Complex64::new(0.0, 0.0); 3]; 3];
        for &(t, w) in &EDGE_QUAD {
            let x = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
            let cq = coeff(x)?;
            let n = edge_shape(t);
            for i in 0..3 {
                for j in 0..3 {
                    elem[i][j] += w * len * cq * n[i] * n[j];
                }
            }
        }
        for i in 0..3 {
            let Some(ri) = map(dofs[i]) else { continue };
            for j in 0..3 {
                let Some(cj) = map(dofs[j]) else { continue };
                builder.push(ri, cj, elem[i][j]);
            }
        }
    }
    Ok(())
}

/// Assemble the full `(n+d) x (n+d)` system matrix before elimination:
/// entry `(i, j)` is
/// `int grad phi_j . grad phi_i - (k^2 + i eps) phi_j phi_i dx
///  + int_{Gamma_R} i k phi_j phi_i ds`.
pub fn assemble(
    space: &FeSpace,
    recipe: &AssemblyRecipe,
    k: &dyn WaveNumberField,
) -> Result<ComplexSparseMatrix> {
    recipe.validate()?;
    let dim = space.n_total();
    let mut builder = CooBuilder::new(dim, dim);
    let all: Vec<usize> = (0..space.mesh().n_triangles()).collect();
    assemble_volume_into(
        &mut builder,
        space,
        &all,
        recipe.volume,
        recipe.absorption,
        k,
        &|d| Some(d),
    )?;
    if let RobinRule::PhysicalRobinEdges = recipe.robin {
        let robin_edges: Vec<(usize, usize)> = space
            .mesh()
            .boundary_edges()
            .iter()
            .filter(|&&(_, _, tag)| tag == BoundaryTag::Robin)
            .map(|&(a, b, _)| (a, b))
            .collect();
        assemble_edge_mass_into(
            &mut builder,
            space,
            &robin_edges,
            &|x| Ok(Complex64::new(0.0, sample_k(k, x)?)),
            &|d| Some(d),
        )?;
    }
    Ok(builder.build())
}

/// Plain mass matrix `int phi_j phi_i` over the whole domain (full size).
pub fn assemble_mass(space: &FeSpace) -> ComplexSparseMatrix {
    let dim = space.n_total();
    let mut builder = CooBuilder::new(dim, dim);
    for t in 0..space.mesh().n_triangles() {
        let geo = element_geometry(space, t);
        let dofs = space.tri_dofs(t);
        for q in 0..6 {
            let w = geo.weights[q];
            for i in 0..6 {
                for j in 0..6 {
                    builder.push(
                        dofs[i],
                        dofs[j],
                        Complex64::new(w * geo.shapes[q][i] * geo.shapes[q][j], 0.0),
                    );
                }
            }
        }
    }
    builder.build()
}

/// Right-hand side from a volume source: entry `i = int f phi_i dx`,
/// full length `n + d`.
pub fn assemble_rhs(
    space: &FeSpace,
    source: &dyn Fn([f64; 2]) -> Complex64,
) -> Vec<Complex64> {
    let mut rhs = vec![Complex64::new(0.0, 0.0); space.n_total()];
    for t in 0..space.mesh().n_triangles() {
        let geo = element_geometry(space, t);
        let dofs = space.tri_dofs(t);
        for q in 0..6 {
            let f = source(geo.points[q]) * geo.weights[q];
            for i in 0..6 {
                rhs[dofs[i]] += f * geo.shapes[q][i];
            }
        }
    }
    rhs
}

/// Boundary right-hand side `int_e g phi_i ds` accumulated over the given
/// edges (used to drive problems by impedance data).
pub fn assemble_edge_rhs(
    space: &FeSpace,
    edges: &[(usize, usize)],
    g: &dyn Fn([f64; 2]) -> Complex64,
) -> Vec<Complex64> {
    let mesh = space.mesh();
    let mut rhs = vec![Complex64::new(0.0, 0.0); space.n_total()];
    for &(a, b) in edges {
        let pa = mesh.vertex(a);
        let pb = mesh.vertex(b);
        let len = mesh.edge_length(a, b);
        let dofs = space.edge_trace_dofs(a, b);
        for &(t, w) in &EDGE_QUAD {
            let x = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
            let gq = g(x) * (w * len);
            let n = edge_shape(t);
            for i in 0..3 {
                rhs[dofs[i]] += gq * n[i];
            }
        }
    }
    rhs
}

/// Eliminate Dirichlet dofs: returns the leading `n x n` block and the
/// lifted right-hand side `f_i = rhs_i - sum_l A[i, n+l] u_l`.
pub fn eliminate_dirichlet(
    a_full: &ComplexSparseMatrix,
    rhs_full: &[Complex64],
    dirichlet_values: &[Complex64],
) -> Result<(ComplexSparseMatrix, Vec<Complex64>)> {
    let total = a_full.n_rows();
    let d = dirichlet_values.len();
    if rhs_full.len() != total || d > total {
        return Err(Error::invalid("eliminate_dirichlet: length mismatch"));
    }
    let n = total - d;
    if d == 0 {
        return Ok((a_full.clone(), rhs_full.to_vec()));
    }
    let free: Vec<usize> = (0..n).collect();
    let a = a_full.submatrix(&free, &free);
    let mut f = rhs_full[0..n].to_vec();
    for i in 0..n {
        let (cols, vals) = a_full.row(i);
        for (&c, &v) in cols.iter().zip(vals) {
            if c >= n {
                f[i] -= v * dirichlet_values[c - n];
            }
        }
    }
    Ok((a, f))
}

/// Mass matrix on a set of interface edges, restricted to the given dofs.
/// Entry `(i, j) = int_{Gamma} phi_{dof_set[j]} phi_{dof_set[i]} ds`.
pub fn assemble_interface_mass(
    space: &FeSpace,
    edges: &[(usize, usize)],
    dof_set: &[usize],
) -> Result<ComplexSparseMatrix> {
    if edges.is_empty() || dof_set.is_empty() {
        return Err(Error::invalid("empty interface"));
    }
    let mut pos = std::collections::HashMap::with_capacity(dof_set.len());
    for (p, &g) in dof_set.iter().enumerate() {
        pos.insert(g, p);
    }
    let mut builder = CooBuilder::new(dof_set.len(), dof_set.len());
    assemble_edge_mass_into(
        &mut builder,
        space,
        edges,
        &|_| Ok(Complex64::new(1.0, 0.0)),
        &|d| pos.get(&d).copied(),
    )?;
    Ok(builder.build())
}

/// Evaluate a P2 finite element function (given by its full dof vector)
/// at barycentric coordinates of a triangle.
pub fn eval_p2(space: &FeSpace, coeffs: &[Complex64], t: usize, bary: [f64; 3]) -> Complex64 {
    let dofs = space.tri_dofs(t);
    let n = shape(bary);
    (0..6).map(|i| coeffs[dofs[i]] * n[i]).sum()
}

/// L2 norm of the difference between a P2 function and a reference field,
/// integrated with the assembly quadrature.
pub fn l2_error(
    space: &FeSpace,
    coeffs: &[Complex64],
    exact: &dyn Fn([f64; 2]) -> Complex64,
) -> f64 {
    let mut acc = 0.0;
    for t in 0..space.mesh().n_triangles() {
        let geo = element_geometry(space, t);
        let dofs = space.tri_dofs(t);
        for q in 0..6 {
            let mut uh = Complex64::new(0.0, 0.0);
            for i in 0..6 {
                uh += coeffs[dofs[i]] * geo.shapes[q][i];
            }
            acc += geo.weights[q] * (uh - exact(geo.points[q])).norm_sqr();
        }
    }
    acc.sqrt()
}
