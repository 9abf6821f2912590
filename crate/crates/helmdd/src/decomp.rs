//! Element-based domain decomposition: non-overlapping partitions, overlap
//! growth by element layers, restriction maps and the Boolean partition of
//! unity.
//!
//! The partition of unity is Boolean: a dof is owned by the subdomain whose
//! non-overlapping part contains the dof's owning element (the smallest-id
//! element the dof touches). This makes `sum_s R_s^T D_s R_s = I` an exact
//! integer identity.

use crate::error::{Error, Result};
use crate::mesh::{DofClass, FeSpace, Mesh};
use num_complex::Complex64;
use std::collections::{HashMap, HashSet};
use std::io::BufRead;

/// How the non-overlapping partition was produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionMode {
    /// triangles binned by centroid x-coordinate into equal-count bins
    Strips,
    /// triangles binned into a px-by-py grid of bounding-box cells
    Grid { px: usize, py: usize },
    /// read from an external element-to-subdomain file
    Imported,
}

/// Non-overlapping element partition.
#[derive(Debug, Clone)]
pub struct Partition {
    pub n_subdomains: usize,
    /// owner[t] = subdomain id of triangle t
    pub owner: Vec<usize>,
    pub mode: PartitionMode,
}

/// Geometric partitioner. Strips order triangles by centroid x-coordinate
/// (ties by index) and cut into equal-count bins; grid mode bins centroids
/// into uniform bounding-box cells and requires `px * py == n`.
pub fn partition_geometric(mesh: &Mesh, n: usize, mode: PartitionMode) -> Result<Partition> {
    let nt = mesh.n_triangles();
    if n == 0 {
        return Err(Error::invalid("subdomain count must be at least 1"));
    }
    if n > nt {
        return Err(Error::invalid(format!(
            "{n} subdomains requested but the mesh has only {nt} elements"
        )));
    }
    let mut owner = vec![0usize; nt];
    match mode {
        PartitionMode::Strips => {
            let mut order: Vec<usize> = (0..nt).collect();
            order.sort_by(|&a, &b| {
                let ca = mesh.triangle_centroid(a)[0];
                let cb = mesh.triangle_centroid(b)[0];
                ca.total_cmp(&cb).then(a.cmp(&b))
            });
            for (rank, &t) in order.iter().enumerate() {
                owner[t] = rank * n / nt;
            }
        }
        PartitionMode::Grid { px, py } => {
            if px * py != n {
                return Err(Error::invalid(format!(
                    "grid partition {px}x{py} does not give {n} subdomains"
                )));
            }
            let (mut x0, mut x1, mut y0, mut y1) =
                (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
            for v in 0..mesh.n_vertices() {
                let p = mesh.vertex(v);
                x0 = x0.min(p[0]);
                x1 = x1.max(p[0]);
                y0 = y0.min(p[1]);
                y1 = y1.max(p[1]);
            }
            for t in 0..nt {
                let c = mesh.triangle_centroid(t);
                let ix = (((c[0] - x0) / (x1 - x0) * px as f64) as usize).min(px - 1);
                let iy = (((c[1] - y0) / (y1 - y0) * py as f64) as usize).min(py - 1);
                owner[t] = iy * px + ix;
            }
        }
        PartitionMode::Imported => {
            return Err(Error::invalid(
                "imported partitions come from import_partition, not partition_geometric",
            ));
        }
    }
    let mut counts = vec![0usize; n];
    for &o in &owner {
        counts[o] += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::invalid(format!("subdomain {empty} received no elements")));
    }
    Ok(Partition {
        n_subdomains: n,
        owner,
        mode,
    })
}

/// Read an element-to-subdomain map: one integer per line, line `t` giving
/// the subdomain of triangle `t` (the usual external partitioner output).
pub fn import_partition(mesh: &Mesh, reader: impl BufRead) -> Result<Partition> {
    let mut owner = Vec::with_capacity(mesh.n_triangles());
    for (ln, line) in reader.lines().enumerate() {
        let line = line?;
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let id: usize = s
            .parse()
            .map_err(|_| Error::invalid(format!("bad subdomain id on line {}", ln + 1)))?;
        owner.push(id);
    }
    if owner.len() != mesh.n_triangles() {
        return Err(Error::invalid(format!(
            "partition file has {} entries for {} triangles",
            owner.len(),
            mesh.n_triangles()
        )));
    }
    let n = owner.iter().copied().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; n];
    for &o in &owner {
        counts[o] += 1;
    }
    if counts.iter().any(|&c| c == 0) {
        return Err(Error::invalid("partition file leaves a subdomain empty"));
    }
    Ok(Partition {
        n_subdomains: n,
        owner,
        mode: PartitionMode::Imported,
    })
}

/// Where a local dof sits relative to the subdomain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubdomainBoundary {
    Interior,
    /// on the artificial interface Gamma_s (subdomain boundary away from
    /// the physical boundary)
    Artificial,
    /// on the physical boundary of the domain
    Physical,
}

/// One overlapping subdomain with its index maps and partition of unity.
#[derive(Debug, Clone)]
pub struct Subdomain {
    pub id: usize,
    /// overlapped element set, sorted
    pub elements: Vec<usize>,
    /// global free-dof indices supported on the element set, sorted
    pub dofs: Vec<usize>,
    global_to_local: HashMap<usize, usize>,
    /// per local dof
    pub boundary: Vec<SubdomainBoundary>,
    /// artificial interface edges (vertex pairs)
    pub artificial_edges: Vec<(usize, usize)>,
    /// Boolean partition-of-unity weights per local dof (exactly 0.0 or 1.0)
    pub pou: Vec<f64>,
}

impl Subdomain {
    pub fn n_local(&self) -> usize {
        self.dofs.len()
    }

    pub fn local_index(&self, global: usize) -> Option<usize> {
        self.global_to_local.get(&global).copied()
    }

    /// Local indices of the artificial-interface dofs, ascending.
    pub fn interface_dofs(&self) -> Vec<usize> {
        (0..self.n_local())
            .filter(|&l| self.boundary[l] == SubdomainBoundary::Artificial)
            .collect()
    }

    /// R_s: pick the local entries out of a global vector.
    pub fn restrict(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.dofs.iter().map(|&g| v[g]).collect()
    }

    /// R_s^T: scatter-add local entries into a global vector.
    pub fn prolong_add(&self, local: &[Complex64], global: &mut [Complex64]) {
        assert_eq!(local.len(), self.dofs.len());
        for (l, &g) in self.dofs.iter().enumerate() {
            global[g] += local[l];
        }
    }

    /// Apply the Boolean partition of unity in place.
    pub fn apply_pou(&self, local: &mut [Complex64]) {
        assert_eq!(local.len(), self.pou.len());
        for (v, &w) in local.iter_mut().zip(&self.pou) {
            if w == 0.0 {
                *v = Complex64::new(0.0, 0.0);
            }
        }
    }
}

/// A full overlapping decomposition of the free dofs.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub subdomains: Vec<Subdomain>,
    pub overlap_layers: usize,
    pub n_global: usize,
    /// number of subdomains whose overlapped element set contains each element
    pub element_multiplicity: Vec<usize>,
    pub partition: Partition,
}

impl Decomposition {
    pub fn n_subdomains(&self) -> usize {
        self.subdomains.len()
    }

    /// Elements lying in the overlap zone (in at least two subdomains).
    pub fn overlap_elements(&self) -> Vec<usize> {
        self.element_multiplicity
            .iter()
            .enumerate()
            .filter(|&(_, &m)| m >= 2)
            .map(|(t, _)| t)
            .collect()
    }
}

/// Grow each subdomain of the partition by `layers` element layers (one
/// layer adds every element sharing a dof with the current element set)
/// and build dof lists, interface classification and the partition of
/// unity.
pub fn grow_overlap(
    partition: &Partition,
    space: &FeSpace,
    layers: usize,
) -> Result<Decomposition> {
    if layers == 0 {
        return Err(Error::invalid("overlap must be at least one layer"));
    }
    let mesh = space.mesh();
    let nt = mesh.n_triangles();
    if partition.owner.len() != nt {
        return Err(Error::invalid("partition does not match the mesh"));
    }

    // dof ownership: smallest-id element containing the dof
    let owner_elem = dof_owner_elements(space);

    let mut subdomains = Vec::with_capacity(partition.n_subdomains);
    let mut element_multiplicity = vec![0usize; nt];
    for s in 0..partition.n_subdomains {
        let mut in_set = vec![false; nt];
        for t in 0..nt {
            if partition.owner[t] == s {
                in_set[t] = true;
            }
        }
        for _ in 0..layers {
            // one layer: every element sharing a vertex (hence any P2 dof)
            // with the current set
            let mut touched_vertex = vec![false; mesh.n_vertices()];
            for t in 0..nt {
                if in_set[t] {
                    for &v in &mesh.triangle(t) {
                        touched_vertex[v] = true;
                    }
                }
            }
            for t in 0..nt {
                if !in_set[t] && mesh.triangle(t).iter().any(|&v| touched_vertex[v]) {
                    in_set[t] = true;
                }
            }
        }
        let elements: Vec<usize> = (0..nt).filter(|&t| in_set[t]).collect();
        for &t in &elements {
            element_multiplicity[t] += 1;
        }

        // free dofs supported on the element set
        let mut dof_set: HashSet<usize> = HashSet::new();
        for &t in &elements {
            for &d in &space.tri_dofs(t) {
                if d < space.n_free() {
                    dof_set.insert(d);
                }
            }
        }
        let mut dofs: Vec<usize> = dof_set.into_iter().collect();
        dofs.sort_unstable();
        let global_to_local: HashMap<usize, usize> =
            dofs.iter().enumerate().map(|(l, &g)| (g, l)).collect();

        // local boundary edges: edges with exactly one incident element in
        // the set; split into physical and artificial
        let mut artificial_edges = Vec::new();
        let mut artificial_dofs: HashSet<usize> = HashSet::new();
        for e in 0..mesh.n_edges() {
            let inc = mesh.edge_triangles(e);
            let count = inc
                .iter()
                .filter(|t| t.map(|t| in_set[t]).unwrap_or(false))
                .count();
            if count == 1 {
                let (a, b) = mesh.edges()[e];
                if mesh.boundary_tag(a, b).is_none() {
                    artificial_edges.push((a, b));
                    for d in space.edge_trace_dofs(a, b) {
                        artificial_dofs.insert(d);
                    }
                }
            }
        }

        let boundary: Vec<SubdomainBoundary> = dofs
            .iter()
            .map(|&g| {
                if space.dof_class(g) != DofClass::Interior {
                    // free dof on the physical boundary (Robin or Neumann)
                    SubdomainBoundary::Physical
                } else if artificial_dofs.contains(&g) {
                    SubdomainBoundary::Artificial
                } else {
                    SubdomainBoundary::Interior
                }
            })
            .collect();

        let pou: Vec<f64> = dofs
            .iter()
            .map(|&g| {
                if partition.owner[owner_elem[g]] == s {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();

        subdomains.push(Subdomain {
            id: s,
            elements,
            dofs,
            global_to_local,
            boundary,
            artificial_edges,
            pou,
        });
    }

    Ok(Decomposition {
        subdomains,
        overlap_layers: layers,
        n_global: space.n_free(),
        element_multiplicity,
        partition: partition.clone(),
    })
}

/// Smallest-id element containing each free dof.
fn dof_owner_elements(space: &FeSpace) -> Vec<usize> {
    let mesh = space.mesh();
    let mut owner = vec![usize::MAX; space.n_free()];
    for t in 0..mesh.n_triangles() {
        for &d in &space.tri_dofs(t) {
            if d < space.n_free() && t < owner[d] {
                owner[d] = t;
            }
        }
    }
    owner
}
