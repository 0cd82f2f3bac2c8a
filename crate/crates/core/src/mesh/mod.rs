//! Conforming triangulations with edge connectivity, boundary markers and
//! optional per-triangle region tags.

mod builders;
pub mod io;
mod refine;
mod subdomain;

use std::collections::HashMap;

use crate::error::MeshError;
pub use builders::{diamond_mesh, lshape_mesh, lshape_region, unit_square_mesh};
pub use refine::refine_marked;
pub use subdomain::{classify_subdomains, NodeClass, NodeLayout, SubdomainMask};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
}

impl BoundaryTag {
    pub fn code(self) -> u8 {
        match self {
            BoundaryTag::Dirichlet => 1,
            BoundaryTag::Neumann => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(BoundaryTag::Dirichlet),
            2 => Some(BoundaryTag::Neumann),
            _ => None,
        }
    }
}

/// An undirected edge. `v[0] < v[1]`; `tris` lists `(triangle, local edge)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub v: [usize; 2],
    pub tris: Vec<(usize, usize)>,
    pub boundary: Option<BoundaryTag>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.tris.len() == 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    regions: Option<Vec<u32>>,
    edges: Vec<Edge>,
    /// Local edge `i` of triangle `t` (from vertex `i` to `i+1`) is
    /// `edges[tri_edges[t][i]]`.
    tri_edges: Vec<[usize; 3]>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    /// Builds the edge structure and checks conformity, orientation and
    /// boundary tagging. Every boundary edge must appear in `boundary`.
    pub fn new(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        regions: Option<Vec<u32>>,
        boundary: &[([usize; 2], BoundaryTag)],
    ) -> Result<Self, MeshError> {
        if let Some(r) = &regions {
            if r.len() != triangles.len() {
                return Err(MeshError::InvalidParameter(format!(
                    "{} region tags for {} triangles",
                    r.len(),
                    triangles.len()
                )));
            }
        }
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut tri_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(MeshError::BadVertexIndex(t));
            }
            let area = signed_area(&[vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]]);
            if area <= 0.0 || !area.is_finite() {
                return Err(MeshError::DegenerateTriangle { index: t, area });
            }
            let mut te = [0; 3];
            for i in 0..3 {
                let k = key(tri[i], tri[(i + 1) % 3]);
                let e = *index.entry(k).or_insert_with(|| {
                    edges.push(Edge { v: [k.0, k.1], tris: Vec::new(), boundary: None });
                    edges.len() - 1
                });
                edges[e].tris.push((t, i));
                if edges[e].tris.len() > 2 {
                    return Err(MeshError::OverSharedEdge(k.0, k.1));
                }
                te[i] = e;
            }
            tri_edges.push(te);
        }
        for &(ab, tag) in boundary {
            let k = key(ab[0], ab[1]);
            let e = *index.get(&k).ok_or(MeshError::TaggedInteriorEdge(k.0, k.1))?;
            if !edges[e].is_boundary() {
                return Err(MeshError::TaggedInteriorEdge(k.0, k.1));
            }
            edges[e].boundary = Some(tag);
        }
        if let Some(e) = edges.iter().find(|e| e.is_boundary() && e.boundary.is_none()) {
            return Err(MeshError::UntaggedBoundaryEdge(e.v[0], e.v[1]));
        }
        Ok(Self { vertices, triangles, regions, edges, tri_edges })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn tri_edges(&self, t: usize) -> [usize; 3] {
        self.tri_edges[t]
    }

    pub fn has_regions(&self) -> bool {
        self.regions.is_some()
    }

    /// Region tag of triangle `t` (0 when the mesh carries no tags).
    pub fn region(&self, t: usize) -> u32 {
        self.regions.as_ref().map_or(0, |r| r[t])
    }

    pub fn regions(&self) -> Option<&[u32]> {
        self.regions.as_deref()
    }

    pub fn with_regions(mut self, regions: Vec<u32>) -> Result<Self, MeshError> {
        if regions.len() != self.triangles.len() {
            return Err(MeshError::InvalidParameter("region tag count".into()));
        }
        self.regions = Some(regions);
        Ok(self)
    }

    /// Re-tags every boundary edge with `f(midpoint)`.
    pub fn with_boundary(mut self, f: impl Fn([f64; 2]) -> BoundaryTag) -> Self {
        for i in 0..self.edges.len() {
            if self.edges[i].is_boundary() {
                let m = self.edge_midpoint(i);
                self.edges[i].boundary = Some(f(m));
            }
        }
        self
    }

    pub fn boundary_edges(&self) -> Vec<([usize; 2], BoundaryTag)> {
        self.edges
            .iter()
            .filter_map(|e| e.boundary.map(|tag| (e.v, tag)))
            .collect()
    }

    pub fn coords(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self, t: usize) -> f64 {
        signed_area(&self.coords(t))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.area(t)).sum()
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let p = self.coords(t);
        [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].v;
        dist(self.vertices[a], self.vertices[b])
    }

    pub fn edge_midpoint(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edges[e].v;
        let (p, q) = (self.vertices[a], self.vertices[b]);
        [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
    }

    /// Element diameter (longest edge).
    pub fn diameter(&self, t: usize) -> f64 {
        self.tri_edges[t].iter().map(|&e| self.edge_length(e)).fold(0.0, f64::max)
    }

    /// Outward unit normal of local edge `i` of triangle `t`.
    pub fn outward_normal(&self, t: usize, i: usize) -> [f64; 2] {
        let p = self.coords(t);
        let (a, b) = (p[i], p[(i + 1) % 3]);
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = dx.hypot(dy);
        [dy / len, -dx / len]
    }

    /// Whether local edge `i` of `t` runs against the global edge direction
    /// (`v[0] -> v[1]`).
    pub fn edge_reversed(&self, t: usize, i: usize) -> bool {
        self.triangles[t][i] != self.edges[self.tri_edges[t][i]].v[0]
    }

    /// Interior angles of triangle `t` at its three vertices.
    pub fn angles(&self, t: usize) -> [f64; 3] {
        let p = self.coords(t);
        let mut out = [0.0; 3];
        for i in 0..3 {
            let (a, b, c) = (p[i], p[(i + 1) % 3], p[(i + 2) % 3]);
            let u = [b[0] - a[0], b[1] - a[1]];
            let v = [c[0] - a[0], c[1] - a[1]];
            out[i] = (u[0] * v[1] - u[1] * v[0]).atan2(u[0] * v[0] + u[1] * v[1]);
        }
        out
    }

    pub fn min_angle(&self) -> f64 {
        (0..self.num_triangles())
            .flat_map(|t| self.angles(t))
            .fold(f64::INFINITY, f64::min)
    }

    /// Number of triangles incident to each edge is 1 (boundary) or 2.
    pub fn is_conforming(&self) -> bool {
        self.edges.iter().all(|e| {
            (e.tris.len() == 2 && e.boundary.is_none()) || (e.tris.len() == 1 && e.boundary.is_some())
        })
    }
}

pub fn signed_area(p: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> Mesh {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let t = vec![[0, 1, 2], [0, 2, 3]];
        let b = [[0, 1], [1, 2], [2, 3], [3, 0]].map(|e| (e, BoundaryTag::Dirichlet));
        Mesh::new(v, t, None, &b).unwrap()
    }

    #[test]
    fn edges_and_normals() {
        let m = two_triangles();
        assert_eq!(m.num_edges(), 5);
        assert!(m.is_conforming());
        let diag = m.tri_edges(0)[2];
        assert_eq!(m.edge(diag).tris.len(), 2);
        let n0 = m.outward_normal(0, 2);
        let n1 = m.outward_normal(1, 0);
        assert!((n0[0] + n1[0]).abs() < 1e-15 && (n0[1] + n1[1]).abs() < 1e-15);
        assert_ne!(m.edge_reversed(0, 2), m.edge_reversed(1, 0));
    }

    #[test]
    fn rejects_bad_input() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let b = [[0, 1], [1, 2], [2, 0]].map(|e| (e, BoundaryTag::Neumann));
        assert!(matches!(
            Mesh::new(v.clone(), vec![[0, 2, 1]], None, &b),
            Err(MeshError::DegenerateTriangle { .. })
        ));
        assert!(matches!(
            Mesh::new(v.clone(), vec![[0, 1, 2]], None, &b[..2]),
            Err(MeshError::UntaggedBoundaryEdge(..))
        ));
        assert!(matches!(Mesh::new(v, vec![[0, 1, 5]], None, &b), Err(MeshError::BadVertexIndex(0))));
    }
}
