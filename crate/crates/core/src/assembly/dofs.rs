//! Global numbering of the degree-`N` Lagrange nodes: mesh vertices first,
//! then `N - 1` nodes per edge counted from the edge's lower vertex index,
//! then the element-interior nodes.

use crate::fe_basis::ReferenceElement;
use crate::mesh::{BoundaryTag, Mesh, NodeLayout};

#[derive(Clone, Debug)]
pub struct DofMap {
    nodes_per_element: usize,
    element_nodes: Vec<usize>,
    coords: Vec<[f64; 2]>,
    /// Free-dof index of each global node (`None` for constrained nodes).
    free: Vec<Option<usize>>,
    free_nodes: Vec<usize>,
    dirichlet_nodes: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, elem: &ReferenceElement) -> Self {
        let n = elem.degree();
        let np = elem.num_nodes();
        let nv = mesh.num_vertices();
        let ne = mesh.num_edges();
        let nint = elem.interior_nodes().len();
        let num_nodes = nv + ne * (n - 1) + mesh.num_triangles() * nint;

        let mut interior_slot = vec![usize::MAX; np];
        for (k, &i) in elem.interior_nodes().iter().enumerate() {
            interior_slot[i] = k;
        }
        let ref_coords = elem.node_coords();
        let mut element_nodes = vec![0; mesh.num_triangles() * np];
        let mut coords = vec![[0.0; 2]; num_nodes];
        for t in 0..mesh.num_triangles() {
            let tri = mesh.triangles()[t];
            let te = mesh.tri_edges(t);
            let slots = &mut element_nodes[t * np..(t + 1) * np];
            for (j, &vn) in elem.vertex_nodes().iter().enumerate() {
                slots[vn] = tri[j];
            }
            for i in 0..3 {
                let reversed = mesh.edge_reversed(t, i);
                let en = elem.edge_nodes(i);
                for k in 1..n {
                    let pos = if reversed { n - k } else { k };
                    slots[en[k]] = nv + te[i] * (n - 1) + pos - 1;
                }
            }
            for &i in elem.interior_nodes() {
                slots[i] = nv + ne * (n - 1) + t * nint + interior_slot[i];
            }
            let p = mesh.coords(t);
            for (local, &g) in slots.iter().enumerate() {
                let r = ref_coords[local];
                coords[g] = [
                    p[0][0] + r[0] * (p[1][0] - p[0][0]) + r[1] * (p[2][0] - p[0][0]),
                    p[0][1] + r[0] * (p[1][1] - p[0][1]) + r[1] * (p[2][1] - p[0][1]),
                ];
            }
        }

        let mut constrained = vec![false; num_nodes];
        for (e, edge) in mesh.edges().iter().enumerate() {
            if edge.boundary == Some(BoundaryTag::Dirichlet) {
                constrained[edge.v[0]] = true;
                constrained[edge.v[1]] = true;
                for k in 0..n.saturating_sub(1) {
                    constrained[nv + e * (n - 1) + k] = true;
                }
            }
        }
        let dirichlet_nodes: Vec<usize> = (0..num_nodes).filter(|&i| constrained[i]).collect();
        let mut free = vec![None; num_nodes];
        let mut free_nodes = Vec::new();
        for i in 0..num_nodes {
            if !constrained[i] {
                free[i] = Some(free_nodes.len());
                free_nodes.push(i);
            }
        }
        Self { nodes_per_element: np, element_nodes, coords, free, free_nodes, dirichlet_nodes }
    }

    pub fn num_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn num_free(&self) -> usize {
        self.free_nodes.len()
    }

    pub fn nodes_per_element(&self) -> usize {
        self.nodes_per_element
    }

    pub fn element(&self, t: usize) -> &[usize] {
        &self.element_nodes[t * self.nodes_per_element..(t + 1) * self.nodes_per_element]
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn free_index(&self, node: usize) -> Option<usize> {
        self.free[node]
    }

    pub fn free_map(&self) -> &[Option<usize>] {
        &self.free
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.free_nodes
    }

    pub fn dirichlet_nodes(&self) -> &[usize] {
        &self.dirichlet_nodes
    }

    /// Without Dirichlet nodes the free system keeps the constants as its kernel.
    pub fn has_constant_kernel(&self) -> bool {
        self.dirichlet_nodes.is_empty()
    }

    /// Restriction of a global nodal vector to the free dofs.
    pub fn restrict(&self, global: &[f64]) -> Vec<f64> {
        self.free_nodes.iter().map(|&n| global[n]).collect()
    }
}

impl NodeLayout for DofMap {
    fn num_nodes(&self) -> usize {
        self.coords.len()
    }

    fn element_nodes(&self, t: usize) -> &[usize] {
        self.element(t)
    }
}
