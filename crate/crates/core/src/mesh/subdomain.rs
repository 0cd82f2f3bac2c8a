use super::Mesh;
use crate::error::MeshError;

/// Global node numbering of a discretization on a mesh.
pub trait NodeLayout {
    fn num_nodes(&self) -> usize;
    fn element_nodes(&self, t: usize) -> &[usize];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeClass {
    Interior,
    Overlap,
    Exterior,
}

impl NodeClass {
    pub const ALL: [NodeClass; 3] = [NodeClass::Interior, NodeClass::Overlap, NodeClass::Exterior];

    pub fn name(self) -> &'static str {
        match self {
            NodeClass::Interior => "int",
            NodeClass::Overlap => "ovl",
            NodeClass::Exterior => "ext",
        }
    }

    fn rank(self) -> u8 {
        match self {
            NodeClass::Overlap => 2,
            NodeClass::Interior => 1,
            NodeClass::Exterior => 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubdomainMask {
    pub element_class: Vec<NodeClass>,
    pub node_class: Vec<NodeClass>,
}

impl SubdomainMask {
    /// 0/1 diagonal of the mask for `class`, indexed by global node.
    pub fn mask(&self, class: NodeClass) -> Vec<f64> {
        self.node_class.iter().map(|&c| if c == class { 1.0 } else { 0.0 }).collect()
    }
}

/// Elements with an edge on a region interface are overlap elements; other
/// elements inside a tagged inclusion (region != 0) are interior, the rest are
/// exterior. A node shared by several classes takes the highest of
/// overlap > interior > exterior.
pub fn classify_subdomains(mesh: &Mesh, layout: &impl NodeLayout) -> Result<SubdomainMask, MeshError> {
    if !mesh.has_regions() {
        return Err(MeshError::MissingRegions);
    }
    let element_class: Vec<NodeClass> = (0..mesh.num_triangles())
        .map(|t| {
            let on_interface = mesh.tri_edges(t).iter().any(|&e| {
                let tris = &mesh.edge(e).tris;
                tris.len() == 2 && mesh.region(tris[0].0) != mesh.region(tris[1].0)
            });
            if on_interface {
                NodeClass::Overlap
            } else if mesh.region(t) != 0 {
                NodeClass::Interior
            } else {
                NodeClass::Exterior
            }
        })
        .collect();
    let mut node_class = vec![NodeClass::Exterior; layout.num_nodes()];
    for (t, &c) in element_class.iter().enumerate() {
        for &n in layout.element_nodes(t) {
            if c.rank() > node_class[n].rank() {
                node_class[n] = c;
            }
        }
    }
    Ok(SubdomainMask { element_class, node_class })
}
