use std::collections::HashSet;

use super::Mesh;

/// Red refinement of the marked triangles with red-green closure.
///
/// Every marked triangle is split into four by its edge midpoints. Triangles
/// left with two or three split edges are upgraded to red until nothing
/// changes; those with a single split edge are bisected (green) towards the
/// opposite vertex. Region and boundary tags are inherited.
pub fn refine_marked(mesh: &Mesh, marked: &[usize]) -> Mesh {
    let marked: HashSet<usize> = marked.iter().copied().filter(|&t| t < mesh.num_triangles()).collect();
    let mut split = vec![false; mesh.num_edges()];
    for &t in &marked {
        for e in mesh.tri_edges(t) {
            split[e] = true;
        }
    }
    loop {
        let mut changed = false;
        for t in 0..mesh.num_triangles() {
            let te = mesh.tri_edges(t);
            let n = te.iter().filter(|&&e| split[e]).count();
            if n == 2 {
                for e in te {
                    split[e] = true;
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut vertices = mesh.vertices().to_vec();
    let mut midpoint = vec![usize::MAX; mesh.num_edges()];
    for (e, s) in split.iter().enumerate() {
        if *s {
            vertices.push(mesh.edge_midpoint(e));
            midpoint[e] = vertices.len() - 1;
        }
    }

    let mut tris = Vec::with_capacity(mesh.num_triangles() * 2);
    let mut regions = Vec::with_capacity(tris.capacity());
    for t in 0..mesh.num_triangles() {
        let [a, b, c] = mesh.triangles()[t];
        let te = mesh.tri_edges(t);
        let m: Vec<usize> = te.iter().map(|&e| midpoint[e]).collect();
        let r = mesh.region(t);
        let n = te.iter().filter(|&&e| split[e]).count();
        let children: Vec<[usize; 3]> = match n {
            0 => vec![[a, b, c]],
            3 => vec![[a, m[0], m[2]], [m[0], b, m[1]], [m[2], m[1], c], [m[0], m[1], m[2]]],
            _ => {
                let i = (0..3).find(|&i| split[te[i]]).unwrap();
                let v = mesh.triangles()[t];
                let (p, q, o) = (v[i], v[(i + 1) % 3], v[(i + 2) % 3]);
                vec![[p, m[i], o], [m[i], q, o]]
            }
        };
        for ch in children {
            tris.push(ch);
            regions.push(r);
        }
    }

    let mut boundary = Vec::new();
    for (e, edge) in mesh.edges().iter().enumerate() {
        if let Some(tag) = edge.boundary {
            if split[e] {
                boundary.push(([edge.v[0], midpoint[e]], tag));
                boundary.push(([midpoint[e], edge.v[1]], tag));
            } else {
                boundary.push((edge.v, tag));
            }
        }
    }
    let regions = mesh.has_regions().then_some(regions);
    Mesh::new(vertices, tris, regions, &boundary).expect("red-green refinement keeps the mesh valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{lshape_mesh, unit_square_mesh};

    #[test]
    fn uniform_and_empty() {
        let m = unit_square_mesh(1).unwrap();
        let r = refine_marked(&m, &[0, 1]);
        assert_eq!(r.num_triangles(), 8);
        assert_eq!(refine_marked(&m, &[]), m);
    }

    #[test]
    fn single_marked_triangle_is_closed() {
        let m = unit_square_mesh(3).unwrap();
        let r = refine_marked(&m, &[7]);
        assert!(r.is_conforming());
        assert!((r.total_area() - 1.0).abs() < 1e-14);
        assert!(r.num_triangles() > m.num_triangles());
    }

    #[test]
    fn regions_are_inherited() {
        let m = lshape_mesh();
        let marked: Vec<usize> = (0..m.num_triangles()).filter(|t| t % 7 == 0).collect();
        let r = refine_marked(&m, &marked);
        let mut before = [0.0; 4];
        let mut after = [0.0; 4];
        for t in 0..m.num_triangles() {
            before[m.region(t) as usize] += m.area(t);
        }
        for t in 0..r.num_triangles() {
            after[r.region(t) as usize] += r.area(t);
        }
        for k in 0..4 {
            assert!((before[k] - after[k]).abs() < 1e-13);
        }
    }
}
