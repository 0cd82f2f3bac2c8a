//! Warp & Blend nodal points on the triangle.

use super::quadrature::gauss_lobatto;
use crate::error::BasisError;

pub const MAX_DEGREE: usize = 12;

/// Blend parameters optimised for the Lebesgue constant, degrees 1..=15.
const ALPHA_OPT: [f64; 15] = [
    0.0000, 0.0000, 1.4152, 0.1001, 0.2751, 0.9800, 1.0999, 1.2832, 1.3648, 1.4773, 1.4959,
    1.5743, 1.5770, 1.6223, 1.6258,
];

/// One node of the degree-`N` nodal set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    /// Reference coordinates `(xi, eta)` on the triangle `(0,0), (1,0), (0,1)`.
    pub coords: [f64; 2],
    /// Equispaced lattice position: barycentric multi-index `(a, b, c)` with
    /// `a + b + c = N`, weights of vertices 0, 1, 2. Warping keeps nodes on the
    /// same edge or vertex as their lattice position.
    pub lattice: [usize; 3],
}

/// 1D warp function evaluated at `r` in `[-1, 1]`.
fn warp_factor(degree: usize, r: f64) -> f64 {
    let lgl = gauss_lobatto(degree);
    let eq: Vec<f64> = (0..=degree)
        .map(|i| -1.0 + 2.0 * i as f64 / degree as f64)
        .collect();
    let mut warp = 0.0;
    for i in 0..=degree {
        let mut l = 1.0;
        for j in 0..=degree {
            if j != i {
                l *= (r - eq[j]) / (eq[i] - eq[j]);
            }
        }
        warp += l * (lgl[i] - eq[i]);
    }
    if r.abs() < 1.0 - 1e-10 {
        warp / (1.0 - r * r)
    } else {
        0.0
    }
}

/// Warp & Blend nodes of degree `degree`, ordered by lattice `(c, b)`.
pub fn nodal_set(degree: usize) -> Result<Vec<Node>, BasisError> {
    if !(1..=MAX_DEGREE).contains(&degree) {
        return Err(BasisError::UnsupportedDegree(degree));
    }
    let n = degree as f64;
    let alpha = ALPHA_OPT[degree - 1];
    let sqrt3 = 3f64.sqrt();
    let (cos1, sin1) = ((2.0 * std::f64::consts::PI / 3.0).cos(), (2.0 * std::f64::consts::PI / 3.0).sin());
    let (cos2, sin2) = ((4.0 * std::f64::consts::PI / 3.0).cos(), (4.0 * std::f64::consts::PI / 3.0).sin());

    let mut nodes = Vec::with_capacity((degree + 1) * (degree + 2) / 2);
    for c in 0..=degree {
        for b in 0..=degree - c {
            let a = degree - b - c;
            // l1 <-> vertex 2 (top of the equilateral triangle), l2 <-> vertex 0, l3 <-> vertex 1
            let (l1, l2, l3) = (c as f64 / n, a as f64 / n, b as f64 / n);
            let mut x = -l2 + l3;
            let mut y = (-l2 - l3 + 2.0 * l1) / sqrt3;

            let blend1 = 4.0 * l2 * l3;
            let blend2 = 4.0 * l1 * l3;
            let blend3 = 4.0 * l1 * l2;
            let warp1 = blend1 * warp_factor(degree, l3 - l2) * (1.0 + (alpha * l1).powi(2));
            let warp2 = blend2 * warp_factor(degree, l1 - l3) * (1.0 + (alpha * l2).powi(2));
            let warp3 = blend3 * warp_factor(degree, l2 - l1) * (1.0 + (alpha * l3).powi(2));
            x += warp1 + cos1 * warp2 + cos2 * warp3;
            y += sin1 * warp2 + sin2 * warp3;

            // back to barycentric coordinates
            let m1 = (sqrt3 * y + 1.0) / 3.0;
            let m3 = (3.0 * x - sqrt3 * y + 2.0) / 6.0;
            let mut coords = [m3, m1];
            // snap exact zeros on edges so boundary membership is exact
            if c == 0 {
                coords[1] = 0.0;
            }
            if b == 0 {
                coords[0] = 0.0;
            }
            if a == 0 {
                let s = coords[0] + coords[1];
                coords[0] /= s;
                coords[1] /= s;
            }
            nodes.push(Node { coords, lattice: [a, b, c] });
        }
    }
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn barycentric(p: [f64; 2]) -> [f64; 3] {
        [1.0 - p[0] - p[1], p[0], p[1]]
    }

    #[test]
    fn degree_one_gives_vertices() {
        let nodes = nodal_set(1).unwrap();
        let mut pts: Vec<[f64; 2]> = nodes.iter().map(|n| n.coords).collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(pts, vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]);
    }

    #[test]
    fn out_of_range_degree() {
        assert_eq!(nodal_set(0).unwrap_err(), BasisError::UnsupportedDegree(0));
        assert_eq!(nodal_set(13).unwrap_err(), BasisError::UnsupportedDegree(13));
    }

    /// Applies all six permutations of the barycentric coordinates and checks
    /// that every image lands on some node of the set.
    #[test]
    fn nodal_set_is_s3_symmetric() {
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for degree in 1..=MAX_DEGREE {
            let nodes = nodal_set(degree).unwrap();
            let bary: Vec<[f64; 3]> = nodes.iter().map(|n| barycentric(n.coords)).collect();
            for perm in perms {
                for l in &bary {
                    let img = [l[perm[0]], l[perm[1]], l[perm[2]]];
                    let best = bary
                        .iter()
                        .map(|m| (0..3).map(|k| (m[k] - img[k]).abs()).fold(0.0, f64::max))
                        .fold(f64::INFINITY, f64::min);
                    assert!(best < 1e-12, "degree {degree}: symmetry defect {best}");
                }
            }
        }
    }

    #[test]
    fn edge_nodes_follow_lattice() {
        let nodes = nodal_set(8).unwrap();
        assert_eq!(nodes.len(), 45);
        let on_edge0 = nodes.iter().filter(|n| n.lattice[2] == 0).count();
        assert_eq!(on_edge0, 9);
        for n in &nodes {
            if n.lattice[2] == 0 {
                assert_eq!(n.coords[1], 0.0);
            }
            if n.lattice[0] == 0 {
                assert!((n.coords[0] + n.coords[1] - 1.0).abs() < 1e-15);
            }
        }
    }
}
