use std::collections::HashMap;

use super::{BoundaryTag, Mesh};
use crate::error::MeshError;

/// Structured grid over `[x0, x0 + nx*h] x [y0, y0 + ny*h]`, skipping cells for
/// which `keep(i, j)` is false. Each cell is cut along its rising diagonal.
fn grid(
    nx: usize,
    ny: usize,
    h: f64,
    keep: impl Fn(usize, usize) -> bool,
    region: impl Fn([f64; 2]) -> u32,
) -> (Vec<[f64; 2]>, Vec<[usize; 3]>, Vec<u32>) {
    let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut vid = |i: usize, j: usize, vertices: &mut Vec<[f64; 2]>| {
        *ids.entry((i, j)).or_insert_with(|| {
            vertices.push([i as f64 * h, j as f64 * h]);
            vertices.len() - 1
        })
    };
    let mut tris = Vec::new();
    let mut regions = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if !keep(i, j) {
                continue;
            }
            let a = vid(i, j, &mut vertices);
            let b = vid(i + 1, j, &mut vertices);
            let c = vid(i + 1, j + 1, &mut vertices);
            let d = vid(i, j + 1, &mut vertices);
            let r = region([(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]);
            tris.push([a, b, c]);
            tris.push([a, c, d]);
            regions.extend([r, r]);
        }
    }
    (vertices, tris, regions)
}

fn boundary_of(tris: &[[usize; 3]], tag: BoundaryTag) -> Vec<([usize; 2], BoundaryTag)> {
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for t in tris {
        for i in 0..3 {
            let (a, b) = (t[i], t[(i + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut out: Vec<_> = count
        .into_iter()
        .filter(|&(_, c)| c == 1)
        .map(|((a, b), _)| ([a, b], tag))
        .collect();
    out.sort_by_key(|e| e.0);
    out
}

/// `2 n^2` isosceles right triangles on the unit square, all boundary edges
/// tagged Dirichlet (retag with [`Mesh::with_boundary`]).
pub fn unit_square_mesh(n: usize) -> Result<Mesh, MeshError> {
    if n == 0 {
        return Err(MeshError::InvalidParameter("n must be at least 1".into()));
    }
    let (v, t, _) = grid(n, n, 1.0 / n as f64, |_, _| true, |_| 0);
    let b = boundary_of(&t, BoundaryTag::Dirichlet);
    Mesh::new(v, t, None, &b)
}

/// 64-triangle anisotropic mesh of the unit square built from a 4x4 grid of
/// cells, each fanned into four triangles around an inner vertex that sits
/// `ratio * H / 2` away from the bottom or top side (alternating by row).
/// Thin triangles of neighbouring rows pair into flat diamonds whose smallest
/// angle is `atan(ratio)`.
pub fn diamond_mesh(ratio: f64) -> Result<Mesh, MeshError> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(MeshError::InvalidParameter(format!("diamond ratio {ratio} outside (0, 1]")));
    }
    let m = 4;
    let h = 1.0 / m as f64;
    let mut vertices = Vec::new();
    for j in 0..=m {
        for i in 0..=m {
            vertices.push([i as f64 * h, j as f64 * h]);
        }
    }
    let corner = |i: usize, j: usize| j * (m + 1) + i;
    let mut tris = Vec::new();
    for j in 0..m {
        for i in 0..m {
            let offset = 0.5 * ratio * h;
            let y = if j % 2 == 0 { (j + 1) as f64 * h - offset } else { j as f64 * h + offset };
            vertices.push([(i as f64 + 0.5) * h, y]);
            let p = vertices.len() - 1;
            let (a, b, c, d) = (corner(i, j), corner(i + 1, j), corner(i + 1, j + 1), corner(i, j + 1));
            tris.extend([[a, b, p], [b, c, p], [c, d, p], [d, a, p]]);
        }
    }
    let b = boundary_of(&tris, BoundaryTag::Dirichlet);
    Mesh::new(vertices, tris, None, &b)
}

/// Inclusions of the L-shaped domain `[0,2]^2 \ [1,2]x[0,1]`, tagged 1, 2, 3;
/// the remainder is region 0.
pub const LSHAPE_INCLUSIONS: [[f64; 4]; 3] =
    [[0.2, 0.6, 0.2, 0.6], [0.2, 0.6, 1.4, 1.8], [1.4, 1.8, 1.4, 1.8]];

pub fn lshape_region(p: [f64; 2]) -> u32 {
    for (k, r) in LSHAPE_INCLUSIONS.iter().enumerate() {
        if p[0] > r[0] && p[0] < r[1] && p[1] > r[2] && p[1] < r[3] {
            return k as u32 + 1;
        }
    }
    0
}

/// 150 isosceles right triangles (grid spacing 0.2) on the L-shape, boundary
/// tagged Dirichlet, with the inclusions aligned to mesh edges.
pub fn lshape_mesh() -> Mesh {
    let n = 10;
    let (v, t, r) = grid(n, n, 0.2, |i, j| !(i >= n / 2 && j < n / 2), lshape_region);
    let b = boundary_of(&t, BoundaryTag::Dirichlet);
    Mesh::new(v, t, Some(r), &b).expect("structured L-shape mesh is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn unit_square_counts() {
        let m = unit_square_mesh(8).unwrap();
        assert_eq!((m.num_triangles(), m.num_vertices()), (128, 81));
        let m1 = unit_square_mesh(1).unwrap();
        assert_eq!(m1.num_triangles(), 2);
        assert!((0..2).all(|t| (m1.area(t) - 0.5).abs() < 1e-15));
        assert!((unit_square_mesh(4).unwrap().total_area() - 1.0).abs() < 1e-14);
        assert!(unit_square_mesh(0).is_err());
    }

    /// Brute-force angle check over every triangle.
    #[test]
    fn diamond_angles() {
        let iso = diamond_mesh(1.0).unwrap();
        assert_eq!(iso.num_triangles(), 64);
        assert!((iso.min_angle() - FRAC_PI_4).abs() < 1e-12);
        for r in [0.5, 0.25, 1.0 / 8.0, 1.0 / 32.0] {
            let m = diamond_mesh(r).unwrap();
            let target = r.atan();
            let a = m.min_angle();
            assert!(a >= 0.9 * target && a <= 1.1 * target, "ratio {r}: {a} vs {target}");
            assert!((m.total_area() - 1.0).abs() < 1e-14);
            assert!(m.is_conforming());
        }
        assert!(diamond_mesh(0.0).is_err());
        assert!(diamond_mesh(1.5).is_err());
    }

    #[test]
    fn lshape_regions_and_area() {
        let m = lshape_mesh();
        assert_eq!(m.num_triangles(), 150);
        let mut area = [0.0; 4];
        for t in 0..m.num_triangles() {
            area[m.region(t) as usize] += m.area(t);
        }
        for (k, r) in LSHAPE_INCLUSIONS.iter().enumerate() {
            assert!((area[k + 1] - (r[1] - r[0]) * (r[3] - r[2])).abs() < 1e-13);
        }
        assert!((area.iter().sum::<f64>() - 3.0).abs() < 1e-13);
        assert!((area[0] - (3.0 - 3.0 * 0.16)).abs() < 1e-13);
    }
}
