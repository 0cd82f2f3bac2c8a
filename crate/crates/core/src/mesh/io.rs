//! Plain-text mesh format, index base 0:
//!
//! ```text
//! nv nt ne
//! x y                  (nv lines)
//! i j k [region]       (nt lines)
//! a b tag              (ne boundary edges; 1 = Dirichlet, 2 = Neumann)
//! ```

use std::fmt::Write as _;

use super::{BoundaryTag, Mesh};
use crate::error::MeshError;

pub fn write_mesh(mesh: &Mesh) -> String {
    let boundary = mesh.boundary_edges();
    let mut s = String::new();
    writeln!(s, "{} {} {}", mesh.num_vertices(), mesh.num_triangles(), boundary.len()).unwrap();
    for v in mesh.vertices() {
        writeln!(s, "{:.17e} {:.17e}", v[0], v[1]).unwrap();
    }
    for (t, tri) in mesh.triangles().iter().enumerate() {
        if mesh.has_regions() {
            writeln!(s, "{} {} {} {}", tri[0], tri[1], tri[2], mesh.region(t)).unwrap();
        } else {
            writeln!(s, "{} {} {}", tri[0], tri[1], tri[2]).unwrap();
        }
    }
    for (ab, tag) in boundary {
        writeln!(s, "{} {} {}", ab[0], ab[1], tag.code()).unwrap();
    }
    s
}

pub fn read_mesh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut next = |what: &str| {
        lines.next().ok_or(MeshError::Parse { line: 0, message: format!("unexpected end of file, expected {what}") })
    };
    fn fields<T: std::str::FromStr>(line: usize, s: &str) -> Result<Vec<T>, MeshError> {
        s.split_whitespace()
            .map(|f| f.parse().map_err(|_| MeshError::Parse { line, message: format!("bad field {f:?}") }))
            .collect()
    }
    let (ln, header) = next("header")?;
    let h: Vec<usize> = fields(ln, header)?;
    if h.len() != 3 {
        return Err(MeshError::Parse { line: ln, message: "header must be `nv nt ne`".into() });
    }
    let mut vertices = Vec::with_capacity(h[0]);
    for _ in 0..h[0] {
        let (ln, l) = next("vertex")?;
        let f: Vec<f64> = fields(ln, l)?;
        if f.len() != 2 {
            return Err(MeshError::Parse { line: ln, message: "vertex needs 2 coordinates".into() });
        }
        vertices.push([f[0], f[1]]);
    }
    let mut tris = Vec::with_capacity(h[1]);
    let mut regions = Vec::with_capacity(h[1]);
    let mut tagged = None;
    for _ in 0..h[1] {
        let (ln, l) = next("triangle")?;
        let f: Vec<u32> = fields(ln, l)?;
        let has = match f.len() {
            3 => false,
            4 => true,
            _ => return Err(MeshError::Parse { line: ln, message: "triangle needs 3 indices and an optional region".into() }),
        };
        if *tagged.get_or_insert(has) != has {
            return Err(MeshError::Parse { line: ln, message: "region column present on some triangles only".into() });
        }
        tris.push([f[0] as usize, f[1] as usize, f[2] as usize]);
        regions.push(if has { f[3] } else { 0 });
    }
    let mut boundary = Vec::with_capacity(h[2]);
    for _ in 0..h[2] {
        let (ln, l) = next("boundary edge")?;
        let f: Vec<usize> = fields(ln, l)?;
        let tag = (f.len() == 3)
            .then(|| BoundaryTag::from_code(f[2] as u8))
            .flatten()
            .ok_or(MeshError::Parse { line: ln, message: "boundary edge needs `a b tag` with tag 1 or 2".into() })?;
        boundary.push(([f[0], f[1]], tag));
    }
    Mesh::new(vertices, tris, tagged.unwrap_or(false).then_some(regions), &boundary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{diamond_mesh, lshape_mesh};

    #[test]
    fn round_trip_is_exact() {
        for m in [lshape_mesh(), diamond_mesh(1.0 / 32.0).unwrap()] {
            let back = read_mesh(&write_mesh(&m)).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn parse_errors_carry_line() {
        let err = read_mesh("3 1 3\n0 0\n1 0\n0 x\n").unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 4, .. }));
    }
}
