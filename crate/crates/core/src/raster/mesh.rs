use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Indexed triangle soup in meters. `x` runs along raster columns, `y` along
/// raster rows and `z` is height above ground.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
            return Err(Error::format(
                "mesh",
                format!("triangle {t:?} indexes past {n} vertices"),
            ));
        }
        Ok(Self {
            vertices,
            triangles,
        })
    }

    /// Appends a triangle given by its corner positions.
    pub fn push_triangle(&mut self, a: [f64; 3], b: [f64; 3], c: [f64; 3]) {
        let base = self.vertices.len();
        self.vertices.extend([a, b, c]);
        self.triangles.push([base, base + 1, base + 2]);
    }

    /// Appends a quad as two triangles sharing the `a`-`c` diagonal.
    pub fn push_quad(&mut self, a: [f64; 3], b: [f64; 3], c: [f64; 3], d: [f64; 3]) {
        self.push_triangle(a, b, c);
        self.push_triangle(a, c, d);
    }

    pub fn corners(&self, tri: usize) -> [[f64; 3]; 3] {
        let [a, b, c] = self.triangles[tri];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Twice the signed area of the triangle's xy projection.
    pub fn projected_area2(&self, tri: usize) -> f64 {
        let [a, b, c] = self.corners(tri);
        (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
    }
}

/// Parses `v x y z` and `f i j k ...` records. Faces with more than three
/// corners are fan-triangulated; `i/t/n` index forms keep only the vertex.
pub fn parse_obj(text: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        let mut fields = line.split_whitespace();
        let bad = |msg: &str| Error::format("obj", format!("line {}: {msg}", lineno + 1));
        match fields.next() {
            Some("v") => {
                let coords: Vec<f64> = fields
                    .take(3)
                    .map(|f| f.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| bad(&e.to_string()))?;
                if coords.len() != 3 || coords.iter().any(|c| !c.is_finite()) {
                    return Err(bad("vertex needs three finite coordinates"));
                }
                vertices.push([coords[0], coords[1], coords[2]]);
            }
            Some("f") => {
                let idx: Vec<usize> = fields
                    .map(|f| {
                        let head = f.split('/').next().unwrap_or("");
                        let i: i64 = head.parse().map_err(|_| bad("bad face index"))?;
                        let resolved = if i < 0 {
                            vertices.len() as i64 + i
                        } else {
                            i - 1
                        };
                        usize::try_from(resolved).map_err(|_| bad("face index out of range"))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(bad("face needs at least three vertices"));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, triangles)
}

pub fn write_obj(mesh: &TriangleMesh) -> String {
    let mut out = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {} {} {}", v[0], v[1], v[2]);
    }
    for t in &mesh.triangles {
        let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_vertices_and_faces() {
        let text = "# roof\nv 0 0 1\nv 1 0 1\nv 1 1 2\nv 0 1 2\nf 1 2 3 4\nvn 0 0 1\n";
        let mesh = parse_obj(text).unwrap();
        assert_eq!(mesh.vertices.len(), 4);
        assert_eq!(mesh.triangles, vec![[0, 1, 2], [0, 2, 3]]);
        assert_eq!(parse_obj(&write_obj(&mesh)).unwrap(), mesh);
    }

    #[test]
    fn slash_and_negative_indices() {
        let mesh = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2//3 -1\n").unwrap();
        assert_eq!(mesh.triangles, vec![[0, 1, 2]]);
    }

    #[test]
    fn rejects_out_of_range_faces() {
        assert!(parse_obj("v 0 0 0\nf 1 2 3\n").is_err());
        assert!(parse_obj("v 0 0\n").is_err());
        assert!(parse_obj("v 0 0 0\nv 1 1 1\nf 1 2\n").is_err());
    }
}
