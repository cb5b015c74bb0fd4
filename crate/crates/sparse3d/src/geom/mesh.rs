//! Triangle meshes and the OFF file format.
//!
//! The parser accepts both standard OFF (`OFF` on its own line, counts on the
//! next) and the ModelNet quirk where the counts are glued to the header
//! (`OFF490 518 0` on a single line). Only triangular faces are accepted.

use std::io::BufRead;

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Indexed triangle mesh. Counter-clockwise winding defines the outward
/// face normal.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    /// Validate invariants: at least one face, all indices in range, three
    /// distinct indices per face.
    pub fn new(vertices: Vec<Vector3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::Invalid("mesh has no faces".into()));
        }
        for (i, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Invalid(format!(
                    "face {i} references vertex out of range (nv={})",
                    vertices.len()
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Invalid(format!(
                    "face {i} has repeated vertex indices"
                )));
            }
        }
        Ok(Self { vertices, faces })
    }

    /// Unit outward normal of face `i` from winding order.
    pub fn face_normal(&self, i: usize) -> Vector3<f64> {
        let [a, b, c] = self.faces[i];
        let n = (self.vertices[b] - self.vertices[a]).cross(&(self.vertices[c] - self.vertices[a]));
        let len = n.norm();
        if len > 0.0 {
            n / len
        } else {
            Vector3::zeros()
        }
    }

    /// Area of face `i`.
    pub fn face_area(&self, i: usize) -> f64 {
        let [a, b, c] = self.faces[i];
        0.5 * (self.vertices[b] - self.vertices[a])
            .cross(&(self.vertices[c] - self.vertices[a]))
            .norm()
    }
}

/// Parse OFF text from a reader.
pub fn parse_off<R: BufRead>(reader: R) -> Result<TriangleMesh> {
    let mut lines = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        lines.push((idx + 1, trimmed.to_string()));
    }
    let mut it = lines.into_iter();

    let (hline, header) = it.next().ok_or_else(|| Error::Parse {
        line: 1,
        msg: "empty OFF stream".into(),
    })?;
    if !header.starts_with("OFF") {
        return Err(Error::Parse {
            line: hline,
            msg: format!("expected OFF header, got `{header}`"),
        });
    }

    // Counts either follow the header token on the same line (glued or
    // space-separated) or sit on the next line.
    let rest = header["OFF".len()..].trim();
    let (cline, counts_str) = if rest.is_empty() {
        it.next().ok_or_else(|| Error::Parse {
            line: hline,
            msg: "missing counts line".into(),
        })?
    } else {
        (hline, rest.to_string())
    };

    let counts: Vec<usize> = counts_str
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>().map_err(|_| Error::Parse {
                line: cline,
                msg: format!("bad count `{t}`"),
            })
        })
        .collect::<Result<_>>()?;
    if counts.len() < 2 {
        return Err(Error::Parse {
            line: cline,
            msg: "counts line needs `nv nf ne`".into(),
        });
    }
    let (nv, nf) = (counts[0], counts[1]);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, text) = it.next().ok_or_else(|| Error::Parse {
            line: cline,
            msg: "unexpected end of vertex list".into(),
        })?;
        let coords: Vec<f64> = text
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| Error::Parse {
                    line: ln,
                    msg: format!("bad coordinate `{t}`"),
                })
            })
            .collect::<Result<_>>()?;
        if coords.len() < 3 {
            return Err(Error::Parse {
                line: ln,
                msg: "vertex line needs 3 coordinates".into(),
            });
        }
        vertices.push(Vector3::new(coords[0], coords[1], coords[2]));
    }

    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, text) = it.next().ok_or_else(|| Error::Parse {
            line: cline,
            msg: "unexpected end of face list".into(),
        })?;
        let toks: Vec<&str> = text.split_whitespace().collect();
        let arity: usize =
            toks.first()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse {
                    line: ln,
                    msg: "bad face line".into(),
                })?;
        if arity != 3 {
            return Err(Error::Parse {
                line: ln,
                msg: format!("non-triangular face ({arity} vertices)"),
            });
        }
        if toks.len() < 4 {
            return Err(Error::Parse {
                line: ln,
                msg: "face line needs 3 indices".into(),
            });
        }
        let mut f = [0usize; 3];
        for (slot, t) in f.iter_mut().zip(&toks[1..4]) {
            let v: usize = t.parse().map_err(|_| Error::Parse {
                line: ln,
                msg: format!("bad face index `{t}`"),
            })?;
            if v >= nv {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("face index {v} out of range (nv={nv})"),
                });
            }
            *slot = v;
        }
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            return Err(Error::Parse {
                line: ln,
                msg: "face has repeated vertex indices".into(),
            });
        }
        faces.push(f);
    }

    TriangleMesh::new(vertices, faces)
}

/// Parse an OFF file from disk.
pub fn parse_off_file(path: &std::path::Path) -> Result<TriangleMesh> {
    let file = std::fs::File::open(path)?;
    parse_off(std::io::BufReader::new(file))
}

/// Translate the vertex centroid to the origin and scale uniformly so the
/// farthest vertex sits at distance 0.5 (object fits `[-0.5, 0.5]^3`).
pub fn normalize_mesh(mesh: &TriangleMesh) -> Result<TriangleMesh> {
    let n = mesh.vertices.len() as f64;
    let centroid: Vector3<f64> = mesh.vertices.iter().sum::<Vector3<f64>>() / n;
    let max_dist = mesh
        .vertices
        .iter()
        .map(|v| (v - centroid).norm())
        .fold(0.0_f64, f64::max);
    if max_dist <= 0.0 {
        return Err(Error::Degenerate(
            "all vertices coincide, cannot normalize".into(),
        ));
    }
    let scale = 0.5 / max_dist;
    let vertices = mesh
        .vertices
        .iter()
        .map(|v| (v - centroid) * scale)
        .collect();
    Ok(TriangleMesh {
        vertices,
        faces: mesh.faces.clone(),
    })
}

/// Axis-aligned unit cube as 8 vertices / 12 triangles, centered on `center`
/// with side length `side`. Windings are outward.
pub fn cube_mesh(center: Vector3<f64>, side: f64) -> TriangleMesh {
    let h = side / 2.0;
    let v = |x: f64, y: f64, z: f64| center + Vector3::new(x * h, y * h, z * h);
    let vertices = vec![
        v(-1., -1., -1.),
        v(1., -1., -1.),
        v(1., 1., -1.),
        v(-1., 1., -1.),
        v(-1., -1., 1.),
        v(1., -1., 1.),
        v(1., 1., 1.),
        v(-1., 1., 1.),
    ];
    let faces = vec![
        // -z
        [0, 2, 1],
        [0, 3, 2],
        // +z
        [4, 5, 6],
        [4, 6, 7],
        // -y
        [0, 1, 5],
        [0, 5, 4],
        // +y
        [2, 3, 7],
        [2, 7, 6],
        // -x
        [0, 4, 7],
        [0, 7, 3],
        // +x
        [1, 2, 6],
        [1, 6, 5],
    ];
    TriangleMesh { vertices, faces }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn cube_off() -> String {
        let mesh = cube_mesh(Vector3::zeros(), 1.0);
        let mut s = String::from("OFF\n8 12 0\n");
        for v in &mesh.vertices {
            s.push_str(&format!("{} {} {}\n", v.x, v.y, v.z));
        }
        for f in &mesh.faces {
            s.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
        }
        s
    }

    #[test]
    fn parses_minimal_cube() {
        let mesh = parse_off(Cursor::new(cube_off())).unwrap();
        assert_eq!(mesh.vertices.len(), 8);
        assert_eq!(mesh.faces.len(), 12);
    }

    #[test]
    fn parses_glued_header() {
        let body = cube_off();
        let glued = body.replacen("OFF\n8 12 0\n", "OFF8 12 0\n", 1);
        let mesh = parse_off(Cursor::new(glued)).unwrap();
        assert_eq!(mesh.vertices.len(), 8);
        assert_eq!(mesh.faces.len(), 12);

        // The exact quirk from ModelNet: counts glued with no space at all.
        let text = "OFF3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
        let mesh = parse_off(Cursor::new(text)).unwrap();
        assert_eq!(mesh.vertices.len(), 3);
        assert_eq!(mesh.faces.len(), 1);
    }

    #[test]
    fn rejects_quad_face() {
        let text = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        let err = parse_off(Cursor::new(text)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("non-triangular face"), "{msg}");
        assert!(msg.contains("line 7"), "line number missing: {msg}");
    }

    #[test]
    fn rejects_out_of_range_index() {
        let text = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 9\n";
        let err = parse_off(Cursor::new(text)).unwrap_err();
        assert!(err.to_string().contains("out of range"));
    }

    #[test]
    fn rejects_bad_header() {
        let text = "PLY\n3 1 0\n";
        assert!(parse_off(Cursor::new(text)).is_err());
    }

    #[test]
    fn skips_comments_and_blank_lines() {
        let text = "# comment\nOFF\n\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n# faces\n3 0 1 2\n";
        let mesh = parse_off(Cursor::new(text)).unwrap();
        assert_eq!(mesh.faces.len(), 1);
    }

    #[test]
    fn normalize_centers_and_scales() {
        let mesh = cube_mesh(Vector3::new(10.0, 10.0, 10.0), 1.0);
        let normed = normalize_mesh(&mesh).unwrap();
        let centroid: Vector3<f64> =
            normed.vertices.iter().sum::<Vector3<f64>>() / normed.vertices.len() as f64;
        assert!(centroid.norm() < 1e-12);
        let max = normed.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!((max - 0.5).abs() < 1e-9);
    }

    #[test]
    fn normalize_is_idempotent() {
        let mesh = cube_mesh(Vector3::new(3.0, -2.0, 5.0), 2.5);
        let once = normalize_mesh(&mesh).unwrap();
        let twice = normalize_mesh(&once).unwrap();
        for (a, b) in once.vertices.iter().zip(&twice.vertices) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn normalize_rejects_degenerate() {
        let v = Vector3::new(1.0, 2.0, 3.0);
        let mesh = TriangleMesh {
            vertices: vec![v, v, v],
            faces: vec![[0, 1, 2]],
        };
        assert!(normalize_mesh(&mesh).is_err());
    }
}
