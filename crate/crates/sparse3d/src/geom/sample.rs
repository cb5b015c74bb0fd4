//! Area-weighted surface sampling.

use nalgebra::Vector3;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geom::cloud::PointCloud;
use crate::geom::mesh::TriangleMesh;

/// Cumulative face-area table for picking faces proportionally to area.
struct AreaTable {
    cumulative: Vec<f64>,
    total: f64,
}

impl AreaTable {
    fn build(mesh: &TriangleMesh) -> Result<Self> {
        let mut cumulative = Vec::with_capacity(mesh.faces.len());
        let mut total = 0.0;
        for i in 0..mesh.faces.len() {
            total += mesh.face_area(i);
            cumulative.push(total);
        }
        if total <= 0.0 {
            return Err(Error::Degenerate("mesh has zero total surface area".into()));
        }
        Ok(Self { cumulative, total })
    }

    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.total;
        match self.cumulative.partition_point(|&c| c <= u) {
            i if i >= self.cumulative.len() => self.cumulative.len() - 1,
            i => i,
        }
    }
}

/// Uniform point inside a triangle via the reflected-barycentric trick.
fn barycentric_point<R: Rng + ?Sized>(
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    c: &Vector3<f64>,
    rng: &mut R,
) -> Vector3<f64> {
    let mut u = rng.random::<f64>();
    let mut v = rng.random::<f64>();
    if u + v > 1.0 {
        u = 1.0 - u;
        v = 1.0 - v;
    }
    a + (b - a) * u + (c - a) * v
}

/// Draw `k` i.i.d. surface samples with probability proportional to face
/// area; each sample carries the unit normal of its source face.
pub fn sample_surface<R: Rng + ?Sized>(
    mesh: &TriangleMesh,
    k: usize,
    rng: &mut R,
) -> Result<PointCloud> {
    if k < 1 {
        return Err(Error::Invalid("need k >= 1 samples".into()));
    }
    let table = AreaTable::build(mesh)?;
    let mut points = Vec::with_capacity(k);
    let mut normals = Vec::with_capacity(k);
    for _ in 0..k {
        let f = table.pick(rng);
        let [ia, ib, ic] = mesh.faces[f];
        points.push(barycentric_point(
            &mesh.vertices[ia],
            &mesh.vertices[ib],
            &mesh.vertices[ic],
            rng,
        ));
        normals.push(mesh.face_normal(f));
    }
    Ok(PointCloud { points, normals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;

    fn two_triangle_mesh() -> TriangleMesh {
        // Face 0 has area 3, face 1 has area 1 (ratio 3:1).
        TriangleMesh {
            vertices: vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(3.0, 0.0, 0.0),
                Vector3::new(0.0, 2.0, 0.0),
                Vector3::new(10.0, 0.0, 0.0),
                Vector3::new(12.0, 0.0, 0.0),
                Vector3::new(10.0, 1.0, 0.0),
            ],
            faces: vec![[0, 1, 2], [3, 4, 5]],
        }
    }

    #[test]
    fn samples_faces_proportionally_to_area() {
        let mesh = two_triangle_mesh();
        let mut rng = rng_from(0);
        let cloud = sample_surface(&mesh, 100_000, &mut rng).unwrap();
        // Face 0 points have x <= 3; face 1 points have x >= 10.
        let on_large = cloud.points.iter().filter(|p| p.x < 5.0).count();
        let fraction = on_large as f64 / cloud.len() as f64;
        assert!((fraction - 0.75).abs() < 0.01, "fraction {fraction}");
    }

    #[test]
    fn single_sample_lands_inside_triangle() {
        let mesh = TriangleMesh {
            vertices: vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
            ],
            faces: vec![[0, 1, 2]],
        };
        let mut rng = rng_from(1);
        let cloud = sample_surface(&mesh, 1, &mut rng).unwrap();
        let p = cloud.points[0];
        // Barycentric coordinates w.r.t. this right triangle are (x, y).
        assert!(p.x >= 0.0 && p.y >= 0.0 && p.x + p.y <= 1.0);
        assert_eq!(p.z, 0.0);
    }

    #[test]
    fn normals_come_from_face_winding() {
        let mesh = TriangleMesh {
            vertices: vec![
                Vector3::new(0.0, 0.0, 2.0),
                Vector3::new(1.0, 0.0, 2.0),
                Vector3::new(0.0, 1.0, 2.0),
            ],
            faces: vec![[0, 1, 2]],
        };
        let mut rng = rng_from(2);
        let cloud = sample_surface(&mesh, 16, &mut rng).unwrap();
        for n in &cloud.normals {
            assert_eq!(*n, Vector3::new(0.0, 0.0, 1.0));
        }
    }

    #[test]
    fn zero_area_mesh_is_rejected() {
        let v = Vector3::new(1.0, 1.0, 1.0);
        let mesh = TriangleMesh {
            vertices: vec![v, v, v],
            faces: vec![[0, 1, 2]],
        };
        assert!(sample_surface(&mesh, 4, &mut rng_from(3)).is_err());
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let mesh = two_triangle_mesh();
        let a = sample_surface(&mesh, 64, &mut rng_from(7)).unwrap();
        let b = sample_surface(&mesh, 64, &mut rng_from(7)).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            assert_eq!(p, q);
        }
    }
}
