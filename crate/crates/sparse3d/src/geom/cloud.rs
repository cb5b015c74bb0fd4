//! Oriented point clouds and rigid motions.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// K oriented surface samples: positions plus unit normals.
#[derive(Debug, Clone)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
    pub normals: Vec<Vector3<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vector3<f64>>, normals: Vec<Vector3<f64>>) -> Result<Self> {
        if points.len() != normals.len() {
            return Err(Error::Invalid(format!(
                "point/normal count mismatch: {} vs {}",
                points.len(),
                normals.len()
            )));
        }
        if points.len() < 2 {
            return Err(Error::CloudTooSmall {
                min: 2,
                got: points.len(),
                what: "a point cloud",
            });
        }
        for (i, p) in points.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::Invalid(format!("non-finite point at index {i}")));
            }
        }
        for (i, n) in normals.iter().enumerate() {
            if (n.norm() - 1.0).abs() > 1e-6 {
                return Err(Error::Invalid(format!(
                    "normal {i} is not unit length (|n| = {})",
                    n.norm()
                )));
            }
        }
        Ok(Self { points, normals })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Scale all positions by `s` (normals are unaffected by uniform scaling).
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            points: self.points.iter().map(|p| p * s).collect(),
            normals: self.normals.clone(),
        }
    }
}

/// Apply the rigid motion `p -> R p + t` to positions; normals rotate only.
pub fn apply_rigid(cloud: &PointCloud, rot: &Matrix3<f64>, t: &Vector3<f64>) -> PointCloud {
    PointCloud {
        points: cloud.points.iter().map(|p| rot * p + t).collect(),
        normals: cloud.normals.iter().map(|n| rot * n).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::rotation::{random_rotation, RotationMode};
    use crate::seed::rng_from;

    fn random_cloud(k: usize, seed: u64) -> PointCloud {
        use rand::Rng;
        let mut rng = rng_from(seed);
        let points = (0..k)
            .map(|_| {
                Vector3::new(
                    rng.random::<f64>(),
                    rng.random::<f64>(),
                    rng.random::<f64>(),
                )
            })
            .collect();
        let normals = (0..k)
            .map(|_| {
                Vector3::new(
                    rng.random::<f64>() - 0.5,
                    rng.random::<f64>() - 0.5,
                    rng.random::<f64>() - 0.5,
                )
                .normalize()
            })
            .collect();
        PointCloud::new(points, normals).unwrap()
    }

    #[test]
    fn identity_motion_is_noop() {
        let cloud = random_cloud(8, 1);
        let out = apply_rigid(&cloud, &Matrix3::identity(), &Vector3::zeros());
        for (a, b) in cloud.points.iter().zip(&out.points) {
            assert_eq!(a, b);
        }
        for (a, b) in cloud.normals.iter().zip(&out.normals) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rigid_motion_preserves_distances_and_normal_angles() {
        let cloud = random_cloud(10, 2);
        let mut rng = rng_from(3);
        let rot = random_rotation(RotationMode::So3, &mut rng);
        let t = Vector3::new(0.3, -1.2, 2.0);
        let out = apply_rigid(&cloud, &rot, &t);
        for i in 0..cloud.len() {
            assert!((out.normals[i].norm() - 1.0).abs() < 1e-9);
            for j in (i + 1)..cloud.len() {
                let d0 = (cloud.points[i] - cloud.points[j]).norm();
                let d1 = (out.points[i] - out.points[j]).norm();
                assert!((d0 - d1).abs() < 1e-12, "distance changed: {d0} vs {d1}");
                let a0 = cloud.normals[i].dot(&cloud.normals[j]);
                let a1 = out.normals[i].dot(&out.normals[j]);
                assert!((a0 - a1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_non_unit_normals() {
        let points = vec![Vector3::zeros(), Vector3::new(1.0, 0.0, 0.0)];
        let normals = vec![Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.5, 0.0, 0.0)];
        assert!(PointCloud::new(points, normals).is_err());
    }
}
