//! Analytic shape sampling for desk-scale experiments (`synth4` dataset).
//!
//! Shapes are defined directly in canonical pose: centered at the origin
//! with the farthest surface point at distance 0.5, matching what
//! [`normalize_mesh`](crate::geom::mesh::normalize_mesh) produces for meshes.
//! Normals are exact analytic surface normals.

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geom::cloud::PointCloud;

/// Cylinder proportions: radius 0.3, half-height 0.4 puts the rim at
/// distance exactly 0.5.
const CYL_RADIUS: f64 = 0.3;
const CYL_HALF_HEIGHT: f64 = 0.4;

/// Torus radii, major + minor = 0.5.
pub const TORUS_MAJOR: f64 = 0.35;
pub const TORUS_MINOR: f64 = 0.15;

/// Cube with circumradius 0.5 has side `1/sqrt(3)`.
const CUBE_HALF_SIDE: f64 = 0.5 / 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    Sphere,
    Cube,
    Cylinder,
    Torus,
}

impl SynthKind {
    pub const ALL: [SynthKind; 4] = [Self::Sphere, Self::Cube, Self::Cylinder, Self::Torus];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Sphere => "sphere",
            Self::Cube => "cube",
            Self::Cylinder => "cylinder",
            Self::Torus => "torus",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sphere" => Ok(Self::Sphere),
            "cube" => Ok(Self::Cube),
            "cylinder" => Ok(Self::Cylinder),
            "torus" => Ok(Self::Torus),
            other => Err(Error::Config(format!("unknown synthetic shape `{other}`"))),
        }
    }
}

fn sample_sphere<R: Rng + ?Sized>(rng: &mut R) -> (Vector3<f64>, Vector3<f64>) {
    loop {
        let v = Vector3::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        let len = v.norm();
        if len > 1e-12 {
            let dir = v / len;
            return (dir * 0.5, dir);
        }
    }
}

fn sample_cube<R: Rng + ?Sized>(rng: &mut R) -> (Vector3<f64>, Vector3<f64>) {
    let face = rng.random_range(0..6usize);
    let axis = face / 2;
    let sign = if face % 2 == 0 { 1.0 } else { -1.0 };
    let a = (rng.random::<f64>() * 2.0 - 1.0) * CUBE_HALF_SIDE;
    let b = (rng.random::<f64>() * 2.0 - 1.0) * CUBE_HALF_SIDE;
    let mut p = Vector3::zeros();
    let mut n = Vector3::zeros();
    p[axis] = sign * CUBE_HALF_SIDE;
    n[axis] = sign;
    p[(axis + 1) % 3] = a;
    p[(axis + 2) % 3] = b;
    (p, n)
}

fn sample_cylinder<R: Rng + ?Sized>(rng: &mut R) -> (Vector3<f64>, Vector3<f64>) {
    let lateral = std::f64::consts::TAU * CYL_RADIUS * (2.0 * CYL_HALF_HEIGHT);
    let cap = std::f64::consts::PI * CYL_RADIUS * CYL_RADIUS;
    let u = rng.random::<f64>() * (lateral + 2.0 * cap);
    if u < lateral {
        let phi = rng.random::<f64>() * std::f64::consts::TAU;
        let z = (rng.random::<f64>() * 2.0 - 1.0) * CYL_HALF_HEIGHT;
        let (s, c) = phi.sin_cos();
        (
            Vector3::new(CYL_RADIUS * c, CYL_RADIUS * s, z),
            Vector3::new(c, s, 0.0),
        )
    } else {
        let sign = if u < lateral + cap { 1.0 } else { -1.0 };
        let phi = rng.random::<f64>() * std::f64::consts::TAU;
        let rho = CYL_RADIUS * rng.random::<f64>().sqrt();
        let (s, c) = phi.sin_cos();
        (
            Vector3::new(rho * c, rho * s, sign * CYL_HALF_HEIGHT),
            Vector3::new(0.0, 0.0, sign),
        )
    }
}

fn sample_torus<R: Rng + ?Sized>(rng: &mut R) -> (Vector3<f64>, Vector3<f64>) {
    let u = rng.random::<f64>() * std::f64::consts::TAU;
    // The area element scales with (R + r cos v); rejection keeps the
    // sampling uniform over the surface.
    let v = loop {
        let v = rng.random::<f64>() * std::f64::consts::TAU;
        let accept = (TORUS_MAJOR + TORUS_MINOR * v.cos()) / (TORUS_MAJOR + TORUS_MINOR);
        if rng.random::<f64>() < accept {
            break v;
        }
    };
    let (su, cu) = u.sin_cos();
    let (sv, cv) = v.sin_cos();
    let ring = TORUS_MAJOR + TORUS_MINOR * cv;
    (
        Vector3::new(ring * cu, ring * su, TORUS_MINOR * sv),
        Vector3::new(cv * cu, cv * su, sv),
    )
}

/// Sample one surface point with its analytic normal.
pub fn sample_point<R: Rng + ?Sized>(kind: SynthKind, rng: &mut R) -> (Vector3<f64>, Vector3<f64>) {
    match kind {
        SynthKind::Sphere => sample_sphere(rng),
        SynthKind::Cube => sample_cube(rng),
        SynthKind::Cylinder => sample_cylinder(rng),
        SynthKind::Torus => sample_torus(rng),
    }
}

/// Sample a `k`-point cloud from the analytic surface.
pub fn synth_shape<R: Rng + ?Sized>(kind: SynthKind, k: usize, rng: &mut R) -> Result<PointCloud> {
    if k < 3 {
        return Err(Error::CloudTooSmall {
            min: 3,
            got: k,
            what: "a synthetic shape",
        });
    }
    let mut points = Vec::with_capacity(k);
    let mut normals = Vec::with_capacity(k);
    for _ in 0..k {
        let (p, n) = sample_point(kind, rng);
        points.push(p);
        normals.push(n);
    }
    Ok(PointCloud { points, normals })
}

/// Dense canonical-pose position samples (no normals), used for voxel targets.
pub fn synth_surface_points<R: Rng + ?Sized>(
    kind: SynthKind,
    n: usize,
    rng: &mut R,
) -> Vec<Vector3<f64>> {
    (0..n).map(|_| sample_point(kind, rng).0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;

    #[test]
    fn sphere_points_on_radius_half_with_radial_normals() {
        let cloud = synth_shape(SynthKind::Sphere, 256, &mut rng_from(0)).unwrap();
        for (p, n) in cloud.points.iter().zip(&cloud.normals) {
            assert!((p.norm() - 0.5).abs() < 1e-9);
            assert!((n - p / p.norm()).norm() < 1e-9);
        }
    }

    #[test]
    fn cube_normals_are_axis_aligned() {
        let cloud = synth_shape(SynthKind::Cube, 256, &mut rng_from(1)).unwrap();
        for n in &cloud.normals {
            let nonzero = n.iter().filter(|c| c.abs() > 0.0).count();
            assert_eq!(nonzero, 1);
            assert!((n.norm() - 1.0).abs() < 1e-12);
        }
        let max = cloud.points.iter().map(|p| p.norm()).fold(0.0, f64::max);
        assert!(max <= 0.5 + 1e-12);
    }

    #[test]
    fn cylinder_rim_reaches_half() {
        let cloud = synth_shape(SynthKind::Cylinder, 4096, &mut rng_from(2)).unwrap();
        let max = cloud.points.iter().map(|p| p.norm()).fold(0.0, f64::max);
        assert!(max <= 0.5 + 1e-12);
        assert!(max > 0.45, "rim samples should approach 0.5, got {max}");
    }

    // Plug into the implicit torus form (sqrt(x^2+y^2) - R)^2 + z^2 = r^2.
    #[test]
    fn torus_points_satisfy_implicit_equation() {
        let cloud = synth_shape(SynthKind::Torus, 512, &mut rng_from(3)).unwrap();
        for p in &cloud.points {
            let ring = (p.x * p.x + p.y * p.y).sqrt() - TORUS_MAJOR;
            let residual = ring * ring + p.z * p.z - TORUS_MINOR * TORUS_MINOR;
            assert!(residual.abs() < 1e-9, "implicit residual {residual}");
        }
    }

    #[test]
    fn all_kinds_give_unit_normals() {
        for kind in SynthKind::ALL {
            let cloud = synth_shape(kind, 64, &mut rng_from(4)).unwrap();
            for n in &cloud.normals {
                assert!((n.norm() - 1.0).abs() < 1e-9, "{kind:?}");
            }
        }
    }

    #[test]
    fn too_few_points_rejected() {
        assert!(synth_shape(SynthKind::Sphere, 2, &mut rng_from(5)).is_err());
    }
}
