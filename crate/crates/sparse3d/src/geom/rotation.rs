//! Random rotation sampling for augmentation.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Rotation regime applied to objects before descriptor extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationMode {
    /// Canonical dataset pose.
    None,
    /// Uniform rotation about the z axis.
    AroundZ,
    /// Uniform (Haar) rotation over SO(3).
    So3,
}

impl RotationMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Self::None),
            "z" | "aroundz" | "around_z" => Ok(Self::AroundZ),
            "so3" => Ok(Self::So3),
            other => Err(Error::Config(format!(
                "unknown rotation mode `{other}` (expected none | z | so3)"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::AroundZ => "z",
            Self::So3 => "so3",
        }
    }
}

/// Draw a rotation matrix for the given mode.
///
/// `So3` uses the unit-quaternion method: four standard normals, normalized,
/// converted to a matrix. This samples the Haar measure on SO(3).
pub fn random_rotation<R: Rng + ?Sized>(mode: RotationMode, rng: &mut R) -> Matrix3<f64> {
    match mode {
        RotationMode::None => Matrix3::identity(),
        RotationMode::AroundZ => {
            let theta = rng.random::<f64>() * std::f64::consts::TAU;
            let (s, c) = theta.sin_cos();
            Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
        }
        RotationMode::So3 => {
            let w: f64 = rng.sample(StandardNormal);
            let x: f64 = rng.sample(StandardNormal);
            let y: f64 = rng.sample(StandardNormal);
            let z: f64 = rng.sample(StandardNormal);
            let q = UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z));
            *q.to_rotation_matrix().matrix()
        }
    }
}

/// Check `R^T R = I` and `det R = 1` within `tol`.
pub fn is_rotation(rot: &Matrix3<f64>, tol: f64) -> bool {
    let gram = rot.transpose() * rot;
    let ortho = (gram - Matrix3::identity()).abs().max();
    ortho <= tol && (rot.determinant() - 1.0).abs() <= tol
}
