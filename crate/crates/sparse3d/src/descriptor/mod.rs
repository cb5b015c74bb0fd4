//! Rotation- and position-invariant point-pair/triplet descriptors.
//!
//! A descriptor row is built purely from distances and angles between
//! points and their surface normals, so rigid motions of the input cloud
//! leave it unchanged. Four variants are supported:
//!
//! - `RawTriangle` (width 3): sorted side lengths of a point triple, the
//!   classical baseline.
//! - `TypeA` (width 4): two oriented points; distance, each normal's angle
//!   to the connecting segment, and the normal-normal angle.
//! - `TypeB` (width 12): a triple described by the Type-A features of its
//!   three edges, with a canonical vertex order.
//! - `TypeC` (width 18): Type-B plus vertex-to-centroid distances and the
//!   triangle's interior angles. These extras are analytically redundant
//!   given the side lengths; they are included as pre-computed information.
//!
//! A fixed number `N_d` of rows is assembled per object by sampling point
//! combinations, optionally scale-normalized by the maximum side length.

pub mod cache;
pub mod set;

pub use set::{build_descriptor_set, DescriptorSet};

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Coincidence/collinearity threshold in normalized model units.
pub const DEGENERACY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DescriptorType {
    RawTriangle,
    TypeA,
    TypeB,
    TypeC,
}

impl DescriptorType {
    pub const ALL: [DescriptorType; 4] = [Self::RawTriangle, Self::TypeA, Self::TypeB, Self::TypeC];

    /// Feature row width.
    pub fn width(&self) -> usize {
        match self {
            Self::RawTriangle => 3,
            Self::TypeA => 4,
            Self::TypeB => 12,
            Self::TypeC => 18,
        }
    }

    /// Points consumed per descriptor (2 or 3).
    pub fn arity(&self) -> usize {
        match self {
            Self::TypeA => 2,
            _ => 3,
        }
    }

    /// Minimum cloud size for this descriptor.
    pub fn min_points(&self) -> usize {
        self.arity()
    }

    /// Columns holding lengths (scaled under scale normalization).
    pub fn length_columns(&self) -> &'static [usize] {
        match self {
            Self::RawTriangle => &[0, 1, 2],
            Self::TypeA => &[0],
            Self::TypeB => &[0, 4, 8],
            Self::TypeC => &[0, 4, 8, 12, 13, 14],
        }
    }

    /// Columns holding side lengths; their maximum over a set is `d_max`.
    pub fn side_length_columns(&self) -> &'static [usize] {
        match self {
            Self::RawTriangle => &[0, 1, 2],
            Self::TypeA => &[0],
            Self::TypeB | Self::TypeC => &[0, 4, 8],
        }
    }

    /// Columns holding angles that depend on surface normals (folded when
    /// normals are unoriented). Interior angles of Type-C do not qualify.
    pub fn normal_angle_columns(&self) -> &'static [usize] {
        match self {
            Self::RawTriangle => &[],
            Self::TypeA => &[1, 2, 3],
            Self::TypeB | Self::TypeC => &[1, 2, 3, 5, 6, 7, 9, 10, 11],
        }
    }

    /// All angle-valued columns.
    pub fn angle_columns(&self) -> &'static [usize] {
        match self {
            Self::RawTriangle => &[],
            Self::TypeA => &[1, 2, 3],
            Self::TypeB => &[1, 2, 3, 5, 6, 7, 9, 10, 11],
            Self::TypeC => &[1, 2, 3, 5, 6, 7, 9, 10, 11, 15, 16, 17],
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "raw" | "rawtriangle" => Ok(Self::RawTriangle),
            "a" | "typea" => Ok(Self::TypeA),
            "b" | "typeb" => Ok(Self::TypeB),
            "c" | "typec" => Ok(Self::TypeC),
            other => Err(Error::Config(format!(
                "unknown descriptor kind `{other}` (expected raw | a | b | c)"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::RawTriangle => "raw",
            Self::TypeA => "a",
            Self::TypeB => "b",
            Self::TypeC => "c",
        }
    }

    /// Stable on-disk tag for the `SPD1` cache.
    pub fn code(&self) -> u32 {
        match self {
            Self::RawTriangle => 0,
            Self::TypeA => 1,
            Self::TypeB => 2,
            Self::TypeC => 3,
        }
    }

    pub fn from_code(code: u32) -> Result<Self> {
        match code {
            0 => Ok(Self::RawTriangle),
            1 => Ok(Self::TypeA),
            2 => Ok(Self::TypeB),
            3 => Ok(Self::TypeC),
            other => Err(Error::Format(format!("unknown descriptor code {other}"))),
        }
    }
}

/// Angle between two unit vectors in `[0, pi]`.
#[inline]
pub fn angle(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.dot(b).clamp(-1.0, 1.0).acos()
}

/// Sign-flip-invariant angle in `[0, pi/2]` for unoriented normals.
#[inline]
fn fold_angle(theta: f64) -> f64 {
    theta.min(std::f64::consts::PI - theta)
}

#[inline]
fn maybe_fold(theta: f64, fold: bool) -> f64 {
    if fold {
        fold_angle(theta)
    } else {
        theta
    }
}

/// Type-A descriptor of an ordered oriented point pair:
/// `(d, angle(n1, u), angle(n2, u), angle(n1, n2))` with `u = (p2-p1)/d`.
pub fn type_a(
    p1: &Vector3<f64>,
    n1: &Vector3<f64>,
    p2: &Vector3<f64>,
    n2: &Vector3<f64>,
) -> Result<[f64; 4]> {
    let diff = p2 - p1;
    let d = diff.norm();
    if d < DEGENERACY_EPS {
        return Err(Error::Degenerate(
            "degenerate pair: coincident points".into(),
        ));
    }
    let u = diff / d;
    Ok([d, angle(n1, &u), angle(n2, &u), angle(n1, n2)])
}

/// Oriented-pair features for a set-valued pair: the lexicographically
/// smaller of the two orientations, so the result is a function of the
/// unordered pair. `None` when coincident.
pub(crate) fn pair_features(
    p: &Vector3<f64>,
    n: &Vector3<f64>,
    q: &Vector3<f64>,
    m: &Vector3<f64>,
    fold: bool,
) -> Option<[f64; 4]> {
    let diff = q - p;
    let d = diff.norm();
    if d < DEGENERACY_EPS {
        return None;
    }
    let u = diff / d;
    let forward = [
        d,
        maybe_fold(angle(n, &u), fold),
        maybe_fold(angle(m, &u), fold),
        maybe_fold(angle(n, m), fold),
    ];
    let v = -u;
    let backward = [
        d,
        maybe_fold(angle(m, &v), fold),
        maybe_fold(angle(n, &v), fold),
        maybe_fold(angle(m, n), fold),
    ];
    Some(if lex_le(&forward, &backward) {
        forward
    } else {
        backward
    })
}

#[inline]
fn lex_le(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    true
}

fn triangle_area(p1: &Vector3<f64>, p2: &Vector3<f64>, p3: &Vector3<f64>) -> f64 {
    0.5 * (p2 - p1).cross(&(p3 - p1)).norm()
}

fn triple_is_degenerate(p1: &Vector3<f64>, p2: &Vector3<f64>, p3: &Vector3<f64>) -> bool {
    (p2 - p1).norm() < DEGENERACY_EPS
        || (p3 - p2).norm() < DEGENERACY_EPS
        || (p1 - p3).norm() < DEGENERACY_EPS
        || triangle_area(p1, p2, p3) < DEGENERACY_EPS
}

/// Edge block `[d, angle(ni, to_j), angle(nj, to_i), angle(ni, nj)]` for the
/// ordered edge i -> j.
fn edge_block(
    pi: &Vector3<f64>,
    ni: &Vector3<f64>,
    pj: &Vector3<f64>,
    nj: &Vector3<f64>,
    fold: bool,
) -> [f64; 4] {
    let diff = pj - pi;
    let d = diff.norm();
    let u = diff / d;
    [
        d,
        maybe_fold(angle(ni, &u), fold),
        maybe_fold(angle(nj, &(-u)), fold),
        maybe_fold(angle(ni, nj), fold),
    ]
}

fn type_b_ordered(p: [&Vector3<f64>; 3], n: [&Vector3<f64>; 3], fold: bool) -> [f64; 12] {
    let e12 = edge_block(p[0], n[0], p[1], n[1], fold);
    let e23 = edge_block(p[1], n[1], p[2], n[2], fold);
    let e31 = edge_block(p[2], n[2], p[0], n[0], fold);
    let mut out = [0.0; 12];
    out[..4].copy_from_slice(&e12);
    out[4..8].copy_from_slice(&e23);
    out[8..].copy_from_slice(&e31);
    out
}

const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Canonical relabeling of a triple: opposite side lengths non-decreasing
/// (`d23 <= d31 <= d12`, vertex 1 faces the shortest side), ties broken by
/// lexicographic comparison of the candidate Type-B feature vectors.
/// Returns the permutation applied to the input indices.
pub fn canonicalize(points: [&Vector3<f64>; 3], normals: [&Vector3<f64>; 3]) -> Result<[usize; 3]> {
    canonical_order(points, normals, false)
        .ok_or_else(|| Error::Degenerate("degenerate triple: collinear or coincident".into()))
}

fn canonical_order(p: [&Vector3<f64>; 3], n: [&Vector3<f64>; 3], fold: bool) -> Option<[usize; 3]> {
    if triple_is_degenerate(p[0], p[1], p[2]) {
        return None;
    }
    let mut best: Option<([usize; 3], [f64; 12])> = None;
    for perm in PERMUTATIONS {
        let q = [p[perm[0]], p[perm[1]], p[perm[2]]];
        let d23 = (q[2] - q[1]).norm();
        let d31 = (q[0] - q[2]).norm();
        let d12 = (q[1] - q[0]).norm();
        if !(d23 <= d31 && d31 <= d12) {
            continue;
        }
        let m = [n[perm[0]], n[perm[1]], n[perm[2]]];
        let feats = type_b_ordered(q, m, fold);
        match &best {
            Some((_, cur)) if !lex_le(&feats, cur) => {}
            _ => best = Some((perm, feats)),
        }
    }
    best.map(|(perm, _)| perm)
}

#[allow(clippy::too_many_arguments)]
fn with_canonical_order<T>(
    p1: &Vector3<f64>,
    n1: &Vector3<f64>,
    p2: &Vector3<f64>,
    n2: &Vector3<f64>,
    p3: &Vector3<f64>,
    n3: &Vector3<f64>,
    fold: bool,
    f: impl FnOnce([&Vector3<f64>; 3], [&Vector3<f64>; 3]) -> T,
) -> Result<T> {
    let p = [p1, p2, p3];
    let n = [n1, n2, n3];
    let perm = canonical_order(p, n, fold)
        .ok_or_else(|| Error::Degenerate("degenerate triple: collinear or coincident".into()))?;
    Ok(f(
        [p[perm[0]], p[perm[1]], p[perm[2]]],
        [n[perm[0]], n[perm[1]], n[perm[2]]],
    ))
}

/// Type-B descriptor: Type-A-style features of the three ordered edges of
/// the canonically relabeled triple.
pub fn type_b(
    p1: &Vector3<f64>,
    n1: &Vector3<f64>,
    p2: &Vector3<f64>,
    n2: &Vector3<f64>,
    p3: &Vector3<f64>,
    n3: &Vector3<f64>,
) -> Result<[f64; 12]> {
    with_canonical_order(p1, n1, p2, n2, p3, n3, false, |p, n| {
        type_b_ordered(p, n, false)
    })
}

fn type_c_ordered(p: [&Vector3<f64>; 3], n: [&Vector3<f64>; 3], fold: bool) -> [f64; 18] {
    let b = type_b_ordered(p, n, fold);
    let centroid = (p[0] + p[1] + p[2]) / 3.0;
    let mut out = [0.0; 18];
    out[..12].copy_from_slice(&b);
    out[12] = (p[0] - centroid).norm();
    out[13] = (p[1] - centroid).norm();
    out[14] = (p[2] - centroid).norm();
    // Interior angles are functions of the points alone; they are never
    // folded.
    out[15] = angle(&(p[1] - p[0]).normalize(), &(p[2] - p[0]).normalize());
    out[16] = angle(&(p[0] - p[1]).normalize(), &(p[2] - p[1]).normalize());
    out[17] = angle(&(p[0] - p[2]).normalize(), &(p[1] - p[2]).normalize());
    out
}

/// Type-C descriptor: Type-B plus vertex-to-centroid distances and interior
/// angles of the canonically relabeled triple.
pub fn type_c(
    p1: &Vector3<f64>,
    n1: &Vector3<f64>,
    p2: &Vector3<f64>,
    n2: &Vector3<f64>,
    p3: &Vector3<f64>,
    n3: &Vector3<f64>,
) -> Result<[f64; 18]> {
    with_canonical_order(p1, n1, p2, n2, p3, n3, false, |p, n| {
        type_c_ordered(p, n, false)
    })
}

/// Baseline descriptor: ascending side lengths of the triangle.
pub fn raw_triangle(p1: &Vector3<f64>, p2: &Vector3<f64>, p3: &Vector3<f64>) -> Result<[f64; 3]> {
    if triple_is_degenerate(p1, p2, p3) {
        return Err(Error::Degenerate(
            "degenerate triple: collinear or coincident".into(),
        ));
    }
    let mut sides = [(p2 - p1).norm(), (p3 - p2).norm(), (p1 - p3).norm()];
    sides.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(sides)
}

/// Features for a point combination drawn from a cloud, with the pair/triple
/// canonicalization that makes the row a function of the point set.
/// `None` marks a degenerate combination.
pub(crate) fn combo_features(
    points: &[Vector3<f64>],
    normals: &[Vector3<f64>],
    combo: &[usize],
    kind: DescriptorType,
    fold: bool,
) -> Option<Vec<f64>> {
    match kind {
        DescriptorType::TypeA => {
            let [i, j] = [combo[0], combo[1]];
            pair_features(&points[i], &normals[i], &points[j], &normals[j], fold)
                .map(|f| f.to_vec())
        }
        DescriptorType::RawTriangle => {
            let [i, j, k] = [combo[0], combo[1], combo[2]];
            raw_triangle(&points[i], &points[j], &points[k])
                .ok()
                .map(|f| f.to_vec())
        }
        DescriptorType::TypeB => {
            let [i, j, k] = [combo[0], combo[1], combo[2]];
            with_canonical_order(
                &points[i],
                &normals[i],
                &points[j],
                &normals[j],
                &points[k],
                &normals[k],
                fold,
                |p, n| type_b_ordered(p, n, fold).to_vec(),
            )
            .ok()
        }
        DescriptorType::TypeC => {
            let [i, j, k] = [combo[0], combo[1], combo[2]];
            with_canonical_order(
                &points[i],
                &normals[i],
                &points[j],
                &normals[j],
                &points[k],
                &normals[k],
                fold,
                |p, n| type_c_ordered(p, n, fold).to_vec(),
            )
            .ok()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::rotation::{random_rotation, RotationMode};
    use crate::seed::rng_from;
    use nalgebra::{Matrix3, Vector3};
    use rand::Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    const V: fn(f64, f64, f64) -> Vector3<f64> = Vector3::new;

    #[test]
    fn type_a_normals_along_segment() {
        let f = type_a(
            &V(0., 0., 0.),
            &V(1., 0., 0.),
            &V(2., 0., 0.),
            &V(1., 0., 0.),
        )
        .unwrap();
        assert_eq!(f, [2.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn type_a_mutually_orthogonal() {
        let f = type_a(
            &V(0., 0., 0.),
            &V(0., 0., 1.),
            &V(1., 0., 0.),
            &V(0., 1., 0.),
        )
        .unwrap();
        assert!((f[0] - 1.0).abs() < 1e-15);
        for a in &f[1..] {
            assert!((a - FRAC_PI_2).abs() < 1e-15);
        }
    }

    #[test]
    fn type_a_rejects_coincident_points() {
        let p = V(0.3, 0.3, 0.3);
        let err = type_a(&p, &V(1., 0., 0.), &p, &V(0., 1., 0.)).unwrap_err();
        assert!(err.to_string().contains("degenerate pair"));
    }

    fn rigid<R: rand::Rng>(rng: &mut R) -> (Matrix3<f64>, Vector3<f64>) {
        let rot = random_rotation(RotationMode::So3, rng);
        let t = V(
            rng.random::<f64>() * 4.0 - 2.0,
            rng.random::<f64>() * 4.0 - 2.0,
            rng.random::<f64>() * 4.0 - 2.0,
        );
        (rot, t)
    }

    fn random_unit<R: rand::Rng>(rng: &mut R) -> Vector3<f64> {
        loop {
            let v = V(
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
            );
            if v.norm() > 1e-3 {
                return v.normalize();
            }
        }
    }

    #[test]
    fn type_a_rigid_invariance() {
        let mut rng = rng_from(11);
        for _ in 0..200 {
            let (p1, p2) = (V(0.1, 0.2, 0.3), V(-0.4, 0.5, 0.9));
            let (n1, n2) = (random_unit(&mut rng), random_unit(&mut rng));
            let (rot, t) = rigid(&mut rng);
            let a = type_a(&p1, &n1, &p2, &n2).unwrap();
            let b = type_a(&(rot * p1 + t), &(rot * n1), &(rot * p2 + t), &(rot * n2)).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    fn equilateral() -> ([Vector3<f64>; 3], [Vector3<f64>; 3]) {
        let p = [
            V(0.0, 0.0, 0.0),
            V(1.0, 0.0, 0.0),
            V(0.5, 3.0_f64.sqrt() / 2.0, 0.0),
        ];
        let n = [V(0., 0., 1.); 3];
        (p, n)
    }

    #[test]
    fn type_b_equilateral_plane_normals() {
        let (p, n) = equilateral();
        let f = type_b(&p[0], &n[0], &p[1], &n[1], &p[2], &n[2]).unwrap();
        for block in f.chunks(4) {
            assert!((block[0] - 1.0).abs() < 1e-12, "side {}", block[0]);
            assert!((block[1] - FRAC_PI_2).abs() < 1e-12);
            assert!((block[2] - FRAC_PI_2).abs() < 1e-12);
            assert!(block[3].abs() < 1e-12);
        }
    }

    #[test]
    fn type_b_invariant_under_input_permutation() {
        let mut rng = rng_from(13);
        let p = [V(0.0, 0.0, 0.0), V(1.1, 0.2, -0.3), V(0.4, 0.9, 0.5)];
        let n = [
            random_unit(&mut rng),
            random_unit(&mut rng),
            random_unit(&mut rng),
        ];
        let reference = type_b(&p[0], &n[0], &p[1], &n[1], &p[2], &n[2]).unwrap();
        for perm in PERMUTATIONS {
            let f = type_b(
                &p[perm[0]],
                &n[perm[0]],
                &p[perm[1]],
                &n[perm[1]],
                &p[perm[2]],
                &n[perm[2]],
            )
            .unwrap();
            assert_eq!(reference, f, "permutation {perm:?} changed features");
        }
    }

    #[test]
    fn type_b_rigid_invariance() {
        let mut rng = rng_from(17);
        for _ in 0..200 {
            let p = [V(0.0, 0.1, 0.0), V(0.9, 0.2, -0.3), V(0.4, 0.8, 0.5)];
            let n = [
                random_unit(&mut rng),
                random_unit(&mut rng),
                random_unit(&mut rng),
            ];
            let (rot, t) = rigid(&mut rng);
            let a = type_b(&p[0], &n[0], &p[1], &n[1], &p[2], &n[2]).unwrap();
            let b = type_b(
                &(rot * p[0] + t),
                &(rot * n[0]),
                &(rot * p[1] + t),
                &(rot * n[1]),
                &(rot * p[2] + t),
                &(rot * n[2]),
            )
            .unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn type_b_rejects_collinear() {
        let n = V(0., 0., 1.);
        assert!(type_b(&V(0., 0., 0.), &n, &V(1., 0., 0.), &n, &V(2., 0., 0.), &n).is_err());
    }

    #[test]
    fn type_c_equilateral_extras() {
        let (p, n) = equilateral();
        let f = type_c(&p[0], &n[0], &p[1], &n[1], &p[2], &n[2]).unwrap();
        for d in &f[12..15] {
            assert!(
                (d - 1.0 / 3.0_f64.sqrt()).abs() < 1e-12,
                "centroid distance {d}"
            );
        }
        for a in &f[15..18] {
            assert!((a - PI / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn type_c_interior_angles_sum_to_pi() {
        let mut rng = rng_from(19);
        for _ in 0..100 {
            let p = [
                V(rng.random(), rng.random(), rng.random()),
                V(rng.random(), rng.random(), rng.random()),
                V(rng.random(), rng.random(), rng.random()),
            ];
            let n = [
                random_unit(&mut rng),
                random_unit(&mut rng),
                random_unit(&mut rng),
            ];
            if let Ok(f) = type_c(&p[0], &n[0], &p[1], &n[1], &p[2], &n[2]) {
                let sum: f64 = f[15..18].iter().sum();
                assert!((sum - PI).abs() < 1e-12, "angle sum {sum}");
            }
        }
    }

    // Direct vector-arithmetic oracle for the right isoceles triangle with
    // legs 1: centroid distances via explicit centroid, interior angles
    // pi/2 at the right-angle vertex and pi/4 at the leg ends.
    #[test]
    fn type_c_right_isoceles_oracle() {
        let p = [V(0., 0., 0.), V(1., 0., 0.), V(0., 1., 0.)];
        let n = [V(0., 0., 1.); 3];
        let f = type_c(&p[0], &n[0], &p[1], &n[1], &p[2], &n[2]).unwrap();

        // Oracle: centroid and per-vertex quantities computed independently.
        let c = (p[0] + p[1] + p[2]) / 3.0;
        let dist_right_angle = (p[0] - c).norm(); // sqrt(2)/3
        let dist_leg_end = (p[1] - c).norm(); // sqrt(5)/3
        assert!((dist_right_angle - 2.0_f64.sqrt() / 3.0).abs() < 1e-15);
        assert!((dist_leg_end - 5.0_f64.sqrt() / 3.0).abs() < 1e-15);

        // Canonical order: vertex 1 faces the shortest side, vertex 3 faces
        // the hypotenuse, so vertex 3 is the right-angle corner.
        assert!((f[17] - FRAC_PI_2).abs() < 1e-12);
        assert!((f[15] - FRAC_PI_4).abs() < 1e-12);
        assert!((f[16] - FRAC_PI_4).abs() < 1e-12);
        assert!((f[14] - dist_right_angle).abs() < 1e-12);
        assert!((f[12] - dist_leg_end).abs() < 1e-12);
        assert!((f[13] - dist_leg_end).abs() < 1e-12);

        // All 6 input permutations map to the same canonical image.
        let mut rng = rng_from(23);
        let n_distinct = [
            random_unit(&mut rng),
            random_unit(&mut rng),
            random_unit(&mut rng),
        ];
        let reference = type_c(
            &p[0],
            &n_distinct[0],
            &p[1],
            &n_distinct[1],
            &p[2],
            &n_distinct[2],
        )
        .unwrap();
        for perm in PERMUTATIONS {
            let f = type_c(
                &p[perm[0]],
                &n_distinct[perm[0]],
                &p[perm[1]],
                &n_distinct[perm[1]],
                &p[perm[2]],
                &n_distinct[perm[2]],
            )
            .unwrap();
            assert_eq!(reference, f);
        }
    }

    #[test]
    fn raw_triangle_examples() {
        let f = raw_triangle(&V(0., 0., 0.), &V(2., 0., 0.), &V(1., 3.0_f64.sqrt(), 0.)).unwrap();
        for s in &f {
            assert!((s - 2.0).abs() < 1e-12);
        }
        let f = raw_triangle(&V(0., 0., 0.), &V(3., 0., 0.), &V(3., 4., 0.)).unwrap();
        assert_eq!(f, [3.0, 4.0, 5.0]);
        let g = raw_triangle(&V(3., 4., 0.), &V(0., 0., 0.), &V(3., 0., 0.)).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn canonicalize_scalene_is_unique() {
        let p = [V(0., 0., 0.), V(3., 0., 0.), V(3., 4., 0.)];
        let n = [V(0., 0., 1.); 3];
        let base = canonicalize([&p[0], &p[1], &p[2]], [&n[0], &n[1], &n[2]]).unwrap();
        // Feed permuted inputs; composing the returned order with the input
        // permutation must always point at the same vertices.
        let resolved: Vec<Vector3<f64>> = base.iter().map(|&i| p[i]).collect();
        for perm in PERMUTATIONS {
            let q = [&p[perm[0]], &p[perm[1]], &p[perm[2]]];
            let m = [&n[perm[0]], &n[perm[1]], &n[perm[2]]];
            let order = canonicalize(q, m).unwrap();
            for (slot, &o) in order.iter().enumerate() {
                assert_eq!(*q[o], resolved[slot], "permutation {perm:?} slot {slot}");
            }
        }
    }

    #[test]
    fn canonicalize_rejects_degenerate() {
        let n = V(0., 0., 1.);
        let p = [V(0., 0., 0.), V(1., 0., 0.), V(2., 0., 0.)];
        assert!(canonicalize([&p[0], &p[1], &p[2]], [&n, &n, &n]).is_err());
    }

    #[test]
    fn folded_pair_angles_are_sign_invariant() {
        let mut rng = rng_from(29);
        for _ in 0..100 {
            let (p, q) = (V(0.0, 0.0, 0.0), V(0.7, -0.2, 0.4));
            let n = random_unit(&mut rng);
            let m = random_unit(&mut rng);
            let a = pair_features(&p, &n, &q, &m, true).unwrap();
            let b = pair_features(&p, &(-n), &q, &m, true).unwrap();
            let c = pair_features(&p, &n, &q, &(-m), true).unwrap();
            for ((x, y), z) in a.iter().zip(&b).zip(&c) {
                assert!((x - y).abs() < 1e-12);
                assert!((x - z).abs() < 1e-12);
            }
            for theta in &a[1..] {
                assert!(*theta <= FRAC_PI_2 + 1e-15);
            }
        }
    }
}
