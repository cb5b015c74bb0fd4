//! Fixed-count descriptor set assembly.
//!
//! From `K` points there are `C(K,2)` unordered pairs or `C(K,3)` unordered
//! triples. A set holds exactly `N_d` rows:
//!
//! - `N_d <= U`: `N_d` distinct combinations sampled uniformly without
//!   replacement.
//! - `N_d > U`: every combination `floor(N_d/U)` times plus `N_d mod U`
//!   extras sampled without replacement (e.g. `4096 = 7 * 560 + 176` for
//!   triples of 16 points).
//!
//! Degenerate combinations are skipped and resampled; if the cloud cannot
//! supply `N_d` distinct non-degenerate rows, existing rows are duplicated.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{combo_features, DescriptorType};
use crate::error::{Error, Result};
use crate::geom::cloud::PointCloud;

/// `N_d x F` matrix of invariant features.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSet {
    pub kind: DescriptorType,
    pub n_rows: usize,
    pub width: usize,
    /// Row-major feature data, `n_rows * width` entries.
    pub data: Vec<f64>,
    pub scale_normalized: bool,
    pub folded_normals: bool,
}

impl DescriptorSet {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.width)
    }
}

/// Binomial coefficient, exact for all cloud sizes in use.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

const PAIR_SENTINEL: u32 = u32::MAX;

fn enumerate_combos(k: usize, arity: usize) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    match arity {
        2 => {
            for i in 0..k {
                for j in (i + 1)..k {
                    out.push([i as u32, j as u32, PAIR_SENTINEL]);
                }
            }
        }
        3 => {
            for i in 0..k {
                for j in (i + 1)..k {
                    for l in (j + 1)..k {
                        out.push([i as u32, j as u32, l as u32]);
                    }
                }
            }
        }
        _ => unreachable!("descriptor arity is 2 or 3"),
    }
    out
}

fn sample_combo<R: Rng + ?Sized>(k: usize, arity: usize, rng: &mut R) -> [u32; 3] {
    match arity {
        2 => loop {
            let i = rng.random_range(0..k) as u32;
            let j = rng.random_range(0..k) as u32;
            if i != j {
                return [i.min(j), i.max(j), PAIR_SENTINEL];
            }
        },
        _ => loop {
            let mut c = [
                rng.random_range(0..k) as u32,
                rng.random_range(0..k) as u32,
                rng.random_range(0..k) as u32,
            ];
            c.sort_unstable();
            if c[0] != c[1] && c[1] != c[2] {
                return c;
            }
        },
    }
}

/// Assemble a fixed-count descriptor set from a cloud. Deterministic for a
/// given rng seed; the same seed selects the same combinations, which is
/// what makes same-seed extraction rigid-invariant.
pub fn build_descriptor_set<R: Rng + ?Sized>(
    cloud: &PointCloud,
    kind: DescriptorType,
    n_d: usize,
    scale_normalize: bool,
    fold_normals: bool,
    rng: &mut R,
) -> Result<DescriptorSet> {
    let k = cloud.len();
    let min = kind.min_points();
    if k < min {
        return Err(Error::CloudTooSmall {
            min,
            got: k,
            what: match kind {
                DescriptorType::TypeA => "Type-A descriptors",
                DescriptorType::TypeB => "Type-B descriptors",
                DescriptorType::TypeC => "Type-C descriptors",
                DescriptorType::RawTriangle => "raw-triangle descriptors",
            },
        });
    }
    if n_d == 0 {
        return Err(Error::Invalid("descriptor count must be >= 1".into()));
    }

    let arity = kind.arity();
    let width = kind.width();
    let total = binomial(k, arity);
    let eval = |combo: &[u32; 3]| {
        let idx: Vec<usize> = combo[..arity].iter().map(|&i| i as usize).collect();
        combo_features(&cloud.points, &cloud.normals, &idx, kind, fold_normals)
    };

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n_d);

    if n_d as u128 >= total {
        // Oversampling: uniform multiplicity plus a sampled remainder.
        let combos = enumerate_combos(k, arity);
        let feats: Vec<Option<Vec<f64>>> = combos.iter().map(&eval).collect();
        let copies = n_d / combos.len();
        let remainder = n_d % combos.len();
        for f in feats.iter().flatten() {
            for _ in 0..copies {
                rows.push(f.clone());
            }
        }
        let mut order: Vec<usize> = (0..combos.len()).collect();
        order.shuffle(rng);
        let mut extras = 0;
        for idx in order {
            if extras == remainder {
                break;
            }
            if let Some(f) = &feats[idx] {
                rows.push(f.clone());
                extras += 1;
            }
        }
    } else if total <= 4 * n_d as u128 {
        // Small combination space: shuffle the full enumeration and walk it.
        let mut combos = enumerate_combos(k, arity);
        combos.shuffle(rng);
        for c in &combos {
            if rows.len() == n_d {
                break;
            }
            if let Some(f) = eval(c) {
                rows.push(f);
            }
        }
    } else {
        // Large combination space: rejection-sample distinct combinations.
        // The attempt cap only matters for pathological all-degenerate
        // clouds; it keeps the loop total.
        let mut tried: HashSet<[u32; 3]> = HashSet::with_capacity(2 * n_d);
        let cap = n_d.saturating_mul(64).saturating_add(10_000);
        let mut attempts = 0usize;
        while rows.len() < n_d && attempts < cap {
            attempts += 1;
            let c = sample_combo(k, arity, rng);
            if !tried.insert(c) {
                continue;
            }
            if let Some(f) = eval(&c) {
                rows.push(f);
            }
        }
    }

    if rows.is_empty() {
        return Err(Error::Degenerate(
            "no non-degenerate point combinations in cloud".into(),
        ));
    }
    let mut cursor = 0;
    let base = rows.len();
    while rows.len() < n_d {
        rows.push(rows[cursor % base].clone());
        cursor += 1;
    }

    let mut data = Vec::with_capacity(n_d * width);
    for r in &rows {
        data.extend_from_slice(r);
    }

    if scale_normalize {
        let side_cols = kind.side_length_columns();
        let mut d_max = 0.0_f64;
        for row in data.chunks_exact(width) {
            for &c in side_cols {
                d_max = d_max.max(row[c]);
            }
        }
        // d_max > 0 because degenerate pairs were filtered out.
        for row in data.chunks_exact_mut(width) {
            for &c in kind.length_columns() {
                row[c] /= d_max;
            }
        }
    }

    Ok(DescriptorSet {
        kind,
        n_rows: n_d,
        width,
        data,
        scale_normalized: scale_normalize,
        folded_normals: fold_normals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::cloud::apply_rigid;
    use crate::geom::rotation::{random_rotation, RotationMode};
    use crate::geom::synth::{synth_shape, SynthKind};
    use crate::seed::rng_from;
    use nalgebra::Vector3;
    use std::collections::HashMap;

    fn random_cloud(k: usize, seed: u64) -> PointCloud {
        synth_shape(SynthKind::Torus, k, &mut rng_from(seed)).unwrap()
    }

    #[test]
    fn binomial_counts() {
        assert_eq!(binomial(16, 2), 120);
        assert_eq!(binomial(16, 3), 560);
        assert_eq!(binomial(1024, 3), 178_433_024);
        assert_eq!(binomial(2, 3), 0);
    }

    #[test]
    fn oversampling_multiplicity_rule() {
        // 4096 = 7 * 560 + 176: each triple 7 times, 176 of them once more.
        let cloud = random_cloud(16, 0);
        let set = build_descriptor_set(
            &cloud,
            DescriptorType::TypeC,
            4096,
            false,
            false,
            &mut rng_from(1),
        )
        .unwrap();
        assert_eq!(set.n_rows, 4096);
        let mut counts: HashMap<Vec<u64>, usize> = HashMap::new();
        for row in set.rows() {
            let key: Vec<u64> = row.iter().map(|x| x.to_bits()).collect();
            *counts.entry(key).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 560);
        let sevens = counts.values().filter(|&&c| c == 7).count();
        let eights = counts.values().filter(|&&c| c == 8).count();
        assert_eq!((sevens, eights), (384, 176));
    }

    #[test]
    fn exact_combination_count_without_replacement() {
        let cloud = random_cloud(16, 2);
        let set = build_descriptor_set(
            &cloud,
            DescriptorType::TypeA,
            120,
            false,
            false,
            &mut rng_from(3),
        )
        .unwrap();
        let distinct: HashSet<Vec<u64>> = set
            .rows()
            .map(|r| r.iter().map(|x| x.to_bits()).collect())
            .collect();
        assert_eq!(distinct.len(), 120);
    }

    #[test]
    fn rejection_path_yields_distinct_rows() {
        let cloud = random_cloud(64, 4);
        // C(64,3) = 41664 >> 4 * 512, so this goes through rejection sampling.
        let set = build_descriptor_set(
            &cloud,
            DescriptorType::TypeC,
            512,
            false,
            false,
            &mut rng_from(5),
        )
        .unwrap();
        let distinct: HashSet<Vec<u64>> = set
            .rows()
            .map(|r| r.iter().map(|x| x.to_bits()).collect())
            .collect();
        assert_eq!(distinct.len(), 512);
    }

    #[test]
    fn rigid_invariance_with_matched_seed() {
        let cloud = random_cloud(10, 6);
        let mut rng = rng_from(7);
        let rot = random_rotation(RotationMode::So3, &mut rng);
        let t = Vector3::new(0.4, -2.0, 1.5);
        let moved = apply_rigid(&cloud, &rot, &t);
        for kind in [
            DescriptorType::TypeA,
            DescriptorType::TypeB,
            DescriptorType::TypeC,
        ] {
            let a = build_descriptor_set(&cloud, kind, 64, false, false, &mut rng_from(8)).unwrap();
            let b = build_descriptor_set(&moved, kind, 64, false, false, &mut rng_from(8)).unwrap();
            for (x, y) in a.data.iter().zip(&b.data) {
                assert!((x - y).abs() < 1e-9, "{kind:?}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn scale_invariance_with_normalization() {
        let cloud = random_cloud(12, 9);
        for kind in DescriptorType::ALL {
            let base =
                build_descriptor_set(&cloud, kind, 96, true, false, &mut rng_from(10)).unwrap();
            for lambda in [1e-3, 1e3] {
                let scaled = cloud.scaled(lambda);
                let set = build_descriptor_set(&scaled, kind, 96, true, false, &mut rng_from(10))
                    .unwrap();
                for (x, y) in base.data.iter().zip(&set.data) {
                    assert!((x - y).abs() < 1e-9, "{kind:?} lambda {lambda}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn scale_normalization_divides_lengths_only() {
        // Three collinear points at x = 0, 1, 3: pair distances 1, 2, 3.
        let points = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(3.0, 0.0, 0.0),
        ];
        let normals = vec![Vector3::new(0.0, 0.0, 1.0); 3];
        let cloud = PointCloud { points, normals };
        let plain = build_descriptor_set(
            &cloud,
            DescriptorType::TypeA,
            3,
            false,
            false,
            &mut rng_from(11),
        )
        .unwrap();
        let normed = build_descriptor_set(
            &cloud,
            DescriptorType::TypeA,
            3,
            true,
            false,
            &mut rng_from(11),
        )
        .unwrap();
        let mut lengths: Vec<f64> = normed.rows().map(|r| r[0]).collect();
        lengths.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(lengths, vec![1.0 / 3.0, 2.0 / 3.0, 1.0]);
        for (p, n) in plain.rows().zip(normed.rows()) {
            assert_eq!(&p[1..], &n[1..], "angles must be untouched");
        }
    }

    #[test]
    fn normalized_max_side_is_exactly_one() {
        let cloud = random_cloud(14, 12);
        for kind in DescriptorType::ALL {
            let set =
                build_descriptor_set(&cloud, kind, 128, true, false, &mut rng_from(13)).unwrap();
            let max = set
                .rows()
                .flat_map(|r| kind.length_columns().iter().map(move |&c| r[c]))
                .fold(0.0_f64, f64::max);
            assert_eq!(max, 1.0, "{kind:?}");
        }
    }

    #[test]
    fn permuted_cloud_gives_row_permuted_multiset() {
        let cloud = random_cloud(8, 14);
        // N_d = 2 * C(8,3) puts every combination in the set exactly twice,
        // so the row multiset is independent of cloud order.
        let n_d = 2 * 56;
        let mut points = cloud.points.clone();
        let mut normals = cloud.normals.clone();
        points.rotate_left(3);
        normals.rotate_left(3);
        points.swap(0, 5);
        normals.swap(0, 5);
        let permuted = PointCloud { points, normals };
        for kind in DescriptorType::ALL {
            let a =
                build_descriptor_set(&cloud, kind, n_d, false, false, &mut rng_from(15)).unwrap();
            let b = build_descriptor_set(&permuted, kind, n_d, false, false, &mut rng_from(16))
                .unwrap();
            let sort_rows = |s: &DescriptorSet| {
                let mut rows: Vec<Vec<f64>> = s.rows().map(|r| r.to_vec()).collect();
                rows.sort_by(|x, y| x.partial_cmp(y).unwrap());
                rows
            };
            for (x, y) in sort_rows(&a)
                .iter()
                .flatten()
                .zip(sort_rows(&b).iter().flatten())
            {
                assert!((x - y).abs() < 1e-9, "{kind:?}");
            }
        }
    }

    #[test]
    fn angle_ranges() {
        let cloud = random_cloud(10, 17);
        for kind in DescriptorType::ALL {
            for fold in [false, true] {
                let set =
                    build_descriptor_set(&cloud, kind, 64, false, fold, &mut rng_from(18)).unwrap();
                for row in set.rows() {
                    for &c in kind.angle_columns() {
                        assert!((0.0..=std::f64::consts::PI + 1e-15).contains(&row[c]));
                    }
                    if fold {
                        for &c in kind.normal_angle_columns() {
                            assert!(row[c] <= std::f64::consts::FRAC_PI_2 + 1e-15);
                        }
                    }
                    for &c in kind.length_columns() {
                        assert!(row[c] >= 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let cloud = random_cloud(16, 19);
        let a = build_descriptor_set(
            &cloud,
            DescriptorType::TypeC,
            256,
            true,
            false,
            &mut rng_from(20),
        )
        .unwrap();
        let b = build_descriptor_set(
            &cloud,
            DescriptorType::TypeC,
            256,
            true,
            false,
            &mut rng_from(20),
        )
        .unwrap();
        assert_eq!(a.data, b.data);
    }

    #[test]
    fn too_small_cloud_names_requirement() {
        let cloud = PointCloud {
            points: vec![Vector3::zeros(), Vector3::new(1.0, 0.0, 0.0)],
            normals: vec![Vector3::new(0.0, 0.0, 1.0); 2],
        };
        let err = build_descriptor_set(
            &cloud,
            DescriptorType::TypeB,
            8,
            false,
            false,
            &mut rng_from(22),
        )
        .unwrap_err();
        assert!(err.to_string().contains("need \u{2265} 3 points"), "{err}");
    }

    #[test]
    fn zero_rows_rejected() {
        let cloud = random_cloud(8, 23);
        assert!(build_descriptor_set(
            &cloud,
            DescriptorType::TypeA,
            0,
            false,
            false,
            &mut rng_from(24)
        )
        .is_err());
    }

    #[test]
    fn degenerate_combinations_are_skipped_and_backfilled() {
        // Three collinear points plus one off the line: of the 4 triples,
        // only the 3 containing the apex are non-degenerate.
        let points = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(2.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
        ];
        let normals = vec![Vector3::new(0.0, 0.0, 1.0); 4];
        let cloud = PointCloud { points, normals };
        let set = build_descriptor_set(
            &cloud,
            DescriptorType::TypeB,
            4,
            false,
            false,
            &mut rng_from(25),
        )
        .unwrap();
        assert_eq!(set.n_rows, 4);
        let distinct: HashSet<Vec<u64>> = set
            .rows()
            .map(|r| r.iter().map(|x| x.to_bits()).collect())
            .collect();
        assert_eq!(distinct.len(), 3, "one row must be a duplicate");
    }

    #[test]
    fn fully_degenerate_cloud_is_an_error() {
        let points = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(2.0, 0.0, 0.0),
        ];
        let normals = vec![Vector3::new(0.0, 0.0, 1.0); 3];
        let cloud = PointCloud { points, normals };
        assert!(build_descriptor_set(
            &cloud,
            DescriptorType::TypeB,
            4,
            false,
            false,
            &mut rng_from(26)
        )
        .is_err());
    }
}
