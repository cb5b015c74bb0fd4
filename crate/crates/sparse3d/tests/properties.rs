//! Property tests for the descriptor and pooling invariants.
//!
//! Clouds are generated from seeds rather than raw float vectors so every
//! case is a generic configuration (random normals, no exact coincidences);
//! proptest shrinks over the seed space.

use nalgebra::Vector3;
use proptest::prelude::*;
use rand::Rng;

use sparse3d::descriptor::set::binomial;
use sparse3d::descriptor::{build_descriptor_set, DescriptorType};
use sparse3d::geom::cloud::{apply_rigid, PointCloud};
use sparse3d::geom::rotation::{random_rotation, RotationMode};
use sparse3d::nn::pool::maxpool_rows;
use sparse3d::nn::tensor::Tensor2;
use sparse3d::seed::rng_from;

fn cloud_from_seed(k: usize, seed: u64) -> PointCloud {
    let mut rng = rng_from(seed);
    let points = (0..k)
        .map(|_| {
            Vector3::new(
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
            )
        })
        .collect();
    let normals = (0..k)
        .map(|_| loop {
            let v = Vector3::new(
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
            );
            if v.norm() > 1e-3 {
                break v.normalize();
            }
        })
        .collect();
    PointCloud { points, normals }
}

fn any_kind() -> impl Strategy<Value = DescriptorType> {
    prop_oneof![
        Just(DescriptorType::RawTriangle),
        Just(DescriptorType::TypeA),
        Just(DescriptorType::TypeB),
        Just(DescriptorType::TypeC),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Same combination seed, rigidly moved cloud: identical rows to 1e-9.
    #[test]
    fn descriptor_sets_are_rigid_invariant(
        cloud_seed in any::<u64>(),
        combo_seed in any::<u64>(),
        rigid_seed in any::<u64>(),
        k in 4usize..12,
        kind in any_kind(),
    ) {
        let cloud = cloud_from_seed(k, cloud_seed);
        let mut rng = rng_from(rigid_seed);
        let rot = random_rotation(RotationMode::So3, &mut rng);
        let t = Vector3::new(
            rng.random::<f64>() * 6.0 - 3.0,
            rng.random::<f64>() * 6.0 - 3.0,
            rng.random::<f64>() * 6.0 - 3.0,
        );
        let moved = apply_rigid(&cloud, &rot, &t);
        let a = build_descriptor_set(&cloud, kind, 24, false, false, &mut rng_from(combo_seed)).unwrap();
        let b = build_descriptor_set(&moved, kind, 24, false, false, &mut rng_from(combo_seed)).unwrap();
        for (x, y) in a.data.iter().zip(&b.data) {
            prop_assert!((x - y).abs() <= 1e-9, "{kind:?}: {x} vs {y}");
        }
    }

    // Row count is exactly n_d, angles stay in [0, pi] ([0, pi/2] for
    // folded normal angles), lengths are non-negative, and the max length
    // entry equals 1 exactly under scale normalization.
    #[test]
    fn descriptor_set_shape_and_ranges(
        cloud_seed in any::<u64>(),
        combo_seed in any::<u64>(),
        k in 4usize..10,
        n_d in 1usize..300,
        kind in any_kind(),
        scale in any::<bool>(),
        fold in any::<bool>(),
    ) {
        let cloud = cloud_from_seed(k, cloud_seed);
        let set = build_descriptor_set(&cloud, kind, n_d, scale, fold, &mut rng_from(combo_seed)).unwrap();
        prop_assert_eq!(set.n_rows, n_d);
        prop_assert_eq!(set.width, kind.width());
        let mut max_len = f64::NEG_INFINITY;
        for row in set.rows() {
            for &c in kind.angle_columns() {
                prop_assert!((0.0..=std::f64::consts::PI + 1e-15).contains(&row[c]));
            }
            if fold {
                for &c in kind.normal_angle_columns() {
                    prop_assert!(row[c] <= std::f64::consts::FRAC_PI_2 + 1e-15);
                }
            }
            for &c in kind.length_columns() {
                prop_assert!(row[c] >= 0.0);
                max_len = max_len.max(row[c]);
            }
        }
        if scale {
            prop_assert_eq!(max_len, 1.0);
        }
    }

    // Oversampling obeys the multiplicity rule: every distinct combination
    // appears floor(n_d/U) or floor(n_d/U)+1 times.
    #[test]
    fn oversampling_multiplicity(
        cloud_seed in any::<u64>(),
        combo_seed in any::<u64>(),
        extra in 0usize..80,
    ) {
        let k = 6;
        let cloud = cloud_from_seed(k, cloud_seed);
        let u = binomial(k, 3) as usize; // 20
        let n_d = u + extra;
        let set = build_descriptor_set(
            &cloud, DescriptorType::TypeC, n_d, false, false, &mut rng_from(combo_seed),
        ).unwrap();
        let mut counts = std::collections::HashMap::new();
        for row in set.rows() {
            let key: Vec<u64> = row.iter().map(|x| x.to_bits()).collect();
            *counts.entry(key).or_insert(0usize) += 1;
        }
        let base = n_d / u;
        let with_extra = counts.values().filter(|&&c| c == base + 1).count();
        let exact = counts.values().filter(|&&c| c == base).count();
        prop_assert_eq!(counts.len(), u);
        prop_assert_eq!(with_extra, n_d % u);
        prop_assert_eq!(exact, u - n_d % u);
    }

    // Extraction is a pure function of (cloud, seed).
    #[test]
    fn extraction_is_deterministic(
        cloud_seed in any::<u64>(),
        combo_seed in any::<u64>(),
        kind in any_kind(),
    ) {
        let cloud = cloud_from_seed(8, cloud_seed);
        let a = build_descriptor_set(&cloud, kind, 48, true, false, &mut rng_from(combo_seed)).unwrap();
        let b = build_descriptor_set(&cloud, kind, 48, true, false, &mut rng_from(combo_seed)).unwrap();
        prop_assert_eq!(a.data, b.data);
    }

    // Max-pool output is exactly invariant under row permutations.
    #[test]
    fn maxpool_is_permutation_invariant(
        data_seed in any::<u64>(),
        perm_seed in any::<u64>(),
        rows in 1usize..20,
        cols in 1usize..12,
    ) {
        let mut rng = rng_from(data_seed);
        let x = Tensor2::from_fn(rows, cols, |_, _| rng.random::<f64>() * 4.0 - 2.0);
        let (base, _) = maxpool_rows(&x).unwrap();
        let mut order: Vec<usize> = (0..rows).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng_from(perm_seed));
        let mut data = Vec::with_capacity(rows * cols);
        for &i in &order {
            data.extend_from_slice(x.row(i));
        }
        let permuted = Tensor2::from_vec(rows, cols, data).unwrap();
        let (pooled, _) = maxpool_rows(&permuted).unwrap();
        for (a, b) in base.iter().zip(&pooled) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    // Interior angles of Type-C rows always sum to pi.
    #[test]
    fn type_c_interior_angles_sum_to_pi(
        cloud_seed in any::<u64>(),
        combo_seed in any::<u64>(),
    ) {
        let cloud = cloud_from_seed(8, cloud_seed);
        let set = build_descriptor_set(
            &cloud, DescriptorType::TypeC, 32, false, false, &mut rng_from(combo_seed),
        ).unwrap();
        for row in set.rows() {
            let sum: f64 = row[15..18].iter().sum();
            prop_assert!((sum - std::f64::consts::PI).abs() < 1e-9, "sum {sum}");
        }
    }
}
