//! Invariance self-test suites, runnable from the CLI on a fresh checkout.
//!
//! Each suite re-verifies one of the pipeline's contracts end to end:
//! rigid/scale invariance of the descriptors, permutation invariance of the
//! pooled latent, pose invariance of predictions, bit-exact file formats,
//! and the retrieval ranking against an independent brute-force oracle.

use nalgebra::Vector3;
use rand::Rng;

use crate::config::ExperimentConfig;
use crate::dataset::load_dataset;
use crate::descriptor::cache::{read_spd1, write_spd1};
use crate::descriptor::set::binomial;
use crate::descriptor::{build_descriptor_set, DescriptorSet, DescriptorType};
use crate::error::{Error, Result};
use crate::evaluate::{mean_average_precision, rank_by_l2};
use crate::geom::cloud::{apply_rigid, PointCloud};
use crate::geom::mesh::{cube_mesh, parse_off};
use crate::geom::rotation::{is_rotation, random_rotation, RotationMode};
use crate::geom::synth::{synth_shape, SynthKind};
use crate::geom::voxel::{voxelize_points, VoxelGrid};
use crate::model::{ModelConfig, SparseNet};
use crate::nn::checkpoint::Checkpoint;
use crate::nn::layers::Mode;
use crate::nn::pool::maxpool_rows;
use crate::nn::tensor::Tensor2;
use crate::seed::{derive, rng_from};
use crate::train::{extract_object, TEST_EPOCH};

type Suite = (&'static str, fn() -> Result<()>);

pub const SUITES: &[Suite] = &[
    ("descriptor_rigid_invariance", descriptor_rigid_invariance),
    ("descriptor_scale_invariance", descriptor_scale_invariance),
    ("cloud_permutation_multiset", cloud_permutation_multiset),
    ("rotation_sampling", rotation_sampling),
    ("maxpool_permutation", maxpool_permutation),
    (
        "latent_permutation_invariance",
        latent_permutation_invariance,
    ),
    ("pose_invariance_end_to_end", pose_invariance_end_to_end),
    ("retrieval_map_oracle", retrieval_map_oracle),
    ("combination_counts", combination_counts),
    ("format_round_trips", format_round_trips),
];

/// Run every suite, printing one PASS/FAIL line each; returns whether all
/// suites passed.
pub fn run_all(out: &mut impl std::io::Write) -> std::io::Result<bool> {
    let mut all_ok = true;
    for (name, suite) in SUITES {
        match suite() {
            Ok(()) => writeln!(out, "PASS {name}")?,
            Err(e) => {
                all_ok = false;
                writeln!(out, "FAIL {name}: {e}")?;
            }
        }
    }
    Ok(all_ok)
}

fn fail(name: &str, detail: impl std::fmt::Display) -> Error {
    Error::Invalid(format!("{name}: {detail}"))
}

fn random_cloud(k: usize, seed: u64) -> PointCloud {
    synth_shape(SynthKind::Torus, k, &mut rng_from(seed)).expect("k >= 3")
}

fn descriptor_rigid_invariance() -> Result<()> {
    let mut rng = rng_from(0xA1);
    for trial in 0..100u64 {
        let cloud = random_cloud(8, derive(0xA2, &[trial]));
        let rot = random_rotation(RotationMode::So3, &mut rng);
        let t = Vector3::new(
            rng.random::<f64>() * 10.0 - 5.0,
            rng.random::<f64>() * 10.0 - 5.0,
            rng.random::<f64>() * 10.0 - 5.0,
        );
        let moved = apply_rigid(&cloud, &rot, &t);
        for kind in [
            DescriptorType::TypeA,
            DescriptorType::TypeB,
            DescriptorType::TypeC,
        ] {
            let seed = derive(0xA3, &[trial, kind.code() as u64]);
            let a = build_descriptor_set(&cloud, kind, 16, false, false, &mut rng_from(seed))?;
            let b = build_descriptor_set(&moved, kind, 16, false, false, &mut rng_from(seed))?;
            for (x, y) in a.data.iter().zip(&b.data) {
                if (x - y).abs() > 1e-9 {
                    return Err(fail(
                        "rigid invariance",
                        format!("{kind:?} trial {trial}: {x} vs {y}"),
                    ));
                }
            }
        }
    }
    Ok(())
}

fn descriptor_scale_invariance() -> Result<()> {
    for trial in 0..20u64 {
        let cloud = random_cloud(10, derive(0xB1, &[trial]));
        for kind in DescriptorType::ALL {
            let seed = derive(0xB2, &[trial, kind.code() as u64]);
            let base = build_descriptor_set(&cloud, kind, 32, true, false, &mut rng_from(seed))?;
            for lambda in [1e-3, 1e3] {
                let scaled = build_descriptor_set(
                    &cloud.scaled(lambda),
                    kind,
                    32,
                    true,
                    false,
                    &mut rng_from(seed),
                )?;
                for (x, y) in base.data.iter().zip(&scaled.data) {
                    if (x - y).abs() > 1e-9 {
                        return Err(fail(
                            "scale invariance",
                            format!("{kind:?} lambda {lambda}: {x} vs {y}"),
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

fn cloud_permutation_multiset() -> Result<()> {
    for trial in 0..10u64 {
        let cloud = random_cloud(8, derive(0xC1, &[trial]));
        let mut points = cloud.points.clone();
        let mut normals = cloud.normals.clone();
        points.rotate_left(3);
        normals.rotate_left(3);
        let permuted = PointCloud { points, normals };
        for kind in DescriptorType::ALL {
            let n_d = 2 * binomial(8, kind.arity()) as usize;
            let a = build_descriptor_set(&cloud, kind, n_d, false, false, &mut rng_from(1))?;
            let b = build_descriptor_set(&permuted, kind, n_d, false, false, &mut rng_from(2))?;
            let sorted = |s: &DescriptorSet| {
                let mut rows: Vec<Vec<f64>> = s.rows().map(|r| r.to_vec()).collect();
                rows.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
                rows
            };
            let (ra, rb) = (sorted(&a), sorted(&b));
            for (x, y) in ra.iter().flatten().zip(rb.iter().flatten()) {
                if (x - y).abs() > 1e-9 {
                    return Err(fail("cloud permutation", format!("{kind:?}: {x} vs {y}")));
                }
            }
        }
    }
    Ok(())
}

fn rotation_sampling() -> Result<()> {
    let mut rng = rng_from(0xD1);
    for mode in [RotationMode::None, RotationMode::AroundZ, RotationMode::So3] {
        for _ in 0..200 {
            let rot = random_rotation(mode, &mut rng);
            if !is_rotation(&rot, 1e-9) {
                return Err(fail(
                    "rotation sampling",
                    format!("{mode:?} sample not in SO(3)"),
                ));
            }
        }
    }
    Ok(())
}

fn maxpool_permutation() -> Result<()> {
    let mut rng = rng_from(0xE1);
    for _ in 0..50 {
        let x = Tensor2::from_fn(16, 8, |_, _| rng.random::<f64>() * 4.0 - 2.0);
        let (base, _) = maxpool_rows(&x)?;
        let mut order: Vec<usize> = (0..16).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        let mut data = Vec::new();
        for &i in &order {
            data.extend_from_slice(x.row(i));
        }
        let permuted = Tensor2::from_vec(16, 8, data)?;
        let (v, _) = maxpool_rows(&permuted)?;
        if v.iter().zip(&base).any(|(a, b)| a.to_bits() != b.to_bits()) {
            return Err(fail("maxpool permutation", "pooled vector changed"));
        }
    }
    Ok(())
}

fn tiny_net(kind: DescriptorType, seed: u64) -> Result<SparseNet> {
    let config = ModelConfig {
        kind,
        shared_widths: vec![16, 24],
        classifier_widths: vec![12],
        decoder_widths: vec![16],
        classes: 4,
        voxel_resolution: 2,
        lambda_rec: 1.0,
        dropout: 0.3,
        batchnorm: true,
    };
    SparseNet::new(config, seed)
}

fn latent_permutation_invariance() -> Result<()> {
    use rand::seq::SliceRandom;
    let mut rng = rng_from(0xF1);
    for model_seed in 0..10u64 {
        let mut net = tiny_net(DescriptorType::TypeC, model_seed)?;
        let cloud = random_cloud(10, derive(0xF2, &[model_seed]));
        let set = build_descriptor_set(
            &cloud,
            DescriptorType::TypeC,
            48,
            false,
            false,
            &mut rng_from(3),
        )?;
        let base = net.forward_latent(&set, Mode::Eval)?;
        for _ in 0..20 {
            let mut order: Vec<usize> = (0..set.n_rows).collect();
            order.shuffle(&mut rng);
            let mut data = Vec::with_capacity(set.data.len());
            for &i in &order {
                data.extend_from_slice(set.row(i));
            }
            let permuted = DescriptorSet {
                data,
                ..set.clone()
            };
            let latent = net.forward_latent(&permuted, Mode::Eval)?;
            if latent
                .iter()
                .zip(&base)
                .any(|(a, b)| a.to_bits() != b.to_bits())
            {
                return Err(fail(
                    "latent permutation",
                    format!("model seed {model_seed}"),
                ));
            }
        }
    }
    Ok(())
}

fn pose_invariance_end_to_end() -> Result<()> {
    let mut config = ExperimentConfig {
        train_per_class: 1,
        test_per_class: 13,
        k: 10,
        n_d: 48,
        ..ExperimentConfig::default()
    };
    let dataset = load_dataset(&config)?;
    let mut net = tiny_net(config.kind, 7)?;
    config.rotation_test = RotationMode::None;
    let plain: Vec<usize> = {
        let mut preds = Vec::new();
        for (i, obj) in dataset.test.iter().enumerate() {
            let set = extract_object(obj, RotationMode::None, &config, TEST_EPOCH, i)?;
            preds.push(net.predict(&set)?);
        }
        preds
    };
    for (i, obj) in dataset.test.iter().enumerate() {
        let set = extract_object(obj, RotationMode::So3, &config, TEST_EPOCH, i)?;
        let rotated = net.predict(&set)?;
        if rotated != plain[i] {
            return Err(fail(
                "pose invariance",
                format!("object {i}: {} vs {}", plain[i], rotated),
            ));
        }
    }
    Ok(())
}

fn retrieval_map_oracle() -> Result<()> {
    let mut rng = rng_from(0x71);
    let n = 60;
    let latents: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..16).map(|_| rng.random::<f64>()).collect())
        .collect();
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..6)).collect();
    let ranked = rank_by_l2(&latents);

    // Independent oracle: explicit distance loops and selection sort.
    for q in 0..n {
        let mut rest: Vec<(f64, usize)> = Vec::new();
        for c in 0..n {
            if c == q {
                continue;
            }
            let mut d2 = 0.0;
            for (a, b) in latents[q].iter().zip(&latents[c]) {
                let diff = a - b;
                d2 += diff * diff;
            }
            rest.push((d2, c));
        }
        let mut oracle = Vec::with_capacity(rest.len());
        while !rest.is_empty() {
            let mut best = 0;
            for i in 1..rest.len() {
                if rest[i] < rest[best] {
                    best = i;
                }
            }
            oracle.push(rest.remove(best).1);
        }
        if ranked[q] != oracle {
            return Err(fail(
                "retrieval oracle",
                format!("ranking differs for query {q}"),
            ));
        }
    }

    for k in [5usize, 10] {
        let pipeline = mean_average_precision(&ranked, &labels, k);
        let mut oracle_sum = 0.0;
        for q in 0..n {
            let total = ranked[q]
                .iter()
                .filter(|&&c| labels[c] == labels[q])
                .count();
            let denom = k.min(total);
            let mut hits = 0;
            let mut ap = 0.0;
            for (rank, &c) in ranked[q].iter().take(k).enumerate() {
                if labels[c] == labels[q] {
                    hits += 1;
                    ap += hits as f64 / (rank + 1) as f64;
                }
            }
            if denom > 0 {
                oracle_sum += ap / denom as f64;
            }
        }
        let oracle = oracle_sum / n as f64;
        if (pipeline - oracle).abs() > 1e-12 {
            return Err(fail(
                "retrieval oracle",
                format!("MAP@{k}: {pipeline} vs {oracle}"),
            ));
        }
    }
    Ok(())
}

fn combination_counts() -> Result<()> {
    if binomial(16, 2) != 120 || binomial(16, 3) != 560 {
        return Err(fail("combination counts", "binomial values"));
    }
    let unique = binomial(16, 3) as usize;
    if (4096 / unique, 4096 % unique) != (7, 176) {
        return Err(fail("combination counts", "multiplicity arithmetic"));
    }
    let cloud = random_cloud(16, 0x81);
    let set = build_descriptor_set(
        &cloud,
        DescriptorType::TypeC,
        4096,
        false,
        false,
        &mut rng_from(4),
    )?;
    let mut counts = std::collections::HashMap::new();
    for row in set.rows() {
        let key: Vec<u64> = row.iter().map(|x| x.to_bits()).collect();
        *counts.entry(key).or_insert(0usize) += 1;
    }
    let sevens = counts.values().filter(|&&c| c == 7).count();
    let eights = counts.values().filter(|&&c| c == 8).count();
    if counts.len() != 560 || sevens != 384 || eights != 176 {
        return Err(fail(
            "combination counts",
            format!("{} distinct rows, {sevens} x7, {eights} x8", counts.len()),
        ));
    }
    Ok(())
}

fn format_round_trips() -> Result<()> {
    // OFF, both header variants.
    let mesh = cube_mesh(Vector3::zeros(), 1.0);
    let mut standard = String::from("OFF\n8 12 0\n");
    let mut glued = String::from("OFF8 12 0\n");
    for v in &mesh.vertices {
        let line = format!("{} {} {}\n", v.x, v.y, v.z);
        standard.push_str(&line);
        glued.push_str(&line);
    }
    for f in &mesh.faces {
        let line = format!("3 {} {} {}\n", f[0], f[1], f[2]);
        standard.push_str(&line);
        glued.push_str(&line);
    }
    for text in [standard, glued] {
        let parsed = parse_off(std::io::Cursor::new(text))?;
        if parsed.vertices.len() != 8 || parsed.faces.len() != 12 {
            return Err(fail("format round trips", "OFF parse"));
        }
    }

    // SPD1 and SPN1 and SPV1, all bit-exact on second write.
    let cloud = random_cloud(10, 0x91);
    let set = build_descriptor_set(
        &cloud,
        DescriptorType::TypeB,
        24,
        true,
        false,
        &mut rng_from(5),
    )?;
    let mut bytes = Vec::new();
    write_spd1(&set, &mut bytes)?;
    let back = read_spd1(&mut bytes.as_slice())?;
    let mut again = Vec::new();
    write_spd1(&back, &mut again)?;
    if bytes != again {
        return Err(fail("format round trips", "SPD1 bytes"));
    }

    let mut ckpt = Checkpoint::default();
    ckpt.push_f64("a.weight", vec![2, 2], vec![1.0, -2.0, 0.5, 4.0]);
    let mut bytes = Vec::new();
    ckpt.write(&mut bytes)?;
    let back = Checkpoint::read(&mut bytes.as_slice())?;
    let mut again = Vec::new();
    back.write(&mut again)?;
    if bytes != again {
        return Err(fail("format round trips", "SPN1 bytes"));
    }

    let grid = voxelize_points(&[Vector3::new(0.1, 0.2, -0.3)], 4)?;
    let mut bytes = Vec::new();
    grid.write_spv1(&mut bytes)?;
    let back = VoxelGrid::read_spv1(&mut bytes.as_slice())?;
    let mut again = Vec::new();
    back.write_spv1(&mut again)?;
    if bytes != again {
        return Err(fail("format round trips", "SPV1 bytes"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass() {
        let mut out = Vec::new();
        let ok = run_all(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(ok, "selftest failures:\n{text}");
        assert_eq!(text.lines().count(), SUITES.len());
        assert!(text.lines().all(|l| l.starts_with("PASS ")));
    }
}
