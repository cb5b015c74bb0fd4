//! Training loop: per-epoch descriptor regeneration with fresh rotation
//! augmentation, Adam updates, and a per-epoch metrics log.
//!
//! Rotations are applied to the canonical cloud *before* descriptor
//! extraction; combination sampling uses an rng stream independent of the
//! rotation stream, so the same object yields matching descriptor rows
//! under any rotation regime.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::dataset::{load_dataset, Dataset, DatasetObject};
use crate::descriptor::{build_descriptor_set, DescriptorSet};
use crate::error::{Error, Result};
use crate::geom::cloud::apply_rigid;
use crate::geom::rotation::{random_rotation, RotationMode};
use crate::model::{argmax, stack_descriptor_sets, CheckpointMeta, SparseNet};
use crate::nn::adam::Adam;
use crate::nn::checkpoint::Checkpoint;
use crate::nn::layers::Mode;
use crate::nn::tensor::Tensor2;
use crate::seed::{derive, rng_from, stream};

#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub class_loss: f64,
    pub recon_loss: f64,
    pub train_accuracy: f64,
}

pub struct TrainOutcome {
    pub net: SparseNet,
    pub dataset: Dataset,
    pub metrics: Vec<EpochMetrics>,
    pub checkpoint: Checkpoint,
}

/// Extract one object's descriptor set for a given epoch (or for the test
/// stream with `epoch_tag = TEST_EPOCH`).
pub fn extract_object(
    object: &DatasetObject,
    rotation: RotationMode,
    config: &ExperimentConfig,
    epoch_tag: u64,
    object_index: usize,
) -> Result<DescriptorSet> {
    let mut rot_rng = rng_from(derive(
        config.seed,
        &[stream::ROTATION, epoch_tag, object_index as u64],
    ));
    let mut combo_rng = rng_from(derive(
        config.seed,
        &[stream::COMBINATIONS, epoch_tag, object_index as u64],
    ));
    let rot = random_rotation(rotation, &mut rot_rng);
    let rotated = apply_rigid(&object.cloud, &rot, &Vector3::zeros());
    build_descriptor_set(
        &rotated,
        config.kind,
        config.n_d,
        config.scale_normalize,
        config.fold_normals,
        &mut combo_rng,
    )
}

/// Epoch tag reserved for the evaluation stream.
pub const TEST_EPOCH: u64 = u64::MAX;

fn assemble_targets(objects: &[&DatasetObject], cells: usize) -> Result<Tensor2> {
    let mut data = Vec::with_capacity(objects.len() * cells);
    for obj in objects {
        let target = obj
            .voxel_target
            .as_ref()
            .ok_or_else(|| Error::Invalid("reconstruction requires voxel targets".into()))?;
        data.extend_from_slice(target);
    }
    Tensor2::from_vec(objects.len(), cells, data)
}

pub fn run_training(config: &ExperimentConfig) -> Result<TrainOutcome> {
    let dataset = load_dataset(config)?;
    train_on(config, dataset)
}

/// Train on an already-loaded dataset (the ablation/sweep runners reuse
/// loaded data where they can).
pub fn train_on(config: &ExperimentConfig, dataset: Dataset) -> Result<TrainOutcome> {
    config.validate()?;
    let model_config = config.model_config(dataset.class_count());
    let mut net = SparseNet::new(model_config.clone(), config.seed)?;
    let mut adam = Adam::new(config.learning_rate);
    let mut metrics = Vec::with_capacity(config.epochs);
    let mut epochs_run = 0;

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..dataset.train.len()).collect();
        {
            use rand::seq::SliceRandom;
            let mut rng = rng_from(derive(config.seed, &[stream::SHUFFLE, epoch as u64]));
            order.shuffle(&mut rng);
        }

        let mut loss_sum = 0.0;
        let mut class_sum = 0.0;
        let mut recon_sum = 0.0;
        let mut correct = 0usize;

        for (batch_index, batch_ids) in order.chunks(config.batch_size).enumerate() {
            let sets: Vec<DescriptorSet> = batch_ids
                .par_iter()
                .map(|&i| {
                    extract_object(
                        &dataset.train[i],
                        config.rotation_train,
                        config,
                        epoch as u64,
                        i,
                    )
                })
                .collect::<Result<_>>()?;
            let (x, n_rows) = stack_descriptor_sets(&sets)?;
            let labels: Vec<usize> = batch_ids.iter().map(|&i| dataset.train[i].label).collect();
            let objects: Vec<&DatasetObject> =
                batch_ids.iter().map(|&i| &dataset.train[i]).collect();
            let targets = if config.needs_voxels() {
                Some(assemble_targets(&objects, model_config.voxel_cells())?)
            } else {
                None
            };

            let mut dropout_rng = rng_from(derive(
                config.seed,
                &[stream::DROPOUT, epoch as u64, batch_index as u64],
            ));
            let out = net
                .multitask_loss(
                    &x,
                    n_rows,
                    &labels,
                    targets.as_ref(),
                    Mode::Train,
                    true,
                    &mut dropout_rng,
                )
                .map_err(|e| match e {
                    Error::Diverged(msg) => {
                        Error::Diverged(format!("epoch {epoch}, batch {batch_index}: {msg}"))
                    }
                    other => other,
                })?;
            adam.step(&mut [&mut net.shared, &mut net.classifier, &mut net.decoder]);

            let b = batch_ids.len() as f64;
            loss_sum += out.loss * b;
            class_sum += out.class_loss * b;
            recon_sum += out.recon_loss * b;
            for (row, &label) in labels.iter().enumerate() {
                if argmax(out.class_logits.row(row)) == label {
                    correct += 1;
                }
            }
        }

        let n = dataset.train.len() as f64;
        let epoch_metrics = EpochMetrics {
            epoch,
            train_loss: loss_sum / n,
            class_loss: class_sum / n,
            recon_loss: recon_sum / n,
            train_accuracy: correct as f64 / n,
        };
        let train_accuracy = epoch_metrics.train_accuracy;
        metrics.push(epoch_metrics);
        epochs_run = epoch + 1;

        if let Some(threshold) = config.early_stop_train_acc {
            if train_accuracy >= threshold {
                break;
            }
        }
    }

    let meta = CheckpointMeta {
        kind: config.kind,
        n_d: config.n_d,
        arch_hash: model_config.arch_hash(),
        seed: config.seed,
        epoch: epochs_run,
    };
    let checkpoint = net.to_checkpoint(meta);
    Ok(TrainOutcome {
        net,
        dataset,
        metrics,
        checkpoint,
    })
}

pub fn metrics_csv(metrics: &[EpochMetrics]) -> String {
    let mut out = String::from("epoch,train_loss,class_loss,recon_loss,train_accuracy\n");
    for m in metrics {
        out.push_str(&format!(
            "{},{:.17e},{:.17e},{:.17e},{:.6}\n",
            m.epoch, m.train_loss, m.class_loss, m.recon_loss, m.train_accuracy
        ));
    }
    out
}
