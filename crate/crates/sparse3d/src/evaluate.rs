//! Evaluation harnesses: classification accuracy, latent-space retrieval
//! with truncated mean average precision, and voxel reconstruction IoU.

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::dataset::{row_to_grid, Dataset};
use crate::descriptor::DescriptorSet;
use crate::error::{Error, Result};
use crate::geom::voxel::VoxelGrid;
use crate::model::{decode_voxels, SparseNet, VOXEL_THRESHOLD};
use crate::nn::layers::Mode;
use crate::train::{extract_object, TEST_EPOCH};

#[derive(Debug, Clone)]
pub struct ClassificationReport {
    pub overall_accuracy: f64,
    /// Per class: (name, correct, total).
    pub per_class: Vec<(String, usize, usize)>,
    pub predictions: Vec<usize>,
}

impl ClassificationReport {
    pub fn per_class_csv(&self) -> String {
        let mut out = String::from("class,correct,total,accuracy\n");
        for (name, correct, total) in &self.per_class {
            let acc = if *total > 0 {
                *correct as f64 / *total as f64
            } else {
                0.0
            };
            out.push_str(&format!("{name},{correct},{total},{acc:.6}\n"));
        }
        out.push_str(&format!("overall,,,{:.6}\n", self.overall_accuracy));
        out
    }
}

/// Test-split descriptor sets under the configured test rotation regime.
pub fn extract_test_sets(
    dataset: &Dataset,
    config: &ExperimentConfig,
) -> Result<Vec<DescriptorSet>> {
    dataset
        .test
        .par_iter()
        .enumerate()
        .map(|(i, obj)| extract_object(obj, config.rotation_test, config, TEST_EPOCH, i))
        .collect()
}

pub fn evaluate_classification(
    net: &mut SparseNet,
    dataset: &Dataset,
    config: &ExperimentConfig,
) -> Result<ClassificationReport> {
    if dataset.test.is_empty() {
        return Err(Error::Dataset("empty test split".into()));
    }
    let sets = extract_test_sets(dataset, config)?;
    let mut per_class: Vec<(String, usize, usize)> =
        dataset.classes.iter().map(|c| (c.clone(), 0, 0)).collect();
    let mut predictions = Vec::with_capacity(sets.len());
    let mut correct = 0usize;
    for (obj, set) in dataset.test.iter().zip(&sets) {
        let predicted = net.predict(set)?;
        predictions.push(predicted);
        per_class[obj.label].2 += 1;
        if predicted == obj.label {
            per_class[obj.label].1 += 1;
            correct += 1;
        }
    }
    Ok(ClassificationReport {
        overall_accuracy: correct as f64 / dataset.test.len() as f64,
        per_class,
        predictions,
    })
}

#[derive(Debug, Clone)]
pub struct RetrievalResult {
    /// `(k, MAP@k)` pairs in the order requested.
    pub map_at: Vec<(usize, f64)>,
    /// Per query, all other test objects ranked by ascending latent L2.
    pub ranked: Vec<Vec<usize>>,
}

/// Rank every other embedding by ascending squared L2 distance, ties broken
/// by index. Distances accumulate dimension-by-dimension in index order so
/// rankings are reproducible bit for bit.
pub fn rank_by_l2(latents: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = latents.len();
    (0..n)
        .map(|q| {
            let mut order: Vec<(f64, usize)> = (0..n)
                .filter(|&c| c != q)
                .map(|c| {
                    let mut d2 = 0.0;
                    for (a, b) in latents[q].iter().zip(&latents[c]) {
                        let diff = a - b;
                        d2 += diff * diff;
                    }
                    (d2, c)
                })
                .collect();
            order.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
            order.into_iter().map(|(_, c)| c).collect()
        })
        .collect()
}

/// Average precision truncated at `k`: relevant-hit precisions averaged
/// over `min(k, total relevant)`. Relevance is class equality; the query
/// itself is excluded from its candidate list.
pub fn average_precision_at(ranked: &[usize], labels: &[usize], query: usize, k: usize) -> f64 {
    let total_relevant = ranked
        .iter()
        .filter(|&&c| labels[c] == labels[query])
        .count();
    let denom = k.min(total_relevant);
    if denom == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut precision_sum = 0.0;
    for (rank, &candidate) in ranked.iter().take(k).enumerate() {
        if labels[candidate] == labels[query] {
            hits += 1;
            precision_sum += hits as f64 / (rank + 1) as f64;
        }
    }
    precision_sum / denom as f64
}

pub fn mean_average_precision(ranked: &[Vec<usize>], labels: &[usize], k: usize) -> f64 {
    let n = ranked.len();
    let sum: f64 = (0..n)
        .map(|q| average_precision_at(&ranked[q], labels, q, k))
        .sum();
    sum / n as f64
}

pub fn evaluate_retrieval(
    net: &mut SparseNet,
    dataset: &Dataset,
    config: &ExperimentConfig,
    k_list: &[usize],
) -> Result<RetrievalResult> {
    let max_k = k_list.iter().copied().max().unwrap_or(5);
    if dataset.test.len() < max_k + 1 {
        return Err(Error::Dataset(format!(
            "retrieval at k={max_k} needs at least {} test objects, have {}",
            max_k + 1,
            dataset.test.len()
        )));
    }
    let sets = extract_test_sets(dataset, config)?;
    let mut latents = Vec::with_capacity(sets.len());
    for set in &sets {
        latents.push(net.forward_latent(set, Mode::Eval)?);
    }
    let labels: Vec<usize> = dataset.test.iter().map(|o| o.label).collect();
    let ranked = rank_by_l2(&latents);
    let map_at = k_list
        .iter()
        .map(|&k| (k, mean_average_precision(&ranked, &labels, k)))
        .collect();
    Ok(RetrievalResult { map_at, ranked })
}

#[derive(Debug, Clone)]
pub struct ReconstructionOutcome {
    pub object_id: usize,
    pub predicted: VoxelGrid,
    pub target: VoxelGrid,
    pub iou: f64,
}

/// Reconstruct the given test objects and score voxel IoU against their
/// canonical-pose targets.
pub fn evaluate_reconstruction(
    net: &mut SparseNet,
    dataset: &Dataset,
    config: &ExperimentConfig,
    ids: &[usize],
) -> Result<Vec<ReconstructionOutcome>> {
    let resolution = net.config.voxel_resolution;
    let mut out = Vec::with_capacity(ids.len());
    for &id in ids {
        let obj = dataset
            .test
            .get(id)
            .ok_or_else(|| Error::Invalid(format!("object id {id} out of range")))?;
        let target_row = obj
            .voxel_target
            .as_ref()
            .ok_or_else(|| Error::Invalid("dataset was loaded without voxel targets".into()))?;
        let target = row_to_grid(target_row, resolution)?;
        let set = extract_object(obj, config.rotation_test, config, TEST_EPOCH, id)?;
        let latent = net.forward_latent(&set, Mode::Eval)?;
        let logits = net.forward_reconstruct(&latent, Mode::Eval)?;
        let predicted = decode_voxels(&logits, resolution, VOXEL_THRESHOLD)?;
        let iou = predicted.iou(&target)?;
        out.push(ReconstructionOutcome {
            object_id: id,
            predicted,
            target,
            iou,
        });
    }
    Ok(out)
}
