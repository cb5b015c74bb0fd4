//! Dataset pipeline: synthetic shapes and the ModelNet40 OFF tree.
//!
//! Objects carry a fixed canonical-pose point cloud (sampled once with a
//! per-object seed) and, when reconstruction is on, a canonical-pose voxel
//! target. Rotation augmentation happens later, at descriptor-extraction
//! time, so targets stay pose-independent.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::config::{DatasetSpec, ExperimentConfig};
use crate::error::{Error, Result};
use crate::geom::cloud::PointCloud;
use crate::geom::mesh::{normalize_mesh, parse_off_file};
use crate::geom::sample::sample_surface;
use crate::geom::synth::{synth_shape, synth_surface_points, SynthKind};
use crate::geom::voxel::{dense_sample_count, voxelize_mesh, voxelize_points, VoxelGrid};
use crate::seed::{derive, rng_from, stream};

const SPLIT_TRAIN: u64 = 0;
const SPLIT_TEST: u64 = 1;
const VOXEL_STREAM: u64 = 0x5630;

#[derive(Debug, Clone)]
pub struct DatasetObject {
    pub cloud: PointCloud,
    pub label: usize,
    /// Flattened canonical-pose `R^3` occupancy in `{0,1}`, shared between
    /// objects of one synthetic class.
    pub voxel_target: Option<Arc<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub classes: Vec<String>,
    pub train: Vec<DatasetObject>,
    pub test: Vec<DatasetObject>,
}

impl Dataset {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }
}

pub fn load_dataset(config: &ExperimentConfig) -> Result<Dataset> {
    config.validate()?;
    match &config.dataset {
        DatasetSpec::Synth4 => load_synth4(config),
        DatasetSpec::ModelNet40 { .. } => load_modelnet(config, &config.modelnet_root()?),
    }
}

fn load_synth4(config: &ExperimentConfig) -> Result<Dataset> {
    let classes: Vec<String> = SynthKind::ALL
        .iter()
        .map(|k| k.as_str().to_string())
        .collect();
    let with_voxels = config.needs_voxels();

    // One canonical voxel target per class: all instances of an analytic
    // shape share the same surface.
    let mut targets: Vec<Option<Arc<Vec<f64>>>> = vec![None; classes.len()];
    if with_voxels {
        for (label, kind) in SynthKind::ALL.iter().enumerate() {
            let mut rng = rng_from(derive(
                config.seed,
                &[stream::SAMPLING, VOXEL_STREAM, label as u64],
            ));
            let points =
                synth_surface_points(*kind, dense_sample_count(config.voxel_resolution), &mut rng);
            let grid = voxelize_points(&points, config.voxel_resolution)?;
            targets[label] = Some(Arc::new(grid_to_row(&grid)));
        }
    }

    let n_classes = classes.len();
    let make_split = |split: u64, per_class: usize| -> Result<Vec<DatasetObject>> {
        let specs: Vec<(usize, usize)> = (0..n_classes)
            .flat_map(|label| (0..per_class).map(move |i| (label, i)))
            .collect();
        specs
            .par_iter()
            .map(|&(label, i)| {
                let seed = derive(
                    config.seed,
                    &[stream::SAMPLING, split, label as u64, i as u64],
                );
                let cloud = synth_shape(SynthKind::ALL[label], config.k, &mut rng_from(seed))?;
                Ok(DatasetObject {
                    cloud,
                    label,
                    voxel_target: targets[label].clone(),
                })
            })
            .collect()
    };

    let train = make_split(SPLIT_TRAIN, config.train_per_class)?;
    let test = make_split(SPLIT_TEST, config.test_per_class)?;
    Ok(Dataset {
        classes,
        train,
        test,
    })
}

fn load_modelnet(config: &ExperimentConfig, root: &Path) -> Result<Dataset> {
    let mut classes: Vec<String> = std::fs::read_dir(root)
        .map_err(|e| Error::Dataset(format!("cannot read dataset root {}: {e}", root.display())))?
        .filter_map(|entry| entry.ok())
        .filter(|entry| entry.path().is_dir())
        .map(|entry| entry.file_name().to_string_lossy().into_owned())
        .collect();
    classes.sort();
    if classes.is_empty() {
        return Err(Error::Dataset(format!(
            "no class directories under {}",
            root.display()
        )));
    }

    let list_split = |class: &str, split: &str| -> Result<Vec<std::path::PathBuf>> {
        let dir = root.join(class).join(split);
        let mut files: Vec<_> = match std::fs::read_dir(&dir) {
            Ok(entries) => entries
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|ext| ext == "off"))
                .collect(),
            Err(_) => Vec::new(),
        };
        files.sort();
        Ok(files)
    };

    let with_voxels = config.needs_voxels();
    let load_split = |split: &str, split_tag: u64| -> Result<Vec<DatasetObject>> {
        let mut work = Vec::new();
        for (label, class) in classes.iter().enumerate() {
            for path in list_split(class, split)? {
                work.push((label, path));
            }
        }
        work.par_iter()
            .enumerate()
            .map(|(idx, (label, path))| {
                let mesh = normalize_mesh(&parse_off_file(path)?)?;
                let seed = derive(config.seed, &[stream::SAMPLING, split_tag, idx as u64]);
                let cloud = sample_surface(&mesh, config.k, &mut rng_from(seed))?;
                let voxel_target = if with_voxels {
                    let vseed = derive(config.seed, &[VOXEL_STREAM, split_tag, idx as u64]);
                    let grid = voxelize_mesh(&mesh, config.voxel_resolution, &mut rng_from(vseed))?;
                    Some(Arc::new(grid_to_row(&grid)))
                } else {
                    None
                };
                Ok(DatasetObject {
                    cloud,
                    label: *label,
                    voxel_target,
                })
            })
            .collect()
    };

    let train = load_split("train", SPLIT_TRAIN)?;
    let test = load_split("test", SPLIT_TEST)?;
    if train.is_empty() || test.is_empty() {
        return Err(Error::Dataset(format!(
            "dataset at {} has {} train / {} test objects",
            root.display(),
            train.len(),
            test.len()
        )));
    }
    Ok(Dataset {
        classes,
        train,
        test,
    })
}

/// Flatten a voxel grid to an `R^3` row of 0/1 values.
pub fn grid_to_row(grid: &VoxelGrid) -> Vec<f64> {
    grid.occupancy()
        .iter()
        .map(|&o| f64::from(u8::from(o)))
        .collect()
}

/// Rebuild a grid from a flattened 0/1 row.
pub fn row_to_grid(row: &[f64], resolution: usize) -> Result<VoxelGrid> {
    VoxelGrid::from_flat(resolution, row.iter().map(|&v| v > 0.5).collect())
}
