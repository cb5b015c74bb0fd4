//! Reconstruct voxelized shape from only 16 points: train with the joint
//! classification+reconstruction loss, decode the sigmoid outputs at the
//! 0.2 threshold, and render a mid-height slice of each grid.
//!
//! ```bash
//! cargo run --release -p sparse3d --example reconstruct_voxels
//! ```

use sparse3d::config::ExperimentConfig;
use sparse3d::evaluate::evaluate_reconstruction;
use sparse3d::geom::voxel::VoxelGrid;
use sparse3d::train::run_training;

fn slice_art(grid: &VoxelGrid, iz: usize) -> String {
    let r = grid.resolution();
    let mut out = String::new();
    for iy in (0..r).rev() {
        for ix in 0..r {
            out.push(if grid.get(ix, iy, iz) { '#' } else { '.' });
        }
        out.push('\n');
    }
    out
}

fn main() -> sparse3d::Result<()> {
    let config = ExperimentConfig {
        n_d: 128,
        epochs: 6,
        train_per_class: 200,
        test_per_class: 50,
        lambda_rec: 1.0,
        ..ExperimentConfig::default()
    };

    let mut outcome = run_training(&config)?;
    // One test object per class: the split is grouped by class.
    let ids = [0usize, 50, 100, 150];
    let results = evaluate_reconstruction(&mut outcome.net, &outcome.dataset, &config, &ids)?;
    for r in &results {
        let class = &outcome.dataset.classes[outcome.dataset.test[r.object_id].label];
        println!(
            "object {:>3} ({class}): IoU {:.4}, {} predicted / {} target cells",
            r.object_id,
            r.iou,
            r.predicted.occupied_count(),
            r.target.occupied_count()
        );
        let mid = r.predicted.resolution() / 2;
        println!("predicted mid slice:        target mid slice:");
        let pred = slice_art(&r.predicted, mid);
        let target = slice_art(&r.target, mid);
        for (a, b) in pred.lines().zip(target.lines()) {
            println!("{a}            {b}");
        }
        println!();
    }
    Ok(())
}
