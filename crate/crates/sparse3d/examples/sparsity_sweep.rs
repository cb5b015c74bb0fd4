//! Classification accuracy as the point budget K shrinks, with matched
//! train/test K per run.
//!
//! ```bash
//! cargo run --release -p sparse3d --example sparsity_sweep
//! ```

use sparse3d::ablation::{sparsity_sweep, sweep_csv};
use sparse3d::config::ExperimentConfig;

fn main() -> sparse3d::Result<()> {
    let config = ExperimentConfig {
        n_d: 128,
        epochs: 5,
        train_per_class: 150,
        test_per_class: 40,
        ..ExperimentConfig::default()
    };

    let ks = [8, 16, 32];
    println!("training one model per K in {ks:?} (SO(3) at train and test)...");
    let rows = sparsity_sweep(&config, &ks)?;
    print!("{}", sweep_csv(&rows));
    Ok(())
}
