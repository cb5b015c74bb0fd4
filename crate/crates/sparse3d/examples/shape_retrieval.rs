//! Use the learned latent space as a shape-similarity metric: rank test
//! objects by L2 distance and report truncated mean average precision.
//!
//! ```bash
//! cargo run --release -p sparse3d --example shape_retrieval
//! ```

use sparse3d::config::ExperimentConfig;
use sparse3d::evaluate::evaluate_retrieval;
use sparse3d::train::run_training;

fn main() -> sparse3d::Result<()> {
    let config = ExperimentConfig {
        n_d: 128,
        epochs: 5,
        train_per_class: 200,
        test_per_class: 50,
        lambda_rec: 1.0, // reconstruction sharpens the similarity metric
        ..ExperimentConfig::default()
    };

    let mut outcome = run_training(&config)?;
    let result = evaluate_retrieval(&mut outcome.net, &outcome.dataset, &config, &[5, 10])?;
    for (k, map) in &result.map_at {
        println!("MAP@{k} = {map:.4}");
    }

    let classes = &outcome.dataset.classes;
    let query = 0;
    println!(
        "\nquery object 0 ({}) retrieves:",
        classes[outcome.dataset.test[query].label]
    );
    for (rank, &c) in result.ranked[query].iter().take(5).enumerate() {
        println!(
            "  #{} object {:>3} ({})",
            rank + 1,
            c,
            classes[outcome.dataset.test[c].label]
        );
    }
    Ok(())
}
