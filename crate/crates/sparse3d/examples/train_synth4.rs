//! Train the classifier on the four synthetic shapes under arbitrary SO(3)
//! rotations and report test accuracy. Takes roughly a minute on a laptop.
//!
//! ```bash
//! cargo run --release -p sparse3d --example train_synth4
//! ```

use sparse3d::config::ExperimentConfig;
use sparse3d::evaluate::evaluate_classification;
use sparse3d::train::run_training;

fn main() -> sparse3d::Result<()> {
    // Defaults: synth4, K = 16 points, Type-C descriptors, N_d = 512,
    // SO(3) rotations at train and test time.
    let config = ExperimentConfig {
        epochs: 6,
        ..ExperimentConfig::default()
    };
    println!(
        "training: K = {}, {} descriptors/object, kind {}",
        config.k,
        config.n_d,
        config.kind.as_str()
    );

    let mut outcome = run_training(&config)?;
    for m in &outcome.metrics {
        println!(
            "epoch {:>2}: loss {:.4}, train accuracy {:.4}",
            m.epoch, m.train_loss, m.train_accuracy
        );
    }

    let report = evaluate_classification(&mut outcome.net, &outcome.dataset, &config)?;
    println!(
        "\ntest accuracy under SO(3) rotations: {:.4}",
        report.overall_accuracy
    );
    for (name, correct, total) in &report.per_class {
        println!("  {name:<9} {correct:>3}/{total}");
    }
    Ok(())
}
