//! Verify the hand-derived backward passes against central finite
//! differences, layer by layer and through the full multi-task model.
//!
//! ```bash
//! cargo run -p sparse3d --example gradient_check
//! ```

use sparse3d::model::ModelHarness;
use sparse3d::nn::gradcheck::{max_relative_error, StackHarness};
use sparse3d::nn::layers::LayerSpec;

fn main() {
    let cases: Vec<(&str, Vec<LayerSpec>, usize, usize)> = vec![
        ("linear", vec![LayerSpec::linear(6, 4)], 6, 4),
        (
            "sigmoid",
            vec![
                LayerSpec::linear(5, 6),
                LayerSpec::Sigmoid,
                LayerSpec::linear(6, 3),
            ],
            5,
            3,
        ),
        (
            "batchnorm",
            vec![
                LayerSpec::linear_no_bias(4, 6),
                LayerSpec::BatchNorm { dim: 6 },
                LayerSpec::linear(6, 3),
            ],
            4,
            3,
        ),
        (
            "relu",
            vec![
                LayerSpec::linear(5, 8),
                LayerSpec::ReLU,
                LayerSpec::linear(8, 3),
            ],
            5,
            3,
        ),
    ];
    for (name, specs, input_dim, out_dim) in cases {
        let mut harness = StackHarness::new_generic(&specs, input_dim, out_dim, 42, 2e-3);
        println!(
            "{name:<12} max relative error {:.3e}",
            max_relative_error(&mut harness)
        );
    }

    // Shared MLP -> max-pool -> classifier + decoder, CE + BCE, every
    // parameter probed.
    let mut harness = ModelHarness::toy(42);
    println!(
        "{:<12} max relative error {:.3e}",
        "full model",
        max_relative_error(&mut harness)
    );
}
