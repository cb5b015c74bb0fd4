//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error. All randomness is
//! seeded, so identical invocations produce byte-identical output files.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::ablation::{ablation_csv, run_ablation, sparsity_sweep, sweep_csv};
use crate::config::ExperimentConfig;
use crate::dataset::load_dataset;
use crate::descriptor::cache::save_spd1;
use crate::descriptor::{build_descriptor_set, DescriptorSet, DescriptorType};
use crate::error::{Error, Result};
use crate::evaluate::{evaluate_classification, evaluate_reconstruction, evaluate_retrieval};
use crate::geom::mesh::{normalize_mesh, parse_off_file};
use crate::geom::sample::sample_surface;
use crate::model::{ModelHarness, SparseNet};
use crate::nn::checkpoint::Checkpoint;
use crate::nn::gradcheck::{max_relative_error, StackHarness};
use crate::nn::layers::LayerSpec;
use crate::seed::{derive, rng_from, stream};
use crate::selftest;
use crate::train::{metrics_csv, run_training};

#[derive(Parser)]
#[command(
    name = "sparse3d",
    version,
    about = "Sparse point cloud classification with rigid-motion-invariant descriptors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract descriptor caches (SPD1) from an OFF file or directory.
    Extract {
        /// OFF file or a directory of .off files.
        #[arg(long)]
        input: PathBuf,
        /// Descriptor kind: raw | a | b | c.
        #[arg(long)]
        kind: String,
        /// Points sampled per object.
        #[arg(long)]
        k: usize,
        /// Descriptor rows per object.
        #[arg(long)]
        nd: usize,
        /// Divide lengths by the set's maximum side length.
        #[arg(long = "scale-norm")]
        scale_norm: bool,
        /// Treat normals as unoriented (fold angles into [0, pi/2]).
        #[arg(long = "fold-normals")]
        fold_normals: bool,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output .spd file (or directory when --input is a directory).
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model and write an SPN1 checkpoint plus a metrics CSV.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Checkpoint output path.
        #[arg(long)]
        out: PathBuf,
        /// Metrics CSV path (default: <out>.metrics.csv).
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Override a config key, e.g. --set seed=7 (flags win over file).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Evaluate classification accuracy on the test split.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Write the per-class breakdown CSV here (default: stdout).
        #[arg(long = "per-class")]
        per_class: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Rank test objects by latent distance and report MAP.
    Retrieve {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated truncation depths.
        #[arg(long, default_value = "5,10")]
        topk: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Reconstruct voxel grids for test objects and report IoU.
    Reconstruct {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated test-object indices.
        #[arg(long)]
        ids: String,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Train/evaluate the descriptor-kind x reconstruction-weight grid.
    Ablation {
        #[arg(long)]
        config: PathBuf,
        /// CSV output path (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Train/evaluate one model per point budget.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated point budgets, e.g. 8,16,32.
        #[arg(long)]
        ks: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Finite-difference gradient verification of every layer and the full
    /// model.
    Gradcheck {
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Run all invariance suites.
    Selftest,
}

/// Parse and dispatch; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprint!("{e}");
            return 1;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Extract {
            input,
            kind,
            k,
            nd,
            scale_norm,
            fold_normals,
            seed,
            out,
        } => cmd_extract(&input, &kind, k, nd, scale_norm, fold_normals, seed, &out),
        Command::Train {
            config,
            out,
            metrics,
            set,
        } => cmd_train(&config, &out, metrics, &set),
        Command::Eval {
            ckpt,
            config,
            per_class,
            set,
        } => cmd_eval(&ckpt, &config, per_class, &set),
        Command::Retrieve {
            ckpt,
            config,
            topk,
            set,
        } => cmd_retrieve(&ckpt, &config, &topk, &set),
        Command::Reconstruct {
            ckpt,
            config,
            ids,
            out_dir,
            set,
        } => cmd_reconstruct(&ckpt, &config, &ids, &out_dir, &set),
        Command::Ablation { config, out, set } => cmd_ablation(&config, out, &set),
        Command::Sweep {
            config,
            ks,
            out,
            set,
        } => cmd_sweep(&config, &ks, out, &set),
        Command::Gradcheck { seed } => cmd_gradcheck(seed),
        Command::Selftest => cmd_selftest(),
    }
}

fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::from_file(path)?;
    for assignment in overrides {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{assignment}`")))?;
        config.set(key.trim(), value.trim())?;
    }
    config.validate()?;
    Ok(config)
}

fn parse_usize_list(text: &str, what: &str) -> Result<Vec<usize>> {
    let values: Vec<usize> = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad {what} entry `{t}`")))
        })
        .collect::<Result<_>>()?;
    if values.is_empty() {
        return Err(Error::Config(format!("{what} list is empty")));
    }
    Ok(values)
}

fn extract_one(
    path: &Path,
    kind: DescriptorType,
    k: usize,
    n_d: usize,
    scale_norm: bool,
    fold_normals: bool,
    seed: u64,
) -> Result<DescriptorSet> {
    let mesh = normalize_mesh(&parse_off_file(path)?)?;
    let cloud = sample_surface(&mesh, k, &mut rng_from(derive(seed, &[stream::SAMPLING])))?;
    build_descriptor_set(
        &cloud,
        kind,
        n_d,
        scale_norm,
        fold_normals,
        &mut rng_from(derive(seed, &[stream::COMBINATIONS])),
    )
}

#[allow(clippy::too_many_arguments)]
fn cmd_extract(
    input: &Path,
    kind: &str,
    k: usize,
    nd: usize,
    scale_norm: bool,
    fold_normals: bool,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let kind = DescriptorType::parse(kind)?;
    if input.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(input)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|ext| ext == "off"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::Dataset(format!(
                "no .off files in {}",
                input.display()
            )));
        }
        std::fs::create_dir_all(out)?;
        for (i, path) in files.iter().enumerate() {
            let set = extract_one(
                path,
                kind,
                k,
                nd,
                scale_norm,
                fold_normals,
                derive(seed, &[i as u64]),
            )?;
            let stem = path.file_stem().unwrap_or_default().to_string_lossy();
            save_spd1(&set, &out.join(format!("{stem}.spd")))?;
        }
        println!(
            "extracted {} descriptor sets into {}",
            files.len(),
            out.display()
        );
    } else {
        let set = extract_one(input, kind, k, nd, scale_norm, fold_normals, seed)?;
        save_spd1(&set, out)?;
        println!(
            "extracted {} x {} {} descriptors to {}",
            set.n_rows,
            set.width,
            set.kind.as_str(),
            out.display()
        );
    }
    Ok(())
}

fn cmd_train(config: &Path, out: &Path, metrics: Option<PathBuf>, set: &[String]) -> Result<()> {
    let config = load_config(config, set)?;
    let outcome = run_training(&config)?;
    outcome.checkpoint.save(out)?;
    let metrics_path = metrics.unwrap_or_else(|| {
        let mut p = out.as_os_str().to_owned();
        p.push(".metrics.csv");
        PathBuf::from(p)
    });
    std::fs::write(&metrics_path, metrics_csv(&outcome.metrics))?;
    if let Some(last) = outcome.metrics.last() {
        println!(
            "trained {} epochs: loss {:.4}, train accuracy {:.4}",
            outcome.metrics.len(),
            last.train_loss,
            last.train_accuracy
        );
    }
    println!("checkpoint: {}", out.display());
    println!("metrics: {}", metrics_path.display());
    Ok(())
}

fn load_net(
    ckpt: &Path,
    config: &ExperimentConfig,
) -> Result<(SparseNet, crate::dataset::Dataset)> {
    let dataset = load_dataset(config)?;
    let model_config = config.model_config(dataset.class_count());
    let checkpoint = Checkpoint::load(ckpt)?;
    let (net, _) = SparseNet::from_checkpoint(model_config, &checkpoint)?;
    Ok((net, dataset))
}

fn cmd_eval(ckpt: &Path, config: &Path, per_class: Option<PathBuf>, set: &[String]) -> Result<()> {
    let config = load_config(config, set)?;
    let (mut net, dataset) = load_net(ckpt, &config)?;
    let report = evaluate_classification(&mut net, &dataset, &config)?;
    println!(
        "test accuracy: {:.4} ({} objects)",
        report.overall_accuracy,
        dataset.test.len()
    );
    match per_class {
        Some(path) => {
            std::fs::write(&path, report.per_class_csv())?;
            println!("per-class CSV: {}", path.display());
        }
        None => print!("{}", report.per_class_csv()),
    }
    Ok(())
}

fn cmd_retrieve(ckpt: &Path, config: &Path, topk: &str, set: &[String]) -> Result<()> {
    let config = load_config(config, set)?;
    let k_list = parse_usize_list(topk, "topk")?;
    let (mut net, dataset) = load_net(ckpt, &config)?;
    let result = evaluate_retrieval(&mut net, &dataset, &config, &k_list)?;
    for (k, map) in &result.map_at {
        println!("MAP@{k} = {map:.4}");
    }
    Ok(())
}

fn cmd_reconstruct(
    ckpt: &Path,
    config: &Path,
    ids: &str,
    out_dir: &Path,
    set: &[String],
) -> Result<()> {
    let mut config = load_config(config, set)?;
    // Targets are needed for IoU regardless of the training loss weight.
    if !config.needs_voxels() {
        config.lambda_rec = 1.0;
    }
    let ids = parse_usize_list(ids, "ids")?;
    let (mut net, dataset) = load_net(ckpt, &config)?;
    std::fs::create_dir_all(out_dir)?;
    let outcomes = evaluate_reconstruction(&mut net, &dataset, &config, &ids)?;
    for outcome in &outcomes {
        let pred_path = out_dir.join(format!("pred_{:04}.spv", outcome.object_id));
        let target_path = out_dir.join(format!("target_{:04}.spv", outcome.object_id));
        outcome.predicted.save(&pred_path)?;
        outcome.target.save(&target_path)?;
        println!(
            "object {}: IoU {:.4} ({} predicted / {} target cells)",
            outcome.object_id,
            outcome.iou,
            outcome.predicted.occupied_count(),
            outcome.target.occupied_count()
        );
    }
    Ok(())
}

fn cmd_ablation(config: &Path, out: Option<PathBuf>, set: &[String]) -> Result<()> {
    let config = load_config(config, set)?;
    let cells = run_ablation(&config)?;
    let csv = ablation_csv(&cells);
    match out {
        Some(path) => {
            std::fs::write(&path, &csv)?;
            println!("ablation CSV: {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_sweep(config: &Path, ks: &str, out: Option<PathBuf>, set: &[String]) -> Result<()> {
    let config = load_config(config, set)?;
    let ks = parse_usize_list(ks, "ks")?;
    let rows = sparsity_sweep(&config, &ks)?;
    let csv = sweep_csv(&rows);
    match out {
        Some(path) => {
            std::fs::write(&path, &csv)?;
            println!("sweep CSV: {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_gradcheck(seed: u64) -> Result<()> {
    // Layer-level checks; smooth layers must reach 1e-6, piecewise-linear
    // ones 1e-4 at generic points.
    let margin = 2e-3;
    let cases: Vec<(&str, Vec<LayerSpec>, usize, usize, f64)> = vec![
        ("linear", vec![LayerSpec::linear(6, 4)], 6, 4, 1e-6),
        (
            "sigmoid",
            vec![
                LayerSpec::linear(5, 6),
                LayerSpec::Sigmoid,
                LayerSpec::linear(6, 3),
            ],
            5,
            3,
            1e-6,
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
            1e-6,
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
            1e-4,
        ),
    ];
    let mut all_ok = true;
    for (name, specs, input_dim, out_dim, threshold) in cases {
        let mut harness = StackHarness::new_generic(&specs, input_dim, out_dim, seed, margin);
        let err = max_relative_error(&mut harness);
        let ok = err < threshold;
        all_ok &= ok;
        println!(
            "{name:<12} max relative error {err:.3e} (threshold {threshold:.0e}) {}",
            if ok { "ok" } else { "FAIL" }
        );
    }

    let mut harness = ModelHarness::toy(seed);
    let err = max_relative_error(&mut harness);
    let ok = err < 1e-4;
    all_ok &= ok;
    println!(
        "{:<12} max relative error {err:.3e} (threshold 1e-4) {}",
        "full model",
        if ok { "ok" } else { "FAIL" }
    );

    if all_ok {
        Ok(())
    } else {
        Err(Error::Invalid("gradient check failed".into()))
    }
}

fn cmd_selftest() -> Result<()> {
    let mut out = std::io::stdout();
    let ok = run_all_suites(&mut out)?;
    if ok {
        Ok(())
    } else {
        Err(Error::Invalid("one or more selftest suites failed".into()))
    }
}

fn run_all_suites(out: &mut impl std::io::Write) -> Result<bool> {
    selftest::run_all(out).map_err(Error::Io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> i32 {
        run(args.iter().map(|s| s.to_string()))
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run_args(&["sparse3d", "--bogus"]), 1);
        assert_eq!(run_args(&["sparse3d", "extract", "--nonsense", "x"]), 1);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run_args(&["sparse3d", "--help"]), 0);
        for sub in [
            "extract",
            "train",
            "eval",
            "retrieve",
            "reconstruct",
            "ablation",
            "sweep",
            "gradcheck",
            "selftest",
        ] {
            assert_eq!(run_args(&["sparse3d", sub, "--help"]), 0, "{sub} --help");
        }
    }

    #[test]
    fn missing_input_is_runtime_error() {
        assert_eq!(
            run_args(&[
                "sparse3d",
                "extract",
                "--input",
                "/nonexistent/file.off",
                "--kind",
                "c",
                "--k",
                "16",
                "--nd",
                "32",
                "--out",
                "/tmp/unused.spd",
            ]),
            2
        );
    }
}
