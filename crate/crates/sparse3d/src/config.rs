//! Experiment configuration and the flat `key = value` config format.
//!
//! Config files keep runs self-describing: one key per line, `#` comments,
//! unknown keys rejected. Command-line flags override file values.

use std::path::PathBuf;

use crate::descriptor::DescriptorType;
use crate::error::{Error, Result};
use crate::geom::rotation::RotationMode;
use crate::model::ModelConfig;

/// Environment variable giving the default dataset root for `modelnet40`.
pub const DATA_ROOT_ENV: &str = "SPARSE3D_DATA";

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    /// Four analytic shapes (sphere/cube/cylinder/torus), generated on the
    /// fly, 400 train / 100 test per class by default.
    Synth4,
    /// ModelNet40 OFF tree: `<root>/<class>/{train,test}/*.off`.
    ModelNet40 { root: Option<PathBuf> },
}

impl DatasetSpec {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Synth4 => "synth4",
            Self::ModelNet40 { .. } => "modelnet40",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    /// Point budget per object.
    pub k: usize,
    pub rotation_train: RotationMode,
    pub rotation_test: RotationMode,
    pub kind: DescriptorType,
    /// Descriptor rows per object.
    pub n_d: usize,
    pub scale_normalize: bool,
    pub fold_normals: bool,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Stop once training accuracy reaches this level.
    pub early_stop_train_acc: Option<f64>,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub shared_widths: Vec<usize>,
    pub classifier_widths: Vec<usize>,
    pub decoder_widths: Vec<usize>,
    pub voxel_resolution: usize,
    pub lambda_rec: f64,
    pub dropout: f64,
    pub batchnorm: bool,
}

impl Default for ExperimentConfig {
    /// Desk-scale synth4 defaults; full-scale runs override the widths.
    fn default() -> Self {
        Self {
            dataset: DatasetSpec::Synth4,
            k: 16,
            rotation_train: RotationMode::So3,
            rotation_test: RotationMode::So3,
            kind: DescriptorType::TypeC,
            n_d: 512,
            scale_normalize: true,
            fold_normals: false,
            epochs: 15,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 42,
            early_stop_train_acc: None,
            train_per_class: 400,
            test_per_class: 100,
            shared_widths: vec![32, 64],
            classifier_widths: vec![32],
            decoder_widths: vec![128],
            voxel_resolution: 16,
            lambda_rec: 0.0,
            dropout: 0.0,
            batchnorm: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < self.kind.min_points() {
            return Err(Error::Config(format!(
                "k = {} is below the {} minimum of {}",
                self.k,
                self.kind.as_str(),
                self.kind.min_points()
            )));
        }
        if self.n_d == 0 {
            return Err(Error::Config("n_d must be >= 1".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be >= 1".into()));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        if self.train_per_class == 0 || self.test_per_class == 0 {
            return Err(Error::Config("per-class object counts must be >= 1".into()));
        }
        Ok(())
    }

    /// Assemble the model config once the class count is known.
    pub fn model_config(&self, classes: usize) -> ModelConfig {
        ModelConfig {
            kind: self.kind,
            shared_widths: self.shared_widths.clone(),
            classifier_widths: self.classifier_widths.clone(),
            decoder_widths: self.decoder_widths.clone(),
            classes,
            voxel_resolution: self.voxel_resolution,
            lambda_rec: self.lambda_rec,
            dropout: self.dropout,
            batchnorm: self.batchnorm,
        }
    }

    pub fn needs_voxels(&self) -> bool {
        self.lambda_rec > 0.0
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            config
                .set(key.trim(), value.trim())
                .map_err(|e| Error::Parse {
                    line: idx + 1,
                    msg: e.to_string(),
                })?;
        }
        Ok(config)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Apply one `key = value` assignment (also used for flag overrides;
    /// flags win over file values).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "dataset" => {
                self.dataset = match value {
                    "synth4" => DatasetSpec::Synth4,
                    "modelnet40" => {
                        let root = match &self.dataset {
                            DatasetSpec::ModelNet40 { root } => root.clone(),
                            _ => None,
                        };
                        DatasetSpec::ModelNet40 { root }
                    }
                    other => {
                        return Err(Error::Config(format!(
                            "unknown dataset `{other}` (expected synth4 | modelnet40)"
                        )))
                    }
                }
            }
            "dataset_path" => {
                self.dataset = DatasetSpec::ModelNet40 {
                    root: Some(PathBuf::from(value)),
                }
            }
            "k" => self.k = parse_num(key, value)?,
            "rotation_train" => self.rotation_train = RotationMode::parse(value)?,
            "rotation_test" => self.rotation_test = RotationMode::parse(value)?,
            "kind" => self.kind = DescriptorType::parse(value)?,
            "n_d" | "nd" => self.n_d = parse_num(key, value)?,
            "scale_normalize" => self.scale_normalize = parse_bool(key, value)?,
            "fold_normals" => self.fold_normals = parse_bool(key, value)?,
            "epochs" => self.epochs = parse_num(key, value)?,
            "batch_size" => self.batch_size = parse_num(key, value)?,
            "learning_rate" => self.learning_rate = parse_float(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "early_stop_train_acc" => self.early_stop_train_acc = Some(parse_float(key, value)?),
            "train_per_class" => self.train_per_class = parse_num(key, value)?,
            "test_per_class" => self.test_per_class = parse_num(key, value)?,
            "shared_widths" => self.shared_widths = parse_list(key, value)?,
            "classifier_widths" => self.classifier_widths = parse_list(key, value)?,
            "decoder_widths" => self.decoder_widths = parse_list(key, value)?,
            "voxel_resolution" => self.voxel_resolution = parse_num(key, value)?,
            "lambda_rec" => self.lambda_rec = parse_float(key, value)?,
            "dropout" => self.dropout = parse_float(key, value)?,
            "batchnorm" => self.batchnorm = parse_bool(key, value)?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Render back to the flat format (round-trips through [`parse`]).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("dataset = {}\n", self.dataset.as_str()));
        if let DatasetSpec::ModelNet40 { root: Some(root) } = &self.dataset {
            out.push_str(&format!("dataset_path = {}\n", root.display()));
        }
        out.push_str(&format!("k = {}\n", self.k));
        out.push_str(&format!(
            "rotation_train = {}\n",
            self.rotation_train.as_str()
        ));
        out.push_str(&format!(
            "rotation_test = {}\n",
            self.rotation_test.as_str()
        ));
        out.push_str(&format!("kind = {}\n", self.kind.as_str()));
        out.push_str(&format!("n_d = {}\n", self.n_d));
        out.push_str(&format!("scale_normalize = {}\n", self.scale_normalize));
        out.push_str(&format!("fold_normals = {}\n", self.fold_normals));
        out.push_str(&format!("epochs = {}\n", self.epochs));
        out.push_str(&format!("batch_size = {}\n", self.batch_size));
        out.push_str(&format!("learning_rate = {}\n", self.learning_rate));
        out.push_str(&format!("seed = {}\n", self.seed));
        if let Some(acc) = self.early_stop_train_acc {
            out.push_str(&format!("early_stop_train_acc = {acc}\n"));
        }
        out.push_str(&format!("train_per_class = {}\n", self.train_per_class));
        out.push_str(&format!("test_per_class = {}\n", self.test_per_class));
        out.push_str(&format!("shared_widths = {}\n", join(&self.shared_widths)));
        out.push_str(&format!(
            "classifier_widths = {}\n",
            join(&self.classifier_widths)
        ));
        out.push_str(&format!(
            "decoder_widths = {}\n",
            join(&self.decoder_widths)
        ));
        out.push_str(&format!("voxel_resolution = {}\n", self.voxel_resolution));
        out.push_str(&format!("lambda_rec = {}\n", self.lambda_rec));
        out.push_str(&format!("dropout = {}\n", self.dropout));
        out.push_str(&format!("batchnorm = {}\n", self.batchnorm));
        out
    }

    /// Resolve the ModelNet root: explicit path first, then `SPARSE3D_DATA`.
    pub fn modelnet_root(&self) -> Result<PathBuf> {
        match &self.dataset {
            DatasetSpec::ModelNet40 { root: Some(root) } => Ok(root.clone()),
            DatasetSpec::ModelNet40 { root: None } => std::env::var_os(DATA_ROOT_ENV)
                .map(PathBuf::from)
                .ok_or_else(|| {
                    Error::Config(format!(
                        "modelnet40 needs `dataset_path` or the {DATA_ROOT_ENV} environment variable"
                    ))
                }),
            DatasetSpec::Synth4 => Err(Error::Config("synth4 has no dataset root".into())),
        }
    }
}

fn join(widths: &[usize]) -> String {
    widths
        .iter()
        .map(|w| w.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_float(key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::Config(format!("bad boolean `{other}` for `{key}`"))),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    let widths: Vec<usize> = value
        .split(',')
        .map(|t| parse_num(key, t.trim()))
        .collect::<Result<_>>()?;
    if widths.is_empty() {
        return Err(Error::Config(format!(
            "`{key}` must list at least one width"
        )));
    }
    Ok(widths)
}
