//! Shared per-descriptor MLP with max-pool aggregation, classification head,
//! and voxel reconstruction decoder, trained jointly.
//!
//! Every descriptor row passes through the same MLP; a max-pool over rows
//! compresses the set into one latent vector, which makes the encoder
//! invariant to row order and row duplication. The classifier and decoder
//! heads read only the latent, and the multi-task loss is
//! `CE + lambda_rec * BCE`.

use rand::Rng;

use crate::descriptor::{DescriptorSet, DescriptorType};
use crate::error::{Error, Result};
use crate::geom::voxel::VoxelGrid;
use crate::nn::checkpoint::{Checkpoint, TensorData};
use crate::nn::gradcheck::Differentiable;
use crate::nn::layers::{LayerSpec, Mode, Stack};
use crate::nn::loss::{binary_cross_entropy_logits, sigmoid, softmax_cross_entropy};
use crate::nn::pool::{maxpool_rows, maxpool_segments, maxpool_segments_backward};
use crate::nn::tensor::Tensor2;
use crate::seed::{derive, rng_from, stream};

/// Sigmoid threshold for placing a voxel; deliberately below 0.5 because
/// outputs become less confident as inputs get sparser.
pub const VOXEL_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub kind: DescriptorType,
    /// Shared MLP hidden widths; the last entry is the latent dimension.
    pub shared_widths: Vec<usize>,
    /// Classifier hidden widths (a final `-> classes` layer is appended).
    pub classifier_widths: Vec<usize>,
    /// Decoder hidden widths (a final `-> R^3` layer is appended).
    pub decoder_widths: Vec<usize>,
    pub classes: usize,
    pub voxel_resolution: usize,
    pub lambda_rec: f64,
    /// Dropout rate before the final classifier layer.
    pub dropout: f64,
    pub batchnorm: bool,
}

impl ModelConfig {
    /// Full-scale defaults (ModelNet40-sized).
    pub fn full_scale(kind: DescriptorType, classes: usize) -> Self {
        Self {
            kind,
            shared_widths: vec![64, 128, 1024],
            classifier_widths: vec![512, 256],
            decoder_widths: vec![1024, 2048],
            classes,
            voxel_resolution: 16,
            lambda_rec: 1.0,
            dropout: 0.3,
            batchnorm: true,
        }
    }

    /// Desk-scale defaults used by the synthetic experiments.
    pub fn desk_scale(kind: DescriptorType, classes: usize) -> Self {
        Self {
            kind,
            shared_widths: vec![32, 64],
            classifier_widths: vec![32],
            decoder_widths: vec![128],
            classes,
            voxel_resolution: 16,
            lambda_rec: 0.0,
            dropout: 0.0,
            batchnorm: true,
        }
    }

    pub fn latent_dim(&self) -> usize {
        *self.shared_widths.last().expect("validated non-empty")
    }

    pub fn input_width(&self) -> usize {
        self.kind.width()
    }

    pub fn voxel_cells(&self) -> usize {
        self.voxel_resolution.pow(3)
    }

    pub fn validate(&self) -> Result<()> {
        if self.shared_widths.is_empty() {
            return Err(Error::Config("shared MLP needs at least one width".into()));
        }
        if self.classes < 2 {
            return Err(Error::Config("need at least 2 classes".into()));
        }
        if self.lambda_rec < 0.0 {
            return Err(Error::Config("lambda_rec must be >= 0".into()));
        }
        if self.voxel_resolution < 2 {
            return Err(Error::Config("voxel resolution must be >= 2".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout {} outside [0,1)",
                self.dropout
            )));
        }
        Ok(())
    }

    fn mlp_block(&self, specs: &mut Vec<LayerSpec>, input: usize, output: usize) {
        if self.batchnorm {
            specs.push(LayerSpec::linear_no_bias(input, output));
            specs.push(LayerSpec::BatchNorm { dim: output });
        } else {
            specs.push(LayerSpec::linear(input, output));
        }
        specs.push(LayerSpec::ReLU);
    }

    fn shared_specs(&self) -> Vec<LayerSpec> {
        let mut specs = Vec::new();
        let mut dim = self.input_width();
        for &w in &self.shared_widths {
            self.mlp_block(&mut specs, dim, w);
            dim = w;
        }
        specs
    }

    fn classifier_specs(&self) -> Vec<LayerSpec> {
        let mut specs = Vec::new();
        let mut dim = self.latent_dim();
        for &w in &self.classifier_widths {
            self.mlp_block(&mut specs, dim, w);
            dim = w;
        }
        if self.dropout > 0.0 {
            specs.push(LayerSpec::Dropout { rate: self.dropout });
        }
        specs.push(LayerSpec::linear(dim, self.classes));
        specs
    }

    fn decoder_specs(&self) -> Vec<LayerSpec> {
        let mut specs = Vec::new();
        let mut dim = self.latent_dim();
        for &w in &self.decoder_widths {
            self.mlp_block(&mut specs, dim, w);
            dim = w;
        }
        specs.push(LayerSpec::linear(dim, self.voxel_cells()));
        specs
    }

    /// FNV-1a over a canonical architecture description; stored in
    /// checkpoints so incompatible loads fail fast.
    pub fn arch_hash(&self) -> u64 {
        let desc = format!(
            "kind={};shared={:?};cls={:?};dec={:?};classes={};r={};bn={};dropout={}",
            self.kind.as_str(),
            self.shared_widths,
            self.classifier_widths,
            self.decoder_widths,
            self.classes,
            self.voxel_resolution,
            self.batchnorm,
            self.dropout,
        );
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for b in desc.as_bytes() {
            hash ^= u64::from(*b);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
        hash
    }
}

/// Metadata carried inside `SPN1` checkpoints as the reserved `meta` tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckpointMeta {
    pub kind: DescriptorType,
    pub n_d: usize,
    pub arch_hash: u64,
    pub seed: u64,
    pub epoch: usize,
}

const META_NAME: &str = "meta";
const META_LEN: usize = 7;

impl CheckpointMeta {
    fn to_values(self) -> Vec<f64> {
        vec![
            f64::from(self.kind.code()),
            self.n_d as f64,
            (self.arch_hash & 0xffff_ffff) as f64,
            (self.arch_hash >> 32) as f64,
            (self.seed & 0xffff_ffff) as f64,
            (self.seed >> 32) as f64,
            self.epoch as f64,
        ]
    }

    fn from_values(v: &[f64]) -> Result<Self> {
        if v.len() != META_LEN {
            return Err(Error::Format(format!(
                "meta tensor has {} values, expected {META_LEN}",
                v.len()
            )));
        }
        Ok(Self {
            kind: DescriptorType::from_code(v[0] as u32)?,
            n_d: v[1] as usize,
            arch_hash: (v[2] as u64) | ((v[3] as u64) << 32),
            seed: (v[4] as u64) | ((v[5] as u64) << 32),
            epoch: v[6] as usize,
        })
    }
}

/// Per-batch multitask outcome.
#[derive(Debug, Clone)]
pub struct BatchOutput {
    pub loss: f64,
    pub class_loss: f64,
    pub recon_loss: f64,
    pub class_logits: Tensor2,
}

/// The full network: shared extractor plus the two heads.
#[derive(Debug, Clone)]
pub struct SparseNet {
    pub config: ModelConfig,
    pub shared: Stack,
    pub classifier: Stack,
    pub decoder: Stack,
}

impl SparseNet {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = rng_from(derive(seed, &[stream::INIT]));
        let shared = Stack::build(&config.shared_specs(), config.input_width(), &mut rng)?;
        let classifier = Stack::build(&config.classifier_specs(), config.latent_dim(), &mut rng)?;
        let decoder = Stack::build(&config.decoder_specs(), config.latent_dim(), &mut rng)?;
        Ok(Self {
            config,
            shared,
            classifier,
            decoder,
        })
    }

    fn descriptor_tensor(&self, set: &DescriptorSet) -> Result<Tensor2> {
        if set.width != self.config.input_width() {
            return Err(Error::ShapeMismatch(format!(
                "descriptor width {} does not match model input {} (kind {})",
                set.width,
                self.config.input_width(),
                self.config.kind.as_str()
            )));
        }
        Tensor2::from_vec(set.n_rows, set.width, set.data.clone())
    }

    /// Latent vector of one descriptor set: shared MLP per row, then max-pool.
    pub fn forward_latent(&mut self, set: &DescriptorSet, mode: Mode) -> Result<Vec<f64>> {
        let x = self.descriptor_tensor(set)?;
        let mut rng = rng_from(0); // no dropout in the shared stack
        let h = self.shared.forward(&x, mode, &mut rng)?;
        let (latent, _) = maxpool_rows(&h)?;
        Ok(latent)
    }

    pub fn forward_classify(&mut self, latent: &[f64], mode: Mode) -> Result<Vec<f64>> {
        let x = Tensor2::from_vec(1, latent.len(), latent.to_vec())?;
        let mut rng = rng_from(0); // dropout is inert in eval mode
        let y = self.classifier.forward(&x, mode, &mut rng)?;
        Ok(y.data().to_vec())
    }

    pub fn forward_reconstruct(&mut self, latent: &[f64], mode: Mode) -> Result<Vec<f64>> {
        let x = Tensor2::from_vec(1, latent.len(), latent.to_vec())?;
        let mut rng = rng_from(0);
        let y = self.decoder.forward(&x, mode, &mut rng)?;
        Ok(y.data().to_vec())
    }

    /// Classify one descriptor set end to end (eval mode).
    pub fn predict(&mut self, set: &DescriptorSet) -> Result<usize> {
        let latent = self.forward_latent(set, Mode::Eval)?;
        let logits = self.forward_classify(&latent, Mode::Eval)?;
        Ok(argmax(&logits))
    }

    /// Joint loss over a batch: `x` stacks `batch` descriptor sets of
    /// `n_rows` rows each. `targets` are `batch x R^3` voxel occupancies and
    /// may be omitted when `lambda_rec` is zero. With `backward` set, all
    /// parameter gradients are populated.
    #[allow(clippy::too_many_arguments)]
    pub fn multitask_loss<R: Rng + ?Sized>(
        &mut self,
        x: &Tensor2,
        n_rows: usize,
        labels: &[usize],
        targets: Option<&Tensor2>,
        mode: Mode,
        backward: bool,
        rng: &mut R,
    ) -> Result<BatchOutput> {
        let lambda = self.config.lambda_rec;
        let use_decoder = lambda > 0.0;
        if use_decoder && targets.is_none() {
            return Err(Error::Invalid(
                "lambda_rec > 0 requires voxel targets".into(),
            ));
        }
        if backward && mode != Mode::Train {
            return Err(Error::Invalid("backward requires train mode".into()));
        }

        let h = self.shared.forward(x, mode, rng)?;
        let (latent, argmax_idx) = maxpool_segments(&h, n_rows)?;
        let class_logits = self.classifier.forward(&latent, mode, rng)?;
        let (class_loss, dlogits) = softmax_cross_entropy(&class_logits, labels)?;

        let mut recon_loss = 0.0;
        let mut dvox: Option<Tensor2> = None;
        if use_decoder {
            let targets = targets.expect("checked above");
            if targets.shape() != (latent.rows(), self.config.voxel_cells()) {
                return Err(Error::ShapeMismatch(format!(
                    "voxel targets {:?}, expected ({}, {})",
                    targets.shape(),
                    latent.rows(),
                    self.config.voxel_cells()
                )));
            }
            let vox_logits = self.decoder.forward(&latent, mode, rng)?;
            let (bce, grad) = binary_cross_entropy_logits(&vox_logits, targets)?;
            recon_loss = bce;
            dvox = Some(grad);
        }

        let loss = class_loss + lambda * recon_loss;
        if !loss.is_finite() {
            return Err(Error::Diverged(format!(
                "non-finite loss (class {class_loss}, reconstruction {recon_loss})"
            )));
        }

        if backward {
            let mut dlatent = self.classifier.backward(&dlogits)?;
            if let Some(mut dvox) = dvox {
                for g in dvox.data_mut() {
                    *g *= lambda;
                }
                let from_decoder = self.decoder.backward(&dvox)?;
                for (a, b) in dlatent.data_mut().iter_mut().zip(from_decoder.data()) {
                    *a += b;
                }
            }
            let dh = maxpool_segments_backward(&dlatent, &argmax_idx, h.rows());
            self.shared.backward(&dh)?;
        }

        Ok(BatchOutput {
            loss,
            class_loss,
            recon_loss,
            class_logits,
        })
    }

    pub fn to_checkpoint(&self, meta: CheckpointMeta) -> Checkpoint {
        let mut ckpt = Checkpoint::default();
        ckpt.push_f64(META_NAME, vec![META_LEN], meta.to_values());
        for (name, _, dims, data) in self
            .shared
            .state_entries("shared")
            .into_iter()
            .chain(self.classifier.state_entries("classifier"))
            .chain(self.decoder.state_entries("decoder"))
        {
            ckpt.push_f64(name, dims, data);
        }
        ckpt
    }

    /// Rebuild a network from a checkpoint. The config must describe the
    /// same architecture the checkpoint was trained with.
    pub fn from_checkpoint(
        config: ModelConfig,
        ckpt: &Checkpoint,
    ) -> Result<(Self, CheckpointMeta)> {
        let meta_tensor = ckpt
            .get(META_NAME)
            .ok_or_else(|| Error::Format("checkpoint missing tensor `meta`".into()))?;
        let meta = CheckpointMeta::from_values(&meta_tensor.data.to_f64())?;
        if meta.kind != config.kind {
            return Err(Error::Format(format!(
                "checkpoint was trained on kind `{}`, config says `{}`",
                meta.kind.as_str(),
                config.kind.as_str()
            )));
        }
        if meta.arch_hash != config.arch_hash() {
            return Err(Error::Format(
                "checkpoint architecture hash does not match the model config".into(),
            ));
        }
        let mut net = SparseNet::new(config, meta.seed)?;
        let mut lookup = |name: &str| {
            ckpt.get(name).map(|t| {
                let data = match &t.data {
                    TensorData::F32(v) => v.iter().map(|&x| x as f64).collect(),
                    TensorData::F64(v) => v.clone(),
                };
                (t.dims.clone(), data)
            })
        };
        net.shared.load_state("shared", &mut lookup)?;
        net.classifier.load_state("classifier", &mut lookup)?;
        net.decoder.load_state("decoder", &mut lookup)?;
        Ok((net, meta))
    }
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Decode voxel logits: a cell is occupied iff `sigmoid(logit)` is strictly
/// greater than the threshold (exactly the threshold stays empty).
pub fn decode_voxels(logits: &[f64], resolution: usize, threshold: f64) -> Result<VoxelGrid> {
    if logits.len() != resolution.pow(3) {
        return Err(Error::ShapeMismatch(format!(
            "{} voxel logits for resolution {resolution}",
            logits.len()
        )));
    }
    let occupancy = logits.iter().map(|&x| sigmoid(x) > threshold).collect();
    VoxelGrid::from_flat(resolution, occupancy)
}

/// Stack `batch` descriptor sets (all `n_rows x width`) into one tensor.
pub fn stack_descriptor_sets(sets: &[DescriptorSet]) -> Result<(Tensor2, usize)> {
    let first = sets
        .first()
        .ok_or_else(|| Error::Invalid("empty descriptor batch".into()))?;
    let (n_rows, width) = (first.n_rows, first.width);
    let mut data = Vec::with_capacity(sets.len() * n_rows * width);
    for set in sets {
        if set.n_rows != n_rows || set.width != width {
            return Err(Error::ShapeMismatch(
                "descriptor sets in a batch must share N_d and width".into(),
            ));
        }
        data.extend_from_slice(&set.data);
    }
    Ok((Tensor2::from_vec(sets.len() * n_rows, width, data)?, n_rows))
}

/// Full-model gradient-check harness at toy dimensions: fixed random batch,
/// dropout disabled, batchnorm in train mode.
///
/// ReLU and max-pool are only piecewise differentiable, so finite
/// differences are valid at generic points only. [`ModelHarness::toy`]
/// rejects candidate batches whose kink margins (pre-ReLU magnitudes and
/// pooled top-2 gaps) are within reach of the probe step.
pub struct ModelHarness {
    pub net: SparseNet,
    pub input: Tensor2,
    pub n_rows: usize,
    pub labels: Vec<usize>,
    pub targets: Tensor2,
}

/// A parameter probe of `1e-5` perturbs pre-activations by well under this.
const KINK_MARGIN: f64 = 2e-3;

impl ModelHarness {
    pub fn toy(seed: u64) -> Self {
        for attempt in 0..64 {
            let mut candidate = Self::build(derive(seed, &[attempt]));
            if candidate.kink_margin() > KINK_MARGIN {
                return candidate;
            }
        }
        unreachable!("no generic toy batch among 64 candidates");
    }

    /// Toy harness with explicit batchnorm/loss-weight knobs (used to
    /// localize gradient problems).
    pub fn toy_variant(seed: u64, batchnorm: bool, lambda_rec: f64) -> Self {
        for attempt in 0..64 {
            let mut candidate = Self::build_with(derive(seed, &[attempt]), batchnorm, lambda_rec);
            if candidate.kink_margin() > KINK_MARGIN {
                return candidate;
            }
        }
        unreachable!("no generic toy batch among 64 candidates");
    }

    fn build(seed: u64) -> Self {
        Self::build_with(seed, true, 1.0)
    }

    fn build_with(seed: u64, batchnorm: bool, lambda_rec: f64) -> Self {
        let config = ModelConfig {
            kind: DescriptorType::TypeA,
            shared_widths: vec![6, 8],
            classifier_widths: vec![5],
            decoder_widths: vec![6],
            classes: 3,
            voxel_resolution: 2,
            lambda_rec,
            dropout: 0.0,
            batchnorm,
        };
        let mut rng = rng_from(derive(seed, &[stream::INIT]));
        let shared = Stack::build(&config.shared_specs(), config.input_width(), &mut rng)
            .expect("toy config is valid");
        // The heads stay batchnorm-free here: a train-mode batchnorm in a
        // head removes batch-uniform latent shifts exactly, which makes the
        // last shared batchnorm beta a dead parameter and its
        // finite-difference check meaningless.
        let latent = config.latent_dim();
        let classifier = Stack::build(
            &[
                LayerSpec::linear(latent, 5),
                LayerSpec::ReLU,
                LayerSpec::linear(5, config.classes),
            ],
            latent,
            &mut rng,
        )
        .expect("toy config is valid");
        let decoder = Stack::build(
            &[
                LayerSpec::linear(latent, 6),
                LayerSpec::ReLU,
                LayerSpec::linear(6, config.voxel_cells()),
            ],
            latent,
            &mut rng,
        )
        .expect("toy config is valid");
        let net = SparseNet {
            config,
            shared,
            classifier,
            decoder,
        };
        let mut rng = rng_from(derive(seed, &[stream::TEST]));
        let (batch, n_rows) = (2, 5);
        let input = Tensor2::from_fn(batch * n_rows, 4, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let labels = vec![rng.random_range(0..3), rng.random_range(0..3)];
        let targets = Tensor2::from_fn(batch, 8, |_, _| f64::from(rng.random::<bool>()));
        Self {
            net,
            input,
            n_rows,
            labels,
            targets,
        }
    }

    /// Smallest distance to a ReLU or max-pool kink over the whole batch.
    fn kink_margin(&mut self) -> f64 {
        fn walk<R: Rng + ?Sized>(stack: &mut Stack, x: &Tensor2, rng: &mut R) -> (Tensor2, f64) {
            let mut margin = f64::INFINITY;
            let mut cur = x.clone();
            for layer in &mut stack.layers {
                if matches!(layer, crate::nn::layers::Layer::ReLU(_)) {
                    for &v in cur.data() {
                        margin = margin.min(v.abs());
                    }
                }
                cur = layer
                    .forward(&cur, Mode::Train, rng)
                    .expect("toy shapes agree");
            }
            (cur, margin)
        }
        let mut rng = rng_from(0);
        let (h, m_shared) = walk(&mut self.net.shared, &self.input, &mut rng);
        let mut margin = m_shared;

        // Top-2 gap per pooled column within each object segment.
        let batch = h.rows() / self.n_rows;
        for b in 0..batch {
            for j in 0..h.cols() {
                let (mut best, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
                for i in (b * self.n_rows)..((b + 1) * self.n_rows) {
                    let v = h.row(i)[j];
                    if v > best {
                        second = best;
                        best = v;
                    } else if v > second {
                        second = v;
                    }
                }
                margin = margin.min(best - second);
            }
        }

        let (latent, _) = maxpool_segments(&h, self.n_rows).expect("toy shapes agree");
        let (_, m_cls) = walk(&mut self.net.classifier, &latent, &mut rng);
        let (_, m_dec) = walk(&mut self.net.decoder, &latent, &mut rng);
        margin.min(m_cls).min(m_dec)
    }

    fn run(&mut self, backward: bool) -> (f64, Option<Vec<f64>>) {
        let mut rng = rng_from(0); // dropout is disabled in the toy config
        let out = self
            .net
            .multitask_loss(
                &self.input,
                self.n_rows,
                &self.labels,
                Some(&self.targets),
                Mode::Train,
                backward,
                &mut rng,
            )
            .expect("toy forward");
        if backward {
            let mut grads = self.net.shared.flat_grads();
            grads.extend(self.net.classifier.flat_grads());
            grads.extend(self.net.decoder.flat_grads());
            (out.loss, Some(grads))
        } else {
            (out.loss, None)
        }
    }
}

impl Differentiable for ModelHarness {
    fn flat_params(&mut self) -> Vec<f64> {
        let mut p = self.net.shared.flat_params();
        p.extend(self.net.classifier.flat_params());
        p.extend(self.net.decoder.flat_params());
        p
    }

    fn set_flat_params(&mut self, values: &[f64]) {
        let n_shared = self.net.shared.param_count();
        let n_cls = self.net.classifier.param_count();
        self.net.shared.set_flat_params(&values[..n_shared]);
        self.net
            .classifier
            .set_flat_params(&values[n_shared..n_shared + n_cls]);
        self.net
            .decoder
            .set_flat_params(&values[n_shared + n_cls..]);
    }

    fn loss(&mut self) -> f64 {
        self.run(false).0
    }

    fn loss_and_grads(&mut self) -> (f64, Vec<f64>) {
        let (loss, grads) = self.run(true);
        (loss, grads.expect("backward requested"))
    }
}
