//! Two-stage training schemes, direct-regression baselines, and evaluation
//! metrics.
//!
//! Four schemes are supported: linear probing (contrastive pretraining,
//! frozen encoder, linear predictor on top), fine-tuning (pretraining, then
//! joint regression training of all parameters), regularization (one phase
//! minimizing regression loss plus `lambda` times the contrastive loss),
//! and direct regression. Direct is exactly the regularization path with
//! `lambda = 0`, so the two produce identical trajectories under one seed.
//!
//! All phases are single-threaded and consume named RNG streams derived
//! from the config seed, which makes every run bit-deterministic.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::{build_two_view_batch, rng_stream, AugmentationSpec, Dataset};
use crate::error::{Error, Result};
use crate::loss::{bin_labels, simclr_loss_grad, supcon_loss_grad, supcr_loss_grad};
use crate::model::{
    regression_loss, sgd_step, LinearPredictor, Mlp, OptimizerState, ProjectionHead,
    RegressionLossKind,
};
use crate::pairwise::{
    label_distance, label_distance_matrix, EmbeddingBatch, LabelDistanceKind, SimilarityKind,
};
use crate::theory::{distance_profile, lower_bound};

/// How encoder and predictor are trained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    LinearProbing,
    FineTuning,
    Regularization,
    Direct,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::LinearProbing => "linear_probing",
            Scheme::FineTuning => "fine_tuning",
            Scheme::Regularization => "regularization",
            Scheme::Direct => "direct",
        }
    }
}

/// Which contrastive objective pretrains the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderLossKind {
    SupCR,
    SupCon,
    SimCLR,
}

impl EncoderLossKind {
    pub fn name(&self) -> &'static str {
        match self {
            EncoderLossKind::SupCR => "supcr",
            EncoderLossKind::SupCon => "supcon",
            EncoderLossKind::SimCLR => "simclr",
        }
    }
}

/// Hyperparameters for one training run.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub scheme: Scheme,
    pub encoder_loss: EncoderLossKind,
    pub regression_loss: RegressionLossKind,
    pub temperature: f64,
    /// Contrastive weight of the regularization scheme.
    pub lambda: f64,
    pub epochs_encoder: usize,
    pub epochs_predictor: usize,
    /// Source samples per batch (the batch holds twice as many rows).
    pub batch_pairs: usize,
    pub sim_kind: SimilarityKind,
    pub dist_kind: LabelDistanceKind,
    pub augmentation: AugmentationSpec,
    pub seed: u64,
    /// Label bins for the SupCon baseline.
    pub num_bins: usize,
    pub hidden: Vec<usize>,
    pub embedding_dim: usize,
    /// Projection head output width; `None` trains without a head.
    pub projection_dim: Option<usize>,
    pub lr_base: f64,
    pub lr_min: f64,
    pub momentum: f64,
    pub weight_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::LinearProbing,
            encoder_loss: EncoderLossKind::SupCR,
            regression_loss: RegressionLossKind::L1,
            temperature: 2.0,
            lambda: 1.0,
            epochs_encoder: 200,
            epochs_predictor: 100,
            batch_pairs: 64,
            sim_kind: SimilarityKind::NegL2,
            dist_kind: LabelDistanceKind::L1,
            augmentation: AugmentationSpec::default(),
            seed: 0,
            num_bins: 10,
            hidden: vec![64, 64, 64],
            embedding_dim: 16,
            projection_dim: None,
            lr_base: 0.05,
            lr_min: 0.0,
            momentum: 0.9,
            weight_decay: 1e-4,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0) {
            return Err(Error::Config(format!("temperature must be > 0, got {}", self.temperature)));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if self.epochs_encoder == 0 {
            return Err(Error::Config("epochs_encoder must be >= 1".into()));
        }
        if self.batch_pairs < 2 {
            return Err(Error::Config("batch_pairs must be >= 2".into()));
        }
        if self.num_bins < 2 {
            return Err(Error::Config("num_bins must be >= 2".into()));
        }
        if self.embedding_dim == 0 {
            return Err(Error::Config("embedding_dim must be >= 1".into()));
        }
        self.augmentation.validate()
    }
}

// RNG stream tags; one stream per purpose keeps runs bit-deterministic.
const STREAM_ENCODER_INIT: u64 = 20;
const STREAM_ENCODER_SHUFFLE: u64 = 21;
const STREAM_ENCODER_AUG: u64 = 22;
const STREAM_PREDICTOR_INIT: u64 = 23;
const STREAM_PREDICTOR_SHUFFLE: u64 = 24;
const STREAM_HEAD_INIT: u64 = 25;
const STREAM_FINETUNE_SHUFFLE: u64 = 26;
const STREAM_FINETUNE_AUG: u64 = 27;

fn shuffled_indices(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    order
}

fn pair_batches(n: usize, batch_pairs: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    shuffled_indices(n, rng)
        .chunks(batch_pairs)
        .filter(|c| c.len() >= 2)
        .map(|c| c.to_vec())
        .collect()
}

fn pair_batches_per_epoch(n: usize, batch_pairs: usize) -> usize {
    let full = n / batch_pairs;
    if n % batch_pairs >= 2 {
        full + 1
    } else {
        full.max(1)
    }
}

fn divergence(step: usize, what: &str) -> Error {
    Error::Training { step, message: format!("{what} became non-finite") }
}

/// Encoder pretraining outcome: the network, the head it trained through
/// (if any), and per-epoch diagnostics.
#[derive(Debug, Clone)]
pub struct EncoderRun {
    pub encoder: Mlp,
    pub head: Option<ProjectionHead>,
    /// Mean training loss per epoch.
    pub epoch_loss: Vec<f64>,
    /// Mean per-batch loss floor per epoch (contrastive ranking loss only).
    pub epoch_floor: Vec<f64>,
}

/// Trains the encoder with the configured contrastive objective on
/// two-view batches.
pub fn train_encoder(dataset: &Dataset, config: &TrainConfig) -> Result<EncoderRun> {
    config.validate()?;
    let aug = if config.augmentation.feature_stds.is_none() {
        config.augmentation.clone().resolved_against(dataset)
    } else {
        config.augmentation.clone()
    };

    let mut widths = vec![dataset.input_dim()];
    widths.extend_from_slice(&config.hidden);
    widths.push(config.embedding_dim);
    let mut encoder = Mlp::new(&widths, &mut rng_stream(config.seed, STREAM_ENCODER_INIT))?;
    let mut head = match config.projection_dim {
        Some(proj) => Some(ProjectionHead::new(
            config.embedding_dim,
            proj,
            &mut rng_stream(config.seed, STREAM_HEAD_INIT),
        )?),
        None => None,
    };

    // label range for the SupCon bins, from the training labels
    let bin_range = {
        let col = dataset.labels.column(0);
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if lo < hi {
            (lo, hi)
        } else {
            (lo, lo + 1.0)
        }
    };

    let n = dataset.len();
    let total_steps = config.epochs_encoder * pair_batches_per_epoch(n, config.batch_pairs);
    let mut optimizer = OptimizerState::new(
        config.momentum,
        config.weight_decay,
        config.lr_base,
        config.lr_min,
        total_steps,
    )?;
    let mut shuffle_rng = rng_stream(config.seed, STREAM_ENCODER_SHUFFLE);
    let mut aug_rng = rng_stream(config.seed, STREAM_ENCODER_AUG);

    let mut epoch_loss = Vec::with_capacity(config.epochs_encoder);
    let mut epoch_floor = Vec::with_capacity(config.epochs_encoder);
    let mut step = 0usize;
    for _ in 0..config.epochs_encoder {
        let mut loss_sum = 0.0;
        let mut floor_sum = 0.0;
        let mut batches = 0usize;
        for indices in pair_batches(n, config.batch_pairs, &mut shuffle_rng) {
            let batch = build_two_view_batch(dataset, &indices, &aug, &mut aug_rng)?;
            let (enc_out, enc_cache) = encoder.forward(&batch.inputs)?;
            let (loss_input, head_cache) = match head.as_ref() {
                Some(h) => {
                    let (out, cache) = h.net.forward(&enc_out)?;
                    (out, Some(cache))
                }
                None => (enc_out, None),
            };
            let emb = EmbeddingBatch::new(loss_input)
                .map_err(|_| divergence(step, "encoder output"))?;

            let out = match config.encoder_loss {
                EncoderLossKind::SupCR => supcr_loss_grad(
                    &batch,
                    &emb,
                    config.sim_kind,
                    config.dist_kind,
                    config.temperature,
                ),
                EncoderLossKind::SupCon => {
                    let classes = bin_labels(&batch.labels, config.num_bins, bin_range)?;
                    supcon_loss_grad(&emb, &classes, config.sim_kind, config.temperature)
                }
                EncoderLossKind::SimCLR => {
                    simclr_loss_grad(&emb, config.sim_kind, config.temperature)
                }
            }?;
            if !out.value.is_finite() {
                return Err(divergence(step, "contrastive loss"));
            }
            let d_emb = out.grad.expect("gradient requested");

            let (head_grads, d_enc_out) = match (head.as_ref(), head_cache.as_ref()) {
                (Some(h), Some(cache)) => {
                    let (grads, d_enc) = h.net.backward(cache, &d_emb)?;
                    (Some(grads), d_enc)
                }
                _ => (None, d_emb),
            };
            let (enc_grads, _) = encoder.backward(&enc_cache, &d_enc_out)?;

            // encoder and head share one optimizer state
            let mut params = encoder.param_slices_mut();
            if let Some(h) = head.as_mut() {
                params.extend(h.net.param_slices_mut());
            }
            let mut grads = enc_grads.slices();
            if let Some(hg) = head_grads.as_ref() {
                grads.extend(hg.slices());
            }
            sgd_step(&mut params, &grads, &mut optimizer, step)?;

            if config.encoder_loss == EncoderLossKind::SupCR {
                let dist = label_distance_matrix(&batch.labels, config.dist_kind)?;
                floor_sum += lower_bound(&distance_profile(&dist)?);
            }
            loss_sum += out.value;
            batches += 1;
            step += 1;
        }
        epoch_loss.push(loss_sum / batches.max(1) as f64);
        epoch_floor.push(floor_sum / batches.max(1) as f64);
    }
    Ok(EncoderRun { encoder, head, epoch_loss, epoch_floor })
}

/// Predictor training outcome.
#[derive(Debug, Clone)]
pub struct PredictorRun {
    pub predictor: LinearPredictor,
    pub epoch_loss: Vec<f64>,
}

/// Trains a linear predictor on the frozen encoder's outputs (no
/// augmentation). The encoder is borrowed immutably, so its parameters are
/// untouched by construction.
pub fn train_predictor(
    encoder: &Mlp,
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<PredictorRun> {
    config.validate()?;
    let embeddings = encoder.infer(&dataset.features)?;
    let mut predictor = LinearPredictor::new(
        encoder.output_dim(),
        dataset.label_dim(),
        &mut rng_stream(config.seed, STREAM_PREDICTOR_INIT),
    )?;
    let n = dataset.len();
    let rows_per_batch = (2 * config.batch_pairs).min(n).max(1);
    let batches_per_epoch = n.div_ceil(rows_per_batch);
    let total_steps = config.epochs_predictor * batches_per_epoch;
    let mut optimizer = OptimizerState::new(
        config.momentum,
        config.weight_decay,
        config.lr_base,
        config.lr_min,
        total_steps.max(1),
    )?;
    let mut shuffle_rng = rng_stream(config.seed, STREAM_PREDICTOR_SHUFFLE);

    let mut epoch_loss = Vec::with_capacity(config.epochs_predictor);
    let mut step = 0usize;
    for _ in 0..config.epochs_predictor {
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in shuffled_indices(n, &mut shuffle_rng).chunks(rows_per_batch) {
            let x = Array2::from_shape_fn((chunk.len(), embeddings.ncols()), |(r, c)| {
                embeddings[[chunk[r], c]]
            });
            let t = Array2::from_shape_fn((chunk.len(), dataset.label_dim()), |(r, c)| {
                dataset.labels[[chunk[r], c]]
            });
            let (pred, cache) = predictor.net.forward(&x)?;
            let (value, dpred) = regression_loss(&pred, &t, config.regression_loss)?;
            if !value.is_finite() {
                return Err(divergence(step, "regression loss"));
            }
            let (grads, _) = predictor.net.backward(&cache, &dpred)?;
            let mut params = predictor.net.param_slices_mut();
            sgd_step(&mut params, &grads.slices(), &mut optimizer, step)?;
            loss_sum += value;
            batches += 1;
            step += 1;
        }
        epoch_loss.push(loss_sum / batches.max(1) as f64);
    }
    Ok(PredictorRun { predictor, epoch_loss })
}

/// One joint phase over two-view batches: regression loss through encoder
/// and predictor, plus `lambda` times the ranking loss on the embeddings.
/// `lambda = 0` skips the contrastive term entirely, which makes the direct
/// baseline bit-identical to regularization with zero weight.
fn joint_phase(
    encoder: &mut Mlp,
    predictor: &mut LinearPredictor,
    dataset: &Dataset,
    config: &TrainConfig,
    lambda: f64,
    epochs: usize,
    (shuffle_stream, aug_stream): (u64, u64),
) -> Result<Vec<f64>> {
    let aug = if config.augmentation.feature_stds.is_none() {
        config.augmentation.clone().resolved_against(dataset)
    } else {
        config.augmentation.clone()
    };
    let n = dataset.len();
    let total_steps = epochs * pair_batches_per_epoch(n, config.batch_pairs);
    let mut optimizer = OptimizerState::new(
        config.momentum,
        config.weight_decay,
        config.lr_base,
        config.lr_min,
        total_steps.max(1),
    )?;
    let mut shuffle_rng = rng_stream(config.seed, shuffle_stream);
    let mut aug_rng = rng_stream(config.seed, aug_stream);

    let mut epoch_loss = Vec::with_capacity(epochs);
    let mut step = 0usize;
    for _ in 0..epochs {
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for indices in pair_batches(n, config.batch_pairs, &mut shuffle_rng) {
            let batch = build_two_view_batch(dataset, &indices, &aug, &mut aug_rng)?;
            let (emb, enc_cache) = encoder.forward(&batch.inputs)?;
            let (pred, pred_cache) = predictor.net.forward(&emb)?;
            let (reg_value, dpred) = regression_loss(&pred, &batch.labels, config.regression_loss)?;
            let (pred_grads, mut d_emb) = predictor.net.backward(&pred_cache, &dpred)?;

            let mut value = reg_value;
            if lambda != 0.0 {
                let emb_batch = EmbeddingBatch::new(emb.clone())
                    .map_err(|_| divergence(step, "encoder output"))?;
                let contrastive = supcr_loss_grad(
                    &batch,
                    &emb_batch,
                    config.sim_kind,
                    config.dist_kind,
                    config.temperature,
                )?;
                value += lambda * contrastive.value;
                let g = contrastive.grad.expect("gradient requested");
                d_emb = d_emb + lambda * &g;
            }
            if !value.is_finite() {
                return Err(divergence(step, "joint loss"));
            }
            let (enc_grads, _) = encoder.backward(&enc_cache, &d_emb)?;

            let mut params = encoder.param_slices_mut();
            params.extend(predictor.net.param_slices_mut());
            let mut grads = enc_grads.slices();
            let pred_grad_slices = pred_grads.slices();
            grads.extend(pred_grad_slices);
            sgd_step(&mut params, &grads, &mut optimizer, step)?;

            loss_sum += value;
            batches += 1;
            step += 1;
        }
        epoch_loss.push(loss_sum / batches.max(1) as f64);
    }
    Ok(epoch_loss)
}

/// Full training run under the configured scheme.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub encoder: Mlp,
    pub predictor: LinearPredictor,
    /// Mean training loss per epoch, one list per phase.
    pub phase_losses: Vec<Vec<f64>>,
    /// Per-epoch mean loss floor during contrastive pretraining.
    pub encoder_floor: Vec<f64>,
}

pub fn train_full(dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    match config.scheme {
        Scheme::LinearProbing => {
            let run = train_encoder(dataset, config)?;
            let pred = train_predictor(&run.encoder, dataset, config)?;
            Ok(TrainOutcome {
                encoder: run.encoder,
                predictor: pred.predictor,
                phase_losses: vec![run.epoch_loss, pred.epoch_loss],
                encoder_floor: run.epoch_floor,
            })
        }
        Scheme::FineTuning => {
            let run = train_encoder(dataset, config)?;
            let mut encoder = run.encoder;
            let mut predictor = LinearPredictor::new(
                encoder.output_dim(),
                dataset.label_dim(),
                &mut rng_stream(config.seed, STREAM_PREDICTOR_INIT),
            )?;
            let joint = joint_phase(
                &mut encoder,
                &mut predictor,
                dataset,
                config,
                0.0,
                config.epochs_predictor,
                (STREAM_FINETUNE_SHUFFLE, STREAM_FINETUNE_AUG),
            )?;
            Ok(TrainOutcome {
                encoder,
                predictor,
                phase_losses: vec![run.epoch_loss, joint],
                encoder_floor: run.epoch_floor,
            })
        }
        Scheme::Regularization | Scheme::Direct => {
            let lambda = if config.scheme == Scheme::Direct { 0.0 } else { config.lambda };
            let mut widths = vec![dataset.input_dim()];
            widths.extend_from_slice(&config.hidden);
            widths.push(config.embedding_dim);
            let mut encoder =
                Mlp::new(&widths, &mut rng_stream(config.seed, STREAM_ENCODER_INIT))?;
            let mut predictor = LinearPredictor::new(
                config.embedding_dim,
                dataset.label_dim(),
                &mut rng_stream(config.seed, STREAM_PREDICTOR_INIT),
            )?;
            let joint = joint_phase(
                &mut encoder,
                &mut predictor,
                dataset,
                config,
                lambda,
                config.epochs_encoder,
                (STREAM_ENCODER_SHUFFLE, STREAM_ENCODER_AUG),
            )?;
            Ok(TrainOutcome {
                encoder,
                predictor,
                phase_losses: vec![joint],
                encoder_floor: Vec::new(),
            })
        }
    }
}

/// Evaluation results.
#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    /// Mean absolute error over all prediction entries (label units).
    pub mae: f64,
    /// Coefficient of determination, per label dimension then averaged.
    pub r2: f64,
    /// Mean gaze angle error in degrees; only for angular label distance.
    pub angular_deg: Option<f64>,
    /// Spearman rank correlation between pairwise embedding distances and
    /// pairwise label distances on a fixed subsample of pairs.
    pub spearman: f64,
}

impl Metrics {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // 1-based ranks, ties share the mean rank
        let mean = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        cov += (x - mean_a) * (y - mean_b);
        var_a += (x - mean_a).powi(2);
        var_b += (y - mean_b).powi(2);
    }
    if var_a == 0.0 || var_b == 0.0 {
        return 0.0;
    }
    cov / (var_a * var_b).sqrt()
}

/// Cap on the number of pairwise distances entering the Spearman metric.
pub const SPEARMAN_MAX_PAIRS: usize = 500;

/// Spearman rank correlation between embedding-space L2 distances and
/// label distances, over all pairs when few, otherwise over a fixed
/// 500-pair subsample.
pub fn spearman_embedding_label(
    embeddings: &Array2<f64>,
    labels: &Array2<f64>,
    dist_kind: LabelDistanceKind,
) -> Result<f64> {
    let n = embeddings.nrows();
    if n != labels.nrows() || n < 2 {
        return Err(Error::Domain("need matching embeddings and labels for >= 2 samples".into()));
    }
    let all_pairs = n * (n - 1) / 2;
    let pairs: Vec<(usize, usize)> = if all_pairs <= SPEARMAN_MAX_PAIRS {
        (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect()
    } else {
        let mut rng = rng_stream(0x5EA2, 0);
        let mut seen = std::collections::BTreeSet::new();
        while seen.len() < SPEARMAN_MAX_PAIRS {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if i < j {
                seen.insert((i, j));
            }
        }
        seen.into_iter().collect()
    };
    let mut emb_dist = Vec::with_capacity(pairs.len());
    let mut lab_dist = Vec::with_capacity(pairs.len());
    for &(i, j) in &pairs {
        let diff = &embeddings.row(i) - &embeddings.row(j);
        emb_dist.push(diff.dot(&diff).sqrt());
        lab_dist.push(label_distance(labels.row(i), labels.row(j), dist_kind)?);
    }
    Ok(pearson(&average_ranks(&emb_dist), &average_ranks(&lab_dist)))
}

/// Metrics from explicit predictions and embeddings.
pub fn metrics_from_predictions(
    predictions: &Array2<f64>,
    labels: &Array2<f64>,
    embeddings: &Array2<f64>,
    dist_kind: LabelDistanceKind,
) -> Result<Metrics> {
    if predictions.dim() != labels.dim() {
        return Err(Error::Domain(format!(
            "prediction shape {:?} does not match labels {:?}",
            predictions.dim(),
            labels.dim()
        )));
    }
    let (n, d_t) = labels.dim();
    let mae = predictions
        .iter()
        .zip(labels.iter())
        .map(|(p, y)| (p - y).abs())
        .sum::<f64>()
        / (n * d_t) as f64;

    let mut r2_sum = 0.0;
    for t in 0..d_t {
        let col = labels.column(t);
        let mean = col.sum() / n as f64;
        let ss_tot: f64 = col.iter().map(|y| (y - mean).powi(2)).sum();
        if ss_tot == 0.0 {
            return Err(Error::Domain(format!(
                "label dimension {t} has zero variance; r2 is undefined"
            )));
        }
        let ss_res: f64 =
            (0..n).map(|i| (labels[[i, t]] - predictions[[i, t]]).powi(2)).sum();
        r2_sum += 1.0 - ss_res / ss_tot;
    }
    let r2 = r2_sum / d_t as f64;

    let angular_deg = match dist_kind {
        LabelDistanceKind::Angular => {
            let mut total = 0.0;
            for i in 0..n {
                total += label_distance(predictions.row(i), labels.row(i), dist_kind)?;
            }
            Some(total / n as f64)
        }
        LabelDistanceKind::L1 => None,
    };
    let spearman = spearman_embedding_label(embeddings, labels, dist_kind)?;
    Ok(Metrics { mae, r2, angular_deg, spearman })
}

/// Runs the trained pair on a dataset (no augmentation at inference).
pub fn evaluate(
    encoder: &Mlp,
    predictor: &LinearPredictor,
    dataset: &Dataset,
    dist_kind: LabelDistanceKind,
) -> Result<Metrics> {
    let embeddings = encoder.infer(&dataset.features)?;
    let predictions = predictor.predict(&embeddings)?;
    metrics_from_predictions(&predictions, &dataset.labels, &embeddings, dist_kind)
}
