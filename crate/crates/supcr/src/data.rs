//! Synthetic regression datasets, stochastic augmentation, and two-view
//! batch assembly.
//!
//! A two-view batch holds `2N` rows: each of the `N` selected samples is
//! augmented twice, and its label is duplicated bit-exactly across the two
//! rows. All randomness flows through explicitly seeded ChaCha streams, so
//! every operation here is a pure function of `(inputs, seed)`.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::error::{Error, Result};

/// One input/label pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Array1<f64>,
    pub label: Array1<f64>,
}

/// In-memory dataset: `n × d_in` features and `n × d_t` labels.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Array2<f64>,
    /// Provenance string (generator kind, dims, noise, seed, or source file).
    pub meta: String,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Array2<f64>, meta: impl Into<String>) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::Config("dataset must be nonempty".into()));
        }
        if features.nrows() != labels.nrows() {
            return Err(Error::Config(format!(
                "feature rows ({}) and label rows ({}) differ",
                features.nrows(),
                labels.nrows()
            )));
        }
        if labels.ncols() == 0 {
            return Err(Error::Config("label dimension must be at least 1".into()));
        }
        let finite = features.iter().chain(labels.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::Numeric("dataset contains non-finite entries".into()));
        }
        Ok(Self { features, labels, meta: meta.into() })
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.nrows() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn label_dim(&self) -> usize {
        self.labels.ncols()
    }

    pub fn sample(&self, idx: usize) -> Sample {
        Sample {
            features: self.features.row(idx).to_owned(),
            label: self.labels.row(idx).to_owned(),
        }
    }

    /// Population standard deviation of each feature column. Used to scale
    /// augmentation noise relative to the data.
    pub fn feature_stds(&self) -> Vec<f64> {
        let n = self.len() as f64;
        (0..self.input_dim())
            .map(|j| {
                let col = self.features.column(j);
                let mean = col.sum() / n;
                let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                var.sqrt()
            })
            .collect()
    }

    /// Writes the CSV form: header `f0,...,f{d_in-1},y0,...,y{d_t-1}`,
    /// one sample per row, 17-significant-digit floats.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let mut header = String::new();
        for j in 0..self.input_dim() {
            if j > 0 {
                header.push(',');
            }
            let _ = write!(header, "f{j}");
        }
        for j in 0..self.label_dim() {
            let _ = write!(header, ",y{j}");
        }
        writeln!(out, "{header}")?;
        for i in 0..self.len() {
            let mut line = String::new();
            for j in 0..self.input_dim() {
                if j > 0 {
                    line.push(',');
                }
                let _ = write!(line, "{:.16e}", self.features[[i, j]]);
            }
            for j in 0..self.label_dim() {
                let _ = write!(line, ",{:.16e}", self.labels[[i, j]]);
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let reader = BufReader::new(std::fs::File::open(path)?);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Config(format!("{}: empty file", path.display())))??;
        let cols: Vec<&str> = header.trim().split(',').collect();
        let d_in = cols.iter().take_while(|c| c.starts_with('f')).count();
        let d_t = cols.len() - d_in;
        if d_in == 0 || d_t == 0 {
            return Err(Error::Config(format!(
                "{}: header must be f0,...,y0,... (got `{header}`)",
                path.display()
            )));
        }
        for (j, c) in cols.iter().enumerate() {
            let expect = if j < d_in { format!("f{j}") } else { format!("y{}", j - d_in) };
            if **c != expect {
                return Err(Error::Config(format!(
                    "{}: column {j} named `{c}`, expected `{expect}`",
                    path.display()
                )));
            }
        }
        let mut features = Vec::new();
        let mut labels = Vec::new();
        let mut n = 0usize;
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != d_in + d_t {
                return Err(Error::Config(format!(
                    "{}: line {} has {} fields, expected {}",
                    path.display(),
                    lineno + 2,
                    fields.len(),
                    d_in + d_t
                )));
            }
            for (j, f) in fields.iter().enumerate() {
                let v: f64 = f.parse().map_err(|_| {
                    Error::Config(format!(
                        "{}: line {} field {j}: `{f}` is not a float",
                        path.display(),
                        lineno + 2
                    ))
                })?;
                if j < d_in {
                    features.push(v);
                } else {
                    labels.push(v);
                }
            }
            n += 1;
        }
        let features = Array2::from_shape_vec((n, d_in), features)
            .map_err(|e| Error::Config(e.to_string()))?;
        let labels =
            Array2::from_shape_vec((n, d_t), labels).map_err(|e| Error::Config(e.to_string()))?;
        Dataset::new(features, labels, format!("csv:{}", path.display()))
    }
}

/// Which synthetic label function to use.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorKind {
    /// `y = W x + b + noise`. When `weight`/`bias` are `None` they are drawn
    /// uniformly from [-1, 1] under the dataset seed.
    Linear { weight: Option<Array2<f64>>, bias: Option<Array1<f64>> },
    /// `y = ||x||_2 + noise`, scalar label.
    Norm,
    /// Two-dimensional (pitch, yaw) labels in degrees, pitch in [-40, 10],
    /// yaw in [-45, 45], a smooth function of the features plus noise.
    Angular,
}

impl GeneratorKind {
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorKind::Linear { .. } => "linear",
            GeneratorKind::Norm => "norm",
            GeneratorKind::Angular => "angular",
        }
    }
}

/// Full description of a synthetic dataset.
#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub kind: GeneratorKind,
    pub input_dim: usize,
    pub label_dim: usize,
    pub size: usize,
    pub noise: f64,
}

impl DatasetSpec {
    fn validate(&self) -> Result<()> {
        if self.size < 4 {
            return Err(Error::Config(format!("dataset size must be >= 4, got {}", self.size)));
        }
        if !(self.noise >= 0.0) {
            return Err(Error::Config(format!("noise level must be >= 0, got {}", self.noise)));
        }
        if self.input_dim == 0 || self.label_dim == 0 {
            return Err(Error::Config("dimensions must be at least 1".into()));
        }
        match &self.kind {
            GeneratorKind::Linear { weight, bias } => {
                if let Some(w) = weight {
                    if w.nrows() != self.label_dim || w.ncols() != self.input_dim {
                        return Err(Error::Config(format!(
                            "weight shape {:?} does not match (d_t={}, d_in={})",
                            w.dim(),
                            self.label_dim,
                            self.input_dim
                        )));
                    }
                }
                if let Some(b) = bias {
                    if b.len() != self.label_dim {
                        return Err(Error::Config("bias length does not match label dim".into()));
                    }
                }
            }
            GeneratorKind::Norm => {
                if self.label_dim != 1 {
                    return Err(Error::Config("norm generator requires d_t = 1".into()));
                }
            }
            GeneratorKind::Angular => {
                if self.label_dim != 2 {
                    return Err(Error::Config("angular generator requires d_t = 2".into()));
                }
            }
        }
        Ok(())
    }
}

/// Seeded RNG for one named purpose. Distinct streams under the same seed
/// are independent, so concurrent users never share state.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const STREAM_FEATURES: u64 = 1;
const STREAM_PARAMS: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_SPLIT: u64 = 4;

/// Generates a synthetic regression dataset. Deterministic for fixed
/// `(spec, seed)`.
pub fn generate_synthetic_dataset(spec: &DatasetSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let (n, d_in, d_t) = (spec.size, spec.input_dim, spec.label_dim);

    let mut feat_rng = rng_stream(seed, STREAM_FEATURES);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut features = Array2::zeros((n, d_in));
    for i in 0..n {
        for j in 0..d_in {
            features[[i, j]] = std_normal.sample(&mut feat_rng);
        }
    }

    let mut param_rng = rng_stream(seed, STREAM_PARAMS);
    let unit = Uniform::new_inclusive(-1.0, 1.0);
    let mut labels = Array2::zeros((n, d_t));
    match &spec.kind {
        GeneratorKind::Linear { weight, bias } => {
            let w = match weight {
                Some(w) => w.clone(),
                None => Array2::from_shape_fn((d_t, d_in), |_| unit.sample(&mut param_rng)),
            };
            let b = match bias {
                Some(b) => b.clone(),
                None => Array1::from_shape_fn(d_t, |_| unit.sample(&mut param_rng)),
            };
            for i in 0..n {
                for t in 0..d_t {
                    labels[[i, t]] = linear_label(&features.row(i).to_owned(), &w.row(t).to_owned())
                        + b[t];
                }
            }
        }
        GeneratorKind::Norm => {
            for i in 0..n {
                labels[[i, 0]] = norm_label(&features.row(i).to_owned());
            }
        }
        GeneratorKind::Angular => {
            let w_pitch = Array1::from_shape_fn(d_in, |_| unit.sample(&mut param_rng));
            let w_yaw = Array1::from_shape_fn(d_in, |_| unit.sample(&mut param_rng));
            for i in 0..n {
                let x = features.row(i).to_owned();
                let (pitch, yaw) = angular_label(&x, &w_pitch, &w_yaw);
                labels[[i, 0]] = pitch;
                labels[[i, 1]] = yaw;
            }
        }
    }

    let mut noise_rng = rng_stream(seed, STREAM_NOISE);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    for i in 0..n {
        for t in 0..d_t {
            labels[[i, t]] += spec.noise * noise.sample(&mut noise_rng);
        }
    }
    if matches!(spec.kind, GeneratorKind::Angular) {
        for i in 0..n {
            labels[[i, 0]] = labels[[i, 0]].clamp(-40.0, 10.0);
            labels[[i, 1]] = labels[[i, 1]].clamp(-45.0, 45.0);
        }
    }

    let meta = format!(
        "{} d_in={d_in} d_t={d_t} size={n} noise={} seed={seed}",
        spec.kind.name(),
        spec.noise
    );
    Dataset::new(features, labels, meta)
}

fn linear_label(x: &Array1<f64>, w: &Array1<f64>) -> f64 {
    w.dot(x)
}

fn norm_label(x: &Array1<f64>) -> f64 {
    x.dot(x).sqrt()
}

/// Pitch in [-40, 10], yaw in [-45, 45], both smooth in `x`.
fn angular_label(x: &Array1<f64>, w_pitch: &Array1<f64>, w_yaw: &Array1<f64>) -> (f64, f64) {
    let scale = (x.len() as f64).sqrt();
    let pitch = -15.0 + 25.0 * (w_pitch.dot(x) / scale).tanh();
    let yaw = 45.0 * (w_yaw.dot(x) / scale).tanh();
    (pitch, yaw)
}

/// Stochastic feature perturbation: Gaussian jitter, feature dropout, and a
/// global random scale. Stands in for image augmentation on vector inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentationSpec {
    /// Jitter standard deviation as a fraction of each feature's std
    /// (see `feature_stds`; treated as absolute when no stds are attached).
    pub gaussian_sigma: f64,
    /// Probability of zeroing each feature independently.
    pub dropout_prob: f64,
    /// Inclusive range for the random global scale factor.
    pub scale_range: (f64, f64),
    /// Per-feature stds the jitter is relative to; `None` means 1.0 each.
    pub feature_stds: Option<Vec<f64>>,
}

impl AugmentationSpec {
    pub fn new(gaussian_sigma: f64, dropout_prob: f64, scale_range: (f64, f64)) -> Result<Self> {
        let spec = Self { gaussian_sigma, dropout_prob, scale_range, feature_stds: None };
        spec.validate()?;
        Ok(spec)
    }

    /// No-op augmentation: zero jitter, zero dropout, unit scale.
    pub fn identity() -> Self {
        Self { gaussian_sigma: 0.0, dropout_prob: 0.0, scale_range: (1.0, 1.0), feature_stds: None }
    }

    /// Attaches the dataset's per-feature stds so `gaussian_sigma` acts as a
    /// fraction of the data scale.
    pub fn resolved_against(mut self, dataset: &Dataset) -> Self {
        self.feature_stds = Some(dataset.feature_stds());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gaussian_sigma >= 0.0) {
            return Err(Error::Config("gaussian_sigma must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_prob) {
            return Err(Error::Config("dropout_prob must lie in [0, 1)".into()));
        }
        let (a, b) = self.scale_range;
        if !(a > 0.0 && a <= b) {
            return Err(Error::Config("scale_range must satisfy 0 < a <= b".into()));
        }
        Ok(())
    }
}

impl Default for AugmentationSpec {
    fn default() -> Self {
        Self {
            gaussian_sigma: 0.1,
            dropout_prob: 0.1,
            scale_range: (0.9, 1.1),
            feature_stds: None,
        }
    }
}

/// Returns a perturbed copy of the sample's features; the label is never
/// touched. Draw order is fixed (jitter per feature, dropout per feature,
/// one scale), so outputs are byte-stable under a fixed RNG state.
pub fn augment(sample: &Sample, spec: &AugmentationSpec, rng: &mut ChaCha8Rng) -> Array1<f64> {
    let d = sample.features.len();
    let mut out = sample.features.clone();
    let jitter = Normal::new(0.0, 1.0).expect("unit normal");
    for j in 0..d {
        let std_j = spec.feature_stds.as_ref().map_or(1.0, |s| s[j]);
        out[j] += spec.gaussian_sigma * std_j * jitter.sample(rng);
    }
    for j in 0..d {
        if rng.gen::<f64>() < spec.dropout_prob {
            out[j] = 0.0;
        }
    }
    let scale = Uniform::new_inclusive(spec.scale_range.0, spec.scale_range.1).sample(rng);
    out.mapv_inplace(|v| v * scale);
    out
}

/// `2N` augmented rows; rows `2n` and `2n+1` are two views of source sample
/// `n` and carry bit-identical labels.
#[derive(Debug, Clone)]
pub struct TwoViewBatch {
    pub inputs: Array2<f64>,
    pub labels: Array2<f64>,
    pub source_indices: Vec<usize>,
}

impl TwoViewBatch {
    /// Number of source samples N (batch holds 2N rows).
    pub fn num_pairs(&self) -> usize {
        self.inputs.nrows() / 2
    }

    pub fn num_rows(&self) -> usize {
        self.inputs.nrows()
    }

    /// The row holding the other view of the same source sample.
    pub fn partner(row: usize) -> usize {
        row ^ 1
    }
}

/// Draws two independent augmentations of each selected sample.
pub fn build_two_view_batch(
    dataset: &Dataset,
    indices: &[usize],
    spec: &AugmentationSpec,
    rng: &mut ChaCha8Rng,
) -> Result<TwoViewBatch> {
    spec.validate()?;
    let n = indices.len();
    if n < 2 {
        return Err(Error::BatchSize(format!("two-view batches need N >= 2, got N = {n}")));
    }
    for &idx in indices {
        if idx >= dataset.len() {
            return Err(Error::Domain(format!(
                "sample index {idx} out of range (dataset has {})",
                dataset.len()
            )));
        }
    }
    let mut inputs = Array2::zeros((2 * n, dataset.input_dim()));
    let mut labels = Array2::zeros((2 * n, dataset.label_dim()));
    let mut source_indices = Vec::with_capacity(2 * n);
    for (pair, &idx) in indices.iter().enumerate() {
        let sample = dataset.sample(idx);
        for view in 0..2 {
            let row = 2 * pair + view;
            let augmented = augment(&sample, spec, rng);
            inputs.row_mut(row).assign(&augmented);
            labels.row_mut(row).assign(&sample.label);
            source_indices.push(idx);
        }
    }
    Ok(TwoViewBatch { inputs, labels, source_indices })
}

/// Disjoint (train, val, test) partition, deterministic under `seed`.
pub fn split_dataset(
    dataset: &Dataset,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset)> {
    let (a, b, c) = fractions;
    if !(a > 0.0 && b > 0.0 && c > 0.0) {
        return Err(Error::Config("split fractions must be positive".into()));
    }
    if ((a + b + c) - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split fractions must sum to 1, got {}", a + b + c)));
    }
    let n = dataset.len();
    let n_train = (a * n as f64).floor() as usize;
    let n_val = (b * n as f64).floor() as usize;
    let n_test = n - n_train - n_val;
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(Error::Config(format!(
            "split of {n} samples by ({a}, {b}, {c}) leaves an empty part"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng_stream(seed, STREAM_SPLIT);
    // Fisher-Yates
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }

    let take = |range: std::ops::Range<usize>, tag: &str| -> Result<Dataset> {
        let idx = &order[range];
        let features = Array2::from_shape_fn((idx.len(), dataset.input_dim()), |(i, j)| {
            dataset.features[[idx[i], j]]
        });
        let labels = Array2::from_shape_fn((idx.len(), dataset.label_dim()), |(i, j)| {
            dataset.labels[[idx[i], j]]
        });
        Dataset::new(features, labels, format!("{} [{tag} split]", dataset.meta))
    };
    Ok((
        take(0..n_train, "train")?,
        take(n_train..n_train + n_val, "val")?,
        take(n_train + n_val..n, "test")?,
    ))
}

/// Stacks two datasets with matching dimensions.
pub fn concat_datasets(a: &Dataset, b: &Dataset) -> Result<Dataset> {
    if a.input_dim() != b.input_dim() || a.label_dim() != b.label_dim() {
        return Err(Error::Config("cannot concatenate datasets with different dims".into()));
    }
    let n = a.len() + b.len();
    let features = Array2::from_shape_fn((n, a.input_dim()), |(i, j)| {
        if i < a.len() {
            a.features[[i, j]]
        } else {
            b.features[[i - a.len(), j]]
        }
    });
    let labels = Array2::from_shape_fn((n, a.label_dim()), |(i, j)| {
        if i < a.len() {
            a.labels[[i, j]]
        } else {
            b.labels[[i - a.len(), j]]
        }
    });
    Dataset::new(features, labels, a.meta.clone())
}

/// Two-way partition built on [`split_dataset`]: the val and test parts of
/// a `(1 - f, f/2, f/2)` split are pooled into one held-out set.
pub fn train_test_split(
    dataset: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let half = test_fraction / 2.0;
    let (train, val, test) = split_dataset(dataset, (1.0 - test_fraction, half, half), seed)?;
    Ok((train, concat_datasets(&val, &test)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn linear_spec(d_in: usize, size: usize, noise: f64) -> DatasetSpec {
        DatasetSpec {
            kind: GeneratorKind::Linear { weight: None, bias: None },
            input_dim: d_in,
            label_dim: 1,
            size,
            noise,
        }
    }

    #[test]
    fn linear_identity_map_zero_noise() {
        let spec = DatasetSpec {
            kind: GeneratorKind::Linear {
                weight: Some(array![[1.0]]),
                bias: Some(array![0.0]),
            },
            input_dim: 1,
            label_dim: 1,
            size: 8,
            noise: 0.0,
        };
        let ds = generate_synthetic_dataset(&spec, 3).unwrap();
        for i in 0..ds.len() {
            assert_eq!(ds.labels[[i, 0]], ds.features[[i, 0]]);
        }
    }

    #[test]
    fn norm_label_is_euclidean() {
        assert_eq!(norm_label(&array![3.0, 4.0]), 5.0);
        let spec = DatasetSpec {
            kind: GeneratorKind::Norm,
            input_dim: 2,
            label_dim: 1,
            size: 16,
            noise: 0.0,
        };
        let ds = generate_synthetic_dataset(&spec, 11).unwrap();
        for i in 0..ds.len() {
            let x = ds.features.row(i);
            let expect = (x[0] * x[0] + x[1] * x[1]).sqrt();
            assert_eq!(ds.labels[[i, 0]], expect);
        }
    }

    #[test]
    fn angular_labels_within_ranges() {
        let spec = DatasetSpec {
            kind: GeneratorKind::Angular,
            input_dim: 4,
            label_dim: 2,
            size: 200,
            noise: 1.0,
        };
        let ds = generate_synthetic_dataset(&spec, 5).unwrap();
        for i in 0..ds.len() {
            assert!((-40.0..=10.0).contains(&ds.labels[[i, 0]]));
            assert!((-45.0..=45.0).contains(&ds.labels[[i, 1]]));
        }
    }

    // Monte-Carlo oracle: empirical label variance of the generated set
    // should match w'Cov(x)w + noise^2 with Cov(x) = I.
    #[test]
    fn linear_label_variance_matches_model() {
        let w = array![[0.5, -1.0, 2.0]];
        let spec = DatasetSpec {
            kind: GeneratorKind::Linear { weight: Some(w.clone()), bias: Some(array![0.3]) },
            input_dim: 3,
            label_dim: 1,
            size: 1000,
            noise: 0.1,
        };
        let ds = generate_synthetic_dataset(&spec, 7).unwrap();
        let n = ds.len() as f64;
        let mean = ds.labels.column(0).sum() / n;
        let var = ds.labels.column(0).iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
        let expected = w.row(0).iter().map(|v| v * v).sum::<f64>() + 0.01;
        assert!(
            (var - expected).abs() / expected < 0.10,
            "empirical var {var} vs model {expected}"
        );
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = linear_spec(4, 32, 0.2);
        let a = generate_synthetic_dataset(&spec, 42).unwrap();
        let b = generate_synthetic_dataset(&spec, 42).unwrap();
        assert_eq!(a.features, b.features);
        assert_eq!(a.labels, b.labels);
        let c = generate_synthetic_dataset(&spec, 43).unwrap();
        assert_ne!(a.labels, c.labels);
    }

    #[test]
    fn size_below_four_rejected() {
        let spec = linear_spec(2, 3, 0.0);
        assert!(matches!(generate_synthetic_dataset(&spec, 0), Err(Error::Config(_))));
    }

    #[test]
    fn identity_augmentation_is_exact() {
        let sample = Sample { features: array![1.5, -2.0, 0.25], label: array![7.0] };
        let mut rng = rng_stream(1, 0);
        let out = augment(&sample, &AugmentationSpec::identity(), &mut rng);
        assert_eq!(out, sample.features);
    }

    #[test]
    fn near_total_dropout_zeroes_features() {
        let sample = Sample { features: array![1.0, 2.0, 3.0, 4.0], label: array![0.0] };
        let spec = AugmentationSpec::new(0.0, 1.0 - 1e-12, (1.0, 1.0)).unwrap();
        let mut rng = rng_stream(9, 0);
        let out = augment(&sample, &spec, &mut rng);
        assert!(out.iter().all(|v| *v == 0.0), "expected zero vector, got {out:?}");
    }

    #[test]
    fn augmentation_deterministic_under_fixed_seed() {
        let sample = Sample { features: array![0.1, 0.2, 0.3], label: array![1.0] };
        let spec = AugmentationSpec::default();
        let a = augment(&sample, &spec, &mut rng_stream(5, 2));
        let b = augment(&sample, &spec, &mut rng_stream(5, 2));
        assert_eq!(a, b);
    }

    #[test]
    fn two_view_batch_duplicates_labels_exactly() {
        let ds = generate_synthetic_dataset(&linear_spec(3, 10, 0.5), 21).unwrap();
        let spec = AugmentationSpec::default().resolved_against(&ds);
        let mut rng = rng_stream(3, 7);
        let batch = build_two_view_batch(&ds, &[0, 3, 5, 9], &spec, &mut rng).unwrap();
        assert_eq!(batch.num_rows(), 8);
        for pair in 0..batch.num_pairs() {
            let (r0, r1) = (2 * pair, 2 * pair + 1);
            assert_eq!(batch.labels.row(r0), batch.labels.row(r1));
            assert_eq!(batch.source_indices[r0], batch.source_indices[r1]);
            assert_eq!(batch.labels.row(r0), ds.labels.row(batch.source_indices[r0]));
        }
    }

    #[test]
    fn identity_views_equal_source_features() {
        let ds = generate_synthetic_dataset(&linear_spec(2, 6, 0.0), 2).unwrap();
        let mut rng = rng_stream(0, 0);
        let batch =
            build_two_view_batch(&ds, &[0, 1], &AugmentationSpec::identity(), &mut rng).unwrap();
        assert_eq!(batch.inputs.row(0), ds.features.row(0));
        assert_eq!(batch.inputs.row(1), ds.features.row(0));
        assert_eq!(batch.inputs.row(2), ds.features.row(1));
        assert_eq!(batch.inputs.row(3), ds.features.row(1));
    }

    #[test]
    fn single_pair_batch_rejected() {
        let ds = generate_synthetic_dataset(&linear_spec(2, 6, 0.0), 2).unwrap();
        let mut rng = rng_stream(0, 0);
        let err = build_two_view_batch(&ds, &[0], &AugmentationSpec::identity(), &mut rng);
        assert!(matches!(err, Err(Error::BatchSize(_))));
    }

    #[test]
    fn split_sizes_and_partition() {
        let ds = generate_synthetic_dataset(&linear_spec(2, 100, 0.1), 1).unwrap();
        let (train, val, test) = split_dataset(&ds, (0.8, 0.1, 0.1), 77).unwrap();
        assert_eq!((train.len(), val.len(), test.len()), (80, 10, 10));

        // Same seed twice gives the identical partition.
        let (train2, _, _) = split_dataset(&ds, (0.8, 0.1, 0.1), 77).unwrap();
        assert_eq!(train.features, train2.features);

        // Union of splits equals the dataset, pairwise disjoint. Label rows
        // are unique with probability 1, so compare label multisets.
        let mut all: Vec<String> = train
            .labels
            .column(0)
            .iter()
            .chain(val.labels.column(0).iter())
            .chain(test.labels.column(0).iter())
            .map(|v| format!("{v:.17e}"))
            .collect();
        let mut orig: Vec<String> =
            ds.labels.column(0).iter().map(|v| format!("{v:.17e}")).collect();
        all.sort();
        orig.sort();
        assert_eq!(all, orig);
    }

    #[test]
    fn split_empty_part_rejected() {
        let ds = generate_synthetic_dataset(&linear_spec(2, 5, 0.0), 1).unwrap();
        assert!(split_dataset(&ds, (0.9, 0.05, 0.05), 0).is_err());
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let ds = generate_synthetic_dataset(&linear_spec(3, 12, 0.3), 19).unwrap();
        let dir = std::env::temp_dir().join("supcr_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("round_trip.csv");
        ds.write_csv(&path).unwrap();
        let back = Dataset::read_csv(&path).unwrap();
        assert_eq!(ds.features, back.features);
        assert_eq!(ds.labels, back.labels);
        std::fs::remove_file(&path).ok();
    }
}
