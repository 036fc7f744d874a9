//! Temperature-scaled pairwise similarities and label distances.
//!
//! The similarity matrix stores `sim(v_i, v_j) / temperature`, so downstream
//! consumers never rescale. Label distances carry a relative tie tolerance:
//! floating-point label arithmetic must not split exact ties, in particular
//! the distance-zero pairs created by duplicated two-view labels.

use ndarray::{Array2, ArrayView1};

use crate::data::TwoViewBatch;
use crate::error::{Error, Result};

/// How embedding similarity is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityKind {
    Cosine,
    NegL1,
    NegL2,
}

impl SimilarityKind {
    pub fn name(&self) -> &'static str {
        match self {
            SimilarityKind::Cosine => "cosine",
            SimilarityKind::NegL1 => "neg_l1",
            SimilarityKind::NegL2 => "neg_l2",
        }
    }
}

/// How label distance is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelDistanceKind {
    L1,
    /// Angle in degrees between 3-D gaze vectors built from (pitch, yaw).
    Angular,
}

impl LabelDistanceKind {
    pub fn name(&self) -> &'static str {
        match self {
            LabelDistanceKind::L1 => "l1",
            LabelDistanceKind::Angular => "angular",
        }
    }
}

/// Encoder outputs for a two-view batch: `2N × d_e`, all finite.
#[derive(Debug, Clone)]
pub struct EmbeddingBatch {
    pub vectors: Array2<f64>,
}

impl EmbeddingBatch {
    pub fn new(vectors: Array2<f64>) -> Result<Self> {
        if vectors.ncols() == 0 {
            return Err(Error::Config("embedding dimension must be at least 1".into()));
        }
        if !vectors.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("embeddings contain non-finite entries".into()));
        }
        Ok(Self { vectors })
    }

    pub fn num_rows(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }
}

pub fn similarity(v_i: ArrayView1<f64>, v_j: ArrayView1<f64>, kind: SimilarityKind) -> Result<f64> {
    if v_i.len() != v_j.len() {
        return Err(Error::Domain(format!(
            "similarity of vectors with lengths {} and {}",
            v_i.len(),
            v_j.len()
        )));
    }
    match kind {
        SimilarityKind::Cosine => {
            let n_i = v_i.dot(&v_i).sqrt();
            let n_j = v_j.dot(&v_j).sqrt();
            if n_i == 0.0 || n_j == 0.0 {
                return Err(Error::Domain("cosine similarity of a zero vector".into()));
            }
            Ok(v_i.dot(&v_j) / (n_i * n_j))
        }
        SimilarityKind::NegL1 => {
            Ok(-v_i.iter().zip(v_j.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>())
        }
        SimilarityKind::NegL2 => {
            Ok(-v_i.iter().zip(v_j.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        }
    }
}

/// Unit gaze direction for (pitch, yaw) in degrees.
pub fn gaze_vector(pitch_deg: f64, yaw_deg: f64) -> [f64; 3] {
    let p = pitch_deg.to_radians();
    let y = yaw_deg.to_radians();
    [p.cos() * y.sin(), p.sin(), p.cos() * y.cos()]
}

/// Angle in degrees between the gaze vectors of two (pitch, yaw) labels.
pub fn angular_distance_deg(a: &[f64], b: &[f64]) -> f64 {
    let g = gaze_vector(a[0], a[1]);
    let h = gaze_vector(b[0], b[1]);
    let dot = g[0] * h[0] + g[1] * h[1] + g[2] * h[2];
    dot.clamp(-1.0, 1.0).acos().to_degrees()
}

pub fn label_distance(
    y_i: ArrayView1<f64>,
    y_j: ArrayView1<f64>,
    kind: LabelDistanceKind,
) -> Result<f64> {
    if y_i.len() != y_j.len() {
        return Err(Error::Domain(format!(
            "label distance of labels with lengths {} and {}",
            y_i.len(),
            y_j.len()
        )));
    }
    match kind {
        LabelDistanceKind::L1 => {
            Ok(y_i.iter().zip(y_j.iter()).map(|(a, b)| (a - b).abs()).sum())
        }
        LabelDistanceKind::Angular => {
            if y_i.len() != 2 {
                return Err(Error::Domain(format!(
                    "angular label distance needs (pitch, yaw), got dimension {}",
                    y_i.len()
                )));
            }
            Ok(angular_distance_deg(y_i.as_slice().unwrap(), y_j.as_slice().unwrap()))
        }
    }
}

/// Scaled similarities and label distances for one batch.
#[derive(Debug, Clone)]
pub struct PairwiseMatrices {
    /// `sim[i][j] = sim(v_i, v_j) / temperature`; symmetric.
    pub sim: Array2<f64>,
    /// `label_dist[i][j] = d(y_i, y_j)`; symmetric, nonnegative, zero diagonal.
    pub label_dist: Array2<f64>,
    pub temperature: f64,
}

impl PairwiseMatrices {
    /// Wraps precomputed matrices, validating the structural invariants.
    pub fn from_parts(sim: Array2<f64>, label_dist: Array2<f64>, temperature: f64) -> Result<Self> {
        if temperature <= 0.0 {
            return Err(Error::Config(format!("temperature must be > 0, got {temperature}")));
        }
        let n = sim.nrows();
        if sim.ncols() != n || label_dist.dim() != (n, n) {
            return Err(Error::Domain("pairwise matrices must be square and same size".into()));
        }
        if !sim.iter().all(|v| v.is_finite()) || !label_dist.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("pairwise matrices contain non-finite entries".into()));
        }
        for i in 0..n {
            if label_dist[[i, i]] != 0.0 {
                return Err(Error::Domain("label distance diagonal must be zero".into()));
            }
            for j in 0..i {
                if sim[[i, j]] != sim[[j, i]] || label_dist[[i, j]] != label_dist[[j, i]] {
                    return Err(Error::Domain("pairwise matrices must be symmetric".into()));
                }
                if label_dist[[i, j]] < 0.0 {
                    return Err(Error::Domain("label distances must be nonnegative".into()));
                }
            }
        }
        Ok(Self { sim, label_dist, temperature })
    }

    pub fn num_rows(&self) -> usize {
        self.sim.nrows()
    }
}

/// `sim(v_i, v_j) / temperature` for every pair; symmetry holds by
/// construction (each unordered pair computed once and mirrored).
pub fn scaled_similarity_matrix(
    emb: &EmbeddingBatch,
    kind: SimilarityKind,
    temperature: f64,
) -> Result<Array2<f64>> {
    if temperature <= 0.0 {
        return Err(Error::Config(format!("temperature must be > 0, got {temperature}")));
    }
    let n = emb.num_rows();
    let mut sim = Array2::zeros((n, n));
    for i in 0..n {
        sim[[i, i]] = similarity(emb.vectors.row(i), emb.vectors.row(i), kind)? / temperature;
        for j in (i + 1)..n {
            let s = similarity(emb.vectors.row(i), emb.vectors.row(j), kind)? / temperature;
            sim[[i, j]] = s;
            sim[[j, i]] = s;
        }
    }
    Ok(sim)
}

/// `d(y_i, y_j)` for every pair of label rows; symmetric, zero diagonal.
pub fn label_distance_matrix(labels: &Array2<f64>, kind: LabelDistanceKind) -> Result<Array2<f64>> {
    let n = labels.nrows();
    let mut dist = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let d = label_distance(labels.row(i), labels.row(j), kind)?;
            dist[[i, j]] = d;
            dist[[j, i]] = d;
        }
    }
    Ok(dist)
}

/// Builds both matrices for a batch.
pub fn pairwise_matrices(
    batch: &TwoViewBatch,
    emb: &EmbeddingBatch,
    sim_kind: SimilarityKind,
    dist_kind: LabelDistanceKind,
    temperature: f64,
) -> Result<PairwiseMatrices> {
    let n = batch.num_rows();
    if emb.num_rows() != n {
        return Err(Error::Domain(format!(
            "embedding rows ({}) do not match batch rows ({n})",
            emb.num_rows()
        )));
    }
    Ok(PairwiseMatrices {
        sim: scaled_similarity_matrix(emb, sim_kind, temperature)?,
        label_dist: label_distance_matrix(&batch.labels, dist_kind)?,
        temperature,
    })
}

/// Relative tie tolerance on label distances.
pub const DISTANCE_TIE_TOL: f64 = 1e-9;

/// Distances within `1e-9 * max(1, rep)` of a group representative count as
/// equal to it.
pub fn same_distance_group(rep: f64, d: f64) -> bool {
    (d - rep).abs() <= DISTANCE_TIE_TOL * rep.abs().max(1.0)
}

/// One tie group of an anchor's neighbors: all at (effectively) the same
/// label distance.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceGroup {
    /// Representative distance (smallest member of the group).
    pub distance: f64,
    /// Neighbor indices, ascending.
    pub members: Vec<usize>,
}

/// Groups an anchor's neighbors by tied label distance, nearest group first.
/// `dist_row` is the anchor's row of the label-distance matrix; the anchor
/// itself is excluded.
pub fn anchor_distance_groups(dist_row: ArrayView1<f64>, anchor: usize) -> Vec<DistanceGroup> {
    let mut order: Vec<usize> = (0..dist_row.len()).filter(|&j| j != anchor).collect();
    order.sort_by(|&a, &b| {
        dist_row[a].partial_cmp(&dist_row[b]).expect("finite distances").then(a.cmp(&b))
    });
    let mut groups: Vec<DistanceGroup> = Vec::new();
    for j in order {
        let d = dist_row[j];
        match groups.last_mut() {
            Some(g) if same_distance_group(g.distance, d) => g.members.push(j),
            _ => groups.push(DistanceGroup { distance: d, members: vec![j] }),
        }
    }
    groups
}

/// `rank[j]` = index of the group containing neighbor `j` (0 = nearest);
/// `rank[anchor]` is `usize::MAX` and must not be read.
pub fn group_ranks(groups: &[DistanceGroup], n: usize, anchor: usize) -> Vec<usize> {
    let mut ranks = vec![usize::MAX; n];
    for (rank, g) in groups.iter().enumerate() {
        for &j in &g.members {
            ranks[j] = rank;
        }
    }
    debug_assert!(ranks.iter().enumerate().all(|(j, &r)| j == anchor || r != usize::MAX));
    ranks
}
