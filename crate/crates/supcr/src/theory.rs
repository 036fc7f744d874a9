//! Ordering theory for the ranked contrastive loss: the closed-form lower
//! bound, near-tight similarity constructions, and the `delta`-ordering
//! checker.
//!
//! The loss has an analytic floor determined by the label ties alone:
//!
//! ```text
//! L* = 1/(2N(2N-1)) * sum_i sum_m  n[i][m] * ln(n[i][m])
//! ```
//!
//! where `n[i][m]` counts the rows at anchor `i`'s m-th distinct label
//! distance. The loss always stays above `L*`, gets arbitrarily close to it,
//! and once it is within `epsilon_for_delta(profile, delta)` of the floor,
//! the similarities are guaranteed `delta`-ordered: rows closer to the
//! anchor in label space are more similar by a margin of at least
//! `1/delta`, and rows at tied distances have similarities within `delta`.
//! `optimize_similarities` checks that chain empirically by descending on
//! the free similarity entries.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::loss::supcr_loss_sim_grad;
use crate::pairwise::{
    anchor_distance_groups, group_ranks, same_distance_group, DistanceGroup, EmbeddingBatch,
    PairwiseMatrices,
};

/// Per-anchor label-distance structure: tie groups sorted nearest first.
#[derive(Debug, Clone)]
pub struct DistanceProfile {
    /// `anchors[i]` lists anchor `i`'s groups; multiplicities sum to `2N-1`.
    pub anchors: Vec<Vec<DistanceGroup>>,
}

impl DistanceProfile {
    pub fn num_rows(&self) -> usize {
        self.anchors.len()
    }

    /// Smallest tie-group size across all anchors.
    pub fn min_multiplicity(&self) -> usize {
        self.anchors
            .iter()
            .flat_map(|groups| groups.iter().map(|g| g.members.len()))
            .min()
            .unwrap_or(0)
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_rows();
        if n < 2 {
            return Err(Error::Domain("profile needs at least 2 rows".into()));
        }
        for (i, groups) in self.anchors.iter().enumerate() {
            let total: usize = groups.iter().map(|g| g.members.len()).sum();
            if total != n - 1 {
                return Err(Error::Domain(format!(
                    "anchor {i}: multiplicities sum to {total}, expected {}",
                    n - 1
                )));
            }
            for w in groups.windows(2) {
                if w[1].distance <= w[0].distance {
                    return Err(Error::Domain(format!(
                        "anchor {i}: group distances not strictly increasing"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Builds the per-anchor distance profile from a label-distance matrix.
pub fn distance_profile(dist: &Array2<f64>) -> Result<DistanceProfile> {
    let n = dist.nrows();
    if dist.ncols() != n || n < 2 {
        return Err(Error::Domain(format!("distance matrix must be square with >= 2 rows, got {:?}", dist.dim())));
    }
    for i in 0..n {
        if dist[[i, i]] != 0.0 {
            return Err(Error::Domain("distance diagonal must be zero".into()));
        }
        for j in 0..i {
            if dist[[i, j]] != dist[[j, i]] {
                return Err(Error::Domain(format!("distance matrix asymmetric at ({i}, {j})")));
            }
            if !(dist[[i, j]] >= 0.0) {
                return Err(Error::Domain("distances must be nonnegative and finite".into()));
            }
        }
    }
    let anchors: Vec<Vec<DistanceGroup>> =
        (0..n).map(|i| anchor_distance_groups(dist.row(i), i)).collect();
    let profile = DistanceProfile { anchors };
    profile.validate()?;
    Ok(profile)
}

/// The analytic floor of the loss for this tie structure.
pub fn lower_bound(profile: &DistanceProfile) -> f64 {
    let n = profile.num_rows();
    let total: f64 = profile
        .anchors
        .iter()
        .flat_map(|groups| groups.iter())
        .map(|g| {
            let m = g.members.len() as f64;
            m * m.ln()
        })
        .sum();
    total / (n * (n - 1)) as f64
}

/// How close to the floor the loss must be to force `delta`-ordering.
pub fn epsilon_for_delta(profile: &DistanceProfile, delta: f64) -> Result<f64> {
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    profile.validate()?;
    let n = profile.num_rows();
    let tie_margin = (delta + 1.0 / delta).exp();
    let group_branch = profile
        .anchors
        .iter()
        .flat_map(|groups| groups.iter())
        .map(|g| (1.0 / (g.members.len() as f64 * tie_margin)).ln_1p())
        .fold(f64::INFINITY, f64::min);
    let spread_branch = 2.0 * ((1.0 + delta.exp()) / 2.0).ln() - delta;
    Ok(group_branch.min(spread_branch) / (n * (n - 1)) as f64)
}

/// Similarity-gap constant used by the tight constructions:
/// `ln(2N / (min multiplicity * epsilon))`.
pub fn tightness_gap(profile: &DistanceProfile, epsilon: f64) -> f64 {
    let n = profile.num_rows() as f64;
    (n / (profile.min_multiplicity() as f64 * epsilon)).ln()
}

/// Raw ordering statistics of a similarity matrix against a distance
/// matrix: the smallest cross-group similarity gap (in the label-consistent
/// direction) and the largest within-group similarity spread.
#[derive(Debug, Clone, Copy, Default)]
pub struct OrderingStats {
    /// `min over (i; j closer than k) of s[i][j] - s[i][k]`; `None` when no
    /// anchor has two distance groups.
    pub min_cross_gap: Option<f64>,
    /// `max over (i; j, k tied) of |s[i][j] - s[i][k]|`; `None` when no
    /// anchor has a group of size >= 2.
    pub max_within_spread: Option<f64>,
}

pub fn ordering_stats(sim: &Array2<f64>, dist: &Array2<f64>) -> Result<OrderingStats> {
    let profile = distance_profile(dist)?;
    let n = profile.num_rows();
    if sim.dim() != (n, n) {
        return Err(Error::Domain("similarity matrix shape mismatch".into()));
    }
    let mut stats = OrderingStats::default();
    for (i, groups) in profile.anchors.iter().enumerate() {
        for (r, group) in groups.iter().enumerate() {
            for (a, &j) in group.members.iter().enumerate() {
                for &k in &group.members[a + 1..] {
                    let spread = (sim[[i, j]] - sim[[i, k]]).abs();
                    stats.max_within_spread =
                        Some(stats.max_within_spread.map_or(spread, |m| m.max(spread)));
                }
                for farther in &groups[r + 1..] {
                    for &k in &farther.members {
                        let gap = sim[[i, j]] - sim[[i, k]];
                        stats.min_cross_gap =
                            Some(stats.min_cross_gap.map_or(gap, |m| m.min(gap)));
                    }
                }
            }
        }
    }
    Ok(stats)
}

/// `(anchor, j, k)` indices of an ordering violation.
pub type OrderingViolation = (usize, usize, usize);

/// Checks `delta`-ordering. On failure returns the first violating
/// `(anchor, j, k)` triple in row-major order.
pub fn delta_ordered(
    sim: &Array2<f64>,
    dist: &Array2<f64>,
    delta: f64,
) -> Result<(bool, Option<OrderingViolation>)> {
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let profile = distance_profile(dist)?;
    let n = profile.num_rows();
    if sim.dim() != (n, n) {
        return Err(Error::Domain("similarity matrix shape mismatch".into()));
    }
    let inv_delta = 1.0 / delta;
    for i in 0..n {
        let ranks = group_ranks(&profile.anchors[i], n, i);
        for j in 0..n {
            if j == i {
                continue;
            }
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let (s_ij, s_ik) = (sim[[i, j]], sim[[i, k]]);
                let ok = match ranks[j].cmp(&ranks[k]) {
                    std::cmp::Ordering::Less => s_ij > s_ik + inv_delta,
                    std::cmp::Ordering::Equal => (s_ij - s_ik).abs() < delta,
                    std::cmp::Ordering::Greater => s_ij < s_ik - inv_delta,
                };
                if !ok {
                    return Ok((false, Some((i, j, k))));
                }
            }
        }
    }
    Ok((true, None))
}

/// Clusters every group distance in the profile across anchors and returns
/// `(rank lookup, sorted cluster representatives)`. `lookup[i][g]` is the
/// global rank of anchor `i`'s g-th group.
fn global_distance_ranks(profile: &DistanceProfile) -> (Vec<Vec<usize>>, Vec<f64>) {
    let mut entries: Vec<(f64, usize, usize)> = Vec::new();
    for (i, groups) in profile.anchors.iter().enumerate() {
        for (g, group) in groups.iter().enumerate() {
            entries.push((group.distance, i, g));
        }
    }
    entries.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances"));
    let mut lookup: Vec<Vec<usize>> =
        profile.anchors.iter().map(|groups| vec![0; groups.len()]).collect();
    let mut reps: Vec<f64> = Vec::new();
    for (d, i, g) in entries {
        match reps.last() {
            Some(&rep) if same_distance_group(rep, d) => {}
            _ => reps.push(d),
        }
        lookup[i][g] = reps.len() - 1;
    }
    (lookup, reps)
}

/// Builds a similarity matrix whose loss provably lies within `epsilon`
/// of the floor: rows at tied label distances get equal similarities and
/// every strictly-farther row sits at least `gamma + 1` lower, with
/// `gamma = ln(2N / (min multiplicity * epsilon))`. Ranks are taken over
/// the globally clustered distinct distances so the matrix is symmetric for
/// any metric distance matrix; the gap conditions are re-verified after
/// symmetrization and violations are reported as errors.
pub fn tight_similarities(profile: &DistanceProfile, epsilon: f64) -> Result<Array2<f64>> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be > 0, got {epsilon}")));
    }
    profile.validate()?;
    let n = profile.num_rows();
    let gamma = tightness_gap(profile, epsilon);
    let step = gamma + 1.0;
    let (lookup, _) = global_distance_ranks(profile);
    let mut sim = Array2::zeros((n, n));
    for (i, groups) in profile.anchors.iter().enumerate() {
        for (g, group) in groups.iter().enumerate() {
            let value = -step * lookup[i][g] as f64;
            for &j in &group.members {
                sim[[i, j]] = value;
            }
        }
    }
    let sim = (&sim + &sim.t()) / 2.0;
    verify_gap_conditions(&sim, profile, gamma)?;
    Ok(sim)
}

fn verify_gap_conditions(sim: &Array2<f64>, profile: &DistanceProfile, gamma: f64) -> Result<()> {
    for (i, groups) in profile.anchors.iter().enumerate() {
        for (r, group) in groups.iter().enumerate() {
            let rep = sim[[i, group.members[0]]];
            for &j in &group.members {
                if (sim[[i, j]] - rep).abs() > 1e-12 {
                    return Err(Error::Domain(format!(
                        "tight construction broke a within-group equality at anchor {i}"
                    )));
                }
            }
            for farther in &groups[r + 1..] {
                for &k in &farther.members {
                    if !(rep - sim[[i, k]] > gamma) {
                        return Err(Error::Domain(format!(
                            "tight construction broke a cross-group gap at anchor {i}"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Coordinate realization of the tight construction for scalar labels:
/// embeddings `v_i = c * y_i` with `c = tau * (gamma + 1) / min_gap`, where
/// `min_gap` is the smallest positive difference between distinct label
/// distances. Under negative-L2 similarity this yields equal similarities
/// for tied distances and gaps above `gamma` otherwise. When every distance
/// ties (all labels equal) the embeddings are zero and the loss sits on the
/// floor exactly.
pub fn tight_embeddings_1d(labels: &[f64], epsilon: f64, tau: f64) -> Result<EmbeddingBatch> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be > 0, got {epsilon}")));
    }
    if !(tau > 0.0) {
        return Err(Error::Config(format!("temperature must be > 0, got {tau}")));
    }
    let n = labels.len();
    if n < 2 {
        return Err(Error::Domain("need at least 2 labels".into()));
    }
    let mut dist = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            dist[[i, j]] = (labels[i] - labels[j]).abs();
        }
    }
    let profile = distance_profile(&dist)?;
    let (_, reps) = global_distance_ranks(&profile);
    let min_gap = reps.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if !min_gap.is_finite() {
        // single distance group everywhere: the floor is attained exactly
        return EmbeddingBatch::new(Array2::zeros((n, 1)));
    }
    let gamma = tightness_gap(&profile, epsilon);
    let scale = tau * (gamma + 1.0) / min_gap;
    let vectors = Array2::from_shape_fn((n, 1), |(i, _)| scale * labels[i]);
    EmbeddingBatch::new(vectors)
}

/// Knobs for [`optimize_similarities`].
#[derive(Debug, Clone)]
pub struct OptimizeOptions {
    pub max_steps: usize,
    /// Initial step size; `None` picks `0.5 * 2N(2N-1)`, which cancels the
    /// loss normalization. Backtracking halves it on any increase and lets
    /// it grow again after accepted steps, so the loss trace never rises.
    pub step_size: Option<f64>,
    /// Starting similarities; zeros when absent.
    pub init: Option<Array2<f64>>,
    /// Record the accepted loss value after every step.
    pub record_trace: bool,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self { max_steps: 300_000, step_size: None, init: None, record_trace: false }
    }
}

/// Outcome of a similarity-space descent run.
#[derive(Debug, Clone)]
pub struct TheoryReport {
    pub lower_bound: f64,
    /// Target excess over the floor.
    pub epsilon: f64,
    /// Gap constant of the tight construction for this profile and target.
    pub gamma: f64,
    /// The smallest `delta` whose threshold covers the achieved excess;
    /// absent when the target was never reached.
    pub delta: Option<f64>,
    pub achieved_loss: f64,
    /// Verdict of the ordering check at `delta`; unset when the run failed.
    pub is_delta_ordered: Option<bool>,
    pub first_violation: Option<OrderingViolation>,
    pub converged: bool,
    pub steps_used: usize,
    pub stats: OrderingStats,
    pub trace: Vec<f64>,
}

/// Smallest `delta` in (0, 1) whose `epsilon_for_delta` strictly exceeds
/// `excess`, found by bisection (the threshold grows with `delta`).
pub fn delta_for_excess(profile: &DistanceProfile, excess: f64) -> Result<Option<f64>> {
    let (mut lo, mut hi) = (1e-6, 1.0 - 1e-9);
    if epsilon_for_delta(profile, hi)? <= excess {
        return Ok(None);
    }
    if epsilon_for_delta(profile, lo)? > excess {
        return Ok(Some(lo));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if epsilon_for_delta(profile, mid)? > excess {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Gradient descent directly on the free symmetric entries of a similarity
/// matrix, stopping once the loss drops below `lower_bound + target_epsilon`
/// or the step budget runs out. On success the report carries the
/// `delta`-ordering verdict for the smallest `delta` covered by the achieved
/// excess.
pub fn optimize_similarities(
    dist: &Array2<f64>,
    target_epsilon: f64,
    opts: &OptimizeOptions,
) -> Result<(Array2<f64>, TheoryReport)> {
    if !(target_epsilon > 0.0) {
        return Err(Error::Domain(format!("target epsilon must be > 0, got {target_epsilon}")));
    }
    let profile = distance_profile(dist)?;
    let n = profile.num_rows();
    let floor = lower_bound(&profile);
    let target = floor + target_epsilon;

    let mut sim = match &opts.init {
        Some(s) => {
            if s.dim() != (n, n) {
                return Err(Error::Domain("initial similarities shape mismatch".into()));
            }
            s.clone()
        }
        None => Array2::zeros((n, n)),
    };
    let mut lr = opts.step_size.unwrap_or(0.5 * (n * (n - 1)) as f64);

    let eval = |s: &Array2<f64>| -> Result<(f64, Array2<f64>)> {
        let pm = PairwiseMatrices::from_parts(s.clone(), dist.clone(), 1.0)?;
        supcr_loss_sim_grad(&pm)
    };

    let (mut value, mut grad) = eval(&sim)?;
    let mut trace = Vec::new();
    let mut steps_used = 0;
    let mut converged = value < target;
    while !converged && steps_used < opts.max_steps {
        // symmetric free variables: entry {a, b} moves by both partials
        let sym_grad = &grad + &grad.t();
        let mut accepted = false;
        for _ in 0..60 {
            let mut candidate = &sim - &(lr * &sym_grad);
            for i in 0..n {
                candidate[[i, i]] = 0.0;
            }
            match eval(&candidate) {
                Ok((cand_value, cand_grad)) if cand_value < value => {
                    sim = candidate;
                    value = cand_value;
                    grad = cand_grad;
                    lr *= 1.25;
                    accepted = true;
                    break;
                }
                _ => lr *= 0.5,
            }
        }
        steps_used += 1;
        if opts.record_trace {
            trace.push(value);
        }
        if !accepted {
            break; // no descent direction within the line-search budget
        }
        converged = value < target;
    }

    let excess = value - floor;
    let delta = if converged { delta_for_excess(&profile, excess)? } else { None };
    let (is_delta_ordered, first_violation) = match delta {
        Some(d) => {
            let (ok, violation) = delta_ordered(&sim, dist, d)?;
            (Some(ok), violation)
        }
        None => (None, None),
    };
    let report = TheoryReport {
        lower_bound: floor,
        epsilon: target_epsilon,
        gamma: tightness_gap(&profile, target_epsilon),
        delta,
        achieved_loss: value,
        is_delta_ordered,
        first_violation,
        converged,
        steps_used,
        stats: ordering_stats(&sim, dist)?,
        trace,
    };
    Ok((sim, report))
}

/// Convenience wrapper: derive the loss target from `delta`, optimize, and
/// check the ordering at that same `delta`.
pub fn optimize_for_delta(
    dist: &Array2<f64>,
    delta: f64,
    opts: &OptimizeOptions,
) -> Result<(Array2<f64>, TheoryReport, bool)> {
    let profile = distance_profile(dist)?;
    let eps = epsilon_for_delta(&profile, delta)?;
    let (sim, mut report) = optimize_similarities(dist, eps, opts)?;
    let ordered = if report.converged {
        let (ok, violation) = delta_ordered(&sim, dist, delta)?;
        report.delta = Some(delta);
        report.is_delta_ordered = Some(ok);
        report.first_violation = violation;
        ok
    } else {
        false
    };
    Ok((sim, report, ordered))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::supcr_loss_naive;
    use crate::pairwise::{label_distance_matrix, scaled_similarity_matrix, LabelDistanceKind, SimilarityKind};
    use crate::data::rng_stream;
    use rand::Rng;

    fn dist_for_labels(labels: &[f64]) -> Array2<f64> {
        let mat = Array2::from_shape_vec((labels.len(), 1), labels.to_vec()).unwrap();
        label_distance_matrix(&mat, LabelDistanceKind::L1).unwrap()
    }

    fn loss_for(sim: Array2<f64>, dist: Array2<f64>) -> f64 {
        let pm = PairwiseMatrices::from_parts(sim, dist, 1.0).unwrap();
        supcr_loss_naive(&pm).unwrap()
    }

    #[test]
    fn profile_of_two_pairs() {
        let profile = distance_profile(&dist_for_labels(&[0.0, 0.0, 1.0, 1.0])).unwrap();
        let anchor0 = &profile.anchors[0];
        assert_eq!(anchor0.len(), 2);
        assert_eq!(anchor0[0].distance, 0.0);
        assert_eq!(anchor0[0].members, vec![1]);
        assert_eq!(anchor0[1].distance, 1.0);
        assert_eq!(anchor0[1].members, vec![2, 3]);
    }

    #[test]
    fn profile_of_constant_labels() {
        let profile = distance_profile(&dist_for_labels(&[5.0; 4])).unwrap();
        for groups in &profile.anchors {
            assert_eq!(groups.len(), 1);
            assert_eq!(groups[0].members.len(), 3);
        }
    }

    #[test]
    fn profile_of_three_pairs_middle_anchor() {
        let profile = distance_profile(&dist_for_labels(&[0.0, 0.0, 1.0, 1.0, 2.0, 2.0])).unwrap();
        // anchor 2 has label 1: partner at 0, everyone else at distance 1
        let anchor2 = &profile.anchors[2];
        assert_eq!(anchor2.len(), 2);
        assert_eq!(anchor2[0].distance, 0.0);
        assert_eq!(anchor2[0].members.len(), 1);
        assert_eq!(anchor2[1].distance, 1.0);
        assert_eq!(anchor2[1].members.len(), 4);
    }

    #[test]
    fn profile_multiplicities_sum_on_random_labels() {
        let mut rng = rng_stream(14, 0);
        for _ in 0..50 {
            let pairs = rng.gen_range(2..=10);
            let labels: Vec<f64> = (0..pairs)
                .flat_map(|_| {
                    let y = rng.gen_range(0..6) as f64;
                    [y, y]
                })
                .collect();
            let profile = distance_profile(&dist_for_labels(&labels)).unwrap();
            let n = labels.len();
            for groups in &profile.anchors {
                let total: usize = groups.iter().map(|g| g.members.len()).sum();
                assert_eq!(total, n - 1);
            }
        }
    }

    #[test]
    fn asymmetric_distances_rejected() {
        let mut d = dist_for_labels(&[0.0, 1.0, 2.0]);
        d[[0, 1]] += 0.5;
        assert!(matches!(distance_profile(&d), Err(Error::Domain(_))));
    }

    #[test]
    fn lower_bound_closed_forms() {
        // all pairwise-distinct labels: every multiplicity is 1
        let profile = distance_profile(&dist_for_labels(&[0.0, 1.0, 3.0, 7.0])).unwrap();
        assert_eq!(lower_bound(&profile), 0.0);

        let profile = distance_profile(&dist_for_labels(&[0.0, 0.0, 1.0, 1.0])).unwrap();
        let expected = 2.0 / 3.0 * 2f64.ln();
        assert!((lower_bound(&profile) - expected).abs() < 1e-15);

        // outer anchors contribute 4 ln 2 each, middle anchors 4 ln 4
        let profile = distance_profile(&dist_for_labels(&[0.0, 0.0, 1.0, 1.0, 2.0, 2.0])).unwrap();
        let expected = 32.0 * 2f64.ln() / 30.0;
        assert!((lower_bound(&profile) - expected).abs() < 1e-15);
        assert!((lower_bound(&profile) - 0.73936).abs() < 1e-5);
    }

    #[test]
    fn epsilon_hand_value_and_positivity() {
        let profile = distance_profile(&dist_for_labels(&[0.0, 0.0, 1.0, 1.0])).unwrap();
        let eps = epsilon_for_delta(&profile, 0.5).unwrap();
        // independent arithmetic: group sizes are {1, 2}, so the binding
        // branch is ln(1 + 1/(2 e^{2.5})); the spread branch is larger
        let group_branch = (1.0f64 + 1.0 / (2.0 * 2.5f64.exp())).ln();
        let spread_branch = 2.0 * ((1.0 + 0.5f64.exp()) / 2.0).ln() - 0.5;
        assert!(group_branch < spread_branch);
        assert!((eps - group_branch / 12.0).abs() < 1e-15);
        assert!((eps - 0.0033520).abs() < 1e-6);

        for delta in [0.05, 0.3, 0.9, 0.999] {
            assert!(epsilon_for_delta(&profile, delta).unwrap() > 0.0);
        }
        assert!(epsilon_for_delta(&profile, 0.0).is_err());
        assert!(epsilon_for_delta(&profile, 1.0).is_err());
    }

    #[test]
    fn epsilon_weakly_decreases_with_larger_tie_groups() {
        let small = distance_profile(&dist_for_labels(&[0.0, 0.0, 1.0, 1.0])).unwrap();
        let large =
            distance_profile(&dist_for_labels(&[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0])).unwrap();
        // compare the per-batch-normalized branches at equal 2N(2N-1) by
        // scaling the thresholds back up
        let scale_small = (4 * 3) as f64;
        let scale_large = (8 * 7) as f64;
        let e_small = epsilon_for_delta(&small, 0.5).unwrap() * scale_small;
        let e_large = epsilon_for_delta(&large, 0.5).unwrap() * scale_large;
        assert!(e_large <= e_small);
    }

    #[test]
    fn delta_ordered_hand_cases() {
        let dist = dist_for_labels(&[0.0, 0.0, 1.0, 1.0]);
        let emb = EmbeddingBatch::new(
            Array2::from_shape_vec((4, 1), vec![0.0, 0.0, 10.0, 10.0]).unwrap(),
        )
        .unwrap();
        let sim = scaled_similarity_matrix(&emb, SimilarityKind::NegL2, 1.0).unwrap();
        let (ok, violation) = delta_ordered(&sim, &dist, 0.2).unwrap();
        assert!(ok, "gap 10 > 1/0.2");
        assert!(violation.is_none());

        let (ok, violation) = delta_ordered(&sim, &dist, 0.05).unwrap();
        assert!(!ok, "gap 10 < 1/0.05");
        assert!(violation.is_some());
    }

    #[test]
    fn delta_ordered_vacuous_for_two_rows() {
        let sim = Array2::zeros((2, 2));
        let dist = dist_for_labels(&[0.0, 5.0]);
        let (ok, violation) = delta_ordered(&sim, &dist, 0.5).unwrap();
        assert!(ok && violation.is_none());
    }

    #[test]
    fn delta_verdict_matches_ordering_stats() {
        let mut rng = rng_stream(31, 2);
        for _ in 0..40 {
            let pairs = rng.gen_range(2..=5);
            let n = 2 * pairs;
            let labels: Vec<f64> = (0..pairs)
                .flat_map(|_| {
                    let y = rng.gen_range(0..3) as f64;
                    [y, y]
                })
                .collect();
            let dist = dist_for_labels(&labels);
            let mut sim = Array2::zeros((n, n));
            for i in 0..n {
                for j in (i + 1)..n {
                    let s = rng.gen_range(-8.0..0.0);
                    sim[[i, j]] = s;
                    sim[[j, i]] = s;
                }
            }
            for delta in [0.3, 0.5, 0.9] {
                let (ok, _) = delta_ordered(&sim, &dist, delta).unwrap();
                let stats = ordering_stats(&sim, &dist).unwrap();
                let expected = stats.min_cross_gap.is_none_or(|g| g > 1.0 / delta)
                    && stats.max_within_spread.is_none_or(|s| s < delta);
                assert_eq!(ok, expected);
            }
        }
    }

    #[test]
    fn tight_similarities_two_pairs() {
        let dist = dist_for_labels(&[0.0, 0.0, 1.0, 1.0]);
        let profile = distance_profile(&dist).unwrap();
        let gamma = tightness_gap(&profile, 0.01);
        assert!((gamma - 400f64.ln()).abs() < 1e-12);
        let sim = tight_similarities(&profile, 0.01).unwrap();
        let floor = lower_bound(&profile);
        let value = loss_for(sim, dist);
        assert!(value >= floor - 1e-12);
        assert!(value < floor + 0.01, "loss {value} floor {floor}");
    }

    #[test]
    fn tight_similarities_epsilon_sweep() {
        let mut rng = rng_stream(77, 1);
        for &eps in &[0.1, 0.01, 0.001] {
            for _ in 0..20 {
                let pairs = rng.gen_range(2..=8);
                let labels: Vec<f64> = (0..pairs)
                    .flat_map(|_| {
                        let y = rng.gen_range(0..5) as f64;
                        [y, y]
                    })
                    .collect();
                let dist = dist_for_labels(&labels);
                let profile = distance_profile(&dist).unwrap();
                let sim = tight_similarities(&profile, eps).unwrap();
                let floor = lower_bound(&profile);
                let value = loss_for(sim, dist.clone());
                assert!(
                    value >= floor - 1e-12 && value < floor + eps,
                    "eps {eps}: loss {value} floor {floor}"
                );
            }
        }
    }

    #[test]
    fn tight_similarities_all_equal_labels_hit_floor() {
        let dist = dist_for_labels(&[3.0; 6]);
        let profile = distance_profile(&dist).unwrap();
        let sim = tight_similarities(&profile, 0.01).unwrap();
        assert!(sim.iter().all(|&s| s == 0.0));
        let value = loss_for(sim, dist);
        let floor = lower_bound(&profile);
        assert!((value - floor).abs() <= 1e-12);
        assert!((value - 5f64.ln()).abs() <= 1e-12);
    }

    #[test]
    fn tight_embeddings_scale_and_loss() {
        let labels = [0.0, 0.0, 1.0, 1.0];
        let emb = tight_embeddings_1d(&labels, 0.01, 1.0).unwrap();
        let expected_scale = 400f64.ln() + 1.0;
        assert!((emb.vectors[[2, 0]] - expected_scale).abs() < 1e-12);
        assert_eq!(emb.vectors[[0, 0]], 0.0);

        let sim = scaled_similarity_matrix(&emb, SimilarityKind::NegL2, 1.0).unwrap();
        let dist = dist_for_labels(&labels);
        let profile = distance_profile(&dist).unwrap();
        let floor = lower_bound(&profile);
        let value = loss_for(sim, dist);
        assert!(value >= floor - 1e-12 && value < floor + 0.01);
    }

    #[test]
    fn tight_embeddings_degenerate_labels() {
        let labels = [2.0; 6];
        let emb = tight_embeddings_1d(&labels, 0.5, 2.0).unwrap();
        assert!(emb.vectors.iter().all(|&v| v == 0.0));
        let sim = scaled_similarity_matrix(&emb, SimilarityKind::NegL2, 2.0).unwrap();
        let value = loss_for(sim, dist_for_labels(&labels));
        assert!((value - 5f64.ln()).abs() <= 1e-12);
    }

    #[test]
    fn tight_embeddings_loss_monotone_in_scale() {
        let labels = [0.0, 0.0, 1.0, 1.0, 3.0, 3.0];
        let dist = dist_for_labels(&labels);
        let base = tight_embeddings_1d(&labels, 0.1, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for mult in [1.0, 2.0, 4.0, 8.0] {
            let scaled = EmbeddingBatch::new(&base.vectors * mult).unwrap();
            let sim = scaled_similarity_matrix(&scaled, SimilarityKind::NegL2, 1.0).unwrap();
            let value = loss_for(sim, dist.clone());
            assert!(value <= prev + 1e-15, "loss rose from {prev} to {value} at x{mult}");
            prev = value;
        }
    }

    #[test]
    fn optimizer_reaches_delta_threshold_on_two_pairs() {
        let dist = dist_for_labels(&[0.0, 0.0, 1.0, 1.0]);
        let profile = distance_profile(&dist).unwrap();
        let eps = epsilon_for_delta(&profile, 0.5).unwrap();
        let (sim, report) = optimize_similarities(&dist, eps, &OptimizeOptions::default()).unwrap();
        assert!(report.converged, "achieved {}", report.achieved_loss);
        assert!(report.achieved_loss < report.lower_bound + eps);
        let (ok, violation) = delta_ordered(&sim, &dist, 0.5).unwrap();
        assert!(ok, "violation: {violation:?}");
        assert_eq!(report.is_delta_ordered, Some(true));
    }

    #[test]
    fn optimizer_with_tight_init_converges_immediately() {
        let dist = dist_for_labels(&[0.0, 0.0, 1.0, 1.0, 2.0, 2.0]);
        let profile = distance_profile(&dist).unwrap();
        let sim = tight_similarities(&profile, 0.005).unwrap();
        let opts = OptimizeOptions { init: Some(sim), ..Default::default() };
        let (_, report) = optimize_similarities(&dist, 0.005, &opts).unwrap();
        assert!(report.converged);
        assert_eq!(report.steps_used, 0);
    }

    #[test]
    fn optimizer_trace_is_monotone_nonincreasing() {
        let mut rng = rng_stream(4242, 0);
        let labels: Vec<f64> = (0..8)
            .flat_map(|_| {
                let y = rng.gen::<f64>() * 10.0;
                [y, y]
            })
            .collect();
        let dist = dist_for_labels(&labels);
        let opts = OptimizeOptions {
            max_steps: 500,
            step_size: Some(1.0),
            record_trace: true,
            ..Default::default()
        };
        let (_, report) = optimize_similarities(&dist, 1e-6, &opts).unwrap();
        for w in report.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "trace rose: {} -> {}", w[0], w[1]);
        }
    }
}
