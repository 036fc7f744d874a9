//! Property tests for the numerical core: the invariants that must hold
//! for every batch, not just the hand-picked ones.

use ndarray::Array2;
use proptest::prelude::*;

use supcr::data::{rng_stream, TwoViewBatch};
use supcr::loss::{bin_labels, supcr_loss_fast, supcr_loss_naive};
use supcr::model::{cosine_lr, OptimizerState};
use supcr::pairwise::{
    label_distance_matrix, pairwise_matrices, EmbeddingBatch, LabelDistanceKind, PairwiseMatrices,
    SimilarityKind,
};
use supcr::theory::{distance_profile, lower_bound};

/// Duplicated labels plus a symmetric similarity matrix, proptest-shrunk.
fn batch_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..=6).prop_flat_map(|pairs| {
        let n = 2 * pairs;
        (
            proptest::collection::vec(0..5i32, pairs)
                .prop_map(|ys| ys.into_iter().flat_map(|y| [y as f64, y as f64]).collect()),
            proptest::collection::vec(-3.0f64..3.0, n * (n - 1) / 2),
        )
    })
}

fn build_pm(labels: &[f64], sims: &[f64]) -> PairwiseMatrices {
    let n = labels.len();
    let label_mat = Array2::from_shape_vec((n, 1), labels.to_vec()).unwrap();
    let dist = label_distance_matrix(&label_mat, LabelDistanceKind::L1).unwrap();
    let mut sim = Array2::zeros((n, n));
    let mut it = sims.iter();
    for i in 0..n {
        for j in (i + 1)..n {
            let s = *it.next().unwrap();
            sim[[i, j]] = s;
            sim[[j, i]] = s;
        }
    }
    PairwiseMatrices::from_parts(sim, dist, 1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The fast sweep and the naive triple loop agree to 1e-9, and both
    /// stay nonnegative and above the analytic floor.
    #[test]
    fn fast_equals_naive_and_respects_floor((labels, sims) in batch_strategy()) {
        let pm = build_pm(&labels, &sims);
        let naive = supcr_loss_naive(&pm).unwrap();
        let fast = supcr_loss_fast(&pm).unwrap();
        prop_assert!((naive - fast).abs() < 1e-9, "naive {naive} fast {fast}");
        prop_assert!(naive >= 0.0);
        let floor = lower_bound(&distance_profile(&pm.label_dist).unwrap());
        prop_assert!(naive >= floor - 1e-12, "loss {naive} below floor {floor}");
    }

    /// Multiplicities of every anchor's tie groups account for all other
    /// rows exactly once.
    #[test]
    fn profile_multiplicities_sum((labels, _) in batch_strategy()) {
        let n = labels.len();
        let label_mat = Array2::from_shape_vec((n, 1), labels).unwrap();
        let dist = label_distance_matrix(&label_mat, LabelDistanceKind::L1).unwrap();
        let profile = distance_profile(&dist).unwrap();
        for groups in &profile.anchors {
            let total: usize = groups.iter().map(|g| g.members.len()).sum();
            prop_assert_eq!(total, n - 1);
        }
    }

    /// Similarity and distance matrices from embeddings are symmetric with
    /// zero distance diagonal, for every similarity kind.
    #[test]
    fn pairwise_matrices_are_symmetric(
        rows in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), 4..=8),
        kind in prop_oneof![
            Just(SimilarityKind::NegL1),
            Just(SimilarityKind::NegL2),
            Just(SimilarityKind::Cosine)
        ],
    ) {
        let n = rows.len() & !1; // even
        let mut flat = Vec::new();
        for row in rows.iter().take(n) {
            // keep vectors away from zero for the cosine domain
            flat.extend(row.iter().map(|v| v + 6.0));
        }
        let vectors = Array2::from_shape_vec((n, 3), flat).unwrap();
        let labels = Array2::from_shape_fn((n, 1), |(i, _)| (i / 2) as f64);
        let batch = TwoViewBatch {
            inputs: Array2::zeros((n, 1)),
            labels,
            source_indices: (0..n / 2).flat_map(|p| [p, p]).collect(),
        };
        let emb = EmbeddingBatch::new(vectors).unwrap();
        let pm = pairwise_matrices(&batch, &emb, kind, LabelDistanceKind::L1, 2.0).unwrap();
        for i in 0..n {
            prop_assert_eq!(pm.label_dist[[i, i]], 0.0);
            for j in 0..n {
                prop_assert_eq!(pm.sim[[i, j]], pm.sim[[j, i]]);
                prop_assert_eq!(pm.label_dist[[i, j]], pm.label_dist[[j, i]]);
            }
        }
    }

    /// Bin indices stay inside [0, num_bins) and view partners always
    /// share a bin.
    #[test]
    fn bins_in_range_and_partners_tied(
        pairs in 2usize..=8,
        num_bins in 2usize..=12,
        seed in 0u64..1000,
    ) {
        let mut rng = rng_stream(seed, 0);
        use rand::Rng;
        let labels: Vec<f64> = (0..pairs)
            .flat_map(|_| {
                let y = rng.gen_range(-10.0..110.0);
                [y, y]
            })
            .collect();
        let label_mat = Array2::from_shape_vec((2 * pairs, 1), labels).unwrap();
        let bins = bin_labels(&label_mat, num_bins, (0.0, 100.0)).unwrap();
        for b in &bins {
            prop_assert!(*b < num_bins);
        }
        for p in 0..pairs {
            prop_assert_eq!(bins[2 * p], bins[2 * p + 1]);
        }
    }

    /// Cosine annealing never increases along a schedule.
    #[test]
    fn cosine_schedule_monotone(total in 1usize..500, lr_base in 0.001f64..1.0) {
        let state = OptimizerState::new(0.9, 0.0, lr_base, lr_base * 0.01, total).unwrap();
        let mut prev = f64::INFINITY;
        for step in 0..=total {
            let lr = cosine_lr(step, &state);
            prop_assert!(lr <= prev + 1e-15);
            prev = lr;
        }
    }
}
