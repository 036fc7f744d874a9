//! Evaluate the ranking loss on embeddings of increasing quality and watch
//! it approach its analytic floor.
//!
//! The floor depends only on the label tie structure:
//! `L* = 1/(2N(2N-1)) * sum n ln n` over each anchor's tie-group sizes.
//! Ordering the embeddings by label closes the gap; scrambling them widens
//! it. The fast path and the naive reference agree to 1e-9.
//!
//! Run with: cargo run --release --example loss_and_floor

use ndarray::Array2;
use supcr::loss::{supcr_loss_fast, supcr_loss_naive};
use supcr::pairwise::{
    label_distance_matrix, scaled_similarity_matrix, EmbeddingBatch, LabelDistanceKind,
    PairwiseMatrices, SimilarityKind,
};
use supcr::theory::{distance_profile, lower_bound};

fn loss_for(points: &[f64], dist: &Array2<f64>) -> supcr::Result<(f64, f64)> {
    let emb = EmbeddingBatch::new(Array2::from_shape_vec((points.len(), 1), points.to_vec()).unwrap())?;
    let sim = scaled_similarity_matrix(&emb, SimilarityKind::NegL2, 2.0)?;
    let pm = PairwiseMatrices::from_parts(sim, dist.clone(), 2.0)?;
    Ok((supcr_loss_naive(&pm)?, supcr_loss_fast(&pm)?))
}

fn main() -> supcr::Result<()> {
    // three view pairs with labels 0, 1, 4
    let labels = [0.0, 0.0, 1.0, 1.0, 4.0, 4.0];
    let label_mat = Array2::from_shape_vec((6, 1), labels.to_vec()).unwrap();
    let dist = label_distance_matrix(&label_mat, LabelDistanceKind::L1)?;
    let floor = lower_bound(&distance_profile(&dist)?);
    println!("labels: {labels:?}");
    println!("loss floor L* = {floor:.6}\n");

    let candidates: [(&str, [f64; 6]); 3] = [
        ("scrambled", [0.0, 5.0, 1.0, 7.0, 2.0, 9.0]),
        ("ordered", [0.0, 0.1, 1.0, 1.1, 4.0, 4.1]),
        ("ordered, widely spread", [0.0, 0.0, 30.0, 30.0, 120.0, 120.0]),
    ];
    println!("{:<24} {:>10} {:>10} {:>12}", "embedding", "naive", "fast", "excess");
    for (name, points) in candidates {
        let (naive, fast) = loss_for(&points, &dist)?;
        assert!((naive - fast).abs() < 1e-9);
        println!("{name:<24} {naive:>10.6} {fast:>10.6} {:>12.3e}", naive - floor);
    }
    Ok(())
}
