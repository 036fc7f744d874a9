//! Compare the analytic loss gradient against central finite differences,
//! both directly on embeddings and end to end through a small encoder.
//!
//! Run with: cargo run --release --example gradient_check

use supcr::data::rng_stream;
use supcr::loss::supcr_loss_grad;
use supcr::pairwise::{LabelDistanceKind, SimilarityKind};
use supcr::verify::{
    fd_embedding_grad, max_rel_error, mlp_supcr_analytic_grad, mlp_supcr_fd_grad,
    random_loss_case,
};
use supcr::model::Mlp;

fn main() -> supcr::Result<()> {
    let mut rng = rng_stream(2024, 0);
    let h = 1e-5;

    println!("{:<10} {:>14}", "similarity", "max rel err");
    for kind in [SimilarityKind::NegL2, SimilarityKind::NegL1, SimilarityKind::Cosine] {
        let (batch, emb) = random_loss_case(&mut rng, 5, 4, 1e-2);
        let out = supcr_loss_grad(&batch, &emb, kind, LabelDistanceKind::L1, 2.0)?;
        let analytic = out.grad.expect("gradient requested");
        let fd = fd_embedding_grad(&batch, &emb, kind, LabelDistanceKind::L1, 2.0, h)?;
        println!("{:<10} {:>14.3e}", kind.name(), max_rel_error(&analytic, &fd, 1e-6));
    }

    // chain through a 3 -> 8 -> 4 encoder
    let (mut batch, _) = random_loss_case(&mut rng, 4, 1, 1e-2);
    batch.inputs = ndarray::Array2::from_shape_fn((8, 3), |(i, j)| ((i * 3 + j) as f64 * 0.61).sin());
    let encoder = Mlp::new(&[3, 8, 4], &mut rng_stream(2024, 1))?;
    let (value, analytic) =
        mlp_supcr_analytic_grad(&encoder, &batch, SimilarityKind::NegL2, LabelDistanceKind::L1, 2.0)?;
    let fd = mlp_supcr_fd_grad(&encoder, &batch, SimilarityKind::NegL2, LabelDistanceKind::L1, 2.0, h)?;
    let max_rel = analytic
        .iter()
        .zip(fd.iter())
        .map(|(a, f)| (a - f).abs() / a.abs().max(f.abs()).max(1e-6))
        .fold(0.0f64, f64::max);
    println!("\nencoder chain: loss {value:.6}, {} params, max rel err {max_rel:.3e}", analytic.len());
    Ok(())
}
