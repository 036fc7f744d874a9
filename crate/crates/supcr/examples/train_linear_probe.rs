//! The two-stage pipeline on synthetic data: pretrain an encoder with the
//! ranking loss, freeze it, fit a linear predictor on top, and evaluate.
//!
//! Run with: cargo run --release --example train_linear_probe

use supcr::data::{generate_synthetic_dataset, train_test_split, DatasetSpec, GeneratorKind};
use supcr::pairwise::LabelDistanceKind;
use supcr::train::{evaluate, train_full, TrainConfig};

fn main() -> supcr::Result<()> {
    let spec = DatasetSpec {
        kind: GeneratorKind::Linear { weight: None, bias: None },
        input_dim: 8,
        label_dim: 1,
        size: 600,
        noise: 0.1,
    };
    let dataset = generate_synthetic_dataset(&spec, 42)?;
    let (train, test) = train_test_split(&dataset, 0.2, 42)?;
    println!("{} train / {} test samples", train.len(), test.len());

    let config = TrainConfig {
        epochs_encoder: 60,
        epochs_predictor: 60,
        batch_pairs: 32,
        hidden: vec![32, 32],
        embedding_dim: 8,
        seed: 42,
        ..Default::default()
    };
    let outcome = train_full(&train, &config)?;

    let encoder_losses = &outcome.phase_losses[0];
    println!(
        "encoder loss: {:.4} (epoch 1) -> {:.4} (epoch {}), batch floor ~{:.4}",
        encoder_losses[0],
        encoder_losses.last().unwrap(),
        encoder_losses.len(),
        outcome.encoder_floor.last().unwrap()
    );
    let predictor_losses = &outcome.phase_losses[1];
    println!(
        "predictor loss: {:.4} -> {:.4}",
        predictor_losses[0],
        predictor_losses.last().unwrap()
    );

    let metrics = evaluate(&outcome.encoder, &outcome.predictor, &test, LabelDistanceKind::L1)?;
    println!("\ntest metrics:\n{}", metrics.to_json());
    Ok(())
}
