//! Side-by-side run of the encoder objectives and the direct baseline on
//! one synthetic dataset: ranking loss vs class-binned SupCon vs NT-Xent
//! (all linear probing) vs direct L1 regression.
//!
//! The spearman column measures how well pairwise embedding distances
//! track pairwise label distances on the test set.
//!
//! Run with: cargo run --release --example baseline_comparison

use supcr::data::{generate_synthetic_dataset, train_test_split, DatasetSpec, GeneratorKind};
use supcr::model::RegressionLossKind;
use supcr::pairwise::LabelDistanceKind;
use supcr::train::{evaluate, train_full, EncoderLossKind, Scheme, TrainConfig};

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

    let base = TrainConfig {
        epochs_encoder: 60,
        epochs_predictor: 60,
        batch_pairs: 32,
        hidden: vec![32, 32],
        embedding_dim: 8,
        seed: 42,
        ..Default::default()
    };

    let setups: Vec<(&str, TrainConfig)> = vec![
        ("ranking loss (probe)", base.clone()),
        (
            "supcon bins (probe)",
            TrainConfig { encoder_loss: EncoderLossKind::SupCon, ..base.clone() },
        ),
        (
            "nt-xent (probe)",
            TrainConfig { encoder_loss: EncoderLossKind::SimCLR, ..base.clone() },
        ),
        (
            "direct l1",
            TrainConfig {
                scheme: Scheme::Direct,
                regression_loss: RegressionLossKind::L1,
                ..base.clone()
            },
        ),
    ];

    println!("{:<22} {:>8} {:>8} {:>10}", "setup", "mae", "r2", "spearman");
    for (name, config) in setups {
        let outcome = train_full(&train, &config)?;
        let m = evaluate(&outcome.encoder, &outcome.predictor, &test, LabelDistanceKind::L1)?;
        println!("{name:<22} {:>8.4} {:>8.4} {:>10.4}", m.mae, m.r2, m.spearman);
    }
    Ok(())
}
