//! Train briefly, then export per-sample embeddings (plus labels) as CSV
//! for external visualization tools.
//!
//! Run with: cargo run --release --example export_embeddings

use std::fmt::Write as _;
use std::io::Write as _;

use supcr::data::{generate_synthetic_dataset, DatasetSpec, GeneratorKind};
use supcr::train::{train_encoder, TrainConfig};

fn main() -> supcr::Result<()> {
    let spec = DatasetSpec {
        kind: GeneratorKind::Norm,
        input_dim: 6,
        label_dim: 1,
        size: 300,
        noise: 0.05,
    };
    let dataset = generate_synthetic_dataset(&spec, 3)?;

    let config = TrainConfig {
        epochs_encoder: 40,
        batch_pairs: 25,
        hidden: vec![24],
        embedding_dim: 4,
        seed: 3,
        ..Default::default()
    };
    let run = train_encoder(&dataset, &config)?;
    let embeddings = run.encoder.infer(&dataset.features)?;

    let out_path = std::env::temp_dir().join("supcr_embeddings.csv");
    let mut out = std::io::BufWriter::new(std::fs::File::create(&out_path)?);
    let mut header = String::from("id");
    for j in 0..embeddings.ncols() {
        let _ = write!(header, ",e{j}");
    }
    for j in 0..dataset.label_dim() {
        let _ = write!(header, ",y{j}");
    }
    writeln!(out, "{header}")?;
    for i in 0..dataset.len() {
        let mut line = format!("{i}");
        for j in 0..embeddings.ncols() {
            let _ = write!(line, ",{:.16e}", embeddings[[i, j]]);
        }
        for j in 0..dataset.label_dim() {
            let _ = write!(line, ",{:.16e}", dataset.labels[[i, j]]);
        }
        writeln!(out, "{line}")?;
    }
    drop(out);
    println!("wrote {} embedding rows to {}", dataset.len(), out_path.display());
    println!("(the `supcr export-embeddings` subcommand does the same from a saved model)");
    Ok(())
}
