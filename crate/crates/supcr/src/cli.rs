//! Command-line front end: dataset generation, training, evaluation,
//! theory verification, gradient checking, embedding export, and a loss
//! micro-benchmark.
//!
//! Every command is a pure function of its config file, input files, and
//! seed; rerunning with the same inputs reproduces output files byte for
//! byte. The env var `SUPCR_SEED` overrides the config seed of any command.
//! Exit codes: 0 success, 2 configuration error, 3 verification failure,
//! 4 runtime or numeric error.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use ndarray::Array2;

use crate::config::FlatConfig;
use crate::data::{
    generate_synthetic_dataset, rng_stream, train_test_split, AugmentationSpec, Dataset,
    DatasetSpec, GeneratorKind,
};
use crate::error::{Error, Result};
use crate::loss::{supcr_loss_fast, supcr_loss_naive};
use crate::model::{load_model, save_model, RegressionLossKind};
use crate::pairwise::{label_distance_matrix, LabelDistanceKind, PairwiseMatrices, SimilarityKind};
use crate::train::{evaluate, train_full, EncoderLossKind, Scheme, TrainConfig};
use crate::verify::{
    random_symmetric_sim, random_tied_labels, run_grad_suite, run_theory_suite, FaultInjection,
    GradSettings, TheorySettings,
};

#[derive(Parser)]
#[command(
    name = "supcr",
    version,
    about = "Supervised contrastive regression toolkit",
    after_help = "The env var SUPCR_SEED overrides the config seed of any command."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic regression dataset CSV
    GenData {
        #[arg(long)]
        config: PathBuf,
    },
    /// Train encoder and predictor under a scheme; write model + metrics
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate a saved model on a dataset
    Eval {
        #[arg(long)]
        config: PathBuf,
    },
    /// Verify the ordering theory: bound, tightness, delta-ordering
    VerifyTheory {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Testing hook: run with a deliberately broken implementation
        #[arg(long, hide = true, value_name = "KIND")]
        inject_fault: Option<String>,
    },
    /// Check analytic gradients against central finite differences
    GradCheck {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Testing hook: run with a deliberately broken implementation
        #[arg(long, hide = true, value_name = "KIND")]
        inject_fault: Option<String>,
    },
    /// Export encoder embeddings for a dataset as CSV
    ExportEmbeddings {
        #[arg(long)]
        config: PathBuf,
    },
    /// Time the fast loss path against the naive reference
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Entry point for the `supcr` binary.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData { config } => cmd_gen_data(&mut FlatConfig::parse_file(&config)?),
        Command::Train { config } => cmd_train(&mut FlatConfig::parse_file(&config)?),
        Command::Eval { config } => cmd_eval(&mut FlatConfig::parse_file(&config)?),
        Command::VerifyTheory { config, inject_fault } => {
            let mut cfg = load_optional(config)?;
            cmd_verify_theory(&mut cfg, parse_fault(inject_fault)?)
        }
        Command::GradCheck { config, inject_fault } => {
            let mut cfg = load_optional(config)?;
            cmd_grad_check(&mut cfg, parse_fault(inject_fault)?)
        }
        Command::ExportEmbeddings { config } => {
            cmd_export_embeddings(&mut FlatConfig::parse_file(&config)?)
        }
        Command::Bench { config } => cmd_bench(&mut load_optional(config)?),
    }
}

fn load_optional(path: Option<PathBuf>) -> Result<FlatConfig> {
    match path {
        Some(p) => FlatConfig::parse_file(&p),
        None => Ok(FlatConfig::empty()),
    }
}

fn parse_fault(arg: Option<String>) -> Result<FaultInjection> {
    match arg {
        None => Ok(FaultInjection::None),
        Some(name) => FaultInjection::parse(&name),
    }
}

/// Config seed, unless `SUPCR_SEED` overrides it.
fn effective_seed(config_seed: u64) -> Result<u64> {
    match std::env::var("SUPCR_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("SUPCR_SEED=`{v}` is not an integer"))),
        Err(_) => Ok(config_seed),
    }
}

fn parse_generator(name: &str) -> Result<GeneratorKind> {
    match name {
        "linear" => Ok(GeneratorKind::Linear { weight: None, bias: None }),
        "norm" => Ok(GeneratorKind::Norm),
        "angular" => Ok(GeneratorKind::Angular),
        other => Err(Error::Config(format!(
            "unknown generator `{other}` (expected linear, norm, or angular)"
        ))),
    }
}

fn parse_similarity(name: &str) -> Result<SimilarityKind> {
    match name {
        "cosine" => Ok(SimilarityKind::Cosine),
        "neg_l1" => Ok(SimilarityKind::NegL1),
        "neg_l2" => Ok(SimilarityKind::NegL2),
        other => Err(Error::Config(format!(
            "unknown similarity `{other}` (expected cosine, neg_l1, or neg_l2)"
        ))),
    }
}

fn parse_label_distance(name: &str) -> Result<LabelDistanceKind> {
    match name {
        "l1" => Ok(LabelDistanceKind::L1),
        "angular" => Ok(LabelDistanceKind::Angular),
        other => {
            Err(Error::Config(format!("unknown label distance `{other}` (expected l1 or angular)")))
        }
    }
}

fn parse_scheme(name: &str) -> Result<Scheme> {
    match name {
        "linear_probing" => Ok(Scheme::LinearProbing),
        "fine_tuning" => Ok(Scheme::FineTuning),
        "regularization" => Ok(Scheme::Regularization),
        "direct" => Ok(Scheme::Direct),
        other => Err(Error::Config(format!("unknown scheme `{other}`"))),
    }
}

fn parse_encoder_loss(name: &str) -> Result<EncoderLossKind> {
    match name {
        "supcr" => Ok(EncoderLossKind::SupCR),
        "supcon" => Ok(EncoderLossKind::SupCon),
        "simclr" => Ok(EncoderLossKind::SimCLR),
        other => Err(Error::Config(format!("unknown encoder loss `{other}`"))),
    }
}

fn parse_regression_loss(name: &str, huber_beta: f64) -> Result<RegressionLossKind> {
    match name {
        "l1" => Ok(RegressionLossKind::L1),
        "mse" => Ok(RegressionLossKind::Mse),
        "huber" => Ok(RegressionLossKind::Huber { beta: huber_beta }),
        other => {
            Err(Error::Config(format!("unknown regression loss `{other}` (l1, mse, or huber)")))
        }
    }
}

fn cmd_gen_data(cfg: &mut FlatConfig) -> Result<()> {
    let kind = parse_generator(&cfg.str_or("data.generator", "linear"))?;
    let default_d_t = match kind {
        GeneratorKind::Angular => 2,
        _ => 1,
    };
    let spec = DatasetSpec {
        input_dim: cfg.usize_or("data.d_in", 16)?,
        label_dim: cfg.usize_or("data.d_t", default_d_t)?,
        size: cfg.usize_or("data.size", 1000)?,
        noise: cfg.f64_or("data.noise", 0.1)?,
        kind,
    };
    let seed = effective_seed(cfg.u64_or("data.seed", 42)?)?;
    let out = cfg.require_path("paths.dataset")?;
    cfg.finish()?;

    let dataset = generate_synthetic_dataset(&spec, seed)?;
    dataset.write_csv(&out)?;
    println!("wrote {} rows to {}", dataset.len(), out.display());
    Ok(())
}

fn read_train_config(cfg: &mut FlatConfig) -> Result<TrainConfig> {
    let huber_beta = cfg.f64_or("train.huber_beta", 1.0)?;
    let projection_dim = {
        let v = cfg.usize_or("train.projection_dim", 0)?;
        if v == 0 {
            None
        } else {
            Some(v)
        }
    };
    let augmentation = AugmentationSpec {
        gaussian_sigma: cfg.f64_or("aug.sigma", 0.1)?,
        dropout_prob: cfg.f64_or("aug.dropout", 0.1)?,
        scale_range: (cfg.f64_or("aug.scale_min", 0.9)?, cfg.f64_or("aug.scale_max", 1.1)?),
        feature_stds: None,
    };
    let config = TrainConfig {
        scheme: parse_scheme(&cfg.str_or("train.scheme", "linear_probing"))?,
        encoder_loss: parse_encoder_loss(&cfg.str_or("train.encoder_loss", "supcr"))?,
        regression_loss: parse_regression_loss(
            &cfg.str_or("train.regression_loss", "l1"),
            huber_beta,
        )?,
        temperature: cfg.f64_or("train.temperature", 2.0)?,
        lambda: cfg.f64_or("train.lambda", 1.0)?,
        epochs_encoder: cfg.usize_or("train.epochs_encoder", 200)?,
        epochs_predictor: cfg.usize_or("train.epochs_predictor", 100)?,
        batch_pairs: cfg.usize_or("train.batch_pairs", 64)?,
        sim_kind: parse_similarity(&cfg.str_or("train.similarity", "neg_l2"))?,
        dist_kind: parse_label_distance(&cfg.str_or("train.label_distance", "l1"))?,
        augmentation,
        seed: effective_seed(cfg.u64_or("train.seed", 42)?)?,
        num_bins: cfg.usize_or("train.num_bins", 10)?,
        hidden: cfg.usize_list_or("train.hidden", &[64, 64, 64])?,
        embedding_dim: cfg.usize_or("train.embedding_dim", 16)?,
        projection_dim,
        lr_base: cfg.f64_or("train.lr_base", 0.05)?,
        lr_min: cfg.f64_or("train.lr_min", 0.0)?,
        momentum: cfg.f64_or("train.momentum", 0.9)?,
        weight_decay: cfg.f64_or("train.weight_decay", 1e-4)?,
    };
    config.validate()?;
    Ok(config)
}

fn phase_names(scheme: Scheme) -> &'static [&'static str] {
    match scheme {
        Scheme::LinearProbing => &["encoder", "predictor"],
        Scheme::FineTuning => &["encoder", "fine-tune"],
        Scheme::Regularization | Scheme::Direct => &["joint"],
    }
}

fn cmd_train(cfg: &mut FlatConfig) -> Result<()> {
    let dataset_path = cfg.require_path("paths.dataset")?;
    let model_path = cfg.require_path("paths.model")?;
    let metrics_path = cfg.require_path("paths.metrics")?;
    let test_path = cfg.path_opt("paths.test_dataset");
    let test_fraction = cfg.f64_or("train.test_fraction", 0.2)?;
    let config = read_train_config(cfg)?;
    cfg.finish()?;

    let full = Dataset::read_csv(&dataset_path)?;
    let (train_set, test_set) = match test_path {
        Some(p) => (full, Dataset::read_csv(&p)?),
        None => train_test_split(&full, test_fraction, config.seed)?,
    };
    println!(
        "training scheme={} encoder_loss={} on {} samples ({} held out)",
        config.scheme.name(),
        config.encoder_loss.name(),
        train_set.len(),
        test_set.len()
    );

    let outcome = train_full(&train_set, &config)?;
    for (phase, losses) in phase_names(config.scheme).iter().zip(outcome.phase_losses.iter()) {
        for (epoch, loss) in losses.iter().enumerate() {
            let floor = outcome
                .encoder_floor
                .get(epoch)
                .filter(|_| *phase == "encoder" && config.encoder_loss == EncoderLossKind::SupCR)
                .map_or(String::new(), |f| format!(" floor {f:.6}"));
            println!("[{phase}] epoch {}/{} loss {loss:.6}{floor}", epoch + 1, losses.len());
        }
    }

    save_model(&model_path, &outcome.encoder, Some(&outcome.predictor))?;
    let metrics = evaluate(&outcome.encoder, &outcome.predictor, &test_set, config.dist_kind)?;
    let json = metrics.to_json();
    std::fs::write(&metrics_path, format!("{json}\n"))?;
    println!("{json}");
    println!("model written to {}", model_path.display());
    Ok(())
}

fn cmd_eval(cfg: &mut FlatConfig) -> Result<()> {
    let model_path = cfg.require_path("paths.model")?;
    let dataset_path = cfg.require_path("paths.dataset")?;
    let metrics_path = cfg.require_path("paths.metrics")?;
    let dist_kind = parse_label_distance(&cfg.str_or("eval.label_distance", "l1"))?;
    cfg.finish()?;

    let (encoder, predictor) = load_model(&model_path)?;
    let predictor = predictor.ok_or_else(|| {
        Error::Domain(format!("{}: model has no predictor section", model_path.display()))
    })?;
    let dataset = Dataset::read_csv(&dataset_path)?;
    let metrics = evaluate(&encoder, &predictor, &dataset, dist_kind)?;
    let json = metrics.to_json();
    std::fs::write(&metrics_path, format!("{json}\n"))?;
    println!("{json}");
    Ok(())
}

fn write_report(path: Option<PathBuf>, text: &str) -> Result<()> {
    if let Some(p) = path {
        std::fs::write(&p, text)?;
        println!("report written to {}", p.display());
    }
    Ok(())
}

fn cmd_verify_theory(cfg: &mut FlatConfig, fault: FaultInjection) -> Result<()> {
    let settings = TheorySettings {
        seed: effective_seed(cfg.u64_or("theory.seed", 42)?)?,
        bound_batches: cfg.usize_or("theory.bound_batches", 10_000)?,
        tightness_batches: cfg.usize_or("theory.tightness_batches", 100)?,
        delta_runs: cfg.usize_or("theory.delta_runs", 10)?,
        optimizer: crate::theory::OptimizeOptions {
            max_steps: cfg.usize_or("theory.max_steps", 300_000)?,
            ..Default::default()
        },
        ..Default::default()
    };
    let report_path = cfg.path_opt("paths.report");
    cfg.finish()?;

    let report = run_theory_suite(&settings, fault)?;
    let text = report.to_text();
    print!("{text}");
    write_report(report_path, &text)?;
    if report.pass {
        Ok(())
    } else {
        let failure = report.first_failure().expect("failed report has a failing case");
        Err(Error::Verification(format!("{}: {}", failure.name, failure.detail)))
    }
}

fn cmd_grad_check(cfg: &mut FlatConfig, fault: FaultInjection) -> Result<()> {
    let settings = GradSettings {
        seed: effective_seed(cfg.u64_or("grad.seed", 42)?)?,
        cases_per_kind: cfg.usize_or("grad.cases", 100)?,
        mlp_cases: cfg.usize_or("grad.mlp_cases", 10)?,
        ..Default::default()
    };
    let report_path = cfg.path_opt("paths.report");
    cfg.finish()?;

    let report = run_grad_suite(&settings, fault)?;
    let text = report.to_text();
    print!("{text}");
    write_report(report_path, &text)?;
    if report.pass {
        Ok(())
    } else {
        let failure = report.first_failure().expect("failed report has a failing case");
        Err(Error::Verification(format!("{}: {}", failure.name, failure.detail)))
    }
}

fn cmd_export_embeddings(cfg: &mut FlatConfig) -> Result<()> {
    let model_path = cfg.require_path("paths.model")?;
    let dataset_path = cfg.require_path("paths.dataset")?;
    let out_path = cfg.require_path("paths.embeddings")?;
    cfg.finish()?;

    let (encoder, _) = load_model(&model_path)?;
    let dataset = Dataset::read_csv(&dataset_path)?;
    let embeddings = encoder.infer(&dataset.features)?;

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
    println!("wrote {} rows to {}", dataset.len(), out_path.display());
    Ok(())
}

fn cmd_bench(cfg: &mut FlatConfig) -> Result<()> {
    let sizes = cfg.usize_list_or("bench.sizes", &[4, 8, 16, 32, 64, 128])?;
    let reps = cfg.usize_or("bench.reps", 20)?.max(1);
    let seed = effective_seed(cfg.u64_or("bench.seed", 42)?)?;
    cfg.finish()?;

    println!("{:>6} {:>12} {:>12} {:>9} {:>12}", "rows", "naive", "fast", "speedup", "max|diff|");
    let mut rng = rng_stream(seed, 900);
    for &rows in &sizes {
        if rows < 4 || rows % 2 != 0 {
            return Err(Error::Config(format!("bench sizes must be even and >= 4, got {rows}")));
        }
        let pairs = rows / 2;
        let labels = random_tied_labels(&mut rng, pairs, 6);
        let dist = label_distance_matrix(
            &Array2::from_shape_vec((rows, 1), labels).expect("shape"),
            LabelDistanceKind::L1,
        )?;
        let sim = random_symmetric_sim(&mut rng, rows, -3.0, 3.0);
        let pm = PairwiseMatrices::from_parts(sim, dist, 1.0)?;

        let start = Instant::now();
        let mut naive_value = 0.0;
        for _ in 0..reps {
            naive_value = supcr_loss_naive(&pm)?;
        }
        let naive_time = start.elapsed().as_secs_f64() / reps as f64;

        let start = Instant::now();
        let mut fast_value = 0.0;
        for _ in 0..reps {
            fast_value = supcr_loss_fast(&pm)?;
        }
        let fast_time = start.elapsed().as_secs_f64() / reps as f64;

        let diff = (naive_value - fast_value).abs();
        println!(
            "{rows:>6} {:>10.3}us {:>10.3}us {:>8.1}x {diff:>12.3e}",
            naive_time * 1e6,
            fast_time * 1e6,
            naive_time / fast_time.max(1e-12),
        );
        if diff >= 1e-9 {
            return Err(Error::Verification(format!(
                "fast/naive disagree at {rows} rows: |diff| = {diff:.3e}"
            )));
        }
    }
    Ok(())
}
