//! End-to-end exercises of the `supcr` binary: file formats, logs, exit
//! codes, and the fault-injection contract of the verification commands.

use std::path::{Path, PathBuf};
use std::process::Output;

use ndarray::Array2;

use supcr::data::rng_stream;
use supcr::model::{save_model, Mlp};

struct Workspace {
    dir: tempfile::TempDir,
    bin: &'static str,
}

impl Workspace {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().expect("tempdir"), bin: env!("CARGO_BIN_EXE_supcr") }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: String) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, text).expect("write");
        p
    }

    fn run(&self, args: &[&str]) -> Output {
        std::process::Command::new(self.bin)
            .args(args)
            .current_dir(self.dir.path())
            .output()
            .expect("spawn supcr")
    }

    fn run_ok(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert!(
            out.status.success(),
            "{args:?} exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8_lossy(&out.stdout).into_owned()
    }

    fn gen_config(&self, d_in: usize, size: usize, out: &Path) -> PathBuf {
        self.write(
            "gen.cfg",
            format!(
                "data.generator = linear\ndata.d_in = {d_in}\ndata.size = {size}\ndata.noise = 0.1\ndata.seed = 9\npaths.dataset = {}\n",
                out.display()
            ),
        )
    }
}

#[test]
fn gen_data_writes_expected_header_and_row_count() {
    let ws = Workspace::new();
    let csv = ws.path("data.csv");
    let cfg = ws.gen_config(8, 50, &csv);
    let stdout = ws.run_ok(&["gen-data", "--config", cfg.to_str().unwrap()]);
    assert!(stdout.contains("wrote 50 rows"), "{stdout}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 51); // header + rows
    assert_eq!(lines[0], "f0,f1,f2,f3,f4,f5,f6,f7,y0");
}

#[test]
fn train_logs_phases_and_reruns_reproduce_metrics() {
    let ws = Workspace::new();
    let csv = ws.path("data.csv");
    let gen = ws.gen_config(4, 80, &csv);
    ws.run_ok(&["gen-data", "--config", gen.to_str().unwrap()]);

    let train_cfg = ws.write(
        "train.cfg",
        format!(
            "paths.dataset = {}\npaths.model = {}\npaths.metrics = {}\ntrain.scheme = linear_probing\ntrain.epochs_encoder = 3\ntrain.epochs_predictor = 2\ntrain.batch_pairs = 8\ntrain.hidden = 8\ntrain.embedding_dim = 4\ntrain.seed = 3\n",
            csv.display(),
            ws.path("model.txt").display(),
            ws.path("metrics.json").display()
        ),
    );
    let stdout = ws.run_ok(&["train", "--config", train_cfg.to_str().unwrap()]);
    // two-phase log: encoder epochs, then predictor epochs
    assert!(stdout.contains("[encoder] epoch 1/3"), "{stdout}");
    assert!(stdout.contains("[encoder] epoch 3/3"), "{stdout}");
    assert!(stdout.contains("[predictor] epoch 2/2"), "{stdout}");
    let metrics_a = std::fs::read(ws.path("metrics.json")).unwrap();

    let stdout = ws.run_ok(&["train", "--config", train_cfg.to_str().unwrap()]);
    assert!(stdout.contains("[predictor]"));
    assert_eq!(metrics_a, std::fs::read(ws.path("metrics.json")).unwrap());

    // direct scheme logs a single joint phase
    let direct_cfg = ws.write(
        "direct.cfg",
        format!(
            "paths.dataset = {}\npaths.model = {}\npaths.metrics = {}\ntrain.scheme = direct\ntrain.epochs_encoder = 2\ntrain.batch_pairs = 8\ntrain.hidden = 8\ntrain.embedding_dim = 4\ntrain.seed = 3\n",
            csv.display(),
            ws.path("model2.txt").display(),
            ws.path("metrics2.json").display()
        ),
    );
    let stdout = ws.run_ok(&["train", "--config", direct_cfg.to_str().unwrap()]);
    assert!(stdout.contains("[joint] epoch 2/2"), "{stdout}");
    assert!(!stdout.contains("[predictor]"), "{stdout}");
}

#[test]
fn eval_reads_saved_model_and_writes_metrics() {
    let ws = Workspace::new();
    let csv = ws.path("data.csv");
    let gen = ws.gen_config(3, 60, &csv);
    ws.run_ok(&["gen-data", "--config", gen.to_str().unwrap()]);
    let train_cfg = ws.write(
        "train.cfg",
        format!(
            "paths.dataset = {}\npaths.model = {}\npaths.metrics = {}\ntrain.scheme = direct\ntrain.epochs_encoder = 2\ntrain.batch_pairs = 8\ntrain.hidden = 8\ntrain.embedding_dim = 4\ntrain.seed = 1\n",
            csv.display(),
            ws.path("model.txt").display(),
            ws.path("m1.json").display()
        ),
    );
    ws.run_ok(&["train", "--config", train_cfg.to_str().unwrap()]);

    let eval_cfg = ws.write(
        "eval.cfg",
        format!(
            "paths.model = {}\npaths.dataset = {}\npaths.metrics = {}\n",
            ws.path("model.txt").display(),
            csv.display(),
            ws.path("m2.json").display()
        ),
    );
    let stdout = ws.run_ok(&["eval", "--config", eval_cfg.to_str().unwrap()]);
    assert!(stdout.contains("\"mae\""), "{stdout}");
    let text = std::fs::read_to_string(ws.path("m2.json")).unwrap();
    assert!(text.contains("\"r2\"") && text.contains("\"spearman\""));
}

#[test]
fn export_embeddings_identity_encoder_reproduces_features() {
    let ws = Workspace::new();
    let csv = ws.path("data.csv");
    let gen = ws.gen_config(3, 20, &csv);
    ws.run_ok(&["gen-data", "--config", gen.to_str().unwrap()]);

    // identity encoder: single affine layer with unit weights, zero bias
    let mut encoder = Mlp::new(&[3, 3], &mut rng_stream(0, 0)).unwrap();
    encoder.layers[0].weight.assign(&Array2::eye(3));
    encoder.layers[0].bias.fill(0.0);
    save_model(&ws.path("model.txt"), &encoder, None).unwrap();

    let cfg = ws.write(
        "exp.cfg",
        format!(
            "paths.model = {}\npaths.dataset = {}\npaths.embeddings = {}\n",
            ws.path("model.txt").display(),
            csv.display(),
            ws.path("emb.csv").display()
        ),
    );
    let stdout = ws.run_ok(&["export-embeddings", "--config", cfg.to_str().unwrap()]);
    assert!(stdout.contains("wrote 20 rows"), "{stdout}");

    let data = std::fs::read_to_string(&csv).unwrap();
    let emb = std::fs::read_to_string(ws.path("emb.csv")).unwrap();
    let data_lines: Vec<&str> = data.lines().collect();
    let emb_lines: Vec<&str> = emb.lines().collect();
    assert_eq!(emb_lines.len(), 21);
    assert_eq!(emb_lines[0], "id,e0,e1,e2,y0");
    for (i, (d, e)) in data_lines[1..].iter().zip(emb_lines[1..].iter()).enumerate() {
        let feats: Vec<&str> = d.split(',').take(3).collect();
        let cols: Vec<&str> = e.split(',').collect();
        assert_eq!(cols[0], i.to_string());
        assert_eq!(&cols[1..4], feats.as_slice(), "embedding row {i} differs from features");
    }
}

#[test]
fn verify_theory_passes_and_faulty_loss_fails_with_exit_3() {
    let ws = Workspace::new();
    let cfg = ws.write(
        "verify.cfg",
        format!(
            "theory.seed = 7\ntheory.bound_batches = 300\ntheory.tightness_batches = 10\ntheory.delta_runs = 2\npaths.report = {}\n",
            ws.path("report.txt").display()
        ),
    );
    let stdout = ws.run_ok(&["verify-theory", "--config", cfg.to_str().unwrap()]);
    assert!(stdout.contains("overall: pass"), "{stdout}");
    let report = std::fs::read_to_string(ws.path("report.txt")).unwrap();
    for key in ["lower_bound:", "epsilon:", "gamma:", "delta:", "achieved_loss:"] {
        assert!(report.contains(key), "report missing `{key}`:\n{report}");
    }

    let out = ws.run(&[
        "verify-theory",
        "--config",
        cfg.to_str().unwrap(),
        "--inject-fault",
        "off-by-one-mask",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("lower_bound"), "stderr should name the bound violation: {stderr}");
}

#[test]
fn grad_check_passes_and_scaled_gradient_fails_with_exit_3() {
    let ws = Workspace::new();
    let cfg = ws.write("grad.cfg", "grad.seed = 3\ngrad.cases = 10\ngrad.mlp_cases = 2\n".into());
    let stdout = ws.run_ok(&["grad-check", "--config", cfg.to_str().unwrap()]);
    assert!(stdout.contains("overall: pass"), "{stdout}");

    let out = ws.run(&[
        "grad-check",
        "--config",
        cfg.to_str().unwrap(),
        "--inject-fault",
        "scaled-gradient",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("max_rel_err"));
}

#[test]
fn bench_prints_table_and_agrees() {
    let ws = Workspace::new();
    let cfg = ws.write("bench.cfg", "bench.sizes = 4,8,16\nbench.reps = 3\n".into());
    let stdout = ws.run_ok(&["bench", "--config", cfg.to_str().unwrap()]);
    assert!(stdout.contains("max|diff|"));
    assert!(stdout.lines().count() >= 4, "{stdout}");
}

#[test]
fn config_errors_exit_2_with_line_numbers() {
    let ws = Workspace::new();
    let cfg = ws.write(
        "bad.cfg",
        "data.generator = linear\ndata.unknown_knob = 3\npaths.dataset = out.csv\n".into(),
    );
    let out = ws.run(&["gen-data", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("unknown_knob") && stderr.contains("line 2"), "{stderr}");

    // missing input file is a runtime error, not a config error
    let cfg = ws.write(
        "eval.cfg",
        format!(
            "paths.model = {}\npaths.dataset = nope.csv\npaths.metrics = m.json\n",
            ws.path("missing_model.txt").display()
        ),
    );
    let out = ws.run(&["eval", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn seed_env_var_overrides_config() {
    let ws = Workspace::new();
    let csv = ws.path("data.csv");
    let cfg = ws.gen_config(3, 30, &csv);
    ws.run_ok(&["gen-data", "--config", cfg.to_str().unwrap()]);
    let baseline = std::fs::read(&csv).unwrap();

    let out = std::process::Command::new(ws.bin)
        .args(["gen-data", "--config", cfg.to_str().unwrap()])
        .env("SUPCR_SEED", "777")
        .current_dir(ws.dir.path())
        .output()
        .expect("spawn");
    assert!(out.status.success());
    let overridden = std::fs::read(&csv).unwrap();
    assert_ne!(baseline, overridden, "SUPCR_SEED should change the dataset");

    let out = std::process::Command::new(ws.bin)
        .args(["gen-data", "--config", cfg.to_str().unwrap()])
        .env("SUPCR_SEED", "not-a-number")
        .current_dir(ws.dir.path())
        .output()
        .expect("spawn");
    assert_eq!(out.status.code(), Some(2));
}
