//! Executable verification suites: finite-difference checks for the
//! analytic gradients and an empirical walk through the ordering theory
//! (bound, tightness of the bound, delta-ordering near the bound).
//!
//! Both suites support deliberate fault injection so their failure paths
//! stay honest: a loss with an off-by-one denominator mask must trip the
//! bound checks, and a scaled gradient must trip the derivative checks.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::data::{rng_stream, TwoViewBatch};
use crate::error::{Error, Result};
use crate::loss::{supcr_loss_fast, supcr_loss_grad, supcr_loss_naive};
use crate::model::{Mlp, MlpGrads};
use crate::pairwise::{
    anchor_distance_groups, group_ranks, label_distance_matrix, pairwise_matrices,
    EmbeddingBatch, LabelDistanceKind, PairwiseMatrices, SimilarityKind,
};
use crate::theory::{
    distance_profile, lower_bound, optimize_for_delta, tight_embeddings_1d, tight_similarities,
    OptimizeOptions,
};

/// Deliberate defects for exercising verification failure paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultInjection {
    None,
    /// Evaluate the loss with a strict `>` denominator mask, dropping every
    /// tie group. Tied batches then dip below the analytic floor.
    OffByOneMask,
    /// Scale the analytic gradient by 1.001 before comparing.
    ScaledGradient,
}

impl FaultInjection {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "none" => Ok(FaultInjection::None),
            "off-by-one-mask" => Ok(FaultInjection::OffByOneMask),
            "scaled-gradient" => Ok(FaultInjection::ScaledGradient),
            other => Err(Error::Config(format!(
                "unknown fault `{other}` (expected off-by-one-mask or scaled-gradient)"
            ))),
        }
    }
}

/// Loss evaluation routed through the fault hook.
pub fn loss_with_fault(pm: &PairwiseMatrices, fault: FaultInjection) -> Result<f64> {
    if fault != FaultInjection::OffByOneMask {
        return supcr_loss_fast(pm);
    }
    // strict comparison: each candidate is contrasted only against strictly
    // farther rows, so its own term vanishes from the denominator
    let n = pm.num_rows();
    let mut total = 0.0;
    for i in 0..n {
        let groups = anchor_distance_groups(pm.label_dist.row(i), i);
        let ranks = group_ranks(&groups, n, i);
        for j in 0..n {
            if j == i {
                continue;
            }
            let mut max = f64::NEG_INFINITY;
            for k in 0..n {
                if k != i && ranks[k] > ranks[j] {
                    max = max.max(pm.sim[[i, k]]);
                }
            }
            if max == f64::NEG_INFINITY {
                continue; // empty denominator under the faulty mask
            }
            let mut sum = 0.0;
            for k in 0..n {
                if k != i && ranks[k] > ranks[j] {
                    sum += (pm.sim[[i, k]] - max).exp();
                }
            }
            total += max + sum.ln() - pm.sim[[i, j]];
        }
    }
    Ok(total / (n * (n - 1)) as f64)
}

/// Random duplicated labels with deliberate exact ties: each of `pairs`
/// source samples draws an integer label below `distinct`.
pub fn random_tied_labels(rng: &mut ChaCha8Rng, pairs: usize, distinct: usize) -> Vec<f64> {
    (0..pairs)
        .flat_map(|_| {
            let y = rng.gen_range(0..distinct.max(1)) as f64;
            [y, y]
        })
        .collect()
}

/// Symmetric similarity matrix with entries drawn uniformly from
/// `[lo, hi)` and a zero diagonal.
pub fn random_symmetric_sim(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Array2<f64> {
    let mut sim = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let s = rng.gen_range(lo..hi);
            sim[[i, j]] = s;
            sim[[j, i]] = s;
        }
    }
    sim
}

/// Two-view batch with tied integer labels plus embeddings whose rows stay
/// coordinate-separated by `separation` (keeps L1/L2 partials smooth).
pub fn random_loss_case(
    rng: &mut ChaCha8Rng,
    pairs: usize,
    embed_dim: usize,
    separation: f64,
) -> (TwoViewBatch, EmbeddingBatch) {
    let n = 2 * pairs;
    let labels = random_tied_labels(rng, pairs, 5);
    let batch = TwoViewBatch {
        inputs: Array2::zeros((n, 1)),
        labels: Array2::from_shape_vec((n, 1), labels).expect("shape"),
        source_indices: (0..pairs).flat_map(|p| [p, p]).collect(),
    };
    let vectors = loop {
        let v: Array2<f64> = Array2::from_shape_fn((n, embed_dim), |_| rng.gen_range(-2.0..2.0));
        let mut ok = true;
        'outer: for a in 0..n {
            for b in (a + 1)..n {
                for t in 0..embed_dim {
                    if (v[[a, t]] - v[[b, t]]).abs() < separation {
                        ok = false;
                        break 'outer;
                    }
                }
            }
        }
        if ok {
            break v;
        }
    };
    (batch, EmbeddingBatch::new(vectors).expect("finite"))
}

/// Central finite differences of the loss with respect to the embeddings,
/// evaluated through the naive reference path.
pub fn fd_embedding_grad(
    batch: &TwoViewBatch,
    emb: &EmbeddingBatch,
    sim_kind: SimilarityKind,
    dist_kind: LabelDistanceKind,
    temperature: f64,
    h: f64,
) -> Result<Array2<f64>> {
    let mut grad = Array2::zeros(emb.vectors.dim());
    for i in 0..emb.num_rows() {
        for t in 0..emb.dim() {
            let mut plus = emb.vectors.clone();
            plus[[i, t]] += h;
            let mut minus = emb.vectors.clone();
            minus[[i, t]] -= h;
            let lp = supcr_loss_naive(&pairwise_matrices(
                batch,
                &EmbeddingBatch::new(plus)?,
                sim_kind,
                dist_kind,
                temperature,
            )?)?;
            let lm = supcr_loss_naive(&pairwise_matrices(
                batch,
                &EmbeddingBatch::new(minus)?,
                sim_kind,
                dist_kind,
                temperature,
            )?)?;
            grad[[i, t]] = (lp - lm) / (2.0 * h);
        }
    }
    Ok(grad)
}

/// Largest relative deviation between two gradients, with a small floor so
/// genuinely-zero entries compare by absolute error.
pub fn max_rel_error(a: &Array2<f64>, b: &Array2<f64>, floor: f64) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

fn flat_grads(grads: &MlpGrads) -> Vec<f64> {
    let mut out = Vec::new();
    for s in grads.slices() {
        out.extend_from_slice(s);
    }
    out
}

/// Analytic gradient of the ranking loss with respect to every encoder
/// parameter, chained through manual backprop.
pub fn mlp_supcr_analytic_grad(
    mlp: &Mlp,
    batch: &TwoViewBatch,
    sim_kind: SimilarityKind,
    dist_kind: LabelDistanceKind,
    temperature: f64,
) -> Result<(f64, Vec<f64>)> {
    let (out, cache) = mlp.forward(&batch.inputs)?;
    let emb = EmbeddingBatch::new(out)?;
    let loss = supcr_loss_grad(batch, &emb, sim_kind, dist_kind, temperature)?;
    let (grads, _) = mlp.backward(&cache, &loss.grad.expect("gradient requested"))?;
    Ok((loss.value, flat_grads(&grads)))
}

/// Central finite differences of the same quantity, via the naive loss.
pub fn mlp_supcr_fd_grad(
    mlp: &Mlp,
    batch: &TwoViewBatch,
    sim_kind: SimilarityKind,
    dist_kind: LabelDistanceKind,
    temperature: f64,
    h: f64,
) -> Result<Vec<f64>> {
    let mut work = mlp.clone();
    let loss_of = |m: &Mlp| -> Result<f64> {
        let out = m.infer(&batch.inputs)?;
        supcr_loss_naive(&pairwise_matrices(
            batch,
            &EmbeddingBatch::new(out)?,
            sim_kind,
            dist_kind,
            temperature,
        )?)
    };
    let num_params = mlp.num_params();
    let mut grad = Vec::with_capacity(num_params);
    for p in 0..num_params {
        let original = {
            let mut slices = work.param_slices_mut();
            let (tensor, offset) = locate_param(&mut slices, p);
            let orig = tensor[offset];
            tensor[offset] = orig + h;
            orig
        };
        let lp = loss_of(&work)?;
        {
            let mut slices = work.param_slices_mut();
            let (tensor, offset) = locate_param(&mut slices, p);
            tensor[offset] = original - h;
        }
        let lm = loss_of(&work)?;
        {
            let mut slices = work.param_slices_mut();
            let (tensor, offset) = locate_param(&mut slices, p);
            tensor[offset] = original;
        }
        grad.push((lp - lm) / (2.0 * h));
    }
    Ok(grad)
}

fn locate_param<'a>(slices: &'a mut [&mut [f64]], mut index: usize) -> (&'a mut [f64], usize) {
    for s in slices.iter_mut() {
        if index < s.len() {
            return (s, index);
        }
        index -= s.len();
    }
    panic!("parameter index out of range");
}

/// One verified statement inside a suite report.
#[derive(Debug, Clone)]
pub struct CaseReport {
    pub name: String,
    pub lower_bound: Option<f64>,
    pub epsilon: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub achieved_loss: Option<f64>,
    pub is_delta_ordered: Option<bool>,
    pub pass: bool,
    pub detail: String,
}

impl CaseReport {
    fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            lower_bound: None,
            epsilon: None,
            gamma: None,
            delta: None,
            achieved_loss: None,
            is_delta_ordered: None,
            pass: false,
            detail: String::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub title: String,
    pub seed: u64,
    pub cases: Vec<CaseReport>,
    pub pass: bool,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| format!("{x:.16e}"))
}

impl SuiteReport {
    /// `key: value` serialization, 17 significant digits throughout.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("report: {}\n", self.title));
        out.push_str(&format!("seed: {}\n", self.seed));
        for case in &self.cases {
            out.push_str(&format!("case: {}\n", case.name));
            out.push_str(&format!("  lower_bound: {}\n", fmt_opt(case.lower_bound)));
            out.push_str(&format!("  epsilon: {}\n", fmt_opt(case.epsilon)));
            out.push_str(&format!("  gamma: {}\n", fmt_opt(case.gamma)));
            out.push_str(&format!("  delta: {}\n", fmt_opt(case.delta)));
            out.push_str(&format!("  achieved_loss: {}\n", fmt_opt(case.achieved_loss)));
            out.push_str(&format!(
                "  is_delta_ordered: {}\n",
                case.is_delta_ordered.map_or_else(|| "none".to_string(), |b| b.to_string())
            ));
            out.push_str(&format!("  pass: {}\n", case.pass));
            if !case.detail.is_empty() {
                out.push_str(&format!("  detail: {}\n", case.detail));
            }
        }
        out.push_str(&format!("overall: {}\n", if self.pass { "pass" } else { "fail" }));
        out
    }

    pub fn first_failure(&self) -> Option<&CaseReport> {
        self.cases.iter().find(|c| !c.pass)
    }
}

/// Knobs for the theory suite.
#[derive(Debug, Clone)]
pub struct TheorySettings {
    pub seed: u64,
    /// Random batches for the bound check.
    pub bound_batches: usize,
    /// Random batches per epsilon for the tightness check.
    pub tightness_batches: usize,
    pub epsilons: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Descent runs per delta.
    pub delta_runs: usize,
    pub optimizer: OptimizeOptions,
}

impl Default for TheorySettings {
    fn default() -> Self {
        Self {
            seed: 42,
            bound_batches: 10_000,
            tightness_batches: 100,
            epsilons: vec![0.1, 0.01, 0.001],
            deltas: vec![0.3, 0.5, 0.9],
            delta_runs: 10,
            optimizer: OptimizeOptions::default(),
        }
    }
}

/// Bound, tightness, delta-ordering, and the degenerate equality, end to
/// end on randomized batches.
pub fn run_theory_suite(settings: &TheorySettings, fault: FaultInjection) -> Result<SuiteReport> {
    let mut cases = Vec::new();

    // Statement 1: the loss never dips below the floor, and sits strictly
    // above it whenever some anchor sees two distance groups.
    {
        let mut case = CaseReport::new(format!(
            "lower_bound_random_batches_x{}",
            settings.bound_batches
        ));
        let mut rng = rng_stream(settings.seed, 100);
        let mut min_excess = f64::INFINITY;
        let mut worst: Option<(f64, f64)> = None;
        let mut violations = 0usize;
        for _ in 0..settings.bound_batches {
            let pairs = rng.gen_range(2..=8);
            let n = 2 * pairs;
            let labels = random_tied_labels(&mut rng, pairs, 4);
            let dist = label_distance_matrix(
                &Array2::from_shape_vec((n, 1), labels).expect("shape"),
                LabelDistanceKind::L1,
            )?;
            let sim = random_symmetric_sim(&mut rng, n, -3.0, 3.0);
            let pm = PairwiseMatrices::from_parts(sim, dist.clone(), 1.0)?;
            let profile = distance_profile(&dist)?;
            let floor = lower_bound(&profile);
            let value = loss_with_fault(&pm, fault)?;
            let excess = value - floor;
            if excess < min_excess {
                min_excess = excess;
                worst = Some((value, floor));
            }
            let multi_group = profile.anchors.iter().any(|g| g.len() >= 2);
            if excess < -1e-12 || (multi_group && excess <= 0.0) {
                violations += 1;
            }
        }
        let (value, floor) = worst.unwrap_or((0.0, 0.0));
        case.lower_bound = Some(floor);
        case.achieved_loss = Some(value);
        case.pass = violations == 0;
        case.detail = format!("min_excess={min_excess:.16e} violations={violations}");
        cases.push(case);
    }

    // Statement 2: both tight constructions land in [floor, floor + eps).
    for &eps in &settings.epsilons {
        let mut case = CaseReport::new(format!("tightness_eps_{eps}"));
        let mut rng = rng_stream(settings.seed, 200);
        let mut worst_excess = f64::NEG_INFINITY;
        let mut failures = 0usize;
        let mut last = (0.0, 0.0);
        let mut gamma = None;
        for _ in 0..settings.tightness_batches {
            let pairs = rng.gen_range(2..=16);
            let labels = random_tied_labels(&mut rng, pairs, 6);
            let n = labels.len();
            let dist = label_distance_matrix(
                &Array2::from_shape_vec((n, 1), labels.clone()).expect("shape"),
                LabelDistanceKind::L1,
            )?;
            let profile = distance_profile(&dist)?;
            let floor = lower_bound(&profile);
            gamma = Some(crate::theory::tightness_gap(&profile, eps));

            let sim = tight_similarities(&profile, eps)?;
            let value = loss_with_fault(&PairwiseMatrices::from_parts(sim, dist.clone(), 1.0)?, fault)?;
            if !(value >= floor - 1e-12 && value < floor + eps) {
                failures += 1;
            }
            worst_excess = worst_excess.max(value - floor);
            last = (value, floor);

            let emb = tight_embeddings_1d(&labels, eps, 1.0)?;
            let sim2 = crate::pairwise::scaled_similarity_matrix(&emb, SimilarityKind::NegL2, 1.0)?;
            let value2 =
                loss_with_fault(&PairwiseMatrices::from_parts(sim2, dist.clone(), 1.0)?, fault)?;
            if !(value2 >= floor - 1e-12 && value2 < floor + eps) {
                failures += 1;
            }
            worst_excess = worst_excess.max(value2 - floor);
        }
        case.lower_bound = Some(last.1);
        case.epsilon = Some(eps);
        case.gamma = gamma;
        case.achieved_loss = Some(last.0);
        case.pass = failures == 0;
        case.detail = format!("worst_excess={worst_excess:.16e} failures={failures}");
        cases.push(case);
    }

    // Statement 3: descending below the delta threshold forces ordering.
    for &delta in &settings.deltas {
        let mut case = CaseReport::new(format!("delta_ordering_{delta}"));
        let mut rng = rng_stream(settings.seed, 300);
        let mut successes = 0usize;
        let mut ordered = 0usize;
        let mut bound_ok = true;
        let mut last_eps = None;
        let mut last_gamma = None;
        let mut last = (0.0, 0.0);
        let mut last_stats = crate::theory::OrderingStats::default();
        for _ in 0..settings.delta_runs {
            let pairs = rng.gen_range(2..=8);
            let labels = random_tied_labels(&mut rng, pairs, 4);
            let n = labels.len();
            let dist = label_distance_matrix(
                &Array2::from_shape_vec((n, 1), labels).expect("shape"),
                LabelDistanceKind::L1,
            )?;
            let (sim, report, is_ordered) = optimize_for_delta(&dist, delta, &settings.optimizer)?;
            last = (report.achieved_loss, report.lower_bound);
            last_eps = Some(report.epsilon);
            last_gamma = Some(report.gamma);
            last_stats = report.stats;
            if report.converged {
                successes += 1;
                if is_ordered {
                    ordered += 1;
                }
                // the achieved loss must still respect the bound under the
                // (possibly faulty) evaluation hook
                let value =
                    loss_with_fault(&PairwiseMatrices::from_parts(sim, dist.clone(), 1.0)?, fault)?;
                if value < report.lower_bound - 1e-12 {
                    bound_ok = false;
                }
            }
        }
        case.lower_bound = Some(last.1);
        case.epsilon = last_eps;
        case.gamma = last_gamma;
        case.delta = Some(delta);
        case.achieved_loss = Some(last.0);
        case.is_delta_ordered = Some(successes > 0 && ordered == successes);
        let success_rate = successes as f64 / settings.delta_runs.max(1) as f64;
        case.pass = bound_ok && ordered == successes && success_rate >= 0.9;
        // raw gap statistics of the last run, so readers can see how far a
        // practical matrix sits from the formal thresholds
        let gap = last_stats.min_cross_gap.map_or_else(|| "none".into(), |g| format!("{g:.3e}"));
        let spread =
            last_stats.max_within_spread.map_or_else(|| "none".into(), |s| format!("{s:.3e}"));
        case.detail = format!(
            "runs={} converged={successes} ordered={ordered} bound_ok={bound_ok} last_min_cross_gap={gap} last_max_tie_spread={spread}",
            settings.delta_runs
        );
        cases.push(case);
    }

    // Statement 4: with one global tie group and equal similarities the
    // loss equals ln(2N-1), the floor, exactly.
    {
        let mut case = CaseReport::new("degenerate_equal_labels");
        let n = 6;
        let dist = Array2::zeros((n, n));
        let sim = Array2::zeros((n, n));
        let pm = PairwiseMatrices::from_parts(sim, dist.clone(), 1.0)?;
        let value = loss_with_fault(&pm, fault)?;
        let floor = lower_bound(&distance_profile(&dist)?);
        let expected = ((n - 1) as f64).ln();
        case.lower_bound = Some(floor);
        case.achieved_loss = Some(value);
        case.pass = (value - expected).abs() <= 1e-12 && (value - floor).abs() <= 1e-12;
        case.detail = format!("expected=ln({})={expected:.16e}", n - 1);
        cases.push(case);
    }

    let pass = cases.iter().all(|c| c.pass);
    Ok(SuiteReport { title: "ordering theory verification".into(), seed: settings.seed, cases, pass })
}

/// Knobs for the gradient suite.
#[derive(Debug, Clone)]
pub struct GradSettings {
    pub seed: u64,
    /// Random configurations per similarity kind.
    pub cases_per_kind: usize,
    /// End-to-end encoder configurations.
    pub mlp_cases: usize,
    pub loss_tolerance: f64,
    pub mlp_tolerance: f64,
}

impl Default for GradSettings {
    fn default() -> Self {
        Self {
            seed: 42,
            cases_per_kind: 100,
            mlp_cases: 10,
            loss_tolerance: 1e-4,
            mlp_tolerance: 1e-3,
        }
    }
}

/// Finite-difference comparison for the loss gradient (per similarity
/// kind) and end to end through a small encoder.
pub fn run_grad_suite(settings: &GradSettings, fault: FaultInjection) -> Result<SuiteReport> {
    let h = 1e-5;
    let fault_scale = if fault == FaultInjection::ScaledGradient { 1.001 } else { 1.0 };
    let mut cases = Vec::new();

    for sim_kind in [SimilarityKind::NegL2, SimilarityKind::NegL1, SimilarityKind::Cosine] {
        let mut case = CaseReport::new(format!("loss_grad_{}", sim_kind.name()));
        let mut rng = rng_stream(settings.seed, 400 + sim_kind as u64);
        let mut max_rel = 0.0f64;
        for _ in 0..settings.cases_per_kind {
            let pairs = rng.gen_range(2..=8);
            let dim = rng.gen_range(1..=8);
            let (batch, emb) = random_loss_case(&mut rng, pairs, dim, 1e-2);
            let tau = 2.0;
            let out = supcr_loss_grad(&batch, &emb, sim_kind, LabelDistanceKind::L1, tau)?;
            let mut analytic = out.grad.expect("gradient requested");
            analytic.mapv_inplace(|g| g * fault_scale);
            let fd = fd_embedding_grad(&batch, &emb, sim_kind, LabelDistanceKind::L1, tau, h)?;
            max_rel = max_rel.max(max_rel_error(&analytic, &fd, 1e-6));
        }
        case.achieved_loss = Some(max_rel);
        case.epsilon = Some(settings.loss_tolerance);
        case.pass = max_rel < settings.loss_tolerance;
        case.detail = format!("max_rel_err={max_rel:.16e} cases={}", settings.cases_per_kind);
        cases.push(case);
    }

    {
        let mut case = CaseReport::new("mlp_chain_grad");
        let mut rng = rng_stream(settings.seed, 500);
        let mut max_rel = 0.0f64;
        for _ in 0..settings.mlp_cases {
            let pairs = 4;
            let (mut batch, _) = random_loss_case(&mut rng, pairs, 1, 1e-2);
            // real inputs for the encoder
            batch.inputs = Array2::from_shape_fn((2 * pairs, 3), |_| rng.gen_range(-1.0..1.0));
            let mlp = Mlp::new(&[3, 8, 4], &mut rng_stream(settings.seed, 501))?;
            let (_, mut analytic) =
                mlp_supcr_analytic_grad(&mlp, &batch, SimilarityKind::NegL2, LabelDistanceKind::L1, 2.0)?;
            for g in &mut analytic {
                *g *= fault_scale;
            }
            let fd =
                mlp_supcr_fd_grad(&mlp, &batch, SimilarityKind::NegL2, LabelDistanceKind::L1, 2.0, h)?;
            let rel = analytic
                .iter()
                .zip(fd.iter())
                .map(|(a, f)| (a - f).abs() / a.abs().max(f.abs()).max(1e-6))
                .fold(0.0, f64::max);
            max_rel = max_rel.max(rel);
        }
        case.achieved_loss = Some(max_rel);
        case.epsilon = Some(settings.mlp_tolerance);
        case.pass = max_rel < settings.mlp_tolerance;
        case.detail = format!("max_rel_err={max_rel:.16e} cases={}", settings.mlp_cases);
        cases.push(case);
    }

    let pass = cases.iter().all(|c| c.pass);
    Ok(SuiteReport { title: "gradient verification".into(), seed: settings.seed, cases, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn faulty_mask_breaks_the_bound() {
        let settings = TheorySettings {
            bound_batches: 200,
            tightness_batches: 5,
            delta_runs: 2,
            deltas: vec![0.5],
            ..Default::default()
        };
        let honest = run_theory_suite(&settings, FaultInjection::None).unwrap();
        assert!(honest.pass, "honest run failed: {:?}", honest.first_failure());
        let faulty = run_theory_suite(&settings, FaultInjection::OffByOneMask).unwrap();
        assert!(!faulty.pass);
        let failure = faulty.first_failure().unwrap();
        assert!(failure.name.contains("lower_bound") || failure.name.contains("degenerate"));
    }

    #[test]
    fn scaled_gradient_breaks_the_check() {
        let settings = GradSettings { cases_per_kind: 5, mlp_cases: 2, ..Default::default() };
        let honest = run_grad_suite(&settings, FaultInjection::None).unwrap();
        assert!(honest.pass, "honest run failed: {:?}", honest.first_failure());
        let faulty = run_grad_suite(&settings, FaultInjection::ScaledGradient).unwrap();
        assert!(!faulty.pass);
    }

    #[test]
    fn report_text_has_required_fields() {
        let settings = TheorySettings {
            bound_batches: 10,
            tightness_batches: 2,
            delta_runs: 1,
            deltas: vec![0.5],
            epsilons: vec![0.1],
            ..Default::default()
        };
        let report = run_theory_suite(&settings, FaultInjection::None).unwrap();
        let text = report.to_text();
        for case in &report.cases {
            assert!(text.contains(&format!("case: {}", case.name)));
        }
        for key in ["lower_bound:", "epsilon:", "gamma:", "delta:", "achieved_loss:", "is_delta_ordered:"] {
            assert!(text.contains(key), "missing `{key}` in report");
        }
        assert!(text.ends_with("overall: pass\n"));
    }
}
