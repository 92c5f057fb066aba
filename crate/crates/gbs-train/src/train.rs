//! Optimizers, the spectral projection to physical states, the projected
//! subgradient step, and the two end-to-end trainers: the variational Ising
//! solver (VIS) for max-clique and the unsupervised Kullback-Leibler weight
//! recovery loop.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dist::{sample, ClickKernel, ClickPattern, Detector, SampleBatch, SampleOpts};
use crate::error::{Error, Result};
use crate::grad::{
    grad_cost_threshold, grad_kl_threshold_from_marginals, EvalMode, GradEstimate,
    ThresholdRegime,
};
use crate::graphs::{ising_maxclique, k_cliques, Graph};
use crate::numerics::{sym_eigendecomposition, SymMatrix};
use crate::rng::{derive_seed, SeedDomain};
use crate::state::{
    rescale_to_target, waw_product, AMatrix, RescaleMetric, WawParams, PHYSICALITY_MARGIN,
};

/// Gradient-descent flavors used by the trainers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OptKind {
    Sgd,
    Momentum,
}

/// First-order optimizer state: `sgd` steps `theta - lr * g`; `momentum`
/// accumulates `v = beta * v + g` and steps `theta - lr * v`.
#[derive(Clone, Debug)]
pub struct Optimizer {
    pub kind: OptKind,
    pub lr: f64,
    pub beta: f64,
    velocity: Option<DVector<f64>>,
}

impl Optimizer {
    pub fn sgd(lr: f64) -> Result<Self> {
        Self::new(OptKind::Sgd, lr, 0.0)
    }

    pub fn momentum(lr: f64, beta: f64) -> Result<Self> {
        Self::new(OptKind::Momentum, lr, beta)
    }

    /// A zero rate makes every step the identity (the trainers demand a
    /// strictly positive one in their own configs).
    pub fn new(kind: OptKind, lr: f64, beta: f64) -> Result<Self> {
        if lr < 0.0 || !lr.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "learning rate {lr} must be non-negative"
            )));
        }
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::InvalidConfig(format!(
                "momentum coefficient {beta} outside [0, 1)"
            )));
        }
        Ok(Self {
            kind,
            lr,
            beta,
            velocity: None,
        })
    }

    pub fn velocity(&self) -> Option<&DVector<f64>> {
        self.velocity.as_ref()
    }

    /// One update; returns the new parameter vector.
    pub fn step(&mut self, theta: &DVector<f64>, grad: &DVector<f64>) -> Result<DVector<f64>> {
        if theta.len() != grad.len() {
            return Err(Error::DimensionMismatch {
                expected: theta.len(),
                got: grad.len(),
            });
        }
        if let Some(idx) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { index: idx });
        }
        match self.kind {
            OptKind::Sgd => Ok(theta - grad * self.lr),
            OptKind::Momentum => {
                let v = match self.velocity.take() {
                    Some(v) if v.len() == theta.len() => v * self.beta + grad,
                    _ => grad.clone(),
                };
                let out = theta - &v * self.lr;
                self.velocity = Some(v);
                Ok(out)
            }
        }
    }
}

/// Spectrum bound used by [`project`]; sits strictly inside the validity
/// bound so the reconstructed matrix passes the physicality check even
/// after eigensolver rounding.
pub const PROJECTION_BOUND: f64 = 1.0 - 2.0 * PHYSICALITY_MARGIN;

/// Projects a square matrix to the closest physical pure-state kernel in
/// Frobenius norm: symmetrize, then clip the spectrum into
/// `[-PROJECTION_BOUND, PROJECTION_BOUND]`.
pub fn project(x: &DMatrix<f64>) -> Result<AMatrix> {
    if x.nrows() != x.ncols() {
        return Err(Error::NotSquare {
            rows: x.nrows(),
            cols: x.ncols(),
        });
    }
    let sym = SymMatrix::symmetrized(x);
    let (vals, vecs) = sym_eigendecomposition(&sym)?;
    let clipped = DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&l| l.clamp(-PROJECTION_BOUND, PROJECTION_BOUND)),
    );
    let rebuilt = &vecs * DMatrix::from_diagonal(&clipped) * vecs.transpose();
    AMatrix::new(SymMatrix::symmetrized(&rebuilt))
}

/// One cycle of the projected subgradient method on the state matrix:
/// reset weights to one, take an optimizer step on theta against the
/// supplied gradient, form `W(theta) A W(theta)` (weights may exceed one
/// here), and project back to the physical set.
pub fn projected_subgrad_step<F>(
    a: &AMatrix,
    grad_fn: F,
    opt: &mut Optimizer,
) -> Result<AMatrix>
where
    F: FnOnce(&AMatrix, &WawParams) -> Result<DVector<f64>>,
{
    let m = a.modes();
    let p0 = WawParams::basis_reparam(vec![0.0; m]);
    let grad = grad_fn(a, &p0)?;
    let theta_new = opt.step(&DVector::zeros(m), &grad)?;
    let weights: Vec<f64> = theta_new.iter().map(|&t| (-t).exp()).collect();
    let raw = waw_product(a.matrix(), &weights)?;
    project(raw.matrix())
}

/// One per-iteration record of a training run.
#[derive(Clone, Debug, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub cost: f64,
    pub grad_norm: f64,
    /// Success probability (VIS) or weight-matrix distance (unsupervised).
    pub metric: f64,
    pub wall_ms: f64,
    pub weights: Vec<f64>,
    /// VIS only: ground-state rate without conditioning on K clicks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unconditioned: Option<f64>,
}

/// Full per-iteration history of a training run.
#[derive(Clone, Debug, Serialize)]
pub struct TrainingTrace {
    pub metric_name: String,
    pub rows: Vec<TraceRow>,
}

impl TrainingTrace {
    fn new(metric_name: &str) -> Self {
        Self {
            metric_name: metric_name.to_string(),
            rows: Vec::new(),
        }
    }

    /// Fixed-schema CSV: `iter,cost,grad_norm,success_prob_or_wdist,wall_ms`.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "iter,cost,grad_norm,success_prob_or_wdist,wall_ms")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.iter, r.cost, r.grad_norm, r.metric, r.wall_ms
            )?;
        }
        Ok(())
    }

    pub fn final_row(&self) -> Option<&TraceRow> {
        self.rows.last()
    }
}

/// Default momentum settings for the Ising solver, tuned so the
/// single-clique reference instance trains reliably; the solver is robust
/// across at least an order of magnitude around the default rate.
pub const VIS_DEFAULT_LR: f64 = 0.03;
pub const VIS_DEFAULT_BETA: f64 = 0.9;

/// Mode budget of the Ising solver (exact click enumeration scale).
pub const VIS_MAX_MODES: usize = 16;

/// Configuration of a variational-Ising-solver run.
#[derive(Clone, Debug)]
pub struct VisConfig {
    pub graph: Graph,
    /// Clique size K; the Hamiltonian is zero exactly on K-cliques.
    pub k: usize,
    pub c_v: f64,
    pub c_e: f64,
    pub samples_per_iter: usize,
    pub iterations: usize,
    pub lr: f64,
    pub beta: f64,
    pub seed: u64,
}

impl VisConfig {
    /// Standard settings: `c_V = 2K`, `c_E = 1`, 1000 samples per
    /// iteration, 100 iterations, momentum optimizer.
    pub fn new(graph: Graph, k: usize, seed: u64) -> Self {
        Self {
            graph,
            k,
            c_v: 2.0 * k as f64,
            c_e: 1.0,
            samples_per_iter: 1000,
            iterations: 100,
            lr: VIS_DEFAULT_LR,
            beta: VIS_DEFAULT_BETA,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidConfig(format!("K = {} < 2", self.k)));
        }
        if self.samples_per_iter == 0 {
            return Err(Error::InvalidConfig("samples per iteration must be >= 1".into()));
        }
        if self.c_v <= 0.0 || self.c_e <= 0.0 {
            return Err(Error::InvalidConfig("c_V and c_E must be positive".into()));
        }
        if self.graph.vertex_count() > VIS_MAX_MODES {
            return Err(Error::BudgetExceeded {
                what: "Ising solver vertices",
                limit: VIS_MAX_MODES.to_string(),
            });
        }
        if self.k > self.graph.vertex_count() {
            return Err(Error::InvalidConfig(format!(
                "K = {} exceeds vertex count {}",
                self.k,
                self.graph.vertex_count()
            )));
        }
        Ok(())
    }
}

/// Result of a VIS run.
#[derive(Clone, Debug)]
pub struct VisOutcome {
    pub trace: TrainingTrace,
    /// All K-clique indicator bit strings (the Ising ground states).
    pub ground_states: Vec<Vec<u8>>,
    pub final_weights: Vec<f64>,
    /// Scale coefficient of the final sampled state `c (W A W)`.
    pub final_scale: f64,
}

fn clique_bits(m: usize, clique: &[usize]) -> Vec<u8> {
    let mut bits = vec![0u8; m];
    for &v in clique {
        bits[v] = 1;
    }
    bits
}

/// Trains GBS weights to concentrate click samples on the Ising ground
/// state of the max-clique Hamiltonian.
///
/// Each iteration draws `T` click patterns from the rescaled state
/// `c (W A W)` with `sum_k <x_k> = K`, conditioned on observing exactly
/// `K` clicks (rejection; the rescale keeps the acceptance high), and
/// estimates the energy gradient with the large-`<n>` threshold factor
/// `v_k` on direct weights, the per-mode moments taken from the sampled
/// state. The momentum step acts on the logarithms of the weights
/// (multiplicative updates): additive steps on the simplex provably stall
/// at a spurious fixed point (`normalize(w - eta g) = w` whenever
/// `g` is proportional to `w`), while the multiplicative flow reaches the
/// clique on every tested instance. Post-processing then projects back to
/// the working family: negatives to zero (a no-op safeguard under
/// multiplicative updates), normalize to sum one, re-fit `c`.
///
/// The recorded success probability is the fraction of ground-state
/// strings among the conditioned samples; the unconditioned rate
/// `success * P(K clicks)` is kept alongside. With degenerate ground
/// states the best-sampled one counts.
pub fn vis_train(cfg: &VisConfig) -> Result<VisOutcome> {
    cfg.validate()?;
    let m = cfg.graph.vertex_count();
    let adjacency = cfg.graph.adjacency();
    let ising = ising_maxclique(&cfg.graph, cfg.k, cfg.c_v, cfg.c_e)?;
    let ground_states: Vec<Vec<u8>> = k_cliques(&cfg.graph, cfg.k)?
        .iter()
        .map(|c| clique_bits(m, c))
        .collect();

    let mut weights = vec![1.0; m];
    let mut velocity = DVector::zeros(m);
    let mut trace = TrainingTrace::new("success_prob");
    let mut final_scale = 0.0;

    for iter in 0..=cfg.iterations {
        let started = Instant::now();
        let raw = waw_product(&adjacency, &weights)?;
        if raw.is_zero() {
            return Err(Error::AllZeroWeights);
        }
        let (state, c) = rescale_clicks_capped(&raw, cfg.k as f64)?;
        final_scale = c;

        let batch = sample(
            &state,
            &WawParams::identity(m),
            Detector::Click,
            cfg.samples_per_iter,
            derive_seed(cfg.seed, SeedDomain::Sampler, iter as u64),
            SampleOpts {
                condition_clicks: Some(cfg.k),
                ..Default::default()
            },
        )?;

        let energy: f64 = batch
            .samples()
            .iter()
            .map(|s| {
                let bits: Vec<u8> = s.iter().map(|&v| (v > 0) as u8).collect();
                ising.energy(&bits)
            })
            .sum::<f64>()
            / batch.len() as f64;

        let (success, _) = success_rates(&batch, &ground_states, cfg.k);
        let unconditioned = success * click_count_probability(&state, cfg.k)?;

        let p = WawParams::direct(weights.clone());
        let grad: GradEstimate = grad_cost_threshold(
            &state,
            &p,
            &ising,
            EvalMode::Sampled(&batch),
            ThresholdRegime::LargeN,
        )?;

        trace.rows.push(TraceRow {
            iter,
            cost: energy,
            grad_norm: grad.value.norm(),
            metric: success,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            weights: weights.clone(),
            unconditioned: Some(unconditioned),
        });

        if iter == cfg.iterations {
            break;
        }

        // dE/dlog w_k = w_k dE/dw_k; momentum and the step act in log space.
        let log_grad = DVector::from_fn(m, |k, _| weights[k] * grad.value[k]);
        if let Some(idx) = log_grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { index: idx });
        }
        velocity = velocity * cfg.beta + log_grad;
        let mut next: Vec<f64> = (0..m)
            .map(|k| (weights[k] * (-cfg.lr * velocity[k]).exp()).max(0.0))
            .collect();
        let total: f64 = next.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::AllZeroWeights);
        }
        next.iter_mut().for_each(|w| *w /= total);
        weights = next;
    }

    Ok(VisOutcome {
        trace,
        ground_states,
        final_weights: weights,
        final_scale,
    })
}

/// `P(sum x = k)` of a state, by enumeration for m <= 12.
fn click_count_probability(state: &AMatrix, k: usize) -> Result<f64> {
    let dist = crate::dist::enumerate_click_state(state)?;
    Ok(dist
        .iter()
        .filter(|(x, _)| x.ones() == k)
        .map(|&(_, p)| p)
        .sum())
}

/// Rescales to `sum <x_k> = target` clicks, backing off to 95% of the
/// achievable maximum when the target saturates the physical bound.
/// Saturation is routine late in training: once the weights concentrate on
/// the K clique modes, `<x_k> < 1` forces `sum <x_k> < K`, exactly as when
/// K equals the vertex count.
fn rescale_clicks_capped(raw: &SymMatrix, target: f64) -> Result<(AMatrix, f64)> {
    match rescale_to_target(raw, target, RescaleMetric::MeanClicks) {
        Ok(pair) => Ok(pair),
        Err(Error::TargetUnreachable { max_achievable, .. }) => {
            rescale_to_target(raw, 0.95 * max_achievable, RescaleMetric::MeanClicks)
        }
        Err(e) => Err(e),
    }
}

fn success_rates(batch: &SampleBatch, ground_states: &[Vec<u8>], k: usize) -> (f64, f64) {
    if ground_states.is_empty() {
        return (0.0, 0.0);
    }
    let mut k_click_count = 0usize;
    let mut hits = vec![0usize; ground_states.len()];
    for s in batch.samples() {
        let bits: Vec<u8> = s.iter().map(|&v| (v > 0) as u8).collect();
        let ones = bits.iter().filter(|&&b| b == 1).count();
        if ones == k {
            k_click_count += 1;
            for (i, gs) in ground_states.iter().enumerate() {
                if &bits == gs {
                    hits[i] += 1;
                }
            }
        }
    }
    let best = hits.iter().copied().max().unwrap_or(0);
    let conditioned = if k_click_count > 0 {
        best as f64 / k_click_count as f64
    } else {
        0.0
    };
    (conditioned, best as f64 / batch.len() as f64)
}

/// Click statistics driving the unsupervised trainer: either a sample
/// batch or analytically known per-mode marginals.
#[derive(Clone, Copy, Debug)]
pub enum ClickData<'a> {
    Batch(&'a SampleBatch),
    Marginals(&'a [f64]),
}

/// Result of an unsupervised KL run.
#[derive(Clone, Debug)]
pub struct KlOutcome {
    pub trace: TrainingTrace,
    pub params: WawParams,
    pub final_weights: Vec<f64>,
}

/// Unsupervised weight recovery by classical KL gradient descent on
/// threshold data: `theta <- theta - lr * v` with `v = beta * v +
/// sum_k (<x_k>_data - <x_k>_model) f^(k)` (`beta = 0` recovers plain
/// descent), followed by clamping `theta` at zero, which enforces the
/// `theta . f^(k) >= 0` weight-validity condition for the basis features
/// the trainer runs with.
///
/// `base` is the model's fixed kernel matrix in the same scale the data
/// was generated with (it need not be physical on its own; each iterate
/// `W base W` must be, and is checked). No model sampling occurs. The
/// trace metric is the Frobenius distance between the diagonal weight
/// matrices `|| diag(sqrt(w_true)) - diag(sqrt(w_model)) ||_F` when the
/// generating weights are known, else the gradient norm; the cost column
/// is the per-sample negative log-likelihood of the data (batch mode) or
/// the squared marginal gap (marginals mode).
pub fn kl_train(
    base: &SymMatrix,
    data: ClickData,
    p0: &WawParams,
    lr: f64,
    beta: f64,
    iterations: usize,
    true_weights: Option<&[f64]>,
) -> Result<KlOutcome> {
    if lr <= 0.0 || !lr.is_finite() {
        return Err(Error::InvalidConfig(format!("learning rate {lr} must be positive")));
    }
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidConfig(format!(
            "momentum coefficient {beta} outside [0, 1)"
        )));
    }
    let m = base.dim();
    let mut p = match p0 {
        WawParams::Reparam { .. } => p0.clone(),
        WawParams::Direct { .. } => return Err(Error::NotReparametrized),
    };
    let data_marginals: Vec<f64> = match data {
        ClickData::Batch(b) => {
            if b.detector != Detector::Click {
                return Err(Error::DetectorMismatch { expected: "click" });
            }
            if b.is_empty() {
                return Err(Error::EmptyBatch);
            }
            if b.m != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: b.m,
                });
            }
            b.empirical_means()
        }
        ClickData::Marginals(ms) => {
            if ms.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: ms.len(),
                });
            }
            ms.to_vec()
        }
    };
    // Unique observed patterns with multiplicities, for the NLL column.
    // BTreeMap keeps the accumulation order deterministic across runs.
    let pattern_weights: Option<Vec<(ClickPattern, f64)>> = match data {
        ClickData::Batch(b) => {
            let mut counts: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
            for s in b.samples() {
                *counts.entry(s.clone()).or_insert(0) += 1;
            }
            let t = b.len() as f64;
            Some(
                counts
                    .into_iter()
                    .map(|(s, c)| {
                        let bits = s.iter().map(|&v| (v > 0) as u8).collect();
                        (ClickPattern::new(bits).expect("0/1 checked"), c as f64 / t)
                    })
                    .collect(),
            )
        }
        ClickData::Marginals(_) => None,
    };

    let mut trace = TrainingTrace::new(if true_weights.is_some() {
        "w_distance"
    } else {
        "grad_norm"
    });
    let mut velocity = DVector::zeros(p.param_dim());

    for iter in 0..=iterations {
        let started = Instant::now();
        let weights = p.weights();
        let state = AMatrix::new(waw_product(base, &weights)?)?;
        let grad = grad_kl_threshold_from_marginals(&state, &p, &data_marginals)?;
        let grad_norm = grad.norm();

        let cost = match &pattern_weights {
            Some(pw) => {
                let mut kernel = ClickKernel::new(&state);
                let mut nll = 0.0;
                for (pattern, freq) in pw {
                    let prob = kernel.prob(pattern)?.max(1e-300);
                    nll -= freq * prob.ln();
                }
                nll
            }
            None => {
                let model = state.click_probs();
                data_marginals
                    .iter()
                    .zip(&model)
                    .map(|(d, g)| (d - g) * (d - g))
                    .sum()
            }
        };

        let metric = match true_weights {
            Some(wt) => weight_matrix_distance(wt, &weights),
            None => grad_norm,
        };

        trace.rows.push(TraceRow {
            iter,
            cost,
            grad_norm,
            metric,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            weights: weights.clone(),
            unconditioned: None,
        });

        if iter == iterations {
            break;
        }
        velocity = velocity * beta + grad;
        let mut theta = p.theta().expect("reparam mode checked") - &velocity * lr;
        theta.iter_mut().for_each(|t| *t = t.max(0.0));
        p = p.with_theta(theta)?;
    }

    let final_weights = p.weights();
    Ok(KlOutcome {
        trace,
        params: p,
        final_weights,
    })
}

/// Default momentum coefficient of the unsupervised trainer; plain
/// descent (`beta = 0`) cannot climb out of a small-weight initialization
/// within a few hundred steps, because each theta component moves at most
/// `lr * <x_k>` per step.
pub const KL_DEFAULT_BETA: f64 = 0.9;

/// Hidden-weight profiles for unsupervised-recovery experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WeightProfile {
    LinearUp,
    LinearDown,
    Random,
}

/// A generated unsupervised-learning instance: a standalone-valid base
/// kernel plus hidden generating weights.
#[derive(Clone, Debug)]
pub struct UnsupInstance {
    /// Adjacency scaled to spectral radius just below one; every weight
    /// vector in `[0, 1]^m` then yields a physical state.
    pub base: SymMatrix,
    /// Generating weights, scaled so the data state hits the target mean
    /// photon number.
    pub hidden_weights: Vec<f64>,
    /// The data-generating state `W* base W*`.
    pub data_state: AMatrix,
}

/// Weight ceiling of generated instances; keeps recovery targets strictly
/// inside the trainable region `w < 1`.
const UNSUP_W_MAX: f64 = 0.95;

/// Builds an unsupervised instance from a graph: the base is the adjacency
/// normalized to the physicality boundary, and the hidden weights follow
/// `profile` scaled (by bisection on the profile level) so the data state
/// has `mean_photons` photons on average.
pub fn unsup_instance(
    graph: &Graph,
    profile: WeightProfile,
    mean_photons: f64,
    seed: u64,
) -> Result<UnsupInstance> {
    let m = graph.vertex_count();
    if m < 2 {
        return Err(Error::InvalidConfig("instance needs at least two modes".into()));
    }
    let adj = graph.adjacency();
    if adj.is_zero() {
        return Err(Error::ZeroMatrix);
    }
    let (vals, _) = sym_eigendecomposition(&adj)?;
    let sigma = vals.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let base = adj.scaled((1.0 - 1e-6) / sigma);

    // Raw profile shape in (0, 1]; a global level is then bisected.
    let shape: Vec<f64> = match profile {
        WeightProfile::LinearUp => (0..m).map(|k| k as f64 / (m - 1) as f64).collect(),
        WeightProfile::LinearDown => (0..m)
            .map(|k| (m - 1 - k) as f64 / (m - 1) as f64)
            .collect(),
        WeightProfile::Random => {
            let mut rng = crate::rng::rng_from(derive_seed(
                seed,
                SeedDomain::HiddenWeights,
                0,
            ));
            use rand::Rng;
            (0..m).map(|_| rng.random_range(0.0..1.0)).collect()
        }
    };
    // Weights a + (W_MAX - a) * shape, with the floor a solving
    // <n>(W base W) = mean_photons (monotone increasing in a).
    let weights_at = |a: f64| -> Vec<f64> {
        shape.iter().map(|&s| a + (UNSUP_W_MAX - a) * s).collect()
    };
    let photons_at = |a: f64| -> Result<f64> {
        let st = AMatrix::new(waw_product(&base, &weights_at(a))?)?;
        Ok(st.total_mean_photons())
    };
    if photons_at(0.0)? > mean_photons {
        return Err(Error::InvalidConfig(format!(
            "target mean photon number {mean_photons} below the profile floor"
        )));
    }
    let max_achievable = photons_at(UNSUP_W_MAX)?;
    if max_achievable < mean_photons {
        return Err(Error::TargetUnreachable {
            target: mean_photons,
            max_achievable,
        });
    }
    let (mut lo, mut hi) = (0.0f64, UNSUP_W_MAX);
    for _ in 0..80 {
        let a = 0.5 * (lo + hi);
        if photons_at(a)? < mean_photons {
            lo = a;
        } else {
            hi = a;
        }
    }
    let hidden_weights = weights_at(0.5 * (lo + hi));
    let data_state = AMatrix::new(waw_product(&base, &hidden_weights)?)?;
    Ok(UnsupInstance {
        base,
        hidden_weights,
        data_state,
    })
}

/// Frobenius distance between the diagonal weight matrices
/// `W = diag(sqrt(w_k))` of two weight vectors.
pub fn weight_matrix_distance(w_a: &[f64], w_b: &[f64]) -> f64 {
    w_a.iter()
        .zip(w_b)
        .map(|(&a, &b)| {
            let d = a.max(0.0).sqrt() - b.max(0.0).sqrt();
            d * d
        })
        .sum::<f64>()
        .sqrt()
}
