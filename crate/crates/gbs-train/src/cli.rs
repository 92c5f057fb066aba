//! Command-line interface: run the variational Ising solver, unsupervised
//! weight recovery, gradient self-checks, sampling, and graph generation,
//! writing traces and run summaries to an output directory.
//!
//! Every run writes `summary.json` with the full effective configuration
//! (defaults included) before any computation, then rewrites it with
//! results on completion. All randomness flows from `--seed` through the
//! derivation documented in [`crate::rng`]. `GBS_TRAIN_THREADS` caps the
//! internal thread pool.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::dist::{sample, Detector, SampleOpts};
use crate::error::{Error, Result};
use crate::grad::{
    grad_cost_reparam, grad_cost_waw, grad_energy_nrd, grad_kl_classical, grad_prob_general,
    grad_prob_waw, CostFn, EvalMode,
};
use crate::graphs::{gen_graph, max_clique_oracle, Graph, GraphKind};
use crate::numerics::{hafnian, hafnian_oracle, SymMatrix};
use crate::rng::{derive_seed, rng_from, SeedDomain, RNG_ALGORITHM};
use crate::state::{
    apply_waw, rescale_to_target, AMatrix, RescaleMetric, WawParams,
};
use crate::train::{
    kl_train, unsup_instance, vis_train, ClickData, VisConfig, WeightProfile, KL_DEFAULT_BETA,
    VIS_DEFAULT_BETA, VIS_DEFAULT_LR,
};

#[derive(Parser, Debug)]
#[command(
    name = "gbs-train",
    about = "Simulation and gradient-based training of Gaussian boson sampling distributions",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train GBS weights to sample max-clique Ising ground states.
    Vis(VisArgs),
    /// Generate data at hidden weights and recover them by KL descent.
    Unsup(UnsupArgs),
    /// Run finite-difference and oracle self-checks on small systems.
    Gradcheck(GradcheckArgs),
    /// Draw samples from a graph-encoded GBS state.
    Sample(SampleArgs),
    /// Generate a graph and write its edge list and JSON export.
    Graph(GraphArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Circulant,
    ErdosRenyi,
    BaClique,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DetectorArg {
    Photon,
    Click,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WeightsArg {
    LinearUp,
    LinearDown,
    Random,
}

impl From<WeightsArg> for WeightProfile {
    fn from(w: WeightsArg) -> Self {
        match w {
            WeightsArg::LinearUp => WeightProfile::LinearUp,
            WeightsArg::LinearDown => WeightProfile::LinearDown,
            WeightsArg::Random => WeightProfile::Random,
        }
    }
}

/// Where the working graph comes from: an edge-list file or a seeded
/// generator.
#[derive(Args, Clone, Debug)]
pub struct GraphSource {
    /// Edge-list file (first line is the vertex count, then `u v` lines).
    #[arg(long, conflicts_with = "kind")]
    pub graph: Option<PathBuf>,
    /// Graph generator family.
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Vertex count for generated graphs.
    #[arg(long)]
    pub m: Option<usize>,
    /// Circulant offsets (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2])]
    pub offsets: Vec<usize>,
    /// Erdos-Renyi edge probability.
    #[arg(long, default_value_t = 0.5)]
    pub prob: f64,
    /// Seed-clique size for ba-clique generation.
    #[arg(long, default_value_t = 5)]
    pub clique_k: usize,
    /// Attachments per new vertex for ba-clique generation.
    #[arg(long, default_value_t = 3)]
    pub attach: usize,
}

impl GraphSource {
    fn resolve(&self, seed: u64) -> Result<(Graph, serde_json::Value)> {
        if let Some(path) = &self.graph {
            let file = fs::File::open(path)?;
            let graph = Graph::parse_edge_list(std::io::BufReader::new(file))?;
            return Ok((graph, json!({ "file": path.display().to_string() })));
        }
        let kind = self.kind.ok_or_else(|| {
            Error::InvalidConfig("either --graph FILE or --kind must be given".into())
        })?;
        let m = self.m.ok_or_else(|| {
            Error::InvalidConfig("--m is required with --kind".into())
        })?;
        let gkind = match kind {
            KindArg::Circulant => GraphKind::Circulant {
                offsets: self.offsets.clone(),
            },
            KindArg::ErdosRenyi => GraphKind::ErdosRenyi { prob: self.prob },
            KindArg::BaClique => GraphKind::BaFromClique {
                k: self.clique_k,
                attach: self.attach,
            },
        };
        let gseed = derive_seed(seed, SeedDomain::GraphGen, 0);
        let graph = gen_graph(&gkind, m, gseed)?;
        Ok((graph, json!({ "kind": gkind, "m": m, "graph_seed": gseed })))
    }
}

#[derive(Args, Debug)]
pub struct VisArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// Clique size K (defaults to the exact maximum clique size).
    #[arg(long)]
    pub k: Option<usize>,
    /// Vertex-term constant (defaults to 2K).
    #[arg(long)]
    pub cv: Option<f64>,
    /// Edge-term constant.
    #[arg(long, default_value_t = 1.0)]
    pub ce: f64,
    /// Samples per iteration.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    #[arg(long, default_value_t = VIS_DEFAULT_LR)]
    pub lr: f64,
    #[arg(long, default_value_t = VIS_DEFAULT_BETA)]
    pub beta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "gbs-run")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct UnsupArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// Hidden-weight profile used to generate the data.
    #[arg(long, value_enum, default_value_t = WeightsArg::LinearUp)]
    pub weights: WeightsArg,
    /// Mean photon number of the data-generating state.
    #[arg(long, default_value_t = 3.0)]
    pub mean_photons: f64,
    /// Number of data samples.
    #[arg(long, default_value_t = 1000)]
    pub t: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = KL_DEFAULT_BETA)]
    pub beta: f64,
    /// Initial value of every theta component.
    #[arg(long, default_value_t = 5.0)]
    pub theta0: f64,
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "gbs-run")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    /// System size for the finite-difference checks (1 to 3 modes).
    #[arg(long, default_value_t = 2)]
    pub modes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "gbs-run")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[command(flatten)]
    pub source: GraphSource,
    #[arg(long, value_enum, default_value_t = DetectorArg::Click)]
    pub detector: DetectorArg,
    #[arg(long, default_value_t = 1000)]
    pub t: usize,
    /// Rescale the state to this total mean photon number.
    #[arg(long, conflicts_with = "mean_clicks")]
    pub mean_photons: Option<f64>,
    /// Rescale the state to this total mean click count.
    #[arg(long)]
    pub mean_clicks: Option<f64>,
    /// Total-photon cutoff for photon-mode enumeration.
    #[arg(long, default_value_t = 20)]
    pub cutoff: u32,
    /// Keep only draws with exactly this many clicks (rejection).
    #[arg(long)]
    pub condition_k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "gbs-run")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct GraphArgs {
    #[command(flatten)]
    pub source: GraphSource,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "gbs-run")]
    pub out: PathBuf,
}

/// Maps error classes to process exit codes: 2 config/parse, 3 infeasible
/// rescale targets, 4 exact-computation budgets, 1 anything else.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_) | Error::GraphParse { .. } | Error::BatchParse { .. }
        | Error::InvalidGraph(_) => 2,
        Error::TargetUnreachable { .. } | Error::RescaleUnconverged { .. } => 3,
        Error::BudgetExceeded { .. } => 4,
        _ => 1,
    }
}

fn init_threads() {
    if let Ok(n) = std::env::var("GBS_TRAIN_THREADS") {
        if let Ok(n) = n.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
}

fn write_summary(dir: &Path, value: &serde_json::Value) -> Result<()> {
    let mut file = fs::File::create(dir.join("summary.json"))?;
    serde_json::to_writer_pretty(&mut file, value)?;
    writeln!(file)?;
    Ok(())
}

/// Runs one CLI command, writing its artifacts under the configured
/// output directory.
pub fn run(cli: Cli) -> Result<()> {
    init_threads();
    match cli.command {
        Command::Vis(args) => run_vis(args),
        Command::Unsup(args) => run_unsup(args),
        Command::Gradcheck(args) => run_gradcheck(args),
        Command::Sample(args) => run_sample(args),
        Command::Graph(args) => run_graph(args),
    }
}

fn run_vis(args: VisArgs) -> Result<()> {
    fs::create_dir_all(&args.out)?;
    let (graph, graph_desc) = args.source.resolve(args.seed)?;
    let (max_k, max_cliques) = max_clique_oracle(&graph)?;
    let k = args.k.unwrap_or(max_k);
    let c_v = args.cv.unwrap_or(2.0 * k as f64);

    let mut cfg = VisConfig::new(graph, k, args.seed);
    cfg.c_v = c_v;
    cfg.c_e = args.ce;
    cfg.samples_per_iter = args.samples;
    cfg.iterations = args.iters;
    cfg.lr = args.lr;
    cfg.beta = args.beta;

    let config_json = json!({
        "command": "vis",
        "graph": graph_desc,
        "edges": cfg.graph.edges().collect::<Vec<_>>(),
        "vertices": cfg.graph.vertex_count(),
        "k": k,
        "max_clique_size": max_k,
        "max_clique_count": max_cliques.len(),
        "c_v": c_v,
        "c_e": args.ce,
        "samples_per_iter": args.samples,
        "iterations": args.iters,
        "lr": args.lr,
        "beta": args.beta,
        "seed": args.seed,
        "rng": RNG_ALGORITHM,
    });
    write_summary(&args.out, &json!({ "config": config_json }))?;

    let outcome = vis_train(&cfg)?;
    let mut csv = fs::File::create(args.out.join("trace.csv"))?;
    outcome.trace.write_csv(&mut csv)?;
    let final_row = outcome.trace.final_row().expect("trace is never empty");
    fs::write(
        args.out.join("final_weights.json"),
        serde_json::to_string_pretty(&json!({
            "weights": outcome.final_weights,
            "scale": outcome.final_scale,
        }))?,
    )?;
    write_summary(
        &args.out,
        &json!({
            "config": config_json,
            "results": {
                "final_success_prob": final_row.metric,
                "final_energy": final_row.cost,
                "ground_states": outcome.ground_states,
                "final_weights": outcome.final_weights,
                "final_scale": outcome.final_scale,
            }
        }),
    )?;
    println!(
        "vis: {} iterations, final success probability {:.4} (trace in {})",
        cfg.iterations,
        final_row.metric,
        args.out.display()
    );
    Ok(())
}

fn run_unsup(args: UnsupArgs) -> Result<()> {
    fs::create_dir_all(&args.out)?;
    let (graph, graph_desc) = args.source.resolve(args.seed)?;
    let m = graph.vertex_count();
    let profile: WeightProfile = args.weights.into();
    let instance = unsup_instance(&graph, profile, args.mean_photons, args.seed)?;

    let config_json = json!({
        "command": "unsup",
        "graph": graph_desc,
        "vertices": m,
        "weights_profile": profile,
        "mean_photons": args.mean_photons,
        "t": args.t,
        "lr": args.lr,
        "beta": args.beta,
        "theta0": args.theta0,
        "iterations": args.iters,
        "seed": args.seed,
        "rng": RNG_ALGORITHM,
    });
    write_summary(&args.out, &json!({ "config": config_json }))?;

    let data = sample(
        &instance.data_state,
        &WawParams::identity(m),
        Detector::Click,
        args.t,
        derive_seed(args.seed, SeedDomain::DataGen, 0),
        SampleOpts::default(),
    )?;
    let mut data_file = fs::File::create(args.out.join("data.samples"))?;
    data.write_text(&mut data_file)?;

    let p0 = WawParams::basis_reparam(vec![args.theta0; m]);
    let outcome = kl_train(
        &instance.base,
        ClickData::Batch(&data),
        &p0,
        args.lr,
        args.beta,
        args.iters,
        Some(&instance.hidden_weights),
    )?;
    let mut csv = fs::File::create(args.out.join("trace.csv"))?;
    outcome.trace.write_csv(&mut csv)?;

    let first = &outcome.trace.rows[0];
    let last = outcome.trace.final_row().expect("trace is never empty");
    fs::write(
        args.out.join("recovered_weights.json"),
        serde_json::to_string_pretty(&json!({
            "hidden_weights": instance.hidden_weights,
            "recovered_weights": outcome.final_weights,
        }))?,
    )?;
    write_summary(
        &args.out,
        &json!({
            "config": config_json,
            "results": {
                "initial_w_distance": first.metric,
                "final_w_distance": last.metric,
                "final_nll": last.cost,
                "hidden_weights": instance.hidden_weights,
                "recovered_weights": outcome.final_weights,
            }
        }),
    )?;
    println!(
        "unsup: ||W - W_model|| {:.4} -> {:.4} over {} iterations (trace in {})",
        first.metric,
        last.metric,
        args.iters,
        args.out.display()
    );
    Ok(())
}

fn run_sample(args: SampleArgs) -> Result<()> {
    fs::create_dir_all(&args.out)?;
    let (graph, graph_desc) = args.source.resolve(args.seed)?;
    let detector = match args.detector {
        DetectorArg::Photon => Detector::Photon,
        DetectorArg::Click => Detector::Click,
    };
    let config_json = json!({
        "command": "sample",
        "graph": graph_desc,
        "detector": detector.name(),
        "t": args.t,
        "mean_photons": args.mean_photons,
        "mean_clicks": args.mean_clicks,
        "cutoff": args.cutoff,
        "condition_k": args.condition_k,
        "seed": args.seed,
        "rng": RNG_ALGORITHM,
    });
    write_summary(&args.out, &json!({ "config": config_json }))?;

    let adjacency = graph.adjacency();
    let (state, scale) = match args.mean_clicks {
        Some(x) => rescale_to_target(&adjacency, x, RescaleMetric::MeanClicks)?,
        None => {
            let target = args.mean_photons.unwrap_or(1.0);
            rescale_to_target(&adjacency, target, RescaleMetric::MeanPhotons)?
        }
    };

    let batch = sample(
        &state,
        &WawParams::identity(graph.vertex_count()),
        detector,
        args.t,
        derive_seed(args.seed, SeedDomain::Sampler, 0),
        SampleOpts {
            photon_cutoff: args.cutoff,
            condition_clicks: args.condition_k,
        },
    )?;
    let mut file = fs::File::create(args.out.join("samples.txt"))?;
    batch.write_text(&mut file)?;
    write_summary(
        &args.out,
        &json!({
            "config": config_json,
            "results": { "scale": scale, "empirical_means": batch.empirical_means() }
        }),
    )?;
    println!(
        "sample: wrote {} {} samples to {}",
        batch.len(),
        detector.name(),
        args.out.display()
    );
    Ok(())
}

fn run_graph(args: GraphArgs) -> Result<()> {
    fs::create_dir_all(&args.out)?;
    if args.source.graph.is_some() {
        return Err(Error::InvalidConfig(
            "the graph command generates graphs; use --kind, not --graph".into(),
        ));
    }
    let (graph, graph_desc) = args.source.resolve(args.seed)?;
    let config_json = json!({
        "command": "graph",
        "graph": graph_desc,
        "seed": args.seed,
        "rng": RNG_ALGORITHM,
    });
    write_summary(&args.out, &json!({ "config": config_json }))?;
    let mut edges = fs::File::create(args.out.join("graph.edges"))?;
    graph.write_edge_list(&mut edges)?;
    fs::write(
        args.out.join("graph.json"),
        serde_json::to_string_pretty(&graph.to_json())?,
    )?;
    write_summary(
        &args.out,
        &json!({
            "config": config_json,
            "results": { "edges": graph.edge_count(), "vertices": graph.vertex_count() }
        }),
    )?;
    println!(
        "graph: {} vertices, {} edges written to {}",
        graph.vertex_count(),
        graph.edge_count(),
        args.out.display()
    );
    Ok(())
}

struct CheckReport {
    lines: Vec<(String, bool)>,
}

impl CheckReport {
    fn new() -> Self {
        Self { lines: Vec::new() }
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.lines.push((
            format!(
                "{} {name}: {detail}",
                if passed { "PASS" } else { "FAIL" }
            ),
            passed,
        ));
    }

    fn all_passed(&self) -> bool {
        self.lines.iter().all(|(_, p)| *p)
    }
}

fn run_gradcheck(args: GradcheckArgs) -> Result<()> {
    fs::create_dir_all(&args.out)?;
    if !(1..=3).contains(&args.modes) {
        return Err(Error::InvalidConfig(format!(
            "gradcheck supports 1 to 3 modes, got {}",
            args.modes
        )));
    }
    let config_json = json!({
        "command": "gradcheck",
        "modes": args.modes,
        "seed": args.seed,
        "rng": RNG_ALGORITHM,
    });
    write_summary(&args.out, &json!({ "config": config_json }))?;

    let report = gradcheck_report(args.modes, args.seed)?;
    let mut file = fs::File::create(args.out.join("gradcheck.txt"))?;
    for (line, _) in &report.lines {
        writeln!(file, "{line}")?;
        println!("{line}");
    }
    let all = report.all_passed();
    write_summary(
        &args.out,
        &json!({
            "config": config_json,
            "results": {
                "passed": all,
                "checks": report.lines.iter().map(|(l, _)| l).collect::<Vec<_>>(),
            }
        }),
    )?;
    if all {
        Ok(())
    } else {
        Err(Error::InvalidConfig(
            "gradient self-checks failed; see gradcheck.txt".into(),
        ))
    }
}

/// Finite-difference and oracle checks on a random `modes`-mode system.
fn gradcheck_report(modes: usize, seed: u64) -> Result<CheckReport> {
    use rand::Rng;
    let mut report = CheckReport::new();
    let mut rng = rng_from(derive_seed(seed, SeedDomain::Sampler, 42));
    let cutoff = 20u32;
    let exact = EvalMode::Exact {
        photon_cutoff: cutoff,
    };

    // Hafnian algorithm vs. perfect-matching enumeration.
    let mut worst = 0.0f64;
    for dim in 2..=8usize {
        for _ in 0..5 {
            let a = SymMatrix::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
            worst = worst.max((hafnian(&a) - hafnian_oracle(&a)?).abs());
        }
    }
    report.check(
        "hafnian-vs-pmp-oracle",
        worst <= 1e-9,
        format!("max |difference| = {worst:.3e} over dims 2..8"),
    );

    // Random valid state of the requested size.
    let raw = SymMatrix::from_fn(modes, |_, _| rng.random_range(-1.0..1.0));
    let (a, _) = rescale_to_target(&raw, 0.4 * modes as f64, RescaleMetric::MeanPhotons)?;
    let weights: Vec<f64> = (0..modes).map(|_| rng.random_range(0.4..0.95)).collect();
    let p = WawParams::direct(weights.clone());
    let state = apply_waw(&a, &p)?;
    let id = WawParams::identity(modes);

    let enumerated_cost = |ws: &[f64], h: &dyn CostFn| -> Result<f64> {
        let st = apply_waw(&a, &WawParams::direct_unclipped(ws.to_vec()))?;
        Ok(crate::dist::enumerate_photon(&st, &WawParams::identity(modes), cutoff)?
            .patterns
            .iter()
            .map(|(n, prob)| h.cost(n.counts()) * prob)
            .sum())
    };

    // General distribution gradient vs. finite differences.
    let direction = SymMatrix::from_fn(modes, |_, _| rng.random_range(-1.0..1.0));
    let pattern = crate::dist::PhotonPattern::new(
        (0..modes).map(|i| if i == 0 { 2 } else { 0 }).collect(),
    );
    let analytic = grad_prob_general(&a, std::slice::from_ref(&direction), &pattern)?[0];
    let h = 1e-6;
    let prob_at = |s: f64| -> Result<f64> {
        let shifted = AMatrix::new(SymMatrix::new(
            a.matrix().matrix() + direction.matrix() * s,
        )?)?;
        crate::dist::prob_photon(&shifted, &id, &pattern)
    };
    let fd = (prob_at(h)? - prob_at(-h)?) / (2.0 * h);
    let rel = (analytic - fd).abs() / fd.abs().max(1e-12);
    report.check(
        "general-gradient-fd",
        rel <= 1e-4,
        format!("relative error {rel:.3e}"),
    );

    // Per-weight distribution gradient vs. finite differences.
    let mut two_photons = vec![0u32; modes];
    two_photons[0] = 2;
    let pattern2 = crate::dist::PhotonPattern::new(two_photons);
    let gw = grad_prob_waw(&state, &p, &pattern2)?;
    let mut worst_rel = 0.0f64;
    for k in 0..modes {
        let mut wp = weights.clone();
        wp[k] += 1e-6;
        let mut wm = weights.clone();
        wm[k] -= 1e-6;
        let pp = crate::dist::prob_photon(&a, &WawParams::direct(wp), &pattern2)?;
        let pm = crate::dist::prob_photon(&a, &WawParams::direct(wm), &pattern2)?;
        let fd = (pp - pm) / 2e-6;
        worst_rel = worst_rel.max((gw[k] - fd).abs() / fd.abs().max(1e-12));
    }
    report.check(
        "waw-gradient-fd",
        worst_rel <= 1e-4,
        format!("max relative error {worst_rel:.3e}"),
    );

    // Cost gradient (photon detector) vs. finite differences.
    let hfun = |n: &[u32]| n.iter().sum::<u32>() as f64 + 0.5 * n[0] as f64;
    let gc = grad_cost_waw(&state, &p, &hfun, exact)?;
    let mut worst_rel = 0.0f64;
    for k in 0..modes {
        let step = 1e-5;
        let mut wp = weights.clone();
        wp[k] += step;
        let mut wm = weights.clone();
        wm[k] -= step;
        let fd = (enumerated_cost(&wp, &hfun)? - enumerated_cost(&wm, &hfun)?) / (2.0 * step);
        worst_rel = worst_rel.max((gc.value[k] - fd).abs() / fd.abs().max(1e-12));
    }
    report.check(
        "cost-gradient-fd",
        worst_rel <= 1e-4,
        format!("max relative error {worst_rel:.3e}"),
    );

    // Classical KL gradient vs. finite differences of the enumerated KL.
    let theta: Vec<f64> = (0..modes).map(|_| rng.random_range(0.2..0.8)).collect();
    let q = WawParams::basis_reparam(theta.clone());
    let qstate = apply_waw(&a, &q)?;
    let data = sample(
        &state,
        &id,
        Detector::Photon,
        300,
        derive_seed(seed, SeedDomain::DataGen, 1),
        SampleOpts::default(),
    )?;
    let gkl = grad_kl_classical(&qstate, &q, &data)?;
    let kl_at = |th: &[f64]| -> Result<f64> {
        let st = apply_waw(&a, &WawParams::basis_reparam(th.to_vec()))?;
        let mut freq: std::collections::BTreeMap<Vec<u32>, f64> =
            std::collections::BTreeMap::new();
        for s in data.samples() {
            *freq.entry(s.clone()).or_insert(0.0) += 1.0 / data.len() as f64;
        }
        let mut kl = 0.0;
        for (n, qf) in freq {
            let pm = crate::dist::prob_photon(&st, &id, &crate::dist::PhotonPattern::new(n))?;
            kl += qf * (qf / pm).ln();
        }
        Ok(kl)
    };
    let mut worst_rel = 0.0f64;
    for l in 0..modes {
        let step = 1e-5;
        let mut tp = theta.clone();
        tp[l] += step;
        let mut tm = theta.clone();
        tm[l] -= step;
        let fd = (kl_at(&tp)? - kl_at(&tm)?) / (2.0 * step);
        worst_rel = worst_rel.max((gkl[l] - fd).abs() / fd.abs().max(1e-12));
    }
    report.check(
        "kl-classical-fd",
        worst_rel <= 1e-4,
        format!("max relative error {worst_rel:.3e}"),
    );

    // Reparametrized estimator equals the direct one exactly.
    let grep = grad_cost_reparam(&a, &p, &hfun, exact)?;
    let gdir = grad_cost_waw(&state, &p, &hfun, exact)?;
    let diff = (&grep.value - &gdir.value).norm();
    report.check(
        "reparam-matches-direct",
        diff <= 1e-8,
        format!("difference norm {diff:.3e}"),
    );

    // Ising energy gradient (photon-number detectors) vs. finite differences.
    let complete = Graph::new(
        modes,
        (0..modes).flat_map(|i| ((i + 1)..modes).map(move |j| (i, j))),
    )?;
    if modes >= 2 {
        let ising = crate::graphs::ising_maxclique(&complete, 2, 4.0, 1.0)?;
        let gn = grad_energy_nrd(&state, &p, &ising, exact)?;
        let mut worst_rel = 0.0f64;
        for k in 0..modes {
            let step = 1e-5;
            let mut wp = weights.clone();
            wp[k] += step;
            let mut wm = weights.clone();
            wm[k] -= step;
            let fd =
                (enumerated_cost(&wp, &ising)? - enumerated_cost(&wm, &ising)?) / (2.0 * step);
            worst_rel = worst_rel.max((gn.value[k] - fd).abs() / fd.abs().max(1e-12));
        }
        report.check(
            "nrd-energy-gradient-fd",
            worst_rel <= 1e-4,
            format!("max relative error {worst_rel:.3e}"),
        );
    }

    // Score-function mean-zero sanity.
    let gz = grad_cost_waw(&state, &p, &|_: &[u32]| 1.0, exact)?;
    report.check(
        "score-mean-zero",
        gz.value.norm() <= 1e-5,
        format!("norm {0:.3e} for constant cost", gz.value.norm()),
    );

    Ok(report)
}
