//! Simulation and gradient-based training of Gaussian boson sampling (GBS)
//! distributions.
//!
//! The crate provides:
//!
//! - exact hafnian kernels and hafnian directional derivatives ([`numerics`]),
//! - the physical-state layer for pure-state A-matrices and the trainable
//!   `W A W` weight parametrization ([`state`]),
//! - exact photon-number and threshold-detector (click) probabilities,
//!   enumeration, and a seeded exact sampler ([`dist`]),
//! - analytic gradients of the distribution and of sampled cost functions,
//!   including classical Kullback-Leibler gradients and threshold-detector
//!   approximations ([`grad`]),
//! - optimizers, the spectral projection to physical states, and two
//!   end-to-end trainers: a variational Ising solver for max-clique and an
//!   unsupervised weight-recovery loop ([`train`]),
//! - graph generation, edge-list I/O, a brute-force max-clique oracle, and
//!   the max-clique Ising encoding ([`graphs`]).
//!
//! See the `examples/` directory for one runnable program per capability and
//! the `gbs-train` binary for the command-line interface.

pub mod cli;
pub mod dist;
pub mod error;
pub mod grad;
pub mod graphs;
pub mod numerics;
pub mod rng;
pub mod state;
pub mod train;

pub use error::{Error, Result};
pub use numerics::{
    hafnian, hafnian_gradient, hafnian_oracle, reduce_matrix, sym_eigendecomposition,
    ReductionSpec, SymMatrix,
};
pub use state::{
    apply_waw, rescale_to_target, validate, waw_product, AMatrix, GaussianViews, RescaleMetric,
    WawParams, PHYSICALITY_MARGIN,
};
pub use dist::{
    enumerate_click, enumerate_photon, prob_click, prob_photon, sample, ClickPattern, Detector,
    PhotonPattern, SampleBatch, SampleOpts,
};
pub use grad::{
    grad_cost_reparam, grad_cost_threshold, grad_cost_waw, grad_energy_nrd, grad_kl_classical,
    grad_kl_threshold, grad_log_likelihood, grad_prob_general, grad_prob_waw, reparam_cost,
    CostFn, EstimatorKind, EvalMode, GradEstimate, ThresholdRegime,
};
pub use graphs::{
    gen_graph, ising_maxclique, k_cliques, max_clique_oracle, Graph, GraphKind, IsingModel,
    MaxCliqueIsing,
};
pub use train::{
    kl_train, project, projected_subgrad_step, unsup_instance, vis_train, weight_matrix_distance,
    ClickData, KlOutcome, OptKind, Optimizer, TrainingTrace, UnsupInstance, VisConfig,
    VisOutcome, WeightProfile,
};
