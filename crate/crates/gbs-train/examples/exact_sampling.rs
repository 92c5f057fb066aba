//! Exact GBS simulation on a small graph state: photon and click
//! probabilities, pattern enumeration, and the seeded sampler, with
//! empirical marginals checked against closed forms.
//!
//! Run with `cargo run --release --example exact_sampling`.

use gbs_train::{
    enumerate_click, enumerate_photon, gen_graph, prob_click, rescale_to_target, sample,
    ClickPattern, Detector, GraphKind, RescaleMetric, SampleOpts, WawParams,
};

fn main() {
    let m = 4;
    let graph = gen_graph(&GraphKind::Circulant { offsets: vec![1] }, m, 0).unwrap();
    let (state, c) =
        rescale_to_target(&graph.adjacency(), 1.5, RescaleMetric::MeanPhotons).unwrap();
    let id = WawParams::identity(m);
    println!("4-cycle state rescaled by c = {c:.4}; <n> = 1.5");

    let photons = enumerate_photon(&state, &id, 16).unwrap();
    println!(
        "photon enumeration: {} patterns capture {:.6} of the mass",
        photons.patterns.len(),
        photons.captured_mass
    );

    let clicks = enumerate_click(&state, &id).unwrap();
    let total: f64 = clicks.iter().map(|(_, p)| p).sum();
    println!("click probabilities sum to {total:.12}");
    let vacuum = prob_click(&state, &id, &ClickPattern::new(vec![0; m]).unwrap()).unwrap();
    println!(
        "vacuum click pattern: {vacuum:.6} (normalization {:.6})",
        state.normalization()
    );

    let batch = sample(&state, &id, Detector::Click, 50_000, 11, SampleOpts::default()).unwrap();
    let empirical = batch.empirical_means();
    let exact = state.click_probs();
    println!("click marginals (empirical vs exact):");
    for k in 0..m {
        println!("  mode {k}: {:.4} vs {:.4}", empirical[k], exact[k]);
    }
}
