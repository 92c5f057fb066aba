//! Unsupervised learning: recover hidden GBS weights from 1000 threshold
//! samples of a 16-node circulant graph state by classical
//! Kullback-Leibler gradient descent (no model sampling during training).
//!
//! Run with `cargo run --release --example unsupervised_recovery`.

use gbs_train::rng::{derive_seed, SeedDomain};
use gbs_train::{
    gen_graph, kl_train, sample, unsup_instance, ClickData, Detector, GraphKind, SampleOpts,
    WawParams, WeightProfile,
};

fn main() {
    let m = 16;
    let graph = gen_graph(&GraphKind::Circulant { offsets: vec![1, 2] }, m, 0).unwrap();
    let instance = unsup_instance(&graph, WeightProfile::LinearUp, 3.0, 3).unwrap();
    println!(
        "hidden weights: {:?}",
        instance
            .hidden_weights
            .iter()
            .map(|w| (w * 1e3).round() / 1e3)
            .collect::<Vec<_>>()
    );

    let data = sample(
        &instance.data_state,
        &WawParams::identity(m),
        Detector::Click,
        1000,
        derive_seed(3, SeedDomain::DataGen, 0),
        SampleOpts::default(),
    )
    .unwrap();

    let p0 = WawParams::basis_reparam(vec![5.0; m]);
    let out = kl_train(
        &instance.base,
        ClickData::Batch(&data),
        &p0,
        0.1,
        0.9,
        200,
        Some(&instance.hidden_weights),
    )
    .expect("training run");

    for row in out.trace.rows.iter().step_by(25) {
        println!(
            "iter {:3}  data NLL {:8.4}  ||W - W_model|| {:.4}",
            row.iter, row.cost, row.metric
        );
    }
    println!(
        "recovered weights: {:?}",
        out.final_weights
            .iter()
            .map(|w| (w * 1e3).round() / 1e3)
            .collect::<Vec<_>>()
    );
}
