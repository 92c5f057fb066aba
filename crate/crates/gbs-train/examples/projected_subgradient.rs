//! Projected subgradient descent on the kernel matrix itself: each cycle
//! resets the weights to one, steps them against a cost gradient, forms
//! `W A W` (weights may exceed one here), and projects the result back to
//! the closest physical state by spectral clipping.
//!
//! Run with `cargo run --release --example projected_subgradient`.

use gbs_train::{
    grad_cost_waw, projected_subgrad_step, rescale_to_target, CostFn, EvalMode, Optimizer,
    RescaleMetric, SymMatrix,
};

fn main() {
    // Start from a two-mode state and minimize the mean photon number of
    // mode 0 while keeping mode 1 bright: H(n) = n_0 - n_1.
    let raw = SymMatrix::from_row_major(2, &[0.3, 0.5, 0.5, 0.25]).unwrap();
    let (mut a, _) = rescale_to_target(&raw, 1.0, RescaleMetric::MeanPhotons).unwrap();
    let cost = |n: &[u32]| n[0] as f64 - n[1] as f64;
    let mut opt = Optimizer::sgd(0.05).unwrap();

    for step in 0..20 {
        let n = a.mean_photon_modes();
        let c: f64 = gbs_train::enumerate_photon(&a, &gbs_train::WawParams::identity(2), 24)
            .unwrap()
            .patterns
            .iter()
            .map(|(pat, prob)| cost.cost(pat.counts()) * prob)
            .sum();
        if step % 4 == 0 {
            println!(
                "step {step:2}: cost {c:8.4}  <n_0> {:.4}  <n_1> {:.4}  sigma_max {:.6}",
                n[0],
                n[1],
                a.max_singular_value()
            );
        }
        a = projected_subgrad_step(
            &a,
            |state, p| Ok(grad_cost_waw(state, p, &cost, EvalMode::Exact { photon_cutoff: 24 })?.value),
            &mut opt,
        )
        .unwrap();
    }
    let n = a.mean_photon_modes();
    println!(
        "final: <n_0> {:.4}, <n_1> {:.4}; every iterate stayed physical",
        n[0], n[1]
    );
}
