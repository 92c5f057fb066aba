//! Variational Ising solver on random graphs: Barabasi-Albert graphs grown
//! from a 5-clique and Erdos-Renyi graphs with edge probability one half,
//! ten vertices each.
//!
//! Run with `cargo run --release --example vis_random_graphs`.

use gbs_train::{gen_graph, max_clique_oracle, vis_train, GraphKind, VisConfig};

fn main() {
    println!("Barabasi-Albert graphs grown from a 5-clique (attach 3):");
    for seed in [1u64, 2, 3] {
        let graph = gen_graph(&GraphKind::BaFromClique { k: 5, attach: 3 }, 10, seed).unwrap();
        let (k, cliques) = max_clique_oracle(&graph).unwrap();
        let cfg = VisConfig::new(graph, k, 200 + seed);
        let out = vis_train(&cfg).expect("training run");
        println!(
            "  seed {seed}: K = {k} ({} maximum cliques), success {:.3} -> {:.3}",
            cliques.len(),
            out.trace.rows[0].metric,
            out.trace.final_row().unwrap().metric
        );
    }

    println!("Erdos-Renyi graphs with p = 0.5:");
    let mut used = 0;
    let mut gseed = 0u64;
    while used < 3 {
        gseed += 1;
        let graph = gen_graph(&GraphKind::ErdosRenyi { prob: 0.5 }, 10, gseed).unwrap();
        let (k, cliques) = max_clique_oracle(&graph).unwrap();
        if k != 4 && k != 5 {
            continue;
        }
        used += 1;
        let cfg = VisConfig::new(graph, k, 100 + gseed);
        let out = vis_train(&cfg).expect("training run");
        println!(
            "  graph seed {gseed}: K = {k} ({} maximum cliques), success {:.3} -> {:.3}",
            cliques.len(),
            out.trace.rows[0].metric,
            out.trace.final_row().unwrap().metric
        );
    }
}
