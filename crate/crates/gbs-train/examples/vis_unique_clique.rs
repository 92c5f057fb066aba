//! Variational Ising solver on an 8-vertex graph with a unique 5-clique:
//! trains GBS weights until threshold samples concentrate on the clique's
//! indicator bit string.
//!
//! Run with `cargo run --release --example vis_unique_clique`.

use gbs_train::{vis_train, Graph, VisConfig};

/// K5 on vertices 0..4 plus a triangle {5, 6, 7} attached to the clique.
/// Any extra vertex may touch at most three clique vertices, otherwise it
/// completes a second 5-clique.
fn unique_clique_graph() -> Graph {
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for i in 0..5 {
        for j in (i + 1)..5 {
            edges.push((i, j));
        }
    }
    edges.extend([(5, 6), (6, 7), (5, 7)]);
    edges.extend([(5, 0), (5, 1), (5, 2)]);
    edges.extend([(6, 1), (6, 2), (6, 3)]);
    edges.extend([(7, 2), (7, 3), (7, 4)]);
    Graph::new(8, edges).unwrap()
}

fn main() {
    let graph = unique_clique_graph();
    let cfg = VisConfig::new(graph, 5, 7);
    println!(
        "training on {} vertices, K = {}, c_V = {}, c_E = {}, {} samples/iter",
        cfg.graph.vertex_count(),
        cfg.k,
        cfg.c_v,
        cfg.c_e,
        cfg.samples_per_iter
    );
    let out = vis_train(&cfg).expect("training run");
    println!("ground state: {:?}", out.ground_states[0]);
    for row in out.trace.rows.iter().step_by(10) {
        println!(
            "iter {:3}  energy {:8.3}  success {:.3}",
            row.iter, row.cost, row.metric
        );
    }
    let last = out.trace.final_row().unwrap();
    println!(
        "final success probability {:.3} (weights {:?})",
        last.metric,
        out.final_weights
            .iter()
            .map(|w| (w * 1e3).round() / 1e3)
            .collect::<Vec<_>>()
    );
}
