//! Graph generation (circulant, Erdos-Renyi, Barabasi-Albert grown from a
//! clique), edge-list I/O, the brute-force max-clique oracle, and the
//! max-clique Ising Hamiltonian
//! `H_K(x) = c_V (K - sum x_v)^2 + c_E (K(K-1)/2 - sum_{(u,v) in E} x_u x_v)`,
//! whose energy is zero exactly on indicators of K-cliques.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::SymMatrix;
use crate::rng::rng_from;

/// Simple undirected graph on vertices `0..m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    m: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    /// Builds a graph; edges are normalized to `u < v`, self-loops rejected.
    pub fn new(m: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {a}")));
            }
            if a >= m || b >= m {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) out of range for {m} vertices"
                )));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Self { m, edges: set })
    }

    pub fn vertex_count(&self) -> usize {
        self.m
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == v || b == v)
            .count()
    }

    /// 0/1 adjacency matrix with zero diagonal.
    pub fn adjacency(&self) -> SymMatrix {
        SymMatrix::from_fn(self.m, |i, j| {
            if i != j && self.has_edge(i, j) {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Writes the edge-list format: first line `m`, then `u v` per edge,
    /// 0-based. Lines starting with `#` are comments.
    pub fn write_edge_list(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "{}", self.m)?;
        for (u, v) in &self.edges {
            writeln!(w, "{u} {v}")?;
        }
        Ok(())
    }

    pub fn parse_edge_list(r: impl BufRead) -> Result<Self> {
        let mut m: Option<usize> = None;
        let mut edges = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if m.is_none() {
                m = Some(line.parse().map_err(|_| Error::GraphParse {
                    line: idx + 1,
                    msg: format!("expected vertex count, got {line:?}"),
                })?);
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<usize> {
                tok.ok_or(Error::GraphParse {
                    line: idx + 1,
                    msg: "expected 'u v'".into(),
                })?
                .parse()
                .map_err(|_| Error::GraphParse {
                    line: idx + 1,
                    msg: format!("bad vertex in {line:?}"),
                })
            };
            let u = parse(it.next())?;
            let v = parse(it.next())?;
            edges.push((u, v));
        }
        let m = m.ok_or(Error::GraphParse {
            line: 0,
            msg: "empty edge-list file".into(),
        })?;
        Graph::new(m, edges)
    }

    /// JSON export with the adjacency matrix, for plotting.
    pub fn to_json(&self) -> serde_json::Value {
        let adj = self.adjacency();
        let rows: Vec<Vec<f64>> = (0..self.m)
            .map(|i| (0..self.m).map(|j| adj[(i, j)]).collect())
            .collect();
        serde_json::json!({
            "m": self.m,
            "edges": self.edges.iter().collect::<Vec<_>>(),
            "adjacency": rows,
        })
    }
}

/// Graph generator family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum GraphKind {
    /// Vertex `i` connects to `i +- o (mod m)` for each offset `o`.
    Circulant { offsets: Vec<usize> },
    /// Each unordered pair is an edge independently with probability `prob`.
    ErdosRenyi { prob: f64 },
    /// Complete graph on `k` vertices, then each new vertex attaches to
    /// `attach` distinct uniformly random existing vertices.
    BaFromClique { k: usize, attach: usize },
}

/// Deterministic seeded graph generation.
pub fn gen_graph(kind: &GraphKind, m: usize, seed: u64) -> Result<Graph> {
    if m == 0 {
        return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
    }
    let mut rng = rng_from(seed);
    match kind {
        GraphKind::Circulant { offsets } => {
            let mut edges = Vec::new();
            for &o in offsets {
                if o == 0 || o >= m {
                    return Err(Error::InvalidGraph(format!(
                        "circulant offset {o} invalid for m = {m}"
                    )));
                }
                for i in 0..m {
                    edges.push((i, (i + o) % m));
                }
            }
            Graph::new(m, edges)
        }
        GraphKind::ErdosRenyi { prob } => {
            if !(0.0..=1.0).contains(prob) {
                return Err(Error::InvalidGraph(format!(
                    "edge probability {prob} outside [0, 1]"
                )));
            }
            let mut edges = Vec::new();
            for i in 0..m {
                for j in (i + 1)..m {
                    if rng.random::<f64>() < *prob {
                        edges.push((i, j));
                    }
                }
            }
            Graph::new(m, edges)
        }
        GraphKind::BaFromClique { k, attach } => {
            if *k == 0 || *k > m {
                return Err(Error::InvalidGraph(format!(
                    "seed clique size {k} invalid for m = {m}"
                )));
            }
            let mut edges = Vec::new();
            for i in 0..*k {
                for j in (i + 1)..*k {
                    edges.push((i, j));
                }
            }
            for v in *k..m {
                if *attach > v {
                    return Err(Error::InvalidGraph(format!(
                        "cannot attach vertex {v} to {attach} distinct earlier vertices"
                    )));
                }
                let mut pool: Vec<usize> = (0..v).collect();
                pool.shuffle(&mut rng);
                for &t in pool.iter().take(*attach) {
                    edges.push((v, t));
                }
            }
            Graph::new(m, edges)
        }
    }
}

/// Vertex budget of the exhaustive clique search.
pub const MAX_CLIQUE_BUDGET: usize = 20;

/// Exact maximum clique size and the complete list of maximum cliques,
/// by Bron-Kerbosch enumeration of maximal cliques (m <= 20).
pub fn max_clique_oracle(g: &Graph) -> Result<(usize, Vec<Vec<usize>>)> {
    let m = g.vertex_count();
    if m > MAX_CLIQUE_BUDGET {
        return Err(Error::BudgetExceeded {
            what: "max-clique search vertices",
            limit: MAX_CLIQUE_BUDGET.to_string(),
        });
    }
    let adj: Vec<u32> = (0..m)
        .map(|v| {
            let mut mask = 0u32;
            for u in 0..m {
                if u != v && g.has_edge(u, v) {
                    mask |= 1 << u;
                }
            }
            mask
        })
        .collect();

    let mut best_size = 0usize;
    let mut best: Vec<u32> = Vec::new();
    bron_kerbosch(0, (1u32 << m) - 1, 0, &adj, &mut best_size, &mut best);
    if best_size == 0 {
        // Edgeless graph: every single vertex is a maximum clique.
        return Ok((1, (0..m).map(|v| vec![v]).collect()));
    }
    let cliques = best
        .iter()
        .map(|&mask| (0..m).filter(|&v| mask & (1 << v) != 0).collect())
        .collect();
    Ok((best_size, cliques))
}

fn bron_kerbosch(
    r: u32,
    mut p: u32,
    mut x: u32,
    adj: &[u32],
    best_size: &mut usize,
    best: &mut Vec<u32>,
) {
    if p == 0 && x == 0 {
        let size = r.count_ones() as usize;
        if size > *best_size {
            *best_size = size;
            best.clear();
        }
        if size == *best_size && size > 0 {
            best.push(r);
        }
        return;
    }
    // Pivot on the candidate with the most neighbors in P.
    let pux = p | x;
    let pivot = (0..adj.len())
        .filter(|&v| pux & (1 << v) != 0)
        .max_by_key(|&v| (p & adj[v]).count_ones())
        .unwrap();
    let mut candidates = p & !adj[pivot];
    while candidates != 0 {
        let v = candidates.trailing_zeros() as usize;
        let bit = 1u32 << v;
        candidates &= candidates - 1;
        bron_kerbosch(r | bit, p & adj[v], x & adj[v], adj, best_size, best);
        p &= !bit;
        x |= bit;
    }
}

/// Enumerates all cliques of exactly `k` vertices (ground states of the
/// max-clique Hamiltonian when they exist).
pub fn k_cliques(g: &Graph, k: usize) -> Result<Vec<Vec<usize>>> {
    let m = g.vertex_count();
    if m > MAX_CLIQUE_BUDGET {
        return Err(Error::BudgetExceeded {
            what: "clique enumeration vertices",
            limit: MAX_CLIQUE_BUDGET.to_string(),
        });
    }
    fn extend(
        g: &Graph,
        k: usize,
        start: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for v in start..g.vertex_count() {
            if current.iter().all(|&u| g.has_edge(u, v)) {
                current.push(v);
                extend(g, k, v + 1, current, out);
                current.pop();
            }
        }
    }
    let mut out = Vec::new();
    let mut current = Vec::new();
    extend(g, k, 0, &mut current, &mut out);
    Ok(out)
}

/// General Ising Hamiltonian `H(x) = offset - sum_i h_i x_i
/// - sum_{i<j} J_ij x_i x_j` over bit strings `x`.
#[derive(Clone, Debug)]
pub struct IsingModel {
    pub h: DVector<f64>,
    pub j: DMatrix<f64>,
    pub offset: f64,
}

impl IsingModel {
    pub fn energy(&self, x: &[u8]) -> f64 {
        let m = self.h.len();
        assert_eq!(x.len(), m, "bit string length mismatch");
        let mut e = self.offset;
        for i in 0..m {
            if x[i] != 0 {
                e -= self.h[i];
                for j in (i + 1)..m {
                    if x[j] != 0 {
                        e -= self.j[(i, j)];
                    }
                }
            }
        }
        e
    }
}

/// Max-clique decision instance encoded as an Ising model.
#[derive(Clone, Debug)]
pub struct MaxCliqueIsing {
    pub model: IsingModel,
    pub k: usize,
    pub c_v: f64,
    pub c_e: f64,
}

impl MaxCliqueIsing {
    /// `H_K(x) = c_V (K - sum x_v)^2 + c_E (K(K-1)/2 - sum_{(u,v) in E} x_u x_v)`.
    pub fn energy(&self, x: &[u8]) -> f64 {
        self.model.energy(x)
    }
}

/// Builds the max-clique Ising encoding. Zero energy iff `x` indicates a
/// clique of size `K`.
pub fn ising_maxclique(g: &Graph, k: usize, c_v: f64, c_e: f64) -> Result<MaxCliqueIsing> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("clique size K = {k} < 2")));
    }
    if c_v <= 0.0 || c_e <= 0.0 {
        return Err(Error::InvalidConfig(
            "Ising constants c_V and c_E must be positive".into(),
        ));
    }
    let m = g.vertex_count();
    let kf = k as f64;
    let offset = c_v * kf * kf + c_e * kf * (kf - 1.0) / 2.0;
    let h = DVector::from_element(m, c_v * (2.0 * kf - 1.0));
    let mut j = DMatrix::zeros(m, m);
    for i in 0..m {
        for l in (i + 1)..m {
            let edge = if g.has_edge(i, l) { c_e } else { 0.0 };
            let v = edge - 2.0 * c_v;
            j[(i, l)] = v;
            j[(l, i)] = v;
        }
    }
    Ok(MaxCliqueIsing {
        model: IsingModel { h, j, offset },
        k,
        c_v,
        c_e,
    })
}
