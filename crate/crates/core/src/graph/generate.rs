use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Graph, NodeId};
use crate::error::{Error, Result};
use crate::seed;

/// Recipe for a contact network. Random families carry their own seed so
/// that the same spec always yields the same graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    /// Non-periodic 4-neighbor grid; node `(r, c)` has id `r * cols + c`.
    Grid2d { rows: usize, cols: usize },
    /// Cycle where each node links to `k / 2` neighbors on each side.
    RingLattice { n: usize, k: usize },
    WattsStrogatz {
        n: usize,
        k: usize,
        beta: f64,
        #[serde(default)]
        seed: u64,
    },
    ErdosRenyi {
        n: usize,
        p: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Preferential attachment grown from a complete core of `m0` nodes,
    /// each new node adding `m` edges.
    BarabasiAlbert {
        n: usize,
        m0: usize,
        m: usize,
        #[serde(default)]
        seed: u64,
    },
    EdgeList { path: PathBuf },
}

impl GraphSpec {
    pub fn seed(&self) -> Option<u64> {
        match *self {
            GraphSpec::WattsStrogatz { seed, .. }
            | GraphSpec::ErdosRenyi { seed, .. }
            | GraphSpec::BarabasiAlbert { seed, .. } => Some(seed),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            GraphSpec::Grid2d { rows, cols } => {
                if rows == 0 || cols == 0 {
                    return Err(Error::param("grid2d: rows and cols must be positive"));
                }
            }
            GraphSpec::RingLattice { n, k } => check_ring("ring_lattice", n, k)?,
            GraphSpec::WattsStrogatz { n, k, beta, .. } => {
                check_ring("watts_strogatz", n, k)?;
                if !(0.0..=1.0).contains(&beta) {
                    return Err(Error::param(format!(
                        "watts_strogatz: beta must lie in [0, 1], got {beta}"
                    )));
                }
            }
            GraphSpec::ErdosRenyi { n, p, .. } => {
                if n == 0 {
                    return Err(Error::param("erdos_renyi: n must be positive"));
                }
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::param(format!(
                        "erdos_renyi: edge probability must lie in [0, 1], got {p}"
                    )));
                }
            }
            GraphSpec::BarabasiAlbert { n, m0, m, .. } => {
                if m0 == 0 || m == 0 {
                    return Err(Error::param("barabasi_albert: m0 and m must be positive"));
                }
                if m > m0 {
                    return Err(Error::param(format!(
                        "barabasi_albert: m ({m}) must not exceed m0 ({m0})"
                    )));
                }
                if n < m0 {
                    return Err(Error::param(format!(
                        "barabasi_albert: n ({n}) must be at least m0 ({m0})"
                    )));
                }
            }
            GraphSpec::EdgeList { .. } => {}
        }
        Ok(())
    }
}

fn check_ring(name: &str, n: usize, k: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::param(format!("{name}: n must be positive")));
    }
    if !k.is_multiple_of(2) {
        return Err(Error::param(format!("{name}: k ({k}) must be even")));
    }
    if k >= n {
        return Err(Error::param(format!("{name}: k ({k}) must be less than n ({n})")));
    }
    Ok(())
}

/// Builds the graph described by `spec`. Deterministic in `spec`.
pub fn generate(spec: &GraphSpec) -> Result<Graph> {
    spec.validate()?;
    let g = match *spec {
        GraphSpec::Grid2d { rows, cols } => grid2d(rows, cols),
        GraphSpec::RingLattice { n, k } => Graph::from_lists(ring_lists(n, k)),
        GraphSpec::WattsStrogatz { n, k, beta, seed } => watts_strogatz(n, k, beta, seed),
        GraphSpec::ErdosRenyi { n, p, seed } => erdos_renyi(n, p, seed),
        GraphSpec::BarabasiAlbert { n, m0, m, seed } => barabasi_albert(n, m0, m, seed),
        GraphSpec::EdgeList { ref path } => super::load_edge_list(path)?.graph,
    };
    Ok(g)
}

fn grid2d(rows: usize, cols: usize) -> Graph {
    let id = |r: usize, c: usize| r * cols + c;
    let mut lists = vec![Vec::with_capacity(4); rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                lists[id(r, c)].push(id(r, c + 1));
                lists[id(r, c + 1)].push(id(r, c));
            }
            if r + 1 < rows {
                lists[id(r, c)].push(id(r + 1, c));
                lists[id(r + 1, c)].push(id(r, c));
            }
        }
    }
    Graph::from_lists(lists)
}

fn ring_lists(n: usize, k: usize) -> Vec<Vec<NodeId>> {
    let mut lists = vec![Vec::with_capacity(k); n];
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            lists[u].push(v);
            lists[v].push(u);
        }
    }
    lists
}

/// Ring lattice whose clockwise edges each have their far endpoint moved to
/// a uniform random node with probability `beta`, skipping choices that would
/// create a self-loop or a duplicate edge. Edge count is preserved.
fn watts_strogatz(n: usize, k: usize, beta: f64, seed: u64) -> Graph {
    let mut lists = ring_lists(n, k);
    let mut rng = seed::rng(seed);
    for j in 1..=k / 2 {
        for u in 0..n {
            if !rng.random_bool(beta) {
                continue;
            }
            let v = (u + j) % n;
            if lists[u].len() >= n - 1 {
                continue;
            }
            let Some(pos) = lists[u].iter().position(|&x| x == v) else {
                continue;
            };
            let w = loop {
                let w = rng.random_range(0..n);
                if w != u && !lists[u].contains(&w) {
                    break w;
                }
            };
            lists[u].swap_remove(pos);
            let back = lists[v].iter().position(|&x| x == u).expect("symmetric");
            lists[v].swap_remove(back);
            lists[u].push(w);
            lists[w].push(u);
        }
    }
    Graph::from_lists(lists)
}

fn erdos_renyi(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = seed::rng(seed);
    let mut lists = vec![Vec::new(); n];
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                lists[u].push(v);
                lists[v].push(u);
            }
        }
    }
    Graph::from_lists(lists)
}

fn barabasi_albert(n: usize, m0: usize, m: usize, seed: u64) -> Graph {
    let mut rng = seed::rng(seed);
    let mut lists: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    // Each edge contributes both endpoints, so uniform draws from this pool
    // are degree-proportional.
    let mut pool: Vec<NodeId> = Vec::with_capacity(2 * (m0 * m0 + n * m));
    for u in 0..m0 {
        for v in u + 1..m0 {
            lists[u].push(v);
            lists[v].push(u);
            pool.push(u);
            pool.push(v);
        }
    }
    let mut targets = Vec::with_capacity(m);
    for new in m0..n {
        targets.clear();
        while targets.len() < m {
            let t = if pool.is_empty() {
                // Single-node core has no degree mass yet.
                rng.random_range(0..new)
            } else {
                pool[rng.random_range(0..pool.len())]
            };
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            lists[new].push(t);
            lists[t].push(new);
            pool.push(new);
            pool.push(t);
        }
    }
    Graph::from_lists(lists)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_canonical(g: &Graph) {
        let mut degree_sum = 0;
        for u in 0..g.node_count() {
            let nbrs = g.neighbors(u).unwrap();
            assert!(nbrs.windows(2).all(|w| w[0] < w[1]), "sorted, no duplicates");
            assert!(!nbrs.contains(&u), "self-loop at {u}");
            for &v in nbrs {
                assert!(g.neighbors(v).unwrap().contains(&u), "asymmetric {u}-{v}");
            }
            degree_sum += nbrs.len();
        }
        assert_eq!(degree_sum, 2 * g.edge_count());
    }

    #[test]
    fn grid_30x30() {
        let g = generate(&GraphSpec::Grid2d { rows: 30, cols: 30 }).unwrap();
        assert_eq!(g.node_count(), 900);
        assert_eq!(g.edge_count(), 2 * 30 * 29);
        assert_canonical(&g);
    }

    #[test]
    fn grid_3x3_degrees() {
        let g = generate(&GraphSpec::Grid2d { rows: 3, cols: 3 }).unwrap();
        assert_eq!(g.degree(4).unwrap(), 4);
        assert_eq!(g.degree(0).unwrap(), 2);
        assert_eq!(g.degree(1).unwrap(), 3);
    }

    #[test]
    fn ring_is_cycle() {
        let g = generate(&GraphSpec::RingLattice { n: 10, k: 2 }).unwrap();
        assert_eq!(g.edge_count(), 10);
        assert!((0..10).all(|u| g.degree(u).unwrap() == 2));
    }

    #[test]
    fn ws_beta_zero_is_ring() {
        let ring = generate(&GraphSpec::RingLattice { n: 200, k: 6 }).unwrap();
        let ws = generate(&GraphSpec::WattsStrogatz {
            n: 200,
            k: 6,
            beta: 0.0,
            seed: 9,
        })
        .unwrap();
        assert_eq!(ring, ws);
    }

    #[test]
    fn ws_full_rewiring_conserves_edges() {
        let g = generate(&GraphSpec::WattsStrogatz {
            n: 5000,
            k: 10,
            beta: 1.0,
            seed: 1,
        })
        .unwrap();
        assert_eq!(g.node_count(), 5000);
        assert_eq!(g.edge_count(), 25000);
        assert_canonical(&g);
        let mut hist = std::collections::BTreeMap::new();
        for u in 0..g.node_count() {
            *hist.entry(g.degree(u).unwrap()).or_insert(0usize) += 1;
        }
        assert!(hist.len() > 5, "degree distribution still constant: {hist:?}");
    }

    #[test]
    fn ba_handshake() {
        let g = generate(&GraphSpec::BarabasiAlbert {
            n: 1000,
            m0: 5,
            m: 1,
            seed: 3,
        })
        .unwrap();
        let sum: usize = (0..1000).map(|u| g.degree(u).unwrap()).sum();
        assert_eq!(sum, 2 * g.edge_count());
        assert_eq!(g.edge_count(), 10 + 995);
        assert_canonical(&g);
    }

    #[test]
    fn ba_single_node_core() {
        let g = generate(&GraphSpec::BarabasiAlbert {
            n: 20,
            m0: 1,
            m: 1,
            seed: 0,
        })
        .unwrap();
        assert_eq!(g.edge_count(), 19);
    }

    #[test]
    fn er_extremes() {
        let empty = generate(&GraphSpec::ErdosRenyi { n: 30, p: 0.0, seed: 1 }).unwrap();
        assert_eq!(empty.edge_count(), 0);
        let full = generate(&GraphSpec::ErdosRenyi { n: 30, p: 1.0, seed: 1 }).unwrap();
        assert_eq!(full.edge_count(), 30 * 29 / 2);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = GraphSpec::WattsStrogatz {
            n: 500,
            k: 4,
            beta: 0.3,
            seed: 42,
        };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = GraphSpec::WattsStrogatz {
            n: 500,
            k: 4,
            beta: 0.3,
            seed: 43,
        };
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn invalid_specs_name_the_constraint() {
        let cases = [
            (GraphSpec::RingLattice { n: 10, k: 3 }, "even"),
            (
                GraphSpec::WattsStrogatz {
                    n: 10,
                    k: 2,
                    beta: 1.5,
                    seed: 0,
                },
                "beta",
            ),
            (GraphSpec::ErdosRenyi { n: 10, p: -0.1, seed: 0 }, "probability"),
            (
                GraphSpec::BarabasiAlbert {
                    n: 10,
                    m0: 2,
                    m: 3,
                    seed: 0,
                },
                "must not exceed m0",
            ),
            (GraphSpec::Grid2d { rows: 0, cols: 3 }, "positive"),
        ];
        for (spec, needle) in cases {
            let err = generate(&spec).unwrap_err().to_string();
            assert!(err.contains(needle), "{err} should mention {needle}");
        }
    }

    #[test]
    fn ws_clustering_trend() {
        let mean_clustering = |beta: f64| {
            (0..20)
                .map(|seed| {
                    generate(&GraphSpec::WattsStrogatz {
                        n: 300,
                        k: 10,
                        beta,
                        seed,
                    })
                    .unwrap()
                    .average_clustering()
                })
                .sum::<f64>()
                / 20.0
        };
        let betas = [0.0, 0.01, 0.05, 0.1, 0.3, 0.6, 1.0];
        let values: Vec<f64> = betas.iter().map(|&b| mean_clustering(b)).collect();
        assert!(
            values.windows(2).all(|w| w[1] < w[0]),
            "clustering not decreasing: {values:?}"
        );
    }
}
