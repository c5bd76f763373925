use pzero::{Graph, NodeId};
use std::collections::HashMap;

/// Exact distribution of the observed realization for a source, found by
/// branching on every Bernoulli trial of the two-phase SIR step.
pub fn exact_distribution(g: &Graph, p: f64, q: f64, horizon: u32, source: NodeId) -> HashMap<Vec<bool>, f64> {
    #[derive(Clone)]
    struct State {
        status: Vec<u8>, // 0 susceptible, 1 infected, 2 recovered
        prob: f64,
    }
    let n = g.node_count();
    let mut start = State { status: vec![0; n], prob: 1.0 };
    start.status[source] = 1;
    let mut states = vec![start];
    for _ in 0..horizon {
        let mut next_states = Vec::new();
        for s in states {
            let active: Vec<NodeId> = (0..n).filter(|&v| s.status[v] == 1).collect();
            // infection trials in order; a node infected earlier in the phase
            // is no longer a target
            let mut partial = vec![(s.status.clone(), vec![false; n], s.prob)];
            for &u in &active {
                for &v in g.neighbors(u).unwrap() {
                    let mut grown = Vec::new();
                    for (status, newly, prob) in partial {
                        if status[v] == 0 && !newly[v] {
                            let mut hit = newly.clone();
                            hit[v] = true;
                            if p > 0.0 {
                                grown.push((status.clone(), hit, prob * p));
                            }
                            if p < 1.0 {
                                grown.push((status, newly, prob * (1.0 - p)));
                            }
                        } else {
                            grown.push((status, newly, prob));
                        }
                    }
                    partial = grown;
                }
            }
            for (status, newly, prob) in partial {
                let mut outcomes = vec![(status, prob)];
                for &u in &active {
                    let mut split = Vec::new();
                    for (st, pr) in outcomes {
                        if q > 0.0 {
                            let mut r = st.clone();
                            r[u] = 2;
                            split.push((r, pr * q));
                        }
                        if q < 1.0 {
                            split.push((st, pr * (1.0 - q)));
                        }
                    }
                    outcomes = split;
                }
                for (mut st, pr) in outcomes {
                    for v in 0..n {
                        if newly[v] {
                            st[v] = 1;
                        }
                    }
                    next_states.push(State { status: st, prob: pr });
                }
            }
        }
        states = next_states;
    }
    let mut dist = HashMap::new();
    for s in states {
        *dist.entry(s.status.iter().map(|&x| x != 0).collect()).or_insert(0.0) += s.prob;
    }
    dist
}

/// Tie-averaged ranks of `scores`, highest score first.
pub fn average_ranks(scores: &[(NodeId, f64)]) -> HashMap<NodeId, f64> {
    scores
        .iter()
        .map(|&(c, s)| {
            let above = scores.iter().filter(|&&(_, t)| t > s).count() as f64;
            let tied = scores.iter().filter(|&&(_, t)| t == s).count() as f64;
            (c, above + (tied + 1.0) / 2.0)
        })
        .collect()
}
