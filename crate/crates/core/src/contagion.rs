//! Discrete-time SIR, SI and ISS processes on a [`Graph`].
//!
//! One step of SIR runs in two phases. Every node infected at the start of
//! the step tries to infect each susceptible neighbor with probability `p`
//! (any success infects, newly infected nodes act from the next step on);
//! then every node infected at the start of the step recovers with
//! probability `q`. A node may therefore infect and recover in the same step.
//! SI is SIR with `q = 0`.
//!
//! ISS uses start-of-step states as well: a spreader converts each ignorant
//! neighbor with probability `alpha` and, for each neighbor that is already
//! spreading or stifled, becomes a stifler with probability `beta`. Stifling
//! takes effect at the end of the step.
//!
//! The observation is taken after step `T`: a node's bit is set iff it left
//! the susceptible (ignorant) state at some step in `1..=T`, or is the source.

use rand::distr::{Bernoulli, Distribution};
use rand_distr::{Geometric, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::realization::Realization;
use crate::seed::{self, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
pub enum Model {
    Sir { p: f64, q: f64 },
    Si { p: f64 },
    Iss { alpha: f64, beta: f64 },
}

impl Model {
    fn rates(&self) -> [(&'static str, f64); 2] {
        match *self {
            Model::Sir { p, q } => [("p", p), ("q", q)],
            Model::Si { p } => [("p", p), ("q", 0.0)],
            Model::Iss { alpha, beta } => [("alpha", alpha), ("beta", beta)],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Sir { .. } => "sir",
            Model::Si { .. } => "si",
            Model::Iss { .. } => "iss",
        }
    }
}

/// Normal perturbation added to the process rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateNoise {
    #[serde(default)]
    pub mu: f64,
    pub sigma: f64,
}

/// Per-run parameter uncertainty. Both perturbations are drawn once per
/// simulation run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Success probability of a geometric count (failures before the first
    /// success) added to the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_geometric: Option<f64>,
    /// Shared offset added to both rates, then clamped into `[0, 1]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_normal: Option<RateNoise>,
}

impl NoiseSpec {
    pub fn is_none(&self) -> bool {
        self.t_geometric.is_none() && self.rate_normal.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessParams {
    pub model: Model,
    pub horizon: u32,
    pub noise: Option<NoiseSpec>,
}

impl ProcessParams {
    pub fn new(model: Model, horizon: u32) -> Self {
        ProcessParams {
            model,
            horizon,
            noise: None,
        }
    }

    pub fn sir(p: f64, q: f64, horizon: u32) -> Self {
        Self::new(Model::Sir { p, q }, horizon)
    }

    pub fn si(p: f64, horizon: u32) -> Self {
        Self::new(Model::Si { p }, horizon)
    }

    pub fn iss(alpha: f64, beta: f64, horizon: u32) -> Self {
        Self::new(Model::Iss { alpha, beta }, horizon)
    }

    pub fn with_noise(mut self, noise: NoiseSpec) -> Self {
        self.noise = (!noise.is_none()).then_some(noise);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.model.rates() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::param(format!(
                    "{name} must lie in [0, 1], got {value}"
                )));
            }
        }
        if let Some(noise) = &self.noise {
            if let Some(ps) = noise.t_geometric {
                if !(ps > 0.0 && ps <= 1.0) {
                    return Err(Error::param(format!(
                        "geometric horizon noise parameter must lie in (0, 1], got {ps}"
                    )));
                }
            }
            if let Some(n) = noise.rate_normal {
                if !(n.sigma >= 0.0 && n.sigma.is_finite() && n.mu.is_finite()) {
                    return Err(Error::param(format!(
                        "rate noise needs finite mu and sigma >= 0, got ({}, {})",
                        n.mu, n.sigma
                    )));
                }
            }
        }
        Ok(())
    }

    /// Applies this run's noise draw. Draws nothing when noise is absent.
    fn realize(&self, rng: &mut SimRng) -> Step {
        let mut horizon = self.horizon;
        let mut gamma = 0.0;
        if let Some(noise) = &self.noise {
            if let Some(ps) = noise.t_geometric {
                let eps = Geometric::new(ps).expect("validated").sample(rng);
                horizon = horizon.saturating_add(eps.min(u32::MAX as u64) as u32);
            }
            if let Some(n) = noise.rate_normal {
                gamma = Normal::new(n.mu, n.sigma).expect("validated").sample(rng);
            }
        }
        let bern = |x: f64| Bernoulli::new((x + gamma).clamp(0.0, 1.0)).expect("clamped");
        let kind = match self.model {
            Model::Sir { p, q } => Kind::Sir(bern(p), bern(q)),
            // q stays exactly zero under noise.
            Model::Si { p } => Kind::Sir(bern(p), Bernoulli::new(0.0).expect("zero")),
            Model::Iss { alpha, beta } => Kind::Iss(bern(alpha), bern(beta)),
        };
        Step { kind, horizon }
    }
}

enum Kind {
    Sir(Bernoulli, Bernoulli),
    Iss(Bernoulli, Bernoulli),
}

struct Step {
    kind: Kind,
    horizon: u32,
}

const SUSCEPTIBLE: u8 = 0;
const ACTIVE: u8 = 1;
const REMOVED: u8 = 2;
/// ISS only: converted during the current step.
const FRESH: u8 = 3;

/// Reusable simulation buffers for one graph. Reset cost is proportional to
/// the size of the previous outbreak, not to the graph.
#[derive(Debug, Clone)]
pub struct Simulator<'g> {
    graph: &'g Graph,
    state: Vec<u8>,
    reached: Vec<NodeId>,
    active: Vec<NodeId>,
    next: Vec<NodeId>,
    flagged: Vec<bool>,
    realization: Realization,
}

impl<'g> Simulator<'g> {
    pub fn new(graph: &'g Graph) -> Self {
        let n = graph.node_count();
        Simulator {
            graph,
            state: vec![SUSCEPTIBLE; n],
            reached: Vec::new(),
            active: Vec::new(),
            next: Vec::new(),
            flagged: Vec::new(),
            realization: Realization::empty(n),
        }
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    /// Runs one realization. `params` must already be validated.
    pub fn run(&mut self, params: &ProcessParams, source: NodeId, seed: u64) -> Result<&Realization> {
        let n = self.graph.node_count();
        if source >= n {
            return Err(Error::Index { index: source, len: n });
        }
        self.reset();
        let mut rng = seed::rng(seed);
        let step = params.realize(&mut rng);
        self.state[source] = ACTIVE;
        self.reached.push(source);
        self.active.push(source);
        match step.kind {
            Kind::Sir(infect, recover) => self.run_sir(&infect, &recover, step.horizon, &mut rng),
            Kind::Iss(spread, stifle) => self.run_iss(&spread, &stifle, step.horizon, &mut rng),
        }
        for &v in &self.reached {
            self.realization.set(v);
        }
        Ok(&self.realization)
    }

    /// Nodes set in the last realization, in the order they were reached.
    pub fn reached(&self) -> &[NodeId] {
        &self.reached
    }

    pub fn realization(&self) -> &Realization {
        &self.realization
    }

    fn reset(&mut self) {
        for &v in &self.reached {
            self.state[v] = SUSCEPTIBLE;
        }
        self.reached.clear();
        self.active.clear();
        self.realization.clear_all();
    }

    fn run_sir(&mut self, infect: &Bernoulli, recover: &Bernoulli, horizon: u32, rng: &mut SimRng) {
        let g = self.graph;
        for _ in 0..horizon {
            if self.active.is_empty() {
                break;
            }
            self.next.clear();
            for &u in &self.active {
                for &v in g.adj(u) {
                    if self.state[v] == SUSCEPTIBLE && infect.sample(rng) {
                        self.state[v] = ACTIVE;
                        self.next.push(v);
                    }
                }
            }
            let state = &mut self.state;
            self.active.retain(|&u| {
                if recover.sample(rng) {
                    state[u] = REMOVED;
                    false
                } else {
                    true
                }
            });
            self.reached.extend_from_slice(&self.next);
            self.active.extend_from_slice(&self.next);
        }
    }

    fn run_iss(&mut self, spread: &Bernoulli, stifle: &Bernoulli, horizon: u32, rng: &mut SimRng) {
        let g = self.graph;
        for _ in 0..horizon {
            if self.active.is_empty() {
                break;
            }
            self.next.clear();
            self.flagged.clear();
            for &u in &self.active {
                let mut stifled = false;
                for &v in g.adj(u) {
                    match self.state[v] {
                        SUSCEPTIBLE => {
                            if spread.sample(rng) {
                                self.state[v] = FRESH;
                                self.next.push(v);
                            }
                        }
                        ACTIVE | REMOVED if !stifled && stifle.sample(rng) => stifled = true,
                        _ => {}
                    }
                }
                self.flagged.push(stifled);
            }
            let state = &mut self.state;
            let mut flags = self.flagged.iter();
            self.active.retain(|&u| {
                if *flags.next().expect("one flag per spreader") {
                    state[u] = REMOVED;
                    false
                } else {
                    true
                }
            });
            for &v in &self.next {
                self.state[v] = ACTIVE;
            }
            self.reached.extend_from_slice(&self.next);
            self.active.extend_from_slice(&self.next);
        }
    }
}

/// One realization of the process started at `source`.
pub fn simulate(graph: &Graph, params: &ProcessParams, source: NodeId, seed: u64) -> Result<Realization> {
    params.validate()?;
    Ok(Simulator::new(graph).run(params, source, seed)?.clone())
}

pub fn simulate_iss(
    graph: &Graph,
    alpha: f64,
    beta: f64,
    horizon: u32,
    source: NodeId,
    seed: u64,
) -> Result<Realization> {
    simulate(graph, &ProcessParams::iss(alpha, beta, horizon), source, seed)
}

/// `n` independent realizations; run `i` uses seed `derive(base_seed, i)`.
pub fn batch_simulate(
    graph: &Graph,
    params: &ProcessParams,
    source: NodeId,
    n: usize,
    base_seed: u64,
) -> Result<Vec<Realization>> {
    params.validate()?;
    if n == 0 {
        return Err(Error::param("simulation count must be at least 1"));
    }
    if source >= graph.node_count() {
        return Err(Error::Index {
            index: source,
            len: graph.node_count(),
        });
    }
    (0..n)
        .into_par_iter()
        .map_init(
            || Simulator::new(graph),
            |sim, i| sim.run(params, source, seed::derive(base_seed, i as u64)).cloned(),
        )
        .collect()
}

/// Per-node count of realizations in which the node is set.
pub fn infection_frequencies(realizations: &[Realization]) -> Result<Vec<u64>> {
    let first = realizations
        .first()
        .ok_or_else(|| Error::param("no realizations to count"))?;
    let mut counts = vec![0u64; first.len()];
    for r in realizations {
        first.check_same_len(r)?;
        for v in r.ones() {
            counts[v] += 1;
        }
    }
    Ok(counts)
}
