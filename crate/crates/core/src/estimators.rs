//! Monte-Carlo likelihood estimators and the maximum-likelihood ranking.
//!
//! Each estimator simulates the process `n` times from a candidate source and
//! condenses the simulated outbreaks into one score, higher meaning more
//! likely. Candidates are scored independently: candidate `c` draws from the
//! seed stream `derive(seed, c)` and run `i` of that candidate from
//! `derive(derive(seed, c), i)`.

use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contagion::{ProcessParams, Simulator};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::realization::Realization;
use crate::seed;
use crate::similarity::{Comparator, SimilarityMeasure};

pub const DEFAULT_TOP_FRACTION: f64 = 0.05;
pub const DEFAULT_SMOOTHING: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorKind {
    /// One minus the area under the empirical CDF of similarities.
    Aucdf { measure: SimilarityMeasure },
    /// Mean of the `top_fraction` highest similarities.
    AvgTopK {
        measure: SimilarityMeasure,
        top_fraction: f64,
    },
    /// Independent per-node log-likelihood from smoothed infection counts.
    NaiveBayes { smoothing: f64 },
    /// Uniform random score per candidate.
    RandomBaseline,
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Aucdf { .. } => "aucdf",
            EstimatorKind::AvgTopK { .. } => "avgtopk",
            EstimatorKind::NaiveBayes { .. } => "nb",
            EstimatorKind::RandomBaseline => "random",
        }
    }

    pub fn log_domain(&self) -> bool {
        matches!(self, EstimatorKind::NaiveBayes { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    pub n_simulations: usize,
}

impl EstimatorSpec {
    pub fn new(kind: EstimatorKind, n_simulations: usize) -> Self {
        EstimatorSpec {
            kind,
            n_simulations,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_simulations;
        if n == 0 {
            return Err(Error::param("n_simulations must be at least 1"));
        }
        match self.kind {
            EstimatorKind::AvgTopK { top_fraction, .. } => {
                if !(top_fraction > 0.0 && top_fraction <= 1.0) {
                    return Err(Error::param(format!(
                        "top_fraction must lie in (0, 1], got {top_fraction}"
                    )));
                }
            }
            EstimatorKind::NaiveBayes { smoothing } => check_smoothing(smoothing, n)?,
            _ => {}
        }
        Ok(())
    }
}

fn check_smoothing(smoothing: f64, n: usize) -> Result<()> {
    if !(smoothing > 0.0 && smoothing < n as f64) {
        return Err(Error::param(format!(
            "smoothing must lie in (0, n_simulations = {n}), got {smoothing}"
        )));
    }
    Ok(())
}

/// How equal scores share rank positions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    /// Tied candidates get the mean of the positions they occupy.
    #[default]
    Average,
    /// Tied candidates all get the last position they occupy.
    Worst,
}

/// Observed outbreak, optionally restricted to a subset of observed nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    realization: Realization,
    mask: Option<Realization>,
}

impl Observation {
    pub fn full(realization: Realization) -> Self {
        Observation {
            realization,
            mask: None,
        }
    }

    /// Bits of `realization` outside the mask are cleared.
    pub fn masked(realization: &Realization, mask: Realization) -> Result<Self> {
        let realization = realization.and(&mask)?;
        if mask.count_ones() == 0 {
            return Err(Error::param("observation mask selects no nodes"));
        }
        Ok(Observation {
            realization,
            mask: Some(mask),
        })
    }

    pub fn realization(&self) -> &Realization {
        &self.realization
    }

    pub fn mask(&self) -> Option<&Realization> {
        self.mask.as_ref()
    }

    pub fn len(&self) -> usize {
        self.realization.len()
    }

    pub fn is_empty(&self) -> bool {
        self.realization.is_empty()
    }

    /// Observed infected nodes: the default candidate set.
    pub fn infected(&self) -> Vec<NodeId> {
        self.realization.ones().collect()
    }

    fn comparator(&self, measure: SimilarityMeasure) -> Result<Comparator> {
        Comparator::new(measure, &self.realization, self.mask.as_ref())
    }

    fn check_graph(&self, graph: &Graph) -> Result<()> {
        if self.len() != graph.node_count() {
            return Err(Error::Dimension {
                expected: graph.node_count(),
                found: self.len(),
            });
        }
        Ok(())
    }
}

impl From<Realization> for Observation {
    fn from(r: Realization) -> Self {
        Observation::full(r)
    }
}

/// 1 minus the exact area under the right-continuous empirical CDF of
/// `samples` on `[0, 1]`, integrated step by step. Samples must lie in
/// `[0, 1]`.
pub fn aucdf_score(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut area = 0.0;
    for (j, pair) in sorted.windows(2).enumerate() {
        area += (j + 1) as f64 / n * (pair[1] - pair[0]);
    }
    if let Some(&last) = sorted.last() {
        area += 1.0 - last;
    }
    1.0 - area
}

/// Number of top samples averaged for `n` samples.
pub fn top_k_count(top_fraction: f64, n: usize) -> usize {
    ((top_fraction * n as f64).round() as usize).clamp(1, n.max(1))
}

/// Mean of the `top_k_count(top_fraction, len)` largest samples.
pub fn avg_top_k(samples: &[f64], top_fraction: f64) -> f64 {
    let k = top_k_count(top_fraction, samples.len());
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    sorted[..k].iter().sum::<f64>() / k as f64
}

/// Smoothed per-node infection probability `(m + eps) / (n + eps)`.
#[inline]
pub fn smoothed_probability(count: u64, n: usize, smoothing: f64) -> f64 {
    (count as f64 + smoothing) / (n as f64 + smoothing)
}

/// Log-probability that a node is set (`present`) or not, given its count.
/// For the absent case the probability is capped at `n / (n + eps)` so a node
/// set in every run still yields a finite `ln(eps / (n + eps))`.
#[inline]
pub fn node_log_term(count: u64, n: usize, smoothing: f64, present: bool) -> f64 {
    let p = smoothed_probability(count, n, smoothing);
    if present {
        p.ln()
    } else {
        let cap = n as f64 / (n as f64 + smoothing);
        (1.0 - p.min(cap)).ln()
    }
}

/// Naive-Bayes log-likelihood of `observation` given per-node counts out of
/// `n` runs. Only observed positions contribute.
pub fn naive_bayes_log_likelihood(
    counts: &[u64],
    n: usize,
    observation: &Observation,
    smoothing: f64,
) -> Result<f64> {
    if counts.len() != observation.len() {
        return Err(Error::Dimension {
            expected: observation.len(),
            found: counts.len(),
        });
    }
    check_smoothing(smoothing, n)?;
    let observed = observation.realization();
    let term = |k: usize| node_log_term(counts[k], n, smoothing, observed.get(k));
    Ok(match observation.mask() {
        None => (0..counts.len()).map(term).sum(),
        Some(mask) => mask.ones().map(term).sum(),
    })
}

/// `n` similarity samples between the observation and outbreaks started at
/// `candidate`.
fn similarity_samples_with(
    sim: &mut Simulator<'_>,
    params: &ProcessParams,
    comparator: &Comparator,
    candidate: NodeId,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    (0..n)
        .map(|i| {
            let r = sim.run(params, candidate, seed::derive(seed, i as u64))?;
            Ok(comparator.score_words(r.words()))
        })
        .collect()
}

fn infection_counts_with(
    sim: &mut Simulator<'_>,
    params: &ProcessParams,
    candidate: NodeId,
    n: usize,
    seed: u64,
) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; sim.graph().node_count()];
    for i in 0..n {
        sim.run(params, candidate, seed::derive(seed, i as u64))?;
        for &v in sim.reached() {
            counts[v] += 1;
        }
    }
    Ok(counts)
}

pub fn similarity_samples(
    graph: &Graph,
    params: &ProcessParams,
    observation: &Observation,
    candidate: NodeId,
    measure: SimilarityMeasure,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    params.validate()?;
    observation.check_graph(graph)?;
    if n == 0 {
        return Err(Error::param("n_simulations must be at least 1"));
    }
    let comparator = observation.comparator(measure)?;
    similarity_samples_with(&mut Simulator::new(graph), params, &comparator, candidate, n, seed)
}

pub fn estimate_aucdf(
    graph: &Graph,
    params: &ProcessParams,
    observation: &Observation,
    candidate: NodeId,
    measure: SimilarityMeasure,
    n: usize,
    seed: u64,
) -> Result<f64> {
    let samples = similarity_samples(graph, params, observation, candidate, measure, n, seed)?;
    Ok(aucdf_score(&samples))
}

#[allow(clippy::too_many_arguments)]
pub fn estimate_avgtopk(
    graph: &Graph,
    params: &ProcessParams,
    observation: &Observation,
    candidate: NodeId,
    measure: SimilarityMeasure,
    top_fraction: f64,
    n: usize,
    seed: u64,
) -> Result<f64> {
    EstimatorSpec::new(
        EstimatorKind::AvgTopK {
            measure,
            top_fraction,
        },
        n,
    )
    .validate()?;
    let samples = similarity_samples(graph, params, observation, candidate, measure, n, seed)?;
    Ok(avg_top_k(&samples, top_fraction))
}

pub fn estimate_naive_bayes(
    graph: &Graph,
    params: &ProcessParams,
    observation: &Observation,
    candidate: NodeId,
    smoothing: f64,
    n: usize,
    seed: u64,
) -> Result<f64> {
    params.validate()?;
    observation.check_graph(graph)?;
    check_smoothing(smoothing, n)?;
    let counts = infection_counts_with(&mut Simulator::new(graph), params, candidate, n, seed)?;
    naive_bayes_log_likelihood(&counts, n, observation, smoothing)
}

/// Scores one candidate on the seed stream reserved for it.
fn score_candidate(
    sim: &mut Simulator<'_>,
    params: &ProcessParams,
    observation: &Observation,
    comparator: Option<&Comparator>,
    spec: &EstimatorSpec,
    candidate: NodeId,
    seed: u64,
) -> Result<f64> {
    let stream = seed::derive(seed, candidate as u64);
    let n = spec.n_simulations;
    match spec.kind {
        EstimatorKind::Aucdf { .. } => {
            let cmp = comparator.expect("similarity estimator");
            let samples = similarity_samples_with(sim, params, cmp, candidate, n, stream)?;
            Ok(aucdf_score(&samples))
        }
        EstimatorKind::AvgTopK { top_fraction, .. } => {
            let cmp = comparator.expect("similarity estimator");
            let samples = similarity_samples_with(sim, params, cmp, candidate, n, stream)?;
            Ok(avg_top_k(&samples, top_fraction))
        }
        EstimatorKind::NaiveBayes { smoothing } => {
            let counts = infection_counts_with(sim, params, candidate, n, stream)?;
            naive_bayes_log_likelihood(&counts, n, observation, smoothing)
        }
        EstimatorKind::RandomBaseline => Ok(seed::rng(stream).random::<f64>()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedCandidate {
    pub candidate_id: NodeId,
    pub score: f64,
    /// 1-based position, tie-adjusted per [`TieRule`].
    pub rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LikelihoodReport {
    pub estimator: &'static str,
    /// `"log"` for Naive Bayes log-likelihoods, `"linear"` otherwise.
    pub score_domain: &'static str,
    pub tie_rule: TieRule,
    /// Candidates by descending score; equal scores ordered by id.
    pub ranked: Vec<RankedCandidate>,
    pub argmax: NodeId,
}

impl LikelihoodReport {
    pub fn from_scores(
        kind: &EstimatorKind,
        scores: Vec<(NodeId, f64)>,
        tie_rule: TieRule,
    ) -> Result<Self> {
        let ranked = rank_scores(scores, tie_rule)?;
        Ok(LikelihoodReport {
            estimator: kind.name(),
            score_domain: if kind.log_domain() { "log" } else { "linear" },
            tie_rule,
            argmax: ranked[0].candidate_id,
            ranked,
        })
    }

    pub fn len(&self) -> usize {
        self.ranked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked.is_empty()
    }

    pub fn score(&self, candidate: NodeId) -> Option<f64> {
        self.entry(candidate).map(|c| c.score)
    }

    pub fn rank(&self, candidate: NodeId) -> Option<f64> {
        self.entry(candidate).map(|c| c.rank)
    }

    /// Rank divided by the candidate count, in `(0, 1]`.
    pub fn relative_rank(&self, candidate: NodeId) -> Option<f64> {
        self.rank(candidate).map(|r| r / self.len() as f64)
    }

    fn entry(&self, candidate: NodeId) -> Option<&RankedCandidate> {
        self.ranked.iter().find(|c| c.candidate_id == candidate)
    }

    /// `candidate_id,score,rank` rows in ranked order.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["candidate_id", "score", "rank"])?;
        for c in &self.ranked {
            w.write_record([
                c.candidate_id.to_string(),
                format!("{:?}", c.score),
                format!("{:?}", c.rank),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("ascii"))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn rank_scores(mut scores: Vec<(NodeId, f64)>, tie_rule: TieRule) -> Result<Vec<RankedCandidate>> {
    if scores.is_empty() {
        return Err(Error::param("candidate set is empty"));
    }
    if let Some(&(c, _)) = scores.iter().find(|(_, s)| s.is_nan()) {
        return Err(Error::param(format!("score for candidate {c} is NaN")));
    }
    scores.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut ranked = Vec::with_capacity(scores.len());
    let mut start = 0;
    while start < scores.len() {
        let mut end = start + 1;
        while end < scores.len() && scores[end].1 == scores[start].1 {
            end += 1;
        }
        // Positions start+1 ..= end share one rank.
        let rank = match tie_rule {
            TieRule::Average => (start + 1 + end) as f64 / 2.0,
            TieRule::Worst => end as f64,
        };
        ranked.extend(scores[start..end].iter().map(|&(candidate_id, score)| RankedCandidate {
            candidate_id,
            score,
            rank,
        }));
        start = end;
    }
    Ok(ranked)
}

/// Scores every candidate with `spec` and ranks them by descending score.
pub fn rank_sources(
    graph: &Graph,
    params: &ProcessParams,
    observation: &Observation,
    candidates: &[NodeId],
    spec: &EstimatorSpec,
    seed: u64,
) -> Result<LikelihoodReport> {
    rank_sources_with(graph, params, observation, candidates, spec, TieRule::default(), seed)
}

pub fn rank_sources_with(
    graph: &Graph,
    params: &ProcessParams,
    observation: &Observation,
    candidates: &[NodeId],
    spec: &EstimatorSpec,
    tie_rule: TieRule,
    seed: u64,
) -> Result<LikelihoodReport> {
    params.validate()?;
    spec.validate()?;
    observation.check_graph(graph)?;
    if candidates.is_empty() {
        return Err(Error::param("candidate set is empty"));
    }
    let mut seen = HashSet::with_capacity(candidates.len());
    for &c in candidates {
        if c >= graph.node_count() {
            return Err(Error::Index {
                index: c,
                len: graph.node_count(),
            });
        }
        if !seen.insert(c) {
            return Err(Error::param(format!("candidate {c} listed twice")));
        }
    }
    let comparator = match spec.kind {
        EstimatorKind::Aucdf { measure } | EstimatorKind::AvgTopK { measure, .. } => {
            Some(observation.comparator(measure)?)
        }
        _ => None,
    };
    let scores = candidates
        .par_iter()
        .map_init(
            || Simulator::new(graph),
            |sim, &c| {
                score_candidate(sim, params, observation, comparator.as_ref(), spec, c, seed)
                    .map(|s| (c, s))
            },
        )
        .collect::<Result<Vec<_>>>()?;
    LikelihoodReport::from_scores(&spec.kind, scores, tie_rule)
}
