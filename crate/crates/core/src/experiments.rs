//! Source-location experiments and cumulative rank curves.
//!
//! One experiment picks a uniform random source, simulates a ground-truth
//! outbreak large enough to be interesting, optionally hides a random subset
//! of nodes, ranks the observed infected nodes with an estimator, and records
//! where the true source landed. A batch of experiments is summarized by the
//! empirical CDF of the relative ranks and the area under it.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::contagion::{ProcessParams, Simulator};
use crate::error::{Error, Result};
use crate::estimators::{rank_sources_with, EstimatorSpec, Observation, TieRule};
use crate::graph::{generate, Graph, GraphSpec, NodeId};
use crate::realization::Realization;
use crate::seed::{self, stream};

pub const DEFAULT_MIN_INFECTED_FRACTION: f64 = 0.01;
pub const DEFAULT_MAX_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    pub process: ProcessParams,
    pub estimator: EstimatorSpec,
    pub n_experiments: usize,
    pub min_infected_fraction: f64,
    pub observed_fraction: f64,
    pub master_seed: u64,
    /// Ground-truth draws allowed per experiment before giving up.
    pub max_attempts: usize,
    pub tie_rule: TieRule,
}

impl ExperimentConfig {
    pub fn new(graph: GraphSpec, process: ProcessParams, estimator: EstimatorSpec) -> Self {
        ExperimentConfig {
            graph,
            process,
            estimator,
            n_experiments: 100,
            min_infected_fraction: DEFAULT_MIN_INFECTED_FRACTION,
            observed_fraction: 1.0,
            master_seed: 0,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            tie_rule: TieRule::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        self.process.validate()?;
        self.estimator.validate()?;
        if self.n_experiments == 0 {
            return Err(Error::param("n_experiments must be at least 1"));
        }
        if self.max_attempts == 0 {
            return Err(Error::param("max_attempts must be at least 1"));
        }
        for (name, value) in [
            ("min_infected_fraction", self.min_infected_fraction),
            ("observed_fraction", self.observed_fraction),
        ] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(Error::param(format!("{name} must lie in (0, 1], got {value}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub experiment_id: usize,
    pub true_source: NodeId,
    /// Nodes infected in the ground truth, observed or not.
    pub infected_count: usize,
    pub candidate_count: usize,
    /// Tie-adjusted rank; `None` when the true source was not observed.
    pub true_source_rank: Option<f64>,
    pub relative_rank: Option<f64>,
}

impl ExperimentRecord {
    pub fn observable(&self) -> bool {
        self.relative_rank.is_some()
    }
}

/// Observed outbreak for one experiment together with the hidden truth.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub source: NodeId,
    pub realization: Realization,
    pub observation: Observation,
}

fn infected_threshold(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64).ceil() as usize).max(1)
}

/// Draws the ground truth of experiment `experiment_id`. Depends only on the
/// graph, the process, the size/observation settings and the master seed;
/// never on the estimator.
pub fn ground_truth(
    graph: &Graph,
    config: &ExperimentConfig,
    experiment_id: usize,
    sim: &mut Simulator<'_>,
) -> Result<GroundTruth> {
    let n = graph.node_count();
    let exp_seed = seed::derive(config.master_seed, experiment_id as u64);
    let source = seed::rng(seed::derive(exp_seed, stream::SOURCE)).random_range(0..n);
    let threshold = infected_threshold(config.min_infected_fraction, n);
    let truth_stream = seed::derive(exp_seed, stream::GROUND_TRUTH);
    let mut realization = None;
    for attempt in 0..config.max_attempts {
        let r = sim.run(&config.process, source, seed::derive(truth_stream, attempt as u64))?;
        if r.count_ones() >= threshold {
            realization = Some(r.clone());
            break;
        }
    }
    let realization = realization.ok_or_else(|| {
        Error::Config(format!(
            "experiment {experiment_id}: no outbreak from source {source} reached {threshold} \
             infected nodes in {} attempts under {:?}; the epidemic parameters look subcritical",
            config.max_attempts, config.process
        ))
    })?;
    let observation = if config.observed_fraction < 1.0 {
        let mut order: Vec<NodeId> = (0..n).collect();
        order.shuffle(&mut seed::rng(seed::derive(exp_seed, stream::MASK)));
        let keep = ((config.observed_fraction * n as f64).round() as usize).clamp(1, n);
        let mask = Realization::from_nodes(n, order[..keep].iter().copied())?;
        Observation::masked(&realization, mask)?
    } else {
        Observation::full(realization.clone())
    };
    Ok(GroundTruth {
        source,
        realization,
        observation,
    })
}

fn run_one(
    graph: &Graph,
    config: &ExperimentConfig,
    experiment_id: usize,
    sim: &mut Simulator<'_>,
) -> Result<ExperimentRecord> {
    let truth = ground_truth(graph, config, experiment_id, sim)?;
    let candidates = truth.observation.infected();
    let mut record = ExperimentRecord {
        experiment_id,
        true_source: truth.source,
        infected_count: truth.realization.count_ones(),
        candidate_count: candidates.len(),
        true_source_rank: None,
        relative_rank: None,
    };
    if !truth.observation.realization().get(truth.source) {
        return Ok(record);
    }
    let exp_seed = seed::derive(config.master_seed, experiment_id as u64);
    let report = rank_sources_with(
        graph,
        &config.process,
        &truth.observation,
        &candidates,
        &config.estimator,
        config.tie_rule,
        seed::derive(exp_seed, stream::ESTIMATE),
    )?;
    record.true_source_rank = report.rank(truth.source);
    record.relative_rank = report.relative_rank(truth.source);
    Ok(record)
}

/// Runs every experiment of `config` on a prebuilt graph. `progress` is
/// called with the number of finished experiments.
pub fn run_batch_on_graph(
    graph: &Graph,
    config: &ExperimentConfig,
    progress: Option<&(dyn Fn(usize) + Sync)>,
) -> Result<Vec<ExperimentRecord>> {
    config.validate()?;
    let done = std::sync::atomic::AtomicUsize::new(0);
    (0..config.n_experiments)
        .into_par_iter()
        .map_init(
            || Simulator::new(graph),
            |sim, e| {
                let record = run_one(graph, config, e, sim);
                if let Some(report) = progress {
                    report(done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1);
                }
                record
            },
        )
        .collect()
}

pub fn run_experiment_batch(config: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    config.validate()?;
    let graph = generate(&config.graph)?;
    run_batch_on_graph(&graph, config, None)
}

/// Empirical distribution of relative source ranks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankCurve {
    ranks: Vec<f64>,
    /// Records left out because the true source was hidden.
    pub excluded: usize,
}

impl RankCurve {
    pub fn from_ranks(mut ranks: Vec<f64>) -> Result<Self> {
        if ranks.is_empty() {
            return Err(Error::param("rank curve needs at least one relative rank"));
        }
        if let Some(r) = ranks.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
            return Err(Error::param(format!("relative rank {r} outside (0, 1]")));
        }
        ranks.sort_unstable_by(f64::total_cmp);
        Ok(RankCurve { ranks, excluded: 0 })
    }

    /// Sorted relative ranks.
    pub fn ranks(&self) -> &[f64] {
        &self.ranks
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Fraction of experiments whose relative rank is at most `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.ranks.partition_point(|&r| r <= x) as f64 / self.ranks.len() as f64
    }

    pub fn mean_relative_rank(&self) -> f64 {
        self.ranks.iter().sum::<f64>() / self.ranks.len() as f64
    }

    /// Area under the CDF on `[0, 1]`; equals one minus the mean rank.
    pub fn area(&self) -> f64 {
        1.0 - self.mean_relative_rank()
    }

    /// `(x, cdf(x))` at each distinct rank value.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let n = self.ranks.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &r) in self.ranks.iter().enumerate() {
            match out.last_mut() {
                Some(last) if last.0 == r => last.1 = (i + 1) as f64 / n,
                _ => out.push((r, (i + 1) as f64 / n)),
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,cdf\n");
        for (x, y) in self.points() {
            let _ = writeln!(out, "{x:?},{y:?}");
        }
        out
    }
}

/// Curve over the observable records of a batch.
pub fn rank_curve(records: &[ExperimentRecord]) -> Result<RankCurve> {
    let ranks: Vec<f64> = records.iter().filter_map(|r| r.relative_rank).collect();
    let mut curve = RankCurve::from_ranks(ranks)?;
    curve.excluded = records.iter().filter(|r| !r.observable()).count();
    Ok(curve)
}

pub fn records_csv(records: &[ExperimentRecord]) -> String {
    let mut out = String::from("experiment_id,true_source,candidate_count,rank,relative_rank\n");
    let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.experiment_id,
            r.true_source,
            r.candidate_count,
            opt(r.true_source_rank),
            opt(r.relative_rank)
        );
    }
    out
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub records: Vec<ExperimentRecord>,
    pub curve: RankCurve,
}

#[derive(Debug)]
pub struct SweepEntry {
    pub label: String,
    pub outcome: Result<SweepResult>,
}

fn run_labeled(config: &ExperimentConfig) -> Result<SweepResult> {
    let records = run_experiment_batch(config)?;
    let curve = rank_curve(&records)?;
    Ok(SweepResult { records, curve })
}

/// Runs each labeled configuration independently. A failing configuration
/// is reported in its entry and does not stop the others.
pub fn sweep(configs: &[(String, ExperimentConfig)]) -> Vec<SweepEntry> {
    configs
        .par_iter()
        .map(|(label, config)| SweepEntry {
            label: label.clone(),
            outcome: run_labeled(config),
        })
        .collect()
}

/// `label,area,error` rows; failed entries leave `area` empty.
pub fn summary_csv(entries: &[SweepEntry]) -> String {
    let mut out = String::from("label,area,error\n");
    for e in entries {
        match &e.outcome {
            Ok(r) => {
                let _ = writeln!(out, "{},{:?},", csv_field(&e.label), r.curve.area());
            }
            Err(err) => {
                let _ = writeln!(out, "{},,{}", csv_field(&e.label), csv_field(&err.to_string()));
            }
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::EstimatorKind;

    #[test]
    fn curve_from_two_ranks() {
        let c = RankCurve::from_ranks(vec![0.75, 0.25]).unwrap();
        assert_eq!(c.cdf(0.5), 0.5);
        assert_eq!(c.cdf(0.1), 0.0);
        assert_eq!(c.cdf(1.0), 1.0);
        assert_eq!(c.area(), 0.5);
        assert_eq!(c.points(), vec![(0.25, 0.5), (0.75, 1.0)]);
        assert_eq!(c.to_csv(), "x,cdf\n0.25,0.5\n0.75,1.0\n");
    }

    #[test]
    fn perfect_detection_area_approaches_one() {
        let areas: Vec<f64> = [2usize, 10, 100, 1000]
            .iter()
            .map(|&s| RankCurve::from_ranks(vec![1.0 / s as f64; 20]).unwrap().area())
            .collect();
        assert!(areas.windows(2).all(|w| w[1] > w[0]));
        assert!(areas[3] > 0.998);
    }

    #[test]
    fn uniform_ranks_give_half() {
        let n = 1000;
        let ranks = (1..=n).map(|i| i as f64 / n as f64).collect();
        let area = RankCurve::from_ranks(ranks).unwrap().area();
        assert!((area - 0.5).abs() < 1e-3);
    }

    #[test]
    fn curve_errors() {
        assert!(RankCurve::from_ranks(vec![]).is_err());
        assert!(RankCurve::from_ranks(vec![0.0]).is_err());
        assert!(rank_curve(&[]).is_err());
    }

    #[test]
    fn cdf_is_monotone_step() {
        let c = RankCurve::from_ranks(vec![0.3, 0.1, 0.3, 0.9, 0.5]).unwrap();
        let xs: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| c.cdf(x)).collect();
        assert!(ys.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(*ys.last().unwrap(), 1.0);
        assert_eq!(c.points().len(), 4);
    }

    #[test]
    fn triangle_full_first_step() {
        let k3 = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let mut config = ExperimentConfig::new(
            GraphSpec::Grid2d { rows: 1, cols: 3 },
            ProcessParams::sir(1.0, 1.0, 1),
            EstimatorSpec::new(EstimatorKind::RandomBaseline, 1),
        );
        config.n_experiments = 20;
        let records = run_batch_on_graph(&k3, &config, None).unwrap();
        assert!(records.iter().all(|r| r.candidate_count == 3 && r.observable()));
    }

    #[test]
    fn subcritical_is_a_config_error() {
        let mut config = ExperimentConfig::new(
            GraphSpec::Grid2d { rows: 10, cols: 10 },
            ProcessParams::sir(0.0, 1.0, 5),
            EstimatorSpec::new(EstimatorKind::RandomBaseline, 1),
        );
        config.min_infected_fraction = 0.05;
        config.max_attempts = 50;
        config.n_experiments = 2;
        let err = run_experiment_batch(&config).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
        assert!(err.to_string().contains("50 attempts"));
    }

    #[test]
    fn config_validation() {
        let mut config = ExperimentConfig::new(
            GraphSpec::Grid2d { rows: 3, cols: 3 },
            ProcessParams::sir(0.5, 0.5, 3),
            EstimatorSpec::new(EstimatorKind::RandomBaseline, 1),
        );
        config.observed_fraction = 0.0;
        assert!(config.validate().is_err());
        config.observed_fraction = 1.0;
        config.min_infected_fraction = 1.5;
        assert!(config.validate().is_err());
    }

    #[test]
    fn masks_are_nested_across_fractions() {
        let graph = generate(&GraphSpec::Grid2d { rows: 10, cols: 10 }).unwrap();
        let mut sim = Simulator::new(&graph);
        let mut config = ExperimentConfig::new(
            GraphSpec::Grid2d { rows: 10, cols: 10 },
            ProcessParams::sir(0.5, 0.3, 6),
            EstimatorSpec::new(EstimatorKind::RandomBaseline, 1),
        );
        config.master_seed = 11;
        let mut masks = Vec::new();
        for frac in [0.6, 0.8, 1.0] {
            config.observed_fraction = frac;
            let t = ground_truth(&graph, &config, 3, &mut sim).unwrap();
            let mask = t.observation.mask().cloned().unwrap_or_else(|| Realization::full(100));
            assert_eq!(mask.count_ones(), (frac * 100.0) as usize);
            assert!(t.observation.realization().is_subset_of(&t.realization));
            masks.push((t.source, t.realization, mask));
        }
        assert!(masks.windows(2).all(|w| w[0].0 == w[1].0 && w[0].1 == w[1].1));
        assert!(masks[0].2.is_subset_of(&masks[1].2));
    }

    #[test]
    fn summary_lists_failures() {
        let good = ExperimentConfig {
            n_experiments: 5,
            ..ExperimentConfig::new(
                GraphSpec::Grid2d { rows: 6, cols: 6 },
                ProcessParams::sir(0.6, 0.2, 4),
                EstimatorSpec::new(EstimatorKind::RandomBaseline, 1),
            )
        };
        let bad = ExperimentConfig {
            max_attempts: 3,
            min_infected_fraction: 1.0,
            process: ProcessParams::sir(0.0, 1.0, 1),
            ..good.clone()
        };
        let entries = sweep(&[("ok".into(), good), ("bad, really".into(), bad)]);
        assert!(entries[0].outcome.is_ok());
        assert!(entries[1].outcome.is_err());
        let csv = summary_csv(&entries);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "label,area,error");
        assert!(lines[1].starts_with("ok,0."));
        assert!(lines[2].starts_with("\"bad, really\",,"));
    }
}
