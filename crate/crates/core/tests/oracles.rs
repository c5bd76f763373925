use pzero::estimators::{
    aucdf_score, avg_top_k, estimate_avgtopk, estimate_naive_bayes, naive_bayes_log_likelihood,
    EstimatorKind, Observation,
};
use pzero::seed;
use pzero::similarity::SimilarityMeasure;
use pzero::*;
use rand::Rng;
use std::collections::HashMap;

mod common;
use common::{average_ranks, exact_distribution};

fn path3() -> Graph {
    Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap()
}

#[test]
fn exact_enumeration_matches_simulated_frequencies() {
    let g = path3();
    let dist = exact_distribution(&g, 0.5, 0.5, 3, 1);
    let total: f64 = dist.values().sum();
    assert!((total - 1.0).abs() < 1e-12);
    let runs = 40_000u64;
    let mut sim = Simulator::new(&g);
    let params = ProcessParams::sir(0.5, 0.5, 3);
    let mut seen: HashMap<Vec<bool>, u64> = HashMap::new();
    for i in 0..runs {
        let r = sim.run(&params, 1, seed::derive(99, i)).unwrap();
        *seen.entry((0..3).map(|v| r.get(v)).collect()).or_insert(0) += 1;
    }
    for (pattern, &prob) in &dist {
        let freq = *seen.get(pattern).unwrap_or(&0) as f64 / runs as f64;
        let sd = (prob * (1.0 - prob) / runs as f64).sqrt();
        assert!((freq - prob).abs() < 4.0 * sd + 1e-9, "{pattern:?}: {freq} vs {prob}");
    }
}

#[test]
fn path_rankings_match_exhaustive_oracle() {
    let g = path3();
    for horizon in [1, 2] {
        let params = ProcessParams::sir(1.0, 1.0, horizon);
        let dists: Vec<_> = (0..3).map(|s| exact_distribution(&g, 1.0, 1.0, horizon, s)).collect();
        for truth in 0..3 {
            let observed = simulate(&g, &params, truth, 5).unwrap();
            let pattern: Vec<bool> = (0..3).map(|v| observed.get(v)).collect();
            assert_eq!(dists[truth].get(&pattern), Some(&1.0));
            let candidates: Vec<NodeId> = observed.ones().collect();
            let oracle: Vec<(NodeId, f64)> = candidates
                .iter()
                .map(|&c| (c, *dists[c].get(&pattern).unwrap_or(&0.0)))
                .collect();
            let expected = average_ranks(&oracle);
            let obs = Observation::full(observed.clone());
            for kind in [
                EstimatorKind::NaiveBayes { smoothing: 1.0 },
                EstimatorKind::Aucdf { measure: SimilarityMeasure::Xnor },
                EstimatorKind::AvgTopK { measure: SimilarityMeasure::Jaccard, top_fraction: 0.05 },
            ] {
                let spec = EstimatorSpec::new(kind, 10_000);
                let report = rank_sources(&g, &params, &obs, &candidates, &spec, 11).unwrap();
                for &c in &candidates {
                    assert_eq!(report.rank(c), Some(expected[&c]), "T={horizon} truth={truth} {kind:?}");
                }
            }
        }
    }
}

#[test]
fn aucdf_is_the_sample_mean() {
    let mut rng = seed::rng(1);
    for _ in 0..1000 {
        let len = rng.random_range(1..200);
        let samples: Vec<f64> = (0..len)
            .map(|_| match rng.random_range(0..4) {
                0 => 1.0,
                1 => (rng.random_range(0..10) as f64) / 10.0,
                _ => rng.random::<f64>(),
            })
            .collect();
        let mean = samples.iter().sum::<f64>() / len as f64;
        let score = aucdf_score(&samples);
        assert!((score - mean).abs() < 1e-12);
        assert!((avg_top_k(&samples, 1.0) - score).abs() < 1e-12);
    }
}

#[test]
fn naive_bayes_two_node_limit() {
    let g = Graph::from_edges(2, [(0, 1)]).unwrap();
    let obs = Observation::full(Realization::full(2));
    let ll = estimate_naive_bayes(&g, &ProcessParams::sir(0.5, 1.0, 1), &obs, 0, 1.0, 100_000, 3).unwrap();
    assert!((ll - 0.5f64.ln()).abs() < 0.02, "{ll}");
}

#[test]
fn naive_bayes_monotone_in_mismatches() {
    let counts = [0u64, 3, 7, 10, 10, 2, 0, 5];
    let n = 10;
    // truth pattern that every flip moves away from: bit set iff p > 1/2
    let best: Vec<bool> = counts.iter().map(|&m| m * 2 > n as u64).collect();
    let mut previous = f64::INFINITY;
    let mut bits = best.clone();
    for k in 0..bits.len() {
        let ll = naive_bayes_log_likelihood(&counts, n, &Observation::full(Realization::from_bools(&bits)), 1.0).unwrap();
        assert!(ll <= previous);
        previous = ll;
        bits[k] = !bits[k];
    }
}

#[test]
fn random_baseline_picks_each_candidate_equally() {
    let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
    let obs = Observation::full(Realization::full(3));
    let spec = EstimatorSpec::new(EstimatorKind::RandomBaseline, 1);
    let params = ProcessParams::sir(0.5, 0.5, 2);
    let mut wins = [0usize; 3];
    let trials = 10_000u64;
    for s in 0..trials {
        let report = rank_sources(&g, &params, &obs, &[0, 1, 2], &spec, s).unwrap();
        wins[report.argmax] += 1;
    }
    for w in wins {
        assert!((w as f64 / trials as f64 - 1.0 / 3.0).abs() < 0.05, "{wins:?}");
    }
}

#[test]
fn candidate_order_and_subset_do_not_change_scores() {
    let g = generate(&GraphSpec::Grid2d { rows: 6, cols: 6 }).unwrap();
    let params = ProcessParams::sir(0.5, 0.3, 4);
    let observed = simulate(&g, &params, 14, 8).unwrap();
    let obs = Observation::full(observed.clone());
    let candidates: Vec<NodeId> = observed.ones().collect();
    let mut reversed = candidates.clone();
    reversed.reverse();
    for kind in [
        EstimatorKind::NaiveBayes { smoothing: 1.0 },
        EstimatorKind::AvgTopK { measure: SimilarityMeasure::Xnor, top_fraction: 0.1 },
        EstimatorKind::RandomBaseline,
    ] {
        let spec = EstimatorSpec::new(kind, 200);
        let a = rank_sources(&g, &params, &obs, &candidates, &spec, 4).unwrap();
        let b = rank_sources(&g, &params, &obs, &reversed, &spec, 4).unwrap();
        assert_eq!(a, b);
        let few = rank_sources(&g, &params, &obs, &candidates[..2], &spec, 4).unwrap();
        for c in &candidates[..2] {
            assert_eq!(few.score(*c), a.score(*c));
        }
    }
}

#[test]
fn monte_carlo_spread_shrinks_with_more_runs() {
    let g = generate(&GraphSpec::Grid2d { rows: 8, cols: 8 }).unwrap();
    let params = ProcessParams::sir(0.4, 0.4, 5);
    let observed = simulate(&g, &params, 27, 2).unwrap();
    let obs = Observation::full(observed);
    let sd = |n: usize| {
        let xs: Vec<f64> = (0..50)
            .map(|s| estimate_avgtopk(&g, &params, &obs, 27, SimilarityMeasure::Xnor, 0.5, n, 1000 + s).unwrap())
            .collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
    };
    let (small, large) = (sd(1000), sd(4000));
    assert!(large < small / 1.7, "sd(1000)={small} sd(4000)={large}");
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let mut config = ExperimentConfig::new(
        GraphSpec::WattsStrogatz { n: 200, k: 4, beta: 0.1, seed: 3 },
        ProcessParams::sir(0.4, 0.5, 5),
        EstimatorSpec::new(EstimatorKind::NaiveBayes { smoothing: 1.0 }, 50),
    );
    config.n_experiments = 12;
    config.master_seed = 21;
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_experiment_batch(&config).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

#[test]
fn single_step_infection_is_binomial() {
    let g = Graph::from_edges(2, [(0, 1)]).unwrap();
    let runs = batch_simulate(&g, &ProcessParams::sir(0.3, 1.0, 1), 0, 10_000, 17).unwrap();
    let freq = infection_frequencies(&runs).unwrap()[1] as f64 / 1e4;
    let sd = (0.3f64 * 0.7 / 1e4).sqrt();
    assert!((freq - 0.3).abs() < 3.0 * sd, "{freq}");
}
