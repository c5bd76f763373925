//! Source detection for contagion processes on networks.
//!
//! Given one partially realized outbreak, every candidate source is scored by
//! simulating the process from it many times and comparing the simulated
//! outbreaks with the observation. The crate covers network construction
//! ([`graph`]), the SIR/SI/ISS processes ([`contagion`]), bitset similarity
//! ([`similarity`]), the likelihood estimators and ranking ([`estimators`]),
//! and the source-rank evaluation protocol ([`experiments`]).

pub mod config;
pub mod contagion;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod graph;
pub mod realization;
pub mod seed;
pub mod similarity;

pub use contagion::{
    batch_simulate, infection_frequencies, simulate, simulate_iss, Model, NoiseSpec, ProcessParams,
    RateNoise, Simulator,
};
pub use error::{Error, Result};
pub use estimators::{
    rank_sources, EstimatorKind, EstimatorSpec, LikelihoodReport, Observation, TieRule,
};
pub use experiments::{
    rank_curve, run_experiment_batch, sweep, ExperimentConfig, ExperimentRecord, RankCurve,
};
pub use graph::{generate, load_edge_list, Graph, GraphSpec, NodeId};
pub use realization::Realization;
pub use similarity::{jaccard_similarity, masked_similarity, xnor_similarity, SimilarityMeasure};
