use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use pzero::config::{EstimatorFile, EstimatorName, ModelName, ProcessFile};
use pzero::contagion::{NoiseSpec, RateNoise};
use pzero::{GraphSpec, SimilarityMeasure, TieRule};

#[derive(Debug, Parser)]
#[command(name = "pzero", version, about = "Monte-Carlo source detection for contagion processes on networks")]
pub struct Cli {
    /// Worker threads (default: PZERO_THREADS, else all cores). Never changes results.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a network and write it as an edge list.
    Generate(GenerateArgs),
    /// Simulate outbreaks from one source and write the realizations.
    Simulate(SimulateArgs),
    /// Rank candidate sources for an observed realization.
    Detect(DetectArgs),
    /// Run one source-rank experiment batch.
    Experiment(ExperimentArgs),
    /// Run every labeled batch of a study config.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
#[group(id = "generator", multiple = false)]
pub struct GeneratorFlags {
    /// 2-D grid with R rows and C columns, e.g. 30x30.
    #[arg(long, value_name = "RxC")]
    pub grid: Option<String>,
    /// Ring lattice: node count and (even) degree.
    #[arg(long, num_args = 2, value_names = ["N", "K"])]
    pub ring: Option<Vec<String>>,
    /// Watts-Strogatz: node count, lattice degree, rewiring probability.
    #[arg(long, num_args = 3, value_names = ["N", "K", "BETA"])]
    pub ws: Option<Vec<String>>,
    /// Erdős–Rényi G(n, p).
    #[arg(long, num_args = 2, value_names = ["N", "P"])]
    pub er: Option<Vec<String>>,
    /// Barabási–Albert: node count, initial core size, edges per new node.
    #[arg(long, num_args = 3, value_names = ["N", "M0", "M"])]
    pub ba: Option<Vec<String>>,
}

impl GeneratorFlags {
    pub fn spec(&self, seed: u64) -> anyhow::Result<Option<GraphSpec>> {
        fn num<T: std::str::FromStr>(flag: &str, v: &str) -> anyhow::Result<T> {
            v.parse()
                .map_err(|_| anyhow::anyhow!("--{flag}: cannot parse {v:?}"))
        }
        let spec = if let Some(g) = &self.grid {
            let (r, c) = g
                .split_once(['x', 'X'])
                .ok_or_else(|| anyhow::anyhow!("--grid expects RxC, got {g:?}"))?;
            GraphSpec::Grid2d { rows: num("grid", r)?, cols: num("grid", c)? }
        } else if let Some(v) = &self.ring {
            GraphSpec::RingLattice { n: num("ring", &v[0])?, k: num("ring", &v[1])? }
        } else if let Some(v) = &self.ws {
            GraphSpec::WattsStrogatz { n: num("ws", &v[0])?, k: num("ws", &v[1])?, beta: num("ws", &v[2])?, seed }
        } else if let Some(v) = &self.er {
            GraphSpec::ErdosRenyi { n: num("er", &v[0])?, p: num("er", &v[1])?, seed }
        } else if let Some(v) = &self.ba {
            GraphSpec::BarabasiAlbert { n: num("ba", &v[0])?, m0: num("ba", &v[1])?, m: num("ba", &v[2])?, seed }
        } else {
            return Ok(None);
        };
        Ok(Some(spec))
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub generator: GeneratorFlags,
    /// Seed for the random generators.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Edge-list file to write (default: standard output). A manifest is
    /// written next to it as `<FILE>.manifest.json`.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelArg {
    Sir,
    Si,
    Iss,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EstimatorArg {
    Aucdf,
    Avgtopk,
    Nb,
    Random,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MeasureArg {
    Xnor,
    Jaccard,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TieArg {
    Average,
    Worst,
}

impl From<TieArg> for TieRule {
    fn from(t: TieArg) -> Self {
        match t {
            TieArg::Average => TieRule::Average,
            TieArg::Worst => TieRule::Worst,
        }
    }
}

#[derive(Debug, Args)]
pub struct ProcessFlags {
    /// Contagion model.
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Per-contact infection probability (SIR, SI).
    #[arg(long)]
    pub p: Option<f64>,
    /// Per-step recovery probability (SIR).
    #[arg(long)]
    pub q: Option<f64>,
    /// Per-contact spreading probability (ISS).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Per-contact stifling probability (ISS).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Observation horizon in steps.
    #[arg(long = "T", value_name = "T")]
    pub horizon: Option<u32>,
    /// Add Geometric(P) extra steps to the horizon on every run.
    #[arg(long, value_name = "P")]
    pub noise_t_geom: Option<f64>,
    /// Add one Normal(0, S) draw to the rates on every run.
    #[arg(long, value_name = "S")]
    pub noise_pq_sigma: Option<f64>,
}

impl ProcessFlags {
    fn touched(&self) -> bool {
        self.model.is_some()
            || self.p.is_some()
            || self.q.is_some()
            || self.alpha.is_some()
            || self.beta.is_some()
            || self.horizon.is_some()
            || self.noise_t_geom.is_some()
            || self.noise_pq_sigma.is_some()
    }

    fn noise(&self) -> Option<NoiseSpec> {
        if self.noise_t_geom.is_none() && self.noise_pq_sigma.is_none() {
            return None;
        }
        Some(NoiseSpec {
            t_geometric: self.noise_t_geom,
            rate_normal: self.noise_pq_sigma.map(|sigma| RateNoise { mu: 0.0, sigma }),
        })
    }

    /// Complete process description from flags alone (model defaults to SIR).
    pub fn file(&self) -> anyhow::Result<ProcessFile> {
        let horizon = self.horizon.ok_or_else(|| anyhow::anyhow!("--T is required"))?;
        Ok(ProcessFile {
            model: match self.model.unwrap_or(ModelArg::Sir) {
                ModelArg::Sir => ModelName::Sir,
                ModelArg::Si => ModelName::Si,
                ModelArg::Iss => ModelName::Iss,
            },
            p: self.p,
            q: self.q,
            alpha: self.alpha,
            beta: self.beta,
            horizon,
            noise: self.noise(),
        })
    }

    /// Partial override for a config file. A `--model` replaces the whole
    /// process block; otherwise fields merge into it.
    fn overlay(&self) -> Option<Value> {
        if !self.touched() {
            return None;
        }
        let mut m = Map::new();
        if let Some(model) = self.model {
            m.insert("model".into(), json!(format!("{model:?}").to_lowercase()));
        }
        for (k, v) in [("p", self.p), ("q", self.q), ("alpha", self.alpha), ("beta", self.beta)] {
            if let Some(v) = v {
                m.insert(k.into(), json!(v));
            }
        }
        if let Some(t) = self.horizon {
            m.insert("horizon".into(), json!(t));
        }
        if let Some(g) = self.noise_t_geom {
            m.insert("noise".into(), json!({"t_geometric": g}));
        }
        if let Some(s) = self.noise_pq_sigma {
            let noise = m.entry("noise").or_insert_with(|| json!({}));
            noise["rate_normal"] = json!({"mu": 0.0, "sigma": s});
        }
        Some(Value::Object(m))
    }
}

#[derive(Debug, Args)]
pub struct EstimatorFlags {
    /// Likelihood estimator.
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorArg>,
    /// Similarity measure for aucdf/avgtopk.
    #[arg(long, value_enum)]
    pub measure: Option<MeasureArg>,
    /// Simulations per candidate source.
    #[arg(long, value_name = "N")]
    pub nsim: Option<usize>,
    /// Fraction of top similarities averaged by avgtopk.
    #[arg(long, value_name = "F")]
    pub top_frac: Option<f64>,
    /// Additive smoothing for nb.
    #[arg(long, value_name = "E")]
    pub epsilon: Option<f64>,
}

impl EstimatorFlags {
    fn name(&self) -> Option<EstimatorName> {
        self.estimator.map(|e| match e {
            EstimatorArg::Aucdf => EstimatorName::Aucdf,
            EstimatorArg::Avgtopk => EstimatorName::Avgtopk,
            EstimatorArg::Nb => EstimatorName::Nb,
            EstimatorArg::Random => EstimatorName::Random,
        })
    }

    fn measure(&self) -> Option<SimilarityMeasure> {
        self.measure.map(|m| match m {
            MeasureArg::Xnor => SimilarityMeasure::Xnor,
            MeasureArg::Jaccard => SimilarityMeasure::Jaccard,
        })
    }

    /// Complete estimator description from flags alone (default: nb).
    pub fn file(&self) -> EstimatorFile {
        EstimatorFile {
            kind: self.name().unwrap_or(EstimatorName::Nb),
            measure: self.measure(),
            top_fraction: self.top_frac,
            smoothing: self.epsilon,
            n_simulations: self.nsim,
        }
    }

    /// Partial override; `--estimator` replaces the whole estimator block.
    fn overlay(&self) -> Option<Value> {
        let mut m = Map::new();
        if let Some(name) = self.name() {
            m.insert("kind".into(), json!(name));
        }
        if let Some(measure) = self.measure() {
            m.insert("measure".into(), json!(measure));
        }
        if let Some(f) = self.top_frac {
            m.insert("top_fraction".into(), json!(f));
        }
        if let Some(e) = self.epsilon {
            m.insert("smoothing".into(), json!(e));
        }
        if let Some(n) = self.nsim {
            m.insert("n_simulations".into(), json!(n));
        }
        (!m.is_empty()).then_some(Value::Object(m))
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Edge-list file.
    #[arg(long, value_name = "FILE")]
    pub graph: PathBuf,
    /// Source node id as written in the edge list.
    #[arg(long)]
    pub source: u64,
    /// Number of independent runs.
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    #[command(flatten)]
    pub process: ProcessFlags,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (default: realizations on standard output).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Edge-list file.
    #[arg(long, value_name = "FILE")]
    pub graph: PathBuf,
    /// Observed realization: one '0'/'1' per node in node order.
    #[arg(long, value_name = "FILE")]
    pub observed: PathBuf,
    /// Optional observation mask in the same format; unset nodes are unobserved.
    #[arg(long, value_name = "FILE")]
    pub mask: Option<PathBuf>,
    #[command(flatten)]
    pub process: ProcessFlags,
    #[command(flatten)]
    pub estimator: EstimatorFlags,
    /// How tied scores share ranks.
    #[arg(long, value_enum, default_value = "average")]
    pub tie_rule: TieArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for report.csv, report.json and manifest.json.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

/// Flags shared by `experiment` and `sweep` that override config values.
#[derive(Debug, Args)]
pub struct BatchFlags {
    /// Master seed for sources, outbreaks, masks and estimation.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fraction of nodes observed, drawn per experiment.
    #[arg(long, value_name = "F")]
    pub observed_frac: Option<f64>,
    /// Number of experiments in the batch.
    #[arg(long, value_name = "N")]
    pub experiments: Option<usize>,
    /// Minimum outbreak size as a fraction of the network.
    #[arg(long, value_name = "F")]
    pub min_infected: Option<f64>,
    #[command(flatten)]
    pub estimator: EstimatorFlags,
    /// Output directory.
    #[arg(long, value_name = "DIR", required_unless_present = "dry_run")]
    pub out: Option<PathBuf>,
    /// Print the resolved configuration and exit without running.
    #[arg(long)]
    pub dry_run: bool,
}

impl BatchFlags {
    pub fn overlay(&self) -> Map<String, Value> {
        let mut m = Map::new();
        if let Some(s) = self.seed {
            m.insert("master_seed".into(), json!(s));
        }
        if let Some(f) = self.observed_frac {
            m.insert("observed_fraction".into(), json!(f));
        }
        if let Some(n) = self.experiments {
            m.insert("n_experiments".into(), json!(n));
        }
        if let Some(f) = self.min_infected {
            m.insert("min_infected_fraction".into(), json!(f));
        }
        if let Some(e) = self.estimator.overlay() {
            m.insert("estimator".into(), e);
        }
        m
    }
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// JSON config; flags below override its values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Edge-list file (instead of a generator flag).
    #[arg(long, value_name = "FILE", conflicts_with = "generator")]
    pub graph: Option<PathBuf>,
    #[command(flatten)]
    pub generator: GeneratorFlags,
    /// Seed for generated networks.
    #[arg(long, default_value_t = 0)]
    pub graph_seed: u64,
    #[command(flatten)]
    pub process: ProcessFlags,
    #[command(flatten)]
    pub batch: BatchFlags,
}

impl ExperimentArgs {
    /// Overrides for a config file, or the whole config when there is none.
    pub fn overlay(&self) -> anyhow::Result<Value> {
        let mut m = self.batch.overlay();
        if let Some(path) = &self.graph {
            m.insert("graph".into(), serde_json::to_value(GraphSpec::EdgeList { path: path.clone() })?);
        } else if let Some(spec) = self.generator.spec(self.graph_seed)? {
            m.insert("graph".into(), serde_json::to_value(spec)?);
        }
        if self.config.is_none() {
            // Without a file the flags must describe everything.
            m.insert("process".into(), serde_json::to_value(self.process.file()?)?);
            m.insert("estimator".into(), serde_json::to_value(self.batch.estimator.file())?);
            if !m.contains_key("graph") {
                anyhow::bail!("either --config, --graph or a generator flag is required");
            }
        } else if let Some(p) = self.process.overlay() {
            m.insert("process".into(), p);
        }
        Ok(Value::Object(m))
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Study config with a base and labeled runs.
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
    #[command(flatten)]
    pub batch: BatchFlags,
}
