//! JSON configuration for experiment batches and sweeps.
//!
//! A *study* file holds a `base` experiment and a list of labeled `runs`,
//! each of which overrides part of the base. Overrides merge recursively into
//! objects, except that an override object carrying a `kind` or `model` tag
//! replaces the base object wholesale. A file without `runs` is a single
//! experiment and is treated as a study with one run labeled `default`.
//!
//! Every omitted field resolves to a documented default, and
//! [`Study::manifest`] writes the fully resolved form back out; feeding a
//! manifest back in reproduces the same runs.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::contagion::{Model, NoiseSpec, ProcessParams};
use crate::error::{Error, Result};
use crate::estimators::{
    EstimatorKind, EstimatorSpec, TieRule, DEFAULT_SMOOTHING, DEFAULT_TOP_FRACTION,
};
use crate::experiments::{ExperimentConfig, DEFAULT_MAX_ATTEMPTS, DEFAULT_MIN_INFECTED_FRACTION};
use crate::graph::GraphSpec;
use crate::similarity::SimilarityMeasure;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_N_SIMULATIONS: usize = 1000;
pub const DEFAULT_N_EXPERIMENTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Sir,
    Si,
    Iss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessFile {
    pub model: ModelName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(alias = "T")]
    pub horizon: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
}

impl ProcessFile {
    pub fn resolve(&self) -> Result<ProcessParams> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| {
                Error::Config(format!(
                    "process.{name} is required for model {:?}",
                    self.model
                ))
            })
        };
        let reject = |v: Option<f64>, name: &str| match v {
            Some(_) => Err(Error::Config(format!(
                "process.{name} does not apply to model {:?}",
                self.model
            ))),
            None => Ok(()),
        };
        let model = match self.model {
            ModelName::Sir => {
                reject(self.alpha, "alpha")?;
                reject(self.beta, "beta")?;
                Model::Sir {
                    p: need(self.p, "p")?,
                    q: need(self.q, "q")?,
                }
            }
            ModelName::Si => {
                reject(self.alpha, "alpha")?;
                reject(self.beta, "beta")?;
                match self.q {
                    Some(q) if q != 0.0 => {
                        return Err(Error::Config("process.q must be 0 for model si".into()))
                    }
                    _ => {}
                }
                Model::Si {
                    p: need(self.p, "p")?,
                }
            }
            ModelName::Iss => {
                reject(self.p, "p")?;
                reject(self.q, "q")?;
                Model::Iss {
                    alpha: need(self.alpha, "alpha")?,
                    beta: need(self.beta, "beta")?,
                }
            }
        };
        let params = ProcessParams::new(model, self.horizon).with_noise(self.noise.unwrap_or_default());
        params.validate().map_err(|e| Error::Config(format!("process: {e}")))?;
        Ok(params)
    }

    pub fn from_params(params: &ProcessParams) -> Self {
        let mut file = ProcessFile {
            model: ModelName::Sir,
            p: None,
            q: None,
            alpha: None,
            beta: None,
            horizon: params.horizon,
            noise: params.noise,
        };
        match params.model {
            Model::Sir { p, q } => {
                file.p = Some(p);
                file.q = Some(q);
            }
            Model::Si { p } => {
                file.model = ModelName::Si;
                file.p = Some(p);
            }
            Model::Iss { alpha, beta } => {
                file.model = ModelName::Iss;
                file.alpha = Some(alpha);
                file.beta = Some(beta);
            }
        }
        file
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorName {
    Aucdf,
    Avgtopk,
    Nb,
    Random,
}

impl std::str::FromStr for EstimatorName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.to_string())).map_err(|_| {
            Error::param(format!(
                "unknown estimator {s:?} (expected aucdf, avgtopk, nb or random)"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorFile {
    pub kind: EstimatorName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<SimilarityMeasure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_simulations: Option<usize>,
}

/// Similarity used when an estimator omits `measure`: Jaccard on
/// preferential-attachment networks, XNOR elsewhere.
pub fn default_measure(graph: &GraphSpec) -> SimilarityMeasure {
    match graph {
        GraphSpec::BarabasiAlbert { .. } => SimilarityMeasure::Jaccard,
        _ => SimilarityMeasure::Xnor,
    }
}

impl EstimatorFile {
    pub fn resolve(&self, graph: &GraphSpec) -> Result<EstimatorSpec> {
        let reject = |present: bool, name: &str| {
            if present {
                Err(Error::Config(format!(
                    "estimator.{name} does not apply to estimator {:?}",
                    self.kind
                )))
            } else {
                Ok(())
            }
        };
        let measure = self.measure.unwrap_or_else(|| default_measure(graph));
        let kind = match self.kind {
            EstimatorName::Aucdf => {
                reject(self.top_fraction.is_some(), "top_fraction")?;
                reject(self.smoothing.is_some(), "smoothing")?;
                EstimatorKind::Aucdf { measure }
            }
            EstimatorName::Avgtopk => {
                reject(self.smoothing.is_some(), "smoothing")?;
                EstimatorKind::AvgTopK {
                    measure,
                    top_fraction: self.top_fraction.unwrap_or(DEFAULT_TOP_FRACTION),
                }
            }
            EstimatorName::Nb => {
                reject(self.measure.is_some(), "measure")?;
                reject(self.top_fraction.is_some(), "top_fraction")?;
                EstimatorKind::NaiveBayes {
                    smoothing: self.smoothing.unwrap_or(DEFAULT_SMOOTHING),
                }
            }
            EstimatorName::Random => {
                reject(self.measure.is_some(), "measure")?;
                reject(self.top_fraction.is_some(), "top_fraction")?;
                reject(self.smoothing.is_some(), "smoothing")?;
                EstimatorKind::RandomBaseline
            }
        };
        let spec = EstimatorSpec::new(kind, self.n_simulations.unwrap_or(DEFAULT_N_SIMULATIONS));
        spec.validate().map_err(|e| Error::Config(format!("estimator: {e}")))?;
        Ok(spec)
    }

    pub fn from_spec(spec: &EstimatorSpec) -> Self {
        let mut file = EstimatorFile {
            kind: EstimatorName::Random,
            measure: None,
            top_fraction: None,
            smoothing: None,
            n_simulations: Some(spec.n_simulations),
        };
        match spec.kind {
            EstimatorKind::Aucdf { measure } => {
                file.kind = EstimatorName::Aucdf;
                file.measure = Some(measure);
            }
            EstimatorKind::AvgTopK {
                measure,
                top_fraction,
            } => {
                file.kind = EstimatorName::Avgtopk;
                file.measure = Some(measure);
                file.top_fraction = Some(top_fraction);
            }
            EstimatorKind::NaiveBayes { smoothing } => {
                file.kind = EstimatorName::Nb;
                file.smoothing = Some(smoothing);
            }
            EstimatorKind::RandomBaseline => {}
        }
        file
    }
}

/// On-disk form of one experiment batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub graph: GraphSpec,
    pub process: ProcessFile,
    pub estimator: EstimatorFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_experiments: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_infected_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_attempts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tie_rule: Option<TieRule>,
}

impl ExperimentFile {
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        self.graph
            .validate()
            .map_err(|e| Error::Config(format!("graph: {e}")))?;
        let config = ExperimentConfig {
            graph: self.graph.clone(),
            process: self.process.resolve()?,
            estimator: self.estimator.resolve(&self.graph)?,
            n_experiments: self.n_experiments.unwrap_or(DEFAULT_N_EXPERIMENTS),
            min_infected_fraction: self
                .min_infected_fraction
                .unwrap_or(DEFAULT_MIN_INFECTED_FRACTION),
            observed_fraction: self.observed_fraction.unwrap_or(1.0),
            master_seed: self.master_seed.unwrap_or(0),
            max_attempts: self.max_attempts.unwrap_or(DEFAULT_MAX_ATTEMPTS),
            tie_rule: self.tie_rule.unwrap_or_default(),
        };
        config.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(config)
    }

    /// Fully explicit form of a resolved configuration.
    pub fn from_config(config: &ExperimentConfig) -> Self {
        ExperimentFile {
            graph: config.graph.clone(),
            process: ProcessFile::from_params(&config.process),
            estimator: EstimatorFile::from_spec(&config.estimator),
            n_experiments: Some(config.n_experiments),
            min_infected_fraction: Some(config.min_infected_fraction),
            observed_fraction: Some(config.observed_fraction),
            master_seed: Some(config.master_seed),
            max_attempts: Some(config.max_attempts),
            tie_rule: Some(config.tie_rule),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub label: String,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub set: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyFile {
    #[serde(default = "schema_version")]
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Label of the swept quantity, e.g. `"beta"` or `"estimator"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<String>,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub base: Value,
    pub runs: Vec<RunFile>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

/// Resolved study: labeled, validated experiment configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct Study {
    pub name: Option<String>,
    pub axis: Option<String>,
    pub runs: Vec<(String, ExperimentConfig)>,
}

/// Merges `overlay` into `base`. Objects merge key by key unless the overlay
/// object carries a `kind` or `model` tag, in which case it replaces.
pub fn merge(base: &mut Value, overlay: &Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o))
            if !o.contains_key("kind") && !o.contains_key("model") =>
        {
            for (k, v) in o {
                merge(b.entry(k.clone()).or_insert(Value::Null), v);
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

impl Study {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?;
        Self::from_value(value)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let is_study = value.as_object().is_some_and(|o| o.contains_key("runs"));
        let study: StudyFile = if is_study {
            serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?
        } else {
            let mut base = value;
            let version = base.as_object_mut().and_then(|o| o.remove("version"));
            StudyFile {
                version: match version {
                    Some(v) => serde_json::from_value(v)
                        .map_err(|e| Error::Config(format!("version: {e}")))?,
                    None => SCHEMA_VERSION,
                },
                name: None,
                axis: None,
                base,
                runs: vec![RunFile {
                    label: "default".into(),
                    set: Value::Null,
                }],
            }
        };
        if study.version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "version: unsupported schema version {} (expected {SCHEMA_VERSION})",
                study.version
            )));
        }
        if study.runs.is_empty() {
            return Err(Error::Config("runs: at least one run is required".into()));
        }
        let mut runs = Vec::with_capacity(study.runs.len());
        for run in &study.runs {
            let mut merged = match &study.base {
                Value::Null => Value::Object(Map::new()),
                b => b.clone(),
            };
            if !run.set.is_null() {
                merge(&mut merged, &run.set);
            }
            let file: ExperimentFile = serde_json::from_value(merged)
                .map_err(|e| Error::Config(format!("run {:?}: {e}", run.label)))?;
            let config = file
                .resolve()
                .map_err(|e| Error::Config(format!("run {:?}: {e}", run.label)))?;
            runs.push((run.label.clone(), config));
        }
        Ok(Study {
            name: study.name,
            axis: study.axis,
            runs,
        })
    }

    /// Resolved study file: every run fully explicit, no shared base.
    pub fn manifest(&self) -> StudyFile {
        StudyFile {
            version: SCHEMA_VERSION,
            name: self.name.clone(),
            axis: self.axis.clone(),
            base: Value::Null,
            runs: self
                .runs
                .iter()
                .map(|(label, config)| RunFile {
                    label: label.clone(),
                    set: serde_json::to_value(ExperimentFile::from_config(config))
                        .expect("config serializes"),
                })
                .collect(),
        }
    }

    pub fn manifest_json(&self) -> String {
        serde_json::to_string_pretty(&self.manifest()).expect("manifest serializes") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn grid_base() -> Value {
        json!({
            "graph": {"kind": "grid2d", "rows": 30, "cols": 30},
            "process": {"model": "sir", "p": 0.3, "q": 0.7, "T": 10},
            "estimator": {"kind": "nb", "n_simulations": 500},
            "n_experiments": 10,
            "master_seed": 4
        })
    }

    #[test]
    fn single_experiment_file() {
        let study = Study::from_value(grid_base()).unwrap();
        assert_eq!(study.runs.len(), 1);
        let (label, c) = &study.runs[0];
        assert_eq!(label, "default");
        assert_eq!(c.process, ProcessParams::sir(0.3, 0.7, 10));
        assert_eq!(
            c.estimator,
            EstimatorSpec::new(EstimatorKind::NaiveBayes { smoothing: 1.0 }, 500)
        );
        assert_eq!(c.min_infected_fraction, 0.01);
        assert_eq!(c.observed_fraction, 1.0);
        assert_eq!(c.max_attempts, 10_000);
    }

    #[test]
    fn runs_override_base() {
        let study = Study::from_value(json!({
            "version": 1,
            "axis": "estimator",
            "base": grid_base(),
            "runs": [
                {"label": "nb"},
                {"label": "topk", "set": {"estimator": {"kind": "avgtopk"}}},
                {"label": "more", "set": {"estimator": {"n_simulations": 50}, "process": {"q": 0.1}}}
            ]
        }))
        .unwrap();
        let topk = &study.runs[1].1.estimator;
        assert_eq!(
            topk.kind,
            EstimatorKind::AvgTopK {
                measure: SimilarityMeasure::Xnor,
                top_fraction: 0.05
            }
        );
        assert_eq!(topk.n_simulations, 1000);
        let more = &study.runs[2].1;
        assert_eq!(more.estimator.n_simulations, 50);
        assert_eq!(more.process, ProcessParams::sir(0.3, 0.1, 10));
    }

    #[test]
    fn manifest_round_trips() {
        let mut base = grid_base();
        base["graph"] = json!({"kind": "barabasi_albert", "n": 100, "m0": 5, "m": 1});
        base["process"]["noise"] = json!({"t_geometric": 0.5, "rate_normal": {"sigma": 0.05}});
        base["estimator"] = json!({"kind": "aucdf"});
        let study = Study::from_value(base).unwrap();
        assert_eq!(
            study.runs[0].1.estimator.kind,
            EstimatorKind::Aucdf {
                measure: SimilarityMeasure::Jaccard
            }
        );
        let again = Study::from_json(&study.manifest_json()).unwrap();
        assert_eq!(again, study);
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            (json!({"process": {"model": "sir", "p": 0.3, "T": 10}}), "process.q"),
            (json!({"process": {"model": "iss", "alpha": 0.3, "beta": 0.1, "p": 0.2, "T": 3}}), "process.p"),
            (json!({"estimator": {"kind": "nb", "measure": "xnor"}}), "estimator.measure"),
            (json!({"estimator": {"kind": "magic"}}), "magic"),
            (json!({"n_experiment": 3}), "n_experiment"),
            (json!({"graph": {"kind": "grid2d", "rows": 3}}), "cols"),
            (json!({"observed_fraction": 0.0}), "observed_fraction"),
            (json!({"version": 2}), "version"),
        ];
        for (overlay, needle) in cases {
            let mut v = grid_base();
            merge(&mut v, &overlay);
            let err = Study::from_value(v).unwrap_err();
            assert!(matches!(err, Error::Config(_)));
            assert!(err.to_string().contains(needle), "{err} lacks {needle}");
        }
    }

    #[test]
    fn tagged_overrides_replace() {
        let mut v = json!({"graph": {"kind": "grid2d", "rows": 3, "cols": 3}});
        merge(&mut v, &json!({"graph": {"kind": "ring_lattice", "n": 10, "k": 2}}));
        assert_eq!(v["graph"], json!({"kind": "ring_lattice", "n": 10, "k": 2}));
    }
}
