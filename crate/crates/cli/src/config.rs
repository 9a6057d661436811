use std::fs;
use std::path::{Path, PathBuf};

use rnnjet_core::{derive_seed, EnsembleConfig, ModulusSource, SimConfig, StateSpaceSystem, TrainConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::failure::{Failure, Outcome};

/// One experiment, read from a single strict JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ensemble: EnsembleConfig,
    pub ground_truth: StateSpaceSystem,
    pub k: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "N")]
    pub samples: usize,
    pub train: TrainConfig,
    #[serde(default)]
    pub sim: SimConfig,
    pub delta: f64,
    pub probe_count: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_c_abs")]
    pub c_abs: f64,
    /// Analytic moduli use `L delta` for inputs and the ground truth's
    /// certified output slope; empirical ones use sampled envelopes.
    #[serde(default = "default_moduli")]
    pub moduli: ModulusSource,
    /// BIBO gain of the ground truth at radius `R`, if known.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub waive_sample_size: bool,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_c_abs() -> f64 {
    1.0
}
fn default_moduli() -> ModulusSource {
    ModulusSource::Analytic
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "k")]
    K,
    #[serde(rename = "N")]
    N,
}

impl std::fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepParameter::K => "k",
            SweepParameter::N => "N",
        })
    }
}

impl std::str::FromStr for SweepParameter {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "k" => Ok(SweepParameter::K),
            "N" => Ok(SweepParameter::N),
            other => Err(format!("sweep parameter must be k or N, got {other}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<usize>,
}

/// Seeds actually used by each random stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub master: u64,
    pub training_inputs: u64,
    pub held_out_inputs: u64,
    pub training: u64,
    pub bibo_probes: u64,
}

const TRAINING_INPUTS: u64 = 1;
const HELD_OUT_INPUTS: u64 = 2;
const TRAINING: u64 = 3;
const BIBO_PROBES: u64 = 4;

impl ExperimentConfig {
    pub fn load(path: &Path) -> Outcome<Self> {
        let cfg: Self = read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Outcome<()> {
        let bad = |msg: String| Err(Failure::Validation(msg));
        if self.k < 2 {
            return bad(format!("k must be >= 2, got {}", self.k));
        }
        if self.samples < 1 {
            return bad("N must be >= 1".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return bad(format!("T must be positive, got {}", self.horizon));
        }
        if self.probe_count < 1 {
            return bad("probe_count must be >= 1".into());
        }
        if !(self.c_abs.is_finite() && self.c_abs > 0.0) {
            return bad(format!("c_abs must be positive, got {}", self.c_abs));
        }
        if let Some(g) = self.gamma {
            if !(g.is_finite() && g >= 0.0) {
                return bad(format!("gamma must be finite and nonnegative, got {g}"));
            }
        }
        self.ensemble.validate()?;
        self.ground_truth.validate()?;
        self.train.validate()?;
        self.sim.validate(self.horizon)?;
        Ok(())
    }

    /// Stage seeds derived from the master seed, salted by the seeds of
    /// the ensemble and trainer sections. Held-out probes never share a
    /// stream with training inputs.
    pub fn seeds(&self) -> Seeds {
        let m = self.rng_seed;
        Seeds {
            master: m,
            training_inputs: derive_seed(derive_seed(m, TRAINING_INPUTS), self.ensemble.rng_seed),
            held_out_inputs: derive_seed(derive_seed(m, HELD_OUT_INPUTS), self.ensemble.rng_seed),
            training: derive_seed(derive_seed(m, TRAINING), self.train.rng_seed),
            bibo_probes: derive_seed(m, BIBO_PROBES),
        }
    }

    /// The config at one sweep point.
    pub fn at(&self, parameter: SweepParameter, value: usize) -> Self {
        let mut c = self.clone();
        match parameter {
            SweepParameter::K => c.k = value,
            SweepParameter::N => c.samples = value,
        }
        c.sweep = None;
        c
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Outcome<T> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        Failure::Validation(format!("{}: field `{field}`: {inner}", path.display()))
    })?;
    de.end()
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    Ok(value)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Outcome<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Validation(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure::io(path, e))
}
