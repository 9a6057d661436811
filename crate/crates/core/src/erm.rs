//! Jet-pair datasets, the max-over-grid jet mismatch loss, and its
//! minimization over the norm-bounded net class F(M).

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bernstein::{s_k, s_star, JetVector};
use crate::error::{Error, Result};
use crate::jets::{euclid, output_jet, RnnParams, FEASIBILITY_TOLERANCE};
use crate::rnn::{simulate, Excitation, SimConfig, StateSpaceSystem};
use crate::seed::stream_rng;
use crate::signals::{sample_on_grid, InputSpec};

/// `v = S_k(u)` (order `k - 1`) and `z = S_{k+1}(y)` (order `k`).
#[derive(Debug, Clone, PartialEq)]
pub struct JetPair {
    pub v: JetVector,
    pub z: JetVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDataset", into = "RawDataset")]
pub struct JetDataset {
    k: usize,
    horizon: f64,
    pairs: Vec<JetPair>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    k: usize,
    #[serde(rename = "T")]
    horizon: f64,
    #[serde(rename = "N")]
    count: usize,
    pairs: Vec<RawPair>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPair {
    v: Vec<f64>,
    z: Vec<f64>,
}

impl TryFrom<RawDataset> for JetDataset {
    type Error = Error;
    fn try_from(raw: RawDataset) -> Result<Self> {
        if raw.count != raw.pairs.len() {
            return Err(Error::Shape(format!(
                "dataset declares N = {} but holds {} pairs",
                raw.count,
                raw.pairs.len()
            )));
        }
        let pairs = raw
            .pairs
            .into_iter()
            .map(|p| {
                Ok(JetPair {
                    v: JetVector::new(p.v)?,
                    z: JetVector::new(p.z)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        JetDataset::new(raw.k, raw.horizon, pairs)
    }
}

impl From<JetDataset> for RawDataset {
    fn from(d: JetDataset) -> Self {
        RawDataset {
            k: d.k,
            horizon: d.horizon,
            count: d.pairs.len(),
            pairs: d
                .pairs
                .into_iter()
                .map(|p| RawPair {
                    v: p.v.into_derivs(),
                    z: p.z.into_derivs(),
                })
                .collect(),
        }
    }
}

impl JetDataset {
    pub fn new(k: usize, horizon: f64, pairs: Vec<JetPair>) -> Result<Self> {
        if k < 2 {
            return Err(Error::Config(format!("k must be >= 2, got {k}")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        if pairs.is_empty() {
            return Err(Error::Config("a dataset needs at least one pair".into()));
        }
        for (i, p) in pairs.iter().enumerate() {
            if p.v.order() + 1 != k || p.z.order() != k {
                return Err(Error::Shape(format!(
                    "pair {i} has jet orders ({}, {}), expected ({}, {k})",
                    p.v.order(),
                    p.z.order(),
                    k - 1
                )));
            }
        }
        Ok(Self { k, horizon, pairs })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn pairs(&self) -> &[JetPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Samples each input on the `k`-node grid and its ground-truth response on
/// the `k + 1`-node grid, and lifts both to jets.
pub fn build_dataset(
    inputs: &[InputSpec],
    ground_truth: &StateSpaceSystem,
    k: usize,
    horizon: f64,
    sim: &SimConfig,
) -> Result<JetDataset> {
    if k < 2 {
        return Err(Error::Config(format!("k must be >= 2, got {k}")));
    }
    let node_sim = SimConfig {
        grid_points: k + 1,
        ..sim.clone()
    };
    let pairs = inputs
        .par_iter()
        .enumerate()
        .map(|(i, spec)| {
            let u = sample_on_grid(spec, k - 1, horizon)?;
            let y = simulate(ground_truth, &Excitation::from(spec), horizon, &node_sim).map_err(|e| match e {
                Error::Divergence { time, detail } => Error::Divergence {
                    time,
                    detail: format!("sample {i}: {detail}"),
                },
                other => other,
            })?;
            Ok(JetPair {
                v: s_k(&u, k)?,
                z: s_k(&y, k + 1)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    JetDataset::new(k, horizon, pairs)
}

/// `max_{j=1..k} |P(t_j) - Z(t_j)|` with `P` the polynomial of the
/// predicted output jet, `Z` that of `z`, and `t_j = jT/k`.
pub fn sample_loss(params: &RnnParams, v: &JetVector, z: &JetVector, k: usize, horizon: f64) -> Result<f64> {
    if z.order() != k {
        return Err(Error::Shape(format!(
            "target jet must have order {k}, got {}",
            z.order()
        )));
    }
    let diff = output_jet(params, v, k)?.sub(z)?;
    Ok((1..=k)
        .map(|j| s_star(&diff, j as f64 * horizon / k as f64).abs())
        .fold(0.0, f64::max))
}

/// Mean of [`sample_loss`] over the dataset.
pub fn empirical_risk(params: &RnnParams, dataset: &JetDataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::Config("empirical risk of an empty dataset".into()));
    }
    let mut total = 0.0;
    for p in dataset.pairs() {
        total += sample_loss(params, &p.v, &p.z, dataset.k(), dataset.horizon())?;
    }
    Ok(total / dataset.len() as f64)
}

/// Euclidean projection onto F(M): singular values of `A` clipped at `M`,
/// `b`, `c`, `xi` radially shrunk. Points already inside are returned as is.
pub fn project_feasible(params: &RnnParams, bound: f64) -> RnnParams {
    let slack = bound * (1.0 + FEASIBILITY_TOLERANCE);
    let mut out = params.clone();
    if params.spectral_norm() > slack {
        let a = params.a_matrix();
        let mut svd = a.svd(true, true);
        svd.singular_values.iter_mut().for_each(|s| *s = s.min(bound));
        let clipped = svd.recompose().expect("u and v_t were requested");
        out = out.with_a_matrix(&clipped);
    }
    let shrink = |v: &[f64]| {
        let norm = euclid(v);
        if norm > slack {
            v.iter().map(|x| x * bound / norm).collect()
        } else {
            v.to_vec()
        }
    };
    out.clone()
        .with_b(shrink(out.b()))
        .with_c(shrink(out.c()))
        .with_xi(shrink(out.xi()))
}

/// Backtracking step-size schedule for projected descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSchedule {
    pub initial: f64,
    /// Multiplier applied after an accepted step.
    pub growth: f64,
    /// Halvings tried before declaring no descent.
    pub max_backtracks: usize,
}

impl Default for StepSchedule {
    fn default() -> Self {
        Self {
            initial: 0.1,
            growth: 2.0,
            max_backtracks: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(rename = "M")]
    pub bound: f64,
    #[serde(rename = "n")]
    pub neurons: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default)]
    pub step: StepSchedule,
    /// Forward-difference step, relative to `max(1, |theta_i|)`.
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    #[serde(default)]
    pub rng_seed: u64,
    /// Stop once the empirical risk falls to this value.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_restarts() -> usize {
    4
}
fn default_max_iterations() -> usize {
    400
}
fn default_fd_step() -> f64 {
    1e-5
}
fn default_tolerance() -> f64 {
    1e-12
}

impl TrainConfig {
    pub fn new(bound: f64, neurons: usize, rng_seed: u64) -> Self {
        Self {
            bound,
            neurons,
            restarts: default_restarts(),
            max_iterations: default_max_iterations(),
            step: StepSchedule::default(),
            fd_step: default_fd_step(),
            rng_seed,
            tolerance: default_tolerance(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bound.is_finite() && self.bound > 0.0) {
            return Err(Error::Config(format!("M must be positive, got {}", self.bound)));
        }
        if self.neurons == 0 {
            return Err(Error::Config("n must be >= 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be >= 1".into()));
        }
        if !(self.fd_step.is_finite() && self.fd_step > 0.0) {
            return Err(Error::Config(format!("fd_step must be positive, got {}", self.fd_step)));
        }
        if !(self.step.initial.is_finite() && self.step.initial > 0.0 && self.step.growth >= 1.0) {
            return Err(Error::Config("step schedule needs initial > 0 and growth >= 1".into()));
        }
        Ok(())
    }
}

/// Result of [`train`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub params: RnnParams,
    /// Accepted risks of the winning restart, starting with its initial risk.
    pub trajectory: Vec<f64>,
    /// The winning restart stopped because no descent step was found.
    pub stationary: bool,
    pub restart: usize,
    /// Final risk of every restart, by index.
    pub restart_risks: Vec<f64>,
}

impl TrainOutcome {
    pub fn final_risk(&self) -> f64 {
        *self.trajectory.last().expect("trajectory holds the initial risk")
    }

    pub fn initial_risk(&self) -> f64 {
        self.trajectory[0]
    }
}

/// Multi-restart projected descent with random initializations.
pub fn train(dataset: &JetDataset, config: &TrainConfig) -> Result<TrainOutcome> {
    train_from(dataset, config, None)
}

/// As [`train`]; when `init` is given, restart 0 starts there (projected).
pub fn train_from(dataset: &JetDataset, config: &TrainConfig, init: Option<&RnnParams>) -> Result<TrainOutcome> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Config("cannot train on an empty dataset".into()));
    }
    if let Some(p) = init {
        if p.n() != config.neurons {
            return Err(Error::Shape(format!(
                "initial net has n = {}, config asks for n = {}",
                p.n(),
                config.neurons
            )));
        }
    }
    let runs = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let start = match (r, init) {
                (0, Some(p)) => project_feasible(p, config.bound),
                _ => initial_params(config, r),
            };
            descend(dataset, config, start)
        })
        .collect::<Result<Vec<_>>>()?;
    let restart_risks: Vec<f64> = runs.iter().map(|r| *r.trajectory.last().unwrap()).collect();
    let best = (0..runs.len())
        .min_by(|&a, &b| restart_risks[a].total_cmp(&restart_risks[b]).then(a.cmp(&b)))
        .unwrap();
    let run = runs.into_iter().nth(best).unwrap();
    Ok(TrainOutcome {
        params: run.params,
        trajectory: run.trajectory,
        stationary: run.stationary,
        restart: best,
        restart_risks,
    })
}

/// Random start of a restart: entries uniform on `[-M/sqrt(n), M/sqrt(n)]`,
/// then projected.
pub fn initial_params(config: &TrainConfig, restart: usize) -> RnnParams {
    let n = config.neurons;
    let mut rng = stream_rng(config.rng_seed, restart as u64);
    let half = config.bound / (n as f64).sqrt();
    let theta: Vec<f64> = (0..n * n + 3 * n).map(|_| rng.random_range(-half..=half)).collect();
    project_feasible(
        &RnnParams::from_vector(n, &theta).expect("dimension matches"),
        config.bound,
    )
}

struct Run {
    params: RnnParams,
    trajectory: Vec<f64>,
    stationary: bool,
}

fn descend(dataset: &JetDataset, config: &TrainConfig, start: RnnParams) -> Result<Run> {
    let n = config.neurons;
    let risk_at = |theta: &[f64]| empirical_risk(&RnnParams::from_vector(n, theta)?, dataset);
    let mut params = start;
    let mut risk = empirical_risk(&params, dataset)?;
    let mut trajectory = vec![risk];
    let mut step = config.step.initial;
    let mut stationary = false;
    for _ in 0..config.max_iterations {
        if risk <= config.tolerance {
            break;
        }
        let theta = params.to_vector();
        let mut grad = vec![0.0; theta.len()];
        let mut probe = theta.clone();
        for i in 0..theta.len() {
            let h = config.fd_step * theta[i].abs().max(1.0);
            probe[i] = theta[i] + h;
            grad[i] = (risk_at(&probe)? - risk) / h;
            probe[i] = theta[i];
        }
        if grad.iter().all(|g| *g == 0.0) {
            stationary = true;
            break;
        }
        let mut accepted = None;
        for _ in 0..=config.step.max_backtracks {
            let trial: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - step * g).collect();
            let candidate = project_feasible(&RnnParams::from_vector(n, &trial)?, config.bound);
            let r = empirical_risk(&candidate, dataset)?;
            if r < risk {
                accepted = Some((candidate, r));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((p, r)) => {
                params = p;
                risk = r;
                trajectory.push(r);
                step *= config.step.growth;
            }
            None => {
                stationary = true;
                break;
            }
        }
    }
    Ok(Run {
        params,
        trajectory,
        stationary,
    })
}

/// Whether `N` meets the sample-size hypothesis, and the threshold
/// `k (6 n^6 + 10 n^3 log2 k)` rounded up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSizeCheck {
    pub satisfied: bool,
    pub required: u64,
}

pub fn sample_size_check(samples: usize, neurons: usize, k: usize) -> SampleSizeCheck {
    let n = neurons as f64;
    let kf = k as f64;
    let required = (kf * (6.0 * n.powi(6) + 10.0 * n.powi(3) * kf.log2())).ceil() as u64;
    SampleSizeCheck {
        satisfied: samples as u64 >= required,
        required,
    }
}
