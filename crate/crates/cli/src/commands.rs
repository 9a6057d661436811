use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use rnnjet_core::{
    bibo_gain_estimate, build_dataset, empirical_risk, monte_carlo_risk, rademacher_bound, rnn_output_sup_bound,
    sample_ensemble, sample_on_grid, simulate, theorem1_rhs, theorem2_rhs, train_from, vc_dimension_bound, BoundReport,
    EmpiricalModulus, EnsembleConfig, Excitation, GammaSource, InputSpec, JetDataset, LinearModulus, Modulus,
    ModulusSource, RnnParams, SampleSizeCheck, StateSpaceSystem, Theorem1Terms, Theorem2Inputs, Theorem2Terms,
    TrainConfig, TrainOutcome,
};
use serde::{Deserialize, Serialize};

use crate::config::{read_json, write_json, ExperimentConfig, Seeds, SweepSpec};
use crate::failure::{Failure, Outcome};

pub const DATASET: &str = "dataset.json";
pub const INPUTS: &str = "inputs.json";
pub const HELD_OUT_INPUTS: &str = "heldout_inputs.json";
pub const MODEL: &str = "model.json";
pub const TRAIN_LOG: &str = "train_log.csv";
pub const TRAIN_SUMMARY: &str = "train_summary.json";
pub const REPORT: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";
pub const TIMINGS: &str = "timings.json";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const BOUNDS: &str = "bounds.json";

fn ensure_dir(dir: &Path) -> Outcome<()> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))
}

/// Adds one entry to the wall-clock sidecar. Timings are kept out of the
/// report so reports stay byte-identical across runs.
fn record_timing(out: &Path, stage: &str, started: Instant) -> Outcome<()> {
    let path = out.join(TIMINGS);
    let mut map: BTreeMap<String, f64> = if path.exists() {
        read_json(&path)?
    } else {
        BTreeMap::new()
    };
    let secs = started.elapsed().as_secs_f64();
    info!("{stage} took {secs:.3} s");
    map.insert(format!("{stage}_seconds"), secs);
    write_json(&path, &map)
}

fn training_ensemble(cfg: &ExperimentConfig) -> EnsembleConfig {
    EnsembleConfig {
        rng_seed: cfg.seeds().training_inputs,
        ..cfg.ensemble.clone()
    }
}

/// Draws the training inputs and writes `inputs.json` and `dataset.json`.
pub fn generate(cfg: &ExperimentConfig, out: &Path) -> Outcome<JetDataset> {
    let started = Instant::now();
    ensure_dir(out)?;
    let inputs = sample_ensemble(&training_ensemble(cfg), cfg.samples, cfg.horizon)?;
    let dataset = build_dataset(&inputs, &cfg.ground_truth, cfg.k, cfg.horizon, &cfg.sim)?;
    write_json(&out.join(INPUTS), &inputs)?;
    write_json(&out.join(DATASET), &dataset)?;
    info!("wrote {} pairs to {}", dataset.len(), out.join(DATASET).display());
    record_timing(out, "generate", started)?;
    Ok(dataset)
}

fn load_dataset(cfg: &ExperimentConfig, path: &Path) -> Outcome<JetDataset> {
    let dataset: JetDataset = read_json(path)?;
    if dataset.k() != cfg.k || dataset.horizon() != cfg.horizon {
        return Err(Failure::Validation(format!(
            "{} has k = {}, T = {} but the config asks for k = {}, T = {}",
            path.display(),
            dataset.k(),
            dataset.horizon(),
            cfg.k,
            cfg.horizon
        )));
    }
    Ok(dataset)
}

/// Training details that do not belong in the model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub restart: usize,
    pub stationary: bool,
    pub restart_risks: Vec<f64>,
    pub initial_risk: f64,
    pub final_risk: f64,
}

/// Trains on a dataset file; writes `model.json`, `train_log.csv` and
/// `train_summary.json`.
pub fn train(cfg: &ExperimentConfig, out: &Path, dataset_path: &Path, init: Option<&Path>) -> Outcome<TrainOutcome> {
    let started = Instant::now();
    ensure_dir(out)?;
    let dataset = load_dataset(cfg, dataset_path)?;
    let init: Option<RnnParams> = init.map(read_json).transpose()?;
    let config = TrainConfig {
        rng_seed: cfg.seeds().training,
        ..cfg.train.clone()
    };
    let outcome = train_from(&dataset, &config, init.as_ref())?;
    write_json(&out.join(MODEL), &outcome.params)?;
    write_train_log(&out.join(TRAIN_LOG), &outcome.trajectory)?;
    write_json(
        &out.join(TRAIN_SUMMARY),
        &TrainSummary {
            restart: outcome.restart,
            stationary: outcome.stationary,
            restart_risks: outcome.restart_risks.clone(),
            initial_risk: outcome.initial_risk(),
            final_risk: outcome.final_risk(),
        },
    )?;
    info!("risk {:.6e} -> {:.6e}", outcome.initial_risk(), outcome.final_risk());
    record_timing(out, "train", started)?;
    Ok(outcome)
}

fn write_train_log(path: &Path, trajectory: &[f64]) -> Outcome<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Failure::io(path, e))?;
    w.write_record(["iter", "risk"]).map_err(|e| Failure::io(path, e))?;
    for (i, r) in trajectory.iter().enumerate() {
        w.write_record([i.to_string(), r.to_string()])
            .map_err(|e| Failure::io(path, e))?;
    }
    w.flush().map_err(|e| Failure::io(path, e))
}

fn read_train_log(path: &Path) -> Outcome<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Failure::io(path, e))?;
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| Failure::io(path, e))?;
            rec.get(1)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| Failure::Validation(format!("{}: malformed row {rec:?}", path.display())))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeldOutRisk {
    pub probes: usize,
    pub mean: f64,
    pub std_error: f64,
    pub gap_mean: f64,
    pub gap_std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gamma {
    pub value: f64,
    pub source: GammaSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub seeds: Seeds,
    pub model: RnnParams,
    pub trajectory: Vec<f64>,
    pub held_out: HeldOutRisk,
    pub lbar_star_upper_estimate: f64,
    pub gamma: Gamma,
    pub bounds: BoundReport,
    /// Held-out risk within the first bound plus three standard errors.
    pub theorem1_holds_within_mc_slack: bool,
}

impl ExperimentReport {
    pub const LEAD_COLUMNS: [&'static str; 5] = [
        "heldout_risk",
        "heldout_std_error",
        "gap_mean",
        "gamma",
        "theorem1_holds_within_mc_slack",
    ];

    pub fn csv_fields(&self) -> Vec<String> {
        let mut fields = vec![
            self.held_out.mean.to_string(),
            self.held_out.std_error.to_string(),
            self.held_out.gap_mean.to_string(),
            self.gamma.value.to_string(),
            self.theorem1_holds_within_mc_slack.to_string(),
        ];
        fields.extend(self.bounds.csv_fields());
        fields
    }

    pub fn csv_header() -> Vec<&'static str> {
        Self::LEAD_COLUMNS
            .iter()
            .chain(BoundReport::CSV_COLUMNS.iter())
            .copied()
            .collect()
    }
}

enum AnyModulus {
    Linear(LinearModulus),
    Empirical(EmpiricalModulus),
}

impl Modulus for AnyModulus {
    fn eval(&self, delta: f64) -> f64 {
        match self {
            AnyModulus::Linear(m) => m.eval(delta),
            AnyModulus::Empirical(m) => m.eval(delta),
        }
    }
}

/// Moduli of the input ensemble and of the ground-truth outputs. Analytic
/// output moduli need a certified output slope; without one the envelope
/// of sampled outputs is used and the report says so.
fn moduli(cfg: &ExperimentConfig, probes: &[InputSpec]) -> Outcome<(AnyModulus, AnyModulus, ModulusSource)> {
    if cfg.moduli == ModulusSource::Analytic {
        if let Some(slope) = cfg.ground_truth.output_slope_bound(cfg.ensemble.radius) {
            return Ok((
                AnyModulus::Linear(LinearModulus::new(slope)),
                AnyModulus::Linear(cfg.ensemble.modulus()),
                ModulusSource::Analytic,
            ));
        }
    }
    let degree = cfg.sim.grid_points - 1;
    let inputs = probes
        .iter()
        .map(|s| sample_on_grid(s, degree, cfg.horizon))
        .collect::<rnnjet_core::Result<Vec<_>>>()?;
    let outputs = probes
        .par_iter()
        .map(|s| simulate(&cfg.ground_truth, &Excitation::from(s), cfg.horizon, &cfg.sim))
        .collect::<rnnjet_core::Result<Vec<_>>>()?;
    Ok((
        AnyModulus::Empirical(EmpiricalModulus::from_signals(&outputs)?),
        AnyModulus::Empirical(EmpiricalModulus::from_signals(&inputs)?),
        ModulusSource::Empirical,
    ))
}

/// BIBO gain at radius `R`: supplied, certified, or probed.
fn gamma(cfg: &ExperimentConfig) -> Outcome<Gamma> {
    if let Some(value) = cfg.gamma {
        return Ok(Gamma {
            value,
            source: GammaSource::Supplied,
        });
    }
    let r = cfg.ensemble.radius;
    let certified = match &cfg.ground_truth {
        StateSpaceSystem::Rnn(p) => Some(rnn_output_sup_bound(p, cfg.horizon)),
        StateSpaceSystem::LinearStable {
            decay,
            input_gain,
            output_gain,
            xi0,
        } => Some(output_gain.abs() * (xi0.abs() + input_gain.abs() * r / decay)),
        _ => None,
    };
    match certified {
        Some(value) => Ok(Gamma {
            value,
            source: GammaSource::Analytic,
        }),
        None => {
            let est = bibo_gain_estimate(
                &cfg.ground_truth,
                r,
                cfg.probe_count,
                cfg.horizon,
                &cfg.sim,
                cfg.seeds().bibo_probes,
            )?;
            Ok(Gamma {
                value: est.gain,
                source: GammaSource::ProbedEstimate,
            })
        }
    }
}

/// Held-out risk and bound report for a trained model.
pub fn evaluate(
    cfg: &ExperimentConfig,
    out: &Path,
    model_path: &Path,
    dataset_path: &Path,
    log_path: &Path,
) -> Outcome<ExperimentReport> {
    let started = Instant::now();
    ensure_dir(out)?;
    let model: RnnParams = read_json(model_path)?;
    let bound = cfg.train.bound;
    if model.n() != cfg.train.neurons || !model.is_feasible(bound) {
        return Err(Failure::Validation(format!(
            "{}: model with n = {} and max norm {} is outside F(M) for n = {}, M = {bound}",
            model_path.display(),
            model.n(),
            model.max_norm(),
            cfg.train.neurons
        )));
    }
    let dataset = load_dataset(cfg, dataset_path)?;
    let trajectory = read_train_log(log_path)?;
    let seeds = cfg.seeds();
    let held_out_ensemble = EnsembleConfig {
        rng_seed: seeds.held_out_inputs,
        ..cfg.ensemble.clone()
    };
    let probes = sample_ensemble(&held_out_ensemble, cfg.probe_count, cfg.horizon)?;
    write_json(&out.join(HELD_OUT_INPUTS), &probes)?;
    let mc = monte_carlo_risk(
        &model,
        &cfg.ground_truth,
        &cfg.ensemble,
        cfg.probe_count,
        cfg.k,
        cfg.horizon,
        &cfg.sim,
        seeds.held_out_inputs,
    )?;
    let lbar = empirical_risk(&model, &dataset)?;
    let gamma = gamma(cfg)?;
    let (omega_y, omega_u, source) = moduli(cfg, &probes)?;
    let theorem1 = theorem1_rhs(&omega_y, &omega_u, &model, cfg.k, cfg.horizon, mc.gap_mean)?;
    let inputs = theorem2_inputs(cfg, dataset.len(), gamma.value, lbar);
    let theorem2 = theorem2_rhs(&inputs, &omega_y, &omega_u)?;
    let bounds = BoundReport::assemble(theorem1, theorem2, &inputs, source, gamma.source);
    let report = ExperimentReport {
        config: cfg.clone(),
        seeds,
        model,
        trajectory,
        held_out: HeldOutRisk {
            probes: cfg.probe_count,
            mean: mc.mean,
            std_error: mc.std_error,
            gap_mean: mc.gap_mean,
            gap_std_error: mc.gap_std_error,
        },
        lbar_star_upper_estimate: lbar,
        gamma,
        theorem1_holds_within_mc_slack: mc.mean <= theorem1.total + 3.0 * mc.std_error,
        bounds,
    };
    write_json(&out.join(REPORT), &report)?;
    write_csv(
        &out.join(REPORT_CSV),
        &ExperimentReport::csv_header(),
        &[report.csv_fields()],
    )?;
    record_timing(out, "evaluate", started)?;
    Ok(report)
}

fn theorem2_inputs(cfg: &ExperimentConfig, samples: usize, gamma: f64, lbar_star: f64) -> Theorem2Inputs {
    Theorem2Inputs {
        bound: cfg.train.bound,
        neurons: cfg.train.neurons,
        k: cfg.k,
        horizon: cfg.horizon,
        samples,
        delta: cfg.delta,
        gamma,
        lbar_star,
        c_abs: cfg.c_abs,
        waive_sample_size: cfg.waive_sample_size,
    }
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Outcome<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Failure::io(path, e))?;
    w.write_record(header).map_err(|e| Failure::io(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| Failure::io(path, e))?;
    }
    w.flush().map_err(|e| Failure::io(path, e))
}

/// generate, train and evaluate in one directory.
pub fn pipeline(cfg: &ExperimentConfig, out: &Path) -> Outcome<ExperimentReport> {
    generate(cfg, out)?;
    train(cfg, out, &out.join(DATASET), None)?;
    evaluate(cfg, out, &out.join(MODEL), &out.join(DATASET), &out.join(TRAIN_LOG))
}

/// One sweep point: its value and either a report or the failure message.
pub struct SweepPoint {
    pub value: usize,
    pub dir: PathBuf,
    pub outcome: Outcome<ExperimentReport>,
}

/// Runs the pipeline at every sweep value in its own subdirectory and
/// writes `sweep.csv`, one row per point in the given order. Failed points
/// are recorded and do not stop the sweep.
pub fn sweep(cfg: &ExperimentConfig, out: &Path, spec: &SweepSpec) -> Outcome<Vec<SweepPoint>> {
    let started = Instant::now();
    ensure_dir(out)?;
    if spec.values.is_empty() {
        return Err(Failure::Validation("sweep needs at least one value".into()));
    }
    let points: Vec<SweepPoint> = spec
        .values
        .par_iter()
        .map(|&value| {
            let dir = out.join(format!("{}_{value}", spec.parameter));
            let point = cfg.at(spec.parameter, value);
            let outcome = point.validate().and_then(|_| pipeline(&point, &dir));
            if let Err(e) = &outcome {
                log::warn!("sweep point {}={value} failed: {e}", spec.parameter);
            }
            SweepPoint { value, dir, outcome }
        })
        .collect();
    let mut header = vec!["parameter", "value", "status", "error"];
    header.extend(ExperimentReport::csv_header());
    let width = header.len();
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            let mut row = vec![spec.parameter.to_string(), p.value.to_string()];
            match &p.outcome {
                Ok(report) => {
                    row.extend(["ok".to_string(), String::new()]);
                    row.extend(report.csv_fields());
                }
                Err(e) => {
                    row.extend(["failed".to_string(), e.to_string()]);
                    row.resize(width, String::new());
                }
            }
            row
        })
        .collect();
    write_csv(&out.join(SWEEP_CSV), &header, &rows)?;
    record_timing(out, "sweep", started)?;
    Ok(points)
}

/// Output of the pure calculator mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsOnly {
    pub config: ExperimentConfig,
    pub vc_bound: u64,
    pub sample_size: SampleSizeCheck,
    pub gamma: Gamma,
    /// Computed with the L̄* estimate set to 0.
    pub theorem2: Theorem2Terms,
    pub rademacher_bound: Option<f64>,
    /// Present when a model is given; the gap term is not estimated here.
    pub theorem1_without_gap: Option<Theorem1Terms>,
    pub moduli: ModulusSource,
}

/// Closed-form bounds for the config, without data or training.
pub fn bounds(cfg: &ExperimentConfig, out: &Path, model_path: Option<&Path>) -> Outcome<BoundsOnly> {
    ensure_dir(out)?;
    let gamma = gamma(cfg)?;
    let probes = sample_ensemble(
        &EnsembleConfig {
            rng_seed: cfg.seeds().held_out_inputs,
            ..cfg.ensemble.clone()
        },
        cfg.probe_count,
        cfg.horizon,
    )?;
    let (omega_y, omega_u, source) = moduli(cfg, &probes)?;
    let inputs = theorem2_inputs(cfg, cfg.samples, gamma.value, 0.0);
    let theorem2 = theorem2_rhs(&inputs, &omega_y, &omega_u)?;
    let theorem1_without_gap = match model_path {
        Some(p) => {
            let model: RnnParams = read_json(p)?;
            Some(theorem1_rhs(&omega_y, &omega_u, &model, cfg.k, cfg.horizon, 0.0)?)
        }
        None => None,
    };
    let vc_bound = vc_dimension_bound(cfg.train.neurons, cfg.k);
    let n = cfg.train.neurons as f64;
    let range = cfg.train.bound * (cfg.train.bound + n.sqrt() * cfg.horizon) + gamma.value;
    let result = BoundsOnly {
        config: cfg.clone(),
        vc_bound,
        sample_size: theorem2.sample_size,
        gamma,
        theorem2,
        rademacher_bound: rademacher_bound(range, vc_bound, cfg.samples, cfg.c_abs).ok(),
        theorem1_without_gap,
        moduli: source,
    };
    write_json(&out.join(BOUNDS), &result)?;
    Ok(result)
}
