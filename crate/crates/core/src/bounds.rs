//! Closed-form risk and capacity bounds, and the Monte-Carlo risk estimate
//! they are compared against.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bernstein::{s_k, s_star};
use crate::erm::{sample_size_check, SampleSizeCheck};
use crate::error::{Error, Result};
use crate::jets::{output_jet, RnnParams};
use crate::rnn::{simulate, Excitation, SimConfig, StateSpaceSystem};
use crate::signals::{sample_ensemble, sample_on_grid, sup_distance, EnsembleConfig, Modulus};

/// Terms of the risk bound that holds for any fixed net.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Terms {
    /// `2 w_Y(T / sqrt k)`
    pub output_modulus: f64,
    /// `2 |c| |b| e^(||A|| T) w_U(2T / sqrt k)`
    pub input_modulus: f64,
    /// `|c| T e^(||A|| T) sqrt(n / k)`
    pub jet_truncation: f64,
    /// Expected sup gap between the predicted and true Bernstein outputs.
    pub bernstein_gap: f64,
    pub total: f64,
}

pub fn theorem1_rhs(
    omega_y: &impl Modulus,
    omega_u: &impl Modulus,
    params: &RnnParams,
    k: usize,
    horizon: f64,
    gap: f64,
) -> Result<Theorem1Terms> {
    if k < 2 {
        return Err(Error::Config(format!("k must be >= 2, got {k}")));
    }
    if gap.is_nan() || gap < 0.0 {
        return Err(Error::Domain(format!("gap expectation must be nonnegative, got {gap}")));
    }
    let root_k = (k as f64).sqrt();
    let growth = (params.spectral_norm() * horizon).exp();
    let c = params.c_norm();
    let output_modulus = 2.0 * omega_y.eval(horizon / root_k);
    let input_modulus = 2.0 * c * params.b_norm() * growth * omega_u.eval(2.0 * horizon / root_k);
    let jet_truncation = c * horizon * growth * (params.n() as f64 / k as f64).sqrt();
    Ok(Theorem1Terms {
        output_modulus,
        input_modulus,
        jet_truncation,
        bernstein_gap: gap,
        total: output_modulus + input_modulus + jet_truncation + gap,
    })
}

/// Inputs of the high-probability bound on the risk of the trained net.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Theorem2Inputs {
    #[serde(rename = "M")]
    pub bound: f64,
    #[serde(rename = "n")]
    pub neurons: usize,
    pub k: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "N")]
    pub samples: usize,
    pub delta: f64,
    /// BIBO gain of the ground truth at the input radius.
    pub gamma: f64,
    /// Upper estimate of the minimal expected jet risk over F(M).
    pub lbar_star: f64,
    pub c_abs: f64,
    /// Evaluate even when the sample-size hypothesis fails.
    #[serde(default)]
    pub waive_sample_size: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Terms {
    /// `4 w_Y(T / sqrt k)`
    pub output_modulus: f64,
    /// `2 M^2 e^(MT) w_U(2T / sqrt k)`
    pub input_modulus: f64,
    /// `3 M T e^(MT) sqrt(n / k)`
    pub jet_truncation: f64,
    /// L̄* upper estimate.
    pub approximation: f64,
    pub estimation: f64,
    pub total: f64,
    pub sample_size: SampleSizeCheck,
    pub waived: bool,
}

pub fn theorem2_rhs(inputs: &Theorem2Inputs, omega_y: &impl Modulus, omega_u: &impl Modulus) -> Result<Theorem2Terms> {
    let Theorem2Inputs {
        bound: m,
        neurons,
        k,
        horizon,
        samples,
        delta,
        gamma,
        lbar_star,
        c_abs,
        waive_sample_size,
    } = *inputs;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Precondition(format!("delta must lie in (0, 1), got {delta}")));
    }
    if k < 1 || neurons < 1 || samples < 1 {
        return Err(Error::Precondition(format!(
            "need k, n, N >= 1, got k = {k}, n = {neurons}, N = {samples}"
        )));
    }
    if !(m > 0.0 && horizon > 0.0 && gamma >= 0.0 && lbar_star >= 0.0 && c_abs > 0.0) {
        return Err(Error::Precondition(
            "M, T, c_abs must be positive and gamma, L̄* nonnegative".into(),
        ));
    }
    let sample_size = sample_size_check(samples, neurons, k);
    if !sample_size.satisfied && !waive_sample_size {
        return Err(Error::Precondition(format!(
            "N = {samples} is below the sample-size threshold {}",
            sample_size.required
        )));
    }
    let n = neurons as f64;
    let kf = k as f64;
    let root_k = kf.sqrt();
    let growth = (m * horizon).exp();
    let output_modulus = 4.0 * omega_y.eval(horizon / root_k);
    let input_modulus = 2.0 * m * m * growth * omega_u.eval(2.0 * horizon / root_k);
    let jet_truncation = 3.0 * m * horizon * growth * (n / kf).sqrt();
    let range = m * (m + n.sqrt() * horizon) + gamma;
    let capacity = kf * (n.powi(6) + n.powi(3) * kf.log2());
    let nf = samples as f64;
    let estimation = c_abs * range * ((capacity * nf.ln() + (1.0 / delta).ln()) / nf).sqrt();
    Ok(Theorem2Terms {
        output_modulus,
        input_modulus,
        jet_truncation,
        approximation: lbar_star,
        estimation,
        total: output_modulus + input_modulus + jet_truncation + lbar_star + estimation,
        sample_size,
        waived: !sample_size.satisfied,
    })
}

/// `2k (3 n^6 + 5 n^3 log2 k)`, rounded up.
pub fn vc_dimension_bound(neurons: usize, k: usize) -> u64 {
    let n = neurons as f64;
    let kf = k as f64;
    (2.0 * kf * (3.0 * n.powi(6) + 5.0 * n.powi(3) * kf.log2())).ceil() as u64
}

/// `c_abs B sqrt(vc ln N / N)` for a VC-subgraph class with range `[0, B]`.
pub fn rademacher_bound(range: f64, vc: u64, samples: usize, c_abs: f64) -> Result<f64> {
    if (samples as u64) < vc {
        return Err(Error::Precondition(format!("N = {samples} is below the VC bound {vc}")));
    }
    let nf = samples as f64;
    Ok(c_abs * range * (vc as f64 * nf.ln() / nf).sqrt())
}

/// `2 lip w_u(2T / sqrt k) + 2 w_Gu(T / sqrt k)`: sandwich error of a
/// Lipschitz i/o map between Bernstein liftings.
pub fn lemma2_bound(lip: f64, omega_u: &impl Modulus, omega_gu: &impl Modulus, k: usize, horizon: f64) -> f64 {
    let root_k = (k as f64).sqrt();
    2.0 * lip * omega_u.eval(2.0 * horizon / root_k) + 2.0 * omega_gu.eval(horizon / root_k)
}

/// Held-out estimate of the sup-norm risk, with the per-probe Bernstein gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloRisk {
    pub mean: f64,
    pub std_error: f64,
    pub gap_mean: f64,
    pub gap_std_error: f64,
    pub risks: Vec<f64>,
    pub gaps: Vec<f64>,
}

/// Draws `probes` fresh inputs from `ensemble` (reseeded with `seed`) and
/// compares the net with the ground truth on the `sim.grid_points` grid.
/// The gap of a probe is the sup over the same grid of
/// `|S*(Y(S_k u)) - S*(S_{k+1} y)|`.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo_risk(
    params: &RnnParams,
    ground_truth: &StateSpaceSystem,
    ensemble: &EnsembleConfig,
    probes: usize,
    k: usize,
    horizon: f64,
    sim: &SimConfig,
    seed: u64,
) -> Result<MonteCarloRisk> {
    if probes == 0 {
        return Err(Error::Config("monte carlo risk needs at least one probe".into()));
    }
    if k < 2 {
        return Err(Error::Config(format!("k must be >= 2, got {k}")));
    }
    let inputs = sample_ensemble(
        &EnsembleConfig {
            rng_seed: seed,
            ..ensemble.clone()
        },
        probes,
        horizon,
    )?;
    let model = StateSpaceSystem::Rnn(params.clone());
    let node_sim = SimConfig {
        grid_points: k + 1,
        ..sim.clone()
    };
    let pairs = inputs
        .par_iter()
        .map(|spec| {
            let u = Excitation::from(spec);
            let y_hat = simulate(&model, &u, horizon, sim)?;
            let y = simulate(ground_truth, &u, horizon, sim)?;
            let risk = sup_distance(&y_hat, &y)?;
            let predicted = output_jet(params, &s_k(&sample_on_grid(spec, k - 1, horizon)?, k)?, k)?;
            let target = s_k(&simulate(ground_truth, &u, horizon, &node_sim)?, k + 1)?;
            let diff = predicted.sub(&target)?;
            let gap = y.times().map(|t| s_star(&diff, t).abs()).fold(0.0, f64::max);
            Ok((risk, gap))
        })
        .collect::<Result<Vec<_>>>()?;
    let (risks, gaps): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let (mean, std_error) = mean_and_std_error(&risks);
    let (gap_mean, gap_std_error) = mean_and_std_error(&gaps);
    Ok(MonteCarloRisk {
        mean,
        std_error,
        gap_mean,
        gap_std_error,
        risks,
        gaps,
    })
}

fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Where the moduli of continuity fed to the bounds came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusSource {
    Analytic,
    Empirical,
}

/// Whether the BIBO gain was supplied or estimated by probing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaSource {
    Supplied,
    Analytic,
    ProbedEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem1: Theorem1Terms,
    pub theorem2: Theorem2Terms,
    pub vc_bound: u64,
    /// `None` when `N` is below the VC bound.
    pub rademacher_bound: Option<f64>,
    pub sample_size_ok: bool,
    pub c_abs: f64,
    pub moduli: ModulusSource,
    pub gamma: GammaSource,
}

impl BoundReport {
    pub fn assemble(
        theorem1: Theorem1Terms,
        theorem2: Theorem2Terms,
        inputs: &Theorem2Inputs,
        moduli: ModulusSource,
        gamma: GammaSource,
    ) -> Self {
        let vc_bound = vc_dimension_bound(inputs.neurons, inputs.k);
        let n = inputs.neurons as f64;
        let range = inputs.bound * (inputs.bound + n.sqrt() * inputs.horizon) + inputs.gamma;
        Self {
            theorem1,
            theorem2,
            vc_bound,
            rademacher_bound: rademacher_bound(range, vc_bound, inputs.samples, inputs.c_abs).ok(),
            sample_size_ok: theorem2.sample_size.satisfied,
            c_abs: inputs.c_abs,
            moduli,
            gamma,
        }
    }

    pub const CSV_COLUMNS: [&'static str; 19] = [
        "t1_output_modulus",
        "t1_input_modulus",
        "t1_jet_truncation",
        "t1_bernstein_gap",
        "t1_total",
        "t2_output_modulus",
        "t2_input_modulus",
        "t2_jet_truncation",
        "t2_lbar_star_upper_estimate",
        "t2_estimation",
        "t2_total",
        "sample_size_required",
        "sample_size_ok",
        "sample_size_waived",
        "vc_bound",
        "rademacher_bound",
        "c_abs",
        "moduli",
        "gamma_source",
    ];

    /// Values in [`Self::CSV_COLUMNS`] order.
    pub fn csv_fields(&self) -> Vec<String> {
        let t1 = &self.theorem1;
        let t2 = &self.theorem2;
        vec![
            t1.output_modulus.to_string(),
            t1.input_modulus.to_string(),
            t1.jet_truncation.to_string(),
            t1.bernstein_gap.to_string(),
            t1.total.to_string(),
            t2.output_modulus.to_string(),
            t2.input_modulus.to_string(),
            t2.jet_truncation.to_string(),
            t2.approximation.to_string(),
            t2.estimation.to_string(),
            t2.total.to_string(),
            t2.sample_size.required.to_string(),
            self.sample_size_ok.to_string(),
            t2.waived.to_string(),
            self.vc_bound.to_string(),
            self.rademacher_bound.map(|r| r.to_string()).unwrap_or_default(),
            self.c_abs.to_string(),
            tag(&self.moduli),
            tag(&self.gamma),
        ]
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(Self::CSV_COLUMNS)?;
        w.write_record(self.csv_fields())?;
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }
}

fn tag<T: Serialize>(value: &T) -> String {
    serde_json::to_value(value)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}
