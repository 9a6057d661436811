//! Signals on `[0, T]`: equispaced samples, the analytic input families,
//! random input ensembles, moduli of continuity and sup-norm distances.

use std::collections::VecDeque;
use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bernstein::JetVector;
use crate::error::{Error, Result};
use crate::seed::stream_rng;

/// Values of a signal on the grid `0, T/m, ..., T` (`m + 1` points).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSignal")]
pub struct SampledSignal {
    values: Vec<f64>,
    horizon: f64,
}

#[derive(Deserialize)]
struct RawSignal {
    values: Vec<f64>,
    horizon: f64,
}

impl TryFrom<RawSignal> for SampledSignal {
    type Error = Error;
    fn try_from(raw: RawSignal) -> Result<Self> {
        SampledSignal::new(raw.values, raw.horizon)
    }
}

impl SampledSignal {
    pub fn new(values: Vec<f64>, horizon: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Shape(format!(
                "a sampled signal needs at least 2 values, got {}",
                values.len()
            )));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("sample {i} is not finite")));
        }
        Ok(Self { values, horizon })
    }

    /// Samples `f` at `iT/m` for `i = 0..=m`.
    pub fn from_fn(degree: usize, horizon: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..=degree).map(|i| f(grid_time(i, degree, horizon))).collect();
        Self::new(values, horizon)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Grid degree `m` (number of intervals).
    pub fn degree(&self) -> usize {
        self.values.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.degree() as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        grid_time(i, self.degree(), self.horizon)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.time(i))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// CSV with header `t,value`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["t", "value"])?;
        for (t, v) in self.times().zip(&self.values) {
            w.write_record([t.to_string(), v.to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }

    /// Parses the `t,value` CSV layout; the grid must be equispaced from 0.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["t", "value"] {
            return Err(Error::Format(format!(
                "expected header `t,value`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("row {}: cannot parse `{s}`: {e}", line + 2)))
            };
            times.push(parse(&rec[0])?);
            values.push(parse(&rec[1])?);
        }
        let horizon = *times.last().ok_or_else(|| Error::Format("no samples".into()))?;
        let signal = Self::new(values, horizon)?;
        for (i, t) in times.iter().enumerate() {
            if (t - signal.time(i)).abs() > 1e-9 * horizon.max(1.0) {
                return Err(Error::Shape(format!(
                    "row {} has t = {t}, expected equispaced node {}",
                    i + 2,
                    signal.time(i)
                )));
            }
        }
        Ok(signal)
    }
}

pub(crate) fn grid_time(i: usize, degree: usize, horizon: f64) -> f64 {
    if i == degree {
        horizon
    } else {
        i as f64 * horizon / degree as f64
    }
}

/// Which analytic input family a spec belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    Fourier,
    Polynomial,
}

/// One analytic input: a finite Fourier sum or a polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    /// `u(t) = sum_i c_i sin(w_i t + a_i)`.
    Fourier {
        coefficients: Vec<f64>,
        frequencies: Vec<f64>,
        phases: Vec<f64>,
    },
    /// `u(t) = sum_i c_i t^i`.
    Polynomial { coefficients: Vec<f64> },
}

impl InputSpec {
    pub fn fourier(coefficients: Vec<f64>, frequencies: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if coefficients.len() != frequencies.len() || coefficients.len() != phases.len() {
            return Err(Error::Shape(format!(
                "Fourier spec needs equal lengths, got {} coefficients, {} frequencies, {} phases",
                coefficients.len(),
                frequencies.len(),
                phases.len()
            )));
        }
        Ok(Self::Fourier {
            coefficients,
            frequencies,
            phases,
        })
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Self {
        Self::Polynomial { coefficients }
    }

    pub fn kind(&self) -> InputKind {
        match self {
            Self::Fourier { .. } => InputKind::Fourier,
            Self::Polynomial { .. } => InputKind::Polynomial,
        }
    }

    /// Value at `t`, rejecting times outside `[0, horizon]`.
    pub fn eval(&self, t: f64, horizon: f64) -> Result<f64> {
        if !(0.0..=horizon).contains(&t) {
            return Err(Error::Domain(format!("t = {t} outside [0, {horizon}]")));
        }
        Ok(self.value_at(t))
    }

    /// Value at any real `t`; the closed forms extend past the horizon.
    pub fn value_at(&self, t: f64) -> f64 {
        match self {
            Self::Fourier {
                coefficients,
                frequencies,
                phases,
            } => coefficients
                .iter()
                .zip(frequencies)
                .zip(phases)
                .map(|((c, w), a)| c * (w * t + a).sin())
                .sum(),
            Self::Polynomial { coefficients } => coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c),
        }
    }

    /// Exact derivatives `u(0), u'(0), ..., u^(order)(0)`.
    pub fn jet(&self, order: usize) -> JetVector {
        let derivs = (0..=order)
            .map(|l| match self {
                Self::Fourier {
                    coefficients,
                    frequencies,
                    phases,
                } => coefficients
                    .iter()
                    .zip(frequencies)
                    .zip(phases)
                    .map(|((c, w), a)| c * w.powi(l as i32) * quarter_turn_sin(*a, l))
                    .sum(),
                Self::Polynomial { coefficients } => coefficients.get(l).map_or(0.0, |c| factorial(l) * c),
            })
            .collect();
        JetVector::new(derivs).expect("closed-form derivatives are finite")
    }

    /// The sup-norm certificate: `sum |c_i|` or `sum |c_i| T^i`.
    pub fn radius(&self, horizon: f64) -> f64 {
        match self {
            Self::Fourier { coefficients, .. } => coefficients.iter().map(|c| c.abs()).sum(),
            Self::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .map(|(i, c)| c.abs() * horizon.powi(i as i32))
                .sum(),
        }
    }

    /// The Lipschitz certificate: `sum |c_i w_i|` or `sum i |c_i| T^(i-1)`.
    pub fn lipschitz(&self, horizon: f64) -> f64 {
        match self {
            Self::Fourier {
                coefficients,
                frequencies,
                ..
            } => coefficients.iter().zip(frequencies).map(|(c, w)| (c * w).abs()).sum(),
            Self::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| i as f64 * c.abs() * horizon.powi(i as i32 - 1))
                .sum(),
        }
    }

    fn scale_coefficients(&mut self, s: f64) {
        let coefficients = match self {
            Self::Fourier { coefficients, .. } | Self::Polynomial { coefficients } => coefficients,
        };
        coefficients.iter_mut().for_each(|c| *c *= s);
    }
}

/// `sin(a + l*pi/2)` without rounding the shift.
fn quarter_turn_sin(a: f64, l: usize) -> f64 {
    match l % 4 {
        0 => a.sin(),
        1 => a.cos(),
        2 => -a.sin(),
        _ => -a.cos(),
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Samples `spec` at `iT/m`, `i = 0..=m`.
pub fn sample_on_grid(spec: &InputSpec, degree: usize, horizon: f64) -> Result<SampledSignal> {
    if degree == 0 {
        return Err(Error::Shape("grid degree must be at least 1".into()));
    }
    SampledSignal::from_fn(degree, horizon, |t| spec.value_at(t))
}

/// Distribution of random inputs. Coefficients are drawn uniformly and the
/// whole vector is rescaled by the binding constraint ratio, so every draw
/// satisfies the radius and Lipschitz constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub kind: InputKind,
    /// Fourier: number of terms. Polynomial: degree.
    pub m_terms: usize,
    /// Sup-norm radius `R`.
    #[serde(rename = "R")]
    pub radius: f64,
    /// Common Lipschitz constant `L`.
    #[serde(rename = "L")]
    pub lipschitz: f64,
    /// Coefficients are drawn from `U[-coefficient_scale, coefficient_scale]`.
    #[serde(default = "default_coefficient_scale")]
    pub coefficient_scale: f64,
    #[serde(default = "default_frequency_range")]
    pub frequency_range: [f64; 2],
    #[serde(default = "default_phase_range")]
    pub phase_range: [f64; 2],
    /// Draw the number of terms uniformly from `1..=m_terms` (Fourier) or
    /// the degree from `0..=m_terms` (polynomial).
    #[serde(default)]
    pub vary_terms: bool,
    #[serde(default)]
    pub rng_seed: u64,
}

fn default_coefficient_scale() -> f64 {
    1.0
}
fn default_frequency_range() -> [f64; 2] {
    [0.0, 2.0 * PI]
}
fn default_phase_range() -> [f64; 2] {
    [0.0, 2.0 * PI]
}

impl EnsembleConfig {
    pub fn fourier(m_terms: usize, radius: f64, lipschitz: f64, rng_seed: u64) -> Self {
        Self {
            kind: InputKind::Fourier,
            m_terms,
            radius,
            lipschitz,
            coefficient_scale: default_coefficient_scale(),
            frequency_range: default_frequency_range(),
            phase_range: default_phase_range(),
            vary_terms: false,
            rng_seed,
        }
    }

    pub fn polynomial(degree: usize, radius: f64, lipschitz: f64, rng_seed: u64) -> Self {
        Self {
            kind: InputKind::Polynomial,
            m_terms: degree,
            ..Self::fourier(1, radius, lipschitz, rng_seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be finite and positive, got {v}")))
            }
        };
        positive("R", self.radius)?;
        positive("L", self.lipschitz)?;
        if !(self.coefficient_scale.is_finite() && self.coefficient_scale >= 0.0) {
            return Err(Error::Config(format!(
                "coefficient_scale must be finite and nonnegative, got {}",
                self.coefficient_scale
            )));
        }
        if self.kind == InputKind::Fourier && self.m_terms == 0 {
            return Err(Error::Config("a Fourier ensemble needs m_terms >= 1".into()));
        }
        for (name, [lo, hi]) in [
            ("frequency_range", self.frequency_range),
            ("phase_range", self.phase_range),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Config(format!(
                    "{name} must be a finite interval, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// The analytic common modulus `w(delta) = L delta`.
    pub fn modulus(&self) -> LinearModulus {
        LinearModulus::new(self.lipschitz)
    }
}

/// Draws `count` i.i.d. input specs. Sample `i` uses its own ChaCha stream,
/// so the list is reproducible and independent of evaluation order.
pub fn sample_ensemble(config: &EnsembleConfig, count: usize, horizon: f64) -> Result<Vec<InputSpec>> {
    config.validate()?;
    if count == 0 {
        return Err(Error::Config("ensemble size must be at least 1".into()));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
    }
    Ok((0..count).map(|i| draw_input(config, horizon, i as u64)).collect())
}

fn draw_input(config: &EnsembleConfig, horizon: f64, index: u64) -> InputSpec {
    let mut rng = stream_rng(config.rng_seed, index);
    let s = config.coefficient_scale;
    let mut uniform = |[lo, hi]: [f64; 2]| if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let mut spec = match config.kind {
        InputKind::Fourier => {
            let terms = if config.vary_terms {
                1 + (uniform([0.0, config.m_terms as f64]).floor() as usize).min(config.m_terms - 1)
            } else {
                config.m_terms
            };
            let mut coefficients = Vec::with_capacity(terms);
            let mut frequencies = Vec::with_capacity(terms);
            let mut phases = Vec::with_capacity(terms);
            for _ in 0..terms {
                coefficients.push(uniform([-s, s]));
                frequencies.push(uniform(config.frequency_range));
                phases.push(uniform(config.phase_range));
            }
            InputSpec::Fourier {
                coefficients,
                frequencies,
                phases,
            }
        }
        InputKind::Polynomial => {
            let degree = if config.vary_terms {
                (uniform([0.0, config.m_terms as f64 + 1.0]).floor() as usize).min(config.m_terms)
            } else {
                config.m_terms
            };
            InputSpec::Polynomial {
                coefficients: (0..=degree).map(|_| uniform([-s, s])).collect(),
            }
        }
    };
    let r = spec.radius(horizon);
    let l = spec.lipschitz(horizon);
    let mut scale: f64 = 1.0;
    if r > config.radius {
        scale = scale.min(config.radius / r);
    }
    if l > config.lipschitz {
        scale = scale.min(config.lipschitz / l);
    }
    if scale < 1.0 {
        spec.scale_coefficients(scale);
    }
    spec
}

/// Grid-restricted modulus of continuity: the largest `|u(t1) - u(t2)|` over
/// grid pairs with `|t1 - t2| <= delta`. A lower bound on the true modulus.
pub fn estimate_modulus(signal: &SampledSignal, delta: f64) -> f64 {
    if delta.is_nan() || delta <= 0.0 {
        return 0.0;
    }
    let delta = delta.min(signal.horizon());
    let gap = ((delta / signal.step()) * (1.0 + 1e-12)).floor() as usize;
    window_range_max(signal.values(), gap.min(signal.degree()))
}

/// Max over windows of `gap + 1` consecutive values of (max - min).
fn window_range_max(values: &[f64], gap: usize) -> f64 {
    if gap == 0 {
        return 0.0;
    }
    let mut hi: VecDeque<usize> = VecDeque::new();
    let mut lo: VecDeque<usize> = VecDeque::new();
    let mut best: f64 = 0.0;
    for (j, &v) in values.iter().enumerate() {
        while hi.back().is_some_and(|&i| values[i] <= v) {
            hi.pop_back();
        }
        hi.push_back(j);
        while lo.back().is_some_and(|&i| values[i] >= v) {
            lo.pop_back();
        }
        lo.push_back(j);
        let start = j.saturating_sub(gap);
        while hi.front().is_some_and(|&i| i < start) {
            hi.pop_front();
        }
        while lo.front().is_some_and(|&i| i < start) {
            lo.pop_front();
        }
        best = best.max(values[hi[0]] - values[lo[0]]);
    }
    best
}

/// `max_i |a_i - b_i|` over identical grids.
pub fn sup_distance(a: &SampledSignal, b: &SampledSignal) -> Result<f64> {
    if a.len() != b.len() || a.horizon() != b.horizon() {
        return Err(Error::Shape(format!(
            "grid mismatch: {} points on [0, {}] vs {} points on [0, {}]",
            a.len(),
            a.horizon(),
            b.len(),
            b.horizon()
        )));
    }
    Ok(a.values()
        .iter()
        .zip(b.values())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs())))
}

/// A modulus of continuity `delta -> w(delta)`.
pub trait Modulus {
    fn eval(&self, delta: f64) -> f64;
}

impl<F: Fn(f64) -> f64> Modulus for F {
    fn eval(&self, delta: f64) -> f64 {
        self(delta)
    }
}

/// `w(delta) = slope * delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearModulus {
    pub slope: f64,
}

impl LinearModulus {
    pub fn new(slope: f64) -> Self {
        Self { slope }
    }
}

impl Modulus for LinearModulus {
    fn eval(&self, delta: f64) -> f64 {
        self.slope * delta.max(0.0)
    }
}

/// Upper step envelope of grid moduli over a family of signals, tabulated
/// at multiples of the finest grid step. Queries round up to the next
/// tabulated delta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalModulus {
    step: f64,
    values: Vec<f64>,
}

impl EmpiricalModulus {
    pub fn from_signals<'a>(signals: impl IntoIterator<Item = &'a SampledSignal>) -> Result<Self> {
        let signals: Vec<&SampledSignal> = signals.into_iter().collect();
        let first = signals
            .first()
            .ok_or_else(|| Error::Config("an empirical modulus needs at least one signal".into()))?;
        let step = first.step();
        let degree = first.degree();
        let mut values = vec![0.0; degree + 1];
        for s in &signals {
            if s.degree() != degree || s.horizon() != first.horizon() {
                return Err(Error::Shape("empirical modulus signals must share a grid".into()));
            }
            for (gap, v) in values.iter_mut().enumerate().skip(1) {
                *v = f64::max(*v, window_range_max(s.values(), gap));
            }
        }
        Ok(Self { step, values })
    }
}

impl Modulus for EmpiricalModulus {
    fn eval(&self, delta: f64) -> f64 {
        if delta <= 0.0 {
            return 0.0;
        }
        let gap = ((delta / self.step) * (1.0 - 1e-12)).ceil() as usize;
        self.values[gap.min(self.values.len() - 1)]
    }
}

/// Piecewise monotone cubic Hermite interpolant (Fritsch-Carlson slopes)
/// through the samples of a signal.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    signal: SampledSignal,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(signal: &SampledSignal) -> Self {
        let y = signal.values();
        let h = signal.step();
        let n = y.len();
        let secants: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]) / h).collect();
        let mut slopes = vec![0.0; n];
        if n == 2 {
            slopes = vec![secants[0]; 2];
        } else {
            for i in 1..n - 1 {
                let (a, b) = (secants[i - 1], secants[i]);
                slopes[i] = if a * b <= 0.0 { 0.0 } else { 2.0 * a * b / (a + b) };
            }
            slopes[0] = end_slope(secants[0], secants[1]);
            slopes[n - 1] = end_slope(secants[n - 2], secants[n - 3]);
        }
        Self {
            signal: signal.clone(),
            slopes,
        }
    }

    /// Value at `t`, clamped to `[0, T]`.
    pub fn eval(&self, t: f64) -> f64 {
        let h = self.signal.step();
        let y = self.signal.values();
        let t = t.clamp(0.0, self.signal.horizon());
        let i = ((t / h).floor() as usize).min(y.len() - 2);
        let s = (t - i as f64 * h) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * y[i] + h10 * h * self.slopes[i] + h01 * y[i + 1] + h11 * h * self.slopes[i + 1]
    }
}

/// Three-point end slope, limited to preserve monotonicity.
fn end_slope(d0: f64, d1: f64) -> f64 {
    let m = (3.0 * d0 - d1) / 2.0;
    if m * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn brute_modulus(s: &SampledSignal, delta: f64) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..s.len() {
            for j in i..s.len() {
                if s.time(j) - s.time(i) <= delta + 1e-12 {
                    best = best.max((s.values()[i] - s.values()[j]).abs());
                }
            }
        }
        best
    }

    #[test]
    fn eval_input_examples() {
        let f = InputSpec::fourier(vec![1.0], vec![0.0], vec![PI / 2.0]).unwrap();
        assert_eq!(f.eval(0.3, 1.0).unwrap(), 1.0);
        let p = InputSpec::polynomial(vec![2.0, 3.0]);
        assert_eq!(p.eval(0.5, 1.0).unwrap(), 3.5);
        let f = InputSpec::fourier(vec![0.5, 0.5], vec![1.0, 2.0], vec![0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(f.eval(1.0, 1.0).unwrap(), 0.875_384_205_816_789_1, epsilon = 1e-12);
    }

    #[test]
    fn eval_rejects_out_of_horizon() {
        let p = InputSpec::polynomial(vec![1.0]);
        assert!(matches!(p.eval(1.5, 1.0), Err(Error::Domain(_))));
        assert!(matches!(p.eval(-0.1, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn fourier_length_mismatch_is_shape_error() {
        assert!(matches!(
            InputSpec::fourier(vec![1.0, 2.0], vec![1.0], vec![0.0, 0.0]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn input_jet_examples() {
        let p = InputSpec::polynomial(vec![1.0, 2.0, 3.0]);
        assert_eq!(p.jet(2).derivs(), &[1.0, 2.0, 6.0]);
        assert_eq!(p.jet(4).derivs(), &[1.0, 2.0, 6.0, 0.0, 0.0]);
        let f = InputSpec::fourier(vec![1.0], vec![2.0], vec![0.0]).unwrap();
        assert_eq!(f.jet(2).derivs(), &[0.0, 2.0, -0.0]);
        let f = InputSpec::fourier(vec![1.0, 1.0], vec![1.0, 3.0], vec![PI / 2.0, 0.0]).unwrap();
        let j = f.jet(3);
        for (a, b) in j.derivs().iter().zip([1.0, 3.0, -1.0, -27.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn input_jet_matches_central_differences() {
        // Five-point-per-order central stencils, step 1e-2.
        let spec = InputSpec::fourier(vec![0.7, -0.4], vec![1.3, 2.1], vec![0.4, 1.9]).unwrap();
        let h = 1e-2;
        let u = |t: f64| spec.value_at(t);
        let fd = [
            u(0.0),
            (u(-2.0 * h) - 8.0 * u(-h) + 8.0 * u(h) - u(2.0 * h)) / (12.0 * h),
            (-u(-2.0 * h) + 16.0 * u(-h) - 30.0 * u(0.0) + 16.0 * u(h) - u(2.0 * h)) / (12.0 * h * h),
            (-u(-2.0 * h) + 2.0 * u(-h) - 2.0 * u(h) + u(2.0 * h)) / (2.0 * h.powi(3)),
            (u(-2.0 * h) - 4.0 * u(-h) + 6.0 * u(0.0) - 4.0 * u(h) + u(2.0 * h)) / h.powi(4),
        ];
        let jet = spec.jet(4);
        for (l, (exact, approx)) in jet.derivs().iter().zip(fd).enumerate() {
            let tol = 1e-3 * exact.abs().max(1e-2);
            assert!((exact - approx).abs() <= tol, "order {l}: {exact} vs {approx}");
        }
    }

    #[test]
    fn sample_on_grid_examples() {
        let c = sample_on_grid(&InputSpec::polynomial(vec![1.0]), 4, 1.0).unwrap();
        assert_eq!(c.values(), &[1.0; 5]);
        let l = sample_on_grid(&InputSpec::polynomial(vec![0.0, 1.0]), 2, 1.0).unwrap();
        assert_eq!(l.values(), &[0.0, 0.5, 1.0]);
        let s = sample_on_grid(&InputSpec::fourier(vec![1.0], vec![PI], vec![0.0]).unwrap(), 2, 1.0).unwrap();
        for (a, b) in s.values().iter().zip([0.0, 1.0, 0.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn sample_then_eval_round_trips() {
        let spec = InputSpec::fourier(vec![0.3, 0.2], vec![1.0, 5.0], vec![0.1, 0.2]).unwrap();
        let s = sample_on_grid(&spec, 37, 2.5).unwrap();
        for (i, v) in s.values().iter().enumerate() {
            assert_eq!(*v, spec.eval(s.time(i), 2.5).unwrap());
        }
    }

    #[test]
    fn ensemble_is_deterministic() {
        let cfg = EnsembleConfig::fourier(3, 1.0, 4.0, 11);
        assert_eq!(
            sample_ensemble(&cfg, 3, 1.0).unwrap(),
            sample_ensemble(&cfg, 3, 1.0).unwrap()
        );
        let other = EnsembleConfig {
            rng_seed: 12,
            ..cfg.clone()
        };
        assert_ne!(
            sample_ensemble(&cfg, 3, 1.0).unwrap(),
            sample_ensemble(&other, 3, 1.0).unwrap()
        );
    }

    #[test]
    fn ensemble_respects_constraints() {
        let cfg = EnsembleConfig::fourier(2, 1.0, 3.0, 5);
        for spec in sample_ensemble(&cfg, 500, 1.0).unwrap() {
            assert!(spec.radius(1.0) <= 1.0 + 1e-12);
            assert!(spec.lipschitz(1.0) <= 3.0 + 1e-12);
        }
    }

    #[test]
    fn polynomial_ensemble_sup_norm_within_radius() {
        let cfg = EnsembleConfig::polynomial(3, 2.0, 5.0, 21);
        for spec in sample_ensemble(&cfg, 1000, 1.0).unwrap() {
            let s = sample_on_grid(&spec, 400, 1.0).unwrap();
            assert!(s.sup_norm() <= 2.0 + 1e-12);
            assert!(spec.lipschitz(1.0) <= 5.0 + 1e-12);
        }
    }

    #[test]
    fn vary_terms_stays_in_range() {
        let cfg = EnsembleConfig {
            vary_terms: true,
            ..EnsembleConfig::fourier(4, 1.0, 3.0, 2)
        };
        for spec in sample_ensemble(&cfg, 200, 1.0).unwrap() {
            let InputSpec::Fourier { coefficients, .. } = spec else {
                unreachable!()
            };
            assert!((1..=4).contains(&coefficients.len()));
        }
    }

    #[test]
    fn infeasible_ensembles_are_rejected() {
        let zero_r = EnsembleConfig::fourier(2, 0.0, 1.0, 0);
        assert!(matches!(sample_ensemble(&zero_r, 1, 1.0), Err(Error::Config(_))));
        let nan_l = EnsembleConfig::fourier(2, 1.0, f64::NAN, 0);
        assert!(matches!(sample_ensemble(&nan_l, 1, 1.0), Err(Error::Config(_))));
        let ok = EnsembleConfig::fourier(2, 1.0, 1.0, 0);
        assert!(matches!(sample_ensemble(&ok, 0, 1.0), Err(Error::Config(_))));
    }

    #[test]
    fn modulus_examples() {
        let c = SampledSignal::new(vec![3.0; 11], 1.0).unwrap();
        assert_eq!(estimate_modulus(&c, 0.4), 0.0);

        let lin = SampledSignal::from_fn(10, 2.0, |t| 3.0 * t).unwrap();
        // Largest grid gap below 0.5 is 0.4.
        assert_abs_diff_eq!(estimate_modulus(&lin, 0.5), 3.0 * 0.4, epsilon = 1e-12);

        let sine = SampledSignal::from_fn(100, 1.0, |t| (2.0 * PI * t).sin()).unwrap();
        let m = estimate_modulus(&sine, 0.25);
        assert_abs_diff_eq!(m, brute_modulus(&sine, 0.25), epsilon = 1e-15);
        // Attained across a zero crossing: 2 sin(pi / 4).
        assert_abs_diff_eq!(m, 2f64.sqrt(), epsilon = 1e-3);
    }

    #[test]
    fn modulus_zero_and_clamp() {
        let s = SampledSignal::from_fn(20, 1.0, |t| t * t).unwrap();
        assert_eq!(estimate_modulus(&s, 0.0), 0.0);
        assert_eq!(estimate_modulus(&s, 5.0), estimate_modulus(&s, 1.0));
        assert_abs_diff_eq!(estimate_modulus(&s, 1.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn sup_distance_examples() {
        let a = SampledSignal::new(vec![0.0, 1.0, 2.0], 1.0).unwrap();
        let z = SampledSignal::new(vec![0.0; 3], 1.0).unwrap();
        assert_eq!(sup_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(sup_distance(&a, &z).unwrap(), 2.0);
        let short = SampledSignal::new(vec![0.0; 2], 1.0).unwrap();
        assert!(matches!(sup_distance(&a, &short), Err(Error::Shape(_))));
    }

    #[test]
    fn signal_invariants_enforced() {
        assert!(matches!(SampledSignal::new(vec![1.0], 1.0), Err(Error::Shape(_))));
        assert!(matches!(SampledSignal::new(vec![1.0, 2.0], 0.0), Err(Error::Domain(_))));
        assert!(matches!(
            SampledSignal::new(vec![1.0, f64::NAN], 1.0),
            Err(Error::Domain(_))
        ));
        assert!(serde_json::from_str::<SampledSignal>(r#"{"values":[1.0],"horizon":1.0}"#).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let s = SampledSignal::from_fn(8, 2.0, |t| (t * 1.7).sin()).unwrap();
        let text = s.to_csv().unwrap();
        assert!(text.starts_with("t,value\n"));
        assert_eq!(SampledSignal::from_csv(&text).unwrap(), s);
        assert!(SampledSignal::from_csv("time,v\n0,1\n1,2\n").is_err());
        assert!(matches!(
            SampledSignal::from_csv("t,value\n0,1\n0.3,2\n1,3\n"),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn input_spec_json_layout() {
        let spec = InputSpec::fourier(vec![1.0], vec![2.0], vec![0.5]).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(
            json,
            r#"{"kind":"fourier","coefficients":[1.0],"frequencies":[2.0],"phases":[0.5]}"#
        );
        assert_eq!(serde_json::from_str::<InputSpec>(&json).unwrap(), spec);
    }

    #[test]
    fn empirical_modulus_envelopes_members() {
        let a = SampledSignal::from_fn(50, 1.0, |t| t).unwrap();
        let b = SampledSignal::from_fn(50, 1.0, |t| (6.0 * t).sin()).unwrap();
        let env = EmpiricalModulus::from_signals([&a, &b]).unwrap();
        for delta in [0.0, 0.01, 0.05, 0.123, 0.5, 1.0] {
            let e = env.eval(delta);
            assert!(e >= estimate_modulus(&a, delta) - 1e-15);
            assert!(e >= estimate_modulus(&b, delta) - 1e-15);
        }
    }

    #[test]
    fn monotone_cubic_interpolates_and_preserves_monotonicity() {
        let s = SampledSignal::new(vec![0.0, 0.1, 0.9, 1.0, 1.0], 1.0).unwrap();
        let p = MonotoneCubic::new(&s);
        for i in 0..s.len() {
            assert_abs_diff_eq!(p.eval(s.time(i)), s.values()[i], epsilon = 1e-14);
        }
        let mut prev = p.eval(0.0);
        for j in 1..=400 {
            let v = p.eval(j as f64 / 400.0);
            assert!(v >= prev - 1e-14);
            prev = v;
        }
        // Smooth data converges at fourth order on a fine grid.
        let fine = SampledSignal::from_fn(200, 1.0, |t| (3.0 * t).sin()).unwrap();
        let p = MonotoneCubic::new(&fine);
        assert_abs_diff_eq!(p.eval(0.501_3), (3.0 * 0.501_3f64).sin(), epsilon = 1e-6);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn modulus_monotone_and_matches_brute(
                vals in proptest::collection::vec(-5.0f64..5.0, 2..40),
                d1 in 0.0f64..1.2,
                d2 in 0.0f64..1.2,
            ) {
                let s = SampledSignal::new(vals, 1.0).unwrap();
                let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
                prop_assert!(estimate_modulus(&s, lo) <= estimate_modulus(&s, hi));
                prop_assert_eq!(estimate_modulus(&s, hi.min(1.0)), brute_modulus(&s, hi.min(1.0)));
            }

            #[test]
            fn fourier_ensemble_meets_assumption(seed in 0u64..10_000) {
                let cfg = EnsembleConfig::fourier(3, 1.5, 4.0, seed);
                let spec = &sample_ensemble(&cfg, 1, 1.0).unwrap()[0];
                let s = sample_on_grid(spec, 256, 1.0).unwrap();
                prop_assert!(s.sup_norm() <= 1.5 + 1e-12);
                for delta in [0.01, 0.1, 0.3] {
                    prop_assert!(estimate_modulus(&s, delta) <= 4.0 * delta + 1e-12);
                }
            }
        }
    }
}
