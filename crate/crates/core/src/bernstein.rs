//! Bernstein polynomials on `[0, T]` and the lift/restriction pair between
//! sampled signals and derivative jets at `t = 0`.
//!
//! `s_k` takes the `k` samples `u(iT/(k-1))` to the derivatives at 0 of the
//! degree `k - 1` Bernstein polynomial. `s_star` rebuilds the polynomial
//! `sum_l a_l t^l / l!` from a jet. The composition `s_star . s_k` is the
//! Bernstein polynomial itself; `s_k . s_star` is the identity only on
//! affine jets, since Bernstein operators reproduce affine functions but
//! not higher-degree polynomials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::{Modulus, SampledSignal};

/// Jet orders above this are accepted but amplify sample noise by roughly
/// `2^l / h^l`; `s_k` logs a warning past it.
pub const CONDITIONING_LIMIT: usize = 20;

/// Derivative values `f(0), f'(0), ..., f^(m)(0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawJet", into = "RawJet")]
pub struct JetVector {
    derivs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJet {
    order: usize,
    derivs: Vec<f64>,
}

impl TryFrom<RawJet> for JetVector {
    type Error = Error;
    fn try_from(raw: RawJet) -> Result<Self> {
        if raw.derivs.len() != raw.order + 1 {
            return Err(Error::Shape(format!(
                "jet of order {} needs {} entries, got {}",
                raw.order,
                raw.order + 1,
                raw.derivs.len()
            )));
        }
        JetVector::new(raw.derivs)
    }
}

impl From<JetVector> for RawJet {
    fn from(j: JetVector) -> Self {
        RawJet {
            order: j.order(),
            derivs: j.derivs,
        }
    }
}

impl JetVector {
    pub fn new(derivs: Vec<f64>) -> Result<Self> {
        if derivs.is_empty() {
            return Err(Error::Shape("a jet needs at least one entry".into()));
        }
        if let Some(i) = derivs.iter().position(|d| !d.is_finite()) {
            return Err(Error::Domain(format!("jet entry {i} is not finite")));
        }
        Ok(Self { derivs })
    }

    pub fn zeros(order: usize) -> Self {
        Self {
            derivs: vec![0.0; order + 1],
        }
    }

    pub fn order(&self) -> usize {
        self.derivs.len() - 1
    }

    pub fn derivs(&self) -> &[f64] {
        &self.derivs
    }

    pub fn into_derivs(self) -> Vec<f64> {
        self.derivs
    }

    /// Taylor coefficients `f^(l)(0) / l!`.
    pub fn taylor_coefficients(&self) -> Vec<f64> {
        let mut fact = 1.0;
        self.derivs
            .iter()
            .enumerate()
            .map(|(l, d)| {
                if l > 0 {
                    fact *= l as f64;
                }
                d / fact
            })
            .collect()
    }

    /// Inverse of [`JetVector::taylor_coefficients`].
    pub fn from_taylor_coefficients(coeffs: &[f64]) -> Result<Self> {
        let mut fact = 1.0;
        let derivs = coeffs
            .iter()
            .enumerate()
            .map(|(l, c)| {
                if l > 0 {
                    fact *= l as f64;
                }
                c * fact
            })
            .collect();
        Self::new(derivs)
    }

    pub(crate) fn sub(&self, other: &Self) -> Result<Self> {
        if self.order() != other.order() {
            return Err(Error::Shape(format!(
                "jet orders differ: {} vs {}",
                self.order(),
                other.order()
            )));
        }
        Ok(Self {
            derivs: self.derivs.iter().zip(&other.derivs).map(|(a, b)| a - b).collect(),
        })
    }
}

/// `B_m(u, t)` for the `m + 1` samples of `signal`, by de Casteljau.
pub fn bernstein_eval(signal: &SampledSignal, t: f64) -> Result<f64> {
    let horizon = signal.horizon();
    if !(0.0..=horizon).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0, {horizon}]")));
    }
    Ok(de_casteljau(signal.values(), t / horizon))
}

fn de_casteljau(control: &[f64], x: f64) -> f64 {
    let mut b = control.to_vec();
    let y = 1.0 - x;
    for r in 1..b.len() {
        for i in 0..b.len() - r {
            b[i] = y * b[i] + x * b[i + 1];
        }
    }
    b[0]
}

/// `B_m u` sampled on a `dense_degree + 1` point grid.
pub fn bernstein_signal(signal: &SampledSignal, dense_degree: usize) -> Result<SampledSignal> {
    let horizon = signal.horizon();
    SampledSignal::from_fn(dense_degree, horizon, |t| de_casteljau(signal.values(), t / horizon))
}

/// Derivatives at 0 of the degree `k - 1` Bernstein polynomial of the
/// `k`-node sampling. Entry `l` is `(k-1)!/(k-1-l)! * T^-l * D^l u(0)` with
/// `D` the forward difference on the grid step.
pub fn s_k(signal: &SampledSignal, k: usize) -> Result<JetVector> {
    if k < 2 {
        return Err(Error::Shape(format!("s_k needs k >= 2, got {k}")));
    }
    if signal.len() != k {
        return Err(Error::Shape(format!(
            "s_k with k = {k} needs {k} samples, got {}",
            signal.len()
        )));
    }
    if k - 1 > CONDITIONING_LIMIT {
        log::warn!(
            "jet order {} exceeds {CONDITIONING_LIMIT}; forward differences are ill-conditioned",
            k - 1
        );
    }
    let degree = k - 1;
    let inv_t = 1.0 / signal.horizon();
    let mut diffs = signal.values().to_vec();
    let mut derivs = Vec::with_capacity(k);
    let mut scale = 1.0;
    for l in 0..k {
        if l > 0 {
            for i in 0..diffs.len() - 1 {
                diffs[i] = diffs[i + 1] - diffs[i];
            }
            diffs.pop();
            scale *= (degree - l + 1) as f64 * inv_t;
        }
        derivs.push(scale * diffs[0]);
    }
    JetVector::new(derivs)
}

/// `sum_l a_l t^l / l!`, evaluated by nested multiplication.
pub fn s_star(jet: &JetVector, t: f64) -> f64 {
    let d = jet.derivs();
    let mut acc = d[d.len() - 1];
    for l in (0..d.len() - 1).rev() {
        acc = d[l] + acc * t / (l + 1) as f64;
    }
    acc
}

/// The polynomial of `jet` sampled on a `degree + 1` point grid over `[0, T]`.
pub fn s_star_signal(jet: &JetVector, degree: usize, horizon: f64) -> Result<SampledSignal> {
    SampledSignal::from_fn(degree, horizon, |t| s_star(jet, t))
}

/// Certified `||u - B_k u|| <= 2 w(T / sqrt(k))`.
pub fn lemma1_error_bound(omega: &impl Modulus, k: usize, horizon: f64) -> f64 {
    2.0 * omega.eval(horizon / (k as f64).sqrt())
}
