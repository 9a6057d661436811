//! Truncated power series at `t = 0` and the map from input `(k-1)`-jets to
//! output `k`-jets of a tanh net.

mod params;
mod series;

pub(crate) use params::euclid;
pub use params::{RnnParams, FEASIBILITY_TOLERANCE};
pub use series::TruncatedSeries;

use series::TanhSeries;

use crate::bernstein::{s_k, JetVector};
use crate::error::{Error, Result};
use crate::signals::SampledSignal;

/// Output derivatives `y(0), ..., y^(k)(0)` of the net driven by an input
/// with derivatives `input_jet = (u(0), ..., u^(k-1)(0))`.
///
/// The state series is built one coefficient at a time: `x_0 = xi` and
/// `x_{j+1} = s_j / (j + 1)` where `s = tanh(A x + b u)` as series. Each
/// `s_j` only needs `x_0..x_j` and `u_0..u_j`, so an input `(k-1)`-jet fixes
/// the output `k`-jet exactly.
pub fn output_jet(params: &RnnParams, input_jet: &JetVector, k: usize) -> Result<JetVector> {
    if k == 0 {
        return Err(Error::Shape("output jets need k >= 1".into()));
    }
    if input_jet.order() + 1 != k {
        return Err(Error::Shape(format!(
            "k = {k} needs an input jet of order {}, got order {}",
            k - 1,
            input_jet.order()
        )));
    }
    let n = params.n();
    let u = input_jet.taylor_coefficients();
    let mut x: Vec<Vec<f64>> = params
        .xi()
        .iter()
        .map(|&x0| {
            let mut s = Vec::with_capacity(k + 1);
            s.push(x0);
            s
        })
        .collect();
    let mut tanh: Vec<TanhSeries> = vec![TanhSeries::default(); n];
    for j in 0..k {
        let next: Vec<f64> = (0..n)
            .map(|i| {
                let z: f64 = (0..n).map(|m| params.a_entry(i, m) * x[m][j]).sum::<f64>() + params.b()[i] * u[j];
                tanh[i].push(z) / (j + 1) as f64
            })
            .collect();
        for (xi, v) in x.iter_mut().zip(next) {
            xi.push(v);
        }
    }
    let y: Vec<f64> = (0..=k)
        .map(|l| params.c().iter().zip(&x).map(|(c, xs)| c * xs[l]).sum())
        .collect();
    JetVector::from_taylor_coefficients(&y)
}

/// `output_jet(params, s_k(input), k)`: the jet whose polynomial is the
/// model's predicted Bernstein-lifted output.
pub fn predicted_bernstein_jet(params: &RnnParams, input: &SampledSignal, k: usize) -> Result<JetVector> {
    output_jet(params, &s_k(input, k)?, k)
}
