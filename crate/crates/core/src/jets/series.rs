use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Taylor coefficients `c_0, ..., c_K` of a function at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSeries {
    coeffs: Vec<f64>,
}

impl TruncatedSeries {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Shape("a series needs at least one coefficient".into()));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("series coefficient {i} is not finite")));
        }
        Ok(Self { coeffs })
    }

    pub fn constant(value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        Self { coeffs }
    }

    /// The series of `t -> x0 + t`.
    pub fn variable(x0: f64, order: usize) -> Self {
        let mut s = Self::constant(x0, order);
        if order >= 1 {
            s.coeffs[1] = 1.0;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn check_order(&self, other: &Self) -> Result<()> {
        if self.order() == other.order() {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "series orders differ: {} vs {}",
                self.order(),
                other.order()
            )))
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        Ok(Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// Cauchy product truncated at the common order.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        let k = self.order();
        let coeffs = (0..=k)
            .map(|j| (0..=j).map(|i| self.coeffs[i] * other.coeffs[j - i]).sum())
            .collect();
        Ok(Self { coeffs })
    }

    /// Formal derivative, padded with a trailing zero to keep the order.
    pub fn derivative(&self) -> Self {
        let k = self.order();
        let mut coeffs: Vec<f64> = (1..=k).map(|j| j as f64 * self.coeffs[j]).collect();
        coeffs.push(0.0);
        Self { coeffs }
    }

    /// `tanh` composed with this series.
    pub fn tanh(&self) -> Self {
        let mut t = TanhSeries::default();
        Self {
            coeffs: self.coeffs.iter().map(|&a| t.push(a)).collect(),
        }
    }
}

impl Add for &TruncatedSeries {
    type Output = Result<TruncatedSeries>;
    fn add(self, rhs: Self) -> Self::Output {
        TruncatedSeries::add(self, rhs)
    }
}

impl Mul for &TruncatedSeries {
    type Output = Result<TruncatedSeries>;
    fn mul(self, rhs: Self) -> Self::Output {
        TruncatedSeries::mul(self, rhs)
    }
}

/// Online Taylor coefficients of `s = tanh(a)`: feed `a_j`, receive `s_j`.
///
/// Uses `s' = (1 - s^2) a'`, so `s_j = sum_{i<j} w_i (j - i) a_{j-i} / j`
/// where `w = 1 - s^2` is itself updated from `s_0..s_j`.
#[derive(Debug, Default, Clone)]
pub(crate) struct TanhSeries {
    arg: Vec<f64>,
    out: Vec<f64>,
    weight: Vec<f64>,
}

impl TanhSeries {
    pub(crate) fn push(&mut self, a: f64) -> f64 {
        self.arg.push(a);
        let j = self.out.len();
        let s = if j == 0 {
            a.tanh()
        } else {
            (0..j)
                .map(|i| self.weight[i] * (j - i) as f64 * self.arg[j - i])
                .sum::<f64>()
                / j as f64
        };
        self.out.push(s);
        let square: f64 = (0..=j).map(|p| self.out[p] * self.out[j - p]).sum();
        self.weight.push(if j == 0 { 1.0 - square } else { -square });
        s
    }
}
