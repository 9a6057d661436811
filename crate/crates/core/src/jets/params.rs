use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack when testing membership in F(M).
pub const FEASIBILITY_TOLERANCE: f64 = 1e-12;

/// Weights `(A, b, c)` and initial state `xi` of the net
/// `x' = tanh(A x + b u)`, `y = c.x`, `x(0) = xi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct RnnParams {
    n: usize,
    /// Row-major `n x n`.
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    xi: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    #[serde(rename = "A")]
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    xi: Vec<f64>,
    n: usize,
}

impl TryFrom<RawParams> for RnnParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        RnnParams::new(r.n, r.a, r.b, r.c, r.xi)
    }
}

impl From<RnnParams> for RawParams {
    fn from(p: RnnParams) -> Self {
        RawParams {
            a: p.a,
            b: p.b,
            c: p.c,
            xi: p.xi,
            n: p.n,
        }
    }
}

impl RnnParams {
    pub fn new(n: usize, a: Vec<f64>, b: Vec<f64>, c: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Shape("a net needs at least one neuron".into()));
        }
        if a.len() != n * n || b.len() != n || c.len() != n || xi.len() != n {
            return Err(Error::Shape(format!(
                "n = {n} needs A with {} entries and b, c, xi with {n}; got {}, {}, {}, {}",
                n * n,
                a.len(),
                b.len(),
                c.len(),
                xi.len()
            )));
        }
        if a.iter().chain(&b).chain(&c).chain(&xi).any(|v| !v.is_finite()) {
            return Err(Error::Domain("network parameters must be finite".into()));
        }
        Ok(Self { n, a, b, c, xi })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            a: vec![0.0; n * n],
            b: vec![0.0; n],
            c: vec![0.0; n],
            xi: vec![0.0; n],
        }
    }

    /// Single-neuron net with scalar weights.
    pub fn scalar(a: f64, b: f64, c: f64, xi: f64) -> Self {
        Self {
            n: 1,
            a: vec![a],
            b: vec![b],
            c: vec![c],
            xi: vec![xi],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn a_entry(&self, row: usize, col: usize) -> f64 {
        self.a[row * self.n + col]
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn a_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.a)
    }

    pub fn spectral_norm(&self) -> f64 {
        if self.n == 1 {
            return self.a[0].abs();
        }
        self.a_matrix().singular_values().max()
    }

    pub fn b_norm(&self) -> f64 {
        euclid(&self.b)
    }

    pub fn c_norm(&self) -> f64 {
        euclid(&self.c)
    }

    pub fn xi_norm(&self) -> f64 {
        euclid(&self.xi)
    }

    /// `max(||A||, |b|, |c|, |xi|)`.
    pub fn max_norm(&self) -> f64 {
        self.spectral_norm()
            .max(self.b_norm())
            .max(self.c_norm())
            .max(self.xi_norm())
    }

    /// Membership in F(M), up to [`FEASIBILITY_TOLERANCE`].
    pub fn is_feasible(&self, bound: f64) -> bool {
        self.max_norm() <= bound * (1.0 + FEASIBILITY_TOLERANCE)
    }

    /// Number of free coordinates, `n^2 + 3n`.
    pub fn dimension(&self) -> usize {
        self.n * self.n + 3 * self.n
    }

    /// Coordinates in the order `A` (row-major), `b`, `c`, `xi`.
    pub fn to_vector(&self) -> Vec<f64> {
        [&self.a[..], &self.b, &self.c, &self.xi].concat()
    }

    pub fn from_vector(n: usize, theta: &[f64]) -> Result<Self> {
        if theta.len() != n * n + 3 * n {
            return Err(Error::Shape(format!(
                "n = {n} needs {} coordinates, got {}",
                n * n + 3 * n,
                theta.len()
            )));
        }
        let (a, rest) = theta.split_at(n * n);
        let (b, rest) = rest.split_at(n);
        let (c, xi) = rest.split_at(n);
        Self::new(n, a.to_vec(), b.to_vec(), c.to_vec(), xi.to_vec())
    }

    pub fn with_a_matrix(mut self, a: &DMatrix<f64>) -> Self {
        for r in 0..self.n {
            for col in 0..self.n {
                self.a[r * self.n + col] = a[(r, col)];
            }
        }
        self
    }

    pub fn with_b(mut self, b: Vec<f64>) -> Self {
        assert_eq!(b.len(), self.n);
        self.b = b;
        self
    }

    pub fn with_c(mut self, c: Vec<f64>) -> Self {
        assert_eq!(c.len(), self.n);
        self.c = c;
        self
    }

    pub fn with_xi(mut self, xi: Vec<f64>) -> Self {
        assert_eq!(xi.len(), self.n);
        self.xi = xi;
        self
    }

    /// `tanh(A x + b u)` componentwise.
    pub fn vector_field(&self, x: &[f64], u: f64) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let row = &self.a[i * self.n..(i + 1) * self.n];
                (row.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() + self.b[i] * u).tanh()
            })
            .collect()
    }

    pub fn output(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }
}

pub(crate) fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_layout_is_row_major() {
        let p = RnnParams::new(
            2,
            vec![1.0, 2.0, 3.0, 4.0],
            vec![0.1, 0.2],
            vec![0.3, 0.4],
            vec![0.0, 1.0],
        )
        .unwrap();
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(
            text,
            r#"{"A":[1.0,2.0,3.0,4.0],"b":[0.1,0.2],"c":[0.3,0.4],"xi":[0.0,1.0],"n":2}"#
        );
        assert_eq!(p.a_entry(1, 0), 3.0);
        assert_eq!(serde_json::from_str::<RnnParams>(&text).unwrap(), p);
    }

    #[test]
    fn malformed_params_rejected() {
        assert!(matches!(
            RnnParams::new(2, vec![0.0; 3], vec![0.0; 2], vec![0.0; 2], vec![0.0; 2]),
            Err(Error::Shape(_))
        ));
        assert!(serde_json::from_str::<RnnParams>(r#"{"A":[1.0],"b":[1.0],"c":[1.0],"xi":[1.0],"n":2}"#).is_err());
        assert!(
            serde_json::from_str::<RnnParams>(r#"{"A":[1.0],"b":[1.0],"c":[1.0],"xi":[1.0],"n":1,"extra":0}"#).is_err()
        );
    }

    #[test]
    fn norms() {
        let p = RnnParams::new(
            2,
            vec![3.0, 0.0, 0.0, -4.0],
            vec![3.0, 4.0],
            vec![0.0, 1.0],
            vec![0.0, 0.0],
        )
        .unwrap();
        assert!((p.spectral_norm() - 4.0).abs() < 1e-12);
        assert_eq!(p.b_norm(), 5.0);
        assert_eq!(p.max_norm(), 5.0);
        assert!(p.is_feasible(5.0));
        assert!(!p.is_feasible(4.9));
    }

    #[test]
    fn vector_round_trip() {
        let p = RnnParams::new(
            2,
            vec![1.0, 2.0, 3.0, 4.0],
            vec![5.0, 6.0],
            vec![7.0, 8.0],
            vec![9.0, 10.0],
        )
        .unwrap();
        assert_eq!(p.dimension(), 10);
        assert_eq!(RnnParams::from_vector(2, &p.to_vector()).unwrap(), p);
    }
}
