//! Output jets against finite differences of simulated trajectories.

use rand::Rng;
use rnnjet_core::rnn::rk4_integrate;
use rnnjet_core::{output_jet, sample_ensemble, stream_rng, EnsembleConfig, InputSpec, RnnParams};

/// Fornberg weights for derivatives `0..=max_order` at 0 on the given nodes.
fn fornberg(nodes: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0];
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i];
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Output at `t` of the net driven by the analytic input, integrating from 0
/// in either direction with a fine fixed step.
fn output_at(p: &RnnParams, u: &InputSpec, t: f64) -> f64 {
    let mut x = p.xi().to_vec();
    if t != 0.0 {
        let rhs = |s: f64, x: &[f64], dx: &mut [f64]| dx.copy_from_slice(&p.vector_field(x, u.value_at(s)));
        let steps = (t.abs() / 1e-3).ceil() as usize;
        rk4_integrate(&rhs, &mut x, 0.0, t, steps).unwrap();
    }
    p.output(&x)
}

fn fd_jet(p: &RnnParams, u: &InputSpec, order: usize) -> Vec<f64> {
    let h = 0.05;
    let nodes: Vec<f64> = (-5..=5).map(|i| i as f64 * h).collect();
    let w = fornberg(&nodes, order);
    let ys: Vec<f64> = nodes.iter().map(|&t| output_at(p, u, t)).collect();
    w.iter()
        .map(|row| row.iter().zip(&ys).map(|(a, y)| a * y).sum())
        .collect()
}

#[test]
fn fornberg_weights_differentiate_monomials() {
    let nodes: Vec<f64> = (-3..=3).map(|i| i as f64 * 0.5).collect();
    let w = fornberg(&nodes, 4);
    for (ell, row) in w.iter().enumerate() {
        for power in 0..=6 {
            let got: f64 = row.iter().zip(&nodes).map(|(a, x)| a * x.powi(power as i32)).sum();
            let want = if power == ell {
                (1..=ell).product::<usize>() as f64
            } else {
                0.0
            };
            assert!((got - want).abs() < 1e-9, "d^{ell} x^{power}: {got}");
        }
    }
}

#[test]
fn output_jets_match_finite_differences() {
    let mut rng = stream_rng(2024, 0);
    for trial in 0..12 {
        let n = 1 + trial % 3;
        let half = 1.0 / (n as f64).sqrt();
        let theta: Vec<f64> = (0..n * n + 3 * n).map(|_| rng.random_range(-half..half)).collect();
        let p = rnnjet_core::project_feasible(&RnnParams::from_vector(n, &theta).unwrap(), 1.0);
        let ens = if trial % 2 == 0 {
            EnsembleConfig::fourier(3, 1.0, 3.0, trial as u64)
        } else {
            EnsembleConfig::polynomial(3, 1.0, 3.0, trial as u64)
        };
        let u = sample_ensemble(&ens, 1, 1.0).unwrap().remove(0);
        let jet = output_jet(&p, &u.jet(3), 4).unwrap();
        assert!((jet.derivs()[0] - p.output(p.xi())).abs() <= 1e-12);
        let fd = fd_jet(&p, &u, 4);
        for (ell, (a, b)) in jet.derivs().iter().zip(&fd).enumerate() {
            let scale = a.abs().max(1e-3);
            assert!(
                (a - b).abs() <= 1e-3 * scale,
                "trial {trial} order {ell}: jet {a} fd {b}"
            );
        }
    }
}
