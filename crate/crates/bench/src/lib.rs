//! Fixtures shared by the benchmarks.

use rnnjet_core::{
    build_dataset, project_feasible, sample_ensemble, stream_rng, EnsembleConfig, InputSpec, JetDataset, RnnParams,
    SimConfig, StateSpaceSystem,
};

/// A feasible net with `n` neurons and norms near the bound `m`.
pub fn net(n: usize, m: f64) -> RnnParams {
    use rand::Rng;
    let mut rng = stream_rng(17, n as u64);
    let half = m / (n as f64).sqrt();
    let theta: Vec<f64> = (0..n * n + 3 * n).map(|_| rng.random_range(-half..=half)).collect();
    project_feasible(&RnnParams::from_vector(n, &theta).expect("length n^2 + 3n"), m)
}

pub fn inputs(count: usize) -> Vec<InputSpec> {
    sample_ensemble(&EnsembleConfig::fourier(3, 1.0, 4.0, 5), count, 1.0).expect("valid ensemble")
}

/// Jet pairs from the scalar teacher used throughout the examples.
pub fn dataset(samples: usize, k: usize) -> JetDataset {
    let teacher = StateSpaceSystem::Rnn(RnnParams::scalar(0.3, 0.8, 0.5, 0.1));
    build_dataset(&inputs(samples), &teacher, k, 1.0, &SimConfig::default()).expect("stable teacher")
}
