//! Learning continuous-time tanh recurrent nets from input/output samples
//! through Bernstein-lifted output jets.
//!
//! Signals on `[0, T]` are sampled on equispaced grids and lifted to jets
//! (derivative vectors at `t = 0`) of their Bernstein polynomials. A net's
//! output jet is computed exactly from an input jet by truncated power
//! series, and training minimizes the jet mismatch over a norm ball of nets.

pub mod bernstein;
pub mod bounds;
pub mod erm;
pub mod error;
pub mod jets;
pub mod rnn;
pub mod seed;
pub mod signals;

pub use bernstein::{bernstein_eval, bernstein_signal, lemma1_error_bound, s_k, s_star, s_star_signal, JetVector};
pub use bounds::{
    lemma2_bound, monte_carlo_risk, rademacher_bound, theorem1_rhs, theorem2_rhs, vc_dimension_bound, BoundReport,
    GammaSource, ModulusSource, MonteCarloRisk, Theorem1Terms, Theorem2Inputs, Theorem2Terms,
};
pub use erm::{
    build_dataset, empirical_risk, initial_params, project_feasible, sample_loss, sample_size_check, train, train_from,
    JetDataset, JetPair, SampleSizeCheck, StepSchedule, TrainConfig, TrainOutcome,
};
pub use error::{Error, Result};
pub use jets::{output_jet, predicted_bernstein_jet, RnnParams, TruncatedSeries};
pub use rnn::{
    bibo_gain_estimate, rnn_io_lipschitz_bound, rnn_output_modulus_bound, rnn_output_sup_bound, simulate,
    simulate_trajectory, Excitation, Method, SimConfig, StateSpaceSystem, SystemKind, TabulatedResponse, Trajectory,
};
pub use seed::{derive_seed, stream_rng};
pub use signals::{
    estimate_modulus, sample_ensemble, sample_on_grid, sup_distance, EmpiricalModulus, EnsembleConfig, InputKind,
    InputSpec, LinearModulus, Modulus, MonotoneCubic, SampledSignal,
};
