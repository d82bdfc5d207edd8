//! Qubit state tomography from simulated photon-counting measurements.
//!
//! The pipeline: pick a measurement frame (the SIC-POVM tetrahedron or the
//! six MUB vectors, or load one from file), simulate Poisson-noised photon
//! counts for pure input states — optionally mixed with dark counts —
//! reconstruct the state by least squares over a Cholesky-factorized
//! density matrix, and score the result by fidelity and purity. The
//! [`experiments`] module runs whole-sample sweeps; the `qst` binary puts
//! them behind a CLI.
//!
//! Everything is deterministic: count streams are keyed per (seed, frame,
//! element), so identical inputs give bit-identical outputs on any
//! platform and any number of worker threads.

pub mod config;
pub mod estimator;
pub mod experiments;
pub mod frames;
mod linalg;
pub mod optim;
pub mod sim;
pub mod state;

pub use estimator::{
    estimate, expected_counts, ls_objective, noiseless_record, EstimateError, EstimateResult,
    EstimatorConfig,
};
pub use frames::{
    check_injectivity, intensity_map, load_frame, save_frame, Frame, FrameError,
    InjectivityReport, Verdict,
};
pub use sim::{
    derive_state_seed, poisson_sample, simulate_counts, simulate_counts_noisy, CountRecord,
    NoiseConfig, SimError,
};
pub use state::{
    depolarize, fidelity, fidelity_general, projector, CholeskyParams, DensityMatrix, Ket,
    StateError,
};
