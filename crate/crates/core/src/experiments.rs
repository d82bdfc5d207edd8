//! Whole-sample sweep runners.
//!
//! A sweep reconstructs every state of a deterministic grid of pure input
//! qubits under one noise setting per cell and aggregates fidelity and
//! purity against the true inputs. Per-state count streams derive from
//! (master seed, state index), and aggregation walks states in index
//! order, so results are byte-identical regardless of worker count.

use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::estimator::{estimate, EstimateError, EstimatorConfig};
use crate::frames::{Frame, FrameError};
use crate::sim::{derive_state_seed, simulate_counts, simulate_counts_noisy, NoiseConfig, SimError};
use crate::state::{fidelity, Ket, StateError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("sample grid needs n_theta >= 2 and n_phi >= 2, got {n_theta} x {n_phi}")]
    BadSampleSpec { n_theta: usize, n_phi: usize },
    #[error("epsilon = {0} outside [0, 1]")]
    EpsilonOutOfRange(f64),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

/// Dimensions of the input-state grid; defaults to 20 x 20 = 400 states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SampleSpec {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self { n_theta: 20, n_phi: 20 }
    }
}

impl SampleSpec {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self, ExperimentError> {
        if n_theta < 2 || n_phi < 2 {
            return Err(ExperimentError::BadSampleSpec { n_theta, n_phi });
        }
        Ok(Self { n_theta, n_phi })
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Bloch angles of the sample grid, row-major with theta outermost:
/// `theta_j = pi (j + 1/2) / n_theta`, `phi_k = 2 pi k / n_phi`.
///
/// The half-step offset in theta keeps the grid away from the poles,
/// where phi is degenerate and plain endpoints would duplicate states.
pub fn sample_angles(spec: &SampleSpec) -> Vec<(f64, f64)> {
    let mut angles = Vec::with_capacity(spec.len());
    for j in 0..spec.n_theta {
        let theta = std::f64::consts::PI * (j as f64 + 0.5) / spec.n_theta as f64;
        for k in 0..spec.n_phi {
            let phi = std::f64::consts::TAU * k as f64 / spec.n_phi as f64;
            angles.push((theta, phi));
        }
    }
    angles
}

/// The sample states themselves, in grid order.
pub fn generate_sample(spec: &SampleSpec) -> Vec<Ket> {
    sample_angles(spec)
        .into_iter()
        .map(|(theta, phi)| Ket::from_angles(theta, phi).expect("grid angles are in range"))
        .collect()
}

/// Aggregated figures of merit for one (frame, N, epsilon) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub frame_id: String,
    pub mean_photons: f64,
    pub epsilon: f64,
    pub f_avg: f64,
    pub f_std: f64,
    pub gamma_avg: f64,
    pub gamma_std: f64,
    pub n_states: usize,
    pub n_converged: usize,
    pub master_seed: u64,
}

/// Per-state reconstruction outcome, for the optional detail output.
#[derive(Debug, Clone, PartialEq)]
pub struct StateOutcome {
    pub state_index: usize,
    pub theta: f64,
    pub phi: f64,
    pub fidelity: f64,
    pub purity: f64,
    pub objective: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub summary: RunSummary,
    pub states: Vec<StateOutcome>,
}

/// Simulate and reconstruct every sample state once under one noise
/// setting. Fidelity is always scored against the true pure input, even
/// when dark counts mix the measured state.
pub fn run_cell(
    frame: &Frame,
    mean_photons: f64,
    epsilon: f64,
    spec: &SampleSpec,
    master_seed: u64,
    est_cfg: &EstimatorConfig,
) -> Result<CellResult, ExperimentError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(ExperimentError::EpsilonOutOfRange(epsilon));
    }
    let angles = sample_angles(spec);
    let states: Vec<StateOutcome> = angles
        .par_iter()
        .enumerate()
        .map(|(state_index, &(theta, phi))| {
            let psi = Ket::from_angles(theta, phi)?;
            let config = NoiseConfig {
                mean_photons,
                epsilon,
                seed: derive_state_seed(master_seed, state_index as u64),
            };
            let record = if epsilon == 0.0 {
                simulate_counts(frame, &psi, &config)?
            } else {
                simulate_counts_noisy(frame, &psi, &config)?
            };
            let est = estimate(frame, &record, est_cfg)?;
            Ok(StateOutcome {
                state_index,
                theta,
                phi,
                fidelity: fidelity(&psi, &est.rho)?,
                purity: est.rho.purity(),
                objective: est.objective_value,
                converged: est.converged,
            })
        })
        .collect::<Result<_, ExperimentError>>()?;

    let (f_avg, f_std) = mean_std(states.iter().map(|s| s.fidelity));
    let (gamma_avg, gamma_std) = mean_std(states.iter().map(|s| s.purity));
    let n_converged = states.iter().filter(|s| s.converged).count();
    Ok(CellResult {
        summary: RunSummary {
            frame_id: frame.id().to_string(),
            mean_photons,
            epsilon,
            f_avg,
            f_std,
            gamma_avg,
            gamma_std,
            n_states: states.len(),
            n_converged,
            master_seed,
        },
        states,
    })
}

/// One summary per photon level, Poisson noise only (epsilon = 0).
pub fn run_photon_sweep(
    frame: &Frame,
    photons: &[f64],
    spec: &SampleSpec,
    master_seed: u64,
    est_cfg: &EstimatorConfig,
) -> Result<Vec<RunSummary>, ExperimentError> {
    photons
        .iter()
        .map(|&n| run_cell(frame, n, 0.0, spec, master_seed, est_cfg).map(|c| c.summary))
        .collect()
}

/// One summary per epsilon at a fixed photon level.
pub fn run_epsilon_sweep(
    frame: &Frame,
    mean_photons: f64,
    epsilons: &[f64],
    spec: &SampleSpec,
    master_seed: u64,
    est_cfg: &EstimatorConfig,
) -> Result<Vec<RunSummary>, ExperimentError> {
    epsilons
        .iter()
        .map(|&eps| run_cell(frame, mean_photons, eps, spec, master_seed, est_cfg).map(|c| c.summary))
        .collect()
}

/// Mean and sample standard deviation (ddof = 1), accumulated in order.
fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss = values.map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, (ss / (n - 1) as f64).sqrt())
}

pub const SUMMARY_CSV_HEADER: &str =
    "frame_id,mean_photons,epsilon,f_avg,f_std,gamma_avg,gamma_std,n_states,n_converged,master_seed";

pub fn summary_csv_row(s: &RunSummary) -> String {
    format!(
        "{},{},{},{:.6},{:.6},{:.6},{:.6},{},{},{}",
        s.frame_id,
        s.mean_photons,
        s.epsilon,
        s.f_avg,
        s.f_std,
        s.gamma_avg,
        s.gamma_std,
        s.n_states,
        s.n_converged,
        s.master_seed
    )
}

pub fn summary_csv(rows: &[RunSummary]) -> String {
    let mut out = String::from(SUMMARY_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&summary_csv_row(row));
        out.push('\n');
    }
    out
}

pub fn write_summary_csv(path: impl AsRef<Path>, rows: &[RunSummary]) -> Result<(), ExperimentError> {
    let path = path.as_ref();
    fs::write(path, summary_csv(rows)).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub const DETAIL_CSV_HEADER: &str = "state_index,theta,phi,fidelity,purity,objective,converged";

pub fn detail_csv(states: &[StateOutcome]) -> String {
    let mut out = String::from(DETAIL_CSV_HEADER);
    out.push('\n');
    for s in states {
        out.push_str(&format!(
            "{},{},{},{:.8},{:.8},{:.6e},{}\n",
            s.state_index, s.theta, s.phi, s.fidelity, s.purity, s.objective, s.converged
        ));
    }
    out
}

pub fn write_detail_csv(path: impl AsRef<Path>, states: &[StateOutcome]) -> Result<(), ExperimentError> {
    let path = path.as_ref();
    fs::write(path, detail_csv(states)).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Full echo of one CLI run, written alongside the CSVs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub frames: Vec<String>,
    pub photons: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub n_theta: usize,
    pub n_phi: usize,
    pub seed: u64,
    pub estimator: EstimatorConfig,
    pub threads: usize,
    pub detail: bool,
    pub output_dir: String,
}

impl RunManifest {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), ExperimentError> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, json + "\n").map_err(|source| ExperimentError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_has_distinct_states() {
        let spec = SampleSpec::default();
        let sample = generate_sample(&spec);
        assert_eq!(sample.len(), 400);
        for a in 0..sample.len() {
            for b in (a + 1)..sample.len() {
                let overlap = sample[a].inner(&sample[b]).unwrap().norm();
                assert!(
                    overlap < 1.0 - 1e-12,
                    "states {a} and {b} coincide up to phase"
                );
            }
        }
    }

    #[test]
    fn small_grid_angles() {
        let spec = SampleSpec::new(2, 2).unwrap();
        let angles = sample_angles(&spec);
        let want = [
            (PI / 4.0, 0.0),
            (PI / 4.0, PI),
            (3.0 * PI / 4.0, 0.0),
            (3.0 * PI / 4.0, PI),
        ];
        for ((t, p), (wt, wp)) in angles.iter().zip(want) {
            assert!((t - wt).abs() < 1e-15 && (p - wp).abs() < 1e-15);
        }
        let kets = generate_sample(&spec);
        let a = kets[0].amplitudes();
        assert!((a[0].re - (PI / 8.0).cos()).abs() < 1e-15);
        assert!((a[1].re - (PI / 8.0).sin()).abs() < 1e-15);
    }

    #[test]
    fn sample_spec_validation() {
        assert!(SampleSpec::new(1, 20).is_err());
        assert!(SampleSpec::new(20, 1).is_err());
    }

    fn small_cell(frame: &Frame, eps: f64) -> CellResult {
        let spec = SampleSpec::new(4, 4).unwrap();
        run_cell(frame, 50.0, eps, &spec, 7, &EstimatorConfig::default()).unwrap()
    }

    #[test]
    fn summaries_stay_in_declared_ranges() {
        for frame in [Frame::sic(), Frame::mub()] {
            for eps in [0.0, 0.3] {
                let cell = small_cell(&frame, eps);
                let s = &cell.summary;
                assert!((0.0..=1.0).contains(&s.f_avg), "{s:?}");
                assert!((0.5 - 1e-12..=1.0 + 1e-12).contains(&s.gamma_avg), "{s:?}");
                assert_eq!(s.n_states, 16);
                assert_eq!(cell.states.len(), 16);
            }
        }
    }

    #[test]
    fn epsilon_zero_sweeps_agree() {
        let spec = SampleSpec::new(3, 4).unwrap();
        let cfg = EstimatorConfig::default();
        let photon = run_photon_sweep(&Frame::mub(), &[25.0], &spec, 11, &cfg).unwrap();
        let eps = run_epsilon_sweep(&Frame::mub(), 25.0, &[0.0], &spec, 11, &cfg).unwrap();
        assert_eq!(photon, eps);
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| small_cell(&Frame::sic(), 0.2))
        };
        let one = run(1);
        let four = run(4);
        assert_eq!(one.summary, four.summary);
        assert_eq!(one.states, four.states);
        assert_eq!(
            summary_csv(std::slice::from_ref(&one.summary)),
            summary_csv(std::slice::from_ref(&four.summary))
        );
    }

    #[test]
    fn csv_schema_is_stable() {
        let s = RunSummary {
            frame_id: "sic".into(),
            mean_photons: 10.0,
            epsilon: 0.05,
            f_avg: 0.912345678,
            f_std: 0.01,
            gamma_avg: 0.95,
            gamma_std: 0.025,
            n_states: 400,
            n_converged: 399,
            master_seed: 42,
        };
        assert_eq!(
            summary_csv(&[s]),
            "frame_id,mean_photons,epsilon,f_avg,f_std,gamma_avg,gamma_std,n_states,n_converged,master_seed\n\
             sic,10,0.05,0.912346,0.010000,0.950000,0.025000,400,399,42\n"
        );
    }
}
