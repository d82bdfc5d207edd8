//! Least-squares state reconstruction.
//!
//! The estimator fits the four Cholesky-style parameters so that the
//! expected counts `N <xi_k| rho |xi_k>` match a measured [`CountRecord`]
//! in the least-squares sense. The objective is smooth, cheap and
//! four-dimensional, so a multi-start Nelder-Mead search is all it takes;
//! positivity and unit trace hold by construction, leaving the search
//! unconstrained.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::{check_injectivity, Frame, Verdict};
use crate::optim::{nelder_mead, NmOptions, NmResult};
use crate::sim::{keyed_rng, positive_finite, uniform01, CountRecord, NoiseConfig};
use crate::state::{CholeskyParams, DensityMatrix, StateError};

/// Parameter vectors with squared norm below this sit in the degenerate
/// guard zone and score [`DEGENERATE_PENALTY`] instead of being evaluated.
pub const DEGENERATE_GUARD_NORM_SQR: f64 = 1e-12;
/// Flat penalty returned inside the guard zone; keeps the objective total
/// and finite without ever dividing by a vanishing trace.
pub const DEGENERATE_PENALTY: f64 = 1e30;

/// Objective values within this of each other count as a tie between
/// starts; the earlier start wins.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("record has {record} counts but the frame has {frame} elements")]
    SizeMismatch { record: usize, frame: usize },
    #[error("frame dimension {frame} does not match state dimension {state}")]
    DimensionMismatch { frame: usize, state: usize },
    #[error("reconstruction operates on qubit frames, got d = {0}")]
    NotAQubit(usize),
    #[error("mean photon number must be positive and finite, got {0}")]
    BadMeanPhotons(f64),
    #[error("noiseless records need an integral photon number, got {0}")]
    FractionalPhotons(f64),
    #[error("estimator configuration invalid: {0}")]
    BadConfig(String),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Search settings for [`estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Independent Nelder-Mead starts; the first is always the maximally
    /// mixed point t = (1, 1, 0, 0)/sqrt(2).
    pub n_starts: usize,
    /// Iteration cap per start.
    pub max_iterations: usize,
    /// Absolute objective-spread stopping tolerance.
    pub objective_tolerance: f64,
    /// Simplex-diameter stopping tolerance.
    pub param_tolerance: f64,
    /// Seed of the stream that draws the remaining starts from [-1, 1]^4.
    pub start_seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            n_starts: 5,
            max_iterations: 2000,
            objective_tolerance: 1e-9,
            param_tolerance: 1e-8,
            start_seed: 1,
        }
    }
}

impl EstimatorConfig {
    fn validate(&self) -> Result<(), EstimateError> {
        if self.n_starts == 0 {
            return Err(EstimateError::BadConfig("n_starts must be >= 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(EstimateError::BadConfig("max_iterations must be >= 1".into()));
        }
        if !positive_finite(self.objective_tolerance) || !positive_finite(self.param_tolerance) {
            return Err(EstimateError::BadConfig("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Reconstruction outcome: the winning parameters, the state they define
/// and the bookkeeping of the search.
#[derive(Debug, Clone)]
pub struct EstimateResult {
    pub rho: DensityMatrix,
    pub params: CholeskyParams,
    /// Least-squares objective at `params` (units: photons^2).
    pub objective_value: f64,
    /// Iterations spent by the winning start.
    pub iterations_used: usize,
    pub starts_tried: usize,
    /// Whether the winning start met a tolerance before the iteration cap.
    pub converged: bool,
    /// Present when the frame is not known-injective; estimation proceeds
    /// but the reconstruction may not be unique.
    pub warning: Option<String>,
}

/// Expected photon counts `N <xi_k| rho |xi_k>` for every frame element.
/// Values are clamped at zero (PSD slack can produce tiny negatives).
pub fn expected_counts(
    frame: &Frame,
    rho: &DensityMatrix,
    mean_photons: f64,
) -> Result<Vec<f64>, EstimateError> {
    if !positive_finite(mean_photons) {
        return Err(EstimateError::BadMeanPhotons(mean_photons));
    }
    if frame.dim() != rho.dim() {
        return Err(EstimateError::DimensionMismatch {
            frame: frame.dim(),
            state: rho.dim(),
        });
    }
    frame
        .elements()
        .iter()
        .map(|xi| {
            let p = rho.expectation(xi)?;
            Ok((mean_photons * p).max(0.0))
        })
        .collect()
}

/// Per-element precomputation for the qubit objective: with element
/// amplitudes (a0, a1), the expectation <xi| rho |xi> is
/// `|a0|^2 rho00 + |a1|^2 rho11 + 2 Re(conj(a0) a1 rho01)`.
struct QubitFrame {
    terms: Vec<(f64, f64, Complex64)>,
}

impl QubitFrame {
    fn new(frame: &Frame) -> Result<Self, EstimateError> {
        if frame.dim() != 2 {
            return Err(EstimateError::NotAQubit(frame.dim()));
        }
        Ok(Self {
            terms: frame
                .elements()
                .iter()
                .map(|xi| {
                    let a = xi.amplitudes();
                    (a[0].norm_sqr(), a[1].norm_sqr(), a[0].conj() * a[1])
                })
                .collect(),
        })
    }
}

fn objective_eval(t: &[f64; 4], frame: &QubitFrame, counts: &[f64], mean_photons: f64) -> f64 {
    let [t1, t2, t3, t4] = *t;
    let e00 = t1 * t1 + t3 * t3 + t4 * t4;
    let e11 = t2 * t2;
    let norm_sqr = e00 + e11;
    if norm_sqr < DEGENERATE_GUARD_NORM_SQR {
        return DEGENERATE_PENALTY;
    }
    let r00 = e00 / norm_sqr;
    let r11 = e11 / norm_sqr;
    let r01 = Complex64::new(t3, -t4) * t2 / norm_sqr;
    let mut sum = 0.0;
    for ((p0, p1, z), count) in frame.terms.iter().zip(counts) {
        let prob = p0 * r00 + p1 * r11 + 2.0 * (z.re * r01.re - z.im * r01.im);
        let residual = mean_photons * prob - count;
        sum += residual * residual;
    }
    sum
}

/// The least-squares objective `sum_k (N <xi_k|rho(t)|xi_k> - count_k)^2`.
///
/// Inside the degenerate guard zone (see [`DEGENERATE_GUARD_NORM_SQR`])
/// the value is the flat [`DEGENERATE_PENALTY`].
pub fn ls_objective(
    params: &CholeskyParams,
    frame: &Frame,
    record: &CountRecord,
) -> Result<f64, EstimateError> {
    let qubit = QubitFrame::new(frame)?;
    if record.counts.len() != frame.len() {
        return Err(EstimateError::SizeMismatch {
            record: record.counts.len(),
            frame: frame.len(),
        });
    }
    let n = record.config.mean_photons;
    if !positive_finite(n) {
        return Err(EstimateError::BadMeanPhotons(n));
    }
    Ok(objective_eval(&params.values(), &qubit, &record.counts, n))
}

/// Reconstruct the state behind a count record by multi-start Nelder-Mead
/// over the Cholesky-style parameters.
///
/// Start 1 is the maximally mixed point; the rest are drawn uniformly from
/// [-1, 1]^4 via `cfg.start_seed`. The strictly best objective wins; ties
/// within 1e-12 go to the earlier start, which keeps results independent
/// of evaluation order.
pub fn estimate(
    frame: &Frame,
    record: &CountRecord,
    cfg: &EstimatorConfig,
) -> Result<EstimateResult, EstimateError> {
    cfg.validate()?;
    let qubit = QubitFrame::new(frame)?;
    if record.counts.len() != frame.len() {
        return Err(EstimateError::SizeMismatch {
            record: record.counts.len(),
            frame: frame.len(),
        });
    }
    let mean_photons = record.config.mean_photons;
    if !positive_finite(mean_photons) {
        return Err(EstimateError::BadMeanPhotons(mean_photons));
    }

    let report = check_injectivity(frame);
    let warning = (report.verdict != Verdict::Injective).then(|| {
        format!(
            "frame '{}' is {}; the reconstruction may not be unique",
            frame.id(),
            report.verdict
        )
    });

    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut starts: Vec<[f64; 4]> = vec![[inv_sqrt2, inv_sqrt2, 0.0, 0.0]];
    let mut rng = keyed_rng(cfg.start_seed, crate::sim::fnv1a64(b"qst.nm-starts"), 0, 0);
    for _ in 1..cfg.n_starts {
        starts.push(std::array::from_fn(|_| 2.0 * uniform01(&mut rng) - 1.0));
    }

    let opts = NmOptions {
        max_iterations: cfg.max_iterations,
        objective_tolerance: cfg.objective_tolerance,
        param_tolerance: cfg.param_tolerance,
        ..NmOptions::default()
    };
    let mut best: Option<NmResult<4>> = None;
    for x0 in starts {
        let run = nelder_mead(
            |t| objective_eval(t, &qubit, &record.counts, mean_photons),
            x0,
            &opts,
        );
        best = match best {
            None => Some(run),
            Some(cur) if run.fx < cur.fx - TIE_TOLERANCE => Some(run),
            Some(cur) => Some(cur),
        };
    }
    let best = best.expect("n_starts >= 1");

    // The fixed mixed start keeps the winner out of the guard zone.
    let params = CholeskyParams::new(best.x)?;
    let rho = params.density()?;
    Ok(EstimateResult {
        rho,
        params,
        objective_value: best.fx,
        iterations_used: best.iterations,
        starts_tried: cfg.n_starts,
        converged: best.converged,
        warning,
    })
}

/// Count record holding the exact expected counts of `rho` — the
/// infinite-statistics limit, with every Poisson draw pinned to the mean.
/// `mean_photons` must be a positive integer value so the draws stay
/// consistent with the counts.
pub fn noiseless_record(
    frame: &Frame,
    rho: &DensityMatrix,
    mean_photons: f64,
) -> Result<CountRecord, EstimateError> {
    if !positive_finite(mean_photons) || mean_photons.fract() != 0.0 {
        return Err(EstimateError::FractionalPhotons(mean_photons));
    }
    let counts = expected_counts(frame, rho, mean_photons)?;
    Ok(CountRecord {
        frame_id: frame.id().to_string(),
        poisson_draws: vec![mean_photons as u64; counts.len()],
        counts,
        config: NoiseConfig {
            mean_photons,
            epsilon: 0.0,
            seed: 0,
        },
    })
}
