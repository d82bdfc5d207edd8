//! Seeded simulation of measured photon counts.
//!
//! Each frame element gets its own ChaCha8 substream, keyed by
//! (config seed, frame id, element index) plus a fixed domain tag, so the
//! same inputs always reproduce the same counts bit for bit, independent
//! of evaluation order, platform or worker count. Note the substream is
//! keyed by the element's *index*: reordering a frame's elements keeps the
//! per-index Poisson draws fixed, it does not move them along with the
//! vectors.
//!
//! Counts follow the photon-counting model literally: a Poisson draw N_k
//! with mean N is scaled by the detection probability, giving real-valued
//! (unrounded) counts. With dark-count mixing the same single draw feeds
//! both the signal and the background term.

use std::fs;
use std::io;
use std::path::Path;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::{intensity_map, Frame, FrameError};
use crate::state::Ket;

/// Poisson rates below this use inversion by sequential search; rates at or
/// above it use the PTRD transformed-rejection sampler.
pub const POISSON_METHOD_SWITCH: f64 = 30.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("mean photon number must be positive and finite, got {0}")]
    BadMeanPhotons(f64),
    #[error("epsilon = {0} outside [0, 1]")]
    EpsilonOutOfRange(f64),
    #[error("poisson rate must be positive and finite, got {0}")]
    BadLambda(f64),
    #[error("simulate_counts models Poisson noise only; epsilon = {0} needs simulate_counts_noisy")]
    EpsilonNotZero(f64),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

/// Noise settings for one simulated measurement run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Expected photons per frame element.
    pub mean_photons: f64,
    /// Dark-count mixing weight in [0, 1].
    pub epsilon: f64,
    /// Seed of the per-element count streams.
    pub seed: u64,
}

impl NoiseConfig {
    pub fn new(mean_photons: f64, epsilon: f64, seed: u64) -> Result<Self, SimError> {
        if !positive_finite(mean_photons) {
            return Err(SimError::BadMeanPhotons(mean_photons));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(SimError::EpsilonOutOfRange(epsilon));
        }
        Ok(Self {
            mean_photons,
            epsilon,
            seed,
        })
    }
}

/// Simulated photon counts for one state against one frame, together with
/// the raw Poisson draws and the settings that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct CountRecord {
    pub frame_id: String,
    /// Real-valued measured counts, one per frame element.
    pub counts: Vec<f64>,
    /// The Poisson photon numbers N_k behind the counts.
    pub poisson_draws: Vec<u64>,
    pub config: NoiseConfig,
}

pub(crate) fn positive_finite(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

/// FNV-1a 64-bit hash; used only for folding identifiers into stream keys.
pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// ChaCha8 stream keyed by four 64-bit words packed little-endian.
pub(crate) fn keyed_rng(a: u64, b: u64, c: u64, d: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&a.to_le_bytes());
    key[8..16].copy_from_slice(&b.to_le_bytes());
    key[16..24].copy_from_slice(&c.to_le_bytes());
    key[24..32].copy_from_slice(&d.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn element_rng(seed: u64, frame_id: &str, element_index: usize) -> ChaCha8Rng {
    keyed_rng(
        seed,
        fnv1a64(frame_id.as_bytes()),
        element_index as u64,
        fnv1a64(b"qst.count-stream"),
    )
}

/// Fold a sample-state index into a master seed; sweep runners use this so
/// every state of a sample gets an independent count stream.
pub fn derive_state_seed(master_seed: u64, state_index: u64) -> u64 {
    let mut bytes = [0u8; 16];
    bytes[0..8].copy_from_slice(&master_seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&state_index.to_le_bytes());
    fnv1a64(&bytes)
}

/// Uniform in [0, 1) from the top 53 bits of one 64-bit word.
pub(crate) fn uniform01<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Exact Poisson(lambda) draw.
///
/// Below [`POISSON_METHOD_SWITCH`] this inverts the CDF by sequential
/// search; above it runs Hormann's PTRD transformed rejection. Both are
/// exact samplers — no normal approximation at any rate.
pub fn poisson_sample<R: RngCore>(lambda: f64, rng: &mut R) -> Result<u64, SimError> {
    if !positive_finite(lambda) {
        return Err(SimError::BadLambda(lambda));
    }
    Ok(if lambda < POISSON_METHOD_SWITCH {
        poisson_inversion(lambda, rng)
    } else {
        poisson_ptrd(lambda, rng)
    })
}

fn poisson_inversion<R: RngCore>(lambda: f64, rng: &mut R) -> u64 {
    let u = uniform01(rng);
    let mut k = 0u64;
    let mut pmf = (-lambda).exp();
    let mut cdf = pmf;
    while u > cdf {
        k += 1;
        pmf *= lambda / k as f64;
        cdf += pmf;
        if pmf < f64::MIN_POSITIVE {
            break; // tail mass exhausted at double precision
        }
    }
    k
}

/// Hormann's transformed rejection with decomposition (PTRD), valid for
/// lambda >= 10. Uses two uniforms per proposal and an exact acceptance
/// test through ln(k!).
fn poisson_ptrd<R: RngCore>(lambda: f64, rng: &mut R) -> u64 {
    let smu = lambda.sqrt();
    let b = 0.931 + 2.53 * smu;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    let log_lambda = lambda.ln();
    loop {
        let u = uniform01(rng) - 0.5;
        let v = uniform01(rng);
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if (v * inv_alpha / (a / (us * us) + b)).ln()
            <= k * log_lambda - lambda - ln_factorial(k as u64)
        {
            return k as u64;
        }
    }
}

/// ln(k!): exact through 19! (factorials below 2^53), Stirling-De Moivre
/// series with three correction terms beyond.
fn ln_factorial(k: u64) -> f64 {
    const FACTORIALS: [f64; 20] = [
        1.0,
        1.0,
        2.0,
        6.0,
        24.0,
        120.0,
        720.0,
        5040.0,
        40320.0,
        362880.0,
        3628800.0,
        39916800.0,
        479001600.0,
        6227020800.0,
        87178291200.0,
        1307674368000.0,
        20922789888000.0,
        355687428096000.0,
        6402373705728000.0,
        121645100408832000.0,
    ];
    if k < 20 {
        return FACTORIALS[k as usize].ln();
    }
    let x = (k + 1) as f64;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x * x * x)
        + 1.0 / (1260.0 * x * x * x * x * x)
}

/// Measured counts under Poisson noise alone: independently per element,
/// `count_k = N_k |<xi_k|psi>|^2` with `N_k ~ Poisson(mean_photons)`.
pub fn simulate_counts(frame: &Frame, psi: &Ket, config: &NoiseConfig) -> Result<CountRecord, SimError> {
    if config.epsilon != 0.0 {
        return Err(SimError::EpsilonNotZero(config.epsilon));
    }
    simulate(frame, psi, config)
}

/// Measured counts under Poisson noise plus dark counts:
/// `count_k = (1 - eps) N_k |<xi_k|psi>|^2 + N_k eps/2`, with a single
/// draw `N_k` shared by both terms. Equivalently, `N_k` times the
/// intensity of the depolarized input state.
pub fn simulate_counts_noisy(
    frame: &Frame,
    psi: &Ket,
    config: &NoiseConfig,
) -> Result<CountRecord, SimError> {
    simulate(frame, psi, config)
}

fn simulate(frame: &Frame, psi: &Ket, config: &NoiseConfig) -> Result<CountRecord, SimError> {
    if !positive_finite(config.mean_photons) {
        return Err(SimError::BadMeanPhotons(config.mean_photons));
    }
    if !(0.0..=1.0).contains(&config.epsilon) {
        return Err(SimError::EpsilonOutOfRange(config.epsilon));
    }
    let probs = intensity_map(frame, psi)?;
    let eps = config.epsilon;
    let mut counts = Vec::with_capacity(probs.len());
    let mut draws = Vec::with_capacity(probs.len());
    for (k, p) in probs.iter().enumerate() {
        let mut rng = element_rng(config.seed, frame.id(), k);
        let draw = poisson_sample(config.mean_photons, &mut rng)?;
        let signal = draw as f64 * p;
        counts.push((1.0 - eps) * signal + draw as f64 * (0.5 * eps));
        draws.push(draw);
    }
    Ok(CountRecord {
        frame_id: frame.id().to_string(),
        counts,
        poisson_draws: draws,
        config: *config,
    })
}

impl CountRecord {
    /// CSV serialization with header `frame_id,element_index,poisson_draw,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame_id,element_index,poisson_draw,count\n");
        for (k, (draw, count)) in self.poisson_draws.iter().zip(&self.counts).enumerate() {
            out.push_str(&format!("{},{},{},{}\n", self.frame_id, k, draw, count));
        }
        out
    }

    /// Write the counts CSV and its JSON sidecar carrying the [`NoiseConfig`].
    pub fn write_files(&self, csv_path: impl AsRef<Path>, json_path: impl AsRef<Path>) -> Result<(), SimError> {
        let io_err = |path: &Path, source| SimError::Io {
            path: path.display().to_string(),
            source,
        };
        let csv_path = csv_path.as_ref();
        fs::write(csv_path, self.to_csv()).map_err(|e| io_err(csv_path, e))?;
        let json_path = json_path.as_ref();
        let json = serde_json::to_string_pretty(&self.config).expect("config serializes");
        fs::write(json_path, json + "\n").map_err(|e| io_err(json_path, e))
    }

    /// Read a record back from the CSV + sidecar pair written by
    /// [`CountRecord::write_files`].
    pub fn read_files(csv_path: impl AsRef<Path>, json_path: impl AsRef<Path>) -> Result<Self, SimError> {
        let csv_path = csv_path.as_ref();
        let json_path = json_path.as_ref();
        let io_err = |path: &Path, source| SimError::Io {
            path: path.display().to_string(),
            source,
        };
        let json = fs::read_to_string(json_path).map_err(|e| io_err(json_path, e))?;
        let config: NoiseConfig = serde_json::from_str(&json).map_err(|e| SimError::Parse {
            path: json_path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })?;
        let text = fs::read_to_string(csv_path).map_err(|e| io_err(csv_path, e))?;
        Self::parse_csv(&text, &csv_path.display().to_string(), config)
    }

    fn parse_csv(text: &str, path: &str, config: NoiseConfig) -> Result<Self, SimError> {
        let err = |line: usize, message: String| SimError::Parse {
            path: path.to_string(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| err(1, "empty counts file".into()))?;
        if header.trim() != "frame_id,element_index,poisson_draw,count" {
            return Err(err(1, format!("unexpected header `{header}`")));
        }
        let mut frame_id: Option<String> = None;
        let mut counts = Vec::new();
        let mut draws = Vec::new();
        for (idx, raw) in lines {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(err(lineno, format!("expected 4 fields, found {}", fields.len())));
            }
            match &frame_id {
                None => frame_id = Some(fields[0].to_string()),
                Some(id) if id != fields[0] => {
                    return Err(err(lineno, format!("frame id changed from `{id}` to `{}`", fields[0])));
                }
                _ => {}
            }
            let k: usize = fields[1]
                .parse()
                .map_err(|_| err(lineno, format!("bad element index `{}`", fields[1])))?;
            if k != counts.len() {
                return Err(err(lineno, format!("element index {k} out of order")));
            }
            let draw: u64 = fields[2]
                .parse()
                .map_err(|_| err(lineno, format!("bad poisson draw `{}`", fields[2])))?;
            let count: f64 = fields[3]
                .parse()
                .map_err(|_| err(lineno, format!("bad count `{}`", fields[3])))?;
            if !count.is_finite() || count < 0.0 || count > draw as f64 * (1.0 + 1e-12) {
                return Err(err(lineno, format!("count {count} inconsistent with draw {draw}")));
            }
            counts.push(count);
            draws.push(draw);
        }
        if counts.is_empty() {
            return Err(err(2, "no count rows".into()));
        }
        Ok(Self {
            frame_id: frame_id.expect("nonempty"),
            counts,
            poisson_draws: draws,
            config,
        })
    }
}
