//! Shared helpers for the integration tests.
#![allow(dead_code)] // not every test binary uses every helper

use num_complex::Complex64;
use qst::{DensityMatrix, Ket};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn random_ket(rng: &mut ChaCha8Rng) -> Ket {
    let theta = std::f64::consts::PI * uniform(rng);
    let phi = std::f64::consts::TAU * uniform(rng) * 0.999_999;
    Ket::from_angles(theta, phi).unwrap()
}

/// Random qubit density matrix built from an explicit eigendecomposition
/// (random orthonormal basis, random spectrum) — independent of the
/// Cholesky-style parametrization used by the estimator.
pub fn random_density(rng: &mut ChaCha8Rng) -> DensityMatrix {
    let v = random_ket(rng);
    let a = v.amplitudes()[0];
    let b = v.amplitudes()[1];
    // (-conj(b), conj(a)) is orthonormal to (a, b)
    let w = [-b.conj(), a.conj()];
    let lambda = uniform(rng);
    let v = [a, b];
    let mut entries = vec![Complex64::new(0.0, 0.0); 4];
    for i in 0..2 {
        for j in 0..2 {
            entries[i * 2 + j] = lambda * v[i] * v[j].conj() + (1.0 - lambda) * w[i] * w[j].conj();
        }
    }
    DensityMatrix::new(2, entries).unwrap()
}

/// Trace distance between qubit states: for the traceless Hermitian
/// difference [[x, z], [conj(z), -x]] this is sqrt(x^2 + |z|^2).
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    let x = a.entry(0, 0).re - b.entry(0, 0).re;
    let z = a.entry(0, 1) - b.entry(0, 1);
    (x * x + z.norm_sqr()).sqrt()
}
