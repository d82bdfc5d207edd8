//! Pure states, density matrices and the figures of merit.
//!
//! All types are immutable values; every operation is a pure function, so
//! anything here can be shared freely across threads. Dimensions are
//! generic, but the reconstruction pipeline only exercises qubits (d = 2);
//! higher d exists for frame fixtures.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg;

/// Tolerance on unit norm and unit trace.
pub const NORM_TOL: f64 = 1e-12;
/// Eigenvalues of a density matrix may dip this far below zero before the
/// matrix is rejected as non-positive.
pub const PSD_SLACK: f64 = -1e-10;

const CHOLESKY_TRACE_MIN: f64 = 1e-300;

#[derive(Debug, Error)]
pub enum StateError {
    #[error("theta = {0} outside [0, pi]")]
    ThetaOutOfRange(f64),
    #[error("phi = {0} outside [0, 2 pi)")]
    PhiOutOfRange(f64),
    #[error("epsilon = {0} outside [0, 1]")]
    EpsilonOutOfRange(f64),
    #[error("need dimension >= 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("squared norm is {0}, not 1 within tolerance")]
    NotNormalized(f64),
    #[error("matrix entry count {0} does not match dimension {1}")]
    BadEntryCount(usize, usize),
    #[error("matrix is not Hermitian within tolerance")]
    NotHermitian,
    #[error("trace is {0}, not 1 within tolerance")]
    TraceNotOne(f64),
    #[error("matrix has eigenvalue {0}, below the PSD slack")]
    NotPositive(f64),
    #[error("Cholesky parameters are degenerate (|t|^2 = {0})")]
    DegenerateParameters(f64),
    #[error("operation is defined for qubits only, got d = {0}")]
    NotAQubit(usize),
}

/// A normalized pure state: complex amplitudes with unit l2 norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    amps: Vec<Complex64>,
}

impl Ket {
    pub fn new(amps: Vec<Complex64>) -> Result<Self, StateError> {
        if amps.len() < 2 {
            return Err(StateError::DimensionTooSmall(amps.len()));
        }
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(StateError::NotNormalized(norm_sqr));
        }
        Ok(Self { amps })
    }

    /// Qubit from Bloch angles: `(cos(theta/2), e^{i phi} sin(theta/2))`
    /// with theta in [0, pi] and phi in [0, 2 pi).
    pub fn from_angles(theta: f64, phi: f64) -> Result<Self, StateError> {
        if !(0.0..=PI).contains(&theta) {
            return Err(StateError::ThetaOutOfRange(theta));
        }
        if !(0.0..TAU).contains(&phi) {
            return Err(StateError::PhiOutOfRange(phi));
        }
        let half = 0.5 * theta;
        Ok(Self {
            amps: vec![
                Complex64::new(half.cos(), 0.0),
                Complex64::from_polar(half.sin(), phi),
            ],
        })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Ket) -> Result<Complex64, StateError> {
        if self.dim() != other.dim() {
            return Err(StateError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// A Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    entries: Vec<Complex64>, // row-major
}

impl DensityMatrix {
    /// Validates Hermiticity and unit trace to 1e-12 and positivity up to
    /// [`PSD_SLACK`].
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self, StateError> {
        if dim < 2 {
            return Err(StateError::DimensionTooSmall(dim));
        }
        if entries.len() != dim * dim {
            return Err(StateError::BadEntryCount(entries.len(), dim));
        }
        let m = Self { dim, entries };
        for i in 0..dim {
            for j in i..dim {
                if (m.entry(i, j) - m.entry(j, i).conj()).norm() > NORM_TOL {
                    return Err(StateError::NotHermitian);
                }
            }
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(StateError::TraceNotOne(tr.re));
        }
        let lo = m.min_eigenvalue();
        if lo < PSD_SLACK {
            return Err(StateError::NotPositive(lo));
        }
        Ok(m)
    }

    /// For construction sites where the invariants hold by construction.
    pub(crate) fn from_valid(dim: usize, entries: Vec<Complex64>) -> Self {
        debug_assert_eq!(entries.len(), dim * dim);
        Self { dim, entries }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.entry(i, i)).sum()
    }

    /// `<psi| rho |psi>`; real for a Hermitian matrix.
    pub fn expectation(&self, psi: &Ket) -> Result<f64, StateError> {
        if self.dim != psi.dim() {
            return Err(StateError::DimensionMismatch(self.dim, psi.dim()));
        }
        let a = psi.amplitudes();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += a[i].conj() * self.entry(i, j) * a[j];
            }
        }
        Ok(acc.re)
    }

    /// Purity Tr(rho^2); 1 for pure states, 1/d for the maximally mixed.
    pub fn purity(&self) -> f64 {
        // Tr(rho^2) = sum_ij |rho_ij|^2 for Hermitian rho
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim == 2 {
            let (eig, _) = linalg::eigh2(self.entry(0, 0).re, self.entry(0, 1), self.entry(1, 1).re);
            eig[0]
        } else {
            // the real symmetric embedding [[X, -Y], [Y, X]] of X + iY has
            // the same spectrum, each eigenvalue doubled
            let n = self.dim;
            let m = 2 * n;
            let mut real = vec![0.0; m * m];
            for i in 0..n {
                for j in 0..n {
                    let z = self.entry(i, j);
                    real[i * m + j] = z.re;
                    real[i * m + n + j] = -z.im;
                    real[(n + i) * m + j] = z.im;
                    real[(n + i) * m + n + j] = z.re;
                }
            }
            linalg::sym_eigvals(real, m)[0]
        }
    }
}

/// Real 4-vector (t1, t2, t3, t4) parametrizing a qubit density matrix as
/// `T^dag T / Tr(T^dag T)` with lower-triangular `T = [[t1, 0], [t3 + i t4, t2]]`.
///
/// Every (t1..t4) away from the origin maps onto a valid state, which is
/// what lets the least-squares search run unconstrained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CholeskyParams {
    t: [f64; 4],
}

impl CholeskyParams {
    pub fn new(t: [f64; 4]) -> Result<Self, StateError> {
        let norm_sqr: f64 = t.iter().map(|x| x * x).sum();
        if norm_sqr == 0.0 || !norm_sqr.is_finite() {
            return Err(StateError::DegenerateParameters(norm_sqr));
        }
        Ok(Self { t })
    }

    pub fn values(&self) -> [f64; 4] {
        self.t
    }

    /// Equals Tr(T^dag T).
    pub fn norm_sqr(&self) -> f64 {
        self.t.iter().map(|x| x * x).sum()
    }

    /// The density matrix `T^dag T / Tr(T^dag T)`; positive semidefinite and
    /// unit-trace by construction.
    pub fn density(&self) -> Result<DensityMatrix, StateError> {
        let [t1, t2, t3, t4] = self.t;
        let e00 = t1 * t1 + t3 * t3 + t4 * t4;
        let e11 = t2 * t2;
        let trace = e00 + e11;
        if trace < CHOLESKY_TRACE_MIN {
            return Err(StateError::DegenerateParameters(trace));
        }
        let off = Complex64::new(t3, -t4) * t2 / trace;
        Ok(DensityMatrix::from_valid(
            2,
            vec![
                Complex64::new(e00 / trace, 0.0),
                off,
                off.conj(),
                Complex64::new(e11 / trace, 0.0),
            ],
        ))
    }
}

/// Rank-1 projector `|psi><psi|`.
pub fn projector(psi: &Ket) -> DensityMatrix {
    let d = psi.dim();
    let a = psi.amplitudes();
    let entries = (0..d)
        .flat_map(|i| (0..d).map(move |j| a[i] * a[j].conj()))
        .collect();
    DensityMatrix::from_valid(d, entries)
}

/// Dark-count mixing of a pure qubit: `(1 - eps) |psi><psi| + (eps/2) I`.
pub fn depolarize(psi: &Ket, epsilon: f64) -> Result<DensityMatrix, StateError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(StateError::EpsilonOutOfRange(epsilon));
    }
    if psi.dim() != 2 {
        return Err(StateError::NotAQubit(psi.dim()));
    }
    let p = projector(psi);
    let mut entries: Vec<Complex64> = p.entries().iter().map(|z| z * (1.0 - epsilon)).collect();
    entries[0] += 0.5 * epsilon;
    entries[3] += 0.5 * epsilon;
    Ok(DensityMatrix::from_valid(2, entries))
}

/// Fidelity of a reconstruction against a pure target, `<psi| rho |psi>`.
///
/// For pure targets this equals the general matrix-square-root form
/// (see [`fidelity_general`], kept as an independent cross-check route).
pub fn fidelity(psi: &Ket, rho: &DensityMatrix) -> Result<f64, StateError> {
    Ok(rho.expectation(psi)?.clamp(0.0, 1.0))
}

/// Fidelity via `(Tr sqrt(sqrt(rho) |psi><psi| sqrt(rho)))^2`, evaluated
/// with two closed-form 2x2 Hermitian eigendecompositions. Qubits only.
///
/// Eigenvalues inside the PSD slack are clamped to zero before the roots.
pub fn fidelity_general(psi: &Ket, rho: &DensityMatrix) -> Result<f64, StateError> {
    if psi.dim() != rho.dim() {
        return Err(StateError::DimensionMismatch(psi.dim(), rho.dim()));
    }
    if rho.dim() != 2 {
        return Err(StateError::NotAQubit(rho.dim()));
    }
    let (eig, vecs) = linalg::eigh2(rho.entry(0, 0).re, rho.entry(0, 1), rho.entry(1, 1).re);
    let mut sqrt_rho = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (l, v) in eig.iter().zip(vecs.iter()) {
        let root = l.max(0.0).sqrt();
        for i in 0..2 {
            for j in 0..2 {
                sqrt_rho[i][j] += root * v[i] * v[j].conj();
            }
        }
    }
    let a = psi.amplitudes();
    let proj = [[a[0] * a[0].conj(), a[0] * a[1].conj()], [a[1] * a[0].conj(), a[1] * a[1].conj()]];
    let inner = mul2(&mul2(&sqrt_rho, &proj), &sqrt_rho);
    let (m_eig, _) = linalg::eigh2(inner[0][0].re, inner[0][1], inner[1][1].re);
    // sqrt(rho) P sqrt(rho) has rank <= 1 for a pure target, so its trailing
    // eigenvalue is rounding noise; taking its square root would inject
    // sqrt(eps)-scale error.
    let hi = m_eig[1].max(0.0);
    let lo = if m_eig[0] <= 1e-10 * hi { 0.0 } else { m_eig[0] };
    let tr_root = hi.sqrt() + lo.sqrt();
    Ok((tr_root * tr_root).clamp(0.0, 1.0))
}

fn mul2(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn uniform(rng: &mut ChaCha8Rng) -> f64 {
        use rand_chacha::rand_core::RngCore;
        (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn from_angles_poles_and_equator() {
        let north = Ket::from_angles(0.0, 1.23).unwrap();
        assert!((north.amplitudes()[0] - 1.0).norm() < 1e-15);
        assert!(north.amplitudes()[1].norm() < 1e-15);

        let south = Ket::from_angles(PI, 0.0).unwrap();
        assert!(south.amplitudes()[0].norm() < 1e-15);
        assert!((south.amplitudes()[1] - 1.0).norm() < 1e-15);

        // (1/sqrt(2), i/sqrt(2))
        let eq = Ket::from_angles(PI / 2.0, PI / 2.0).unwrap();
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!((eq.amplitudes()[0].re - inv_sqrt2).abs() < 1e-15);
        assert!(eq.amplitudes()[0].im.abs() < 1e-15);
        assert!(eq.amplitudes()[1].re.abs() < 1e-15);
        assert!((eq.amplitudes()[1].im - inv_sqrt2).abs() < 1e-15);
    }

    #[test]
    fn from_angles_rejects_out_of_range() {
        assert!(Ket::from_angles(-0.1, 0.0).is_err());
        assert!(Ket::from_angles(PI + 0.1, 0.0).is_err());
        assert!(Ket::from_angles(1.0, -0.1).is_err());
        assert!(Ket::from_angles(1.0, TAU).is_err());
    }

    #[test]
    fn from_angles_unit_norm_on_grid() {
        for j in 0..50 {
            for k in 0..50 {
                let theta = PI * j as f64 / 49.0;
                let phi = TAU * k as f64 / 50.0;
                let psi = Ket::from_angles(theta, phi).unwrap();
                let n: f64 = psi.amplitudes().iter().map(|a| a.norm_sqr()).sum();
                assert!(close(n, 1.0, 1e-12), "norm {n} at ({theta}, {phi})");
            }
        }
    }

    #[test]
    fn ket_new_validates() {
        assert!(Ket::new(vec![Complex64::new(1.0, 0.0)]).is_err());
        assert!(Ket::new(vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn cholesky_examples() {
        let rho = CholeskyParams::new([1.0, 0.0, 0.0, 0.0]).unwrap().density().unwrap();
        assert!((rho.entry(0, 0).re - 1.0).abs() < 1e-15);
        assert!(rho.entry(1, 1).norm() < 1e-15);
        assert!(rho.entry(0, 1).norm() < 1e-15);

        let mixed = CholeskyParams::new([1.0, 1.0, 0.0, 0.0]).unwrap().density().unwrap();
        assert!((mixed.entry(0, 0).re - 0.5).abs() < 1e-15);
        assert!((mixed.entry(1, 1).re - 0.5).abs() < 1e-15);

        // T^dag T = [[2, 1], [1, 1]] -> normalized [[2/3, 1/3], [1/3, 1/3]]
        let rho = CholeskyParams::new([1.0, 1.0, 1.0, 0.0]).unwrap().density().unwrap();
        assert!(close(rho.entry(0, 0).re, 2.0 / 3.0, 1e-15));
        assert!(close(rho.entry(0, 1).re, 1.0 / 3.0, 1e-15));
        assert!(rho.entry(0, 1).im.abs() < 1e-15);
        assert!(close(rho.entry(1, 1).re, 1.0 / 3.0, 1e-15));
    }

    #[test]
    fn cholesky_rejects_degenerate() {
        assert!(CholeskyParams::new([0.0, 0.0, 0.0, 0.0]).is_err());
        // 1e-155 squared is subnormal: nonzero but below the trace floor
        let p = CholeskyParams::new([1e-155, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(p.density(), Err(StateError::DegenerateParameters(_))));
    }

    #[test]
    fn cholesky_always_yields_valid_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut tried = 0;
        while tried < 1000 {
            let t: [f64; 4] = std::array::from_fn(|_| 2.0 * uniform(&mut rng) - 1.0);
            let n2: f64 = t.iter().map(|x| x * x).sum();
            if n2 < 1e-6 {
                continue;
            }
            tried += 1;
            let rho = CholeskyParams::new(t).unwrap().density().unwrap();
            assert!((rho.trace().re - 1.0).abs() < 1e-12);
            assert!(rho.trace().im.abs() < 1e-12);
            assert!((rho.entry(0, 1) - rho.entry(1, 0).conj()).norm() < 1e-12);
            assert!(rho.min_eigenvalue() >= -1e-12);
        }
    }

    #[test]
    fn projector_examples() {
        let zero = Ket::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
        let p = projector(&zero);
        assert!((p.entry(0, 0).re - 1.0).abs() < 1e-15);

        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let plus = Ket::new(vec![Complex64::new(inv_sqrt2, 0.0), Complex64::new(inv_sqrt2, 0.0)]).unwrap();
        let p = projector(&plus);
        for i in 0..2 {
            for j in 0..2 {
                assert!(close(p.entry(i, j).re, 0.5, 1e-15));
            }
        }

        // |psi> = (1, i)/sqrt(2) -> [[1/2, -i/2], [i/2, 1/2]]
        let circ = Ket::new(vec![Complex64::new(inv_sqrt2, 0.0), Complex64::new(0.0, inv_sqrt2)]).unwrap();
        let p = projector(&circ);
        assert!(close(p.entry(0, 1).im, -0.5, 1e-15));
        assert!(close(p.entry(1, 0).im, 0.5, 1e-15));
        assert!(p.entry(0, 1).re.abs() < 1e-15);
    }

    #[test]
    fn depolarize_examples() {
        let psi = Ket::from_angles(1.1, 2.2).unwrap();
        assert_eq!(depolarize(&psi, 0.0).unwrap(), projector(&psi));

        let full = depolarize(&psi, 1.0).unwrap();
        assert!(close(full.entry(0, 0).re, 0.5, 1e-15));
        assert!(full.entry(0, 1).norm() < 1e-15);

        let zero = Ket::from_angles(0.0, 0.0).unwrap();
        let half = depolarize(&zero, 0.5).unwrap();
        assert!(close(half.entry(0, 0).re, 0.75, 1e-15));
        assert!(close(half.entry(1, 1).re, 0.25, 1e-15));

        assert!(depolarize(&psi, -0.1).is_err());
        assert!(depolarize(&psi, 1.1).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let psi = Ket::from_angles(0.8, 5.1).unwrap();
        assert!(close(fidelity(&psi, &projector(&psi)).unwrap(), 1.0, 1e-12));

        let zero = Ket::from_angles(0.0, 0.0).unwrap();
        let one = Ket::from_angles(PI, 0.0).unwrap();
        assert!(fidelity(&zero, &projector(&one)).unwrap() < 1e-12);

        let rho = depolarize(&zero, 0.5).unwrap();
        assert!(close(fidelity(&zero, &rho).unwrap(), 0.75, 1e-12));
    }

    #[test]
    fn fidelity_invariant_under_global_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let psi = Ket::from_angles(PI * uniform(&mut rng), TAU * uniform(&mut rng) * 0.999).unwrap();
            let alpha = TAU * uniform(&mut rng) * 0.999;
            let phase = Complex64::from_polar(1.0, alpha);
            let shifted = Ket::new(psi.amplitudes().iter().map(|a| a * phase).collect()).unwrap();
            let rho = depolarize(&Ket::from_angles(PI * uniform(&mut rng), 0.0).unwrap(), uniform(&mut rng)).unwrap();
            let f1 = fidelity(&psi, &rho).unwrap();
            let f2 = fidelity(&shifted, &rho).unwrap();
            assert!(close(f1, f2, 1e-12));
        }
    }

    #[test]
    fn fidelity_general_matches_pure_shortcut() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let psi = Ket::from_angles(PI * uniform(&mut rng), TAU * uniform(&mut rng) * 0.999).unwrap();
            let target = Ket::from_angles(PI * uniform(&mut rng), TAU * uniform(&mut rng) * 0.999).unwrap();
            let rho = depolarize(&target, uniform(&mut rng)).unwrap();
            let short = fidelity(&psi, &rho).unwrap();
            let general = fidelity_general(&psi, &rho).unwrap();
            assert!(close(short, general, 1e-9), "{short} vs {general}");
        }
    }

    #[test]
    fn purity_examples_and_depolarize_identity() {
        let psi = Ket::from_angles(2.0, 0.4).unwrap();
        assert!(close(projector(&psi).purity(), 1.0, 1e-12));
        assert!(close(DensityMatrix::maximally_mixed(2).purity(), 0.5, 1e-15));
        assert!(close(depolarize(&psi, 0.5).unwrap().purity(), 0.625, 1e-12));

        // purity((1-eps)|psi><psi| + eps/2 I) = 1 - eps + eps^2/2
        for k in 0..=10 {
            let eps = k as f64 / 10.0;
            let expected = 1.0 - eps + 0.5 * eps * eps;
            assert!(close(depolarize(&psi, eps).unwrap().purity(), expected, 1e-12));
        }
    }

    #[test]
    fn density_matrix_validation() {
        let z = Complex64::new(0.0, 0.0);
        let h = Complex64::new(0.5, 0.0);
        assert!(DensityMatrix::new(2, vec![h, z, z, h]).is_ok());
        // non-hermitian
        assert!(DensityMatrix::new(2, vec![h, Complex64::new(0.0, 0.2), z, h]).is_err());
        // wrong trace
        assert!(DensityMatrix::new(2, vec![h, z, z, Complex64::new(0.6, 0.0)]).is_err());
        // negative eigenvalue
        assert!(DensityMatrix::new(
            2,
            vec![Complex64::new(1.2, 0.0), z, z, Complex64::new(-0.2, 0.0)]
        )
        .is_err());
    }

    #[test]
    fn min_eigenvalue_agrees_between_routes() {
        // d = 3 projector embedding exercises the Jacobi path
        let amp = Complex64::new(1.0 / 3.0_f64.sqrt(), 0.0);
        let psi = Ket::new(vec![amp, amp, amp]).unwrap();
        let p = projector(&psi);
        let lo = p.min_eigenvalue();
        assert!(lo.abs() < 1e-12, "projector min eigenvalue {lo}");
        let mixed = DensityMatrix::maximally_mixed(3);
        assert!(close(mixed.min_eigenvalue(), 1.0 / 3.0, 1e-12));
    }
}
