//! Small dense linear-algebra routines used across the crate.
//!
//! Everything here operates on tiny matrices (d <= 4, a handful of rows),
//! so the implementations favor accuracy and simplicity: closed forms for
//! 2x2 Hermitian matrices, cyclic Jacobi sweeps for everything else.

use num_complex::Complex64;

/// Eigendecomposition of the 2x2 complex Hermitian matrix
/// `[[a, b], [conj(b), d]]` (a, d real).
///
/// Returns eigenvalues in ascending order together with the matching
/// orthonormal eigenvectors.
pub(crate) fn eigh2(a: f64, b: Complex64, d: f64) -> ([f64; 2], [[Complex64; 2]; 2]) {
    let half_diff = 0.5 * (a - d);
    let half_sum = 0.5 * (a + d);
    let r = (half_diff * half_diff + b.norm_sqr()).sqrt();
    let scale = a.abs().max(d.abs()).max(b.norm());
    if scale == 0.0 || r <= scale * 1e-15 {
        // numerically a multiple of the identity; any orthonormal basis works
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        return ([half_sum - r, half_sum + r], [[one, zero], [zero, one]]);
    }
    let lo = half_sum - r;
    let hi = half_sum + r;
    // (b, l - a) and (l - d, conj(b)) both solve (M - l) v = 0; pick the
    // form whose trailing component stays away from zero.
    let (v_lo, v_hi) = if a >= d {
        (
            normalize2(b, Complex64::new(lo - a, 0.0)),
            normalize2(Complex64::new(hi - d, 0.0), b.conj()),
        )
    } else {
        (
            normalize2(Complex64::new(lo - d, 0.0), b.conj()),
            normalize2(b, Complex64::new(hi - a, 0.0)),
        )
    };
    ([lo, hi], [v_lo, v_hi])
}

fn normalize2(x: Complex64, y: Complex64) -> [Complex64; 2] {
    let n = (x.norm_sqr() + y.norm_sqr()).sqrt();
    [x / n, y / n]
}

/// Eigenvalues of a real symmetric n x n matrix (row-major), ascending.
/// Cyclic Jacobi; the input buffer is consumed as scratch.
pub(crate) fn sym_eigvals(mut m: Vec<f64>, n: usize) -> Vec<f64> {
    debug_assert_eq!(m.len(), n * n);
    for _ in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[p * n + q] * m[p * n + q];
            }
        }
        let diag_scale = (0..n).map(|i| m[i * n + i].abs()).fold(0.0f64, f64::max);
        let scale = diag_scale.max(off.sqrt());
        if scale == 0.0 || off.sqrt() <= scale * 1e-15 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= scale * 1e-18 {
                    continue;
                }
                let theta = 0.5 * (m[q * n + q] - m[p * n + p]) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Singular values of a real rows x cols matrix (row-major), descending,
/// always `cols` of them (zeros pad rank-deficient / wide matrices).
///
/// One-sided Jacobi on the columns. Unlike taking eigenvalues of A^T A,
/// this resolves tiny singular values to full precision, which the
/// injectivity check relies on.
#[allow(clippy::needless_range_loop)]
pub(crate) fn singular_values(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), rows * cols);
    let mut col: Vec<Vec<f64>> = (0..cols)
        .map(|j| (0..rows).map(|i| a[i * cols + j]).collect())
        .collect();
    for _ in 0..60 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for i in 0..rows {
                    app += col[p][i] * col[p][i];
                    aqq += col[q][i] * col[q][i];
                    apq += col[p][i] * col[q][i];
                }
                if apq * apq <= 1e-30 * app * aqq {
                    continue;
                }
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let vp = col[p][i];
                    let vq = col[q][i];
                    col[p][i] = c * vp - s * vq;
                    col[q][i] = s * vp + c * vq;
                }
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = col
        .iter()
        .map(|cj| cj.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Rank of a complex matrix (list of rows) by Gaussian elimination with
/// partial pivoting; entries below `tol` times the largest initial entry
/// are treated as zero.
#[allow(clippy::needless_range_loop)]
pub(crate) fn complex_rank(mut m: Vec<Vec<Complex64>>, tol: f64) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .map(|z| z.norm())
        .fold(0.0f64, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let mut rank = 0;
    let mut row = 0;
    for colidx in 0..cols {
        if row >= rows {
            break;
        }
        let mut best = row;
        let mut best_val = m[row][colidx].norm();
        for r in (row + 1)..rows {
            let v = m[r][colidx].norm();
            if v > best_val {
                best = r;
                best_val = v;
            }
        }
        if best_val <= tol * scale {
            continue;
        }
        m.swap(row, best);
        let pivot = m[row][colidx];
        for r in (row + 1)..rows {
            let f = m[r][colidx] / pivot;
            for c in colidx..cols {
                let sub = f * m[row][c];
                m[r][c] -= sub;
            }
        }
        rank += 1;
        row += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    const Z: Complex64 = Complex64::new(0.0, 0.0);

    #[test]
    fn eigh2_pauli_x() {
        let ([lo, hi], [v_lo, v_hi]) = eigh2(0.0, Complex64::new(1.0, 0.0), 0.0);
        assert!((lo + 1.0).abs() < 1e-15);
        assert!((hi - 1.0).abs() < 1e-15);
        // eigenvectors (1, -1)/sqrt(2) and (1, 1)/sqrt(2) up to phase
        assert!((v_lo[0].norm_sqr() - 0.5).abs() < 1e-14);
        assert!((v_lo[0] + v_lo[1]).norm() < 1e-14);
        assert!((v_hi[0] - v_hi[1]).norm() < 1e-14);
    }

    #[test]
    fn eigh2_reconstructs_matrix() {
        let a = 0.7;
        let b = Complex64::new(0.21, -0.34);
        let d = 0.3;
        let (eig, vecs) = eigh2(a, b, d);
        let mut rec = [[Z; 2]; 2];
        for (l, v) in eig.iter().zip(vecs.iter()) {
            for i in 0..2 {
                for j in 0..2 {
                    rec[i][j] += *l * v[i] * v[j].conj();
                }
            }
        }
        assert!((rec[0][0].re - a).abs() < 1e-14);
        assert!((rec[0][1] - b).norm() < 1e-14);
        assert!((rec[1][1].re - d).abs() < 1e-14);
        // orthonormality
        let dot = vecs[0][0].conj() * vecs[1][0] + vecs[0][1].conj() * vecs[1][1];
        assert!(dot.norm() < 1e-14);
    }

    #[test]
    fn sym_eigvals_small() {
        let eig = sym_eigvals(vec![2.0, 1.0, 1.0, 2.0], 2);
        assert!((eig[0] - 1.0).abs() < 1e-14);
        assert!((eig[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn singular_values_rectangular_diag() {
        // [[3,0],[0,2],[0,0]]
        let a = vec![3.0, 0.0, 0.0, 2.0, 0.0, 0.0];
        let sv = singular_values(&a, 3, 2);
        assert!((sv[0] - 3.0).abs() < 1e-14);
        assert!((sv[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn singular_values_detect_exact_kernel() {
        // third column = first + second, rank 2 of 3
        let a = vec![
            1.0, 0.0, 1.0, //
            0.0, 1.0, 1.0, //
            2.0, 1.0, 3.0,
        ];
        let sv = singular_values(&a, 3, 3);
        assert!(sv[2] < 1e-12 * sv[0], "kernel sv too large: {:?}", sv);
    }

    #[test]
    fn singular_values_match_gram_eigenvalues() {
        // cross-route: sigma^2 must equal the eigenvalues of A^T A
        let a = vec![
            0.3, -1.2, 0.4, //
            2.0, 0.1, -0.7, //
            -0.5, 0.6, 1.1, //
            0.8, 0.8, 0.2,
        ];
        let (rows, cols) = (4, 3);
        let sv = singular_values(&a, rows, cols);
        let mut gram = vec![0.0; cols * cols];
        for i in 0..cols {
            for j in 0..cols {
                gram[i * cols + j] = (0..rows).map(|k| a[k * cols + i] * a[k * cols + j]).sum();
            }
        }
        let mut eig = sym_eigvals(gram, cols);
        eig.reverse();
        for (s, l) in sv.iter().zip(eig.iter()) {
            assert!((s * s - l).abs() < 1e-12, "sigma^2 {} vs eig {}", s * s, l);
        }
    }

    #[test]
    fn complex_rank_counts_pivots() {
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        // rows: (1, i), (i, -1) = i * (1, i)  -> rank 1
        let m = vec![vec![one, i], vec![i, -one]];
        assert_eq!(complex_rank(m, 1e-12), 1);
        let m2 = vec![vec![one, i], vec![i, one]];
        assert_eq!(complex_rank(m2, 1e-12), 2);
    }
}
