//! Reference symmetric eigensolver.
//!
//! Cyclic Jacobi rotations: simple and accurate enough to serve as the
//! ground-truth oracle up to n around 2000. Performance is secondary; the
//! solver is only used to produce reference eigenpairs for metrics and tests.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Documented size limit for [`symmetric_eig`].
pub const MAX_EIG_DIM: usize = 2048;

const SYMMETRY_REL_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 64;

/// Full eigendecomposition `a = u diag(lambda) u^T` with eigenvalues sorted
/// descending and orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvectors: DenseMatrix,
    pub eigenvalues: Vec<f64>,
}

impl EigenDecomposition {
    pub fn top_k(&self, k: usize) -> DenseMatrix {
        self.eigenvectors.leading_columns(k)
    }
}

pub fn symmetric_eig(a: &DenseMatrix) -> Result<EigenDecomposition> {
    let n = a.rows();
    if !a.is_symmetric(SYMMETRY_REL_TOL) {
        return Err(Error::NotSymmetric);
    }
    assert!(n <= MAX_EIG_DIM, "eigensolver limited to n <= {MAX_EIG_DIM}");
    if n == 0 {
        return Ok(EigenDecomposition {
            eigenvectors: DenseMatrix::zeros(0, 0),
            eigenvalues: vec![],
        });
    }

    let mut w: Vec<f64> = a.data().to_vec();
    let mut v: Vec<f64> = DenseMatrix::identity(n).data().to_vec();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let stop = 1e-14 * scale;

    for _sweep in 0..MAX_SWEEPS {
        let mut off_max = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[p * n + q];
                off_max = off_max.max(apq.abs());
                if apq.abs() <= stop {
                    continue;
                }
                let app = w[p * n + p];
                let aqq = w[q * n + q];
                // standard Jacobi rotation angle
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for i in 0..n {
                    let wip = w[i * n + p];
                    let wiq = w[i * n + q];
                    w[i * n + p] = c * wip - s * wiq;
                    w[i * n + q] = s * wip + c * wiq;
                }
                for j in 0..n {
                    let wpj = w[p * n + j];
                    let wqj = w[q * n + j];
                    w[p * n + j] = c * wpj - s * wqj;
                    w[q * n + j] = s * wpj + c * wqj;
                }
                for i in 0..n {
                    let vip = v[i * n + p];
                    let viq = v[i * n + q];
                    v[i * n + p] = c * vip - s * viq;
                    v[i * n + q] = s * vip + c * viq;
                }
            }
        }
        if off_max <= stop {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| w[i * n + i]).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap());

    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = DenseMatrix::from_fn(n, n, |i, j| v[i * n + order[j]]);
    Ok(EigenDecomposition {
        eigenvectors,
        eigenvalues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qr::{orthonormality_defect, qr_orthonormalize};
    use crate::rng::{gaussian_matrix, RngStream, StreamPurpose};

    fn reconstruct(e: &EigenDecomposition) -> DenseMatrix {
        let lam = DenseMatrix::diag(&e.eigenvalues);
        e.eigenvectors
            .matmul(&lam)
            .unwrap()
            .matmul(&e.eigenvectors.transpose())
            .unwrap()
    }

    #[test]
    fn diag_case() {
        let a = DenseMatrix::diag(&[3.0, 1.0]);
        let e = symmetric_eig(&a).unwrap();
        assert!((e.eigenvalues[0] - 3.0).abs() < 1e-12);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-12);
        assert!((e.eigenvectors.get(0, 0).abs() - 1.0).abs() < 1e-12);
        assert!((e.eigenvectors.get(1, 1).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_hand_case() {
        let a = DenseMatrix::new(2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let e = symmetric_eig(&a).unwrap();
        assert!((e.eigenvalues[0] - 3.0).abs() < 1e-12);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-12);
        let r = 0.5f64.sqrt();
        // top eigenvector is (1,1)/sqrt(2) up to sign
        assert!((e.eigenvectors.get(0, 0).abs() - r).abs() < 1e-12);
        assert!((e.eigenvectors.get(1, 0).abs() - r).abs() < 1e-12);
    }

    #[test]
    fn rank_one_case() {
        let n = 5;
        let v: Vec<f64> = (0..n).map(|i| i as f64 + 1.0).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let v: Vec<f64> = v.iter().map(|x| x / norm).collect();
        let a = DenseMatrix::from_fn(n, n, |i, j| v[i] * v[j]);
        let e = symmetric_eig(&a).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-10);
        for &l in &e.eigenvalues[1..] {
            assert!(l.abs() < 1e-10);
        }
    }

    #[test]
    fn invariants_on_random_matrix() {
        let g = gaussian_matrix(RngStream::new(3, StreamPurpose::Trial), 40, 40, 1.0).unwrap();
        let a = g.matmul(&g.transpose()).unwrap();
        let e = symmetric_eig(&a).unwrap();
        assert!(orthonormality_defect(&e.eigenvectors) <= 1e-10);
        assert!(reconstruct(&e).max_abs_diff(&a) <= 1e-8 * a.max_abs());
        for w in e.eigenvalues.windows(2) {
            assert!(w[0] >= w[1]);
        }
        for &l in &e.eigenvalues {
            assert!(l >= -1e-8 * a.max_abs());
        }
    }

    #[test]
    fn not_symmetric_rejected() {
        let a = DenseMatrix::new(2, 2, vec![1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(matches!(symmetric_eig(&a), Err(Error::NotSymmetric)));
    }

    // Cross-oracle check: Jacobi against QR-based power iteration with
    // deflation on small random PSD matrices.
    #[test]
    fn agrees_with_power_deflation() {
        for seed in 0..3u64 {
            let g =
                gaussian_matrix(RngStream::new(100 + seed, StreamPurpose::Trial), 5, 5, 1.0)
                    .unwrap();
            let a = g.matmul(&g.transpose()).unwrap();
            let e = symmetric_eig(&a).unwrap();

            // orthogonal (subspace) iteration on the full basis
            let mut x = DenseMatrix::identity(5);
            for _ in 0..3000 {
                let y = a.matmul(&x).unwrap();
                let (q, _) = qr_orthonormalize(&y).unwrap();
                x = q;
            }
            let lam = x.transpose().matmul(&a).unwrap().matmul(&x).unwrap();
            for i in 0..5 {
                assert!(
                    (lam.get(i, i) - e.eigenvalues[i]).abs() <= 1e-6 * e.eigenvalues[0].max(1.0),
                    "eigenvalue {i} mismatch"
                );
            }
        }
    }
}
