//! Dense symmetric eigendecomposition via cyclic Jacobi rotations.
//!
//! Deterministic and accurate for the matrix sizes this crate works with
//! (n up to a few thousand); no LAPACK backend required.

use ndarray::{Array1, Array2};

/// Eigenpairs of a symmetric matrix, eigenvalues ascending, eigenvectors as
/// the corresponding columns of an orthogonal matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 64;

/// Full eigendecomposition of a symmetric matrix.
///
/// Only the lower triangle is read; the input is assumed symmetric.
pub fn symmetric_eigen(a: &Array2<f64>) -> SymmetricEigen {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "symmetric_eigen: matrix must be square");
    let mut m = a.clone();
    let mut v = Array2::<f64>::eye(n);

    // off-diagonal scale used for the stopping test
    let off_norm = |m: &Array2<f64>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += m[[i, j]] * m[[i, j]];
            }
        }
        s.sqrt()
    };
    let frob = (m.iter().map(|x| x * x).sum::<f64>()).sqrt().max(1.0);

    for _ in 0..MAX_SWEEPS {
        if off_norm(&m) <= JACOBI_TOL * frob {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq.abs() <= JACOBI_TOL * frob / (n as f64) {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for i in 0..n {
                    if i != p && i != q {
                        let aip = m[[i, p]];
                        let aiq = m[[i, q]];
                        m[[i, p]] = c * aip - s * aiq;
                        m[[p, i]] = m[[i, p]];
                        m[[i, q]] = s * aip + c * aiq;
                        m[[q, i]] = m[[i, q]];
                    }
                }
                m[[p, p]] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
                m[[q, q]] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
                m[[p, q]] = 0.0;
                m[[q, p]] = 0.0;

                for i in 0..n {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = c * vip - s * viq;
                    v[[i, q]] = s * vip + c * viq;
                }
            }
        }
    }

    // sort ascending
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[i, i]].total_cmp(&m[[j, j]]));
    let values = Array1::from_iter(order.iter().map(|&i| m[[i, i]]));
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (out, &src) in order.iter().enumerate() {
        vectors.column_mut(out).assign(&v.column(src));
    }

    SymmetricEigen { values, vectors }
}
