//! Gaussian kernels, graph Laplacians, and their spectra.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::eigen::symmetric_eigen;
use crate::error::{Error, Result};
use crate::exec;

/// How the kernel bandwidth is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BandwidthRule {
    /// A fixed user-supplied bandwidth `sigma > 0`.
    Global { sigma: f64 },
    /// `sigma_hat = max_i c * ||x_i - x_(i,k)||^2` over the k-th nearest
    /// Euclidean neighbor of every point (self excluded). Guarantees every
    /// point keeps meaningful similarity to at least k neighbors.
    LocalMax { k: usize, c: f64 },
}

/// Which denominator the Gaussian exponent uses.
///
/// `TwoSigmaSquared` treats the resolved bandwidth as a length scale sigma
/// and divides by `2 sigma^2`; `SigmaHat` divides by the resolved value
/// directly (it is already a squared distance under `LocalMax`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DenominatorConvention {
    TwoSigmaSquared,
    SigmaHat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub rule: BandwidthRule,
    pub convention: DenominatorConvention,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            rule: BandwidthRule::LocalMax { k: 2, c: 5.0 },
            convention: DenominatorConvention::SigmaHat,
        }
    }
}

impl KernelConfig {
    pub fn local_max(k: usize, c: f64) -> Self {
        KernelConfig {
            rule: BandwidthRule::LocalMax { k, c },
            convention: DenominatorConvention::SigmaHat,
        }
    }

    pub fn global(sigma: f64) -> Self {
        KernelConfig {
            rule: BandwidthRule::Global { sigma },
            convention: DenominatorConvention::TwoSigmaSquared,
        }
    }
}

/// Kernel matrix with the derived degree vector and both Laplacians.
#[derive(Debug, Clone)]
pub struct GraphArtifacts {
    /// Symmetric Gaussian kernel, entries in (0, 1], unit diagonal.
    pub kernel: Array2<f64>,
    /// Row sums of the kernel.
    pub degrees: Array1<f64>,
    /// Unnormalized Laplacian `diag(D) - K`.
    pub l_un: Array2<f64>,
    /// Random-walk Laplacian `diag(D)^-1 K`; row-stochastic.
    pub l_rw: Array2<f64>,
}

/// Eigenpairs of a Laplacian-derived operator; ordering documented by the
/// producing function.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

/// All pairwise squared Euclidean distances between rows of `x`.
pub fn pairwise_sq_dists(x: &Array2<f64>) -> Array2<f64> {
    let (n, d) = x.dim();
    let xs = x.as_standard_layout();
    let flat = xs.as_slice().expect("standard layout");
    let mut buf = vec![0.0; n * n];
    exec::for_each_chunk_mut(&mut buf, n, |i, row| {
        let xi = &flat[i * d..(i + 1) * d];
        for (j, out) in row.iter_mut().enumerate() {
            let xj = &flat[j * d..(j + 1) * d];
            let mut s = 0.0;
            for t in 0..d {
                let diff = xi[t] - xj[t];
                s += diff * diff;
            }
            *out = s;
        }
    });
    Array2::from_shape_vec((n, n), buf).expect("shape")
}

/// Sequential reference implementation of [`pairwise_sq_dists`].
pub fn pairwise_sq_dists_seq(x: &Array2<f64>) -> Array2<f64> {
    let (n, d) = x.dim();
    let mut out = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for t in 0..d {
                let diff = x[[i, t]] - x[[j, t]];
                s += diff * diff;
            }
            out[[i, j]] = s;
        }
    }
    out
}

/// `max_i c * ||x_i - x_(i,k)||^2` where `x_(i,k)` is the k-th nearest
/// Euclidean neighbor of `x_i`, self excluded.
pub fn local_bandwidth(x: &Array2<f64>, k: usize, c: f64) -> Result<f64> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::invalid("local_bandwidth requires at least 2 points"));
    }
    if k == 0 || k >= n {
        return Err(Error::invalid(format!(
            "local_bandwidth: k must satisfy 1 <= k < n, got k={k}, n={n}"
        )));
    }
    let sq = pairwise_sq_dists(x);
    let sigma_hat = local_bandwidth_from_sq_dists(&sq, k, c);
    if sigma_hat <= 0.0 {
        return Err(Error::DegenerateBandwidth(sigma_hat));
    }
    Ok(sigma_hat)
}

/// Same rule, operating on a precomputed squared-distance matrix. Returns 0
/// when every point coincides with its k-th neighbor.
pub fn local_bandwidth_from_sq_dists(sq: &Array2<f64>, k: usize, c: f64) -> f64 {
    let n = sq.nrows();
    let mut max_scale = 0.0f64;
    let mut row = Vec::with_capacity(n - 1);
    for i in 0..n {
        row.clear();
        for j in 0..n {
            if j != i {
                row.push(sq[[i, j]]);
            }
        }
        let (_, kth, _) = row.select_nth_unstable_by(k - 1, f64::total_cmp);
        max_scale = max_scale.max(c * *kth);
    }
    max_scale
}

/// Resolves the Gaussian exponent denominator for `x` under `cfg`.
pub fn resolve_denominator(x: &Array2<f64>, cfg: &KernelConfig) -> Result<f64> {
    let scale = match cfg.rule {
        BandwidthRule::Global { sigma } => {
            if sigma <= 0.0 {
                return Err(Error::invalid(format!(
                    "global bandwidth must be positive, got {sigma}"
                )));
            }
            sigma
        }
        BandwidthRule::LocalMax { k, c } => local_bandwidth(x, k, c)?,
    };
    let beta = match cfg.convention {
        DenominatorConvention::TwoSigmaSquared => 2.0 * scale * scale,
        DenominatorConvention::SigmaHat => scale,
    };
    if beta <= 0.0 {
        return Err(Error::DegenerateBandwidth(beta));
    }
    Ok(beta)
}

/// Builds the Gaussian kernel `K_ij = exp(-||x_i - x_j||^2 / beta)` and the
/// derived degrees and Laplacians.
pub fn gaussian_kernel(x: &Array2<f64>, cfg: &KernelConfig) -> Result<GraphArtifacts> {
    let beta = resolve_denominator(x, cfg)?;
    gaussian_kernel_with_denominator(x, beta)
}

/// Same as [`gaussian_kernel`] but with the exponent denominator fixed by
/// the caller (used when the bandwidth must be frozen across evaluations).
pub fn gaussian_kernel_with_denominator(x: &Array2<f64>, beta: f64) -> Result<GraphArtifacts> {
    if beta <= 0.0 {
        return Err(Error::DegenerateBandwidth(beta));
    }
    let kernel = kernel_from_sq_dists(&pairwise_sq_dists(x), beta);
    let degrees = kernel.sum_axis(Axis(1));
    if let Some((node, &degree)) = degrees.iter().enumerate().find(|(_, &d)| d <= 0.0) {
        return Err(Error::DegenerateGraph { node, degree });
    }
    let n = x.nrows();
    let mut l_un = -&kernel;
    let mut l_rw = kernel.clone();
    for i in 0..n {
        l_un[[i, i]] += degrees[i];
        let inv = 1.0 / degrees[i];
        l_rw.row_mut(i).mapv_inplace(|v| v * inv);
    }
    Ok(GraphArtifacts {
        kernel,
        degrees,
        l_un,
        l_rw,
    })
}

pub(crate) fn kernel_from_sq_dists(sq: &Array2<f64>, beta: f64) -> Array2<f64> {
    sq.mapv(|s| (-s / beta).exp())
}

/// `L^t` by repeated multiplication, `t >= 1`.
pub fn laplacian_power(l: &Array2<f64>, t: usize) -> Result<Array2<f64>> {
    if t == 0 {
        return Err(Error::invalid("laplacian_power: t must be >= 1"));
    }
    if l.nrows() != l.ncols() {
        return Err(Error::DimensionMismatch {
            expected: l.nrows(),
            got: l.ncols(),
            context: "laplacian_power: square matrix",
        });
    }
    let mut out = l.clone();
    for _ in 1..t {
        out = out.dot(l);
    }
    Ok(out)
}

/// Eigenpairs of the symmetrically normalized kernel
/// `S = D^{-1/2} K D^{-1/2}`, eigenvalues descending.
///
/// `S` shares its eigenvalues with the random-walk Laplacian `D^{-1} K`;
/// they lie in [-1, 1] with the leading one equal to 1.
pub fn normalized_kernel_spectrum(g: &GraphArtifacts) -> Result<Spectrum> {
    let n = g.kernel.nrows();
    if let Some((node, &degree)) = g.degrees.iter().enumerate().find(|(_, &d)| d <= 0.0) {
        return Err(Error::DegenerateGraph { node, degree });
    }
    let inv_sqrt: Array1<f64> = g.degrees.mapv(|d| 1.0 / d.sqrt());
    let mut sym = g.kernel.clone();
    for i in 0..n {
        for j in 0..n {
            sym[[i, j]] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let e = symmetric_eigen(&sym);
    // flip to descending
    let values = Array1::from_iter(e.values.iter().rev().copied());
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (out, src) in (0..n).rev().enumerate() {
        vectors.column_mut(out).assign(&e.vectors.column(src));
    }
    Ok(Spectrum { values, vectors })
}

/// Eigenpairs of the random-walk Laplacian `D^{-1} K`, eigenvalues
/// descending, eigenvectors scaled to unit norm.
///
/// Computed through the symmetric conjugation of
/// [`normalized_kernel_spectrum`]; eigenvectors are mapped back through
/// `D^{-1/2}`.
pub fn rw_spectrum(g: &GraphArtifacts) -> Result<Spectrum> {
    let mut spec = normalized_kernel_spectrum(g)?;
    let inv_sqrt: Array1<f64> = g.degrees.mapv(|d| 1.0 / d.sqrt());
    for mut col in spec.vectors.axis_iter_mut(Axis(1)) {
        for (v, s) in col.iter_mut().zip(inv_sqrt.iter()) {
            *v *= s;
        }
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            col.mapv_inplace(|v| v / norm);
        }
    }
    Ok(spec)
}

/// Eigenpairs of the unnormalized Laplacian, eigenvalues ascending.
pub fn un_spectrum(g: &GraphArtifacts) -> Spectrum {
    let e = symmetric_eigen(&g.l_un);
    Spectrum {
        values: e.values,
        vectors: e.vectors,
    }
}

/// Second largest eigenvalue of the random-walk Laplacian.
pub fn lambda2_rw(g: &GraphArtifacts) -> Result<f64> {
    let spec = normalized_kernel_spectrum(g)?;
    if spec.values.len() < 2 {
        return Err(Error::invalid("lambda2_rw requires at least 2 points"));
    }
    Ok(spec.values[1])
}
