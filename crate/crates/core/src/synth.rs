//! Synthetic benchmark generators and the chi-square nuisance-dimension
//! analysis: tail bounds, the predicted tolerable nuisance count, and the
//! empirical breakdown sweep.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{eigvec_label_correlation, ClusterAssignment};
use crate::exec;
use crate::graph::KernelConfig;

/// Distribution of nuisance columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NuisanceDist {
    StandardGaussian,
    Uniform01,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoMoonsConfig {
    /// Total sample count; must be even (half per moon).
    pub n: usize,
    pub d_nuisance: usize,
    /// Variance of the Gaussian noise added to the two signal coordinates.
    pub signal_noise_var: f64,
    pub nuisance_dist: NuisanceDist,
    pub seed: u64,
}

impl Default for TwoMoonsConfig {
    fn default() -> Self {
        TwoMoonsConfig {
            n: 100,
            d_nuisance: 8,
            signal_noise_var: 0.1,
            nuisance_dist: NuisanceDist::StandardGaussian,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoClustersConfig {
    pub n_per_cluster: usize,
    /// Separation of the two point masses along the first coordinate.
    pub r: f64,
    pub d_nuisance: usize,
    /// Nuisance standard deviation. The default 1/sqrt(2) makes
    /// same-cluster coordinate differences exactly standard normal, which
    /// is what the tail analysis assumes.
    pub nuisance_std: f64,
    pub seed: u64,
}

impl Default for TwoClustersConfig {
    fn default() -> Self {
        TwoClustersConfig {
            n_per_cluster: 50,
            r: 5.0,
            d_nuisance: 10,
            nuisance_std: std::f64::consts::FRAC_1_SQRT_2,
            seed: 0,
        }
    }
}

/// A generated dataset: raw (unpreprocessed) features, class labels, and
/// the indices of the informative columns.
#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub data: Array2<f64>,
    pub labels: ClusterAssignment,
    pub informative: Vec<usize>,
}

/// Two interleaved half circles in the first two columns plus nuisance
/// columns. Moon A is `(cos th, sin th)`, moon B is
/// `(1 - cos th, 1/2 - sin th)` with `th` uniform on `[0, pi]`; labels are
/// moon membership.
pub fn gen_two_moons(cfg: &TwoMoonsConfig) -> Result<SynthDataset> {
    if cfg.n == 0 || cfg.n % 2 != 0 {
        return Err(Error::invalid(format!(
            "two-moons sample count must be even and positive, got {}",
            cfg.n
        )));
    }
    if !(cfg.signal_noise_var >= 0.0) {
        return Err(Error::invalid(format!(
            "signal noise variance must be nonnegative, got {}",
            cfg.signal_noise_var
        )));
    }
    let d = 2 + cfg.d_nuisance;
    let noise_sd = cfg.signal_noise_var.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut data = Array2::<f64>::zeros((cfg.n, d));
    let mut labels = Vec::with_capacity(cfg.n);
    let half = cfg.n / 2;
    for i in 0..cfg.n {
        let theta = rng.random::<f64>() * std::f64::consts::PI;
        let (sx, sy) = if i < half {
            (theta.cos(), theta.sin())
        } else {
            (1.0 - theta.cos(), 0.5 - theta.sin())
        };
        let nx: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
        let ny: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
        data[[i, 0]] = sx + noise_sd * nx;
        data[[i, 1]] = sy + noise_sd * ny;
        for j in 0..cfg.d_nuisance {
            data[[i, 2 + j]] = match cfg.nuisance_dist {
                NuisanceDist::StandardGaussian => {
                    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
                }
                NuisanceDist::Uniform01 => rng.random::<f64>(),
            };
        }
        labels.push(usize::from(i >= half));
    }
    Ok(SynthDataset {
        data,
        labels: ClusterAssignment::new(labels, 2)?,
        informative: vec![0, 1],
    })
}

/// Two point masses at 0 and `r` on the first coordinate, plus Gaussian
/// nuisance coordinates.
pub fn gen_two_clusters(cfg: &TwoClustersConfig) -> Result<SynthDataset> {
    if cfg.n_per_cluster == 0 {
        return Err(Error::invalid("two-clusters: n_per_cluster must be >= 1"));
    }
    if !(cfg.r > 0.0) {
        return Err(Error::invalid(format!(
            "two-clusters separation must be positive, got {}",
            cfg.r
        )));
    }
    if !(cfg.nuisance_std > 0.0) {
        return Err(Error::invalid(format!(
            "nuisance standard deviation must be positive, got {}",
            cfg.nuisance_std
        )));
    }
    let n = 2 * cfg.n_per_cluster;
    let d = 1 + cfg.d_nuisance;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut data = Array2::<f64>::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let second = i >= cfg.n_per_cluster;
        data[[i, 0]] = if second { cfg.r } else { 0.0 };
        for j in 0..cfg.d_nuisance {
            let g: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
            data[[i, 1 + j]] = cfg.nuisance_std * g;
        }
        labels.push(usize::from(second));
    }
    Ok(SynthDataset {
        data,
        labels: ClusterAssignment::new(labels, 2)?,
        informative: vec![0],
    })
}

/// One-sided chi-square deviation bounds: a chi-square variable `X` with
/// `d` degrees of freedom satisfies
/// `P(X - d >= 2 sqrt(d g) + 2 g) <= exp(-g)` and
/// `P(d - X >= 2 sqrt(d g)) <= exp(-g)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBound {
    pub upper_threshold: f64,
    pub lower_threshold: f64,
    pub bound: f64,
}

pub fn chi_square_tail_bound(d: usize, gamma: f64) -> Result<TailBound> {
    if d == 0 {
        return Err(Error::invalid("chi-square degrees of freedom must be >= 1"));
    }
    if !(gamma >= 0.0) {
        return Err(Error::invalid(format!(
            "gamma must be nonnegative, got {gamma}"
        )));
    }
    let root = 2.0 * (d as f64 * gamma).sqrt();
    Ok(TailBound {
        upper_threshold: root + 2.0 * gamma,
        lower_threshold: root,
        bound: (-gamma).exp(),
    })
}

/// Empirical frequencies of the two tail events over Monte-Carlo draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFrequency {
    pub upper: f64,
    pub lower: f64,
    pub draws: usize,
}

const MC_CHUNK: usize = 1 << 16;

/// Monte-Carlo estimate of the tail frequencies bounded by
/// [`chi_square_tail_bound`]. Draws are generated in fixed chunks with
/// per-chunk streams, so parallel and sequential evaluation count the same
/// events.
pub fn chi_square_tail_frequency(
    d: usize,
    gamma: f64,
    draws: usize,
    seed: u64,
) -> Result<TailFrequency> {
    let (bound, n_chunks) = tail_frequency_setup(d, gamma, draws)?;
    let counts = exec::map_indices(n_chunks, |ci| tail_chunk_counts(d, &bound, draws, seed, ci));
    Ok(tail_frequency_finish(counts, draws))
}

/// Sequential twin of [`chi_square_tail_frequency`]; same chunking, same
/// streams, identical result.
pub fn chi_square_tail_frequency_seq(
    d: usize,
    gamma: f64,
    draws: usize,
    seed: u64,
) -> Result<TailFrequency> {
    let (bound, n_chunks) = tail_frequency_setup(d, gamma, draws)?;
    let counts: Vec<(usize, usize)> = (0..n_chunks)
        .map(|ci| tail_chunk_counts(d, &bound, draws, seed, ci))
        .collect();
    Ok(tail_frequency_finish(counts, draws))
}

fn tail_frequency_setup(d: usize, gamma: f64, draws: usize) -> Result<(TailBound, usize)> {
    if draws == 0 {
        return Err(Error::invalid("draw count must be >= 1"));
    }
    let bound = chi_square_tail_bound(d, gamma)?;
    Ok((bound, draws.div_ceil(MC_CHUNK)))
}

fn tail_chunk_counts(
    d: usize,
    bound: &TailBound,
    draws: usize,
    seed: u64,
    chunk: usize,
) -> (usize, usize) {
    let lo = chunk * MC_CHUNK;
    let hi = (lo + MC_CHUNK).min(draws);
    let mut rng = ChaCha8Rng::seed_from_u64(exec::derive_seed(seed, &[chunk as u64]));
    let chi = ChiSquared::new(d as f64).expect("d >= 1");
    let df = d as f64;
    let mut upper = 0usize;
    let mut lower = 0usize;
    for _ in lo..hi {
        let x: f64 = chi.sample(&mut rng);
        if x - df >= bound.upper_threshold {
            upper += 1;
        }
        if df - x >= bound.lower_threshold {
            lower += 1;
        }
    }
    (upper, lower)
}

fn tail_frequency_finish(counts: Vec<(usize, usize)>, draws: usize) -> TailFrequency {
    let (up, lo) = counts
        .into_iter()
        .fold((0usize, 0usize), |(a, b), (u, l)| (a + u, b + l));
    TailFrequency {
        upper: up as f64 / draws as f64,
        lower: lo as f64 / draws as f64,
        draws,
    }
}

/// Which pair-count exponent the failure-probability split uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExponentConvention {
    /// `E = 2n^2 - n`: distinct ordered pairs plus same-cluster events.
    TwoNSqMinusN,
    /// `E = 2n^2 - 1`.
    TwoNSqMinusOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub r: f64,
    /// Per-cluster sample count.
    pub n: usize,
    /// Allowed failure probability over all distance events jointly.
    pub fail_prob: f64,
    pub exponent_convention: ExponentConvention,
}

/// Prediction of how many nuisance dimensions a two-cluster geometry with
/// separation `r` tolerates: splits the failure probability across all
/// pairwise distance events to get a per-event exponent `gamma`, then
/// inverts the deviation thresholds. Returns `(gamma, d_max)`; `d_max = 0`
/// when `r^2 <= 2 gamma`.
pub fn predicted_max_nuisance_dims(inputs: &BoundInputs) -> Result<(f64, f64)> {
    if !(inputs.fail_prob > 0.0 && inputs.fail_prob < 1.0) {
        return Err(Error::invalid(format!(
            "failure probability must lie in (0,1), got {}",
            inputs.fail_prob
        )));
    }
    if inputs.n == 0 {
        return Err(Error::invalid("per-cluster count must be >= 1"));
    }
    if !(inputs.r > 0.0) {
        return Err(Error::invalid(format!(
            "separation must be positive, got {}",
            inputs.r
        )));
    }
    let n = inputs.n as f64;
    let events = match inputs.exponent_convention {
        ExponentConvention::TwoNSqMinusN => 2.0 * n * n - n,
        ExponentConvention::TwoNSqMinusOne => 2.0 * n * n - 1.0,
    };
    // gamma = -ln(1 - (1 - eps)^(1/E)), evaluated without cancellation
    let gamma = -(-(f64::ln_1p(-inputs.fail_prob) / events).exp_m1()).ln();
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::SeparationInsufficient {
            r: inputs.r,
            gamma,
        });
    }
    let r_sq = inputs.r * inputs.r;
    let d_max = if r_sq <= 2.0 * gamma {
        0.0
    } else {
        let root = (r_sq - 2.0 * gamma) / (4.0 * gamma.sqrt());
        root * root
    };
    Ok((gamma, d_max))
}

/// Mean/std of the eigenvector-label correlation for one `(r, d)` cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub r: f64,
    pub d: usize,
    pub mean_corr: f64,
    pub std_corr: f64,
}

/// Breakdown dimension for one separation; `None` when the correlation
/// never drops below the threshold within the grid (censored).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakdown {
    pub r: f64,
    pub d_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
    pub breakdowns: Vec<Breakdown>,
}

impl SweepResult {
    /// CSV `r,d,mean_corr,std_corr`, one row per grid cell.
    pub fn cells_to_csv(&self) -> String {
        let mut out = String::from("r,d,mean_corr,std_corr\n");
        for c in &self.cells {
            out.push_str(&format!("{},{},{},{}\n", c.r, c.d, c.mean_corr, c.std_corr));
        }
        out
    }

    /// CSV `r,d_star`; censored rows leave the second field empty.
    pub fn breakdown_to_csv(&self) -> String {
        let mut out = String::from("r,d_star\n");
        for b in &self.breakdowns {
            let d_star = b.d_star.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{}\n", b.r, d_star));
        }
        out
    }
}

/// For each separation in `r_grid`, sweeps the nuisance dimension over
/// `d_grid`, averages the label correlation of the second eigenvector over
/// `seeds`, and locates where the mean crosses `threshold` (linear
/// interpolation between grid points). Cells evaluate independently and in
/// a fixed order, so results do not depend on the execution schedule.
#[allow(clippy::too_many_arguments)]
pub fn empirical_breakdown_sweep(
    r_grid: &[f64],
    d_grid: &[usize],
    n_per_cluster: usize,
    nuisance_std: f64,
    threshold: f64,
    seeds: &[u64],
    kernel: &KernelConfig,
) -> Result<SweepResult> {
    if r_grid.is_empty() || d_grid.is_empty() || seeds.is_empty() {
        return Err(Error::invalid("sweep grids and seeds must be nonempty"));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(format!(
            "threshold must lie in (0,1), got {threshold}"
        )));
    }
    if d_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("d_grid must be strictly increasing"));
    }
    if d_grid[0] == 0 {
        return Err(Error::invalid("d_grid entries must be >= 1"));
    }
    let n_cells = r_grid.len() * d_grid.len();
    let kernel = *kernel;
    let cells: Vec<Result<SweepCell>> = {
        let d_len = d_grid.len();
        exec::map_indices(n_cells, move |idx| {
            let ri = idx / d_len;
            let di = idx % d_len;
            sweep_cell(
                r_grid[ri],
                d_grid[di],
                ri,
                di,
                n_per_cluster,
                nuisance_std,
                seeds,
                &kernel,
            )
        })
    };
    let cells: Vec<SweepCell> = cells.into_iter().collect::<Result<_>>()?;
    let mut breakdowns = Vec::with_capacity(r_grid.len());
    for (ri, &r) in r_grid.iter().enumerate() {
        let row = &cells[ri * d_grid.len()..(ri + 1) * d_grid.len()];
        breakdowns.push(Breakdown {
            r,
            d_star: locate_crossing(row, d_grid, threshold),
        });
    }
    Ok(SweepResult { cells, breakdowns })
}

#[allow(clippy::too_many_arguments)]
fn sweep_cell(
    r: f64,
    d: usize,
    ri: usize,
    di: usize,
    n_per_cluster: usize,
    nuisance_std: f64,
    seeds: &[u64],
    kernel: &KernelConfig,
) -> Result<SweepCell> {
    let mut vals = Vec::with_capacity(seeds.len());
    for &s in seeds {
        let cfg = TwoClustersConfig {
            n_per_cluster,
            r,
            d_nuisance: d,
            nuisance_std,
            seed: exec::derive_seed(s, &[ri as u64, di as u64]),
        };
        let ds = gen_two_clusters(&cfg)?;
        let corr = eigvec_label_correlation(&ds.data, &ds.labels, kernel)?;
        vals.push(corr.value);
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(SweepCell {
        r,
        d,
        mean_corr: mean,
        std_corr: var.sqrt(),
    })
}

fn locate_crossing(row: &[SweepCell], d_grid: &[usize], threshold: f64) -> Option<f64> {
    if row[0].mean_corr < threshold {
        return Some(d_grid[0] as f64);
    }
    for w in 1..row.len() {
        let prev = row[w - 1].mean_corr;
        let cur = row[w].mean_corr;
        if cur < threshold {
            let d0 = d_grid[w - 1] as f64;
            let d1 = d_grid[w] as f64;
            let frac = (prev - threshold) / (prev - cur);
            return Some(d0 + frac * (d1 - d0));
        }
    }
    None
}

/// Least-squares slope of `ln y` against `ln x`; `None` when fewer than
/// two usable points.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|(x, _)| x).sum::<f64>() / n;
    let my = logs.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in &logs {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    if den == 0.0 {
        None
    } else {
        Some(num / den)
    }
}
