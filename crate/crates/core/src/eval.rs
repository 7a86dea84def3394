//! Clustering and selection-quality evaluation: k-means, spectral
//! clustering, permutation-optimal clustering accuracy, gate
//! precision/recall, and the second-eigenvector label probe.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gates::{open_probability, GateParams};
use crate::graph::{gaussian_kernel, normalized_kernel_spectrum, rw_spectrum, KernelConfig};

const KMEANS_MAX_ITER: usize = 100;

/// Hard cluster labels in `[0, k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub k: usize,
}

impl ClusterAssignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("cluster count must be >= 1"));
        }
        if labels.iter().any(|&l| l >= k) {
            return Err(Error::invalid("cluster label out of range"));
        }
        Ok(ClusterAssignment { labels, k })
    }

    /// Infers `k` as one past the largest label.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().max().map_or(0, |&m| m + 1).max(1);
        ClusterAssignment::new(labels, k)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Lloyd's algorithm with k-means++ seeding, best of `n_init` restarts by
/// within-cluster sum of squares. Deterministic per seed.
pub fn kmeans(x: &Array2<f64>, k: usize, n_init: usize, seed: u64) -> Result<ClusterAssignment> {
    let n = x.nrows();
    if k == 0 || n_init == 0 {
        return Err(Error::invalid("kmeans: k and n_init must be >= 1"));
    }
    if k > n {
        return Err(Error::invalid(format!(
            "kmeans: k={k} exceeds sample count {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..n_init {
        let (wcss, labels) = lloyd_once(x, k, &mut rng);
        let better = match &best {
            Some((b, _)) => wcss < *b,
            None => true,
        };
        if better {
            best = Some((wcss, labels));
        }
    }
    let (_, labels) = best.expect("n_init >= 1");
    ClusterAssignment::new(labels, k)
}

fn lloyd_once<R: Rng + ?Sized>(x: &Array2<f64>, k: usize, rng: &mut R) -> (f64, Vec<usize>) {
    let (n, d) = x.dim();
    let mut centers = kmeanspp_seed(x, k, rng);
    let mut labels = vec![0usize; n];
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        // assignment step; ties to the lowest center index
        for i in 0..n {
            let mut best_c = 0usize;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let dist = row_sq_dist(&x.row(i), &centers.row(c));
                if dist < best_d {
                    best_d = dist;
                    best_c = c;
                }
            }
            if labels[i] != best_c {
                labels[i] = best_c;
                changed = true;
            }
        }
        // update step
        let mut sums = Array2::<f64>::zeros((k, d));
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            let mut row = sums.row_mut(labels[i]);
            row += &x.row(i);
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                centers.row_mut(c).assign(&(&sums.row(c) * inv));
            } else {
                // empty cluster: restart it at the point farthest from its
                // current center assignment
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = row_sq_dist(&x.row(a), &centers.row(labels[a]));
                        let db = row_sq_dist(&x.row(b), &centers.row(labels[b]));
                        f64::total_cmp(&da, &db)
                    })
                    .expect("n >= 1");
                centers.row_mut(c).assign(&x.row(far));
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut wcss = 0.0;
    for i in 0..n {
        wcss += row_sq_dist(&x.row(i), &centers.row(labels[i]));
    }
    (wcss, labels)
}

fn kmeanspp_seed<R: Rng + ?Sized>(x: &Array2<f64>, k: usize, rng: &mut R) -> Array2<f64> {
    let (n, d) = x.dim();
    let mut centers = Array2::<f64>::zeros((k, d));
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    centers.row_mut(0).assign(&x.row(first));
    chosen[first] = true;
    let mut min_sq = vec![0.0f64; n];
    for i in 0..n {
        min_sq[i] = row_sq_dist(&x.row(i), &centers.row(0));
    }
    for c in 1..k {
        let total: f64 = min_sq.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in min_sq.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // all remaining mass zero (duplicate points): first unchosen
            (0..n).find(|&i| !chosen[i]).unwrap_or(0)
        };
        centers.row_mut(c).assign(&x.row(pick));
        chosen[pick] = true;
        for i in 0..n {
            min_sq[i] = min_sq[i].min(row_sq_dist(&x.row(i), &centers.row(c)));
        }
    }
    centers
}

fn row_sq_dist(a: &ndarray::ArrayView1<f64>, b: &ndarray::ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let diff = x - y;
            diff * diff
        })
        .sum()
}

/// Spectral clustering: top-k eigenvectors of the normalized kernel, rows
/// renormalized to unit length, then k-means on the embedding.
pub fn spectral_clustering(
    x: &Array2<f64>,
    k: usize,
    cfg: &KernelConfig,
    seed: u64,
) -> Result<ClusterAssignment> {
    let n = x.nrows();
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "spectral clustering: k={k} out of range for n={n}"
        )));
    }
    let g = gaussian_kernel(x, cfg)?;
    let spec = normalized_kernel_spectrum(&g)?;
    let mut embedding = Array2::<f64>::zeros((n, k));
    for j in 0..k {
        embedding.column_mut(j).assign(&spec.vectors.column(j));
    }
    for mut row in embedding.axis_iter_mut(Axis(0)) {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            row.mapv_inplace(|v| v / norm);
        }
    }
    kmeans(&embedding, k, 10, seed)
}

/// Largest achievable agreement fraction over bijective relabelings of
/// `pred` against `truth`, solved exactly on the confusion matrix.
pub fn clustering_accuracy(pred: &ClusterAssignment, truth: &ClusterAssignment) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: pred.len(),
            context: "clustering accuracy label lengths",
        });
    }
    if pred.is_empty() {
        return Err(Error::invalid("clustering accuracy of empty labelings"));
    }
    let k = pred.k.max(truth.k);
    let mut confusion = Array2::<f64>::zeros((k, k));
    for (&a, &b) in pred.labels.iter().zip(truth.labels.iter()) {
        confusion[[a, b]] += 1.0;
    }
    let cost = confusion.mapv(|v| -v);
    let (neg_agreement, _) = hungarian_min(&cost);
    Ok(-neg_agreement / pred.len() as f64)
}

/// Exact minimum-cost assignment on a square matrix (Hungarian algorithm
/// with potentials, O(k^3)). Returns the total cost and, per row, the
/// assigned column.
pub fn hungarian_min(cost: &Array2<f64>) -> (f64, Vec<usize>) {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "hungarian_min needs a square matrix");
    if n == 0 {
        return (0.0, vec![]);
    }
    let inf = f64::INFINITY;
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; n];
    let mut total = 0.0;
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
            total += cost[[p[j] - 1, j - 1]];
        }
    }
    (total, row_to_col)
}

/// Probability-weighted selection quality against a ground-truth
/// informative set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    /// Set when every open probability is zero, which leaves precision
    /// undefined; it is then reported as 0.
    pub degenerate: bool,
}

/// `precision = sum_{S*} p_i / sum_i p_i`, `recall = sum_{S*} p_i / |S*|`
/// with `p` the open probabilities.
pub fn selection_precision_recall(
    params: &GateParams,
    informative: &[usize],
) -> Result<PrecisionRecall> {
    let d = params.len();
    if informative.is_empty() {
        return Err(Error::invalid("informative set must be nonempty"));
    }
    let mut seen = vec![false; d];
    for &i in informative {
        if i >= d {
            return Err(Error::invalid(format!(
                "informative index {i} out of range for d={d}"
            )));
        }
        if seen[i] {
            return Err(Error::invalid(format!("informative index {i} repeated")));
        }
        seen[i] = true;
    }
    let probs = open_probability(params);
    let total: f64 = probs.sum();
    let inf_mass: f64 = informative.iter().map(|&i| probs[i]).sum();
    let (precision, degenerate) = if total > 0.0 {
        (inf_mass / total, false)
    } else {
        (0.0, true)
    };
    Ok(PrecisionRecall {
        precision,
        recall: inf_mass / informative.len() as f64,
        degenerate,
    })
}

/// Absolute Pearson correlation between an eigenvector and ±1-coded
/// labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub value: f64,
    /// Set when either side has (numerically) zero variance; the value is
    /// then reported as 0.
    pub degenerate: bool,
}

/// |Pearson correlation| between the second eigenvector of the
/// random-walk operator built on `x` and the two-class labels.
pub fn eigvec_label_correlation(
    x: &Array2<f64>,
    truth: &ClusterAssignment,
    cfg: &KernelConfig,
) -> Result<Correlation> {
    let n = x.nrows();
    if truth.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: truth.len(),
            context: "label count vs sample count",
        });
    }
    if truth.labels.iter().any(|&l| l > 1) {
        return Err(Error::invalid("eigvec_label_correlation needs two classes"));
    }
    if n < 2 {
        return Err(Error::invalid("need at least 2 samples"));
    }
    let g = gaussian_kernel(x, cfg)?;
    let spec = rw_spectrum(&g)?;
    let psi2 = spec.vectors.column(1);
    let y = Array1::from_iter(
        truth
            .labels
            .iter()
            .map(|&l| if l == 0 { -1.0 } else { 1.0 }),
    );
    Ok(abs_pearson(&psi2.to_owned(), &y))
}

fn abs_pearson(a: &Array1<f64>, b: &Array1<f64>) -> Correlation {
    let n = a.len() as f64;
    let ma = a.sum() / n;
    let mb = b.sum() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let da = x - ma;
        let db = y - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if va < 1e-24 || vb < 1e-24 {
        return Correlation {
            value: 0.0,
            degenerate: true,
        };
    }
    Correlation {
        value: (cov / (va.sqrt() * vb.sqrt())).abs(),
        degenerate: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn separated_masses_split_perfectly() {
        let x = array![
            [0.0, 0.1],
            [0.1, -0.1],
            [-0.1, 0.0],
            [10.0, 10.1],
            [10.1, 9.9],
            [9.9, 10.0]
        ];
        let got = kmeans(&x, 2, 5, 3).unwrap();
        let truth = ClusterAssignment::new(vec![0, 0, 0, 1, 1, 1], 2).unwrap();
        assert_eq!(clustering_accuracy(&got, &truth).unwrap(), 1.0);
    }

    #[test]
    fn k_equals_n_has_zero_wcss() {
        let x = array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [2.0, 2.0]];
        let a = kmeans(&x, 4, 3, 1).unwrap();
        let mut seen = a.labels.clone();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3]);
    }

    #[test]
    fn unit_square_corners_pair_along_edges() {
        let x = array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let a = kmeans(&x, 2, 10, 7).unwrap();
        // optimal 2-partition pairs along an edge; WCSS = 2 * (side^2 / 2)
        let l = &a.labels;
        let edge_pairing = (l[0] == l[1] && l[2] == l[3] && l[0] != l[2])
            || (l[0] == l[2] && l[1] == l[3] && l[0] != l[1]);
        assert!(edge_pairing, "labels {l:?} not an edge pairing");
        let mut wcss = 0.0;
        for c in 0..2 {
            let members: Vec<usize> = (0..4).filter(|&i| l[i] == c).collect();
            let cx = members.iter().map(|&i| x[[i, 0]]).sum::<f64>() / members.len() as f64;
            let cy = members.iter().map(|&i| x[[i, 1]]).sum::<f64>() / members.len() as f64;
            for &i in &members {
                wcss += (x[[i, 0]] - cx).powi(2) + (x[[i, 1]] - cy).powi(2);
            }
        }
        assert_abs_diff_eq!(wcss, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn kmeans_rejects_k_above_n() {
        let x = array![[0.0], [1.0]];
        assert!(kmeans(&x, 3, 1, 0).is_err());
    }

    #[test]
    fn spectral_splits_disconnected_groups() {
        // two tight pairs far apart: cross-kernel underflows to ~0
        let x = array![[0.0, 0.0], [0.2, 0.1], [100.0, 100.0], [100.2, 99.9]];
        let a = spectral_clustering(&x, 2, &KernelConfig::global(1.0), 5).unwrap();
        let truth = ClusterAssignment::new(vec![0, 0, 1, 1], 2).unwrap();
        assert_eq!(clustering_accuracy(&a, &truth).unwrap(), 1.0);
    }

    #[test]
    fn spectral_with_k1_is_single_cluster() {
        let x = array![[0.0, 0.0], [0.2, 0.1], [1.0, 1.0]];
        let a = spectral_clustering(&x, 1, &KernelConfig::global(1.0), 0).unwrap();
        assert_eq!(a.labels, vec![0, 0, 0]);
    }

    #[test]
    fn accuracy_identity_and_relabeling() {
        let truth = ClusterAssignment::new(vec![0, 0, 1, 1], 2).unwrap();
        assert_eq!(clustering_accuracy(&truth, &truth).unwrap(), 1.0);
        let flipped = ClusterAssignment::new(vec![1, 1, 0, 0], 2).unwrap();
        assert_eq!(clustering_accuracy(&flipped, &truth).unwrap(), 1.0);
    }

    #[test]
    fn accuracy_hand_case() {
        let pred = ClusterAssignment::new(vec![0, 1, 1, 1], 2).unwrap();
        let truth = ClusterAssignment::new(vec![0, 0, 1, 1], 2).unwrap();
        assert_abs_diff_eq!(clustering_accuracy(&pred, &truth).unwrap(), 0.75);
    }

    #[test]
    fn accuracy_rejects_mismatched_lengths() {
        let a = ClusterAssignment::new(vec![0, 1], 2).unwrap();
        let b = ClusterAssignment::new(vec![0, 1, 1], 2).unwrap();
        assert!(clustering_accuracy(&a, &b).is_err());
    }

    #[test]
    fn hungarian_matches_brute_force() {
        // fixed LCG-generated cost matrices, all permutations enumerated
        let mut state = 0x2545f4914f6cdd1du64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64) / (u32::MAX as f64)
        };
        for n in 2..=5usize {
            for _ in 0..5 {
                let cost = Array2::from_shape_fn((n, n), |_| next() * 10.0 - 5.0);
                let (got, assign) = hungarian_min(&cost);
                // assignment must be a permutation and sum to the reported cost
                let mut seen = vec![false; n];
                let mut sum = 0.0;
                for (r, &c) in assign.iter().enumerate() {
                    assert!(!seen[c]);
                    seen[c] = true;
                    sum += cost[[r, c]];
                }
                assert_abs_diff_eq!(sum, got, epsilon = 1e-10);
                let best = brute_force_min(&cost);
                assert_abs_diff_eq!(got, best, epsilon = 1e-10);
            }
        }
    }

    fn brute_force_min(cost: &Array2<f64>) -> f64 {
        let n = cost.nrows();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, cost, &mut best);
        best
    }

    fn permute(perm: &mut Vec<usize>, i: usize, cost: &Array2<f64>, best: &mut f64) {
        let n = perm.len();
        if i == n {
            let total: f64 = (0..n).map(|r| cost[[r, perm[r]]]).sum();
            if total < *best {
                *best = total;
            }
            return;
        }
        for j in i..n {
            perm.swap(i, j);
            permute(perm, i + 1, cost, best);
            perm.swap(i, j);
        }
    }

    #[test]
    fn precision_recall_frozen_examples() {
        // exact p = 1 / 0 via saturated means at sigma 0.5
        let open = 10.0;
        let shut = -10.0;
        let p = GateParams::new(
            Array1::from_vec(vec![open, open, shut, shut, shut]),
            0.5,
        )
        .unwrap();
        let pr = selection_precision_recall(&p, &[0, 1]).unwrap();
        assert_eq!((pr.precision, pr.recall), (1.0, 1.0));
        assert!(!pr.degenerate);

        let p = GateParams::new(
            Array1::from_vec(vec![open, open, open, shut, shut]),
            0.5,
        )
        .unwrap();
        let pr = selection_precision_recall(&p, &[0, 1]).unwrap();
        assert_abs_diff_eq!(pr.precision, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pr.recall, 1.0, epsilon = 1e-12);

        let p = GateParams::new(Array1::from_elem(10, 0.0), 0.5).unwrap();
        let pr = selection_precision_recall(&p, &[0, 1]).unwrap();
        assert_abs_diff_eq!(pr.precision, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(pr.recall, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn all_closed_gates_flagged_degenerate() {
        let p = GateParams::new(Array1::from_elem(4, -40.0), 0.5).unwrap();
        let pr = selection_precision_recall(&p, &[0]).unwrap();
        assert_eq!(pr.precision, 0.0);
        assert!(pr.degenerate);
    }

    #[test]
    fn precision_recall_input_validation() {
        let p = GateParams::new(Array1::from_elem(3, 0.5), 0.5).unwrap();
        assert!(selection_precision_recall(&p, &[]).is_err());
        assert!(selection_precision_recall(&p, &[3]).is_err());
        assert!(selection_precision_recall(&p, &[1, 1]).is_err());
    }

    #[test]
    fn far_clusters_correlate_with_second_eigenvector() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut state = 99u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 33) as f64) / (u32::MAX as f64) - 0.5
        };
        for i in 0..20 {
            let base = if i < 10 { 0.0 } else { 8.0 };
            rows.push([base + 0.2 * next(), 0.2 * next()]);
            labels.push(usize::from(i >= 10));
        }
        let x = Array2::from_shape_fn((20, 2), |(i, j)| rows[i][j]);
        let truth = ClusterAssignment::new(labels, 2).unwrap();
        let corr = eigvec_label_correlation(&x, &truth, &KernelConfig::global(1.0)).unwrap();
        assert!(!corr.degenerate);
        assert!(corr.value > 0.99, "corr={}", corr.value);
    }

    #[test]
    fn shuffled_labels_decorrelate() {
        let mut state = 1234u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 33) as f64) / (u32::MAX as f64) - 0.5
        };
        let x = Array2::from_shape_fn((100, 2), |_| next() * 2.0);
        // alternating labels bear no relation to the sampled geometry
        let labels: Vec<usize> = (0..100).map(|i| i % 2).collect();
        let truth = ClusterAssignment::new(labels, 2).unwrap();
        let corr = eigvec_label_correlation(&x, &truth, &KernelConfig::global(1.0)).unwrap();
        assert!(corr.value < 0.2, "corr={}", corr.value);
    }

    proptest! {
        #[test]
        fn accuracy_invariant_to_bijective_relabeling(
            labels in prop::collection::vec(0usize..3, 6..20),
            swap in 0usize..3,
        ) {
            let truth = ClusterAssignment::new(labels.clone(), 3).unwrap();
            // relabel via a 3-cycle rotation applied `swap` times
            let mapped: Vec<usize> = labels.iter().map(|&l| (l + swap) % 3).collect();
            let pred = ClusterAssignment::new(mapped, 3).unwrap();
            let acc = clustering_accuracy(&pred, &truth).unwrap();
            prop_assert!((acc - 1.0).abs() < 1e-12);
        }

        #[test]
        fn accuracy_at_least_one_over_k_for_balanced_truth(
            pred_labels in prop::collection::vec(0usize..3, 30),
        ) {
            // balanced 3-class truth
            let truth_labels: Vec<usize> = (0..30).map(|i| i / 10).collect();
            let truth = ClusterAssignment::new(truth_labels, 3).unwrap();
            let pred = ClusterAssignment::new(pred_labels, 3).unwrap();
            let acc = clustering_accuracy(&pred, &truth).unwrap();
            prop_assert!(acc >= 1.0 / 3.0 - 1e-12);
        }
    }
}
