//! Differentiable feature selection: the gated-Laplacian losses, their
//! analytic gradient, the SGD training loop, and final selection.
//!
//! Each step draws one gate vector `z`, forms the gated batch
//! `X_g = X * diag(z)`, rebuilds the Gaussian kernel and random-walk
//! operator `P = D^-1 K` from the gated rows, and scores smoothness as
//! `S = Tr[X_g' P^t X_g]`. Two losses are offered: a regularized form
//! `-S/m + lambda * sum_i p_i` and a parameter-free ratio
//! `-S / (m * sum_i p_i + delta)`, where `p_i` is the open-gate
//! probability. The gradient differentiates through the kernel and the
//! degree normalization; the bandwidth is recomputed from the gated batch
//! each step but treated as a constant within the step.

use ndarray::{Array1, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::eval::selection_precision_recall;
use crate::gates::{
    deterministic_gates, gate_subgradient_mask, open_probability, open_probability_grad,
    sample_gates, GateParams, GateSample,
};
use crate::graph::{
    gaussian_kernel_with_denominator, kernel_from_sq_dists, local_bandwidth_from_sq_dists,
    pairwise_sq_dists, BandwidthRule, DenominatorConvention, GraphArtifacts, KernelConfig,
};

/// Lower clamp for the kernel exponent denominator. When every gate closes
/// the gated rows coincide and the local bandwidth collapses to zero; the
/// clamp keeps the kernel defined (all-ones) so training can recover.
const BETA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LossVariant {
    /// `-S/m + lambda * sum_i p_i`.
    LambdaRegularized { lambda: f64 },
    /// `-S / (m * sum_i p_i + delta)`.
    ParameterFree { delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BatchSize {
    Full,
    Size(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: LossVariant,
    /// Power `t` applied to the random-walk operator.
    pub power: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch: BatchSize,
    pub kernel: KernelConfig,
    /// Gate noise scale; fixed across training.
    pub sigma: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss: LossVariant::ParameterFree { delta: 1e-8 },
            power: 2,
            learning_rate: 1.0,
            epochs: 5000,
            batch: BatchSize::Full,
            kernel: KernelConfig::default(),
            sigma: 0.5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        match self.loss {
            LossVariant::LambdaRegularized { lambda } => {
                if !(lambda >= 0.0) {
                    return Err(Error::invalid(format!(
                        "lambda must be nonnegative, got {lambda}"
                    )));
                }
            }
            LossVariant::ParameterFree { delta } => {
                if !(delta > 0.0) {
                    return Err(Error::invalid(format!("delta must be positive, got {delta}")));
                }
            }
        }
        if self.power == 0 {
            return Err(Error::invalid("power t must be >= 1"));
        }
        if !(self.learning_rate >= 0.0) {
            return Err(Error::invalid(format!(
                "learning rate must be nonnegative, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be >= 1"));
        }
        if let BatchSize::Size(b) = self.batch {
            if b < 2 {
                return Err(Error::invalid("batch size must be >= 2"));
            }
        }
        if !(self.sigma > 0.0) {
            return Err(Error::invalid(format!(
                "gate noise scale must be positive, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Per-epoch training record. `precision`/`recall` are present only when
/// ground-truth informative features were supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub sum_open_prob: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainTrace {
    pub records: Vec<EpochRecord>,
}

impl TrainTrace {
    /// CSV with header `epoch,loss,sum_open_prob,precision,recall`;
    /// absent metrics render as empty fields. Formatting is the shortest
    /// round-trip decimal, so equal runs serialize to equal bytes.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,sum_open_prob,precision,recall\n");
        for r in &self.records {
            let precision = r.precision.map(|v| v.to_string()).unwrap_or_default();
            let recall = r.recall.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.epoch, r.loss, r.sum_open_prob, precision, recall
            ));
        }
        out
    }
}

/// Final gate state mapped to feature choices. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub open_probabilities: Vec<f64>,
    /// Features whose noise-free gate is open (`mu > 0`), ascending; when
    /// a top-k cut was requested, the k highest-probability features.
    pub retained: Vec<usize>,
    /// All features sorted by open probability descending, ties by index.
    pub ranking: Vec<usize>,
}

impl SelectionResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: GateParams,
    pub trace: TrainTrace,
    pub selection: SelectionResult,
}

/// Value of the regularized loss at the given sample.
pub fn loss_lambda(
    x: &Array2<f64>,
    params: &GateParams,
    sample: &GateSample,
    cfg: &TrainConfig,
) -> Result<f64> {
    if !matches!(cfg.loss, LossVariant::LambdaRegularized { .. }) {
        return Err(Error::invalid("config does not select the regularized loss"));
    }
    Ok(evaluate(x, params, sample, cfg, false)?.value)
}

/// Value of the parameter-free ratio loss at the given sample.
pub fn loss_paramfree(
    x: &Array2<f64>,
    params: &GateParams,
    sample: &GateSample,
    cfg: &TrainConfig,
) -> Result<f64> {
    if !matches!(cfg.loss, LossVariant::ParameterFree { .. }) {
        return Err(Error::invalid("config does not select the parameter-free loss"));
    }
    Ok(evaluate(x, params, sample, cfg, false)?.value)
}

/// Value of whichever loss the config selects.
pub fn loss_value(
    x: &Array2<f64>,
    params: &GateParams,
    sample: &GateSample,
    cfg: &TrainConfig,
) -> Result<f64> {
    Ok(evaluate(x, params, sample, cfg, false)?.value)
}

/// Loss value with the kernel denominator frozen by the caller instead of
/// resolved from the gated batch. Finite-difference checks against the
/// analytic gradient must hold the denominator fixed this way, because the
/// gradient treats it as a constant.
pub fn loss_value_at_beta(
    x: &Array2<f64>,
    params: &GateParams,
    sample: &GateSample,
    cfg: &TrainConfig,
    beta: f64,
) -> Result<f64> {
    Ok(evaluate_at_beta(x, params, sample, cfg, beta, false)?.value)
}

/// Analytic gradient of the selected loss with respect to the gate means,
/// evaluated at the same sample used for the value.
pub fn loss_gradient(
    x: &Array2<f64>,
    params: &GateParams,
    sample: &GateSample,
    cfg: &TrainConfig,
) -> Result<Array1<f64>> {
    Ok(evaluate(x, params, sample, cfg, true)?
        .grad
        .expect("gradient requested"))
}

/// Gradient twin of [`loss_value_at_beta`].
pub fn loss_gradient_at_beta(
    x: &Array2<f64>,
    params: &GateParams,
    sample: &GateSample,
    cfg: &TrainConfig,
    beta: f64,
) -> Result<Array1<f64>> {
    Ok(evaluate_at_beta(x, params, sample, cfg, beta, true)?
        .grad
        .expect("gradient requested"))
}

/// The gated batch `x * diag(z)` together with its graph and the resolved
/// (clamped) kernel denominator, exactly as the training step builds them.
pub fn gated_artifacts(
    x: &Array2<f64>,
    z: &Array1<f64>,
    kernel: &KernelConfig,
) -> Result<(Array2<f64>, GraphArtifacts, f64)> {
    if z.len() != x.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            got: z.len(),
            context: "gate vector length",
        });
    }
    let gated = x * z;
    let sq = pairwise_sq_dists(&gated);
    let beta = resolve_beta_clamped(&sq, kernel)?;
    let artifacts = gaussian_kernel_with_denominator(&gated, beta)?;
    Ok((gated, artifacts, beta))
}

/// Runs SGD on the gate means and returns the final parameters, the
/// per-epoch trace, and the resulting selection. When `ground_truth`
/// indices are given, precision and recall are logged every epoch.
pub fn train(
    x: &DataMatrix,
    cfg: &TrainConfig,
    ground_truth: Option<&[usize]>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let n = x.n_samples();
    let d = x.n_features();
    if let BatchSize::Size(b) = cfg.batch {
        if b > n {
            return Err(Error::invalid(format!(
                "batch size {b} exceeds sample count {n}"
            )));
        }
    }
    if let Some(truth) = ground_truth {
        if truth.is_empty() || truth.iter().any(|&i| i >= d) {
            return Err(Error::invalid(
                "ground-truth informative set must be nonempty feature indices",
            ));
        }
    }
    let mut params = GateParams::init(d, cfg.sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut records = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let sample = sample_gates(&params, &mut rng);
        let parts = match cfg.batch {
            BatchSize::Full => evaluate(&x.values, &params, &sample, cfg, true)?,
            BatchSize::Size(b) => {
                let picked = rand::seq::index::sample(&mut rng, n, b).into_vec();
                let batch = x.values.select(Axis(0), &picked);
                evaluate(&batch, &params, &sample, cfg, true)?
            }
        };
        let grad = parts.grad.expect("gradient requested");
        if !parts.value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::TrainDiverged {
                epoch,
                loss: parts.value,
                mu: params.mu.to_vec(),
            });
        }
        let probs = open_probability(&params);
        let (precision, recall) = match ground_truth {
            Some(truth) => {
                let pr = selection_precision_recall(&params, truth)?;
                (Some(pr.precision), Some(pr.recall))
            }
            None => (None, None),
        };
        records.push(EpochRecord {
            epoch,
            loss: parts.value,
            sum_open_prob: probs.sum(),
            precision,
            recall,
        });
        params
            .mu
            .iter_mut()
            .zip(grad.iter())
            .for_each(|(m, g)| *m -= cfg.learning_rate * g);
    }
    let selection = select_features(&params, None)?;
    Ok(TrainOutcome {
        params,
        trace: TrainTrace { records },
        selection,
    })
}

/// Maps trained gates to a selection. Without `top_k`, retained features
/// are those with `mu > 0`; with `top_k`, the k highest open
/// probabilities. Ties break by ascending feature index.
pub fn select_features(params: &GateParams, top_k: Option<usize>) -> Result<SelectionResult> {
    let d = params.len();
    let probs = open_probability(params);
    let mut ranking: Vec<usize> = (0..d).collect();
    ranking.sort_by(|&a, &b| f64::total_cmp(&probs[b], &probs[a]).then(a.cmp(&b)));
    let retained = match top_k {
        Some(k) => {
            if k > d {
                return Err(Error::invalid(format!(
                    "top_k {k} exceeds feature count {d}"
                )));
            }
            let mut kept: Vec<usize> = ranking[..k].to_vec();
            kept.sort_unstable();
            kept
        }
        None => {
            let det = deterministic_gates(params);
            (0..d).filter(|&i| det[i] > 0.0).collect()
        }
    };
    Ok(SelectionResult {
        open_probabilities: probs.to_vec(),
        retained,
        ranking,
    })
}

struct LossParts {
    value: f64,
    grad: Option<Array1<f64>>,
}

fn resolve_beta_clamped(sq: &Array2<f64>, kernel: &KernelConfig) -> Result<f64> {
    let m = sq.nrows();
    let scale = match kernel.rule {
        BandwidthRule::Global { sigma } => {
            if !(sigma > 0.0) {
                return Err(Error::invalid(format!(
                    "global bandwidth must be positive, got {sigma}"
                )));
            }
            sigma
        }
        BandwidthRule::LocalMax { k, c } => {
            if k == 0 || k >= m {
                return Err(Error::invalid(format!(
                    "bandwidth neighbor k must satisfy 1 <= k < batch size, got k={k}, m={m}"
                )));
            }
            if !(c > 0.0) {
                return Err(Error::invalid(format!(
                    "bandwidth factor c must be positive, got {c}"
                )));
            }
            local_bandwidth_from_sq_dists(sq, k, c)
        }
    };
    let beta = match kernel.convention {
        DenominatorConvention::TwoSigmaSquared => 2.0 * scale * scale,
        DenominatorConvention::SigmaHat => scale,
    };
    Ok(beta.max(BETA_FLOOR))
}

fn evaluate(
    x: &Array2<f64>,
    params: &GateParams,
    sample: &GateSample,
    cfg: &TrainConfig,
    want_grad: bool,
) -> Result<LossParts> {
    let gated = x * &sample.z;
    let sq = pairwise_sq_dists(&gated);
    let beta = resolve_beta_clamped(&sq, &cfg.kernel)?;
    evaluate_inner(x, &gated, &sq, params, sample, cfg, beta, want_grad)
}

fn evaluate_at_beta(
    x: &Array2<f64>,
    params: &GateParams,
    sample: &GateSample,
    cfg: &TrainConfig,
    beta: f64,
    want_grad: bool,
) -> Result<LossParts> {
    if !(beta > 0.0) {
        return Err(Error::DegenerateBandwidth(beta));
    }
    let gated = x * &sample.z;
    let sq = pairwise_sq_dists(&gated);
    evaluate_inner(x, &gated, &sq, params, sample, cfg, beta, want_grad)
}

#[allow(clippy::too_many_arguments)]
fn evaluate_inner(
    x: &Array2<f64>,
    gated: &Array2<f64>,
    sq: &Array2<f64>,
    params: &GateParams,
    sample: &GateSample,
    cfg: &TrainConfig,
    beta: f64,
    want_grad: bool,
) -> Result<LossParts> {
    let (m, d) = x.dim();
    if m < 2 {
        return Err(Error::invalid("loss needs at least 2 rows"));
    }
    if params.len() != d || sample.z.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: params.len(),
            context: "gate vector vs feature count",
        });
    }
    let t = cfg.power;
    let kernel = kernel_from_sq_dists(sq, beta);
    let degrees = kernel.sum_axis(Axis(1));
    let mut p_mat = kernel.clone();
    for i in 0..m {
        let inv = 1.0 / degrees[i];
        p_mat.row_mut(i).mapv_inplace(|v| v * inv);
    }

    // forward powers: y[s] = P^s G
    let mut y_pows: Vec<Array2<f64>> = Vec::with_capacity(t + 1);
    y_pows.push(gated.clone());
    for s in 0..t {
        let next = p_mat.dot(&y_pows[s]);
        y_pows.push(next);
    }
    let trace: f64 = (gated * &y_pows[t]).sum();

    let probs = open_probability(params);
    let sum_p = probs.sum();
    let mf = m as f64;
    let value = match cfg.loss {
        LossVariant::LambdaRegularized { lambda } => -trace / mf + lambda * sum_p,
        LossVariant::ParameterFree { delta } => -trace / (mf * sum_p + delta),
    };
    if !want_grad {
        return Ok(LossParts { value, grad: None });
    }

    // adjoint powers: zt[s] = (P')^s G
    let p_t = p_mat.t();
    let mut zt_pows: Vec<Array2<f64>> = Vec::with_capacity(t + 1);
    zt_pows.push(gated.clone());
    for s in 0..t {
        let next = p_t.dot(&zt_pows[s]);
        zt_pows.push(next);
    }

    // dS/dG path: sum_a [(P^t + (P')^t) G]_aj * X_aj
    let explicit = ((&y_pows[t] + &zt_pows[t]) * x).sum_axis(Axis(0));

    // dS/dP = sum_{s<t} [(P')^s G][P^{t-1-s} G]'
    let mut m_mat = Array2::<f64>::zeros((m, m));
    for s in 0..t {
        m_mat = m_mat + zt_pows[s].dot(&y_pows[t - 1 - s].t());
    }
    // dS/dK via P = D^-1 K: N_ce = (M_ce - rho_c) / D_c
    let rho = (&m_mat * &p_mat).sum_axis(Axis(1));
    let mut n_mat = m_mat;
    for c in 0..m {
        let inv = 1.0 / degrees[c];
        let r = rho[c];
        n_mat.row_mut(c).mapv_inplace(|v| (v - r) * inv);
    }
    // dK/dz through the squared distances; Q = N * K
    let q_mat = &n_mat * &kernel;
    let row_q = q_mat.sum_axis(Axis(1));
    let col_q = q_mat.sum_axis(Axis(0));
    let qx = q_mat.dot(x);
    let x_sq = x * x;
    let term_rows = row_q.dot(&x_sq);
    let term_cols = col_q.dot(&x_sq);
    let cross = (x * &qx).sum_axis(Axis(0));

    let mask = gate_subgradient_mask(params, sample);
    let mut ds_dmu = Array1::<f64>::zeros(d);
    for j in 0..d {
        let implicit =
            (-2.0 * sample.z[j] / beta) * (term_rows[j] + term_cols[j] - 2.0 * cross[j]);
        ds_dmu[j] = (explicit[j] + implicit) * mask[j];
    }

    let prob_grad = open_probability_grad(params);
    let grad = match cfg.loss {
        LossVariant::LambdaRegularized { lambda } => {
            Array1::from_shape_fn(d, |j| -ds_dmu[j] / mf + lambda * prob_grad[j])
        }
        LossVariant::ParameterFree { delta } => {
            let ratio_den = mf * sum_p + delta;
            Array1::from_shape_fn(d, |j| {
                -ds_dmu[j] / ratio_den + trace * mf * prob_grad[j] / (ratio_den * ratio_den)
            })
        }
    };
    Ok(LossParts {
        value,
        grad: Some(grad),
    })
}
