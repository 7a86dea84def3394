//! Clipped-Gaussian stochastic gates over input features.
//!
//! A gate is `z = clamp(mu + eps, 0, 1)` with `eps ~ N(0, sigma^2)`. The
//! clip puts point masses at exactly 0 and 1, so a trained gate acts as a
//! soft feature mask whose open probability `P(z > 0)` is differentiable
//! in `mu`.

use libm::erf;
use ndarray::Array1;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Trainable gate means plus the fixed noise scale.
#[derive(Debug, Clone, PartialEq)]
pub struct GateParams {
    pub mu: Array1<f64>,
    /// Noise standard deviation; held constant across training.
    pub sigma: f64,
}

impl GateParams {
    pub fn new(mu: Array1<f64>, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::invalid(format!(
                "gate noise scale must be positive, got {sigma}"
            )));
        }
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("gate means must be finite"));
        }
        Ok(GateParams { mu, sigma })
    }

    /// Standard initialization: every mean at 0.5.
    pub fn init(d: usize, sigma: f64) -> Result<Self> {
        GateParams::new(Array1::from_elem(d, 0.5), sigma)
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }
}

/// One realization of the gates; the noise draws are kept so that a loss
/// and its gradient can be evaluated at the same sample.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSample {
    pub z: Array1<f64>,
    pub epsilon: Array1<f64>,
}

impl GateSample {
    /// Builds the sample from given noise; `z_i = clamp(mu_i + eps_i, 0, 1)`.
    pub fn from_noise(params: &GateParams, epsilon: Array1<f64>) -> Result<Self> {
        if epsilon.len() != params.len() {
            return Err(Error::DimensionMismatch {
                expected: params.len(),
                got: epsilon.len(),
                context: "gate sample noise length",
            });
        }
        let z = params
            .mu
            .iter()
            .zip(epsilon.iter())
            .map(|(&m, &e)| (m + e).clamp(0.0, 1.0))
            .collect();
        Ok(GateSample { z, epsilon })
    }
}

/// Draws one gate vector; noise is `sigma`-scaled standard Gaussian.
pub fn sample_gates<R: Rng + ?Sized>(params: &GateParams, rng: &mut R) -> GateSample {
    let epsilon = Array1::from_iter(
        (0..params.len()).map(|_| params.sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)),
    );
    GateSample::from_noise(params, epsilon).expect("lengths match by construction")
}

/// Noise-free gates `clamp(mu, 0, 1)`; used for final selection.
pub fn deterministic_gates(params: &GateParams) -> Array1<f64> {
    params.mu.mapv(|m| m.clamp(0.0, 1.0))
}

/// `P(z_i > 0) = 1/2 - 1/2 erf(-mu_i / (sqrt(2) sigma))`.
pub fn open_probability(params: &GateParams) -> Array1<f64> {
    let s = params.sigma;
    params
        .mu
        .mapv(|m| 0.5 - 0.5 * erf(-m / (std::f64::consts::SQRT_2 * s)))
}

/// Derivative of [`open_probability`] in each `mu_i`: the Gaussian density
/// `exp(-mu_i^2 / (2 sigma^2)) / (sqrt(2 pi) sigma)`.
pub fn open_probability_grad(params: &GateParams) -> Array1<f64> {
    let s = params.sigma;
    let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * s);
    params.mu.mapv(|m| norm * (-m * m / (2.0 * s * s)).exp())
}

/// Straight-through subgradient of the clip: `dz_i/dmu_i = 1` strictly
/// inside (0, 1), else 0. Boundary points take 0.
pub fn gate_subgradient_mask(params: &GateParams, sample: &GateSample) -> Array1<f64> {
    params
        .mu
        .iter()
        .zip(sample.epsilon.iter())
        .map(|(&m, &e)| {
            let pre = m + e;
            if pre > 0.0 && pre < 1.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}
