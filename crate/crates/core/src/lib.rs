//! Differentiable unsupervised feature selection on graph Laplacians.
//!
//! The crate trains stochastic input gates by gradient descent on a gated
//! Laplacian smoothness score, so that features carrying cluster structure
//! stay open while nuisance features close. It also ships the classic
//! Laplacian-score baseline, synthetic benchmark generators, a chi-square
//! analysis of how many nuisance dimensions a cluster geometry tolerates,
//! and a small clustering evaluation kit (k-means, spectral clustering,
//! matched accuracy).
//!
//! With the default `parallel` feature the heavy kernels (pairwise
//! distances, Monte-Carlo draws, sweep cells) fan out via rayon; built
//! with `--no-default-features` the same code runs sequentially and
//! produces bit-identical results.

pub mod data;
pub mod dufs;
pub mod eigen;
pub mod error;
pub mod eval;
pub mod exec;
pub mod gates;
pub mod graph;
pub mod score;
pub mod synth;

pub use data::{preprocess, DataMatrix};
pub use dufs::{
    loss_gradient, loss_lambda, loss_paramfree, loss_value, select_features, train, BatchSize,
    LossVariant, SelectionResult, TrainConfig, TrainOutcome, TrainTrace,
};
pub use error::{Error, Result};
pub use eval::{
    clustering_accuracy, eigvec_label_correlation, kmeans, selection_precision_recall,
    spectral_clustering, ClusterAssignment,
};
pub use gates::{
    deterministic_gates, open_probability, sample_gates, GateParams, GateSample,
};
pub use graph::{
    gaussian_kernel, BandwidthRule, DenominatorConvention, GraphArtifacts, KernelConfig,
};
pub use score::{laplacian_score_baseline, FeatureScores, ScoreConvention};
pub use synth::{
    chi_square_tail_bound, chi_square_tail_frequency, empirical_breakdown_sweep,
    gen_two_clusters, gen_two_moons, predicted_max_nuisance_dims, BoundInputs,
    ExponentConvention, NuisanceDist, SynthDataset, TwoClustersConfig, TwoMoonsConfig,
};
