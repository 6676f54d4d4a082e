//! Information-geometric priors over qubit (and qutrit) density matrices.
//!
//! Bures and Husimi–Fisher metrics, their escort (`q`) extensions, the
//! volume-element priors they induce, Bayesian updates under spin-measurement
//! likelihoods, and a comparative noninformativity test built on relative
//! entropy. Linear algebra, models and metrics are generic over the scalar
//! type; the integration layer works in `f64`.

pub mod bayes;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod noninform;
pub mod priors;
pub mod quadrature;
pub mod scalar;
pub mod special;

pub use bayes::{info_gain, info_gain_qext, likelihood, likelihood_q, posterior, LikelihoodField, MeasurementSpec};
pub use error::{Error, Result};
pub use noninform::{clarke_compare, kl, rank, ClarkeVerdict, KLResult, RankingReport, Verdict};
pub use priors::{
    build_prior, marginal, pure_state_dominance, MarginalCurve, MarginalMode, MarginalVar, PbConvention, PriorConfig,
    PriorDensity, PriorDomain, PriorName,
};
pub use quadrature::{integrate, mc_check, Axis, IntegrationResult, IntegrationSpec};
pub use scalar::Scalar;

pub type HermitianMatrix = linalg::HermitianMatrix<f64>;
pub type EigenSystem = linalg::EigenSystem<f64>;
pub type MetricTensor = metrics::MetricTensor<f64>;
pub type BlochPoint = models::BlochPoint<f64>;
pub type EscortPoint = models::EscortPoint<f64>;
pub type SpinOneFamilyPoint = models::SpinOneFamilyPoint<f64>;
pub type AbeRajPoint = models::AbeRajPoint<f64>;
