//! # fademac
//!
//! Achievable-rate and power-allocation toolkit for sending a pair of
//! correlated sources over a fast-fading Gaussian multiple access channel
//! when the transmitters only see a noisy estimate of the fade state.
//!
//! The channel is `Y = H1*X1 + H2*X2 + N` with iid fade pairs `(H1, H2)` on a
//! finite alphabet, transmitter-side state estimates `(Ĥ1, Ĥ2)` (perfect, or
//! the output of a per-user binary symmetric channel), and perfect receiver
//! state information. Everything is computed by exact enumeration over the
//! finite joint state space; seeded Monte Carlo estimators exist purely to
//! cross-check the closed forms.
//!
//! The pieces, bottom up:
//!
//! - [`finite_prob`]: joint pmfs, entropies, and channel-state models.
//! - [`gmac_rates`]: the three achievable-rate bounds for a state-dependent
//!   Gaussian power policy and input correlation, plus their policy gradient.
//! - [`power_opt`]: max-sum-rate power allocation under average power
//!   constraints (projected gradient ascent with a KKT certificate), with
//!   uniform and TDMA baselines.
//! - [`source_models`]: left-hand sides of the rate conditions — entropy
//!   triples for discrete sources and closed-form vector-quantizer
//!   rate/distortion quantities for bivariate Gaussian sources.
//! - [`planner`]: feasibility verdicts, input-correlation tuning, minimum
//!   distortion search over rate grids, and figure sweeps.
//! - [`cli_io`]: scenario files, the `fademac` command line, and CSV output.

pub mod cli_io;
pub mod finite_prob;
pub mod gmac_rates;
pub mod planner;
pub mod power_opt;
pub mod source_models;

pub use finite_prob::{ChannelStateModel, CsirMode, FiniteJointPmf};
pub use gmac_rates::{GmacParams, PowerPolicy, RateTriple};
pub use planner::{DistortionResult, FeasibilityReport, Scenario, Verdict};
pub use power_opt::OptimizationResult;
pub use source_models::{DiscreteSource, GaussianLtConfig, GaussianLtDerived};

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("pmf probabilities sum to {sum} (must be 1 within 1e-12)")]
    NotNormalized { sum: f64 },

    #[error("negative probability {value} at outcome index {index}")]
    NegativeProbability { index: usize, value: f64 },

    #[error("outcome labels are not distinct")]
    DuplicateLabel,

    #[error("pmf is empty")]
    EmptyPmf,

    #[error("non-finite value in pmf definition")]
    NonFinitePmf,

    #[error("expected a pmf over {expected}-tuples, got arity {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("coordinate index {index} out of range for arity {arity}")]
    BadCoordinate { index: usize, arity: usize },

    #[error("fade alphabet for transmitter {user} must have exactly two values, got {got}")]
    NonBinaryAlphabet { user: usize, got: usize },

    #[error("BSC crossover probability {0} outside [0, 0.5]")]
    CrossoverOutOfRange(f64),

    #[error("fade amplitudes must be nonnegative, got {0}")]
    NegativeFade(f64),

    #[error("state-model joint does not reproduce the declared fade distribution")]
    FadeMarginalMismatch,

    #[error("receiver state information is not a perfect copy of the fade pair")]
    CsirNotPerfect,

    #[error("negative power {value} for transmitter {user}")]
    NegativePower { user: usize, value: f64 },

    #[error("input correlation {0} outside [-1, 1]")]
    CorrelationOutOfRange(f64),

    #[error("power policy has no entry for transmitter-side state ({0}, {1})")]
    MissingPolicyState(f64, f64),

    #[error("power policy defines state ({0}, {1}) twice")]
    DuplicatePolicyState(f64, f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("policy baseline needs perfect transmitter state information")]
    RequiresPerfectCsit,

    #[error("source correlation {0} outside (-1, 1)")]
    SourceCorrelationOutOfRange(f64),

    #[error("quantization rate {0} must be nonnegative and finite")]
    BadQuantizationRate(f64),

    #[error("Monte Carlo estimator needs at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("scenario config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
