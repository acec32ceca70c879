//! The three achievable-rate bounds for the fading Gaussian MAC.
//!
//! With jointly Gaussian channel inputs of per-state powers
//! `P1(ĥ1, ĥ2), P2(ĥ1, ĥ2)`, input correlation `ρ̃`, and noise variance `σ²`,
//! the achievable region is cut out by
//!
//! ```text
//! R1  bound: 0.5 E[ log2(1 + |H1|² P1(Ĥ) (1 - ρ̃²) / σ²) ]
//! R2  bound: 0.5 E[ log2(1 + |H2|² P2(Ĥ) (1 - ρ̃²) / σ²) ]
//! sum bound: 0.5 E[ log2(1 + (|H1|² P1(Ĥ) + |H2|² P2(Ĥ)
//!                             + 2 |H1||H2| ρ̃ sqrt(P1(Ĥ) P2(Ĥ))) / σ²) ]
//! ```
//!
//! where the expectation runs over the joint law of the true fades and the
//! transmitter-side estimates. Everything here evaluates those expectations
//! exactly by enumerating the finite support; [`mc_rate_triple`] is a seeded
//! sampling estimator of the same quantities kept around as an independent
//! cross-check.

use crate::finite_prob::ChannelStateModel;
use crate::{Error, Result};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const LN_2: f64 = std::f64::consts::LN_2;

/// A per-state transmit power pair, keyed by the transmitter-side estimate.
///
/// Powers are nonnegative and finite; states must be distinct. Lookup uses
/// exact equality on the state labels, which are always copies of alphabet
/// values rather than computed quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerPolicy {
    entries: Vec<((f64, f64), (f64, f64))>,
}

impl PowerPolicy {
    /// Validating constructor from `(state, (p1, p2))` entries.
    pub fn new(entries: Vec<((f64, f64), (f64, f64))>) -> Result<Self> {
        for &(state, (p1, p2)) in &entries {
            for (user, value) in [(1usize, p1), (2usize, p2)] {
                if !value.is_finite() || value < 0.0 {
                    return Err(Error::NegativePower { user, value });
                }
            }
            if entries.iter().filter(|(s, _)| *s == state).count() > 1 {
                return Err(Error::DuplicatePolicyState(state.0, state.1));
            }
        }
        Ok(Self { entries })
    }

    /// Build a policy over the model's positive-probability CSIT states.
    pub fn from_fn(
        model: &ChannelStateModel,
        mut f: impl FnMut((f64, f64)) -> (f64, f64),
    ) -> Result<Self> {
        Self::new(
            model
                .csit_states()
                .into_iter()
                .map(|(state, _)| (state, f(state)))
                .collect(),
        )
    }

    /// Power pair for a state, if defined.
    pub fn power_for(&self, state: (f64, f64)) -> Option<(f64, f64)> {
        self.entries
            .iter()
            .find(|(s, _)| *s == state)
            .map(|&(_, powers)| powers)
    }

    /// Iterate `(state, (p1, p2))` entries in definition order.
    pub fn iter(&self) -> impl Iterator<Item = &((f64, f64), (f64, f64))> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Average power drawn by each transmitter under the model's CSIT law.
    pub fn average_power(&self, model: &ChannelStateModel) -> Result<(f64, f64)> {
        let mut avg = (0.0, 0.0);
        for (state, weight) in model.csit_states() {
            let (p1, p2) = self
                .power_for(state)
                .ok_or(Error::MissingPolicyState(state.0, state.1))?;
            avg.0 += weight * p1;
            avg.1 += weight * p2;
        }
        Ok(avg)
    }
}

/// The three rate-bound components, in bits per channel use.
///
/// Also reused for the left-hand sides of the feasibility conditions, where
/// the components are the rates a source pair demands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateTriple {
    pub r1: f64,
    pub r2: f64,
    pub sum: f64,
}

impl RateTriple {
    pub const ZERO: RateTriple = RateTriple {
        r1: 0.0,
        r2: 0.0,
        sum: 0.0,
    };

    pub fn as_array(&self) -> [f64; 3] {
        [self.r1, self.r2, self.sum]
    }
}

/// Channel parameters shared by every rate evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmacParams {
    sigma2: f64,
    rho_tilde: f64,
    pbar1: f64,
    pbar2: f64,
}

impl GmacParams {
    /// `sigma2` is the noise variance (strictly positive), `rho_tilde` the
    /// channel-input correlation in `[-1, 1]`, `pbar1`/`pbar2` the average
    /// power budgets (nonnegative).
    pub fn new(sigma2: f64, rho_tilde: f64, pbar1: f64, pbar2: f64) -> Result<Self> {
        if !sigma2.is_finite() || sigma2 <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be positive, got {sigma2}"
            )));
        }
        if !rho_tilde.is_finite() || rho_tilde.abs() > 1.0 {
            return Err(Error::CorrelationOutOfRange(rho_tilde));
        }
        for (user, value) in [(1usize, pbar1), (2usize, pbar2)] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::NegativePower { user, value });
            }
        }
        Ok(Self {
            sigma2,
            rho_tilde,
            pbar1,
            pbar2,
        })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn rho_tilde(&self) -> f64 {
        self.rho_tilde
    }

    pub fn pbar1(&self) -> f64 {
        self.pbar1
    }

    pub fn pbar2(&self) -> f64 {
        self.pbar2
    }

    /// Same parameters with a different input correlation.
    pub fn with_rho_tilde(&self, rho_tilde: f64) -> Result<Self> {
        Self::new(self.sigma2, rho_tilde, self.pbar1, self.pbar2)
    }
}

/// Which transmitter an individual bound refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum User {
    One,
    Two,
}

/// The three per-sample log terms at one `(h1, h2, ĥ1, ĥ2)` state.
fn state_terms(h1: f64, h2: f64, powers: (f64, f64), params: &GmacParams) -> (f64, f64, f64) {
    let (p1, p2) = powers;
    let rho = params.rho_tilde;
    let one_minus_rho2 = 1.0 - rho * rho;
    let g1 = h1 * h1;
    let g2 = h2 * h2;
    let t1 = 0.5 * (1.0 + g1 * p1 * one_minus_rho2 / params.sigma2).log2();
    let t2 = 0.5 * (1.0 + g2 * p2 * one_minus_rho2 / params.sigma2).log2();
    let cross = 2.0 * h1 * h2 * rho * (p1 * p2).sqrt();
    let ts = 0.5 * (1.0 + (g1 * p1 + g2 * p2 + cross) / params.sigma2).log2();
    (t1, t2, ts)
}

#[allow(clippy::type_complexity)]
fn support(
    model: &ChannelStateModel,
    policy: &PowerPolicy,
) -> Result<Vec<(f64, f64, (f64, f64), f64)>> {
    let mut states = Vec::new();
    for (outcome, q) in model.fade_csit_marginal().iter() {
        if q == 0.0 {
            continue;
        }
        let csit = (outcome[2], outcome[3]);
        let powers = policy
            .power_for(csit)
            .ok_or(Error::MissingPolicyState(csit.0, csit.1))?;
        states.push((outcome[0], outcome[1], powers, q));
    }
    Ok(states)
}

/// Exact evaluation of the three rate bounds by enumerating the joint
/// `(fade, CSIT)` support.
pub fn rate_triple(
    model: &ChannelStateModel,
    policy: &PowerPolicy,
    params: &GmacParams,
) -> Result<RateTriple> {
    let mut triple = RateTriple::ZERO;
    for (h1, h2, powers, q) in support(model, policy)? {
        let (t1, t2, ts) = state_terms(h1, h2, powers, params);
        triple.r1 += q * t1;
        triple.r2 += q * t2;
        triple.sum += q * ts;
    }
    Ok(triple)
}

/// One component of [`rate_triple`].
pub fn individual_bound(
    model: &ChannelStateModel,
    policy: &PowerPolicy,
    params: &GmacParams,
    which: User,
) -> Result<f64> {
    let triple = rate_triple(model, policy, params)?;
    Ok(match which {
        User::One => triple.r1,
        User::Two => triple.r2,
    })
}

/// Partial derivatives of the sum bound with respect to each state's power
/// pair, keyed and ordered like the model's positive-probability CSIT states.
///
/// At a zero power the one-sided derivative is returned; it is `+inf` when
/// the square-root coupling term pulls with `ρ̃ > 0` against a positive
/// partner power.
#[allow(clippy::type_complexity)]
pub fn sum_bound_gradient(
    model: &ChannelStateModel,
    policy: &PowerPolicy,
    params: &GmacParams,
) -> Result<Vec<((f64, f64), (f64, f64))>> {
    let csit_states = model.csit_states();
    let mut gradient: Vec<((f64, f64), (f64, f64))> = csit_states
        .iter()
        .map(|&(state, _)| (state, (0.0, 0.0)))
        .collect();
    for (outcome, q) in model.fade_csit_marginal().iter() {
        if q == 0.0 {
            continue;
        }
        let csit = (outcome[2], outcome[3]);
        let (p1, p2) = policy
            .power_for(csit)
            .ok_or(Error::MissingPolicyState(csit.0, csit.1))?;
        let (h1, h2) = (outcome[0], outcome[1]);
        let (g1, g2) = (h1 * h1, h2 * h2);
        let rho = params.rho_tilde;
        let u = g1 * p1 + g2 * p2 + 2.0 * h1 * h2 * rho * (p1 * p2).sqrt();
        let scale = q * 0.5 / (LN_2 * (params.sigma2 + u));
        let slot = gradient
            .iter_mut()
            .find(|(state, _)| *state == csit)
            .expect("csit state present in marginal");
        slot.1 .0 += scale * (g1 + cross_slope(h1 * h2 * rho, p2, p1));
        slot.1 .1 += scale * (g2 + cross_slope(h1 * h2 * rho, p1, p2));
    }
    Ok(gradient)
}

/// Derivative contribution `coeff * sqrt(num / den)` of the power-coupling
/// term, with one-sided conventions: identically zero whenever the
/// coefficient or the numerator vanishes (a dead coupling), `+inf` only when
/// a live coupling meets a zero own-power.
pub(crate) fn cross_slope(coeff: f64, num: f64, den: f64) -> f64 {
    if coeff == 0.0 || num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        coeff * (num / den).sqrt()
    }
}

/// A mean with its standard error, from a seeded sampling run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Monte Carlo estimates of the three rate bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McRateTriple {
    pub r1: McEstimate,
    pub r2: McEstimate,
    pub sum: McEstimate,
}

/// Sampling estimator of [`rate_triple`]: draws joint `(fade, CSIT)` states
/// and averages the same log terms. Deterministic given the seed.
pub fn mc_rate_triple(
    model: &ChannelStateModel,
    policy: &PowerPolicy,
    params: &GmacParams,
    n_samples: usize,
    seed: u64,
) -> Result<McRateTriple> {
    const MIN_SAMPLES: usize = 1;
    if n_samples < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            min: MIN_SAMPLES,
            got: n_samples,
        });
    }
    let states = support(model, policy)?;
    let mut cumulative = Vec::with_capacity(states.len());
    let mut acc = 0.0;
    for &(_, _, _, q) in &states {
        acc += q;
        cumulative.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sums = [0.0f64; 3];
    let mut sq_sums = [0.0f64; 3];
    for _ in 0..n_samples {
        let u: f64 = rng.random::<f64>() * acc;
        let idx = cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(states.len() - 1);
        let (h1, h2, powers, _) = states[idx];
        let (t1, t2, ts) = state_terms(h1, h2, powers, params);
        for (k, t) in [t1, t2, ts].into_iter().enumerate() {
            sums[k] += t;
            sq_sums[k] += t * t;
        }
    }
    let n = n_samples as f64;
    let estimate = |k: usize| -> McEstimate {
        let mean = sums[k] / n;
        let variance = ((sq_sums[k] - n * mean * mean) / (n - 1.0)).max(0.0);
        McEstimate {
            mean,
            std_error: (variance / n).sqrt(),
        }
    };
    Ok(McRateTriple {
        r1: estimate(0),
        r2: estimate(1),
        sum: estimate(2),
    })
}
