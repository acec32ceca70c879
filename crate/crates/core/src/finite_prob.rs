//! Finite probability foundations.
//!
//! Everything downstream works on exact enumerations of small joint
//! distributions: the source pair `(U1, U2)`, the fade pair `(H1, H2)`, and
//! the full channel-state tuple `(H1, H2, Ĥ1, Ĥ2, H̃1, H̃2)` coupling the true
//! fades with the transmitter-side and receiver-side estimates. Outcome
//! labels are stored as `f64` tuples and compared exactly; they are only ever
//! copied around, never computed with, so bit-level equality is safe.
//!
//! All entropies are in bits (base-2 logarithms).

use crate::{Error, Result};

/// Tolerance for the "probabilities sum to one" invariant.
pub const PROB_TOL: f64 = 1e-12;

/// A joint pmf over tuples drawn from finite alphabets.
///
/// Invariants enforced at construction: probabilities are nonnegative and sum
/// to one within [`PROB_TOL`], labels all have the same arity and are
/// distinct, and every stored value is finite. Zero-probability outcomes may
/// be listed; marginalization drops them from the support only if their group
/// sums to zero probability and no positive-probability sibling exists.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteJointPmf {
    arity: usize,
    outcomes: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

impl FiniteJointPmf {
    /// Build a pmf from `(outcome, probability)` entries, validating the
    /// invariants.
    pub fn from_entries(entries: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let (outcomes, probs): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
        Self::new(outcomes, probs)
    }

    /// Build a pmf over pairs; the common case for sources and fade pairs.
    pub fn from_pairs(entries: &[((f64, f64), f64)]) -> Result<Self> {
        Self::from_entries(entries.iter().map(|&((a, b), p)| (vec![a, b], p)).collect())
    }

    /// Validating constructor from parallel label/probability lists.
    pub fn new(outcomes: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self> {
        if outcomes.is_empty() || outcomes.len() != probs.len() {
            return Err(Error::EmptyPmf);
        }
        let arity = outcomes[0].len();
        if arity == 0 {
            return Err(Error::EmptyPmf);
        }
        for outcome in &outcomes {
            if outcome.len() != arity {
                return Err(Error::ArityMismatch {
                    expected: arity,
                    got: outcome.len(),
                });
            }
            if outcome.iter().any(|value| !value.is_finite()) {
                return Err(Error::NonFinitePmf);
            }
        }
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinitePmf);
            }
            if value < 0.0 {
                return Err(Error::NegativeProbability { index, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::NotNormalized { sum });
        }
        let mut sorted: Vec<&Vec<f64>> = outcomes.iter().collect();
        sorted.sort_by(|a, b| cmp_labels(a, b));
        if sorted.windows(2).any(|w| cmp_labels(w[0], w[1]).is_eq()) {
            return Err(Error::DuplicateLabel);
        }
        Ok(Self {
            arity,
            outcomes,
            probs,
        })
    }

    /// Number of coordinates in each outcome tuple.
    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Number of listed outcomes (including zero-probability ones).
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    /// Always false: construction rejects empty pmfs.
    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Iterate over `(outcome, probability)` entries in listed order.
    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.outcomes
            .iter()
            .map(|o| o.as_slice())
            .zip(self.probs.iter().copied())
    }

    /// Probability of an exact outcome tuple; zero when unlisted.
    pub fn prob_of(&self, outcome: &[f64]) -> f64 {
        self.iter()
            .find(|(labels, _)| cmp_labels(labels, outcome).is_eq())
            .map(|(_, p)| p)
            .unwrap_or(0.0)
    }

    /// Marginal pmf over the selected coordinates, preserving first-seen
    /// outcome order so results are deterministic.
    pub fn marginal(&self, coords: &[usize]) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyPmf);
        }
        for &c in coords {
            if c >= self.arity {
                return Err(Error::BadCoordinate {
                    index: c,
                    arity: self.arity,
                });
            }
        }
        let mut labels: Vec<Vec<f64>> = Vec::new();
        let mut probs: Vec<f64> = Vec::new();
        for (outcome, p) in self.iter() {
            let key: Vec<f64> = coords.iter().map(|&c| outcome[c]).collect();
            match labels.iter().position(|l| cmp_labels(l, &key).is_eq()) {
                Some(i) => probs[i] += p,
                None => {
                    labels.push(key);
                    probs.push(p);
                }
            }
        }
        Self::new(labels, probs)
    }

    /// Shannon entropy in bits, with the `0 log 0 = 0` convention.
    pub fn entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.log2())
            .sum::<f64>()
    }

    /// Conditional entropy `H(other | given)` for a pmf over pairs, in bits.
    ///
    /// `given` is the coordinate index conditioned on (0 or 1). Computed via
    /// the chain rule `H(X0, X1) - H(X_given)`.
    pub fn conditional_entropy(&self, given: usize) -> Result<f64> {
        if self.arity != 2 {
            return Err(Error::ArityMismatch {
                expected: 2,
                got: self.arity,
            });
        }
        if given > 1 {
            return Err(Error::BadCoordinate {
                index: given,
                arity: 2,
            });
        }
        let h_given = self.marginal(&[given])?.entropy();
        // Entropy differences can go a few ulps negative for deterministic
        // couplings; clamp to the mathematically valid range.
        Ok((self.entropy() - h_given).max(0.0))
    }
}

fn cmp_labels(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    debug_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b.iter()) {
        let ord = x.total_cmp(y);
        if ord.is_ne() {
            return ord;
        }
    }
    std::cmp::Ordering::Equal
}

/// How the receiver-side state estimate is coupled to the true fades.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsirMode {
    /// Receiver observes the fade pair exactly.
    Perfect,
    /// Receiver estimate supplied explicitly in the joint.
    Custom,
}

/// Joint law of the true fades and both state estimates.
///
/// The inner pmf ranges over six-tuples
/// `(h1, h2, ĥ1, ĥ2, h̃1, h̃2)`: true fade amplitudes, transmitter-side
/// estimates, receiver-side estimates. Fade values are amplitudes; rate
/// evaluation squares them.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStateModel {
    fade_alphabet_1: Vec<f64>,
    fade_alphabet_2: Vec<f64>,
    joint: FiniteJointPmf,
    csir_mode: CsirMode,
}

impl ChannelStateModel {
    /// General validating constructor.
    ///
    /// `fade` is the declared distribution of `(H1, H2)`; the `(h1, h2)`
    /// marginal of `joint` must reproduce it within [`PROB_TOL`], and in
    /// [`CsirMode::Perfect`] every positive-probability tuple must satisfy
    /// `(h̃1, h̃2) = (h1, h2)`.
    pub fn new(fade: &FiniteJointPmf, joint: FiniteJointPmf, csir_mode: CsirMode) -> Result<Self> {
        if fade.arity() != 2 {
            return Err(Error::ArityMismatch {
                expected: 2,
                got: fade.arity(),
            });
        }
        if joint.arity() != 6 {
            return Err(Error::ArityMismatch {
                expected: 6,
                got: joint.arity(),
            });
        }
        for (outcome, _) in joint.iter() {
            if let Some(&value) = outcome.iter().find(|&&v| v < 0.0) {
                return Err(Error::NegativeFade(value));
            }
        }
        let fade_marginal = joint.marginal(&[0, 1])?;
        for (outcome, p) in fade.iter() {
            if (fade_marginal.prob_of(outcome) - p).abs() > PROB_TOL {
                return Err(Error::FadeMarginalMismatch);
            }
        }
        for (outcome, p) in fade_marginal.iter() {
            if (fade.prob_of(outcome) - p).abs() > PROB_TOL {
                return Err(Error::FadeMarginalMismatch);
            }
        }
        if csir_mode == CsirMode::Perfect {
            let coupled = joint
                .iter()
                .all(|(o, p)| p == 0.0 || (o[4] == o[0] && o[5] == o[1]));
            if !coupled {
                return Err(Error::CsirNotPerfect);
            }
        }
        let fade_alphabet_1 = distinct_values(fade, 0);
        let fade_alphabet_2 = distinct_values(fade, 1);
        Ok(Self {
            fade_alphabet_1,
            fade_alphabet_2,
            joint,
            csir_mode,
        })
    }

    /// Couple transmitter and receiver estimates to the true fades.
    ///
    /// Every party sees the fade pair exactly; the joint support is the fade
    /// support placed on the diagonal.
    pub fn perfect_csit(fade: &FiniteJointPmf) -> Result<Self> {
        if fade.arity() != 2 {
            return Err(Error::ArityMismatch {
                expected: 2,
                got: fade.arity(),
            });
        }
        let entries = fade
            .iter()
            .map(|(o, p)| (vec![o[0], o[1], o[0], o[1], o[0], o[1]], p))
            .collect();
        Self::new(
            fade,
            FiniteJointPmf::from_entries(entries)?,
            CsirMode::Perfect,
        )
    }

    /// Model transmitter-side state as the output of a per-user binary
    /// symmetric channel with crossover `p`, fed by the true fade.
    ///
    /// Requires a two-value fade alphabet per transmitter. Corruption is
    /// independent across transmitters and of everything else; the receiver
    /// estimate stays perfect. Zero-probability corrupted tuples (at `p = 0`)
    /// are dropped from the support.
    pub fn bsc_csit(fade: &FiniteJointPmf, p: f64) -> Result<Self> {
        if fade.arity() != 2 {
            return Err(Error::ArityMismatch {
                expected: 2,
                got: fade.arity(),
            });
        }
        if !(0.0..=0.5).contains(&p) {
            return Err(Error::CrossoverOutOfRange(p));
        }
        let alphabet_1 = distinct_values(fade, 0);
        let alphabet_2 = distinct_values(fade, 1);
        if alphabet_1.len() != 2 {
            return Err(Error::NonBinaryAlphabet {
                user: 1,
                got: alphabet_1.len(),
            });
        }
        if alphabet_2.len() != 2 {
            return Err(Error::NonBinaryAlphabet {
                user: 2,
                got: alphabet_2.len(),
            });
        }
        let other = |alphabet: &[f64], value: f64| -> f64 {
            if alphabet[0] == value {
                alphabet[1]
            } else {
                alphabet[0]
            }
        };
        let mut entries = Vec::new();
        for (outcome, q) in fade.iter() {
            let (h1, h2) = (outcome[0], outcome[1]);
            for (hat1, w1) in [(h1, 1.0 - p), (other(&alphabet_1, h1), p)] {
                for (hat2, w2) in [(h2, 1.0 - p), (other(&alphabet_2, h2), p)] {
                    let prob = q * w1 * w2;
                    if prob > 0.0 {
                        entries.push((vec![h1, h2, hat1, hat2, h1, h2], prob));
                    }
                }
            }
        }
        Self::new(
            fade,
            FiniteJointPmf::from_entries(entries)?,
            CsirMode::Perfect,
        )
    }

    /// True-fade alphabet of transmitter 1, ascending.
    pub fn fade_alphabet_1(&self) -> &[f64] {
        &self.fade_alphabet_1
    }

    /// True-fade alphabet of transmitter 2, ascending.
    pub fn fade_alphabet_2(&self) -> &[f64] {
        &self.fade_alphabet_2
    }

    /// The full six-coordinate joint pmf.
    pub fn joint(&self) -> &FiniteJointPmf {
        &self.joint
    }

    pub fn csir_mode(&self) -> CsirMode {
        self.csir_mode
    }

    /// Marginal law of the true fade pair `(H1, H2)`.
    pub fn fade_marginal(&self) -> FiniteJointPmf {
        self.joint.marginal(&[0, 1]).expect("joint has arity 6")
    }

    /// Marginal law of the transmitter-side estimate pair `(Ĥ1, Ĥ2)`.
    pub fn csit_marginal(&self) -> FiniteJointPmf {
        self.joint.marginal(&[2, 3]).expect("joint has arity 6")
    }

    /// Joint law of `(H1, H2, Ĥ1, Ĥ2)` — the support the rate bounds
    /// enumerate over.
    pub fn fade_csit_marginal(&self) -> FiniteJointPmf {
        self.joint
            .marginal(&[0, 1, 2, 3])
            .expect("joint has arity 6")
    }

    /// Positive-probability transmitter-side states with their weights.
    pub fn csit_states(&self) -> Vec<((f64, f64), f64)> {
        self.csit_marginal()
            .iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|(o, p)| ((o[0], o[1]), p))
            .collect()
    }

    /// True when the transmitter estimate equals the fade pair almost surely.
    pub fn csit_is_perfect(&self) -> bool {
        self.joint
            .iter()
            .all(|(o, p)| p == 0.0 || (o[2] == o[0] && o[3] == o[1]))
    }
}

fn distinct_values(pmf: &FiniteJointPmf, coord: usize) -> Vec<f64> {
    let mut values: Vec<f64> = Vec::new();
    for (outcome, _) in pmf.iter() {
        let v = outcome[coord];
        if !values.contains(&v) {
            values.push(v);
        }
    }
    values.sort_by(|a, b| a.total_cmp(b));
    values
}
