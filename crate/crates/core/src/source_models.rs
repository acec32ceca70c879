//! Left-hand sides of the rate conditions, for both source classes.
//!
//! Discrete pairs transmitted losslessly demand the entropy triple
//! `(H(U1|U2), H(U2|U1), H(U1,U2))`. Zero-mean unit-variance bivariate
//! Gaussian pairs quantized at rates `(R1, R2)` and mapped to correlated
//! Gaussian codewords are modeled by the forward test channel
//! `W_i = a_i (U_i + V_i)` with `a_i = 1 - 2^(-2 R_i)` and
//! `var V_i = (1 - a_i) / a_i`, which achieves `I(U_i; W_i) = R_i`. Joint
//! Gaussianity then gives closed forms for the codeword correlation, the
//! mutual-information triple the channel must beat, and the end-to-end
//! distortions `var[U_i | W1, W2]`; [`mc_conditional_variance`] re-derives
//! the distortions by seeded simulation and empirical regression so the
//! algebra never has to be taken on faith.

use crate::finite_prob::FiniteJointPmf;
use crate::gmac_rates::{McEstimate, RateTriple};
use crate::{Error, Result};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A discrete source pair, as a joint pmf over `(u1, u2)` labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSource {
    pmf: FiniteJointPmf,
}

impl DiscreteSource {
    pub fn new(pmf: FiniteJointPmf) -> Result<Self> {
        if pmf.arity() != 2 {
            return Err(Error::ArityMismatch {
                expected: 2,
                got: pmf.arity(),
            });
        }
        Ok(Self { pmf })
    }

    pub fn pmf(&self) -> &FiniteJointPmf {
        &self.pmf
    }

    /// Rates demanded for lossless transmission:
    /// `(H(U1|U2), H(U2|U1), H(U1,U2))` in bits.
    pub fn lossless_lhs(&self) -> RateTriple {
        RateTriple {
            r1: self.pmf.conditional_entropy(1).expect("arity checked"),
            r2: self.pmf.conditional_entropy(0).expect("arity checked"),
            sum: self.pmf.entropy(),
        }
    }
}

/// Vector-quantizer configuration for the Gaussian source pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianLtConfig {
    rho: f64,
    r1: f64,
    r2: f64,
}

impl GaussianLtConfig {
    /// `rho` is the source correlation, strictly inside `(-1, 1)`;
    /// `r1`, `r2` are quantization rates in bits, nonnegative.
    pub fn new(rho: f64, r1: f64, r2: f64) -> Result<Self> {
        if !rho.is_finite() || rho.abs() >= 1.0 {
            return Err(Error::SourceCorrelationOutOfRange(rho));
        }
        for r in [r1, r2] {
            if !r.is_finite() || r < 0.0 {
                return Err(Error::BadQuantizationRate(r));
            }
        }
        Ok(Self { rho, r1, r2 })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }
}

/// Closed-form quantities derived from a [`GaussianLtConfig`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianLtDerived {
    /// Quantization gains `a_i = 1 - 2^(-2 R_i)`.
    pub a1: f64,
    pub a2: f64,
    /// Codeword correlation `ρ̃ = ρ sqrt(a1 a2)`.
    pub rho_w: f64,
    /// Distortions `var[U_i | W1, W2]` in source-variance units.
    pub d1: f64,
    pub d2: f64,
    /// Required-rate triple
    /// `(I(U1;W1|W2), I(U2;W2|W1), I(U1,U2;W1,W2))` in bits.
    pub lhs: RateTriple,
}

/// Evaluate the quantizer closed forms.
pub fn gaussian_lt(cfg: &GaussianLtConfig) -> GaussianLtDerived {
    let a1 = 1.0 - 0.25f64.powf(cfg.r1);
    let a2 = 1.0 - 0.25f64.powf(cfg.r2);
    let rho2 = cfg.rho * cfg.rho;
    let shared = 0.5 * (1.0 - a1 * a2 * rho2).log2();
    GaussianLtDerived {
        a1,
        a2,
        rho_w: cfg.rho * (a1 * a2).sqrt(),
        d1: (1.0 - a1) * (1.0 - rho2 * a2) / (1.0 - a1 * a2 * rho2),
        d2: (1.0 - a2) * (1.0 - rho2 * a1) / (1.0 - a1 * a2 * rho2),
        lhs: RateTriple {
            r1: cfg.r1 + shared,
            r2: cfg.r2 + shared,
            sum: cfg.r1 + cfg.r2 + shared,
        },
    }
}

/// Monte Carlo distortion estimates with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McDistortion {
    pub d1: McEstimate,
    pub d2: McEstimate,
}

/// Minimum sample count accepted by [`mc_conditional_variance`].
pub const MC_MIN_SAMPLES: usize = 10_000;

/// Estimate `var[U_i | W1, W2]` by simulation: draw source/test-channel
/// samples, regress each `U_i` on the sampled `(W1, W2)` (no intercept; the
/// means are zero by construction), and take the degree-of-freedom-corrected
/// residual variance. For jointly Gaussian variables the linear regression
/// is the conditional expectation, so the estimate is unbiased.
///
/// Degenerate codewords (a rate of zero makes `W_i ≡ 0`) are dropped from
/// the regression; with no regressors left the conditional variance is the
/// source variance, exactly 1.
///
/// Standard errors use the chi-square law of Gaussian residual sums,
/// `std_error = d_hat * sqrt(2 / dof)`. Deterministic given `seed`.
pub fn mc_conditional_variance(
    cfg: &GaussianLtConfig,
    n_samples: usize,
    seed: u64,
) -> Result<McDistortion> {
    if n_samples < MC_MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            min: MC_MIN_SAMPLES,
            got: n_samples,
        });
    }
    let derived = gaussian_lt(cfg);
    let use_w1 = derived.a1 > 0.0;
    let use_w2 = derived.a2 > 0.0;
    let noise_sd = |a: f64| if a > 0.0 { ((1.0 - a) / a).sqrt() } else { 0.0 };
    let (sd_v1, sd_v2) = (noise_sd(derived.a1), noise_sd(derived.a2));
    let cross = (1.0 - cfg.rho * cfg.rho).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Sufficient statistics: Gram matrix of (W1, W2), cross moments with each
    // U_i, and the second moments of the U_i themselves.
    let mut s_ww = [[0.0f64; 2]; 2];
    let mut s_wu = [[0.0f64; 2]; 2]; // s_wu[i][j] = sum W_{j+1} * U_{i+1}
    let mut s_uu = [0.0f64; 2];
    for _ in 0..n_samples {
        let z1 = standard_normal(&mut rng);
        let z2 = standard_normal(&mut rng);
        let u1 = z1;
        let u2 = cfg.rho * z1 + cross * z2;
        let w1 = if use_w1 {
            derived.a1 * (u1 + sd_v1 * standard_normal(&mut rng))
        } else {
            0.0
        };
        let w2 = if use_w2 {
            derived.a2 * (u2 + sd_v2 * standard_normal(&mut rng))
        } else {
            0.0
        };
        s_ww[0][0] += w1 * w1;
        s_ww[0][1] += w1 * w2;
        s_ww[1][1] += w2 * w2;
        for (i, u) in [u1, u2].into_iter().enumerate() {
            s_wu[i][0] += w1 * u;
            s_wu[i][1] += w2 * u;
            s_uu[i] += u * u;
        }
    }
    s_ww[1][0] = s_ww[0][1];

    let estimate = |i: usize| -> McEstimate {
        // Residual sum of squares of the least-squares fit on the active
        // regressors: RSS = S_uu - beta' S_wu with beta = S_ww^{-1} S_wu.
        let (rss, regressors) = match (use_w1, use_w2) {
            (true, true) => {
                let det = s_ww[0][0] * s_ww[1][1] - s_ww[0][1] * s_ww[0][1];
                let beta1 = (s_ww[1][1] * s_wu[i][0] - s_ww[0][1] * s_wu[i][1]) / det;
                let beta2 = (s_ww[0][0] * s_wu[i][1] - s_ww[0][1] * s_wu[i][0]) / det;
                (s_uu[i] - beta1 * s_wu[i][0] - beta2 * s_wu[i][1], 2)
            }
            (true, false) => (s_uu[i] - s_wu[i][0] * s_wu[i][0] / s_ww[0][0], 1),
            (false, true) => (s_uu[i] - s_wu[i][1] * s_wu[i][1] / s_ww[1][1], 1),
            (false, false) => {
                return McEstimate {
                    mean: 1.0,
                    std_error: 0.0,
                }
            }
        };
        let dof = (n_samples - regressors) as f64;
        let mean = rss / dof;
        McEstimate {
            mean,
            std_error: mean * (2.0 / dof).sqrt(),
        }
    };
    Ok(McDistortion {
        d1: estimate(0),
        d2: estimate(1),
    })
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; the uniform draw is shifted into (0, 1] so the log is finite.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOG2_3: f64 = 1.584962500721156;

    fn skewed_source() -> DiscreteSource {
        DiscreteSource::new(
            FiniteJointPmf::from_pairs(&[
                ((0.0, 0.0), 1.0 / 3.0),
                ((1.0, 1.0), 1.0 / 3.0),
                ((0.0, 1.0), 1.0 / 3.0),
                ((1.0, 0.0), 0.0),
            ])
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn lossless_lhs_of_skewed_source() {
        let lhs = skewed_source().lossless_lhs();
        assert!((lhs.r1 - 2.0 / 3.0).abs() < 1e-12, "H(U1|U2) = {}", lhs.r1);
        assert!((lhs.r2 - 2.0 / 3.0).abs() < 1e-12, "H(U2|U1) = {}", lhs.r2);
        assert!((lhs.sum - LOG2_3).abs() < 1e-12, "H(U1,U2) = {}", lhs.sum);
    }

    #[test]
    fn lossless_lhs_of_independent_fair_bits() {
        let pmf = FiniteJointPmf::from_pairs(&[
            ((0.0, 0.0), 0.25),
            ((0.0, 1.0), 0.25),
            ((1.0, 0.0), 0.25),
            ((1.0, 1.0), 0.25),
        ])
        .unwrap();
        let lhs = DiscreteSource::new(pmf).unwrap().lossless_lhs();
        assert!((lhs.r1 - 1.0).abs() < 1e-12);
        assert!((lhs.r2 - 1.0).abs() < 1e-12);
        assert!((lhs.sum - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lossless_lhs_of_a_shared_fair_bit() {
        let pmf = FiniteJointPmf::from_pairs(&[((0.0, 0.0), 0.5), ((1.0, 1.0), 0.5)]).unwrap();
        let lhs = DiscreteSource::new(pmf).unwrap().lossless_lhs();
        assert_eq!(lhs.r1, 0.0);
        assert_eq!(lhs.r2, 0.0);
        assert!((lhs.sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn independent_sources_reduce_to_single_user_rate_distortion() {
        let derived = gaussian_lt(&GaussianLtConfig::new(0.0, 1.5, 0.75).unwrap());
        assert!((derived.d1 - 0.25f64.powf(1.5)).abs() < 1e-15);
        assert!((derived.d2 - 0.25f64.powf(0.75)).abs() < 1e-15);
        assert!((derived.lhs.r1 - 1.5).abs() < 1e-15);
        assert!((derived.lhs.r2 - 0.75).abs() < 1e-15);
        assert!((derived.lhs.sum - 2.25).abs() < 1e-15);
        assert_eq!(derived.rho_w, 0.0);
    }

    #[test]
    fn zero_partner_rate_removes_the_side_information() {
        // a2 = 0 strips W2 out of the conditioning: d1 falls back to the
        // single-user curve, while U2 is still partly explained by W1.
        let derived = gaussian_lt(&GaussianLtConfig::new(0.8, 1.25, 0.0).unwrap());
        assert!((derived.d1 - 0.25f64.powf(1.25)).abs() < 1e-15);
        assert_eq!(derived.a2, 0.0);
        assert!((derived.d2 - (1.0 - 0.64 * derived.a1)).abs() < 1e-15);
    }

    #[test]
    fn symmetric_half_correlation_example() {
        // rho = 0.5, R1 = R2 = 1: a = 0.75, d = 0.25 * 0.8125 / 0.859375.
        let derived = gaussian_lt(&GaussianLtConfig::new(0.5, 1.0, 1.0).unwrap());
        let expected = 0.25 * (1.0 - 0.1875) / (1.0 - 0.140625);
        assert!((derived.a1 - 0.75).abs() < 1e-15);
        assert!((derived.d1 - expected).abs() < 1e-15);
        assert!((derived.d2 - expected).abs() < 1e-15);
        assert!((expected - 0.23636363636363636).abs() < 1e-15);
        assert!((derived.rho_w - 0.5 * 0.75).abs() < 1e-15);
    }

    #[test]
    fn lhs_sum_identity_holds_exactly() {
        for (rho, r1, r2) in [(0.5, 1.0, 1.0), (0.9, 0.3, 2.5), (-0.6, 2.0, 0.1)] {
            let cfg = GaussianLtConfig::new(rho, r1, r2).unwrap();
            let derived = gaussian_lt(&cfg);
            let expected = r1 + r2 + 0.5 * (1.0 - derived.a1 * derived.a2 * rho * rho).log2();
            assert!((derived.lhs.sum - expected).abs() < 1e-12);
            // Conditioning can only reduce the required rate.
            assert!(derived.lhs.r1 <= r1 + 1e-15);
            assert!(derived.lhs.r2 <= r2 + 1e-15);
            assert!(derived.lhs.r1 >= 0.0 && derived.lhs.r2 >= 0.0);
        }
    }

    #[test]
    fn config_validation() {
        assert!(matches!(
            GaussianLtConfig::new(1.0, 1.0, 1.0),
            Err(Error::SourceCorrelationOutOfRange(_))
        ));
        assert!(matches!(
            GaussianLtConfig::new(0.5, -0.1, 1.0),
            Err(Error::BadQuantizationRate(_))
        ));
        assert!(matches!(
            mc_conditional_variance(&GaussianLtConfig::new(0.5, 1.0, 1.0).unwrap(), 100, 1),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn mc_matches_closed_form_for_independent_sources() {
        let cfg = GaussianLtConfig::new(0.0, 1.0, 1.0).unwrap();
        let mc = mc_conditional_variance(&cfg, 200_000, 11).unwrap();
        for estimate in [mc.d1, mc.d2] {
            let z = (estimate.mean - 0.25) / estimate.std_error;
            assert!(z.abs() < 3.0, "estimate {} (z = {z})", estimate.mean);
        }
    }

    #[test]
    fn mc_matches_closed_form_for_the_symmetric_example() {
        let cfg = GaussianLtConfig::new(0.5, 1.0, 1.0).unwrap();
        let truth = gaussian_lt(&cfg);
        let mc = mc_conditional_variance(&cfg, 1_000_000, 3).unwrap();
        for (estimate, d) in [(mc.d1, truth.d1), (mc.d2, truth.d2)] {
            let z = (estimate.mean - d) / estimate.std_error;
            assert!(z.abs() < 3.0, "estimate {} vs {d} (z = {z})", estimate.mean);
        }
    }

    #[test]
    fn mc_is_exact_for_zero_rates() {
        let cfg = GaussianLtConfig::new(0.5, 0.0, 0.0).unwrap();
        let mc = mc_conditional_variance(&cfg, 10_000, 5).unwrap();
        assert_eq!(mc.d1.mean, 1.0);
        assert_eq!(mc.d2.mean, 1.0);
        assert_eq!(mc.d1.std_error, 0.0);
    }

    #[test]
    fn mc_is_reproducible_per_seed() {
        let cfg = GaussianLtConfig::new(0.3, 0.8, 1.2).unwrap();
        let a = mc_conditional_variance(&cfg, 20_000, 17).unwrap();
        let b = mc_conditional_variance(&cfg, 20_000, 17).unwrap();
        assert_eq!(a, b);
        let c = mc_conditional_variance(&cfg, 20_000, 18).unwrap();
        assert_ne!(a.d1.mean, c.d1.mean);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn distortions_decrease_in_either_rate(
                rho in -0.95f64..0.95,
                r1 in 0.0f64..4.0,
                r2 in 0.0f64..4.0,
                bump in 0.01f64..1.0,
            ) {
                let base = gaussian_lt(&GaussianLtConfig::new(rho, r1, r2).unwrap());
                let more_own = gaussian_lt(&GaussianLtConfig::new(rho, r1 + bump, r2).unwrap());
                prop_assert!(more_own.d1 < base.d1);
                let more_partner =
                    gaussian_lt(&GaussianLtConfig::new(rho, r1, r2 + bump).unwrap());
                prop_assert!(more_partner.d1 <= base.d1 + 1e-15);
                // Partner-side help is strict once correlation and own rate
                // are large enough for the change to be resolvable.
                if rho.abs() > 1e-3 && r1 > 1e-3 {
                    prop_assert!(more_partner.d1 < base.d1);
                }
            }

            #[test]
            fn swapping_rates_swaps_distortions(
                rho in -0.95f64..0.95,
                r1 in 0.0f64..4.0,
                r2 in 0.0f64..4.0,
            ) {
                let forward = gaussian_lt(&GaussianLtConfig::new(rho, r1, r2).unwrap());
                let swapped = gaussian_lt(&GaussianLtConfig::new(rho, r2, r1).unwrap());
                prop_assert_eq!(forward.d1, swapped.d2);
                prop_assert_eq!(forward.d2, swapped.d1);
            }

            #[test]
            fn derived_quantities_stay_in_range(
                rho in -0.95f64..0.95,
                r1 in 0.0f64..6.0,
                r2 in 0.0f64..6.0,
            ) {
                let derived = gaussian_lt(&GaussianLtConfig::new(rho, r1, r2).unwrap());
                prop_assert!((0.0..1.0).contains(&derived.a1));
                prop_assert!((0.0..1.0).contains(&derived.a2));
                prop_assert!(derived.rho_w.abs() <= rho.abs() + 1e-15);
                prop_assert!(derived.d1 > 0.0 && derived.d1 <= 1.0);
                prop_assert!(derived.d2 > 0.0 && derived.d2 <= 1.0);
                prop_assert!(derived.lhs.r1 >= 0.0);
                prop_assert!(derived.lhs.r2 >= 0.0);
                prop_assert!(derived.lhs.sum >= 0.0);
            }
        }
    }
}
