//! Feasibility verdicts and design searches on top of the rate machinery.
//!
//! A source pair is transmissible when all three demanded rates sit strictly
//! below the corresponding channel bounds. Margins are `rhs - lhs` per
//! inequality; because reference configurations can land exactly on a
//! boundary, verdicts are three-way — `feasible` (all margins above an
//! `ε` band), `marginal` (the worst margin inside the band), `infeasible`
//! (any margin below it).
//!
//! [`tune_rho`] implements the iterative input-correlation choice: raise the
//! correlation to satisfy the sum condition, lower it when the individual
//! conditions break, re-optimizing the power policy at every trial value.
//! The sum bound grows with the correlation while the individual bounds
//! shrink, so the feasible correlations form an interval and bisection
//! applies. [`min_distortion_lt`] scans a quantizer rate grid for Gaussian
//! sources and returns the feasible point of least total distortion.

use crate::finite_prob::{ChannelStateModel, FiniteJointPmf};
use crate::gmac_rates::{self, GmacParams, PowerPolicy, RateTriple};
use crate::power_opt::{self, OptimizationResult};
use crate::source_models::{self, DiscreteSource, GaussianLtConfig};
use crate::{Error, Result};

/// Default half-width of the marginal band around zero margin.
pub const DEFAULT_EPS_FEAS: f64 = 1e-9;

/// Default bisection tolerance on the tuned input correlation.
pub const DEFAULT_RHO_TOL: f64 = 1e-4;

/// Tolerances shared by the planner entry points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerConfig {
    /// Marginal-band half-width for verdicts.
    pub eps_feas: f64,
    /// KKT tolerance handed to the power optimizer.
    pub opt_tol: f64,
    /// Bisection tolerance on the tuned input correlation.
    pub rho_tol: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            eps_feas: DEFAULT_EPS_FEAS,
            opt_tol: power_opt::DEFAULT_TOL,
            rho_tol: DEFAULT_RHO_TOL,
        }
    }
}

/// Three-way feasibility verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Feasible,
    Marginal,
    Infeasible,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Feasible => "feasible",
            Verdict::Marginal => "marginal",
            Verdict::Infeasible => "infeasible",
        }
    }
}

/// Classify margins against the `ε` band: feasible above it, marginal
/// inside it, infeasible below.
pub fn classify(margins: &[f64; 3], eps_feas: f64) -> Verdict {
    let min = margins.iter().copied().fold(f64::INFINITY, f64::min);
    if min > eps_feas {
        Verdict::Feasible
    } else if min >= -eps_feas {
        Verdict::Marginal
    } else {
        Verdict::Infeasible
    }
}

/// Per-inequality comparison of demanded rates against channel bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub lhs: RateTriple,
    pub rhs: RateTriple,
    /// `rhs - lhs` for each inequality, in bits.
    pub margins: [f64; 3],
    pub verdict: Verdict,
    pub policy: PowerPolicy,
    pub rho_tilde: f64,
}

impl FeasibilityReport {
    pub fn from_bounds(
        lhs: RateTriple,
        rhs: RateTriple,
        policy: PowerPolicy,
        rho_tilde: f64,
        eps_feas: f64,
    ) -> Self {
        let margins = [rhs.r1 - lhs.r1, rhs.r2 - lhs.r2, rhs.sum - lhs.sum];
        let verdict = classify(&margins, eps_feas);
        Self {
            lhs,
            rhs,
            margins,
            verdict,
            policy,
            rho_tilde,
        }
    }

    pub fn min_margin(&self) -> f64 {
        self.margins.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Compare the lossless entropy demands of a discrete source against the
/// bounds achieved by `policy` at `params`.
pub fn check_lossless(
    src: &DiscreteSource,
    model: &ChannelStateModel,
    params: &GmacParams,
    policy: &PowerPolicy,
    cfg: &PlannerConfig,
) -> Result<FeasibilityReport> {
    let rhs = gmac_rates::rate_triple(model, policy, params)?;
    Ok(FeasibilityReport::from_bounds(
        src.lossless_lhs(),
        rhs,
        policy.clone(),
        params.rho_tilde(),
        cfg.eps_feas,
    ))
}

/// Largest input correlation in `[0, rho_max]` whose re-optimized power
/// policy makes `lhs` feasible, found by bisection to within `cfg.rho_tol`.
///
/// The input correlation in `params` is ignored; each trial value replaces
/// it. When no correlation in range is feasible the report at the trial
/// point of best (largest) worst-case margin is returned, with its own
/// verdict. Infeasibility is a verdict, never an error.
pub fn tune_rho(
    lhs: &RateTriple,
    model: &ChannelStateModel,
    params: &GmacParams,
    rho_max: f64,
    cfg: &PlannerConfig,
) -> Result<(f64, FeasibilityReport)> {
    if !(0.0..=1.0).contains(&rho_max) {
        return Err(Error::CorrelationOutOfRange(rho_max));
    }
    if cfg.rho_tol.is_nan() || cfg.rho_tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "bisection tolerance must be positive, got {}",
            cfg.rho_tol
        )));
    }

    let mut warm: Option<PowerPolicy> = None;
    let mut best: Option<(f64, FeasibilityReport)> = None;
    let evaluate = |rho: f64, warm: &mut Option<PowerPolicy>| -> Result<FeasibilityReport> {
        let trial_params = params.with_rho_tilde(rho)?;
        let opt = match warm {
            Some(start) => {
                power_opt::optimize_sum_rate_from(model, &trial_params, cfg.opt_tol, start)?
            }
            None => power_opt::optimize_sum_rate(model, &trial_params, cfg.opt_tol)?,
        };
        *warm = Some(opt.policy.clone());
        let rhs = gmac_rates::rate_triple(model, &opt.policy, &trial_params)?;
        Ok(FeasibilityReport::from_bounds(
            *lhs,
            rhs,
            opt.policy,
            rho,
            cfg.eps_feas,
        ))
    };
    let track =
        |rho: f64, report: &FeasibilityReport, best: &mut Option<(f64, FeasibilityReport)>| {
            let better = match best {
                Some((_, incumbent)) => report.min_margin() > incumbent.min_margin(),
                None => true,
            };
            if better {
                *best = Some((rho, report.clone()));
            }
        };

    let individuals_ok =
        |r: &FeasibilityReport| r.margins[0] > cfg.eps_feas && r.margins[1] > cfg.eps_feas;

    let top = evaluate(rho_max, &mut warm)?;
    track(rho_max, &top, &mut best);
    if top.verdict == Verdict::Feasible {
        return Ok((rho_max, top));
    }
    if individuals_ok(&top) {
        // Only the sum condition failed at the largest correlation; the sum
        // bound is nondecreasing in the correlation, so no smaller value
        // can help.
        let (rho, report) = best.expect("tracked at least one point");
        return Ok((rho, report));
    }

    let bottom = evaluate(0.0, &mut warm)?;
    track(0.0, &bottom, &mut best);
    if !individuals_ok(&bottom) {
        let (rho, report) = best.expect("tracked at least one point");
        return Ok((rho, report));
    }

    // The individual margins shrink with the correlation: bisect for the
    // upper feasibility edge. When zero is already fully feasible we bisect
    // on the full verdict (the feasible set is then [0, edge]); otherwise on
    // the individual pair alone and check the sum at the edge afterwards.
    let fully_feasible_at_zero = bottom.verdict == Verdict::Feasible;
    let mut lo = 0.0;
    let mut lo_report = bottom;
    let mut hi = rho_max;
    while hi - lo > cfg.rho_tol {
        let mid = 0.5 * (lo + hi);
        let report = evaluate(mid, &mut warm)?;
        track(mid, &report, &mut best);
        let keep = if fully_feasible_at_zero {
            report.verdict == Verdict::Feasible
        } else {
            individuals_ok(&report)
        };
        if keep {
            lo = mid;
            lo_report = report;
        } else {
            hi = mid;
        }
    }
    if lo_report.verdict == Verdict::Feasible {
        return Ok((lo, lo_report));
    }
    let (rho, report) = best.expect("tracked at least one point");
    Ok((rho, report))
}

/// Rate-grid specification for the Gaussian distortion search.
#[derive(Debug, Clone, PartialEq)]
pub enum RateGrid {
    /// `R1 = R2 = k * step` for `k = 0 ..= max_rate / step`.
    Symmetric { max_rate: f64, step: f64 },
    /// Full Cartesian grid, lexicographic order.
    Full {
        max_rate_1: f64,
        max_rate_2: f64,
        step: f64,
    },
    /// Explicit points; scanned in lexicographic order.
    Explicit(Vec<(f64, f64)>),
}

impl Default for RateGrid {
    fn default() -> Self {
        RateGrid::Symmetric {
            max_rate: 4.0,
            step: 0.01,
        }
    }
}

impl RateGrid {
    /// Materialize the grid points in scan (lexicographic) order.
    pub fn points(&self) -> Result<Vec<(f64, f64)>> {
        let axis = |max: f64, step: f64| -> Result<Vec<f64>> {
            if !(step.is_finite() && max.is_finite()) || step <= 0.0 || max < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "rate grid needs max >= 0 and step > 0, got max {max}, step {step}"
                )));
            }
            let n = (max / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| i as f64 * step).collect())
        };
        let points = match self {
            RateGrid::Symmetric { max_rate, step } => axis(*max_rate, *step)?
                .into_iter()
                .map(|r| (r, r))
                .collect(),
            RateGrid::Full {
                max_rate_1,
                max_rate_2,
                step,
            } => {
                let r1s = axis(*max_rate_1, *step)?;
                let r2s = axis(*max_rate_2, *step)?;
                let mut out = Vec::with_capacity(r1s.len() * r2s.len());
                for &r1 in &r1s {
                    for &r2 in &r2s {
                        out.push((r1, r2));
                    }
                }
                out
            }
            RateGrid::Explicit(points) => {
                let mut sorted = points.clone();
                sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.total_cmp(&b.1)));
                sorted
            }
        };
        if points.is_empty() {
            return Err(Error::InvalidParameter("rate grid is empty".into()));
        }
        if let Some(&(r1, r2)) = points
            .iter()
            .find(|(r1, r2)| !(r1.is_finite() && r2.is_finite()) || *r1 < 0.0 || *r2 < 0.0)
        {
            return Err(Error::BadQuantizationRate(r1.min(r2)));
        }
        Ok(points)
    }
}

/// Outcome of the minimum-distortion search.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionResult {
    /// Quantization rates of the selected grid point, in bits.
    pub r1: f64,
    pub r2: f64,
    /// Per-source and total mean-square distortions.
    pub d1: f64,
    pub d2: f64,
    pub d_sum: f64,
    /// Feasibility report at the selected point (never infeasible).
    pub report: FeasibilityReport,
    /// Whether the power optimizer converged at the selected point.
    pub converged: bool,
}

/// Scan the rate grid for a Gaussian source pair of correlation `rho`: each
/// point fixes the codeword correlation, re-optimizes the power policy, and
/// is kept when not infeasible. Returns the point minimizing `d1 + d2`
/// (ties broken toward lexicographically smaller rates), or `None` when the
/// whole grid is infeasible.
pub fn min_distortion_lt(
    rho: f64,
    model: &ChannelStateModel,
    params: &GmacParams,
    grid: &RateGrid,
    cfg: &PlannerConfig,
) -> Result<Option<DistortionResult>> {
    let points = grid.points()?;
    let mut warm: Option<PowerPolicy> = None;
    let mut best: Option<DistortionResult> = None;
    for (r1, r2) in points {
        let lt = GaussianLtConfig::new(rho, r1, r2)?;
        let derived = source_models::gaussian_lt(&lt);
        let trial_params = params.with_rho_tilde(derived.rho_w)?;
        let opt: OptimizationResult = match &warm {
            Some(start) => {
                power_opt::optimize_sum_rate_from(model, &trial_params, cfg.opt_tol, start)?
            }
            None => power_opt::optimize_sum_rate(model, &trial_params, cfg.opt_tol)?,
        };
        warm = Some(opt.policy.clone());
        let rhs = gmac_rates::rate_triple(model, &opt.policy, &trial_params)?;
        let report = FeasibilityReport::from_bounds(
            derived.lhs,
            rhs,
            opt.policy,
            derived.rho_w,
            cfg.eps_feas,
        );
        if report.verdict == Verdict::Infeasible {
            continue;
        }
        let d_sum = derived.d1 + derived.d2;
        let better = match &best {
            Some(incumbent) => d_sum < incumbent.d_sum,
            None => true,
        };
        if better {
            best = Some(DistortionResult {
                r1,
                r2,
                d1: derived.d1,
                d2: derived.d2,
                d_sum,
                report,
                converged: opt.converged,
            });
        }
    }
    Ok(best)
}

/// What the transmitters know about the fade state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CsitSpec {
    Perfect,
    Bsc(f64),
    /// No usable state information; modeled as a crossover-1/2 BSC.
    Uninformative,
}

/// Which source pair a scenario carries, if any.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    Discrete(DiscreteSource),
    Gaussian { rho: f64 },
}

/// A complete experiment description: channel, budgets, and optional source.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub fade: FiniteJointPmf,
    pub csit: CsitSpec,
    pub params: GmacParams,
    pub source: Option<SourceSpec>,
    pub grid: RateGrid,
}

impl Scenario {
    /// Instantiate the channel-state model the scenario describes.
    pub fn build_model(&self) -> Result<ChannelStateModel> {
        match self.csit {
            CsitSpec::Perfect => ChannelStateModel::perfect_csit(&self.fade),
            CsitSpec::Bsc(p) => ChannelStateModel::bsc_csit(&self.fade, p),
            CsitSpec::Uninformative => ChannelStateModel::bsc_csit(&self.fade, 0.5),
        }
    }
}

/// Sweep axes for figure reproduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Transmitter-state BSC crossover probability.
    CrossoverP,
    /// Channel-input correlation.
    RhoTilde,
    /// Gaussian source correlation (distortion search per point).
    SourceRho,
}

/// One sweep output row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub rhs: RateTriple,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub verdict: Option<Verdict>,
    pub kkt_residual: f64,
    pub converged: bool,
}

/// Evaluate the scenario along one axis. Points must be sorted ascending and
/// inside the axis range. Optimizer non-convergence is propagated per row in
/// the `converged` flag, never silently.
pub fn sweep(
    scenario: &Scenario,
    axis: SweepAxis,
    points: &[f64],
    cfg: &PlannerConfig,
) -> Result<Vec<SweepRow>> {
    if points.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter(
            "sweep points must be sorted ascending".into(),
        ));
    }
    let valid = |value: f64| -> bool {
        match axis {
            SweepAxis::CrossoverP => (0.0..=0.5).contains(&value),
            SweepAxis::RhoTilde => (0.0..=1.0).contains(&value),
            SweepAxis::SourceRho => value.abs() < 1.0,
        }
    };
    if let Some(&bad) = points.iter().find(|&&v| !valid(v)) {
        return Err(Error::InvalidParameter(format!(
            "sweep point {bad} outside the valid range for this axis"
        )));
    }

    let lossless_lhs = match &scenario.source {
        Some(SourceSpec::Discrete(src)) => Some(src.lossless_lhs()),
        _ => None,
    };
    let mut rows = Vec::with_capacity(points.len());
    match axis {
        SweepAxis::CrossoverP => {
            for &p in points {
                let model = ChannelStateModel::bsc_csit(&scenario.fade, p)?;
                let opt = power_opt::optimize_sum_rate(&model, &scenario.params, cfg.opt_tol)?;
                let rhs = gmac_rates::rate_triple(&model, &opt.policy, &scenario.params)?;
                rows.push(SweepRow {
                    axis_value: p,
                    rhs,
                    d1: None,
                    d2: None,
                    verdict: lossless_lhs.map(|lhs| verdict_against(&lhs, &rhs, cfg.eps_feas)),
                    kkt_residual: opt.kkt_residual,
                    converged: opt.converged,
                });
            }
        }
        SweepAxis::RhoTilde => {
            let model = scenario.build_model()?;
            let mut warm: Option<PowerPolicy> = None;
            for &rho in points {
                let trial = scenario.params.with_rho_tilde(rho)?;
                let opt = match &warm {
                    Some(start) => {
                        power_opt::optimize_sum_rate_from(&model, &trial, cfg.opt_tol, start)?
                    }
                    None => power_opt::optimize_sum_rate(&model, &trial, cfg.opt_tol)?,
                };
                warm = Some(opt.policy.clone());
                let rhs = gmac_rates::rate_triple(&model, &opt.policy, &trial)?;
                rows.push(SweepRow {
                    axis_value: rho,
                    rhs,
                    d1: None,
                    d2: None,
                    verdict: lossless_lhs.map(|lhs| verdict_against(&lhs, &rhs, cfg.eps_feas)),
                    kkt_residual: opt.kkt_residual,
                    converged: opt.converged,
                });
            }
        }
        SweepAxis::SourceRho => {
            if matches!(scenario.source, Some(SourceSpec::Discrete(_))) {
                return Err(Error::InvalidParameter(
                    "source-correlation sweeps need a gaussian (or absent) source".into(),
                ));
            }
            let model = scenario.build_model()?;
            for &rho in points {
                match min_distortion_lt(rho, &model, &scenario.params, &scenario.grid, cfg)? {
                    Some(result) => {
                        let trial = scenario.params.with_rho_tilde(result.report.rho_tilde)?;
                        let kkt = power_opt::kkt_residual(&model, &result.report.policy, &trial)?;
                        rows.push(SweepRow {
                            axis_value: rho,
                            rhs: result.report.rhs,
                            d1: Some(result.d1),
                            d2: Some(result.d2),
                            verdict: Some(result.report.verdict),
                            kkt_residual: kkt,
                            converged: result.converged,
                        });
                    }
                    None => rows.push(SweepRow {
                        axis_value: rho,
                        rhs: RateTriple::ZERO,
                        d1: None,
                        d2: None,
                        verdict: Some(Verdict::Infeasible),
                        kkt_residual: 0.0,
                        converged: true,
                    }),
                }
            }
        }
    }
    Ok(rows)
}

fn verdict_against(lhs: &RateTriple, rhs: &RateTriple, eps: f64) -> Verdict {
    classify(&[rhs.r1 - lhs.r1, rhs.r2 - lhs.r2, rhs.sum - lhs.sum], eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::power_opt::upa_policy;

    fn uniform_fade_pmf() -> FiniteJointPmf {
        FiniteJointPmf::from_pairs(&[
            ((1.0, 1.0), 0.25),
            ((1.0, 0.5), 0.25),
            ((0.5, 1.0), 0.25),
            ((0.5, 0.5), 0.25),
        ])
        .unwrap()
    }

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

    fn sec5a_params() -> GmacParams {
        GmacParams::new(1.0, 0.3, 5.0, 5.0).unwrap()
    }

    #[test]
    fn classify_uses_the_band() {
        assert_eq!(classify(&[0.1, 0.2, 0.3], 1e-9), Verdict::Feasible);
        assert_eq!(classify(&[0.1, 0.0, 0.3], 1e-9), Verdict::Marginal);
        assert_eq!(classify(&[0.1, -1e-10, 0.3], 1e-9), Verdict::Marginal);
        assert_eq!(classify(&[0.1, -1e-3, 0.3], 1e-9), Verdict::Infeasible);
    }

    #[test]
    fn uniform_power_cannot_carry_the_skewed_source() {
        let model = ChannelStateModel::perfect_csit(&uniform_fade_pmf()).unwrap();
        let params = sec5a_params();
        let report = check_lossless(
            &skewed_source(),
            &model,
            &params,
            &upa_policy(&model, &params),
            &PlannerConfig::default(),
        )
        .unwrap();
        assert_eq!(report.verdict, Verdict::Infeasible);
        assert!(report.margins[2] < 0.0, "sum margin {}", report.margins[2]);
        assert!(report.margins[0] > 0.0 && report.margins[1] > 0.0);
    }

    #[test]
    fn optimal_power_carries_the_skewed_source() {
        let model = ChannelStateModel::perfect_csit(&uniform_fade_pmf()).unwrap();
        let params = sec5a_params();
        let cfg = PlannerConfig::default();
        let opt = power_opt::optimize_sum_rate(&model, &params, cfg.opt_tol).unwrap();
        let report = check_lossless(&skewed_source(), &model, &params, &opt.policy, &cfg).unwrap();
        assert_eq!(report.verdict, Verdict::Feasible);
    }

    #[test]
    fn report_rhs_is_reproducible_from_its_policy() {
        let model = ChannelStateModel::bsc_csit(&uniform_fade_pmf(), 0.1).unwrap();
        let params = sec5a_params();
        let cfg = PlannerConfig::default();
        let report = check_lossless(
            &skewed_source(),
            &model,
            &params,
            &upa_policy(&model, &params),
            &cfg,
        )
        .unwrap();
        let again = gmac_rates::rate_triple(&model, &report.policy, &params).unwrap();
        assert!((again.r1 - report.rhs.r1).abs() < 1e-12);
        assert!((again.r2 - report.rhs.r2).abs() < 1e-12);
        assert!((again.sum - report.rhs.sum).abs() < 1e-12);
    }

    #[test]
    fn tune_rho_returns_rho_max_for_trivial_demands() {
        let model = ChannelStateModel::perfect_csit(&uniform_fade_pmf()).unwrap();
        let (rho, report) = tune_rho(
            &RateTriple::ZERO,
            &model,
            &sec5a_params(),
            0.7,
            &PlannerConfig::default(),
        )
        .unwrap();
        assert_eq!(rho, 0.7);
        assert_eq!(report.verdict, Verdict::Feasible);
    }

    #[test]
    fn tune_rho_reports_unattainable_demands_as_infeasible() {
        let model = ChannelStateModel::perfect_csit(&uniform_fade_pmf()).unwrap();
        let demand = RateTriple {
            r1: 0.1,
            r2: 0.1,
            sum: 50.0,
        };
        let (_, report) = tune_rho(
            &demand,
            &model,
            &sec5a_params(),
            1.0,
            &PlannerConfig::default(),
        )
        .unwrap();
        assert_eq!(report.verdict, Verdict::Infeasible);
    }

    #[test]
    fn tune_rho_accepts_the_reference_demand_at_rho_max() {
        let model = ChannelStateModel::perfect_csit(&uniform_fade_pmf()).unwrap();
        let lhs = skewed_source().lossless_lhs();
        let (rho, report) = tune_rho(
            &lhs,
            &model,
            &sec5a_params(),
            0.3,
            &PlannerConfig::default(),
        )
        .unwrap();
        assert_eq!(rho, 0.3);
        assert_eq!(report.verdict, Verdict::Feasible);
    }

    #[test]
    fn tune_rho_refines_with_the_tolerance() {
        // A demand whose individual components bind forces real bisection.
        let model = ChannelStateModel::perfect_csit(&uniform_fade_pmf()).unwrap();
        let params = GmacParams::new(1.0, 0.0, 5.0, 5.0).unwrap();
        let upa = upa_policy(&model, &params);
        let at_zero = gmac_rates::rate_triple(&model, &upa, &params).unwrap();
        // Demand individual rates achievable only below some correlation.
        let demand = RateTriple {
            r1: at_zero.r1 * 0.9,
            r2: at_zero.r2 * 0.9,
            sum: at_zero.sum * 0.5,
        };
        let coarse_cfg = PlannerConfig {
            rho_tol: 1e-3,
            ..PlannerConfig::default()
        };
        let fine_cfg = PlannerConfig {
            rho_tol: 1e-4,
            ..PlannerConfig::default()
        };
        let (rho_coarse, rc) = tune_rho(&demand, &model, &params, 1.0, &coarse_cfg).unwrap();
        let (rho_fine, rf) = tune_rho(&demand, &model, &params, 1.0, &fine_cfg).unwrap();
        assert_eq!(rc.verdict, Verdict::Feasible);
        assert_eq!(rf.verdict, Verdict::Feasible);
        assert!(
            (rho_coarse - rho_fine).abs() < 1e-3,
            "coarse {rho_coarse} vs fine {rho_fine}"
        );
        assert!(rho_fine > 0.0 && rho_fine < 1.0);
    }

    #[test]
    fn feasibility_indicators_are_monotone_in_rho() {
        let model = ChannelStateModel::perfect_csit(&uniform_fade_pmf()).unwrap();
        let params = GmacParams::new(1.0, 0.0, 5.0, 5.0).unwrap();
        let cfg = PlannerConfig::default();
        let lhs = skewed_source().lossless_lhs();
        let mut individual_was_ok = true;
        let mut sum_ok_seen = false;
        for i in 0..=10 {
            let rho = i as f64 / 10.0;
            let trial = params.with_rho_tilde(rho).unwrap();
            let opt = power_opt::optimize_sum_rate(&model, &trial, cfg.opt_tol).unwrap();
            let rhs = gmac_rates::rate_triple(&model, &opt.policy, &trial).unwrap();
            let individual_ok = rhs.r1 > lhs.r1 && rhs.r2 > lhs.r2;
            let sum_ok = rhs.sum > lhs.sum;
            assert!(
                individual_was_ok || !individual_ok,
                "individual feasibility recovered at rho = {rho}"
            );
            assert!(
                !sum_ok_seen || sum_ok,
                "sum feasibility lost at rho = {rho}"
            );
            individual_was_ok = individual_ok;
            sum_ok_seen = sum_ok_seen || sum_ok;
        }
    }

    #[test]
    fn symmetric_grid_points_are_diagonal() {
        let grid = RateGrid::Symmetric {
            max_rate: 0.05,
            step: 0.01,
        };
        let points = grid.points().unwrap();
        assert_eq!(points.len(), 6);
        assert_eq!(points[0], (0.0, 0.0));
        assert!(points.iter().all(|&(a, b)| a == b));
    }

    #[test]
    fn grid_validation() {
        assert!(RateGrid::Symmetric {
            max_rate: 1.0,
            step: 0.0
        }
        .points()
        .is_err());
        assert!(RateGrid::Explicit(vec![]).points().is_err());
        assert!(RateGrid::Explicit(vec![(0.5, -0.1)]).points().is_err());
    }

    #[test]
    fn min_distortion_picks_the_largest_feasible_symmetric_rate_when_independent() {
        // Single fade state (1, 1), independent sources: the codewords are
        // uncorrelated, both bounds are rate-independent, and the best grid
        // point is the largest R with R < individual and 2R < sum.
        let fade = FiniteJointPmf::from_pairs(&[((1.0, 1.0), 1.0)]).unwrap();
        let model = ChannelStateModel::perfect_csit(&fade).unwrap();
        let params = GmacParams::new(1.0, 0.0, 5.0, 5.0).unwrap();
        let cfg = PlannerConfig::default();
        let grid = RateGrid::Symmetric {
            max_rate: 4.0,
            step: 0.01,
        };
        let result = min_distortion_lt(0.0, &model, &params, &grid, &cfg)
            .unwrap()
            .expect("feasible points exist");
        let individual = 0.5 * (1.0f64 + 5.0).log2(); // 1.2925
        let half_sum = 0.25 * (1.0f64 + 10.0).log2(); // 0.8648
        let binding = individual.min(half_sum);
        let expected_r = (binding / 0.01).floor() * 0.01;
        assert!(
            (result.r1 - expected_r).abs() < 1e-12,
            "picked r1 = {}, expected {expected_r}",
            result.r1
        );
        assert_eq!(result.r1, result.r2);
        assert!((result.d1 - 0.25f64.powf(result.r1)).abs() < 1e-12);
        assert!(result.report.verdict != Verdict::Infeasible);
    }

    #[test]
    fn min_distortion_improves_under_grid_refinement() {
        let model = ChannelStateModel::bsc_csit(&uniform_fade_pmf(), 0.1).unwrap();
        let params = GmacParams::new(1.0, 0.0, 5.0, 5.0).unwrap();
        let cfg = PlannerConfig::default();
        let coarse = RateGrid::Symmetric {
            max_rate: 4.0,
            step: 0.2,
        };
        let fine = RateGrid::Symmetric {
            max_rate: 4.0,
            step: 0.1,
        };
        let d_coarse = min_distortion_lt(0.5, &model, &params, &coarse, &cfg)
            .unwrap()
            .unwrap()
            .d_sum;
        let d_fine = min_distortion_lt(0.5, &model, &params, &fine, &cfg)
            .unwrap()
            .unwrap()
            .d_sum;
        assert!(
            d_fine <= d_coarse + 1e-15,
            "refinement worsened distortion: {d_fine} > {d_coarse}"
        );
    }

    #[test]
    fn full_grid_beats_the_symmetric_grid_on_asymmetric_budgets() {
        let fade = FiniteJointPmf::from_pairs(&[((1.0, 1.0), 1.0)]).unwrap();
        let model = ChannelStateModel::perfect_csit(&fade).unwrap();
        let params = GmacParams::new(1.0, 0.0, 8.0, 1.0).unwrap();
        let cfg = PlannerConfig::default();
        let symmetric = RateGrid::Symmetric {
            max_rate: 3.0,
            step: 0.05,
        };
        let full = RateGrid::Full {
            max_rate_1: 3.0,
            max_rate_2: 3.0,
            step: 0.05,
        };
        let d_sym = min_distortion_lt(0.4, &model, &params, &symmetric, &cfg)
            .unwrap()
            .unwrap()
            .d_sum;
        let best = min_distortion_lt(0.4, &model, &params, &full, &cfg)
            .unwrap()
            .unwrap();
        assert!(
            best.d_sum <= d_sym + 1e-15,
            "full grid {} worse than symmetric {d_sym}",
            best.d_sum
        );
        assert!(
            best.r1 > best.r2,
            "stronger budget should buy the higher rate: ({}, {})",
            best.r1,
            best.r2
        );
    }

    #[test]
    fn min_distortion_reports_all_infeasible_grids() {
        let fade = FiniteJointPmf::from_pairs(&[((1.0, 1.0), 1.0)]).unwrap();
        let model = ChannelStateModel::perfect_csit(&fade).unwrap();
        let params = GmacParams::new(1.0, 0.0, 5.0, 5.0).unwrap();
        let cfg = PlannerConfig::default();
        let grid = RateGrid::Explicit(vec![(10.0, 10.0), (12.0, 12.0)]);
        let result = min_distortion_lt(0.0, &model, &params, &grid, &cfg).unwrap();
        assert!(result.is_none());
    }

    fn base_scenario() -> Scenario {
        Scenario {
            fade: uniform_fade_pmf(),
            csit: CsitSpec::Bsc(0.1),
            params: GmacParams::new(1.0, 0.5, 1.0, 1.0).unwrap(),
            source: None,
            grid: RateGrid::default(),
        }
    }

    #[test]
    fn sweep_over_crossover_is_nonincreasing() {
        let rows = sweep(
            &base_scenario(),
            SweepAxis::CrossoverP,
            &[0.0, 0.1, 0.25, 0.5],
            &PlannerConfig::default(),
        )
        .unwrap();
        assert_eq!(rows.len(), 4);
        for pair in rows.windows(2) {
            assert!(
                pair[1].rhs.sum <= pair[0].rhs.sum + 1e-9,
                "sum bound rose from {} to {}",
                pair[0].rhs.sum,
                pair[1].rhs.sum
            );
        }
        assert!(rows.iter().all(|r| r.converged));
    }

    #[test]
    fn rho_sweep_with_uninformative_csit_reproduces_the_upa_curve() {
        // With crossover-1/2 state information the optimal policy is uniform
        // power, so the optimized sweep must trace the UPA objective.
        let scenario = Scenario {
            csit: CsitSpec::Uninformative,
            ..base_scenario()
        };
        let points = [0.0, 0.2, 0.5, 0.8, 1.0];
        let rows = sweep(
            &scenario,
            SweepAxis::RhoTilde,
            &points,
            &PlannerConfig::default(),
        )
        .unwrap();
        let model = scenario.build_model().unwrap();
        for (row, &rho) in rows.iter().zip(points.iter()) {
            let trial = scenario.params.with_rho_tilde(rho).unwrap();
            let upa = gmac_rates::rate_triple(&model, &upa_policy(&model, &trial), &trial)
                .unwrap()
                .sum;
            assert!(
                (row.rhs.sum - upa).abs() < 1e-6,
                "rho {rho}: optimized {} vs UPA {upa}",
                row.rhs.sum
            );
        }
    }

    #[test]
    fn sweep_over_empty_axis_is_empty() {
        let rows = sweep(
            &base_scenario(),
            SweepAxis::RhoTilde,
            &[],
            &PlannerConfig::default(),
        )
        .unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn sweep_rejects_unsorted_or_out_of_range_points() {
        let cfg = PlannerConfig::default();
        assert!(sweep(&base_scenario(), SweepAxis::CrossoverP, &[0.2, 0.1], &cfg).is_err());
        assert!(sweep(&base_scenario(), SweepAxis::CrossoverP, &[0.6], &cfg).is_err());
        assert!(sweep(&base_scenario(), SweepAxis::RhoTilde, &[-0.1], &cfg).is_err());
    }

    #[test]
    fn independent_sources_demand_their_marginal_entropies() {
        // Product source: lhs collapses to (H(U1), H(U2), H(U1) + H(U2)).
        let mut entries = Vec::new();
        for (u1, p1) in [(0.0, 0.3), (1.0, 0.7)] {
            for (u2, p2) in [(0.0, 0.6), (1.0, 0.4)] {
                entries.push(((u1, u2), p1 * p2));
            }
        }
        let src = DiscreteSource::new(FiniteJointPmf::from_pairs(&entries).unwrap()).unwrap();
        let lhs = src.lossless_lhs();
        let h1 = src.pmf().marginal(&[0]).unwrap().entropy();
        let h2 = src.pmf().marginal(&[1]).unwrap().entropy();
        assert!((lhs.r1 - h1).abs() < 1e-12);
        assert!((lhs.r2 - h2).abs() < 1e-12);
        assert!((lhs.sum - (h1 + h2)).abs() < 1e-12);
    }
}
