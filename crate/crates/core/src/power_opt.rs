//! Max-sum-rate power allocation under average power constraints.
//!
//! The program is
//!
//! ```text
//! maximize   sum bound of `gmac_rates::rate_triple`
//! over       P1(ĥ), P2(ĥ) >= 0 for every transmitter-side state ĥ
//! subject to E[P_i(Ĥ)] <= P̄_i,  i = 1, 2
//! ```
//!
//! which is concave for nonnegative input correlation: each per-state log
//! argument is a nonnegative combination of `P1`, `P2`, and the concave
//! coupling `sqrt(P1 P2)`. The solver is projected gradient ascent on the
//! stacked power vector with Euclidean projection onto the two per-user sets
//! `{P >= 0, E[P] <= P̄}` (water-level bisection) and Armijo backtracking
//! (halving, initial step 1). Optimality is certified by a KKT residual: the
//! budget-normalized gradient must be constant on positive-power states,
//! dominate no zero-power state, and the budget must be complementary.
//!
//! Near-boundary optima (a state power approaching zero with small input
//! correlation) leave the gradient ascent badly conditioned; when it stalls
//! above tolerance, a few rounds of exact per-user water-filling — solving
//! each user's level problem to machine precision with the other held fixed
//! — finish the job. The certificate is recomputed afterwards either way.
//!
//! Baselines: [`upa_policy`] (uniform power) and [`random_tdma_policy`]
//! (only the instantaneously stronger transmitter sends, scaled to the
//! budget; needs perfect transmitter-side state information).

use crate::finite_prob::ChannelStateModel;
use crate::gmac_rates::{self, cross_slope, GmacParams, PowerPolicy};
use crate::{Error, Result};

const LN_2: f64 = std::f64::consts::LN_2;

/// Default KKT-residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Iteration cap for the gradient ascent.
pub const MAX_ITERATIONS: usize = 100_000;

/// Armijo sufficient-increase fraction.
const ARMIJO_C1: f64 = 1e-4;

/// One-sided derivatives at a zero power can be infinite. The surrogate used
/// for stepping is this multiple of the largest finite component, keeping
/// the Armijo prediction commensurate with the square-root-shaped gain that
/// is actually attainable while still strongly favoring corner escape.
const GRADIENT_CAP_FACTOR: f64 = 100.0;

/// Output of [`optimize_sum_rate`].
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub policy: PowerPolicy,
    /// Sum bound achieved by `policy`, in bits per channel use.
    pub objective: f64,
    /// Optimality-certificate violation at `policy`.
    pub kkt_residual: f64,
    /// Gradient steps taken, plus water-filling rounds when polish ran.
    pub iterations: usize,
    /// False when no phase certified the tolerance (reported, never silent).
    pub converged: bool,
}

/// Uniform power allocation: every state draws the full budget pair.
pub fn upa_policy(model: &ChannelStateModel, params: &GmacParams) -> PowerPolicy {
    PowerPolicy::from_fn(model, |_| (params.pbar1(), params.pbar2()))
        .expect("budgets validated by GmacParams")
}

/// Only the transmitter with the larger squared fade sends in each state,
/// with a constant power scaled so its average meets the budget exactly;
/// ties share the slot equally.
pub fn random_tdma_policy(model: &ChannelStateModel, params: &GmacParams) -> Result<PowerPolicy> {
    if !model.csit_is_perfect() {
        return Err(Error::RequiresPerfectCsit);
    }
    let states = model.csit_states();
    let share = |h1: f64, h2: f64| -> (f64, f64) {
        let (g1, g2) = (h1 * h1, h2 * h2);
        if g1 > g2 {
            (1.0, 0.0)
        } else if g2 > g1 {
            (0.0, 1.0)
        } else {
            (0.5, 0.5)
        }
    };
    let mut mean_share = (0.0, 0.0);
    for &((h1, h2), w) in &states {
        let (s1, s2) = share(h1, h2);
        mean_share.0 += w * s1;
        mean_share.1 += w * s2;
    }
    let scale = |pbar: f64, mean: f64| if mean > 0.0 { pbar / mean } else { 0.0 };
    let (c1, c2) = (
        scale(params.pbar1(), mean_share.0),
        scale(params.pbar2(), mean_share.1),
    );
    PowerPolicy::new(
        states
            .into_iter()
            .map(|((h1, h2), _)| {
                let (s1, s2) = share(h1, h2);
                ((h1, h2), (c1 * s1, c2 * s2))
            })
            .collect(),
    )
}

/// KKT-certificate residual of an arbitrary policy for the sum-rate program.
///
/// Zero (up to floating point) exactly at the concave program's optimum.
pub fn kkt_residual(
    model: &ChannelStateModel,
    policy: &PowerPolicy,
    params: &GmacParams,
) -> Result<f64> {
    let problem = Problem::build(model, params)?;
    let (p1, p2) = problem.stack_policy(policy)?;
    Ok(problem.kkt_residual(&p1, &p2))
}

/// Maximize the sum bound over feasible policies, starting from uniform
/// power. `tol` bounds the returned KKT residual on convergence.
pub fn optimize_sum_rate(
    model: &ChannelStateModel,
    params: &GmacParams,
    tol: f64,
) -> Result<OptimizationResult> {
    let start = upa_policy(model, params);
    optimize_sum_rate_from(model, params, tol, &start)
}

/// [`optimize_sum_rate`] from an explicit starting policy (projected onto the
/// feasible set first). Used for warm starts and restart experiments.
pub fn optimize_sum_rate_from(
    model: &ChannelStateModel,
    params: &GmacParams,
    tol: f64,
    start: &PowerPolicy,
) -> Result<OptimizationResult> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if params.rho_tilde() < 0.0 {
        return Err(Error::InvalidParameter(
            "sum-rate optimization needs nonnegative input correlation \
             (the objective is concave only there)"
                .into(),
        ));
    }
    let problem = Problem::build(model, params)?;
    let (mut p1, mut p2) = problem.stack_policy(start)?;
    problem.project(&mut p1, 0);
    problem.project(&mut p2, 1);

    let mut value = problem.objective(&p1, &p2);
    let mut iterations = 0;
    let mut converged = false;
    // The line search starts at 1.0 and thereafter from twice the last
    // accepted step, so it finds the curvature scale of the problem instead
    // of creeping. Once predicted gains fall below the floating-point
    // resolution of the objective, the Armijo test is meaningless; in that
    // terminal regime steps are accepted only when they strictly shrink the
    // KKT residual, which is computed from gradients and stays resolvable
    // arbitrarily close to the optimum.
    let mut initial_step = 1.0f64;
    while iterations < MAX_ITERATIONS {
        let residual = problem.kkt_residual(&p1, &p2);
        if residual < tol {
            converged = true;
            break;
        }
        let (g1, g2) = problem.gradient_capped(&p1, &p2);
        let noise_floor = 1e-14 * (1.0 + value.abs());
        let mut step = initial_step;
        let mut moved = false;
        while step > 1e-20 {
            let mut c1: Vec<f64> = p1.iter().zip(&g1).map(|(p, g)| p + step * g).collect();
            let mut c2: Vec<f64> = p2.iter().zip(&g2).map(|(p, g)| p + step * g).collect();
            problem.project(&mut c1, 0);
            problem.project(&mut c2, 1);
            let ascent: f64 = c1
                .iter()
                .zip(&p1)
                .zip(&g1)
                .map(|((c, p), g)| g * (c - p))
                .chain(c2.iter().zip(&p2).zip(&g2).map(|((c, p), g)| g * (c - p)))
                .sum();
            if ascent <= 0.0 {
                break;
            }
            let predicted = ARMIJO_C1 * ascent;
            let accept = if predicted <= noise_floor {
                problem.kkt_residual(&c1, &c2) < residual * (1.0 - 1e-6)
            } else {
                problem.objective(&c1, &c2) >= value + predicted
            };
            if accept {
                p1 = c1;
                p2 = c2;
                value = problem.objective(&p1, &p2);
                moved = true;
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        if !moved {
            break;
        }
        initial_step = (step * 2.0).min(1e9);
    }
    if !converged && problem.kkt_residual(&p1, &p2) >= tol {
        iterations += problem.polish(&mut p1, &mut p2, tol);
    }
    converged = converged || problem.kkt_residual(&p1, &p2) < tol;

    let policy = problem.unstack_policy(&p1, &p2)?;
    let objective = gmac_rates::rate_triple(model, &policy, params)?.sum;
    let kkt = problem.kkt_residual(&p1, &p2);
    Ok(OptimizationResult {
        policy,
        objective,
        kkt_residual: kkt,
        iterations,
        converged,
    })
}

/// Per-CSIT-state term of the sum bound: the fade states sharing one
/// transmitter-side estimate, with their joint probabilities.
struct StateBlock {
    csit: (f64, f64),
    weight: f64,
    fades: Vec<(f64, f64, f64)>, // (probability, h1, h2)
}

struct Problem {
    blocks: Vec<StateBlock>,
    sigma2: f64,
    rho: f64,
    budgets: [f64; 2],
}

impl Problem {
    fn build(model: &ChannelStateModel, params: &GmacParams) -> Result<Self> {
        let mut blocks: Vec<StateBlock> = model
            .csit_states()
            .into_iter()
            .map(|(csit, weight)| StateBlock {
                csit,
                weight,
                fades: Vec::new(),
            })
            .collect();
        for (outcome, q) in model.fade_csit_marginal().iter() {
            if q == 0.0 {
                continue;
            }
            let csit = (outcome[2], outcome[3]);
            let block = blocks
                .iter_mut()
                .find(|b| b.csit == csit)
                .expect("positive-probability state listed in csit_states");
            block.fades.push((q, outcome[0], outcome[1]));
        }
        Ok(Self {
            blocks,
            sigma2: params.sigma2(),
            rho: params.rho_tilde(),
            budgets: [params.pbar1(), params.pbar2()],
        })
    }

    fn stack_policy(&self, policy: &PowerPolicy) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut p1 = Vec::with_capacity(self.blocks.len());
        let mut p2 = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let (a, b) = policy
                .power_for(block.csit)
                .ok_or(Error::MissingPolicyState(block.csit.0, block.csit.1))?;
            p1.push(a);
            p2.push(b);
        }
        Ok((p1, p2))
    }

    fn unstack_policy(&self, p1: &[f64], p2: &[f64]) -> Result<PowerPolicy> {
        PowerPolicy::new(
            self.blocks
                .iter()
                .enumerate()
                .map(|(i, block)| (block.csit, (p1[i], p2[i])))
                .collect(),
        )
    }

    fn objective(&self, p1: &[f64], p2: &[f64]) -> f64 {
        let mut total = 0.0;
        for (i, block) in self.blocks.iter().enumerate() {
            let cross_scale = 2.0 * self.rho * (p1[i] * p2[i]).sqrt();
            for &(q, h1, h2) in &block.fades {
                let u = h1 * h1 * p1[i] + h2 * h2 * p2[i] + h1 * h2 * cross_scale;
                total += q * 0.5 * (1.0 + u / self.sigma2).log2();
            }
        }
        total
    }

    /// Exact per-coordinate partials; one-sided `+inf` at singular corners.
    fn gradient(&self, p1: &[f64], p2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut g1 = vec![0.0; self.blocks.len()];
        let mut g2 = vec![0.0; self.blocks.len()];
        for (i, block) in self.blocks.iter().enumerate() {
            let cross_scale = 2.0 * self.rho * (p1[i] * p2[i]).sqrt();
            for &(q, h1, h2) in &block.fades {
                let u = h1 * h1 * p1[i] + h2 * h2 * p2[i] + h1 * h2 * cross_scale;
                let scale = q * 0.5 / (LN_2 * (self.sigma2 + u));
                g1[i] += scale * (h1 * h1 + cross_slope(h1 * h2 * self.rho, p2[i], p1[i]));
                g2[i] += scale * (h2 * h2 + cross_slope(h1 * h2 * self.rho, p1[i], p2[i]));
            }
        }
        (g1, g2)
    }

    fn gradient_capped(&self, p1: &[f64], p2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (mut g1, mut g2) = self.gradient(p1, p2);
        let largest_finite = g1
            .iter()
            .chain(g2.iter())
            .copied()
            .filter(|g| g.is_finite())
            .fold(0.0f64, f64::max);
        let cap = GRADIENT_CAP_FACTOR * (1.0 + largest_finite);
        for g in g1.iter_mut().chain(g2.iter_mut()) {
            if !g.is_finite() {
                *g = cap;
            }
        }
        (g1, g2)
    }

    /// Euclidean projection of one user's stacked powers onto
    /// `{p >= 0, sum_s w_s p_s <= budget}` by bisecting the water level.
    fn project(&self, powers: &mut [f64], user: usize) {
        let budget = self.budgets[user];
        for p in powers.iter_mut() {
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let weights: Vec<f64> = self.blocks.iter().map(|b| b.weight).collect();
        let used: f64 = powers.iter().zip(&weights).map(|(p, w)| p * w).sum();
        if used <= budget {
            return;
        }
        let shifted = |level: f64, powers: &[f64]| -> f64 {
            powers
                .iter()
                .zip(&weights)
                .map(|(p, w)| w * (p - level * w).max(0.0))
                .sum()
        };
        let mut lo = 0.0;
        let mut hi = powers
            .iter()
            .zip(&weights)
            .map(|(p, w)| p / w)
            .fold(0.0f64, f64::max)
            + 1.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if shifted(mid, powers) > budget {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        for (p, w) in powers.iter_mut().zip(&weights) {
            *p = (*p - hi * w).max(0.0);
        }
    }

    /// Budget-normalized own-power derivative of one user's coordinate in
    /// one block, with the other user's power held fixed. Strictly
    /// decreasing in `own` wherever the user's channel is alive.
    fn level(&self, user: usize, block_idx: usize, own: f64, other: f64) -> f64 {
        let block = &self.blocks[block_idx];
        let (p1, p2) = if user == 0 {
            (own, other)
        } else {
            (other, own)
        };
        let cross_scale = 2.0 * self.rho * (p1 * p2).sqrt();
        let mut slope = 0.0;
        for &(q, h1, h2) in &block.fades {
            let u = h1 * h1 * p1 + h2 * h2 * p2 + h1 * h2 * cross_scale;
            let scale = q * 0.5 / (LN_2 * (self.sigma2 + u));
            let own_gain = if user == 0 {
                h1 * h1 + cross_slope(h1 * h2 * self.rho, p2, p1)
            } else {
                h2 * h2 + cross_slope(h1 * h2 * self.rho, p1, p2)
            };
            slope += scale * own_gain;
        }
        slope / block.weight
    }

    /// Exact water-filling for one user with the other fixed: pick the level
    /// `mu` whose inverse-derivative powers spend the budget, each block
    /// power found by bisecting the decreasing `level` curve.
    fn equalize_user(&self, user: usize, p1: &mut [f64], p2: &mut [f64]) {
        let budget = self.budgets[user];
        let n = self.blocks.len();
        let others: Vec<f64> = (0..n)
            .map(|s| if user == 0 { p2[s] } else { p1[s] })
            .collect();
        let solve_block = |s: usize, mu: f64| -> f64 {
            if self.level(user, s, 0.0, others[s]) <= mu {
                return 0.0;
            }
            let mut hi = 1.0;
            while self.level(user, s, hi, others[s]) > mu && hi < 1e12 {
                hi *= 2.0;
            }
            let mut lo = 0.0;
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if self.level(user, s, mid, others[s]) > mu {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi
        };
        let spend = |mu: f64| -> (f64, Vec<f64>) {
            let powers: Vec<f64> = (0..n).map(|s| solve_block(s, mu)).collect();
            let used = powers
                .iter()
                .zip(self.blocks.iter())
                .map(|(p, b)| p * b.weight)
                .sum();
            (used, powers)
        };
        let mut mu_lo = 1e-18;
        let (used, powers) = spend(mu_lo);
        let chosen = if used <= budget {
            // Dead or nearly dead channel for this user; nothing to equalize.
            powers
        } else {
            let mut mu_hi = mu_lo;
            while spend(mu_hi).0 > budget && mu_hi < 1e18 {
                mu_hi *= 2.0;
            }
            for _ in 0..100 {
                let mid = 0.5 * (mu_lo + mu_hi);
                if spend(mid).0 > budget {
                    mu_lo = mid;
                } else {
                    mu_hi = mid;
                }
            }
            spend(mu_hi).1
        };
        for (s, value) in chosen.into_iter().enumerate() {
            if user == 0 {
                p1[s] = value;
            } else {
                p2[s] = value;
            }
        }
    }

    /// Alternate exact per-user water-filling until the certificate passes
    /// or the round cap is hit. Returns the number of rounds taken.
    fn polish(&self, p1: &mut [f64], p2: &mut [f64], tol: f64) -> usize {
        const MAX_ROUNDS: usize = 60;
        for round in 1..=MAX_ROUNDS {
            self.equalize_user(0, p1, p2);
            self.equalize_user(1, p1, p2);
            if self.kkt_residual(p1, p2) < tol {
                return round;
            }
        }
        MAX_ROUNDS
    }

    /// Certificate violation: per user, the spread of the budget-normalized
    /// gradient over positive-power states, the excess of any zero-power
    /// state over the multiplier estimate, and the complementarity defect.
    fn kkt_residual(&self, p1: &[f64], p2: &[f64]) -> f64 {
        let (g1, g2) = self.gradient(p1, p2);
        let mut residual = 0.0f64;
        for (user, (powers, grads)) in [(0usize, (p1, &g1)), (1usize, (p2, &g2))] {
            let normalized: Vec<f64> = grads
                .iter()
                .zip(self.blocks.iter())
                .map(|(g, b)| g / b.weight)
                .collect();
            let multiplier = normalized.iter().fold(0.0f64, |a, &b| a.max(b));
            let mut spread = 0.0f64;
            for (i, &p) in powers.iter().enumerate() {
                if p > 0.0 {
                    spread = spread.max(multiplier - normalized[i]);
                }
            }
            let used: f64 = powers
                .iter()
                .zip(self.blocks.iter())
                .map(|(p, b)| p * b.weight)
                .sum();
            let complementarity = multiplier * (self.budgets[user] - used).max(0.0);
            let overdraw = (used - self.budgets[user]).max(0.0);
            residual = residual.max(spread).max(complementarity).max(overdraw);
        }
        residual
    }
}
