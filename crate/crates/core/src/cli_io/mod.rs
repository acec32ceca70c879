//! Command-line surface and CSV emission.
//!
//! Subcommands: `rates`, `optimize`, `feasibility`, `distortion`, `sweep`,
//! `validate`. Each reads a scenario file (see [`scenario`]), prints a
//! human-readable report to stdout, and optionally writes a CSV via `--out`.
//! CSV files carry a mandatory header row, 6-significant-digit numbers with
//! `.` decimal separator and `\n` line endings, and are byte-identical
//! across runs for a fixed scenario and seed. Files are written whole to a
//! temporary sibling and renamed into place, so a failed run never leaves a
//! partial CSV.
//!
//! Exit codes: 0 on success, 1 when `--strict` meets an infeasible verdict
//! or `validate` finds a Monte Carlo comparison outside three standard
//! errors, 2 on input errors.

pub mod scenario;

pub use scenario::{parse_scenario, serialize_scenario, RhoSpec, ScenarioConfig};

use crate::gmac_rates::{self, GmacParams, PowerPolicy};
use crate::planner::{
    self, min_distortion_lt, sweep, FeasibilityReport, PlannerConfig, SourceSpec, SweepAxis,
    SweepRow, Verdict,
};
use crate::power_opt::{self, OptimizationResult};
use crate::source_models::{self, GaussianLtConfig};
use crate::{Error, Result};

use clap::{Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

/// Run the CLI against an argument list (without the binary name) and return
/// the process exit code. Output files are written as a side effect.
pub fn run_command<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut argv: Vec<OsString> = vec![OsString::from("fademac")];
    argv.extend(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            // Help/version are successful terminations of parsing.
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}

#[derive(Parser)]
#[command(
    name = "fademac",
    about = "Rate bounds, power allocation, and distortion planning for a fading Gaussian MAC",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the three rate bounds for a policy.
    Rates {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = PolicyArg::Upa)]
        policy: PolicyArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Maximize the sum bound over power policies.
    Optimize {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check whether the scenario's source passes the rate conditions.
    Feasibility {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = PolicyArg::Optimal)]
        policy: PolicyArg,
        /// Exit 1 when the verdict is infeasible.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimum-total-distortion quantizer rates for a Gaussian source.
    Distortion {
        scenario: PathBuf,
        /// Exit 1 when every grid point is infeasible.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the scenario along an axis and emit one CSV row per point.
    Sweep {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        axis: AxisArg,
        #[arg(long, value_delimiter = ',', required = true)]
        points: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare closed forms against seeded Monte Carlo estimates at 3 sigma.
    Validate {
        scenario: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Upa,
    Tdma,
    Optimal,
}

impl PolicyArg {
    fn name(&self) -> &'static str {
        match self {
            PolicyArg::Upa => "upa",
            PolicyArg::Tdma => "tdma",
            PolicyArg::Optimal => "optimal",
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum AxisArg {
    /// Transmitter-state BSC crossover probability.
    P,
    /// Channel-input correlation.
    RhoTilde,
    /// Gaussian source correlation.
    Rho,
}

impl From<AxisArg> for SweepAxis {
    fn from(axis: AxisArg) -> Self {
        match axis {
            AxisArg::P => SweepAxis::CrossoverP,
            AxisArg::RhoTilde => SweepAxis::RhoTilde,
            AxisArg::Rho => SweepAxis::SourceRho,
        }
    }
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Rates {
            scenario,
            policy,
            out,
        } => cmd_rates(&scenario, policy, out.as_deref()),
        Command::Optimize { scenario, out } => cmd_optimize(&scenario, out.as_deref()),
        Command::Feasibility {
            scenario,
            policy,
            strict,
            out,
        } => cmd_feasibility(&scenario, policy, strict, out.as_deref()),
        Command::Distortion {
            scenario,
            strict,
            out,
        } => cmd_distortion(&scenario, strict, out.as_deref()),
        Command::Sweep {
            scenario,
            axis,
            points,
            out,
        } => cmd_sweep(&scenario, axis, &points, out.as_deref()),
        Command::Validate {
            scenario,
            samples,
            seed,
            out,
        } => cmd_validate(&scenario, samples, seed, out.as_deref()),
    }
}

fn load(path: &Path) -> Result<ScenarioConfig> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}

fn planner_config(cfg: &ScenarioConfig) -> PlannerConfig {
    PlannerConfig {
        eps_feas: cfg.eps_feas,
        opt_tol: cfg.tol,
        ..PlannerConfig::default()
    }
}

fn build_policy(
    arg: PolicyArg,
    model: &crate::finite_prob::ChannelStateModel,
    params: &GmacParams,
    tol: f64,
) -> Result<(PowerPolicy, Option<OptimizationResult>)> {
    match arg {
        PolicyArg::Upa => Ok((power_opt::upa_policy(model, params), None)),
        PolicyArg::Tdma => Ok((power_opt::random_tdma_policy(model, params)?, None)),
        PolicyArg::Optimal => {
            let result = power_opt::optimize_sum_rate(model, params, tol)?;
            Ok((result.policy.clone(), Some(result)))
        }
    }
}

fn cmd_rates(path: &Path, policy_arg: PolicyArg, out: Option<&Path>) -> Result<i32> {
    let cfg = load(path)?;
    let model = cfg.scenario.build_model()?;
    let params = cfg.scenario.params;
    let (policy, _) = build_policy(policy_arg, &model, &params, cfg.tol)?;
    let triple = gmac_rates::rate_triple(&model, &policy, &params)?;
    println!(
        "rates ({}): r1_bound = {}, r2_bound = {}, sum_bound = {} bits/use",
        policy_arg.name(),
        fmt_sig(triple.r1),
        fmt_sig(triple.r2),
        fmt_sig(triple.sum)
    );
    if let Some(out) = out {
        let mut csv = String::from("policy,r1_bound,r2_bound,sum_bound\n");
        csv.push_str(&format!(
            "{},{},{},{}\n",
            policy_arg.name(),
            fmt_sig(triple.r1),
            fmt_sig(triple.r2),
            fmt_sig(triple.sum)
        ));
        write_atomic(out, &csv)?;
    }
    Ok(0)
}

fn cmd_optimize(path: &Path, out: Option<&Path>) -> Result<i32> {
    let cfg = load(path)?;
    let model = cfg.scenario.build_model()?;
    let params = cfg.scenario.params;
    let result = power_opt::optimize_sum_rate(&model, &params, cfg.tol)?;
    println!(
        "objective = {} bits/use, kkt_residual = {}, iterations = {}, converged = {}",
        fmt_sig(result.objective),
        fmt_sig(result.kkt_residual),
        result.iterations,
        result.converged
    );
    for &((h1, h2), (p1, p2)) in result.policy.iter() {
        println!(
            "  state ({}, {}): P = ({}, {})",
            fmt_sig(h1),
            fmt_sig(h2),
            fmt_sig(p1),
            fmt_sig(p2)
        );
    }
    if !result.converged {
        eprintln!("warning: optimizer hit the iteration cap before the tolerance");
    }
    if let Some(out) = out {
        let mut csv =
            String::from("csit_1,csit_2,p1,p2,objective,kkt_residual,iterations,converged\n");
        for &((h1, h2), (p1, p2)) in result.policy.iter() {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                fmt_sig(h1),
                fmt_sig(h2),
                fmt_sig(p1),
                fmt_sig(p2),
                fmt_sig(result.objective),
                fmt_sig(result.kkt_residual),
                result.iterations,
                result.converged
            ));
        }
        write_atomic(out, &csv)?;
    }
    Ok(0)
}

fn cmd_feasibility(
    path: &Path,
    policy_arg: PolicyArg,
    strict: bool,
    out: Option<&Path>,
) -> Result<i32> {
    let cfg = load(path)?;
    let model = cfg.scenario.build_model()?;
    let planner_cfg = planner_config(&cfg);
    let src = match &cfg.scenario.source {
        Some(SourceSpec::Discrete(src)) => src.clone(),
        Some(SourceSpec::Gaussian { .. }) => {
            return Err(Error::Config(
                "feasibility needs a discrete source; use `distortion` for Gaussian sources".into(),
            ))
        }
        None => {
            return Err(Error::Config(
                "feasibility needs a [source] section in the scenario".into(),
            ))
        }
    };
    let report = match cfg.rho_spec {
        RhoSpec::Fixed(_) => {
            let params = cfg.scenario.params;
            let (policy, _) = build_policy(policy_arg, &model, &params, cfg.tol)?;
            planner::check_lossless(&src, &model, &params, &policy, &planner_cfg)?
        }
        RhoSpec::Max(rho_max) => {
            if policy_arg != PolicyArg::Optimal {
                return Err(Error::Config(
                    "rho_max scenarios tune the optimal policy; --policy must be optimal".into(),
                ));
            }
            let lhs = src.lossless_lhs();
            let (_, report) =
                planner::tune_rho(&lhs, &model, &cfg.scenario.params, rho_max, &planner_cfg)?;
            report
        }
    };
    print_report(&report, policy_arg.name());
    if let Some(out) = out {
        write_atomic(out, &report_csv(&report))?;
    }
    Ok(if strict && report.verdict == Verdict::Infeasible {
        1
    } else {
        0
    })
}

fn print_report(report: &FeasibilityReport, policy_name: &str) {
    println!(
        "feasibility ({policy_name}, rho_tilde = {}): {}",
        fmt_sig(report.rho_tilde),
        report.verdict.as_str()
    );
    for (name, idx) in [("r1 ", 0usize), ("r2 ", 1), ("sum", 2)] {
        println!(
            "  {name}: lhs = {}, rhs = {}, margin = {}",
            fmt_sig(report.lhs.as_array()[idx]),
            fmt_sig(report.rhs.as_array()[idx]),
            fmt_sig(report.margins[idx])
        );
    }
}

fn report_csv(report: &FeasibilityReport) -> String {
    let mut csv = String::from("constraint,lhs,rhs,margin,verdict\n");
    for (name, idx) in [("r1", 0usize), ("r2", 1), ("sum", 2)] {
        csv.push_str(&format!(
            "{name},{},{},{},{}\n",
            fmt_sig(report.lhs.as_array()[idx]),
            fmt_sig(report.rhs.as_array()[idx]),
            fmt_sig(report.margins[idx]),
            report.verdict.as_str()
        ));
    }
    csv
}

fn cmd_distortion(path: &Path, strict: bool, out: Option<&Path>) -> Result<i32> {
    let cfg = load(path)?;
    let model = cfg.scenario.build_model()?;
    let planner_cfg = planner_config(&cfg);
    let rho = match &cfg.scenario.source {
        Some(SourceSpec::Gaussian { rho }) => *rho,
        _ => {
            return Err(Error::Config(
                "distortion needs a gaussian [source] section".into(),
            ))
        }
    };
    let result = min_distortion_lt(
        rho,
        &model,
        &cfg.scenario.params,
        &cfg.scenario.grid,
        &planner_cfg,
    )?;
    let header = "r1,r2,d1,d2,d_sum,verdict,rho_tilde\n";
    match result {
        Some(result) => {
            println!(
                "min distortion: R = ({}, {}), d = ({}, {}), d_sum = {}, verdict {}",
                fmt_sig(result.r1),
                fmt_sig(result.r2),
                fmt_sig(result.d1),
                fmt_sig(result.d2),
                fmt_sig(result.d_sum),
                result.report.verdict.as_str()
            );
            if !result.converged {
                eprintln!("warning: optimizer did not converge at the selected grid point");
            }
            if let Some(out) = out {
                let csv = format!(
                    "{header}{},{},{},{},{},{},{}\n",
                    fmt_sig(result.r1),
                    fmt_sig(result.r2),
                    fmt_sig(result.d1),
                    fmt_sig(result.d2),
                    fmt_sig(result.d_sum),
                    result.report.verdict.as_str(),
                    fmt_sig(result.report.rho_tilde)
                );
                write_atomic(out, &csv)?;
            }
            Ok(0)
        }
        None => {
            println!("min distortion: every grid point is infeasible");
            if let Some(out) = out {
                let csv = format!("{header},,,,,infeasible,\n");
                write_atomic(out, &csv)?;
            }
            Ok(if strict { 1 } else { 0 })
        }
    }
}

fn cmd_sweep(path: &Path, axis: AxisArg, points: &[f64], out: Option<&Path>) -> Result<i32> {
    let cfg = load(path)?;
    let planner_cfg = planner_config(&cfg);
    let rows = sweep(&cfg.scenario, axis.into(), points, &planner_cfg)?;
    let csv = sweep_csv(&rows);
    match out {
        Some(out) => {
            write_atomic(out, &csv)?;
            println!("wrote {} rows to {}", rows.len(), out.display());
        }
        None => print!("{csv}"),
    }
    Ok(0)
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut csv = String::from(
        "axis_value,r1_bound,r2_bound,sum_bound,d1,d2,verdict,kkt_residual,converged\n",
    );
    for row in rows {
        let opt = |v: Option<f64>| v.map(fmt_sig).unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            fmt_sig(row.axis_value),
            fmt_sig(row.rhs.r1),
            fmt_sig(row.rhs.r2),
            fmt_sig(row.rhs.sum),
            opt(row.d1),
            opt(row.d2),
            row.verdict.map(|v| v.as_str()).unwrap_or(""),
            fmt_sig(row.kkt_residual),
            row.converged
        ));
    }
    csv
}

fn cmd_validate(
    path: &Path,
    samples: usize,
    seed_override: Option<u64>,
    out: Option<&Path>,
) -> Result<i32> {
    let cfg = load(path)?;
    let model = cfg.scenario.build_model()?;
    let params = cfg.scenario.params;
    let seed = seed_override.unwrap_or(cfg.seed);

    struct Row {
        quantity: &'static str,
        closed_form: f64,
        mc: f64,
        std_error: f64,
    }
    let mut rows: Vec<Row> = Vec::new();

    // Rate bounds under uniform power: enumeration vs sampling.
    let policy = power_opt::upa_policy(&model, &params);
    let exact = gmac_rates::rate_triple(&model, &policy, &params)?;
    let mc = gmac_rates::mc_rate_triple(&model, &policy, &params, samples, seed)?;
    for (quantity, truth, estimate) in [
        ("rate_r1", exact.r1, mc.r1),
        ("rate_r2", exact.r2, mc.r2),
        ("rate_sum", exact.sum, mc.sum),
    ] {
        rows.push(Row {
            quantity,
            closed_form: truth,
            mc: estimate.mean,
            std_error: estimate.std_error,
        });
    }

    // Gaussian quantizer distortions at one representative rate pair.
    if let Some(SourceSpec::Gaussian { rho }) = &cfg.scenario.source {
        let lt = GaussianLtConfig::new(*rho, 1.0, 1.0)?;
        let derived = source_models::gaussian_lt(&lt);
        let mc = source_models::mc_conditional_variance(&lt, samples, seed)?;
        rows.push(Row {
            quantity: "lt_d1",
            closed_form: derived.d1,
            mc: mc.d1.mean,
            std_error: mc.d1.std_error,
        });
        rows.push(Row {
            quantity: "lt_d2",
            closed_form: derived.d2,
            mc: mc.d2.mean,
            std_error: mc.d2.std_error,
        });
    }

    let mut csv = String::from("quantity,closed_form,mc_estimate,std_error,z_score,pass\n");
    let mut all_pass = true;
    for row in &rows {
        let z = if row.std_error > 0.0 {
            (row.mc - row.closed_form) / row.std_error
        } else {
            0.0
        };
        let pass = z.abs() <= 3.0;
        all_pass &= pass;
        println!(
            "{}: closed form {}, mc {} +- {}, z = {} -> {}",
            row.quantity,
            fmt_sig(row.closed_form),
            fmt_sig(row.mc),
            fmt_sig(row.std_error),
            fmt_sig(z),
            if pass { "ok" } else { "FAIL" }
        );
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.quantity,
            fmt_sig(row.closed_form),
            fmt_sig(row.mc),
            fmt_sig(row.std_error),
            fmt_sig(z),
            pass
        ));
    }
    if let Some(out) = out {
        write_atomic(out, &csv)?;
    }
    Ok(if all_pass { 0 } else { 1 })
}

/// Format with 6 significant digits; values far from unit scale switch to
/// scientific notation so the digit count stays put.
fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&magnitude) {
        format!("{x:.5e}")
    } else {
        format!("{:.*}", (5 - magnitude).max(0) as usize, x)
    }
}

/// Write the whole file, then rename over the destination.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = PathBuf::from(format!("{}.tmp", path.display()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
