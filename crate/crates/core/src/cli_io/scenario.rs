//! Scenario files: a flat, sectioned key-value format.
//!
//! ```text
//! # comments start with '#'
//! [channel]
//! fade_values_1 = 1 0.5        # amplitude alphabet, transmitter 1
//! fade_values_2 = 1 0.5
//! fade_probs_1 = 0.5 0.5       # product form (pairs with fade_probs_2), or
//! fade_probs_2 = 0.5 0.5       # fade_probs = <joint, row-major over values_1 x values_2>
//! csit = perfect               # or `bsc <p>` or `none`
//! csir = perfect
//! sigma2 = 1
//! pbar1 = 5
//! pbar2 = 5
//!
//! [code]
//! rho_tilde = 0.3              # fixed input correlation, or `rho_max = <x>`
//!
//! [source]                     # optional
//! type = discrete              # or `gaussian` with `rho = <x>`
//! pmf = 0,0:1/3 0,1:1/3 1,1:1/3 1,0:0
//!
//! [solver]                     # optional; defaults shown
//! tol = 1e-8
//! seed = 0
//! eps_feas = 1e-9
//! grid_max = 4
//! grid_step = 0.01
//! ```
//!
//! Numeric values accept plain literals and `a/b` fractions. Parsing is
//! strict: unknown keys, duplicate keys, non-normalized pmfs, out-of-range
//! crossover probabilities and negative powers are each rejected with a
//! diagnostic naming the offending key.

use crate::finite_prob::FiniteJointPmf;
use crate::gmac_rates::GmacParams;
use crate::planner::{CsitSpec, RateGrid, Scenario, SourceSpec};
use crate::source_models::DiscreteSource;
use crate::{Error, Result};

use std::collections::BTreeMap;
use std::fmt::Write as _;

/// How the scenario constrains the channel-input correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoSpec {
    /// Evaluate at exactly this correlation.
    Fixed(f64),
    /// Tune the correlation downward from this achievable limit.
    Max(f64),
}

impl RhoSpec {
    pub fn value(&self) -> f64 {
        match *self {
            RhoSpec::Fixed(v) | RhoSpec::Max(v) => v,
        }
    }
}

/// A parsed scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub rho_spec: RhoSpec,
    /// KKT tolerance for the power optimizer.
    pub tol: f64,
    /// Seed for the Monte Carlo validation oracles.
    pub seed: u64,
    /// Marginal-band half-width for verdicts.
    pub eps_feas: f64,
}

fn bad(key: &str, message: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key}: {message}"))
}

fn parse_number(key: &str, token: &str) -> Result<f64> {
    let parsed = if let Some((num, den)) = token.split_once('/') {
        match (num.trim().parse::<f64>(), den.trim().parse::<f64>()) {
            (Ok(n), Ok(d)) if d != 0.0 => Some(n / d),
            _ => None,
        }
    } else {
        token.trim().parse::<f64>().ok()
    };
    parsed
        .filter(|v| v.is_finite())
        .ok_or_else(|| bad(key, format!("cannot parse number `{token}`")))
}

fn parse_number_list(key: &str, value: &str) -> Result<Vec<f64>> {
    let values: Vec<f64> = value
        .split_whitespace()
        .map(|token| parse_number(key, token))
        .collect::<Result<_>>()?;
    if values.is_empty() {
        return Err(bad(key, "expected at least one number"));
    }
    Ok(values)
}

#[derive(Default)]
struct RawConfig {
    entries: BTreeMap<(String, String), String>,
}

impl RawConfig {
    fn take(&mut self, section: &str, key: &str) -> Option<String> {
        self.entries.remove(&(section.to_string(), key.to_string()))
    }

    fn require(&mut self, section: &str, key: &str) -> Result<String> {
        self.take(section, key)
            .ok_or_else(|| bad(key, format!("missing required key in [{section}]")))
    }
}

const SECTIONS: [&str; 4] = ["channel", "code", "source", "solver"];

/// Parse a scenario file into a validated [`ScenarioConfig`].
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let mut raw = RawConfig::default();
    let mut section: Option<String> = None;
    for (line_no, raw_line) in text.lines().enumerate() {
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim().to_ascii_lowercase();
            if !SECTIONS.contains(&name.as_str()) {
                return Err(Error::Config(format!(
                    "line {}: unknown section [{name}]",
                    line_no + 1
                )));
            }
            section = Some(name);
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected `key = value`", line_no + 1))
        })?;
        let section = section.clone().ok_or_else(|| {
            Error::Config(format!(
                "line {}: key before any [section] header",
                line_no + 1
            ))
        })?;
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim().to_string();
        if raw.entries.insert((section, key.clone()), value).is_some() {
            return Err(bad(&key, "duplicate key"));
        }
    }

    // [channel]
    let fade_values_1 =
        parse_number_list("fade_values_1", &raw.require("channel", "fade_values_1")?)?;
    let fade_values_2 =
        parse_number_list("fade_values_2", &raw.require("channel", "fade_values_2")?)?;
    for (key, values) in [
        ("fade_values_1", &fade_values_1),
        ("fade_values_2", &fade_values_2),
    ] {
        if let Some(&v) = values.iter().find(|&&v| v < 0.0) {
            return Err(bad(key, format!("fade amplitude {v} is negative")));
        }
    }

    let joint_probs = raw.take("channel", "fade_probs");
    let product_1 = raw.take("channel", "fade_probs_1");
    let product_2 = raw.take("channel", "fade_probs_2");
    let fade = match (joint_probs, product_1, product_2) {
        (Some(joint), None, None) => {
            let probs = parse_number_list("fade_probs", &joint)?;
            if probs.len() != fade_values_1.len() * fade_values_2.len() {
                return Err(bad(
                    "fade_probs",
                    format!(
                        "expected {} entries (row-major over the two alphabets), got {}",
                        fade_values_1.len() * fade_values_2.len(),
                        probs.len()
                    ),
                ));
            }
            let mut entries = Vec::new();
            for (i, &h1) in fade_values_1.iter().enumerate() {
                for (j, &h2) in fade_values_2.iter().enumerate() {
                    entries.push(((h1, h2), probs[i * fade_values_2.len() + j]));
                }
            }
            FiniteJointPmf::from_pairs(&entries).map_err(|e| bad("fade_probs", e))?
        }
        (None, Some(p1), Some(p2)) => {
            let probs_1 = parse_number_list("fade_probs_1", &p1)?;
            let probs_2 = parse_number_list("fade_probs_2", &p2)?;
            if probs_1.len() != fade_values_1.len() {
                return Err(bad("fade_probs_1", "length differs from fade_values_1"));
            }
            if probs_2.len() != fade_values_2.len() {
                return Err(bad("fade_probs_2", "length differs from fade_values_2"));
            }
            let sum1: f64 = probs_1.iter().sum();
            if (sum1 - 1.0).abs() > 1e-12 {
                return Err(bad("fade_probs_1", format!("probabilities sum to {sum1}")));
            }
            let sum2: f64 = probs_2.iter().sum();
            if (sum2 - 1.0).abs() > 1e-12 {
                return Err(bad("fade_probs_2", format!("probabilities sum to {sum2}")));
            }
            let mut entries = Vec::new();
            for (&h1, &q1) in fade_values_1.iter().zip(&probs_1) {
                for (&h2, &q2) in fade_values_2.iter().zip(&probs_2) {
                    entries.push(((h1, h2), q1 * q2));
                }
            }
            FiniteJointPmf::from_pairs(&entries).map_err(|e| bad("fade_probs_1", e))?
        }
        (None, None, None) => {
            return Err(bad(
                "fade_probs",
                "provide either fade_probs or both fade_probs_1 and fade_probs_2",
            ))
        }
        _ => {
            return Err(bad(
                "fade_probs",
                "joint fade_probs and product fade_probs_1/fade_probs_2 are mutually exclusive",
            ))
        }
    };

    let csit_value = raw.require("channel", "csit")?.to_ascii_lowercase();
    let csit = {
        let mut tokens = csit_value.split_whitespace();
        match (tokens.next(), tokens.next(), tokens.next()) {
            (Some("perfect"), None, _) => CsitSpec::Perfect,
            (Some("none"), None, _) => CsitSpec::Uninformative,
            (Some("bsc"), Some(p), None) => {
                let p = parse_number("csit", p)?;
                if !(0.0..=0.5).contains(&p) {
                    return Err(bad(
                        "csit",
                        format!("BSC crossover must lie in [0, 0.5], got {p}"),
                    ));
                }
                CsitSpec::Bsc(p)
            }
            _ => {
                return Err(bad(
                    "csit",
                    format!("expected `perfect`, `none`, or `bsc <p>`, got `{csit_value}`"),
                ))
            }
        }
    };

    if let Some(csir) = raw.take("channel", "csir") {
        if !csir.trim().eq_ignore_ascii_case("perfect") {
            return Err(bad(
                "csir",
                "only perfect receiver state information is supported",
            ));
        }
    }

    let sigma2 = parse_number("sigma2", &raw.require("channel", "sigma2")?)?;
    let pbar1 = parse_number("pbar1", &raw.require("channel", "pbar1")?)?;
    let pbar2 = parse_number("pbar2", &raw.require("channel", "pbar2")?)?;

    // [code]
    let rho_tilde = raw.take("code", "rho_tilde");
    let rho_max = raw.take("code", "rho_max");
    let rho_spec = match (rho_tilde, rho_max) {
        (Some(v), None) => RhoSpec::Fixed(parse_number("rho_tilde", &v)?),
        (None, Some(v)) => RhoSpec::Max(parse_number("rho_max", &v)?),
        (None, None) => return Err(bad("rho_tilde", "provide rho_tilde or rho_max in [code]")),
        (Some(_), Some(_)) => {
            return Err(bad(
                "rho_tilde",
                "rho_tilde and rho_max are mutually exclusive",
            ))
        }
    };
    let params = GmacParams::new(sigma2, rho_spec.value(), pbar1, pbar2).map_err(|e| match e {
        Error::CorrelationOutOfRange(v) => {
            bad("rho_tilde", format!("correlation {v} outside [-1, 1]"))
        }
        Error::NegativePower { user, value } => bad(
            if user == 1 { "pbar1" } else { "pbar2" },
            format!("negative power {value}"),
        ),
        other => bad("sigma2", other),
    })?;

    // [source]
    let source = match raw.take("source", "type") {
        None => None,
        Some(kind) => match kind.trim().to_ascii_lowercase().as_str() {
            "discrete" => {
                let pmf_text = raw.require("source", "pmf")?;
                let mut entries = Vec::new();
                for token in pmf_text.split_whitespace() {
                    let (label, prob) = token.split_once(':').ok_or_else(|| {
                        bad("pmf", format!("expected `u1,u2:prob`, got `{token}`"))
                    })?;
                    let (u1, u2) = label.split_once(',').ok_or_else(|| {
                        bad("pmf", format!("expected `u1,u2:prob`, got `{token}`"))
                    })?;
                    entries.push((
                        (parse_number("pmf", u1)?, parse_number("pmf", u2)?),
                        parse_number("pmf", prob)?,
                    ));
                }
                let pmf = FiniteJointPmf::from_pairs(&entries).map_err(|e| bad("pmf", e))?;
                Some(SourceSpec::Discrete(
                    DiscreteSource::new(pmf).map_err(|e| bad("pmf", e))?,
                ))
            }
            "gaussian" => {
                let rho = parse_number("rho", &raw.require("source", "rho")?)?;
                if rho.abs() >= 1.0 {
                    return Err(bad(
                        "rho",
                        format!("source correlation {rho} outside (-1, 1)"),
                    ));
                }
                Some(SourceSpec::Gaussian { rho })
            }
            other => {
                return Err(bad(
                    "type",
                    format!("expected `discrete` or `gaussian`, got `{other}`"),
                ))
            }
        },
    };

    // [solver]
    let tol = match raw.take("solver", "tol") {
        Some(v) => parse_number("tol", &v)?,
        None => 1e-8,
    };
    if tol.is_nan() || tol <= 0.0 {
        return Err(bad("tol", format!("tolerance must be positive, got {tol}")));
    }
    let seed = match raw.take("solver", "seed") {
        Some(v) => v
            .trim()
            .parse::<u64>()
            .map_err(|_| bad("seed", format!("cannot parse seed `{v}`")))?,
        None => 0,
    };
    let eps_feas = match raw.take("solver", "eps_feas") {
        Some(v) => parse_number("eps_feas", &v)?,
        None => crate::planner::DEFAULT_EPS_FEAS,
    };
    if eps_feas < 0.0 {
        return Err(bad("eps_feas", "must be nonnegative"));
    }
    let grid_max = match raw.take("solver", "grid_max") {
        Some(v) => parse_number("grid_max", &v)?,
        None => 4.0,
    };
    let grid_step = match raw.take("solver", "grid_step") {
        Some(v) => parse_number("grid_step", &v)?,
        None => 0.01,
    };
    let grid = RateGrid::Symmetric {
        max_rate: grid_max,
        step: grid_step,
    };
    grid.points().map_err(|_| {
        bad(
            "grid_step",
            "rate grid needs grid_max >= 0 and grid_step > 0",
        )
    })?;

    if let Some(((section, key), _)) = raw.entries.iter().next() {
        return Err(bad(key, format!("unknown key in [{section}]")));
    }

    Ok(ScenarioConfig {
        scenario: Scenario {
            fade,
            csit,
            params,
            source,
            grid,
        },
        rho_spec,
        tol,
        seed,
        eps_feas,
    })
}

/// Canonical text form: `parse_scenario(serialize_scenario(cfg)) == cfg`.
pub fn serialize_scenario(cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    let scenario = &cfg.scenario;
    let values_1 = distinct_coord(&scenario.fade, 0);
    let values_2 = distinct_coord(&scenario.fade, 1);
    out.push_str("[channel]\n");
    let _ = writeln!(out, "fade_values_1 = {}", join_numbers(&values_1));
    let _ = writeln!(out, "fade_values_2 = {}", join_numbers(&values_2));
    let joint: Vec<f64> = values_1
        .iter()
        .flat_map(|&h1| {
            values_2
                .iter()
                .map(move |&h2| scenario.fade.prob_of(&[h1, h2]))
        })
        .collect();
    let _ = writeln!(out, "fade_probs = {}", join_numbers(&joint));
    match scenario.csit {
        CsitSpec::Perfect => out.push_str("csit = perfect\n"),
        CsitSpec::Uninformative => out.push_str("csit = none\n"),
        CsitSpec::Bsc(p) => {
            let _ = writeln!(out, "csit = bsc {p}");
        }
    }
    out.push_str("csir = perfect\n");
    let _ = writeln!(out, "sigma2 = {}", scenario.params.sigma2());
    let _ = writeln!(out, "pbar1 = {}", scenario.params.pbar1());
    let _ = writeln!(out, "pbar2 = {}", scenario.params.pbar2());
    out.push_str("\n[code]\n");
    match cfg.rho_spec {
        RhoSpec::Fixed(v) => {
            let _ = writeln!(out, "rho_tilde = {v}");
        }
        RhoSpec::Max(v) => {
            let _ = writeln!(out, "rho_max = {v}");
        }
    }
    if let Some(source) = &scenario.source {
        out.push_str("\n[source]\n");
        match source {
            SourceSpec::Discrete(src) => {
                out.push_str("type = discrete\n");
                let entries: Vec<String> = src
                    .pmf()
                    .iter()
                    .map(|(o, p)| format!("{},{}:{}", o[0], o[1], p))
                    .collect();
                let _ = writeln!(out, "pmf = {}", entries.join(" "));
            }
            SourceSpec::Gaussian { rho } => {
                out.push_str("type = gaussian\n");
                let _ = writeln!(out, "rho = {rho}");
            }
        }
    }
    out.push_str("\n[solver]\n");
    let _ = writeln!(out, "tol = {}", cfg.tol);
    let _ = writeln!(out, "seed = {}", cfg.seed);
    let _ = writeln!(out, "eps_feas = {}", cfg.eps_feas);
    if let RateGrid::Symmetric { max_rate, step } = &scenario.grid {
        let _ = writeln!(out, "grid_max = {max_rate}");
        let _ = writeln!(out, "grid_step = {step}");
    }
    out
}

fn distinct_coord(pmf: &FiniteJointPmf, coord: usize) -> Vec<f64> {
    let mut values: Vec<f64> = Vec::new();
    for (outcome, _) in pmf.iter() {
        if !values.contains(&outcome[coord]) {
            values.push(outcome[coord]);
        }
    }
    values
}

fn join_numbers(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}
