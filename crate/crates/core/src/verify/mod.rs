//! Randomized checks of the approximation bounds and objective properties
//! against the exhaustive oracle. The solvers under test are injected, so a
//! deliberately broken variant can be shown to fail.

pub mod instances;
mod suites;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::Capacities;
use crate::problem::{Problem, Scenario};
use crate::solvers::{self, SolverResult};

/// Slack allowed on every inequality.
pub const TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// The case counts of the acceptance gate; a few minutes at most.
    #[default]
    Small,
    /// Ten times as many cases.
    Full,
}

impl Scale {
    fn cases(self, small: usize) -> usize {
        match self {
            Scale::Small => small,
            Scale::Full => small * 10,
        }
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Scale::Small),
            "full" => Ok(Scale::Full),
            _ => Err(Error::Config(format!("unknown scale `{s}`, expected small or full"))),
        }
    }
}

pub type CardinalitySolver = fn(&Problem<'_>, usize) -> Result<SolverResult>;
pub type KnapsackSolver = fn(&Problem<'_>, f64) -> Result<SolverResult>;
pub type CapacitySolver = fn(&Problem<'_>, &Capacities) -> Result<SolverResult>;

/// The solvers a verification run exercises.
#[derive(Clone, Copy)]
pub struct SolverSet {
    pub greedy_single: CardinalitySolver,
    pub fast_greedy_knapsack: KnapsackSolver,
    pub partial_enum_knapsack: KnapsackSolver,
    pub greedy_femto: CapacitySolver,
    pub greedy_femto_us: CapacitySolver,
}

impl Default for SolverSet {
    fn default() -> Self {
        SolverSet {
            greedy_single: solvers::greedy_single,
            fast_greedy_knapsack: solvers::fast_greedy_knapsack,
            partial_enum_knapsack: solvers::partial_enum_knapsack,
            greedy_femto: solvers::greedy_femto,
            greedy_femto_us: solvers::greedy_femto_us,
        }
    }
}

/// A failing instance, serialized in full so it can be replayed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Counterexample {
    pub suite: String,
    pub check: String,
    pub case: usize,
    pub detail: String,
    pub scenario: Scenario,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capacities: Option<Capacities>,
    /// Byte budget of the knapsack checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
}

/// Whether the reported statistic of a check is its worst minimum (bound
/// ratios, slacks) or its worst maximum (errors).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Worst {
    Min,
    Max,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckStats {
    pub name: &'static str,
    /// The bound the statistic is held to, if it has one.
    pub bound: Option<f64>,
    pub worst: Worst,
    pub cases: usize,
    /// Smallest (or largest) value seen; `None` when no case produced one.
    pub observed: Option<f64>,
    pub violations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub checks: Vec<CheckStats>,
    /// First failing case in case order.
    pub counterexample: Option<Counterexample>,
    pub elapsed_ms: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.violations == 0)
    }

    pub fn check(&self, name: &str) -> Option<&CheckStats> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub scale: Scale,
    pub seed: u64,
    pub suites: Vec<SuiteReport>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::passed)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.name == name)
    }
}

fn number(v: f64) -> String {
    if v == 0.0 || v.abs() >= 1e-3 {
        format!("{v:.6}")
    } else {
        format!("{v:.2e}")
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.suites {
            let status = if s.passed() { "pass" } else { "FAIL" };
            writeln!(f, "{status} {} ({} cases, {:.0} ms)", s.name, s.cases, s.elapsed_ms)?;
            for c in &s.checks {
                let observed = c.observed.map_or("-".to_string(), number);
                let label = match c.worst {
                    Worst::Min => "min",
                    Worst::Max => "max",
                };
                match c.bound {
                    Some(b) => write!(f, "    {}: {label} {observed} (bound {})", c.name, number(b))?,
                    None => write!(f, "    {}: {label} {observed}", c.name)?,
                }
                if c.violations > 0 {
                    write!(f, ", {} violations", c.violations)?;
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

/// Declared check of a suite.
pub(crate) struct Check {
    pub name: &'static str,
    pub bound: Option<f64>,
    pub worst: Worst,
}

pub(crate) struct Failure {
    pub check: usize,
    pub detail: String,
    pub scenario: Scenario,
    pub capacities: Option<Capacities>,
    pub budget: Option<f64>,
}

/// What one case observed: values per check and any violations.
#[derive(Default)]
pub(crate) struct CaseLog {
    pub values: Vec<(usize, f64)>,
    pub failures: Vec<Failure>,
}

impl CaseLog {
    pub fn record(&mut self, check: usize, value: f64) {
        self.values.push((check, value));
    }

    pub fn fail(
        &mut self,
        check: usize,
        detail: String,
        scenario: &Scenario,
        capacities: Option<&Capacities>,
        budget: Option<f64>,
    ) {
        self.failures.push(Failure {
            check,
            detail,
            scenario: scenario.clone(),
            capacities: capacities.cloned(),
            budget,
        });
    }
}

pub(crate) type CaseFn<'a> = dyn Fn(&SolverSet, usize, &mut ChaCha8Rng) -> CaseLog + Sync + 'a;

pub(crate) struct Suite {
    pub name: &'static str,
    pub cases: usize,
    pub checks: Vec<Check>,
    pub run: Box<CaseFn<'static>>,
}

fn execute(suite: &Suite, solvers: &SolverSet, seed: u64, tag: u64) -> SuiteReport {
    let start = Instant::now();
    let logs: Vec<CaseLog> = (0..suite.cases)
        .into_par_iter()
        .map(|case| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15));
            rng.set_stream(case as u64);
            (suite.run)(solvers, case, &mut rng)
        })
        .collect();

    let mut checks: Vec<CheckStats> = suite
        .checks
        .iter()
        .map(|c| CheckStats {
            name: c.name,
            bound: c.bound,
            worst: c.worst,
            cases: 0,
            observed: None,
            violations: 0,
        })
        .collect();
    let mut counterexample = None;
    for (case, log) in logs.into_iter().enumerate() {
        for (i, v) in log.values {
            let c = &mut checks[i];
            c.cases += 1;
            c.observed = Some(match (c.observed, c.worst) {
                (None, _) => v,
                (Some(o), Worst::Min) => o.min(v),
                (Some(o), Worst::Max) => o.max(v),
            });
        }
        for f in log.failures {
            checks[f.check].violations += 1;
            counterexample.get_or_insert_with(|| Counterexample {
                suite: suite.name.to_string(),
                check: suite.checks[f.check].name.to_string(),
                case,
                detail: f.detail,
                scenario: f.scenario,
                capacities: f.capacities,
                budget: f.budget,
            });
        }
    }
    SuiteReport {
        name: suite.name,
        cases: suite.cases,
        checks,
        counterexample,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

/// Names of all suites, in run order.
pub fn suite_names() -> Vec<&'static str> {
    suites::all(Scale::Small).iter().map(|s| s.name).collect()
}

/// Runs one suite by name.
pub fn run_suite(name: &str, scale: Scale, solvers: &SolverSet, seed: u64) -> Result<SuiteReport> {
    let all = suites::all(scale);
    let (tag, suite) = all
        .iter()
        .enumerate()
        .find(|(_, s)| s.name == name)
        .ok_or_else(|| Error::Config(format!("unknown suite `{name}`")))?;
    Ok(execute(suite, solvers, seed, tag as u64))
}

/// Runs every suite.
pub fn run_all(scale: Scale, solvers: &SolverSet, seed: u64) -> Report {
    let suites = suites::all(scale)
        .iter()
        .enumerate()
        .map(|(tag, s)| execute(s, solvers, seed, tag as u64))
        .collect();
    Report { scale, seed, suites }
}
