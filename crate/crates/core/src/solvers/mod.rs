//! Placement algorithms.
//!
//! * [`greedy_single`]: greedy for one cache per user under item budgets,
//!   within `1 − 1/e` of optimal.
//! * [`fast_greedy_knapsack`] and [`partial_enum_knapsack`]: byte budgets
//!   with heterogeneous content sizes.
//! * [`greedy_femto`] and [`greedy_femto_us`]: overlapping caches, greedy
//!   over `(content, cell)` pairs under per-cell budgets, within `1/2`.
//! * [`popularity_baseline`]: every cache stores its locally most requested
//!   contents.
//!
//! Ties are broken towards the lowest `(content, cell)` pair and a run stops
//! once the best remaining gain is zero, so caches may be left under-filled.

mod baseline;
mod engine;
mod knapsack;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::objective::{Capacities, EvalState, Form, IncrementalObjective, Item, Placement, SatisfactionState};
use crate::problem::Problem;

pub use baseline::popularity_baseline;
pub use engine::Strategy;

/// Default upper bound on the catalog size accepted by
/// [`partial_enum_knapsack`]; its cost grows as `K^5`.
pub const DEFAULT_ENUMERATION_LIMIT: usize = 60;

/// One committed item and the gain it realized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub item: Item,
    pub gain: f64,
}

#[derive(Clone, Debug)]
pub struct SolverResult {
    pub placement: Placement,
    pub objective: f64,
    pub trace: Vec<Step>,
    pub elapsed: Duration,
}

/// Solver settings shared by all greedy variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Greedy {
    pub strategy: Strategy,
    pub enumeration_limit: usize,
}

impl Default for Greedy {
    fn default() -> Self {
        Greedy {
            strategy: Strategy::Lazy,
            enumeration_limit: DEFAULT_ENUMERATION_LIMIT,
        }
    }
}

/// Every `(content, cell)` pair over the given cells, in tie-break order.
pub(crate) fn all_items(num_contents: usize, cells: &[usize]) -> Vec<Item> {
    let mut items: Vec<Item> = (0..num_contents)
        .flat_map(|k| cells.iter().map(move |&j| Item::new(k, j)))
        .collect();
    items.sort();
    items
}

fn every_cell(problem: &Problem<'_>) -> Vec<usize> {
    (0..problem.num_cells()).collect()
}

impl Greedy {
    pub fn with_strategy(strategy: Strategy) -> Self {
        Greedy {
            strategy,
            ..Greedy::default()
        }
    }

    fn run<S: IncrementalObjective + Sync>(&self, mut state: S, candidates: Vec<Item>, start: Instant) -> Result<SolverResult> {
        let trace = engine::run(&mut state, candidates, |_| 1.0, self.strategy)?;
        Ok(SolverResult {
            objective: state.value(),
            placement: state.placement().clone(),
            trace,
            elapsed: start.elapsed(),
        })
    }

    /// Greedy for the single-cache objective: every cell holds at most
    /// `capacity` contents. Coverage must be in the single-cache regime.
    pub fn greedy_single(&self, problem: &Problem<'_>, capacity: usize) -> Result<SolverResult> {
        let start = Instant::now();
        let caps = Capacities::uniform_items(problem.num_cells(), capacity);
        let state = EvalState::new(*problem, Form::PerCell, caps)?;
        self.run(state, all_items(problem.num_contents(), &every_cell(problem)), start)
    }

    /// Greedy over `(content, cell)` pairs for the overlapping-cache hit
    /// ratio; pairs whose cell is full are discarded.
    pub fn greedy_femto(&self, problem: &Problem<'_>, capacities: &Capacities) -> Result<SolverResult> {
        let start = Instant::now();
        let state = EvalState::new(*problem, Form::Femto, capacities.clone())?;
        self.run(state, all_items(problem.num_contents(), &every_cell(problem)), start)
    }

    /// Same skeleton driven by the user-satisfaction gains.
    pub fn greedy_femto_us(&self, problem: &Problem<'_>, capacities: &Capacities) -> Result<SolverResult> {
        let start = Instant::now();
        let state = SatisfactionState::new(*problem, capacities.clone())?;
        self.run(state, all_items(problem.num_contents(), &every_cell(problem)), start)
    }
}

pub fn greedy_single(problem: &Problem<'_>, capacity: usize) -> Result<SolverResult> {
    Greedy::default().greedy_single(problem, capacity)
}

pub fn fast_greedy_knapsack(problem: &Problem<'_>, budget: f64) -> Result<SolverResult> {
    Greedy::default().fast_greedy_knapsack(problem, budget)
}

pub fn partial_enum_knapsack(problem: &Problem<'_>, budget: f64) -> Result<SolverResult> {
    Greedy::default().partial_enum_knapsack(problem, budget)
}

pub fn greedy_femto(problem: &Problem<'_>, capacities: &Capacities) -> Result<SolverResult> {
    Greedy::default().greedy_femto(problem, capacities)
}

pub fn greedy_femto_us(problem: &Problem<'_>, capacities: &Capacities) -> Result<SolverResult> {
    Greedy::default().greedy_femto_us(problem, capacities)
}
