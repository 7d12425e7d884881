//! Byte-budgeted placement for single-cache coverage. Every cell gets the
//! same budget and cells are solved independently.

use std::time::Instant;

use rayon::prelude::*;

use super::{all_items, engine, every_cell, Greedy, SolverResult, Step};
use crate::error::{Error, Result};
use crate::objective::{schr_cell, Capacities, EvalState, Form, IncrementalObjective, Item};
use crate::problem::Problem;

/// Commits each cell's contents in the given order into a fresh state.
fn assemble(problem: &Problem<'_>, caps: Capacities, per_cell: &[Vec<usize>], start: Instant) -> Result<SolverResult> {
    let mut state = EvalState::new(*problem, Form::PerCell, caps)?;
    let mut trace = Vec::new();
    for (j, contents) in per_cell.iter().enumerate() {
        for &k in contents {
            let item = Item::new(k, j);
            let gain = state.commit(item)?;
            trace.push(Step { item, gain });
        }
    }
    Ok(SolverResult {
        objective: state.value(),
        placement: state.placement().clone(),
        trace,
        elapsed: start.elapsed(),
    })
}

fn split_by_cell(num_cells: usize, steps: &[Step]) -> Vec<Vec<usize>> {
    let mut cells = vec![Vec::new(); num_cells];
    for s in steps {
        cells[s.item.cell.0].push(s.item.content.0);
    }
    cells
}

fn cell_value(problem: &Problem<'_>, cell: usize, contents: &[usize]) -> f64 {
    let mut sorted = contents.to_vec();
    sorted.sort_unstable();
    schr_cell(problem, cell, &sorted)
}

fn check_budget(budget: f64) -> Result<()> {
    if !(budget.is_finite() && budget > 0.0) {
        return Err(Error::Validation(format!("byte budget must be positive, got {budget}")));
    }
    Ok(())
}

impl Greedy {
    /// Runs the modified greedy twice, once ranking candidates by gain per
    /// byte and once by plain gain, and keeps the better result per cell.
    /// Both runs check feasibility against the real sizes and skip contents
    /// that no longer fit.
    pub fn fast_greedy_knapsack(&self, problem: &Problem<'_>, budget: f64) -> Result<SolverResult> {
        let start = Instant::now();
        check_budget(budget)?;
        let caps = Capacities::uniform_bytes(problem.num_cells(), budget);
        let candidates = all_items(problem.num_contents(), &every_cell(problem));
        let sizes = problem.catalog.sizes();

        let mut density = EvalState::new(*problem, Form::PerCell, caps.clone())?;
        let by_density = engine::run(&mut density, candidates.clone(), |i| sizes[i.content.0], self.strategy)?;
        let mut plain = EvalState::new(*problem, Form::PerCell, caps.clone())?;
        let by_gain = engine::run(&mut plain, candidates, |_| 1.0, self.strategy)?;

        let m = problem.num_cells();
        let (s1, s2) = (split_by_cell(m, &by_density), split_by_cell(m, &by_gain));
        let chosen: Vec<Vec<usize>> = (0..m)
            .map(|j| {
                if cell_value(problem, j, &s1[j]) > cell_value(problem, j, &s2[j]) {
                    s1[j].clone()
                } else {
                    s2[j].clone()
                }
            })
            .collect();
        assemble(problem, caps, &chosen, start)
    }

    /// Enumerates every feasible set of fewer than three contents and
    /// completes every feasible triple with the gain-per-byte greedy, keeping
    /// the best per cell. Refuses catalogs above `enumeration_limit`.
    pub fn partial_enum_knapsack(&self, problem: &Problem<'_>, budget: f64) -> Result<SolverResult> {
        let start = Instant::now();
        check_budget(budget)?;
        let k = problem.num_contents();
        if k > self.enumeration_limit {
            return Err(Error::Refused(format!(
                "partial enumeration over {k} contents exceeds the limit of {}; use fast_greedy_knapsack",
                self.enumeration_limit
            )));
        }
        let caps = Capacities::uniform_bytes(problem.num_cells(), budget);
        let chosen = (0..problem.num_cells())
            .map(|j| self.best_for_cell(problem, &caps, j))
            .collect::<Result<Vec<_>>>()?;
        assemble(problem, caps, &chosen, start)
    }

    fn best_for_cell(&self, problem: &Problem<'_>, caps: &Capacities, cell: usize) -> Result<Vec<usize>> {
        if problem.coverage.users_of(cell).is_empty() {
            return Ok(Vec::new());
        }
        let k = problem.num_contents();
        let sizes = problem.catalog.sizes();
        let budget = caps.budget(cell);
        let fits = |set: &[usize]| {
            let mut used = 0.0;
            set.iter().all(|&n| {
                let ok = budget.admits(used, sizes[n]);
                used += budget.unit(sizes[n]);
                ok
            })
        };

        let mut small: Vec<Vec<usize>> = vec![Vec::new()];
        small.extend((0..k).map(|a| vec![a]));
        small.extend((0..k).flat_map(|a| (a + 1..k).map(move |b| vec![a, b])));
        small.retain(|s| fits(s));

        let triples: Vec<[usize; 3]> = (0..k)
            .flat_map(|a| (a + 1..k).flat_map(move |b| (b + 1..k).map(move |c| [a, b, c])))
            .filter(|t| fits(t))
            .collect();
        let completed = triples
            .par_iter()
            .map(|seed| self.complete_seed(problem, caps, cell, seed))
            .collect::<Result<Vec<_>>>()?;

        let mut best: Option<(f64, Vec<usize>)> = None;
        for set in small.into_iter().chain(completed) {
            let v = cell_value(problem, cell, &set);
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, set));
            }
        }
        Ok(best.map(|(_, s)| s).unwrap_or_default())
    }

    fn complete_seed(&self, problem: &Problem<'_>, caps: &Capacities, cell: usize, seed: &[usize; 3]) -> Result<Vec<usize>> {
        let sizes = problem.catalog.sizes();
        let mut state = EvalState::for_cells(*problem, Form::PerCell, caps.clone(), &[cell])?;
        for &n in seed {
            state.commit(Item::new(n, cell))?;
        }
        let rest: Vec<Item> = (0..problem.num_contents())
            .filter(|n| !seed.contains(n))
            .map(|n| Item::new(n, cell))
            .collect();
        let steps = engine::run(&mut state, rest, |i| sizes[i.content.0], self.strategy)?;
        let mut set = seed.to_vec();
        set.extend(steps.iter().map(|s| s.item.content.0));
        Ok(set)
    }
}
