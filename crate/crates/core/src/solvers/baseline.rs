use std::time::Instant;

use super::{SolverResult, Step};
use crate::error::Result;
use crate::objective::{Capacities, EvalState, Form, IncrementalObjective, Item};
use crate::problem::Problem;

/// Each cell stores the contents most requested by the users it covers,
/// ranked by `Σ_i q_ij p_k^i` (ties: lowest id), until its budget is spent;
/// contents that do not fit a byte budget are skipped. Relations are
/// ignored when choosing, but the reported objective is the overlapping-cache
/// hit ratio under the problem's utility model.
pub fn popularity_baseline(problem: &Problem<'_>, capacities: &Capacities) -> Result<SolverResult> {
    let start = Instant::now();
    let k = problem.num_contents();
    let mut state = EvalState::new(*problem, Form::Femto, capacities.clone())?;
    let mut trace = Vec::new();
    for j in 0..problem.num_cells() {
        let mut score = vec![0.0; k];
        for &(i, q) in problem.coverage.users_of(j) {
            for (s, &p) in score.iter_mut().zip(problem.catalog.demand_row(i)) {
                *s += q * p;
            }
        }
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
        for n in order {
            let item = Item::new(n, j);
            if state.admits(item) {
                let gain = state.commit(item)?;
                trace.push(Step { item, gain });
            }
        }
    }
    Ok(SolverResult {
        objective: state.value(),
        placement: state.placement().clone(),
        trace,
        elapsed: start.elapsed(),
    })
}
