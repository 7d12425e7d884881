//! Objective functions evaluated from scratch, plus the incremental states
//! the greedy solvers are built on.
//!
//! All objectives weight users equally (`1/N`), so the soft cache hit ratio
//! lies in `[0, 1]` and the satisfaction objective in `[0, u_max]`.
//!
//! * [`schr_single`]: each user is served by one cache; every cache's
//!   contribution is `Σ_i q_ij Σ_k p_k^i (1 − Π_{n∈S_j} (1 − u_kn^i))`.
//! * [`schr_femto`]: users see several caches;
//!   `Σ_i Σ_k p_k^i (1 − Π_{(n,j)∈S} (1 − u_kn^i q_ij))`.
//! * [`sch_us`]: the delivered content is the best cached one;
//!   `Σ_i Σ_k p_k^i max_{(n,j)∈S} u_kn^i q_ij`, or the expected maximum when
//!   only utility distributions are known.

mod placement;
mod satisfaction;
mod state;

use serde::{Deserialize, Serialize};

use crate::catalog::{Distribution, UtilityMode, UtilityVariant};
use crate::error::{Error, Result};
use crate::problem::Problem;

pub use placement::{Budget, Capacities, Item, Placement};
pub use satisfaction::SatisfactionState;
pub use state::{EvalState, Form};

/// Which objective family a placement is scored with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    /// Soft cache hit ratio, femto form.
    Schr,
    /// Soft cache hit user satisfaction.
    SchUs,
}

/// Incremental view of a monotone submodular objective over `(content, cell)`
/// items. Gains are computed against the committed placement.
pub trait IncrementalObjective {
    fn value(&self) -> f64;

    fn placement(&self) -> &Placement;

    /// Whether `item` may be committed: not yet stored and within budget.
    fn admits(&self, item: Item) -> bool;

    /// `f(A ∪ {item}) − f(A)` without the duplicate check.
    fn gain(&self, item: Item) -> f64;

    /// `f(A ∪ {item}) − f(A)`; errors if `item` is already stored.
    fn marginal_gain(&self, item: Item) -> Result<f64> {
        if self.placement().contains(item) {
            return Err(Error::Contract(format!("{item} is already stored")));
        }
        Ok(self.gain(item))
    }

    /// Stores `item` and returns the gain it realized.
    fn commit(&mut self, item: Item) -> Result<f64>;
}

fn check_placement(problem: &Problem<'_>, placement: &Placement) -> Result<()> {
    if placement.num_cells() != problem.num_cells() {
        return Err(Error::Validation(format!(
            "placement has {} cells, coverage has {}",
            placement.num_cells(),
            problem.num_cells()
        )));
    }
    placement.validate(problem.num_contents(), problem.catalog.sizes())
}

/// Soft cache hit ratio when each user is tied to a single cache.
pub fn schr_single(problem: &Problem<'_>, placement: &Placement) -> Result<f64> {
    check_placement(problem, placement)?;
    if !problem.coverage.is_single_cache() {
        return Err(Error::Contract("coverage is not in the single-cache regime".into()));
    }
    let cells = placement.by_cell();
    let total: f64 = cells
        .iter()
        .enumerate()
        .map(|(j, contents)| cell_hit_mass(problem, j, contents))
        .sum();
    Ok(total * problem.user_weight())
}

/// Contribution of one cache in the single-cache objective, normalized.
pub fn schr_cell(problem: &Problem<'_>, cell: usize, contents: &[usize]) -> f64 {
    cell_hit_mass(problem, cell, contents) * problem.user_weight()
}

fn cell_hit_mass(problem: &Problem<'_>, cell: usize, contents: &[usize]) -> f64 {
    if contents.is_empty() {
        return 0.0;
    }
    let utility = problem.utility;
    let mut total = 0.0;
    for &(i, q) in problem.coverage.users_of(cell) {
        let mut user = 0.0;
        for (k, &p) in problem.catalog.demand_row(i).iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let miss = contents.iter().fold(1.0, |acc, &n| acc * (1.0 - utility.value(i, k, n)));
            user += p * (1.0 - miss);
        }
        total += q * user;
    }
    total
}

/// `(content, q_ij)` for every stored copy in a cell covering `user`.
fn reachable(problem: &Problem<'_>, cells: &[Vec<usize>], user: usize) -> Vec<(usize, f64)> {
    problem
        .coverage
        .cells_of(user)
        .iter()
        .flat_map(|&(j, q)| cells[j].iter().map(move |&n| (n, q)))
        .collect()
}

/// Soft cache hit ratio with overlapping caches.
pub fn schr_femto(problem: &Problem<'_>, placement: &Placement) -> Result<f64> {
    check_placement(problem, placement)?;
    Ok(schr_femto_cells(problem, &placement.by_cell()))
}

/// [`schr_femto`] over per-cell content lists, without validation.
pub(crate) fn schr_femto_cells(problem: &Problem<'_>, cells: &[Vec<usize>]) -> f64 {
    let utility = problem.utility;
    let mut total = 0.0;
    for i in 0..problem.num_users() {
        let stored = reachable(problem, cells, i);
        if stored.is_empty() {
            continue;
        }
        for (k, &p) in problem.catalog.demand_row(i).iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let miss = stored
                .iter()
                .fold(1.0, |acc, &(n, q)| acc * (1.0 - utility.value(i, k, n) * q));
            total += p * (1.0 - miss);
        }
    }
    total * problem.user_weight()
}

/// Dispatches on [`ObjectiveKind`].
pub fn evaluate(problem: &Problem<'_>, placement: &Placement, kind: ObjectiveKind) -> Result<f64> {
    match kind {
        ObjectiveKind::Schr => schr_femto(problem, placement),
        ObjectiveKind::SchUs => sch_us(problem, placement),
    }
}

pub(crate) fn require_satisfaction(problem: &Problem<'_>) -> Result<()> {
    match problem.utility.mode() {
        UtilityMode::Satisfaction { .. } => Ok(()),
        UtilityMode::Acceptance => Err(Error::Mode(
            "the satisfaction objective needs a satisfaction-mode utility model".into(),
        )),
    }
}

/// Soft cache hit user satisfaction: the best cached alternative is delivered.
pub fn sch_us(problem: &Problem<'_>, placement: &Placement) -> Result<f64> {
    require_satisfaction(problem)?;
    check_placement(problem, placement)?;
    Ok(sch_us_cells(problem, &placement.by_cell()))
}

/// [`sch_us`] over per-cell content lists, without validation.
pub(crate) fn sch_us_cells(problem: &Problem<'_>, cells: &[Vec<usize>]) -> f64 {
    let utility = problem.utility;
    let distributional = utility.variant() == UtilityVariant::Distributional;
    let mut total = 0.0;
    for i in 0..problem.num_users() {
        let stored = reachable(problem, cells, i);
        if stored.is_empty() {
            continue;
        }
        let weights = if distributional {
            strongest_copies(&stored)
        } else {
            Vec::new()
        };
        for (k, &p) in problem.catalog.demand_row(i).iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let best = if distributional {
                let parts: Vec<(&Distribution, f64)> = weights
                    .iter()
                    .filter_map(|&(n, w)| utility.distribution(k, n).map(|d| (d, w)))
                    .collect();
                expected_weighted_max(&parts)
            } else {
                stored
                    .iter()
                    .fold(0.0, |acc: f64, &(n, q)| acc.max(utility.value(i, k, n) * q))
            };
            total += p * best;
        }
    }
    total * problem.user_weight()
}

/// Collapses copies of the same content to the best coverage probability:
/// a user's utility for a content does not depend on which cell serves it.
fn strongest_copies(stored: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut by_content: Vec<(usize, f64)> = stored.to_vec();
    by_content.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)));
    by_content.dedup_by_key(|e| e.0);
    by_content
}

/// `E[max_n w_n·U_n]` for independent discrete `U_n`, evaluated exactly over
/// the union of scaled support points: `Σ_t x_t (F(x_t) − F(x_{t−1}))` with
/// `F(x) = Π_n P(w_n·U_n ≤ x)`.
pub fn expected_weighted_max(parts: &[(&Distribution, f64)]) -> f64 {
    let mut xs: Vec<f64> = parts
        .iter()
        .flat_map(|&(d, w)| d.points().iter().map(move |&(v, _)| v * w))
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut expected = 0.0;
    let mut prev = 0.0;
    for x in xs {
        let cdf: f64 = parts.iter().map(|&(d, w)| d.scaled_cdf(w, x)).product();
        expected += x * (cdf - prev);
        prev = cdf;
    }
    expected
}
