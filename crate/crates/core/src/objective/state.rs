use super::{IncrementalObjective, Item, Placement};
use crate::error::{Error, Result};
use crate::objective::Capacities;
use crate::problem::Problem;

/// Which hit-ratio objective an [`EvalState`] tracks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Form {
    /// Overlapping caches: one residual row per user, factors `1 − u·q`.
    Femto,
    /// Single-cache objective: one residual row per (user, cell) link,
    /// factors `1 − u`, contributions weighted by `q`.
    PerCell,
}

#[derive(Clone, Copy, Debug)]
struct Link {
    row: usize,
    user: usize,
    q: f64,
}

/// Incremental soft-cache-hit-ratio state.
///
/// For every residual row and content `k` it keeps the miss probability
/// `r = Π (1 − u_kn·q)` over the committed items, so the gain of `(l, m)` is
/// `Σ_{i covered by m} q_im Σ_k p_k^i u_kl^i r` (scaled by `1/N`) and a
/// commit only touches the rows linked to `m`.
#[derive(Clone, Debug)]
pub struct EvalState<'a> {
    problem: Problem<'a>,
    form: Form,
    links: Vec<Vec<Link>>,
    active: Vec<bool>,
    residual: Vec<f64>,
    value: f64,
    placement: Placement,
}

impl<'a> EvalState<'a> {
    pub fn new(problem: Problem<'a>, form: Form, capacities: Capacities) -> Result<Self> {
        let all: Vec<usize> = (0..problem.num_cells()).collect();
        Self::for_cells(problem, form, capacities, &all)
    }

    /// A state that only accepts items in `cells`; rows are allocated for
    /// the users of those cells only. With [`Form::PerCell`] cells are
    /// independent, so per-cell solvers use one such state per cell.
    pub fn for_cells(problem: Problem<'a>, form: Form, capacities: Capacities, cells: &[usize]) -> Result<Self> {
        let m = problem.num_cells();
        if capacities.num_cells() != m {
            return Err(Error::Validation(format!("{} budgets for {m} cells", capacities.num_cells())));
        }
        if form == Form::PerCell && !problem.coverage.is_single_cache() {
            return Err(Error::Contract("coverage is not in the single-cache regime".into()));
        }
        let k = problem.num_contents();
        let mut active = vec![false; m];
        let mut links = vec![Vec::new(); m];
        let mut user_row: Vec<Option<usize>> = vec![None; problem.num_users()];
        let mut rows = 0;
        for &j in cells {
            if j >= m {
                return Err(Error::index("cell", j, m));
            }
            if active[j] {
                continue;
            }
            active[j] = true;
            for &(user, q) in problem.coverage.users_of(j) {
                let row = match form {
                    Form::PerCell => {
                        rows += 1;
                        rows - 1
                    }
                    Form::Femto => *user_row[user].get_or_insert_with(|| {
                        rows += 1;
                        rows - 1
                    }),
                };
                links[j].push(Link { row, user, q });
            }
        }
        Ok(EvalState {
            problem,
            form,
            links,
            active,
            residual: vec![1.0; rows * k],
            value: 0.0,
            placement: Placement::new(capacities),
        })
    }

    pub fn problem(&self) -> Problem<'a> {
        self.problem
    }

    pub fn form(&self) -> Form {
        self.form
    }

    /// The objective recomputed from scratch over the committed placement.
    pub fn recompute(&self) -> Result<f64> {
        match self.form {
            Form::Femto => super::schr_femto(&self.problem, &self.placement),
            Form::PerCell => {
                let cells = self.placement.by_cell();
                Ok(cells
                    .iter()
                    .enumerate()
                    .map(|(j, c)| super::schr_cell(&self.problem, j, c))
                    .sum())
            }
        }
    }

    fn check_item(&self, item: Item) -> Result<()> {
        let (l, m) = (item.content.0, item.cell.0);
        if l >= self.problem.num_contents() {
            return Err(Error::index("content", l, self.problem.num_contents()));
        }
        if m >= self.active.len() {
            return Err(Error::index("cell", m, self.active.len()));
        }
        if !self.active[m] {
            return Err(Error::Contract(format!("cell {m} is not tracked by this state")));
        }
        Ok(())
    }
}

impl IncrementalObjective for EvalState<'_> {
    fn value(&self) -> f64 {
        self.value
    }

    fn placement(&self) -> &Placement {
        &self.placement
    }

    fn admits(&self, item: Item) -> bool {
        item.cell.0 < self.active.len() && self.active[item.cell.0] && self.placement.admits(item, self.problem.catalog.sizes())
    }

    fn gain(&self, item: Item) -> f64 {
        let (l, m) = (item.content.0, item.cell.0);
        let k_count = self.problem.num_contents();
        let catalog = self.problem.catalog;
        let utility = self.problem.utility;
        let mut gain = 0.0;
        for link in &self.links[m] {
            let base = link.row * k_count;
            let mut s = 0.0;
            for (k, u) in utility.requesters(link.user, l) {
                s += catalog.request_probability(link.user, k) * u * self.residual[base + k];
            }
            gain += link.q * s;
        }
        gain * self.problem.user_weight()
    }

    fn marginal_gain(&self, item: Item) -> Result<f64> {
        self.check_item(item)?;
        if self.placement.contains(item) {
            return Err(Error::Contract(format!("{item} is already stored")));
        }
        Ok(self.gain(item))
    }

    fn commit(&mut self, item: Item) -> Result<f64> {
        self.check_item(item)?;
        let gain = self.marginal_gain(item)?;
        self.placement.insert(item, self.problem.catalog.sizes())?;
        let (l, m) = (item.content.0, item.cell.0);
        let k_count = self.problem.num_contents();
        let utility = self.problem.utility;
        for link in &self.links[m] {
            let base = link.row * k_count;
            for (k, u) in utility.requesters(link.user, l) {
                let factor = match self.form {
                    Form::Femto => 1.0 - u * link.q,
                    Form::PerCell => 1.0 - u,
                };
                self.residual[base + k] *= factor;
            }
        }
        self.value += gain;
        Ok(gain)
    }
}
