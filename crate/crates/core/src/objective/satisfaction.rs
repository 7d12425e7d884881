use std::collections::HashMap;

use super::{expected_weighted_max, require_satisfaction, IncrementalObjective, Item, Placement};
use crate::catalog::{Distribution, UtilityVariant};
use crate::error::{Error, Result};
use crate::objective::Capacities;
use crate::problem::Problem;

#[derive(Clone, Debug)]
enum Tracker {
    /// Best `u·q` delivered so far per (user, content).
    Best(Vec<f64>),
    /// Stored related contents with their strongest coverage per
    /// (user, content), plus the current expected maximum.
    Expected {
        stored: HashMap<(usize, usize), Vec<(usize, f64)>>,
        current: Vec<f64>,
    },
}

/// Incremental user-satisfaction state. The gain of `(l, m)` is
/// `Σ_{i covered by m} Σ_k p_k^i max(0, u_kl^i q_im − b_ik)` where `b_ik` is
/// the best utility currently delivered; with utility distributions the
/// expected maximum is recomputed for the affected (user, content) pairs.
#[derive(Clone, Debug)]
pub struct SatisfactionState<'a> {
    problem: Problem<'a>,
    tracker: Tracker,
    value: f64,
    placement: Placement,
}

impl<'a> SatisfactionState<'a> {
    pub fn new(problem: Problem<'a>, capacities: Capacities) -> Result<Self> {
        require_satisfaction(&problem)?;
        if capacities.num_cells() != problem.num_cells() {
            return Err(Error::Validation(format!(
                "{} budgets for {} cells",
                capacities.num_cells(),
                problem.num_cells()
            )));
        }
        let size = problem.num_users() * problem.num_contents();
        let tracker = if problem.utility.variant() == UtilityVariant::Distributional {
            Tracker::Expected {
                stored: HashMap::new(),
                current: vec![0.0; size],
            }
        } else {
            Tracker::Best(vec![0.0; size])
        };
        Ok(SatisfactionState {
            problem,
            tracker,
            value: 0.0,
            placement: Placement::new(capacities),
        })
    }

    pub fn recompute(&self) -> Result<f64> {
        super::sch_us(&self.problem, &self.placement)
    }

    /// Parts list for `(user, k)` after adding `content` at strength `q`;
    /// `None` when the content is already present at least as strongly.
    fn extended(existing: Option<&Vec<(usize, f64)>>, content: usize, q: f64) -> Option<Vec<(usize, f64)>> {
        let mut list = existing.cloned().unwrap_or_default();
        match list.iter_mut().find(|e| e.0 == content) {
            Some(e) if e.1 >= q => return None,
            Some(e) => e.1 = q,
            None => list.push((content, q)),
        }
        Some(list)
    }

    fn expected(&self, k: usize, list: &[(usize, f64)]) -> f64 {
        let utility = self.problem.utility;
        let parts: Vec<(&Distribution, f64)> = list
            .iter()
            .filter_map(|&(n, w)| utility.distribution(k, n).map(|d| (d, w)))
            .collect();
        expected_weighted_max(&parts)
    }

    fn check_item(&self, item: Item) -> Result<()> {
        if item.content.0 >= self.problem.num_contents() {
            return Err(Error::index("content", item.content.0, self.problem.num_contents()));
        }
        if item.cell.0 >= self.problem.num_cells() {
            return Err(Error::index("cell", item.cell.0, self.problem.num_cells()));
        }
        Ok(())
    }
}

impl IncrementalObjective for SatisfactionState<'_> {
    fn value(&self) -> f64 {
        self.value
    }

    fn placement(&self) -> &Placement {
        &self.placement
    }

    fn admits(&self, item: Item) -> bool {
        self.placement.admits(item, self.problem.catalog.sizes())
    }

    fn gain(&self, item: Item) -> f64 {
        let (l, m) = (item.content.0, item.cell.0);
        let k_count = self.problem.num_contents();
        let catalog = self.problem.catalog;
        let utility = self.problem.utility;
        let mut gain = 0.0;
        for &(i, q) in self.problem.coverage.users_of(m) {
            match &self.tracker {
                Tracker::Best(best) => {
                    for (k, u) in utility.requesters(i, l) {
                        let b = best[i * k_count + k];
                        gain += catalog.request_probability(i, k) * (u * q - b).max(0.0);
                    }
                }
                Tracker::Expected { stored, current } => {
                    for (k, _) in utility.requesters(i, l) {
                        if let Some(list) = Self::extended(stored.get(&(i, k)), l, q) {
                            let delta = self.expected(k, &list) - current[i * k_count + k];
                            gain += catalog.request_probability(i, k) * delta;
                        }
                    }
                }
            }
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
        let gain = self.marginal_gain(item)?;
        self.placement.insert(item, self.problem.catalog.sizes())?;
        let (l, m) = (item.content.0, item.cell.0);
        let k_count = self.problem.num_contents();
        let utility = self.problem.utility;
        for &(i, q) in self.problem.coverage.users_of(m) {
            for (k, u) in utility.requesters(i, l) {
                let idx = i * k_count + k;
                let update = match &self.tracker {
                    Tracker::Best(_) => None,
                    Tracker::Expected { stored, .. } => {
                        Self::extended(stored.get(&(i, k)), l, q).map(|list| (self.expected(k, &list), list))
                    }
                };
                match &mut self.tracker {
                    Tracker::Best(best) => best[idx] = best[idx].max(u * q),
                    Tracker::Expected { stored, current } => {
                        if let Some((e, list)) = update {
                            current[idx] = e;
                            stored.insert((i, k), list);
                        }
                    }
                }
            }
        }
        self.value += gain;
        Ok(gain)
    }
}
