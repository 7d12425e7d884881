use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::combinations::{binomial, unrank};
use crate::error::{Error, Result};
use crate::objective::{
    require_satisfaction, sch_us_cells, schr_cell, schr_femto_cells, Budget, Capacities, Item, ObjectiveKind, Placement,
};
use crate::problem::Problem;

/// Default bound on the number of placements an exhaustive search may visit.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

/// Values this close (relative) to the optimum count as optimal too.
const TIE_TOLERANCE: f64 = 1e-12;

const CHUNK: u64 = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub optimum: f64,
    /// Every optimal placement, up to the reporting limit.
    pub optimal: Vec<Placement>,
    /// Number of candidate placements evaluated.
    pub enumerated: u64,
    /// Whether `optimal` was cut short.
    pub truncated: bool,
}

/// Exhaustive search settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Exhaustive {
    pub cap: u64,
    pub max_reported: usize,
}

impl Default for Exhaustive {
    fn default() -> Self {
        Exhaustive {
            cap: DEFAULT_ENUMERATION_CAP,
            max_reported: 1000,
        }
    }
}

/// All candidate content sets of one cell, addressable by index: every
/// subset of at most `max_size` contents in (size, lexicographic) order.
struct SubsetSpace {
    n: usize,
    /// `offsets[s]` is the index of the first subset of size `s`.
    offsets: Vec<u64>,
}

impl SubsetSpace {
    fn new(n: usize, budget: Budget) -> Self {
        let max_size = match budget {
            Budget::Items(c) => c.min(n),
            Budget::Bytes(_) | Budget::Unlimited => n,
        };
        let mut offsets = vec![0u64];
        for s in 0..=max_size {
            let last = *offsets.last().unwrap();
            offsets.push(last.saturating_add(binomial(n, s)));
        }
        SubsetSpace { n, offsets }
    }

    fn len(&self) -> u64 {
        *self.offsets.last().unwrap()
    }

    fn get(&self, index: u64) -> Vec<usize> {
        let size = self.offsets.partition_point(|&o| o <= index) - 1;
        unrank(self.n, size, index - self.offsets[size])
    }
}

fn fits(set: &[usize], budget: Budget, sizes: &[f64]) -> bool {
    let mut used = 0.0;
    set.iter().all(|&n| {
        let ok = budget.admits(used, sizes[n]);
        used += budget.unit(sizes[n]);
        ok
    })
}

/// Running argmax with ties.
#[derive(Clone, Debug)]
struct Best<T> {
    value: f64,
    sets: Vec<T>,
    truncated: bool,
}

impl<T> Best<T> {
    fn empty() -> Self {
        Best {
            value: f64::NEG_INFINITY,
            sets: Vec::new(),
            truncated: false,
        }
    }

    fn tolerance(&self) -> f64 {
        TIE_TOLERANCE * self.value.abs().max(1.0)
    }

    fn offer(&mut self, value: f64, set: impl FnOnce() -> T, max: usize) {
        if value > self.value + self.tolerance() {
            self.value = value;
            self.sets = vec![set()];
            self.truncated = false;
        } else if value >= self.value - self.tolerance() {
            self.value = self.value.max(value);
            if self.sets.len() < max {
                self.sets.push(set());
            } else {
                self.truncated = true;
            }
        }
    }

    /// Folds in the result of a later range.
    fn merge(mut self, other: Best<T>, max: usize) -> Self {
        if other.value > self.value + self.tolerance() {
            return other;
        }
        if other.value >= self.value - self.tolerance() {
            self.value = self.value.max(other.value);
            self.truncated |= other.truncated;
            for s in other.sets {
                if self.sets.len() < max {
                    self.sets.push(s);
                } else {
                    self.truncated = true;
                }
            }
        }
        self
    }
}

fn refuse(count: u64, cap: u64) -> Error {
    Error::Refused(format!(
        "exhaustive search would visit {count} placements, above the cap of {cap}"
    ))
}

/// Scans indices `0..total` in parallel chunks and merges in index order.
fn scan<T: Send>(total: u64, max: usize, visit: impl Fn(u64, &mut Best<T>) + Sync) -> Best<T> {
    let chunks = total.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut best = Best::empty();
            for idx in c * CHUNK..((c + 1) * CHUNK).min(total) {
                visit(idx, &mut best);
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Best::empty(), |acc, b| acc.merge(b, max))
}

impl Exhaustive {
    /// Exact optimum of the single-cache objective; every cell gets
    /// `budget`. Cells are independent, so each is searched on its own.
    pub fn exhaustive_single(&self, problem: &Problem<'_>, budget: Budget) -> Result<OracleResult> {
        if !problem.coverage.is_single_cache() {
            return Err(Error::Contract("coverage is not in the single-cache regime".into()));
        }
        let k = problem.num_contents();
        let m = problem.num_cells();
        let sizes = problem.catalog.sizes();
        let space = SubsetSpace::new(k, budget);
        let active: Vec<usize> = (0..m).filter(|&j| !problem.coverage.users_of(j).is_empty()).collect();
        let total = space.len().saturating_mul(active.len() as u64);
        if total > self.cap {
            return Err(refuse(total, self.cap));
        }

        let mut optimum = 0.0;
        // cells nobody visits contribute nothing whatever they hold; only
        // the empty set is reported for them
        let mut truncated = active.len() < m;
        let mut per_cell: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new()]; m];
        for &j in &active {
            let best = scan(space.len(), self.max_reported, |idx, best| {
                let set = space.get(idx);
                if fits(&set, budget, sizes) {
                    let v = schr_cell(problem, j, &set);
                    best.offer(v, || set, self.max_reported);
                }
            });
            optimum += best.value;
            truncated |= best.truncated;
            per_cell[j] = best.sets;
        }

        let caps = Capacities::new(vec![budget; m]);
        let (optimal, cut) = self.product(&per_cell, &caps, sizes)?;
        Ok(OracleResult {
            optimum,
            optimal,
            enumerated: total,
            truncated: truncated || cut,
        })
    }

    /// Cartesian product of per-cell optimal sets, up to the reporting limit.
    fn product(&self, per_cell: &[Vec<Vec<usize>>], caps: &Capacities, sizes: &[f64]) -> Result<(Vec<Placement>, bool)> {
        let mut out = Vec::new();
        let mut digits = vec![0usize; per_cell.len()];
        loop {
            if out.len() == self.max_reported {
                return Ok((out, true));
            }
            let items = digits
                .iter()
                .enumerate()
                .flat_map(|(j, &d)| per_cell[j][d].iter().map(move |&n| Item::new(n, j)));
            out.push(Placement::from_items(caps.clone(), items, sizes)?);
            let mut pos = 0;
            loop {
                if pos == digits.len() {
                    return Ok((out, false));
                }
                digits[pos] += 1;
                if digits[pos] < per_cell[pos].len() {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
        }
    }

    /// Exact optimum over every combination of feasible per-cell content
    /// sets, for the overlapping-cache hit ratio or the satisfaction
    /// objective.
    pub fn exhaustive_femto(&self, problem: &Problem<'_>, capacities: &Capacities, kind: ObjectiveKind) -> Result<OracleResult> {
        if kind == ObjectiveKind::SchUs {
            require_satisfaction(problem)?;
        }
        let k = problem.num_contents();
        let m = problem.num_cells();
        if capacities.num_cells() != m {
            return Err(Error::Validation(format!("{} budgets for {m} cells", capacities.num_cells())));
        }
        let sizes = problem.catalog.sizes();
        let mut lists: Vec<Vec<Vec<usize>>> = Vec::with_capacity(m);
        for j in 0..m {
            let budget = capacities.budget(j);
            let space = SubsetSpace::new(k, budget);
            if space.len() > self.cap {
                return Err(refuse(space.len(), self.cap));
            }
            lists.push(
                (0..space.len())
                    .map(|i| space.get(i))
                    .filter(|s| fits(s, budget, sizes))
                    .collect(),
            );
        }
        let total = lists.iter().fold(1u64, |acc, l| acc.saturating_mul(l.len() as u64));
        if total > self.cap {
            return Err(refuse(total, self.cap));
        }

        let decode = |mut idx: u64| -> Vec<Vec<usize>> {
            lists
                .iter()
                .map(|l| {
                    let len = l.len() as u64;
                    let d = (idx % len) as usize;
                    idx /= len;
                    l[d].clone()
                })
                .collect()
        };
        let best = scan(total, self.max_reported, |idx, best| {
            let cells = decode(idx);
            let v = match kind {
                ObjectiveKind::Schr => schr_femto_cells(problem, &cells),
                ObjectiveKind::SchUs => sch_us_cells(problem, &cells),
            };
            best.offer(v, || idx, self.max_reported);
        });
        let optimal = best
            .sets
            .iter()
            .map(|&idx| {
                let items = decode(idx)
                    .into_iter()
                    .enumerate()
                    .flat_map(|(j, set)| set.into_iter().map(move |n| Item::new(n, j)))
                    .collect::<Vec<_>>();
                Placement::from_items(capacities.clone(), items, sizes)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(OracleResult {
            optimum: best.value,
            optimal,
            enumerated: total,
            truncated: best.truncated,
        })
    }
}

pub fn exhaustive_single(problem: &Problem<'_>, budget: Budget) -> Result<OracleResult> {
    Exhaustive::default().exhaustive_single(problem, budget)
}

pub fn exhaustive_femto(problem: &Problem<'_>, capacities: &Capacities, kind: ObjectiveKind) -> Result<OracleResult> {
    Exhaustive::default().exhaustive_femto(problem, capacities, kind)
}
