//! The shared greedy loop: repeatedly commit the admissible candidate with
//! the highest score, breaking ties towards the lowest `(content, cell)`.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Step;
use crate::error::Result;
use crate::objective::{IncrementalObjective, Item};

/// How the argmax of each greedy step is found. Both produce the same
/// placement; lazy evaluation relies on gains only shrinking as items are
/// committed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Priority queue of possibly stale scores, refreshed on pop.
    #[default]
    Lazy,
    /// Full parallel rescan every step.
    Naive,
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    score: f64,
    item: Item,
    round: usize,
}

impl Entry {
    fn key(&self) -> (f64, Reverse<Item>) {
        (self.score, Reverse(self.item))
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
    }
}

/// Runs greedy until no admissible candidate has a positive score.
/// `weight` divides the gain (1 for plain greedy, the size for the density
/// rule). Candidates that stop being admissible are dropped for good, which
/// is sound because usage only grows.
pub(crate) fn run<S, W>(state: &mut S, candidates: Vec<Item>, weight: W, strategy: Strategy) -> Result<Vec<Step>>
where
    S: IncrementalObjective + Sync,
    W: Fn(Item) -> f64 + Sync,
{
    match strategy {
        Strategy::Lazy => run_lazy(state, candidates, weight),
        Strategy::Naive => run_naive(state, candidates, weight),
    }
}

fn run_lazy<S, W>(state: &mut S, candidates: Vec<Item>, weight: W) -> Result<Vec<Step>>
where
    S: IncrementalObjective + Sync,
    W: Fn(Item) -> f64 + Sync,
{
    let initial: Vec<Entry> = candidates
        .into_par_iter()
        .filter(|&item| state.admits(item))
        .map(|item| Entry {
            score: state.gain(item) / weight(item),
            item,
            round: 0,
        })
        .collect();
    let mut heap = BinaryHeap::from(initial);
    let mut round = 0;
    let mut steps = Vec::new();
    while let Some(top) = heap.pop() {
        if !state.admits(top.item) {
            continue;
        }
        if top.round == round {
            if top.score <= 0.0 {
                break;
            }
            let gain = state.commit(top.item)?;
            steps.push(Step { item: top.item, gain });
            round += 1;
        } else {
            heap.push(Entry {
                score: state.gain(top.item) / weight(top.item),
                item: top.item,
                round,
            });
        }
    }
    Ok(steps)
}

fn run_naive<S, W>(state: &mut S, mut candidates: Vec<Item>, weight: W) -> Result<Vec<Step>>
where
    S: IncrementalObjective + Sync,
    W: Fn(Item) -> f64 + Sync,
{
    let mut steps = Vec::new();
    loop {
        candidates.retain(|&item| state.admits(item));
        let best = candidates
            .par_iter()
            .map(|&item| Entry {
                score: state.gain(item) / weight(item),
                item,
                round: 0,
            })
            .max();
        match best {
            Some(e) if e.score > 0.0 => {
                let gain = state.commit(e.item)?;
                steps.push(Step { item: e.item, gain });
            }
            _ => return Ok(steps),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_prefer_lowest_item() {
        let a = Entry {
            score: 1.0,
            item: Item::new(0, 1),
            round: 0,
        };
        let b = Entry {
            score: 1.0,
            item: Item::new(1, 0),
            round: 0,
        };
        let c = Entry {
            score: 0.5,
            item: Item::new(0, 0),
            round: 0,
        };
        assert_eq!([b, c, a].into_iter().max().unwrap().item, a.item);
    }
}
