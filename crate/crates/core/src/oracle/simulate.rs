use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{Demand, UtilityMode};
use crate::error::{Error, Result};
use crate::objective::Placement;
use crate::problem::Problem;

/// Requests simulated per random stream.
const CHUNK: u64 = 8192;

/// Empirical soft cache hit ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub mean: f64,
    /// Standard error of `mean`, `sqrt(m(1 − m)/(n − 1))`.
    pub stderr: f64,
    pub hits: u64,
    pub requests: u64,
}

fn bernoulli<R: Rng>(rng: &mut R, p: f64) -> bool {
    p >= 1.0 || (p > 0.0 && rng.random_bool(p))
}

/// Replays `num_requests` random requests against a placement.
///
/// Each request picks a user uniformly and a content from that user's
/// demand. Every stored copy `(n, j)` is then reachable with probability
/// `q_ij` and accepted with probability `u_kn^i`, all independently, so a
/// hit has probability `1 − Π (1 − u_kn^i q_ij)`. A rejected request is a
/// single miss. Requests are split into fixed chunks, each with its own
/// ChaCha stream, so results depend only on `seed` and not on threading.
pub fn simulate_requests(problem: &Problem<'_>, placement: &Placement, num_requests: u64, seed: u64) -> Result<SimEstimate> {
    if problem.utility.mode() != UtilityMode::Acceptance {
        return Err(Error::Mode("request simulation needs acceptance-mode utilities".into()));
    }
    if num_requests == 0 {
        return Err(Error::Validation("need at least one request".into()));
    }
    placement.validate(problem.num_contents(), problem.catalog.sizes())?;
    if placement.num_cells() != problem.num_cells() {
        return Err(Error::Validation(
            "placement and coverage disagree on the number of cells".into(),
        ));
    }
    let n_users = problem.num_users();
    let samplers: Vec<WeightedIndex<f64>> = match problem.catalog.demand() {
        Demand::Shared(p) => vec![WeightedIndex::new(p)],
        Demand::PerUser(rows) => rows.iter().map(WeightedIndex::new).collect(),
    }
    .into_iter()
    .collect::<std::result::Result<_, _>>()
    .map_err(|e| Error::Validation(format!("demand cannot be sampled: {e}")))?;
    let cells = placement.by_cell();
    let utility = problem.utility;

    let chunks = num_requests.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let count = CHUNK.min(num_requests - c * CHUNK);
            let mut hits = 0u64;
            for _ in 0..count {
                let i = rng.random_range(0..n_users);
                let k = samplers[i.min(samplers.len() - 1)].sample(&mut rng);
                let hit = problem.coverage.cells_of(i).iter().any(|&(j, q)| {
                    cells[j].iter().any(|&n| {
                        let u = utility.value(i, k, n);
                        u > 0.0 && bernoulli(&mut rng, q) && bernoulli(&mut rng, u)
                    })
                });
                hits += u64::from(hit);
            }
            hits
        })
        .sum();

    let n = num_requests as f64;
    let mean = hits as f64 / n;
    let stderr = if num_requests > 1 {
        (mean * (1.0 - mean) / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(SimEstimate {
        mean,
        stderr,
        hits,
        requests: num_requests,
    })
}
