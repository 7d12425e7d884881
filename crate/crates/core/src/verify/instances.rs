//! Small random instances for property and bound checks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, Demand, Distribution, UtilityMode, UtilityModel, UtilityVariant};
use crate::network::CoverageModel;
use crate::problem::Scenario;

/// Shape of the random instances to draw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceShape {
    pub contents: (usize, usize),
    pub users: (usize, usize),
    pub cells: (usize, usize),
    /// Each user is tied to at most one cell with `q = 1`.
    pub single_cache: bool,
    pub mode: UtilityMode,
    pub variant: UtilityVariant,
    /// Integer sizes in `1..=5` instead of unit sizes.
    pub varied_sizes: bool,
    pub per_user_demand: bool,
    /// Probability that an ordered content pair is related.
    pub relation_density: f64,
}

impl InstanceShape {
    pub fn single(max_contents: usize) -> Self {
        InstanceShape {
            contents: (2, max_contents),
            users: (1, 4),
            cells: (1, 1),
            single_cache: true,
            mode: UtilityMode::Acceptance,
            variant: UtilityVariant::Average,
            varied_sizes: false,
            per_user_demand: false,
            relation_density: 0.3,
        }
    }

    pub fn femto(max_contents: usize, max_cells: usize) -> Self {
        InstanceShape {
            contents: (2, max_contents),
            users: (1, 5),
            cells: (1, max_cells),
            single_cache: false,
            ..InstanceShape::single(max_contents)
        }
    }
}

fn weights<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..k)
        .map(|_| {
            if rng.random_bool(0.1) {
                0.0
            } else {
                rng.random::<f64>().powi(2)
            }
        })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[0] = 1.0;
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

fn utility_value<R: Rng + ?Sized>(rng: &mut R, upper: f64) -> f64 {
    // a few exact ties to exercise tie-breaking
    if rng.random_bool(0.2) {
        upper * 0.5
    } else {
        upper * rng.random_range(0.05..=1.0)
    }
}

fn distribution<R: Rng + ?Sized>(rng: &mut R, upper: f64) -> Distribution {
    let n = rng.random_range(1..=3);
    let w = weights(rng, n);
    let points = w.into_iter().map(|p| (utility_value(rng, upper), p)).collect();
    Distribution::new(points).expect("weights sum to one")
}

/// Draws one scenario of the given shape.
pub fn random_scenario<R: Rng + ?Sized>(shape: &InstanceShape, rng: &mut R) -> Scenario {
    let k = rng.random_range(shape.contents.0..=shape.contents.1);
    let n = rng.random_range(shape.users.0..=shape.users.1);
    let m = rng.random_range(shape.cells.0..=shape.cells.1);

    let demand = if shape.per_user_demand {
        Demand::PerUser((0..n).map(|_| weights(rng, k)).collect())
    } else {
        Demand::Shared(weights(rng, k))
    };
    let sizes = if shape.varied_sizes {
        (0..k).map(|_| rng.random_range(1..=5) as f64).collect()
    } else {
        vec![1.0; k]
    };
    let catalog = Catalog::new(sizes, demand).expect("valid catalog");

    let mut q = vec![0.0; n * m];
    for i in 0..n {
        if shape.single_cache {
            if rng.random_bool(0.9) {
                q[i * m + rng.random_range(0..m)] = 1.0;
            }
        } else {
            for j in 0..m {
                if rng.random_bool(0.6) {
                    q[i * m + j] = if rng.random_bool(0.3) {
                        1.0
                    } else {
                        rng.random_range(0.1..1.0)
                    };
                }
            }
        }
    }
    let coverage = CoverageModel::new(n, m, q).expect("valid coverage");

    let upper = shape.mode.diagonal();
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|a| (0..k).map(move |b| (a, b)))
        .filter(|&(a, b)| a != b)
        .collect();
    let utility = match shape.variant {
        UtilityVariant::Average => {
            let mut edges = Vec::new();
            for &(a, b) in &pairs {
                if rng.random_bool(shape.relation_density) {
                    edges.push((a, b, utility_value(rng, upper)));
                }
            }
            UtilityModel::average(k, shape.mode, edges)
        }
        UtilityVariant::PerUser => {
            let mut entries = Vec::new();
            for i in 0..n {
                for &(a, b) in &pairs {
                    if rng.random_bool(shape.relation_density) {
                        entries.push((i, a, b, utility_value(rng, upper)));
                    }
                }
            }
            UtilityModel::per_user(n, k, shape.mode, entries)
        }
        UtilityVariant::Distributional => {
            let mut edges = Vec::new();
            for &(a, b) in &pairs {
                if rng.random_bool(shape.relation_density) {
                    edges.push((a, b, distribution(rng, upper)));
                }
            }
            UtilityModel::distributional(k, shape.mode, edges)
        }
    }
    .expect("valid utility");
    Scenario::new(catalog, coverage, utility).expect("consistent scenario")
}
