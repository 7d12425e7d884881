use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{Demand, UtilityMode, UtilityModel};
use crate::error::{Error, Result};

/// Shared Zipf demand, `p_k ∝ (k + 1)^(−exponent)`.
pub fn gen_zipf_demand(num_contents: usize, exponent: f64) -> Result<Demand> {
    if num_contents == 0 {
        return Err(Error::Validation("catalog is empty".into()));
    }
    if !(exponent.is_finite() && exponent >= 0.0) {
        return Err(Error::Validation(format!(
            "zipf exponent must be nonnegative, got {exponent}"
        )));
    }
    let weights: Vec<f64> = (0..num_contents).map(|k| ((k + 1) as f64).powf(-exponent)).collect();
    let total: f64 = weights.iter().sum();
    Ok(Demand::Shared(weights.into_iter().map(|w| w / total).collect()))
}

/// How the popularity-driven relation graph draws each content's relations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sch1Sampling {
    /// Every pair is an independent coin flip; the out-degree is random with
    /// mean `E[R]`.
    #[default]
    PerEdge,
    /// Exactly `round(E[R])` relations per content, drawn without
    /// replacement with weights `p_n`.
    FixedDegree,
}

fn check_common(num_contents: usize, mean_degree: f64, acceptance: f64) -> Result<()> {
    if num_contents < 2 {
        return Err(Error::Validation("relations need at least two contents".into()));
    }
    if !(mean_degree > 0.0 && mean_degree < num_contents as f64) {
        return Err(Error::Validation(format!(
            "mean degree must lie in (0, {num_contents}), got {mean_degree}"
        )));
    }
    if !(0.0..=1.0).contains(&acceptance) {
        return Err(Error::Validation(format!("acceptance must lie in [0, 1], got {acceptance}")));
    }
    Ok(())
}

/// Relation graph where content `k` relates to `n ≠ k` with probability
/// `min(1, E[R]·p_n / Σ_{m≠k} p_m)`, so popular contents are related to
/// more often. Every edge gets utility `acceptance`.
pub fn gen_sch1(
    popularity: &[f64],
    mean_degree: f64,
    acceptance: f64,
    seed: u64,
    sampling: Sch1Sampling,
) -> Result<UtilityModel> {
    let k = popularity.len();
    check_common(k, mean_degree, acceptance)?;
    if let Some(i) = popularity.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::Validation(format!("popularity of content {i} is {}", popularity[i])));
    }
    let total: f64 = popularity.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    match sampling {
        Sch1Sampling::PerEdge => {
            for src in 0..k {
                let others = total - popularity[src];
                if others <= 0.0 {
                    continue;
                }
                let scale = mean_degree / others;
                for (dst, &p) in popularity.iter().enumerate() {
                    if dst != src && rng.random::<f64>() < (scale * p).min(1.0) {
                        edges.push((src, dst, acceptance));
                    }
                }
            }
        }
        Sch1Sampling::FixedDegree => {
            let degree = mean_degree.round() as usize;
            for src in 0..k {
                let weight = |n: usize| if n == src { 0.0 } else { popularity[n] };
                let picked = index::sample_weighted(&mut rng, k, weight, degree)
                    .map_err(|e| Error::Validation(format!("cannot draw {degree} relations for content {src}: {e}")))?;
                let mut picked = picked.into_vec();
                picked.sort_unstable();
                edges.extend(picked.into_iter().map(|dst| (src, dst, acceptance)));
            }
        }
    }
    UtilityModel::average(k, UtilityMode::Acceptance, edges)
}

/// Relation graph where every content relates to exactly `round(E[R])`
/// others chosen uniformly, each with utility `acceptance`.
pub fn gen_sch2(num_contents: usize, mean_degree: f64, acceptance: f64, seed: u64) -> Result<UtilityModel> {
    check_common(num_contents, mean_degree, acceptance)?;
    let degree = mean_degree.round() as usize;
    if degree >= num_contents {
        return Err(Error::Validation(format!(
            "{degree} relations per content need more than {num_contents} contents"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(num_contents * degree);
    for src in 0..num_contents {
        let mut picked: Vec<usize> = index::sample(&mut rng, num_contents - 1, degree)
            .into_iter()
            .map(|n| if n >= src { n + 1 } else { n })
            .collect();
        picked.sort_unstable();
        edges.extend(picked.into_iter().map(|dst| (src, dst, acceptance)));
    }
    UtilityModel::average(num_contents, UtilityMode::Acceptance, edges)
}
