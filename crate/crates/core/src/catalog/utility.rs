use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ContentId, PROBABILITY_TOLERANCE};
use crate::error::{Error, Result};

/// How utility values are interpreted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityMode {
    /// `u` is the probability that a user accepts the related content instead
    /// of the requested one; the requested content itself is always accepted.
    Acceptance,
    /// `u` is the satisfaction a user gets from the delivered content, capped
    /// by `u_max`, which is also the value of receiving the requested content.
    Satisfaction { u_max: f64 },
}

impl UtilityMode {
    /// Value of `u_kk`.
    pub fn diagonal(&self) -> f64 {
        match self {
            UtilityMode::Acceptance => 1.0,
            UtilityMode::Satisfaction { u_max } => *u_max,
        }
    }

    fn check_value(&self, value: f64) -> Result<()> {
        let upper = self.diagonal();
        if value.is_finite() && (0.0..=upper).contains(&value) {
            Ok(())
        } else {
            Err(Error::Validation(format!("utility {value} outside [0, {upper}]")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityVariant {
    /// Exact utilities `u_kn^i` for every user.
    PerUser,
    /// Only the distribution of `u_kn^i` over users is known.
    Distributional,
    /// Only the average utility `u_kn` is known.
    Average,
}

/// Discrete distribution over explicit support points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct Distribution {
    /// `(value, probability)`, sorted by value, values distinct.
    points: Vec<(f64, f64)>,
}

impl TryFrom<Vec<(f64, f64)>> for Distribution {
    type Error = Error;

    fn try_from(points: Vec<(f64, f64)>) -> Result<Self> {
        Distribution::new(points)
    }
}

impl From<Distribution> for Vec<(f64, f64)> {
    fn from(d: Distribution) -> Self {
        d.points
    }
}

impl Distribution {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Validation("distribution has no support points".into()));
        }
        for &(v, p) in &points {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Validation(format!("support point {v} is not a nonnegative real")));
            }
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::Validation(format!("probability {p} is invalid")));
            }
        }
        let total: f64 = points.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::Validation(format!("distribution probabilities sum to {total}")));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        points.dedup_by(|later, earlier| {
            if later.0 == earlier.0 {
                earlier.1 += later.1;
                true
            } else {
                false
            }
        });
        Ok(Distribution { points })
    }

    pub fn point_mass(value: f64) -> Self {
        Distribution {
            points: vec![(value, 1.0)],
        }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// `Σ v·P(v)`; the discrete form of `∫(1 − F(x))dx`.
    pub fn expectation(&self) -> f64 {
        self.points.iter().fold(0.0, |acc, &(v, p)| acc + v * p)
    }

    pub fn max_value(&self) -> f64 {
        self.points.last().map_or(0.0, |&(v, _)| v)
    }

    /// `P(scale · X ≤ x)`.
    pub fn scaled_cdf(&self, scale: f64, x: f64) -> f64 {
        self.points
            .iter()
            .take_while(|&&(v, _)| v * scale <= x)
            .map(|&(_, p)| p)
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut draw: f64 = rng.random();
        for &(v, p) in &self.points {
            if draw < p {
                return v;
            }
            draw -= p;
        }
        self.max_value()
    }
}

/// Iterator over the contents `k` whose request can be served by a given
/// stored content, with the matching utility `u_k,candidate`. The candidate
/// itself comes first.
pub struct Requesters<'a> {
    diagonal: Option<(usize, f64)>,
    rest: std::slice::Iter<'a, (usize, f64)>,
}

impl Iterator for Requesters<'_> {
    type Item = (usize, f64);

    #[inline]
    fn next(&mut self) -> Option<(usize, f64)> {
        if let Some(d) = self.diagonal.take() {
            return Some(d);
        }
        self.rest.next().copied()
    }
}

/// Forward (requested → related) and reverse (related → requested) rows,
/// each sorted by content index.
#[derive(Clone, Debug, PartialEq)]
struct Adjacency {
    forward: Vec<Vec<(usize, f64)>>,
    reverse: Vec<Vec<(usize, f64)>>,
}

impl Adjacency {
    fn build(num_contents: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut forward = vec![Vec::new(); num_contents];
        let mut reverse = vec![Vec::new(); num_contents];
        for &(k, n, u) in edges {
            forward[k].push((n, u));
            reverse[n].push((k, u));
        }
        for row in forward.iter_mut().chain(reverse.iter_mut()) {
            row.sort_by_key(|&(idx, _)| idx);
        }
        Adjacency { forward, reverse }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Relations {
    Average(Adjacency),
    Distributional {
        /// Expected utilities, used wherever a scalar `u_kn` is needed.
        expected: Adjacency,
        /// `distributions[k]` aligned with `expected.forward[k]`.
        distributions: Vec<Vec<Distribution>>,
    },
    PerUser {
        num_users: usize,
        forward: HashMap<(usize, usize), Vec<(usize, f64)>>,
        reverse: HashMap<(usize, usize), Vec<(usize, f64)>>,
    },
}

/// Sparse content-relation model. Diagonal entries are implicit: `u_kk` is 1
/// in acceptance mode and `u_max` in satisfaction mode, and is never stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "UtilityRecord", into = "UtilityRecord")]
pub struct UtilityModel {
    mode: UtilityMode,
    num_contents: usize,
    relations: Relations,
    diagonal_distribution: Distribution,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UtilityRecord {
    mode: UtilityMode,
    num_contents: usize,
    #[serde(default)]
    num_users: Option<usize>,
    #[serde(default)]
    average: Vec<(usize, usize, f64)>,
    #[serde(default)]
    distributional: Vec<(usize, usize, Distribution)>,
    #[serde(default)]
    per_user: Vec<(usize, usize, usize, f64)>,
    variant: UtilityVariant,
}

impl From<UtilityModel> for UtilityRecord {
    fn from(model: UtilityModel) -> Self {
        let mut record = UtilityRecord {
            mode: model.mode,
            num_contents: model.num_contents,
            num_users: model.num_users(),
            average: Vec::new(),
            distributional: Vec::new(),
            per_user: Vec::new(),
            variant: model.variant(),
        };
        match &model.relations {
            Relations::Average(adj) => record.average = model_edges(adj),
            Relations::Distributional { expected, distributions } => {
                for (k, row) in expected.forward.iter().enumerate() {
                    for (&(n, _), dist) in row.iter().zip(&distributions[k]) {
                        record.distributional.push((k, n, dist.clone()));
                    }
                }
            }
            Relations::PerUser { forward, .. } => {
                let mut keys: Vec<_> = forward.keys().copied().collect();
                keys.sort_unstable();
                for (user, k) in keys {
                    for &(n, u) in &forward[&(user, k)] {
                        record.per_user.push((user, k, n, u));
                    }
                }
            }
        }
        record
    }
}

fn model_edges(adj: &Adjacency) -> Vec<(usize, usize, f64)> {
    adj.forward
        .iter()
        .enumerate()
        .flat_map(|(k, row)| row.iter().map(move |&(n, u)| (k, n, u)))
        .collect()
}

impl TryFrom<UtilityRecord> for UtilityModel {
    type Error = Error;

    fn try_from(r: UtilityRecord) -> Result<Self> {
        match r.variant {
            UtilityVariant::Average => UtilityModel::average(r.num_contents, r.mode, r.average),
            UtilityVariant::Distributional => UtilityModel::distributional(r.num_contents, r.mode, r.distributional),
            UtilityVariant::PerUser => UtilityModel::per_user(
                r.num_users
                    .ok_or_else(|| Error::Validation("per-user model without num_users".into()))?,
                r.num_contents,
                r.mode,
                r.per_user,
            ),
        }
    }
}

fn check_mode(mode: UtilityMode) -> Result<()> {
    if let UtilityMode::Satisfaction { u_max } = mode {
        if !(u_max.is_finite() && u_max > 0.0) {
            return Err(Error::Validation(format!("u_max must be positive, got {u_max}")));
        }
    }
    Ok(())
}

fn check_pair(num_contents: usize, k: usize, n: usize) -> Result<()> {
    if k >= num_contents {
        return Err(Error::index("content", k, num_contents));
    }
    if n >= num_contents {
        return Err(Error::index("content", n, num_contents));
    }
    if k == n {
        return Err(Error::Validation(format!(
            "explicit diagonal entry ({k},{k}); the diagonal is implicit"
        )));
    }
    Ok(())
}

impl UtilityModel {
    /// Only the implicit diagonal: the classical no-soft-hit setting.
    pub fn identity(num_contents: usize, mode: UtilityMode) -> Result<Self> {
        UtilityModel::average(num_contents, mode, Vec::new())
    }

    /// Average-utility model from directed edges `(requested, related, u)`.
    pub fn average(num_contents: usize, mode: UtilityMode, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        check_mode(mode)?;
        let edges: Vec<_> = edges.into_iter().collect();
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for &(k, n, u) in &edges {
            check_pair(num_contents, k, n)?;
            mode.check_value(u)?;
            if !seen.insert((k, n)) {
                return Err(Error::Validation(format!("duplicate relation ({k},{n})")));
            }
        }
        Ok(UtilityModel {
            mode,
            num_contents,
            relations: Relations::Average(Adjacency::build(num_contents, &edges)),
            diagonal_distribution: Distribution::point_mass(mode.diagonal()),
        })
    }

    pub fn distributional(
        num_contents: usize,
        mode: UtilityMode,
        edges: impl IntoIterator<Item = (usize, usize, Distribution)>,
    ) -> Result<Self> {
        check_mode(mode)?;
        let mut edges: Vec<_> = edges.into_iter().collect();
        edges.sort_by_key(|&(k, n, _)| (k, n));
        let mut scalar = Vec::with_capacity(edges.len());
        let mut distributions = vec![Vec::new(); num_contents];
        for (idx, (k, n, dist)) in edges.into_iter().enumerate() {
            check_pair(num_contents, k, n)?;
            mode.check_value(dist.max_value())?;
            if idx > 0 && scalar.last().map(|&(pk, pn, _)| (pk, pn)) == Some((k, n)) {
                return Err(Error::Validation(format!("duplicate relation ({k},{n})")));
            }
            scalar.push((k, n, dist.expectation()));
            distributions[k].push(dist);
        }
        Ok(UtilityModel {
            mode,
            num_contents,
            relations: Relations::Distributional {
                expected: Adjacency::build(num_contents, &scalar),
                distributions,
            },
            diagonal_distribution: Distribution::point_mass(mode.diagonal()),
        })
    }

    /// Per-user model from entries `(user, requested, related, u)`.
    pub fn per_user(
        num_users: usize,
        num_contents: usize,
        mode: UtilityMode,
        entries: impl IntoIterator<Item = (usize, usize, usize, f64)>,
    ) -> Result<Self> {
        check_mode(mode)?;
        let mut forward: HashMap<(usize, usize), Vec<(usize, f64)>> = HashMap::new();
        let mut reverse: HashMap<(usize, usize), Vec<(usize, f64)>> = HashMap::new();
        for (user, k, n, u) in entries {
            if user >= num_users {
                return Err(Error::index("user", user, num_users));
            }
            check_pair(num_contents, k, n)?;
            mode.check_value(u)?;
            let row = forward.entry((user, k)).or_default();
            if row.iter().any(|&(m, _)| m == n) {
                return Err(Error::Validation(format!("duplicate relation ({k},{n}) for user {user}")));
            }
            row.push((n, u));
            reverse.entry((user, n)).or_default().push((k, u));
        }
        for row in forward.values_mut().chain(reverse.values_mut()) {
            row.sort_by_key(|&(idx, _)| idx);
        }
        Ok(UtilityModel {
            mode,
            num_contents,
            relations: Relations::PerUser {
                num_users,
                forward,
                reverse,
            },
            diagonal_distribution: Distribution::point_mass(mode.diagonal()),
        })
    }

    pub fn mode(&self) -> UtilityMode {
        self.mode
    }

    pub fn variant(&self) -> UtilityVariant {
        match self.relations {
            Relations::Average(_) => UtilityVariant::Average,
            Relations::Distributional { .. } => UtilityVariant::Distributional,
            Relations::PerUser { .. } => UtilityVariant::PerUser,
        }
    }

    pub fn num_contents(&self) -> usize {
        self.num_contents
    }

    /// Users the model is specific to; `None` when utilities are shared.
    pub fn num_users(&self) -> Option<usize> {
        match self.relations {
            Relations::PerUser { num_users, .. } => Some(num_users),
            _ => None,
        }
    }

    /// `u_kn^i` with the implicit diagonal; absent pairs are 0. Distributional
    /// models return the expected utility.
    pub fn utility(&self, user: usize, requested: ContentId, candidate: ContentId) -> Result<f64> {
        let (k, n) = (requested.0, candidate.0);
        if k >= self.num_contents {
            return Err(Error::index("content", k, self.num_contents));
        }
        if n >= self.num_contents {
            return Err(Error::index("content", n, self.num_contents));
        }
        if let Some(users) = self.num_users() {
            if user >= users {
                return Err(Error::index("user", user, users));
            }
        }
        Ok(self.value(user, k, n))
    }

    /// Unchecked variant of [`UtilityModel::utility`].
    #[inline]
    pub fn value(&self, user: usize, requested: usize, candidate: usize) -> f64 {
        if requested == candidate {
            return self.mode.diagonal();
        }
        let row = self.related(user, requested);
        match row.binary_search_by_key(&candidate, |&(n, _)| n) {
            Ok(pos) => row[pos].1,
            Err(_) => 0.0,
        }
    }

    /// Stored relations of `requested` for `user`, sorted, diagonal excluded.
    #[inline]
    pub fn related(&self, user: usize, requested: usize) -> &[(usize, f64)] {
        match &self.relations {
            Relations::Average(adj) => &adj.forward[requested],
            Relations::Distributional { expected, .. } => &expected.forward[requested],
            Relations::PerUser { forward, .. } => forward.get(&(user, requested)).map_or(&[], Vec::as_slice),
        }
    }

    /// Contents whose request `candidate` can serve for `user`, starting
    /// with `candidate` itself.
    #[inline]
    pub fn requesters(&self, user: usize, candidate: usize) -> Requesters<'_> {
        let rest: &[(usize, f64)] = match &self.relations {
            Relations::Average(adj) => &adj.reverse[candidate],
            Relations::Distributional { expected, .. } => &expected.reverse[candidate],
            Relations::PerUser { reverse, .. } => reverse.get(&(user, candidate)).map_or(&[], Vec::as_slice),
        };
        Requesters {
            diagonal: Some((candidate, self.mode.diagonal())),
            rest: rest.iter(),
        }
    }

    /// Utility distribution of the pair; the diagonal is a point mass and
    /// absent pairs give `None`. Non-distributional models expose their
    /// values as point masses only through the diagonal.
    pub fn distribution(&self, requested: usize, candidate: usize) -> Option<&Distribution> {
        if requested == candidate {
            return Some(&self.diagonal_distribution);
        }
        match &self.relations {
            Relations::Distributional { expected, distributions } => {
                let row = &expected.forward[requested];
                row.binary_search_by_key(&candidate, |&(n, _)| n)
                    .ok()
                    .map(|pos| &distributions[requested][pos])
            }
            _ => None,
        }
    }

    /// Mean number of related contents `|{n ≠ k : u_kn > 0}|` per content.
    /// Per-user models average over every (user, content) pair.
    pub fn mean_related_degree(&self) -> f64 {
        let positive = |row: &[(usize, f64)]| row.iter().filter(|&&(_, u)| u > 0.0).count();
        match &self.relations {
            Relations::Average(adj) | Relations::Distributional { expected: adj, .. } => {
                let total: usize = adj.forward.iter().map(|r| positive(r)).sum();
                total as f64 / self.num_contents as f64
            }
            Relations::PerUser { num_users, forward, .. } => {
                let total: usize = forward.values().map(|r| positive(r)).sum();
                total as f64 / (self.num_contents * num_users) as f64
            }
        }
    }

    /// Directed edges of an average model, ordered by `(requested, related)`.
    pub fn edges(&self) -> Result<Vec<(usize, usize, f64)>> {
        match &self.relations {
            Relations::Average(adj) => Ok(model_edges(adj)),
            _ => Err(Error::Validation("edge listing needs an average-utility model".into())),
        }
    }

    /// Same relation graph with every stored edge set to `u`.
    pub fn with_uniform_utility(&self, u: f64) -> Result<Self> {
        let edges = self.edges()?;
        UtilityModel::average(self.num_contents, self.mode, edges.into_iter().map(|(k, n, _)| (k, n, u)))
    }

    /// Reinterprets the stored values under another mode.
    pub fn with_mode(&self, mode: UtilityMode) -> Result<Self> {
        check_mode(mode)?;
        let mut record = UtilityRecord::from(self.clone());
        record.mode = mode;
        UtilityModel::try_from(record)
    }
}
