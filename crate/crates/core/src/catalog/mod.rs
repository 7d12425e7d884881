//! Content catalog, request demand and the content-relation (utility) model.

mod io;
mod utility;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{ingest_catalog, ingest_catalog_with_mode, read_bundle, write_bundle, write_contents, write_relations};
pub use utility::{Distribution, Requesters, UtilityMode, UtilityModel, UtilityVariant};

/// Tolerance used when checking that probability vectors sum to one.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// Dense index of a content in `[0, K)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContentId(pub usize);

impl From<usize> for ContentId {
    fn from(value: usize) -> Self {
        ContentId(value)
    }
}

impl std::fmt::Display for ContentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Request probabilities `p_k^i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Demand {
    /// Every user requests from the same distribution; valid for any number of users.
    Shared(Vec<f64>),
    /// One distribution per user.
    PerUser(Vec<Vec<f64>>),
}

impl Demand {
    fn validate(&self, num_contents: usize) -> Result<()> {
        let rows: Vec<&[f64]> = match self {
            Demand::Shared(p) => vec![p.as_slice()],
            Demand::PerUser(rows) => rows.iter().map(Vec::as_slice).collect(),
        };
        for (i, row) in rows.iter().enumerate() {
            if row.len() != num_contents {
                return Err(Error::Validation(format!(
                    "demand row {i} has {} entries, catalog has {num_contents} contents",
                    row.len()
                )));
            }
            if let Some(k) = row.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::Validation(format!(
                    "demand row {i}: probability of content {k} is {}",
                    row[k]
                )));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
                return Err(Error::Validation(format!("demand row {i} sums to {total}, expected 1")));
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct RawCatalog {
    sizes: Vec<f64>,
    demand: Demand,
    popularity: Option<Vec<f64>>,
}

/// Contents with their sizes and request demand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCatalog")]
pub struct Catalog {
    sizes: Vec<f64>,
    demand: Demand,
    /// Raw popularity weights, kept when the demand was normalized from them.
    popularity: Option<Vec<f64>>,
}

impl TryFrom<RawCatalog> for Catalog {
    type Error = Error;

    fn try_from(raw: RawCatalog) -> Result<Self> {
        let catalog = Catalog {
            sizes: raw.sizes,
            demand: raw.demand,
            popularity: raw.popularity,
        };
        catalog.validate()?;
        Ok(catalog)
    }
}

impl Catalog {
    pub fn new(sizes: Vec<f64>, demand: Demand) -> Result<Self> {
        let catalog = Catalog {
            sizes,
            demand,
            popularity: None,
        };
        catalog.validate()?;
        Ok(catalog)
    }

    /// Unit-size contents.
    pub fn with_unit_sizes(demand: Demand) -> Result<Self> {
        let k = match &demand {
            Demand::Shared(p) => p.len(),
            Demand::PerUser(rows) => rows.first().map_or(0, Vec::len),
        };
        Catalog::new(vec![1.0; k], demand)
    }

    /// Builds a shared demand by normalizing nonnegative popularity weights.
    pub fn from_popularity(popularity: Vec<f64>, sizes: Vec<f64>) -> Result<Self> {
        if let Some(k) = popularity.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Validation(format!("popularity of content {k} is {}", popularity[k])));
        }
        let total: f64 = popularity.iter().sum();
        if total <= 0.0 {
            return Err(Error::Validation("total popularity is zero".into()));
        }
        let p = popularity.iter().map(|w| w / total).collect();
        let catalog = Catalog {
            sizes,
            demand: Demand::Shared(p),
            popularity: Some(popularity),
        };
        catalog.validate()?;
        Ok(catalog)
    }

    fn validate(&self) -> Result<()> {
        let k = self.sizes.len();
        if k == 0 {
            return Err(Error::Validation("catalog is empty".into()));
        }
        if let Some(i) = self.sizes.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Validation(format!(
                "size of content {i} must be positive, got {}",
                self.sizes[i]
            )));
        }
        if let Some(pop) = &self.popularity {
            if pop.len() != k {
                return Err(Error::Validation("popularity length differs from catalog size".into()));
            }
        }
        self.demand.validate(k)
    }

    pub fn num_contents(&self) -> usize {
        self.sizes.len()
    }

    /// Number of users the demand is defined for; `None` for shared demand.
    pub fn num_users(&self) -> Option<usize> {
        match &self.demand {
            Demand::Shared(_) => None,
            Demand::PerUser(rows) => Some(rows.len()),
        }
    }

    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    pub fn size(&self, content: ContentId) -> f64 {
        self.sizes[content.0]
    }

    pub fn demand(&self) -> &Demand {
        &self.demand
    }

    pub fn popularity(&self) -> Option<&[f64]> {
        self.popularity.as_deref()
    }

    /// `p_k^i`; `user` is ignored for shared demand.
    #[inline]
    pub fn request_probability(&self, user: usize, content: usize) -> f64 {
        match &self.demand {
            Demand::Shared(p) => p[content],
            Demand::PerUser(rows) => rows[user][content],
        }
    }

    pub fn demand_row(&self, user: usize) -> &[f64] {
        match &self.demand {
            Demand::Shared(p) => p,
            Demand::PerUser(rows) => &rows[user],
        }
    }

    /// Replaces all sizes, keeping the demand.
    pub fn with_sizes(&self, sizes: Vec<f64>) -> Result<Self> {
        let catalog = Catalog {
            sizes,
            demand: self.demand.clone(),
            popularity: self.popularity.clone(),
        };
        catalog.validate()?;
        Ok(catalog)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn popularity_is_normalized() {
        let c = Catalog::from_popularity(vec![6.0, 3.0, 1.0], vec![1.0; 3]).unwrap();
        assert_eq!(c.demand_row(0), &[0.6, 0.3, 0.1]);
        assert_eq!(c.num_users(), None);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(Catalog::new(vec![1.0, 1.0], Demand::Shared(vec![0.5, 0.6])).is_err());
        assert!(Catalog::new(vec![1.0, 1.0], Demand::Shared(vec![1.5, -0.5])).is_err());
        assert!(Catalog::new(vec![1.0, 0.0], Demand::Shared(vec![0.5, 0.5])).is_err());
        assert!(Catalog::new(vec![1.0], Demand::PerUser(vec![vec![1.0], vec![0.9]])).is_err());
        assert!(Catalog::from_popularity(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn per_user_lookup() {
        let c = Catalog::with_unit_sizes(Demand::PerUser(vec![vec![1.0, 0.0], vec![0.25, 0.75]])).unwrap();
        assert_eq!(c.num_users(), Some(2));
        assert_eq!(c.request_probability(1, 1), 0.75);
        assert_eq!(c.request_probability(0, 1), 0.0);
    }

    #[test]
    fn serde_validates() {
        let bad = r#"{"sizes":[1.0],"demand":{"shared":[0.5]},"popularity":null}"#;
        assert!(serde_json::from_str::<Catalog>(bad).is_err());
        let c = Catalog::from_popularity(vec![1.0, 3.0], vec![2.0, 5.0]).unwrap();
        let back: Catalog = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
