//! Bundles the three model inputs that every objective and solver needs.

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, UtilityModel};
use crate::error::{Error, Result};
use crate::network::CoverageModel;

/// Borrowed view of a validated placement instance.
#[derive(Clone, Copy, Debug)]
pub struct Problem<'a> {
    pub catalog: &'a Catalog,
    pub coverage: &'a CoverageModel,
    pub utility: &'a UtilityModel,
}

impl<'a> Problem<'a> {
    pub fn new(catalog: &'a Catalog, coverage: &'a CoverageModel, utility: &'a UtilityModel) -> Result<Self> {
        let k = catalog.num_contents();
        if utility.num_contents() != k {
            return Err(Error::Validation(format!(
                "utility model covers {} contents, catalog has {k}",
                utility.num_contents()
            )));
        }
        let n = coverage.num_users();
        for (what, users) in [("demand", catalog.num_users()), ("utility", utility.num_users())] {
            if let Some(users) = users {
                if users != n {
                    return Err(Error::Validation(format!(
                        "{what} is defined for {users} users, coverage has {n}"
                    )));
                }
            }
        }
        Ok(Problem {
            catalog,
            coverage,
            utility,
        })
    }

    pub fn num_users(&self) -> usize {
        self.coverage.num_users()
    }

    pub fn num_contents(&self) -> usize {
        self.catalog.num_contents()
    }

    pub fn num_cells(&self) -> usize {
        self.coverage.num_cells()
    }

    /// Requests are issued by users uniformly, so each user's terms are
    /// weighted by `1/N` and objectives stay in `[0, 1]` (or `[0, u_max]`).
    pub fn user_weight(&self) -> f64 {
        1.0 / self.num_users() as f64
    }
}

/// Owned instance, serializable so failing cases can be replayed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub catalog: Catalog,
    pub coverage: CoverageModel,
    pub utility: UtilityModel,
}

impl Scenario {
    pub fn new(catalog: Catalog, coverage: CoverageModel, utility: UtilityModel) -> Result<Self> {
        Problem::new(&catalog, &coverage, &utility)?;
        Ok(Scenario {
            catalog,
            coverage,
            utility,
        })
    }

    pub fn problem(&self) -> Problem<'_> {
        Problem {
            catalog: &self.catalog,
            coverage: &self.coverage,
            utility: &self.utility,
        }
    }
}
