//! Content placement for edge caches when users may accept a related cached
//! content instead of the one they asked for ("soft cache hits").
//!
//! The crate is organised bottom-up:
//!
//! * [`catalog`]: contents, request demand and the content-relation model.
//! * [`network`]: user-to-cell coverage, including a random geometric generator.
//! * [`objective`]: hit-ratio and satisfaction objectives, placements and
//!   incremental marginal-gain states.
//! * [`solvers`]: greedy placement algorithms and the popularity baseline.
//! * [`oracle`]: exhaustive optimizers and Monte-Carlo request simulation.
//! * [`simkit`]: synthetic generators and the experiment sweep harness.
//! * [`verify`]: the approximation-bound and property suites behind `softcache verify`.

pub mod catalog;
pub mod error;
pub mod network;
pub mod objective;
pub mod oracle;
pub mod problem;
pub mod simkit;
pub mod solvers;
pub mod verify;

pub use catalog::{Catalog, ContentId, Demand, Distribution, UtilityMode, UtilityModel, UtilityVariant};
pub use error::{Error, Result};
pub use network::{CellId, CoverageModel};
pub use objective::{Budget, Capacities, Item, Placement};
pub use problem::{Problem, Scenario};
