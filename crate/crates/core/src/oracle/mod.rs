//! Ground truth for small instances: exhaustive optimizers and a Monte-Carlo
//! replay of user requests.

pub mod combinations;
mod exhaustive;
mod simulate;

pub use exhaustive::{exhaustive_femto, exhaustive_single, Exhaustive, OracleResult, DEFAULT_ENUMERATION_CAP};
pub use simulate::{simulate_requests, SimEstimate};
