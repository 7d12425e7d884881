//! Synthetic scenario generators and the sweep harness that runs the four
//! placement schemes over a grid of parameter values.

mod config;
mod generators;
mod sweep;

pub use config::{
    Axis, CatalogSource, NetworkSource, ScenarioConfig, Scheme, SolveConfig, SweepAxis, SweepConfig, UtilitySource,
};
pub use generators::{gen_sch1, gen_sch2, gen_zipf_demand, Sch1Sampling};
pub use sweep::{
    collect_sweep, run_sweep, solve_scheme, CsvSink, Instance, LoadedInputs, RowSeeds, SchemeRun, SweepRow, CSV_HEADER,
};
