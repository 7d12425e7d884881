use std::collections::BTreeMap;
use std::io::Write;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{CatalogSource, NetworkSource, ScenarioConfig, Scheme, SweepConfig, UtilitySource};
use super::generators::{gen_sch1, gen_sch2, gen_zipf_demand};
use crate::catalog::{ingest_catalog, read_bundle, Catalog, Demand, UtilityMode, UtilityModel};
use crate::error::{Error, Result};
use crate::network::{generate_geometric, to_single_cache, Association, CoverageModel};
use crate::objective::{schr_femto, Budget, Capacities, Placement};
use crate::oracle::simulate_requests;
use crate::problem::Problem;
use crate::solvers;

/// File inputs of a scenario, read once and shared by every row.
#[derive(Clone, Debug, Default)]
pub struct LoadedInputs {
    catalog: Option<(Catalog, UtilityModel)>,
    coverage: Option<CoverageModel>,
}

impl LoadedInputs {
    pub fn load(config: &ScenarioConfig) -> Result<Self> {
        let catalog = match &config.catalog {
            CatalogSource::Synthetic { .. } => None,
            CatalogSource::Files { contents, relations } => Some(ingest_catalog(contents, relations)?),
            CatalogSource::Bundle { path } => Some(read_bundle(path, UtilityMode::Acceptance)?),
        };
        let coverage = match &config.network {
            NetworkSource::Geometric(_) => None,
            NetworkSource::CoverageFile {
                path,
                num_users,
                num_cells,
            } => Some(CoverageModel::read_csv(path, *num_users, *num_cells)?),
        };
        Ok(LoadedInputs { catalog, coverage })
    }
}

/// Seeds of the independent random parts of one row, all derived from the
/// row seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RowSeeds {
    pub network: u64,
    pub utility: u64,
    pub requests: u64,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

impl RowSeeds {
    pub fn derive(seed: u64) -> Self {
        let base = splitmix(seed);
        RowSeeds {
            network: splitmix(base ^ 1),
            utility: splitmix(base ^ 2),
            requests: splitmix(base ^ 3),
        }
    }
}

/// A fully built scenario: catalog, both coverage views and both utility
/// views.
#[derive(Clone, Debug)]
pub struct Instance {
    pub catalog: Catalog,
    pub coverage: CoverageModel,
    /// Every user tied to its nearest cell.
    pub single_coverage: CoverageModel,
    pub utility: UtilityModel,
    pub identity: UtilityModel,
    pub capacities: Capacities,
    pub seeds: RowSeeds,
}

impl Instance {
    pub fn build(config: &ScenarioConfig, inputs: &LoadedInputs, seed: u64) -> Result<Self> {
        let seeds = RowSeeds::derive(seed);
        let (catalog, ingested) = match (&config.catalog, &inputs.catalog) {
            (
                CatalogSource::Synthetic {
                    num_contents,
                    zipf_exponent,
                },
                _,
            ) => (
                Catalog::with_unit_sizes(gen_zipf_demand(*num_contents, *zipf_exponent)?)?,
                None,
            ),
            (_, Some((c, u))) => (c.clone(), Some(u)),
            (_, None) => return Err(Error::Config("catalog files were not loaded".into())),
        };
        let k = catalog.num_contents();
        let utility = match &config.utility {
            UtilitySource::Identity => UtilityModel::identity(k, UtilityMode::Acceptance)?,
            UtilitySource::Ingested { acceptance } => {
                let u = ingested.ok_or_else(|| Error::Config("ingested utilities need a file catalog".into()))?;
                match acceptance {
                    Some(a) => u.with_uniform_utility(*a)?,
                    None => u.clone(),
                }
            }
            UtilitySource::Sch1 {
                mean_degree,
                acceptance,
                sampling,
            } => {
                let popularity = match catalog.demand() {
                    Demand::Shared(p) => p.clone(),
                    Demand::PerUser(_) => return Err(Error::Config("popularity relations need shared demand".into())),
                };
                gen_sch1(&popularity, *mean_degree, *acceptance, seeds.utility, *sampling)?
            }
            UtilitySource::Sch2 { mean_degree, acceptance } => gen_sch2(k, *mean_degree, *acceptance, seeds.utility)?,
        };
        let coverage = match (&config.network, &inputs.coverage) {
            (NetworkSource::Geometric(g), _) => generate_geometric(g, seeds.network)?,
            (_, Some(c)) => c.clone(),
            (_, None) => return Err(Error::Config("coverage file was not loaded".into())),
        };
        let single_coverage = to_single_cache(&coverage, &Association::Strongest)?;
        let m = coverage.num_cells();
        let capacities = if config.size_aware {
            let mean = catalog.sizes().iter().sum::<f64>() / k as f64;
            Capacities::uniform_bytes(m, config.cache_size as f64 * mean)
        } else {
            Capacities::uniform_items(m, config.cache_size)
        };
        Ok(Instance {
            identity: UtilityModel::identity(k, UtilityMode::Acceptance)?,
            catalog,
            coverage,
            single_coverage,
            utility,
            capacities,
            seeds,
        })
    }

    /// The problem a scheme optimizes and is scored on.
    pub fn problem(&self, scheme: Scheme) -> Result<Problem<'_>> {
        let coverage = if scheme.single_cache() {
            &self.single_coverage
        } else {
            &self.coverage
        };
        let utility = if scheme.uses_relations() {
            &self.utility
        } else {
            &self.identity
        };
        Problem::new(&self.catalog, coverage, utility)
    }
}

#[derive(Clone, Debug)]
pub struct SchemeRun {
    pub placement: Placement,
    /// Hit ratio of the placement on the scheme's own problem.
    pub objective: f64,
    pub solve_ms: f64,
}

/// Places contents with the solver a scheme prescribes.
pub fn solve_scheme(instance: &Instance, scheme: Scheme) -> Result<SchemeRun> {
    let problem = instance.problem(scheme)?;
    let caps = &instance.capacities;
    let start = Instant::now();
    let result = match scheme {
        Scheme::Single => solvers::popularity_baseline(&problem, caps)?,
        // capacities are uniform, so the first cell speaks for all
        Scheme::SingleSch => match caps.budgets().first().copied().unwrap_or(Budget::Unlimited) {
            Budget::Bytes(b) => solvers::fast_greedy_knapsack(&problem, b)?,
            Budget::Items(c) => solvers::greedy_single(&problem, c)?,
            Budget::Unlimited => solvers::greedy_single(&problem, problem.num_contents())?,
        },
        Scheme::Femto | Scheme::FemtoSch => solvers::greedy_femto(&problem, caps)?,
    };
    let solve_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(SchemeRun {
        objective: schr_femto(&problem, &result.placement)?,
        placement: result.placement,
        solve_ms,
    })
}

/// One output line of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: &'static str,
    pub value: f64,
    pub scheme: Scheme,
    pub seed: u64,
    pub objective: f64,
    pub sim_hit_ratio: f64,
    pub sim_stderr: f64,
    pub solve_ms: f64,
    #[serde(skip)]
    pub seeds: RowSeeds,
    #[serde(skip)]
    pub error: Option<String>,
}

/// Streams rows as CSV, flushing after each so an interrupted run keeps
/// only complete lines.
pub struct CsvSink<W: Write> {
    writer: csv::Writer<W>,
}

pub const CSV_HEADER: &str = "axis,value,scheme,seed,objective,sim_hit_ratio,sim_stderr,solve_ms";

impl<W: Write> CsvSink<W> {
    pub fn new(out: W) -> Self {
        CsvSink {
            writer: csv::WriterBuilder::new().has_headers(true).from_writer(out),
        }
    }

    pub fn write(&mut self, row: &SweepRow) -> Result<()> {
        self.writer.serialize(row)?;
        self.writer.flush()?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.writer.flush()?;
        self.writer.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

fn run_row(config: &SweepConfig, inputs: &LoadedInputs, value: f64, seed: u64) -> Vec<SweepRow> {
    let axis = config.sweep.axis;
    let seeds = RowSeeds::derive(seed);
    let row = |scheme: Scheme, outcome: Result<(f64, f64, f64, f64)>| {
        let (objective, sim_hit_ratio, sim_stderr, solve_ms, error) = match outcome {
            Ok((o, m, s, t)) => (o, m, s, t, None),
            Err(e) => {
                log::warn!("{}={value} {scheme} seed {seed}: {e}", axis.name());
                (f64::NAN, f64::NAN, f64::NAN, f64::NAN, Some(e.to_string()))
            }
        };
        SweepRow {
            axis: axis.name(),
            value,
            scheme,
            seed,
            objective,
            sim_hit_ratio,
            sim_stderr,
            solve_ms: if config.record_timing { solve_ms } else { 0.0 },
            seeds,
            error,
        }
    };
    let instance = config
        .scenario
        .with_axis(axis, value)
        .and_then(|s| Instance::build(&s, inputs, seed).map(|i| (s, i)));
    let (scenario, instance) = match instance {
        Ok(x) => x,
        Err(e) => {
            let msg = e.to_string();
            return config
                .schemes
                .iter()
                .map(|&s| row(s, Err(Error::Config(msg.clone()))))
                .collect();
        }
    };
    config
        .schemes
        .iter()
        .map(|&scheme| {
            let outcome = solve_scheme(&instance, scheme).and_then(|run| {
                let (mean, stderr) = if scenario.requests == 0 {
                    (f64::NAN, f64::NAN)
                } else {
                    let est = simulate_requests(
                        &instance.problem(scheme)?,
                        &run.placement,
                        scenario.requests,
                        instance.seeds.requests,
                    )?;
                    (est.mean, est.stderr)
                };
                Ok((run.objective, mean, stderr, run.solve_ms))
            });
            row(scheme, outcome)
        })
        .collect()
}

/// Runs every (value, seed) job in parallel and hands rows to `sink` in
/// (value, scheme, seed) order, as soon as all seeds of a value are done.
/// Rows whose scenario or solver fails carry NaN numbers and an error; an
/// error from `sink` stops the sweep.
pub fn run_sweep(config: &SweepConfig, mut sink: impl FnMut(&SweepRow) -> Result<()>) -> Result<()> {
    config.validate()?;
    let inputs = LoadedInputs::load(&config.scenario)?;
    let values = &config.sweep.values;
    let seeds = &config.seeds;
    let jobs: Vec<(usize, usize)> = (0..values.len())
        .flat_map(|v| (0..seeds.len()).map(move |s| (v, s)))
        .collect();
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, usize, Vec<SweepRow>)>();

    std::thread::scope(|scope| {
        let inputs = &inputs;
        let stop = &stop;
        scope.spawn(move || {
            jobs.par_iter().for_each_with(tx, |tx, &(v, s)| {
                if stop.load(Ordering::Relaxed) {
                    return;
                }
                let rows = run_row(config, inputs, values[v], seeds[s]);
                let _ = tx.send((v, s, rows));
            });
        });

        let mut pending: BTreeMap<usize, Vec<Option<Vec<SweepRow>>>> = BTreeMap::new();
        let mut next = 0;
        for (v, s, rows) in rx {
            let slot = pending.entry(v).or_insert_with(|| vec![None; seeds.len()]);
            slot[s] = Some(rows);
            while pending.get(&next).is_some_and(|b| b.iter().all(Option::is_some)) {
                let block: Vec<Vec<SweepRow>> = pending.remove(&next).unwrap().into_iter().flatten().collect();
                for scheme in 0..config.schemes.len() {
                    for rows in &block {
                        if let Err(e) = sink(&rows[scheme]) {
                            stop.store(true, Ordering::Relaxed);
                            return Err(e);
                        }
                    }
                }
                next += 1;
            }
        }
        Ok(())
    })
}

/// [`run_sweep`] into memory.
pub fn collect_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    run_sweep(config, |r| {
        rows.push(r.clone());
        Ok(())
    })?;
    Ok(rows)
}
