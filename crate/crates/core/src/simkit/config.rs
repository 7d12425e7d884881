use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::generators::Sch1Sampling;
use crate::error::{Error, Result};
use crate::network::GeometricConfig;

/// Where contents, sizes and demand come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CatalogSource {
    /// Unit-size contents with shared Zipf demand.
    Synthetic {
        num_contents: usize,
        #[serde(default = "default_zipf")]
        zipf_exponent: f64,
    },
    /// A content file and a relation file.
    Files { contents: PathBuf, relations: PathBuf },
    /// A directory holding `contents.csv` and `relations.csv`.
    Bundle { path: PathBuf },
}

fn default_zipf() -> f64 {
    0.8
}

/// Which relation graph the soft-hit schemes see.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum UtilitySource {
    /// No relations at all.
    Identity,
    /// The relations shipped with a file or bundle catalog; `acceptance`
    /// overwrites every edge's utility.
    Ingested {
        #[serde(default)]
        acceptance: Option<f64>,
    },
    /// Popularity-driven relations.
    Sch1 {
        mean_degree: f64,
        #[serde(default = "one")]
        acceptance: f64,
        #[serde(default)]
        sampling: Sch1Sampling,
    },
    /// Uniformly random relations of fixed degree.
    Sch2 {
        mean_degree: f64,
        #[serde(default = "one")]
        acceptance: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NetworkSource {
    Geometric(GeometricConfig),
    /// A `user,cell,q` file.
    CoverageFile {
        path: PathBuf,
        #[serde(default)]
        num_users: Option<usize>,
        #[serde(default)]
        num_cells: Option<usize>,
    },
}

impl Default for NetworkSource {
    fn default() -> Self {
        NetworkSource::Geometric(GeometricConfig::default())
    }
}

/// One scenario: catalog, relations, network and cache sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub catalog: CatalogSource,
    pub utility: UtilitySource,
    #[serde(default)]
    pub network: NetworkSource,
    /// Contents per cell, or with `size_aware` the cell budget in multiples
    /// of the mean content size.
    #[serde(default = "default_cache_size")]
    pub cache_size: usize,
    #[serde(default)]
    pub size_aware: bool,
    /// Simulated requests per solved placement; 0 skips the simulation.
    #[serde(default = "default_requests")]
    pub requests: u64,
}

fn default_cache_size() -> usize {
    5
}

fn default_requests() -> u64 {
    20_000
}

/// The four placement schemes compared in the experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// Most popular contents in each user's nearest cell, no soft hits.
    Single,
    /// Soft-hit greedy with every user tied to its nearest cell.
    #[serde(rename = "SingleSCH")]
    SingleSch,
    /// Overlapping-cell greedy without soft hits.
    Femto,
    /// Overlapping-cell greedy with soft hits.
    #[serde(rename = "FemtoSCH")]
    FemtoSch,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Single, Scheme::SingleSch, Scheme::Femto, Scheme::FemtoSch];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Single => "Single",
            Scheme::SingleSch => "SingleSCH",
            Scheme::Femto => "Femto",
            Scheme::FemtoSch => "FemtoSCH",
        }
    }

    pub fn uses_relations(self) -> bool {
        matches!(self, Scheme::SingleSch | Scheme::FemtoSch)
    }

    pub fn single_cache(self) -> bool {
        matches!(self, Scheme::Single | Scheme::SingleSch)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    CacheSize,
    NumCells,
    MeanDegree,
    Acceptance,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::CacheSize => "cache_size",
            Axis::NumCells => "num_cells",
            Axis::MeanDegree => "mean_degree",
            Axis::Acceptance => "acceptance",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub axis: Axis,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub scenario: ScenarioConfig,
    #[serde(default = "all_schemes")]
    pub schemes: Vec<Scheme>,
    pub sweep: SweepAxis,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Record solver wall time; off by default so output is reproducible.
    #[serde(default)]
    pub record_timing: bool,
}

fn all_schemes() -> Vec<Scheme> {
    Scheme::ALL.to_vec()
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub scenario: ScenarioConfig,
    pub scheme: Scheme,
    #[serde(default)]
    pub seed: u64,
}

fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

fn valid_count(v: f64) -> bool {
    v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64
}

impl ScenarioConfig {
    /// Makes relative file paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        match &mut self.catalog {
            CatalogSource::Files { contents, relations } => {
                resolve(base, contents);
                resolve(base, relations);
            }
            CatalogSource::Bundle { path } => resolve(base, path),
            CatalogSource::Synthetic { .. } => {}
        }
        if let NetworkSource::CoverageFile { path, .. } = &mut self.network {
            resolve(base, path);
        }
    }

    pub fn num_contents(&self) -> Option<usize> {
        match self.catalog {
            CatalogSource::Synthetic { num_contents, .. } => Some(num_contents),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.cache_size == 0 {
            return bad("cache_size must be positive".into());
        }
        if let CatalogSource::Synthetic {
            num_contents,
            zipf_exponent,
        } = self.catalog
        {
            if num_contents == 0 {
                return bad("num_contents must be positive".into());
            }
            if !(zipf_exponent.is_finite() && zipf_exponent >= 0.0) {
                return bad(format!("zipf_exponent must be nonnegative, got {zipf_exponent}"));
            }
        }
        let acceptance = match &self.utility {
            UtilitySource::Identity => None,
            UtilitySource::Ingested { acceptance } => {
                if matches!(self.catalog, CatalogSource::Synthetic { .. }) {
                    return bad("ingested utilities need a file or bundle catalog".into());
                }
                *acceptance
            }
            UtilitySource::Sch1 {
                mean_degree, acceptance, ..
            }
            | UtilitySource::Sch2 {
                mean_degree, acceptance, ..
            } => {
                let limit = self.num_contents().map_or(f64::INFINITY, |k| k as f64);
                if !(*mean_degree > 0.0 && *mean_degree < limit) {
                    return bad(format!("mean_degree must lie in (0, {limit}), got {mean_degree}"));
                }
                Some(*acceptance)
            }
        };
        if let Some(u) = acceptance {
            if !(0.0..=1.0).contains(&u) {
                return bad(format!("acceptance must lie in [0, 1], got {u}"));
            }
        }
        Ok(())
    }

    /// The scenario with one axis set to `value`.
    pub fn with_axis(&self, axis: Axis, value: f64) -> Result<ScenarioConfig> {
        let mut out = self.clone();
        let bad = |msg: String| Err(Error::Config(msg));
        match axis {
            Axis::CacheSize => {
                if !valid_count(value) {
                    return bad(format!("cache_size values must be positive integers, got {value}"));
                }
                out.cache_size = value as usize;
            }
            Axis::NumCells => {
                if !valid_count(value) {
                    return bad(format!("num_cells values must be positive integers, got {value}"));
                }
                match &mut out.network {
                    NetworkSource::Geometric(g) => g.num_cells = value as usize,
                    NetworkSource::CoverageFile { .. } => return bad("the num_cells axis needs a geometric network".into()),
                }
            }
            Axis::MeanDegree => match &mut out.utility {
                UtilitySource::Sch1 { mean_degree, .. } | UtilitySource::Sch2 { mean_degree, .. } => *mean_degree = value,
                _ => return bad("the mean_degree axis needs sch1 or sch2 utilities".into()),
            },
            Axis::Acceptance => match &mut out.utility {
                UtilitySource::Sch1 { acceptance, .. } | UtilitySource::Sch2 { acceptance, .. } => *acceptance = value,
                UtilitySource::Ingested { acceptance } => *acceptance = Some(value),
                UtilitySource::Identity => return bad("the acceptance axis needs relations".into()),
            },
        }
        out.validate()?;
        Ok(out)
    }
}

impl SweepConfig {
    /// Reads a JSON sweep file; relative paths are taken from its directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let mut config: SweepConfig = load(path)?;
        config.scenario.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if self.schemes.is_empty() {
            return bad("no schemes selected");
        }
        if self.seeds.is_empty() {
            return bad("no seeds given");
        }
        if self.sweep.values.is_empty() {
            return bad("the sweep has no values");
        }
        self.scenario.validate()?;
        for &v in &self.sweep.values {
            self.scenario.with_axis(self.sweep.axis, v)?;
        }
        Ok(())
    }
}

impl SolveConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let mut config: SolveConfig = load(path)?;
        config.scenario.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        config.scenario.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SWEEP: &str = r#"{
        "scenario": {
            "catalog": {"synthetic": {"num_contents": 100}},
            "utility": {"sch1": {"mean_degree": 4}},
            "network": {"geometric": {"num_cells": 5, "num_users": 10}}
        },
        "sweep": {"axis": "cache_size", "values": [1, 2, 3]},
        "seeds": [1, 2]
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c: SweepConfig = serde_json::from_str(SWEEP).unwrap();
        c.validate().unwrap();
        assert_eq!(c.schemes, Scheme::ALL.to_vec());
        assert_eq!(c.scenario.cache_size, 5);
        assert_eq!(c.scenario.requests, 20_000);
        assert!(!c.record_timing);
        assert_eq!(
            c.scenario.catalog,
            CatalogSource::Synthetic {
                num_contents: 100,
                zipf_exponent: 0.8
            }
        );
        match c.scenario.utility {
            UtilitySource::Sch1 {
                acceptance, sampling, ..
            } => {
                assert_eq!(acceptance, 1.0);
                assert_eq!(sampling, Sch1Sampling::PerEdge);
            }
            ref other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let typo = SWEEP.replace("\"seeds\"", "\"seed\"");
        assert!(serde_json::from_str::<SweepConfig>(&typo).is_err());
        let nested = SWEEP.replace("\"num_users\"", "\"users\"");
        assert!(serde_json::from_str::<SweepConfig>(&nested).is_err());
        let inner = SWEEP.replace("\"mean_degree\": 4", "\"mean_degree\": 4, \"u\": 1");
        assert!(serde_json::from_str::<SweepConfig>(&inner).is_err());
    }

    #[test]
    fn scheme_names() {
        let s: Vec<Scheme> = serde_json::from_str(r#"["Single","SingleSCH","Femto","FemtoSCH"]"#).unwrap();
        assert_eq!(s, Scheme::ALL.to_vec());
        assert!(serde_json::from_str::<Scheme>("\"FemtoSch\"").is_err());
        assert_eq!(Scheme::FemtoSch.to_string(), "FemtoSCH");
    }

    #[test]
    fn axis_values_are_checked() {
        let mut c: SweepConfig = serde_json::from_str(SWEEP).unwrap();
        c.sweep.values = vec![2.5];
        assert!(c.validate().is_err());
        c.sweep = SweepAxis {
            axis: Axis::Acceptance,
            values: vec![0.0, 1.2],
        };
        assert!(c.validate().is_err());
        c.sweep.values = vec![0.0, 0.5, 1.0];
        c.validate().unwrap();
        c.sweep = SweepAxis {
            axis: Axis::MeanDegree,
            values: vec![100.0],
        };
        assert!(c.validate().is_err());
        c.scenario.utility = UtilitySource::Identity;
        c.sweep.values = vec![2.0];
        assert!(c.validate().is_err());
        c.sweep.values.clear();
        assert!(c.validate().is_err());
    }

    #[test]
    fn with_axis_sets_the_field() {
        let c: SweepConfig = serde_json::from_str(SWEEP).unwrap();
        let s = c.scenario.with_axis(Axis::NumCells, 7.0).unwrap();
        assert_eq!(
            s.network,
            NetworkSource::Geometric(GeometricConfig {
                num_cells: 7,
                num_users: 10,
                ..GeometricConfig::default()
            })
        );
        let s = c.scenario.with_axis(Axis::Acceptance, 0.25).unwrap();
        assert!(matches!(s.utility, UtilitySource::Sch1 { acceptance, .. } if acceptance == 0.25));
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("solve.json");
        std::fs::write(
            &path,
            r#"{"scenario": {"catalog": {"bundle": {"path": "data"}}, "utility": {"ingested": {}},
                "network": {"coverage_file": {"path": "cov.csv"}}}, "scheme": "Femto"}"#,
        )
        .unwrap();
        let c = SolveConfig::from_path(&path).unwrap();
        assert_eq!(
            c.scenario.catalog,
            CatalogSource::Bundle {
                path: dir.path().join("data")
            }
        );
        assert!(matches!(&c.scenario.network, NetworkSource::CoverageFile { path, .. } if *path == dir.path().join("cov.csv")));
        assert!(matches!(
            SolveConfig::from_path(&dir.path().join("missing.json")),
            Err(Error::Config(_))
        ));
    }
}
