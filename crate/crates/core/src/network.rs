//! User-to-cell coverage probabilities `q_ij` and the random geometric
//! deployment used by the evaluation scenarios.

use std::fs::File;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the single-cache regime check `Σ_j q_ij = 1`.
pub const COVERAGE_TOLERANCE: f64 = 1e-9;

/// Dense index of a small cell in `[0, M)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellId(pub usize);

impl std::fmt::Display for CellId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

/// How distances are measured inside the square deployment area.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Plain Euclidean distance; nodes near the border see fewer cells.
    Planar,
    /// Distance on the torus obtained by wrapping the square, which removes
    /// border effects.
    #[default]
    Torus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub side: f64,
    pub boundary: Boundary,
    pub users: Vec<Point>,
    pub cells: Vec<Point>,
}

impl Geometry {
    pub fn distance(&self, user: usize, cell: usize) -> f64 {
        let (a, b) = (self.users[user], self.cells[cell]);
        let mut dx = (a.x - b.x).abs();
        let mut dy = (a.y - b.y).abs();
        if self.boundary == Boundary::Torus {
            dx = dx.min(self.side - dx);
            dy = dy.min(self.side - dy);
        }
        dx.hypot(dy)
    }
}

#[derive(Deserialize)]
struct RawCoverage {
    num_users: usize,
    num_cells: usize,
    q: Vec<f64>,
    geometry: Option<Geometry>,
}

/// Coverage probabilities between `N` users and `M` cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCoverage")]
pub struct CoverageModel {
    num_users: usize,
    num_cells: usize,
    /// Row-major `N × M`.
    q: Vec<f64>,
    geometry: Option<Geometry>,
    #[serde(skip)]
    cells_of: Vec<Vec<(usize, f64)>>,
    #[serde(skip)]
    users_of: Vec<Vec<(usize, f64)>>,
}

impl TryFrom<RawCoverage> for CoverageModel {
    type Error = Error;

    fn try_from(raw: RawCoverage) -> Result<Self> {
        let mut model = CoverageModel::new(raw.num_users, raw.num_cells, raw.q)?;
        model.geometry = raw.geometry;
        Ok(model)
    }
}

impl CoverageModel {
    pub fn new(num_users: usize, num_cells: usize, q: Vec<f64>) -> Result<Self> {
        if num_users == 0 || num_cells == 0 {
            return Err(Error::Validation("coverage needs at least one user and one cell".into()));
        }
        if q.len() != num_users * num_cells {
            return Err(Error::Validation(format!(
                "coverage matrix has {} entries, expected {num_users}×{num_cells}",
                q.len()
            )));
        }
        if let Some(pos) = q.iter().position(|v| !(v.is_finite() && (0.0..=1.0).contains(v))) {
            return Err(Error::Validation(format!(
                "q[{}][{}] = {} is not a probability",
                pos / num_cells,
                pos % num_cells,
                q[pos]
            )));
        }
        let mut cells_of = vec![Vec::new(); num_users];
        let mut users_of = vec![Vec::new(); num_cells];
        for i in 0..num_users {
            for j in 0..num_cells {
                let v = q[i * num_cells + j];
                if v > 0.0 {
                    cells_of[i].push((j, v));
                    users_of[j].push((i, v));
                }
            }
        }
        Ok(CoverageModel {
            num_users,
            num_cells,
            q,
            geometry: None,
            cells_of,
            users_of,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Validation("ragged coverage rows".into()));
        }
        CoverageModel::new(rows.len(), m, rows.concat())
    }

    /// Every user sees every cell with probability `q`.
    pub fn uniform(num_users: usize, num_cells: usize, q: f64) -> Result<Self> {
        CoverageModel::new(num_users, num_cells, vec![q; num_users * num_cells])
    }

    /// Builds a model from sparse `(user, cell, q)` links; absent links are 0.
    pub fn from_links(num_users: usize, num_cells: usize, links: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut q = vec![0.0; num_users * num_cells];
        let mut seen = vec![false; num_users * num_cells];
        for (i, j, v) in links {
            if i >= num_users {
                return Err(Error::index("user", i, num_users));
            }
            if j >= num_cells {
                return Err(Error::index("cell", j, num_cells));
            }
            if std::mem::replace(&mut seen[i * num_cells + j], true) {
                return Err(Error::Validation(format!("duplicate coverage link ({i},{j})")));
            }
            q[i * num_cells + j] = v;
        }
        CoverageModel::new(num_users, num_cells, q)
    }

    /// Reads a `user,cell,q` CSV. Dimensions default to the largest index + 1.
    pub fn read_csv(path: &Path, num_users: Option<usize>, num_cells: Option<usize>) -> Result<Self> {
        let display = path.display().to_string();
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(File::open(path)?);
        let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
        if header != ["user", "cell", "q"] {
            return Err(Error::Parse {
                path: display,
                line: 1,
                message: format!("expected header `user,cell,q`, found `{}`", header.join(",")),
            });
        }
        let mut links = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| Error::Parse {
                path: display.clone(),
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |message: String| Error::Parse {
                path: display.clone(),
                line,
                message,
            };
            if rec.len() != 3 {
                return Err(bad(format!("expected 3 fields, found {}", rec.len())));
            }
            let i: usize = rec[0].parse().map_err(|e| bad(format!("bad user `{}`: {e}", &rec[0])))?;
            let j: usize = rec[1].parse().map_err(|e| bad(format!("bad cell `{}`: {e}", &rec[1])))?;
            let v: f64 = rec[2].parse().map_err(|e| bad(format!("bad q `{}`: {e}", &rec[2])))?;
            links.push((i, j, v));
        }
        let n = num_users.unwrap_or_else(|| links.iter().map(|l| l.0 + 1).max().unwrap_or(0));
        let m = num_cells.unwrap_or_else(|| links.iter().map(|l| l.1 + 1).max().unwrap_or(0));
        CoverageModel::from_links(n, m, links)
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    #[inline]
    pub fn q(&self, user: usize, cell: usize) -> f64 {
        self.q[user * self.num_cells + cell]
    }

    /// Cells with `q_ij > 0` for this user, ascending.
    #[inline]
    pub fn cells_of(&self, user: usize) -> &[(usize, f64)] {
        &self.cells_of[user]
    }

    /// Users with `q_ij > 0` for this cell, ascending.
    #[inline]
    pub fn users_of(&self, cell: usize) -> &[(usize, f64)] {
        &self.users_of[cell]
    }

    pub fn geometry(&self) -> Option<&Geometry> {
        self.geometry.as_ref()
    }

    pub fn is_covered(&self, user: usize) -> bool {
        !self.cells_of[user].is_empty()
    }

    /// True when every covered user has `Σ_j q_ij = 1`. Uncovered users
    /// (all zeros) are allowed: they contribute nothing to any objective.
    pub fn is_single_cache(&self) -> bool {
        self.cells_of
            .iter()
            .all(|cells| cells.is_empty() || (cells.iter().map(|&(_, q)| q).sum::<f64>() - 1.0).abs() <= COVERAGE_TOLERANCE)
    }

    /// Mean of `Σ_j q_ij` over users; the expected number of cells in range.
    pub fn mean_cells_per_user(&self) -> f64 {
        self.q.iter().sum::<f64>() / self.num_users as f64
    }
}

/// Parameters of the random geometric deployment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricConfig {
    pub num_cells: usize,
    pub num_users: usize,
    #[serde(default = "default_side")]
    pub area_side_m: f64,
    #[serde(default = "default_range")]
    pub range_m: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

fn default_side() -> f64 {
    1000.0
}

fn default_range() -> f64 {
    200.0
}

impl Default for GeometricConfig {
    fn default() -> Self {
        GeometricConfig {
            num_cells: 20,
            num_users: 50,
            area_side_m: default_side(),
            range_m: default_range(),
            boundary: Boundary::default(),
        }
    }
}

/// Cells and users uniform in a square; `q_ij = 1` when the user is within
/// range of the cell, else 0.
pub fn generate_geometric(config: &GeometricConfig, seed: u64) -> Result<CoverageModel> {
    let GeometricConfig {
        num_cells,
        num_users,
        area_side_m: side,
        range_m: range,
        boundary,
    } = *config;
    let positive = |v: f64| v > 0.0;
    if num_cells == 0 || num_users == 0 || !positive(side) || !positive(range) {
        return Err(Error::Validation(format!(
            "geometric parameters must be positive: {config:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: usize| -> Vec<Point> {
        (0..n)
            .map(|_| Point {
                x: rng.random::<f64>() * side,
                y: rng.random::<f64>() * side,
            })
            .collect()
    };
    let cells = draw(num_cells);
    let users = draw(num_users);
    let geometry = Geometry {
        side,
        boundary,
        users,
        cells,
    };
    let mut q = vec![0.0; num_users * num_cells];
    for i in 0..num_users {
        for j in 0..num_cells {
            if geometry.distance(i, j) <= range {
                q[i * num_cells + j] = 1.0;
            }
        }
    }
    let mut model = CoverageModel::new(num_users, num_cells, q)?;
    model.geometry = Some(geometry);
    Ok(model)
}

/// How each user is tied to one cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Association {
    /// Nearest covering cell when positions are known, otherwise the cell with
    /// the highest `q_ij`. Ties go to the lowest cell index.
    Strongest,
    /// Explicit per-user choice; `None` drops the user.
    Explicit(Vec<Option<usize>>),
}

/// Ties every covered user to exactly one cell (`q = 1` there, 0 elsewhere).
/// Users without a usable cell keep an all-zero row and are logged.
pub fn to_single_cache(model: &CoverageModel, association: &Association) -> Result<CoverageModel> {
    let (n, m) = (model.num_users, model.num_cells);
    if let Association::Explicit(choice) = association {
        if choice.len() != n {
            return Err(Error::Validation(format!(
                "association has {} entries for {n} users",
                choice.len()
            )));
        }
    }
    let mut q = vec![0.0; n * m];
    let mut dropped = 0usize;
    for i in 0..n {
        let chosen = match association {
            Association::Strongest => strongest_cell(model, i),
            Association::Explicit(choice) => match choice[i] {
                Some(j) if j >= m => return Err(Error::index("cell", j, m)),
                Some(j) if model.q(i, j) > 0.0 => Some(j),
                _ => None,
            },
        };
        match chosen {
            Some(j) => q[i * m + j] = 1.0,
            None => dropped += 1,
        }
    }
    if dropped > 0 {
        log::warn!("{dropped} of {n} users have no serving cell and are left uncovered");
    }
    let mut single = CoverageModel::new(n, m, q)?;
    single.geometry = model.geometry.clone();
    Ok(single)
}

fn strongest_cell(model: &CoverageModel, user: usize) -> Option<usize> {
    let cells = model.cells_of(user);
    match &model.geometry {
        Some(geo) => {
            let mut best: Option<(usize, f64)> = None;
            for &(j, _) in cells {
                let d = geo.distance(user, j);
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
            best.map(|(j, _)| j)
        }
        None => {
            let mut best: Option<(usize, f64)> = None;
            for &(j, q) in cells {
                if best.is_none_or(|(_, bq)| q > bq) {
                    best = Some((j, q));
                }
            }
            best.map(|(j, _)| j)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(CoverageModel::new(1, 1, vec![1.5]).is_err());
        assert!(CoverageModel::new(2, 1, vec![1.0]).is_err());
        assert!(CoverageModel::from_links(1, 1, vec![(0, 0, 0.5), (0, 0, 0.5)]).is_err());
        let m = CoverageModel::from_rows(&[vec![0.5, 0.5], vec![0.0, 0.0]]).unwrap();
        assert!(m.is_single_cache());
        assert!(!m.is_covered(1));
        assert!(!CoverageModel::uniform(2, 2, 1.0).unwrap().is_single_cache());
    }

    #[test]
    fn tiny_area_is_fully_covered() {
        for seed in 0..20 {
            let cfg = GeometricConfig {
                num_cells: 1,
                num_users: 1,
                area_side_m: 1.0,
                range_m: 10.0,
                boundary: Boundary::Planar,
            };
            let m = generate_geometric(&cfg, seed).unwrap();
            assert_eq!(m.q(0, 0), 1.0);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = GeometricConfig::default();
        assert_eq!(generate_geometric(&cfg, 7).unwrap(), generate_geometric(&cfg, 7).unwrap());
        assert_ne!(generate_geometric(&cfg, 7).unwrap(), generate_geometric(&cfg, 8).unwrap());
    }

    #[test]
    fn equidistant_tie_goes_to_lowest_cell() {
        let mut m = CoverageModel::from_rows(&[vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0]]).unwrap();
        let mut cells = vec![Point { x: 0.0, y: 0.0 }; 6];
        cells[2] = Point { x: 10.0, y: 0.0 };
        cells[5] = Point { x: -10.0, y: 0.0 };
        m.geometry = Some(Geometry {
            side: 100.0,
            boundary: Boundary::Planar,
            users: vec![Point { x: 0.0, y: 0.0 }],
            cells,
        });
        let s = to_single_cache(&m, &Association::Strongest).unwrap();
        assert_eq!(s.q(0, 2), 1.0);
        assert_eq!(s.q(0, 5), 0.0);
    }

    #[test]
    fn single_cache_is_idempotent() {
        let m = CoverageModel::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(to_single_cache(&m, &Association::Strongest).unwrap(), m);
        let g = generate_geometric(&GeometricConfig::default(), 3).unwrap();
        let once = to_single_cache(&g, &Association::Strongest).unwrap();
        assert_eq!(to_single_cache(&once, &Association::Strongest).unwrap(), once);
    }

    #[test]
    fn strongest_without_geometry_uses_q() {
        let m = CoverageModel::from_rows(&[vec![0.3, 0.7, 0.7]]).unwrap();
        let s = to_single_cache(&m, &Association::Strongest).unwrap();
        assert_eq!(s.q(0, 1), 1.0);
    }

    #[test]
    fn explicit_association() {
        let m = CoverageModel::uniform(3, 2, 0.5).unwrap();
        let s = to_single_cache(&m, &Association::Explicit(vec![Some(1), None, Some(0)])).unwrap();
        assert_eq!(s.q(0, 1), 1.0);
        assert!(!s.is_covered(1));
        assert_eq!(s.q(2, 0), 1.0);
        assert!(to_single_cache(&m, &Association::Explicit(vec![Some(2), None, None])).is_err());
    }

    #[test]
    fn geometric_output_becomes_single_cache() {
        for seed in 0..30 {
            let g = generate_geometric(&GeometricConfig::default(), seed).unwrap();
            let s = to_single_cache(&g, &Association::Strongest).unwrap();
            assert!(s.is_single_cache());
            for i in 0..s.num_users() {
                let total: f64 = (0..s.num_cells()).map(|j| s.q(i, j)).sum();
                assert!(total == 0.0 || total == 1.0);
                assert_eq!(total == 1.0, g.is_covered(i));
            }
        }
    }

    #[test]
    fn csv_links() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cov.csv");
        std::fs::write(&p, "user,cell,q\n0,0,1\n1,1,0.25\n").unwrap();
        let m = CoverageModel::read_csv(&p, None, Some(3)).unwrap();
        assert_eq!((m.num_users(), m.num_cells()), (2, 3));
        assert_eq!(m.q(1, 1), 0.25);
        std::fs::write(&p, "user,cell,q\n0,0,x\n").unwrap();
        assert!(matches!(
            CoverageModel::read_csv(&p, None, None),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn serde_round_trip() {
        let g = generate_geometric(&GeometricConfig::default(), 1).unwrap();
        let back: CoverageModel = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.users_of(3), g.users_of(3));
    }
}
