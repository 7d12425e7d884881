use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog::ContentId;
use crate::error::{Error, Result};
use crate::network::CellId;

/// One storage decision `x_kj = 1`. Ordered lexicographically by
/// `(content, cell)`, which is the tie-break order of every solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Item {
    pub content: ContentId,
    pub cell: CellId,
}

impl Item {
    pub fn new(content: usize, cell: usize) -> Self {
        Item {
            content: ContentId(content),
            cell: CellId(cell),
        }
    }
}

impl std::fmt::Display for Item {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.content, self.cell)
    }
}

/// Capacity of one cache.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// At most this many contents.
    Items(usize),
    /// Total size of stored contents at most this many bytes.
    Bytes(f64),
    Unlimited,
}

impl Budget {
    /// Whether `extra` more units fit on top of `used`. Byte budgets allow a
    /// relative slack of 1e-12 so that summation order never flips a decision.
    pub fn admits(&self, used: f64, extra: f64) -> bool {
        match *self {
            Budget::Items(c) => used + 1.0 <= c as f64,
            Budget::Bytes(b) => used + extra <= b * (1.0 + 1e-12),
            Budget::Unlimited => true,
        }
    }

    /// Budget units consumed by a content of `size` bytes.
    pub(crate) fn unit(&self, size: f64) -> f64 {
        match self {
            Budget::Bytes(_) => size,
            _ => 1.0,
        }
    }
}

/// Per-cell budgets; the constraint set of every placement problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Capacities(Vec<Budget>);

impl Capacities {
    pub fn new(budgets: Vec<Budget>) -> Self {
        Capacities(budgets)
    }

    pub fn uniform_items(num_cells: usize, capacity: usize) -> Self {
        Capacities(vec![Budget::Items(capacity); num_cells])
    }

    pub fn uniform_bytes(num_cells: usize, bytes: f64) -> Self {
        Capacities(vec![Budget::Bytes(bytes); num_cells])
    }

    pub fn unlimited(num_cells: usize) -> Self {
        Capacities(vec![Budget::Unlimited; num_cells])
    }

    pub fn num_cells(&self) -> usize {
        self.0.len()
    }

    pub fn budget(&self, cell: usize) -> Budget {
        self.0[cell]
    }

    pub fn budgets(&self) -> &[Budget] {
        &self.0
    }
}

/// A set of `(content, cell)` storage decisions together with the budgets it
/// must respect and the per-cell usage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    capacities: Capacities,
    items: BTreeSet<Item>,
    used: Vec<f64>,
}

impl Placement {
    pub fn new(capacities: Capacities) -> Self {
        let m = capacities.num_cells();
        Placement {
            capacities,
            items: BTreeSet::new(),
            used: vec![0.0; m],
        }
    }

    /// Builds a placement, failing on duplicates or budget violations.
    pub fn from_items(capacities: Capacities, items: impl IntoIterator<Item = Item>, sizes: &[f64]) -> Result<Self> {
        let mut p = Placement::new(capacities);
        for item in items {
            p.insert(item, sizes)?;
        }
        Ok(p)
    }

    pub fn capacities(&self) -> &Capacities {
        &self.capacities
    }

    pub fn num_cells(&self) -> usize {
        self.used.len()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, item: Item) -> bool {
        self.items.contains(&item)
    }

    pub fn items(&self) -> impl Iterator<Item = Item> + '_ {
        self.items.iter().copied()
    }

    /// Budget units used in a cell (item count or bytes).
    pub fn used(&self, cell: usize) -> f64 {
        self.used[cell]
    }

    /// Contents stored in each cell, ascending.
    pub fn by_cell(&self) -> Vec<Vec<usize>> {
        let mut cells = vec![Vec::new(); self.num_cells()];
        for item in &self.items {
            cells[item.cell.0].push(item.content.0);
        }
        cells
    }

    /// Whether `item` could be inserted: not yet present and within budget.
    pub fn admits(&self, item: Item, sizes: &[f64]) -> bool {
        let j = item.cell.0;
        j < self.num_cells()
            && !self.items.contains(&item)
            && self.capacities.budget(j).admits(self.used[j], sizes[item.content.0])
    }

    pub fn insert(&mut self, item: Item, sizes: &[f64]) -> Result<()> {
        let j = item.cell.0;
        if j >= self.num_cells() {
            return Err(Error::index("cell", j, self.num_cells()));
        }
        if item.content.0 >= sizes.len() {
            return Err(Error::index("content", item.content.0, sizes.len()));
        }
        if self.items.contains(&item) {
            return Err(Error::Contract(format!("{item} is already stored")));
        }
        let budget = self.capacities.budget(j);
        let extra = sizes[item.content.0];
        if !budget.admits(self.used[j], extra) {
            return Err(Error::Contract(format!(
                "storing {item} exceeds the budget {budget:?} of cell {j} (used {})",
                self.used[j]
            )));
        }
        self.used[j] += budget.unit(extra);
        self.items.insert(item);
        Ok(())
    }

    /// Recomputes usage from scratch and checks every budget and index.
    pub fn validate(&self, num_contents: usize, sizes: &[f64]) -> Result<()> {
        let mut used = vec![0.0; self.num_cells()];
        for item in &self.items {
            if item.content.0 >= num_contents {
                return Err(Error::index("content", item.content.0, num_contents));
            }
            let j = item.cell.0;
            let budget = self.capacities.budget(j);
            let extra = sizes[item.content.0];
            if !budget.admits(used[j], extra) {
                return Err(Error::Contract(format!("cell {j} exceeds its budget {budget:?}")));
            }
            used[j] += budget.unit(extra);
        }
        Ok(())
    }

    /// `content,cell` CSV with a header line.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "content,cell")?;
        for item in &self.items {
            writeln!(out, "{},{}", item.content, item.cell)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a `content,cell` CSV into an unbounded placement.
    pub fn read_csv(path: &Path, num_cells: usize, sizes: &[f64]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let mut p = Placement::new(Capacities::unlimited(num_cells));
        for rec in reader.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |pos| pos.line());
            let parse = |idx: usize| -> Result<usize> {
                rec.get(idx).and_then(|s| s.parse().ok()).ok_or_else(|| Error::Parse {
                    path: path.display().to_string(),
                    line,
                    message: "expected `content,cell` integers".into(),
                })
            };
            p.insert(Item::new(parse(0)?, parse(1)?), sizes)?;
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn item_budget() {
        let sizes = [1.0; 4];
        let mut p = Placement::new(Capacities::uniform_items(2, 1));
        p.insert(Item::new(0, 0), &sizes).unwrap();
        assert!(matches!(p.insert(Item::new(0, 0), &sizes), Err(Error::Contract(_))));
        assert!(matches!(p.insert(Item::new(1, 0), &sizes), Err(Error::Contract(_))));
        assert!(p.admits(Item::new(1, 1), &sizes));
        p.insert(Item::new(1, 1), &sizes).unwrap();
        assert_eq!(p.by_cell(), vec![vec![0], vec![1]]);
        assert!(matches!(p.insert(Item::new(1, 2), &sizes), Err(Error::Index { .. })));
    }

    #[test]
    fn byte_budget() {
        let sizes = [3.0, 4.0, 2.0];
        let mut p = Placement::new(Capacities::uniform_bytes(1, 6.0));
        p.insert(Item::new(1, 0), &sizes).unwrap();
        assert!(!p.admits(Item::new(0, 0), &sizes));
        p.insert(Item::new(2, 0), &sizes).unwrap();
        assert_eq!(p.used(0), 6.0);
        p.validate(3, &sizes).unwrap();
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let sizes = [1.0; 5];
        let p = Placement::from_items(Capacities::unlimited(3), [Item::new(4, 2), Item::new(0, 0)], &sizes).unwrap();
        p.write_csv(&path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "content,cell\n0,0\n4,2\n");
        let back = Placement::read_csv(&path, 3, &sizes).unwrap();
        assert_eq!(back.items().collect::<Vec<_>>(), p.items().collect::<Vec<_>>());
    }
}
