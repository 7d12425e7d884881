use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::{Catalog, UtilityMode, UtilityModel};
use crate::error::{Error, Result};

const CONTENT_HEADER: [&str; 3] = ["id", "popularity", "size_bytes"];
const RELATION_HEADER: [&str; 3] = ["src", "dst", "utility"];

pub const CONTENTS_FILE: &str = "contents.csv";
pub const RELATIONS_FILE: &str = "relations.csv";

struct CsvRows {
    path: String,
    reader: csv::Reader<File>,
}

impl CsvRows {
    fn open(path: &Path, header: &[&str]) -> Result<Self> {
        let display = path.display().to_string();
        let file = File::open(path)?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(file);
        let found: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
        if found != header {
            return Err(Error::Parse {
                path: display,
                line: 1,
                message: format!("expected header `{}`, found `{}`", header.join(","), found.join(",")),
            });
        }
        Ok(CsvRows { path: display, reader })
    }

    /// Visits every data row as `(line, fields)`.
    fn for_each(mut self, width: usize, mut f: impl FnMut(&str, u64, &csv::StringRecord) -> Result<()>) -> Result<()> {
        let mut record = csv::StringRecord::new();
        loop {
            let more = self.reader.read_record(&mut record).map_err(|e| Error::Parse {
                path: self.path.clone(),
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            if !more {
                return Ok(());
            }
            let line = record.position().map_or(0, |p| p.line());
            if record.len() == 1 && record[0].is_empty() {
                continue;
            }
            if record.len() != width {
                return Err(Error::Parse {
                    path: self.path.clone(),
                    line,
                    message: format!("expected {width} fields, found {}", record.len()),
                });
            }
            f(&self.path, line, &record)?;
        }
    }
}

fn field<T: std::str::FromStr>(path: &str, line: u64, record: &csv::StringRecord, idx: usize, name: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    record[idx].parse().map_err(|e| Error::Parse {
        path: path.to_owned(),
        line,
        message: format!("bad {name} `{}`: {e}", &record[idx]),
    })
}

/// Reads a content file and a relation file into a catalog with shared
/// demand and an acceptance-mode average utility model.
pub fn ingest_catalog(content_file: &Path, relations_file: &Path) -> Result<(Catalog, UtilityModel)> {
    ingest_catalog_with_mode(content_file, relations_file, UtilityMode::Acceptance)
}

pub fn ingest_catalog_with_mode(
    content_file: &Path,
    relations_file: &Path,
    mode: UtilityMode,
) -> Result<(Catalog, UtilityModel)> {
    let mut rows: Vec<(usize, f64, f64, u64)> = Vec::new();
    CsvRows::open(content_file, &CONTENT_HEADER)?.for_each(3, |path, line, rec| {
        let id: usize = field(path, line, rec, 0, "id")?;
        let popularity: f64 = field(path, line, rec, 1, "popularity")?;
        let size: f64 = field(path, line, rec, 2, "size_bytes")?;
        if !(popularity.is_finite() && popularity >= 0.0) {
            return Err(Error::Parse {
                path: path.to_owned(),
                line,
                message: format!("popularity must be nonnegative, got {popularity}"),
            });
        }
        if !(size.is_finite() && size > 0.0) {
            return Err(Error::Parse {
                path: path.to_owned(),
                line,
                message: format!("size_bytes must be positive, got {size}"),
            });
        }
        rows.push((id, popularity, size, line));
        Ok(())
    })?;

    let k = rows.len();
    let mut popularity = vec![f64::NAN; k];
    let mut sizes = vec![f64::NAN; k];
    for &(id, pop, size, line) in &rows {
        if id >= k {
            return Err(Error::Validation(format!(
                "{}:{line}: content id {id} outside 0..{k}",
                content_file.display()
            )));
        }
        if !popularity[id].is_nan() {
            return Err(Error::Validation(format!(
                "{}:{line}: duplicate content id {id}",
                content_file.display()
            )));
        }
        popularity[id] = pop;
        sizes[id] = size;
    }
    let catalog = Catalog::from_popularity(popularity, sizes)?;

    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    CsvRows::open(relations_file, &RELATION_HEADER)?.for_each(3, |path, line, rec| {
        let src: usize = field(path, line, rec, 0, "src")?;
        let dst: usize = field(path, line, rec, 1, "dst")?;
        let u: f64 = field(path, line, rec, 2, "utility")?;
        let located = |msg: String| Error::Validation(format!("{path}:{line}: {msg}"));
        if src >= k || dst >= k {
            return Err(located(format!("relation ({src},{dst}) references an unknown content")));
        }
        if !seen.insert((src, dst)) {
            return Err(located(format!("duplicate relation ({src},{dst})")));
        }
        edges.push((src, dst, u));
        Ok(())
    })?;
    let utility = UtilityModel::average(k, mode, edges)?;
    Ok((catalog, utility))
}

fn create(path: &Path) -> Result<std::io::BufWriter<File>> {
    Ok(std::io::BufWriter::new(File::create(path)?))
}

/// Writes the content file; popularity is the raw weight when known,
/// otherwise the shared request probability.
pub fn write_contents(path: &Path, catalog: &Catalog) -> Result<()> {
    let popularity: Vec<f64> = match catalog.popularity() {
        Some(p) => p.to_vec(),
        None => match catalog.demand() {
            super::Demand::Shared(p) => p.clone(),
            super::Demand::PerUser(_) => return Err(Error::Validation("per-user demand has no content-file form".into())),
        },
    };
    let mut out = create(path)?;
    writeln!(out, "{}", CONTENT_HEADER.join(","))?;
    for (id, (pop, size)) in popularity.iter().zip(catalog.sizes()).enumerate() {
        writeln!(out, "{id},{pop},{size}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_relations(path: &Path, utility: &UtilityModel) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "{}", RELATION_HEADER.join(","))?;
    for (k, n, u) in utility.edges()? {
        writeln!(out, "{k},{n},{u}")?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `contents.csv` and `relations.csv` into `dir`.
pub fn write_bundle(dir: &Path, catalog: &Catalog, utility: &UtilityModel) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_contents(&dir.join(CONTENTS_FILE), catalog)?;
    write_relations(&dir.join(RELATIONS_FILE), utility)
}

pub fn read_bundle(dir: &Path, mode: UtilityMode) -> Result<(Catalog, UtilityModel)> {
    ingest_catalog_with_mode(&dir.join(CONTENTS_FILE), &dir.join(RELATIONS_FILE), mode)
}
