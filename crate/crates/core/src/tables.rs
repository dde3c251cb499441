//! Two-column `id,<value>` CSV tables: clusterings (`id,cluster`) and class
//! labels (`id,label`).

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use crate::embedspace::EmbeddingFormat;
use crate::error::{Error, Result};
use crate::multicut::Partition;

/// Rows of an `id,<value_column>` table in file order. Identifiers must be unique.
pub fn read_id_table(path: &Path, value_column: &str) -> Result<Vec<(String, String)>> {
    let csv_err = |e| crate::embedspace::csv_error(path, e);
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?;
    if headers.len() != 2 || &headers[0] != "id" || &headers[1] != value_column {
        return Err(Error::parse(
            path,
            "line 1",
            format!("expected header `id,{value_column}`"),
        ));
    }
    let mut rows = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let id = record[0].to_string();
        if let Some(prev) = seen.insert(id.clone(), line) {
            return Err(Error::parse(
                path,
                format!("line {line}"),
                format!("duplicate identifier {id:?} (first seen on line {prev})"),
            ));
        }
        rows.push((id, record[1].to_string()));
    }
    Ok(rows)
}

/// A clustering read from disk: item identifiers in file order plus the partition.
#[derive(Debug, Clone)]
pub struct Clustering {
    pub items: Vec<String>,
    pub partition: Partition,
}

impl Clustering {
    pub fn load(path: &Path) -> Result<Self> {
        let rows = read_id_table(path, "cluster")?;
        if rows.is_empty() {
            return Err(Error::parse(path, "line 2", "clustering has no rows"));
        }
        let labels: Vec<&str> = rows.iter().map(|(_, c)| c.as_str()).collect();
        let partition = Partition::from_labels(&labels);
        Ok(Self {
            items: rows.into_iter().map(|(id, _)| id).collect(),
            partition,
        })
    }

    /// Reorders `other` onto this clustering's item order. Both must cover the
    /// same identifiers.
    pub fn align(&self, other: &Clustering) -> Result<Partition> {
        if self.items.len() != other.items.len() {
            return Err(Error::InvalidInput(format!(
                "clusterings cover different universes ({} vs {} items)",
                self.items.len(),
                other.items.len()
            )));
        }
        let index: HashMap<&str, usize> = other
            .items
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let labels = self
            .items
            .iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .map(|&i| other.partition.cluster_of(i))
                    .ok_or_else(|| {
                        Error::InvalidInput(format!(
                            "item {id:?} is missing from the second clustering"
                        ))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Partition::from_labels(&labels))
    }
}

pub fn write_clustering(out: impl Write, items: &[String], partition: &Partition) -> Result<()> {
    if items.len() != partition.len() {
        return Err(Error::LengthMismatch {
            expected: items.len(),
            actual: partition.len(),
        });
    }
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::InvalidInput(format!("csv output: {e}"));
    w.write_record(["id", "cluster"]).map_err(io)?;
    for (id, &c) in items.iter().zip(partition.assignment()) {
        w.write_record([id.as_str(), &c.to_string()]).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io("<clustering>", e))
}

/// Format for an embedding path, honoring an explicit override.
pub fn embedding_format(path: &Path, explicit: Option<EmbeddingFormat>) -> EmbeddingFormat {
    explicit.unwrap_or_else(|| EmbeddingFormat::from_path(path))
}
