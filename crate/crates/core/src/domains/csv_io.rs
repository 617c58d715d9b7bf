use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};

/// Which columns of a CSV file hold the label and the features.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub label_column: String,
    /// `None` takes every non-label column, in file order.
    pub feature_columns: Option<Vec<String>>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            label_column: "label".to_string(),
            feature_columns: None,
        }
    }
}

/// Reads a headed, comma-separated dataset. Lines starting with `#` are
/// comments.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);

    let headers = reader
        .headers()
        .map_err(|e| malformed(1, e.to_string()))?
        .clone();
    let label_idx = headers
        .iter()
        .position(|h| h == schema.label_column)
        .ok_or_else(|| Error::invalid(format!("missing label column `{}`", schema.label_column)))?;
    let feature_idx: Vec<usize> = match &schema.feature_columns {
        Some(cols) => cols
            .iter()
            .map(|c| {
                headers
                    .iter()
                    .position(|h| h == c)
                    .ok_or_else(|| Error::invalid(format!("missing feature column `{c}`")))
            })
            .collect::<Result<_>>()?,
        None => (0..headers.len()).filter(|&i| i != label_idx).collect(),
    };
    if feature_idx.is_empty() {
        return Err(Error::invalid("schema selects no feature columns"));
    }

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let parse = |i: usize| -> Result<f64> {
            let field = record
                .get(i)
                .ok_or_else(|| malformed(line, format!("missing field {i}")))?;
            let v: f64 = field
                .parse()
                .map_err(|_| malformed(line, format!("non-numeric field `{field}`")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(malformed(line, format!("non-finite field `{field}`")))
            }
        };
        labels.push(parse(label_idx)?);
        for &i in &feature_idx {
            features.push(parse(i)?);
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Dataset::new(features, feature_idx.len(), labels)
}

/// Writes `label,x0,..,x{p-1}` with optional leading `# ` comment lines.
/// Floats use the shortest representation that parses back exactly.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>, comments: &[String]) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    for c in comments {
        writeln!(out, "# {c}").map_err(io_err)?;
    }
    let mut header = vec!["label".to_string()];
    header.extend((0..dataset.n_features()).map(|k| format!("x{k}")));
    writeln!(out, "{}", header.join(",")).map_err(io_err)?;
    for (i, row) in dataset.rows().enumerate() {
        let mut line = format!("{}", dataset.label(i));
        for x in row {
            line.push(',');
            line.push_str(&format!("{x}"));
        }
        writeln!(out, "{line}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

fn malformed(line: u64, message: String) -> Error {
    Error::MalformedRow { line, message }
}
