//! Delimited text ingestion into a [`DataMatrix`].

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use subdata::DataMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}, column `{column}`: `{value}` is not a number")]
    NonNumeric {
        line: u64,
        column: String,
        value: String,
    },
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error("response column `{0}` is also a covariate")]
    ResponseIsCovariate(String),
    #[error("log transform requested for `{0}`, which is neither a covariate nor the response")]
    LogColumnUnused(String),
    #[error("unsupported delimiter `{0}`; use a single character, `tab` or `whitespace`")]
    Delimiter(String),
    #[error("no header or data rows")]
    Empty,
    #[error("no usable rows: {rejected} rejected, {skipped} skipped")]
    AllRejected { rejected: usize, skipped: usize },
}

fn default_delimiter() -> String {
    ",".into()
}

fn default_true() -> bool {
    true
}

/// Where the data lives and how to turn it into covariates and a response.
/// Columns are referenced by header name or by 1-based position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestSpec {
    #[serde(default)]
    pub path: PathBuf,
    #[serde(default = "default_delimiter")]
    pub delimiter: String,
    #[serde(default = "default_true")]
    pub header: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    /// Covariates; every non-response column when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<Vec<String>>,
    /// Data rows dropped after the header.
    #[serde(default)]
    pub skip_rows: usize,
    #[serde(default)]
    pub log_columns: Vec<String>,
}

impl IngestSpec {
    pub fn at(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            delimiter: default_delimiter(),
            header: true,
            response: None,
            columns: None,
            skip_rows: 0,
            log_columns: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub data: DataMatrix,
    /// Names of the covariate columns, in matrix order.
    pub covariates: Vec<String>,
    pub response: Option<String>,
    /// 1-based file line of every kept row.
    pub lines: Vec<u64>,
    /// Rows dropped for missing values or non-positive log inputs.
    pub rejected: usize,
    pub skipped: usize,
}

enum Splitter {
    Byte(u8),
    Whitespace,
}

impl Splitter {
    fn parse(s: &str) -> Result<Self, IngestError> {
        match s {
            "whitespace" => Ok(Splitter::Whitespace),
            "tab" | "\\t" => Ok(Splitter::Byte(b'\t')),
            _ if s.len() == 1 && s.is_ascii() => Ok(Splitter::Byte(s.as_bytes()[0])),
            _ => Err(IngestError::Delimiter(s.into())),
        }
    }
}

/// Records with their 1-based line numbers.
fn read_records(path: &Path, split: &Splitter) -> Result<Vec<(u64, Vec<String>)>, IngestError> {
    let io = |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io)?;
    match split {
        Splitter::Whitespace => {
            let mut out = Vec::new();
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(io)?;
                if line.trim().is_empty() {
                    continue;
                }
                out.push((
                    i as u64 + 1,
                    line.split_whitespace().map(str::to_owned).collect(),
                ));
            }
            Ok(out)
        }
        Splitter::Byte(b) => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(false)
                .delimiter(*b)
                .flexible(true)
                .from_reader(file);
            let mut out = Vec::new();
            for rec in reader.records() {
                let rec = rec.map_err(|e| IngestError::Parse {
                    line: e.position().map_or(0, |p| p.line()),
                    message: e.to_string(),
                })?;
                let line = rec.position().map_or(0, |p| p.line());
                out.push((line, rec.iter().map(|s| s.trim().to_owned()).collect()));
            }
            Ok(out)
        }
    }
}

fn resolve(name: &str, header: &[String]) -> Result<usize, IngestError> {
    if let Some(i) = header.iter().position(|h| h == name) {
        return Ok(i);
    }
    match name.parse::<usize>() {
        Ok(pos) if (1..=header.len()).contains(&pos) => Ok(pos - 1),
        _ => Err(IngestError::MissingColumn(name.into())),
    }
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty()
        || ["na", "nan", "null"]
            .iter()
            .any(|m| cell.eq_ignore_ascii_case(m))
}

pub fn ingest(spec: &IngestSpec) -> Result<Ingested, IngestError> {
    let split = Splitter::parse(&spec.delimiter)?;
    let mut records = read_records(&spec.path, &split)?.into_iter();
    let first = records.next().ok_or(IngestError::Empty)?;
    let width = first.1.len();
    let header: Vec<String> = if spec.header {
        first.1.clone()
    } else {
        (1..=width).map(|i| i.to_string()).collect()
    };

    let response = spec
        .response
        .as_deref()
        .map(|r| resolve(r, &header))
        .transpose()?;
    let covariates: Vec<usize> = match &spec.columns {
        Some(cols) => cols
            .iter()
            .map(|c| resolve(c, &header))
            .collect::<Result<_, _>>()?,
        None => (0..width).filter(|&i| Some(i) != response).collect(),
    };
    if let Some(r) = response {
        if covariates.contains(&r) {
            return Err(IngestError::ResponseIsCovariate(header[r].clone()));
        }
    }
    let mut log = vec![false; width];
    for c in &spec.log_columns {
        let i = resolve(c, &header)?;
        if !covariates.contains(&i) && Some(i) != response {
            return Err(IngestError::LogColumnUnused(c.clone()));
        }
        log[i] = true;
    }

    let data_rows: Box<dyn Iterator<Item = (u64, Vec<String>)>> = if spec.header {
        Box::new(records)
    } else {
        Box::new(std::iter::once(first).chain(records))
    };
    let p = covariates.len();
    let mut values = Vec::new();
    let mut ys = Vec::new();
    let mut lines = Vec::new();
    let (mut rejected, mut skipped) = (0, 0);
    let mut row = Vec::with_capacity(p);

    'rows: for (line, rec) in data_rows {
        if skipped < spec.skip_rows {
            skipped += 1;
            continue;
        }
        if rec.len() != width {
            return Err(IngestError::Parse {
                line,
                message: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        row.clear();
        for &j in covariates.iter().chain(response.iter()) {
            let cell = rec[j].as_str();
            if is_missing(cell) {
                rejected += 1;
                continue 'rows;
            }
            let v: f64 = cell.parse().map_err(|_| IngestError::NonNumeric {
                line,
                column: header[j].clone(),
                value: cell.into(),
            })?;
            let v = if log[j] {
                if v <= 0.0 {
                    rejected += 1;
                    continue 'rows;
                }
                v.ln()
            } else {
                v
            };
            if !v.is_finite() {
                rejected += 1;
                continue 'rows;
            }
            row.push(v);
        }
        values.extend_from_slice(&row[..p]);
        if response.is_some() {
            ys.push(row[p]);
        }
        lines.push(line);
    }

    let n = lines.len();
    if n == 0 {
        return Err(IngestError::AllRejected { rejected, skipped });
    }
    let mut data = DataMatrix::new(n, p, values).expect("row width is checked above");
    if response.is_some() {
        data = data.with_response(ys).expect("one response per kept row");
    }
    Ok(Ingested {
        data,
        covariates: covariates.iter().map(|&j| header[j].clone()).collect(),
        response: response.map(|r| header[r].clone()),
        lines,
        rejected,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn named_columns_and_response() {
        let f = file("a,b,c,y\n1,2,3,4\n5,6,7,8\n");
        let spec = IngestSpec {
            response: Some("y".into()),
            columns: Some(vec!["c".into(), "a".into()]),
            ..IngestSpec::at(f.path())
        };
        let got = ingest(&spec).unwrap();
        assert_eq!(got.data.values(), &[3.0, 1.0, 7.0, 5.0]);
        assert_eq!(got.data.response().unwrap(), &[4.0, 8.0]);
        assert_eq!(got.covariates, vec!["c", "a"]);
        assert_eq!(got.lines, vec![2, 3]);
    }

    #[test]
    fn positions_without_header() {
        let f = file("1 2 3\n4   5 6\n");
        let spec = IngestSpec {
            delimiter: "whitespace".into(),
            header: false,
            response: Some("2".into()),
            ..IngestSpec::at(f.path())
        };
        let got = ingest(&spec).unwrap();
        assert_eq!(got.data.values(), &[1.0, 3.0, 4.0, 6.0]);
        assert_eq!(got.data.response().unwrap(), &[2.0, 5.0]);
    }

    #[test]
    fn skip_log_and_reject() {
        let f = file("x;y\n9;1\n1;1\nNA;2\n-1;3\n2.718281828459045;4\n");
        let spec = IngestSpec {
            delimiter: ";".into(),
            response: Some("y".into()),
            skip_rows: 1,
            log_columns: vec!["x".into()],
            ..IngestSpec::at(f.path())
        };
        let got = ingest(&spec).unwrap();
        assert_eq!(got.skipped, 1);
        assert_eq!(got.rejected, 2);
        assert_eq!(got.data.n(), 2);
        assert_eq!(got.data.get(0, 0), 0.0);
        assert!((got.data.get(1, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn non_numeric_cell_names_line_and_column() {
        let f = file("a,b\n1,2\n3,oops\n");
        let err = ingest(&IngestSpec::at(f.path())).unwrap_err();
        match &err {
            IngestError::NonNumeric {
                line,
                column,
                value,
            } => {
                assert_eq!((*line, column.as_str(), value.as_str()), (3, "b", "oops"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("line 3"));
    }

    #[test]
    fn failure_contracts() {
        let f = file("a,b\n1,2\n");
        let missing = IngestSpec {
            columns: Some(vec!["z".into()]),
            ..IngestSpec::at(f.path())
        };
        assert!(matches!(
            ingest(&missing),
            Err(IngestError::MissingColumn(_))
        ));
        let clash = IngestSpec {
            response: Some("a".into()),
            columns: Some(vec!["a".into()]),
            ..IngestSpec::at(f.path())
        };
        assert!(matches!(
            ingest(&clash),
            Err(IngestError::ResponseIsCovariate(_))
        ));
        let empty = IngestSpec {
            skip_rows: 5,
            ..IngestSpec::at(f.path())
        };
        assert!(matches!(
            ingest(&empty),
            Err(IngestError::AllRejected { .. })
        ));
        let ragged = file("a,b\n1,2\n3\n");
        assert!(matches!(
            ingest(&IngestSpec::at(ragged.path())),
            Err(IngestError::Parse { line: 3, .. })
        ));
        assert!(matches!(
            ingest(&IngestSpec {
                delimiter: "::".into(),
                ..IngestSpec::at(f.path())
            }),
            Err(IngestError::Delimiter(_))
        ));
    }
}
