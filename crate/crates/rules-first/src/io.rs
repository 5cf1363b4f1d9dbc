//! Dataset file formats and model serialization.
//!
//! Two dataset formats are supported, both readable and writable:
//!
//! * dense CSV with header `f0,...,f{d-1},label`, label column -1/+1;
//! * sparse text, one example per line: `label idx:val idx:val ...`
//!   with ascending 0-based indices.
//!
//! Models serialize as a single JSON document; the rule list round-trips
//! bit-exact and weights to full f64 precision.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boost::BoostedModel;
use crate::core::{
    CoreError, Dataset, Example, Label, LinearModel, RulesFirstModel, SparseVec,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("model serialization: {0}")]
    Json(#[from] serde_json::Error),
}

fn parse_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_label(tok: &str, line: usize) -> Result<Label, IoError> {
    match tok.trim() {
        "1" | "+1" => Ok(Label::Positive),
        "-1" => Ok(Label::Negative),
        other => Err(parse_err(line, format!("bad label `{other}`"))),
    }
}

// ---------------------------------------------------------------------------
// Dense CSV
// ---------------------------------------------------------------------------

pub fn write_dense_csv(data: &Dataset) -> String {
    let d = data.dimension();
    let mut out = String::new();
    for j in 0..d {
        let _ = write!(out, "f{j},");
    }
    out.push_str("label\n");
    for ex in data.iter() {
        let mut row = vec![0.0; d];
        for (i, v) in ex.features.iter() {
            row[i] = v;
        }
        for v in &row {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{}", ex.label.signum() as i64);
    }
    out
}

pub fn read_dense_csv(text: &str) -> Result<Dataset, IoError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header row"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.last() != Some(&"label") {
        return Err(parse_err(1, "header must end with `label`"));
    }
    let d = cols.len() - 1;
    for (j, col) in cols[..d].iter().enumerate() {
        if *col != format!("f{j}") {
            return Err(parse_err(1, format!("expected column f{j}, got `{col}`")));
        }
    }
    let mut examples = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != d + 1 {
            return Err(parse_err(
                line_no,
                format!("expected {} fields, got {}", d + 1, fields.len()),
            ));
        }
        let mut entries = Vec::new();
        for (j, tok) in fields[..d].iter().enumerate() {
            let v: f64 = tok
                .trim()
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad value `{tok}`")))?;
            if v != 0.0 {
                entries.push((j, v));
            }
        }
        let label = parse_label(fields[d], line_no)?;
        examples.push(Example::new(SparseVec::new(entries)?, label));
    }
    Ok(Dataset::new(d, examples)?)
}

// ---------------------------------------------------------------------------
// Sparse text
// ---------------------------------------------------------------------------

pub fn write_sparse(data: &Dataset) -> String {
    let mut out = String::new();
    for ex in data.iter() {
        let _ = write!(out, "{}", ex.label.signum() as i64);
        for (i, v) in ex.features.iter() {
            let _ = write!(out, " {i}:{v}");
        }
        out.push('\n');
    }
    out
}

/// Parses the sparse text format. When `dimension` is `None` it is inferred
/// as the largest index seen plus one.
pub fn read_sparse(text: &str, dimension: Option<usize>) -> Result<Dataset, IoError> {
    let mut examples = Vec::new();
    let mut max_index = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut toks = raw.split_whitespace();
        let label = parse_label(toks.next().unwrap(), line_no)?;
        let mut entries = Vec::new();
        let mut prev: Option<usize> = None;
        for tok in toks {
            let (i_s, v_s) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(line_no, format!("bad entry `{tok}`")))?;
            let i: usize = i_s
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad index `{i_s}`")))?;
            let v: f64 = v_s
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad value `{v_s}`")))?;
            if let Some(p) = prev {
                if i <= p {
                    return Err(parse_err(line_no, "indices must be ascending"));
                }
            }
            prev = Some(i);
            max_index = max_index.max(i);
            entries.push((i, v));
        }
        examples.push(Example::new(SparseVec::new(entries)?, label));
    }
    let d = dimension.unwrap_or(max_index + 1);
    Ok(Dataset::new(d, examples)?)
}

pub fn read_dataset_file(path: &Path, dimension: Option<usize>) -> Result<Dataset, IoError> {
    let text = fs::read_to_string(path)?;
    if path.extension().map(|e| e == "csv").unwrap_or(false) {
        read_dense_csv(&text)
    } else {
        read_sparse(&text, dimension)
    }
}

pub fn write_dataset_file(path: &Path, data: &Dataset) -> Result<(), IoError> {
    let text = if path.extension().map(|e| e == "csv").unwrap_or(false) {
        write_dense_csv(data)
    } else {
        write_sparse(data)
    };
    fs::write(path, text)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Model documents
// ---------------------------------------------------------------------------

/// Container for every serializable model kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelDocument {
    Linear(LinearModel),
    RulesFirst(RulesFirstModel),
    Boosted(BoostedModel),
}

pub fn model_to_string(model: &ModelDocument) -> Result<String, IoError> {
    Ok(serde_json::to_string_pretty(model)?)
}

pub fn model_from_str(text: &str) -> Result<ModelDocument, IoError> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_model_file(path: &Path, model: &ModelDocument) -> Result<(), IoError> {
    fs::write(path, model_to_string(model)?)?;
    Ok(())
}

pub fn read_model_file(path: &Path) -> Result<ModelDocument, IoError> {
    model_from_str(&fs::read_to_string(path)?)
}
