//! Turn tabular records into a contingency vector under a schema.
//!
//! Schema files are plain text, one attribute per line:
//!
//! ```text
//! # name cardinality [value0,value1,...]
//! workclass 9
//! sex 2 Female,Male
//! ```
//!
//! Pinning the value list fixes the dictionary codes; otherwise string values
//! are dictionary-encoded in first-appearance order.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::schema::AttributeSchema;
use crate::vector::ContingencyVector;

/// Rows of raw attribute values, one string per schema attribute.
#[derive(Debug, Clone, Default)]
pub struct RecordBatch {
    pub rows: Vec<Vec<String>>,
}

/// The value-to-code mapping produced while encoding a batch, dumped beside
/// the contingency vector for auditability.
#[derive(Debug, Clone)]
pub struct Dictionary {
    /// Per attribute, codes in code order.
    pub values: Vec<Vec<String>>,
}

pub fn parse_schema(text: &str, file: &str) -> Result<AttributeSchema> {
    let mut attrs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let name = it.next().unwrap().to_string();
        let card: u32 = it
            .next()
            .ok_or_else(|| Error::Parse {
                file: file.into(),
                line: lineno + 1,
                message: "missing cardinality".into(),
            })?
            .parse()
            .map_err(|_| Error::Parse {
                file: file.into(),
                line: lineno + 1,
                message: "cardinality is not an integer".into(),
            })?;
        let pinned = it.next().map(|vals| {
            vals.split(',')
                .map(|v| v.trim().to_string())
                .collect::<Vec<_>>()
        });
        if it.next().is_some() {
            return Err(Error::Parse {
                file: file.into(),
                line: lineno + 1,
                message: "unexpected trailing tokens".into(),
            });
        }
        attrs.push((name, card, pinned));
    }
    AttributeSchema::new(attrs)
}

pub fn load_schema(path: &Path) -> Result<AttributeSchema> {
    let text = std::fs::read_to_string(path)?;
    parse_schema(&text, &path.display().to_string())
}

/// Read a CSV file with a header row matching the schema's attribute names in
/// order.
pub fn load_records(path: &Path, schema: &AttributeSchema) -> Result<RecordBatch> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Ingest(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Ingest(e.to_string()))?
        .clone();
    let expected: Vec<&str> = schema
        .attributes()
        .iter()
        .map(|a| a.name.as_str())
        .collect();
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(Error::Ingest(format!(
            "csv header {:?} does not match schema attributes {:?}",
            got, expected
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Ingest(format!("record {}: {e}", i + 1)))?;
        if rec.len() != expected.len() {
            return Err(Error::Ingest(format!(
                "record {} has {} fields, expected {}",
                i + 1,
                rec.len(),
                expected.len()
            )));
        }
        rows.push(rec.iter().map(|s| s.to_string()).collect());
    }
    Ok(RecordBatch { rows })
}

/// Encode and count the batch. Missing (empty) values are a hard error.
pub fn build_contingency(
    schema: &AttributeSchema,
    records: &RecordBatch,
) -> Result<(ContingencyVector, Dictionary)> {
    let n_attrs = schema.attributes().len();
    let mut dict: Vec<Vec<String>> = Vec::with_capacity(n_attrs);
    let mut code_of: Vec<HashMap<String, u32>> = Vec::with_capacity(n_attrs);
    for a in schema.attributes() {
        match &a.pinned_values {
            Some(vals) => {
                let mut m = HashMap::new();
                for (c, v) in vals.iter().enumerate() {
                    m.insert(v.clone(), c as u32);
                }
                dict.push(vals.clone());
                code_of.push(m);
            }
            None => {
                dict.push(Vec::new());
                code_of.push(HashMap::new());
            }
        }
    }

    let mut x = ContingencyVector::zeros(schema.dimension())?;
    let mut codes = vec![0u32; n_attrs];
    for (row_idx, row) in records.rows.iter().enumerate() {
        if row.len() != n_attrs {
            return Err(Error::Ingest(format!(
                "record {} has {} values, schema has {} attributes",
                row_idx + 1,
                row.len(),
                n_attrs
            )));
        }
        for (i, value) in row.iter().enumerate() {
            if value.is_empty() {
                return Err(Error::Ingest(format!(
                    "record {} attribute '{}' is missing a value",
                    row_idx + 1,
                    schema.attributes()[i].name
                )));
            }
            let a = &schema.attributes()[i];
            let code = match code_of[i].get(value) {
                Some(&c) => c,
                None => {
                    if a.pinned_values.is_some() {
                        return Err(Error::Ingest(format!(
                            "record {} attribute '{}': value '{}' is not in the pinned list",
                            row_idx + 1,
                            a.name,
                            value
                        )));
                    }
                    let c = dict[i].len() as u32;
                    if c >= a.cardinality {
                        return Err(Error::Ingest(format!(
                            "attribute '{}' saw more than {} distinct values ('{}' is new)",
                            a.name, a.cardinality, value
                        )));
                    }
                    dict[i].push(value.clone());
                    code_of[i].insert(value.clone(), c);
                    c
                }
            };
            codes[i] = code;
        }
        let cell = schema.encode_cell(&codes)?;
        x.add_at(cell);
    }
    Ok((x, Dictionary { values: dict }))
}
