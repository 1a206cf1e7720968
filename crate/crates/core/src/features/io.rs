//! Feature-matrix persistence.
//!
//! JSON lines: one `{"a", "b", "link_type"?, "label"?, "features": {name: value|null}}`
//! record per pair. Packed binary: magic `CDFM`, `u32` version, `u32` column
//! count, `u64` row count, length-prefixed UTF-8 names, then per row a
//! presence bitmap (`ceil(n/8)` bytes, bit `j` of byte `j/8`) followed by `n`
//! little-endian `f32` values (0 where absent). All integers little-endian.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{FeatureError, FeatureMatrix, FeatureSchema, FeatureVector};
use crate::corpus::LinkType;

const MAGIC: &[u8; 4] = b"CDFM";
const VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Record {
    a: String,
    b: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    link_type: Option<LinkType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<bool>,
    features: BTreeMap<String, Option<f64>>,
}

/// Feature rows with pair identity and optional supervision.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    pub keys: Vec<(String, String)>,
    pub link_types: Vec<Option<LinkType>>,
    pub labels: Vec<Option<bool>>,
    pub matrix: FeatureMatrix,
}

impl FeatureTable {
    pub fn to_jsonl(&self) -> String {
        let names = self.matrix.schema.names();
        let mut out = String::new();
        for (i, row) in self.matrix.rows.iter().enumerate() {
            let rec = Record {
                a: self.keys[i].0.clone(),
                b: self.keys[i].1.clone(),
                link_type: self.link_types[i],
                label: self.labels[i],
                features: names
                    .iter()
                    .cloned()
                    .zip(row.values.iter().copied())
                    .collect(),
            };
            out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    /// Columns come out in name order; every record must carry the same names.
    pub fn from_jsonl(text: &str) -> Result<Self, FeatureError> {
        let mut schema: Option<Arc<FeatureSchema>> = None;
        let mut table = FeatureTable {
            keys: Vec::new(),
            link_types: Vec::new(),
            labels: Vec::new(),
            matrix: FeatureMatrix::new(Arc::new(FeatureSchema::new(Vec::new())), Vec::new()),
        };
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(line)
                .map_err(|e| FeatureError::Format(format!("line {}: {e}", i + 1)))?;
            let s = schema.get_or_insert_with(|| {
                Arc::new(FeatureSchema::new(rec.features.keys().cloned().collect()))
            });
            if rec.features.len() != s.len()
                || !rec.features.keys().zip(s.names()).all(|(a, b)| a == b)
            {
                return Err(FeatureError::Format(format!(
                    "line {}: feature names differ from first record",
                    i + 1
                )));
            }
            table.keys.push((rec.a, rec.b));
            table.link_types.push(rec.link_type);
            table.labels.push(rec.label);
            table.matrix.rows.push(FeatureVector {
                values: rec.features.into_values().collect(),
            });
        }
        if let Some(s) = schema {
            table.matrix.schema = s;
        }
        Ok(table)
    }
}

pub fn write_binary(matrix: &FeatureMatrix) -> Vec<u8> {
    let n = matrix.schema.len();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(matrix.rows.len() as u64).to_le_bytes());
    for name in matrix.schema.names() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
    }
    for row in &matrix.rows {
        let mut bitmap = vec![0u8; n.div_ceil(8)];
        for (j, v) in row.values.iter().enumerate() {
            if v.is_some() {
                bitmap[j / 8] |= 1 << (j % 8);
            }
        }
        out.extend_from_slice(&bitmap);
        for v in &row.values {
            out.extend_from_slice(&(v.unwrap_or(0.0) as f32).to_le_bytes());
        }
    }
    out
}

struct Reader<'b> {
    bytes: &'b [u8],
    pos: usize,
}

impl<'b> Reader<'b> {
    fn take(&mut self, n: usize) -> Result<&'b [u8], FeatureError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end =
            end.ok_or_else(|| FeatureError::Format("truncated binary feature file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, FeatureError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64, FeatureError> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}

pub fn read_binary(bytes: &[u8]) -> Result<FeatureMatrix, FeatureError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(FeatureError::Format("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(FeatureError::Format(format!(
            "unsupported version {version}"
        )));
    }
    let n = r.u32()? as usize;
    let rows = r.u64()? as usize;
    let mut names = Vec::with_capacity(n);
    for _ in 0..n {
        let len = r.u32()? as usize;
        let name =
            std::str::from_utf8(r.take(len)?).map_err(|e| FeatureError::Format(e.to_string()))?;
        names.push(name.to_string());
    }
    let mut out = Vec::new();
    for _ in 0..rows {
        let bitmap = r.take(n.div_ceil(8))?;
        let mut values = Vec::with_capacity(n);
        for j in 0..n {
            let v = f32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
            values.push((bitmap[j / 8] >> (j % 8) & 1 == 1).then_some(v as f64));
        }
        out.push(FeatureVector { values });
    }
    if r.pos != bytes.len() {
        return Err(FeatureError::Format("trailing bytes".into()));
    }
    Ok(FeatureMatrix::new(Arc::new(FeatureSchema::new(names)), out))
}
