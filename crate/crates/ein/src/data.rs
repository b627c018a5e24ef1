//! Tensor data files: `{"tensors": {"T": {"shape": [3], "data": [...]}}}`.
//!
//! `data` is row-major, either flat or nested; entries are JSON numbers or
//! strings such as `"3/2"`. Decimals are read exactly.

use std::collections::BTreeMap;

use ein_core::eval::{Data, DenseTensor};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::doc::parse_rational;

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    shape: Vec<u32>,
    data: Value,
}

#[derive(Serialize, Deserialize)]
struct DataFile {
    tensors: BTreeMap<String, TensorEntry>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DataError {
    #[error("malformed data file: {0}")]
    Json(String),
    #[error("tensor '{0}': entry is not a number")]
    Entry(String),
    #[error("tensor '{0}': data does not fill its shape")]
    Shape(String),
}

fn flatten_into(v: &Value, name: &str, out: &mut Vec<BigRational>) -> Result<(), DataError> {
    match v {
        Value::Array(items) => return items.iter().try_for_each(|i| flatten_into(i, name, out)),
        Value::Number(n) => out.push(parse_rational(&n.to_string()).ok_or_else(|| DataError::Entry(name.into()))?),
        Value::String(s) => out.push(parse_rational(s).ok_or_else(|| DataError::Entry(name.into()))?),
        _ => return Err(DataError::Entry(name.into())),
    }
    Ok(())
}

pub fn parse_data(text: &str) -> Result<Data, DataError> {
    let file: DataFile = serde_json::from_str(text).map_err(|e| DataError::Json(e.to_string()))?;
    let mut data = Data::new();
    for (name, entry) in file.tensors {
        let mut vals = Vec::new();
        flatten_into(&entry.data, &name, &mut vals)?;
        let t = DenseTensor::new(entry.shape, vals).ok_or_else(|| DataError::Shape(name.clone()))?;
        data.insert(name, t);
    }
    Ok(data)
}

/// Flat data, integers as numbers and other rationals as `"n/d"` strings.
pub fn data_json(data: &Data) -> String {
    let tensors = data
        .iter()
        .map(|(name, t)| {
            let vals = t
                .data
                .iter()
                .map(|r| match i64::try_from(r.to_integer()) {
                    Ok(n) if r.is_integer() => Value::from(n),
                    _ => Value::from(format!("{}/{}", r.numer(), r.denom())),
                })
                .collect();
            (name.clone(), TensorEntry { shape: t.shape.clone(), data: Value::Array(vals) })
        })
        .collect();
    serde_json::to_string_pretty(&DataFile { tensors }).expect("data always serializes")
}
