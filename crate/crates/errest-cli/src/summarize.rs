//! Aggregation of experiment tables: per-group means, standard errors, and
//! 95% bands (`mean ± 1.96 SE`) for every numeric column.

use crate::output::{Table, Value};
use anyhow::{bail, Context, Result};
use std::collections::BTreeMap;
use std::path::Path;

pub fn summarize(input: &Path, by: Option<&str>) -> Result<Table> {
    let mut reader = csv::Reader::from_path(input)
        .with_context(|| format!("reading {}", input.display()))?;
    let headers: Vec<String> =
        reader.headers().context("missing header row")?.iter().map(String::from).collect();
    if headers.is_empty() {
        bail!("input has no columns");
    }
    let group_idx = match by {
        Some(name) => headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("no column named {name:?}"))?,
        None => 0,
    };

    // group key -> column -> values
    let mut groups: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.context("malformed CSV record")?;
        if record.len() != headers.len() {
            bail!("row with {} fields, expected {}", record.len(), headers.len());
        }
        let key = record.get(group_idx).unwrap_or("").to_string();
        let entry = groups.entry(key).or_insert_with(|| vec![Vec::new(); headers.len()]);
        for (i, field) in record.iter().enumerate() {
            if i == group_idx {
                continue;
            }
            if let Ok(v) = field.parse::<f64>() {
                if v.is_finite() {
                    entry[i].push(v);
                }
            }
        }
    }
    if groups.is_empty() {
        bail!("input has no data rows");
    }

    let mut out = Table::new(&["group", "column", "count", "mean", "se", "lo95", "hi95"]);
    for (key, cols) in &groups {
        for (i, values) in cols.iter().enumerate() {
            if i == group_idx || values.is_empty() {
                continue;
            }
            let n = values.len();
            let mean = values.iter().sum::<f64>() / n as f64;
            if n == 1 {
                // standard error undefined for a single observation
                out.push(vec![
                    key.as_str().into(),
                    headers[i].as_str().into(),
                    n.into(),
                    mean.into(),
                    Value::Empty,
                    Value::Empty,
                    Value::Empty,
                ]);
                continue;
            }
            let var =
                values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            out.push(vec![
                key.as_str().into(),
                headers[i].as_str().into(),
                n.into(),
                mean.into(),
                se.into(),
                (mean - 1.96 * se).into(),
                (mean + 1.96 * se).into(),
            ]);
        }
    }
    Ok(out)
}
