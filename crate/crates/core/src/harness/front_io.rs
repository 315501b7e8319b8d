//! Front CSV persistence.
//!
//! Schema: `f_1..f_m` in natural orientation, `x_1..x_n`, the support as
//! semicolon-joined indices, the stationarity measure `theta`, and the
//! producing solver's name; scalarization phase fronts append
//! `lambda_1..lambda_m`. Row order is deterministic (support lexicographic,
//! then first objective ascending), and floats are written in shortest
//! round-trip form so reruns are byte-identical.

use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::FrontPoint;
use crate::model::SupportSet;
use crate::objectives::ObjectiveTerm;
use crate::util::fmt_f64;

#[derive(Debug, Clone)]
pub struct FrontRow {
    /// Objective values in natural orientation.
    pub f_natural: Vec<f64>,
    pub x: Vec<f64>,
    pub support: SupportSet,
    pub theta: f64,
    pub origin: String,
    pub lambda: Option<Vec<f64>>,
}

/// Write rows (sorted in place into the canonical order) atomically via a
/// temp file and rename.
pub fn write_front_csv(path: &Path, mut rows: Vec<FrontRow>, with_lambda: bool) -> Result<()> {
    rows.sort_by(|a, b| {
        a.support
            .cmp(&b.support)
            .then_with(|| a.f_natural[0].total_cmp(&b.f_natural[0]))
    });
    let m = rows.first().map(|r| r.f_natural.len()).unwrap_or(0);
    let n = rows.first().map(|r| r.x.len()).unwrap_or(0);
    let mut out = String::new();
    let mut header: Vec<String> = Vec::new();
    for j in 0..m {
        header.push(format!("f_{}", j + 1));
    }
    for i in 0..n {
        header.push(format!("x_{}", i + 1));
    }
    header.push("support".into());
    header.push("theta".into());
    header.push("origin".into());
    if with_lambda {
        for j in 0..m {
            header.push(format!("lambda_{}", j + 1));
        }
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for row in &rows {
        let mut fields: Vec<String> = Vec::with_capacity(header.len());
        for v in &row.f_natural {
            fields.push(fmt_f64(*v));
        }
        for v in &row.x {
            fields.push(fmt_f64(*v));
        }
        fields.push(row.support.to_string());
        fields.push(fmt_f64(row.theta));
        fields.push(row.origin.clone());
        if with_lambda {
            match &row.lambda {
                Some(lam) => fields.extend(lam.iter().map(|v| fmt_f64(*v))),
                None => fields.extend(std::iter::repeat(String::new()).take(m)),
            }
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

/// Write bytes to `path` through a sibling temp file and rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Read a front CSV back as metric-ready points: objective values converted
/// to the internal minimization convention using the instance's terms, plus
/// the decision vectors.
pub fn read_front_csv(path: &Path, terms: &[ObjectiveTerm]) -> Result<Vec<(FrontPoint, Vec<f64>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
        .clone();
    let m = terms.len();
    let support_col = headers
        .iter()
        .position(|h| h == "support")
        .ok_or_else(|| Error::Data(format!("{}: missing support column", path.display())))?;
    if support_col < m {
        return Err(Error::Data(format!(
            "{}: expected {m} objective columns before the support",
            path.display()
        )));
    }
    let mut out = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let parse = |idx: usize| -> Result<f64> {
            record
                .get(idx)
                .ok_or_else(|| Error::Data(format!("row {line}: missing column {idx}")))?
                .parse::<f64>()
                .map_err(|e| Error::Data(format!("row {line}: bad number: {e}")))
        };
        let mut internal = Vec::with_capacity(m);
        for (j, term) in terms.iter().enumerate() {
            // natural = sign * internal / scale
            internal.push(term.sign() * term.scale * parse(j)?);
        }
        let mut x = Vec::with_capacity(support_col - m);
        for idx in m..support_col {
            x.push(parse(idx)?);
        }
        let support_text = record
            .get(support_col)
            .ok_or_else(|| Error::Data(format!("row {line}: missing support")))?;
        let indices: Vec<usize> = if support_text.is_empty() {
            Vec::new()
        } else {
            support_text
                .split(';')
                .map(|tok| {
                    tok.parse::<usize>()
                        .map_err(|e| Error::Data(format!("row {line}: bad support index: {e}")))
                })
                .collect::<Result<_>>()?
        };
        out.push((
            FrontPoint { f: internal, support: SupportSet::new(indices) },
            x,
        ));
    }
    Ok(out)
}
