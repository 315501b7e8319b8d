//! Market-data ingestion: price and ESG CSVs in, a problem instance out.
//!
//! Price CSV: header `date,TICKER1,...,TICKERn` with ISO-8601 dates, one row
//! per period, strictly increasing dates, no gaps in values. The market
//! index is one of the columns, named in the configuration; it feeds the
//! beta estimates and is excluded from the asset universe. ESG CSV:
//! `ticker,score`.

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};

use super::config::IngestConfig;
use super::front_io::atomic_write;
use crate::constraints::{ConstraintSpec, Sector, Turnover};
use crate::error::{Error, Result};
use crate::model::{ObjectiveId, ProblemInstance};
use crate::objectives::{estimate_model, CovarianceDivisor, ObjectiveTerm};

/// Default scale factors bringing the objectives to comparable magnitudes.
fn default_scale(id: ObjectiveId) -> f64 {
    match id {
        ObjectiveId::V | ObjectiveId::ER => 100.0,
        ObjectiveId::ESG => 0.01,
        ObjectiveId::SW => 0.1,
        ObjectiveId::SR => 1.0,
    }
}

struct PriceTable {
    tickers: Vec<String>,
    /// Rows are periods, columns follow `tickers`.
    prices: DMatrix<f64>,
}

fn read_prices(path: &std::path::Path) -> Result<PriceTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
        .clone();
    if headers.is_empty() || headers.get(0) != Some("date") {
        return Err(Error::Data(format!(
            "{}: first column must be 'date'",
            path.display()
        )));
    }
    let tickers: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    if tickers.is_empty() {
        return Err(Error::Data("price file has no asset columns".into()));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut last_date: Option<NaiveDate> = None;
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2; // header is line 1
        let record = record.map_err(|e| Error::Data(format!("line {line}: {e}")))?;
        let date_text = record
            .get(0)
            .ok_or_else(|| Error::Data(format!("line {line}: missing date")))?;
        let date = NaiveDate::parse_from_str(date_text, "%Y-%m-%d")
            .map_err(|e| Error::Data(format!("line {line}: bad date '{date_text}': {e}")))?;
        if let Some(prev) = last_date {
            if date <= prev {
                return Err(Error::Data(format!(
                    "line {line}: dates must be strictly increasing ({prev} then {date})"
                )));
            }
        }
        last_date = Some(date);
        let mut row = Vec::with_capacity(tickers.len());
        for (k, _) in tickers.iter().enumerate() {
            let text = record
                .get(k + 1)
                .ok_or_else(|| Error::Data(format!("line {line}: missing price column")))?;
            let value: f64 = text
                .parse()
                .map_err(|e| Error::Data(format!("line {line}: bad price '{text}': {e}")))?;
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::Data(format!(
                    "line {line}: non-positive or non-finite price {value}"
                )));
            }
            row.push(value);
        }
        rows.push(row);
    }
    if rows.len() < 2 {
        return Err(Error::Data(format!(
            "{}: need at least two periods, got {}",
            path.display(),
            rows.len()
        )));
    }
    let prices = DMatrix::from_fn(rows.len(), tickers.len(), |r, c| rows[r][c]);
    Ok(PriceTable { tickers, prices })
}

fn read_esg(path: &std::path::Path) -> Result<std::collections::HashMap<String, f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let mut scores = std::collections::HashMap::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| Error::Data(format!("line {line}: {e}")))?;
        let ticker = record
            .get(0)
            .ok_or_else(|| Error::Data(format!("line {line}: missing ticker")))?;
        let score: f64 = record
            .get(1)
            .ok_or_else(|| Error::Data(format!("line {line}: missing score")))?
            .parse()
            .map_err(|e| Error::Data(format!("line {line}: bad score: {e}")))?;
        scores.insert(ticker.to_string(), score);
    }
    Ok(scores)
}

/// Build an instance from market data and write it as JSON.
pub fn ingest(cfg: &IngestConfig) -> Result<ProblemInstance> {
    let table = read_prices(&cfg.prices_csv)?;
    let market_idx = table
        .tickers
        .iter()
        .position(|t| t == &cfg.market_column)
        .ok_or_else(|| {
            Error::Config(format!(
                "market column '{}' not found in the price file",
                cfg.market_column
            ))
        })?;
    let asset_cols: Vec<usize> =
        (0..table.tickers.len()).filter(|&c| c != market_idx).collect();
    let n = asset_cols.len();
    if n == 0 {
        return Err(Error::Data("no asset columns besides the market index".into()));
    }
    let t_count = table.prices.nrows() - 1;

    let ret = |p_now: f64, p_prev: f64| -> f64 {
        if cfg.log_returns {
            (p_now / p_prev).ln()
        } else {
            p_now / p_prev - 1.0
        }
    };
    let returns = DMatrix::from_fn(t_count, n, |t, i| {
        let c = asset_cols[i];
        ret(table.prices[(t + 1, c)], table.prices[(t, c)])
    });
    let market = DVector::from_fn(t_count, |t, _| {
        ret(table.prices[(t + 1, market_idx)], table.prices[(t, market_idx)])
    });

    let needs_esg = cfg.objectives.iter().any(|o| o.id == ObjectiveId::ESG);
    let esg_scores = read_esg(&cfg.esg_csv)?;
    let esg = DVector::from_fn(n, |i, _| {
        let ticker = &table.tickers[asset_cols[i]];
        *esg_scores.get(ticker).unwrap_or(&f64::NAN)
    });
    if needs_esg {
        for i in 0..n {
            if !esg[i].is_finite() {
                return Err(Error::Data(format!(
                    "no ESG score for ticker '{}'",
                    table.tickers[asset_cols[i]]
                )));
            }
        }
    }
    let esg = esg.map(|v| if v.is_finite() { v } else { 0.0 });

    let divisor = if cfg.sample_divisor {
        CovarianceDivisor::Sample
    } else {
        CovarianceDivisor::Population
    };
    let model = estimate_model(&returns, &market, &esg, divisor)?;

    let terms: Vec<ObjectiveTerm> = cfg
        .objectives
        .iter()
        .map(|o| ObjectiveTerm {
            id: o.id,
            scale: o.scale.unwrap_or_else(|| default_scale(o.id)),
            sense: o.sense.unwrap_or_else(|| o.id.natural_sense()),
        })
        .collect();

    let beta_window = match (cfg.beta_min, cfg.beta_max) {
        (Some(lo), Some(hi)) => Some((lo, hi)),
        (None, None) => None,
        _ => {
            return Err(Error::Config(
                "beta_min and beta_max must be given together".into(),
            ))
        }
    };
    let constraints = ConstraintSpec {
        lower: cfg.lower.clone().unwrap_or_else(|| vec![0.0; n]),
        upper: cfg.upper.clone().unwrap_or_else(|| vec![1.0; n]),
        beta_window,
        sectors: cfg
            .sectors
            .iter()
            .map(|s| Sector { indices: s.indices.clone(), min: s.min, max: s.max })
            .collect(),
        turnover: cfg
            .turnover
            .as_ref()
            .map(|t| Turnover { x0: t.x0.clone(), tau: t.tau }),
    };

    let instance =
        ProblemInstance::new(cfg.name.clone(), n, cfg.s, terms, constraints, model)?;
    atomic_write(&cfg.out, instance.to_json()?.as_bytes())?;
    Ok(instance)
}
