use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::MetricReport;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(Error::Config(format!("unknown report format {s:?}"))),
        }
    }
}

/// One line of the per-iteration report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub iteration: usize,
    pub metric: String,
    pub mean: f64,
    pub n_queries: usize,
    /// Percentage of active pairs with at least one answered question.
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonReport {
    pub ranker: String,
    pub rows: Vec<ReportRow>,
}

pub fn report_rows(report: &MetricReport) -> Vec<ReportRow> {
    report
        .iterations
        .iter()
        .flat_map(|it| {
            [("map", it.map), ("mrr", it.mrr), ("ndcg", it.ndcg)].map(|(metric, mean)| ReportRow {
                iteration: it.iteration,
                metric: metric.into(),
                mean,
                n_queries: it.n_queries,
                coverage: it.coverage,
            })
        })
        .collect()
}

pub fn emit_report(report: &MetricReport, path: &Path, format: ReportFormat) -> Result<()> {
    let rows = report_rows(report);
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            for r in &rows {
                w.serialize(r)?;
            }
            w.flush().map_err(|e| Error::io(path, e))
        }
        ReportFormat::Json => {
            let doc = JsonReport {
                ranker: report.ranker.clone(),
                rows,
            };
            let text = serde_json::to_string_pretty(&doc)?;
            std::fs::write(path, text).map_err(|e| Error::io(path, e))
        }
    }
}

/// Fields are parsed with `str::parse` so floats read back bit-exact.
pub fn read_csv_report(path: &Path) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |m: &str| Error::Malformed {
            path: path.to_path_buf(),
            line: k + 2,
            message: m.to_string(),
        };
        let field = |i: usize| rec.get(i).ok_or_else(|| bad("missing field"));
        rows.push(ReportRow {
            iteration: field(0)?.parse().map_err(|_| bad("iteration"))?,
            metric: field(1)?.to_string(),
            mean: field(2)?.parse().map_err(|_| bad("mean"))?,
            n_queries: field(3)?.parse().map_err(|_| bad("n_queries"))?,
            coverage: field(4)?.parse().map_err(|_| bad("coverage"))?,
        });
    }
    Ok(rows)
}
