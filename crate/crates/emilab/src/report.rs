//! CSV and JSON serialization of experiment results.

use std::io::Write;

use serde::Serialize;

use crate::harness::{ResultRow, SpectralCheck, SpectralRecord};

pub const RESULT_HEADER: [&str; 13] = [
    "model", "N", "nh", "tau", "eps", "solver", "iterations", "relres", "seconds", "n", "n0", "nGamma", "status",
];

/// Writes the header followed by one line per row.
pub fn write_results<W: Write>(out: W, rows: &[ResultRow]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(RESULT_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn results_to_string(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    write_results(&mut buf, rows).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

#[derive(Serialize)]
struct QuantileRow<'a> {
    check: SpectralCheck,
    nh: usize,
    #[serde(rename = "N")]
    cells: usize,
    k: usize,
    p: f64,
    eig_quantile: f64,
    symbol_quantile: &'a f64,
}

/// One row per quantile pair of every successful record.
pub fn write_quantiles<W: Write>(out: W, records: &[SpectralRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for rec in records {
        if let Ok(report) = &rec.outcome {
            let len = report.eig_quantiles.len();
            for (k, (e, s)) in report.eig_quantiles.iter().zip(&report.symbol_quantiles).enumerate() {
                w.serialize(QuantileRow {
                    check: rec.check,
                    nh: rec.nh,
                    cells: rec.cells,
                    k,
                    p: (k as f64 + 0.5) / len as f64,
                    eig_quantile: *e,
                    symbol_quantile: s,
                })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct SpectralSummary {
    pub check: SpectralCheck,
    pub model: String,
    pub nh: usize,
    #[serde(rename = "N")]
    pub cells: usize,
    pub n: usize,
    pub quantile_distance: Option<f64>,
    pub delta: Option<f64>,
    pub outlier_count: Option<usize>,
    pub outlier_fraction: Option<f64>,
    pub bound: Option<f64>,
    pub test_function_gaps: Vec<(String, f64)>,
    pub error: Option<String>,
}

impl From<&SpectralRecord> for SpectralSummary {
    fn from(rec: &SpectralRecord) -> Self {
        let ok = rec.outcome.as_ref().ok();
        Self {
            check: rec.check,
            model: rec.model.to_string(),
            nh: rec.nh,
            cells: rec.cells,
            n: rec.n,
            quantile_distance: ok.map(|r| r.quantile_distance),
            delta: ok.map(|r| r.delta),
            outlier_count: ok.map(|r| r.outlier_count),
            outlier_fraction: ok.map(|r| r.outlier_fraction()),
            bound: rec.bound,
            test_function_gaps: ok.map(|r| r.test_function_gaps.clone()).unwrap_or_default(),
            error: rec.outcome.as_ref().err().cloned(),
        }
    }
}

/// One JSON object per line.
pub fn summary_json(records: &[SpectralRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(&SpectralSummary::from(r)).expect("summary serializes") + "\n")
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use emi_core::meshgen::Model;

    use crate::config::SolverChoice;

    fn row() -> ResultRow {
        ResultRow {
            model: Model::A,
            cells: 25,
            nh: 32,
            tau: 0.01,
            eps: 1e-4,
            solver: SolverChoice::BlockDiag,
            iterations: 17,
            rel_residual: 5.5e-10,
            seconds: 0.25,
            n: 1,
            n0: 2,
            n_gamma: 3,
            status: "converged".into(),
        }
    }

    #[test]
    fn result_csv_layout() {
        let text = results_to_string(&[row()]);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), RESULT_HEADER.join(","));
        assert_eq!(lines.next().unwrap(), "A,25,32,0.01,0.0001,blockdiag,17,5.5e-10,0.25,1,2,3,converged");
        assert!(lines.next().is_none());
    }

    #[test]
    fn header_only_for_no_rows() {
        assert_eq!(results_to_string(&[]), RESULT_HEADER.join(",") + "\n");
    }

    #[test]
    fn summary_contains_error_for_failed_record() {
        let rec = SpectralRecord {
            check: SpectralCheck::Toeplitz,
            model: Model::A,
            nh: 8,
            cells: 1,
            n: 64,
            bound: None,
            outcome: Err("boom".into()),
        };
        let s = summary_json(&[rec]);
        let v: serde_json::Value = serde_json::from_str(s.trim()).unwrap();
        assert_eq!(v["check"], "toeplitz");
        assert_eq!(v["error"], "boom");
        assert!(v["quantile_distance"].is_null());
    }
}
