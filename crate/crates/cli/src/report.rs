//! Verification report model: typed rows, the deterministic CSV writer
//! and the JSON summary.
//!
//! Rows are sorted by (set_id, s, check_id, x) before writing, so a
//! report's bytes depend only on its contents, never on evaluation
//! order. Floats are written in Rust's shortest round-trip decimal form,
//! which is deterministic for identical bit patterns.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// Outcome of one check row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    /// The gated quantity met its tolerance.
    Pass,
    /// The gated quantity missed its tolerance: hard failure.
    Fail,
    /// The check could not be evaluated at this resolution or on this
    /// domain (feasibility guard), which is reported but not failed.
    Flag,
    /// A study data point with no pass/fail semantics; plot fodder.
    Data,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Flag => "flag",
            Status::Data => "data",
        }
    }
}

/// One report row. `margin` is tolerance minus the gated deviation, so a
/// non-negative margin means pass with that much room; study data rows
/// leave the gate columns empty.
#[derive(Clone, Debug)]
pub struct Row {
    pub set_id: String,
    pub n: usize,
    pub s: f64,
    pub h: f64,
    pub check_id: String,
    pub paper_ref: String,
    /// Abscissa of study data points (j, M, t, epsilon); empty otherwise.
    pub x: Option<f64>,
    pub value: Option<f64>,
    pub reference: Option<f64>,
    pub margin: Option<f64>,
    pub tolerance: Option<f64>,
    pub status: Status,
}

impl Row {
    /// A pass/fail row gated on `deviation <= tolerance`.
    #[allow(clippy::too_many_arguments)]
    pub fn gated(
        set_id: &str,
        n: usize,
        s: f64,
        h: f64,
        check_id: &str,
        paper_ref: &str,
        value: f64,
        reference: f64,
        deviation: f64,
        tolerance: f64,
    ) -> Row {
        let status = if deviation <= tolerance { Status::Pass } else { Status::Fail };
        Row {
            set_id: set_id.to_string(),
            n,
            s,
            h,
            check_id: check_id.to_string(),
            paper_ref: paper_ref.to_string(),
            x: None,
            value: Some(value),
            reference: Some(reference),
            margin: Some(tolerance - deviation),
            tolerance: Some(tolerance),
            status,
        }
    }

    /// A study data point (status `data`).
    #[allow(clippy::too_many_arguments)]
    pub fn data_point(
        set_id: &str,
        n: usize,
        s: f64,
        h: f64,
        check_id: &str,
        paper_ref: &str,
        x: f64,
        value: f64,
    ) -> Row {
        Row {
            set_id: set_id.to_string(),
            n,
            s,
            h,
            check_id: check_id.to_string(),
            paper_ref: paper_ref.to_string(),
            x: Some(x),
            value: Some(value),
            reference: None,
            margin: None,
            tolerance: None,
            status: Status::Data,
        }
    }

    /// A feasibility flag row (status `flag`); the reason goes into the
    /// paper_ref-adjacent free slot by convention of the caller.
    pub fn flag(set_id: &str, n: usize, s: f64, h: f64, check_id: &str, paper_ref: &str) -> Row {
        Row {
            set_id: set_id.to_string(),
            n,
            s,
            h,
            check_id: check_id.to_string(),
            paper_ref: paper_ref.to_string(),
            x: None,
            value: None,
            reference: None,
            margin: None,
            tolerance: None,
            status: Status::Flag,
        }
    }
}

/// Fixed CSV header; the column order is part of the format.
pub const REPORT_HEADER: &str =
    "set_id,n,s,h,check_id,paper_ref,x,value,reference,margin,tolerance,status";

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

/// Formats one row as a CSV line. Fields never contain commas or quotes
/// by construction (identifiers and anchors are comma-free), so no
/// escaping is needed.
fn csv_line(row: &Row) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        row.set_id,
        row.n,
        row.s,
        row.h,
        row.check_id,
        row.paper_ref,
        fmt_opt(row.x),
        fmt_opt(row.value),
        fmt_opt(row.reference),
        fmt_opt(row.margin),
        fmt_opt(row.tolerance),
        row.status.as_str()
    )
}

/// Sorts rows into the canonical report order.
pub fn sort_rows(rows: &mut [Row]) {
    rows.sort_by(|a, b| {
        a.set_id
            .cmp(&b.set_id)
            .then(a.s.total_cmp(&b.s))
            .then(a.check_id.cmp(&b.check_id))
            .then(
                a.x.unwrap_or(f64::NEG_INFINITY)
                    .total_cmp(&b.x.unwrap_or(f64::NEG_INFINITY)),
            )
    });
}

/// Writes the report CSV (sorted, header first, trailing newline).
pub fn write_report(path: &Path, rows: &mut Vec<Row>) -> Result<()> {
    sort_rows(rows);
    let mut body = String::from(REPORT_HEADER);
    body.push('\n');
    for row in rows.iter() {
        body.push_str(&csv_line(row));
        body.push('\n');
    }
    fs::write(path, body).with_context(|| format!("writing report {}", path.display()))?;
    Ok(())
}

/// Worst margins of a run: the smallest (most negative first) margins
/// among gated rows, for the summary.
#[derive(Clone, Debug, Serialize)]
pub struct WorstMargin {
    pub check_id: String,
    pub set_id: String,
    pub s: f64,
    pub margin: f64,
}

/// JSON summary of a verification run.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub flagged: usize,
    pub worst_margins: Vec<WorstMargin>,
}

/// Number of worst margins kept in the summary.
pub const WORST_KEEP: usize = 5;

/// Builds the summary from (sorted or unsorted) rows.
pub fn summarize(rows: &[Row]) -> Summary {
    let mut passed = 0;
    let mut failed = 0;
    let mut flagged = 0;
    let mut margins: Vec<WorstMargin> = Vec::new();
    for row in rows {
        match row.status {
            Status::Pass => passed += 1,
            Status::Fail => failed += 1,
            Status::Flag => flagged += 1,
            Status::Data => {}
        }
        if let Some(m) = row.margin {
            margins.push(WorstMargin {
                check_id: row.check_id.clone(),
                set_id: row.set_id.clone(),
                s: row.s,
                margin: m,
            });
        }
    }
    margins.sort_by(|a, b| {
        a.margin
            .total_cmp(&b.margin)
            .then(a.check_id.cmp(&b.check_id))
            .then(a.set_id.cmp(&b.set_id))
            .then(a.s.total_cmp(&b.s))
    });
    margins.truncate(WORST_KEEP);
    Summary { passed, failed, flagged, worst_margins: margins }
}

/// Writes the summary JSON with a trailing newline.
pub fn write_summary(path: &Path, summary: &Summary) -> Result<()> {
    let body = serde_json::to_string_pretty(summary).context("serializing summary")?;
    fs::write(path, body + "\n")
        .with_context(|| format!("writing summary {}", path.display()))?;
    Ok(())
}

/// Exit code of a run per the report contract: 1 if any row failed,
/// otherwise 2 if any row was flagged, otherwise 0.
pub fn exit_code(summary: &Summary) -> i32 {
    if summary.failed > 0 {
        1
    } else if summary.flagged > 0 {
        2
    } else {
        0
    }
}
