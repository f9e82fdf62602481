//! The `report` command: a readable view of a sweep directory.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::CliError;

const SHOWN: [&str; 10] = [
    "cell_id",
    "status",
    "algorithm",
    "d",
    "p",
    "sigma_sq",
    "horizon",
    "mean_regret",
    "std_regret",
    "slope",
];

fn short(field: &str) -> String {
    match field.parse::<f64>() {
        Ok(x) if field.contains('e') => format!("{x:.6}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string(),
        _ => field.to_string(),
    }
}

/// Renders `report.csv` and the verdicts of `summary.json` found in `dir`.
pub fn render(dir: &Path) -> Result<String, CliError> {
    let report = dir.join("report.csv");
    let mut rdr =
        csv::Reader::from_path(&report).map_err(|e| CliError::config(format!("{}: {e}", report.display())))?;
    let headers = rdr.headers().map_err(CliError::config)?.clone();
    let idx: Vec<usize> = SHOWN
        .iter()
        .map(|h| {
            headers
                .iter()
                .position(|x| x == *h)
                .ok_or_else(|| CliError::config(format!("{}: missing column `{h}`", report.display())))
        })
        .collect::<Result<_, _>>()?;
    let mut table: Vec<Vec<String>> = vec![SHOWN.iter().map(|s| s.to_string()).collect()];
    for rec in rdr.records() {
        let rec = rec.map_err(CliError::config)?;
        table.push(idx.iter().map(|&i| short(rec.get(i).unwrap_or(""))).collect());
    }
    let widths: Vec<usize> = (0..SHOWN.len())
        .map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &table {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(v, w)| format!("{v:>w$}")).collect();
        writeln!(out, "{}", cells.join("  ").trim_end()).expect("write to string");
    }

    let summary = dir.join("summary.json");
    if let Ok(text) = std::fs::read_to_string(&summary) {
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", summary.display())))?;
        writeln!(out).expect("write to string");
        if let Some(checks) = v["theorem_checks"].as_array() {
            for c in checks {
                let val = c["value"].as_f64().map_or("null".to_string(), |x| format!("{x:.4}"));
                writeln!(
                    out,
                    "{:<4} {} {} d={} p={} sigma_sq={}: value {} ({})",
                    c["verdict"].as_str().unwrap_or("?"),
                    c["check"].as_str().unwrap_or("?"),
                    c["algorithm"].as_str().unwrap_or("-"),
                    c["d"],
                    c["p"],
                    c["sigma_sq"],
                    val,
                    c["expected"].as_str().unwrap_or(""),
                )
                .expect("write to string");
            }
        }
        writeln!(out, "cells ok: {}, failed: {}", v["cells_ok"], v["cells_failed"]).expect("write to string");
    }
    Ok(out)
}
