use std::fmt::Write as _;

use super::{AggregateRow, ResultsTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
    Jsonl,
}

impl TableFormat {
    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "csv" => Some(TableFormat::Csv),
            "markdown" | "md" => Some(TableFormat::Markdown),
            "jsonl" => Some(TableFormat::Jsonl),
            _ => None,
        }
    }
}

const HEADER: [&str; 11] = [
    "arm", "nc", "dac", "ttc", "comf", "ep", "pdms", "ds", "sr", "eff", "comfness",
];
const MD_HEADER: [&str; 12] = [
    "ID",
    "Navigation",
    "NC",
    "DAC",
    "TTC",
    "Comf.",
    "EP",
    "PDMS",
    "DS",
    "SR (%)",
    "Eff.",
    "Comfness",
];

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn numbers(a: &AggregateRow) -> [String; 10] {
    [
        format!("{:.4}", a.nc),
        format!("{:.4}", a.dac),
        format!("{:.4}", a.ttc),
        format!("{:.4}", a.comf),
        format!("{:.4}", a.ep),
        format!("{:.4}", a.pdms),
        format!("{:.2}", a.driving_score),
        format!("{:.2}", a.success_rate),
        format!("{:.2}", a.efficiency),
        format!("{:.2}", a.comfortness),
    ]
}

/// Aggregate rows as CSV or markdown; JSONL holds one metric report per
/// successful cell.
pub fn emit_table(results: &ResultsTable, format: TableFormat) -> String {
    let mut out = String::new();
    match format {
        TableFormat::Csv => {
            out.push_str(&HEADER.join(","));
            out.push('\n');
            for a in &results.aggregates {
                let mut line = vec![csv_field(&a.arm)];
                line.extend(numbers(a));
                out.push_str(&line.join(","));
                out.push('\n');
            }
        }
        TableFormat::Markdown => {
            let _ = writeln!(out, "| {} |", MD_HEADER.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(MD_HEADER.len()));
            for a in &results.aggregates {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} |",
                    a.arm_index,
                    a.arm.replace('|', "\\|"),
                    numbers(a).join(" | ")
                );
            }
        }
        TableFormat::Jsonl => {
            for r in &results.rows {
                if let Ok(m) = &r.outcome {
                    out.push_str(&serde_json::to_string(m).expect("reports serialize"));
                    out.push('\n');
                }
            }
        }
    }
    out
}

/// Every cell, including failed ones with their error text.
pub fn emit_rows_csv(results: &ResultsTable) -> String {
    let mut out = String::from(
        "scenario,arm,seed,status,nc,dac,ttc,comf,ep,pdms,ds,success,eff,comfness,error\n",
    );
    for r in &results.rows {
        let mut line = vec![
            csv_field(&r.scenario_id),
            csv_field(&r.arm),
            r.seed.to_string(),
        ];
        match &r.outcome {
            Ok(m) => {
                line.push("ok".into());
                for v in [m.sub.nc, m.sub.dac, m.sub.ttc, m.sub.comf, m.sub.ep, m.pdms] {
                    line.push(format!("{v:.4}"));
                }
                line.push(format!("{:.2}", m.closed.driving_score));
                line.push(m.closed.success.to_string());
                line.push(format!("{:.2}", m.closed.efficiency));
                line.push(format!("{:.2}", m.closed.comfortness));
                line.push(String::new());
            }
            Err(e) => {
                line.push("failed".into());
                line.extend(std::iter::repeat_n(String::new(), 10));
                line.push(csv_field(e));
            }
        }
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
