//! Solver result documents: JSON, CSV, and aligned text tables.
//!
//! The CSV column set is frozen so downstream golden files stay stable:
//! `solver,objective,feasible,certified,csf_evals,acms_ops,total,wall_ms`.

use msdp_core::SolveReport;
use serde::Serialize;
use serde_json::Value;

use crate::format::Domain;

#[derive(Clone, Debug, Serialize)]
pub struct BestDto {
    pub x: Vec<Value>,
    pub f: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CountersDto {
    pub csf: u64,
    pub acms: u64,
    pub total: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportDto {
    pub best: BestDto,
    pub counters: CountersDto,
    pub ne_bound: usize,
    pub certified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RowDto {
    pub solver: String,
    pub wall_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<ReportDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// One instance's comparison section: a row per solver, plus the
/// reconstructed sequence for assembly instances.
#[derive(Clone, Debug, Serialize)]
pub struct InstanceReport {
    pub instance: String,
    pub rows: Vec<RowDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assembly: Option<String>,
}

pub fn report_dto(report: &SolveReport, domain: &Domain) -> ReportDto {
    let x = report.best.values.iter().map(|&s| domain.value_of(s)).collect();
    ReportDto {
        best: BestDto { x, f: report.best.objective.unwrap_or(f64::NAN) },
        counters: CountersDto {
            csf: report.counters.csf_evals,
            acms: report.counters.acms_ops,
            total: report.counters.total(),
        },
        ne_bound: report.ne_bound(),
        certified: report.optimal_certified,
    }
}

pub fn row_ok(solver: &str, wall_ms: f64, report: ReportDto) -> RowDto {
    RowDto { solver: solver.to_string(), wall_ms, report: Some(report), error: None }
}

pub fn row_err(solver: &str, wall_ms: f64, error: String) -> RowDto {
    RowDto { solver: solver.to_string(), wall_ms, report: None, error: Some(error) }
}

pub fn json_document<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("report serialization");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct BenchDoc<'a> {
    bench: &'a [InstanceReport],
}

pub fn bench_document(sections: &[InstanceReport]) -> String {
    json_document(&BenchDoc { bench: sections })
}

pub const CSV_HEADER: &str = "solver,objective,feasible,certified,csf_evals,acms_ops,total,wall_ms";

fn csv_row(row: &RowDto) -> String {
    match &row.report {
        Some(r) => format!(
            "{},{},{},{},{},{},{},{:.3}",
            row.solver,
            r.best.f,
            true,
            r.certified,
            r.counters.csf,
            r.counters.acms,
            r.counters.total,
            row.wall_ms
        ),
        None => format!("{},,{},{},0,0,0,{:.3}", row.solver, false, false, row.wall_ms),
    }
}

pub fn render_csv(sections: &[InstanceReport]) -> String {
    let mut out = String::new();
    for section in sections {
        out.push_str(&format!("# instance: {}\n", section.instance));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for row in &section.rows {
            out.push_str(&csv_row(row));
            out.push('\n');
        }
        if let Some(seq) = &section.assembly {
            out.push_str(&format!("# assembly: {seq}\n"));
        }
    }
    out
}

fn format_x(x: &[Value]) -> String {
    let parts: Vec<String> = x
        .iter()
        .map(|v| match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        })
        .collect();
    format!("[{}]", parts.join(", "))
}

pub fn render_text(sections: &[InstanceReport]) -> String {
    let header = ["solver", "objective", "feasible", "certified", "csf_evals", "acms_ops", "total", "wall_ms"];
    let mut out = String::new();
    for section in sections {
        out.push_str(&format!("instance: {}\n", section.instance));
        let mut grid: Vec<[String; 8]> = vec![header.map(String::from)];
        for row in &section.rows {
            grid.push(match &row.report {
                Some(r) => [
                    row.solver.clone(),
                    format!("{:.6}", r.best.f),
                    String::from("yes"),
                    if r.certified { String::from("yes") } else { String::from("no") },
                    r.counters.csf.to_string(),
                    r.counters.acms.to_string(),
                    r.counters.total.to_string(),
                    format!("{:.3}", row.wall_ms),
                ],
                None => [
                    row.solver.clone(),
                    String::from("-"),
                    String::from("no"),
                    String::from("no"),
                    String::from("-"),
                    String::from("-"),
                    String::from("-"),
                    format!("{:.3}", row.wall_ms),
                ],
            });
        }
        let widths: Vec<usize> = (0..8)
            .map(|c| grid.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        for line in &grid {
            let cells: Vec<String> =
                line.iter().zip(&widths).map(|(cell, w)| format!("{cell:<w$}")).collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        for row in &section.rows {
            match (&row.report, &row.error) {
                (Some(r), _) => {
                    out.push_str(&format!("{} solution: {}\n", row.solver, format_x(&r.best.x)))
                }
                (None, Some(e)) => out.push_str(&format!("{} error: {e}\n", row.solver)),
                _ => {}
            }
        }
        if let Some(seq) = &section.assembly {
            out.push_str(&format!("assembly: {seq}\n"));
        }
        out.push('\n');
    }
    out
}
