//! Report emitters: aligned-text tables and machine-readable JSON with
//! stable key order, for both session statistics and coverage.

use serde_json::{json, Map, Value};

use crate::analysis::SessionStatistics;
use crate::coverage::CoverageReport;
use crate::openapi::OperationKey;

/// Aligned coverage table, one row per metric.
pub fn coverage_table(report: &CoverageReport) -> String {
    let mut out = String::from("Metric          Coverage\n");
    for (name, _, _, pct) in report.rows() {
        out.push_str(&format!("{name:<14}{:>9}\n", format!("{pct}%")));
    }
    if !report.unmatched.is_empty() {
        out.push_str(&format!("\nUnmatched interactions: {}\n", report.unmatched.len()));
        for entry in &report.unmatched {
            out.push_str(&format!("  {entry}\n"));
        }
    }
    out
}

fn op_str(key: &OperationKey) -> String {
    key.to_string()
}

/// Coverage report as JSON: per metric the covered element list, totals,
/// ratio and rounded percentage. Key order is fixed.
pub fn coverage_json(report: &CoverageReport) -> Value {
    fn metric(covered: Vec<String>, total: usize, ratio: f64, percent: u32) -> Value {
        json!({
            "covered": covered,
            "total": total,
            "ratio": ratio,
            "percent": percent,
        })
    }

    let mut metrics = Map::new();
    metrics.insert(
        "path".into(),
        metric(
            report.paths.covered.iter().cloned().collect(),
            report.paths.total,
            report.paths.ratio(),
            report.paths.percent(),
        ),
    );
    metrics.insert(
        "operation".into(),
        metric(
            report.operations.covered.iter().map(op_str).collect(),
            report.operations.total,
            report.operations.ratio(),
            report.operations.percent(),
        ),
    );
    metrics.insert(
        "status_class".into(),
        metric(
            report
                .status_classes
                .covered
                .iter()
                .map(|(op, class)| format!("{} {class}", op_str(op)))
                .collect(),
            report.status_classes.total,
            report.status_classes.ratio(),
            report.status_classes.percent(),
        ),
    );
    metrics.insert(
        "status".into(),
        metric(
            report
                .statuses
                .covered
                .iter()
                .map(|(op, code)| format!("{} {code}", op_str(op)))
                .collect(),
            report.statuses.total,
            report.statuses.ratio(),
            report.statuses.percent(),
        ),
    );
    metrics.insert(
        "response_type".into(),
        metric(
            report
                .response_types
                .covered
                .iter()
                .map(|(op, media)| format!("{} {media}", op_str(op)))
                .collect(),
            report.response_types.total,
            report.response_types.ratio(),
            report.response_types.percent(),
        ),
    );
    metrics.insert(
        "request_type".into(),
        metric(
            report
                .request_types
                .covered
                .iter()
                .map(|(op, media)| format!("{} {media}", op_str(op)))
                .collect(),
            report.request_types.total,
            report.request_types.ratio(),
            report.request_types.percent(),
        ),
    );
    metrics.insert(
        "parameter".into(),
        metric(
            report
                .parameters
                .covered
                .iter()
                .map(|(op, name, location)| format!("{} {name}@{location}", op_str(op)))
                .collect(),
            report.parameters.total,
            report.parameters.ratio(),
            report.parameters.percent(),
        ),
    );

    json!({
        "metrics": Value::Object(metrics),
        "unmatched": report.unmatched.iter().cloned().collect::<Vec<_>>(),
    })
}

/// Aligned statistics table mirroring the descriptive-statistics layout.
pub fn statistics_table(stats: &SessionStatistics) -> String {
    let mut rows = vec![
        ("Generated Tests", stats.generated),
        ("Successful Tests", stats.successful),
        ("Failed Tests", stats.failed),
        ("N/A (Not Acceptable Tests)", stats.not_acceptable),
        ("Bugs Exposed", stats.bugs_exposed),
        ("Post-Processing (No. of lines edited)", stats.lines_edited),
    ];
    if stats.errored > 0 {
        rows.push(("Errored Tests (no HTTP exchange)", stats.errored));
    }
    let mut out = String::from("Statistic                               Value\n");
    for (label, value) in rows {
        out.push_str(&format!("{label:<39}{value:>6}\n"));
    }
    out
}

pub fn statistics_json(stats: &SessionStatistics) -> Value {
    serde_json::to_value(stats).expect("statistics serialize")
}
