//! Sweep tables: CSV rows rebuilt from per-arm metrics, plus a
//! declarative plot description next to each CSV.

use assist_core::metrics::MetricsReport;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Which arm evaluation fills each row of a sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub name: String,
    pub label_columns: Vec<String>,
    pub rows: Vec<SweepRow>,
    pub plot: PlotSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub labels: Vec<String>,
    /// Eval stage whose `metrics.json` supplies the numbers.
    pub eval: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub title: String,
    pub kind: String,
    pub data: String,
    pub x: Axis,
    pub y: Axis,
    pub series: Vec<Series>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_by: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub column: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub column: String,
    pub label: String,
}

pub const METRIC_COLUMNS: [&str; 3] = ["jga", "jta", "slot_acc"];

pub fn metric_series() -> Vec<Series> {
    [("jga", "joint goal accuracy"), ("jta", "joint turn accuracy"), ("slot_acc", "slot accuracy")]
        .iter()
        .map(|(c, l)| Series { column: c.to_string(), label: l.to_string() })
        .collect()
}

impl SweepTable {
    pub fn csv_file(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn rows_file(&self) -> String {
        format!("{}.rows.json", self.name)
    }

    pub fn plot_file(&self) -> String {
        format!("{}.plot.json", self.name)
    }

    /// CSV bytes; `metrics` maps an eval stage to its report.
    pub fn render(&self, metrics: &dyn Fn(&str) -> Result<MetricsReport>) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header: Vec<&str> = self.label_columns.iter().map(String::as_str).chain(METRIC_COLUMNS).collect();
        w.write_record(&header).map_err(csv_err)?;
        for row in &self.rows {
            if row.labels.len() != self.label_columns.len() {
                return Err(CliError::Artifact(format!("{}: row labels do not match the columns", self.name)));
            }
            let m = metrics(&row.eval)?;
            let mut rec = row.labels.clone();
            rec.extend([m.joint_goal_accuracy, m.joint_turn_accuracy, m.slot_accuracy].map(|x| x.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| CliError::Artifact(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Artifact(e.to_string())
}

/// Rows of a CSV file as string records keyed by header.
pub fn read_csv(bytes: &[u8]) -> Result<Vec<std::collections::BTreeMap<String, String>>> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().map_err(csv_err)?.clone();
    r.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err)?;
            Ok(header.iter().zip(rec.iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect())
        })
        .collect()
}
