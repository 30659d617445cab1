//! Rebuilds every emitted CSV from the stored per-arm metrics and theorem
//! reports and checks it byte for byte against the file on disk.

use assist_core::theory::TheoremReport;
use serde::Serialize;
use serde_json::json;

use crate::error::{CliError, Result};
use crate::manifest::outputs_intact;
use crate::runner::Runner;
use crate::table::{read_csv, SweepTable};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvCheck {
    pub file: String,
    pub rows: usize,
    pub identical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub config_hash: String,
    pub checks: Vec<CsvCheck>,
    /// Stages whose recorded outputs no longer match the files.
    pub modified_stages: Vec<String>,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.modified_stages.is_empty() && self.checks.iter().all(|c| c.identical)
    }
}

pub fn report(r: &mut Runner) -> Result<Report> {
    let mut checks = Vec::new();
    let mut modified = Vec::new();
    for (name, rec) in &r.manifest.stages {
        if name == "report" {
            continue;
        }
        if !outputs_intact(&r.root, rec) {
            modified.push(name.clone());
        }
        for rel in rec.outputs.keys() {
            let stored = || std::fs::read(r.path(rel)).map_err(|e| CliError::io(r.path(rel), e));
            let rebuilt = if let Some(base) = rel.strip_suffix(".rows.json") {
                let table: SweepTable = serde_json::from_slice(&stored()?)?;
                Some((format!("{base}.csv"), table.render(&|e| r.metrics(e))?))
            } else if let Some(dir) = rel.strip_suffix("/report.json").filter(|_| name.starts_with("verify-theorem/")) {
                let t: TheoremReport = serde_json::from_slice(&stored()?)?;
                Some((format!("{dir}/curve.csv"), t.curve_csv().into_bytes()))
            } else {
                None
            };
            if let Some((csv, bytes)) = rebuilt {
                let on_disk = std::fs::read(r.path(&csv)).map_err(|e| CliError::io(r.path(&csv), e))?;
                checks.push(CsvCheck { rows: read_csv(&bytes)?.len(), identical: on_disk == bytes, file: csv });
            }
        }
    }
    let rep = Report { config_hash: r.manifest.config_hash.clone(), checks, modified_stages: modified };
    for c in &rep.checks {
        println!("{} {} ({} rows)", if c.identical { "ok      " } else { "MISMATCH" }, c.file, c.rows);
    }
    for s in &rep.modified_stages {
        println!("MODIFIED {s}");
    }
    let summary = rep.clone();
    let inputs: Vec<String> = r.manifest.stages.keys().filter(|k| *k != "report").cloned().collect();
    if !rep.ok() {
        return Err(CliError::Artifact("stored artifacts do not reproduce the emitted CSVs".into()));
    }
    let rec = crate::manifest::StageRecord {
        key: crate::config::sha256_hex(json!({ "stage": "report", "inputs": inputs.iter().map(|i| (i, r.manifest.stages[i].digest())).collect::<Vec<_>>() }).to_string().as_bytes()),
        inputs,
        outputs: {
            let mut out = crate::manifest::Outputs::new(&r.root);
            out.write_json("report/summary.json", &summary)?;
            out.into_files()
        },
    };
    r.manifest.stages.insert("report".into(), rec);
    r.manifest.save(&r.root)?;
    Ok(rep)
}
