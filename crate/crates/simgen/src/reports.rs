//! JSON and flat CSV writers for analysis reports.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use simgen_core::analysis::reports::{PrevalenceRow, RecoveryRow};
use simgen_core::analysis::{DegradationRow, DegradationTable, PrevalenceReport, RecoveryReport};

use crate::error::{CliError, CliResult};

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn csv_string<T: Serialize>(rows: impl IntoIterator<Item = T>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("flat rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
}

fn write(path: &Path, contents: &str) -> CliResult<PathBuf> {
    fs::write(path, contents).map_err(|e| CliError::write(path, e))?;
    Ok(path.to_path_buf())
}

#[derive(Serialize)]
struct RecoveryCsvRow<'a> {
    term: &'a str,
    role: &'a str,
    true_effect: f64,
    recovered_effect: f64,
    std_error: f64,
    absolute_error: f64,
    relative_error: Option<f64>,
}

pub fn recovery_csv(report: &RecoveryReport) -> String {
    fn flat<'a>(r: &'a RecoveryRow, role: &'a str) -> RecoveryCsvRow<'a> {
        RecoveryCsvRow {
            term: &r.term,
            role,
            true_effect: r.true_effect,
            recovered_effect: r.recovered_effect,
            std_error: r.std_error,
            absolute_error: r.absolute_error,
            relative_error: r.relative_error,
        }
    }
    let rows: Vec<RecoveryCsvRow> = report
        .rows
        .iter()
        .map(|r| flat(r, "predictive"))
        .chain(report.noise_rows.iter().map(|r| flat(r, "noise")))
        .collect();
    csv_string(rows)
}

pub fn write_recovery(dir: &Path, report: &RecoveryReport) -> CliResult<Vec<PathBuf>> {
    Ok(vec![
        write(&dir.join("recovery.json"), &to_json(report))?,
        write(&dir.join("recovery.csv"), &recovery_csv(report))?,
    ])
}

pub fn prevalence_csv(report: &PrevalenceReport) -> String {
    csv_string::<&PrevalenceRow>(&report.rows)
}

pub fn write_prevalence(dir: &Path, report: &PrevalenceReport) -> CliResult<Vec<PathBuf>> {
    Ok(vec![
        write(&dir.join("prevalence.json"), &to_json(report))?,
        write(&dir.join("prevalence.csv"), &prevalence_csv(report))?,
    ])
}

#[derive(Serialize)]
struct TrialCsvRow<'a> {
    model: &'a str,
    interaction_sd: f64,
    trial: usize,
    seed: u64,
    holdout_sites: String,
    holdout_attempts: u32,
    internal_auroc: f64,
    external_auroc: f64,
    degradation: f64,
    n_internal: usize,
    n_external: usize,
}

pub fn degradation_csv(table: &DegradationTable) -> String {
    csv_string::<&DegradationRow>(&table.rows)
}

/// One row per trial; held-out sites joined with `;`.
pub fn trials_csv(table: &DegradationTable) -> String {
    csv_string(table.trials.iter().map(|t| TrialCsvRow {
        model: &t.model,
        interaction_sd: t.interaction_sd,
        trial: t.trial,
        seed: t.seed,
        holdout_sites: t
            .holdout_sites
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(";"),
        holdout_attempts: t.holdout_attempts,
        internal_auroc: t.internal_auroc,
        external_auroc: t.external_auroc,
        degradation: t.degradation,
        n_internal: t.n_internal,
        n_external: t.n_external,
    }))
}

pub fn write_degradation(dir: &Path, table: &DegradationTable) -> CliResult<Vec<PathBuf>> {
    Ok(vec![
        write(&dir.join("degradation.json"), &to_json(table))?,
        write(&dir.join("degradation.csv"), &degradation_csv(table))?,
        write(&dir.join("trials.csv"), &trials_csv(table))?,
    ])
}
