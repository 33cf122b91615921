//! Dataset CSV: one row per patient-timepoint.
//!
//! Columns are `patient_id,site,timepoint`, the demographic variables as
//! level labels, the feature columns, then `outcome`. Continuous values are
//! written with 17 significant digits, categorical features as level
//! indices, and masked cells as empty fields.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use simgen_core::config::FeatureKind;
use simgen_core::dataset::DemographicVariable;
use simgen_core::features::{ColumnInfo, FeatureMatrix};
use simgen_core::missing::MissingMask;
use simgen_core::Dataset;

use crate::error::{CliError, CliResult};
use crate::metadata::Metadata;

pub fn header(ds: &Dataset) -> Vec<String> {
    let mut h: Vec<String> = ["patient_id", "site", "timepoint"].map(String::from).to_vec();
    h.extend(ds.demographic_variables.iter().map(|v| v.name.clone()));
    h.extend(ds.features.columns.iter().map(|c| c.name.clone()));
    h.push("outcome".into());
    h
}

pub fn format_value(x: f64, kind: FeatureKind) -> String {
    match kind {
        FeatureKind::Continuous => format!("{x:.16e}"),
        FeatureKind::Categorical => format!("{}", x as usize),
    }
}

pub fn write_dataset_to<W: Write>(out: W, ds: &Dataset) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(ds))?;
    let fm = &ds.features;
    let mut record: Vec<String> = Vec::new();
    for i in 0..fm.n_rows {
        for t in 0..fm.n_timepoints {
            record.clear();
            record.push(i.to_string());
            record.push(fm.sites[i].to_string());
            record.push(t.to_string());
            for (v, &level) in ds.demographic_variables.iter().zip(fm.demographic_levels(i)) {
                record.push(v.levels[level].clone());
            }
            for (c, info) in fm.columns.iter().enumerate() {
                record.push(match ds.observed(i, t, c) {
                    Some(x) => format_value(x, info.kind),
                    None => String::new(),
                });
            }
            record.push(ds.outcomes[i].to_string());
            w.write_record(&record)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset(path: &Path, ds: &Dataset) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::write(path, e))?;
    write_dataset_to(BufWriter::new(file), ds).map_err(|e| CliError::write(path, e))
}

fn bad(line: u64, message: impl std::fmt::Display) -> CliError {
    CliError::input(format!("data line {line}: {message}"))
}

/// Rebuild a dataset from CSV, taking its schema from the metadata.
///
/// Masked cells come back as NaN; linear predictors and calibration are not
/// stored in the CSV and are left empty.
pub fn read_dataset_from<R: std::io::Read>(input: R, meta: &Metadata) -> CliResult<Dataset> {
    let cfg = &meta.config_echo;
    let columns: Vec<ColumnInfo> = cfg.features.iter().map(ColumnInfo::from_spec).collect();
    let demographic_variables: Vec<DemographicVariable> = cfg
        .subgroups
        .iter()
        .map(|g| DemographicVariable {
            name: g.variable.clone(),
            levels: g.levels.clone(),
        })
        .collect();
    let n_sites = cfg.n_sites();
    let n_timepoints = cfg.n_timepoints();
    let outcome_timepoint = match &cfg.temporal {
        Some(t) if t.n_timepoints > 1 => match t.outcome_timepoint {
            simgen_core::config::OutcomeTimepoint::First => 0,
            simgen_core::config::OutcomeTimepoint::Last => t.n_timepoints - 1,
        },
        _ => 0,
    };

    let mut r = csv::Reader::from_reader(input);
    let expected = {
        let mut h: Vec<String> = ["patient_id", "site", "timepoint"].map(String::from).to_vec();
        h.extend(demographic_variables.iter().map(|v| v.name.clone()));
        h.extend(columns.iter().map(|c| c.name.clone()));
        h.push("outcome".into());
        h
    };
    let found: Vec<String> = r
        .headers()
        .map_err(|e| CliError::input(format!("cannot read data header: {e}")))?
        .iter()
        .map(String::from)
        .collect();
    if found != expected {
        return Err(CliError::input(format!(
            "data header {found:?} does not match metadata schema {expected:?}"
        )));
    }

    let g = demographic_variables.len();
    let f = columns.len();
    let mut values = Vec::new();
    let mut missing = Vec::new();
    let mut sites = Vec::new();
    let mut demographics = Vec::new();
    let mut outcomes = Vec::new();
    let mut n_records = 0;
    for (k, rec) in r.records().enumerate() {
        let line = k as u64 + 2;
        let rec = rec.map_err(|e| bad(line, e))?;
        n_records += 1;
        let int = |j: usize| -> CliResult<usize> {
            rec[j].parse().map_err(|_| bad(line, format!("'{}' is not an integer", &rec[j])))
        };
        let (patient, site, t) = (int(0)?, int(1)?, int(2)?);
        if patient != k / n_timepoints || t != k % n_timepoints {
            return Err(bad(line, "rows must be ordered by patient then timepoint"));
        }
        if site >= n_sites {
            return Err(bad(line, format!("site {site} out of range")));
        }
        let outcome = match &rec[3 + g + f] {
            "0" => 0u8,
            "1" => 1u8,
            other => return Err(bad(line, format!("outcome '{other}' is not 0 or 1"))),
        };
        if t == 0 {
            sites.push(site);
            outcomes.push(outcome);
            for (j, v) in demographic_variables.iter().enumerate() {
                let label = &rec[3 + j];
                let level = v
                    .levels
                    .iter()
                    .position(|l| l == label)
                    .ok_or_else(|| bad(line, format!("unknown level '{label}' for {}", v.name)))?;
                demographics.push(level);
            }
        } else if sites[patient] != site || outcomes[patient] != outcome {
            return Err(bad(line, "site and outcome must repeat across timepoints"));
        }
        for (c, info) in columns.iter().enumerate() {
            let cell = &rec[3 + g + c];
            if cell.is_empty() {
                values.push(f64::NAN);
                missing.push(true);
                continue;
            }
            let x: f64 = cell
                .parse()
                .map_err(|_| bad(line, format!("'{cell}' is not a number")))?;
            if info.kind == FeatureKind::Categorical
                && !(x.fract() == 0.0 && x >= 0.0 && (x as usize) < info.n_levels)
            {
                return Err(bad(line, format!("'{cell}' is not a level of {}", info.name)));
            }
            values.push(x);
            missing.push(false);
        }
    }
    let n_rows = outcomes.len();
    if n_rows * n_timepoints != n_records {
        return Err(CliError::input("data ends mid-patient"));
    }

    Ok(Dataset {
        features: FeatureMatrix {
            columns,
            n_rows,
            n_timepoints,
            values,
            sites,
            demographics,
            n_demographics: g,
        },
        missing: MissingMask { cells: missing },
        demographic_variables,
        n_sites,
        outcome_timepoint,
        outcomes,
        linear_predictor: Vec::new(),
        calibration: None,
        warnings: meta.warnings.clone(),
    })
}

pub fn read_dataset(path: &Path, meta: &Metadata) -> CliResult<Dataset> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_dataset_from(std::io::BufReader::new(file), meta).map_err(|e| CliError {
        code: e.code,
        message: format!("{}: {}", path.display(), e.message),
    })
}
