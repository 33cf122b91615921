//! Design matrices built from generated datasets.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::config::{term_name, FeatureKind, Transform};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::apply_transform;

pub const INTERCEPT: &str = "(intercept)";

/// Dense row-major design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub names: Vec<String>,
    pub n_rows: usize,
    pub values: Vec<f64>,
    /// Column 0 is a constant 1 and is never penalised.
    pub has_intercept: bool,
}

impl Design {
    pub fn new(names: Vec<String>, values: Vec<f64>, has_intercept: bool) -> Result<Self> {
        let p = names.len();
        if p == 0 || values.len() % p != 0 {
            return Err(Error::InvalidParameter(format!(
                "{} values do not fill rows of {p} columns",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("design matrix has non-finite values".into()));
        }
        Ok(Self {
            n_rows: values.len() / p,
            names,
            values,
            has_intercept,
        })
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_cols();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut values = Vec::with_capacity(rows.len() * self.n_cols());
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        Self {
            names: self.names.clone(),
            n_rows: rows.len(),
            values,
            has_intercept: self.has_intercept,
        }
    }
}

/// What to put in a design built from a dataset.
#[derive(Debug, Clone, Default)]
pub struct DesignOptions {
    pub intercept: bool,
    /// Transforms applied to continuous columns (the generating model's
    /// feature map when recovering effects).
    pub transforms: BTreeMap<String, Transform>,
    /// Restrict to these feature columns; all columns when `None`.
    pub features: Option<Vec<String>>,
    /// One-hot demographic levels, first level as reference.
    pub demographics: bool,
    /// One-hot site indicators for these sites, first listed as reference.
    /// Records from unlisted sites get all-zero indicators.
    pub site_levels: Option<Vec<usize>>,
    /// Include the site index itself as a numeric column named `site`.
    pub site_code: bool,
}

/// Design plus the labels and dataset rows it was built from.
#[derive(Debug, Clone)]
pub struct DesignData {
    pub design: Design,
    pub labels: Vec<u8>,
    /// Source patient index of every design row.
    pub rows: Vec<usize>,
    pub sites: Vec<usize>,
    /// Candidate rows dropped for missing cells.
    pub n_dropped: usize,
}

/// Build a complete-case design at the dataset's outcome timepoint.
///
/// `patients` restricts the candidate rows (all patients when `None`).
pub fn build_design(
    dataset: &Dataset,
    options: &DesignOptions,
    patients: Option<&[usize]>,
) -> Result<DesignData> {
    let fm = &dataset.features;
    let t = dataset.outcome_timepoint;
    let columns: Vec<usize> = match &options.features {
        None => (0..fm.n_columns()).collect(),
        Some(names) => names
            .iter()
            .map(|n| {
                fm.columns
                    .iter()
                    .position(|c| &c.name == n)
                    .ok_or_else(|| Error::InvalidParameter(format!("no feature column '{n}'")))
            })
            .collect::<Result<_>>()?,
    };

    let mut names = Vec::new();
    if options.intercept {
        names.push(String::from(INTERCEPT));
    }
    if options.site_code {
        names.push(String::from("site"));
    }
    if let Some(levels) = &options.site_levels {
        for s in levels.iter().skip(1) {
            names.push(format!("site={s}"));
        }
    }
    if options.demographics {
        for v in &dataset.demographic_variables {
            for level in v.levels.iter().skip(1) {
                names.push(format!("{}={}", v.name, level));
            }
        }
    }
    for &c in &columns {
        let info = &fm.columns[c];
        match info.kind {
            FeatureKind::Continuous => names.push(term_name(&info.name, None)),
            FeatureKind::Categorical => {
                for level in 1..info.n_levels {
                    names.push(term_name(&info.name, Some(level)));
                }
            }
        }
    }

    let transforms: Vec<Option<Transform>> = columns
        .iter()
        .map(|&c| options.transforms.get(&fm.columns[c].name).copied())
        .collect();
    let all: Vec<usize>;
    let candidates = match patients {
        Some(p) => p,
        None => {
            all = (0..fm.n_rows).collect();
            &all
        }
    };

    let p = names.len();
    let mut values = Vec::with_capacity(candidates.len() * p);
    let mut labels = Vec::with_capacity(candidates.len());
    let mut rows = Vec::with_capacity(candidates.len());
    let mut sites = Vec::with_capacity(candidates.len());
    let mut row = vec![0.0; p];
    for &i in candidates {
        if columns.iter().any(|&c| dataset.is_missing(i, t, c)) {
            continue;
        }
        row.iter_mut().for_each(|v| *v = 0.0);
        let mut k = 0;
        if options.intercept {
            row[0] = 1.0;
            k = 1;
        }
        let site = fm.sites[i];
        if options.site_code {
            row[k] = site as f64;
            k += 1;
        }
        if let Some(levels) = &options.site_levels {
            if let Some(pos) = levels.iter().skip(1).position(|&s| s == site) {
                row[k + pos] = 1.0;
            }
            k += levels.len().saturating_sub(1);
        }
        if options.demographics {
            let demo = fm.demographic_levels(i);
            for (v, &level) in dataset.demographic_variables.iter().zip(demo) {
                if level > 0 {
                    row[k + level - 1] = 1.0;
                }
                k += v.levels.len() - 1;
            }
        }
        for (&c, tr) in columns.iter().zip(&transforms) {
            let info = &fm.columns[c];
            let x = fm.value(i, t, c);
            match info.kind {
                FeatureKind::Continuous => {
                    row[k] = tr.map_or(x, |tr| apply_transform(x, tr));
                    k += 1;
                }
                FeatureKind::Categorical => {
                    let level = x as usize;
                    if level > 0 {
                        row[k + level - 1] = 1.0;
                    }
                    k += info.n_levels - 1;
                }
            }
        }
        values.extend_from_slice(&row);
        labels.push(dataset.outcomes[i]);
        rows.push(i);
        sites.push(site);
    }
    let n_dropped = candidates.len() - rows.len();
    if rows.is_empty() {
        return Err(Error::InvalidParameter("no complete-case rows".into()));
    }
    Ok(DesignData {
        design: Design::new(names, values, options.intercept)?,
        labels,
        rows,
        sites,
        n_dropped,
    })
}
