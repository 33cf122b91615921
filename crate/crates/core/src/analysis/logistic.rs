//! Logistic regression by Newton-Raphson (IRLS) with an optional ridge.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::design::Design;
use crate::error::{Error, Result};
use crate::math::{sigmoid, softplus};

pub const GRADIENT_TOLERANCE: f64 = 1e-8;
pub const MAX_ITERATIONS: u32 = 100;
/// Coefficient magnitude treated as a sign of (quasi-)separation.
pub const SEPARATION_BOUND: f64 = 30.0;
/// Ridge used when refitting a separated problem.
pub const SEPARATION_RIDGE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedLinearModel {
    /// Design column names, intercept included.
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    /// From the inverse penalised Hessian at the solution.
    pub std_errors: Vec<f64>,
    pub converged: bool,
    pub iterations: u32,
    /// Unpenalised log-likelihood at the solution.
    pub log_likelihood: f64,
    pub gradient_norm: f64,
    pub ridge: f64,
    /// Set when a coefficient exceeded the separation bound and the model
    /// was refitted with a small ridge.
    pub separation: bool,
}

impl FittedLinearModel {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.coefficients[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.std_errors[i])
    }

    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum()
    }

    pub fn predict_proba(&self, design: &Design) -> Vec<f64> {
        (0..design.n_rows)
            .map(|i| sigmoid(self.linear_predictor(design.row(i))))
            .collect()
    }
}

fn penalised(design: &Design, j: usize) -> bool {
    !(design.has_intercept && j == 0)
}

/// Bernoulli log-likelihood of labels under coefficients `beta`.
pub fn log_likelihood(design: &Design, labels: &[u8], beta: &[f64]) -> f64 {
    (0..design.n_rows)
        .map(|i| {
            let eta: f64 = design.row(i).iter().zip(beta).map(|(x, b)| x * b).sum();
            // y*eta - log(1 + e^eta)
            f64::from(labels[i]) * eta - softplus(eta)
        })
        .sum()
}

/// Score vector (gradient of the log-likelihood) `X^T (y - p)`.
pub fn score(design: &Design, labels: &[u8], beta: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; design.n_cols()];
    for i in 0..design.n_rows {
        let row = design.row(i);
        let eta: f64 = row.iter().zip(beta).map(|(x, b)| x * b).sum();
        let r = f64::from(labels[i]) - sigmoid(eta);
        for (gj, x) in g.iter_mut().zip(row) {
            *gj += r * x;
        }
    }
    g
}

fn penalised_objective(design: &Design, labels: &[u8], beta: &[f64], ridge: f64) -> f64 {
    let penalty: f64 = beta
        .iter()
        .enumerate()
        .filter(|(j, _)| penalised(design, *j))
        .map(|(_, b)| b * b)
        .sum();
    log_likelihood(design, labels, beta) - 0.5 * ridge * penalty
}

/// Fit by Newton iterations until the penalised score norm drops below
/// [`GRADIENT_TOLERANCE`] or [`MAX_ITERATIONS`] is reached.
pub fn fit_logistic_irls(design: &Design, labels: &[u8], ridge: f64) -> Result<FittedLinearModel> {
    if labels.len() != design.n_rows {
        return Err(Error::InvalidParameter("labels and design rows differ".into()));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::InvalidParameter("ridge must be a finite value >= 0".into()));
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(Error::InvalidParameter("labels must be 0 or 1".into()));
    }
    let positives = labels.iter().filter(|&&y| y == 1).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass);
    }

    match newton(design, labels, ridge)? {
        Fit::Done(m) => Ok(m),
        Fit::Separated if ridge < SEPARATION_RIDGE => match newton(design, labels, SEPARATION_RIDGE)? {
            Fit::Done(mut m) | Fit::Bounded(mut m) => {
                m.separation = true;
                Ok(m)
            }
            Fit::Separated => unreachable!("a bounded refit always completes"),
        },
        Fit::Separated => unreachable!("a penalised fit never reports separation"),
        Fit::Bounded(mut m) => {
            m.separation = true;
            Ok(m)
        }
    }
}

enum Fit {
    Done(FittedLinearModel),
    /// Coefficients escaped the separation bound without a ridge large
    /// enough to hold them.
    Separated,
    /// Escaped the bound under the separation ridge; returned as is.
    Bounded(FittedLinearModel),
}

fn newton(design: &Design, labels: &[u8], ridge: f64) -> Result<Fit> {
    let n = design.n_rows;
    let p = design.n_cols();
    let mut beta = vec![0.0; p];
    if design.has_intercept {
        let rate = labels.iter().filter(|&&y| y == 1).count() as f64 / n as f64;
        beta[0] = libm::log(rate / (1.0 - rate));
    }

    let mut objective = penalised_objective(design, labels, &beta, ridge);
    let mut iterations = 0;
    let mut converged = false;
    let mut hessian = DMatrix::<f64>::zeros(p, p);
    let mut gradient = DVector::<f64>::zeros(p);
    loop {
        assemble(design, labels, &beta, ridge, &mut gradient, &mut hessian);
        let gnorm = gradient.norm();
        if gnorm < GRADIENT_TOLERANCE {
            converged = true;
        }
        if converged || iterations >= MAX_ITERATIONS {
            let chol = hessian.clone().cholesky().ok_or(Error::RankDeficient)?;
            let inverse = chol.inverse();
            let std_errors = (0..p).map(|j| libm::sqrt(inverse[(j, j)].max(0.0))).collect();
            let model = FittedLinearModel {
                names: design.names.clone(),
                coefficients: beta.clone(),
                std_errors,
                converged,
                iterations,
                log_likelihood: log_likelihood(design, labels, &beta),
                gradient_norm: gnorm,
                ridge,
                separation: false,
            };
            return Ok(if beta.iter().any(|b| b.abs() > SEPARATION_BOUND) {
                Fit::Bounded(model)
            } else {
                Fit::Done(model)
            });
        }

        let chol = match hessian.clone().cholesky() {
            Some(c) => c,
            None if ridge == 0.0 => return Err(Error::RankDeficient),
            None => return Err(Error::InvalidParameter("penalised Hessian is not positive definite".into())),
        };
        let step = chol.solve(&gradient);

        // Halve the step until the penalised objective does not decrease
        // beyond rounding.
        let slack = 1e-12 * (1.0 + objective.abs());
        let mut scale = 1.0;
        let mut candidate = vec![0.0; p];
        loop {
            for j in 0..p {
                candidate[j] = beta[j] + scale * step[j];
            }
            let value = penalised_objective(design, labels, &candidate, ridge);
            if value >= objective - slack {
                beta.copy_from_slice(&candidate);
                objective = value;
                break;
            }
            if scale < 1e-10 {
                break;
            }
            scale *= 0.5;
        }
        iterations += 1;

        if ridge < SEPARATION_RIDGE && beta.iter().any(|b| b.abs() > SEPARATION_BOUND) {
            return Ok(Fit::Separated);
        }
    }
}

/// Penalised gradient and negative Hessian (`X^T W X + ridge * I`).
fn assemble(
    design: &Design,
    labels: &[u8],
    beta: &[f64],
    ridge: f64,
    gradient: &mut DVector<f64>,
    hessian: &mut DMatrix<f64>,
) {
    let p = design.n_cols();
    gradient.fill(0.0);
    // Accumulate the upper triangle in a flat buffer, then mirror.
    let mut upper = vec![0.0; p * p];
    for i in 0..design.n_rows {
        let row = design.row(i);
        let eta: f64 = row.iter().zip(beta).map(|(x, b)| x * b).sum();
        let mu = sigmoid(eta);
        let r = f64::from(labels[i]) - mu;
        let w = mu * (1.0 - mu);
        for a in 0..p {
            let xa = row[a];
            if xa == 0.0 {
                continue;
            }
            gradient[a] += r * xa;
            let wx = w * xa;
            let dst = &mut upper[a * p..(a + 1) * p];
            for b in a..p {
                dst[b] += wx * row[b];
            }
        }
    }
    for a in 0..p {
        for b in a..p {
            hessian[(a, b)] = upper[a * p + b];
            hessian[(b, a)] = upper[a * p + b];
        }
    }
    for j in 0..p {
        if penalised(design, j) {
            gradient[j] -= ridge * beta[j];
            hessian[(j, j)] += ridge;
        }
    }
}
