//! Growth-model selection for (R, y) series.
//!
//! | Model | Form | Parameters |
//! |-------|------|------------|
//! | constant | y = b | 1 |
//! | log | y = a·ln R + b | 2 |
//! | sqrt | y = a·√R + b | 2 |
//! | linear | y = a·R + b | 2 |
//! | power | y = A·R^β, fitted in log-log | 2 |
//!
//! R² is always computed on the original scale and clamped to [0, 1]. The
//! model with the largest R² wins; candidates within [`TIE_TOLERANCE`] of the
//! best count as tied and the one listed first in the table is reported.

use serde::Serialize;
use thiserror::Error;

pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error("radii and values must be positive and finite")]
    NonpositiveValues,
    #[error("series contains non-finite values")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Model {
    Constant,
    Log,
    Sqrt,
    Linear,
    Power { beta: f64 },
}

impl Model {
    pub fn label(&self) -> &'static str {
        match self {
            Model::Constant => "constant",
            Model::Log => "log",
            Model::Sqrt => "sqrt",
            Model::Linear => "linear",
            Model::Power { .. } => "power",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub r: f64,
    pub y: f64,
    pub fitted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub model: Model,
    /// (a, b) for the affine models, (b) for constant, (A, β) for power.
    pub coefficients: Vec<f64>,
    pub r2: f64,
    pub residuals: Vec<Residual>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthFit {
    pub model: Model,
    pub coefficients: Vec<f64>,
    pub r2: f64,
    pub residuals: Vec<Residual>,
    /// Every candidate, in table order.
    pub candidates: Vec<Candidate>,
}

impl GrowthFit {
    pub fn candidate(&self, label: &str) -> Option<&Candidate> {
        self.candidates.iter().find(|c| c.model.label() == label)
    }

    pub fn power(&self) -> &Candidate {
        self.candidates.last().expect("power candidate is always present")
    }
}

fn check(series: &[(f64, f64)]) -> Result<(), FitError> {
    if series.len() < 4 {
        return Err(FitError::TooFewPoints(series.len()));
    }
    if series.iter().any(|&(r, y)| !(r > 0.0 && y > 0.0 && r.is_finite() && y.is_finite())) {
        return Err(FitError::NonpositiveValues);
    }
    Ok(())
}

/// Least-squares (a, b) for y ≈ a·x + b.
fn affine(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (a, my - a * mx)
}

fn r_squared(ys: &[f64], fitted: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let my = ys.iter().sum::<f64>() / n;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = ys.iter().zip(fitted).map(|(y, f)| (y - f).powi(2)).sum();
    let scale: f64 = ys.iter().map(|y| y * y).sum();
    if ss_tot <= 1e-28 * scale {
        return if ss_res <= 1e-24 * scale { 1.0 } else { 0.0 };
    }
    (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
}

fn candidate(model: Model, coefficients: Vec<f64>, series: &[(f64, f64)], f: impl Fn(f64) -> f64) -> Candidate {
    let fitted: Vec<f64> = series.iter().map(|&(r, _)| f(r)).collect();
    let ys: Vec<f64> = series.iter().map(|s| s.1).collect();
    let r2 = r_squared(&ys, &fitted);
    let residuals = series.iter().zip(&fitted).map(|(&(r, y), &fitted)| Residual { r, y, fitted }).collect();
    Candidate { model, coefficients, r2, residuals }
}

/// Ordinary least-squares line y ≈ a·x + b with its R², for any finite data.
pub fn fit_line(series: &[(f64, f64)]) -> Result<(f64, f64, f64), FitError> {
    if series.len() < 2 {
        return Err(FitError::TooFewPoints(series.len()));
    }
    if series.iter().any(|s| !(s.0.is_finite() && s.1.is_finite())) {
        return Err(FitError::NonFinite);
    }
    let xs: Vec<f64> = series.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = series.iter().map(|s| s.1).collect();
    let (a, b) = affine(&xs, &ys);
    let fitted: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
    Ok((a, b, r_squared(&ys, &fitted)))
}

/// Power law y = A·R^β by log-log least squares.
pub fn fit_power(series: &[(f64, f64)]) -> Result<Candidate, FitError> {
    check(series)?;
    Ok(power(series))
}

fn power(series: &[(f64, f64)]) -> Candidate {
    let lx: Vec<f64> = series.iter().map(|s| s.0.ln()).collect();
    let ly: Vec<f64> = series.iter().map(|s| s.1.ln()).collect();
    let (beta, ln_a) = affine(&lx, &ly);
    let amp = ln_a.exp();
    candidate(Model::Power { beta }, vec![amp, beta], series, |r| amp * r.powf(beta))
}

/// Fits every model and selects the best by R².
pub fn fit_growth(series: &[(f64, f64)]) -> Result<GrowthFit, FitError> {
    check(series)?;
    let ys: Vec<f64> = series.iter().map(|s| s.1).collect();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let mut candidates = vec![candidate(Model::Constant, vec![mean], series, |_| mean)];
    let transforms: [(Model, fn(f64) -> f64); 3] = [(Model::Log, f64::ln), (Model::Sqrt, f64::sqrt), (Model::Linear, |r| r)];
    for (model, g) in transforms {
        let xs: Vec<f64> = series.iter().map(|s| g(s.0)).collect();
        let (a, b) = affine(&xs, &ys);
        candidates.push(candidate(model, vec![a, b], series, |r| a * g(r) + b));
    }
    candidates.push(power(series));
    let best = candidates.iter().map(|c| c.r2).fold(0.0, f64::max);
    let chosen = candidates.iter().find(|c| c.r2 >= best - TIE_TOLERANCE).expect("at least one candidate").clone();
    Ok(GrowthFit { model: chosen.model, coefficients: chosen.coefficients, r2: chosen.r2, residuals: chosen.residuals, candidates })
}
