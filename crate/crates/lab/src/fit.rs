//! Least-squares fits over a ladder.

use serde::{Deserialize, Serialize};

use scl_core::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    /// Slope of `log y` against `log x`.
    LoglogSlope,
    /// `y(0)` from `y = y₀ + c·x^p`.
    LimitExtrapolation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub kind: FitKind,
    /// Slope, or the extrapolated limit.
    pub value: f64,
    pub intercept: f64,
    /// Mean squared residual of the linear model.
    pub residual_variance: f64,
    pub points: usize,
}

/// `(slope, intercept, mean squared residual)` of `y ≈ a·x + b`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::Fit("x and y lengths differ".into()));
    }
    if xs.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite data".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("degenerate abscissae".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    Ok((slope, intercept, rss / n))
}

pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<Fit> {
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::Fit("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (slope, intercept, var) = linear_fit(&lx, &ly)?;
    Ok(Fit { kind: FitKind::LoglogSlope, value: slope, intercept, residual_variance: var, points: xs.len() })
}

/// Richardson-style limit assuming `y − y₀ ∝ x^order`.
pub fn limit_extrapolation(xs: &[f64], ys: &[f64], order: f64) -> Result<Fit> {
    let px: Vec<f64> = xs.iter().map(|x| x.powf(order)).collect();
    let (slope, intercept, var) = linear_fit(&px, ys)?;
    Ok(Fit { kind: FitKind::LimitExtrapolation, value: intercept, intercept: slope, residual_variance: var, points: xs.len() })
}

pub fn fit(kind: FitKind, xs: &[f64], ys: &[f64]) -> Result<Fit> {
    match kind {
        FitKind::LoglogSlope => loglog_slope(xs, ys),
        FitKind::LimitExtrapolation => limit_extrapolation(xs, ys, 1.0),
    }
}
