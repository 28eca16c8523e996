use serde::Serialize;

use crate::error::{Error, Result};

/// Least-squares line through `points`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<(f64, f64)>,
}

/// Ordinary least squares `y = intercept + slope x`.
pub fn ols(points: &[(f64, f64)]) -> Result<RegressionResult> {
    if points.len() < 2 {
        return Err(Error::Regression(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Regression("non-finite coordinate".into()));
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = points.iter().map(|(_, y)| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Regression("all x coordinates coincide".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(RegressionResult {
        slope,
        intercept: my - slope * mx,
        r_squared,
        points: points.to_vec(),
    })
}

/// OLS on `(log10 x, log10 y)`; every coordinate must be positive.
pub fn fit_log_log(xs: &[f64], ys: &[f64]) -> Result<RegressionResult> {
    if xs.len() != ys.len() {
        return Err(Error::Regression("x and y lengths differ".into()));
    }
    if let Some(i) = xs.iter().zip(ys).position(|(x, y)| *x <= 0.0 || *y <= 0.0) {
        return Err(Error::Regression(format!(
            "point {i} = ({}, {}) has a non-positive coordinate",
            xs[i], ys[i]
        )));
    }
    let points: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x.log10(), y.log10()))
        .collect();
    ols(&points)
}
