//! Scaling fits of memory times against system size or temperature.

use super::stats::linear_fit;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("insufficient data: {0} support points, need at least 3")]
    InsufficientData(usize),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitModel {
    pub slope: f64,
    pub intercept: f64,
    pub rss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreferredModel {
    /// `ln τ = a + b·x`
    Linear,
    /// `ln τ = a + b·ln x`
    Logarithmic,
}

/// Least-squares fits of `ln τ` against `x` and against `ln x`, flagging
/// the model with the smaller residual sum. No extrapolation is performed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingResult {
    pub linear: FitModel,
    pub logarithmic: FitModel,
    pub preferred: PreferredModel,
    pub support: usize,
    /// The fitted (x, ln τ) points.
    pub points: Vec<(f64, f64)>,
}

/// Fits both candidate models through `(x, τ)` support points.
pub fn fit_scaling(points: &[(f64, f64)]) -> Result<ScalingResult, FitError> {
    if points.len() < 3 {
        return Err(FitError::InsufficientData(points.len()));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ln_tau: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let ln_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let (ls, li, lr) = linear_fit(&x, &ln_tau);
    let (gs, gi, gr) = linear_fit(&ln_x, &ln_tau);
    Ok(ScalingResult {
        linear: FitModel { slope: ls, intercept: li, rss: lr },
        logarithmic: FitModel { slope: gs, intercept: gi, rss: gr },
        preferred: if lr <= gr { PreferredModel::Linear } else { PreferredModel::Logarithmic },
        support: points.len(),
        points: x.into_iter().zip(ln_tau).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth_prefers_the_linear_model() {
        let pts: Vec<(f64, f64)> =
            [8.0f64, 10.0, 12.0, 16.0].iter().map(|&l| (l, (0.7 * l).exp())).collect();
        let fit = fit_scaling(&pts).unwrap();
        assert_eq!(fit.preferred, PreferredModel::Linear);
        assert!((fit.linear.slope - 0.7).abs() < 1e-6);
    }

    #[test]
    fn polynomial_growth_prefers_the_logarithmic_model() {
        let pts: Vec<(f64, f64)> =
            [8.0f64, 10.0, 12.0, 16.0].iter().map(|&l| (l, l.powi(3))).collect();
        let fit = fit_scaling(&pts).unwrap();
        assert_eq!(fit.preferred, PreferredModel::Logarithmic);
        assert!((fit.logarithmic.slope - 3.0).abs() < 1e-6);
    }

    #[test]
    fn too_few_points_is_an_error() {
        assert!(matches!(
            fit_scaling(&[(1.0, 1.0), (2.0, 2.0)]),
            Err(FitError::InsufficientData(2))
        ));
    }
}
