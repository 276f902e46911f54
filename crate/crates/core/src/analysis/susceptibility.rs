//! `chi(lambda) = int tau^_t(0) dt` and the fit `chi = C (lambda_c - lambda)^{-gamma}`.

use serde::Serialize;

use crate::analysis::fit::{linear_fit, rms_residual, slope_stderr};
use crate::error::{Error, Result};
use crate::field::SpaceTimeField;

/// `eps sum_n tau^_n(0)` up to the horizon.
pub fn susceptibility(tau: &SpaceTimeField) -> f64 {
    tau.eps * (0..=tau.n_max).map(|n| tau.mass(n)).sum::<f64>()
}

#[derive(Debug, Clone, Serialize)]
pub struct SusceptibilityFit {
    pub c: f64,
    pub gamma: f64,
    pub gamma_stderr: f64,
    /// Log residuals per sample.
    pub residuals: Vec<f64>,
    pub rms: f64,
}

/// Log-log fit over `(lambda, chi)` samples strictly below `lambda_c`.
pub fn susceptibility_fit(samples: &[(f64, f64)], lambda_c: f64) -> Result<SusceptibilityFit> {
    if let Some((l, _)) = samples.iter().find(|(l, _)| *l >= lambda_c) {
        return Err(Error::validation(
            "lambda_grid",
            format!("{l} is not below lambda_c = {lambda_c}"),
        ));
    }
    if samples.iter().any(|(_, c)| !(*c > 0.0)) {
        return Err(Error::validation("chi", "values must be positive"));
    }
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .map(|(l, c)| ((lambda_c - l).ln(), c.ln()))
        .collect();
    let (slope, intercept) = linear_fit(&pts)
        .ok_or_else(|| Error::IllConditioned("lambda grid has a single distance".into()))?;
    Ok(SusceptibilityFit {
        c: intercept.exp(),
        gamma: -slope,
        gamma_stderr: slope_stderr(&pts, slope, intercept),
        residuals: pts.iter().map(|(x, y)| y - slope * x - intercept).collect(),
        rms: rms_residual(&pts, slope, intercept),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::make_uniform_kernel;
    use crate::lace::lace_constants;
    use crate::model::ModelParams;

    #[test]
    fn random_walk_closed_form() {
        let grid: Vec<(f64, f64)> = (1..=9).map(|i| 0.1 * i as f64).map(|l| (l, 1.0 / (1.0 - l))).collect();
        let fit = susceptibility_fit(&grid, 1.0).unwrap();
        assert!((fit.c - 1.0).abs() < 1e-6 && (fit.gamma - 1.0).abs() < 1e-6);
    }

    #[test]
    fn random_walk_identity() {
        // 1 - lambda - (1/eps) sum pi^ p^ reduces to 1 - lambda when pi = delta
        for lambda in [0.1, 0.5, 0.9] {
            let p = ModelParams::new(make_uniform_kernel(1, 1).unwrap(), 0.5, lambda, 6).unwrap();
            let pi = SpaceTimeField::delta(1, 0.5, 6, p.radius);
            let c = lace_constants(&pi, &p, 1.0).unwrap();
            assert_eq!(c.residual, 1.0 - lambda);
            assert!(((1.0 / c.residual) * (1.0 - lambda) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn truncated_sum_approaches_geometric_value() {
        let p = ModelParams::new(make_uniform_kernel(1, 1).unwrap(), 1.0, 0.5, 40).unwrap();
        let pi = SpaceTimeField::delta(1, 1.0, 40, p.radius);
        let tau = crate::lace::forward_solve(&pi, &p).unwrap();
        let want = (1.0 - 0.5f64.powi(41)) / 0.5;
        assert!((susceptibility(&tau) - want).abs() < 1e-12);
    }

    #[test]
    fn grid_touching_critical_point_rejected() {
        assert!(susceptibility_fit(&[(0.5, 2.0), (1.0, 3.0)], 1.0).is_err());
    }
}
