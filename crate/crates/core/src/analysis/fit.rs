//! Ordinary least squares helpers.

/// Least-squares line `y = slope x + intercept`. `None` when the `x` values
/// do not spread.
pub fn linear_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let scale = pts.iter().map(|p| p.0.abs()).fold(0.0, f64::max).max(1.0);
    if sxx <= 1e-24 * scale * scale * n {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Root-mean-square residual of a line fit.
pub fn rms_residual(pts: &[(f64, f64)], slope: f64, intercept: f64) -> f64 {
    if pts.is_empty() {
        return 0.0;
    }
    let ss: f64 = pts
        .iter()
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    (ss / pts.len() as f64).sqrt()
}

/// Standard error of the slope of a line fit.
pub fn slope_stderr(pts: &[(f64, f64)], slope: f64, intercept: f64) -> f64 {
    let n = pts.len();
    if n < 3 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let ss: f64 = pts
        .iter()
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    (ss / (n - 2) as f64 / sxx).sqrt()
}

/// Power-law fit `c n^{-a}` of positive values over the last half of the
/// index range, with the implied tail `sum_{n > n_max} c n^{-a}` (infinite
/// unless `a > 1`).
pub fn power_law_tail(values: &[(usize, f64)], n_max: usize) -> (Option<f64>, Option<f64>) {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .filter(|(n, v)| *n >= (n_max / 2).max(2) && *v > 0.0)
        .map(|(n, v)| ((*n as f64).ln(), v.ln()))
        .collect();
    let (slope, intercept) = match linear_fit(&pts) {
        Some(v) => v,
        None => return (None, None),
    };
    let a = -slope;
    if a <= 1.0 {
        return (Some(a), Some(f64::INFINITY));
    }
    let nn = n_max as f64 + 0.5;
    (Some(a), Some(intercept.exp() * nn.powf(1.0 - a) / (a - 1.0)))
}
