//! Joint fit of `tau^_t(k) ~ A exp(-v sigma^2 t |k|^2 / 2d)`.

use serde::Serialize;

use crate::error::{Error, Result};

/// One observation `tau^_t(k)` at a raw wave vector `k`.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingSample {
    pub t: f64,
    pub k: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitOptions {
    /// Largest accepted `kappa^2 / log(2 + t)` with `kappa^2 = sigma^2 t |k|^2`.
    pub smallness: f64,
    /// Smallest accepted spread of the `kappa^2` values.
    pub min_spread: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            smallness: 0.2,
            min_spread: 1e-3,
        }
    }
}

/// Per-time refit used to judge how stable the estimates are.
#[derive(Debug, Clone, Serialize)]
pub struct DriftRow {
    pub t: f64,
    pub a: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingFit {
    pub a: f64,
    pub v: f64,
    /// Euclidean norm of the log residuals.
    pub residual: f64,
    pub t_range: (f64, f64),
    /// Range of the scaled `|kappa|` used.
    pub k_range: (f64, f64),
    pub used: usize,
    /// Samples outside the window or with nonpositive value.
    pub dropped: usize,
    pub per_t: Vec<DriftRow>,
    /// `max_t max(|A_t - A|, |v_t - v|)` over the per-time refits.
    pub drift: f64,
}

/// Plot-ready residual row.
#[derive(Debug, Clone, Serialize)]
pub struct FitRow {
    pub t: f64,
    pub k: f64,
    pub observed: f64,
    pub model: f64,
    pub residual: f64,
}

#[derive(Clone, Copy)]
struct Point {
    t: f64,
    x: f64,
    y: f64,
    kappa2: f64,
}

/// Least squares of `log tau^` on `(1, -sigma^2 t |k|^2 / 2d)`.
fn solve(pts: &[Point], min_spread: f64) -> Result<(f64, f64, f64)> {
    if pts.len() < 2 {
        return Err(Error::IllConditioned(format!("{} usable samples", pts.len())));
    }
    let k_lo = pts.iter().map(|p| p.kappa2).fold(f64::INFINITY, f64::min);
    let k_hi = pts.iter().map(|p| p.kappa2).fold(0.0, f64::max);
    if k_hi - k_lo < min_spread {
        return Err(Error::IllConditioned(format!(
            "kappa^2 range [{k_lo:e}, {k_hi:e}] too narrow"
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.x).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.y).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.x - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.x - mx) * (p.y - my)).sum();
    let v = sxy / sxx;
    let log_a = my - v * mx;
    let res: f64 = pts
        .iter()
        .map(|p| (p.y - log_a - v * p.x).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok((log_a.exp(), v, res))
}

pub fn gaussian_fit(samples: &[ScalingSample], sigma2: f64, opts: FitOptions) -> Result<ScalingFit> {
    let mut pts = Vec::new();
    let mut dropped = 0;
    for s in samples {
        let d = s.k.len() as f64;
        let k2: f64 = s.k.iter().map(|v| v * v).sum();
        let kappa2 = sigma2 * s.t * k2;
        if !(s.value > 0.0) || kappa2 / (2.0 + s.t).ln() > opts.smallness * (1.0 + 1e-12) {
            dropped += 1;
            continue;
        }
        pts.push(Point {
            t: s.t,
            x: -kappa2 / (2.0 * d),
            y: s.value.ln(),
            kappa2,
        });
    }
    let (a, v, residual) = solve(&pts, opts.min_spread)?;
    let mut times: Vec<f64> = pts.iter().map(|p| p.t).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut per_t = Vec::new();
    let mut drift = 0.0f64;
    for &t in &times {
        let sub: Vec<Point> = pts
            .iter()
            .filter(|p| p.t == t)
            .copied()
            .collect();
        if let Ok((at, vt, _)) = solve(&sub, opts.min_spread) {
            drift = drift.max((at - a).abs()).max((vt - v).abs());
            per_t.push(DriftRow { t, a: at, v: vt });
        }
    }
    let kap: Vec<f64> = pts.iter().map(|p| p.kappa2.sqrt()).collect();
    Ok(ScalingFit {
        a,
        v,
        residual,
        t_range: (times[0], *times.last().unwrap()),
        k_range: (
            kap.iter().cloned().fold(f64::INFINITY, f64::min),
            kap.iter().cloned().fold(0.0, f64::max),
        ),
        used: pts.len(),
        dropped,
        per_t,
        drift,
    })
}

/// Residual table of a fit against its samples.
pub fn fit_rows(samples: &[ScalingSample], sigma2: f64, fit: &ScalingFit) -> Vec<FitRow> {
    samples
        .iter()
        .map(|s| {
            let d = s.k.len() as f64;
            let k2: f64 = s.k.iter().map(|v| v * v).sum();
            let model = fit.a * (-fit.v * sigma2 * s.t * k2 / (2.0 * d)).exp();
            FitRow {
                t: s.t,
                k: k2.sqrt(),
                observed: s.value,
                model,
                residual: s.value - model,
            }
        })
        .collect()
}

/// Scaled wave vectors `kappa e_1 / sqrt(sigma^2 t)` with `kappa^2` evenly
/// spaced in `(0, kappa2_max]`.
pub fn scaled_wave_vectors(d: usize, t: f64, sigma2: f64, count: usize, kappa2_max: f64) -> Vec<Vec<f64>> {
    (1..=count)
        .map(|j| {
            let kappa2 = kappa2_max * j as f64 / count as f64;
            let mut k = vec![0.0; d];
            k[0] = (kappa2 / (sigma2 * t)).sqrt();
            k
        })
        .collect()
}

/// Largest `kappa^2` inside the window at every time in `ts`; using it for
/// all times gives each time the same scaled wave vectors.
pub fn common_kappa2(ts: &[f64], smallness: f64) -> f64 {
    let t_min = ts.iter().cloned().fold(f64::INFINITY, f64::min);
    smallness * (2.0 + t_min).ln()
}

/// Samples `f(n, k)` at `t = n eps` on common scaled wave vectors.
pub fn scaled_samples(
    f: impl Fn(usize, &[f64]) -> f64,
    ns: &[usize],
    eps: f64,
    d: usize,
    sigma2: f64,
    count: usize,
    opts: FitOptions,
) -> Vec<ScalingSample> {
    let ts: Vec<f64> = ns.iter().map(|n| *n as f64 * eps).collect();
    let top = common_kappa2(&ts, opts.smallness);
    let mut out = Vec::new();
    for (&n, &t) in ns.iter().zip(&ts) {
        for k in scaled_wave_vectors(d, t, sigma2, count, top) {
            out.push(ScalingSample {
                t,
                value: f(n, &k),
                k,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{kernel_moments, make_uniform_kernel};
    use crate::lace::rw_hat_discrete;
    use crate::model::ModelParams;

    #[test]
    fn synthetic_gaussian_is_recovered() {
        let (d, sigma2) = (3, 2.5);
        let f = |n: usize, k: &[f64]| {
            let k2: f64 = k.iter().map(|v| v * v).sum();
            (-k2 * sigma2 * n as f64 / (2.0 * d as f64)).exp()
        };
        let s = scaled_samples(f, &[10, 20, 40], 1.0, d, sigma2, 6, FitOptions::default());
        let fit = gaussian_fit(&s, sigma2, FitOptions::default()).unwrap();
        assert!((fit.a - 1.0).abs() < 1e-10 && (fit.v - 1.0).abs() < 1e-10);
        assert!(fit.drift < 1e-10);
        assert_eq!(fit.dropped, 0);
    }

    #[test]
    fn scaled_amplitude_and_speed() {
        let f = |n: usize, k: &[f64]| 0.7 * (-1.3 * k[0] * k[0] * (0.5 * n as f64) / 2.0).exp();
        let s = scaled_samples(f, &[5, 9], 0.5, 1, 1.0, 5, FitOptions::default());
        let fit = gaussian_fit(&s, 1.0, FitOptions::default()).unwrap();
        assert!((fit.a - 0.7).abs() < 1e-12 && (fit.v - 1.3).abs() < 1e-12);
    }

    #[test]
    fn random_walk_at_large_time() {
        let params = ModelParams::with_radius(make_uniform_kernel(1, 1).unwrap(), 1.0, 1.0, 256, 0)
            .unwrap();
        let sigma2 = kernel_moments(&params.kernel, 1.0).sigma2;
        let opts = FitOptions::default();
        let s = scaled_samples(|n, k| rw_hat_discrete(&params, k, n), &[256], 1.0, 1, sigma2, 8, opts);
        let fit = gaussian_fit(&s, sigma2, opts).unwrap();
        assert!((fit.a - 1.0).abs() < 1e-3 && (fit.v - 1.0).abs() < 1e-3, "{fit:?}");
    }

    #[test]
    fn window_is_enforced() {
        let s = vec![
            ScalingSample { t: 4.0, k: vec![3.0], value: 0.5 },
            ScalingSample { t: 4.0, k: vec![0.1], value: -1.0 },
        ];
        assert!(matches!(
            gaussian_fit(&s, 1.0, FitOptions::default()),
            Err(Error::IllConditioned(_))
        ));
        let one_k: Vec<ScalingSample> = (0..3)
            .map(|_| ScalingSample { t: 4.0, k: vec![0.1], value: 0.9 })
            .collect();
        assert!(gaussian_fit(&one_k, 1.0, FitOptions::default()).is_err());
    }
}
