//! Scaled-range experiment for `d <= 4`: range `L_T = L_1 T^b`, times
//! `T t` with `t <= log T`.

use serde::{Deserialize, Serialize};

use crate::analysis::gaussian::{
    common_kappa2, gaussian_fit, scaled_wave_vectors, FitOptions, ScalingFit, ScalingSample,
};
use crate::error::{Error, Result};
use crate::kernel::{kernel_moments, make_uniform_kernel};
use crate::lace::rw_hat_discrete;
use crate::model::ModelParams;
use crate::simulate::estimate_fourier;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledRangeConfig {
    pub d: usize,
    pub b: f64,
    pub l1: f64,
    pub big_t: f64,
    pub eps: f64,
    pub lambda: f64,
    /// Optional `mu`, checked against `(0, alpha - delta)`.
    pub mu: Option<f64>,
    pub delta: f64,
    /// Rescaled times `t` in `(0, log T]`.
    pub times: Vec<f64>,
    /// Wave vectors per time.
    pub k_count: usize,
}

impl ScaledRangeConfig {
    pub fn alpha(&self) -> f64 {
        self.b * self.d as f64 + (self.d as f64 - 4.0) / 2.0
    }

    /// `L_1 T^b` rounded to the nearest integer, at least 1.
    pub fn range(&self) -> usize {
        (self.l1 * self.big_t.powf(self.b)).round().max(1.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d > 4 {
            return Err(Error::validation("d", "scaled range needs 1 <= d <= 4"));
        }
        let alpha = self.alpha();
        if !(alpha > 0.0) {
            return Err(Error::validation("b", format!("alpha = {alpha} must be positive")));
        }
        if !(self.l1 >= 1.0) || !(self.big_t >= 1.0) {
            return Err(Error::validation("l1", "L_1 and T must be at least 1"));
        }
        if let Some(mu) = self.mu {
            if !(mu > 0.0 && mu < alpha - self.delta) {
                return Err(Error::validation("mu", format!("must lie in (0, {})", alpha - self.delta)));
            }
        }
        let top = self.big_t.ln();
        if let Some(t) = self.times.iter().find(|t| !(**t > 0.0 && **t <= top)) {
            return Err(Error::validation("times", format!("{t} outside (0, log T = {top}]")));
        }
        if self.k_count < 2 {
            return Err(Error::validation("k_count", "need at least two wave vectors"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Backend {
    MonteCarlo { samples: u64, seed: u64 },
    /// `pi = delta`, evaluated in closed form.
    RandomWalk,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScaledRangeReport {
    pub alpha: f64,
    pub range: usize,
    pub sigma2: f64,
    pub beta: f64,
    /// Slice index `(T / eps) log T` at which `lambda_T` is read off.
    pub lambda_horizon: usize,
    /// `lambda_T`; known in closed form only for the random walk.
    pub lambda_t: Option<f64>,
    pub slices: Vec<usize>,
    /// `tau^_{Tt}(0)`; the fit uses `tau^(k) / tau^(0)`, pinning `A` at 1.
    pub mass: Vec<f64>,
    pub fit: ScalingFit,
    /// `max(|A - 1|, |v - 1|)`.
    pub deviation: f64,
    pub samples: Vec<ScalingSample>,
}

pub fn scaled_range_experiment(cfg: &ScaledRangeConfig, backend: Backend) -> Result<ScaledRangeReport> {
    cfg.validate()?;
    let range = cfg.range();
    let kernel = make_uniform_kernel(cfg.d, range)?;
    let sigma2 = kernel_moments(&kernel, 1.0).sigma2;
    let beta = kernel.beta();
    let opts = FitOptions::default();
    let slices: Vec<usize> = cfg
        .times
        .iter()
        .map(|t| ((cfg.big_t * t / cfg.eps).round() as usize).max(1))
        .collect();
    let n_max = *slices.iter().max().unwrap();
    let ts: Vec<f64> = slices.iter().map(|n| *n as f64 * cfg.eps).collect();
    let top = common_kappa2(&ts, opts.smallness);
    // per slice: the zero wave vector first, then the scaled ones
    let mut ks = Vec::new();
    for &t in &ts {
        ks.push(vec![0.0; cfg.d]);
        ks.extend(scaled_wave_vectors(cfg.d, t, sigma2, cfg.k_count, top));
    }
    let per = cfg.k_count + 1;
    let values: Vec<f64> = match backend {
        Backend::RandomWalk => {
            let p = ModelParams::with_radius(kernel, cfg.eps, cfg.lambda, n_max, 0)?;
            ks.iter()
                .enumerate()
                .map(|(j, k)| rw_hat_discrete(&p, k, slices[j / per]))
                .collect()
        }
        Backend::MonteCarlo { samples, seed } => {
            let p = ModelParams::new(kernel, cfg.eps, cfg.lambda, n_max)?;
            let est = estimate_fourier(&p, &ks, samples, seed)?;
            (0..ks.len()).map(|j| est.mean[slices[j / per]][j]).collect()
        }
    };
    let mut mass = Vec::new();
    let mut samples = Vec::new();
    for (i, &t) in ts.iter().enumerate() {
        let m = values[i * per];
        if !(m > 0.0) {
            return Err(Error::Invariant(format!("tau^(0) = {m} at slice {}", slices[i])));
        }
        mass.push(m);
        for j in 1..per {
            samples.push(ScalingSample {
                t,
                k: ks[i * per + j].clone(),
                value: values[i * per + j] / m,
            });
        }
    }
    let fit = gaussian_fit(&samples, sigma2, opts)?;
    let deviation = (fit.a - 1.0).abs().max((fit.v - 1.0).abs());
    Ok(ScaledRangeReport {
        alpha: cfg.alpha(),
        range,
        sigma2,
        beta,
        lambda_horizon: (cfg.big_t / cfg.eps * cfg.big_t.ln()).round() as usize,
        lambda_t: matches!(backend, Backend::RandomWalk).then_some(1.0),
        slices,
        mass,
        fit,
        deviation,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(d: usize, b: f64, t: f64) -> ScaledRangeConfig {
        ScaledRangeConfig {
            d,
            b,
            l1: 1.0,
            big_t: t,
            eps: 1.0,
            lambda: 1.0,
            mu: None,
            delta: 0.1,
            times: vec![0.5, 1.0, t.ln()],
            k_count: 4,
        }
    }

    #[test]
    fn alpha_arithmetic() {
        assert_eq!(cfg(2, 1.0, 8.0).alpha(), 1.0);
        assert!(cfg(2, 1.0, 8.0).validate().is_ok());
        assert_eq!(cfg(4, 0.0, 8.0).alpha(), 0.0);
        assert!(cfg(4, 0.0, 8.0).validate().is_err());
    }

    #[test]
    fn horizon_rule() {
        let mut c = cfg(2, 1.0, 8.0);
        c.times.push(3.0);
        assert!(c.validate().is_err());
        c.times.pop();
        c.mu = Some(0.5);
        assert!(c.validate().is_ok());
        c.mu = Some(0.95);
        assert!(c.validate().is_err());
    }

    #[test]
    fn random_walk_deviation_shrinks_with_t() {
        let dev: Vec<f64> = [8.0, 16.0, 32.0]
            .iter()
            .map(|t| {
                scaled_range_experiment(&cfg(2, 1.0, *t), Backend::RandomWalk)
                    .unwrap()
                    .fit
                    .drift
            })
            .collect();
        assert!(dev.windows(2).all(|w| w[1] < w[0]), "{dev:?}");
    }
}
