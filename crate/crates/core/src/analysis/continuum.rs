//! Convergence of `tau_{t;eps}` and `pi_{t;eps} / eps^2` under halving of
//! the time step.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::exact_two_point_dp;
use crate::field::SpaceTimeField;
use crate::kernel::KernelD;
use crate::lace::{invert_to_pi, rw_hat_discrete};
use crate::model::ModelParams;

/// Fields of one time step, from any backend.
#[derive(Debug, Clone)]
pub struct ContinuumLevel {
    pub eps: f64,
    pub tau: SpaceTimeField,
    pub pi: Option<SpaceTimeField>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuumRow {
    pub eps_coarse: f64,
    pub eps_fine: f64,
    /// `sup_x |tau_{t;eps} - tau_{t;eps/2}|`.
    pub tau_diff: f64,
    /// `sup_x |pi_{t;eps} / eps^2 - pi_{t;eps/2} / (eps/2)^2|`.
    pub pi_diff: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuumStudy {
    pub t: f64,
    pub rows: Vec<ContinuumRow>,
    /// Successive difference ratios.
    pub tau_ratios: Vec<f64>,
    pub pi_ratios: Vec<f64>,
    /// Every ratio below 1.
    pub cauchy: bool,
}

fn slice_at(t: f64, eps: f64, n_max: usize) -> Result<usize> {
    let n = (t / eps).round();
    if ((t / eps) - n).abs() > 1e-9 || n as usize > n_max {
        return Err(Error::validation(
            "eps",
            format!("t = {t} is not a slice of step {eps} within {n_max} slices"),
        ));
    }
    Ok(n as usize)
}

fn sup_diff(a: &SpaceTimeField, na: usize, sa: f64, b: &SpaceTimeField, nb: usize, sb: f64) -> f64 {
    let big = if a.radius >= b.radius { a } else { b };
    big.window()
        .offsets()
        .iter()
        .map(|x| (a.get(na, x) * sa - b.get(nb, x) * sb).abs())
        .fold(0.0, f64::max)
}

fn ratios(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| w[1] / w[0]).collect()
}

/// Levels must be ordered by decreasing `eps`.
pub fn continuum_study(t: f64, levels: &[ContinuumLevel]) -> Result<ContinuumStudy> {
    let mut rows = Vec::new();
    for pair in levels.windows(2) {
        let (c, f) = (&pair[0], &pair[1]);
        let nc = slice_at(t, c.eps, c.tau.n_max)?;
        let nf = slice_at(t, f.eps, f.tau.n_max)?;
        let pi_diff = match (&c.pi, &f.pi) {
            (Some(pc), Some(pf)) => Some(sup_diff(
                pc,
                nc,
                1.0 / (c.eps * c.eps),
                pf,
                nf,
                1.0 / (f.eps * f.eps),
            )),
            _ => None,
        };
        rows.push(ContinuumRow {
            eps_coarse: c.eps,
            eps_fine: f.eps,
            tau_diff: sup_diff(&c.tau, nc, 1.0, &f.tau, nf, 1.0),
            pi_diff,
        });
    }
    let tau_ratios = ratios(&rows.iter().map(|r| r.tau_diff).collect::<Vec<_>>());
    let pi_ratios = ratios(&rows.iter().filter_map(|r| r.pi_diff).collect::<Vec<_>>());
    let cauchy = tau_ratios.iter().chain(&pi_ratios).all(|r| *r < 1.0);
    Ok(ContinuumStudy {
        t,
        rows,
        tau_ratios,
        pi_ratios,
        cauchy,
    })
}

/// Exact levels on a fixed box of half-width `radius`, with `pi` from the
/// truncated inversion.
pub fn exact_levels(
    kernel: &KernelD,
    lambda: f64,
    t: f64,
    eps_list: &[f64],
    radius: usize,
) -> Result<Vec<ContinuumLevel>> {
    eps_list
        .iter()
        .map(|&eps| {
            let n = (t / eps).round() as usize;
            let p = ModelParams::with_radius(kernel.clone(), eps, lambda, n, radius)?;
            let tau = exact_two_point_dp(&p)?;
            let pi = invert_to_pi(&tau, &p)?;
            Ok(ContinuumLevel {
                eps,
                tau,
                pi: Some(pi),
            })
        })
        .collect()
}

/// `max_k |q^_{t;eps}(k) - q^_{t;eps/2}(k)|` per successive pair, from the
/// random-walk closed form.
pub fn rw_continuum(
    kernel: &KernelD,
    lambda: f64,
    t: f64,
    eps_list: &[f64],
    ks: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut hats = Vec::new();
    for &eps in eps_list {
        let n = slice_at(t, eps, usize::MAX)?;
        let p = ModelParams::with_radius(kernel.clone(), eps, lambda, n, 0)?;
        hats.push(ks.iter().map(|k| rw_hat_discrete(&p, k, n)).collect::<Vec<f64>>());
    }
    let diffs: Vec<f64> = hats
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let r = ratios(&diffs);
    Ok((diffs, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::make_uniform_kernel;

    fn halvings(n: usize) -> Vec<f64> {
        (0..n).map(|i| 0.5f64.powi(i as i32)).collect()
    }

    #[test]
    fn no_infection_converges_to_exponential() {
        let t = 2.0;
        let levels: Vec<ContinuumLevel> = halvings(5)
            .into_iter()
            .map(|eps| {
                let n = (t / eps) as usize;
                let mut tau = SpaceTimeField::zeros(1, eps, n, 0);
                for m in 0..=n {
                    tau.slice_mut(m)[0] = (1.0 - eps).powi(m as i32);
                }
                ContinuumLevel { eps, tau, pi: None }
            })
            .collect();
        let s = continuum_study(t, &levels).unwrap();
        for (r, pair) in s.rows.iter().zip(levels.windows(2)) {
            let want = ((1.0 - pair[0].eps).powf(t / pair[0].eps)
                - (1.0 - pair[1].eps).powf(t / pair[1].eps))
            .abs();
            assert!((r.tau_diff - want).abs() < 1e-15);
        }
        // eps = 1 kills everything at once; later ratios are first order
        assert!(s.tau_ratios[1..].iter().all(|r| *r < 0.75));
    }

    #[test]
    fn random_walk_differences_halve() {
        let k = make_uniform_kernel(1, 1).unwrap();
        let ks: Vec<Vec<f64>> = (0..64).map(|j| vec![2.0 * std::f64::consts::PI * j as f64 / 64.0]).collect();
        // eps = 1 is far from the first-order regime in Fourier space
        let (_, r) = rw_continuum(&k, 0.5, 2.0, &halvings(5), &ks).unwrap();
        assert!(r[1..].iter().all(|x| (x - 0.5).abs() < 0.1), "{r:?}");
        assert!(r[0] < 0.2);
    }

    #[test]
    fn random_walk_fields_halve() {
        let k = make_uniform_kernel(1, 1).unwrap();
        let levels: Vec<ContinuumLevel> = halvings(5)
            .into_iter()
            .map(|eps| {
                let n = (2.0 / eps) as usize;
                let p = ModelParams::new(k.clone(), eps, 0.5, n).unwrap();
                let pi = SpaceTimeField::delta(1, eps, n, p.radius);
                let tau = crate::lace::forward_solve(&pi, &p).unwrap();
                ContinuumLevel { eps, tau, pi: None }
            })
            .collect();
        let s = continuum_study(2.0, &levels).unwrap();
        assert!(s.tau_ratios.iter().all(|x| (x - 0.5).abs() < 0.1), "{:?}", s.tau_ratios);
    }

    #[test]
    fn exact_model_is_cauchy() {
        let k = make_uniform_kernel(1, 1).unwrap();
        let levels = exact_levels(&k, 1.0, 2.0, &halvings(4), 3).unwrap();
        let s = continuum_study(2.0, &levels).unwrap();
        assert!(s.tau_ratios.iter().all(|r| *r <= 0.75), "{:?}", s.tau_ratios);
    }

    #[test]
    fn rejects_non_slice_times() {
        let k = make_uniform_kernel(1, 1).unwrap();
        assert!(rw_continuum(&k, 0.5, 1.3, &[1.0, 0.5], &[vec![0.1]]).is_err());
    }
}
