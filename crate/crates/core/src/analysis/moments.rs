//! Per-slice mass, gyration and sup norm of a two-point field.

use serde::Serialize;

use crate::field::SpaceTimeField;

#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub n: usize,
    pub t: f64,
    /// `tau^_t(0)`.
    pub mass: f64,
    /// `sum_x |x|^2 tau_t(x) / tau^_t(0)`; `NaN` for an empty slice.
    pub gyration: f64,
    pub sup: f64,
    /// `(1 - eps)^{t/eps} + C2 L^{-d} (1 + t)^{-d/2}`.
    pub envelope: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentProfile {
    pub rows: Vec<MomentRow>,
    /// Least-squares `C2` of the envelope.
    pub c2: f64,
}

/// Exact window sums per slice. `range` is the kernel range `L`.
pub fn moment_profile(tau: &SpaceTimeField, range: usize) -> MomentProfile {
    let d = tau.d as f64;
    let eps = tau.eps;
    let ld = (range as f64).powf(-d);
    let base: Vec<(f64, f64, f64)> = (0..=tau.n_max)
        .map(|n| {
            let t = n as f64 * eps;
            let death = (1.0 - eps).powi(n as i32);
            let shape = ld * (1.0 + t).powf(-d / 2.0);
            (tau.sup(n) - death, shape, death)
        })
        .collect();
    let num: f64 = base.iter().map(|(y, x, _)| y * x).sum();
    let den: f64 = base.iter().map(|(_, x, _)| x * x).sum();
    let c2 = if den > 0.0 { num / den } else { 0.0 };
    let rows = (0..=tau.n_max)
        .map(|n| {
            let mass = tau.mass(n);
            MomentRow {
                n,
                t: n as f64 * eps,
                mass,
                gyration: if mass != 0.0 {
                    tau.second_moment(n) / mass
                } else {
                    f64::NAN
                },
                sup: tau.sup(n),
                envelope: base[n].2 + c2 * base[n].1,
            }
        })
        .collect();
    MomentProfile { rows, c2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{kernel_moments, make_uniform_kernel};
    use crate::lace::forward_solve;
    use crate::model::ModelParams;

    fn rw(d: usize, l: usize, eps: f64, lambda: f64, n: usize) -> (ModelParams, SpaceTimeField) {
        let p = ModelParams::new(make_uniform_kernel(d, l).unwrap(), eps, lambda, n).unwrap();
        let pi = SpaceTimeField::delta(d, eps, n, p.radius);
        let tau = forward_solve(&pi, &p).unwrap();
        (p, tau)
    }

    #[test]
    fn random_walk_gyration_is_linear() {
        for (d, l, eps) in [(1, 2, 0.5), (2, 1, 0.25)] {
            let (p, tau) = rw(d, l, eps, 1.0, 8);
            let sigma2 = kernel_moments(&p.kernel, 1.0).sigma2;
            let prof = moment_profile(&tau, l);
            for r in &prof.rows {
                assert!((r.gyration - sigma2 * r.t).abs() < 1e-12 * (1.0 + r.t));
                assert!((r.mass - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn no_infection_sup_is_death_factor() {
        let (_, tau) = rw(1, 1, 0.25, 0.0, 12);
        let prof = moment_profile(&tau, 1);
        for r in &prof.rows {
            assert_eq!(r.sup, 0.75f64.powi(r.n as i32));
        }
        assert_eq!(prof.c2, 0.0);
    }
}
