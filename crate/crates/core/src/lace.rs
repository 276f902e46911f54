//! The recursion `tau_t = sum_{s < t} pi_s * p * tau_{t-s-eps} + pi_t`:
//! forward solution, inversion, random-walk closed forms and the constants
//! `lambda_c`, `A`, `v` built from the coefficients.

use std::collections::HashMap;
use std::sync::Mutex;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use crate::kernel::kernel_hat;
use crate::lattice::{convolve_add, Window};
use crate::model::ModelParams;

const INIT_TOL: f64 = 1e-12;

fn check_shape(f: &SpaceTimeField, params: &ModelParams) -> Result<()> {
    if f.d != params.d() || f.radius != params.radius || f.n_max != params.n_max {
        return Err(Error::Mismatch(format!(
            "field (d={}, R={}, n_max={}) does not match model (d={}, R={}, n_max={})",
            f.d,
            f.radius,
            f.n_max,
            params.d(),
            params.radius,
            params.n_max
        )));
    }
    Ok(())
}

fn is_delta(slice: &[f64], origin: usize) -> bool {
    slice.iter().enumerate().all(|(i, v)| {
        let target = if i == origin { 1.0 } else { 0.0 };
        (v - target).abs() <= INIT_TOL
    })
}

/// `p * tau_m` for every slice of `tau`.
fn bond_convolved(tau: &SpaceTimeField, params: &ModelParams, upto: usize) -> Vec<Vec<f64>> {
    let w = tau.window();
    let pk = params.bond_kernel(w);
    (0..=upto)
        .map(|m| {
            let mut out = vec![0.0; w.size()];
            pk.apply(tau.slice(m), &mut out);
            out
        })
        .collect()
}

/// `sum_{s=0}^{n-1} pi_s * u_{n-1-s}` with `u_m = p * tau_m`.
fn memory_term(w: &Window, pi: &SpaceTimeField, u: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut acc = vec![0.0; w.size()];
    for s in 0..n {
        let ps = pi.slice(s);
        if ps.iter().all(|v| *v == 0.0) {
            continue;
        }
        convolve_add(w, ps, &u[n - 1 - s], &mut acc);
    }
    acc
}

/// Forward solution of the recursion on a window large enough that no mass
/// is lost (`R >= L n_max`).
pub fn forward_solve(pi: &SpaceTimeField, params: &ModelParams) -> Result<SpaceTimeField> {
    params.check_window()?;
    let w = pi.window();
    if !is_delta(pi.slice(0), w.origin()) {
        return Err(Error::validation("pi", "slice 0 must be the delta function"));
    }
    if pi.n_max >= 1 && pi.slice(1).iter().any(|v| v.abs() > INIT_TOL) {
        return Err(Error::validation("pi", "slice 1 must vanish"));
    }
    forward_solve_truncated(pi, params)
}

/// Same recursion with every convolution truncated to the window. Exact
/// only when the window holds the full support; the inversion uses the
/// identical truncation, so the two remain inverse to each other.
pub fn forward_solve_truncated(
    pi: &SpaceTimeField,
    params: &ModelParams,
) -> Result<SpaceTimeField> {
    check_shape(pi, params)?;
    let w = pi.window();
    let mut tau = pi.zeros_like();
    tau.slice_mut(0).copy_from_slice(pi.slice(0));
    let pk = params.bond_kernel(w);
    let mut u: Vec<Vec<f64>> = Vec::with_capacity(pi.n_max + 1);
    for n in 1..=pi.n_max {
        let mut next = vec![0.0; w.size()];
        pk.apply(tau.slice(n - 1), &mut next);
        u.push(next);
        let mem = memory_term(&w, pi, &u, n);
        for ((t, m), p) in tau.slice_mut(n).iter_mut().zip(&mem).zip(pi.slice(n)) {
            *t = m + p;
        }
    }
    Ok(tau)
}

/// `pi_t = tau_t - sum_{s < t} pi_s * p * tau_{t-s-eps}`, solved slice by
/// slice. Convolutions are truncated to the window.
pub fn invert_to_pi(tau: &SpaceTimeField, params: &ModelParams) -> Result<SpaceTimeField> {
    check_shape(tau, params)?;
    let w = tau.window();
    if !is_delta(tau.slice(0), w.origin()) {
        return Err(Error::validation("tau", "slice 0 must be the delta function"));
    }
    let u = bond_convolved(tau, params, tau.n_max.saturating_sub(1));
    let mut pi = tau.zeros_like();
    pi.slice_mut(0).copy_from_slice(tau.slice(0));
    for n in 1..=tau.n_max {
        let mem = memory_term(&w, &pi, &u, n);
        for ((p, t), m) in pi.slice_mut(n).iter_mut().zip(tau.slice(n)).zip(&mem) {
            *p = t - m;
        }
    }
    Ok(pi)
}

/// Fourier-space forward solution on a `side^d` dual grid: per grid point,
/// `tau^_n = sum_s pi^_s p^ tau^_{n-1-s} + pi^_n`.
pub fn forward_solve_fourier(
    pi: &SpaceTimeField,
    params: &ModelParams,
    side: usize,
) -> Result<Vec<Vec<Complex64>>> {
    check_shape(pi, params)?;
    let pi_hat: Vec<Vec<Complex64>> = (0..=pi.n_max)
        .map(|n| pi.fourier_slice(n, side))
        .collect::<Result<_>>()?;
    let npts = side.pow(pi.d as u32);
    let p_hat: Vec<f64> = (0..npts)
        .map(|i| params.bond_hat(&crate::kernel::grid_k(pi.d, side, i)))
        .collect();
    let mut tau_hat: Vec<Vec<Complex64>> = vec![pi_hat[0].clone()];
    for n in 1..=pi.n_max {
        let mut cur = pi_hat[n].clone();
        for s in 0..n {
            for (i, c) in cur.iter_mut().enumerate() {
                *c += pi_hat[s][i] * p_hat[i] * tau_hat[n - 1 - s][i];
            }
        }
        tau_hat.push(cur);
    }
    Ok(tau_hat)
}

/// `q^_{t;eps}(k) = (1 - eps + lambda eps D^(k))^{t/eps}` at slice `n`.
pub fn rw_hat_discrete(params: &ModelParams, kv: &[f64], n: usize) -> f64 {
    params.bond_hat(kv).powi(n as i32)
}

/// `q^_t(k) = exp(-[1 - lambda D^(k)] t)`.
pub fn rw_hat_continuum(params: &ModelParams, kv: &[f64], t: f64) -> f64 {
    (-(1.0 - params.lambda * kernel_hat(&params.kernel, kv)) * t).exp()
}

/// `|q^_{t;eps}(k / sqrt(sigma^2 t)) - exp(-|k|^2 / 2d)|` at `t = n eps`.
pub fn rw_gaussian_error(params: &ModelParams, kv: &[f64], n: usize, sigma2: f64) -> f64 {
    let t = n as f64 * params.eps;
    let scale = (sigma2 * t).sqrt();
    let scaled: Vec<f64> = kv.iter().map(|k| k / scale).collect();
    let k2: f64 = kv.iter().map(|k| k * k).sum();
    (rw_hat_discrete(params, &scaled, n) - (-k2 / (2.0 * params.d() as f64)).exp()).abs()
}

/// Closed-form random-walk table on a list of wave vectors.
#[derive(Debug, Clone, Serialize)]
pub struct RwRow {
    pub n: usize,
    pub k_index: usize,
    pub discrete: f64,
    pub continuum: f64,
}

pub fn rw_closed_form(params: &ModelParams, ks: &[Vec<f64>]) -> Vec<RwRow> {
    let mut rows = Vec::new();
    for n in 0..=params.n_max {
        for (i, kv) in ks.iter().enumerate() {
            rows.push(RwRow {
                n,
                k_index: i,
                discrete: rw_hat_discrete(params, kv, n),
                continuum: rw_hat_continuum(params, kv, n as f64 * params.eps),
            });
        }
    }
    rows
}

/// Sums entering the critical constants, with their truncation metadata.
#[derive(Debug, Clone, Serialize)]
pub struct LaceConstants {
    pub lambda: f64,
    pub eps: f64,
    pub n_max: usize,
    /// `1 - lambda - (1/eps) sum_{s >= 2 eps} pi^_s(0) p^(0)`; zero at
    /// `lambda_c`.
    pub residual: f64,
    /// `lambda` solving the truncated residual equation at the supplied
    /// coefficients, i.e. `1 - (1/eps) sum pi^_s(0) p^(0)`.
    pub lambda_c_eps: f64,
    pub a_eps: f64,
    pub v_eps: f64,
    /// `sum_{s >= 2 eps} pi^_s(0)`.
    pub sum_pi: f64,
    /// `(1/eps) sum_{s >= 2 eps} s pi^_s(0) p^(0)`.
    pub sum_s_pi_p: f64,
    /// `(1/eps) sum_{s >= 2 eps} nabla^2 [pi^_s p^](0)`.
    pub sum_laplacian: f64,
    /// Smallest denominator magnitude in `A` and `v`.
    pub denominator_margin: f64,
    /// Fitted decay exponent of `sum_x |pi_s(x)|` in `s`.
    pub tail_exponent: Option<f64>,
    /// Estimated contribution of `s > n_max eps` to `sum_pi`.
    pub tail_estimate: Option<f64>,
}

/// `nabla^2 [f^ g^](0) = -sum_x |x|^2 (f * g)(x)`, from moments of each
/// factor.
pub(crate) fn laplacian_of_product(f: &SpaceTimeField, n: usize, g: &[(Vec<i64>, f64)]) -> f64 {
    let w = f.window();
    let d = f.d;
    let mut m0f = 0.0;
    let mut m1f = vec![0.0; d];
    let mut m2f = 0.0;
    for (i, v) in f.slice(n).iter().enumerate() {
        if *v == 0.0 {
            continue;
        }
        let x = w.offset(i);
        m0f += v;
        for j in 0..d {
            m1f[j] += x[j] as f64 * v;
        }
        m2f += crate::lattice::norm2(&x) * v;
    }
    let m0g: f64 = g.iter().map(|e| e.1).sum();
    let m2g: f64 = g.iter().map(|(x, p)| crate::lattice::norm2(x) * p).sum();
    let cross: f64 = (0..d)
        .map(|j| m1f[j] * g.iter().map(|(x, p)| x[j] as f64 * p).sum::<f64>())
        .sum();
    -(m2f * m0g + m0f * m2g + 2.0 * cross)
}

pub fn lace_constants(
    pi: &SpaceTimeField,
    params: &ModelParams,
    sigma2: f64,
) -> Result<LaceConstants> {
    let eps = params.eps;
    let p0 = params.bond_mass();
    let bonds = params.bond_entries();
    let mut sum_pi = 0.0;
    let mut sum_s = 0.0;
    let mut sum_lap = 0.0;
    let mut sum_pp = 0.0;
    for n in 2..=pi.n_max {
        let e = pi.mass(n);
        sum_pi += e;
        sum_pp += e * p0;
        sum_s += n as f64 * e * p0;
        sum_lap += laplacian_of_product(pi, n, &bonds);
    }
    let residual = 1.0 - params.lambda - sum_pp / eps;
    let lambda_c = 1.0 - sum_pp / eps;
    let denom = 1.0 + sum_s;
    let tol = 1e-6;
    if denom.abs() < tol {
        return Err(Error::VanishingDenominator {
            what: "A and v",
            value: denom,
            tol,
        });
    }
    let (tail_exponent, tail_estimate) = tail_fit(pi);
    Ok(LaceConstants {
        lambda: params.lambda,
        eps,
        n_max: pi.n_max,
        residual,
        lambda_c_eps: lambda_c,
        a_eps: (1.0 + sum_pi) / denom,
        v_eps: (lambda_c - sum_lap / (sigma2 * eps)) / denom,
        sum_pi,
        sum_s_pi_p: sum_s,
        sum_laplacian: sum_lap / eps,
        denominator_margin: denom.abs(),
        tail_exponent,
        tail_estimate,
    })
}

/// Power-law fit of `sum_x |pi_s(x)|` over the last half of the slices and
/// the implied tail beyond the horizon.
fn tail_fit(pi: &SpaceTimeField) -> (Option<f64>, Option<f64>) {
    let vals: Vec<(usize, f64)> = (0..=pi.n_max)
        .map(|n| (n, pi.slice(n).iter().map(|v| v.abs()).sum::<f64>()))
        .collect();
    crate::analysis::fit::power_law_tail(&vals, pi.n_max)
}

/// Supplies `pi` fields at a trial `lambda`; exact and Monte Carlo backends
/// are interchangeable behind it.
pub trait PiExtractor: Sync {
    fn extract(&self, lambda: f64) -> Result<SpaceTimeField>;
    /// Model at the given `lambda` (shape of the returned fields).
    fn params(&self, lambda: f64) -> Result<ModelParams>;
}

/// `pi = delta`: the random walk.
pub struct RandomWalkExtractor {
    pub base: ModelParams,
}

impl PiExtractor for RandomWalkExtractor {
    fn extract(&self, lambda: f64) -> Result<SpaceTimeField> {
        let p = self.params(lambda)?;
        Ok(SpaceTimeField::delta(p.d(), p.eps, p.n_max, p.radius))
    }

    fn params(&self, lambda: f64) -> Result<ModelParams> {
        self.base.with_lambda(lambda)
    }
}

/// `pi` obtained by inverting the exact subset-chain two-point function.
pub struct ExactExtractor {
    pub base: ModelParams,
}

impl PiExtractor for ExactExtractor {
    fn extract(&self, lambda: f64) -> Result<SpaceTimeField> {
        let p = self.params(lambda)?;
        let tau = crate::exact::exact_two_point_dp(&p)?;
        invert_to_pi(&tau, &p)
    }

    fn params(&self, lambda: f64) -> Result<ModelParams> {
        self.base.with_lambda(lambda)
    }
}

/// Memoizes an extractor by the bit pattern of `lambda`.
pub struct CachedExtractor<E> {
    inner: E,
    cache: Mutex<HashMap<u64, SpaceTimeField>>,
}

impl<E: PiExtractor> CachedExtractor<E> {
    pub fn new(inner: E) -> Self {
        CachedExtractor {
            inner,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.cache.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<E: PiExtractor> PiExtractor for CachedExtractor<E> {
    fn extract(&self, lambda: f64) -> Result<SpaceTimeField> {
        if let Some(f) = self.cache.lock().unwrap().get(&lambda.to_bits()) {
            return Ok(f.clone());
        }
        let f = self.inner.extract(lambda)?;
        self.cache
            .lock()
            .unwrap()
            .insert(lambda.to_bits(), f.clone());
        Ok(f)
    }

    fn params(&self, lambda: f64) -> Result<ModelParams> {
        self.inner.params(lambda)
    }
}

/// Result of the `lambda_c` bisection.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalPoint {
    pub lambda_c: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub constants: LaceConstants,
}

/// Bisection on the residual `1 - lambda - (1/eps) sum pi^_s(0) p^(0)`,
/// re-extracting `pi` at each trial `lambda`.
pub fn find_lambda_c<E: PiExtractor + ?Sized>(
    extractor: &E,
    sigma2: f64,
    bracket: (f64, f64),
    tol: f64,
) -> Result<CriticalPoint> {
    let residual = |lam: f64| -> Result<LaceConstants> {
        let p = extractor.params(lam)?;
        let pi = extractor.extract(lam)?;
        lace_constants(&pi, &p, sigma2)
    };
    let (mut lo, mut hi) = bracket;
    let mut r_lo = residual(lo)?.residual;
    let r_hi = residual(hi)?.residual;
    if r_lo * r_hi > 0.0 {
        return Err(Error::validation(
            "lambda_bracket",
            format!("residual has the same sign at both ends ({r_lo}, {r_hi})"),
        ));
    }
    let mut iterations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let r = residual(mid)?.residual;
        if r == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if (r < 0.0) == (r_lo < 0.0) {
            lo = mid;
            r_lo = r;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let lambda_c = 0.5 * (lo + hi);
    Ok(CriticalPoint {
        lambda_c,
        bracket: (lo, hi),
        iterations,
        constants: residual(lambda_c)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::make_uniform_kernel;

    fn params(eps: f64, lambda: f64, n: usize) -> ModelParams {
        ModelParams::new(make_uniform_kernel(1, 1).unwrap(), eps, lambda, n).unwrap()
    }

    #[test]
    fn delta_pi_gives_random_walk() {
        let p = params(0.5, 0.9, 6);
        let pi = SpaceTimeField::delta(1, 0.5, 6, p.radius);
        let tau = forward_solve(&pi, &p).unwrap();
        for n in 0..=6 {
            assert!((tau.mass(n) - p.bond_mass().powi(n as i32)).abs() < 1e-14);
        }
        assert!((tau.get(1, &[1]) - p.bond_probability(&[1])).abs() < 1e-15);
    }

    #[test]
    fn pure_death_forward() {
        let p = params(0.25, 0.0, 5);
        let pi = SpaceTimeField::delta(1, 0.25, 5, p.radius);
        let tau = forward_solve(&pi, &p).unwrap();
        for n in 0..=5 {
            assert!((tau.get(n, &[0]) - 0.75f64.powi(n as i32)).abs() < 1e-15);
            assert!((tau.mass(n) - tau.get(n, &[0])).abs() < 1e-15);
        }
    }

    #[test]
    fn inverting_random_walk_gives_delta() {
        let p = params(0.5, 1.0, 5);
        let pi = SpaceTimeField::delta(1, 0.5, 5, p.radius);
        let tau = forward_solve(&pi, &p).unwrap();
        let back = invert_to_pi(&tau, &p).unwrap();
        assert!(back.max_abs_diff(&pi).unwrap() < 1e-15);
    }

    #[test]
    fn forward_rejects_bad_initial_slices() {
        let p = params(1.0, 1.0, 3);
        let mut pi = SpaceTimeField::delta(1, 1.0, 3, p.radius);
        pi.set(1, &[1], 0.1);
        assert!(forward_solve(&pi, &p).is_err());
        let small = ModelParams::with_radius(p.kernel.clone(), 1.0, 1.0, 3, 2).unwrap();
        let pi = SpaceTimeField::delta(1, 1.0, 3, 2);
        assert!(matches!(
            forward_solve(&pi, &small),
            Err(Error::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn random_walk_constants() {
        let p = params(0.5, 0.7, 6);
        let pi = SpaceTimeField::delta(1, 0.5, 6, p.radius);
        let c = lace_constants(&pi, &p, 1.0).unwrap();
        assert_eq!(c.lambda_c_eps, 1.0);
        assert_eq!(c.a_eps, 1.0);
        assert_eq!(c.v_eps, 1.0);
        assert!((c.residual - 0.3).abs() < 1e-15);
    }

    #[test]
    fn fourier_route_matches_space_route() {
        let p = params(0.5, 0.8, 4);
        let mut pi = SpaceTimeField::delta(1, 0.5, 4, p.radius);
        pi.set(2, &[0], 0.05);
        pi.set(3, &[1], -0.02);
        pi.set(3, &[-1], -0.02);
        let tau = forward_solve(&pi, &p).unwrap();
        let side = 16;
        let th = forward_solve_fourier(&pi, &p, side).unwrap();
        for n in 0..=4 {
            let direct = tau.fourier_slice(n, side).unwrap();
            for (a, b) in direct.iter().zip(&th[n]) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn cached_extractor_reuses() {
        let ex = CachedExtractor::new(RandomWalkExtractor {
            base: params(1.0, 1.0, 3),
        });
        ex.extract(0.5).unwrap();
        ex.extract(0.5).unwrap();
        ex.extract(0.6).unwrap();
        assert_eq!(ex.len(), 2);
    }
}
