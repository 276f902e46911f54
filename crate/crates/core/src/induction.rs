//! Quantities of the inductive method: the sequences `lambda_n`, `v_n`,
//! `f_n(k)`, `r_n(k)` and numerical checks of the hypotheses (H1)-(H4).
//!
//! Fields are lattice-symmetric, so transforms are real and depend only on
//! the symmetry orbit of `k`. The dual grid is reduced to one sorted
//! representative `0 <= m_1 <= ... <= m_d <= M/2` per orbit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use crate::kernel::kernel_hat;
use crate::lace::{laplacian_of_product, PiExtractor};
use crate::model::ModelParams;

/// Below this `|f_{l-1}(k)|` the ratio defining `r_l(k)` is not formed:
/// the factor `1 - eps v a + eps r` carries an absolute rounding error near
/// 1e-16, which the ratio would amplify past any useful accuracy.
pub const VANISHING: f64 = 1e-6;

/// Orbit representatives of the `M^d` dual torus.
#[derive(Debug, Clone)]
pub struct SymmetricGrid {
    pub d: usize,
    pub side: usize,
    /// Torus coordinates of each representative; index 0 is `k = 0`.
    pub coords: Vec<Vec<usize>>,
    pub k: Vec<Vec<f64>>,
    /// Orbit sizes; they sum to `M^d`.
    pub weight: Vec<u64>,
}

impl SymmetricGrid {
    pub fn new(d: usize, side: usize) -> Result<Self> {
        if d == 0 || side < 2 || side % 2 != 0 {
            return Err(Error::validation("side", "must be even and >= 2"));
        }
        let half = side / 2;
        let mut coords = Vec::new();
        let mut cur = vec![0usize; d];
        loop {
            coords.push(cur.clone());
            // next nondecreasing tuple
            let mut i = d;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if cur[i] < half {
                    cur[i] += 1;
                    let v = cur[i];
                    for c in cur.iter_mut().skip(i + 1) {
                        *c = v;
                    }
                    break;
                }
                if i == 0 {
                    i = usize::MAX;
                    break;
                }
            }
            if i == usize::MAX {
                break;
            }
        }
        let two_pi = 2.0 * std::f64::consts::PI;
        let k = coords
            .iter()
            .map(|c| c.iter().map(|&m| two_pi * m as f64 / side as f64).collect())
            .collect();
        let weight = coords.iter().map(|c| orbit_size(c, half)).collect();
        Ok(SymmetricGrid {
            d,
            side,
            coords,
            k,
            weight,
        })
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

fn orbit_size(c: &[usize], half: usize) -> u64 {
    let mut perms = factorial(c.len());
    let mut i = 0;
    while i < c.len() {
        let j = c[i..].iter().take_while(|v| **v == c[i]).count();
        perms /= factorial(j);
        i += j;
    }
    let signs: u64 = c
        .iter()
        .map(|&m| if m == 0 || m == half { 1 } else { 2 })
        .product();
    perms * signs
}

/// Settings for the scaled-range (d <= 4) variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowDim {
    pub b: f64,
    pub big_t: f64,
    pub l1: f64,
    pub mu: f64,
    pub omega: f64,
}

impl LowDim {
    pub fn alpha(&self, d: usize) -> f64 {
        self.b * d as f64 + (d as f64 - 4.0) / 2.0
    }

    /// `beta_1 T^{-mu}` with `beta_1 = L_1^{-d}`.
    pub fn beta_hat(&self, d: usize) -> f64 {
        self.l1.powi(-(d as i32)) * self.big_t.powf(-self.mu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InductionConstants {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
    pub gamma: f64,
    pub delta: f64,
    pub rho: f64,
    /// The moment exponent of the kernel.
    pub big_delta: f64,
    /// Smallest accepted ratio for each `>>` relation between constants.
    pub ratio: f64,
    pub low_dim: Option<LowDim>,
}

impl Default for InductionConstants {
    fn default() -> Self {
        InductionConstants {
            k1: 100.0,
            k2: 1000.0,
            k3: 1000.0,
            k4: 10.0,
            k5: 1000.0,
            gamma: 0.3,
            delta: 0.1,
            rho: 0.3,
            big_delta: 1.0,
            ratio: 10.0,
            low_dim: None,
        }
    }
}

impl InductionConstants {
    /// Checks the constant ordering and the exponent chain for dimension
    /// `d` (the scaled-range chain when `d <= 4`).
    pub fn validate(&self, d: usize) -> Result<()> {
        let r = self.ratio;
        let rel = [
            ("k3", self.k3 / self.k1),
            ("k1", self.k1 / self.k4),
            ("k4", self.k4),
            ("k2", self.k2 / self.k4),
            ("k5", self.k5 / self.k4),
        ];
        for (key, v) in rel {
            if !(v >= r) {
                return Err(Error::validation(
                    key,
                    format!("constant ratio {v} below the required {r}"),
                ));
            }
        }
        let df = d as f64;
        let upper = if d > 4 {
            1f64.min(self.big_delta).min((df - 4.0) / 2.0)
        } else {
            let low = self.low_dim.ok_or_else(|| {
                Error::validation("low_dim", "d <= 4 needs the scaled-range settings")
            })?;
            let alpha = low.alpha(d);
            if !(alpha > 0.0) {
                return Err(Error::validation("b", format!("alpha = {alpha} must be positive")));
            }
            if !(low.omega > self.delta && low.omega < 1f64.min(alpha)) {
                return Err(Error::validation("omega", "must lie in (delta, 1 ^ alpha)"));
            }
            if !(low.mu > 0.0 && low.mu < alpha - low.omega) {
                return Err(Error::validation("mu", "must lie in (0, alpha - omega)"));
            }
            low.omega.min(self.big_delta)
        };
        let chain = [
            -(2.0 + self.rho),
            0.0,
            df / 2.0 - (2.0 + self.rho),
            self.gamma,
            self.gamma + self.delta,
            upper,
        ];
        if chain.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::validation(
                "gamma",
                format!("exponent chain not increasing: {chain:?}"),
            ));
        }
        Ok(())
    }
}

/// `lambda_0 = lambda_1 = 1`, `lambda_n = 1 - (1/eps) sum_{l=2}^n
/// g_l(0; lambda_{n-1})`.
pub fn lambda_sequence<E: PiExtractor + ?Sized>(extractor: &E, n_max: usize) -> Result<Vec<f64>> {
    let mut lam = vec![1.0; (n_max + 1).min(2)];
    for n in 2..=n_max {
        let prev = lam[n - 1];
        let params = extractor.params(prev)?;
        if params.n_max + 1 < n {
            return Err(Error::validation(
                "n_max",
                format!("extractor horizon {} too short for lambda_{n}", params.n_max),
            ));
        }
        let pi = extractor.extract(prev)?;
        let p0 = params.bond_mass();
        let sum: f64 = (2..=n).map(|l| pi.mass(l - 1) * p0).sum();
        lam.push(1.0 - sum / params.eps);
    }
    Ok(lam)
}

/// Sequences at a fixed `lambda`, indexed by `n` then grid point.
#[derive(Debug, Clone)]
pub struct InductionState {
    pub d: usize,
    pub eps: f64,
    pub lambda: f64,
    pub beta: f64,
    pub sigma2: f64,
    pub n_max: usize,
    pub grid: SymmetricGrid,
    pub a: Vec<f64>,
    /// `f_n = tau^_{n eps}`, `n = 0..=n_max`.
    pub f: Vec<Vec<f64>>,
    /// `e_n = pi^_{n eps}`.
    pub e: Vec<Vec<f64>>,
    /// `g_{n+1} = pi^_{n eps} p^`; entry 0 is unused.
    pub g: Vec<Vec<f64>>,
    /// `nabla^2 g_l(0)`; entry 0 unused.
    pub g_laplacian: Vec<f64>,
    pub v: Vec<f64>,
    /// `r_l(k)`, `l >= 1`; entry 0 unused. `NaN` where excluded.
    pub r: Vec<Vec<f64>>,
    /// `(l, grid index)` where `f_{l-1}(k)` vanished.
    pub excluded: Vec<(usize, usize)>,
    /// Largest discarded imaginary part of a transform.
    pub max_imaginary: f64,
    pub lambda_n: Option<Vec<f64>>,
    pub constants: InductionConstants,
}

impl InductionState {
    /// Builds `e`, `g`, `f` by the renewal recursion
    /// `f_{n+1} = sum_{m<=n} g_{m+1} f_{n-m} + e_{n+1}` and then `v`, `r`.
    pub fn from_pi(
        pi: &SpaceTimeField,
        params: &ModelParams,
        sigma2: f64,
        side: usize,
        constants: InductionConstants,
    ) -> Result<Self> {
        let d = params.d();
        constants.validate(d)?;
        let grid = SymmetricGrid::new(d, side)?;
        let n_max = pi.n_max;
        let eps = params.eps;
        let lambda = params.lambda;
        let a: Vec<f64> = grid.k.iter().map(|kv| 1.0 - kernel_hat(&params.kernel, kv)).collect();
        let p_hat: Vec<f64> = grid.k.iter().map(|kv| params.bond_hat(kv)).collect();
        let mut max_imaginary = 0.0f64;
        let e: Vec<Vec<f64>> = (0..=n_max)
            .map(|n| {
                grid.k
                    .iter()
                    .map(|kv| {
                        let z = pi.fourier_at(n, kv);
                        max_imaginary = max_imaginary.max(z.im.abs());
                        z.re
                    })
                    .collect()
            })
            .collect();
        let mut g = vec![Vec::new()];
        for en in &e {
            g.push(en.iter().zip(&p_hat).map(|(x, p)| x * p).collect());
        }
        let npts = grid.len();
        let mut f: Vec<Vec<f64>> = vec![vec![1.0; npts]];
        for n in 0..n_max {
            let mut next = e[n + 1].clone();
            for m in 0..=n {
                for i in 0..npts {
                    next[i] += g[m + 1][i] * f[n - m][i];
                }
            }
            f.push(next);
        }
        let bonds = params.bond_entries();
        let mut g_laplacian = vec![0.0];
        for l in 1..=n_max + 1 {
            g_laplacian.push(laplacian_of_product(pi, l - 1, &bonds));
        }
        let mut v = vec![lambda; (n_max + 1).min(2)];
        for n in 2..=n_max {
            let num = lambda - (2..=n).map(|l| g_laplacian[l]).sum::<f64>() / (sigma2 * eps);
            let den = 1.0 + (2..=n).map(|l| (l - 1) as f64 * g[l][0]).sum::<f64>();
            v.push(num / den);
        }
        // f_l / f_{l-1} = p^ + (sum_{m=1}^{l-1} g_{m+1} f_{l-1-m} + e_l) / f_{l-1};
        // with p^ = 1 - eps + lambda eps D^ the first part of r_l is
        // (lambda - v_l) D^ + v_l - 1.
        let mut r = vec![Vec::new()];
        let mut excluded = Vec::new();
        for l in 1..=n_max {
            let row = (0..npts)
                .map(|i| {
                    if f[l - 1][i].abs() < VANISHING {
                        excluded.push((l, i));
                        return f64::NAN;
                    }
                    let mut rest = e[l][i];
                    for m in 1..l {
                        rest += g[m + 1][i] * f[l - 1 - m][i];
                    }
                    let d_hat = 1.0 - a[i];
                    (lambda - v[l]) * d_hat + (v[l] - 1.0) + rest / f[l - 1][i] / eps
                })
                .collect();
            r.push(row);
        }
        Ok(InductionState {
            d,
            eps,
            lambda,
            beta: params.kernel.beta(),
            sigma2,
            n_max,
            grid,
            a,
            f,
            e,
            g,
            g_laplacian,
            v,
            r,
            excluded,
            max_imaginary,
            lambda_n: None,
            constants,
        })
    }

    pub fn with_lambda_sequence(mut self, lambda_n: Vec<f64>) -> Self {
        self.lambda_n = Some(lambda_n);
        self
    }

    /// `max_k |prod_{l<=m} (1 - eps v_l a + eps r_l) - f_m|` over points
    /// with every factor defined.
    pub fn reconstruction_error(&self, m: usize) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.grid.len() {
            let mut prod = 1.0;
            let mut ok = true;
            for l in 1..=m {
                let rl = self.r[l][i];
                if rl.is_nan() {
                    ok = false;
                    break;
                }
                prod *= 1.0 - self.eps * self.v[l] * self.a[i] + self.eps * rl;
            }
            if ok {
                worst = worst.max((prod - self.f[m][i]).abs());
            }
        }
        worst
    }

    /// `|prod_{l<=m} (1 + eps r_l(0)) - f_m(0)|`.
    pub fn f0_error(&self, m: usize) -> f64 {
        let prod: f64 = (1..=m).map(|l| 1.0 + self.eps * self.r[l][0]).product();
        (prod - self.f[m][0]).abs()
    }

    /// `s_l(k) = (eps v_l r_l(0) a(k) + r_l(k) - r_l(0)) / (1 + eps r_l(0))`.
    pub fn s(&self, l: usize) -> Vec<f64> {
        let r0 = self.r[l][0];
        (0..self.grid.len())
            .map(|i| {
                (self.eps * self.v[l] * r0 * self.a[i] + self.r[l][i] - r0)
                    / (1.0 + self.eps * r0)
            })
            .collect()
    }

    /// `max_k |f_m(0) prod_{l<=m}(1 - eps v_l a + eps s_l) - f_m|`.
    pub fn reexpression_error(&self, m: usize) -> f64 {
        let s: Vec<Vec<f64>> = (1..=m).map(|l| self.s(l)).collect();
        let f0 = self.f[m][0];
        let mut worst = 0.0f64;
        for i in 0..self.grid.len() {
            let mut prod = f0;
            for l in 1..=m {
                prod *= 1.0 - self.eps * self.v[l] * self.a[i] + self.eps * s[l - 1][i];
            }
            if prod.is_finite() {
                worst = worst.max((prod - self.f[m][i]).abs());
            }
        }
        worst
    }

    /// Whether `k` (grid index) lies in `A_m`.
    pub fn in_a_m(&self, m: usize, i: usize) -> bool {
        let x = 1.0 + m as f64 * self.eps;
        self.a[i] <= self.constants.gamma * (2.0 + m as f64 * self.eps).ln() / x
    }

    /// `beta`, or `beta_hat_T` in the scaled-range variant.
    fn effective_beta(&self) -> f64 {
        match self.constants.low_dim {
            Some(low) if self.d <= 4 => low.beta_hat(self.d),
            _ => self.beta,
        }
    }

    /// Interval `I_n` around `lambda_n`.
    pub fn interval(&self, n: usize) -> Option<(f64, f64)> {
        let lam = self.lambda_n.as_ref()?.get(n)?;
        let x = 1.0 + n as f64 * self.eps;
        let width = match self.constants.low_dim {
            Some(low) if self.d <= 4 => {
                self.constants.k1 * self.effective_beta() / x.powf(1.0 + low.omega)
            }
            _ => self.constants.k1 * self.beta / x.powf((self.d as f64 - 2.0) / 2.0),
        };
        Some((lam - width, lam + width))
    }

    /// Whether `I_0 ⊃ I_1 ⊃ ... ⊃ I_n`.
    pub fn intervals_nested(&self, n: usize) -> Option<bool> {
        let mut prev = self.interval(0)?;
        for m in 1..=n {
            let cur = self.interval(m)?;
            if cur.0 < prev.0 || cur.1 > prev.1 {
                return Some(false);
            }
            prev = cur;
        }
        Some(true)
    }

    /// Evaluates (H1)-(H4) for `m = 1..=n`.
    pub fn check_hypotheses(&self, n: usize) -> Result<HypothesisReport> {
        if n > self.n_max {
            return Err(Error::validation("n", format!("sequences stop at {}", self.n_max)));
        }
        let c = &self.constants;
        let eps = self.eps;
        let df = self.d as f64;
        let beta = self.effective_beta();
        let low = c.low_dim.filter(|_| self.d <= 4);
        let (h1_exp, h2_exp, h3_exp) = match low {
            Some(l) => (2.0 + l.omega, 1.0 + l.omega, 1.0 + l.omega),
            None => (df / 2.0, (df - 2.0) / 2.0, (df - 2.0) / 2.0),
        };
        let mut rows = Vec::new();
        let mut push = |m: usize, h: Hypothesis, k: Option<usize>, left: f64, bound: f64| {
            rows.push(HypothesisRow {
                m,
                hypothesis: h,
                k_index: k,
                left,
                bound,
                margin: bound - left.abs(),
            });
        };
        for m in 1..=n {
            let x = 1.0 + m as f64 * eps;
            if let Some(lam) = &self.lambda_n {
                if m < lam.len() {
                    push(
                        m,
                        Hypothesis::H1,
                        None,
                        lam[m] - lam[m - 1],
                        eps * c.k1 * beta / x.powf(h1_exp),
                    );
                }
            }
            push(
                m,
                Hypothesis::H2,
                None,
                self.v[m] - self.v[m - 1],
                eps * c.k2 * beta / x.powf(h2_exp),
            );
            let r0 = self.r[m][0];
            push(m, Hypothesis::H3Zero, Some(0), r0, c.k3 * beta / x.powf(h3_exp));
            let mut worst: [Option<(usize, f64, f64)>; 3] = [None; 3];
            let mut keep = |slot: usize, i: usize, left: f64, bound: f64| {
                let margin = bound - left.abs();
                if worst[slot].map_or(true, |(_, l, b)| margin < b - l.abs()) {
                    worst[slot] = Some((i, left, bound));
                }
            };
            for i in 0..self.grid.len() {
                let ak = self.a[i];
                if self.in_a_m(m, i) {
                    let rk = self.r[m][i];
                    if !rk.is_nan() {
                        keep(0, i, rk - r0, c.k3 * beta * ak / x.powf(c.delta));
                    }
                } else {
                    let fm = self.f[m][i];
                    keep(1, i, fm, c.k4 * ak.powf(-2.0 - c.rho) / x.powf(df / 2.0));
                    keep(
                        2,
                        i,
                        fm - self.f[m - 1][i],
                        eps * c.k5 * ak.powf(-1.0 - c.rho) / x.powf(df / 2.0),
                    );
                }
            }
            let kinds = [Hypothesis::H3Diff, Hypothesis::H4Abs, Hypothesis::H4Diff];
            for (slot, h) in kinds.into_iter().enumerate() {
                if let Some((i, left, bound)) = worst[slot] {
                    push(m, h, Some(i), left, bound);
                }
            }
        }
        Ok(HypothesisReport {
            rows,
            nested: self.intervals_nested(n),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    H1,
    H2,
    /// `|r_m(0)|`.
    H3Zero,
    /// `|r_m(k) - r_m(0)|` on `A_m`.
    H3Diff,
    /// `|f_m(k)|` off `A_m`.
    H4Abs,
    /// `|f_m(k) - f_{m-1}(k)|` off `A_m`.
    H4Diff,
}

/// One inequality; for the `k`-dependent ones only the worst grid point
/// per `m` is kept.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisRow {
    pub m: usize,
    pub hypothesis: Hypothesis,
    pub k_index: Option<usize>,
    pub left: f64,
    pub bound: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub rows: Vec<HypothesisRow>,
    /// Interval nesting, when `lambda_n` is known.
    pub nested: Option<bool>,
}

impl HypothesisReport {
    pub fn worst(&self) -> Option<&HypothesisRow> {
        self.rows
            .iter()
            .min_by(|a, b| a.margin.total_cmp(&b.margin))
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.rows.iter().all(|r| r.margin >= -tol)
    }

    pub fn passes_for(&self, h: Hypothesis, tol: f64) -> bool {
        self.rows
            .iter()
            .filter(|r| r.hypothesis == h)
            .all(|r| r.margin >= -tol)
    }

    /// Factor by which the constant of `h` would have to grow for every
    /// row of `h` to pass (at most 1 when it already passes).
    pub fn required_scale(&self, h: Hypothesis) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.hypothesis == h && r.bound > 0.0)
            .map(|r| r.left.abs() / r.bound)
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("m,hypothesis,k_index,left,bound,margin\n");
        for r in &self.rows {
            let k = r.k_index.map(|k| k.to_string()).unwrap_or_default();
            s.push_str(&format!(
                "{},{:?},{},{:e},{:e},{:e}\n",
                r.m, r.hypothesis, k, r.left, r.bound, r.margin
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_two_point_dp_capped;
    use crate::kernel::make_uniform_kernel;
    use crate::lace::{invert_to_pi, ExactExtractor, RandomWalkExtractor};
    use proptest::prelude::*;

    fn rw_state(d: usize, eps: f64, lambda: f64, n: usize, side: usize) -> InductionState {
        static KERNELS: std::sync::OnceLock<Vec<crate::kernel::KernelD>> = std::sync::OnceLock::new();
        let kernels = KERNELS.get_or_init(|| (1..=5).map(|d| make_uniform_kernel(d, 1).unwrap()).collect());
        let params = ModelParams::with_radius(kernels[d - 1].clone(), eps, lambda, n, 0).unwrap();
        let pi = SpaceTimeField::delta(d, eps, n, 0);
        let sigma2 = crate::kernel::kernel_moments(&params.kernel, 1.0).sigma2;
        let c = if d > 4 { InductionConstants::default() } else { tiny_constants() };
        InductionState::from_pi(&pi, &params, sigma2, side, c).unwrap()
    }

    fn tiny_constants() -> InductionConstants {
        InductionConstants {
            low_dim: Some(LowDim { b: 3.0, big_t: 8.0, l1: 1.0, mu: 0.5, omega: 0.6 }),
            rho: -1.9,
            gamma: 0.45,
            delta: 0.02,
            ..Default::default()
        }
    }

    #[test]
    fn orbit_weights_cover_the_torus() {
        for (d, side) in [(1, 8), (2, 6), (3, 4), (5, 16)] {
            let g = SymmetricGrid::new(d, side).unwrap();
            let total: u64 = g.weight.iter().sum();
            assert_eq!(total, (side as u64).pow(d as u32));
            assert!(g.k[0].iter().all(|v| *v == 0.0));
        }
        assert_eq!(SymmetricGrid::new(5, 16).unwrap().len(), 1287);
    }

    #[test]
    fn random_walk_at_one_is_trivial() {
        let s = rw_state(5, 1.0, 1.0, 50, 8);
        assert!(s.v.iter().all(|v| *v == 1.0));
        for l in 1..=50 {
            assert!(s.r[l].iter().all(|v| v.is_nan() || *v == 0.0), "l={l}");
        }
        let base = ModelParams::with_radius(make_uniform_kernel(5, 1).unwrap(), 1.0, 1.0, 50, 0).unwrap();
        let lam = lambda_sequence(&RandomWalkExtractor { base }, 50).unwrap();
        assert!(lam.iter().all(|v| *v == 1.0));
        let s = s.with_lambda_sequence(lam);
        let rep = s.check_hypotheses(50).unwrap();
        assert!(rep.passes(0.0), "{:?}", rep.worst());
        assert_eq!(rep.nested, Some(true));
    }

    #[test]
    fn random_walk_below_one_has_constant_r() {
        let s = rw_state(1, 0.5, 0.8, 20, 16);
        for l in 1..=20 {
            for v in &s.r[l] {
                assert!(v.is_nan() || (v + 0.2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn first_step_remainder() {
        let s = rw_state(5, 0.25, 1.3, 3, 8);
        assert!(s.r[1].iter().all(|v| (v - 0.3).abs() < 1e-12));
    }

    #[test]
    fn exact_model_identities() {
        // box-restricted exact process, long horizon
        let base =
            ModelParams::with_radius(make_uniform_kernel(1, 1).unwrap(), 1.0, 0.8, 50, 6).unwrap();
        let tau = exact_two_point_dp_capped(&base, 20).unwrap();
        let pi = invert_to_pi(&tau, &base).unwrap();
        let s = InductionState::from_pi(&pi, &base, 1.0, 16, tiny_constants()).unwrap();
        for m in 1..=50 {
            assert!(s.reconstruction_error(m) < 1e-10, "m={m}");
            assert!(s.f0_error(m) < 1e-10);
            assert!(s.reexpression_error(m) < 1e-10);
        }
    }

    #[test]
    fn exact_lambda_sequence() {
        let base = ModelParams::new(make_uniform_kernel(1, 1).unwrap(), 1.0, 1.0, 4).unwrap();
        let lam = lambda_sequence(&ExactExtractor { base }, 5).unwrap();
        assert_eq!(lam[0], 1.0);
        assert_eq!(lam[1], 1.0);
        assert!(lam.windows(2).all(|w| w[1] >= w[0]));
        let steps: Vec<f64> = lam.windows(2).map(|w| w[1] - w[0]).collect();
        // lambda_2 = 1: no pi mass one step after the origin
        assert_eq!(steps[1], 0.0);
        assert!(steps[2..].windows(2).all(|w| w[1] < w[0]), "{steps:?}");
    }

    #[test]
    fn chain_rejects_bad_exponents() {
        let c = InductionConstants::default();
        assert!(c.validate(5).is_ok());
        assert!(InductionConstants { gamma: 0.1, ..c }.validate(5).is_err());
        assert!(InductionConstants { gamma: 0.45, ..c }.validate(5).is_err());
        assert!(c.validate(3).is_err());
        assert!(tiny_constants().validate(1).is_ok());
        assert!(InductionConstants { k1: 50.0, ..c }.validate(5).is_err());
    }

    proptest! {
        #[test]
        fn chain_validation_matches_definition(
            gamma in -0.5f64..1.5, delta in -0.2f64..1.0, rho in -2.5f64..1.5, d in 5usize..9,
        ) {
            let c = InductionConstants { gamma, delta, rho, ..Default::default() };
            let df = d as f64;
            let ok = -(2.0 + rho) < 0.0
                && 0.0 < df / 2.0 - (2.0 + rho)
                && df / 2.0 - (2.0 + rho) < gamma
                && gamma < gamma + delta
                && gamma + delta < 1f64.min((df - 4.0) / 2.0);
            prop_assert_eq!(c.validate(d).is_ok(), ok);
        }

        #[test]
        fn nesting_follows_from_h1(lam_steps in proptest::collection::vec(-1.0f64..1.0, 1..20)) {
            // lambda_n built to satisfy (H1) exactly up to a factor
            let mut s = rw_state(5, 0.5, 1.0, 2, 4);
            let k1 = s.constants.k1;
            let mut lam = vec![1.0];
            for (i, u) in lam_steps.iter().enumerate() {
                let m = i + 1;
                let x = 1.0 + m as f64 * s.eps;
                let step = s.eps * k1 * s.beta / x.powf(2.5);
                lam.push(lam[m - 1] + u * step);
            }
            let n = lam.len() - 1;
            s.lambda_n = Some(lam);
            prop_assert_eq!(s.intervals_nested(n), Some(true));
        }
    }
}
