//! The spread-out step distribution `D`: construction, moments, Fourier
//! transform, convolution powers and random-walk Green sums.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{fft_nd, unwrap, wrap};
use crate::lattice::{norm2, norm_inf, SparseKernel, Window};

/// Largest support `(2L+1)^d` accepted by [`make_uniform_kernel`].
pub const DEFAULT_SUPPORT_CAP: usize = 1 << 22;

const SUM_TOL: f64 = 1e-12;

/// A finitely supported, lattice-symmetric probability distribution on `Z^d`
/// with `D(o) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelD {
    d: usize,
    range: usize,
    /// `(offset, mass)` in lexicographic offset order, zero masses omitted.
    entries: Vec<(Vec<i64>, f64)>,
}

/// Serialized form: `{d, L, entries: [[offset, mass], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelJson {
    pub d: usize,
    #[serde(rename = "L")]
    pub range: usize,
    pub entries: Vec<(Vec<i64>, f64)>,
}

impl KernelD {
    /// Builds a kernel from explicit masses and checks every invariant.
    pub fn from_entries(d: usize, range: usize, mut entries: Vec<(Vec<i64>, f64)>) -> Result<Self> {
        if d == 0 {
            return Err(Error::validation("d", "dimension must be >= 1"));
        }
        if range == 0 {
            return Err(Error::validation("L", "range must be >= 1"));
        }
        entries.retain(|(_, m)| *m != 0.0);
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let k = KernelD { d, range, entries };
        k.validate()?;
        Ok(k)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Range parameter `L`.
    pub fn range(&self) -> usize {
        self.range
    }

    pub fn entries(&self) -> &[(Vec<i64>, f64)] {
        &self.entries
    }

    /// `beta = L^{-d}`.
    pub fn beta(&self) -> f64 {
        (self.range as f64).powi(-(self.d as i32))
    }

    pub fn mass(&self, x: &[i64]) -> f64 {
        self.entries
            .binary_search_by(|(y, _)| y.as_slice().cmp(x))
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn max_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.1).fold(0.0, f64::max)
    }

    /// Measured `C` in `sup_x D(x) <= C L^{-d}`.
    pub fn sup_constant(&self) -> f64 {
        self.max_mass() / self.beta()
    }

    /// Largest sup-norm of any offset in the support.
    pub fn support_radius(&self) -> usize {
        self.entries
            .iter()
            .map(|(x, _)| norm_inf(x) as usize)
            .max()
            .unwrap_or(0)
    }

    /// Dense array of the kernel on a window (must contain the support).
    pub fn on_window(&self, w: Window) -> Vec<f64> {
        let mut out = vec![0.0; w.size()];
        for (x, m) in &self.entries {
            if let Some(i) = w.index(x) {
                out[i] = *m;
            }
        }
        out
    }

    pub fn sparse(&self, w: Window) -> SparseKernel {
        SparseKernel::new(w, self.entries.clone())
    }

    pub fn validate(&self) -> Result<()> {
        let total: f64 = self.entries.iter().map(|e| e.1).sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::Invariant(format!("kernel mass sums to {total}, not 1")));
        }
        if self.entries.iter().any(|(x, m)| *m < 0.0 || x.len() != self.d) {
            return Err(Error::Invariant("negative mass or wrong offset dimension".into()));
        }
        if self.mass(&vec![0; self.d]) != 0.0 {
            return Err(Error::Invariant("D(o) must vanish".into()));
        }
        // lattice symmetries: every sign flip and coordinate permutation
        for (x, m) in &self.entries {
            for y in symmetry_orbit(x) {
                if (self.mass(&y) - m).abs() > SUM_TOL {
                    return Err(Error::Invariant(format!(
                        "kernel not lattice symmetric at {x:?} vs {y:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> KernelJson {
        KernelJson {
            d: self.d,
            range: self.range,
            entries: self.entries.clone(),
        }
    }

    pub fn from_json(j: KernelJson) -> Result<Self> {
        KernelD::from_entries(j.d, j.range, j.entries)
    }
}

/// Orbit of `x` under coordinate permutations and sign flips.
pub fn symmetry_orbit(x: &[i64]) -> Vec<Vec<i64>> {
    let d = x.len();
    let mut perms: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..d {
        let mut next = Vec::new();
        for p in &perms {
            for i in 0..d {
                if !p.contains(&i) {
                    let mut q = p.clone();
                    q.push(i);
                    next.push(q);
                }
            }
        }
        perms = next;
    }
    let mut out = Vec::new();
    for p in &perms {
        for signs in 0..(1u32 << d) {
            let y: Vec<i64> = (0..d)
                .map(|i| {
                    let v = x[p[i]];
                    if signs >> i & 1 == 1 {
                        -v
                    } else {
                        v
                    }
                })
                .collect();
            out.push(y);
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Uniform distribution over `0 < ||x||_inf <= L`.
pub fn make_uniform_kernel(d: usize, range: usize) -> Result<KernelD> {
    make_uniform_kernel_capped(d, range, DEFAULT_SUPPORT_CAP)
}

pub fn make_uniform_kernel_capped(d: usize, range: usize, cap: usize) -> Result<KernelD> {
    if d == 0 {
        return Err(Error::validation("d", "dimension must be >= 1"));
    }
    if range == 0 {
        return Err(Error::validation("L", "range must be >= 1"));
    }
    let side = 2 * range + 1;
    let size = side
        .checked_pow(d as u32)
        .filter(|s| *s <= cap)
        .ok_or(Error::CapExceeded {
            what: "kernel support (2L+1)^d",
            value: side.saturating_pow(d as u32),
            cap,
        })?;
    let mass = 1.0 / (size - 1) as f64;
    let w = Window::new(d, range);
    let entries = (0..size)
        .filter(|&i| i != w.origin())
        .map(|i| (w.offset(i), mass))
        .collect();
    KernelD::from_entries(d, range, entries)
}

/// Variance and higher moment of a kernel, with the measured constants of
/// the spread-out assumptions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelMoments {
    pub sigma2: f64,
    pub delta: f64,
    /// `sum_x |x|^{2+2 Delta} D(x)`.
    pub moment_2p2delta: f64,
    /// `sigma / L`; the assumption `C1 L <= sigma <= C2 L` holds with
    /// `C1 = C2 = sigma_over_l` for a single kernel.
    pub sigma_over_l: f64,
    /// Measured `C` in `sum |x|^{2+2 Delta} D <= C L^{2+2 Delta}`.
    pub delta_constant: f64,
    /// Measured `C` in `sup D <= C L^{-d}`.
    pub sup_constant: f64,
}

pub fn kernel_moments(k: &KernelD, delta: f64) -> KernelMoments {
    let sigma2: f64 = k.entries.iter().map(|(x, m)| norm2(x) * m).sum();
    let moment: f64 = k
        .entries
        .iter()
        .map(|(x, m)| norm2(x).powf(1.0 + delta) * m)
        .sum();
    let l = k.range as f64;
    KernelMoments {
        sigma2,
        delta,
        moment_2p2delta: moment,
        sigma_over_l: sigma2.sqrt() / l,
        delta_constant: moment / l.powf(2.0 + 2.0 * delta),
        sup_constant: k.sup_constant(),
    }
}

/// Values of a transform on the dual torus grid `k_j = 2 pi m_j / M`,
/// stored in FFT order (`m_j = 0..M`).
#[derive(Debug, Clone)]
pub struct FourierGrid {
    pub d: usize,
    pub side: usize,
    pub values: Vec<Complex64>,
}

impl FourierGrid {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Wave vector of grid point `idx`, each component in `(-pi, pi]`.
    pub fn k(&self, idx: usize) -> Vec<f64> {
        grid_k(self.d, self.side, idx)
    }

    /// Inverse transform back to the torus, as signed offsets with values.
    pub fn inverse(&self) -> Vec<(Vec<i64>, f64)> {
        let mut data = self.values.clone();
        fft_nd(&mut data, self.d, self.side, -1);
        let n = data.len() as f64;
        let mut out = Vec::with_capacity(data.len());
        for (idx, v) in data.iter().enumerate() {
            let x = torus_offset(self.d, self.side, idx);
            out.push((x, v.re / n));
        }
        out
    }
}

pub(crate) fn grid_k(d: usize, side: usize, mut idx: usize) -> Vec<f64> {
    let mut k = vec![0.0; d];
    for i in (0..d).rev() {
        let m = unwrap(idx % side, side);
        k[i] = 2.0 * std::f64::consts::PI * m as f64 / side as f64;
        idx /= side;
    }
    k
}

fn torus_offset(d: usize, side: usize, mut idx: usize) -> Vec<i64> {
    let mut x = vec![0; d];
    for i in (0..d).rev() {
        x[i] = unwrap(idx % side, side);
        idx /= side;
    }
    x
}

fn torus_index(x: &[i64], side: usize) -> usize {
    x.iter().fold(0, |acc, &xi| acc * side + wrap(xi, side))
}

/// Kernel transform with `a(k) = 1 - D^(k)` and the measured assumption
/// constants.
#[derive(Debug, Clone)]
pub struct KernelFourier {
    pub grid: FourierGrid,
    pub a: Vec<f64>,
    /// Min and max of `a(k) / (L^2 |k|^2)` over `0 < ||k||_inf <= 1/L`.
    pub small_k_ratio: (f64, f64),
    /// `2 - max_k a(k)`.
    pub eta: f64,
}

/// Default dual-grid side per dimension.
pub fn default_grid_side(d: usize) -> usize {
    if d <= 3 {
        64
    } else {
        16
    }
}

pub fn fourier_transform(k: &KernelD, side: usize) -> Result<KernelFourier> {
    let required = 2 * (2 * k.support_radius() + 1);
    if side % 2 != 0 || side < required {
        return Err(Error::GridTooSmall { side, required });
    }
    let mut data = vec![Complex64::new(0.0, 0.0); side.pow(k.d as u32)];
    for (x, m) in &k.entries {
        data[torus_index(x, side)] += Complex64::new(*m, 0.0);
    }
    fft_nd(&mut data, k.d, side, 1);
    let a: Vec<f64> = data.iter().map(|v| 1.0 - v.re).collect();
    let grid = FourierGrid {
        d: k.d,
        side,
        values: data,
    };
    let l = k.range as f64;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (idx, ak) in a.iter().enumerate() {
        let kv = grid.k(idx);
        let kinf = kv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if kinf > 0.0 && kinf <= 1.0 / l {
            let k2: f64 = kv.iter().map(|v| v * v).sum();
            let r = ak / (l * l * k2);
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    let amax = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(KernelFourier {
        grid,
        a,
        small_k_ratio: (lo, hi),
        eta: 2.0 - amax,
    })
}

/// `D^(k)` at an arbitrary wave vector, by direct summation.
pub fn kernel_hat(k: &KernelD, kv: &[f64]) -> f64 {
    k.entries
        .iter()
        .map(|(x, m)| {
            let ph: f64 = x.iter().zip(kv).map(|(a, b)| *a as f64 * b).sum();
            m * ph.cos()
        })
        .sum()
}

/// `D^{*m}` on the window of radius `m L`, by repeated direct convolution.
pub fn convolution_power_direct(k: &KernelD, m: usize) -> (Window, Vec<f64>) {
    let w = Window::new(k.d, m * k.support_radius());
    let mut cur = vec![0.0; w.size()];
    cur[w.origin()] = 1.0;
    let sk = k.sparse(w);
    let mut next = vec![0.0; w.size()];
    for _ in 0..m {
        sk.apply(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    (w, cur)
}

/// `D^{*m}` on the window of radius `m L`, via an FFT on a torus large
/// enough to avoid wraparound.
pub fn convolution_power_fft(k: &KernelD, m: usize) -> (Window, Vec<f64>) {
    let w = Window::new(k.d, m * k.support_radius());
    let mut side = (2 * w.radius + 2).next_power_of_two();
    if side < 2 {
        side = 2;
    }
    let mut data = vec![Complex64::new(0.0, 0.0); side.pow(k.d as u32)];
    for (x, mass) in &k.entries {
        data[torus_index(x, side)] += Complex64::new(*mass, 0.0);
    }
    fft_nd(&mut data, k.d, side, 1);
    for v in data.iter_mut() {
        *v = v.powu(m as u32);
    }
    fft_nd(&mut data, k.d, side, -1);
    let n = data.len() as f64;
    let mut out = vec![0.0; w.size()];
    for (i, o) in out.iter_mut().enumerate() {
        let x = w.offset(i);
        *o = data[torus_index(&x, side)].re / n;
    }
    (w, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailMode {
    FourierIntegral,
    Truncate,
}

/// Result of [`rw_greens_sum`].
#[derive(Debug, Clone, Serialize)]
pub struct GreensSum {
    /// The requested value (quadrature for the Fourier mode, partial sum
    /// plus fitted tail is reported separately).
    pub value: f64,
    /// Error estimate attached to `value`.
    pub error: f64,
    /// `sum_{n=2}^{n_max} D^{*n}(o)`, exact.
    pub partial_sum: f64,
    /// Individual return probabilities `D^{*n}(o)` for `n = 2..=n_max`.
    pub terms: Vec<f64>,
    /// Tail beyond `n_max` from a `c n^{-d/2}` fit (transient `d` only).
    pub tail_estimate: Option<f64>,
    /// `value / beta`.
    pub in_units_of_beta: f64,
}

/// `sum_{n>=2} D^{*n}(o)`, either by dual-torus quadrature of
/// `D^2 / (1 - D^)` or as a truncated sum.
pub fn rw_greens_sum(k: &KernelD, n_max: usize, mode: TailMode) -> Result<GreensSum> {
    rw_greens_sum_on_grid(k, n_max, mode, default_grid_side(k.d))
}

pub fn rw_greens_sum_on_grid(
    k: &KernelD,
    n_max: usize,
    mode: TailMode,
    side: usize,
) -> Result<GreensSum> {
    let terms = return_probabilities(k, n_max);
    let partial: f64 = terms.iter().sum();
    let transient = k.d >= 3;
    let tail_estimate = if transient { fit_tail(&terms, k.d) } else { None };
    let beta = k.beta();
    match mode {
        TailMode::Truncate => {
            let error = tail_estimate.unwrap_or(f64::NAN);
            Ok(GreensSum {
                value: partial,
                error,
                partial_sum: partial,
                terms,
                tail_estimate,
                in_units_of_beta: partial / beta,
            })
        }
        TailMode::FourierIntegral => {
            if !transient {
                return Err(Error::Divergent(k.d));
            }
            let fine = greens_quadrature(k, side)?;
            let coarse = greens_quadrature(k, side / 2).unwrap_or(fine);
            // the zero mode omitted on an M-torus is worth O(M^{2-d}); the
            // coarse/fine spread estimates it
            let error = (fine - coarse).abs();
            Ok(GreensSum {
                value: fine,
                error,
                partial_sum: partial,
                terms,
                tail_estimate,
                in_units_of_beta: fine / beta,
            })
        }
    }
}

fn greens_quadrature(k: &KernelD, side: usize) -> Result<f64> {
    let f = fourier_transform(k, side)?;
    let mut acc = 0.0;
    for (i, v) in f.grid.values.iter().enumerate() {
        if i == 0 {
            continue;
        }
        let dh = v.re;
        acc += dh * dh / (1.0 - dh);
    }
    Ok(acc / f.grid.len() as f64)
}

/// `D^{*n}(o)` for `n = 2..=n_max`, from pairs of half powers.
fn return_probabilities(k: &KernelD, n_max: usize) -> Vec<f64> {
    if n_max < 2 {
        return Vec::new();
    }
    let half = n_max.div_ceil(2);
    let w = Window::new(k.d, half * k.support_radius());
    let sk = k.sparse(w);
    let mut prev = vec![0.0; w.size()];
    prev[w.origin()] = 1.0;
    let mut cur = vec![0.0; w.size()];
    sk.apply(&prev, &mut cur);
    let mut out = Vec::with_capacity(n_max - 1);
    // cur = D^{*m}, prev = D^{*(m-1)}; D^{*2m}(o) = sum cur^2,
    // D^{*(2m-1)}(o) = sum prev * cur
    for _m in 1..=half {
        let odd: f64 = prev.iter().zip(&cur).map(|(a, b)| a * b).sum();
        let even: f64 = cur.iter().map(|a| a * a).sum();
        out.push(odd);
        out.push(even);
        let mut next = vec![0.0; w.size()];
        sk.apply(&cur, &mut next);
        prev = std::mem::replace(&mut cur, next);
    }
    // out holds n = 1, 2, 3, 4, ...; keep 2..=n_max
    out.into_iter().skip(1).take(n_max - 1).collect()
}

/// Tail `sum_{n > n_max} c n^{-d/2}` with `c` fitted to the last terms.
fn fit_tail(terms: &[f64], d: usize) -> Option<f64> {
    if terms.len() < 4 {
        return None;
    }
    let n_max = terms.len() + 1;
    let p = d as f64 / 2.0;
    let last = &terms[terms.len() - 4..];
    let c: f64 = last
        .iter()
        .enumerate()
        .map(|(i, t)| t * ((n_max - 3 + i) as f64).powf(p))
        .sum::<f64>()
        / 4.0;
    // Euler-Maclaurin: sum_{n>N} n^{-p} ~ N^{1-p}/(p-1) - N^{-p}/2
    let nn = n_max as f64;
    Some(c * (nn.powf(1.0 - p) / (p - 1.0) - 0.5 * nn.powf(-p)))
}
