//! The triangle `eps^2 sum_{n <= N} sum_{m <= n} sum_{x,y}
//! tau_n(y) tau_{n-m}(y - x) tau_m(x)`, by Fourier quadrature and by direct
//! summation.

use num_complex::Complex64;
use serde::Serialize;

use crate::analysis::fit::power_law_tail;
use crate::error::Result;
use crate::field::SpaceTimeField;
use crate::lattice::convolve_add;

#[derive(Debug, Clone, Serialize)]
pub struct TriangleEstimate {
    /// Sum up to the cutoff slice.
    pub value: f64,
    /// Time cutoff `N eps`.
    pub cutoff: f64,
    /// `eps sum_m (...)` for each outer slice `n`.
    pub rows: Vec<f64>,
    pub tail_exponent: Option<f64>,
    /// Extrapolated contribution of the slices beyond the cutoff.
    pub tail_estimate: Option<f64>,
}

/// Smallest even torus side on which the quadrature has no wrap-around.
fn alias_free_side(radius: usize) -> usize {
    let s = 3 * radius + 1;
    s + s % 2
}

fn finish(rows: Vec<f64>, eps: f64) -> TriangleEstimate {
    let n_max = rows.len() - 1;
    let value = eps * rows.iter().sum::<f64>();
    let vals: Vec<(usize, f64)> = rows.iter().cloned().enumerate().collect();
    let (tail_exponent, tail) = power_law_tail(&vals, n_max);
    TriangleEstimate {
        value,
        cutoff: n_max as f64 * eps,
        rows,
        tail_exponent,
        tail_estimate: tail.map(|t| eps * t),
    }
}

/// Fourier route: `(1/M^d) sum_k tau^_n(k) tau^_{n-m}(k) tau^_m(k)` on an
/// alias-free grid, using `tau^(-k) = tau^(k)`.
pub fn triangle_estimate(tau: &SpaceTimeField) -> Result<TriangleEstimate> {
    let side = alias_free_side(tau.radius);
    let hats: Vec<Vec<Complex64>> = (0..=tau.n_max)
        .map(|n| tau.fourier_slice(n, side))
        .collect::<Result<_>>()?;
    let norm = (side as f64).powi(tau.d as i32);
    let rows = (0..=tau.n_max)
        .map(|n| {
            let mut acc = 0.0;
            for m in 0..=n {
                let s: f64 = hats[n]
                    .iter()
                    .zip(&hats[n - m])
                    .zip(&hats[m])
                    .map(|((a, b), c)| (a * b * c).re)
                    .sum();
                acc += s / norm;
            }
            tau.eps * acc
        })
        .collect();
    Ok(finish(rows, tau.eps))
}

/// Direct route: `sum_y tau_n(y) (tau_{n-m} * tau_m)(y)` on the window. The
/// convolution is only needed where `tau_n` lives, so truncation is exact.
pub fn triangle_direct(tau: &SpaceTimeField) -> TriangleEstimate {
    let w = tau.window();
    let rows = (0..=tau.n_max)
        .map(|n| {
            let mut acc = 0.0;
            for m in 0..=n {
                let mut conv = vec![0.0; w.size()];
                convolve_add(&w, tau.slice(n - m), tau.slice(m), &mut conv);
                acc += tau.slice(n).iter().zip(&conv).map(|(a, b)| a * b).sum::<f64>();
            }
            tau.eps * acc
        })
        .collect();
    finish(rows, tau.eps)
}
