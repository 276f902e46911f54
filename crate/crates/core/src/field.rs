//! Real-valued functions on a space-time window `{0..=n_max} x [-R, R]^d`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{fft_nd, wrap};
use crate::lattice::{norm2, Window};

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    pub d: usize,
    pub eps: f64,
    pub n_max: usize,
    pub radius: usize,
    /// Row-major `(n, x)` values, slices `0..=n_max`.
    pub data: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(d: usize, eps: f64, n_max: usize, radius: usize) -> Self {
        let w = Window::new(d, radius);
        SpaceTimeField {
            d,
            eps,
            n_max,
            radius,
            data: vec![0.0; (n_max + 1) * w.size()],
        }
    }

    /// `delta_{(n, x), (0, o)}`.
    pub fn delta(d: usize, eps: f64, n_max: usize, radius: usize) -> Self {
        let mut f = Self::zeros(d, eps, n_max, radius);
        let o = f.window().origin();
        f.slice_mut(0)[o] = 1.0;
        f
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.d, self.eps, self.n_max, self.radius)
    }

    pub fn window(&self) -> Window {
        Window::new(self.d, self.radius)
    }

    pub fn slice_len(&self) -> usize {
        self.window().size()
    }

    pub fn slice(&self, n: usize) -> &[f64] {
        let s = self.slice_len();
        &self.data[n * s..(n + 1) * s]
    }

    pub fn slice_mut(&mut self, n: usize) -> &mut [f64] {
        let s = self.slice_len();
        &mut self.data[n * s..(n + 1) * s]
    }

    pub fn get(&self, n: usize, x: &[i64]) -> f64 {
        self.window()
            .index(x)
            .map(|i| self.slice(n)[i])
            .unwrap_or(0.0)
    }

    pub fn set(&mut self, n: usize, x: &[i64], v: f64) {
        let i = self.window().index(x).expect("offset outside window");
        self.slice_mut(n)[i] = v;
    }

    /// `f^_n(0) = sum_x f_n(x)`.
    pub fn mass(&self, n: usize) -> f64 {
        self.slice(n).iter().sum()
    }

    /// `sum_x |x|^2 f_n(x)`, equal to `-nabla^2 f^_n(0)`.
    pub fn second_moment(&self, n: usize) -> f64 {
        let w = self.window();
        self.slice(n)
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| norm2(&w.offset(i)) * v)
            .sum()
    }

    pub fn sup(&self, n: usize) -> f64 {
        self.slice(n).iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `f^_n(k)` by direct summation.
    pub fn fourier_at(&self, n: usize, kv: &[f64]) -> Complex64 {
        let w = self.window();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, v) in self.slice(n).iter().enumerate() {
            if *v != 0.0 {
                let ph: f64 = w
                    .offset(i)
                    .iter()
                    .zip(kv)
                    .map(|(a, b)| *a as f64 * b)
                    .sum();
                acc += Complex64::from_polar(*v, ph);
            }
        }
        acc
    }

    /// Slice `n` transformed on the `side^d` dual grid (FFT order). The side
    /// must be at least the window side, otherwise the transform aliases.
    pub fn fourier_slice(&self, n: usize, side: usize) -> Result<Vec<Complex64>> {
        let w = self.window();
        if side < w.side() {
            return Err(Error::GridTooSmall {
                side,
                required: w.side(),
            });
        }
        let mut data = vec![Complex64::new(0.0, 0.0); side.pow(self.d as u32)];
        for (i, v) in self.slice(n).iter().enumerate() {
            if *v != 0.0 {
                let idx = w
                    .offset(i)
                    .iter()
                    .fold(0, |acc, &xi| acc * side + wrap(xi, side));
                data[idx] += Complex64::new(*v, 0.0);
            }
        }
        fft_nd(&mut data, self.d, side, 1);
        Ok(data)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.d != other.d || self.n_max != other.n_max || self.radius != other.radius {
            return Err(Error::Mismatch(format!(
                "shape (d={}, n_max={}, R={}) vs (d={}, n_max={}, R={})",
                self.d, self.n_max, self.radius, other.d, other.n_max, other.radius
            )));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copy onto a window of a different radius; entries outside the new
    /// window are dropped.
    pub fn resized(&self, radius: usize) -> Self {
        let mut out = Self::zeros(self.d, self.eps, self.n_max, radius);
        let w = self.window();
        let nw = out.window();
        for n in 0..=self.n_max {
            for (i, v) in self.slice(n).iter().enumerate() {
                if let Some(j) = nw.index(&w.offset(i)) {
                    out.slice_mut(n)[j] = *v;
                }
            }
        }
        out
    }

    /// Copy restricted to slices `0..=n_max`.
    pub fn truncated(&self, n_max: usize) -> Self {
        let n_max = n_max.min(self.n_max);
        let s = self.slice_len();
        SpaceTimeField {
            d: self.d,
            eps: self.eps,
            n_max,
            radius: self.radius,
            data: self.data[..(n_max + 1) * s].to_vec(),
        }
    }

    /// Smallest sup-norm radius containing every nonzero entry of slice `n`.
    pub fn support_radius(&self, n: usize) -> usize {
        let w = self.window();
        self.slice(n)
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| crate::lattice::norm_inf(&w.offset(i)) as usize)
            .max()
            .unwrap_or(0)
    }
}
