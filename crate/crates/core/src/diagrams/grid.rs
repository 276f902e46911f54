//! Space-time points of a window and functions of space-time
//! displacements.
//!
//! A point is `(n, site)` with index `n * S + site`, the same layout as
//! [`SpaceTimeField::data`]. A displacement function is stored on the same
//! points, read as `f(t, x)` for `t = n eps >= 0`.

use crate::field::SpaceTimeField;
use crate::lattice::Window;
use crate::model::ModelParams;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct StGrid {
    pub d: usize,
    pub radius: usize,
    pub n_max: usize,
    pub eps: f64,
    pub window: Window,
    /// Sites per slice.
    pub s: usize,
    /// Total points.
    pub w: usize,
    coords: Vec<Vec<i64>>,
    /// `diff[a * w + b]` is the index of `b - a`, or `NONE`.
    diff: Vec<u32>,
}

impl StGrid {
    pub fn new(d: usize, radius: usize, n_max: usize, eps: f64) -> Self {
        let window = Window::new(d, radius);
        let s = window.size();
        let w = s * (n_max + 1);
        let coords = window.offsets();
        let mut diff = vec![NONE; w * w];
        for a in 0..w {
            let (na, sa) = (a / s, a % s);
            for b in 0..w {
                let (nb, sb) = (b / s, b % s);
                if nb < na {
                    continue;
                }
                let z: Vec<i64> = coords[sb]
                    .iter()
                    .zip(&coords[sa])
                    .map(|(x, y)| x - y)
                    .collect();
                if let Some(i) = window.index(&z) {
                    diff[a * w + b] = ((nb - na) * s + i) as u32;
                }
            }
        }
        StGrid {
            d,
            radius,
            n_max,
            eps,
            window,
            s,
            w,
            coords,
            diff,
        }
    }

    pub fn for_params(params: &ModelParams) -> Self {
        Self::new(params.d(), params.radius, params.n_max, params.eps)
    }

    pub fn origin(&self) -> usize {
        self.window.origin()
    }

    pub fn slice_of(&self, a: usize) -> usize {
        a / self.s
    }

    pub fn site_coords(&self, a: usize) -> &[i64] {
        &self.coords[a % self.s]
    }

    /// Index of `b - a`, if it is a forward displacement inside the grid.
    #[inline]
    pub fn diff(&self, a: usize, b: usize) -> Option<usize> {
        let v = self.diff[a * self.w + b];
        (v != NONE).then_some(v as usize)
    }

    /// `a + (dn, dz)`.
    pub fn shift(&self, a: usize, dn: i64, dz: &[i64]) -> Option<usize> {
        let n = self.slice_of(a) as i64 + dn;
        if n < 0 || n > self.n_max as i64 {
            return None;
        }
        let x: Vec<i64> = self
            .site_coords(a)
            .iter()
            .zip(dz)
            .map(|(c, z)| c + z)
            .collect();
        self.window.index(&x).map(|i| n as usize * self.s + i)
    }

    /// `(f * g)(X) = sum_Y f(Y) g(X - Y)`.
    pub fn conv(&self, f: &[f64], g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.w];
        for (y, fy) in f.iter().enumerate() {
            if *fy == 0.0 {
                continue;
            }
            for (x, o) in out.iter_mut().enumerate() {
                if let Some(dz) = self.diff(y, x) {
                    *o += fy * g[dz];
                }
            }
        }
        out
    }

    pub fn delta(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.w];
        v[self.origin()] = 1.0;
        v
    }

    /// A one-step bond function: `g(eps, z)` for listed offsets.
    pub fn bond_function(&self, entries: &[(Vec<i64>, f64)]) -> Vec<f64> {
        let mut v = vec![0.0; self.w];
        if self.n_max >= 1 {
            for (z, m) in entries {
                if let Some(i) = self.window.index(z) {
                    v[self.s + i] += m;
                }
            }
        }
        v
    }

    pub fn to_field(&self, data: Vec<f64>) -> SpaceTimeField {
        SpaceTimeField {
            d: self.d,
            eps: self.eps,
            n_max: self.n_max,
            radius: self.radius,
            data,
        }
    }
}
