//! Finite cubic windows `[-R, R]^d` of `Z^d` and dense/sparse spatial
//! convolution on them.
//!
//! Offsets are stored lexicographically: the first coordinate is the most
//! significant one. Convolution results falling outside the window are
//! dropped, which is exact whenever the true support fits inside.

/// A cubic window of half-width `radius` in `d` dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Window {
    pub d: usize,
    pub radius: usize,
}

impl Window {
    pub fn new(d: usize, radius: usize) -> Self {
        Window { d, radius }
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn size(&self) -> usize {
        self.side().pow(self.d as u32)
    }

    /// Index of the origin.
    pub fn origin(&self) -> usize {
        // (R, R, ..., R) in mixed radix
        let side = self.side();
        (0..self.d).fold(0, |acc, _| acc * side + self.radius)
    }

    pub fn index(&self, x: &[i64]) -> Option<usize> {
        debug_assert_eq!(x.len(), self.d);
        let r = self.radius as i64;
        let side = self.side();
        let mut idx = 0usize;
        for &xi in x {
            if xi < -r || xi > r {
                return None;
            }
            idx = idx * side + (xi + r) as usize;
        }
        Some(idx)
    }

    pub fn offset(&self, mut idx: usize) -> Vec<i64> {
        let side = self.side();
        let r = self.radius as i64;
        let mut x = vec![0i64; self.d];
        for i in (0..self.d).rev() {
            x[i] = (idx % side) as i64 - r;
            idx /= side;
        }
        x
    }

    /// All offsets in index order.
    pub fn offsets(&self) -> Vec<Vec<i64>> {
        (0..self.size()).map(|i| self.offset(i)).collect()
    }

    /// Index of `offset(a) + shift`, if inside.
    pub fn shifted(&self, a: usize, shift: &[i64]) -> Option<usize> {
        let mut x = self.offset(a);
        for (xi, s) in x.iter_mut().zip(shift) {
            *xi += s;
        }
        self.index(&x)
    }

    /// Index of `-offset(a)`.
    pub fn negated(&self, a: usize) -> usize {
        self.size() - 1 - a
    }
}

pub fn norm2(x: &[i64]) -> f64 {
    x.iter().map(|&v| (v * v) as f64).sum()
}

pub fn norm_inf(x: &[i64]) -> i64 {
    x.iter().map(|v| v.abs()).max().unwrap_or(0)
}

/// Sparse kernel on a window: precomputed index shifts for a list of offsets.
///
/// `apply` convolves a dense window array with the kernel. The shift of an
/// index by an offset is the same for every base index as long as the
/// result stays inside, so it is resolved coordinate-wise.
#[derive(Debug, Clone)]
pub struct SparseKernel {
    pub window: Window,
    pub entries: Vec<(Vec<i64>, f64)>,
    coords: Vec<Vec<i64>>,
}

impl SparseKernel {
    pub fn new(window: Window, entries: Vec<(Vec<i64>, f64)>) -> Self {
        SparseKernel {
            window,
            entries,
            coords: window.offsets(),
        }
    }

    /// `(f * k)(x) = sum_z f(x - z) k(z)`, truncated to the window.
    pub fn apply(&self, f: &[f64], out: &mut [f64]) {
        let w = self.window;
        debug_assert_eq!(f.len(), w.size());
        out.iter_mut().for_each(|v| *v = 0.0);
        for (a, fa) in f.iter().enumerate() {
            if *fa == 0.0 {
                continue;
            }
            let xa = &self.coords[a];
            for (z, kz) in &self.entries {
                let mut idx = 0usize;
                let mut inside = true;
                let r = w.radius as i64;
                for i in 0..w.d {
                    let y = xa[i] + z[i];
                    if y < -r || y > r {
                        inside = false;
                        break;
                    }
                    idx = idx * w.side() + (y + r) as usize;
                }
                if inside {
                    out[idx] += fa * kz;
                }
            }
        }
    }
}

/// Dense convolution `(f * g)(x) = sum_y f(y) g(x - y)` on a window, adding
/// into `out`. Zero entries of either factor are skipped.
pub fn convolve_add(w: &Window, f: &[f64], g: &[f64], out: &mut [f64]) {
    let nz_g: Vec<(usize, f64)> = g
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (i, *v))
        .collect();
    if nz_g.is_empty() {
        return;
    }
    let side = w.side() as i64;
    let r = w.radius as i64;
    let coords: Vec<Vec<i64>> = w.offsets();
    for (a, fa) in f.iter().enumerate() {
        if *fa == 0.0 {
            continue;
        }
        let xa = &coords[a];
        for &(b, gb) in &nz_g {
            let xb = &coords[b];
            let mut idx = 0i64;
            let mut inside = true;
            for i in 0..w.d {
                let y = xa[i] + xb[i];
                if y < -r || y > r {
                    inside = false;
                    break;
                }
                idx = idx * side + (y + r);
            }
            if inside {
                out[idx as usize] += fa * gb;
            }
        }
    }
}
