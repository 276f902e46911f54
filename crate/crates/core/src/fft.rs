//! Multi-dimensional FFT on `side^d` tori, built axis by axis on rustfft.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

/// In-place transform of a row-major `side^d` array.
///
/// With `sign = +1` this computes `F(m) = sum_x f(x) e^{+2 pi i m.x / side}`,
/// matching the convention `f^(k) = sum_x f(x) e^{i k.x}`. With `sign = -1`
/// the exponent is negated. No normalisation is applied either way.
pub fn fft_nd(data: &mut [Complex64], d: usize, side: usize, sign: i32) {
    assert_eq!(data.len(), side.pow(d as u32));
    let direction = if sign > 0 {
        FftDirection::Inverse
    } else {
        FftDirection::Forward
    };
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft(side, direction);
    let mut line = vec![Complex64::new(0.0, 0.0); side];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..d {
        let stride = side.pow((d - 1 - axis) as u32);
        let outer = data.len() / side;
        for o in 0..outer {
            // base index with the axis coordinate set to zero
            let hi = o / stride;
            let lo = o % stride;
            let base = hi * stride * side + lo;
            for (j, v) in line.iter_mut().enumerate() {
                *v = data[base + j * stride];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for (j, v) in line.iter().enumerate() {
                data[base + j * stride] = *v;
            }
        }
    }
}

/// Torus coordinate of a signed lattice offset.
pub fn wrap(x: i64, side: usize) -> usize {
    x.rem_euclid(side as i64) as usize
}

/// Signed representative in `(-side/2, side/2]` of a torus coordinate.
pub fn unwrap(m: usize, side: usize) -> i64 {
    let m = m as i64;
    let s = side as i64;
    if m > s / 2 {
        m - s
    } else {
        m
    }
}
