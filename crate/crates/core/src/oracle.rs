//! Brute-force O(N^2) discrete Fourier transforms.
//!
//! Reference sums for tests only; nothing in the solvers calls into here.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::fft::{ComplexBuffer, Direction};
use crate::Complex64;

/// `X_k = sum_j x_j exp(-+ 2 pi i j k / N)`; the inverse is scaled by `1/N`.
pub fn dft(x: &[Complex64], direction: Direction) -> Vec<Complex64> {
    let n = x.len();
    let sign = match direction {
        Direction::Forward => -1.0,
        Direction::Inverse => 1.0,
    };
    let scale = match direction {
        Direction::Forward => 1.0,
        Direction::Inverse => 1.0 / n as f64,
    };
    (0..n)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &xj) in x.iter().enumerate() {
                let angle = sign * 2.0 * PI * ((j * k) % n) as f64 / n as f64;
                acc += xj * Complex64::new(libm::cos(angle), libm::sin(angle));
            }
            acc * scale
        })
        .collect()
}

/// Applies [`dft`] to every line of `buf` along `axis`.
pub fn dft_axis(buf: &ComplexBuffer, axis: usize, direction: Direction) -> ComplexBuffer {
    let shape = buf.shape();
    let mut out = buf.clone();
    let n = shape[axis];
    let (a, b) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    for i in 0..shape[a] {
        for j in 0..shape[b] {
            let at = |t: usize| {
                let mut idx = [0; 3];
                idx[axis] = t;
                idx[a] = i;
                idx[b] = j;
                idx
            };
            let line: Vec<Complex64> = (0..n)
                .map(|t| {
                    let [x, y, z] = at(t);
                    buf.get(x, y, z)
                })
                .collect();
            for (t, v) in dft(&line, direction).into_iter().enumerate() {
                let [x, y, z] = at(t);
                out.set(x, y, z, v);
            }
        }
    }
    out
}

/// Nested DFT over all three axes.
pub fn dft_nd(buf: &ComplexBuffer, direction: Direction) -> ComplexBuffer {
    let once = dft_axis(buf, 0, direction);
    let twice = dft_axis(&once, 1, direction);
    dft_axis(&twice, 2, direction)
}

/// Nested DFT over x and y for every z-plane.
pub fn dft_2d(buf: &ComplexBuffer, direction: Direction) -> ComplexBuffer {
    dft_axis(&dft_axis(buf, 0, direction), 1, direction)
}
