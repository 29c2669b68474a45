//! One-dimensional transform plans.
//!
//! Smooth lengths run through a self-sorting (Stockham) mixed-radix kernel
//! with dedicated butterflies for radices 2, 3 and 4 and a generic butterfly
//! for other primes up to [`MAX_DIRECT_RADIX`]. Lengths with a larger prime
//! factor are computed as a chirp convolution (Bluestein) over a power-of-two
//! mixed-radix plan.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::Direction;
use crate::Complex64;

/// Largest prime handled by a direct butterfly inside the mixed-radix kernel.
pub const MAX_DIRECT_RADIX: usize = 31;

fn expi(angle: f64) -> Complex64 {
    Complex64::new(libm::cos(angle), libm::sin(angle))
}

/// `exp(sign * 2 pi i * num / den)` with the numerator reduced first.
fn root(num: usize, den: usize, sign: f64) -> Complex64 {
    let r = num % den;
    expi(sign * 2.0 * PI * r as f64 / den as f64)
}

fn factorize(mut n: usize) -> Vec<usize> {
    let mut radices = Vec::new();
    while n.is_multiple_of(4) {
        radices.push(4);
        n /= 4;
    }
    if n.is_multiple_of(2) {
        radices.push(2);
        n /= 2;
    }
    let mut p = 3;
    while p * p <= n {
        while n.is_multiple_of(p) {
            radices.push(p);
            n /= p;
        }
        p += 2;
    }
    if n > 1 {
        radices.push(n);
    }
    radices
}

#[derive(Debug)]
struct Stage {
    radix: usize,
    /// Sub-transform length after this stage, `n_cur / radix`.
    m: usize,
    /// `w^(p u)` for `p < m`, `u < radix`, stored at `p * radix + u`.
    twiddles: Vec<Complex64>,
    /// `omega_radix^j` for the generic butterfly.
    roots: Vec<Complex64>,
}

#[derive(Debug)]
struct MixedRadix {
    stages: Vec<Stage>,
    sign: f64,
}

impl MixedRadix {
    fn new(n: usize, sign: f64) -> Self {
        let mut stages = Vec::new();
        let mut n_cur = n;
        for radix in factorize(n) {
            let m = n_cur / radix;
            let mut twiddles = Vec::with_capacity(n_cur);
            for p in 0..m {
                for u in 0..radix {
                    twiddles.push(root(p * u, n_cur, sign));
                }
            }
            let roots = (0..radix).map(|j| root(j, radix, sign)).collect();
            stages.push(Stage { radix, m, twiddles, roots });
            n_cur = m;
        }
        MixedRadix { stages, sign }
    }

    /// Unnormalized transform of `batch` interleaved sequences; element `j` of
    /// sequence `q` lives at `q + batch * j`. `scratch` has the length of `data`.
    fn run(&self, data: &mut [Complex64], scratch: &mut [Complex64], batch: usize) {
        let mut stride = batch;
        let mut in_data = true;
        for stage in &self.stages {
            if in_data {
                stage.apply(data, scratch, stride, self.sign);
            } else {
                stage.apply(scratch, data, stride, self.sign);
            }
            in_data = !in_data;
            stride *= stage.radix;
        }
        if !in_data {
            data.copy_from_slice(scratch);
        }
    }
}

impl Stage {
    fn apply(&self, src: &[Complex64], dst: &mut [Complex64], s: usize, sign: f64) {
        let m = self.m;
        match self.radix {
            2 => {
                for p in 0..m {
                    let w = self.twiddles[2 * p + 1];
                    for q in 0..s {
                        let a = src[q + s * p];
                        let b = src[q + s * (p + m)];
                        dst[q + s * 2 * p] = a + b;
                        dst[q + s * (2 * p + 1)] = (a - b) * w;
                    }
                }
            }
            3 => {
                // -sign * i * sqrt(3)/2 rotates (a1 - a2) into place
                let h = Complex64::new(0.0, sign * libm::sqrt(3.0) / 2.0);
                for p in 0..m {
                    let w1 = self.twiddles[3 * p + 1];
                    let w2 = self.twiddles[3 * p + 2];
                    for q in 0..s {
                        let a0 = src[q + s * p];
                        let a1 = src[q + s * (p + m)];
                        let a2 = src[q + s * (p + 2 * m)];
                        let t1 = a1 + a2;
                        let t2 = a0 - t1 * 0.5;
                        let t3 = (a1 - a2) * h;
                        dst[q + s * 3 * p] = a0 + t1;
                        dst[q + s * (3 * p + 1)] = (t2 + t3) * w1;
                        dst[q + s * (3 * p + 2)] = (t2 - t3) * w2;
                    }
                }
            }
            4 => {
                for p in 0..m {
                    let w1 = self.twiddles[4 * p + 1];
                    let w2 = self.twiddles[4 * p + 2];
                    let w3 = self.twiddles[4 * p + 3];
                    for q in 0..s {
                        let a0 = src[q + s * p];
                        let a1 = src[q + s * (p + m)];
                        let a2 = src[q + s * (p + 2 * m)];
                        let a3 = src[q + s * (p + 3 * m)];
                        let t0 = a0 + a2;
                        let t1 = a0 - a2;
                        let t2 = a1 + a3;
                        let d = a1 - a3;
                        // multiply by sign * i
                        let t3 = Complex64::new(-sign * d.im, sign * d.re);
                        dst[q + s * 4 * p] = t0 + t2;
                        dst[q + s * (4 * p + 1)] = (t1 + t3) * w1;
                        dst[q + s * (4 * p + 2)] = (t0 - t2) * w2;
                        dst[q + s * (4 * p + 3)] = (t1 - t3) * w3;
                    }
                }
            }
            r => {
                let mut a = [Complex64::new(0.0, 0.0); MAX_DIRECT_RADIX];
                for p in 0..m {
                    for q in 0..s {
                        for (t, slot) in a[..r].iter_mut().enumerate() {
                            *slot = src[q + s * (p + t * m)];
                        }
                        for u in 0..r {
                            let mut acc = a[0];
                            for (t, &at) in a[1..r].iter().enumerate() {
                                acc += at * self.roots[((t + 1) * u) % r];
                            }
                            dst[q + s * (r * p + u)] = acc * self.twiddles[r * p + u];
                        }
                    }
                }
            }
        }
    }
}

#[derive(Debug)]
struct Bluestein {
    n: usize,
    m: usize,
    chirp: Vec<Complex64>,
    /// Forward transform of the conjugate chirp, zero-padded to `m`.
    kernel: Vec<Complex64>,
    inner_fwd: MixedRadix,
    inner_inv: MixedRadix,
}

impl Bluestein {
    fn new(n: usize, sign: f64) -> Self {
        let m = (2 * n - 1).next_power_of_two();
        // exp(sign * pi i k^2 / n) with k^2 reduced mod 2n
        let chirp: Vec<Complex64> = (0..n)
            .map(|k| {
                let k2 = (k * k) % (2 * n);
                expi(sign * PI * k2 as f64 / n as f64)
            })
            .collect();
        let inner_fwd = MixedRadix::new(m, -1.0);
        let inner_inv = MixedRadix::new(m, 1.0);
        let mut kernel = vec![Complex64::new(0.0, 0.0); m];
        kernel[0] = chirp[0].conj();
        for k in 1..n {
            kernel[k] = chirp[k].conj();
            kernel[m - k] = chirp[k].conj();
        }
        let mut scratch = vec![Complex64::new(0.0, 0.0); m];
        inner_fwd.run(&mut kernel, &mut scratch, 1);
        let scale = 1.0 / m as f64;
        for v in &mut kernel {
            *v *= scale;
        }
        Bluestein { n, m, chirp, kernel, inner_fwd, inner_inv }
    }

    fn run(&self, data: &mut [Complex64], batch: usize) {
        let mut work = vec![Complex64::new(0.0, 0.0); self.m];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.m];
        for q in 0..batch {
            for (k, w) in work.iter_mut().enumerate() {
                *w = if k < self.n { data[q + batch * k] * self.chirp[k] } else { Complex64::new(0.0, 0.0) };
            }
            self.inner_fwd.run(&mut work, &mut scratch, 1);
            for (w, b) in work.iter_mut().zip(&self.kernel) {
                *w *= b;
            }
            self.inner_inv.run(&mut work, &mut scratch, 1);
            for k in 0..self.n {
                data[q + batch * k] = work[k] * self.chirp[k];
            }
        }
    }
}

#[derive(Debug)]
enum Kernel {
    Identity,
    MixedRadix(MixedRadix),
    Bluestein(Bluestein),
}

/// Precomputed transform of a fixed length and direction.
#[derive(Debug)]
pub struct Plan {
    len: usize,
    direction: Direction,
    kernel: Kernel,
}

impl Plan {
    pub fn new(len: usize, direction: Direction) -> Self {
        assert!(len > 0, "transform length must be positive");
        let sign = match direction {
            Direction::Forward => -1.0,
            Direction::Inverse => 1.0,
        };
        let kernel = if len == 1 {
            Kernel::Identity
        } else if factorize(len).iter().all(|&r| r <= MAX_DIRECT_RADIX) {
            Kernel::MixedRadix(MixedRadix::new(len, sign))
        } else {
            Kernel::Bluestein(Bluestein::new(len, sign))
        };
        Plan { len, direction, kernel }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// True when the length needed the chirp-convolution fallback.
    pub fn uses_bluestein(&self) -> bool {
        matches!(self.kernel, Kernel::Bluestein(_))
    }

    /// Transforms `batch` interleaved sequences in place (element `j` of
    /// sequence `q` at `q + batch * j`). The inverse carries the `1/len` factor.
    pub fn process_batch(&self, data: &mut [Complex64], batch: usize, scratch: &mut Vec<Complex64>) {
        assert_eq!(data.len(), self.len * batch, "buffer length must equal len * batch");
        match &self.kernel {
            Kernel::Identity => return,
            Kernel::MixedRadix(k) => {
                if scratch.len() < data.len() {
                    scratch.resize(data.len(), Complex64::new(0.0, 0.0));
                }
                k.run(data, &mut scratch[..data.len()], batch);
            }
            Kernel::Bluestein(k) => k.run(data, batch),
        }
        if self.direction == Direction::Inverse {
            let scale = 1.0 / self.len as f64;
            for v in data.iter_mut() {
                *v *= scale;
            }
        }
    }

    /// Transforms a single contiguous sequence in place.
    pub fn process(&self, data: &mut [Complex64]) {
        let mut scratch = Vec::new();
        self.process_batch(data, 1, &mut scratch);
    }
}
