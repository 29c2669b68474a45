//! Serial complex-to-complex FFTs over x-fastest 3D buffers.
//!
//! Forward transforms are unnormalized; inverse transforms carry `1/N`, so
//! `inverse(forward(x)) == x` up to round-off.

mod plan;

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

pub use plan::{Plan, MAX_DIRECT_RADIX};

use crate::error::{Error, Result};
use crate::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Dense complex array of shape `(nx, ny, nz)`, x fastest, then y, then z.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexBuffer {
    data: Vec<Complex64>,
    shape: [usize; 3],
}

impl ComplexBuffer {
    pub fn zeros(shape: [usize; 3]) -> Self {
        ComplexBuffer { data: vec![Complex64::new(0.0, 0.0); shape[0] * shape[1] * shape[2]], shape }
    }

    pub fn from_vec(shape: [usize; 3], data: Vec<Complex64>) -> Result<Self> {
        if data.len() != shape[0] * shape[1] * shape[2] {
            return Err(Error::Layout(alloc::format!(
                "buffer of {} values cannot have shape {:?}",
                data.len(),
                shape
            )));
        }
        Ok(ComplexBuffer { data, shape })
    }

    pub fn from_real(shape: [usize; 3], real: &[f64]) -> Result<Self> {
        Self::from_vec(shape, real.iter().map(|&r| Complex64::new(r, 0.0)).collect())
    }

    /// Fills the buffer from a function of the `(x, y, z)` index.
    pub fn from_fn(shape: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(shape[0] * shape[1] * shape[2]);
        for z in 0..shape[2] {
            for y in 0..shape[1] {
                for x in 0..shape[0] {
                    data.push(f(x, y, z));
                }
            }
        }
        ComplexBuffer { data, shape }
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.shape[0] * (y + self.shape[1] * z)
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> Complex64 {
        self.data[self.index(x, y, z)]
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, v: Complex64) {
        let i = self.index(x, y, z);
        self.data[i] = v;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.data.iter().map(|c| c.re).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_re(&self) -> f64 {
        self.data.iter().map(|c| c.re.abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_im(&self) -> f64 {
        self.data.iter().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    pub fn resident_bytes(&self) -> usize {
        self.data.capacity() * core::mem::size_of::<Complex64>()
    }
}

/// Cache of plans keyed by `(length, direction)` plus a reusable scratch buffer.
#[derive(Debug, Default)]
pub struct Planner {
    plans: BTreeMap<(usize, Direction), Arc<Plan>>,
    scratch: Vec<Complex64>,
}

impl Planner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn plan(&mut self, len: usize, direction: Direction) -> Arc<Plan> {
        self.plans.entry((len, direction)).or_insert_with(|| Arc::new(Plan::new(len, direction))).clone()
    }

    /// Bytes held by the scratch buffer.
    pub fn scratch_bytes(&self) -> usize {
        self.scratch.capacity() * core::mem::size_of::<Complex64>()
    }

    /// Transforms every line of `buf` along `axis`.
    pub fn fft_axis(&mut self, buf: &mut ComplexBuffer, axis: usize, direction: Direction) -> Result<()> {
        if axis > 2 {
            return Err(Error::AxisOutOfRange(axis));
        }
        let shape = buf.shape;
        let n = shape[axis];
        if n == 1 || buf.is_empty() {
            return Ok(());
        }
        let plan = self.plan(n, direction);
        // lines along `axis` are interleaved with stride `batch` inside each
        // contiguous chunk of `batch * n` values
        let batch: usize = shape[..axis].iter().product();
        let chunk = batch * n;
        for block in buf.data.chunks_exact_mut(chunk) {
            plan.process_batch(block, batch, &mut self.scratch);
        }
        Ok(())
    }

    /// Transform over x then y, applied to every z-plane.
    pub fn fft_2d(&mut self, buf: &mut ComplexBuffer, direction: Direction) -> Result<()> {
        self.fft_axis(buf, 0, direction)?;
        self.fft_axis(buf, 1, direction)
    }

    /// Full transform over all axes of length greater than one.
    ///
    /// Forward runs x, y, z; inverse runs z, x, y. These are the same axis
    /// orders the slab-decomposed pipeline uses, so serial and distributed
    /// results agree bit for bit.
    pub fn fft_nd(&mut self, buf: &mut ComplexBuffer, direction: Direction) -> Result<()> {
        match direction {
            Direction::Forward => {
                self.fft_2d(buf, direction)?;
                self.fft_axis(buf, 2, direction)
            }
            Direction::Inverse => {
                self.fft_axis(buf, 2, direction)?;
                self.fft_2d(buf, direction)
            }
        }
    }
}

/// One-shot [`Planner::fft_axis`].
pub fn fft_axis(buf: &mut ComplexBuffer, axis: usize, direction: Direction) -> Result<()> {
    Planner::new().fft_axis(buf, axis, direction)
}

/// One-shot [`Planner::fft_2d`].
pub fn fft_2d(buf: &mut ComplexBuffer, direction: Direction) -> Result<()> {
    Planner::new().fft_2d(buf, direction)
}

/// One-shot [`Planner::fft_nd`].
pub fn fft_nd(buf: &mut ComplexBuffer, direction: Direction) -> Result<()> {
    Planner::new().fft_nd(buf, direction)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn delta_and_constant() {
        let mut b = ComplexBuffer::from_real([4, 1, 1], &[1.0, 0.0, 0.0, 0.0]).unwrap();
        fft_axis(&mut b, 0, Direction::Forward).unwrap();
        assert_eq!(b.as_slice(), &[c(1.0); 4]);

        let mut b = ComplexBuffer::from_vec([1, 4, 1], vec![Complex64::new(2.0, -1.0); 4]).unwrap();
        fft_axis(&mut b, 1, Direction::Forward).unwrap();
        assert_eq!(b.as_slice()[0], Complex64::new(8.0, -4.0));
        for v in &b.as_slice()[1..] {
            assert!(v.norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_axis() {
        let mut b = ComplexBuffer::zeros([2, 2, 2]);
        assert_eq!(fft_axis(&mut b, 3, Direction::Forward), Err(Error::AxisOutOfRange(3)));
    }

    #[test]
    fn plane_delta_to_ones() {
        let mut b = ComplexBuffer::zeros([4, 4, 1]);
        b.set(0, 0, 0, c(1.0));
        fft_2d(&mut b, Direction::Forward).unwrap();
        for v in b.as_slice() {
            assert!((v - c(1.0)).norm() < 1e-15);
        }
        let mut b = ComplexBuffer::zeros([2, 2, 2]);
        b.set(0, 0, 0, c(1.0));
        fft_nd(&mut b, Direction::Forward).unwrap();
        for v in b.as_slice() {
            assert!((v - c(1.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn separable_input_gives_outer_product() {
        let a = [1.0, 2.0, -0.5, 0.25, 3.0];
        let bv = [0.5, -1.0, 2.0, 1.5];
        let mut buf = ComplexBuffer::from_fn([5, 4, 1], |x, y, _| c(a[x] * bv[y]));
        fft_2d(&mut buf, Direction::Forward).unwrap();
        let mut fa = ComplexBuffer::from_real([5, 1, 1], &a).unwrap();
        fft_axis(&mut fa, 0, Direction::Forward).unwrap();
        let mut fb = ComplexBuffer::from_real([4, 1, 1], &bv).unwrap();
        fft_axis(&mut fb, 0, Direction::Forward).unwrap();
        for y in 0..4 {
            for x in 0..5 {
                let expected = fa.get(x, 0, 0) * fb.get(y, 0, 0);
                assert!((buf.get(x, y, 0) - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn planner_caches_by_length_and_direction() {
        let mut p = Planner::new();
        let a = p.plan(12, Direction::Forward);
        let b = p.plan(12, Direction::Forward);
        assert!(Arc::ptr_eq(&a, &b));
        let c = p.plan(12, Direction::Inverse);
        assert!(!Arc::ptr_eq(&a, &c));
    }
}
