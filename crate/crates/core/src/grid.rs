//! Periodic grids, slab partitions and Fourier multipliers.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::Range;

use crate::error::{invalid, Result};
use crate::Complex64;

/// Uniform periodic grid. Axis 0 (x) varies fastest in every buffer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: [usize; 3],
    len: [f64; 3],
}

impl GridSpec {
    pub fn new(n: [usize; 3], len: [f64; 3]) -> Result<Self> {
        for axis in 0..3 {
            if n[axis] == 0 {
                return Err(invalid("n", "every axis needs at least one grid point"));
            }
            if !(len[axis].is_finite() && len[axis] > 0.0) {
                return Err(invalid("len", "domain lengths must be positive and finite"));
            }
        }
        n[0].checked_mul(n[1])
            .and_then(|p| p.checked_mul(n[2]))
            .ok_or_else(|| invalid("n", "total point count overflows usize"))?;
        Ok(GridSpec { n, len })
    }

    /// 2D grid; the z extent is a single plane of unit thickness.
    pub fn new_2d(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::new([nx, ny, 1], [lx, ly, 1.0])
    }

    /// Cube of `n` points per axis on `[0, l)^3`.
    pub fn cube(n: usize, l: f64) -> Result<Self> {
        Self::new([n; 3], [l; 3])
    }

    pub fn n(&self) -> [usize; 3] {
        self.n
    }

    pub fn len(&self) -> [f64; 3] {
        self.len
    }

    pub fn total(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_2d(&self) -> bool {
        self.n[2] == 1
    }

    /// Spatial dimension: 2 when `nz == 1`, else 3.
    pub fn dim(&self) -> usize {
        if self.is_2d() {
            2
        } else {
            3
        }
    }

    /// Area (2D) or volume (3D) of the domain.
    pub fn volume(&self) -> f64 {
        let area = self.len[0] * self.len[1];
        if self.is_2d() {
            area
        } else {
            area * self.len[2]
        }
    }

    /// Quadrature weight of a single collocation point.
    pub fn cell_volume(&self) -> f64 {
        self.volume() / self.total() as f64
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.len[axis] / self.n[axis] as f64
    }

    /// Coordinate of collocation point `j` along `axis`.
    pub fn coord(&self, axis: usize, j: usize) -> f64 {
        j as f64 * self.spacing(axis)
    }

    /// Axis along which physical-space fields are split into slabs:
    /// z in 3D, y in 2D.
    pub fn physical_axis(&self) -> usize {
        if self.is_2d() {
            1
        } else {
            2
        }
    }
}

/// Signed DFT frequency of index `j` in unshifted order
/// `[0, 1, .., ceil(n/2) - 1, -floor(n/2), .., -1]`.
pub fn frequency(j: usize, n: usize) -> i64 {
    if j < n.div_ceil(2) {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Angular wavenumbers `2 pi f_j / L` along `axis`, DC first.
pub fn wavenumbers(grid: &GridSpec, axis: usize) -> Vec<f64> {
    let n = grid.n[axis];
    let scale = 2.0 * PI / grid.len[axis];
    (0..n).map(|j| scale * frequency(j, n) as f64).collect()
}

/// Balanced partition of one axis over `workers` ranks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlabLayout {
    axis: usize,
    offsets: Vec<usize>,
    counts: Vec<usize>,
}

impl SlabLayout {
    /// The first `n_axis % workers` ranks receive one extra plane.
    pub fn new(n_axis: usize, workers: usize, axis: usize) -> Result<Self> {
        if workers == 0 {
            return Err(invalid("workers", "need at least one worker"));
        }
        let base = n_axis / workers;
        let extra = n_axis % workers;
        let counts: Vec<usize> = (0..workers).map(|g| base + usize::from(g < extra)).collect();
        let mut offsets = Vec::with_capacity(workers);
        let mut acc = 0;
        for &c in &counts {
            offsets.push(acc);
            acc += c;
        }
        Ok(SlabLayout { axis, offsets, counts })
    }

    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn workers(&self) -> usize {
        self.counts.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn offset(&self, rank: usize) -> usize {
        self.offsets[rank]
    }

    pub fn count(&self, rank: usize) -> usize {
        self.counts[rank]
    }

    pub fn range(&self, rank: usize) -> Range<usize> {
        self.offsets[rank]..self.offsets[rank] + self.counts[rank]
    }
}

/// Box of grid indices `origin .. origin + shape`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexBox {
    pub origin: [usize; 3],
    pub shape: [usize; 3],
}

impl IndexBox {
    pub fn full(grid: &GridSpec) -> Self {
        IndexBox { origin: [0; 3], shape: grid.n() }
    }

    /// The slab owned by `rank` under `layout`; other axes span the grid.
    pub fn slab(grid: &GridSpec, layout: &SlabLayout, rank: usize) -> Self {
        let mut b = Self::full(grid);
        b.origin[layout.axis()] = layout.offset(rank);
        b.shape[layout.axis()] = layout.count(rank);
        b
    }

    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1] * self.shape[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains_origin(&self) -> bool {
        self.origin == [0; 3] && !self.is_empty()
    }
}

/// Fourier symbol of the two-ring correlation operator, `(1 - k^2)^2 (4/3 - k^2)^2`.
pub fn correlation_symbol(k2: f64) -> f64 {
    let a = 1.0 - k2;
    let b = 4.0 / 3.0 - k2;
    a * a * b * b
}

/// Fourier multipliers restricted to the modes one worker owns.
///
/// Real multipliers are stored per mode in the same x-fastest order as the
/// owning buffer. Derivative multipliers `i k_axis` depend on one axis only
/// and are stored as one vector per axis over the owned index range.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTable {
    region: IndexBox,
    eps: f64,
    a0: f64,
    /// `-k^2`
    pub lap: Vec<f64>,
    /// `lap * op`, the linear part of the conserved dynamics.
    pub lin: Vec<f64>,
    /// `eps + L(k)`, linear part of the chemical potential.
    pub op: Vec<f64>,
    /// Gaussian coarse-graining multiplier `exp(-a0^2 k^2 / 2)`.
    pub cg: Vec<f64>,
    /// `i k_x`, `i k_y`, `i k_z` over the owned range of each axis.
    pub d: [Vec<Complex64>; 3],
    /// Optional spectral mask. Not populated by [`make_symbols`].
    pub mask: Option<Vec<f64>>,
}

impl SymbolTable {
    pub fn region(&self) -> IndexBox {
        self.region
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn len(&self) -> usize {
        self.lap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lap.is_empty()
    }

    /// Multiplies `data` by the mask if one is set.
    pub fn apply_mask(&self, data: &mut [Complex64]) {
        if let Some(mask) = &self.mask {
            for (v, m) in data.iter_mut().zip(mask) {
                *v *= *m;
            }
        }
    }

    /// Bytes held by the multiplier arrays.
    pub fn resident_bytes(&self) -> usize {
        let reals = self.lap.capacity() + self.lin.capacity() + self.op.capacity() + self.cg.capacity();
        let derivs: usize = self.d.iter().map(|d| d.capacity()).sum();
        let mask = self.mask.as_ref().map_or(0, |m| m.capacity());
        (reals + mask) * core::mem::size_of::<f64>() + derivs * core::mem::size_of::<Complex64>()
    }
}

/// Builds every multiplier for the modes in `region`.
pub fn make_symbols(grid: &GridSpec, eps: f64, a0: f64, region: IndexBox) -> Result<SymbolTable> {
    if !eps.is_finite() {
        return Err(invalid("eps", "must be finite"));
    }
    if !a0.is_finite() {
        return Err(invalid("a0", "must be finite"));
    }
    let n = grid.n();
    for ((o, s), n) in region.origin.iter().zip(region.shape).zip(n) {
        if o + s > n {
            return Err(invalid("region", "mode box exceeds the grid"));
        }
    }
    let k: [Vec<f64>; 3] = core::array::from_fn(|axis| {
        let all = wavenumbers(grid, axis);
        all[region.origin[axis]..region.origin[axis] + region.shape[axis]].to_vec()
    });
    let count = region.len();
    let mut lap = Vec::with_capacity(count);
    let mut lin = Vec::with_capacity(count);
    let mut op = Vec::with_capacity(count);
    let mut cg = Vec::with_capacity(count);
    let half_a0_sq = 0.5 * a0 * a0;
    for kz in &k[2] {
        for ky in &k[1] {
            for kx in &k[0] {
                let k2 = kx * kx + ky * ky + kz * kz;
                let l = -k2;
                let o = eps + correlation_symbol(k2);
                lap.push(l);
                op.push(o);
                lin.push(l * o);
                cg.push(libm::exp(-half_a0_sq * k2));
            }
        }
    }
    let d = k.map(|ks| ks.into_iter().map(|v| Complex64::new(0.0, v)).collect());
    Ok(SymbolTable { region, eps, a0, lap, lin, op, cg, d, mask: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn grid1d(n: usize, l: f64) -> GridSpec {
        GridSpec::new([n, 1, 1], [l, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn wavenumber_examples() {
        assert_eq!(wavenumbers(&grid1d(4, 2.0 * PI), 0), vec![0.0, 1.0, -2.0, -1.0]);
        assert_eq!(wavenumbers(&grid1d(1, 3.7), 0), vec![0.0]);
        assert_eq!(wavenumbers(&grid1d(5, PI), 0), vec![0.0, 2.0, 4.0, -4.0, -2.0]);
    }

    #[test]
    fn wavenumber_sums() {
        for n in 1..40 {
            let l = 3.0;
            let sum: f64 = wavenumbers(&grid1d(n, l), 0).iter().sum();
            let expected = if n % 2 == 0 { -((n / 2) as f64) * 2.0 * PI / l } else { 0.0 };
            assert!((sum - expected).abs() < 1e-9, "n={n}: {sum} vs {expected}");
        }
    }

    #[test]
    fn slab_examples() {
        let s = SlabLayout::new(8, 4, 2).unwrap();
        assert_eq!(s.counts(), &[2, 2, 2, 2]);
        assert_eq!(s.offsets(), &[0, 2, 4, 6]);
        let s = SlabLayout::new(7, 4, 2).unwrap();
        assert_eq!(s.counts(), &[2, 2, 2, 1]);
        assert_eq!(s.offsets(), &[0, 2, 4, 6]);
        let s = SlabLayout::new(2, 4, 0).unwrap();
        assert_eq!(s.counts(), &[1, 1, 0, 0]);
        assert!(SlabLayout::new(5, 0, 0).is_err());
    }

    #[test]
    fn slab_ranges_tile_axis() {
        for n in 0..30 {
            for g in 1..9 {
                let s = SlabLayout::new(n, g, 1).unwrap();
                let mut next = 0;
                for r in 0..g {
                    let range = s.range(r);
                    assert_eq!(range.start, next);
                    next = range.end;
                }
                assert_eq!(next, n);
                let max = s.counts().iter().max().unwrap();
                let min = s.counts().iter().min().unwrap();
                assert!(max - min <= 1);
            }
        }
    }

    #[test]
    fn correlation_symbol_zeros() {
        assert!((correlation_symbol(0.0) - 16.0 / 9.0).abs() < 1e-15);
        assert_eq!(correlation_symbol(1.0), 0.0);
        assert!(correlation_symbol(4.0 / 3.0).abs() < 1e-30);
    }

    #[test]
    fn symbol_invariants() {
        let grid = GridSpec::new([6, 5, 4], [7.0, 3.0, 9.0]).unwrap();
        let s = make_symbols(&grid, -0.3, 2.0, IndexBox::full(&grid)).unwrap();
        assert_eq!(s.lap[0], 0.0);
        assert_eq!(s.lin[0], 0.0);
        assert_eq!(s.cg[0], 1.0);
        assert!((s.op[0] - (-0.3 + 16.0 / 9.0)).abs() < 1e-15);
        for axis in 0..3 {
            assert_eq!(s.d[axis][0], Complex64::new(0.0, 0.0));
        }
        for m in 0..s.len() {
            assert!(s.lap[m] <= 0.0);
            assert!(s.cg[m] > 0.0 && s.cg[m] <= 1.0);
            assert_eq!(s.lin[m], s.lap[m] * s.op[m]);
        }
        // cg is a non-increasing function of k^2
        let mut pairs: Vec<(f64, f64)> = s.lap.iter().zip(&s.cg).map(|(l, c)| (-l, *c)).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for w in pairs.windows(2) {
            assert!(w[1].1 <= w[0].1);
        }
    }

    #[test]
    fn nyquist_derivative_is_negative_imaginary() {
        let grid = GridSpec::new([4, 1, 1], [2.0 * PI, 1.0, 1.0]).unwrap();
        let s = make_symbols(&grid, 0.0, 1.0, IndexBox::full(&grid)).unwrap();
        assert_eq!(s.d[0][2], Complex64::new(0.0, -2.0));
    }

    #[test]
    fn slab_symbols_match_full_table() {
        let grid = GridSpec::new([7, 4, 3], [5.0, 6.0, 7.0]).unwrap();
        let full = make_symbols(&grid, 0.1, 1.5, IndexBox::full(&grid)).unwrap();
        let layout = SlabLayout::new(7, 3, 0).unwrap();
        for rank in 0..3 {
            let region = IndexBox::slab(&grid, &layout, rank);
            let part = make_symbols(&grid, 0.1, 1.5, region).unwrap();
            let mut m = 0;
            for z in 0..3 {
                for y in 0..4 {
                    for x in layout.range(rank) {
                        let g = x + 7 * (y + 4 * z);
                        assert_eq!(part.lin[m], full.lin[g]);
                        assert_eq!(part.cg[m], full.cg[g]);
                        m += 1;
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(GridSpec::new([0, 1, 1], [1.0; 3]).is_err());
        assert!(GridSpec::new([1, 1, 1], [1.0, -1.0, 1.0]).is_err());
        let grid = GridSpec::cube(4, 1.0).unwrap();
        assert!(make_symbols(&grid, f64::NAN, 1.0, IndexBox::full(&grid)).is_err());
        assert!(make_symbols(&grid, 0.0, f64::INFINITY, IndexBox::full(&grid)).is_err());
    }
}
