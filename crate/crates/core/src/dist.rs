//! Slab-decomposed distributed FFT.
//!
//! A physical-space field is split into slabs along its outermost axis (z in
//! 3D, y in 2D), so the transforms over the remaining axes are local. One
//! all-to-all then redistributes the data into x-slabs, where the last axis is
//! complete and its 1D transform is local as well. The inverse runs the same
//! pipeline backwards. Spectral fields handed to the solvers stay in x-slabs.

use alloc::format;
use alloc::vec::Vec;

use crate::comm::{Communicator, Payload, Tag};
use crate::error::{Error, Result};
use crate::fft::{ComplexBuffer, Direction, Planner};
use crate::grid::{GridSpec, IndexBox, SlabLayout};
use crate::Complex64;

/// Tag used by [`gather`]; solver tags stay well below it.
pub const GATHER_TAG: Tag = 0xFFFF_0001;

/// Axis a field is decomposed along.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlabAxis {
    X,
    Y,
    Z,
}

impl SlabAxis {
    pub fn index(self) -> usize {
        match self {
            SlabAxis::X => 0,
            SlabAxis::Y => 1,
            SlabAxis::Z => 2,
        }
    }

    pub fn from_index(axis: usize) -> Result<Self> {
        match axis {
            0 => Ok(SlabAxis::X),
            1 => Ok(SlabAxis::Y),
            2 => Ok(SlabAxis::Z),
            other => Err(Error::AxisOutOfRange(other)),
        }
    }

    /// Physical-space layout for `grid`: z-slabs in 3D, y-slabs in 2D.
    pub fn physical(grid: &GridSpec) -> Self {
        if grid.is_2d() {
            SlabAxis::Y
        } else {
            SlabAxis::Z
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Physical,
    Spectral,
}

/// One worker's slab of a distributed array.
#[derive(Debug, Clone, PartialEq)]
pub struct DistField {
    grid: GridSpec,
    layout: SlabAxis,
    space: Space,
    rank: usize,
    workers: usize,
    local: ComplexBuffer,
}

impl DistField {
    pub fn new(
        grid: GridSpec,
        layout: SlabAxis,
        space: Space,
        rank: usize,
        workers: usize,
        local: ComplexBuffer,
    ) -> Result<Self> {
        let expected = local_shape(&grid, layout, rank, workers)?;
        if local.shape() != expected {
            return Err(Error::ShapeMismatch { expected, found: local.shape() });
        }
        Ok(DistField { grid, layout, space, rank, workers, local })
    }

    /// Zero-filled slab.
    pub fn zeros(grid: GridSpec, layout: SlabAxis, space: Space, rank: usize, workers: usize) -> Result<Self> {
        let shape = local_shape(&grid, layout, rank, workers)?;
        Self::new(grid, layout, space, rank, workers, ComplexBuffer::zeros(shape))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn layout(&self) -> SlabAxis {
        self.layout
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn local(&self) -> &ComplexBuffer {
        &self.local
    }

    pub fn local_mut(&mut self) -> &mut ComplexBuffer {
        &mut self.local
    }

    pub fn into_local(self) -> ComplexBuffer {
        self.local
    }

    pub fn slab_layout(&self) -> SlabLayout {
        slab_layout_for(&self.grid, self.layout, self.workers)
    }

    /// Global index box covered by this slab.
    pub fn region(&self) -> IndexBox {
        IndexBox::slab(&self.grid, &self.slab_layout(), self.rank)
    }

    pub fn resident_bytes(&self) -> usize {
        self.local.resident_bytes()
    }

    fn relabel(self, layout: SlabAxis) -> Self {
        DistField { layout, ..self }
    }

    fn with_space(self, space: Space) -> Self {
        DistField { space, ..self }
    }
}

fn slab_layout_for(grid: &GridSpec, layout: SlabAxis, workers: usize) -> SlabLayout {
    let axis = layout.index();
    SlabLayout::new(grid.n()[axis], workers, axis).expect("worker count validated on construction")
}

fn local_shape(grid: &GridSpec, layout: SlabAxis, rank: usize, workers: usize) -> Result<[usize; 3]> {
    if workers == 0 || rank >= workers {
        return Err(Error::Layout(format!("rank {rank} outside group of {workers}")));
    }
    Ok(IndexBox::slab(grid, &slab_layout_for(grid, layout, workers), rank).shape)
}

/// Copies the box `extent` at `src_origin` in `src` to `dst_origin` in `dst`.
#[allow(clippy::too_many_arguments)]
fn copy_box(
    src: &[Complex64],
    src_shape: [usize; 3],
    src_origin: [usize; 3],
    dst: &mut [Complex64],
    dst_shape: [usize; 3],
    dst_origin: [usize; 3],
    extent: [usize; 3],
) {
    if extent[0] == 0 {
        return;
    }
    for z in 0..extent[2] {
        for y in 0..extent[1] {
            let s = src_origin[0] + src_shape[0] * (src_origin[1] + y + src_shape[1] * (src_origin[2] + z));
            let d = dst_origin[0] + dst_shape[0] * (dst_origin[1] + y + dst_shape[1] * (dst_origin[2] + z));
            dst[d..d + extent[0]].copy_from_slice(&src[s..s + extent[0]]);
        }
    }
}

/// Cuts this rank's slab out of a full array. Every rank reads the same
/// full buffer; no communication is involved.
pub fn scatter(full: &ComplexBuffer, grid: &GridSpec, layout: SlabAxis, space: Space, rank: usize, workers: usize) -> Result<DistField> {
    if full.shape() != grid.n() {
        return Err(Error::ShapeMismatch { expected: grid.n(), found: full.shape() });
    }
    let shape = local_shape(grid, layout, rank, workers)?;
    if workers == 1 {
        return DistField::new(*grid, layout, space, rank, workers, full.clone());
    }
    let region = IndexBox::slab(grid, &slab_layout_for(grid, layout, workers), rank);
    let mut local = ComplexBuffer::zeros(shape);
    copy_box(full.as_slice(), full.shape(), region.origin, local.as_mut_slice(), shape, [0; 3], shape);
    DistField::new(*grid, layout, space, rank, workers, local)
}

/// Consuming variant of [`scatter`] for a single worker: a move, no copy.
pub fn scatter_owned(full: ComplexBuffer, grid: &GridSpec, layout: SlabAxis, space: Space) -> Result<DistField> {
    DistField::new(*grid, layout, space, 0, 1, full)
}

/// Stitches per-rank slabs (in rank order) into the full array.
pub fn assemble(slabs: &[DistField]) -> Result<ComplexBuffer> {
    let first = slabs.first().ok_or_else(|| Error::Layout("no slabs to assemble".into()))?;
    let grid = first.grid;
    if slabs.len() != first.workers {
        return Err(Error::Layout(format!("expected {} slabs, got {}", first.workers, slabs.len())));
    }
    if slabs.len() == 1 {
        return Ok(first.local.clone());
    }
    let mut full = ComplexBuffer::zeros(grid.n());
    for (rank, slab) in slabs.iter().enumerate() {
        if slab.rank != rank || slab.layout != first.layout || slab.grid != grid {
            return Err(Error::Layout(format!("slab {rank} does not belong to this decomposition")));
        }
        let region = slab.region();
        copy_box(slab.local.as_slice(), region.shape, [0; 3], full.as_mut_slice(), grid.n(), region.origin, region.shape);
    }
    Ok(full)
}

/// Collects all slabs on rank 0 (`Some` there, `None` elsewhere).
pub fn gather<C: Communicator + ?Sized>(field: &DistField, comm: &C) -> Result<Option<ComplexBuffer>> {
    check_group(field, comm)?;
    if comm.rank() != 0 {
        let payload = Payload::complex(field.local.shape(), field.local.as_slice().to_vec())?;
        comm.send(0, GATHER_TAG, payload)?;
        return Ok(None);
    }
    let mut slabs = Vec::with_capacity(field.workers);
    slabs.push(field.clone());
    for src in 1..field.workers {
        let p = comm.receive(src, GATHER_TAG)?;
        let shape = p.shape();
        let local = ComplexBuffer::from_vec(shape, p.into_complex()?)?;
        slabs.push(DistField::new(field.grid, field.layout, field.space, src, field.workers, local)?);
    }
    assemble(&slabs).map(Some)
}

fn check_group<C: Communicator + ?Sized>(field: &DistField, comm: &C) -> Result<()> {
    if comm.size() != field.workers || comm.rank() != field.rank {
        return Err(Error::Layout(format!(
            "field belongs to rank {} of {}, communicator is rank {} of {}",
            field.rank,
            field.workers,
            comm.rank(),
            comm.size()
        )));
    }
    Ok(())
}

/// Moves `field` into slabs along `to`. Returns the field and the peak number
/// of bytes that were live at once during the exchange.
fn repartition<C: Communicator + ?Sized>(field: DistField, to: SlabAxis, comm: &C) -> Result<(DistField, usize)> {
    check_group(&field, comm)?;
    if field.layout == to {
        return Err(Error::Layout(format!("field is already in {to:?} slabs")));
    }
    let g = field.workers;
    if g == 1 {
        let bytes = field.resident_bytes();
        return Ok((field.relabel(to), bytes));
    }
    let grid = field.grid;
    let from_axis = field.layout.index();
    let to_axis = to.index();
    let from = slab_layout_for(&grid, field.layout, g);
    let target = slab_layout_for(&grid, to, g);
    let src_shape = field.local.shape();

    let mut blocks = Vec::with_capacity(g);
    let mut out_bytes = 0;
    for h in 0..g {
        let mut origin = [0; 3];
        origin[to_axis] = target.offset(h);
        let mut extent = src_shape;
        extent[to_axis] = target.count(h);
        let mut block = alloc::vec![Complex64::new(0.0, 0.0); extent[0] * extent[1] * extent[2]];
        copy_box(field.local.as_slice(), src_shape, origin, &mut block, extent, [0; 3], extent);
        out_bytes += block.capacity() * core::mem::size_of::<Complex64>();
        blocks.push(Payload::complex(extent, block)?);
    }
    let before = field.resident_bytes() + out_bytes;
    let (space, rank) = (field.space, field.rank);
    drop(field);

    let received = comm.all_to_all(blocks)?;
    let dst_shape = local_shape(&grid, to, rank, g)?;
    let mut local = ComplexBuffer::zeros(dst_shape);
    let in_bytes: usize = received.iter().map(|p| p.byte_len()).sum();
    for (src, payload) in received.into_iter().enumerate() {
        let mut expected = dst_shape;
        expected[from_axis] = from.count(src);
        if payload.shape() != expected {
            return Err(Error::ShapeMismatch { expected, found: payload.shape() });
        }
        let mut origin = [0; 3];
        origin[from_axis] = from.offset(src);
        let data = payload.into_complex()?;
        copy_box(&data, expected, [0; 3], local.as_mut_slice(), dst_shape, origin, expected);
    }
    let after = in_bytes + local.resident_bytes();
    let out = DistField::new(grid, to, space, rank, g, local)?;
    Ok((out, before.max(after)))
}

fn expect_layout(field: &DistField, layout: SlabAxis) -> Result<()> {
    if field.layout != layout {
        return Err(Error::Layout(format!("expected {layout:?} slabs, found {:?}", field.layout)));
    }
    Ok(())
}

/// z-slabs to x-slabs.
pub fn exchange_z_to_x<C: Communicator + ?Sized>(field: DistField, comm: &C) -> Result<DistField> {
    expect_layout(&field, SlabAxis::Z)?;
    repartition(field, SlabAxis::X, comm).map(|r| r.0)
}

/// x-slabs to z-slabs; inverse of [`exchange_z_to_x`].
pub fn exchange_x_to_z<C: Communicator + ?Sized>(field: DistField, comm: &C) -> Result<DistField> {
    expect_layout(&field, SlabAxis::X)?;
    repartition(field, SlabAxis::Z, comm).map(|r| r.0)
}

/// y-slabs to x-slabs (2D pipeline).
pub fn exchange_y_to_x<C: Communicator + ?Sized>(field: DistField, comm: &C) -> Result<DistField> {
    expect_layout(&field, SlabAxis::Y)?;
    repartition(field, SlabAxis::X, comm).map(|r| r.0)
}

/// x-slabs to y-slabs (2D pipeline).
pub fn exchange_x_to_y<C: Communicator + ?Sized>(field: DistField, comm: &C) -> Result<DistField> {
    expect_layout(&field, SlabAxis::X)?;
    repartition(field, SlabAxis::Y, comm).map(|r| r.0)
}

/// Distributed transform with cached 1D plans for one worker.
#[derive(Debug, Default)]
pub struct DistFft {
    planner: Planner,
    peak_exchange_bytes: usize,
}

impl DistFft {
    pub fn new() -> Self {
        Self::default()
    }

    /// Largest number of bytes held at once by any exchange so far.
    pub fn peak_exchange_bytes(&self) -> usize {
        self.peak_exchange_bytes
    }

    pub fn scratch_bytes(&self) -> usize {
        self.planner.scratch_bytes()
    }

    pub fn planner(&mut self) -> &mut Planner {
        &mut self.planner
    }

    /// Physical slabs (z in 3D, y in 2D) to spectral x-slabs.
    pub fn forward<C: Communicator + ?Sized>(&mut self, field: DistField, comm: &C) -> Result<DistField> {
        let phys = SlabAxis::physical(&field.grid);
        expect_layout(&field, phys)?;
        if field.space != Space::Physical {
            return Err(Error::Layout("forward transform expects a physical-space field".into()));
        }
        let mut field = field;
        for axis in 0..phys.index() {
            self.planner.fft_axis(&mut field.local, axis, Direction::Forward)?;
        }
        let (mut field, peak) = repartition(field, SlabAxis::X, comm)?;
        self.peak_exchange_bytes = self.peak_exchange_bytes.max(peak);
        self.planner.fft_axis(&mut field.local, phys.index(), Direction::Forward)?;
        Ok(field.with_space(Space::Spectral))
    }

    /// Spectral x-slabs back to physical slabs.
    pub fn inverse<C: Communicator + ?Sized>(&mut self, field: DistField, comm: &C) -> Result<DistField> {
        let phys = SlabAxis::physical(&field.grid);
        expect_layout(&field, SlabAxis::X)?;
        if field.space != Space::Spectral {
            return Err(Error::Layout("inverse transform expects a spectral field".into()));
        }
        let mut field = field;
        self.planner.fft_axis(&mut field.local, phys.index(), Direction::Inverse)?;
        let (mut field, peak) = repartition(field, phys, comm)?;
        self.peak_exchange_bytes = self.peak_exchange_bytes.max(peak);
        for axis in 0..phys.index() {
            self.planner.fft_axis(&mut field.local, axis, Direction::Inverse)?;
        }
        Ok(field.with_space(Space::Physical))
    }
}

fn require_3d(field: &DistField) -> Result<()> {
    if field.grid.is_2d() {
        return Err(Error::Layout("3D transform called on a 2D grid".into()));
    }
    Ok(())
}

fn require_2d(field: &DistField) -> Result<()> {
    if !field.grid.is_2d() {
        return Err(Error::Layout("2D transform called on a 3D grid".into()));
    }
    Ok(())
}

/// Local 2D FFTs on z-slabs, exchange to x-slabs, 1D FFT along z.
pub fn dist_fft_forward<C: Communicator + ?Sized>(field: DistField, comm: &C) -> Result<DistField> {
    require_3d(&field)?;
    DistFft::new().forward(field, comm)
}

/// Inverse of [`dist_fft_forward`].
pub fn dist_fft_inverse<C: Communicator + ?Sized>(field: DistField, comm: &C) -> Result<DistField> {
    require_3d(&field)?;
    DistFft::new().inverse(field, comm)
}

/// Local FFTs along x on y-slabs, exchange to x-slabs, FFT along y.
pub fn dist_fft_2d_forward<C: Communicator + ?Sized>(field: DistField, comm: &C) -> Result<DistField> {
    require_2d(&field)?;
    DistFft::new().forward(field, comm)
}

/// Inverse of [`dist_fft_2d_forward`].
pub fn dist_fft_2d_inverse<C: Communicator + ?Sized>(field: DistField, comm: &C) -> Result<DistField> {
    require_2d(&field)?;
    DistFft::new().inverse(field, comm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comm::Solo;
    use crate::fft::fft_nd;

    fn sample(shape: [usize; 3]) -> ComplexBuffer {
        ComplexBuffer::from_fn(shape, |x, y, z| {
            Complex64::new((x * 7 + y * 3 + z) as f64 * 0.1 - 1.0, libm::sin((x + 2 * y + 3 * z) as f64))
        })
    }

    #[test]
    fn scatter_gather_partition() {
        let grid = GridSpec::cube(4, 1.0).unwrap();
        let full = sample([4, 4, 4]);
        let slabs: Vec<DistField> =
            (0..2).map(|r| scatter(&full, &grid, SlabAxis::Z, Space::Physical, r, 2).unwrap()).collect();
        assert_eq!(slabs[0].local().shape(), [4, 4, 2]);
        assert_eq!(slabs[1].local().get(1, 2, 0), full.get(1, 2, 2));
        assert_eq!(assemble(&slabs).unwrap(), full);
    }

    #[test]
    fn scatter_rejects_wrong_shape() {
        let grid = GridSpec::cube(4, 1.0).unwrap();
        let full = sample([4, 4, 3]);
        assert!(matches!(
            scatter(&full, &grid, SlabAxis::Z, Space::Physical, 0, 2),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn single_worker_matches_serial() {
        let grid = GridSpec::new([6, 5, 4], [1.0; 3]).unwrap();
        let full = sample(grid.n());
        let field = scatter_owned(full.clone(), &grid, SlabAxis::Z, Space::Physical).unwrap();
        let hat = dist_fft_forward(field, &Solo).unwrap();
        assert_eq!(hat.layout(), SlabAxis::X);
        let mut serial = full.clone();
        fft_nd(&mut serial, Direction::Forward).unwrap();
        assert_eq!(hat.local(), &serial);
        let back = dist_fft_inverse(hat, &Solo).unwrap();
        let err = back.local().as_slice().iter().zip(full.as_slice()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn wrong_layout_is_rejected() {
        let grid = GridSpec::cube(4, 1.0).unwrap();
        let field = DistField::zeros(grid, SlabAxis::X, Space::Physical, 0, 1).unwrap();
        assert!(matches!(exchange_z_to_x(field.clone(), &Solo), Err(Error::Layout(_))));
        assert!(matches!(dist_fft_forward(field, &Solo), Err(Error::Layout(_))));
        let flat = GridSpec::new_2d(4, 4, 1.0, 1.0).unwrap();
        let f2 = DistField::zeros(flat, SlabAxis::Y, Space::Physical, 0, 1).unwrap();
        assert!(dist_fft_forward(f2.clone(), &Solo).is_err());
        assert!(dist_fft_2d_forward(f2, &Solo).is_ok());
    }
}
