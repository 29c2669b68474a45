//! Hydrodynamic PFC: density `psi` advected by a velocity field `v` that is
//! driven by the coarse-grained force `-<psi grad mu>` and damped by viscosity.
//!
//! Work is split field-per-worker across four ranks: rank 0 owns `psi`,
//! ranks 1..=3 own `v1`, `v2`, `v3`. Every rank keeps its field at full grid
//! resolution and uses serial transforms. Per step, rank 0 updates `psi` and
//! sends it to ranks 1..=3 (tag 2); each velocity rank updates its component
//! with the fresh `psi` and sends it back (tags 4, 5, 6). [`HydroSerial`] runs
//! the same dataflow on one worker and serves as the reference.

use core::f64::consts::PI;

use crate::comm::{Communicator, Payload, Tag};
use crate::error::{invalid, Error, Result};
use crate::fft::{ComplexBuffer, Direction, Planner};
use crate::grid::{GridSpec, SymbolTable};
use crate::pfc::{cube_in_place, free_energy_serial, full_symbols, implicit_update, PfcParams};
use crate::Complex64;

/// Tag of the density broadcast.
pub const TAG_PSI: Tag = 2;
/// Tags of the returned velocity components.
pub const TAG_V: [Tag; 3] = [4, 5, 6];

/// Number of ranks in the field-parallel decomposition.
pub const HYDRO_WORKERS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HydroParams {
    pub pfc: PfcParams,
    /// Fluid density scale.
    pub rho: f64,
    /// Viscous friction coefficient.
    pub gamma: f64,
    /// Width of the Gaussian coarse-graining kernel.
    pub a0: f64,
}

impl Default for HydroParams {
    fn default() -> Self {
        HydroParams { pfc: PfcParams::default(), rho: 1.0, gamma: 1.0, a0: 2.0 * PI }
    }
}

impl HydroParams {
    pub fn validate(&self) -> Result<()> {
        self.pfc.validate()?;
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(invalid("rho", "must be positive"));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(invalid("gamma", "must be non-negative"));
        }
        if !(self.a0.is_finite() && self.a0 > 0.0) {
            return Err(invalid("a0", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Psi,
    /// Velocity component 0, 1 or 2.
    Velocity(usize),
}

impl Role {
    pub fn of_rank(rank: usize) -> Result<Self> {
        match rank {
            0 => Ok(Role::Psi),
            1..=3 => Ok(Role::Velocity(rank - 1)),
            _ => Err(invalid("rank", "hydro roles exist for ranks 0..4 only")),
        }
    }
}

/// Full-grid transforms and symbols shared by every role.
#[derive(Debug)]
pub struct HydroKernel {
    grid: GridSpec,
    symbols: SymbolTable,
    planner: Planner,
}

fn check_finite(data: &[Complex64], step: u64, physical: &ComplexBuffer) -> Result<()> {
    if data.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::Divergence { step, max_abs: physical.max_abs() });
    }
    Ok(())
}

impl HydroKernel {
    pub fn new(grid: GridSpec, params: &HydroParams) -> Result<Self> {
        params.validate()?;
        let symbols = full_symbols(&grid, params.pfc.eps, params.a0)?;
        Ok(HydroKernel { grid, symbols, planner: Planner::new() })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    pub fn forward(&mut self, mut buf: ComplexBuffer) -> Result<ComplexBuffer> {
        self.planner.fft_nd(&mut buf, Direction::Forward)?;
        Ok(buf)
    }

    pub fn inverse(&mut self, mut buf: ComplexBuffer) -> Result<ComplexBuffer> {
        self.planner.fft_nd(&mut buf, Direction::Inverse)?;
        Ok(buf)
    }

    /// `d_axis * spectrum` with the derivative multiplier broadcast along its axis.
    fn derivative(&self, spectrum: &ComplexBuffer, axis: usize) -> ComplexBuffer {
        let d = &self.symbols.d[axis];
        let [nx, ny, _] = spectrum.shape();
        let mut out = spectrum.clone();
        for (idx, v) in out.as_mut_slice().iter_mut().enumerate() {
            let j = match axis {
                0 => idx % nx,
                1 => (idx / nx) % ny,
                _ => idx / (nx * ny),
            };
            *v *= d[j];
        }
        out
    }

    /// `F[psi^3]`.
    fn cubic_hat(&mut self, psi: &ComplexBuffer) -> Result<ComplexBuffer> {
        let mut n = psi.clone();
        cube_in_place(n.as_mut_slice());
        self.forward(n)
    }

    /// Semi-implicit density update
    /// `psi_hat <- (psi_hat + dt (lap F[psi^3] - F[v . grad psi])) / (1 - dt lin)`.
    /// Returns the new physical-space density.
    pub fn psi_update(
        &mut self,
        psi_hat: &mut ComplexBuffer,
        psi: &ComplexBuffer,
        v: &[ComplexBuffer; 3],
        dt: f64,
        step: u64,
    ) -> Result<ComplexBuffer> {
        let mut explicit = self.cubic_hat(psi)?;
        for (n, l) in explicit.as_mut_slice().iter_mut().zip(&self.symbols.lap) {
            *n *= *l;
        }
        let mut advection = ComplexBuffer::zeros(self.grid.n());
        for (axis, vel) in v.iter().enumerate() {
            let grad = self.inverse(self.derivative(psi_hat, axis))?;
            for ((a, g), u) in advection.as_mut_slice().iter_mut().zip(grad.as_slice()).zip(vel.as_slice()) {
                *a += *u * *g;
            }
        }
        let advection = self.forward(advection)?;
        for (e, a) in explicit.as_mut_slice().iter_mut().zip(advection.as_slice()) {
            *e -= *a;
        }
        implicit_update(psi_hat.as_mut_slice(), explicit.as_slice(), &self.symbols.lin, dt);
        check_finite(psi_hat.as_slice(), step, psi)?;
        self.inverse(psi_hat.clone())
    }

    /// Velocity update for component `axis` with `mu_hat = F[psi^3] + op F[psi]`:
    /// `v_hat <- (v_hat - dt/rho cg F[psi F^-1[d mu_hat]]) / (1 - dt/rho gamma lap)`.
    /// Returns the new physical-space component.
    pub fn velocity_update(
        &mut self,
        axis: usize,
        v_hat: &mut ComplexBuffer,
        psi: &ComplexBuffer,
        params: &HydroParams,
        step: u64,
    ) -> Result<ComplexBuffer> {
        let mut mu_hat = self.cubic_hat(psi)?;
        let psi_hat = self.forward(psi.clone())?;
        for ((m, p), o) in mu_hat.as_mut_slice().iter_mut().zip(psi_hat.as_slice()).zip(&self.symbols.op) {
            *m += *p * *o;
        }
        let mut force = self.inverse(self.derivative(&mu_hat, axis))?;
        for (f, p) in force.as_mut_slice().iter_mut().zip(psi.as_slice()) {
            *f *= *p;
        }
        let force_hat = self.forward(force)?;
        let c = params.pfc.dt / params.rho;
        let damping = c * params.gamma;
        let sym = &self.symbols;
        for (i, (v, f)) in v_hat.as_mut_slice().iter_mut().zip(force_hat.as_slice()).enumerate() {
            *v = (*v - *f * (c * sym.cg[i])) / (1.0 - damping * sym.lap[i]);
        }
        check_finite(v_hat.as_slice(), step, psi)?;
        self.inverse(v_hat.clone())
    }

    pub fn free_energy(&mut self, psi_hat: &ComplexBuffer) -> Result<f64> {
        let op = core::mem::take(&mut self.symbols.op);
        let out = free_energy_serial(&self.grid, psi_hat, &op, &mut self.planner);
        self.symbols.op = op;
        out
    }
}

/// Scalar diagnostics of a hydrodynamic state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HydroDiagnostics {
    pub step: u64,
    pub time: f64,
    pub free_energy: f64,
    pub mean_psi: f64,
    pub max_abs_psi: f64,
    pub max_abs_v: [f64; 3],
    pub mean_psi_drift: f64,
}

fn diagnostics(
    kernel: &mut HydroKernel,
    psi_hat: &ComplexBuffer,
    psi: &ComplexBuffer,
    v: &[ComplexBuffer; 3],
    initial_mean: f64,
    step: u64,
    time: f64,
) -> Result<HydroDiagnostics> {
    let mean = psi_hat.as_slice()[0].re / kernel.grid.total() as f64;
    Ok(HydroDiagnostics {
        step,
        time,
        free_energy: kernel.free_energy(psi_hat)?,
        mean_psi: mean,
        max_abs_psi: psi.max_abs(),
        max_abs_v: [v[0].max_abs(), v[1].max_abs(), v[2].max_abs()],
        mean_psi_drift: mean - initial_mean,
    })
}

/// Spectral and physical copies of an initial state, passed through one
/// forward/inverse round trip so every mode of execution starts from the
/// same bits.
fn prepare(kernel: &mut HydroKernel, field: &ComplexBuffer) -> Result<(ComplexBuffer, ComplexBuffer)> {
    if field.shape() != kernel.grid.n() {
        return Err(Error::ShapeMismatch { expected: kernel.grid.n(), found: field.shape() });
    }
    let hat = kernel.forward(field.clone())?;
    let phys = kernel.inverse(hat.clone())?;
    Ok((hat, phys))
}

/// One worker playing all four roles in sequence.
#[derive(Debug)]
pub struct HydroSerial {
    kernel: HydroKernel,
    params: HydroParams,
    psi_hat: ComplexBuffer,
    psi: ComplexBuffer,
    v_hat: [ComplexBuffer; 3],
    v: [ComplexBuffer; 3],
    initial_mean: f64,
    step_index: u64,
    sim_time: f64,
}

impl HydroSerial {
    pub fn new(grid: GridSpec, params: HydroParams, psi0: &ComplexBuffer, v0: &[ComplexBuffer; 3]) -> Result<Self> {
        let mut kernel = HydroKernel::new(grid, &params)?;
        let (psi_hat, psi) = prepare(&mut kernel, psi0)?;
        let [a, b, c] = v0;
        let (h0, p0) = prepare(&mut kernel, a)?;
        let (h1, p1) = prepare(&mut kernel, b)?;
        let (h2, p2) = prepare(&mut kernel, c)?;
        let initial_mean = psi_hat.as_slice()[0].re / grid.total() as f64;
        Ok(HydroSerial {
            kernel,
            params,
            psi_hat,
            psi,
            v_hat: [h0, h1, h2],
            v: [p0, p1, p2],
            initial_mean,
            step_index: 0,
            sim_time: 0.0,
        })
    }

    pub fn step(&mut self) -> Result<()> {
        let step = self.step_index + 1;
        self.psi = self.kernel.psi_update(&mut self.psi_hat, &self.psi, &self.v, self.params.pfc.dt, step)?;
        for axis in 0..3 {
            self.v[axis] = self.kernel.velocity_update(axis, &mut self.v_hat[axis], &self.psi, &self.params, step)?;
        }
        self.step_index = step;
        self.sim_time += self.params.pfc.dt;
        Ok(())
    }

    /// Replaces the velocity field (physical space).
    pub fn set_velocity(&mut self, v: &[ComplexBuffer; 3]) -> Result<()> {
        for (axis, field) in v.iter().enumerate() {
            let (h, p) = prepare(&mut self.kernel, field)?;
            self.v_hat[axis] = h;
            self.v[axis] = p;
        }
        Ok(())
    }

    pub fn psi(&self) -> &ComplexBuffer {
        &self.psi
    }

    pub fn psi_hat(&self) -> &ComplexBuffer {
        &self.psi_hat
    }

    pub fn velocity(&self) -> &[ComplexBuffer; 3] {
        &self.v
    }

    pub fn velocity_hat(&self) -> &[ComplexBuffer; 3] {
        &self.v_hat
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn kernel(&mut self) -> &mut HydroKernel {
        &mut self.kernel
    }

    pub fn diagnostics(&mut self) -> Result<HydroDiagnostics> {
        diagnostics(&mut self.kernel, &self.psi_hat, &self.psi, &self.v, self.initial_mean, self.step_index, self.sim_time)
    }
}

/// State of one rank in the four-rank field-parallel decomposition.
#[derive(Debug)]
pub struct HydroWorker {
    role: Role,
    kernel: HydroKernel,
    params: HydroParams,
    /// Spectrum of the field this rank owns.
    owned_hat: ComplexBuffer,
    /// Physical copy of the owned field.
    owned: ComplexBuffer,
    /// `[v1, v2, v3]` on the density rank, `[psi]` on velocity ranks.
    mirrors: alloc::vec::Vec<ComplexBuffer>,
    mirror_generation: u64,
    initial_mean: f64,
    step_index: u64,
    sim_time: f64,
}

impl HydroWorker {
    pub fn new(rank: usize, grid: GridSpec, params: HydroParams, psi0: &ComplexBuffer, v0: &[ComplexBuffer; 3]) -> Result<Self> {
        let role = Role::of_rank(rank)?;
        let mut kernel = HydroKernel::new(grid, &params)?;
        let (psi_hat, psi) = prepare(&mut kernel, psi0)?;
        let initial_mean = psi_hat.as_slice()[0].re / grid.total() as f64;
        let (owned_hat, owned, mirrors) = match role {
            Role::Psi => {
                let mut mirrors = alloc::vec::Vec::with_capacity(3);
                for v in v0 {
                    mirrors.push(prepare(&mut kernel, v)?.1);
                }
                (psi_hat, psi, mirrors)
            }
            Role::Velocity(axis) => {
                let (h, p) = prepare(&mut kernel, &v0[axis])?;
                (h, p, alloc::vec![psi])
            }
        };
        Ok(HydroWorker {
            role,
            kernel,
            params,
            owned_hat,
            owned,
            mirrors,
            mirror_generation: 0,
            initial_mean,
            step_index: 0,
            sim_time: 0.0,
        })
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn owned(&self) -> &ComplexBuffer {
        &self.owned
    }

    pub fn owned_hat(&self) -> &ComplexBuffer {
        &self.owned_hat
    }

    pub fn mirrors(&self) -> &[ComplexBuffer] {
        &self.mirrors
    }

    pub fn mirror_generation(&self) -> u64 {
        self.mirror_generation
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    fn payload(field: &ComplexBuffer) -> Result<Payload> {
        Ok(Payload::complex(field.shape(), field.as_slice().to_vec())?)
    }

    fn unpack(&self, payload: Payload) -> Result<ComplexBuffer> {
        let shape = payload.shape();
        if shape != self.kernel.grid.n() {
            return Err(Error::ShapeMismatch { expected: self.kernel.grid.n(), found: shape });
        }
        ComplexBuffer::from_vec(shape, payload.into_complex()?)
    }

    /// One lock-step time step. Collective over exactly four ranks.
    pub fn step<C: Communicator + ?Sized>(&mut self, comm: &C) -> Result<()> {
        if comm.size() != HYDRO_WORKERS {
            return Err(invalid("workers", "the field-parallel hydro solver needs exactly 4 workers"));
        }
        let step = self.step_index + 1;
        match self.role {
            Role::Psi => {
                let v: [ComplexBuffer; 3] = [self.mirrors[0].clone(), self.mirrors[1].clone(), self.mirrors[2].clone()];
                self.owned = self.kernel.psi_update(&mut self.owned_hat, &self.owned, &v, self.params.pfc.dt, step)?;
                for dst in 1..HYDRO_WORKERS {
                    comm.send(dst, TAG_PSI, Self::payload(&self.owned)?)?;
                }
                for (axis, tag) in TAG_V.iter().enumerate() {
                    let p = comm.receive(axis + 1, *tag)?;
                    self.mirrors[axis] = self.unpack(p)?;
                }
            }
            Role::Velocity(axis) => {
                let p = comm.receive(0, TAG_PSI)?;
                self.mirrors[0] = self.unpack(p)?;
                self.owned = self.kernel.velocity_update(axis, &mut self.owned_hat, &self.mirrors[0], &self.params, step)?;
                comm.send(0, TAG_V[axis], Self::payload(&self.owned)?)?;
            }
        }
        self.step_index = step;
        self.mirror_generation = step;
        self.sim_time += self.params.pfc.dt;
        Ok(())
    }

    /// Diagnostics from the density rank's view (its own `psi` plus the
    /// mirrored velocities). `None` on velocity ranks.
    pub fn diagnostics(&mut self) -> Result<Option<HydroDiagnostics>> {
        if self.role != Role::Psi {
            return Ok(None);
        }
        let v = [self.mirrors[0].clone(), self.mirrors[1].clone(), self.mirrors[2].clone()];
        diagnostics(&mut self.kernel, &self.owned_hat, &self.owned, &v, self.initial_mean, self.step_index, self.sim_time).map(Some)
    }
}
