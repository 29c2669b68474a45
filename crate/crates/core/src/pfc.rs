//! Semi-implicit pseudo-spectral stepper for the conserved PFC equation
//!
//! ```text
//! d psi / dt = lap (eps + L) psi + lap psi^3,    L = (1 + lap)^2 (4/3 + lap)^2
//! ```
//!
//! The stiff linear part is implicit and the cubic term explicit:
//! `psi_hat <- (psi_hat + dt lap F[psi^3]) / (1 - dt lin)`.

use alloc::vec::Vec;

use crate::comm::{allreduce_max, allreduce_sum, Communicator};
use crate::dist::{DistFft, DistField, SlabAxis, Space};
use crate::error::{invalid, Error, Result};
use crate::fft::{ComplexBuffer, Direction, Planner};
use crate::grid::{make_symbols, GridSpec, IndexBox, SymbolTable};
use crate::Complex64;

/// Model and integration parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfcParams {
    /// Undercooling `eps`; negative values favour the crystal.
    pub eps: f64,
    pub dt: f64,
    /// Mean density.
    pub psi_bar: f64,
    pub n_steps: u64,
}

impl Default for PfcParams {
    fn default() -> Self {
        PfcParams { eps: -0.3, dt: 0.1, psi_bar: -0.3, n_steps: 1000 }
    }
}

impl PfcParams {
    pub fn validate(&self) -> Result<()> {
        if !self.eps.is_finite() {
            return Err(invalid("eps", "must be finite"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", "must be positive and finite"));
        }
        if !self.psi_bar.is_finite() {
            return Err(invalid("psi_bar", "must be finite"));
        }
        Ok(())
    }
}

/// Scalar diagnostics of one state, identical on every rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfcDiagnostics {
    pub step: u64,
    pub time: f64,
    pub free_energy: f64,
    pub mean_psi: f64,
    pub max_abs_psi: f64,
    /// `max |Im psi| / max |psi|` after the inverse transform.
    pub imag_ratio: f64,
}

/// Local quantities observed during the last step on this rank.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub max_abs_psi: f64,
    pub max_imag_psi: f64,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

/// Quadratic part of the energy sum over the given modes, evaluated in
/// spectral space: `sum_x psi L psi / 2 = sum_k op |psi_hat|^2 / (2 N)`.
///
/// Evaluating it in physical space instead multiplies the round-off floor of
/// the high-`k` modes by `op ~ k^8`, which shows up as ~1e-12 relative jitter
/// in the energy of converged states. In spectral form that noise enters
/// only quadratically.
pub(crate) fn quadratic_energy_sum(psi_hat: &[Complex64], op: &[f64], total: usize) -> f64 {
    let mut acc = CompensatedSum::default();
    for (p, o) in psi_hat.iter().zip(op) {
        acc.add(0.5 * o * p.norm_sqr());
    }
    acc.value() / total as f64
}

/// Quartic part `sum_x psi^4 / 4` using real parts.
pub(crate) fn quartic_energy_sum(psi: &[Complex64]) -> f64 {
    let mut acc = CompensatedSum::default();
    for p in psi {
        let v2 = p.re * p.re;
        acc.add(0.25 * v2 * v2);
    }
    acc.value()
}

/// Free energy of a full-grid spectral field using serial transforms.
pub fn free_energy_serial(grid: &GridSpec, psi_hat: &ComplexBuffer, op: &[f64], planner: &mut Planner) -> Result<f64> {
    let mut psi = psi_hat.clone();
    planner.fft_nd(&mut psi, Direction::Inverse)?;
    let sum = quadratic_energy_sum(psi_hat.as_slice(), op, grid.total()) + quartic_energy_sum(psi.as_slice());
    Ok(sum * grid.cell_volume())
}

pub(crate) fn cube_in_place(data: &mut [Complex64]) {
    for v in data {
        *v = *v * *v * *v;
    }
}

/// Semi-implicit update of every owned mode; shared with the hydrodynamic
/// stepper so both produce identical bits when advection vanishes.
pub(crate) fn implicit_update(psi_hat: &mut [Complex64], explicit: &[Complex64], lin: &[f64], dt: f64) {
    for ((p, e), l) in psi_hat.iter_mut().zip(explicit).zip(lin) {
        *p = (*p + *e * dt) / (1.0 - dt * l);
    }
}

fn first_non_finite(data: &[Complex64]) -> bool {
    data.iter().any(|c| !(c.re.is_finite() && c.im.is_finite()))
}

/// Distributed PFC state for one worker: its x-slab of `psi_hat` together
/// with the symbols of the modes it owns.
#[derive(Debug)]
pub struct PfcState {
    grid: GridSpec,
    symbols: SymbolTable,
    psi_hat: DistField,
    fft: DistFft,
    step_index: u64,
    sim_time: f64,
    stats: StepStats,
    peak_bytes: usize,
}

impl PfcState {
    /// Transforms a physical-space field and builds the owned symbols.
    pub fn new<C: Communicator + ?Sized>(psi: DistField, eps: f64, comm: &C) -> Result<Self> {
        let mut fft = DistFft::new();
        let psi_hat = fft.forward(psi, comm)?;
        let mut state = Self::from_spectral_with(psi_hat, eps, fft)?;
        state.peak_bytes = state.steady_bytes();
        Ok(state)
    }

    /// Starts from an x-slab spectral field.
    pub fn from_spectral(psi_hat: DistField, eps: f64) -> Result<Self> {
        Self::from_spectral_with(psi_hat, eps, DistFft::new())
    }

    fn from_spectral_with(psi_hat: DistField, eps: f64, fft: DistFft) -> Result<Self> {
        if psi_hat.layout() != SlabAxis::X || psi_hat.space() != Space::Spectral {
            return Err(Error::Layout("PFC state needs a spectral field in x-slabs".into()));
        }
        let grid = *psi_hat.grid();
        let symbols = make_symbols(&grid, eps, 0.0, psi_hat.region())?;
        let mut state = PfcState { grid, symbols, psi_hat, fft, step_index: 0, sim_time: 0.0, stats: StepStats::default(), peak_bytes: 0 };
        state.peak_bytes = state.steady_bytes();
        Ok(state)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    pub fn psi_hat(&self) -> &DistField {
        &self.psi_hat
    }

    pub fn psi_hat_mut(&mut self) -> &mut DistField {
        &mut self.psi_hat
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn sim_time(&self) -> f64 {
        self.sim_time
    }

    /// Local stats from the most recent step.
    pub fn last_stats(&self) -> StepStats {
        self.stats
    }

    fn steady_bytes(&self) -> usize {
        self.psi_hat.resident_bytes() + self.symbols.resident_bytes()
    }

    /// Peak bytes of field data this worker held at once: the spectral state,
    /// its symbols, the transform scratch and the exchange buffers.
    pub fn peak_field_bytes(&self) -> usize {
        self.peak_bytes
    }

    fn note_peak(&mut self, live: usize) {
        let total = self.steady_bytes() + live + self.fft.scratch_bytes();
        let exchange = self.steady_bytes() + self.fft.peak_exchange_bytes();
        self.peak_bytes = self.peak_bytes.max(total).max(exchange);
    }

    /// Physical-space `psi` in the physical slab layout.
    pub fn psi<C: Communicator + ?Sized>(&mut self, comm: &C) -> Result<DistField> {
        self.fft.inverse(self.psi_hat.clone(), comm)
    }

    /// Advances one time step. Collective.
    pub fn step<C: Communicator + ?Sized>(&mut self, params: &PfcParams, comm: &C) -> Result<()> {
        let mut work = self.fft.inverse(self.psi_hat.clone(), comm)?;
        let local = work.local();
        self.stats = StepStats { max_abs_psi: local.max_abs(), max_imag_psi: local.max_abs_im() };
        self.note_peak(work.resident_bytes());

        cube_in_place(work.local_mut().as_mut_slice());
        let mut nonlinear = self.fft.forward(work, comm)?;
        for (n, l) in nonlinear.local_mut().as_mut_slice().iter_mut().zip(&self.symbols.lap) {
            *n *= *l;
        }
        self.note_peak(nonlinear.resident_bytes());
        implicit_update(
            self.psi_hat.local_mut().as_mut_slice(),
            nonlinear.local().as_slice(),
            &self.symbols.lin,
            params.dt,
        );
        self.step_index += 1;
        self.sim_time += params.dt;
        if first_non_finite(self.psi_hat.local().as_slice()) {
            return Err(Error::Divergence { step: self.step_index, max_abs: self.stats.max_abs_psi });
        }
        Ok(())
    }

    /// Discrete free energy, reduced across ranks in rank order. Collective.
    pub fn free_energy<C: Communicator + ?Sized>(&mut self, comm: &C) -> Result<f64> {
        Ok(self.diagnostics(comm)?.free_energy)
    }

    /// Free energy, mean, extrema and realness of the current state. Collective.
    pub fn diagnostics<C: Communicator + ?Sized>(&mut self, comm: &C) -> Result<PfcDiagnostics> {
        let psi = self.fft.inverse(self.psi_hat.clone(), comm)?;
        let energy = quadratic_energy_sum(self.psi_hat.local().as_slice(), &self.symbols.op, self.grid.total())
            + quartic_energy_sum(psi.local().as_slice());

        let total = self.grid.total() as f64;
        let mean = if self.psi_hat.region().contains_origin() { self.psi_hat.local().as_slice()[0].re / total } else { 0.0 };
        let sums = allreduce_sum(comm, &[energy, mean])?;
        let maxima = allreduce_max(comm, &[psi.local().max_abs(), psi.local().max_abs_im()])?;
        Ok(PfcDiagnostics {
            step: self.step_index,
            time: self.sim_time,
            free_energy: sums[0] * self.grid.cell_volume(),
            mean_psi: sums[1],
            max_abs_psi: maxima[0],
            imag_ratio: if maxima[0] > 0.0 { maxima[1] / maxima[0] } else { 0.0 },
        })
    }
}

/// Amplification factor `1 / (1 - dt lin)` of a single mode in the linear regime.
pub fn amplification_factor(lin: f64, dt: f64) -> f64 {
    1.0 / (1.0 - dt * lin)
}

/// Spectral state with one Fourier mode `(kx, ky, kz)` (grid indices) and its
/// conjugate partner set to `amplitude * N`, i.e. `psi = 2 A cos(k . x)` in
/// physical space (or `A` when the mode is its own partner).
pub fn single_mode_spectrum(grid: &GridSpec, mode: [usize; 3], amplitude: f64) -> ComplexBuffer {
    let n = grid.n();
    let mut buf = ComplexBuffer::zeros(n);
    let value = Complex64::new(amplitude * grid.total() as f64, 0.0);
    buf.set(mode[0], mode[1], mode[2], value);
    let partner: Vec<usize> = (0..3).map(|a| (n[a] - mode[a]) % n[a]).collect();
    buf.set(partner[0], partner[1], partner[2], value);
    buf
}

/// Full-grid symbol table, convenience for serial checks.
pub fn full_symbols(grid: &GridSpec, eps: f64, a0: f64) -> Result<SymbolTable> {
    make_symbols(grid, eps, a0, IndexBox::full(grid))
}
