//! Run drivers: the time loop, diagnostics CSV and snapshots.
//!
//! All file output happens on rank 0 between collective sections; every CSV
//! row is flushed as soon as it is written so a diverging run leaves its
//! history behind.

use std::fs::{self, File};
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;
use slabpfc_core::comm::Communicator;
use slabpfc_core::dist::gather;
use slabpfc_core::fft::ComplexBuffer;
use slabpfc_core::hydro::{HydroDiagnostics, HydroSerial, HydroWorker, HYDRO_WORKERS};
use slabpfc_core::init::{init_condition, InitOutcome};
use slabpfc_core::pfc::{PfcDiagnostics, PfcState};
use slabpfc_core::Error as CoreError;

use crate::config::RunConfig;
use crate::error::RunError;
use crate::snapshot::{write_meta, write_snapshot};
use crate::transport::spawn_group;

pub const PFC_CSV: &str = "diagnostics.csv";
pub const HYDRO_CSV: &str = "hydro_diagnostics.csv";
pub const RESOLVED_CONFIG: &str = "resolved_config.toml";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PfcRow {
    pub step: u64,
    pub time: f64,
    pub free_energy: f64,
    pub mean_psi: f64,
    pub max_abs_psi: f64,
    /// Mean wall time per step since the previous row.
    pub step_wall_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HydroRow {
    pub step: u64,
    pub time: f64,
    pub free_energy: f64,
    pub mean_psi: f64,
    pub max_abs_psi: f64,
    pub step_wall_seconds: f64,
    pub max_abs_v1: f64,
    pub max_abs_v2: f64,
    pub max_abs_v3: f64,
    pub mean_psi_drift: f64,
}

impl PfcRow {
    fn new(d: &PfcDiagnostics, wall: f64) -> Self {
        PfcRow {
            step: d.step,
            time: d.time,
            free_energy: d.free_energy,
            mean_psi: d.mean_psi,
            max_abs_psi: d.max_abs_psi,
            step_wall_seconds: wall,
        }
    }
}

impl HydroRow {
    fn new(d: &HydroDiagnostics, wall: f64) -> Self {
        HydroRow {
            step: d.step,
            time: d.time,
            free_energy: d.free_energy,
            mean_psi: d.mean_psi,
            max_abs_psi: d.max_abs_psi,
            step_wall_seconds: wall,
            max_abs_v1: d.max_abs_v[0],
            max_abs_v2: d.max_abs_v[1],
            max_abs_v3: d.max_abs_v[2],
            mean_psi_drift: d.mean_psi_drift,
        }
    }
}

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct RunSummary<R> {
    pub out_dir: PathBuf,
    pub config_hash: String,
    pub rows: Vec<R>,
    pub snapshots: Vec<PathBuf>,
    /// Init warnings such as incommensurate domain lengths.
    pub warnings: Vec<String>,
    /// Peak resident field bytes per worker, rank order.
    pub peak_field_bytes: Vec<usize>,
}

/// Line-buffered CSV writer that flushes after every row.
struct CsvOut {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl CsvOut {
    fn create(path: PathBuf) -> Result<Self, RunError> {
        let writer = csv::Writer::from_path(&path).map_err(|source| RunError::Csv { path: path.clone(), source })?;
        Ok(CsvOut { path, writer })
    }

    fn row<R: Serialize>(&mut self, row: &R) -> Result<(), RunError> {
        self.writer.serialize(row).map_err(|source| RunError::Csv { path: self.path.clone(), source })?;
        self.writer.flush().map_err(|e| RunError::io(&self.path, e))
    }
}

/// Creates the output directory and writes the resolved config.
pub fn prepare_output(cfg: &RunConfig) -> Result<PathBuf, RunError> {
    let dir = cfg.io.out_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| RunError::io(&dir, e))?;
    let path = dir.join(RESOLVED_CONFIG);
    fs::write(&path, cfg.resolved_toml()).map_err(|e| RunError::io(&path, e))?;
    Ok(dir)
}

fn records(cfg: &RunConfig, step: u64, every: u64) -> bool {
    step.is_multiple_of(every) || step == cfg.params.steps
}

/// Writes a gathered field: the full volume, or three mid-plane slices.
fn snapshot_field(
    cfg: &RunConfig,
    name: &str,
    field: &ComplexBuffer,
    step: u64,
    time: f64,
    workers: usize,
) -> Result<Vec<PathBuf>, RunError> {
    let [nx, ny, nz] = field.shape();
    let mut planes: Vec<(String, [usize; 3], Vec<f64>)> = Vec::new();
    if cfg.io.full.unwrap_or(true) {
        planes.push((format!("{name}_{step:08}.bin"), [nx, ny, nz], field.real_parts()));
    } else {
        let (xm, ym, zm) = (nx / 2, ny / 2, nz / 2);
        let xy = (0..ny).flat_map(|y| (0..nx).map(move |x| (x, y))).map(|(x, y)| field.get(x, y, zm).re).collect();
        let xz = (0..nz).flat_map(|z| (0..nx).map(move |x| (x, z))).map(|(x, z)| field.get(x, ym, z).re).collect();
        let yz = (0..nz).flat_map(|z| (0..ny).map(move |y| (y, z))).map(|(y, z)| field.get(xm, y, z).re).collect();
        planes.push((format!("{name}_{step:08}_xy.bin"), [nx, ny, 1], xy));
        planes.push((format!("{name}_{step:08}_xz.bin"), [nx, 1, nz], xz));
        planes.push((format!("{name}_{step:08}_yz.bin"), [1, ny, nz], yz));
    }
    let mut written = Vec::new();
    for (file, dims, data) in planes {
        let path = cfg.io.out_dir.join(file);
        write_snapshot(&path, dims, step, time, &data)?;
        write_meta(
            &path,
            &[
                ("field", name.to_string()),
                ("model", cfg.model.to_string()),
                ("step", step.to_string()),
                ("time", format!("{time:?}")),
                ("dims", format!("{dims:?}")),
                ("grid", format!("{:?}", field.shape())),
                ("workers", workers.to_string()),
                ("config_hash", cfg.hash()),
            ],
        )?;
        written.push(path);
    }
    Ok(written)
}

struct PfcWorkerResult {
    rows: Vec<PfcRow>,
    snapshots: Vec<PathBuf>,
    warnings: Vec<String>,
    peak_bytes: usize,
}

/// Runs the slab-parallel PFC model on `cfg.workers` threads.
pub fn run_pfc(cfg: &RunConfig) -> Result<RunSummary<PfcRow>, RunError> {
    let out_dir = prepare_output(cfg)?;
    let grid = cfg.grid_spec();
    let params = cfg.pfc_params();
    params.validate()?;
    let kind = cfg.init_kind();
    let workers = cfg.workers;

    let results = spawn_group(workers, cfg.transport_config(), |comm| -> Result<PfcWorkerResult, RunError> {
        let rank = comm.rank();
        let InitOutcome { field, warnings } =
            init_condition(kind, &grid, params.psi_bar, cfg.init.seed, cfg.commensurability(), rank, workers)?;
        let mut state = PfcState::new(field, params.eps, comm)?;
        let mut csv = if rank == 0 { Some(CsvOut::create(out_dir.join(PFC_CSV))?) } else { None };
        let mut out = PfcWorkerResult {
            rows: Vec::new(),
            snapshots: Vec::new(),
            warnings: warnings.iter().map(ToString::to_string).collect(),
            peak_bytes: 0,
        };

        let mut clock = Instant::now();
        let mut since = 0u64;
        for step in 0..=params.n_steps {
            if step > 0 {
                state.step(&params, comm)?;
                since += 1;
            }
            if records(cfg, step, cfg.io.diag_every) {
                let wall = if since > 0 { clock.elapsed().as_secs_f64() / since as f64 } else { 0.0 };
                let d = state.diagnostics(comm)?;
                if let Some(csv) = csv.as_mut() {
                    let row = PfcRow::new(&d, wall);
                    csv.row(&row)?;
                    out.rows.push(row);
                }
                log::debug!("step {step}: F = {:.12e}", d.free_energy);
            }
            if records(cfg, step, cfg.io.snap_every) {
                let psi = state.psi(comm)?;
                if let Some(full) = gather(&psi, comm)? {
                    out.snapshots.extend(snapshot_field(cfg, "psi", &full, step, state.sim_time(), workers)?);
                }
            }
            if records(cfg, step, cfg.io.diag_every) {
                clock = Instant::now();
                since = 0;
            }
        }
        out.peak_bytes = state.peak_field_bytes();
        Ok(out)
    })?;

    let peak_field_bytes = results.iter().map(|r| r.peak_bytes).collect();
    let mut results = results.into_iter();
    let first = results.next().expect("at least one worker");
    Ok(RunSummary {
        out_dir,
        config_hash: cfg.hash(),
        rows: first.rows,
        snapshots: first.snapshots,
        warnings: first.warnings,
        peak_field_bytes,
    })
}

/// Full-volume initial density (one worker's view) and a zero velocity.
fn hydro_initial(cfg: &RunConfig) -> Result<(ComplexBuffer, [ComplexBuffer; 3], Vec<String>), RunError> {
    let grid = cfg.grid_spec();
    let p = cfg.pfc_params();
    let InitOutcome { field, warnings } =
        init_condition(cfg.init_kind(), &grid, p.psi_bar, cfg.init.seed, cfg.commensurability(), 0, 1)?;
    let v0 = std::array::from_fn(|_| ComplexBuffer::zeros(grid.n()));
    Ok((field.into_local(), v0, warnings.iter().map(ToString::to_string).collect()))
}

/// Runs the hydrodynamic model: one thread playing all roles for `workers = 1`,
/// four field-parallel threads for `workers = 4`.
pub fn run_hydro(cfg: &RunConfig) -> Result<RunSummary<HydroRow>, RunError> {
    let out_dir = prepare_output(cfg)?;
    let grid = cfg.grid_spec();
    let params = cfg.hydro_params();
    params.validate()?;
    let (psi0, v0, warnings) = hydro_initial(cfg)?;
    let steps = params.pfc.n_steps;
    let field_bytes = grid.total() * std::mem::size_of::<slabpfc_core::Complex64>();

    match cfg.workers {
        1 => {
            let mut sim = HydroSerial::new(grid, params, &psi0, &v0)?;
            let mut csv = CsvOut::create(out_dir.join(HYDRO_CSV))?;
            let mut rows = Vec::new();
            let mut snapshots = Vec::new();
            let (mut clock, mut since) = (Instant::now(), 0u64);
            for step in 0..=steps {
                if step > 0 {
                    sim.step()?;
                    since += 1;
                }
                if records(cfg, step, cfg.io.diag_every) {
                    let wall = if since > 0 { clock.elapsed().as_secs_f64() / since as f64 } else { 0.0 };
                    let row = HydroRow::new(&sim.diagnostics()?, wall);
                    csv.row(&row)?;
                    rows.push(row);
                }
                if records(cfg, step, cfg.io.snap_every) {
                    let time = step as f64 * params.pfc.dt;
                    snapshots.extend(snapshot_field(cfg, "psi", sim.psi(), step, time, 1)?);
                    for (i, v) in sim.velocity().iter().enumerate() {
                        snapshots.extend(snapshot_field(cfg, &format!("v{}", i + 1), v, step, time, 1)?);
                    }
                }
                if records(cfg, step, cfg.io.diag_every) {
                    clock = Instant::now();
                    since = 0;
                }
            }
            Ok(RunSummary {
                out_dir,
                config_hash: cfg.hash(),
                rows,
                snapshots,
                warnings,
                // psi and three velocities, each with its spectrum
                peak_field_bytes: vec![8 * field_bytes],
            })
        }
        HYDRO_WORKERS => {
            let results = spawn_group(HYDRO_WORKERS, cfg.transport_config(), |comm| {
                let mut w = HydroWorker::new(comm.rank(), grid, params, &psi0, &v0)?;
                let mut csv = if comm.rank() == 0 { Some(CsvOut::create(out_dir.join(HYDRO_CSV))?) } else { None };
                let mut rows = Vec::new();
                let mut snapshots = Vec::new();
                let (mut clock, mut since) = (Instant::now(), 0u64);
                for step in 0..=steps {
                    if step > 0 {
                        w.step(comm)?;
                        since += 1;
                    }
                    if records(cfg, step, cfg.io.diag_every) {
                        let wall = if since > 0 { clock.elapsed().as_secs_f64() / since as f64 } else { 0.0 };
                        if let (Some(d), Some(csv)) = (w.diagnostics()?, csv.as_mut()) {
                            let row = HydroRow::new(&d, wall);
                            csv.row(&row)?;
                            rows.push(row);
                        }
                        clock = Instant::now();
                        since = 0;
                    }
                    // the density rank holds psi and mirrors of every velocity
                    if comm.rank() == 0 && records(cfg, step, cfg.io.snap_every) {
                        let time = step as f64 * params.pfc.dt;
                        snapshots.extend(snapshot_field(cfg, "psi", w.owned(), step, time, HYDRO_WORKERS)?);
                        for (i, v) in w.mirrors().iter().enumerate() {
                            snapshots.extend(snapshot_field(cfg, &format!("v{}", i + 1), v, step, time, HYDRO_WORKERS)?);
                        }
                    }
                }
                let held = 2 + w.mirrors().len();
                Ok::<_, RunError>((rows, snapshots, held * field_bytes))
            })?;
            let peak_field_bytes = results.iter().map(|r| r.2).collect();
            let (rows, snapshots, _) = results.into_iter().next().expect("four workers");
            Ok(RunSummary { out_dir, config_hash: cfg.hash(), rows, snapshots, warnings, peak_field_bytes })
        }
        g => Err(CoreError::InvalidParameter { name: "workers", reason: format!("workers must be 1 or 4 for HYDRO, got {g}") }.into()),
    }
}
