//! Strong-scaling benchmark of the PFC step loop.
//!
//! For every requested worker count the same run is repeated
//! `bench.repetitions` times after `bench.warmup` untimed steps. Besides the
//! timing table, a details table records per-worker peak field memory and how
//! far the final field is from the single-worker one, which shows that grids
//! not divisible by the worker count work unchanged.

use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;
use slabpfc_core::comm::Communicator;
use slabpfc_core::dist::gather;
use slabpfc_core::fft::ComplexBuffer;
use slabpfc_core::init::init_condition;
use slabpfc_core::pfc::PfcState;

use crate::config::RunConfig;
use crate::error::RunError;
use crate::run::prepare_output;
use crate::transport::spawn_group;

pub const BENCH_CSV: &str = "bench.csv";
pub const BENCH_DETAILS_CSV: &str = "bench_memory.csv";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    #[serde(rename = "G")]
    pub workers: usize,
    pub grid: String,
    pub steps: u64,
    pub seconds_per_step_median: f64,
    pub seconds_per_step_min: f64,
    /// Empty when `G = 1` was not measured.
    #[serde(rename = "speedup_vs_G1")]
    pub speedup_vs_g1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchDetail {
    #[serde(rename = "G")]
    pub workers: usize,
    pub grid: String,
    pub nz_mod_g: usize,
    pub peak_field_bytes_per_worker: usize,
    #[serde(rename = "memory_ratio_vs_G1")]
    pub memory_ratio_vs_g1: Option<f64>,
    /// `max |psi_G - psi_1| / max |psi_1|` of the final fields.
    #[serde(rename = "max_rel_diff_vs_G1")]
    pub max_rel_diff_vs_g1: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub details: Vec<BenchDetail>,
    pub csv: PathBuf,
    pub details_csv: PathBuf,
}

struct Sample {
    seconds_per_step: f64,
    peak_bytes: usize,
    field: Option<ComplexBuffer>,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn one_repetition(cfg: &RunConfig, workers: usize) -> Result<Sample, RunError> {
    let grid = cfg.grid_spec();
    let params = cfg.pfc_params();
    let kind = cfg.init_kind();
    let (warmup, steps) = (cfg.bench.warmup, cfg.bench.steps);
    let samples = spawn_group(workers, cfg.transport_config(), |comm| -> Result<Sample, RunError> {
        let init = init_condition(kind, &grid, params.psi_bar, cfg.init.seed, cfg.commensurability(), comm.rank(), workers)?;
        let mut state = PfcState::new(init.field, params.eps, comm)?;
        for _ in 0..warmup {
            state.step(&params, comm)?;
        }
        comm.barrier().map_err(slabpfc_core::Error::from)?;
        let start = Instant::now();
        for _ in 0..steps {
            state.step(&params, comm)?;
        }
        comm.barrier().map_err(slabpfc_core::Error::from)?;
        let seconds_per_step = start.elapsed().as_secs_f64() / steps as f64;
        let psi = state.psi(comm)?;
        Ok(Sample { seconds_per_step, peak_bytes: state.peak_field_bytes(), field: gather(&psi, comm)? })
    })?;
    let peak_bytes = samples.iter().map(|s| s.peak_bytes).max().unwrap_or(0);
    let first = samples.into_iter().next().expect("at least one worker");
    Ok(Sample { peak_bytes, ..first })
}

fn rel_diff(a: &ComplexBuffer, reference: &ComplexBuffer) -> f64 {
    let diff = a.as_slice().iter().zip(reference.as_slice()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let scale = reference.max_abs();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Runs the benchmark and writes both CSV tables into `io.out_dir`.
pub fn bench(cfg: &RunConfig) -> Result<BenchReport, RunError> {
    let out_dir = prepare_output(cfg)?;
    let grid = cfg.grid_spec();
    let [nx, ny, nz] = grid.n();
    let label = if grid.is_2d() { format!("{nx}x{ny}") } else { format!("{nx}x{ny}x{nz}") };
    let split = grid.n()[grid.physical_axis()];

    struct Measured {
        workers: usize,
        median: f64,
        min: f64,
        peak: usize,
        field: Option<ComplexBuffer>,
    }
    let mut measured = Vec::new();
    for &g in &cfg.bench.workers {
        let mut times = Vec::with_capacity(cfg.bench.repetitions);
        let mut last = None;
        for rep in 0..cfg.bench.repetitions {
            let s = one_repetition(cfg, g)?;
            log::info!("G={g} repetition {rep}: {:.6e} s/step", s.seconds_per_step);
            times.push(s.seconds_per_step);
            last = Some(s);
        }
        let last = last.expect("repetitions >= 3");
        let min = times.iter().copied().fold(f64::INFINITY, f64::min);
        measured.push(Measured { workers: g, median: median(&mut times), min, peak: last.peak_bytes, field: last.field });
    }

    let base = measured.iter().find(|m| m.workers == 1);
    let rows: Vec<BenchRow> = measured
        .iter()
        .map(|m| BenchRow {
            workers: m.workers,
            grid: label.clone(),
            steps: cfg.bench.steps,
            seconds_per_step_median: m.median,
            seconds_per_step_min: m.min,
            speedup_vs_g1: base.map(|b| b.median / m.median),
        })
        .collect();
    let details: Vec<BenchDetail> = measured
        .iter()
        .map(|m| BenchDetail {
            workers: m.workers,
            grid: label.clone(),
            nz_mod_g: split % m.workers,
            peak_field_bytes_per_worker: m.peak,
            memory_ratio_vs_g1: base.map(|b| m.peak as f64 / b.peak as f64),
            max_rel_diff_vs_g1: base.and_then(|b| Some(rel_diff(m.field.as_ref()?, b.field.as_ref()?))),
        })
        .collect();

    let csv = out_dir.join(BENCH_CSV);
    let details_csv = out_dir.join(BENCH_DETAILS_CSV);
    write_table(&csv, &rows)?;
    write_table(&details_csv, &details)?;
    Ok(BenchReport { rows, details, csv, details_csv })
}

fn write_table<R: Serialize>(path: &PathBuf, rows: &[R]) -> Result<(), RunError> {
    let wrap = |source| RunError::Csv { path: path.clone(), source };
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    for r in rows {
        w.serialize(r).map_err(wrap)?;
    }
    w.flush().map_err(|e| RunError::io(path, e))
}
