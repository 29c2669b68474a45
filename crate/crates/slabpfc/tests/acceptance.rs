//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL (or
//! SKIP, when a hardware precondition is not met) line per criterion and
//! exits non-zero if anything failed.
//!
//! Built with `harness = false` so the verdict lines are always visible.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use slabpfc::bench::bench;
use slabpfc::config::RunConfig;
use slabpfc::snapshot::{read_snapshot, write_snapshot};
use slabpfc::transport::{spawn_group, TransportConfig};
use slabpfc_core::comm::Communicator;
use slabpfc_core::dist::{dist_fft_forward, gather, scatter, SlabAxis, Space};
use slabpfc_core::fft::{fft_nd, ComplexBuffer, Direction};
use slabpfc_core::grid::GridSpec;
use slabpfc_core::hydro::{HydroParams, HydroSerial, HydroWorker, HYDRO_WORKERS};
use slabpfc_core::init::{fcc_period, init_condition, Commensurability, InitKind};
use slabpfc_core::oracle::dft;
use slabpfc_core::pfc::{single_mode_spectrum, PfcParams, PfcState};
use slabpfc_core::{Complex64, Error};

// Tolerances and sizes of the criteria.
const C1_TOL: f64 = 1e-12;
const C1_SECONDS: f64 = 60.0;
const C2_TOL: f64 = 1e-12;
const C3_N: usize = 64;
const C3_STEPS: u64 = 500;
const C3_ENERGY_SLACK: f64 = 1e-9;
const C3_G_TOL: f64 = 1e-8;
const C3_REAL_TOL: f64 = 1e-10;
const C3_SECONDS: f64 = 300.0;
const C4_TOL: f64 = 1e-6;
const C4_STEPS: i32 = 10;
const C5_N: usize = 32;
const C5_STEPS: u64 = 100;
const C5_TOL: f64 = 1e-10;
const C6_REGRESSION: f64 = 0.10;
const C6_MEMORY_RATIO: f64 = 0.35;
const C6_MIN_CORES: usize = 4;
const C6_TIMING_N: usize = 128;
const C7_BYTES: u64 = 112;

#[derive(Clone, Copy, PartialEq)]
enum Verdict {
    Pass,
    Fail,
    Skip,
}

struct Report {
    failed: usize,
}

impl Report {
    fn record(&mut self, id: &str, verdict: Verdict, detail: String) {
        let tag = match verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => {
                self.failed += 1;
                "FAIL"
            }
            Verdict::Skip => "SKIP",
        };
        println!("{tag} criterion {id}: {detail}");
    }

    fn check(&mut self, id: &str, ok: bool, detail: String) {
        self.record(id, if ok { Verdict::Pass } else { Verdict::Fail }, detail);
    }
}

fn transport() -> TransportConfig {
    TransportConfig { timeout: Duration::from_secs(120), ..TransportConfig::default() }
}

fn random(shape: [usize; 3], seed: u64, real: bool) -> ComplexBuffer {
    let mut s = seed.wrapping_mul(0x2545_F491_4F6C_DD1D) | 1;
    let mut next = move || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    ComplexBuffer::from_fn(shape, |_, _, _| {
        let re = next();
        Complex64::new(re, if real { 0.0 } else { next() })
    })
}

fn rel_inf(a: &[Complex64], reference: &[Complex64]) -> f64 {
    let diff = a.iter().zip(reference).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let scale = reference.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

// ---------------------------------------------------------------------------

fn criterion_1(report: &mut Report) {
    let grids: [[usize; 3]; 7] = [[4, 4, 4], [5, 5, 5], [6, 6, 6], [8, 8, 8], [12, 12, 12], [16, 16, 16], [8, 12, 16]];
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut errors = Vec::new();
    for (i, n) in grids.iter().enumerate() {
        let grid = GridSpec::new(*n, [1.0, 1.0, 1.0]).unwrap();
        let full = random(*n, 10 + i as u64, false);
        let mut serial = full.clone();
        fft_nd(&mut serial, Direction::Forward).unwrap();
        for g in 1..=4 {
            let out = spawn_group(g, transport(), |c| {
                let local = scatter(&full, &grid, SlabAxis::Z, Space::Physical, c.rank(), g)?;
                gather(&dist_fft_forward(local, c)?, c)
            });
            match out {
                Ok(mut v) => {
                    let got = v.swap_remove(0).expect("rank 0 gathers");
                    worst = worst.max(rel_inf(got.as_slice(), serial.as_slice()));
                }
                Err(e) => errors.push(format!("{n:?} G={g}: {e}")),
            }
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    report.check(
        "1 (distributed FFT equals serial FFT)",
        errors.is_empty() && worst <= C1_TOL && seconds < C1_SECONDS,
        format!("7 grids x G=1..4, worst rel err {worst:.2e} (tol {C1_TOL:e}), {seconds:.3} s (limit {C1_SECONDS} s){}", errors.join("; ")),
    );
}

fn criterion_2(report: &mut Report) {
    let forward = |x: &ComplexBuffer| {
        let mut y = x.clone();
        fft_nd(&mut y, Direction::Forward).unwrap();
        y
    };
    let mut shapes: Vec<[usize; 3]> = (1..=16).flat_map(|n| [[n, 1, 1], [1, n, 1], [1, 1, n], [n, 2, 3], [3, n, 2]]).collect();
    shapes.extend([[7, 11, 13], [16, 16, 16], [13, 5, 16], [2, 3, 5]]);
    let (mut round, mut parseval, mut linear, mut conj, mut even, mut oracle) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (i, &shape) in shapes.iter().enumerate() {
        let seed = 1000 + 10 * i as u64;
        let x = random(shape, seed, false);
        let y = random(shape, seed + 1, false);
        let fx = forward(&x);

        let mut back = fx.clone();
        fft_nd(&mut back, Direction::Inverse).unwrap();
        round = round.max(rel_inf(back.as_slice(), x.as_slice()));

        let ex: f64 = x.as_slice().iter().map(|c| c.norm_sqr()).sum();
        let ey: f64 = fx.as_slice().iter().map(|c| c.norm_sqr()).sum::<f64>() / x.len() as f64;
        parseval = parseval.max((ex - ey).abs() / ex);

        let (a, b) = (Complex64::new(1.5, -0.25), Complex64::new(-0.75, 2.0));
        let mix: Vec<Complex64> = x.as_slice().iter().zip(y.as_slice()).map(|(p, q)| a * p + b * q).collect();
        let fy = forward(&y);
        let expect: Vec<Complex64> = fx.as_slice().iter().zip(fy.as_slice()).map(|(p, q)| a * p + b * q).collect();
        linear = linear.max(rel_inf(forward(&ComplexBuffer::from_vec(shape, mix).unwrap()).as_slice(), &expect));

        // real input: X(-k) = conj X(k)
        let r = random(shape, seed + 2, true);
        let fr = forward(&r);
        let [nx, ny, nz] = shape;
        let mirrored = ComplexBuffer::from_fn(shape, |i, j, k| fr.get((nx - i) % nx, (ny - j) % ny, (nz - k) % nz).conj());
        conj = conj.max(rel_inf(mirrored.as_slice(), fr.as_slice()));

        // real and even input: real spectrum
        let e = ComplexBuffer::from_fn(shape, |i, j, k| {
            let v = r.get(i, j, k).re + r.get((nx - i) % nx, (ny - j) % ny, (nz - k) % nz).re;
            Complex64::new(v, 0.0)
        });
        even = even.max(forward(&e).max_abs_im());

        // first axis against the brute-force sum
        if shape[1] == 1 && shape[2] == 1 {
            oracle = oracle.max(rel_inf(fx.as_slice(), &dft(x.as_slice(), Direction::Forward)));
        }
    }
    let worst = [round, parseval, linear, conj, oracle].into_iter().fold(even, f64::max);
    report.check(
        "2 (transform algebra, sizes 1..16)",
        worst <= C2_TOL,
        format!(
            "{} shapes: round trip {round:.1e}, Parseval {parseval:.1e}, linearity {linear:.1e}, conjugate symmetry {conj:.1e}, \
             real-even imag {even:.1e}, DFT oracle {oracle:.1e} (tol {C2_TOL:e})",
            shapes.len()
        ),
    );
}

struct PfcTrace {
    final_field: ComplexBuffer,
    energies: Vec<f64>,
    mean_mode_constant: bool,
    /// Per step: `max |Im psi|` and `max |psi|` over this rank.
    realness: Vec<(f64, f64)>,
}

fn pfc_trace(grid: GridSpec, params: PfcParams, workers: usize) -> Result<Vec<PfcTrace>, String> {
    spawn_group(workers, transport(), |c| -> Result<PfcTrace, Error> {
        let kind = InitKind::TwoModeFcc3d { a1: 0.1, a2: 0.05 };
        let init = init_condition(kind, &grid, params.psi_bar, 0, Commensurability::Error, c.rank(), workers)?;
        let mut state = PfcState::new(init.field, params.eps, c)?;
        let origin = state.psi_hat().region().contains_origin();
        let mean0 = state.psi_hat().local().as_slice()[0];
        let mut trace = PfcTrace { final_field: ComplexBuffer::zeros([1, 1, 1]), energies: vec![state.free_energy(c)?], mean_mode_constant: true, realness: Vec::new() };
        for step in 1..=params.n_steps {
            state.step(&params, c)?;
            let s = state.last_stats();
            trace.realness.push((s.max_imag_psi, s.max_abs_psi));
            if origin {
                let m = state.psi_hat().local().as_slice()[0];
                trace.mean_mode_constant &= m.re.to_bits() == mean0.re.to_bits() && m.im.to_bits() == mean0.im.to_bits();
            }
            if step % 10 == 0 {
                trace.energies.push(state.free_energy(c)?);
            }
        }
        // realness of the final state too
        let psi = state.psi(c)?;
        trace.realness.push((psi.local().max_abs_im(), psi.local().max_abs()));
        if let Some(full) = gather(&psi, c)? {
            trace.final_field = full;
        }
        Ok(trace)
    })
    .map_err(|e| e.to_string())
}

fn criterion_3(report: &mut Report) {
    let grid = GridSpec::cube(C3_N, 4.0 * fcc_period()).unwrap();
    let params = PfcParams { eps: -0.3, dt: 0.1, psi_bar: -0.3, n_steps: C3_STEPS };
    let start = Instant::now();
    let (one, four) = match (pfc_trace(grid, params, 1), pfc_trace(grid, params, 4)) {
        (Ok(a), Ok(b)) => (a, b),
        (a, b) => {
            let err = [a.err(), b.err()].into_iter().flatten().collect::<Vec<_>>().join("; ");
            for part in ["3a", "3b", "3c", "3d"] {
                report.check(part, false, format!("run failed: {err}"));
            }
            return;
        }
    };
    let seconds = start.elapsed().as_secs_f64();

    let mean_ok = one.iter().chain(&four).all(|t| t.mean_mode_constant);
    report.check("3a (mean mode bit-invariant)", mean_ok, format!("{C3_STEPS} steps on {C3_N}^3 at G=1 and G=4"));

    let energies = &one[0].energies;
    let worst_rise = energies.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let energies4 = &four[0].energies;
    let worst_rise4 = energies4.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    report.check(
        "3b (free energy non-increasing every 10 steps)",
        worst_rise <= C3_ENERGY_SLACK && worst_rise4 <= C3_ENERGY_SLACK,
        format!(
            "F: {:.9e} -> {:.9e}; largest increase per interval {worst_rise:.2e} (G=1), {worst_rise4:.2e} (G=4), slack {C3_ENERGY_SLACK:e}",
            energies[0],
            energies[energies.len() - 1]
        ),
    );

    let diff = rel_inf(four[0].final_field.as_slice(), one[0].final_field.as_slice());
    report.check("3c (G=1 vs G=4 final fields)", diff <= C3_G_TOL, format!("rel err {diff:.2e} (tol {C3_G_TOL:e})"));

    let mut worst = 0.0f64;
    for trace in [&one, &four] {
        for step in 0..trace[0].realness.len() {
            let imag = trace.iter().map(|t| t.realness[step].0).fold(0.0, f64::max);
            let abs = trace.iter().map(|t| t.realness[step].1).fold(0.0, f64::max);
            worst = worst.max(imag / abs);
        }
    }
    report.check(
        "3d (realness every step)",
        worst <= C3_REAL_TOL && seconds < C3_SECONDS,
        format!("max |Im psi| / max |psi| = {worst:.2e} (tol {C3_REAL_TOL:e}); both runs {seconds:.1} s (target < {C3_SECONDS} s)"),
    );
}

fn criterion_4(report: &mut Report) {
    let l = 8.0 * PI;
    let grid = GridSpec::cube(16, l).unwrap();
    let params = PfcParams { eps: -0.3, dt: 0.1, psi_bar: 0.0, n_steps: C4_STEPS as u64 };
    let modes = [[1usize, 0, 0], [0, 3, 0], [4, 0, 1], [2, 2, 2], [5, 1, 3]];
    let amplitude = 1e-9;
    let mut worst = 0.0f64;
    let mut errors = Vec::new();
    for mode in modes {
        let k2: f64 = mode.iter().map(|&m| (2.0 * PI * m as f64 / l).powi(2)).sum();
        let lin = -k2 * (params.eps + (1.0 - k2).powi(2) * (4.0 / 3.0 - k2).powi(2));
        let expect = (1.0 / (1.0 - params.dt * lin)).powi(C4_STEPS);
        let spectrum = single_mode_spectrum(&grid, mode, amplitude);
        // run on two workers so the distributed path is exercised
        let out = spawn_group(2, transport(), |c| {
            let local = scatter(&spectrum, &grid, SlabAxis::X, Space::Spectral, c.rank(), 2)?;
            let mut state = PfcState::from_spectral(local, params.eps)?;
            for _ in 0..params.n_steps {
                state.step(&params, c)?;
            }
            gather(state.psi_hat(), c)
        });
        match out {
            Ok(mut v) => {
                let hat = v.swap_remove(0).unwrap();
                let got = hat.get(mode[0], mode[1], mode[2]).re / (amplitude * grid.total() as f64);
                worst = worst.max(((got - expect) / expect).abs());
            }
            Err(e) => errors.push(e.to_string()),
        }
    }
    report.check(
        "4 (semi-implicit amplification law)",
        errors.is_empty() && worst <= C4_TOL,
        format!("5 modes, {C4_STEPS} steps, worst rel err {worst:.2e} (tol {C4_TOL:e}){}", errors.join("; ")),
    );
}

/// Serial and four-worker hydro runs compared every 10 steps; returns the
/// worst relative difference over psi, v1, v2, v3 and the largest |v| seen.
fn hydro_compare(a0: f64) -> Result<(f64, f64), String> {
    let grid = GridSpec::cube(C5_N, 2.0 * fcc_period()).unwrap();
    let mut params = HydroParams { a0, ..HydroParams::default() };
    params.pfc.n_steps = C5_STEPS;
    let init = init_condition(InitKind::TwoModeFcc3d { a1: 0.1, a2: 0.05 }, &grid, params.pfc.psi_bar, 0, Commensurability::Error, 0, 1)
        .map_err(|e| e.to_string())?;
    let psi0 = init.field.into_local();
    let v0: [ComplexBuffer; 3] = std::array::from_fn(|_| ComplexBuffer::zeros(grid.n()));

    // serial reference, snapshots every 10 steps: [psi, v1, v2, v3]
    let mut serial = HydroSerial::new(grid, params, &psi0, &v0).map_err(|e| e.to_string())?;
    let mut reference = Vec::new();
    for step in 1..=C5_STEPS {
        serial.step().map_err(|e| e.to_string())?;
        if step % 10 == 0 {
            let v = serial.velocity();
            reference.push([serial.psi().clone(), v[0].clone(), v[1].clone(), v[2].clone()]);
        }
    }

    let per_rank = spawn_group(HYDRO_WORKERS, transport(), |c| {
        let mut w = HydroWorker::new(c.rank(), grid, params, &psi0, &v0)?;
        let mut owned = Vec::new();
        for step in 1..=C5_STEPS {
            w.step(c)?;
            if step % 10 == 0 {
                owned.push(w.owned().clone());
            }
        }
        Ok::<_, Error>(owned)
    })
    .map_err(|e| e.to_string())?;
    let (mut worst, mut max_v) = (0.0f64, 0.0f64);
    for (k, snap) in reference.iter().enumerate() {
        for field in 0..4 {
            worst = worst.max(rel_inf(per_rank[field][k].as_slice(), snap[field].as_slice()));
            if field > 0 {
                max_v = max_v.max(snap[field].max_abs());
            }
        }
    }
    Ok((worst, max_v))
}

fn criterion_5(report: &mut Report) {
    // the default smoothing width, and a narrow one that lets the flow grow
    let mut parts = Vec::new();
    let mut ok = true;
    for (label, a0) in [("a0=2pi", 2.0 * PI), ("a0=1", 1.0)] {
        match hydro_compare(a0) {
            Ok((worst, max_v)) => {
                ok &= worst <= C5_TOL && max_v > 0.0;
                parts.push(format!("{label}: worst rel err {worst:.2e}, max|v| {max_v:.2e}"));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{label}: {e}"));
            }
        }
    }
    report.check(
        "5a (hydro G=4 equals serial reference)",
        ok,
        format!("{C5_N}^3, {C5_STEPS} steps, psi and v1..v3 every 10 steps; {} (tol {C5_TOL:e})", parts.join("; ")),
    );

    // viscous decay with the density frozen at zero, every mode of a random flow
    let vgrid = GridSpec::cube(16, 8.0).unwrap();
    let vp = HydroParams { rho: 1.5, gamma: 0.8, ..HydroParams::default() };
    let v0: [ComplexBuffer; 3] = std::array::from_fn(|a| random(vgrid.n(), 77 + a as u64, true));
    let mut sim = HydroSerial::new(vgrid, vp, &ComplexBuffer::zeros(vgrid.n()), &v0).unwrap();
    let kx: Vec<f64> = (0..16).map(|j| 2.0 * PI * if j < 8 { j as f64 } else { j as f64 - 16.0 } / 8.0).collect();
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let before = sim.velocity_hat().clone();
        sim.step().unwrap();
        for (a, old) in before.iter().enumerate() {
            for z in 0..16 {
                for y in 0..16 {
                    for x in 0..16 {
                        let k2 = kx[x] * kx[x] + kx[y] * kx[y] + kx[z] * kx[z];
                        let expect = old.get(x, y, z) / (1.0 + vp.pfc.dt / vp.rho * vp.gamma * k2);
                        let got = sim.velocity_hat()[a].get(x, y, z);
                        if expect.norm() > 0.0 {
                            worst = worst.max((got - expect).norm() / expect.norm());
                        }
                    }
                }
            }
        }
    }
    let ulps = worst / f64::EPSILON;
    report.check(
        "5b (viscous decay law per mode)",
        ulps <= 4.0 && sim.psi().max_abs() == 0.0,
        format!("16^3 random flow, 10 steps, worst per-step deviation {ulps:.1} ulp (one division per step)"),
    );
}

fn bench_config(n: usize, workers: &[usize], steps: u64, out: &std::path::Path) -> RunConfig {
    let text = format!(
        "[grid]\nn = [{n}, {n}, {n}]\nlen = [{l}, {l}, {l}]\n[init]\ncommensurability = \"warn\"\n\
         [bench]\nrepetitions = 3\nworkers = {workers:?}\nsteps = {steps}\nwarmup = 1\n[io]\nout_dir = {out:?}\n",
        l = n as f64 * fcc_period() / 16.0,
    );
    RunConfig::from_toml(&text).unwrap()
}

fn criterion_6(report: &mut Report) {
    let dir = tempfile::tempdir().unwrap();

    // (a) uneven slabs: 30 planes over 4 workers, also 3 (remainder 0) and 7 (remainder 2)
    let cfg = bench_config(30, &[1, 4, 7], 3, &dir.path().join("uneven"));
    match bench(&cfg) {
        Ok(r) => {
            let worst = r.details.iter().filter_map(|d| d.max_rel_diff_vs_g1).fold(0.0, f64::max);
            let remainders: Vec<_> = r.details.iter().map(|d| format!("G={} rem {}", d.workers, d.nz_mod_g)).collect();
            report.check(
                "6a (N mod G != 0 runs correctly)",
                worst <= C3_G_TOL,
                format!("30^3 bench, {}: final field vs G=1 rel err {worst:.2e} (tol {C3_G_TOL:e})", remainders.join(", ")),
            );
        }
        Err(e) => report.check("6a (N mod G != 0 runs correctly)", false, e.to_string()),
    }

    // (b) strong scaling on >= 128^3; only meaningful with >= 4 cores
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let cfg = bench_config(C6_TIMING_N, &[1, 2, 4], 2, &dir.path().join("scaling"));
    let scaling = bench(&cfg);
    let mut memory = None;
    match &scaling {
        Ok(r) => {
            let t: Vec<f64> = r.rows.iter().map(|row| row.seconds_per_step_median).collect();
            let times = format!("{C6_TIMING_N}^3 s/step median G=1 {:.3}, G=2 {:.3}, G=4 {:.3}", t[0], t[1], t[2]);
            // each step may regress at most 10 % against its predecessor
            let monotone = t.windows(2).all(|w| w[1] <= w[0] * (1.0 + C6_REGRESSION));
            if cores >= C6_MIN_CORES {
                report.check("6b (per-step time non-increasing G=1..4)", monotone, times);
            } else {
                report.record(
                    "6b (per-step time non-increasing G=1..4)",
                    Verdict::Skip,
                    format!("precondition unmet: {cores} core(s) available, needs >= {C6_MIN_CORES}; measured {times}"),
                );
            }
            memory = Some(r.details.clone());
        }
        Err(e) => report.check("6b (per-step time non-increasing G=1..4)", false, e.to_string()),
    }

    // (c) per-worker peak field memory on the same grid
    match memory {
        Some(details) => {
            let ratio = details.iter().find(|d| d.workers == 4).and_then(|d| d.memory_ratio_vs_g1).unwrap_or(f64::INFINITY);
            let g1 = details[0].peak_field_bytes_per_worker;
            let g4 = details.iter().find(|d| d.workers == 4).map_or(0, |d| d.peak_field_bytes_per_worker);
            report.check(
                "6c (per-worker peak memory at G=4 vs G=1)",
                ratio <= C6_MEMORY_RATIO,
                format!("{C6_TIMING_N}^3: {g1} B -> {g4} B per worker, ratio {ratio:.3} (limit {C6_MEMORY_RATIO})"),
            );
        }
        None => report.check("6c (per-worker peak memory at G=4 vs G=1)", false, "bench failed".into()),
    }
}

fn criterion_7(report: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let small = dir.path().join("zero.bin");
    write_snapshot(&small, [2, 2, 2], 0, 0.0, &[0.0; 8]).unwrap();
    let size = std::fs::metadata(&small).unwrap().len();

    let data: Vec<f64> = random([5, 4, 3], 99, false).as_slice().iter().flat_map(|c| [c.re, c.im]).take(60).collect();
    let path = dir.path().join("random.bin");
    write_snapshot(&path, [5, 4, 3], 1234, 123.4, &data).unwrap();
    let back = read_snapshot(&path).unwrap();
    let exact = back.dims == [5, 4, 3]
        && back.step == 1234
        && back.time.to_bits() == 123.4f64.to_bits()
        && back.data.iter().zip(&data).all(|(a, b)| a.to_bits() == b.to_bits());
    report.check(
        "7 (snapshot format)",
        size == C7_BYTES && exact,
        format!("2x2x2 file is {size} bytes (expected {C7_BYTES}); 5x4x3 round trip bit-exact: {exact}"),
    );
}

fn main() -> ExitCode {
    let mut report = Report { failed: 0 };
    let start = Instant::now();
    criterion_1(&mut report);
    criterion_2(&mut report);
    criterion_3(&mut report);
    criterion_4(&mut report);
    criterion_5(&mut report);
    criterion_6(&mut report);
    criterion_7(&mut report);
    println!("acceptance: {} failure(s), {:.1} s", report.failed, start.elapsed().as_secs_f64());
    if report.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
