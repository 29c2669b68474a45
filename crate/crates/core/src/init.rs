//! Initial conditions, generated slab by slab from global indices so the
//! assembled field does not depend on the worker count.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::dist::{DistField, SlabAxis, Space};
use crate::error::{invalid, Error, Result};
use crate::fft::ComplexBuffer;
use crate::grid::{GridSpec, IndexBox, SlabLayout};
use crate::Complex64;

/// Wavenumber of the single-mode triangular phase.
pub const TRIANGULAR_Q: f64 = 0.866_025_403_784_438_6; // sqrt(3)/2
/// Wavenumber of the FCC `{111}` family; `{200}` sits at twice this.
pub const FCC_Q: f64 = 0.577_350_269_189_625_8; // 1/sqrt(3)

/// Periods of the triangular pattern along x and y.
pub fn triangular_periods() -> [f64; 2] {
    [2.0 * PI / TRIANGULAR_Q, 4.0 * PI]
}

/// Cubic period of the two-mode FCC pattern.
pub fn fcc_period() -> f64 {
    2.0 * PI / FCC_Q
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitKind {
    /// `psi_bar` plus uniform noise in `[-amplitude, amplitude)`.
    ConstantPlusNoise { amplitude: f64 },
    /// `count` crystalline balls of `radius`, randomly placed and rotated, in
    /// a uniform `psi_bar` background.
    SeededCrystallites { count: usize, radius: f64, amplitude: f64 },
    SingleModeTriangular2d { amplitude: f64 },
    TwoModeFcc3d { a1: f64, a2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Commensurability {
    Error,
    #[default]
    Warn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitOutcome {
    pub field: DistField,
    /// Incommensurate axes reported under [`Commensurability::Warn`].
    pub warnings: Vec<Error>,
}

const COMMENSURABILITY_TOL: f64 = 1e-9;

fn check_periods(grid: &GridSpec, periods: &[f64], policy: Commensurability, warnings: &mut Vec<Error>) -> Result<()> {
    for (axis, &period) in periods.iter().enumerate() {
        let length = grid.len()[axis];
        let ratio = length / period;
        let whole = libm::round(ratio);
        if whole < 1.0 || (ratio - whole).abs() > COMMENSURABILITY_TOL {
            let e = Error::Incommensurate { axis, length, period };
            match policy {
                Commensurability::Error => return Err(e),
                Commensurability::Warn => warnings.push(e),
            }
        }
    }
    Ok(())
}

fn triangular(x: f64, y: f64, amplitude: f64) -> f64 {
    let s3 = libm::sqrt(3.0);
    let q = TRIANGULAR_Q;
    amplitude * (libm::cos(q * x) * libm::cos(q * y / s3) - 0.5 * libm::cos(2.0 * q * y / s3))
}

fn fcc(p: [f64; 3], a1: f64, a2: f64) -> f64 {
    let q = FCC_Q;
    8.0 * a1 * libm::cos(q * p[0]) * libm::cos(q * p[1]) * libm::cos(q * p[2])
        + 2.0 * a2 * (libm::cos(2.0 * q * p[0]) + libm::cos(2.0 * q * p[1]) + libm::cos(2.0 * q * p[2]))
}

/// Uniform draw in `[0, 1)` for a global point index; counter-based so any
/// subset of points can be generated independently.
fn uniform_at(rng: &mut ChaCha8Rng, index: u64) -> f64 {
    rng.set_word_pos(u128::from(index) * 2);
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

struct Seed {
    center: [f64; 3],
    /// Rows of a rotation matrix.
    rotation: [[f64; 3]; 3],
}

fn seeds(grid: &GridSpec, count: usize, seed: u64) -> Vec<Seed> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de_0000_0001);
    let mut uniform = move || (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    let len = grid.len();
    (0..count)
        .map(|_| {
            let center = [uniform() * len[0], uniform() * len[1], if grid.is_2d() { 0.0 } else { uniform() * len[2] }];
            let rotation = if grid.is_2d() {
                let t = uniform() * 2.0 * PI;
                let (s, c) = (libm::sin(t), libm::cos(t));
                [[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]]
            } else {
                // uniformly random unit quaternion
                let (u1, u2, u3) = (uniform(), uniform(), uniform());
                let a = libm::sqrt(1.0 - u1);
                let b = libm::sqrt(u1);
                let (w, x, y, z) = (
                    a * libm::sin(2.0 * PI * u2),
                    a * libm::cos(2.0 * PI * u2),
                    b * libm::sin(2.0 * PI * u3),
                    b * libm::cos(2.0 * PI * u3),
                );
                [
                    [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
                    [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
                    [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
                ]
            };
            Seed { center, rotation }
        })
        .collect()
}

/// Minimum-image offset on a periodic axis.
fn wrap(d: f64, l: f64) -> f64 {
    d - l * libm::round(d / l)
}

/// Generates this rank's physical-space slab of the initial field.
pub fn init_condition(
    kind: InitKind,
    grid: &GridSpec,
    psi_bar: f64,
    seed: u64,
    policy: Commensurability,
    rank: usize,
    workers: usize,
) -> Result<InitOutcome> {
    let layout_axis = SlabAxis::physical(grid);
    let layout = SlabLayout::new(grid.n()[layout_axis.index()], workers, layout_axis.index())?;
    if rank >= workers {
        return Err(invalid("rank", "outside the worker group"));
    }
    let region = IndexBox::slab(grid, &layout, rank);
    let mut warnings = Vec::new();
    let n = grid.n();

    let value: alloc::boxed::Box<dyn FnMut([usize; 3]) -> f64> = match kind {
        InitKind::ConstantPlusNoise { amplitude } => {
            if !amplitude.is_finite() {
                return Err(invalid("noise_amplitude", "must be finite"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            alloc::boxed::Box::new(move |g: [usize; 3]| {
                if amplitude == 0.0 {
                    return psi_bar;
                }
                let index = (g[0] + n[0] * (g[1] + n[1] * g[2])) as u64;
                psi_bar + amplitude * (2.0 * uniform_at(&mut rng, index) - 1.0)
            })
        }
        InitKind::SingleModeTriangular2d { amplitude } => {
            if !grid.is_2d() {
                return Err(invalid("init", "the triangular initial condition needs a 2D grid"));
            }
            check_periods(grid, &triangular_periods(), policy, &mut warnings)?;
            let grid = *grid;
            alloc::boxed::Box::new(move |g: [usize; 3]| {
                psi_bar + triangular(grid.coord(0, g[0]), grid.coord(1, g[1]), amplitude)
            })
        }
        InitKind::TwoModeFcc3d { a1, a2 } => {
            if grid.is_2d() {
                return Err(invalid("init", "the FCC initial condition needs a 3D grid"));
            }
            check_periods(grid, &[fcc_period(); 3], policy, &mut warnings)?;
            let grid = *grid;
            alloc::boxed::Box::new(move |g: [usize; 3]| {
                psi_bar + fcc([grid.coord(0, g[0]), grid.coord(1, g[1]), grid.coord(2, g[2])], a1, a2)
            })
        }
        InitKind::SeededCrystallites { count, radius, amplitude } => {
            if !(radius.is_finite() && radius > 0.0) {
                return Err(invalid("seed_radius", "must be positive"));
            }
            let list = seeds(grid, count, seed);
            let grid = *grid;
            let len = grid.len();
            let dims = grid.dim();
            alloc::boxed::Box::new(move |g: [usize; 3]| {
                let p = [grid.coord(0, g[0]), grid.coord(1, g[1]), grid.coord(2, g[2])];
                let mut v = psi_bar;
                for s in &list {
                    let mut d = [0.0; 3];
                    for a in 0..dims {
                        d[a] = wrap(p[a] - s.center[a], len[a]);
                    }
                    if d[0] * d[0] + d[1] * d[1] + d[2] * d[2] > radius * radius {
                        continue;
                    }
                    let r = &s.rotation;
                    let local: [f64; 3] = core::array::from_fn(|i| r[i][0] * d[0] + r[i][1] * d[1] + r[i][2] * d[2]);
                    v = psi_bar
                        + if dims == 2 {
                            triangular(local[0], local[1], amplitude)
                        } else {
                            fcc(local, amplitude, 0.5 * amplitude)
                        };
                }
                v
            })
        }
    };
    let mut value = value;
    let local = ComplexBuffer::from_fn(region.shape, |x, y, z| {
        let g = [x + region.origin[0], y + region.origin[1], z + region.origin[2]];
        Complex64::new(value(g), 0.0)
    });
    let field = DistField::new(*grid, layout_axis, Space::Physical, rank, workers, local)?;
    Ok(InitOutcome { field, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::assemble;

    fn full(kind: InitKind, grid: &GridSpec, workers: usize) -> ComplexBuffer {
        let slabs: Vec<DistField> = (0..workers)
            .map(|r| init_condition(kind, grid, -0.3, 42, Commensurability::Warn, r, workers).unwrap().field)
            .collect();
        assemble(&slabs).unwrap()
    }

    #[test]
    fn zero_amplitudes_give_constant() {
        let g3 = GridSpec::cube(8, 4.0 * fcc_period()).unwrap();
        for kind in [InitKind::ConstantPlusNoise { amplitude: 0.0 }, InitKind::TwoModeFcc3d { a1: 0.0, a2: 0.0 }] {
            let f = full(kind, &g3, 2);
            assert!(f.as_slice().iter().all(|v| *v == Complex64::new(-0.3, 0.0)));
        }
    }

    #[test]
    fn noise_is_worker_count_independent() {
        let grid = GridSpec::new([6, 5, 7], [1.0; 3]).unwrap();
        let kind = InitKind::ConstantPlusNoise { amplitude: 0.1 };
        let one = full(kind, &grid, 1);
        assert_eq!(one, full(kind, &grid, 4));
        assert_eq!(one, full(kind, &grid, 3));
        assert!(one.as_slice().iter().all(|v| (v.re + 0.3).abs() <= 0.1));
    }

    #[test]
    fn crystallites_are_worker_count_independent() {
        let grid = GridSpec::cube(12, 2.0 * fcc_period()).unwrap();
        let kind = InitKind::SeededCrystallites { count: 3, radius: 4.0, amplitude: 0.1 };
        assert_eq!(full(kind, &grid, 1), full(kind, &grid, 4));
        let flat = GridSpec::new_2d(16, 16, 30.0, 30.0).unwrap();
        assert_eq!(full(kind, &flat, 1), full(kind, &flat, 3));
    }

    #[test]
    fn commensurability_policy() {
        let bad = GridSpec::cube(8, 10.0).unwrap();
        let kind = InitKind::TwoModeFcc3d { a1: 0.1, a2: 0.05 };
        let out = init_condition(kind, &bad, -0.3, 0, Commensurability::Warn, 0, 1).unwrap();
        assert_eq!(out.warnings.len(), 3);
        assert!(matches!(
            init_condition(kind, &bad, -0.3, 0, Commensurability::Error, 0, 1),
            Err(Error::Incommensurate { axis: 0, .. })
        ));
        let good = GridSpec::cube(8, 2.0 * fcc_period()).unwrap();
        assert!(init_condition(kind, &good, -0.3, 0, Commensurability::Error, 0, 1).unwrap().warnings.is_empty());
        let [px, py] = triangular_periods();
        let flat = GridSpec::new_2d(16, 16, 2.0 * px, py).unwrap();
        let tri = InitKind::SingleModeTriangular2d { amplitude: 0.2 };
        assert!(init_condition(tri, &flat, 0.0, 0, Commensurability::Error, 0, 1).is_ok());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let g3 = GridSpec::cube(4, 1.0).unwrap();
        let g2 = GridSpec::new_2d(4, 4, 1.0, 1.0).unwrap();
        assert!(init_condition(InitKind::SingleModeTriangular2d { amplitude: 0.1 }, &g3, 0.0, 0, Commensurability::Warn, 0, 1).is_err());
        assert!(init_condition(InitKind::TwoModeFcc3d { a1: 0.1, a2: 0.1 }, &g2, 0.0, 0, Commensurability::Warn, 0, 1).is_err());
    }
}
