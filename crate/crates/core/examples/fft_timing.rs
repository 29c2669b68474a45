use std::time::Instant;

use slabpfc_core::fft::{ComplexBuffer, Direction, Planner};
use slabpfc_core::Complex64;

fn main() {
    for n in [64usize, 128] {
        let mut buf = ComplexBuffer::from_fn([n; 3], |x, y, z| Complex64::new((x * 3 + y * 5 + z) as f64, 0.0));
        let mut planner = Planner::new();
        planner.fft_nd(&mut buf, Direction::Forward).unwrap();
        let reps = if n == 64 { 20 } else { 4 };
        let t = Instant::now();
        for _ in 0..reps {
            planner.fft_nd(&mut buf, Direction::Forward).unwrap();
            planner.fft_nd(&mut buf, Direction::Inverse).unwrap();
        }
        println!("{n}^3: {:.4} s per transform", t.elapsed().as_secs_f64() / (2 * reps) as f64);
    }
}
