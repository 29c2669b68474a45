//! Allocation-only kernels for slab-decomposed pseudo-spectral simulation.
//!
//! This crate carries everything that does not touch the operating system:
//! grid and symbol construction, serial mixed-radix FFTs, the slab-decomposed
//! distributed transform written against the [`comm::Communicator`] trait, and
//! the phase-field-crystal and hydrodynamic steppers built on top of it.
//! Threads, files and the command line live in the `slabpfc` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod comm;
pub mod dist;
pub mod error;
pub mod fft;
pub mod grid;
pub mod hydro;
pub mod init;
pub mod oracle;
pub mod pfc;

pub use num_complex::Complex64;

pub use error::Error;
