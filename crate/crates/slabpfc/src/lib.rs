//! Host-side pieces of the slab PFC engine: the threaded transport, TOML
//! configuration, snapshot files, run drivers and the benchmark.

pub mod bench;
pub mod config;
pub mod transport;
pub mod error;
pub mod run;
pub mod snapshot;

pub use config::{parse_config, RunConfig};
pub use error::RunError;
