use std::path::PathBuf;

use slabpfc_core::Error as CoreError;

use crate::config::ConfigError;
use crate::snapshot::SnapshotError;
use crate::transport::GroupError;

/// Anything that can stop a run, with the process exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("a worker group needs at least one worker")]
    NoWorkers,
    #[error("worker {rank} panicked: {message}")]
    WorkerPanic { rank: usize, message: String },
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

impl RunError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RunError::Io { path: path.into(), source }
    }

    /// 2 for bad configuration, 3 for a diverging simulation, 4 for a
    /// transport timeout or deadlock, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        fn core_code(e: &CoreError) -> i32 {
            match e {
                CoreError::InvalidParameter { .. } | CoreError::Incommensurate { .. } => 2,
                CoreError::Divergence { .. } => 3,
                CoreError::Transport(t) if t.is_timeout() => 4,
                _ => 1,
            }
        }
        match self {
            RunError::Config(_) => 2,
            RunError::Core(e) => core_code(e),
            _ => 1,
        }
    }
}

impl From<GroupError<RunError>> for RunError {
    fn from(e: GroupError<RunError>) -> Self {
        match e {
            GroupError::NoWorkers => RunError::NoWorkers,
            GroupError::Worker { rank, error } => {
                log::debug!("worker {rank} failed first");
                error
            }
            GroupError::Panic { rank, message } => RunError::WorkerPanic { rank, message },
        }
    }
}

#[cfg(test)]
mod tests {
    use std::time::Duration;

    use slabpfc_core::comm::TransportError;

    use super::*;

    #[test]
    fn exit_codes() {
        let config = RunError::Config(ConfigError::Parse("x".into()));
        assert_eq!(config.exit_code(), 2);
        let diverged = RunError::from(GroupError::Worker {
            rank: 2,
            error: RunError::Core(CoreError::Divergence { step: 3, max_abs: f64::INFINITY }),
        });
        assert_eq!(diverged.exit_code(), 3);
        let timeout = TransportError::ReceiveTimeout { rank: 1, src: 0, tag: 2, waited: Duration::from_secs(1) };
        let deadlock = RunError::from(GroupError::Worker { rank: 1, error: RunError::Core(timeout.into()) });
        assert_eq!(deadlock.exit_code(), 4);
        assert_eq!(RunError::from(GroupError::Panic { rank: 0, message: "boom".into() }).exit_code(), 1);
    }
}
