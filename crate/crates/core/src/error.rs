use alloc::string::String;
use core::fmt;

use crate::comm::TransportError;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A grid or parameter violated its construction invariants.
    InvalidParameter { name: &'static str, reason: String },
    /// Buffer dimensions do not match what the operation expects.
    ShapeMismatch { expected: [usize; 3], found: [usize; 3] },
    /// A distributed field arrived in the wrong slab layout or space.
    Layout(String),
    /// Axis index outside `0..3`.
    AxisOutOfRange(usize),
    /// Non-finite values appeared in a spectral field.
    Divergence { step: u64, max_abs: f64 },
    /// Lattice periods do not tile the domain.
    Incommensurate { axis: usize, length: f64, period: f64 },
    Transport(TransportError),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, reason } => write!(f, "invalid parameter `{name}`: {reason}"),
            Error::ShapeMismatch { expected, found } => {
                write!(f, "shape mismatch: expected {expected:?}, found {found:?}")
            }
            Error::Layout(msg) => write!(f, "layout error: {msg}"),
            Error::AxisOutOfRange(axis) => write!(f, "axis {axis} out of range (expected 0, 1 or 2)"),
            Error::Divergence { step, max_abs } => {
                write!(f, "numerical divergence at step {step} (max |psi| = {max_abs:.3e})")
            }
            Error::Incommensurate { axis, length, period } => write!(
                f,
                "domain length {length} along axis {axis} is not a multiple of the lattice period {period}"
            ),
            Error::Transport(e) => write!(f, "transport: {e}"),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::Transport(e) => Some(e),
            _ => None,
        }
    }
}

impl From<TransportError> for Error {
    fn from(e: TransportError) -> Self {
        Error::Transport(e)
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
