//! Transport boundary between cooperating workers.
//!
//! Solver code is written against [`Communicator`]; the threaded in-process
//! backend lives in the `slabpfc` crate and [`Solo`] covers the single-worker
//! case. An inter-process backend only has to implement the same five calls
//! with the same blocking semantics:
//!
//! * `send` may return before the matching `receive` runs (buffered), and
//!   messages on one `(src, dst, tag)` channel are delivered in order;
//! * `receive` blocks until the matching message arrives or a timeout fires;
//! * `all_to_all` and `barrier` are collectives that every rank enters the
//!   same number of times, in the same order.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::time::Duration;

use crate::Complex64;

pub type Tag = u32;

/// Element storage of a [`Payload`].
#[derive(Debug, Clone, PartialEq)]
pub enum PayloadData {
    Bytes(Vec<u8>),
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl PayloadData {
    pub fn len(&self) -> usize {
        match self {
            PayloadData::Bytes(v) => v.len(),
            PayloadData::Real(v) => v.len(),
            PayloadData::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PayloadData::Bytes(_) => "u8",
            PayloadData::Real(_) => "f64",
            PayloadData::Complex(_) => "c64",
        }
    }

    pub fn element_size(&self) -> usize {
        match self {
            PayloadData::Bytes(_) => 1,
            PayloadData::Real(_) => 8,
            PayloadData::Complex(_) => 16,
        }
    }
}

/// Typed block of data with a declared 3D shape. Moved, never shared.
#[derive(Debug, Clone, PartialEq)]
pub struct Payload {
    shape: [usize; 3],
    data: PayloadData,
}

impl Payload {
    pub fn new(shape: [usize; 3], data: PayloadData) -> Result<Self, TransportError> {
        if shape[0] * shape[1] * shape[2] != data.len() {
            return Err(TransportError::Payload(alloc::format!(
                "{} elements do not fill shape {:?}",
                data.len(),
                shape
            )));
        }
        Ok(Payload { shape, data })
    }

    pub fn bytes(v: Vec<u8>) -> Self {
        Payload { shape: [v.len(), 1, 1], data: PayloadData::Bytes(v) }
    }

    pub fn real(v: Vec<f64>) -> Self {
        Payload { shape: [v.len(), 1, 1], data: PayloadData::Real(v) }
    }

    pub fn complex(shape: [usize; 3], v: Vec<Complex64>) -> Result<Self, TransportError> {
        Self::new(shape, PayloadData::Complex(v))
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn data(&self) -> &PayloadData {
        &self.data
    }

    pub fn byte_len(&self) -> usize {
        self.data.len() * self.data.element_size()
    }

    pub fn into_bytes(self) -> Result<Vec<u8>, TransportError> {
        match self.data {
            PayloadData::Bytes(v) => Ok(v),
            other => Err(kind_error("u8", other.kind())),
        }
    }

    pub fn into_real(self) -> Result<Vec<f64>, TransportError> {
        match self.data {
            PayloadData::Real(v) => Ok(v),
            other => Err(kind_error("f64", other.kind())),
        }
    }

    pub fn into_complex(self) -> Result<Vec<Complex64>, TransportError> {
        match self.data {
            PayloadData::Complex(v) => Ok(v),
            other => Err(kind_error("c64", other.kind())),
        }
    }
}

fn kind_error(expected: &str, found: &str) -> TransportError {
    TransportError::Payload(alloc::format!("expected {expected} payload, got {found}"))
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransportError {
    /// A receive found no matching message in time.
    ReceiveTimeout { rank: usize, src: usize, tag: Tag, waited: Duration },
    /// A send could not enqueue because the channel buffer stayed full.
    SendTimeout { rank: usize, dst: usize, tag: Tag, waited: Duration },
    /// A collective did not complete; `absent` lists ranks that never arrived.
    CollectiveTimeout { rank: usize, op: &'static str, absent: Vec<usize>, waited: Duration },
    /// Ranks entered a collective with incompatible arguments.
    Collective(String),
    InvalidRank { rank: usize, size: usize },
    SelfSend { rank: usize },
    Payload(String),
    /// Another worker failed and the group was cancelled.
    Aborted { by: usize },
}

impl TransportError {
    pub fn is_timeout(&self) -> bool {
        matches!(
            self,
            TransportError::ReceiveTimeout { .. }
                | TransportError::SendTimeout { .. }
                | TransportError::CollectiveTimeout { .. }
        )
    }
}

impl fmt::Display for TransportError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransportError::ReceiveTimeout { rank, src, tag, waited } => write!(
                f,
                "deadlock: rank {rank} waited {waited:?} for a message from rank {src} with tag {tag}"
            ),
            TransportError::SendTimeout { rank, dst, tag, waited } => write!(
                f,
                "deadlock: rank {rank} could not send to rank {dst} with tag {tag} within {waited:?} (buffer full)"
            ),
            TransportError::CollectiveTimeout { rank, op, absent, waited } => write!(
                f,
                "deadlock: rank {rank} waited {waited:?} in {op}; absent ranks: {absent:?}"
            ),
            TransportError::Collective(msg) => write!(f, "collective error: {msg}"),
            TransportError::InvalidRank { rank, size } => write!(f, "rank {rank} outside group of size {size}"),
            TransportError::SelfSend { rank } => write!(f, "rank {rank} attempted to send to itself"),
            TransportError::Payload(msg) => write!(f, "payload error: {msg}"),
            TransportError::Aborted { by } => write!(f, "group aborted after failure on rank {by}"),
        }
    }
}

impl core::error::Error for TransportError {}

/// Identity, point-to-point messaging and collectives for one worker.
pub trait Communicator {
    fn rank(&self) -> usize;

    fn size(&self) -> usize;

    /// Buffered, ordered send on the `(self, dst, tag)` channel.
    fn send(&self, dst: usize, tag: Tag, payload: Payload) -> Result<(), TransportError>;

    /// Blocks until the next message on `(src, self, tag)` arrives.
    fn receive(&self, src: usize, tag: Tag) -> Result<Payload, TransportError>;

    /// Block `g` of `blocks` goes to rank `g`; the result holds one block per
    /// source rank, in rank order.
    fn all_to_all(&self, blocks: Vec<Payload>) -> Result<Vec<Payload>, TransportError>;

    fn barrier(&self) -> Result<(), TransportError>;
}

/// Group of exactly one worker.
#[derive(Debug, Clone, Copy, Default)]
pub struct Solo;

impl Communicator for Solo {
    fn rank(&self) -> usize {
        0
    }

    fn size(&self) -> usize {
        1
    }

    fn send(&self, dst: usize, _tag: Tag, _payload: Payload) -> Result<(), TransportError> {
        if dst == 0 {
            Err(TransportError::SelfSend { rank: 0 })
        } else {
            Err(TransportError::InvalidRank { rank: dst, size: 1 })
        }
    }

    fn receive(&self, src: usize, tag: Tag) -> Result<Payload, TransportError> {
        if src != 0 {
            return Err(TransportError::InvalidRank { rank: src, size: 1 });
        }
        Err(TransportError::ReceiveTimeout { rank: 0, src, tag, waited: Duration::ZERO })
    }

    fn all_to_all(&self, blocks: Vec<Payload>) -> Result<Vec<Payload>, TransportError> {
        if blocks.len() != 1 {
            return Err(TransportError::Collective(alloc::format!(
                "all_to_all needs 1 block per rank, rank 0 provided {}",
                blocks.len()
            )));
        }
        Ok(blocks)
    }

    fn barrier(&self) -> Result<(), TransportError> {
        Ok(())
    }
}

fn allreduce_with<C: Communicator + ?Sized>(
    comm: &C,
    local: &[f64],
    combine: impl Fn(f64, f64) -> f64,
) -> Result<Vec<f64>, TransportError> {
    let g = comm.size();
    if g == 1 {
        return Ok(local.to_vec());
    }
    let blocks = (0..g).map(|_| Payload::real(local.to_vec())).collect();
    let parts = comm.all_to_all(blocks)?;
    let mut acc: Option<Vec<f64>> = None;
    for part in parts {
        let v = part.into_real()?;
        if v.len() != local.len() {
            return Err(TransportError::Collective(alloc::format!(
                "reduction length mismatch: {} vs {}",
                v.len(),
                local.len()
            )));
        }
        acc = Some(match acc {
            None => v,
            Some(mut a) => {
                for (x, y) in a.iter_mut().zip(v) {
                    *x = combine(*x, y);
                }
                a
            }
        });
    }
    Ok(acc.unwrap_or_default())
}

/// Element-wise sum across ranks, accumulated in rank order so every rank
/// (and every run) gets the same bits.
pub fn allreduce_sum<C: Communicator + ?Sized>(comm: &C, local: &[f64]) -> Result<Vec<f64>, TransportError> {
    allreduce_with(comm, local, |a, b| a + b)
}

/// Element-wise maximum across ranks.
pub fn allreduce_max<C: Communicator + ?Sized>(comm: &C, local: &[f64]) -> Result<Vec<f64>, TransportError> {
    allreduce_with(comm, local, f64::max)
}
