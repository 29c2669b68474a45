//! In-process worker group: one OS thread per rank, sharing nothing but a
//! mailbox table and a collective rendezvous guarded by a single mutex.

use std::any::Any;
use std::collections::{HashMap, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Condvar, Mutex, MutexGuard};
use std::thread;
use std::time::{Duration, Instant};

use slabpfc_core::comm::{Communicator, Payload, Tag, TransportError};

/// Fail-fast limits of the transport.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportConfig {
    /// How long any blocking call may wait before reporting a deadlock.
    pub timeout: Duration,
    /// Messages a single `(src, dst, tag)` channel buffers before `send` blocks.
    pub buffer_cap: usize,
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig { timeout: Duration::from_secs(30), buffer_cap: 64 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GroupError<E> {
    #[error("a worker group needs at least one worker")]
    NoWorkers,
    #[error("worker {rank} failed: {error}")]
    Worker { rank: usize, error: E },
    #[error("worker {rank} panicked: {message}")]
    Panic { rank: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Filling,
    Draining,
}

#[derive(Debug)]
struct Rendezvous {
    phase: Phase,
    generation: u64,
    op: Option<&'static str>,
    deposits: Vec<Option<Vec<Option<Payload>>>>,
    arrived: Vec<bool>,
    arrived_count: usize,
    departed: usize,
    error: Option<String>,
}

impl Rendezvous {
    fn new(size: usize) -> Self {
        Rendezvous {
            phase: Phase::Filling,
            generation: 0,
            op: None,
            deposits: (0..size).map(|_| None).collect(),
            arrived: vec![false; size],
            arrived_count: 0,
            departed: 0,
            error: None,
        }
    }

    fn reset(&mut self) {
        for d in &mut self.deposits {
            *d = None;
        }
        self.arrived.iter_mut().for_each(|a| *a = false);
        self.arrived_count = 0;
        self.departed = 0;
        self.op = None;
        self.error = None;
        self.phase = Phase::Filling;
        self.generation += 1;
    }

    fn validate(&mut self, size: usize) {
        if self.error.is_some() || self.op != Some("all_to_all") {
            return;
        }
        let mut kind = None;
        for (rank, deposit) in self.deposits.iter().enumerate() {
            let blocks = deposit.as_ref().expect("every rank deposited");
            if blocks.len() != size {
                self.error = Some(format!("rank {rank} provided {} blocks for a group of {size}", blocks.len()));
                return;
            }
            for block in blocks.iter().flatten() {
                let k = block.data().kind();
                match kind {
                    None => kind = Some(k),
                    Some(prev) if prev != k => {
                        self.error = Some(format!("rank {rank} sent {k} blocks where others sent {prev}"));
                        return;
                    }
                    _ => {}
                }
            }
        }
    }
}

#[derive(Debug)]
struct State {
    mailboxes: HashMap<(usize, usize, Tag), VecDeque<Payload>>,
    rendezvous: Rendezvous,
    /// First rank whose body failed; everyone else is cancelled.
    failed: Option<usize>,
}

#[derive(Debug)]
struct Shared {
    size: usize,
    config: TransportConfig,
    state: Mutex<State>,
    cond: Condvar,
}

impl Shared {
    fn lock(&self) -> MutexGuard<'_, State> {
        // a panicking worker never leaves the state half-updated
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Waits until `ready` holds. On timeout returns the guard with `false`.
    fn wait_until<'a>(
        &'a self,
        mut guard: MutexGuard<'a, State>,
        deadline: Instant,
        mut ready: impl FnMut(&State) -> bool,
    ) -> Result<(MutexGuard<'a, State>, bool), TransportError> {
        loop {
            if ready(&guard) {
                return Ok((guard, true));
            }
            if let Some(by) = guard.failed {
                return Err(TransportError::Aborted { by });
            }
            let now = Instant::now();
            if now >= deadline {
                return Ok((guard, false));
            }
            guard = self.cond.wait_timeout(guard, deadline - now).unwrap_or_else(|e| e.into_inner()).0;
        }
    }

    fn fail(&self, rank: usize) {
        let mut state = self.lock();
        if state.failed.is_none() {
            state.failed = Some(rank);
        }
        drop(state);
        self.cond.notify_all();
    }
}

/// Handle a worker uses to talk to the rest of its group.
#[derive(Debug)]
pub struct WorkerComm<'a> {
    rank: usize,
    shared: &'a Shared,
}

impl WorkerComm<'_> {
    fn check_peer(&self, peer: usize) -> Result<(), TransportError> {
        if peer >= self.shared.size {
            return Err(TransportError::InvalidRank { rank: peer, size: self.shared.size });
        }
        if peer == self.rank {
            return Err(TransportError::SelfSend { rank: self.rank });
        }
        Ok(())
    }

    fn collective(&self, op: &'static str, blocks: Option<Vec<Payload>>) -> Result<Vec<Payload>, TransportError> {
        let shared = self.shared;
        let size = shared.size;
        let deadline = Instant::now() + shared.config.timeout;
        let guard = shared.lock();
        // a fast rank may arrive while the previous round is still draining
        let (mut guard, ok) = shared.wait_until(guard, deadline, |s| s.rendezvous.phase == Phase::Filling)?;
        if !ok {
            return Err(TransportError::CollectiveTimeout { rank: self.rank, op, absent: Vec::new(), waited: shared.config.timeout });
        }
        let rv = &mut guard.rendezvous;
        match rv.op {
            None => rv.op = Some(op),
            Some(other) if other != op => {
                rv.error.get_or_insert_with(|| format!("rank {} entered {op} while others entered {other}", self.rank));
            }
            _ => {}
        }
        rv.deposits[self.rank] = Some(blocks.unwrap_or_default().into_iter().map(Some).collect());
        rv.arrived[self.rank] = true;
        rv.arrived_count += 1;
        let generation = rv.generation;
        if rv.arrived_count == size {
            rv.validate(size);
            rv.phase = Phase::Draining;
            shared.cond.notify_all();
        }
        let (mut guard, ok) = shared.wait_until(guard, deadline, |s| {
            s.rendezvous.phase == Phase::Draining && s.rendezvous.generation == generation
        })?;
        if !ok {
            let absent = (0..size).filter(|&r| !guard.rendezvous.arrived[r]).collect();
            return Err(TransportError::CollectiveTimeout { rank: self.rank, op, absent, waited: shared.config.timeout });
        }
        let rv = &mut guard.rendezvous;
        let out = match &rv.error {
            Some(msg) => Err(TransportError::Collective(msg.clone())),
            None if op == "all_to_all" => Ok((0..size)
                .map(|src| {
                    rv.deposits[src].as_mut().and_then(|blocks| blocks[self.rank].take()).expect("validated block")
                })
                .collect()),
            None => Ok(Vec::new()),
        };
        rv.departed += 1;
        if rv.departed == size {
            rv.reset();
            shared.cond.notify_all();
        }
        out
    }
}

impl Communicator for WorkerComm<'_> {
    fn rank(&self) -> usize {
        self.rank
    }

    fn size(&self) -> usize {
        self.shared.size
    }

    fn send(&self, dst: usize, tag: Tag, payload: Payload) -> Result<(), TransportError> {
        self.check_peer(dst)?;
        let shared = self.shared;
        let key = (self.rank, dst, tag);
        let cap = shared.config.buffer_cap.max(1);
        let deadline = Instant::now() + shared.config.timeout;
        let guard = shared.lock();
        let (mut guard, ok) =
            shared.wait_until(guard, deadline, |s| s.mailboxes.get(&key).map_or(0, VecDeque::len) < cap)?;
        if !ok {
            return Err(TransportError::SendTimeout { rank: self.rank, dst, tag, waited: shared.config.timeout });
        }
        guard.mailboxes.entry(key).or_default().push_back(payload);
        drop(guard);
        shared.cond.notify_all();
        Ok(())
    }

    fn receive(&self, src: usize, tag: Tag) -> Result<Payload, TransportError> {
        self.check_peer(src)?;
        let shared = self.shared;
        let key = (src, self.rank, tag);
        let deadline = Instant::now() + shared.config.timeout;
        let guard = shared.lock();
        let (mut guard, ok) =
            shared.wait_until(guard, deadline, |s| s.mailboxes.get(&key).is_some_and(|q| !q.is_empty()))?;
        if !ok {
            return Err(TransportError::ReceiveTimeout { rank: self.rank, src, tag, waited: shared.config.timeout });
        }
        let payload = guard.mailboxes.get_mut(&key).and_then(VecDeque::pop_front).expect("checked non-empty");
        drop(guard);
        shared.cond.notify_all();
        Ok(payload)
    }

    fn all_to_all(&self, blocks: Vec<Payload>) -> Result<Vec<Payload>, TransportError> {
        if self.shared.size == 1 {
            if blocks.len() != 1 {
                return Err(TransportError::Collective(format!(
                    "rank 0 provided {} blocks for a group of 1",
                    blocks.len()
                )));
            }
            return Ok(blocks);
        }
        self.collective("all_to_all", Some(blocks))
    }

    fn barrier(&self) -> Result<(), TransportError> {
        if self.shared.size == 1 {
            return Ok(());
        }
        self.collective("barrier", None).map(|_| ())
    }
}

fn panic_message(payload: &(dyn Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic payload".to_string()
    }
}

/// Runs `body` on `workers` threads and returns the per-rank results in rank
/// order. The first failing rank cancels the others (their blocking calls
/// return [`TransportError::Aborted`]) and its error is returned.
pub fn spawn_group<T, E, F>(workers: usize, config: TransportConfig, body: F) -> Result<Vec<T>, GroupError<E>>
where
    T: Send,
    E: Send,
    F: Fn(&WorkerComm<'_>) -> Result<T, E> + Sync,
{
    if workers == 0 {
        return Err(GroupError::NoWorkers);
    }
    let shared = Shared {
        size: workers,
        config,
        state: Mutex::new(State { mailboxes: HashMap::new(), rendezvous: Rendezvous::new(workers), failed: None }),
        cond: Condvar::new(),
    };
    let outcomes: Vec<Result<Result<T, E>, String>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|rank| {
                let shared = &shared;
                let body = &body;
                thread::Builder::new()
                    .name(format!("worker-{rank}"))
                    .spawn_scoped(scope, move || {
                        let comm = WorkerComm { rank, shared };
                        let out = catch_unwind(AssertUnwindSafe(|| body(&comm)));
                        match &out {
                            Ok(Ok(_)) => {}
                            _ => shared.fail(rank),
                        }
                        out.map_err(|p| panic_message(p.as_ref()))
                    })
                    .expect("spawn worker thread")
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|p| Err(panic_message(p.as_ref())))).collect()
    });

    let failed = shared.state.into_inner().unwrap_or_else(|e| e.into_inner()).failed;
    let mut results = Vec::with_capacity(workers);
    let mut first_error = None;
    for (rank, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(Ok(v)) => results.push(v),
            Ok(Err(error)) => {
                if failed == Some(rank) || (failed.is_none() && first_error.is_none()) {
                    first_error = Some(GroupError::Worker { rank, error });
                }
            }
            Err(message) => {
                if failed == Some(rank) || (failed.is_none() && first_error.is_none()) {
                    first_error = Some(GroupError::Panic { rank, message });
                }
            }
        }
    }
    match first_error {
        Some(e) => Err(e),
        None => Ok(results),
    }
}
