//! Deterministic discrete-event core: a min-heap of events ordered by
//! `(fire_at, seq)`, lazy cancellation, and seeded per-stream randomness.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::time::SimTime;

/// Returned by [`Scheduler::schedule`]; pass to [`Scheduler::cancel`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventHandle(u64);

impl EventHandle {
    pub fn seq(self) -> u64 {
        self.0
    }

    #[cfg(test)]
    pub(crate) fn default_for_tests() -> Self {
        EventHandle(u64::MAX)
    }
}

/// An event popped from the queue.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheduled<E> {
    pub fire_at: SimTime,
    pub seq: u64,
    pub payload: E,
}

struct Entry<E> {
    fire_at: SimTime,
    seq: u64,
    payload: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.fire_at == other.fire_at && self.seq == other.seq
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// reversed: BinaryHeap is a max-heap
impl<E> Ord for Entry<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .fire_at
            .cmp(&self.fire_at)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSummary {
    pub dispatched: u64,
    pub final_clock: SimTime,
}

pub struct Scheduler<E> {
    now: SimTime,
    next_seq: u64,
    dispatched: u64,
    heap: BinaryHeap<Entry<E>>,
    cancelled: HashSet<u64>,
}

impl<E> Default for Scheduler<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Scheduler<E> {
    pub fn new() -> Self {
        Scheduler {
            now: SimTime::ZERO,
            next_seq: 0,
            dispatched: 0,
            heap: BinaryHeap::new(),
            cancelled: HashSet::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    /// Number of live (not cancelled) events still queued.
    pub fn pending(&self) -> usize {
        self.heap.len() - self.cancelled.len()
    }

    pub fn schedule(&mut self, fire_at: SimTime, payload: E) -> Result<EventHandle> {
        if fire_at < self.now {
            return Err(Error::ScheduleInPast {
                at: fire_at,
                now: self.now,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry {
            fire_at,
            seq,
            payload,
        });
        Ok(EventHandle(seq))
    }

    /// Returns false if the event already fired or was cancelled before.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        if handle.0 >= self.next_seq || !self.heap.iter().any(|e| e.seq == handle.0) {
            return false;
        }
        self.cancelled.insert(handle.0)
    }

    /// Cheaper than [`cancel`](Self::cancel) when the caller knows the event is
    /// still queued (e.g. a timer it owns and has not seen fire).
    pub fn cancel_pending(&mut self, handle: EventHandle) {
        self.cancelled.insert(handle.0);
    }

    /// Pops the next live event with `fire_at <= horizon` and advances the clock.
    pub fn pop_next(&mut self, horizon: SimTime) -> Option<Scheduled<E>> {
        loop {
            let head = self.heap.peek()?;
            if self.cancelled.remove(&head.seq) {
                self.heap.pop();
                continue;
            }
            if head.fire_at > horizon {
                return None;
            }
            let e = self.heap.pop().expect("peeked");
            self.now = e.fire_at;
            self.dispatched += 1;
            return Some(Scheduled {
                fire_at: e.fire_at,
                seq: e.seq,
                payload: e.payload,
            });
        }
    }

    /// Dispatches every event up to `horizon`. The handler may schedule more.
    pub fn run_until<F>(&mut self, horizon: SimTime, mut handler: F) -> RunSummary
    where
        F: FnMut(&mut Self, Scheduled<E>),
    {
        let start = self.dispatched;
        while let Some(ev) = self.pop_next(horizon) {
            handler(self, ev);
        }
        RunSummary {
            dispatched: self.dispatched - start,
            final_clock: self.now,
        }
    }
}

/// Reproducible random stream identified by `(seed, stream_id)`.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    /// Stream reserved for scenario-level draws; node streams start above it.
    pub const SCENARIO: u64 = 0;

    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}
