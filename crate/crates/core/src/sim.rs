//! Deterministic discrete-event core: virtual clock and the global event queue.
//!
//! Events are ordered by `(fire_at, seq)`; `seq` is the insertion counter, so
//! events scheduled for the same instant run in the order they were scheduled.
//! Actions are closures over a context type `C` that owns the [`Scheduler`].

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;

use thiserror::Error;

/// Simulated time in integer nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn from_ns(ns: u64) -> Self {
        SimTime(ns)
    }

    pub const fn from_us(us: u64) -> Self {
        SimTime(us * 1_000)
    }

    pub const fn from_ms(ms: u64) -> Self {
        SimTime(ms * 1_000_000)
    }

    pub const fn as_ns(self) -> u64 {
        self.0
    }

    pub fn checked_add(self, rhs: SimTime) -> Option<SimTime> {
        self.0.checked_add(rhs.0).map(SimTime)
    }

    pub fn checked_mul(self, k: u64) -> Option<SimTime> {
        self.0.checked_mul(k).map(SimTime)
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ns", self.0)
    }
}

/// Identifier of a scheduled event; unique per scheduler instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId {
    pub fire_at: SimTime,
    pub seq: u64,
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(t={}, seq={})", self.fire_at, self.seq)
    }
}

/// Errors produced while scheduling.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("fire time overflows: now {now} + delay {delay}")]
    Overflow { now: SimTime, delay: SimTime },
    #[error("scheduler is halted")]
    Halted,
}

/// A run aborted because an action returned an error.
#[derive(Debug, Error)]
#[error("event {event} failed: {source}")]
pub struct RunError<E: std::error::Error + 'static> {
    pub event: EventId,
    #[source]
    pub source: E,
}

/// Deferred callable executed when its event fires.
pub type Action<C> = Box<dyn FnOnce(&mut C) -> Result<(), <C as SimContext>::Error>>;

/// A context that owns a scheduler and can therefore be driven by [`run`].
pub trait SimContext: Sized + 'static {
    type Error: std::error::Error + 'static;

    fn scheduler(&mut self) -> &mut Scheduler<Self>;
}

struct Event<C: SimContext> {
    id: EventId,
    action: Action<C>,
}

impl<C: SimContext> PartialEq for Event<C> {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl<C: SimContext> Eq for Event<C> {}

impl<C: SimContext> PartialOrd for Event<C> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Reversed so the max-heap pops the earliest (fire_at, seq) first.
impl<C: SimContext> Ord for Event<C> {
    fn cmp(&self, other: &Self) -> Ordering {
        other.id.cmp(&self.id)
    }
}

/// The global event queue and virtual clock.
pub struct Scheduler<C: SimContext> {
    clock: SimTime,
    queue: BinaryHeap<Event<C>>,
    cancelled: HashSet<u64>,
    next_seq: u64,
    halted: bool,
    executed: u64,
}

impl<C: SimContext> Default for Scheduler<C> {
    fn default() -> Self {
        Self::new()
    }
}

impl<C: SimContext> Scheduler<C> {
    pub fn new() -> Self {
        Scheduler {
            clock: SimTime::ZERO,
            queue: BinaryHeap::new(),
            cancelled: HashSet::new(),
            next_seq: 0,
            halted: false,
            executed: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.clock
    }

    /// Enqueues `action` to fire at `now() + delay`. Never runs it inline.
    pub fn schedule<F>(&mut self, delay: SimTime, action: F) -> Result<EventId, ScheduleError>
    where
        F: FnOnce(&mut C) -> Result<(), C::Error> + 'static,
    {
        if self.halted {
            return Err(ScheduleError::Halted);
        }
        let fire_at = self.clock.checked_add(delay).ok_or(ScheduleError::Overflow {
            now: self.clock,
            delay,
        })?;
        let id = EventId {
            fire_at,
            seq: self.next_seq,
        };
        self.next_seq += 1;
        self.queue.push(Event {
            id,
            action: Box::new(action),
        });
        Ok(id)
    }

    /// Drops a pending event. Returns false if it already ran or was never scheduled.
    pub fn cancel(&mut self, id: EventId) -> bool {
        if id.seq >= self.next_seq || id.fire_at < self.clock {
            return false;
        }
        if self.queue.iter().any(|e| e.id == id) {
            self.cancelled.insert(id.seq)
        } else {
            false
        }
    }

    /// Stops draining after the current event.
    pub fn halt(&mut self) {
        self.halted = true;
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }

    pub fn pending(&self) -> usize {
        self.queue.len() - self.cancelled.len()
    }

    /// Number of events executed so far.
    pub fn executed(&self) -> u64 {
        self.executed
    }

    fn pop(&mut self) -> Option<Event<C>> {
        while let Some(ev) = self.queue.pop() {
            if self.cancelled.remove(&ev.id.seq) {
                continue;
            }
            return Some(ev);
        }
        None
    }
}

/// Drains the context's queue in `(fire_at, seq)` order and returns the final clock.
pub fn run<C: SimContext>(ctx: &mut C) -> Result<SimTime, RunError<C::Error>> {
    loop {
        let sched = ctx.scheduler();
        if sched.halted {
            break;
        }
        let Some(ev) = sched.pop() else { break };
        debug_assert!(ev.id.fire_at >= sched.clock);
        sched.clock = ev.id.fire_at;
        sched.executed += 1;
        (ev.action)(ctx).map_err(|source| RunError {
            event: ev.id,
            source,
        })?;
    }
    Ok(ctx.scheduler().clock)
}
