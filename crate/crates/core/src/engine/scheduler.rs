//! Work assignment for map tasks.
//!
//! Production jobs use dynamic pull: idle workers take the lowest
//! unclaimed entry, which self-balances when per-image cost varies. The
//! forced round-robin mode exists so tests can pin a deterministic
//! assignment and audit it.

use std::collections::VecDeque;
use std::sync::Mutex;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleMode {
    /// Any worker may claim the lowest unclaimed entry.
    DynamicPull,
    /// Entry k is pinned to worker k % workers.
    RoundRobin { workers: usize },
}

#[derive(Debug)]
enum Queues {
    Dynamic(VecDeque<usize>),
    RoundRobin(Vec<VecDeque<usize>>),
}

/// Thread-safe claim/requeue queue over entry indices.
#[derive(Debug)]
pub struct Scheduler {
    queues: Mutex<Queues>,
}

impl Scheduler {
    pub fn new(entries: &[usize], mode: ScheduleMode) -> Self {
        let queues = match mode {
            ScheduleMode::DynamicPull => Queues::Dynamic(entries.iter().copied().collect()),
            ScheduleMode::RoundRobin { workers } => {
                assert!(workers >= 1, "round robin needs at least one worker");
                let mut per_worker = vec![VecDeque::new(); workers];
                for (k, &e) in entries.iter().enumerate() {
                    per_worker[k % workers].push_back(e);
                }
                Queues::RoundRobin(per_worker)
            }
        };
        Self { queues: Mutex::new(queues) }
    }

    pub fn dynamic(entries: &[usize]) -> Self {
        Self::new(entries, ScheduleMode::DynamicPull)
    }

    /// Next entry for `worker`, or None when nothing is left for it.
    pub fn claim(&self, worker: usize) -> Option<usize> {
        match &mut *self.queues.lock().expect("scheduler lock") {
            Queues::Dynamic(q) => q.pop_front(),
            Queues::RoundRobin(qs) => {
                let slot = worker % qs.len();
                qs[slot].pop_front()
            }
        }
    }

    /// Put an entry back at the head of the queue, so a task lost to a
    /// dead worker is retried before fresh work.
    pub fn requeue(&self, worker: usize, entry: usize) {
        match &mut *self.queues.lock().expect("scheduler lock") {
            Queues::Dynamic(q) => q.push_front(entry),
            Queues::RoundRobin(qs) => {
                let slot = worker % qs.len();
                qs[slot].push_front(entry)
            }
        }
    }

    pub fn remaining(&self) -> usize {
        match &*self.queues.lock().expect("scheduler lock") {
            Queues::Dynamic(q) => q.len(),
            Queues::RoundRobin(qs) => qs.iter().map(|q| q.len()).sum(),
        }
    }
}
