//! The scheduling unit: rate-paced EDF packet dispatch, the utilization
//! test, and unit-slice EDF over jobs with its exhaustive lateness oracle.

use std::collections::HashMap;

use thiserror::Error;

use crate::packet::PacketHeader;
use crate::queueing::QueueSet;
use crate::rate::Rate;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SchedError {
    #[error("instance too large for exhaustive search: {jobs} jobs, {slices} slices (max {MAX_ORACLE_JOBS} jobs, {MAX_ORACLE_SLICES} slices)")]
    InstanceTooLarge { jobs: usize, slices: u64 },
}

/// Periodic task in milliseconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaskParams<F> {
    pub worst_case_time: F,
    pub period: F,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Utilization<F> {
    pub factor: F,
    pub schedulable: bool,
}

/// `U = sum(C_i / T_i)`; EDF-schedulable iff `U <= 1`.
pub fn utilization<F: Scalar>(tasks: &[TaskParams<F>]) -> Utilization<F> {
    let factor: F = tasks.iter().map(|t| t.worst_case_time / t.period).sum();
    Utilization {
        factor,
        schedulable: factor <= F::one(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Job {
    pub id: u32,
    pub arrival: u32,
    pub computation: u32,
    pub absolute_deadline: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdfSchedule {
    /// `slices[t]` runs during `[t, t+1)`; `None` is idle.
    pub slices: Vec<Option<u32>>,
    /// Completion time per job, in input order.
    pub completions: Vec<u32>,
    /// Signed maximum lateness; `None` for an empty job set.
    pub max_lateness: Option<i64>,
}

/// Preemptive unit-slice EDF: each slice goes to the ready job with the
/// earliest absolute deadline, ties broken by job id.
pub fn edf_schedule(jobs: &[Job]) -> EdfSchedule {
    let mut remaining: Vec<u32> = jobs.iter().map(|j| j.computation).collect();
    let mut completions: Vec<u32> = jobs.iter().map(|j| j.arrival).collect();
    let mut slices = Vec::new();
    let mut left = remaining.iter().filter(|&&r| r > 0).count();
    let mut t = 0u32;
    while left > 0 {
        let pick = (0..jobs.len())
            .filter(|&i| remaining[i] > 0 && jobs[i].arrival <= t)
            .min_by_key(|&i| (jobs[i].absolute_deadline, jobs[i].id));
        match pick {
            Some(i) => {
                slices.push(Some(jobs[i].id));
                remaining[i] -= 1;
                if remaining[i] == 0 {
                    completions[i] = t + 1;
                    left -= 1;
                }
            }
            None => slices.push(None),
        }
        t += 1;
    }
    let max_lateness = jobs
        .iter()
        .zip(&completions)
        .map(|(j, &c)| i64::from(c) - i64::from(j.absolute_deadline))
        .max();
    EdfSchedule {
        slices,
        completions,
        max_lateness,
    }
}

pub const MAX_ORACLE_JOBS: usize = 6;
pub const MAX_ORACLE_SLICES: u64 = 24;

/// Minimum achievable maximum lateness over every unit-slice schedule.
///
/// Enumerates, slice by slice, every choice of one ready unfinished job or
/// idling, memoised on `(time, remaining work)`. Idling is explored up to
/// `max arrival + total work`, past which it can only delay completions.
pub fn brute_force_min_lateness(jobs: &[Job]) -> Result<Option<i64>, SchedError> {
    let total: u64 = jobs.iter().map(|j| u64::from(j.computation)).sum();
    if jobs.len() > MAX_ORACLE_JOBS || total > MAX_ORACLE_SLICES {
        return Err(SchedError::InstanceTooLarge {
            jobs: jobs.len(),
            slices: total,
        });
    }
    if jobs.is_empty() {
        return Ok(None);
    }
    let horizon = jobs.iter().map(|j| j.arrival).max().unwrap_or(0) + total as u32;
    let mut search = Search {
        jobs,
        horizon,
        memo: HashMap::new(),
    };
    let remaining: Vec<u8> = jobs.iter().map(|j| j.computation as u8).collect();
    // Zero-work jobs finish on arrival.
    let instant = jobs
        .iter()
        .filter(|j| j.computation == 0)
        .map(|j| i64::from(j.arrival) - i64::from(j.absolute_deadline))
        .max()
        .unwrap_or(i64::MIN);
    Ok(Some(instant.max(search.best(0, remaining))))
}

struct Search<'a> {
    jobs: &'a [Job],
    horizon: u32,
    memo: HashMap<(u32, Vec<u8>), i64>,
}

impl Search<'_> {
    /// Smallest max lateness over the unfinished jobs from state `(t, rem)`.
    fn best(&mut self, t: u32, rem: Vec<u8>) -> i64 {
        if rem.iter().all(|&r| r == 0) {
            return i64::MIN;
        }
        if let Some(&v) = self.memo.get(&(t, rem.clone())) {
            return v;
        }
        let mut best = i64::MAX;
        let mut any_ready = false;
        for i in 0..self.jobs.len() {
            if rem[i] == 0 || self.jobs[i].arrival > t {
                continue;
            }
            any_ready = true;
            let mut next = rem.clone();
            next[i] -= 1;
            let finished = if next[i] == 0 {
                i64::from(t + 1) - i64::from(self.jobs[i].absolute_deadline)
            } else {
                i64::MIN
            };
            best = best.min(finished.max(self.best(t + 1, next)));
        }
        if !any_ready || t < self.horizon {
            best = best.min(self.best(t + 1, rem.clone()));
        }
        self.memo.insert((t, rem), best);
        best
    }
}

const NS_PER_MS: u64 = 1_000_000;

/// Rate-paced dispatcher state for one node.
///
/// Release instants are kept in nanoseconds so that periods which are not
/// whole milliseconds do not drift; the event clock sees them rounded up.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchedulerState {
    sched_rate: Rate,
    next_release_ns: u64,
    served_count: u64,
    busy_ns: u64,
}

impl SchedulerState {
    pub fn new(sched_rate: Rate) -> Self {
        SchedulerState {
            sched_rate,
            next_release_ns: 0,
            served_count: 0,
            busy_ns: 0,
        }
    }

    pub fn sched_rate(&self) -> Rate {
        self.sched_rate
    }

    /// Takes effect from the next dispatch on.
    pub fn set_sched_rate(&mut self, rate: Rate) {
        self.sched_rate = rate;
    }

    /// Earliest whole millisecond at which the next release is due.
    pub fn next_release_time(&self) -> u64 {
        self.next_release_ns.div_ceil(NS_PER_MS)
    }

    pub fn served_count(&self) -> u64 {
        self.served_count
    }

    /// Milliseconds of release periods consumed, rounded down.
    pub fn busy_time(&self) -> u64 {
        self.busy_ns / NS_PER_MS
    }

    /// Releases the next packet in queue order if a release is due.
    ///
    /// Release instants that pass with empty queues are not banked: after
    /// an idle spell the next release is one period after the dispatch.
    pub fn next_dispatch<T: AsRef<PacketHeader>>(
        &mut self,
        qs: &mut QueueSet<T>,
        now: u64,
    ) -> Option<T> {
        if now < self.next_release_time() {
            return None;
        }
        let period = self.sched_rate.period_ns()?;
        let packet = qs.dequeue_next()?;
        // On time: keep the exact grid. Late after an idle spell: restart it.
        let base = if now > self.next_release_time() {
            now * NS_PER_MS
        } else {
            self.next_release_ns
        };
        self.next_release_ns = base + period;
        self.served_count += 1;
        self.busy_ns += period;
        Some(packet)
    }
}
