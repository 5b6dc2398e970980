//! Per-parent scheduling-rate allocation, the packet service ratio, and the
//! threshold-triggered multiplicative reduction.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::config::{RateCapMode, SimConfig};
use crate::rate::Rate;
use crate::topology::NodeId;

#[derive(Debug, Error, PartialEq, Eq, Clone, Copy)]
pub enum RateError {
    #[error("scheduling rate is zero")]
    ZeroSchedulingRate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateControlParams {
    pub ratio_threshold: f64,
    pub queue_threshold: usize,
    pub reduction_factor: f64,
    pub max_rate_adjustment: f64,
    pub cap_mode: RateCapMode,
    /// Multiplicative increase per quiet window; `None` disables recovery.
    pub recovery_factor: Option<f64>,
    pub service_window_ms: u64,
}

impl Default for RateControlParams {
    fn default() -> Self {
        RateControlParams::from(&SimConfig::default())
    }
}

impl From<&SimConfig> for RateControlParams {
    fn from(c: &SimConfig) -> Self {
        RateControlParams {
            ratio_threshold: c.ratio_threshold,
            queue_threshold: c.queue_threshold,
            reduction_factor: c.reduction_factor,
            max_rate_adjustment: c.max_rate_adjustment,
            cap_mode: c.rate_cap_mode,
            recovery_factor: c.recovery_enabled.then_some(c.recovery_factor),
            service_window_ms: c.service_window_ms,
        }
    }
}

/// Sum of per-parent rates; exact in fixed point.
pub fn aggregate_sched_rate(per_parent: &BTreeMap<NodeId, Rate>) -> Rate {
    per_parent.values().sum()
}

/// `r = S_r / Sch_r`.
pub fn service_ratio(service_rate: Rate, sched_rate: Rate) -> Result<f64, RateError> {
    if sched_rate.is_zero() {
        return Err(RateError::ZeroSchedulingRate);
    }
    Ok(f64::from(service_rate.raw()) / f64::from(sched_rate.raw()))
}

/// Mean inverse node delay over `(arrival, departure)` pairs in ms.
///
/// Delays shorter than 1 ms count as 1 ms. No departures gives zero.
pub fn measure_service_rate<I>(samples: I) -> Rate
where
    I: IntoIterator<Item = (u64, u64)>,
{
    let (sum, n) = samples
        .into_iter()
        .fold((0.0f64, 0u64), |(sum, n), (arrival, departure)| {
            let delay = departure.saturating_sub(arrival).max(1);
            (sum + 1000.0 / delay as f64, n + 1)
        });
    if n == 0 {
        Rate::ZERO
    } else {
        Rate::from_pps(sum / n as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ControlAction {
    Unchanged,
    Reduced,
    Recovered,
}

/// Advertised to children through the piggyback fields of later packets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RateNotice {
    pub sched_rate: Rate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ControlOutcome {
    pub action: ControlAction,
    pub notice: Option<RateNotice>,
}

/// Rate bookkeeping for one node.
#[derive(Clone, Debug, PartialEq)]
pub struct RateState {
    per_parent: BTreeMap<NodeId, Rate>,
    initial_per_parent: BTreeMap<NodeId, Rate>,
    sched_rate: Rate,
    initial_sched_rate: Rate,
    service_rate: Rate,
    last_ratio: Option<f64>,
}

impl RateState {
    /// Splits `initial` evenly over `parents`; leftover raw units go to the
    /// lowest ids so the sum is exact.
    pub fn new(parents: &[NodeId], initial: Rate) -> Self {
        let mut ids = parents.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let mut per_parent = BTreeMap::new();
        if !ids.is_empty() {
            let n = ids.len() as u32;
            let base = initial.raw() / n;
            let extra = initial.raw() % n;
            for (i, id) in ids.iter().enumerate() {
                let bump = u32::from((i as u32) < extra);
                per_parent.insert(*id, Rate::from_raw(base + bump));
            }
        }
        Self::from_allocations(per_parent)
    }

    pub fn from_allocations(per_parent: BTreeMap<NodeId, Rate>) -> Self {
        let sched_rate = aggregate_sched_rate(&per_parent);
        RateState {
            initial_per_parent: per_parent.clone(),
            per_parent,
            sched_rate,
            initial_sched_rate: sched_rate,
            service_rate: Rate::ZERO,
            last_ratio: None,
        }
    }

    pub fn per_parent(&self) -> &BTreeMap<NodeId, Rate> {
        &self.per_parent
    }

    pub fn sched_rate(&self) -> Rate {
        self.sched_rate
    }

    pub fn initial_sched_rate(&self) -> Rate {
        self.initial_sched_rate
    }

    pub fn service_rate(&self) -> Rate {
        self.service_rate
    }

    pub fn last_ratio(&self) -> Option<f64> {
        self.last_ratio
    }

    /// Stores a new service-rate measurement and the resulting ratio.
    pub fn record_service_rate(&mut self, service_rate: Rate) -> Result<f64, RateError> {
        self.service_rate = service_rate;
        let r = service_ratio(service_rate, self.sched_rate);
        self.last_ratio = r.ok();
        r
    }

    /// `Sch_r` equals the exact sum of the per-parent rates.
    pub fn is_conserved(&self) -> bool {
        self.sched_rate == aggregate_sched_rate(&self.per_parent)
    }

    /// Lowest scheduling rate the cumulative cap allows.
    pub fn rate_floor(&self, params: &RateControlParams) -> Rate {
        self.initial_per_parent
            .values()
            .map(|r| r.mul_ceil(1.0 - params.max_rate_adjustment))
            .sum()
    }

    /// One control cycle.
    ///
    /// Reduces every per-parent rate by `reduction_factor` when `ratio` is
    /// below the threshold or `queue_occupancy` exceeds the queue
    /// threshold; otherwise leaves rates alone (or recovers them when
    /// recovery is enabled). A quiesced node skips the cycle.
    pub fn control_step(
        &mut self,
        params: &RateControlParams,
        ratio: Option<f64>,
        queue_occupancy: usize,
    ) -> Result<ControlOutcome, RateError> {
        if self.sched_rate.is_zero() {
            return Err(RateError::ZeroSchedulingRate);
        }
        let triggered = ratio.is_some_and(|r| r < params.ratio_threshold)
            || queue_occupancy > params.queue_threshold;
        let before = self.sched_rate;
        let action = if triggered {
            let keep = 1.0 - params.max_rate_adjustment;
            for (id, rate) in self.per_parent.iter_mut() {
                *rate = match params.cap_mode {
                    RateCapMode::Cumulative => {
                        let floor = self.initial_per_parent[id].mul_ceil(keep);
                        rate.mul_floor(params.reduction_factor).max(floor)
                    }
                    RateCapMode::PerStep => rate.mul_floor(params.reduction_factor.max(keep)),
                };
            }
            ControlAction::Reduced
        } else if let Some(factor) = params.recovery_factor {
            for (id, rate) in self.per_parent.iter_mut() {
                *rate = rate.mul_ceil(factor).min(self.initial_per_parent[id]);
            }
            ControlAction::Recovered
        } else {
            ControlAction::Unchanged
        };
        self.sched_rate = aggregate_sched_rate(&self.per_parent);
        let notice = (self.sched_rate != before).then_some(RateNotice {
            sched_rate: self.sched_rate,
        });
        let action = if notice.is_none() {
            ControlAction::Unchanged
        } else {
            action
        };
        Ok(ControlOutcome { action, notice })
    }
}

/// Per-class originating rates: `share * Sch_r` split by `weights`
/// (index 0 is class O0). Each class rounds down.
pub fn originating_rate(sched_rate: Rate, share: f64, weights: [f64; 2]) -> [Rate; 2] {
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return [Rate::ZERO; 2];
    }
    let budget = f64::from(sched_rate.raw()) * share;
    weights.map(|w| Rate::from_raw((budget * w / total).floor() as u32))
}
