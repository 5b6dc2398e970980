//! Run reports and their CSV forms.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::AddAssign;

use crate::energy::EnergyLedger;
use crate::rate::Rate;
use crate::scalar::Scalar;
use crate::topology::NodeId;

/// Packet counters for one run, or a merge of several.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunCounts {
    pub originated: u64,
    pub delivered: u64,
    /// Subset of `delivered` that reached the sink after its deadline.
    pub delivered_late: u64,
    pub dropped_queue: u64,
    pub dropped_link: u64,
    /// Subset of `dropped_link` caused by receiver occupancy.
    pub dropped_link_congestion: u64,
    pub missed_deadline: u64,
    pub in_flight_at_end: u64,
    pub transmissions: u64,
    pub delivered_hops: u64,
}

impl RunCounts {
    /// Every originated packet is delivered, dropped, discarded or still
    /// in flight.
    pub fn is_conserved(&self) -> bool {
        self.originated
            == self.delivered
                + self.dropped_queue
                + self.dropped_link
                + self.missed_deadline
                + self.in_flight_at_end
    }

    pub fn lost(&self) -> u64 {
        self.dropped_queue + self.dropped_link + self.missed_deadline
    }

    /// Lost packets as a percentage of originated ones.
    pub fn drop_percent(&self) -> f64 {
        if self.originated == 0 {
            0.0
        } else {
            100.0 * self.lost() as f64 / self.originated as f64
        }
    }

    /// Delivered fraction of originated packets.
    pub fn success_rate(&self) -> f64 {
        if self.originated == 0 {
            0.0
        } else {
            self.delivered as f64 / self.originated as f64
        }
    }

    pub fn mean_delivered_hops(&self) -> f64 {
        if self.delivered == 0 {
            0.0
        } else {
            self.delivered_hops as f64 / self.delivered as f64
        }
    }
}

impl AddAssign<&RunCounts> for RunCounts {
    fn add_assign(&mut self, rhs: &RunCounts) {
        self.originated += rhs.originated;
        self.delivered += rhs.delivered;
        self.delivered_late += rhs.delivered_late;
        self.dropped_queue += rhs.dropped_queue;
        self.dropped_link += rhs.dropped_link;
        self.dropped_link_congestion += rhs.dropped_link_congestion;
        self.missed_deadline += rhs.missed_deadline;
        self.in_flight_at_end += rhs.in_flight_at_end;
        self.transmissions += rhs.transmissions;
        self.delivered_hops += rhs.delivered_hops;
    }
}

/// Invariant violations counted while the run executed. All zero in a
/// correct run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunChecks {
    /// Control ticks where `Sch_r` differed from the per-parent sum.
    pub conservation_violations: u64,
    /// Control ticks where `Sch_r` fell below the cumulative floor.
    pub rate_floor_violations: u64,
    /// Enqueues that left a node above capacity.
    pub capacity_violations: u64,
    /// Events popped with a timestamp earlier than the clock.
    pub clock_violations: u64,
    pub packet_conservation_violations: u64,
    pub queue_accounting_violations: u64,
    pub energy_violations: u64,
    /// Node-level control checks performed.
    pub control_checks: u64,
}

impl RunChecks {
    pub fn is_clean(&self) -> bool {
        self.conservation_violations == 0
            && self.rate_floor_violations == 0
            && self.capacity_violations == 0
            && self.clock_violations == 0
            && self.packet_conservation_violations == 0
            && self.queue_accounting_violations == 0
            && self.energy_violations == 0
    }
}

impl AddAssign<&RunChecks> for RunChecks {
    fn add_assign(&mut self, rhs: &RunChecks) {
        self.conservation_violations += rhs.conservation_violations;
        self.rate_floor_violations += rhs.rate_floor_violations;
        self.capacity_violations += rhs.capacity_violations;
        self.clock_violations += rhs.clock_violations;
        self.packet_conservation_violations += rhs.packet_conservation_violations;
        self.queue_accounting_violations += rhs.queue_accounting_violations;
        self.energy_violations += rhs.energy_violations;
        self.control_checks += rhs.control_checks;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeReport<F> {
    pub id: NodeId,
    pub is_sink: bool,
    pub hop_distance: u32,
    pub originated: u64,
    pub queue_drops: u64,
    pub enqueue_attempts: u64,
    pub dispatched: u64,
    /// Mean of `r` over control windows with departures.
    pub mean_service_ratio: Option<f64>,
    pub initial_sched_rate: Rate,
    pub min_sched_rate: Rate,
    pub final_sched_rate: Rate,
    pub energy: EnergyLedger<F>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesRow {
    pub time_ms: u64,
    pub node: NodeId,
    pub queue_len: usize,
    pub sched_rate: Rate,
    pub service_rate: Rate,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport<F> {
    pub seed: u64,
    pub counts: RunCounts,
    pub drop_percent: f64,
    pub success_rate: f64,
    /// Mean over nodes of their mean service ratio.
    pub mean_r: f64,
    pub energy: EnergyLedger<F>,
    pub per_node: Vec<NodeReport<F>>,
    /// BFS hop bucket to mean discovered path length.
    pub path_length_table: BTreeMap<u32, F>,
    pub series: Vec<SeriesRow>,
    pub checks: RunChecks,
    pub trace: Option<String>,
}

pub const METRICS_COLUMNS: [&str; 14] = [
    "seed",
    "originated",
    "delivered",
    "dropped_queue",
    "dropped_link",
    "missed_deadline",
    "drop_percent",
    "success_rate",
    "mean_r",
    "energy_prioritizer",
    "energy_sched_unit",
    "energy_congestion",
    "energy_implicit",
    "energy_tx_total",
];

pub const SERIES_COLUMNS: [&str; 6] = [
    "time_ms",
    "node_id",
    "queue_len",
    "sched_rate",
    "service_rate",
    "ratio",
];

impl<F: Scalar> MetricsReport<F> {
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        seed: u64,
        counts: RunCounts,
        energy: EnergyLedger<F>,
        per_node: Vec<NodeReport<F>>,
        path_length_table: BTreeMap<u32, F>,
        series: Vec<SeriesRow>,
        checks: RunChecks,
        trace: Option<String>,
    ) -> Self {
        let ratios: Vec<f64> = per_node
            .iter()
            .filter_map(|n| n.mean_service_ratio)
            .collect();
        let mean_r = if ratios.is_empty() {
            0.0
        } else {
            ratios.iter().sum::<f64>() / ratios.len() as f64
        };
        MetricsReport {
            seed,
            drop_percent: counts.drop_percent(),
            success_rate: counts.success_rate(),
            mean_r,
            counts,
            energy,
            per_node,
            path_length_table,
            series,
            checks,
            trace,
        }
    }

    pub fn originated(&self) -> u64 {
        self.counts.originated
    }

    pub fn delivered(&self) -> u64 {
        self.counts.delivered
    }

    pub fn dropped_queue(&self) -> u64 {
        self.counts.dropped_queue
    }

    /// One `metrics.csv` data row, no trailing newline.
    pub fn metrics_row(&self) -> String {
        let c = &self.counts;
        let e = &self.energy;
        format!(
            "{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.seed,
            c.originated,
            c.delivered,
            c.dropped_queue,
            c.dropped_link,
            c.missed_deadline,
            self.drop_percent,
            self.success_rate,
            self.mean_r,
            e.prioritizer.to_f64_lossy(),
            e.scheduling_unit.to_f64_lossy(),
            e.congestion.to_f64_lossy(),
            e.implicit_congestion.to_f64_lossy(),
            e.transmission.to_f64_lossy(),
        )
    }

    pub fn timeseries_csv(&self) -> String {
        let mut out = SERIES_COLUMNS.join(",");
        out.push('\n');
        for row in &self.series {
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{:.6},{:.6}",
                row.time_ms,
                row.node,
                row.queue_len,
                row.sched_rate.as_pps(),
                row.service_rate.as_pps(),
                row.ratio
            );
        }
        out
    }
}

/// `metrics.csv` with a header and one row per report, in the given order.
pub fn metrics_csv<F: Scalar>(reports: &[MetricsReport<F>]) -> String {
    let mut out = METRICS_COLUMNS.join(",");
    out.push('\n');
    for r in reports {
        out.push_str(&r.metrics_row());
        out.push('\n');
    }
    out
}

/// Counts and energy summed over several runs. Merging is associative and
/// commutative, so replications can be combined in any grouping.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Totals<F> {
    pub runs: u64,
    pub counts: RunCounts,
    pub energy: EnergyLedger<F>,
    pub checks: RunChecks,
}

impl<F: Scalar> Totals<F> {
    pub fn of(report: &MetricsReport<F>) -> Self {
        Totals {
            runs: 1,
            counts: report.counts,
            energy: report.energy,
            checks: report.checks,
        }
    }

    pub fn merge(mut self, other: &Totals<F>) -> Self {
        self.runs += other.runs;
        self.counts += &other.counts;
        self.energy += &other.energy;
        self.checks += &other.checks;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(o: u64, d: u64, q: u64, l: u64, m: u64, f: u64) -> RunCounts {
        RunCounts {
            originated: o,
            delivered: d,
            dropped_queue: q,
            dropped_link: l,
            missed_deadline: m,
            in_flight_at_end: f,
            ..RunCounts::default()
        }
    }

    #[test]
    fn rates_from_counts() {
        let c = counts(100, 60, 20, 5, 10, 5);
        assert!(c.is_conserved());
        assert_eq!(c.drop_percent(), 35.0);
        assert_eq!(c.success_rate(), 0.6);
        assert_eq!(RunCounts::default().drop_percent(), 0.0);
        assert!(!counts(10, 1, 0, 0, 0, 0).is_conserved());
    }

    #[test]
    fn row_formatting() {
        let r = MetricsReport::<f64>::assemble(
            7,
            counts(4, 2, 1, 1, 0, 0),
            EnergyLedger {
                prioritizer: 0.5,
                ..EnergyLedger::default()
            },
            Vec::new(),
            BTreeMap::new(),
            vec![SeriesRow {
                time_ms: 1000,
                node: NodeId(3),
                queue_len: 2,
                sched_rate: Rate::from_int(8),
                service_rate: Rate::from_int(4),
                ratio: 0.5,
            }],
            RunChecks::default(),
            None,
        );
        assert_eq!(
            r.metrics_row(),
            "7,4,2,1,1,0,50.000000,0.500000,0.000000,0.500000,0.000000,0.000000,0.000000,0.000000"
        );
        assert_eq!(
            r.timeseries_csv(),
            "time_ms,node_id,queue_len,sched_rate,service_rate,ratio\n\
             1000,3,2,8.000000,4.000000,0.500000\n"
        );
        assert!(metrics_csv(&[r]).starts_with("seed,originated,delivered,"));
    }

    #[test]
    fn totals_merge_in_any_grouping() {
        let mk = |o, d| Totals::<f64> {
            runs: 1,
            counts: counts(o, d, o - d, 0, 0, 0),
            energy: EnergyLedger {
                transmission: o as f64 * 0.25,
                ..EnergyLedger::default()
            },
            checks: RunChecks::default(),
        };
        let (a, b, c) = (mk(10, 4), mk(20, 5), mk(30, 30));
        let left = a.merge(&b).merge(&c);
        let right = a.merge(&b.merge(&c));
        let swapped = c.merge(&a).merge(&b);
        assert_eq!(left, right);
        assert_eq!(left, swapped);
        assert_eq!(left.runs, 3);
        assert_eq!(left.counts.originated, 60);
    }
}
