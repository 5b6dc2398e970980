//! Deterministic discrete-event loop.
//!
//! Per hop a packet is classified into one of the five queues, released by
//! the rate-paced EDF scheduling unit, and handed to a lossy link toward a
//! parent picked uniformly at random. Every transmission carries the
//! sender's queue length and rates in its header; children overhear those
//! fields and feed them into rate control on the next control tick.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{ConfigError, CongestionSignal, RateCapMode, SimConfig};
use crate::energy::{energy_tx, EnergyError, EnergyLedger, ProcessingComponent};
use crate::metrics::{MetricsReport, NodeReport, RunChecks, RunCounts, SeriesRow};
use crate::packet::{decode_packet, CodecError, Packet, PacketHeader, PiggybackFields};
use crate::queueing::{classify, QueueClass, QueueSet};
use crate::rate::Rate;
use crate::ratecontrol::{
    measure_service_rate, originating_rate, service_ratio, RateControlParams, RateState,
};
use crate::rng;
use crate::scalar::Scalar;
use crate::scheduler::SchedulerState;
use crate::topology::{NodeId, SearchBudget, Topology, TopologyError};
use crate::PACKET_SIZE;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("nodes {from} and {to} are not adjacent")]
    NotAdjacent { from: NodeId, to: NodeId },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKindTag {
    PacketOrigination,
    PacketArrival,
    DispatchTick,
    ControlTick,
    MeasurementTick,
    Overhear,
    SimEnd,
}

impl EventKindTag {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKindTag::PacketOrigination => "PacketOrigination",
            EventKindTag::PacketArrival => "PacketArrival",
            EventKindTag::DispatchTick => "DispatchTick",
            EventKindTag::ControlTick => "ControlTick",
            EventKindTag::MeasurementTick => "MeasurementTick",
            EventKindTag::Overhear => "Overhear",
            EventKindTag::SimEnd => "SimEnd",
        }
    }
}

/// A packet on the air: its 30 wire bytes plus simulator bookkeeping that
/// is not part of the frame.
#[derive(Clone, Debug)]
pub struct Frame<F> {
    pub bytes: [u8; PACKET_SIZE],
    pub created_at: u64,
    pub hops: u32,
    /// Energy spent on this packet so far, by spending node.
    pub spent: Vec<(NodeId, F)>,
}

/// A packet held in a node's queues.
#[derive(Clone, Debug)]
pub struct Queued<F> {
    pub packet: Packet,
    pub arrived_at: u64,
    pub hops: u32,
    pub spent: Vec<(NodeId, F)>,
}

impl<F> AsRef<PacketHeader> for Queued<F> {
    fn as_ref(&self) -> &PacketHeader {
        &self.packet.header
    }
}

#[derive(Clone, Debug)]
enum EventKind<F> {
    PacketOrigination { class: u8 },
    PacketArrival { frame: Frame<F> },
    DispatchTick,
    ControlTick,
    MeasurementTick,
    Overhear { fields: PiggybackFields },
    SimEnd,
}

impl<F> EventKind<F> {
    fn tag(&self) -> EventKindTag {
        match self {
            EventKind::PacketOrigination { .. } => EventKindTag::PacketOrigination,
            EventKind::PacketArrival { .. } => EventKindTag::PacketArrival,
            EventKind::DispatchTick => EventKindTag::DispatchTick,
            EventKind::ControlTick => EventKindTag::ControlTick,
            EventKind::MeasurementTick => EventKindTag::MeasurementTick,
            EventKind::Overhear { .. } => EventKindTag::Overhear,
            EventKind::SimEnd => EventKindTag::SimEnd,
        }
    }
}

#[derive(Clone, Debug)]
struct Event<F> {
    time: u64,
    tiebreak: u64,
    node: NodeId,
    kind: EventKind<F>,
}

impl<F> PartialEq for Event<F> {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.tiebreak) == (other.time, other.tiebreak)
    }
}

impl<F> Eq for Event<F> {}

impl<F> PartialOrd for Event<F> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<F> Ord for Event<F> {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time, self.tiebreak).cmp(&(other.time, other.tiebreak))
    }
}

/// Result of handing a frame to the link layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HopOutcome {
    /// Arrival scheduled at the given time.
    Scheduled {
        arrival_at: u64,
    },
    Lost {
        congestion: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Waste {
    Congestion,
    Implicit,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Observation {
    fields: PiggybackFields,
    at: u64,
}

#[derive(Clone, Debug)]
struct NodeRuntime<F> {
    queues: QueueSet<Queued<F>>,
    sched: SchedulerState,
    rate: RateState,
    window: Vec<(u64, u64)>,
    observed: BTreeMap<NodeId, Observation>,
    ledger: EnergyLedger<F>,
    next_seq: u16,
    dispatch_pending: bool,
    originated: u64,
    enqueue_attempts: u64,
    dequeued: u64,
    ratio_sum: f64,
    ratio_samples: u64,
    min_sched_rate: Rate,
}

/// One simulation run. Single-threaded; the topology is shared read-only.
pub struct Simulation<F: Scalar> {
    config: SimConfig,
    params: RateControlParams,
    topo: Arc<Topology<F>>,
    seed: u64,
    alpha: F,
    energy_k: F,
    prioritizer_cost: F,
    sched_unit_cost: F,
    nodes: Vec<NodeRuntime<F>>,
    events: BinaryHeap<Reverse<Event<F>>>,
    next_tiebreak: u64,
    now: u64,
    traffic_rng: ChaCha8Rng,
    routing_rng: ChaCha8Rng,
    link_rng: ChaCha8Rng,
    counters: RunCounts,
    checks: RunChecks,
    series: Vec<SeriesRow>,
    trace: Option<String>,
}

/// Builds the topology for `seed` and runs one replication.
pub fn run_simulation<F: Scalar>(
    config: &SimConfig,
    seed: u64,
) -> Result<MetricsReport<F>, EngineError> {
    let topo = Arc::new(Topology::generate(config, seed)?);
    Simulation::new(config.clone(), topo, seed)?.run()
}

impl<F: Scalar> Simulation<F> {
    pub fn new(config: SimConfig, topo: Arc<Topology<F>>, seed: u64) -> Result<Self, EngineError> {
        config.validate()?;
        // Fails early on a bad attenuation factor.
        energy_tx(F::zero(), F::lit(config.alpha), F::one())?;
        let initial = Rate::from_pps(config.initial_sched_rate);
        let nodes = topo
            .node_ids()
            .map(|id| {
                let rate = RateState::new(topo.parents(id), initial);
                NodeRuntime {
                    queues: QueueSet::new(config.queue_capacity),
                    sched: SchedulerState::new(rate.sched_rate()),
                    min_sched_rate: rate.sched_rate(),
                    rate,
                    window: Vec::new(),
                    observed: BTreeMap::new(),
                    ledger: EnergyLedger::default(),
                    next_seq: 0,
                    dispatch_pending: false,
                    originated: 0,
                    enqueue_attempts: 0,
                    dequeued: 0,
                    ratio_sum: 0.0,
                    ratio_samples: 0,
                }
            })
            .collect();
        Ok(Simulation {
            params: RateControlParams::from(&config),
            alpha: F::lit(config.alpha),
            energy_k: F::lit(config.energy_k),
            prioritizer_cost: F::lit(config.prioritizer_cost),
            sched_unit_cost: F::lit(config.sched_unit_cost),
            config,
            topo,
            seed,
            nodes,
            events: BinaryHeap::new(),
            next_tiebreak: 0,
            now: 0,
            traffic_rng: rng::stream(seed, rng::STREAM_TRAFFIC),
            routing_rng: rng::stream(seed, rng::STREAM_ROUTING),
            link_rng: rng::stream(seed, rng::STREAM_LINK),
            counters: RunCounts::default(),
            checks: RunChecks::default(),
            series: Vec::new(),
            trace: None,
        })
    }

    /// Records one line per processed event: `time kind node src seq`.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(String::new());
        self
    }

    pub fn topology(&self) -> &Topology<F> {
        &self.topo
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn ledger(&self, id: NodeId) -> &EnergyLedger<F> {
        &self.nodes[id.index()].ledger
    }

    pub fn queue_len(&self, id: NodeId) -> usize {
        self.nodes[id.index()].queues.len()
    }

    pub fn dropped_link(&self) -> u64 {
        self.counters.dropped_link
    }

    fn push(&mut self, time: u64, node: NodeId, kind: EventKind<F>) {
        let tiebreak = self.next_tiebreak;
        self.next_tiebreak += 1;
        self.events.push(Reverse(Event {
            time,
            tiebreak,
            node,
            kind,
        }));
    }

    fn sources(&self) -> impl Iterator<Item = NodeId> + '_ {
        let sink = self.topo.sink();
        self.topo.node_ids().filter(move |&id| id != sink)
    }

    fn schedule_start(&mut self) {
        let end = self.config.duration_ms;
        self.push(end, self.topo.sink(), EventKind::SimEnd);
        if end == 0 {
            return;
        }
        self.push(
            self.config.service_window_ms,
            self.topo.sink(),
            EventKind::ControlTick,
        );
        self.push(
            self.config.measurement_interval_ms,
            self.topo.sink(),
            EventKind::MeasurementTick,
        );
        let sources: Vec<NodeId> = self.sources().collect();
        for id in sources {
            for class in 0..2u8 {
                if let Some(period) = self.origination_period(id, class, 0) {
                    let phase = self.traffic_rng.gen_range(0..period);
                    self.push(phase, id, EventKind::PacketOrigination { class });
                }
            }
        }
    }

    fn burst_factor(&self, now: u64) -> f64 {
        if self.config.burst_multiplier == 1.0 {
            return 1.0;
        }
        let period = self.config.burst_period_ms;
        let on = (self.config.burst_duty * period as f64) as u64;
        if now % period < on {
            self.config.burst_multiplier
        } else {
            1.0
        }
    }

    fn origination_period(&self, id: NodeId, class: u8, now: u64) -> Option<u64> {
        let node = &self.nodes[id.index()];
        let rates = originating_rate(
            node.rate.sched_rate(),
            self.config.origination_share,
            [self.config.weight_o0, self.config.weight_o1],
        );
        let rate = rates[usize::from(class)];
        let burst = self.burst_factor(now);
        let boosted = if burst == 1.0 {
            rate
        } else {
            rate.mul_floor(burst)
        };
        boosted.period_ms()
    }

    /// Runs to `duration_ms` and reports.
    pub fn run(mut self) -> Result<MetricsReport<F>, EngineError> {
        self.run_events()?;
        Ok(self.report())
    }

    fn run_events(&mut self) -> Result<(), EngineError> {
        self.schedule_start();
        while let Some(Reverse(event)) = self.events.pop() {
            if event.time < self.now {
                self.checks.clock_violations += 1;
            }
            self.now = event.time;
            self.trace_event(&event)?;
            match event.kind {
                EventKind::SimEnd => break,
                EventKind::PacketOrigination { class } => self.on_origination(event.node, class)?,
                EventKind::PacketArrival { frame } => self.on_arrival(event.node, frame)?,
                EventKind::DispatchTick => self.on_dispatch(event.node)?,
                EventKind::ControlTick => self.on_control(),
                EventKind::MeasurementTick => self.on_measurement(),
                EventKind::Overhear { fields } => self.on_overhear(event.node, fields),
            }
        }
        Ok(())
    }

    fn trace_event(&mut self, event: &Event<F>) -> Result<(), EngineError> {
        let Some(trace) = self.trace.as_mut() else {
            return Ok(());
        };
        let (src, seq) = match &event.kind {
            EventKind::PacketArrival { frame } => {
                let p = decode_packet(&frame.bytes, frame.created_at)?;
                (
                    p.header.source_address.to_string(),
                    p.header.sequence.to_string(),
                )
            }
            EventKind::PacketOrigination { .. } => (
                event.node.to_string(),
                self.nodes[event.node.index()].next_seq.to_string(),
            ),
            _ => ("-".to_string(), "-".to_string()),
        };
        let _ = writeln!(
            trace,
            "{} {} {} {} {}",
            event.time,
            event.kind.tag().as_str(),
            event.node,
            src,
            seq
        );
        Ok(())
    }

    fn on_origination(&mut self, id: NodeId, class: u8) -> Result<(), EngineError> {
        let now = self.now;
        let cap = self.config.requests_per_sensor;
        if cap > 0 && self.nodes[id.index()].originated >= cap {
            return Ok(());
        }
        let node = &mut self.nodes[id.index()];
        let seq = node.next_seq;
        node.next_seq = node.next_seq.wrapping_add(1);
        node.originated += 1;
        self.counters.originated += 1;
        let deadline = now + self.config.relative_deadline_ms(class);
        let header = PacketHeader {
            priority_number: class,
            source_address: id,
            sequence: seq,
            absolute_deadline: u32::try_from(deadline).unwrap_or(u32::MAX),
            piggyback: PiggybackFields::default(),
        };
        let queued = Queued {
            packet: Packet::new(header, now),
            arrived_at: now,
            hops: 0,
            spent: Vec::new(),
        };
        self.admit(id, queued);

        if cap == 0 || self.nodes[id.index()].originated < cap {
            let next = match self.origination_period(id, class, now) {
                Some(p) => now + p,
                // Quiesced: look again next window.
                None => now + self.config.service_window_ms,
            };
            self.push(next, id, EventKind::PacketOrigination { class });
        }
        Ok(())
    }

    fn on_arrival(&mut self, id: NodeId, frame: Frame<F>) -> Result<(), EngineError> {
        let mut packet = decode_packet(&frame.bytes, frame.created_at)?;
        if id == self.topo.sink() {
            self.counters.delivered += 1;
            self.counters.delivered_hops += u64::from(frame.hops);
            if self.now > u64::from(packet.header.absolute_deadline) {
                self.counters.delivered_late += 1;
                self.waste(&frame.spent, Waste::Implicit);
            }
            return Ok(());
        }
        packet.is_transit_at_current_hop = packet.header.source_address != id;
        let queued = Queued {
            packet,
            arrived_at: self.now,
            hops: frame.hops,
            spent: frame.spent,
        };
        self.admit(id, queued);
        Ok(())
    }

    /// Prioritizer: classify, charge, enqueue or tail-drop.
    fn admit(&mut self, id: NodeId, mut queued: Queued<F>) {
        let cost = self.prioritizer_cost;
        let capacity = self.config.queue_capacity;
        let node = &mut self.nodes[id.index()];
        node.ledger
            .charge_processing(ProcessingComponent::Prioritizer, 1, cost);
        queued.spent.push((id, cost));
        node.enqueue_attempts += 1;
        let class = match classify(&queued.packet.header, id) {
            Ok(c) => c,
            // Only reachable with a corrupted header; treat as overflow.
            Err(_) => QueueClass::O1,
        };
        match node.queues.enqueue(queued, class) {
            Ok(()) => {
                if node.queues.len() > capacity {
                    self.checks.capacity_violations += 1;
                }
                self.ensure_dispatch(id);
            }
            Err(dropped) => {
                self.counters.dropped_queue += 1;
                self.waste(&dropped.spent, Waste::Congestion);
            }
        }
    }

    fn ensure_dispatch(&mut self, id: NodeId) {
        let node = &mut self.nodes[id.index()];
        if node.dispatch_pending || node.queues.is_empty() {
            return;
        }
        node.dispatch_pending = true;
        let at = node.sched.next_release_time().max(self.now);
        self.push(at, id, EventKind::DispatchTick);
    }

    fn waste(&mut self, spent: &[(NodeId, F)], kind: Waste) {
        for &(node, joules) in spent {
            let ledger = &mut self.nodes[node.index()].ledger;
            match kind {
                Waste::Congestion => ledger.congestion = ledger.congestion + joules,
                Waste::Implicit => ledger.implicit_congestion = ledger.implicit_congestion + joules,
            }
        }
    }

    fn piggyback(&self, id: NodeId) -> PiggybackFields {
        let node = &self.nodes[id.index()];
        PiggybackFields {
            queue_length: node.queues.len().min(255) as u8,
            sched_rate: node.rate.sched_rate(),
            service_rate: node.rate.service_rate(),
        }
    }

    fn on_dispatch(&mut self, id: NodeId) -> Result<(), EngineError> {
        let now = self.now;
        {
            let node = &mut self.nodes[id.index()];
            node.dispatch_pending = false;
        }
        // Expired packets at the head are discarded without using a release.
        loop {
            let node = &mut self.nodes[id.index()];
            let expired = node
                .queues
                .peek_next()
                .is_some_and(|q| now > u64::from(q.packet.header.absolute_deadline));
            if !expired {
                break;
            }
            let Some(dead) = node.queues.dequeue_next() else {
                break;
            };
            node.dequeued += 1;
            self.counters.missed_deadline += 1;
            self.waste(&dead.spent, Waste::Implicit);
        }

        let cost = self.sched_unit_cost;
        let node = &mut self.nodes[id.index()];
        if let Some(mut queued) = node.sched.next_dispatch(&mut node.queues, now) {
            node.dequeued += 1;
            node.ledger
                .charge_processing(ProcessingComponent::SchedulingUnit, 1, cost);
            queued.spent.push((id, cost));
            let departure = now + self.config.processing_ms;
            node.window.push((queued.arrived_at, departure));

            let parent = self.choose_parent(id)?;
            queued.packet.header.piggyback = self.piggyback(id);
            let bytes = queued.packet.to_bytes()?;
            let frame = Frame {
                bytes,
                created_at: queued.packet.created_at,
                hops: queued.hops + 1,
                spent: queued.spent,
            };
            let fields = decode_packet(&frame.bytes, frame.created_at)?
                .header
                .piggyback;
            self.deliver_hop(frame, id, parent, departure)?;
            let heard_at = departure + self.config.link_latency_ms;
            self.push(heard_at, id, EventKind::Overhear { fields });
        }
        self.ensure_dispatch(id);
        Ok(())
    }

    /// Next hop for a packet leaving `id`: one of its parents, uniformly.
    pub fn choose_parent(&mut self, id: NodeId) -> Result<NodeId, EngineError> {
        let parents = self.topo.parents(id);
        if parents.is_empty() {
            return Err(TopologyError::NoPathFound(id).into());
        }
        let pick = self.routing_rng.gen_range(0..parents.len());
        Ok(parents[pick])
    }

    /// Transmits `frame` from `from` to `to` at time `now`.
    ///
    /// The transmitter pays `k * d^alpha` whatever happens. Loss probability
    /// is `loss_base + loss_collision * occupancy(to) / capacity`; losses
    /// from the occupancy term are congestion losses.
    pub fn deliver_hop(
        &mut self,
        mut frame: Frame<F>,
        from: NodeId,
        to: NodeId,
        now: u64,
    ) -> Result<HopOutcome, EngineError> {
        if !self.topo.is_adjacent(from, to) {
            return Err(EngineError::NotAdjacent { from, to });
        }
        let joules = energy_tx(self.topo.distance(from, to), self.alpha, self.energy_k)?;
        self.nodes[from.index()].ledger.charge_tx(joules);
        frame.spent.push((from, joules));
        self.counters.transmissions += 1;

        let occupancy = if to == self.topo.sink() {
            0.0
        } else {
            self.nodes[to.index()].queues.len() as f64 / self.config.queue_capacity as f64
        };
        let base = self.config.loss_base;
        let collision = self.config.loss_collision * occupancy;
        let draw: f64 = self.link_rng.gen();
        if draw < base {
            self.counters.dropped_link += 1;
            return Ok(HopOutcome::Lost { congestion: false });
        }
        if draw < base + collision {
            self.counters.dropped_link += 1;
            self.counters.dropped_link_congestion += 1;
            self.waste(&frame.spent, Waste::Congestion);
            return Ok(HopOutcome::Lost { congestion: true });
        }
        let arrival_at = now + self.config.link_latency_ms;
        self.push(arrival_at, to, EventKind::PacketArrival { frame });
        Ok(HopOutcome::Scheduled { arrival_at })
    }

    fn on_overhear(&mut self, transmitter: NodeId, fields: PiggybackFields) {
        let topo = Arc::clone(&self.topo);
        for &child in topo.children(transmitter) {
            self.nodes[child.index()].observed.insert(
                transmitter,
                Observation {
                    fields,
                    at: self.now,
                },
            );
        }
    }

    /// Worst ratio and longest queue among fresh parent advertisements.
    fn parent_signal(&self, id: NodeId) -> (Option<f64>, usize) {
        let horizon = self.now.saturating_sub(self.config.service_window_ms);
        let mut ratio: Option<f64> = None;
        let mut occupancy = 0usize;
        for obs in self.nodes[id.index()].observed.values() {
            if obs.at < horizon {
                continue;
            }
            occupancy = occupancy.max(usize::from(obs.fields.queue_length));
            if let Ok(r) = service_ratio(obs.fields.service_rate, obs.fields.sched_rate) {
                ratio = Some(ratio.map_or(r, |cur: f64| cur.min(r)));
            }
        }
        (ratio, occupancy)
    }

    fn on_control(&mut self) {
        let sources: Vec<NodeId> = self.sources().collect();
        let params = self.params;
        for id in sources {
            let node = &mut self.nodes[id.index()];
            let had_departures = !node.window.is_empty();
            let service = measure_service_rate(node.window.drain(..));
            let own_ratio = node.rate.record_service_rate(service).ok();
            if had_departures {
                if let Some(r) = own_ratio {
                    node.ratio_sum += r;
                    node.ratio_samples += 1;
                }
            }
            let own = (own_ratio.filter(|_| had_departures), node.queues.len());

            if self.config.rate_control_enabled {
                let parents = self.parent_signal(id);
                let (ratio, occupancy) = match self.config.congestion_signal {
                    CongestionSignal::Parents => parents,
                    CongestionSignal::Own => own,
                    CongestionSignal::Both => (
                        match (own.0, parents.0) {
                            (Some(a), Some(b)) => Some(a.min(b)),
                            (a, b) => a.or(b),
                        },
                        own.1.max(parents.1),
                    ),
                };
                let node = &mut self.nodes[id.index()];
                if node.rate.control_step(&params, ratio, occupancy).is_ok() {
                    let rate = node.rate.sched_rate();
                    node.sched.set_sched_rate(rate);
                    node.min_sched_rate = node.min_sched_rate.min(rate);
                }
            }

            let node = &self.nodes[id.index()];
            if !node.rate.is_conserved() {
                self.checks.conservation_violations += 1;
            }
            if params.cap_mode == RateCapMode::Cumulative {
                let floor = f64::from(node.rate.initial_sched_rate().raw())
                    * (1.0 - params.max_rate_adjustment);
                if f64::from(node.rate.sched_rate().raw()) < floor {
                    self.checks.rate_floor_violations += 1;
                }
            }
            self.checks.control_checks += 1;
        }
        let next = self.now + self.config.service_window_ms;
        self.push(next, self.topo.sink(), EventKind::ControlTick);
    }

    fn on_measurement(&mut self) {
        let sources: Vec<NodeId> = self.sources().collect();
        for id in sources {
            let node = &self.nodes[id.index()];
            self.series.push(SeriesRow {
                time_ms: self.now,
                node: id,
                queue_len: node.queues.len(),
                sched_rate: node.rate.sched_rate(),
                service_rate: node.rate.service_rate(),
                ratio: node.rate.last_ratio().unwrap_or(0.0),
            });
        }
        let next = self.now + self.config.measurement_interval_ms;
        self.push(next, self.topo.sink(), EventKind::MeasurementTick);
    }

    fn in_flight(&self) -> u64 {
        let queued: usize = self.nodes.iter().map(|n| n.queues.len()).sum();
        let on_air = self
            .events
            .iter()
            .filter(|Reverse(e)| matches!(e.kind, EventKind::PacketArrival { .. }))
            .count();
        (queued + on_air) as u64
    }

    fn report(mut self) -> MetricsReport<F> {
        let mut c = self.counters;
        c.in_flight_at_end = self.in_flight();
        if !c.is_conserved() {
            self.checks.packet_conservation_violations += 1;
        }
        for node in &self.nodes {
            let out = node.queues.drop_count() + node.dequeued + node.queues.len() as u64;
            if node.enqueue_attempts != out {
                self.checks.queue_accounting_violations += 1;
            }
            if !node.ledger.is_consistent() {
                self.checks.energy_violations += 1;
            }
        }

        let sink = self.topo.sink();
        let mut energy = EnergyLedger::default();
        let mut per_node = Vec::with_capacity(self.nodes.len());
        for (idx, node) in self.nodes.iter().enumerate() {
            let id = NodeId(idx as u16);
            energy += &node.ledger;
            per_node.push(NodeReport {
                id,
                is_sink: id == sink,
                hop_distance: self.topo.hop_distance(id),
                originated: node.originated,
                queue_drops: node.queues.drop_count(),
                enqueue_attempts: node.enqueue_attempts,
                dispatched: node.sched.served_count(),
                mean_service_ratio: (node.ratio_samples > 0)
                    .then(|| node.ratio_sum / node.ratio_samples as f64),
                initial_sched_rate: node.rate.initial_sched_rate(),
                min_sched_rate: node.min_sched_rate,
                final_sched_rate: node.rate.sched_rate(),
                energy: node.ledger,
            });
        }
        let path_length_table = self
            .topo
            .average_path_length(SearchBudget::Unlimited)
            .unwrap_or_default();
        let series = std::mem::take(&mut self.series);
        let trace = self.trace.take();
        MetricsReport::assemble(
            self.seed,
            c,
            energy,
            per_node,
            path_length_table,
            series,
            self.checks,
            trace,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Point;

    fn line_topology() -> Arc<Topology<f64>> {
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(10.0, 0.0),
            Point::new(20.0, 0.0),
        ];
        Arc::new(Topology::from_positions(pts, NodeId(2), 12.0).unwrap())
    }

    fn frame() -> Frame<f64> {
        Frame {
            bytes: [0u8; PACKET_SIZE],
            created_at: 0,
            hops: 0,
            spent: Vec::new(),
        }
    }

    fn cfg() -> SimConfig {
        SimConfig {
            node_count: 3,
            ..SimConfig::default()
        }
    }

    #[test]
    fn lossless_link_schedules_arrival() {
        let config = SimConfig {
            loss_base: 0.0,
            loss_collision: 0.0,
            ..cfg()
        };
        let mut sim = Simulation::new(config, line_topology(), 1).unwrap();
        for t in 0..50 {
            let out = sim.deliver_hop(frame(), NodeId(0), NodeId(1), t).unwrap();
            assert_eq!(out, HopOutcome::Scheduled { arrival_at: t + 10 });
        }
        // k * d^alpha = 1e-6 * 100 per hop.
        assert!((sim.ledger(NodeId(0)).transmission - 50.0 * 1e-4).abs() < 1e-12);
    }

    #[test]
    fn lossy_link_never_delivers() {
        let config = SimConfig {
            loss_base: 1.0,
            loss_collision: 0.0,
            ..cfg()
        };
        let mut sim = Simulation::new(config, line_topology(), 1).unwrap();
        for t in 0..50 {
            let out = sim.deliver_hop(frame(), NodeId(0), NodeId(1), t).unwrap();
            assert_eq!(out, HopOutcome::Lost { congestion: false });
        }
        assert_eq!(sim.dropped_link(), 50);
        assert!(sim.ledger(NodeId(0)).transmission > 0.0);
        assert_eq!(sim.ledger(NodeId(0)).congestion, 0.0);
    }

    #[test]
    fn non_adjacent_hop_is_rejected() {
        let mut sim = Simulation::new(cfg(), line_topology(), 1).unwrap();
        assert!(matches!(
            sim.deliver_hop(frame(), NodeId(0), NodeId(2), 0),
            Err(EngineError::NotAdjacent { .. })
        ));
    }

    #[test]
    fn zero_duration_is_empty() {
        let config = SimConfig {
            duration_ms: 0,
            ..SimConfig::default()
        };
        let r = run_simulation::<f64>(&config, 4).unwrap();
        assert_eq!(r.originated(), 0);
        assert_eq!(r.delivered(), 0);
        assert_eq!(r.counts.lost(), 0);
        assert_eq!(r.energy.spent(), 0.0);
    }

    #[test]
    fn line_run_conserves_packets() {
        let config = SimConfig {
            duration_ms: 20_000,
            ..cfg()
        };
        let r = Simulation::new(config, line_topology(), 9)
            .unwrap()
            .run()
            .unwrap();
        assert!(r.originated() > 0);
        assert!(r.delivered() > 0);
        assert!(r.checks.is_clean(), "{:?}", r.checks);
    }
}
