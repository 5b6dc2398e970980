//! Per-node prioritizer: three transit queues and two originating queues
//! sharing one bounded buffer.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::packet::PacketHeader;
use crate::topology::NodeId;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueueError {
    #[error("priority {priority} invalid for {} traffic", if *.transit { "transit" } else { "originating" })]
    InvalidPriority { priority: u8, transit: bool },
}

/// Queue designator in rank order: every transit queue outranks every
/// originating queue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QueueClass {
    T0,
    T1,
    T2,
    O0,
    O1,
}

impl QueueClass {
    pub const ALL: [QueueClass; 5] = [
        QueueClass::T0,
        QueueClass::T1,
        QueueClass::T2,
        QueueClass::O0,
        QueueClass::O1,
    ];

    pub const fn rank(self) -> usize {
        self as usize
    }

    pub const fn is_transit(self) -> bool {
        matches!(self, QueueClass::T0 | QueueClass::T1 | QueueClass::T2)
    }
}

impl fmt::Display for QueueClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

pub const TRANSIT_CLASSES: u8 = 3;
pub const ORIGINATING_CLASSES: u8 = 2;

/// Picks the queue for a packet arriving at (or created by) `at_node`.
pub fn classify(header: &PacketHeader, at_node: NodeId) -> Result<QueueClass, QueueError> {
    let transit = header.source_address != at_node;
    let p = header.priority_number;
    match (transit, p) {
        (true, 0) => Ok(QueueClass::T0),
        (true, 1) => Ok(QueueClass::T1),
        (true, 2) => Ok(QueueClass::T2),
        (false, 0) => Ok(QueueClass::O0),
        (false, 1) => Ok(QueueClass::O1),
        _ => Err(QueueError::InvalidPriority {
            priority: p,
            transit,
        }),
    }
}

/// Total order inside one queue: deadline, then arrival stamp, then origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct EdfKey {
    deadline: u32,
    stamp: u64,
    source: NodeId,
    sequence: u16,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Enqueue {
    Accepted,
    Dropped,
}

/// Five EDF-ordered queues over a shared buffer of `capacity` packets.
#[derive(Clone, Debug)]
pub struct QueueSet<T> {
    queues: [BTreeMap<EdfKey, T>; 5],
    capacity: usize,
    len: usize,
    drop_count: u64,
    arrival_counter: u64,
}

impl<T: AsRef<PacketHeader>> QueueSet<T> {
    pub fn new(capacity: usize) -> Self {
        QueueSet {
            queues: Default::default(),
            capacity,
            len: 0,
            drop_count: 0,
            arrival_counter: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn len_of(&self, class: QueueClass) -> usize {
        self.queues[class.rank()].len()
    }

    pub fn drop_count(&self) -> u64 {
        self.drop_count
    }

    /// Tail-drops `packet` when the shared buffer is full; returns it so the
    /// caller can account for it.
    pub fn enqueue(&mut self, packet: T, class: QueueClass) -> Result<(), T> {
        if self.len >= self.capacity {
            self.drop_count += 1;
            return Err(packet);
        }
        let h = packet.as_ref();
        let key = EdfKey {
            deadline: h.absolute_deadline,
            stamp: self.arrival_counter,
            source: h.source_address,
            sequence: h.sequence,
        };
        self.arrival_counter += 1;
        self.queues[class.rank()].insert(key, packet);
        self.len += 1;
        Ok(())
    }

    /// [`enqueue`](Self::enqueue) without handing back a dropped packet.
    pub fn offer(&mut self, packet: T, class: QueueClass) -> Enqueue {
        match self.enqueue(packet, class) {
            Ok(()) => Enqueue::Accepted,
            Err(_) => Enqueue::Dropped,
        }
    }

    /// Earliest-deadline packet of the highest-ranked nonempty queue.
    pub fn peek_next(&self) -> Option<&T> {
        self.queues
            .iter()
            .find_map(|q| q.first_key_value().map(|(_, p)| p))
    }

    pub fn peek_class(&self) -> Option<QueueClass> {
        QueueClass::ALL
            .into_iter()
            .find(|c| !self.queues[c.rank()].is_empty())
    }

    pub fn dequeue_next(&mut self) -> Option<T> {
        let q = self.queues.iter_mut().find(|q| !q.is_empty())?;
        let (_, packet) = q.pop_first()?;
        self.len -= 1;
        Some(packet)
    }

    /// All queued packets in rank-then-EDF order.
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.queues.iter().flat_map(|q| q.values())
    }
}
