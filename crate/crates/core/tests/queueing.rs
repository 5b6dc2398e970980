use proptest::prelude::*;
use wsn_core::queueing::Enqueue;
use wsn_core::{classify, NodeId, Packet, PacketHeader, QueueClass, QueueError, QueueSet};

#[derive(Clone, Debug)]
enum Op {
    Push {
        transit: bool,
        priority: u8,
        deadline: u32,
    },
    Pop,
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        3 => (any::<bool>(), 0u8..3, 0u32..50).prop_map(|(transit, priority, deadline)| Op::Push {
            transit,
            priority,
            deadline
        }),
        2 => Just(Op::Pop),
    ]
}

const HERE: NodeId = NodeId(7);

/// Reference: a flat list, served by (rank, deadline, arrival order).
#[derive(Default)]
struct Model {
    items: Vec<(usize, u32, u64, u16)>,
    arrivals: u64,
}

impl Model {
    fn push(&mut self, rank: usize, deadline: u32, seq: u16, capacity: usize) -> bool {
        if self.items.len() >= capacity {
            return false;
        }
        self.items.push((rank, deadline, self.arrivals, seq));
        self.arrivals += 1;
        true
    }

    fn pop(&mut self) -> Option<u16> {
        let best = (0..self.items.len()).min_by_key(|&i| {
            let (rank, deadline, arrival, _) = self.items[i];
            (rank, deadline, arrival)
        })?;
        Some(self.items.remove(best).3)
    }
}

fn rank_of(transit: bool, priority: u8) -> Option<usize> {
    match (transit, priority) {
        (true, p) => Some(usize::from(p)),
        (false, p @ 0..=1) => Some(3 + usize::from(p)),
        _ => None,
    }
}

fn packet(transit: bool, priority: u8, deadline: u32, seq: u16) -> Packet {
    Packet::new(
        PacketHeader {
            priority_number: priority,
            source_address: if transit { NodeId(99) } else { HERE },
            sequence: seq,
            absolute_deadline: deadline,
            ..PacketHeader::default()
        },
        0,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn dequeue_order_matches_reference(
        capacity in 1usize..12,
        ops in proptest::collection::vec(op(), 1..60),
    ) {
        let mut qs: QueueSet = QueueSet::new(capacity);
        let mut model = Model::default();
        let mut drops = 0u64;
        for (seq, op) in ops.into_iter().enumerate() {
            let seq = seq as u16;
            match op {
                Op::Push { transit, priority, deadline } => {
                    let p = packet(transit, priority, deadline, seq);
                    match (classify(&p.header, HERE), rank_of(transit, priority)) {
                        (Ok(class), Some(rank)) => {
                            prop_assert_eq!(class.rank(), rank);
                            let accepted = model.push(rank, deadline, seq, capacity);
                            let got = qs.offer(p, class);
                            prop_assert_eq!(got == Enqueue::Accepted, accepted);
                            if !accepted {
                                drops += 1;
                            }
                        }
                        (Err(QueueError::InvalidPriority { priority: bad, transit: t }), None) => {
                            prop_assert_eq!(bad, priority);
                            prop_assert_eq!(t, transit);
                        }
                        (c, r) => prop_assert!(false, "classify {:?} vs model {:?}", c, r),
                    }
                }
                Op::Pop => {
                    let got = qs.dequeue_next().map(|p| p.header.sequence);
                    prop_assert_eq!(got, model.pop());
                }
            }
            prop_assert!(qs.len() <= capacity);
            prop_assert_eq!(qs.len(), model.items.len());
            prop_assert_eq!(qs.drop_count(), drops);
        }
        // Drain: the rest comes out in reference order too.
        while let Some(expected) = model.pop() {
            prop_assert_eq!(qs.dequeue_next().map(|p| p.header.sequence), Some(expected));
        }
        prop_assert!(qs.is_empty());
    }
}

#[test]
fn transit_outranks_originating() {
    let mut qs: QueueSet = QueueSet::new(8);
    qs.offer(packet(false, 0, 1, 0), QueueClass::O0);
    qs.offer(packet(true, 2, 900, 1), QueueClass::T2);
    assert_eq!(qs.peek_class(), Some(QueueClass::T2));
    assert_eq!(qs.dequeue_next().unwrap().header.sequence, 1);
}

#[test]
fn capacity_is_shared_across_queues() {
    let mut qs: QueueSet = QueueSet::new(8);
    for (i, class) in QueueClass::ALL.iter().cycle().take(8).enumerate() {
        let transit = class.is_transit();
        let pr = if transit {
            class.rank() as u8
        } else {
            (class.rank() - 3) as u8
        };
        assert_eq!(
            qs.offer(packet(transit, pr, 10, i as u16), *class),
            Enqueue::Accepted
        );
    }
    assert_eq!(
        qs.offer(packet(true, 0, 0, 99), QueueClass::T0),
        Enqueue::Dropped
    );
    assert_eq!(qs.len(), 8);
    assert_eq!(qs.drop_count(), 1);
}
