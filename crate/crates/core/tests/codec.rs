use proptest::prelude::*;
use wsn_core::packet::{decode_packet, header_from_parts, HEADER_LEN};
use wsn_core::{
    decode_header, encode_header, CodecError, NodeId, Packet, PacketHeader, PiggybackFields, Rate,
    PACKET_SIZE,
};

/// Independent reading of the wire rate: byte × 2 pkt/s, saturating at 510.
fn wire_rate(r: Rate) -> Rate {
    let pps_steps = (r.raw() / (2 * Rate::ONE)).min(255);
    Rate::from_raw(pps_steps * 2 * Rate::ONE)
}

fn header() -> impl Strategy<Value = PacketHeader> {
    (
        any::<u8>(),
        any::<u16>(),
        any::<u16>(),
        any::<u32>(),
        any::<u8>(),
        0..=Rate::MAX_RAW,
        0..=Rate::MAX_RAW,
    )
        .prop_map(|(p, src, seq, dl, q, sch, srv)| PacketHeader {
            priority_number: p,
            source_address: NodeId(src),
            sequence: seq,
            absolute_deadline: dl,
            piggyback: PiggybackFields {
                queue_length: q,
                sched_rate: Rate::from_raw(sch),
                service_rate: Rate::from_raw(srv),
            },
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4096))]

    #[test]
    fn header_roundtrip_up_to_quantization(h in header()) {
        let back = decode_header(&encode_header(&h).unwrap()).unwrap();
        prop_assert_eq!(back.priority_number, h.priority_number);
        prop_assert_eq!(back.source_address, h.source_address);
        prop_assert_eq!(back.sequence, h.sequence);
        prop_assert_eq!(back.absolute_deadline, h.absolute_deadline);
        prop_assert_eq!(back.piggyback.queue_length, h.piggyback.queue_length);
        prop_assert_eq!(back.piggyback.sched_rate, wire_rate(h.piggyback.sched_rate));
        prop_assert_eq!(back.piggyback.service_rate, wire_rate(h.piggyback.service_rate));
        prop_assert_eq!(back.piggyback, h.piggyback.quantized());
    }

    #[test]
    fn any_twelve_bytes_roundtrip(bytes in any::<[u8; 12]>()) {
        let h = decode_header(&bytes).unwrap();
        prop_assert_eq!(encode_header(&h).unwrap(), bytes);
    }

    #[test]
    fn wrong_lengths_are_rejected(len in 0usize..64) {
        prop_assume!(len != HEADER_LEN);
        let buf = vec![0u8; len];
        prop_assert_eq!(decode_header(&buf), Err(CodecError::TruncatedHeader(len)));
    }

    #[test]
    fn packets_are_thirty_bytes(h in header(), created in any::<u32>()) {
        let p = Packet::new(h, u64::from(created));
        let bytes = p.to_bytes().unwrap();
        prop_assert_eq!(bytes.len(), PACKET_SIZE);
        let back = decode_packet(&bytes, u64::from(created)).unwrap();
        prop_assert_eq!(back.header, decode_header(&bytes[..HEADER_LEN]).unwrap());
        prop_assert_eq!(back.payload_size, PACKET_SIZE - HEADER_LEN);
    }
}

#[test]
fn hand_packed_example() {
    let h = PacketHeader {
        priority_number: 1,
        source_address: NodeId(258),
        sequence: 1,
        absolute_deadline: 1000,
        piggyback: PiggybackFields {
            queue_length: 8,
            sched_rate: Rate::from_int(4),
            service_rate: Rate::from_int(2),
        },
    };
    let expected = [
        0x01, 0x01, 0x02, 0x00, 0x01, 0x00, 0x00, 0x03, 0xE8, 0x08, 0x02, 0x01,
    ];
    assert_eq!(encode_header(&h).unwrap(), expected);
    assert_eq!(decode_header(&expected).unwrap(), h);
}

#[test]
fn zero_header_is_zero_bytes() {
    assert_eq!(encode_header(&PacketHeader::default()).unwrap(), [0u8; 12]);
}

#[test]
fn odd_rates_round_down_and_saturate() {
    let h = PacketHeader {
        piggyback: PiggybackFields {
            queue_length: 0,
            sched_rate: Rate::from_pps(3.9),
            service_rate: Rate::from_pps(4000.0),
        },
        ..PacketHeader::default()
    };
    let back = decode_header(&encode_header(&h).unwrap()).unwrap();
    assert_eq!(back.piggyback.sched_rate, Rate::from_int(2));
    assert_eq!(back.piggyback.service_rate, Rate::from_int(510));
}

#[test]
fn out_of_range_parts() {
    let err = header_from_parts(0, 1, 1, 10, 300, Rate::ZERO, Rate::ZERO).unwrap_err();
    assert_eq!(
        err,
        CodecError::FieldOutOfRange {
            field: "queue_length",
            value: 300
        }
    );
    assert!(header_from_parts(0, 70_000, 0, 0, 0, Rate::ZERO, Rate::ZERO).is_err());
    assert!(header_from_parts(0, 0, 0, 1 << 33, 0, Rate::ZERO, Rate::ZERO).is_err());
    assert!(header_from_parts(
        2,
        65_535,
        65_535,
        u64::from(u32::MAX),
        255,
        Rate::ZERO,
        Rate::ZERO
    )
    .is_ok());
}
