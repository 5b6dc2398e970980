//! Packet model and the 12-byte header codec.
//!
//! Wire layout, big-endian:
//!
//! | bytes | field                                   |
//! |-------|-----------------------------------------|
//! | 0     | priority number                         |
//! | 1-2   | source address                          |
//! | 3-4   | sequence                                |
//! | 5-8   | absolute deadline, ms                   |
//! | 9     | piggybacked queue length                |
//! | 10    | piggybacked scheduling rate, 2 pkt/s/LSB |
//! | 11    | piggybacked service rate, 2 pkt/s/LSB    |
//!
//! The header is followed by an 18-byte payload for a 30-byte packet.

use thiserror::Error;

use crate::config::PACKET_SIZE;
use crate::rate::Rate;
use crate::topology::NodeId;

pub const HEADER_LEN: usize = 12;
pub const PAYLOAD_LEN: usize = PACKET_SIZE - HEADER_LEN;

/// Raw fixed-point units per wire step of 2 pkt/s.
const RATE_STEP_RAW: u32 = 2 * Rate::ONE;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("field `{field}` value {value} exceeds its encoded range")]
    FieldOutOfRange { field: &'static str, value: u64 },
    #[error("header needs {HEADER_LEN} bytes, got {0}")]
    TruncatedHeader(usize),
    #[error("packet needs {PACKET_SIZE} bytes, got {0}")]
    TruncatedPacket(usize),
}

/// Control state a node advertises in every packet it sends.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PiggybackFields {
    pub queue_length: u8,
    pub sched_rate: Rate,
    pub service_rate: Rate,
}

impl PiggybackFields {
    /// Rates rounded down to the wire granularity.
    pub fn quantized(self) -> Self {
        PiggybackFields {
            queue_length: self.queue_length,
            sched_rate: Rate::from_raw(u32::from(rate_to_wire(self.sched_rate)) * RATE_STEP_RAW),
            service_rate: Rate::from_raw(
                u32::from(rate_to_wire(self.service_rate)) * RATE_STEP_RAW,
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PacketHeader {
    /// 0 is the highest priority.
    pub priority_number: u8,
    pub source_address: NodeId,
    pub sequence: u16,
    pub absolute_deadline: u32,
    pub piggyback: PiggybackFields,
}

impl PacketHeader {
    pub fn encode(&self) -> Result<[u8; HEADER_LEN], CodecError> {
        encode_header(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packet {
    pub header: PacketHeader,
    pub payload_size: usize,
    pub created_at: u64,
    pub is_transit_at_current_hop: bool,
}

impl Packet {
    pub fn new(header: PacketHeader, created_at: u64) -> Self {
        Packet {
            header,
            payload_size: PAYLOAD_LEN,
            created_at,
            is_transit_at_current_hop: false,
        }
    }

    /// Header plus zero-filled payload.
    pub fn to_bytes(&self) -> Result<[u8; PACKET_SIZE], CodecError> {
        let mut out = [0u8; PACKET_SIZE];
        out[..HEADER_LEN].copy_from_slice(&encode_header(&self.header)?);
        Ok(out)
    }
}

impl AsRef<PacketHeader> for Packet {
    fn as_ref(&self) -> &PacketHeader {
        &self.header
    }
}

fn rate_to_wire(rate: Rate) -> u8 {
    (rate.raw() / RATE_STEP_RAW).min(255) as u8
}

/// Packs `header` into its 12-byte wire form. Rates are truncated to
/// multiples of 2 pkt/s and saturate at 510 pkt/s.
pub fn encode_header(header: &PacketHeader) -> Result<[u8; HEADER_LEN], CodecError> {
    let mut out = [0u8; HEADER_LEN];
    out[0] = header.priority_number;
    out[1..3].copy_from_slice(&header.source_address.0.to_be_bytes());
    out[3..5].copy_from_slice(&header.sequence.to_be_bytes());
    out[5..9].copy_from_slice(&header.absolute_deadline.to_be_bytes());
    out[9] = header.piggyback.queue_length;
    out[10] = rate_to_wire(header.piggyback.sched_rate);
    out[11] = rate_to_wire(header.piggyback.service_rate);
    Ok(out)
}

/// Checked constructor path for values coming from wider types.
pub fn header_from_parts(
    priority_number: u64,
    source_address: u64,
    sequence: u64,
    absolute_deadline: u64,
    piggyback_queue_length: u64,
    sched_rate: Rate,
    service_rate: Rate,
) -> Result<PacketHeader, CodecError> {
    fn fit<T: TryFrom<u64>>(field: &'static str, value: u64) -> Result<T, CodecError> {
        T::try_from(value).map_err(|_| CodecError::FieldOutOfRange { field, value })
    }
    Ok(PacketHeader {
        priority_number: fit("priority_number", priority_number)?,
        source_address: NodeId(fit("source_address", source_address)?),
        sequence: fit("sequence", sequence)?,
        absolute_deadline: fit("absolute_deadline", absolute_deadline)?,
        piggyback: PiggybackFields {
            queue_length: fit("queue_length", piggyback_queue_length)?,
            sched_rate,
            service_rate,
        },
    })
}

/// Inverse of [`encode_header`]. Every 12-byte pattern decodes.
pub fn decode_header(bytes: &[u8]) -> Result<PacketHeader, CodecError> {
    let b: &[u8; HEADER_LEN] = bytes
        .try_into()
        .map_err(|_| CodecError::TruncatedHeader(bytes.len()))?;
    Ok(PacketHeader {
        priority_number: b[0],
        source_address: NodeId(u16::from_be_bytes([b[1], b[2]])),
        sequence: u16::from_be_bytes([b[3], b[4]]),
        absolute_deadline: u32::from_be_bytes([b[5], b[6], b[7], b[8]]),
        piggyback: PiggybackFields {
            queue_length: b[9],
            sched_rate: Rate::from_raw(u32::from(b[10]) * RATE_STEP_RAW),
            service_rate: Rate::from_raw(u32::from(b[11]) * RATE_STEP_RAW),
        },
    })
}

/// Decodes a full 30-byte packet; the payload is opaque.
pub fn decode_packet(bytes: &[u8], created_at: u64) -> Result<Packet, CodecError> {
    if bytes.len() != PACKET_SIZE {
        return Err(CodecError::TruncatedPacket(bytes.len()));
    }
    Ok(Packet::new(
        decode_header(&bytes[..HEADER_LEN])?,
        created_at,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_header() {
        assert_eq!(encode_header(&PacketHeader::default()).unwrap(), [0u8; 12]);
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
        let bytes = encode_header(&h).unwrap();
        assert_eq!(
            bytes,
            [0x01, 0x01, 0x02, 0x00, 0x01, 0x00, 0x00, 0x03, 0xE8, 0x08, 0x02, 0x01]
        );
        assert_eq!(decode_header(&bytes).unwrap(), h);
    }

    #[test]
    fn oversized_queue_length() {
        assert_eq!(
            header_from_parts(0, 0, 0, 0, 300, Rate::ZERO, Rate::ZERO),
            Err(CodecError::FieldOutOfRange {
                field: "queue_length",
                value: 300
            })
        );
        assert!(header_from_parts(0, 70_000, 0, 0, 0, Rate::ZERO, Rate::ZERO).is_err());
        assert!(header_from_parts(0, 0, 0, 1 << 33, 0, Rate::ZERO, Rate::ZERO).is_err());
    }

    #[test]
    fn wrong_length() {
        assert_eq!(
            decode_header(&[0u8; 11]),
            Err(CodecError::TruncatedHeader(11))
        );
        assert_eq!(
            decode_header(&[0u8; 13]),
            Err(CodecError::TruncatedHeader(13))
        );
        assert_eq!(
            decode_packet(&[0u8; 29], 0),
            Err(CodecError::TruncatedPacket(29))
        );
    }

    #[test]
    fn rates_quantize_down_and_saturate() {
        let mut h = PacketHeader::default();
        h.piggyback.sched_rate = Rate::from_pps(5.9);
        h.piggyback.service_rate = Rate::from_pps(10_000.0);
        let back = decode_header(&encode_header(&h).unwrap()).unwrap();
        assert_eq!(back.piggyback.sched_rate, Rate::from_int(4));
        assert_eq!(back.piggyback.service_rate, Rate::from_int(510));
        assert_eq!(back.piggyback, h.piggyback.quantized());
    }

    #[test]
    fn packet_is_thirty_bytes() {
        let p = Packet::new(PacketHeader::default(), 0);
        let bytes = p.to_bytes().unwrap();
        assert_eq!(bytes.len(), 30);
        assert_eq!(p.payload_size + HEADER_LEN, 30);
        assert_eq!(decode_packet(&bytes, 0).unwrap(), p);
    }
}
