//! 802.11 management-frame decoding.
//!
//! The pipeline cares about exactly one frame class: management (type 0)
//! subtype 4, the probe request. Its transmitter address addr2 sits at
//! bytes 10..16 of the MAC header.

use super::CapturedFrame;

const TYPE_MANAGEMENT: u8 = 0;
const SUBTYPE_PROBE_REQUEST: u8 = 4;

/// Offset of addr2 (transmitter) in a management frame header.
const ADDR2_END: usize = 16;

/// A decoded, not-yet-anonymized probe request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeRecord {
    pub source_mac: [u8; 6],
    pub capture_micros: i64,
    pub rssi_dbm: Option<i8>,
}

/// Outcome of probe-request decoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProbeDecode {
    /// A management/probe-request frame with a readable addr2.
    Probe(ProbeRecord),
    /// Any other frame type or subtype.
    NotProbe,
    /// Type/subtype matched but the frame ends before addr2; callers tally
    /// these as malformed.
    Truncated,
}

impl ProbeDecode {
    pub fn record(self) -> Option<ProbeRecord> {
        match self {
            ProbeDecode::Probe(rec) => Some(rec),
            _ => None,
        }
    }
}

/// Classifies a captured frame, extracting the source MAC when it is a
/// probe request. Never panics, regardless of frame contents.
pub fn decode_probe_request(frame: &CapturedFrame) -> ProbeDecode {
    let bytes = &frame.frame_bytes;
    if bytes.is_empty() {
        return ProbeDecode::NotProbe;
    }
    let fc0 = bytes[0];
    let frame_type = (fc0 >> 2) & 0x03;
    let subtype = (fc0 >> 4) & 0x0f;
    if frame_type != TYPE_MANAGEMENT || subtype != SUBTYPE_PROBE_REQUEST {
        return ProbeDecode::NotProbe;
    }
    if bytes.len() < ADDR2_END {
        return ProbeDecode::Truncated;
    }
    let mut source_mac = [0u8; 6];
    source_mac.copy_from_slice(&bytes[10..16]);
    ProbeDecode::Probe(ProbeRecord {
        source_mac,
        capture_micros: frame.capture_micros,
        rssi_dbm: frame.rssi_dbm,
    })
}

/// Builds a minimal, well-formed probe-request frame: 24-byte management
/// header (addr1 broadcast, addr3 broadcast) plus an empty wildcard SSID
/// element. Used by fixtures and the simulator's pcap emitter.
pub fn probe_request_frame(source_mac: &[u8; 6], seq: u16) -> Vec<u8> {
    let mut frame = Vec::with_capacity(26);
    frame.push(SUBTYPE_PROBE_REQUEST << 4); // fc0: version 0, type 0, subtype 4
    frame.push(0x00); // fc1
    frame.extend_from_slice(&0u16.to_le_bytes()); // duration
    frame.extend_from_slice(&[0xff; 6]); // addr1: broadcast
    frame.extend_from_slice(source_mac); // addr2: transmitter
    frame.extend_from_slice(&[0xff; 6]); // addr3: BSSID wildcard
    frame.extend_from_slice(&(seq << 4).to_le_bytes()); // sequence control
    frame.extend_from_slice(&[0x00, 0x00]); // SSID element, zero length
    frame
}

pub fn format_mac(mac: &[u8; 6]) -> String {
    format!(
        "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}",
        mac[0], mac[1], mac[2], mac[3], mac[4], mac[5]
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame_of(bytes: Vec<u8>) -> CapturedFrame {
        CapturedFrame {
            capture_micros: 1_000_000,
            rssi_dbm: Some(-60),
            frame_bytes: bytes,
        }
    }

    #[test]
    fn probe_request_yields_addr2() {
        let mac = [0xaa, 0xbb, 0xcc, 0xdd, 0xee, 0xff];
        let decoded = decode_probe_request(&frame_of(probe_request_frame(&mac, 1)));
        match decoded {
            ProbeDecode::Probe(rec) => {
                assert_eq!(rec.source_mac, mac);
                assert_eq!(rec.rssi_dbm, Some(-60));
                assert_eq!(rec.capture_micros, 1_000_000);
            }
            other => panic!("expected probe, got {other:?}"),
        }
    }

    #[test]
    fn beacon_is_not_a_probe() {
        let mac = [1, 2, 3, 4, 5, 6];
        let mut beacon = probe_request_frame(&mac, 1);
        beacon[0] = 8 << 4; // subtype 8: beacon
        assert_eq!(decode_probe_request(&frame_of(beacon)), ProbeDecode::NotProbe);
    }

    #[test]
    fn truncated_probe_request_is_flagged() {
        let mut short = probe_request_frame(&[1, 2, 3, 4, 5, 6], 1);
        short.truncate(12);
        assert_eq!(decode_probe_request(&frame_of(short)), ProbeDecode::Truncated);
    }

    #[test]
    fn filter_is_sound_over_all_type_subtype_combinations() {
        // 4 types x 16 subtypes on a minimal 16-byte frame: only (0, 4)
        // may produce a record.
        for frame_type in 0u8..4 {
            for subtype in 0u8..16 {
                let fc0 = (frame_type << 2) | (subtype << 4);
                let mut bytes = vec![0u8; 16];
                bytes[0] = fc0;
                let decoded = decode_probe_request(&frame_of(bytes));
                if frame_type == TYPE_MANAGEMENT && subtype == SUBTYPE_PROBE_REQUEST {
                    assert!(matches!(decoded, ProbeDecode::Probe(_)));
                } else {
                    assert_eq!(decoded, ProbeDecode::NotProbe, "type {frame_type} subtype {subtype}");
                }
            }
        }
    }

    #[test]
    fn formats_mac_lowercase() {
        assert_eq!(format_mac(&[0xda, 0xa1, 0x19, 0, 0, 1]), "da:a1:19:00:00:01");
    }
}
