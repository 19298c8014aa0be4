//! Minimal radiotap header parser.
//!
//! Radiotap prepends per-packet capture metadata: an 8-byte fixed header
//! (version, pad, little-endian total length, first present bitmap) followed
//! by optional chained present words and then the field data. Fields appear
//! in bit order, each naturally aligned relative to the start of the header.
//! The pipeline consumes a single field, Antenna Signal (bit 5, one signed
//! byte of dBm); everything else is skipped by size.

/// Outcome of parsing one radiotap header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RadiotapHeader {
    /// Total header length; the 802.11 frame starts at this offset.
    pub header_len: usize,
    /// Antenna signal in dBm when present, clamped to `[-128, 0]`.
    pub antenna_signal_dbm: Option<i8>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RadiotapError {
    #[error("radiotap header truncated ({0} bytes, need at least 8)")]
    Truncated(usize),
    #[error("unsupported radiotap version {0}")]
    BadVersion(u8),
    #[error("radiotap length field {length} exceeds capture ({available} bytes)")]
    LengthOverrun { length: usize, available: usize },
    #[error("radiotap length field {0} shorter than the fixed header")]
    LengthUnderrun(usize),
}

/// (size, alignment) for present bits 0..=13; enough to walk past everything
/// that can precede Antenna Signal and a little beyond.
const FIELD_LAYOUT: [(usize, usize); 14] = [
    (8, 8), // 0 TSFT
    (1, 1), // 1 Flags
    (1, 1), // 2 Rate
    (4, 2), // 3 Channel
    (2, 1), // 4 FHSS
    (1, 1), // 5 Antenna signal (dBm)
    (1, 1), // 6 Antenna noise (dBm)
    (2, 2), // 7 Lock quality
    (2, 2), // 8 TX attenuation
    (2, 2), // 9 dB TX attenuation
    (1, 1), // 10 dBm TX power
    (1, 1), // 11 Antenna
    (1, 1), // 12 dB antenna signal
    (1, 1), // 13 dB antenna noise
];

const BIT_ANTENNA_SIGNAL: u32 = 5;
const BIT_EXT: u32 = 31;

fn align_up(offset: usize, align: usize) -> usize {
    (offset + align - 1) & !(align - 1)
}

/// Parses the radiotap header at the start of `data`, returning its length
/// and the antenna-signal field when the first present word carries one.
pub fn parse(data: &[u8]) -> Result<RadiotapHeader, RadiotapError> {
    if data.len() < 8 {
        return Err(RadiotapError::Truncated(data.len()));
    }
    let version = data[0];
    if version != 0 {
        return Err(RadiotapError::BadVersion(version));
    }
    let header_len = u16::from_le_bytes([data[2], data[3]]) as usize;
    if header_len < 8 {
        return Err(RadiotapError::LengthUnderrun(header_len));
    }
    if header_len > data.len() {
        return Err(RadiotapError::LengthOverrun {
            length: header_len,
            available: data.len(),
        });
    }

    // Walk the chain of present words; fields start after the last one.
    // Word k sits at offset 4 + 4k.
    let first_present = u32::from_le_bytes([data[4], data[5], data[6], data[7]]);
    let mut present_words = 1usize;
    let mut word = first_present;
    while word & (1 << BIT_EXT) != 0 {
        let base = 4 + present_words * 4;
        if base + 4 > header_len {
            // Chain claims another word the header has no room for.
            return Err(RadiotapError::LengthUnderrun(header_len));
        }
        word = u32::from_le_bytes([data[base], data[base + 1], data[base + 2], data[base + 3]]);
        present_words += 1;
    }

    let mut offset = 4 + present_words * 4;
    let mut signal = None;
    for (bit, (size, align)) in FIELD_LAYOUT.iter().enumerate() {
        if first_present & (1 << bit) == 0 {
            continue;
        }
        offset = align_up(offset, *align);
        if offset + size > header_len {
            break;
        }
        if bit as u32 == BIT_ANTENNA_SIGNAL {
            // dBm above 0 is not physical for a received signal; clamp.
            signal = Some((data[offset] as i8).min(0));
            break;
        }
        offset += size;
    }

    Ok(RadiotapHeader {
        header_len,
        antenna_signal_dbm: signal,
    })
}

/// Serializes a minimal radiotap header carrying only an antenna-signal
/// field. Used by the pcap fixture writer.
pub fn write_signal_only(signal_dbm: i8) -> Vec<u8> {
    let mut out = Vec::with_capacity(9);
    out.push(0); // version
    out.push(0); // pad
    out.extend_from_slice(&9u16.to_le_bytes());
    out.extend_from_slice(&(1u32 << BIT_ANTENNA_SIGNAL).to_le_bytes());
    out.push(signal_dbm as u8);
    out
}
