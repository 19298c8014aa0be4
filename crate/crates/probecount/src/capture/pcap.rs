//! Classic pcap reader and fixture writer.
//!
//! Supports both byte orders of the microsecond magic (0xa1b2c3d4 /
//! 0xd4c3b2a1) and the nanosecond variants (0xa1b23c4d / 0x4d3cb2a1), and
//! link types 127 (radiotap + 802.11) and 105 (bare 802.11). Parsing is
//! streaming: records are length-prefixed, so a stream is consumed
//! sequentially and each complete record yields one [`CapturedFrame`].
//!
//! Records that are complete at the pcap layer but undecodable inside
//! (broken radiotap, frame shorter than 10 bytes after stripping) are
//! skipped and tallied, never fatal.

use std::io::Read;

use super::{radiotap, CapturedFrame};

pub const LINKTYPE_IEEE802_11_RADIOTAP: u32 = 127;
pub const LINKTYPE_IEEE802_11: u32 = 105;

/// Shortest 802.11 frame worth emitting: frame control + duration + addr1.
pub const MIN_FRAME_LEN: usize = 10;

/// Upper bound on a single record's captured length. Real monitor-mode
/// captures sit far below this; anything larger is treated as corruption
/// rather than an allocation request.
pub const MAX_RECORD_LEN: usize = 1 << 24;

const MAGIC_MICROS: u32 = 0xa1b2_c3d4;
const MAGIC_NANOS: u32 = 0xa1b2_3c4d;

#[derive(Debug, thiserror::Error)]
pub enum PcapError {
    #[error("truncated global header at offset {offset}: got {got} of 24 bytes")]
    TruncatedHeader { offset: usize, got: usize },
    #[error("bad magic 0x{magic:08x} at offset 0")]
    BadMagic { magic: u32 },
    #[error("unknown link type {0} (expected 127 radiotap or 105 bare 802.11)")]
    UnknownLinkType(u32),
    #[error("truncated record header at offset {offset}: got {got} of 16 bytes")]
    TruncatedRecordHeader { offset: usize, got: usize },
    #[error("truncated record body at offset {offset}: got {got} of {want} bytes")]
    TruncatedRecordBody { offset: usize, got: usize, want: usize },
    #[error("record length {len} at offset {offset} exceeds the {max}-byte cap")]
    OversizedRecord { offset: usize, len: usize, max: usize },
    #[error("i/o error at offset {offset}: {source}")]
    Io {
        offset: usize,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TimeUnit {
    Micros,
    Nanos,
}

/// Streaming pcap parser. Iterates `Result<CapturedFrame, PcapError>`;
/// after the first `Err` the stream is exhausted.
#[derive(Debug)]
pub struct PcapStream<R: Read> {
    reader: R,
    swapped: bool,
    unit: TimeUnit,
    link_type: u32,
    offset: usize,
    malformed: u64,
    done: bool,
}

/// Opens a pcap stream, validating the 24-byte global header.
pub fn parse_pcap_stream<R: Read>(mut reader: R) -> Result<PcapStream<R>, PcapError> {
    let mut header = [0u8; 24];
    read_fully(&mut reader, &mut header, 0)
        .map_err(|e| match e {
            ShortRead::Eof(got) => PcapError::TruncatedHeader { offset: 0, got },
            ShortRead::Io(source) => PcapError::Io { offset: 0, source },
        })?;

    let raw_magic = u32::from_le_bytes([header[0], header[1], header[2], header[3]]);
    let (swapped, unit) = match raw_magic {
        MAGIC_MICROS => (false, TimeUnit::Micros),
        MAGIC_NANOS => (false, TimeUnit::Nanos),
        m if m.swap_bytes() == MAGIC_MICROS => (true, TimeUnit::Micros),
        m if m.swap_bytes() == MAGIC_NANOS => (true, TimeUnit::Nanos),
        m => return Err(PcapError::BadMagic { magic: m }),
    };

    let u32_at = |bytes: &[u8; 24], at: usize| {
        let word = u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]]);
        if swapped {
            word.swap_bytes()
        } else {
            word
        }
    };

    let link_type = u32_at(&header, 20);
    if link_type != LINKTYPE_IEEE802_11_RADIOTAP && link_type != LINKTYPE_IEEE802_11 {
        return Err(PcapError::UnknownLinkType(link_type));
    }

    Ok(PcapStream {
        reader,
        swapped,
        unit,
        link_type,
        offset: 24,
        malformed: 0,
        done: false,
    })
}

impl<R: Read> PcapStream<R> {
    pub fn link_type(&self) -> u32 {
        self.link_type
    }

    /// Records skipped because their payload could not be decoded (bad
    /// radiotap, frame under 10 bytes).
    pub fn malformed_count(&self) -> u64 {
        self.malformed
    }

    fn read_u32(&self, bytes: &[u8], at: usize) -> u32 {
        let word = u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]]);
        if self.swapped {
            word.swap_bytes()
        } else {
            word
        }
    }

    /// Reads the next record; `Ok(None)` is clean end-of-stream.
    fn next_record(&mut self) -> Result<Option<CapturedFrame>, PcapError> {
        loop {
            let mut rec_header = [0u8; 16];
            let n = match read_fully_or_eof(&mut self.reader, &mut rec_header) {
                Ok(n) => n,
                Err(source) => {
                    return Err(PcapError::Io {
                        offset: self.offset,
                        source,
                    })
                }
            };
            if n == 0 {
                return Ok(None);
            }
            if n < 16 {
                return Err(PcapError::TruncatedRecordHeader {
                    offset: self.offset,
                    got: n,
                });
            }

            let ts_sec = self.read_u32(&rec_header, 0) as i64;
            let ts_frac = self.read_u32(&rec_header, 4) as i64;
            let incl_len = self.read_u32(&rec_header, 8) as usize;
            if incl_len > MAX_RECORD_LEN {
                return Err(PcapError::OversizedRecord {
                    offset: self.offset,
                    len: incl_len,
                    max: MAX_RECORD_LEN,
                });
            }

            let body_offset = self.offset + 16;
            let mut body = vec![0u8; incl_len];
            read_fully(&mut self.reader, &mut body, body_offset).map_err(|e| match e {
                ShortRead::Eof(got) => PcapError::TruncatedRecordBody {
                    offset: body_offset,
                    got,
                    want: incl_len,
                },
                ShortRead::Io(source) => PcapError::Io {
                    offset: body_offset,
                    source,
                },
            })?;
            self.offset = body_offset + incl_len;

            let capture_micros = match self.unit {
                TimeUnit::Micros => ts_sec * 1_000_000 + ts_frac,
                TimeUnit::Nanos => ts_sec * 1_000_000 + ts_frac / 1000,
            };

            let (rssi_dbm, frame_bytes) = match self.link_type {
                LINKTYPE_IEEE802_11_RADIOTAP => match radiotap::parse(&body) {
                    Ok(rt) => (rt.antenna_signal_dbm, body[rt.header_len..].to_vec()),
                    Err(_) => {
                        self.malformed += 1;
                        continue;
                    }
                },
                _ => (None, body),
            };

            if frame_bytes.len() < MIN_FRAME_LEN {
                self.malformed += 1;
                continue;
            }

            return Ok(Some(CapturedFrame {
                capture_micros,
                rssi_dbm,
                frame_bytes,
            }));
        }
    }
}

impl<R: Read> Iterator for PcapStream<R> {
    type Item = Result<CapturedFrame, PcapError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.next_record() {
            Ok(Some(frame)) => Some(Ok(frame)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

enum ShortRead {
    Eof(usize),
    Io(std::io::Error),
}

fn read_fully<R: Read>(reader: &mut R, buf: &mut [u8], _offset: usize) -> Result<(), ShortRead> {
    match read_fully_or_eof(reader, buf) {
        Ok(n) if n == buf.len() => Ok(()),
        Ok(n) => Err(ShortRead::Eof(n)),
        Err(e) => Err(ShortRead::Io(e)),
    }
}

/// Reads until `buf` is full or EOF; returns bytes read.
fn read_fully_or_eof<R: Read>(reader: &mut R, buf: &mut [u8]) -> Result<usize, std::io::Error> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

/// Fixture writer: serializes frames into a classic little-endian
/// microsecond pcap. With `radiotap_link` the frames are wrapped in a
/// signal-only radiotap header (link type 127), otherwise written bare
/// (link type 105).
pub struct PcapWriter {
    buf: Vec<u8>,
    radiotap_link: bool,
}

impl PcapWriter {
    pub fn new(radiotap_link: bool) -> Self {
        let mut buf = Vec::new();
        buf.extend_from_slice(&MAGIC_MICROS.to_le_bytes());
        buf.extend_from_slice(&2u16.to_le_bytes()); // version major
        buf.extend_from_slice(&4u16.to_le_bytes()); // version minor
        buf.extend_from_slice(&0i32.to_le_bytes()); // thiszone
        buf.extend_from_slice(&0u32.to_le_bytes()); // sigfigs
        buf.extend_from_slice(&65535u32.to_le_bytes()); // snaplen
        let link = if radiotap_link {
            LINKTYPE_IEEE802_11_RADIOTAP
        } else {
            LINKTYPE_IEEE802_11
        };
        buf.extend_from_slice(&link.to_le_bytes());
        PcapWriter { buf, radiotap_link }
    }

    pub fn push_frame(&mut self, capture_micros: i64, rssi_dbm: i8, frame: &[u8]) {
        let body = if self.radiotap_link {
            let mut b = radiotap::write_signal_only(rssi_dbm);
            b.extend_from_slice(frame);
            b
        } else {
            frame.to_vec()
        };
        let secs = capture_micros.div_euclid(1_000_000);
        let micros = capture_micros.rem_euclid(1_000_000);
        self.buf.extend_from_slice(&(secs as u32).to_le_bytes());
        self.buf.extend_from_slice(&(micros as u32).to_le_bytes());
        self.buf.extend_from_slice(&(body.len() as u32).to_le_bytes());
        self.buf.extend_from_slice(&(body.len() as u32).to_le_bytes());
        self.buf.extend_from_slice(&body);
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::frame::probe_request_frame;

    #[test]
    fn header_only_yields_empty_sequence() {
        let bytes = PcapWriter::new(true).into_bytes();
        assert_eq!(bytes.len(), 24);
        let mut stream = parse_pcap_stream(&bytes[..]).unwrap();
        assert!(stream.next().is_none());
    }

    #[test]
    fn zero_magic_is_fatal() {
        let err = parse_pcap_stream(&[0u8; 24][..]).unwrap_err();
        assert!(matches!(err, PcapError::BadMagic { magic: 0 }));
    }

    #[test]
    fn unknown_link_type_names_the_type() {
        let mut bytes = PcapWriter::new(true).into_bytes();
        bytes[20..24].copy_from_slice(&1u32.to_le_bytes()); // ethernet
        let err = parse_pcap_stream(&bytes[..]).unwrap_err();
        assert!(err.to_string().contains("link type 1"));
    }

    #[test]
    fn single_radiotap_record_round_trips() {
        let frame = probe_request_frame(&[0xaa, 0xbb, 0xcc, 0xdd, 0xee, 0xff], 7);
        let mut writer = PcapWriter::new(true);
        writer.push_frame(1_709_280_900_123_456, -63, &frame);
        let bytes = writer.into_bytes();

        let mut stream = parse_pcap_stream(&bytes[..]).unwrap();
        let got = stream.next().unwrap().unwrap();
        assert_eq!(got.capture_micros, 1_709_280_900_123_456);
        assert_eq!(got.rssi_dbm, Some(-63));
        assert_eq!(got.frame_bytes, frame);
        assert!(stream.next().is_none());
        assert_eq!(stream.malformed_count(), 0);
    }

    #[test]
    fn bare_link_has_no_rssi() {
        let frame = probe_request_frame(&[2, 0, 0, 0, 0, 9], 1);
        let mut writer = PcapWriter::new(false);
        writer.push_frame(5_000_000, -50, &frame);
        let bytes = writer.into_bytes();
        let mut stream = parse_pcap_stream(&bytes[..]).unwrap();
        let got = stream.next().unwrap().unwrap();
        assert_eq!(got.rssi_dbm, None);
        assert_eq!(got.frame_bytes, frame);
    }

    #[test]
    fn big_endian_and_nanosecond_variants_parse() {
        // Hand-build a big-endian nanosecond header + one bare-802.11 record.
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&MAGIC_NANOS.to_be_bytes());
        bytes.extend_from_slice(&2u16.to_be_bytes());
        bytes.extend_from_slice(&4u16.to_be_bytes());
        bytes.extend_from_slice(&[0; 8]);
        bytes.extend_from_slice(&65535u32.to_be_bytes());
        bytes.extend_from_slice(&LINKTYPE_IEEE802_11.to_be_bytes());
        let frame = probe_request_frame(&[1, 2, 3, 4, 5, 6], 42);
        bytes.extend_from_slice(&3u32.to_be_bytes()); // ts_sec
        bytes.extend_from_slice(&500_000_999u32.to_be_bytes()); // ts_nsec
        bytes.extend_from_slice(&(frame.len() as u32).to_be_bytes());
        bytes.extend_from_slice(&(frame.len() as u32).to_be_bytes());
        bytes.extend_from_slice(&frame);

        let mut stream = parse_pcap_stream(&bytes[..]).unwrap();
        let got = stream.next().unwrap().unwrap();
        assert_eq!(got.capture_micros, 3_500_000); // ns truncated to µs
        assert!(stream.next().is_none());
    }

    #[test]
    fn all_four_magic_variants_are_accepted() {
        // (magic bytes as written, nanosecond?, big-endian?)
        let cases = [
            ([0xd4, 0xc3, 0xb2, 0xa1], false, false),
            ([0xa1, 0xb2, 0xc3, 0xd4], false, true),
            ([0x4d, 0x3c, 0xb2, 0xa1], true, false),
            ([0xa1, 0xb2, 0x3c, 0x4d], true, true),
        ];
        for (magic, nanos, big_endian) in cases {
            let mut header = vec![0u8; 24];
            header[..4].copy_from_slice(&magic);
            let link = LINKTYPE_IEEE802_11_RADIOTAP;
            header[20..24].copy_from_slice(&if big_endian {
                link.to_be_bytes()
            } else {
                link.to_le_bytes()
            });
            let stream = parse_pcap_stream(&header[..])
                .unwrap_or_else(|e| panic!("magic {magic:02x?}: {e}"));
            assert_eq!(stream.unit == TimeUnit::Nanos, nanos, "magic {magic:02x?}");
            assert_eq!(stream.swapped, big_endian, "magic {magic:02x?}");
        }
    }

    #[test]
    fn truncated_record_errors_after_prior_frames() {
        let frame = probe_request_frame(&[1, 2, 3, 4, 5, 6], 0);
        let mut writer = PcapWriter::new(true);
        writer.push_frame(1_000_000, -40, &frame);
        writer.push_frame(2_000_000, -41, &frame);
        let mut bytes = writer.into_bytes();
        bytes.truncate(bytes.len() - 5); // cut into the second record body

        let mut stream = parse_pcap_stream(&bytes[..]).unwrap();
        assert!(stream.next().unwrap().is_ok());
        let err = stream.next().unwrap().unwrap_err();
        assert!(matches!(err, PcapError::TruncatedRecordBody { .. }));
        assert!(stream.next().is_none());
    }

    #[test]
    fn short_or_garbled_payloads_are_tallied_not_fatal() {
        let mut writer = PcapWriter::new(true);
        writer.push_frame(1_000_000, -40, &probe_request_frame(&[1, 2, 3, 4, 5, 6], 0));
        let mut bytes = writer.into_bytes();
        // Append a record whose body is too short to be a radiotap header.
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&0u32.to_le_bytes());
        bytes.extend_from_slice(&3u32.to_le_bytes());
        bytes.extend_from_slice(&3u32.to_le_bytes());
        bytes.extend_from_slice(&[0, 0, 0]);

        let mut stream = parse_pcap_stream(&bytes[..]).unwrap();
        assert!(stream.next().unwrap().is_ok());
        assert!(stream.next().is_none());
        assert_eq!(stream.malformed_count(), 1);
    }
}
