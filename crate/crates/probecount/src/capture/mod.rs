//! Capture ingestion: pcap/radiotap decoding, 802.11 probe-request
//! extraction, MAC anonymization, and the sightings CSV format.
//!
//! Raw MAC addresses exist only inside this module, between frame decoding
//! and [`anonymize_mac`]. Everything downstream sees a salted 16-byte digest.

mod anon;
mod frame;
pub mod pcap;
pub mod radiotap;
mod sightings;

pub use anon::{anonymize_mac, AnonymizeError, DeviceId};
pub use frame::{
    decode_probe_request, format_mac, probe_request_frame, ProbeDecode, ProbeRecord,
};
pub use sightings::{
    ingest_sightings_csv, write_sightings_csv, IngestError, RejectedRow, SightingsIngest,
};

use crate::time::Instant;

/// One captured 802.11 frame, radiotap already stripped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapturedFrame {
    /// Capture timestamp, microseconds since the Unix epoch (UTC).
    pub capture_micros: i64,
    /// Antenna signal in dBm from the radiotap header, when the link type
    /// carried one. Always within `[-128, 0]`.
    pub rssi_dbm: Option<i8>,
    /// The 802.11 MAC frame. At least 10 bytes (frame control through addr1).
    pub frame_bytes: Vec<u8>,
}

/// One anonymized probe-request detection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sighting {
    /// Detection instant, millisecond resolution.
    pub instant: Instant,
    /// Salted digest of the transmitter MAC. Deterministic per (MAC, salt).
    pub device_id: DeviceId,
    /// U/L bit of the original MAC's first octet (locally administered).
    pub is_local_admin: bool,
    /// Received signal strength in dBm, in `[-128, 0]`. Captures without a
    /// radiotap header record the sentinel -128 (weakest bucket).
    pub rssi_dbm: i8,
    /// Vehicle identifier of the capturing sensor.
    pub sensor_id: String,
}

use serde::{Deserialize, Serialize};

/// RSSI sentinel recorded when the capture carried no signal field. Such
/// sightings survive only the no-filter threshold (-128).
pub const RSSI_ABSENT: i8 = -128;

impl Sighting {
    /// Builds a sighting from a decoded probe record, hashing the MAC.
    pub fn from_probe(
        probe: &ProbeRecord,
        salt: &[u8],
        sensor_id: &str,
    ) -> Result<Self, AnonymizeError> {
        let (device_id, is_local_admin) = anonymize_mac(&probe.source_mac, salt)?;
        Ok(Sighting {
            instant: Instant::from_micros(probe.capture_micros),
            device_id,
            is_local_admin,
            rssi_dbm: probe.rssi_dbm.unwrap_or(RSSI_ABSENT),
            sensor_id: sensor_id.to_string(),
        })
    }
}
