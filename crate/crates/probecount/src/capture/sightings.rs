//! The sightings CSV format.
//!
//! Header: `instant,mac,rssi,sensor_id[,is_local_admin]`. The `mac` column
//! carries either a raw colon-separated MAC (hashed on ingest, which
//! requires a salt) or a 32-hex-char pre-hashed device id (passed through,
//! `is_local_admin` read from the optional column, defaulting false).
//! Invalid rows are collected into a rejects report with line numbers; a
//! missing required column is fatal.

use std::io::{Read, Write};

use super::{anonymize_mac, DeviceId, Sighting};
use crate::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("missing required column {0:?} in sightings header")]
    MissingColumn(&'static str),
    #[error("sightings file has no header row")]
    EmptyFile,
    #[error("refusing to hash raw MAC addresses without a salt (line {line})")]
    UnsaltedRawMac { line: u64 },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// A row that failed validation, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedRow {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct SightingsIngest {
    /// Accepted rows, sorted by (sensor_id, instant).
    pub sightings: Vec<Sighting>,
    pub rejects: Vec<RejectedRow>,
}

struct Columns {
    instant: usize,
    mac: usize,
    rssi: usize,
    sensor_id: usize,
    is_local_admin: Option<usize>,
}

fn find_columns(header: &csv::StringRecord) -> Result<Columns, IngestError> {
    let index_of = |name: &'static str| -> Result<usize, IngestError> {
        header
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or(IngestError::MissingColumn(name))
    };
    Ok(Columns {
        instant: index_of("instant")?,
        mac: index_of("mac")?,
        rssi: index_of("rssi")?,
        sensor_id: index_of("sensor_id")?,
        is_local_admin: header
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case("is_local_admin")),
    })
}

fn parse_bool(text: &str) -> Option<bool> {
    match text.trim() {
        "true" | "1" => Some(true),
        "false" | "0" | "" => Some(false),
        _ => None,
    }
}

/// Parses a raw `aa:bb:cc:dd:ee:ff` MAC (also accepts `-` separators).
fn parse_raw_mac(text: &str) -> Option<[u8; 6]> {
    let mut out = [0u8; 6];
    let mut parts = text.split(|c| c == ':' || c == '-');
    for slot in out.iter_mut() {
        let part = parts.next()?;
        if part.len() != 2 {
            return None;
        }
        *slot = u8::from_str_radix(part, 16).ok()?;
    }
    if parts.next().is_some() {
        return None;
    }
    Some(out)
}

/// Ingests a sightings CSV. `salt` is required only when the file contains
/// raw MAC rows; fully pre-hashed files ingest without one.
pub fn ingest_sightings_csv<R: Read>(
    reader: R,
    salt: Option<&[u8]>,
) -> Result<SightingsIngest, IngestError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header = match csv_reader.headers() {
        Ok(h) if !h.is_empty() && !(h.len() == 1 && h[0].is_empty()) => h.clone(),
        _ => return Err(IngestError::EmptyFile),
    };
    let cols = find_columns(&header)?;

    let mut out = SightingsIngest::default();
    // Header is line 1; records start at line 2.
    let mut line: u64 = 1;
    for record in csv_reader.records() {
        line += 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                out.rejects.push(RejectedRow {
                    line,
                    reason: format!("unparsable row: {e}"),
                });
                continue;
            }
        };
        match ingest_record(&record, &cols, salt, line) {
            Ok(sighting) => out.sightings.push(sighting),
            Err(RowOutcome::Reject(reason)) => out.rejects.push(RejectedRow { line, reason }),
            Err(RowOutcome::Fatal(e)) => return Err(e),
        }
    }

    out.sightings
        .sort_by(|a, b| (&a.sensor_id, a.instant).cmp(&(&b.sensor_id, b.instant)));
    Ok(out)
}

enum RowOutcome {
    Reject(String),
    Fatal(IngestError),
}

fn ingest_record(
    record: &csv::StringRecord,
    cols: &Columns,
    salt: Option<&[u8]>,
    line: u64,
) -> Result<Sighting, RowOutcome> {
    let field = |idx: usize, name: &str| -> Result<&str, RowOutcome> {
        record
            .get(idx)
            .ok_or_else(|| RowOutcome::Reject(format!("missing {name} field")))
    };

    let instant = Instant::parse(field(cols.instant, "instant")?)
        .map_err(|e| RowOutcome::Reject(e.to_string()))?;

    let rssi_text = field(cols.rssi, "rssi")?;
    let rssi: i32 = rssi_text
        .parse()
        .map_err(|_| RowOutcome::Reject(format!("unparsable rssi {rssi_text:?}")))?;
    if !(-128..=0).contains(&rssi) {
        return Err(RowOutcome::Reject(format!(
            "rssi {rssi} out of [-128, 0]"
        )));
    }

    let sensor_id = field(cols.sensor_id, "sensor_id")?;
    if sensor_id.is_empty() {
        return Err(RowOutcome::Reject("empty sensor_id".to_string()));
    }

    let mac_text = field(cols.mac, "mac")?;
    let (device_id, is_local_admin) = if let Some(id) = DeviceId::from_hex(mac_text) {
        let local = match cols.is_local_admin {
            Some(idx) => parse_bool(record.get(idx).unwrap_or(""))
                .ok_or_else(|| RowOutcome::Reject("unparsable is_local_admin".to_string()))?,
            None => false,
        };
        (id, local)
    } else if let Some(mac) = parse_raw_mac(mac_text) {
        let salt = match salt {
            Some(s) if !s.is_empty() => s,
            _ => return Err(RowOutcome::Fatal(IngestError::UnsaltedRawMac { line })),
        };
        anonymize_mac(&mac, salt).map_err(|e| RowOutcome::Fatal(match e {
            super::AnonymizeError::EmptySalt => IngestError::UnsaltedRawMac { line },
        }))?
    } else {
        return Err(RowOutcome::Reject(format!(
            "mac field {mac_text:?} is neither a raw MAC nor a 32-hex device id"
        )));
    };

    Ok(Sighting {
        instant,
        device_id,
        is_local_admin,
        rssi_dbm: rssi as i8,
        sensor_id: sensor_id.to_string(),
    })
}

/// Writes sightings in the same CSV dialect the ingester reads (pre-hashed
/// ids, explicit `is_local_admin` column).
pub fn write_sightings_csv<W: Write>(writer: W, sightings: &[Sighting]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(writer);
    writeln!(w, "instant,mac,rssi,sensor_id,is_local_admin")?;
    for s in sightings {
        writeln!(
            w,
            "{},{},{},{},{}",
            s.instant.to_iso8601(),
            s.device_id.to_hex(),
            s.rssi_dbm,
            s.sensor_id,
            s.is_local_admin
        )?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SALT: &[u8] = b"test-salt";

    #[test]
    fn ingests_and_sorts_valid_rows() {
        let text = "instant,mac,rssi,sensor_id\n\
                    2024-03-01T08:00:02.000Z,aa:bb:cc:dd:ee:ff,-60,bus07\n\
                    2024-03-01T08:00:01.000Z,aa:bb:cc:dd:ee:01,-70,bus07\n\
                    1709280000000,aa:bb:cc:dd:ee:02,-80,bus01\n";
        let got = ingest_sightings_csv(text.as_bytes(), Some(SALT)).unwrap();
        assert_eq!(got.sightings.len(), 3);
        assert!(got.rejects.is_empty());
        assert_eq!(got.sightings[0].sensor_id, "bus01");
        assert!(got.sightings[1].instant < got.sightings[2].instant);
    }

    #[test]
    fn positive_rssi_is_rejected_with_line_number() {
        let text = "instant,mac,rssi,sensor_id\n\
                    2024-03-01T08:00:00.000Z,aa:bb:cc:dd:ee:ff,+10,bus07\n";
        let got = ingest_sightings_csv(text.as_bytes(), Some(SALT)).unwrap();
        assert!(got.sightings.is_empty());
        assert_eq!(got.rejects.len(), 1);
        assert_eq!(got.rejects[0].line, 2);
    }

    #[test]
    fn missing_column_is_fatal() {
        let text = "instant,mac,sensor_id\n2024-03-01T08:00:00Z,aa:bb:cc:dd:ee:ff,bus07\n";
        match ingest_sightings_csv(text.as_bytes(), Some(SALT)) {
            Err(IngestError::MissingColumn("rssi")) => {}
            other => panic!("expected missing rssi column, got {other:?}"),
        }
    }

    #[test]
    fn raw_and_prehashed_agree() {
        let raw = "instant,mac,rssi,sensor_id\n\
                   2024-03-01T08:00:00.000Z,da:a1:19:00:00:01,-55,bus07\n\
                   2024-03-01T08:00:01.000Z,00:11:22:33:44:55,-65,bus07\n";
        let first = ingest_sightings_csv(raw.as_bytes(), Some(SALT)).unwrap();

        let mut dumped = Vec::new();
        write_sightings_csv(&mut dumped, &first.sightings).unwrap();
        // Re-ingest the pre-hashed dump without a salt.
        let second = ingest_sightings_csv(&dumped[..], None).unwrap();

        let ids = |v: &[Sighting]| {
            let mut ids: Vec<_> = v.iter().map(|s| s.device_id).collect();
            ids.sort();
            ids
        };
        assert_eq!(ids(&first.sightings), ids(&second.sightings));
        assert_eq!(
            first.sightings.iter().map(|s| s.is_local_admin).collect::<Vec<_>>(),
            second.sightings.iter().map(|s| s.is_local_admin).collect::<Vec<_>>(),
        );
    }

    #[test]
    fn raw_mac_without_salt_is_fatal() {
        let text = "instant,mac,rssi,sensor_id\n2024-03-01T08:00:00Z,aa:bb:cc:dd:ee:ff,-60,bus07\n";
        assert!(matches!(
            ingest_sightings_csv(text.as_bytes(), None),
            Err(IngestError::UnsaltedRawMac { line: 2 })
        ));
    }

    #[test]
    fn bad_mac_is_a_row_reject() {
        let text = "instant,mac,rssi,sensor_id\n2024-03-01T08:00:00Z,not-a-mac,-60,bus07\n";
        let got = ingest_sightings_csv(text.as_bytes(), Some(SALT)).unwrap();
        assert_eq!(got.rejects.len(), 1);
    }
}
