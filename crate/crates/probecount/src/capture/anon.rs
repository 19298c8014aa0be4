//! MAC anonymization.
//!
//! Device identities are the first 16 bytes of SHA-256 over `salt || mac`.
//! The salt keeps the 48-bit MAC space out of reach of rainbow lookups, so
//! running unsalted is refused outright. The U/L bit (0x02 of the first
//! octet) is captured before the address is destroyed: it marks locally
//! administered, typically randomized, addresses.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Opaque 16-byte device identity.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DeviceId(pub [u8; 16]);

impl DeviceId {
    pub fn to_hex(self) -> String {
        hex::encode(self.0)
    }

    /// Parses a 32-hex-character id, as written by the sightings CSV.
    pub fn from_hex(text: &str) -> Option<Self> {
        if text.len() != 32 {
            return None;
        }
        let bytes = hex::decode(text).ok()?;
        let mut id = [0u8; 16];
        id.copy_from_slice(&bytes);
        Some(DeviceId(id))
    }
}

impl fmt::Debug for DeviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DeviceId({})", self.to_hex())
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum AnonymizeError {
    #[error("refusing to hash MAC addresses with an empty salt")]
    EmptySalt,
}

/// Hashes a MAC into a [`DeviceId`] and reports its U/L bit.
///
/// Deterministic for a fixed (MAC, salt) pair; the raw MAC is not retained.
pub fn anonymize_mac(mac: &[u8; 6], salt: &[u8]) -> Result<(DeviceId, bool), AnonymizeError> {
    if salt.is_empty() {
        return Err(AnonymizeError::EmptySalt);
    }
    let mut hasher = Sha256::new();
    hasher.update(salt);
    hasher.update(mac);
    let digest = hasher.finalize();
    let mut id = [0u8; 16];
    id.copy_from_slice(&digest[..16]);
    Ok((DeviceId(id), mac[0] & 0x02 != 0))
}
