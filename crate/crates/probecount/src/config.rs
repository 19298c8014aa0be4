//! Flat `key = value` configuration files.
//!
//! One assignment per line, `#` starts a comment, blank lines ignored.
//! Shared by the scenario config and the CLI's pipeline defaults.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KvEntry {
    pub key: String,
    pub value: String,
    /// 1-based line number, for field-level error messages.
    pub line: u64,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigParseError {
    #[error("line {line}: expected key = value, got {text:?}")]
    NotAnAssignment { line: u64, text: String },
    #[error("line {line}: empty key")]
    EmptyKey { line: u64 },
}

pub fn parse_kv(text: &str) -> Result<Vec<KvEntry>, ConfigParseError> {
    let mut entries = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx as u64 + 1;
        let content = match raw_line.split_once('#') {
            Some((before, _)) => before,
            None => raw_line,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigParseError::NotAnAssignment {
                line,
                text: content.chars().take(80).collect(),
            });
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigParseError::EmptyKey { line });
        }
        entries.push(KvEntry {
            key: key.to_string(),
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(entries)
}
