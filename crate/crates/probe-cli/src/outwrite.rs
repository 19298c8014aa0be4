//! Output helpers: directory creation, sanitized file names, and the
//! optional generated-at header.

use std::path::{Path, PathBuf};

use crate::CliError;

pub struct OutputWriter {
    root: PathBuf,
    timestamps: bool,
    stamp: String,
}

impl OutputWriter {
    pub fn new(root: &Path, timestamps: bool) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", root.display())))?;
        Ok(OutputWriter {
            root: root.to_path_buf(),
            timestamps,
            stamp: probecount::Instant::from_millis(now_millis()).to_iso8601(),
        })
    }

    /// Writes a text file under the output root, creating subdirectories.
    /// CSV and SVG files get a generated-at header unless suppressed.
    pub fn write(&self, relative: &str, contents: &str) -> Result<(), CliError> {
        let path = self.root.join(relative);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", parent.display())))?;
        }
        let mut text = String::new();
        if self.timestamps {
            if relative.ends_with(".csv") {
                text.push_str(&format!("# generated-at: {}\n", self.stamp));
            } else if relative.ends_with(".svg") {
                text.push_str(&format!("<!-- generated-at: {} -->\n", self.stamp));
            }
        }
        text.push_str(contents);
        std::fs::write(&path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
    }
}

fn now_millis() -> i64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as i64)
        .unwrap_or(0)
}

/// Makes a trip/route id safe as a file-name component.
pub fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
