//! Atomic file output. Files are staged next to their destination and
//! renamed into place, so a failed run never leaves a partial file.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use tempus_core::Error;

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub struct OutputDir {
    dir: PathBuf,
    timestamp: Option<u64>,
}

impl OutputDir {
    pub fn create(dir: &Path, timestamp: bool) -> Result<Self, Error> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Resource(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            timestamp: timestamp.then(unix_now),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write_atomic(&self, name: &str, contents: &[u8]) -> Result<PathBuf, Error> {
        let dest = self.path(name);
        let io = |e: std::io::Error| Error::Resource(format!("cannot write {}: {e}", dest.display()));
        let mut tmp = tempfile::Builder::new()
            .prefix(&format!(".{name}."))
            .suffix(".tmp")
            .tempfile_in(&self.dir)
            .map_err(io)?;
        tmp.write_all(contents).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(&dest).map_err(|e| io(e.error))?;
        Ok(dest)
    }

    /// Writes `header` then one line per row. Floats use Rust's shortest
    /// round-trip rendering.
    pub fn write_csv<I>(&self, name: &str, header: &[&str], rows: I) -> Result<PathBuf, Error>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut out = String::new();
        if let Some(ts) = self.timestamp {
            writeln!(out, "# generated_unix={ts}").unwrap();
        }
        out.push_str(&header.join(","));
        out.push('\n');
        for row in rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        self.write_atomic(name, out.as_bytes())
    }

    /// Pretty JSON, with `generated_unix` as the first key when enabled.
    pub fn write_json<T: Serialize>(&self, name: &str, body: &T) -> Result<PathBuf, Error> {
        #[derive(Serialize)]
        struct Stamped<'a, T> {
            #[serde(skip_serializing_if = "Option::is_none")]
            generated_unix: Option<u64>,
            #[serde(flatten)]
            body: &'a T,
        }
        let mut text = serde_json::to_string_pretty(&Stamped {
            generated_unix: self.timestamp,
            body,
        })
        .map_err(|e| Error::Resource(format!("cannot serialize {name}: {e}")))?;
        text.push('\n');
        self.write_atomic(name, text.as_bytes())
    }
}
