//! JSON-lines sidecar files.
//!
//! Stage outputs are appended one complete line per write. A process killed
//! mid-write leaves at most one torn line at the end; [`open_sidecar`] cuts
//! it off before appending again.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::ServiceError;

fn parse_lines<T: DeserializeOwned>(path: &Path, text: &str) -> Result<Vec<T>, ServiceError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ServiceError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, ServiceError> {
    let text = fs::read_to_string(path).map_err(|e| ServiceError::io(path, e))?;
    parse_lines(path, &text)
}

/// Like [`read_jsonl`], but a missing file names the stage that creates it.
pub fn read_stage_output<T: DeserializeOwned>(
    path: &Path,
    stage: &'static str,
) -> Result<Vec<T>, ServiceError> {
    if !path.exists() {
        return Err(ServiceError::MissingInput {
            path: path.to_path_buf(),
            stage,
        });
    }
    read_jsonl(path)
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("serializable"));
        out.push('\n');
    }
    out
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ServiceError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| ServiceError::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let result = (|| {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| ServiceError::io(path, e))
}

/// Append-only JSON-lines writer.
pub struct Sidecar {
    path: PathBuf,
    file: File,
}

impl Sidecar {
    pub fn append<T: Serialize>(&mut self, item: &T) -> Result<(), ServiceError> {
        let mut line = serde_json::to_vec(item).expect("serializable");
        line.push(b'\n');
        self.file
            .write_all(&line)
            .map_err(|e| ServiceError::io(&self.path, e))
    }

    pub fn sync(&mut self) -> Result<(), ServiceError> {
        self.file
            .sync_data()
            .map_err(|e| ServiceError::io(&self.path, e))
    }
}

/// Open a sidecar for appending and return the items already in it.
///
/// A final line that is unterminated or does not parse is treated as a torn
/// write and truncated away. A bad line followed by good ones is corruption
/// and reported as an error.
pub fn open_sidecar<T: DeserializeOwned>(path: &Path) -> Result<(Vec<T>, Sidecar), ServiceError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| ServiceError::io(parent, e))?;
    }
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(ServiceError::io(path, e)),
    };
    let mut items = Vec::new();
    let mut good_len = 0usize;
    let mut offset = 0usize;
    let mut line_no = 0usize;
    while offset < bytes.len() {
        line_no += 1;
        let end = bytes[offset..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|p| offset + p);
        let Some(end) = end else {
            tracing::warn!(path = %path.display(), line = line_no, "dropping unterminated final line");
            break;
        };
        let line = &bytes[offset..end];
        let next = end + 1;
        if line.iter().all(u8::is_ascii_whitespace) {
            offset = next;
            good_len = next;
            continue;
        }
        match serde_json::from_slice::<T>(line) {
            Ok(item) => {
                items.push(item);
                good_len = next;
            }
            Err(e) if next >= bytes.len() => {
                tracing::warn!(path = %path.display(), line = line_no, error = %e, "dropping unreadable final line");
            }
            Err(e) => {
                return Err(ServiceError::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: e.to_string(),
                })
            }
        }
        offset = next;
    }
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| ServiceError::io(path, e))?;
    if good_len < bytes.len() {
        file.set_len(good_len as u64)
            .map_err(|e| ServiceError::io(path, e))?;
    }
    Ok((
        items,
        Sidecar {
            path: path.to_path_buf(),
            file,
        },
    ))
}
