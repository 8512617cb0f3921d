//! Application-package ingestion: locating the DEX executables inside an
//! APK, and the textual invoke-list fixture format.

mod invoke_list;
pub mod zip;

pub use invoke_list::{format_invoke_list, load_invoke_list_text, parse_invoke_list, write_invoke_list};

use std::fs::File;
use std::io::{BufReader, Read, Seek};
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("not a zip archive: {0}")]
    NotAZipArchive(String),
    #[error("archive contains no classes.dex entry")]
    NoDexFound,
    #[error("malformed invoke-list line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The DEX executables of one application package.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApkPackage {
    pub path: PathBuf,
    /// One buffer per `classes*.dex` entry, `classes.dex` first, then
    /// `classes2.dex`, `classes3.dex`, ...
    pub dex_blobs: Vec<Vec<u8>>,
    pub total_size_bytes: u64,
}

/// Position of a DEX entry in multidex order: `classes.dex` is 1,
/// `classesN.dex` is N (N >= 2). Anything else is not a DEX entry.
pub fn dex_entry_index(name: &str) -> Option<u32> {
    let stem = name.strip_prefix("classes")?.strip_suffix(".dex")?;
    if stem.is_empty() {
        return Some(1);
    }
    if stem.starts_with('0') || !stem.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    stem.parse().ok().filter(|&n| n >= 2)
}

/// Open an APK and read every top-level `classes*.dex` entry.
pub fn open_apk(path: impl AsRef<Path>) -> Result<ApkPackage, IngestError> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let mut pkg = read_apk(BufReader::new(file))?;
    pkg.path = path.to_path_buf();
    Ok(pkg)
}

/// Like [`open_apk`] over any seekable source. Only the end record, the
/// central directory and the DEX entries are read.
pub fn read_apk<R: Read + Seek>(mut reader: R) -> Result<ApkPackage, IngestError> {
    let total_size_bytes = reader.seek(std::io::SeekFrom::End(0))?;
    let entries = zip::read_central_directory(&mut reader)?;
    let mut dex_entries: Vec<(u32, &zip::CentralEntry)> = entries
        .iter()
        .filter_map(|e| dex_entry_index(&e.name).map(|n| (n, e)))
        .collect();
    if dex_entries.is_empty() {
        return Err(IngestError::NoDexFound);
    }
    dex_entries.sort_by_key(|(n, _)| *n);
    let dex_blobs = dex_entries
        .into_iter()
        .map(|(_, e)| zip::read_entry(&mut reader, e))
        .collect::<Result<_, _>>()?;
    Ok(ApkPackage {
        path: PathBuf::new(),
        dex_blobs,
        total_size_bytes,
    })
}
