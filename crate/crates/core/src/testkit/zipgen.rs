//! Minimal zip writer for building APK fixtures.

use std::io::{Read, Seek, SeekFrom, Write};
use std::ops::Range;

use flate2::write::DeflateEncoder;
use flate2::Compression;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Stored,
    Deflated,
}

#[derive(Debug, Clone)]
pub struct ZipEntry {
    pub name: String,
    pub data: Vec<u8>,
    pub method: Method,
}

impl ZipEntry {
    pub fn new(name: impl Into<String>, data: impl Into<Vec<u8>>, method: Method) -> Self {
        ZipEntry {
            name: name.into(),
            data: data.into(),
            method,
        }
    }
}

/// Write a zip archive with a central directory and an optional trailing
/// archive comment.
pub fn write_zip(entries: &[ZipEntry], comment: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    let mut central = Vec::new();
    for e in entries {
        let crc = crc32fast::hash(&e.data);
        let (method, payload) = match e.method {
            Method::Stored => (0u16, e.data.clone()),
            Method::Deflated => {
                let mut enc = DeflateEncoder::new(Vec::new(), Compression::default());
                enc.write_all(&e.data).unwrap();
                (8u16, enc.finish().unwrap())
            }
        };
        let offset = out.len() as u32;
        let name = e.name.as_bytes();

        out.extend_from_slice(&0x0403_4b50u32.to_le_bytes());
        out.extend_from_slice(&20u16.to_le_bytes()); // version needed
        out.extend_from_slice(&0u16.to_le_bytes()); // flags
        out.extend_from_slice(&method.to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes()); // time, date
        out.extend_from_slice(&crc.to_le_bytes());
        out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&(e.data.len() as u32).to_le_bytes());
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(&0u16.to_le_bytes()); // extra
        out.extend_from_slice(name);
        out.extend_from_slice(&payload);

        central.extend_from_slice(&0x0201_4b50u32.to_le_bytes());
        central.extend_from_slice(&20u16.to_le_bytes()); // version made by
        central.extend_from_slice(&20u16.to_le_bytes());
        central.extend_from_slice(&0u16.to_le_bytes());
        central.extend_from_slice(&method.to_le_bytes());
        central.extend_from_slice(&0u32.to_le_bytes());
        central.extend_from_slice(&crc.to_le_bytes());
        central.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        central.extend_from_slice(&(e.data.len() as u32).to_le_bytes());
        central.extend_from_slice(&(name.len() as u16).to_le_bytes());
        central.extend_from_slice(&[0; 12]); // extra, comment, disk, attrs
        central.extend_from_slice(&offset.to_le_bytes());
        central.extend_from_slice(name);
    }
    let cd_offset = out.len() as u32;
    out.extend_from_slice(&central);
    out.extend_from_slice(&0x0605_4b50u32.to_le_bytes());
    out.extend_from_slice(&[0; 4]);
    out.extend_from_slice(&(entries.len() as u16).to_le_bytes());
    out.extend_from_slice(&(entries.len() as u16).to_le_bytes());
    out.extend_from_slice(&(central.len() as u32).to_le_bytes());
    out.extend_from_slice(&cd_offset.to_le_bytes());
    out.extend_from_slice(&(comment.len() as u16).to_le_bytes());
    out.extend_from_slice(comment);
    out
}

/// An APK-shaped archive: manifest, resources and the given DEX files as
/// `classes.dex`, `classes2.dex`, ...
pub fn build_apk(dex_blobs: &[Vec<u8>]) -> Vec<u8> {
    let mut entries = vec![
        ZipEntry::new("AndroidManifest.xml", vec![0x03, 0x00, 0x08, 0x00, 0xaa, 0xbb], Method::Deflated),
        ZipEntry::new("res/layout/main.xml", b"<LinearLayout/>".to_vec(), Method::Stored),
    ];
    for (i, blob) in dex_blobs.iter().enumerate() {
        let name = if i == 0 {
            "classes.dex".to_string()
        } else {
            format!("classes{}.dex", i + 1)
        };
        let method = if i % 2 == 0 { Method::Deflated } else { Method::Stored };
        entries.push(ZipEntry::new(name, blob.clone(), method));
    }
    entries.push(ZipEntry::new("resources.arsc", vec![0x02; 64], Method::Stored));
    entries.push(ZipEntry::new("META-INF/CERT.SF", b"Signature-Version: 1.0\n".to_vec(), Method::Deflated));
    write_zip(&entries, b"")
}

/// Reader wrapper that records every byte range read.
#[derive(Debug)]
pub struct AccessLog<R> {
    inner: R,
    pos: u64,
    pub reads: Vec<Range<u64>>,
}

impl<R> AccessLog<R> {
    pub fn new(inner: R) -> Self {
        AccessLog {
            inner,
            pos: 0,
            reads: Vec::new(),
        }
    }

    /// True if any recorded read touched `range`.
    pub fn touched(&self, range: Range<u64>) -> bool {
        self.reads.iter().any(|r| r.start < range.end && range.start < r.end)
    }
}

impl<R: Read> Read for AccessLog<R> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        if n > 0 {
            self.reads.push(self.pos..self.pos + n as u64);
        }
        self.pos += n as u64;
        Ok(n)
    }
}

impl<R: Seek> Seek for AccessLog<R> {
    fn seek(&mut self, pos: SeekFrom) -> std::io::Result<u64> {
        self.pos = self.inner.seek(pos)?;
        Ok(self.pos)
    }
}

/// Byte range of each entry's local header plus data, by name.
pub fn entry_spans(archive: &[u8]) -> Vec<(String, Range<u64>)> {
    let mut spans = Vec::new();
    let mut at = 0usize;
    while archive.len() >= at + 30 && archive[at..at + 4] == 0x0403_4b50u32.to_le_bytes() {
        let u16_at = |o: usize| u16::from_le_bytes([archive[at + o], archive[at + o + 1]]) as usize;
        let csize = u32::from_le_bytes(archive[at + 18..at + 22].try_into().unwrap()) as usize;
        let (nlen, xlen) = (u16_at(26), u16_at(28));
        let name = String::from_utf8_lossy(&archive[at + 30..at + 30 + nlen]).into_owned();
        let end = at + 30 + nlen + xlen + csize;
        spans.push((name, at as u64..end as u64));
        at = end;
    }
    spans
}
