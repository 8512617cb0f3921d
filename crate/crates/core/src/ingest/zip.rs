//! Minimal zip reader driven by the central directory.
//!
//! Reads the end-of-central-directory record, the central directory, and
//! then only the local headers and data of the entries a caller asks for.

use std::io::{Read, Seek, SeekFrom};

use flate2::read::DeflateDecoder;

use super::IngestError;

const EOCD_SIG: u32 = 0x0605_4b50;
const CDH_SIG: u32 = 0x0201_4b50;
const LFH_SIG: u32 = 0x0403_4b50;
const EOCD_LEN: u64 = 22;
const MAX_COMMENT: u64 = 0xffff;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CentralEntry {
    pub name: String,
    pub method: u16,
    pub crc32: u32,
    pub compressed_size: u64,
    pub uncompressed_size: u64,
    pub local_header_offset: u64,
}

fn not_zip(msg: impl Into<String>) -> IngestError {
    IngestError::NotAZipArchive(msg.into())
}

fn le16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn le32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn read_at<R: Read + Seek>(r: &mut R, off: u64, len: usize) -> Result<Vec<u8>, IngestError> {
    r.seek(SeekFrom::Start(off))?;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => not_zip(format!("truncated read at offset {off}")),
        _ => IngestError::Io(e),
    })?;
    Ok(buf)
}

/// Locate the end-of-central-directory record and return the central
/// directory entries in directory order.
pub fn read_central_directory<R: Read + Seek>(r: &mut R) -> Result<Vec<CentralEntry>, IngestError> {
    let len = r.seek(SeekFrom::End(0))?;
    if len < EOCD_LEN {
        return Err(not_zip("file shorter than an end-of-central-directory record"));
    }

    // Common case first: no archive comment, the record is the last 22 bytes.
    let mut eocd_at = None;
    let tail = read_at(r, len - EOCD_LEN, EOCD_LEN as usize)?;
    if le32(&tail, 0) == EOCD_SIG && le16(&tail, 20) == 0 {
        eocd_at = Some((len - EOCD_LEN, tail));
    } else {
        let span = (EOCD_LEN + MAX_COMMENT).min(len);
        let start = len - span;
        let buf = read_at(r, start, span as usize)?;
        for i in (0..=buf.len() - EOCD_LEN as usize).rev() {
            if le32(&buf, i) == EOCD_SIG {
                let comment_len = le16(&buf, i + 20) as usize;
                if i + EOCD_LEN as usize + comment_len == buf.len() {
                    eocd_at = Some((start + i as u64, buf[i..i + 22].to_vec()));
                    break;
                }
            }
        }
    }
    let (eocd_off, eocd) = eocd_at.ok_or_else(|| not_zip("no end-of-central-directory record"))?;

    let total_entries = le16(&eocd, 10) as usize;
    let cd_size = le32(&eocd, 12) as u64;
    let cd_off = le32(&eocd, 16) as u64;
    if total_entries == 0xffff || cd_off == 0xffff_ffff || cd_size == 0xffff_ffff {
        return Err(not_zip("zip64 archives are not supported"));
    }
    if cd_off + cd_size > eocd_off {
        return Err(not_zip("central directory extends past its end record"));
    }
    let cd = read_at(r, cd_off, cd_size as usize)?;

    let mut entries = Vec::with_capacity(total_entries);
    let mut p = 0usize;
    for i in 0..total_entries {
        if p + 46 > cd.len() || le32(&cd, p) != CDH_SIG {
            return Err(not_zip(format!("central directory entry {i} truncated or corrupt")));
        }
        let flags = le16(&cd, p + 8);
        let method = le16(&cd, p + 10);
        let crc32 = le32(&cd, p + 16);
        let compressed_size = le32(&cd, p + 20) as u64;
        let uncompressed_size = le32(&cd, p + 24) as u64;
        let name_len = le16(&cd, p + 28) as usize;
        let extra_len = le16(&cd, p + 30) as usize;
        let comment_len = le16(&cd, p + 32) as usize;
        let local_header_offset = le32(&cd, p + 42) as u64;
        let name_end = p + 46 + name_len;
        if name_end > cd.len() {
            return Err(not_zip(format!("central directory entry {i} name truncated")));
        }
        let raw_name = &cd[p + 46..name_end];
        let name = if flags & 0x0800 != 0 {
            String::from_utf8_lossy(raw_name).into_owned()
        } else {
            raw_name.iter().map(|&b| b as char).collect()
        };
        entries.push(CentralEntry {
            name,
            method,
            crc32,
            compressed_size,
            uncompressed_size,
            local_header_offset,
        });
        p = name_end + extra_len + comment_len;
    }
    Ok(entries)
}

/// Read and decompress one entry's data via its local header.
pub fn read_entry<R: Read + Seek>(r: &mut R, e: &CentralEntry) -> Result<Vec<u8>, IngestError> {
    let lfh = read_at(r, e.local_header_offset, 30)?;
    if le32(&lfh, 0) != LFH_SIG {
        return Err(not_zip(format!("bad local header for {}", e.name)));
    }
    let data_off = e.local_header_offset + 30 + le16(&lfh, 26) as u64 + le16(&lfh, 28) as u64;
    let raw = read_at(r, data_off, e.compressed_size as usize)?;
    let data = match e.method {
        0 => raw,
        8 => {
            let mut out = Vec::with_capacity(e.uncompressed_size as usize);
            DeflateDecoder::new(raw.as_slice())
                .read_to_end(&mut out)
                .map_err(|err| not_zip(format!("inflate failed for {}: {err}", e.name)))?;
            out
        }
        m => return Err(not_zip(format!("unsupported compression method {m} for {}", e.name))),
    };
    if data.len() as u64 != e.uncompressed_size {
        return Err(not_zip(format!("size mismatch for {}", e.name)));
    }
    let crc = {
        let mut h = flate2::Crc::new();
        h.update(&data);
        h.sum()
    };
    if crc != e.crc32 {
        return Err(not_zip(format!("CRC mismatch for {}", e.name)));
    }
    Ok(data)
}
