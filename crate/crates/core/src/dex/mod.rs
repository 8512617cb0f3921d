//! Parser for the DEX container, as far as needed to enumerate invoke
//! instructions.
//!
//! Only the id tables, `class_defs`, `class_data_item` and `code_item`
//! headers are decoded. Debug info, annotations and try/catch handlers are
//! located but never read.

mod invokes;
mod leb128;
mod mutf8;
pub mod opcodes;

pub use invokes::{extract_invokes, for_each_invoke, resolve_method, walk_code};
pub use leb128::read_uleb128;
pub use mutf8::decode_mutf8;

use thiserror::Error;

pub const HEADER_SIZE: usize = 0x70;
pub const ENDIAN_CONSTANT: u32 = 0x1234_5678;
pub const SUPPORTED_VERSIONS: std::ops::RangeInclusive<u16> = 35..=39;

const NO_INDEX: u32 = 0xffff_ffff;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DexError {
    #[error("truncated ULEB128 at offset {offset:#x}")]
    TruncatedEncoding { offset: usize },
    #[error("ULEB128 at offset {offset:#x} is longer than 5 bytes")]
    Overlong { offset: usize },
    #[error("invalid MUTF-8 sequence at byte {position}")]
    InvalidSequence { position: usize },
    #[error("file is {0} bytes, shorter than the DEX header")]
    TooShort(usize),
    #[error("bad DEX magic")]
    BadMagic,
    #[error("unsupported DEX version {0:?}")]
    UnsupportedVersion(String),
    #[error("unexpected endian tag {0:#010x}")]
    BadEndianTag(u32),
    #[error("checksum mismatch: header {expected:#010x}, computed {actual:#010x}")]
    ChecksumMismatch { expected: u32, actual: u32 },
    #[error("structural error: {0}")]
    Structural(String),
}

fn structural(msg: impl Into<String>) -> DexError {
    DexError::Structural(msg.into())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Verify the Adler-32 checksum and `file_size` header fields.
    pub strict: bool,
}

impl ParseOptions {
    pub fn strict() -> Self {
        ParseOptions { strict: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MethodId {
    pub class_idx: u16,
    pub proto_idx: u16,
    pub name_idx: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtoId {
    pub shorty_idx: u32,
    pub return_type_idx: u32,
    pub parameter_type_idxs: Vec<u32>,
}

/// Location of a method body inside the file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeItem {
    pub offset: usize,
    pub registers_size: u16,
    pub ins_size: u16,
    pub outs_size: u16,
    pub tries_size: u16,
    pub debug_info_off: u32,
    pub insns_size: u32,
    /// Byte offset of the first code unit.
    pub insns_off: usize,
    /// Byte offset of the try table, if any.
    pub tries_off: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedMethod {
    pub method_idx: u32,
    pub access_flags: u32,
    pub code: Option<CodeItem>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassItem {
    pub class_idx: u32,
    pub direct_methods: Vec<EncodedMethod>,
    pub virtual_methods: Vec<EncodedMethod>,
}

impl ClassItem {
    pub fn methods(&self) -> impl Iterator<Item = &EncodedMethod> {
        self.direct_methods.iter().chain(&self.virtual_methods)
    }
}

/// A parsed DEX file. Borrows the underlying buffer for code access.
#[derive(Debug, Clone)]
pub struct DexFile<'a> {
    bytes: &'a [u8],
    pub version: u16,
    pub checksum: u32,
    pub string_pool: Vec<String>,
    /// String index of each type descriptor.
    pub type_ids: Vec<u32>,
    pub protos: Vec<ProtoId>,
    pub method_table: Vec<MethodId>,
    pub class_items: Vec<ClassItem>,
    proto_descriptors: Vec<String>,
}

impl<'a> DexFile<'a> {
    pub fn bytes(&self) -> &'a [u8] {
        self.bytes
    }

    pub fn type_name(&self, type_idx: u32) -> &str {
        &self.string_pool[self.type_ids[type_idx as usize] as usize]
    }

    /// Method descriptor of a proto, e.g. `(Ljava/lang/String;I)Z`.
    pub fn proto_descriptor(&self, proto_idx: u16) -> &str {
        &self.proto_descriptors[proto_idx as usize]
    }

    /// Code units of a method body.
    pub fn insns(&self, code: &CodeItem) -> &'a [u8] {
        &self.bytes[code.insns_off..code.insns_off + code.insns_size as usize * 2]
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn u16(&self, off: usize) -> Result<u16, DexError> {
        self.bytes
            .get(off..off + 2)
            .map(|b| u16::from_le_bytes([b[0], b[1]]))
            .ok_or_else(|| structural(format!("u16 read at {off:#x} out of bounds")))
    }

    fn u32(&self, off: usize) -> Result<u32, DexError> {
        self.bytes
            .get(off..off + 4)
            .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .ok_or_else(|| structural(format!("u32 read at {off:#x} out of bounds")))
    }

    /// Validates that `count` items of `item_size` bytes fit at `off`.
    fn table(&self, what: &str, count: u32, off: u32, item_size: usize) -> Result<usize, DexError> {
        let (count, off) = (count as usize, off as usize);
        if count == 0 {
            return Ok(off);
        }
        let end = count
            .checked_mul(item_size)
            .and_then(|n| n.checked_add(off))
            .ok_or_else(|| structural(format!("{what} table size overflows")))?;
        if off < HEADER_SIZE || end > self.bytes.len() {
            return Err(structural(format!(
                "{what} table [{off:#x}, {end:#x}) outside file of {} bytes",
                self.bytes.len()
            )));
        }
        Ok(off)
    }

    fn uleb(&self, off: &mut usize) -> Result<u32, DexError> {
        let (v, next) = read_uleb128(self.bytes, *off)?;
        *off = next;
        Ok(v)
    }
}

/// Parse a DEX blob.
pub fn parse_dex(blob: &[u8], opts: ParseOptions) -> Result<DexFile<'_>, DexError> {
    if blob.len() < HEADER_SIZE {
        return Err(DexError::TooShort(blob.len()));
    }
    if &blob[0..4] != b"dex\n" || blob[7] != 0 {
        return Err(DexError::BadMagic);
    }
    let version_txt = &blob[4..7];
    let version = std::str::from_utf8(version_txt)
        .ok()
        .filter(|s| s.bytes().all(|b| b.is_ascii_digit()))
        .and_then(|s| s.parse::<u16>().ok())
        .ok_or(DexError::BadMagic)?;
    if !SUPPORTED_VERSIONS.contains(&version) {
        return Err(DexError::UnsupportedVersion(
            String::from_utf8_lossy(version_txt).into_owned(),
        ));
    }

    let r = Reader { bytes: blob };
    let checksum = r.u32(8)?;
    let endian = r.u32(40)?;
    if endian != ENDIAN_CONSTANT {
        return Err(DexError::BadEndianTag(endian));
    }
    if opts.strict {
        let actual = adler2::adler32_slice(&blob[12..]);
        if actual != checksum {
            return Err(DexError::ChecksumMismatch {
                expected: checksum,
                actual,
            });
        }
        let file_size = r.u32(32)? as usize;
        if file_size != blob.len() {
            return Err(structural(format!(
                "header file_size {file_size} but blob is {} bytes",
                blob.len()
            )));
        }
    }

    let string_ids_size = r.u32(56)?;
    let string_ids_off = r.table("string_ids", string_ids_size, r.u32(60)?, 4)?;
    let type_ids_size = r.u32(64)?;
    let type_ids_off = r.table("type_ids", type_ids_size, r.u32(68)?, 4)?;
    let proto_ids_size = r.u32(72)?;
    let proto_ids_off = r.table("proto_ids", proto_ids_size, r.u32(76)?, 12)?;
    let method_ids_size = r.u32(88)?;
    let method_ids_off = r.table("method_ids", method_ids_size, r.u32(92)?, 8)?;
    let class_defs_size = r.u32(96)?;
    let class_defs_off = r.table("class_defs", class_defs_size, r.u32(100)?, 32)?;

    let mut string_pool = Vec::with_capacity(string_ids_size as usize);
    for i in 0..string_ids_size as usize {
        let data_off = r.u32(string_ids_off + 4 * i)? as usize;
        if data_off >= blob.len() {
            return Err(structural(format!("string {i} data offset {data_off:#x} out of bounds")));
        }
        let mut pos = data_off;
        let _utf16_len = r.uleb(&mut pos)?;
        let s = decode_mutf8(&blob[pos..]).map_err(|e| match e {
            DexError::InvalidSequence { position } => DexError::InvalidSequence {
                position: pos + position,
            },
            other => other,
        })?;
        string_pool.push(s);
    }
    let n_strings = string_pool.len() as u32;

    let mut type_ids = Vec::with_capacity(type_ids_size as usize);
    for i in 0..type_ids_size as usize {
        let sidx = r.u32(type_ids_off + 4 * i)?;
        if sidx >= n_strings {
            return Err(structural(format!("type {i} names string {sidx} of {n_strings}")));
        }
        type_ids.push(sidx);
    }
    let n_types = type_ids.len() as u32;

    let mut protos = Vec::with_capacity(proto_ids_size as usize);
    for i in 0..proto_ids_size as usize {
        let base = proto_ids_off + 12 * i;
        let shorty_idx = r.u32(base)?;
        let return_type_idx = r.u32(base + 4)?;
        let params_off = r.u32(base + 8)? as usize;
        if shorty_idx >= n_strings || return_type_idx >= n_types {
            return Err(structural(format!("proto {i} references out of range")));
        }
        let mut parameter_type_idxs = Vec::new();
        if params_off != 0 {
            let n = r.u32(params_off)? as usize;
            if params_off + 4 + n * 2 > blob.len() {
                return Err(structural(format!("proto {i} parameter list out of bounds")));
            }
            for k in 0..n {
                let t = r.u16(params_off + 4 + 2 * k)? as u32;
                if t >= n_types {
                    return Err(structural(format!("proto {i} parameter type {t} of {n_types}")));
                }
                parameter_type_idxs.push(t);
            }
        }
        protos.push(ProtoId {
            shorty_idx,
            return_type_idx,
            parameter_type_idxs,
        });
    }

    let mut method_table = Vec::with_capacity(method_ids_size as usize);
    for i in 0..method_ids_size as usize {
        let base = method_ids_off + 8 * i;
        let m = MethodId {
            class_idx: r.u16(base)?,
            proto_idx: r.u16(base + 2)?,
            name_idx: r.u32(base + 4)?,
        };
        if m.class_idx as u32 >= n_types
            || m.proto_idx as usize >= protos.len()
            || m.name_idx >= n_strings
        {
            return Err(structural(format!("method_id {i} references out of range")));
        }
        method_table.push(m);
    }

    let mut class_items = Vec::with_capacity(class_defs_size as usize);
    for i in 0..class_defs_size as usize {
        let base = class_defs_off + 32 * i;
        let class_idx = r.u32(base)?;
        if class_idx >= n_types {
            return Err(structural(format!("class_def {i} type {class_idx} of {n_types}")));
        }
        let superclass_idx = r.u32(base + 8)?;
        if superclass_idx != NO_INDEX && superclass_idx >= n_types {
            return Err(structural(format!("class_def {i} superclass out of range")));
        }
        let class_data_off = r.u32(base + 24)? as usize;
        let mut item = ClassItem {
            class_idx,
            direct_methods: Vec::new(),
            virtual_methods: Vec::new(),
        };
        if class_data_off != 0 {
            parse_class_data(&r, class_data_off, method_table.len(), &mut item)?;
        }
        class_items.push(item);
    }

    let proto_descriptors = protos
        .iter()
        .map(|p| {
            let mut d = String::from("(");
            for &t in &p.parameter_type_idxs {
                d.push_str(&string_pool[type_ids[t as usize] as usize]);
            }
            d.push(')');
            d.push_str(&string_pool[type_ids[p.return_type_idx as usize] as usize]);
            d
        })
        .collect();

    Ok(DexFile {
        bytes: blob,
        version,
        checksum,
        string_pool,
        type_ids,
        protos,
        method_table,
        class_items,
        proto_descriptors,
    })
}

fn parse_class_data(
    r: &Reader<'_>,
    off: usize,
    n_methods: usize,
    item: &mut ClassItem,
) -> Result<(), DexError> {
    if off >= r.bytes.len() {
        return Err(structural(format!("class_data offset {off:#x} out of bounds")));
    }
    let mut pos = off;
    let static_fields = r.uleb(&mut pos)?;
    let instance_fields = r.uleb(&mut pos)?;
    let direct = r.uleb(&mut pos)?;
    let virtual_ = r.uleb(&mut pos)?;
    for _ in 0..(static_fields as u64 + instance_fields as u64) {
        r.uleb(&mut pos)?;
        r.uleb(&mut pos)?;
    }
    for (count, out) in [
        (direct, &mut item.direct_methods),
        (virtual_, &mut item.virtual_methods),
    ] {
        // Each encoded_method is at least 3 bytes.
        if count as usize > r.bytes.len().saturating_sub(pos) / 3 + 1 {
            return Err(structural(format!("class_data method count {count} exceeds file")));
        }
        let mut method_idx: u32 = 0;
        for _ in 0..count {
            let diff = r.uleb(&mut pos)?;
            method_idx = method_idx
                .checked_add(diff)
                .ok_or_else(|| structural("method index overflow"))?;
            if method_idx as usize >= n_methods {
                return Err(structural(format!(
                    "encoded method index {method_idx} of {n_methods}"
                )));
            }
            let access_flags = r.uleb(&mut pos)?;
            let code_off = r.uleb(&mut pos)? as usize;
            let code = if code_off != 0 {
                Some(parse_code_item(r, code_off)?)
            } else {
                None
            };
            out.push(EncodedMethod {
                method_idx,
                access_flags,
                code,
            });
        }
    }
    Ok(())
}

fn parse_code_item(r: &Reader<'_>, off: usize) -> Result<CodeItem, DexError> {
    let registers_size = r.u16(off)?;
    let ins_size = r.u16(off + 2)?;
    let outs_size = r.u16(off + 4)?;
    let tries_size = r.u16(off + 6)?;
    let debug_info_off = r.u32(off + 8)?;
    let insns_size = r.u32(off + 12)?;
    let insns_off = off + 16;
    let insns_end = insns_off + insns_size as usize * 2;
    if insns_end > r.bytes.len() {
        return Err(structural(format!(
            "code_item at {off:#x} has {insns_size} units past end of file"
        )));
    }
    let tries_off = (tries_size > 0).then(|| {
        if insns_size % 2 == 1 {
            insns_end + 2
        } else {
            insns_end
        }
    });
    if let Some(t) = tries_off {
        if t + tries_size as usize * 8 > r.bytes.len() {
            return Err(structural(format!("try table of code_item {off:#x} out of bounds")));
        }
    }
    Ok(CodeItem {
        offset: off,
        registers_size,
        ins_size,
        outs_size,
        tries_size,
        debug_info_off,
        insns_size,
        insns_off,
        tries_off,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty_dex(version: &[u8; 3]) -> Vec<u8> {
        let mut b = vec![0u8; HEADER_SIZE];
        b[0..4].copy_from_slice(b"dex\n");
        b[4..7].copy_from_slice(version);
        b[32..36].copy_from_slice(&(HEADER_SIZE as u32).to_le_bytes());
        b[36..40].copy_from_slice(&(HEADER_SIZE as u32).to_le_bytes());
        b[40..44].copy_from_slice(&ENDIAN_CONSTANT.to_le_bytes());
        let sum = adler2::adler32_slice(&b[12..]);
        b[8..12].copy_from_slice(&sum.to_le_bytes());
        b
    }

    #[test]
    fn minimal_empty_container() {
        let b = empty_dex(b"035");
        let dex = parse_dex(&b, ParseOptions::strict()).unwrap();
        assert_eq!(dex.version, 35);
        assert!(dex.class_items.is_empty());
        assert!(dex.string_pool.is_empty());
    }

    #[test]
    fn all_supported_versions() {
        for v in [b"035", b"036", b"037", b"038", b"039"] {
            let b = empty_dex(v);
            assert!(parse_dex(&b, ParseOptions::default()).is_ok());
        }
        let b = empty_dex(b"040");
        assert_eq!(
            parse_dex(&b, ParseOptions::default()).unwrap_err(),
            DexError::UnsupportedVersion("040".into())
        );
    }

    #[test]
    fn bad_magic_and_short_input() {
        let mut b = empty_dex(b"035");
        b[0..4].copy_from_slice(b"foo!");
        assert_eq!(parse_dex(&b, ParseOptions::default()).unwrap_err(), DexError::BadMagic);
        assert_eq!(
            parse_dex(&b[..50], ParseOptions::default()).unwrap_err(),
            DexError::TooShort(50)
        );
    }

    #[test]
    fn checksum_only_enforced_in_strict_mode() {
        let mut b = empty_dex(b"035");
        b[100] ^= 0x01; // class_defs_off, but size stays 0
        assert!(parse_dex(&b, ParseOptions::default()).is_ok());
        assert!(matches!(
            parse_dex(&b, ParseOptions::strict()),
            Err(DexError::ChecksumMismatch { .. })
        ));
    }

    #[test]
    fn wrong_endian_tag() {
        let mut b = empty_dex(b"035");
        b[40..44].copy_from_slice(&0x7856_3412u32.to_le_bytes());
        assert_eq!(
            parse_dex(&b, ParseOptions::default()).unwrap_err(),
            DexError::BadEndianTag(0x7856_3412)
        );
    }

    #[test]
    fn table_out_of_bounds_is_structural() {
        let mut b = empty_dex(b"035");
        b[56..60].copy_from_slice(&1000u32.to_le_bytes());
        b[60..64].copy_from_slice(&(HEADER_SIZE as u32).to_le_bytes());
        assert!(matches!(
            parse_dex(&b, ParseOptions::default()),
            Err(DexError::Structural(_))
        ));
    }
}
