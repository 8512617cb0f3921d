//! Unsigned LEB128 as used throughout the DEX container.

use super::DexError;

/// Decode one ULEB128 value at `offset`, returning the value and the offset
/// just past it. At most five bytes are consumed.
pub fn read_uleb128(bytes: &[u8], offset: usize) -> Result<(u32, usize), DexError> {
    let mut result: u32 = 0;
    let mut pos = offset;
    for i in 0..5 {
        let byte = *bytes.get(pos).ok_or(DexError::TruncatedEncoding { offset })?;
        pos += 1;
        result |= ((byte & 0x7f) as u32).wrapping_shl(7 * i);
        if byte & 0x80 == 0 {
            return Ok((result, pos));
        }
    }
    Err(DexError::Overlong { offset })
}
