//! Modified UTF-8 decoding for DEX string data.

use super::DexError;

/// Decode a NUL-terminated MUTF-8 run. Bytes after the terminator are
/// ignored. Unpaired surrogates decode to U+FFFD.
pub fn decode_mutf8(bytes: &[u8]) -> Result<String, DexError> {
    let end = bytes
        .iter()
        .position(|&b| b == 0)
        .ok_or(DexError::InvalidSequence { position: bytes.len() })?;
    let run = &bytes[..end];
    if run.is_ascii() {
        // ASCII is identical in both encodings.
        return Ok(String::from_utf8(run.to_vec()).expect("ascii"));
    }

    let mut units: Vec<u16> = Vec::with_capacity(run.len());
    let mut i = 0;
    while i < run.len() {
        let b0 = run[i];
        let cont = |j: usize| -> Result<u16, DexError> {
            match run.get(j) {
                Some(&b) if b & 0xc0 == 0x80 => Ok((b & 0x3f) as u16),
                _ => Err(DexError::InvalidSequence { position: j }),
            }
        };
        match b0 >> 4 {
            0x0..=0x7 => {
                units.push(b0 as u16);
                i += 1;
            }
            0xc | 0xd => {
                units.push((((b0 & 0x1f) as u16) << 6) | cont(i + 1)?);
                i += 2;
            }
            0xe => {
                units.push((((b0 & 0x0f) as u16) << 12) | (cont(i + 1)? << 6) | cont(i + 2)?);
                i += 3;
            }
            _ => return Err(DexError::InvalidSequence { position: i }),
        }
    }
    Ok(char::decode_utf16(units)
        .map(|r| r.unwrap_or(char::REPLACEMENT_CHARACTER))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_passthrough() {
        assert_eq!(decode_mutf8(b"java/io\0").unwrap(), "java/io");
        assert_eq!(decode_mutf8(b"\0").unwrap(), "");
        assert_eq!(decode_mutf8(b"ab\0cd").unwrap(), "ab");
    }

    #[test]
    fn two_byte_nul() {
        assert_eq!(decode_mutf8(&[0xc0, 0x80, 0x00]).unwrap(), "\u{0}");
    }

    #[test]
    fn invalid_sequences() {
        assert!(matches!(decode_mutf8(&[0xff, 0x00]), Err(DexError::InvalidSequence { .. })));
        assert!(matches!(decode_mutf8(&[0x80, 0x00]), Err(DexError::InvalidSequence { .. })));
        assert!(matches!(decode_mutf8(&[0xc3, 0x00]), Err(DexError::InvalidSequence { .. })));
        assert!(matches!(decode_mutf8(b"no terminator"), Err(DexError::InvalidSequence { .. })));
    }

    #[test]
    fn surrogate_pairs_and_bmp() {
        // U+00E9, U+20AC
        assert_eq!(decode_mutf8(&[0xc3, 0xa9, 0xe2, 0x82, 0xac, 0]).unwrap(), "é€");
        // U+1F600 as a CESU-style surrogate pair: D83D DE00
        let bytes = [0xed, 0xa0, 0xbd, 0xed, 0xb8, 0x80, 0];
        assert_eq!(decode_mutf8(&bytes).unwrap(), "\u{1F600}");
        // lone high surrogate
        assert_eq!(decode_mutf8(&[0xed, 0xa0, 0xbd, 0]).unwrap(), "\u{FFFD}");
    }
}
