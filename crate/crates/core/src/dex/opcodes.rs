//! Dalvik instruction widths.

/// Width in 16-bit code units of every opcode, indexed by opcode byte.
///
/// Generated from the instruction-format column of the Dalvik bytecode
/// reference (formats 10x..51l, 45cc, 4rcc) for DEX 035-039. Unused opcodes
/// (0x3e-0x43, 0x73, 0x79-0x7a, 0xe3-0xf9) are given width 1. The three
/// payload pseudo-instructions share opcode 0x00 and are sized separately by
/// [`payload_units`].
pub const OPCODE_UNITS: [u8; 256] = [
    1, 1, 2, 3, 1, 2, 3, 1, 2, 3, 1, 1, 1, 1, 1, 1, // 0x00
    1, 1, 1, 2, 3, 2, 2, 3, 5, 2, 2, 3, 2, 1, 1, 2, // 0x10
    2, 1, 2, 2, 3, 3, 3, 1, 1, 2, 3, 3, 3, 2, 2, 2, // 0x20
    2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 1, 1, // 0x30
    1, 1, 1, 1, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, // 0x40
    2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, // 0x50
    2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 3, 3, // 0x60
    3, 3, 3, 1, 3, 3, 3, 3, 3, 1, 1, 1, 1, 1, 1, 1, // 0x70
    1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, // 0x80
    2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, // 0x90
    2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, // 0xa0
    1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, // 0xb0
    1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, // 0xc0
    2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, // 0xd0
    2, 2, 2, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, // 0xe0
    1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 4, 4, 3, 3, 2, 2, // 0xf0
];

/// A payload header ran past the end of the code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Truncated;

pub const PACKED_SWITCH_PAYLOAD: u16 = 0x0100;
pub const SPARSE_SWITCH_PAYLOAD: u16 = 0x0200;
pub const FILL_ARRAY_DATA_PAYLOAD: u16 = 0x0300;

/// Size in code units of the payload starting at unit 0, or `None` if unit 0
/// is not a payload ident. `Some(Err(Truncated))` means the payload header itself
/// is truncated. `unit(i)` reads the i-th code unit from the current position.
pub fn payload_units(unit: impl Fn(usize) -> Option<u16>) -> Option<Result<usize, Truncated>> {
    let ident = unit(0)?;
    let unit = |i: usize| unit(i).ok_or(Truncated);
    let size = match ident {
        PACKED_SWITCH_PAYLOAD => unit(1).map(|n| n as usize * 2 + 4),
        SPARSE_SWITCH_PAYLOAD => unit(1).map(|n| n as usize * 4 + 2),
        FILL_ARRAY_DATA_PAYLOAD => (|| {
            let width = unit(1)? as usize;
            let count = unit(2)? as usize | (unit(3)? as usize) << 16;
            Ok((width * count).div_ceil(2) + 4)
        })(),
        _ => return None,
    };
    Some(size)
}

/// Width of the instruction at the current position, in code units.
pub fn instruction_units(unit: impl Fn(usize) -> Option<u16>) -> Result<usize, Truncated> {
    let first = unit(0).ok_or(Truncated)?;
    if let Some(p) = payload_units(&unit) {
        return p;
    }
    Ok(OPCODE_UNITS[(first & 0xff) as usize] as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Hand-checked against the format table, one per format family.
    #[test]
    fn spot_values() {
        let expect: &[(u8, u8)] = &[
            (0x00, 1), // nop 10x
            (0x01, 1), // move 12x
            (0x02, 2), // move/from16 22x
            (0x03, 3), // move/16 32x
            (0x0e, 1), // return-void
            (0x12, 1), // const/4 11n
            (0x13, 2), // const/16 21s
            (0x14, 3), // const 31i
            (0x18, 5), // const-wide 51l
            (0x1a, 2), // const-string 21c
            (0x1b, 3), // const-string/jumbo 31c
            (0x24, 3), // filled-new-array 35c
            (0x25, 3), // filled-new-array/range 3rc
            (0x26, 3), // fill-array-data 31t
            (0x28, 1), // goto 10t
            (0x29, 2), // goto/16 20t
            (0x2a, 3), // goto/32 30t
            (0x2b, 3), // packed-switch 31t
            (0x2c, 3), // sparse-switch 31t
            (0x2d, 2), // cmpl-float 23x
            (0x32, 2), // if-eq 22t
            (0x38, 2), // if-eqz 21t
            (0x44, 2), // aget 23x
            (0x52, 2), // iget 22c
            (0x60, 2), // sget 21c
            (0x6e, 3), // invoke-virtual 35c
            (0x72, 3), // invoke-interface 35c
            (0x74, 3), // invoke-virtual/range 3rc
            (0x78, 3), // invoke-interface/range 3rc
            (0x7b, 1), // neg-int 12x
            (0x90, 2), // add-int 23x
            (0xb0, 1), // add-int/2addr 12x
            (0xd0, 2), // add-int/lit16 22s
            (0xd8, 2), // add-int/lit8 22b
            (0xe2, 2), // ushr-int/lit8 22b
            (0xfa, 4), // invoke-polymorphic 45cc
            (0xfb, 4), // invoke-polymorphic/range 4rcc
            (0xfc, 3), // invoke-custom 35c
            (0xfd, 3), // invoke-custom/range 3rc
            (0xfe, 2), // const-method-handle 21c
            (0xff, 2), // const-method-type 21c
        ];
        for &(op, units) in expect {
            assert_eq!(OPCODE_UNITS[op as usize], units, "opcode {op:#04x}");
        }
        // Unused slots
        for op in (0x3e..=0x43).chain([0x73, 0x79, 0x7a]).chain(0xe3..=0xf9) {
            assert_eq!(OPCODE_UNITS[op as usize], 1, "opcode {op:#04x}");
        }
    }

    fn units(s: &[u16]) -> Result<usize, Truncated> {
        instruction_units(|i| s.get(i).copied())
    }

    #[test]
    fn payload_sizes() {
        // packed-switch with 3 targets: 4 + 3*2
        assert_eq!(units(&[0x0100, 3]), Ok(10));
        // sparse-switch with 2 entries: 2 + 2*4
        assert_eq!(units(&[0x0200, 2]), Ok(10));
        // fill-array-data, width 1, 5 elements: 4 + ceil(5/2)
        assert_eq!(units(&[0x0300, 1, 5, 0]), Ok(7));
        // width 4, 0x10001 elements
        assert_eq!(units(&[0x0300, 4, 1, 1]), Ok(4 + 2 * 0x10001));
        assert_eq!(units(&[0x0300, 1]), Err(Truncated));
        // nop with a non-payload high byte
        assert_eq!(units(&[0x0400]), Ok(1));
    }
}
