use super::opcodes::instruction_units;
use super::{structural, DexError, DexFile};
use crate::invoke::{normalize_class_descriptor, InvokeKind, InvokeSite, MethodRef};

/// Walk one instruction stream (little-endian code units), calling
/// `on_invoke(kind, method_idx)` for every invoke-kind instruction.
///
/// Returns the number of code units walked, which always equals the stream
/// length on success.
pub fn walk_code(
    insns: &[u8],
    mut on_invoke: impl FnMut(InvokeKind, u16),
) -> Result<usize, DexError> {
    let n = insns.len() / 2;
    let unit_at = |i: usize| -> Option<u16> {
        (i < n).then(|| u16::from_le_bytes([insns[2 * i], insns[2 * i + 1]]))
    };
    let mut pos = 0usize;
    while pos < n {
        let width = instruction_units(|i| unit_at(pos + i))
            .map_err(|_| structural(format!("payload header at unit {pos} truncated")))?;
        if pos + width > n {
            return Err(structural(format!(
                "instruction at unit {pos} (width {width}) runs past insns_size {n}"
            )));
        }
        let op = (unit_at(pos).unwrap_or(0) & 0xff) as u8;
        if let Some(kind) = InvokeKind::from_opcode(op) {
            // 35c and 3rc both carry the method index in the second unit.
            on_invoke(kind, unit_at(pos + 1).unwrap_or(0));
        }
        pos += width;
    }
    Ok(pos)
}

/// Visit every invoke site as `(kind, method_idx, class_item_index)`,
/// in class-def order, direct methods before virtual ones.
pub fn for_each_invoke(
    dex: &DexFile<'_>,
    mut f: impl FnMut(InvokeKind, u32, usize),
) -> Result<(), DexError> {
    let n_methods = dex.method_table.len();
    for (ci, class) in dex.class_items.iter().enumerate() {
        for method in class.methods() {
            let Some(code) = &method.code else { continue };
            let mut bad = None;
            walk_code(dex.insns(code), |kind, idx| {
                if idx as usize >= n_methods {
                    bad.get_or_insert(idx);
                } else {
                    f(kind, idx as u32, ci);
                }
            })?;
            if let Some(idx) = bad {
                return Err(structural(format!(
                    "invoke in code_item {:#x} targets method {idx} of {n_methods}",
                    code.offset
                )));
            }
        }
    }
    Ok(())
}

/// Every invoke-type instruction of the file, resolved to its target.
///
/// Receivers of primitive-array type (e.g. `[I->clone()`) produce no site.
pub fn extract_invokes(dex: &DexFile<'_>) -> Result<Vec<InvokeSite>, DexError> {
    let mut resolved: Vec<Option<Option<MethodRef>>> = vec![None; dex.method_table.len()];
    let callers: Vec<String> = dex
        .class_items
        .iter()
        .map(|c| {
            normalize_class_descriptor(dex.type_name(c.class_idx))
                .unwrap_or("")
                .to_owned()
        })
        .collect();
    let mut out = Vec::new();
    for_each_invoke(dex, |kind, idx, ci| {
        let target = resolved[idx as usize].get_or_insert_with(|| resolve_method(dex, idx));
        if let Some(target) = target {
            out.push(InvokeSite::new(kind, callers[ci].clone(), target.clone()));
        }
    })?;
    Ok(out)
}

/// Resolve a method id to its target; `None` for primitive-array receivers.
pub fn resolve_method(dex: &DexFile<'_>, idx: u32) -> Option<MethodRef> {
    let m = dex.method_table[idx as usize];
    MethodRef::from_descriptor(
        dex.type_name(m.class_idx as u32),
        dex.string_pool[m.name_idx as usize].as_str(),
        dex.proto_descriptor(m.proto_idx),
    )
}
