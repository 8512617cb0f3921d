//! Invoke-list text format.
//!
//! ```text
//! # comment
//! invoke-virtual Lcom/a/B; Ljava/io/FileInputStream;->read([B)I
//! ```
//!
//! One site per line: kind mnemonic, caller class descriptor, target
//! signature, separated by single spaces. An unknown caller is written `L;`.

use std::fmt::Write as _;
use std::path::Path;

use super::IngestError;
use crate::invoke::{normalize_class_descriptor, InvokeKind, InvokeSite, MethodRef};

pub fn load_invoke_list_text(path: impl AsRef<Path>) -> Result<Vec<InvokeSite>, IngestError> {
    let text = std::fs::read_to_string(path)?;
    parse_invoke_list(&text)
}

pub fn parse_invoke_list(text: &str) -> Result<Vec<InvokeSite>, IngestError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(parse_line(line).map_err(|reason| IngestError::MalformedLine {
            line: i + 1,
            reason,
        })?);
    }
    Ok(out)
}

fn parse_line(line: &str) -> Result<InvokeSite, String> {
    let mut parts = line.split(' ');
    let (Some(kind), Some(caller), Some(target), None) =
        (parts.next(), parts.next(), parts.next(), parts.next())
    else {
        return Err("expected `<kind> <caller> <target>`".into());
    };
    let kind = InvokeKind::from_mnemonic(kind).ok_or_else(|| format!("unknown kind `{kind}`"))?;
    let caller = if caller == "L;" {
        ""
    } else if caller.starts_with('L') {
        normalize_class_descriptor(caller)
            .ok_or_else(|| format!("bad caller descriptor `{caller}`"))?
    } else {
        return Err(format!("bad caller descriptor `{caller}`"));
    };
    Ok(InvokeSite::new(kind, caller, parse_signature(target)?))
}

/// Parse `L<class>;-><name>(<params>)<ret>`.
pub(crate) fn parse_signature(sig: &str) -> Result<MethodRef, String> {
    let (class_desc, rest) = sig
        .split_once("->")
        .ok_or_else(|| format!("missing `->` in `{sig}`"))?;
    let class_path = normalize_class_descriptor(class_desc)
        .ok_or_else(|| format!("bad class descriptor `{class_desc}`"))?;
    let paren = rest.find('(').ok_or_else(|| format!("missing `(` in `{sig}`"))?;
    let (name, descriptor) = rest.split_at(paren);
    let close = descriptor.find(')').ok_or_else(|| format!("missing `)` in `{sig}`"))?;
    if name.is_empty() || close + 1 == descriptor.len() {
        return Err(format!("incomplete method signature `{sig}`"));
    }
    Ok(MethodRef::new(class_path, name, descriptor))
}

pub fn format_invoke_list(sites: &[InvokeSite]) -> String {
    let mut s = String::new();
    for site in sites {
        let _ = writeln!(s, "{} L{}; {}", site.kind, site.caller_class, site.target);
    }
    s
}

pub fn write_invoke_list(path: impl AsRef<Path>, sites: &[InvokeSite]) -> Result<(), IngestError> {
    std::fs::write(path, format_invoke_list(sites))?;
    Ok(())
}
