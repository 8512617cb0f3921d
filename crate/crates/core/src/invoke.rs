//! Resolved invocation targets and invoke sites.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A fully resolved invocation target.
///
/// `class_path` is the slash-separated class name without the `L`/`;`
/// wrapping or array markers, `package` is `class_path` minus its last
/// segment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MethodRef {
    pub package: String,
    pub class_path: String,
    pub name: String,
    pub descriptor: String,
}

impl MethodRef {
    pub fn new(
        class_path: impl Into<String>,
        name: impl Into<String>,
        descriptor: impl Into<String>,
    ) -> Self {
        let class_path = class_path.into();
        MethodRef {
            package: package_of(&class_path).to_owned(),
            class_path,
            name: name.into(),
            descriptor: descriptor.into(),
        }
    }

    /// Build from a type descriptor such as `Ljava/io/File;` or
    /// `[[Ljava/lang/Object;`. Returns `None` for primitive and
    /// primitive-array receivers.
    pub fn from_descriptor(
        class_descriptor: &str,
        name: impl Into<String>,
        descriptor: impl Into<String>,
    ) -> Option<Self> {
        normalize_class_descriptor(class_descriptor).map(|cp| MethodRef::new(cp, name, descriptor))
    }

    /// Smali-style signature: `Ljava/io/File;->delete()Z`.
    pub fn signature(&self) -> String {
        format!("L{};->{}{}", self.class_path, self.name, self.descriptor)
    }
}

impl fmt::Display for MethodRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{};->{}{}", self.class_path, self.name, self.descriptor)
    }
}

/// Package part of a class path (`java/io/File` -> `java/io`, `Foo` -> ``).
pub fn package_of(class_path: &str) -> &str {
    match class_path.rfind('/') {
        Some(i) => &class_path[..i],
        None => "",
    }
}

/// Strip array markers and the `L...;` wrapping from a type descriptor.
///
/// Reference arrays normalize to their element class; primitives and
/// primitive arrays yield `None`.
pub fn normalize_class_descriptor(desc: &str) -> Option<&str> {
    let elem = desc.trim_start_matches('[');
    let inner = elem.strip_prefix('L')?.strip_suffix(';')?;
    if inner.is_empty() {
        None
    } else {
        Some(inner)
    }
}

/// The ten Dalvik invoke opcodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InvokeKind {
    Virtual,
    Super,
    Direct,
    Static,
    Interface,
    VirtualRange,
    SuperRange,
    DirectRange,
    StaticRange,
    InterfaceRange,
}

impl InvokeKind {
    pub const ALL: [InvokeKind; 10] = [
        InvokeKind::Virtual,
        InvokeKind::Super,
        InvokeKind::Direct,
        InvokeKind::Static,
        InvokeKind::Interface,
        InvokeKind::VirtualRange,
        InvokeKind::SuperRange,
        InvokeKind::DirectRange,
        InvokeKind::StaticRange,
        InvokeKind::InterfaceRange,
    ];

    /// Maps an opcode in 0x6e..=0x72 or 0x74..=0x78.
    pub fn from_opcode(op: u8) -> Option<Self> {
        use InvokeKind::*;
        Some(match op {
            0x6e => Virtual,
            0x6f => Super,
            0x70 => Direct,
            0x71 => Static,
            0x72 => Interface,
            0x74 => VirtualRange,
            0x75 => SuperRange,
            0x76 => DirectRange,
            0x77 => StaticRange,
            0x78 => InterfaceRange,
            _ => return None,
        })
    }

    pub fn opcode(self) -> u8 {
        use InvokeKind::*;
        match self {
            Virtual => 0x6e,
            Super => 0x6f,
            Direct => 0x70,
            Static => 0x71,
            Interface => 0x72,
            VirtualRange => 0x74,
            SuperRange => 0x75,
            DirectRange => 0x76,
            StaticRange => 0x77,
            InterfaceRange => 0x78,
        }
    }

    pub fn is_range(self) -> bool {
        self.opcode() >= 0x74
    }

    /// Smali mnemonic, e.g. `invoke-static/range`.
    pub fn mnemonic(self) -> &'static str {
        use InvokeKind::*;
        match self {
            Virtual => "invoke-virtual",
            Super => "invoke-super",
            Direct => "invoke-direct",
            Static => "invoke-static",
            Interface => "invoke-interface",
            VirtualRange => "invoke-virtual/range",
            SuperRange => "invoke-super/range",
            DirectRange => "invoke-direct/range",
            StaticRange => "invoke-static/range",
            InterfaceRange => "invoke-interface/range",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<Self> {
        InvokeKind::ALL.into_iter().find(|k| k.mnemonic() == s)
    }
}

impl fmt::Display for InvokeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

/// One invoke-type instruction: what kind, where it sits, what it calls.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InvokeSite {
    pub kind: InvokeKind,
    /// Class path of the calling class; empty when unknown.
    pub caller_class: String,
    pub target: MethodRef,
}

impl InvokeSite {
    pub fn new(kind: InvokeKind, caller_class: impl Into<String>, target: MethodRef) -> Self {
        InvokeSite {
            kind,
            caller_class: caller_class.into(),
            target,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn package_is_class_path_minus_last_segment() {
        let m = MethodRef::new("java/io/FileInputStream", "read", "([B)I");
        assert_eq!(m.package, "java/io");
        assert_eq!(MethodRef::new("Foo", "bar", "()V").package, "");
    }

    #[test]
    fn descriptor_normalization() {
        assert_eq!(normalize_class_descriptor("Ljava/io/File;"), Some("java/io/File"));
        assert_eq!(
            normalize_class_descriptor("[[Ljava/lang/Object;"),
            Some("java/lang/Object")
        );
        assert_eq!(normalize_class_descriptor("[I"), None);
        assert_eq!(normalize_class_descriptor("I"), None);
        assert_eq!(normalize_class_descriptor("L;"), None);
    }

    #[test]
    fn opcode_mapping_is_a_bijection() {
        for k in InvokeKind::ALL {
            assert_eq!(InvokeKind::from_opcode(k.opcode()), Some(k));
            assert_eq!(InvokeKind::from_mnemonic(k.mnemonic()), Some(k));
        }
        assert_eq!(InvokeKind::from_opcode(0x73), None);
        assert_eq!(InvokeKind::from_opcode(0xfa), None);
    }
}
