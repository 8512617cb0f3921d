//! Obfuscation transforms on invoke lists.
//!
//! These act on the invoke-list representation, not on DEX bytes: they
//! reproduce what each obfuscation strategy does to the set of System-API
//! calls an analyzer can see, which is all a count-based classifier observes.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ingest::parse_invoke_list;
use crate::invoke::{InvokeKind, InvokeSite, MethodRef};

const RESOURCE_STUB: &str = include_str!("../data/stubs/resource_encryption.txt");
const CLASS_STUB: &str = include_str!("../data/stubs/class_encryption.txt");

/// Class holding the injected string decryption routine.
pub const STRING_DECRYPTOR_CLASS: &str = "protect/strings/StringDecryptor";

/// Package prefixes of framework code. Callers outside them are
/// user-implemented.
pub const FRAMEWORK_PREFIXES: &[&str] = &[
    "android/", "androidx/", "dalvik/", "java/", "javax/", "junit/", "org/apache/", "org/json/",
    "org/w3c/", "org/xml/", "org/xmlpull/",
];

pub fn is_framework_class(class_path: &str) -> bool {
    FRAMEWORK_PREFIXES.iter().any(|p| class_path.starts_with(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObfuscationKind {
    StringEncryption,
    ResourceEncryption,
    ClassEncryption,
}

impl ObfuscationKind {
    pub const ALL: [ObfuscationKind; 3] = [
        ObfuscationKind::StringEncryption,
        ObfuscationKind::ResourceEncryption,
        ObfuscationKind::ClassEncryption,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ObfuscationKind::StringEncryption => "string-encryption",
            ObfuscationKind::ResourceEncryption => "resource-encryption",
            ObfuscationKind::ClassEncryption => "class-encryption",
        }
    }
}

impl fmt::Display for ObfuscationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObfuscationKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ObfuscationKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown obfuscation `{s}` (expected string-encryption, resource-encryption or class-encryption)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObfuscationTransform {
    pub kind: ObfuscationKind,
    /// System-API calls the transform injects; the same for every sample.
    pub stub_profile: Vec<InvokeSite>,
    pub seed: u64,
}

impl ObfuscationTransform {
    /// The transform with its shipped stub profile.
    pub fn new(kind: ObfuscationKind, seed: u64) -> Self {
        let stub_profile = match kind {
            ObfuscationKind::StringEncryption => Vec::new(),
            ObfuscationKind::ResourceEncryption => parse_invoke_list(RESOURCE_STUB).expect("shipped stub parses"),
            ObfuscationKind::ClassEncryption => parse_invoke_list(CLASS_STUB).expect("shipped stub parses"),
        };
        ObfuscationTransform {
            kind,
            stub_profile,
            seed,
        }
    }

    pub fn apply(&self, invokes: &[InvokeSite]) -> Vec<InvokeSite> {
        transform(invokes, self)
    }
}

fn decrypt_calls(invokes: &[InvokeSite], seed: u64) -> Vec<InvokeSite> {
    // k depends on the seed and the sample so different samples differ.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (invokes.len() as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let k = rng.random_range(1..=5);
    let callers: Vec<&str> = invokes
        .iter()
        .map(|s| s.caller_class.as_str())
        .filter(|c| !c.is_empty() && !is_framework_class(c))
        .collect();
    (0..k)
        .map(|_| {
            let caller = if callers.is_empty() {
                ""
            } else {
                callers[rng.random_range(0..callers.len())]
            };
            InvokeSite::new(
                InvokeKind::Static,
                caller,
                MethodRef::new(STRING_DECRYPTOR_CLASS, "decrypt", "(Ljava/lang/String;)Ljava/lang/String;"),
            )
        })
        .collect()
}

/// Apply `t` to an invoke list, returning a new list.
pub fn transform(invokes: &[InvokeSite], t: &ObfuscationTransform) -> Vec<InvokeSite> {
    match t.kind {
        ObfuscationKind::StringEncryption => {
            let mut out = invokes.to_vec();
            out.extend(decrypt_calls(invokes, t.seed));
            out
        }
        ObfuscationKind::ResourceEncryption => {
            let mut out = invokes.to_vec();
            out.extend(decrypt_calls(invokes, t.seed));
            out.extend(t.stub_profile.iter().cloned());
            out
        }
        ObfuscationKind::ClassEncryption => {
            let mut out: Vec<InvokeSite> = invokes
                .iter()
                .filter(|s| is_framework_class(&s.caller_class))
                .cloned()
                .collect();
            out.extend(t.stub_profile.iter().cloned());
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_stubs_parse_and_are_system_api() {
        for kind in [ObfuscationKind::ResourceEncryption, ObfuscationKind::ClassEncryption] {
            let t = ObfuscationTransform::new(kind, 0);
            assert!(!t.stub_profile.is_empty());
            assert!(t.stub_profile.iter().all(|s| is_framework_class(&s.target.class_path)));
        }
    }

    #[test]
    fn kind_tokens_round_trip() {
        for k in ObfuscationKind::ALL {
            assert_eq!(k.as_str().parse::<ObfuscationKind>().unwrap(), k);
        }
        assert!("packing".parse::<ObfuscationKind>().is_err());
    }

    #[test]
    fn string_encryption_adds_one_to_five_decrypt_calls() {
        let t = ObfuscationTransform::new(ObfuscationKind::StringEncryption, 3);
        for n in 0..30 {
            let input: Vec<InvokeSite> = (0..n)
                .map(|i| InvokeSite::new(InvokeKind::Virtual, "com/app/Main", MethodRef::new("java/io/File", format!("m{i}"), "()V")))
                .collect();
            let out = t.apply(&input);
            assert_eq!(&out[..n], &input[..]);
            let added = out.len() - n;
            assert!((1..=5).contains(&added));
            assert!(out[n..].iter().all(|s| s.target.class_path == STRING_DECRYPTOR_CLASS));
        }
    }
}
