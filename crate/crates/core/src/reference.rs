//! System-API reference vocabularies at package, class and method
//! granularity.
//!
//! A reference list fixes the dimension and order of feature vectors. Keys
//! are kept sorted bytewise so vectors do not depend on file order.
//!
//! Key forms:
//!
//! | granularity | key                               |
//! |-------------|-----------------------------------|
//! | package     | `java/io`                         |
//! | class       | `java/io/FileInputStream`         |
//! | method      | `java/io/FileInputStream;->read`  |
//!
//! Package segments start with a non-uppercase character and class names
//! with an uppercase one, following the naming of the Android framework.
//! Method lists may opt into descriptor-qualified keys
//! (`java/io/FileInputStream;->read([B)I`) with a `# method-keys: descriptor`
//! header, which keeps overloads apart.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::invoke::{package_of, MethodRef};

#[derive(Debug, Error)]
pub enum ReferenceError {
    #[error("reference list declares granularity {found}, expected {expected}")]
    GranularityMismatch {
        expected: Granularity,
        found: Granularity,
    },
    #[error("reference list has no `# granularity:` header")]
    MissingGranularity,
    #[error("malformed {granularity} key on line {line}: `{key}`")]
    MalformedKey {
        granularity: Granularity,
        line: usize,
        key: String,
    },
    #[error("bad header on line {line}: {reason}")]
    BadHeader { line: usize, reason: String },
    #[error("cannot project {from} keys to {to}")]
    InvalidProjection { from: Granularity, to: Granularity },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Level at which invoke targets are counted. Ordered coarse to fine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Package,
    Class,
    Method,
}

impl Granularity {
    pub const ALL: [Granularity; 3] = [Granularity::Package, Granularity::Class, Granularity::Method];

    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Package => "package",
            Granularity::Class => "class",
            Granularity::Method => "method",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "package" => Ok(Granularity::Package),
            "class" => Ok(Granularity::Class),
            "method" => Ok(Granularity::Method),
            other => Err(format!("unknown granularity `{other}`")),
        }
    }
}

/// Identity of a reference list: a hash of its granularity, key mode and
/// entries. Feature vectors, datasets and models carry it so that vectors
/// are never scored against the wrong vocabulary.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fingerprint(pub [u8; 16]);

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({self})")
    }
}

impl FromStr for Fingerprint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 32 || !s.is_ascii() {
            return Err(format!("fingerprint must be 32 hex digits, got `{s}`"));
        }
        let mut out = [0u8; 16];
        for (i, b) in out.iter_mut().enumerate() {
            *b = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).map_err(|e| e.to_string())?;
        }
        Ok(Fingerprint(out))
    }
}

impl Serialize for Fingerprint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fingerprint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Key of `target` at granularity `g`, descriptors excluded.
///
/// `None` when the target has no class path.
pub fn key_of(target: &MethodRef, g: Granularity) -> Option<String> {
    if target.class_path.is_empty() {
        return None;
    }
    Some(match g {
        Granularity::Package => target.package.clone(),
        Granularity::Class => target.class_path.clone(),
        Granularity::Method => format!("{};->{}", target.class_path, target.name),
    })
}

fn valid_segment(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '$' | '-'))
}

fn valid_package(s: &str) -> bool {
    s.split('/')
        .all(|seg| valid_segment(seg) && !seg.starts_with(|c: char| c.is_ascii_uppercase()))
}

fn valid_class(s: &str) -> bool {
    let (pkg, name) = match s.rfind('/') {
        Some(i) => (&s[..i], &s[i + 1..]),
        None => ("", s),
    };
    (pkg.is_empty() || valid_package(pkg))
        && valid_segment(name)
        && name.starts_with(|c: char| c.is_ascii_uppercase())
}

fn valid_method(s: &str, with_descriptor: bool) -> bool {
    let Some((class, member)) = s.split_once(";->") else {
        return false;
    };
    let name = if with_descriptor {
        match member.split_once('(') {
            Some((n, d)) if d.contains(')') && !d.ends_with(')') => n,
            _ => return false,
        }
    } else {
        member
    };
    let name_ok = name == "<init>"
        || name == "<clinit>"
        || (!name.is_empty()
            && name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '$' | '-')));
    valid_class(class) && name_ok
}

/// The ordered System-API vocabulary at one granularity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiReferenceList {
    granularity: Granularity,
    api_level: Option<u32>,
    method_descriptors: bool,
    entries: Vec<String>,
    index_of: HashMap<String, usize>,
    fingerprint: Fingerprint,
    duplicates_dropped: usize,
}

impl ApiReferenceList {
    /// Build from keys in any order; duplicates are dropped.
    pub fn from_keys<I, S>(granularity: Granularity, keys: I) -> Result<Self, ReferenceError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::build(granularity, None, false, keys.into_iter().map(|k| (0, k.into())))
    }

    /// Method-granularity list whose keys include the descriptor.
    pub fn from_keys_with_descriptors<I, S>(keys: I) -> Result<Self, ReferenceError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::build(
            Granularity::Method,
            None,
            true,
            keys.into_iter().map(|k| (0, k.into())),
        )
    }

    fn build(
        granularity: Granularity,
        api_level: Option<u32>,
        method_descriptors: bool,
        keys: impl Iterator<Item = (usize, String)>,
    ) -> Result<Self, ReferenceError> {
        let mut entries = Vec::new();
        for (line, key) in keys {
            let ok = match granularity {
                Granularity::Package => valid_package(&key),
                Granularity::Class => valid_class(&key),
                Granularity::Method => valid_method(&key, method_descriptors),
            };
            if !ok {
                return Err(ReferenceError::MalformedKey {
                    granularity,
                    line,
                    key,
                });
            }
            entries.push(key);
        }
        let before = entries.len();
        entries.sort_unstable();
        entries.dedup();
        let duplicates_dropped = before - entries.len();
        let index_of = entries
            .iter()
            .enumerate()
            .map(|(i, k)| (k.clone(), i))
            .collect();
        let fingerprint = compute_fingerprint(granularity, method_descriptors, &entries);
        Ok(ApiReferenceList {
            granularity,
            api_level,
            method_descriptors,
            entries,
            index_of,
            fingerprint,
            duplicates_dropped,
        })
    }

    pub fn parse(text: &str, expected: Granularity) -> Result<Self, ReferenceError> {
        let mut granularity = None;
        let mut api_level = None;
        let mut descriptors = false;
        let mut keys = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let Some((k, v)) = comment.split_once(':') else {
                    continue;
                };
                let v = v.trim();
                let bad = |reason: String| ReferenceError::BadHeader {
                    line: line_no,
                    reason,
                };
                match k.trim() {
                    "granularity" => granularity = Some(v.parse::<Granularity>().map_err(bad)?),
                    "api-level" => {
                        api_level = Some(v.parse::<u32>().map_err(|e| bad(e.to_string()))?)
                    }
                    "method-keys" => {
                        descriptors = match v {
                            "name" => false,
                            "descriptor" => true,
                            other => return Err(bad(format!("unknown method-keys `{other}`"))),
                        }
                    }
                    _ => {}
                }
                continue;
            }
            keys.push((line_no, line.to_string()));
        }
        let found = granularity.ok_or(ReferenceError::MissingGranularity)?;
        if found != expected {
            return Err(ReferenceError::GranularityMismatch { expected, found });
        }
        let list = Self::build(found, api_level, descriptors, keys.into_iter())?;
        if list.duplicates_dropped > 0 {
            log::warn!(
                "reference list: dropped {} duplicate {} keys",
                list.duplicates_dropped,
                found
            );
        }
        Ok(list)
    }

    /// Load a reference-list file and check its declared granularity.
    pub fn load(path: impl AsRef<Path>, expected: Granularity) -> Result<Self, ReferenceError> {
        Self::parse(&std::fs::read_to_string(path)?, expected)
    }

    /// Serialize in the reference-list text format.
    pub fn to_text(&self) -> String {
        let mut s = format!("# granularity: {}\n", self.granularity);
        if let Some(level) = self.api_level {
            s.push_str(&format!("# api-level: {level}\n"));
        }
        if self.method_descriptors {
            s.push_str("# method-keys: descriptor\n");
        }
        for e in &self.entries {
            s.push_str(e);
            s.push('\n');
        }
        s
    }

    pub fn with_api_level(mut self, level: u32) -> Self {
        self.api_level = Some(level);
        self
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn api_level(&self) -> Option<u32> {
        self.api_level
    }

    pub fn method_descriptors(&self) -> bool {
        self.method_descriptors
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    /// Number of duplicate keys dropped while loading.
    pub fn duplicates_dropped(&self) -> usize {
        self.duplicates_dropped
    }

    pub fn index(&self, key: &str) -> Option<usize> {
        self.index_of.get(key).copied()
    }

    /// Feature index counted for an invoke of `target`, if any.
    pub fn lookup(&self, target: &MethodRef) -> Option<usize> {
        if target.class_path.is_empty() {
            return None;
        }
        match self.granularity {
            Granularity::Package => self.index(&target.package),
            Granularity::Class => self.index(&target.class_path),
            Granularity::Method => {
                let mut key = String::with_capacity(
                    target.class_path.len() + target.name.len() + target.descriptor.len() + 3,
                );
                key.push_str(&target.class_path);
                key.push_str(";->");
                key.push_str(&target.name);
                if self.method_descriptors {
                    key.push_str(&target.descriptor);
                }
                self.index(&key)
            }
        }
    }

    /// Project a finer list onto a coarser granularity.
    pub fn project(&self, to: Granularity) -> Result<ApiReferenceList, ReferenceError> {
        if to >= self.granularity {
            return Err(ReferenceError::InvalidProjection {
                from: self.granularity,
                to,
            });
        }
        let keys = self.entries.iter().map(|k| {
            let class = match k.split_once(";->") {
                Some((c, _)) => c,
                None => k.as_str(),
            };
            match to {
                Granularity::Class => class.to_string(),
                _ => package_of(class).to_string(),
            }
        });
        let mut list = Self::build(to, self.api_level, false, keys.map(|k| (0, k)))?;
        list.duplicates_dropped = 0;
        Ok(list)
    }
}

fn compute_fingerprint(g: Granularity, descriptors: bool, entries: &[String]) -> Fingerprint {
    let mut h = Sha256::new();
    h.update(g.as_str().as_bytes());
    h.update(if descriptors { b"\x01" } else { b"\x00" });
    for e in entries {
        h.update(e.as_bytes());
        h.update(b"\n");
    }
    let digest = h.finalize();
    let mut out = [0u8; 16];
    out.copy_from_slice(&digest[..16]);
    Fingerprint(out)
}

const BUNDLED_METHOD: &str = include_str!("../data/reference/method.txt");
const BUNDLED_CLASS: &str = include_str!("../data/reference/class.txt");
const BUNDLED_PACKAGE: &str = include_str!("../data/reference/package.txt");

/// Text of the vocabulary shipped with the crate at `g`.
pub fn bundled_text(g: Granularity) -> &'static str {
    match g {
        Granularity::Package => BUNDLED_PACKAGE,
        Granularity::Class => BUNDLED_CLASS,
        Granularity::Method => BUNDLED_METHOD,
    }
}

/// The shipped vocabulary at `g`: a desk-scale System-API list whose class
/// and package lists are projections of the method list.
pub fn bundled_list(g: Granularity) -> ApiReferenceList {
    ApiReferenceList::parse(bundled_text(g), g).expect("bundled reference list parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fis_read() -> MethodRef {
        MethodRef::new("java/io/FileInputStream", "read", "([B)I")
    }

    #[test]
    fn parse_package_list() {
        let text = "# granularity: package\n# api-level: 25\njava/io\njavax/crypto\njava/lang\n";
        let l = ApiReferenceList::parse(text, Granularity::Package).unwrap();
        assert_eq!(l.entries(), ["java/io", "java/lang", "javax/crypto"]);
        assert_eq!(l.api_level(), Some(25));
        assert_eq!(l.index("javax/crypto"), Some(2));
    }

    #[test]
    fn duplicates_collapse_with_count() {
        let text = "# granularity: package\njava/io\njava/io\n\n# note\njava/io\n";
        let l = ApiReferenceList::parse(text, Granularity::Package).unwrap();
        assert_eq!(l.len(), 1);
        assert_eq!(l.duplicates_dropped(), 2);
    }

    #[test]
    fn format_violations() {
        let text = "# granularity: package\njava/io\njava/io/FileInputStream\n";
        match ApiReferenceList::parse(text, Granularity::Package).unwrap_err() {
            ReferenceError::MalformedKey { line, .. } => assert_eq!(line, 3),
            e => panic!("{e}"),
        }
        let text = "# granularity: class\njava/io\n";
        assert!(matches!(
            ApiReferenceList::parse(text, Granularity::Class),
            Err(ReferenceError::MalformedKey { line: 2, .. })
        ));
        let text = "# granularity: method\njava/io/File;->delete()Z\n";
        assert!(ApiReferenceList::parse(text, Granularity::Method).is_err());
        let text = "# granularity: method\n# method-keys: descriptor\njava/io/File;->delete()Z\n";
        assert!(ApiReferenceList::parse(text, Granularity::Method).is_ok());
    }

    #[test]
    fn header_checks() {
        assert!(matches!(
            ApiReferenceList::parse("# granularity: class\n", Granularity::Package),
            Err(ReferenceError::GranularityMismatch { .. })
        ));
        assert!(matches!(
            ApiReferenceList::parse("java/io\n", Granularity::Package),
            Err(ReferenceError::MissingGranularity)
        ));
    }

    #[test]
    fn key_of_each_granularity() {
        let m = fis_read();
        assert_eq!(key_of(&m, Granularity::Method).unwrap(), "java/io/FileInputStream;->read");
        assert_eq!(key_of(&m, Granularity::Class).unwrap(), "java/io/FileInputStream");
        assert_eq!(key_of(&m, Granularity::Package).unwrap(), "java/io");
        let bare = MethodRef::new("Foo", "bar", "()V");
        assert_eq!(key_of(&bare, Granularity::Package).unwrap(), "");
        let pkgs = ApiReferenceList::from_keys(Granularity::Package, ["java/io"]).unwrap();
        assert_eq!(pkgs.lookup(&bare), None);
        let empty = MethodRef::new("", "x", "()V");
        assert_eq!(key_of(&empty, Granularity::Class), None);
    }

    #[test]
    fn descriptor_keys_keep_overloads_apart() {
        let l = ApiReferenceList::from_keys_with_descriptors([
            "java/io/FileInputStream;->read([B)I",
            "java/io/FileInputStream;->read()I",
        ])
        .unwrap();
        assert_eq!(l.lookup(&fis_read()), l.index("java/io/FileInputStream;->read([B)I"));
        let named = ApiReferenceList::from_keys(
            Granularity::Method,
            ["java/io/FileInputStream;->read"],
        )
        .unwrap();
        assert_eq!(
            named.lookup(&MethodRef::new("java/io/FileInputStream", "read", "()I")),
            Some(0)
        );
        assert_ne!(l.fingerprint(), named.fingerprint());
    }

    #[test]
    fn projections() {
        let m = ApiReferenceList::from_keys(
            Granularity::Method,
            ["java/io/FileInputStream;->read", "java/io/FileInputStream;->close"],
        )
        .unwrap();
        let c = m.project(Granularity::Class).unwrap();
        assert_eq!(c.entries(), ["java/io/FileInputStream"]);
        let p = c.project(Granularity::Package).unwrap();
        assert_eq!(p.entries(), ["java/io"]);
        assert!(matches!(
            p.project(Granularity::Package),
            Err(ReferenceError::InvalidProjection { .. })
        ));
        assert!(c.project(Granularity::Method).is_err());
    }

    #[test]
    fn fingerprint_ignores_file_order_and_round_trips() {
        let a = ApiReferenceList::from_keys(Granularity::Package, ["java/io", "java/lang"]).unwrap();
        let b = ApiReferenceList::from_keys(Granularity::Package, ["java/lang", "java/io"]).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        let s = a.fingerprint().to_string();
        assert_eq!(s.parse::<Fingerprint>().unwrap(), a.fingerprint());
        let c = ApiReferenceList::parse(&a.to_text(), Granularity::Package).unwrap();
        assert_eq!(c, a);
    }

    fn method_key() -> impl Strategy<Value = String> {
        (
            prop::collection::vec("[a-z][a-z0-9]{0,3}", 1..3),
            "[A-Z][a-zA-Z]{0,3}",
            "[a-z][a-zA-Z]{0,3}",
        )
            .prop_map(|(pkg, class, name)| format!("{}/{};->{}", pkg.join("/"), class, name))
    }

    proptest! {
        #[test]
        fn projection_composes(keys in prop::collection::vec(method_key(), 1..30)) {
            let m = ApiReferenceList::from_keys(Granularity::Method, keys).unwrap();
            let via_class = m.project(Granularity::Class).unwrap().project(Granularity::Package).unwrap();
            let direct = m.project(Granularity::Package).unwrap();
            prop_assert_eq!(via_class.entries(), direct.entries());
            prop_assert_eq!(via_class.fingerprint(), direct.fingerprint());
        }

        #[test]
        fn present_keys_resolve_to_one_index(keys in prop::collection::vec(method_key(), 1..30)) {
            let m = ApiReferenceList::from_keys(Granularity::Method, keys).unwrap();
            for g in Granularity::ALL {
                let list = if g == Granularity::Method { m.clone() } else { m.project(g).unwrap() };
                for key in m.entries() {
                    let (class, name) = key.split_once(";->").unwrap();
                    let target = MethodRef::new(class, name, "()V");
                    let k = key_of(&target, g).unwrap();
                    let hits: Vec<_> = list.entries().iter().enumerate().filter(|(_, e)| **e == k).collect();
                    prop_assert_eq!(hits.len(), 1);
                    prop_assert_eq!(list.lookup(&target), Some(hits[0].0));
                }
            }
        }
    }
}
