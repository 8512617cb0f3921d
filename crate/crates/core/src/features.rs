//! Occurrence feature vectors over a reference list.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dex::{self, DexError, DexFile, ParseOptions};
use crate::ingest::{self, IngestError};
use crate::invoke::InvokeSite;
use crate::reference::{ApiReferenceList, Fingerprint};

/// Counts saturate here instead of wrapping.
pub const COUNT_CEILING: u32 = i32::MAX as u32;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("dex #{index}: {source}")]
    Dex { index: usize, source: DexError },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub counts: Vec<u32>,
    pub reference_fingerprint: Fingerprint,
}

impl FeatureVector {
    pub fn zeros(list: &ApiReferenceList) -> Self {
        FeatureVector {
            counts: vec![0; list.len()],
            reference_fingerprint: list.fingerprint(),
        }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// Elementwise saturating sum. Panics if the vectors come from different
    /// reference lists.
    pub fn saturating_add(&self, other: &FeatureVector) -> FeatureVector {
        assert_eq!(self.reference_fingerprint, other.reference_fingerprint);
        FeatureVector {
            counts: self
                .counts
                .iter()
                .zip(&other.counts)
                .map(|(a, b)| a.saturating_add(*b).min(COUNT_CEILING))
                .collect(),
            reference_fingerprint: self.reference_fingerprint,
        }
    }

    fn bump(&mut self, i: usize) {
        let c = &mut self.counts[i];
        if *c < COUNT_CEILING {
            *c += 1;
        }
    }
}

/// Count, for each reference key, the invoke sites whose target maps to it.
/// Sites outside the vocabulary are ignored.
pub fn extract_features(invokes: &[InvokeSite], list: &ApiReferenceList) -> FeatureVector {
    let mut fv = FeatureVector::zeros(list);
    for site in invokes {
        if let Some(i) = list.lookup(&site.target) {
            fv.bump(i);
        }
    }
    fv
}

/// Count directly from a parsed DEX without materializing invoke sites.
/// Agrees with `extract_features(&extract_invokes(dex)?, list)`.
pub fn extract_from_dex(dex: &DexFile<'_>, list: &ApiReferenceList) -> Result<FeatureVector, DexError> {
    let mut fv = FeatureVector::zeros(list);
    accumulate_dex(dex, list, &mut fv)?;
    Ok(fv)
}

fn accumulate_dex(
    dex: &DexFile<'_>,
    list: &ApiReferenceList,
    fv: &mut FeatureVector,
) -> Result<(), DexError> {
    // Resolve each method id at most once.
    const UNRESOLVED: u32 = u32::MAX;
    const NOT_COUNTED: u32 = u32::MAX - 1;
    let mut slot = vec![UNRESOLVED; dex.method_table.len()];
    dex::for_each_invoke(dex, |_, idx, _| {
        let s = &mut slot[idx as usize];
        if *s == UNRESOLVED {
            *s = dex::resolve_method(dex, idx)
                .and_then(|m| list.lookup(&m))
                .map_or(NOT_COUNTED, |i| i as u32);
        }
        if *s != NOT_COUNTED {
            fv.bump(*s as usize);
        }
    })
}

/// Every invoke site of every DEX in the package, concatenated in multidex
/// order.
pub fn invokes_from_apk(path: impl AsRef<Path>, opts: ParseOptions) -> Result<Vec<InvokeSite>, ExtractError> {
    let pkg = ingest::open_apk(path)?;
    let mut all = Vec::new();
    for (index, blob) in pkg.dex_blobs.iter().enumerate() {
        let dex = dex::parse_dex(blob, opts).map_err(|source| ExtractError::Dex { index, source })?;
        all.extend(dex::extract_invokes(&dex).map_err(|source| ExtractError::Dex { index, source })?);
    }
    Ok(all)
}

/// Open an APK, parse each embedded DEX and count reference-list hits.
pub fn extract_from_apk(
    path: impl AsRef<Path>,
    list: &ApiReferenceList,
    opts: ParseOptions,
) -> Result<FeatureVector, ExtractError> {
    let pkg = ingest::open_apk(path)?;
    extract_from_blobs(&pkg.dex_blobs, list, opts)
}

pub fn extract_from_blobs(
    blobs: &[Vec<u8>],
    list: &ApiReferenceList,
    opts: ParseOptions,
) -> Result<FeatureVector, ExtractError> {
    let mut fv = FeatureVector::zeros(list);
    for (index, blob) in blobs.iter().enumerate() {
        let dex = dex::parse_dex(blob, opts).map_err(|source| ExtractError::Dex { index, source })?;
        accumulate_dex(&dex, list, &mut fv).map_err(|source| ExtractError::Dex { index, source })?;
    }
    Ok(fv)
}

/// Write feature vectors as CSV: `id,label,<key>...`, one row per sample.
pub fn write_feature_csv<'a, W: Write>(
    out: W,
    list: &ApiReferenceList,
    rows: impl IntoIterator<Item = (&'a str, &'a str, &'a FeatureVector)>,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id", "label"];
    header.extend(list.entries().iter().map(String::as_str));
    w.write_record(&header)?;
    for (id, label, fv) in rows {
        if fv.reference_fingerprint != list.fingerprint() {
            return Err(csv::Error::from(std::io::Error::other(format!(
                "feature vector for {id} was built against another reference list"
            ))));
        }
        let mut rec = vec![id.to_string(), label.to_string()];
        rec.extend(fv.counts.iter().map(u32::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invoke::{InvokeKind, MethodRef};
    use crate::reference::Granularity;
    use proptest::prelude::*;

    fn site(class: &str, name: &str) -> InvokeSite {
        InvokeSite::new(InvokeKind::Virtual, "com/a/B", MethodRef::new(class, name, "()V"))
    }

    #[test]
    fn empty_invoke_list_gives_zero_vector() {
        let l = ApiReferenceList::from_keys(Granularity::Package, ["java/io"]).unwrap();
        assert_eq!(extract_features(&[], &l).counts, vec![0]);
    }

    #[test]
    fn non_members_ignored() {
        let l = ApiReferenceList::from_keys(Granularity::Class, ["java/io/File"]).unwrap();
        let fv = extract_features(
            &[site("java/io/File", "delete"), site("com/evil/Payload", "run"), site("java/io/File", "exists")],
            &l,
        );
        assert_eq!(fv.counts, vec![2]);
        assert_eq!(fv.reference_fingerprint, l.fingerprint());
    }

    #[test]
    fn saturates_at_ceiling() {
        let l = ApiReferenceList::from_keys(Granularity::Package, ["java/io"]).unwrap();
        let mut fv = FeatureVector::zeros(&l);
        fv.counts[0] = COUNT_CEILING - 1;
        fv.bump(0);
        fv.bump(0);
        assert_eq!(fv.counts[0], COUNT_CEILING);
        assert_eq!(fv.saturating_add(&fv).counts[0], COUNT_CEILING);
    }

    #[test]
    fn csv_layout() {
        let l = ApiReferenceList::from_keys(Granularity::Package, ["java/lang", "java/io"]).unwrap();
        let fv = extract_features(&[site("java/io/File", "delete")], &l);
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, &l, [("app1", "ransomware", &fv)]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "id,label,java/io,java/lang\napp1,ransomware,1,0\n"
        );
    }

    const CLASSES: &[&str] = &[
        "java/io/File",
        "java/io/FileInputStream",
        "java/lang/String",
        "javax/crypto/Cipher",
        "com/app/Main",
    ];
    const NAMES: &[&str] = &["a", "b", "close", "<init>"];

    fn sites() -> impl Strategy<Value = Vec<InvokeSite>> {
        prop::collection::vec(
            (prop::sample::select(CLASSES), prop::sample::select(NAMES))
                .prop_map(|(c, n)| site(c, n)),
            0..40,
        )
    }

    fn method_list() -> ApiReferenceList {
        let keys = CLASSES[..4]
            .iter()
            .flat_map(|c| NAMES.iter().map(move |n| format!("{c};->{n}")));
        ApiReferenceList::from_keys(Granularity::Method, keys).unwrap()
    }

    proptest! {
        #[test]
        fn additive(a in sites(), b in sites()) {
            let l = method_list();
            let ab: Vec<_> = a.iter().chain(&b).cloned().collect();
            prop_assert_eq!(
                extract_features(&ab, &l),
                extract_features(&a, &l).saturating_add(&extract_features(&b, &l))
            );
        }

        #[test]
        fn permutation_invariant(mut a in sites(), seed: u64) {
            let l = method_list();
            let before = extract_features(&a, &l);
            use rand::{seq::SliceRandom, SeedableRng};
            a.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(before, extract_features(&a, &l));
        }

        #[test]
        fn granularities_consistent(a in sites()) {
            let m = method_list();
            let c = m.project(Granularity::Class).unwrap();
            let p = m.project(Granularity::Package).unwrap();
            let (fm, fc, fp) = (extract_features(&a, &m), extract_features(&a, &c), extract_features(&a, &p));
            for (ci, class) in c.entries().iter().enumerate() {
                let sum: u32 = m.entries().iter().enumerate()
                    .filter(|(_, k)| k.split_once(";->").unwrap().0 == class)
                    .map(|(i, _)| fm.counts[i]).sum();
                prop_assert_eq!(sum, fc.counts[ci]);
            }
            for (pi, pkg) in p.entries().iter().enumerate() {
                let sum: u32 = c.entries().iter().enumerate()
                    .filter(|(_, k)| crate::invoke::package_of(k) == pkg)
                    .map(|(i, _)| fc.counts[i]).sum();
                prop_assert_eq!(sum, fp.counts[pi]);
            }
            prop_assert!(fm.total() <= a.len() as u64);
        }
    }
}
