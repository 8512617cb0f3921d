//! Static classification of Android applications as trusted, generic
//! malware or ransomware from System-API occurrence counts.
//!
//! The pipeline is: [`ingest`] the APK and find its DEX files, [`dex`]-parse
//! them and enumerate invoke instructions, count the targets that belong to a
//! [`reference`] vocabulary ([`features`]), and score the resulting vector
//! with a [`forest`]. [`eval`] runs the evaluation protocols on labeled
//! corpora and [`obfuscate`] simulates commercial obfuscators on invoke
//! lists.

pub mod dex;
pub mod eval;
pub mod features;
pub mod forest;
pub mod ingest;
pub mod invoke;
pub mod obfuscate;
pub mod reference;

#[cfg(feature = "testkit")]
pub mod testkit;

pub use eval::{EvalError, ExperimentReport, RocCurve};
pub use dex::{extract_invokes, parse_dex, DexError, DexFile, ParseOptions};
pub use features::{extract_features, extract_from_apk, ExtractError, FeatureVector};
pub use forest::{
    load_model, save_model, train_forest, ForestError, HyperParams, Label, LabeledDataset,
    RandomForestModel, Sample,
};
pub use ingest::{open_apk, ApkPackage, IngestError};
pub use invoke::{InvokeKind, InvokeSite, MethodRef};
pub use obfuscate::{transform, ObfuscationKind, ObfuscationTransform};
pub use reference::{bundled_list, key_of, ApiReferenceList, Fingerprint, Granularity, ReferenceError};
