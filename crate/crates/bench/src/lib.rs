//! Inputs shared by the benchmarks.

use apiscan_core::testkit::corpus::{corpus, dataset, reference_list};
use apiscan_core::testkit::dexgen::{large_dex, GeneratedDex};
use apiscan_core::{Granularity, LabeledDataset, MethodRef};

/// Invoke targets covering the bundled method vocabulary.
pub fn vocabulary_targets() -> Vec<MethodRef> {
    reference_list(Granularity::Method)
        .entries()
        .iter()
        .map(|k| {
            let (class, name) = k.split_once(";->").expect("method key");
            MethodRef::new(class, name, "()V")
        })
        .collect()
}

/// A DEX of at least `mib` MiB whose invokes hit the vocabulary.
pub fn dex_of_size(mib: usize) -> GeneratedDex {
    large_dex(mib << 20, &vocabulary_targets(), mib as u64)
}

pub fn synthetic_dataset(per_class: usize, g: Granularity) -> LabeledDataset {
    dataset(&corpus(per_class, 1), &reference_list(g))
}
