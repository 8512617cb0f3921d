//! Synthetic inputs for tests, benches and the acceptance suite: DEX and
//! APK writers, labeled corpora, and the worked-example fixtures.

pub mod corpus;
pub mod dexgen;
pub mod zipgen;

use crate::ingest::parse_invoke_list;
use crate::invoke::InvokeSite;
use crate::reference::{ApiReferenceList, Granularity};

pub const LOCKER_FIXTURE: &str = include_str!("../../data/fixtures/locker.txt");
pub const CRYPTO_FIXTURE: &str = include_str!("../../data/fixtures/crypto.txt");

/// The locker snippet's invokes.
pub fn locker_fixture() -> Vec<InvokeSite> {
    parse_invoke_list(LOCKER_FIXTURE).expect("fixture parses")
}

/// The crypto snippet's invokes.
pub fn crypto_fixture() -> Vec<InvokeSite> {
    parse_invoke_list(CRYPTO_FIXTURE).expect("fixture parses")
}

/// The small reference subsets used with the crypto snippet.
pub fn crypto_subset_reference(g: Granularity) -> ApiReferenceList {
    let text = match g {
        Granularity::Package => include_str!("../../data/fixtures/crypto_subset_package.txt"),
        Granularity::Class => include_str!("../../data/fixtures/crypto_subset_class.txt"),
        Granularity::Method => include_str!("../../data/fixtures/crypto_subset_method.txt"),
    };
    ApiReferenceList::parse(text, g).expect("fixture parses")
}
