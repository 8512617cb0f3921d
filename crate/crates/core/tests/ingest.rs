use std::io::Cursor;

use apiscan_core::features::extract_from_blobs;
use apiscan_core::ingest::{load_invoke_list_text, read_apk};
use apiscan_core::testkit::dexgen::{dex_from_invokes, random_dex};
use apiscan_core::testkit::zipgen::{build_apk, entry_spans, write_zip, AccessLog, Method, ZipEntry};
use apiscan_core::testkit::{crypto_fixture, crypto_subset_reference};
use apiscan_core::{extract_from_apk, open_apk, Granularity, IngestError, ParseOptions};

#[test]
fn single_dex_package() {
    let dex = random_dex(1).bytes;
    let apk = write_zip(
        &[
            ZipEntry::new("AndroidManifest.xml", b"manifest".to_vec(), Method::Deflated),
            ZipEntry::new("classes.dex", dex.clone(), Method::Deflated),
        ],
        b"",
    );
    let pkg = read_apk(Cursor::new(&apk)).unwrap();
    assert_eq!(pkg.dex_blobs, vec![dex]);
    assert_eq!(pkg.total_size_bytes, apk.len() as u64);
}

#[test]
fn multidex_in_numeric_order() {
    let blobs: Vec<Vec<u8>> = (0..11).map(|s| random_dex(s).bytes).collect();
    // Directory order deliberately scrambled.
    let mut entries: Vec<ZipEntry> = blobs
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let name = if i == 0 { "classes.dex".into() } else { format!("classes{}.dex", i + 1) };
            ZipEntry::new(name, b.clone(), Method::Stored)
        })
        .collect();
    entries.reverse();
    entries.push(ZipEntry::new("classes01.dex", b"not dex".to_vec(), Method::Stored));
    entries.push(ZipEntry::new("lib/classes.dex", b"not dex".to_vec(), Method::Stored));
    let pkg = read_apk(Cursor::new(write_zip(&entries, b""))).unwrap();
    assert_eq!(pkg.dex_blobs, blobs);
}

#[test]
fn manifest_only_is_no_dex_found() {
    let apk = write_zip(&[ZipEntry::new("AndroidManifest.xml", b"m".to_vec(), Method::Stored)], b"");
    assert!(matches!(read_apk(Cursor::new(apk)), Err(IngestError::NoDexFound)));
}

#[test]
fn garbage_and_truncation_are_not_zip() {
    assert!(matches!(read_apk(Cursor::new(b"hello".to_vec())), Err(IngestError::NotAZipArchive(_))));
    let apk = build_apk(&[random_dex(2).bytes]);
    for cut in [apk.len() - 1, apk.len() - 30, apk.len() / 2, 10] {
        assert!(
            matches!(read_apk(Cursor::new(&apk[..cut])), Err(IngestError::NotAZipArchive(_))),
            "cut at {cut}"
        );
    }
}

#[test]
fn corrupted_dex_data_fails_crc() {
    let apk = write_zip(&[ZipEntry::new("classes.dex", random_dex(4).bytes, Method::Stored)], b"");
    let mut bad = apk.clone();
    let (_, span) = &entry_spans(&apk)[0];
    bad[span.end as usize - 1] ^= 1;
    assert!(matches!(read_apk(Cursor::new(bad)), Err(IngestError::NotAZipArchive(_))));
}

#[test]
fn archive_comment_is_tolerated() {
    let apk = write_zip(&[ZipEntry::new("classes.dex", random_dex(5).bytes, Method::Deflated)], &[b'x'; 300]);
    assert_eq!(read_apk(Cursor::new(apk)).unwrap().dex_blobs.len(), 1);
}

#[test]
fn non_dex_entries_are_never_read() {
    let apk = build_apk(&[random_dex(6).bytes, random_dex(7).bytes]);
    let mut log = AccessLog::new(Cursor::new(&apk));
    read_apk(&mut log).unwrap();
    let spans = entry_spans(&apk);
    assert_eq!(spans.len(), 6);
    for (name, span) in spans {
        let is_dex = name.starts_with("classes");
        assert_eq!(log.touched(span), is_dex, "{name}");
    }
}

#[test]
fn open_apk_from_disk_and_multidex_additivity() {
    let dir = tempfile::tempdir().unwrap();
    let dex = dex_from_invokes(&crypto_fixture(), 9).bytes;
    let one = dir.path().join("one.apk");
    let two = dir.path().join("two.apk");
    std::fs::write(&one, build_apk(std::slice::from_ref(&dex))).unwrap();
    std::fs::write(&two, build_apk(&[dex.clone(), dex])).unwrap();

    let pkg = open_apk(&one).unwrap();
    assert_eq!(pkg.path, one);

    // Sorted package keys: java/io, java/lang, javax/crypto.
    let list = crypto_subset_reference(Granularity::Package);
    let opts = ParseOptions::strict();
    assert_eq!(extract_from_apk(&one, &list, opts).unwrap().counts, vec![2, 0, 2]);
    assert_eq!(extract_from_apk(&two, &list, opts).unwrap().counts, vec![4, 0, 4]);
}

#[test]
fn zero_invoke_package_is_zero_vector() {
    let dex = dex_from_invokes(&[], 0).bytes;
    let list = crypto_subset_reference(Granularity::Method);
    let fv = extract_from_blobs(&[dex], &list, ParseOptions::strict()).unwrap();
    assert_eq!(fv.counts, vec![0; 4]);
}

#[test]
fn missing_file_is_io_error() {
    assert!(matches!(open_apk("/nonexistent/app.apk"), Err(IngestError::Io(_))));
    assert!(matches!(load_invoke_list_text("/nonexistent/list.txt"), Err(IngestError::Io(_))));
}

#[test]
fn invoke_list_examples() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("l.txt");
    std::fs::write(&p, "# only\n# comments\n").unwrap();
    assert!(load_invoke_list_text(&p).unwrap().is_empty());
    std::fs::write(&p, "invoke-bogus X Y\n").unwrap();
    assert!(matches!(load_invoke_list_text(&p), Err(IngestError::MalformedLine { line: 1, .. })));
}
