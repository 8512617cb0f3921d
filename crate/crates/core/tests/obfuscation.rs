use apiscan_core::obfuscate::{is_framework_class, STRING_DECRYPTOR_CLASS};
use apiscan_core::testkit::corpus::reference_list;
use apiscan_core::{
    extract_features, transform, Granularity, InvokeKind, InvokeSite, MethodRef, ObfuscationKind,
    ObfuscationTransform,
};
use proptest::prelude::*;

const CALLERS: &[&str] = &["com/app/Main", "com/app/net/Sync", "android/support/v4/app/Fragment", "java/util/Timer"];
const TARGETS: &[(&str, &str)] = &[
    ("java/io/File", "delete"),
    ("javax/crypto/Cipher", "doFinal"),
    ("android/app/admin/DevicePolicyManager", "lockNow"),
    ("com/app/Helper", "run"),
];

fn sites() -> impl Strategy<Value = Vec<InvokeSite>> {
    prop::collection::vec(
        (prop::sample::select(CALLERS), prop::sample::select(TARGETS)).prop_map(|(c, (cl, n))| {
            InvokeSite::new(InvokeKind::Virtual, c, MethodRef::new(cl, n, "()V"))
        }),
        0..30,
    )
}

fn stub(kind: ObfuscationKind) -> Vec<InvokeSite> {
    ObfuscationTransform::new(kind, 0).stub_profile
}

proptest! {
    #[test]
    fn string_encryption_only_appends_decrypt_calls(s in sites(), seed: u64) {
        let out = transform(&s, &ObfuscationTransform::new(ObfuscationKind::StringEncryption, seed));
        prop_assert_eq!(&out[..s.len()], &s[..]);
        let extra = &out[s.len()..];
        prop_assert!((1..=5).contains(&extra.len()));
        prop_assert!(extra.iter().all(|x| x.target.class_path == STRING_DECRYPTOR_CLASS));
        for g in [Granularity::Package, Granularity::Class, Granularity::Method] {
            let list = reference_list(g);
            prop_assert_eq!(extract_features(&out, &list), extract_features(&s, &list));
        }
    }

    #[test]
    fn resource_encryption_adds_the_stub(s in sites(), seed: u64) {
        let out = transform(&s, &ObfuscationTransform::new(ObfuscationKind::ResourceEncryption, seed));
        let stub = stub(ObfuscationKind::ResourceEncryption);
        prop_assert_eq!(&out[..s.len()], &s[..]);
        prop_assert_eq!(&out[out.len() - stub.len()..], &stub[..]);
        let list = reference_list(Granularity::Method);
        let (before, after) = (extract_features(&s, &list), extract_features(&out, &list));
        let stub_fv = extract_features(&stub, &list);
        prop_assert_eq!(after, before.saturating_add(&stub_fv));
    }

    #[test]
    fn class_encryption_hides_user_code(s in sites(), seed: u64) {
        let out = transform(&s, &ObfuscationTransform::new(ObfuscationKind::ClassEncryption, seed));
        let kept: Vec<InvokeSite> = s.iter().filter(|x| is_framework_class(&x.caller_class)).cloned().collect();
        let mut want = kept;
        want.extend(stub(ObfuscationKind::ClassEncryption));
        prop_assert_eq!(out, want);
    }

    #[test]
    fn transforms_are_deterministic(s in sites(), seed: u64, k in 0usize..3) {
        let kind = [ObfuscationKind::StringEncryption, ObfuscationKind::ResourceEncryption, ObfuscationKind::ClassEncryption][k];
        let t = ObfuscationTransform::new(kind, seed);
        prop_assert_eq!(transform(&s, &t), transform(&s, &t));
    }
}

#[test]
fn user_only_apps_collapse_to_the_stub_under_class_encryption() {
    let a = vec![InvokeSite::new(InvokeKind::Virtual, "com/x/A", MethodRef::new("java/io/File", "delete", "()Z"))];
    let b = vec![InvokeSite::new(InvokeKind::Virtual, "org/y/B", MethodRef::new("javax/crypto/Cipher", "init", "()V"))];
    let t = ObfuscationTransform::new(ObfuscationKind::ClassEncryption, 1);
    assert_eq!(transform(&a, &t), transform(&b, &t));
    assert_eq!(transform(&a, &t), stub(ObfuscationKind::ClassEncryption));
}
