//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line for
//! each, and exits nonzero if any failed.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use apiscan_core::dex::{extract_invokes, parse_dex, ParseOptions};
use apiscan_core::eval::{
    obfuscation_eval, obfuscation_eval_with, random_split_eval, temporal_eval, AppInvokes, ObfuscationConfig,
    RandomSplitConfig, RocCurve, TemporalBin, TemporalConfig, TemporalSplitSpec,
};
use apiscan_core::features::extract_from_dex;
use apiscan_core::forest::{best_split, entropy, information_gain, ForestError, HyperParams, Label, LabeledDataset, Sample};
use apiscan_core::testkit::corpus::{corpus, dataset, reference_list, Generator, CorpusConfig, SyntheticApp};
use apiscan_core::testkit::dexgen::{dex_from_invokes, large_dex, random_dex};
use apiscan_core::testkit::zipgen::build_apk;
use apiscan_core::testkit::{crypto_fixture, crypto_subset_reference};
use apiscan_core::{
    extract_features, extract_from_apk, load_model, save_model, train_forest, FeatureVector, Fingerprint,
    Granularity, InvokeSite, MethodRef, ObfuscationKind, ObfuscationTransform,
};
use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned tolerances and budgets.
const FLOAT_TOL: f64 = 1e-12;
const DEX_ORACLE_FILES: u64 = 120;
const DEX_ORACLE_BUDGET: Duration = Duration::from_secs(30);
const PREDICTION_VECTORS: usize = 1000;
const BEST_SPLIT_CASES: usize = 3000;
const CORPUS_PER_CLASS: usize = 300;
const RANSOM_TPR_FLOOR: f64 = 0.95;
const EXPERIMENT1_BUDGET: Duration = Duration::from_secs(120);
const TEMPORAL_GAP: f64 = 0.10;
const PLUS_ONE_FLOOR: f64 = 0.95;
const THROUGHPUT_DEX_BYTES: usize = 5 * 1024 * 1024;
const THROUGHPUT_BUDGET: Duration = Duration::from_millis(200);
const THROUGHPUT_RUNS: usize = 5;
const ROC_CASES: usize = 3000;

const GRANULARITIES: [Granularity; 3] = [Granularity::Package, Granularity::Class, Granularity::Method];

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

fn reference_in_file_order(list: &apiscan_core::ApiReferenceList, text: &str) -> Vec<usize> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|k| list.index(k.trim()).expect("key in list"))
        .collect()
}

/// The crypto fixture compiled into a DEX inside an APK, counted against the
/// small reference subsets.
fn criterion_1() -> Outcome {
    let sites = crypto_fixture();
    let apk = build_apk(&[dex_from_invokes(&sites, 1).bytes]);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("crypto_fixture.apk");
    std::fs::write(&path, apk).map_err(|e| e.to_string())?;
    let files = [
        (Granularity::Package, include_str!("../data/fixtures/crypto_subset_package.txt"), vec![2, 2, 0]),
        (Granularity::Class, include_str!("../data/fixtures/crypto_subset_class.txt"), vec![2, 2]),
        (Granularity::Method, include_str!("../data/fixtures/crypto_subset_method.txt"), vec![1, 1, 1, 1]),
    ];
    let mut seen = Vec::new();
    for (g, text, want) in files {
        let list = crypto_subset_reference(g);
        let fv = extract_from_apk(&path, &list, ParseOptions::strict()).map_err(|e| e.to_string())?;
        let got: Vec<u32> = reference_in_file_order(&list, text).into_iter().map(|i| fv.counts[i]).collect();
        ensure(got == want, || format!("{g}: got {got:?}, want {want:?}"))?;
        seen.push(format!("{g} {got:?}"));
    }
    Ok(seen.join(", "))
}

fn multiset(sites: &[InvokeSite]) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for s in sites {
        *m.entry(format!("{} {} {}", s.kind.mnemonic(), s.caller_class, s.target)).or_default() += 1;
    }
    m
}

fn criterion_2() -> Outcome {
    let started = Instant::now();
    let mut sites = 0;
    for seed in 0..DEX_ORACLE_FILES {
        let g = random_dex(seed);
        let dex = parse_dex(&g.bytes, ParseOptions::strict()).map_err(|e| format!("seed {seed}: {e}"))?;
        let got = extract_invokes(&dex).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(multiset(&got) == multiset(&g.expected_invokes), || format!("seed {seed}: invoke multiset differs"))?;
        sites += got.len();
    }
    let took = started.elapsed();
    ensure(took < DEX_ORACLE_BUDGET, || format!("took {took:?}"))?;
    Ok(format!("{DEX_ORACLE_FILES} files, {sites} invoke sites, all match, {took:.2?}"))
}

fn criterion_3() -> Outcome {
    let data = dataset(&corpus(60, 3), &reference_list(Granularity::Class));
    let hp = HyperParams::default().with_trees(40).with_seed(99);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let m1 = train_forest(&data, &hp).map_err(|e| e.to_string())?;
    let m2 = train_forest(&data, &hp).map_err(|e| e.to_string())?;
    save_model(&m1, &a).map_err(|e| e.to_string())?;
    save_model(&m2, &b).map_err(|e| e.to_string())?;
    let (ba, bb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    ensure(ba == bb, || "model files differ".into())?;
    let loaded = load_model(&a).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..PREDICTION_VECTORS {
        let fv = FeatureVector {
            counts: (0..data.dim()).map(|_| if rng.random_bool(0.3) { rng.random_range(0..20) } else { 0 }).collect(),
            reference_fingerprint: data.fingerprint(),
        };
        let (p, q) = (m1.predict_proba(&fv).unwrap(), loaded.predict_proba(&fv).unwrap());
        ensure(p.map(f64::to_bits) == q.map(f64::to_bits), || format!("vector {i}: {p:?} vs {q:?}"))?;
    }
    Ok(format!("{} byte model files identical, {PREDICTION_VECTORS} predictions identical after reload", ba.len()))
}

const FP: Fingerprint = Fingerprint([1; 16]);

fn toy(rows: &[(Vec<u32>, Label)]) -> LabeledDataset {
    let samples = rows
        .iter()
        .enumerate()
        .map(|(i, (x, l))| Sample {
            id: format!("t{i}"),
            features: FeatureVector { counts: x.clone(), reference_fingerprint: FP },
            label: *l,
            first_seen: date(2016, 1, 1),
        })
        .collect();
    LabeledDataset::new(FP, rows[0].0.len(), samples).unwrap()
}

/// Entropy in bits, straight from the class frequencies.
fn h(labels: &[Label]) -> f64 {
    let n = labels.len() as f64;
    Label::ALL
        .iter()
        .map(|c| labels.iter().filter(|l| *l == c).count() as f64 / n)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum()
}

fn oracle_gain(rows: &[(Vec<u32>, Label)], f: usize, thr: f64) -> f64 {
    let all: Vec<Label> = rows.iter().map(|r| r.1).collect();
    let l: Vec<Label> = rows.iter().filter(|r| r.0[f] as f64 <= thr).map(|r| r.1).collect();
    let r: Vec<Label> = rows.iter().filter(|r| r.0[f] as f64 > thr).map(|r| r.1).collect();
    if l.is_empty() || r.is_empty() {
        return 0.0;
    }
    let n = rows.len() as f64;
    h(&all) - l.len() as f64 / n * h(&l) - r.len() as f64 / n * h(&r)
}

fn criterion_4() -> Outcome {
    let e = entropy([5, 5, 5]).map_err(|e| e.to_string())?;
    ensure((e - 3f64.log2()).abs() <= FLOAT_TOL, || format!("entropy(5,5,5) = {e}"))?;

    use Label::*;
    let rows = vec![
        (vec![0], Trusted),
        (vec![1], Trusted),
        (vec![7], Ransomware),
        (vec![8], Ransomware),
        (vec![9], Ransomware),
    ];
    let ht = h(&rows.iter().map(|r| r.1).collect::<Vec<_>>());
    let g = information_gain(&toy(&rows), 0, 4.0);
    ensure((g - ht).abs() <= FLOAT_TOL, || format!("separating gain {g} vs H(T) {ht}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..BEST_SPLIT_CASES {
        let n = rng.random_range(2..=8);
        let dim = rng.random_range(1..=3);
        let rows: Vec<(Vec<u32>, Label)> = (0..n)
            .map(|_| ((0..dim).map(|_| rng.random_range(0..5)).collect(), Label::ALL[rng.random_range(0..3)]))
            .collect();
        let mut best: Option<(usize, f64, f64)> = None;
        for f in 0..dim {
            let mut vals: Vec<u32> = rows.iter().map(|r| r.0[f]).collect();
            vals.sort();
            vals.dedup();
            for w in vals.windows(2) {
                let thr = (w[0] + w[1]) as f64 / 2.0;
                let g = oracle_gain(&rows, f, thr);
                if best.is_none_or(|b| g > b.2 + FLOAT_TOL) {
                    best = Some((f, thr, g));
                }
            }
        }
        let got = best_split(&toy(&rows), &(0..dim).collect::<Vec<_>>());
        match (best.filter(|b| b.2 > FLOAT_TOL), got) {
            (None, Err(ForestError::NoUsefulSplit)) => {}
            (Some(want), Ok(s)) => ensure(
                s.feature == want.0 && s.threshold == want.1 && (s.gain - want.2).abs() <= FLOAT_TOL,
                || format!("case {case}: got {s:?}, want {want:?}"),
            )?,
            (want, got) => return Err(format!("case {case}: got {got:?}, want {want:?}")),
        }
    }
    Ok(format!("entropy(5,5,5) - log2 3 = {:.1e}, {BEST_SPLIT_CASES} exhaustive best_split cases agree", e - 3f64.log2()))
}

fn curve_is_valid(c: &RocCurve) -> Result<(), String> {
    let in_unit = |v: f64| (0.0..=1.0).contains(&v);
    ensure(c.points.iter().all(|p| in_unit(p.fpr) && in_unit(p.tpr)), || "rate outside [0,1]".into())?;
    for w in c.points.windows(2) {
        ensure(
            w[0].threshold > w[1].threshold && w[0].fpr <= w[1].fpr && w[0].tpr <= w[1].tpr,
            || format!("not monotone at {:?} -> {:?}", w[0], w[1]),
        )?;
    }
    let last = c.points.last().ok_or("empty curve")?;
    ensure(last.fpr == 1.0 && last.tpr == 1.0, || format!("ends at {last:?}"))
}

fn criterion_5(curves: &mut Vec<RocCurve>) -> Outcome {
    let started = Instant::now();
    let apps = corpus(CORPUS_PER_CLASS, 7);
    let mut parts = Vec::new();
    for g in GRANULARITIES {
        let data = dataset(&apps, &reference_list(g));
        let report = random_split_eval(&data, &RandomSplitConfig { seed: 7, ..Default::default() })
            .map_err(|e| e.to_string())?;
        ensure(report.rows.len() == 5, || format!("{} repeats", report.rows.len()))?;
        let s = report.summary_of("ransomware_tpr_at_fpr").ok_or("no summary")?;
        parts.push(format!("{g} {:.3}±{:.3}", s.mean, s.std.unwrap_or(f64::NAN)));
        ensure(s.mean >= RANSOM_TPR_FLOOR, || format!("{g}: mean TPR@1%FPR {:.4}", s.mean))?;
        for c in &report.curves {
            curves.push(RocCurve { points: c.points.clone() });
        }
    }
    let took = started.elapsed();
    ensure(took < EXPERIMENT1_BUDGET, || format!("took {took:?}"))?;
    Ok(format!("ransomware TPR@1%FPR {}; {took:.1?}", parts.join(", ")))
}

fn criterion_6() -> Outcome {
    let mut gen = Generator::new(11);
    let mut apps = gen.generate(&CorpusConfig::new(CORPUS_PER_CLASS, 11));
    apps.extend(gen.drifted_ransomware(200, date(2017, 1, 1), date(2017, 12, 31), "drift"));
    let plan = TemporalSplitSpec {
        d_tr: date(2016, 12, 31),
        bins: vec![
            TemporalBin::new("2017-H1", date(2017, 1, 1), date(2017, 6, 30)),
            TemporalBin::new("2017-H2", date(2017, 7, 1), date(2017, 12, 31)),
        ],
    };
    let rate = |g: Granularity| -> Result<f64, String> {
        let report = temporal_eval(&dataset(&apps, &reference_list(g)), &plan, &TemporalConfig { seed: 11, ..Default::default() })
            .map_err(|e| e.to_string())?;
        let (mut det, mut n) = (0.0, 0.0);
        for b in &plan.bins {
            det += report.metric(&b.label, "detected").ok_or("empty bin")?;
            n += report.metric(&b.label, "samples").unwrap();
        }
        Ok(det / n)
    };
    let (m, p) = (rate(Granularity::Method)?, rate(Granularity::Package)?);
    ensure(m - p >= TEMPORAL_GAP, || format!("method {m:.3} vs package {p:.3}"))?;
    Ok(format!("detection on drifted bins: method {m:.3}, package {p:.3}, gap {:.3}", m - p))
}

fn criterion_7() -> Outcome {
    let apps: Vec<SyntheticApp> = corpus(CORPUS_PER_CLASS, 3);
    let inv: Vec<AppInvokes> = apps
        .iter()
        .map(|a| AppInvokes { id: a.id.clone(), label: a.label, first_seen: a.first_seen, invokes: a.invokes() })
        .collect();
    let cfg = ObfuscationConfig { seed: 3, ..Default::default() };
    let mut parts = Vec::new();
    for g in GRANULARITIES {
        let list = reference_list(g);
        let strings = ObfuscationTransform::new(ObfuscationKind::StringEncryption, 3);
        for a in inv.iter().filter(|a| a.label == Label::Ransomware) {
            ensure(
                extract_features(&strings.apply(&a.invokes), &list) == extract_features(&a.invokes, &list),
                || format!("{g}: string encryption changed the vector of {}", a.id),
            )?;
        }
        let s = obfuscation_eval(&inv, &list, &strings, false, &cfg).map_err(|e| e.to_string())?;
        let id = obfuscation_eval_with(&inv, &list, "identity", |x| x.to_vec(), false, &cfg).map_err(|e| e.to_string())?;
        ensure(s.rate == id.rate, || format!("{g}: string encryption {} vs originals {}", s.rate, id.rate))?;

        let class = ObfuscationTransform::new(ObfuscationKind::ClassEncryption, 3);
        let base = obfuscation_eval(&inv, &list, &class, false, &cfg).map_err(|e| e.to_string())?;
        let plus = obfuscation_eval(&inv, &list, &class, true, &cfg).map_err(|e| e.to_string())?;
        ensure(base.reserved == plus.reserved && base.evaluated == plus.evaluated, || "runs are not paired".into())?;
        ensure(plus.rate >= PLUS_ONE_FLOOR && plus.rate > base.rate, || {
            format!("{g}: class encryption baseline {:.3}, +1 {:.3}", base.rate, plus.rate)
        })?;
        parts.push(format!("{g} strings {:.3} class {:.3}->{:.3}", s.rate, base.rate, plus.rate));
    }
    Ok(parts.join("; "))
}

fn criterion_8() -> Outcome {
    let list = reference_list(Granularity::Method);
    let targets: Vec<MethodRef> = list
        .entries()
        .iter()
        .map(|k| {
            let (c, n) = k.split_once(";->").unwrap();
            MethodRef::new(c, n, "()V")
        })
        .collect();
    let g = large_dex(THROUGHPUT_DEX_BYTES, &targets, 8);
    let mut times = Vec::new();
    let mut total = 0;
    for _ in 0..THROUGHPUT_RUNS {
        let t = Instant::now();
        let dex = parse_dex(&g.bytes, ParseOptions::default()).map_err(|e| e.to_string())?;
        let fv = extract_from_dex(&dex, &list).map_err(|e| e.to_string())?;
        times.push(t.elapsed());
        total = fv.total();
    }
    let expected = g.expected_invokes.len() as u64;
    ensure(total == expected, || format!("counted {total}, generated {expected}"))?;
    let worst = *times.iter().max().unwrap();
    println!("  throughput: {:.2} MB dex, {total} counted calls, runs {times:.1?}", g.bytes.len() as f64 / 1048576.0);
    ensure(worst < THROUGHPUT_BUDGET, || format!("slowest run {worst:?}"))?;
    Ok(format!("{} bytes parsed and counted, slowest of {THROUGHPUT_RUNS} runs {worst:.1?}", g.bytes.len()))
}

/// Every threshold cut over the distinct scores, counted directly.
fn brute_force_roc(scores: &[(f64, bool)]) -> Vec<(f64, f64, f64)> {
    let pos = scores.iter().filter(|s| s.1).count() as f64;
    let neg = scores.len() as f64 - pos;
    let mut thresholds: Vec<f64> = scores.iter().map(|s| s.0).collect();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    thresholds
        .into_iter()
        .map(|t| {
            let tp = scores.iter().filter(|s| s.1 && s.0 >= t).count() as f64;
            let fp = scores.iter().filter(|s| !s.1 && s.0 >= t).count() as f64;
            (t, fp / neg, tp / pos)
        })
        .collect()
}

fn criterion_9(curves: &[RocCurve]) -> Outcome {
    ensure(!curves.is_empty(), || "no curves from the random-split runs".into())?;
    for (i, c) in curves.iter().enumerate() {
        curve_is_valid(c).map_err(|e| format!("experiment curve {i}: {e}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for case in 0..ROC_CASES {
        let n = rng.random_range(2..=10);
        let mut scores: Vec<(f64, bool)> = (0..n).map(|_| (rng.random_range(0..5) as f64 / 4.0, rng.random_bool(0.5))).collect();
        scores[0].1 = true;
        scores[1].1 = false;
        let c = RocCurve::from_scores(&scores).map_err(|e| e.to_string())?;
        curve_is_valid(&c).map_err(|e| format!("case {case}: {e}"))?;
        let got: Vec<(f64, f64, f64)> = c.points.iter().map(|p| (p.threshold, p.fpr, p.tpr)).collect();
        ensure(got == brute_force_roc(&scores), || format!("case {case}: {scores:?}"))?;
    }
    Ok(format!("{} experiment curves valid, {ROC_CASES} small sets equal the brute-force sweep", curves.len()))
}

fn run(n: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let started = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
    });
    let took = started.elapsed();
    match outcome {
        Ok(detail) => {
            println!("criterion {n} PASS {name}: {detail} [{took:.1?}]");
            true
        }
        Err(why) => {
            println!("criterion {n} FAIL {name}: {why} [{took:.1?}]");
            false
        }
    }
}

fn main() {
    let mut curves = Vec::new();
    let results = [
        run(1, "crypto subset golden counts", criterion_1),
        run(2, "dex oracle suite", criterion_2),
        run(3, "forest determinism", criterion_3),
        run(4, "entropy and information gain", criterion_4),
        run(5, "random-split ROC on synthetic corpus", || criterion_5(&mut curves)),
        run(6, "temporal drift, method vs package", criterion_6),
        run(7, "obfuscation and +1 injection", criterion_7),
        run(8, "5 MB dex throughput", criterion_8),
        run(9, "ROC validity", || criterion_9(&curves)),
    ];
    let passed = results.iter().filter(|&&r| r).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
