use std::io::Write;
use std::path::Path;
use std::time::Instant;

use apiscan_core::eval::{
    obfuscation_report, random_split_eval, temporal_eval, ObfuscationConfig, RandomSplitConfig, ReportFormat,
    TemporalBin, TemporalConfig, TemporalSplitSpec,
};
use apiscan_core::features::{extract_from_apk, write_feature_csv};
use apiscan_core::forest::{best_row, cv_table, rank_features, FORMAT_NAME, FORMAT_VERSION};
use apiscan_core::ingest::load_invoke_list_text;
use apiscan_core::testkit::corpus::{dataset, CorpusConfig, Generator};
use apiscan_core::{
    bundled_list, extract_features, load_model, save_model, train_forest, ApiReferenceList, FeatureVector,
    ForestError, Granularity, HyperParams, Label, ObfuscationTransform, RandomForestModel,
};
use chrono::{Days, Months, NaiveDate};
use rayon::prelude::*;

use crate::common::{load_apps, load_data, parse_options, print_summary, reference, write_outputs};
use crate::error::{CliError, CliResult};
use crate::*;

pub fn run(command: Command) -> CliResult<u8> {
    match command {
        Command::Scan(a) => scan(a),
        Command::Extract(a) => extract(a).map(|_| 0),
        Command::Train(a) => train(a).map(|_| 0),
        Command::EvalRandom(a) => eval_random(a).map(|_| 0),
        Command::EvalTemporal(a) => eval_temporal(a).map(|_| 0),
        Command::EvalObfuscation(a) => eval_obfuscation(a).map(|_| 0),
        Command::Rank(a) => rank(a).map(|_| 0),
        Command::ModelInfo(a) => model_info(a).map(|_| 0),
    }
}

/// Exit status of a classification.
pub fn label_code(label: Label) -> u8 {
    match label {
        Label::Trusted => 0,
        Label::GenericMalware => 10,
        Label::Ransomware => 11,
    }
}

fn open_model(path: &Path) -> CliResult<RandomForestModel> {
    load_model(path).map_err(|e| match e {
        ForestError::Io(io) => CliError::usage(format!("model {}: {io}", path.display())),
        other => CliError::Other(anyhow::anyhow!("model {}: {other}", path.display())),
    })
}

fn ensure_fingerprint(model: &RandomForestModel, list: &ApiReferenceList) -> CliResult<()> {
    if model.reference_fingerprint != list.fingerprint() {
        return Err(CliError::Fingerprint(format!(
            "model was trained against reference list {} but the {} list in use is {}",
            model.reference_fingerprint,
            list.granularity(),
            list.fingerprint()
        )));
    }
    Ok(())
}

fn features_of(path: &Path, list: &ApiReferenceList, strict: bool) -> CliResult<FeatureVector> {
    if path.extension().is_some_and(|e| e == "txt") {
        Ok(extract_features(&load_invoke_list_text(path)?, list))
    } else {
        Ok(extract_from_apk(path, list, parse_options(strict))?)
    }
}

fn scan(a: ScanArgs) -> CliResult<u8> {
    let list = reference(&a.reference)?;
    let model = open_model(&a.model)?;
    ensure_fingerprint(&model, &list)?;
    let ranked = model.ranked_features();
    let results: Vec<CliResult<FeatureVector>> =
        a.apks.par_iter().map(|p| features_of(p, &list, a.strict_dex)).collect();

    let stdout = std::io::stdout();
    let mut csv = (a.format == ReportFormat::Csv).then(|| csv::Writer::from_writer(stdout.lock()));
    if let Some(w) = csv.as_mut() {
        w.write_record(["path", "label", "trusted", "malware", "ransomware", "evidence"])?;
    }
    let mut code = 0;
    let mut failed = false;
    for (path, result) in a.apks.iter().zip(results) {
        let fv = match result {
            Ok(fv) => fv,
            Err(e) => {
                eprintln!("apiscan: {}: {e}", path.display());
                failed = true;
                continue;
            }
        };
        let p = model.predict_proba(&fv)?;
        let label = apiscan_core::forest::argmax(&p);
        code = code.max(label_code(label));
        let evidence: Vec<String> = ranked
            .iter()
            .filter(|&&i| fv.counts[i] > 0)
            .take(a.top)
            .map(|&i| format!("{} ({})", list.entries()[i], fv.counts[i]))
            .collect();
        match csv.as_mut() {
            Some(w) => w.write_record([
                path.display().to_string(),
                label.token().to_string(),
                p[0].to_string(),
                p[1].to_string(),
                p[2].to_string(),
                evidence.join("; "),
            ])?,
            None => {
                println!("{}\t{}", path.display(), label.token());
                println!("  scores: trusted={:.4} malware={:.4} ransomware={:.4}", p[0], p[1], p[2]);
                if !evidence.is_empty() {
                    println!("  evidence: {}", evidence.join(", "));
                }
            }
        }
    }
    if let Some(mut w) = csv {
        w.flush()?;
    }
    Ok(if failed { 3 } else { code })
}

fn extract(a: ExtractArgs) -> CliResult<()> {
    let list = reference(&a.reference)?;
    let rows: Vec<(String, String, FeatureVector)> = if let Some(m) = &a.manifest {
        let data = load_data(
            &DataArgs { manifest: Some(m.clone()), synthetic: None, strict_dex: a.strict_dex },
            &list,
            0,
        )?;
        data.into_samples().into_iter().map(|s| (s.id, s.label.token().to_string(), s.features)).collect()
    } else {
        if a.inputs.is_empty() {
            return Err(CliError::usage("give input files or --manifest"));
        }
        a.inputs
            .par_iter()
            .map(|p| {
                features_of(p, &list, a.strict_dex)
                    .map(|fv| (p.display().to_string(), String::new(), fv))
                    .map_err(|e| match e {
                        CliError::Parse(m) => CliError::Parse(format!("{}: {m}", p.display())),
                        other => other,
                    })
            })
            .collect::<CliResult<_>>()?
    };
    let iter = rows.iter().map(|(id, l, fv)| (id.as_str(), l.as_str(), fv));
    match &a.out {
        Some(path) => write_feature_csv(std::io::BufWriter::new(std::fs::File::create(path)?), &list, iter)?,
        None => write_feature_csv(std::io::stdout().lock(), &list, iter)?,
    }
    Ok(())
}

fn check_grid(grid: &[usize]) -> CliResult<()> {
    if grid.is_empty() || grid.contains(&0) {
        return Err(CliError::usage("--grid needs positive tree counts"));
    }
    Ok(())
}

fn train(a: TrainArgs) -> CliResult<()> {
    check_grid(&a.grid)?;
    let list = reference(&a.reference)?;
    let data = load_data(&a.data, &list, a.seed)?;
    if data.class_counts().iter().filter(|&&c| c > 0).count() < 2 {
        return Err(ForestError::SingleClassData.into());
    }
    let hp = HyperParams::default().with_seed(a.seed);
    let table = cv_table(&data, &a.grid, &hp)?;
    let best = best_row(&table);
    println!("n_trees  mean_accuracy");
    for r in &table {
        println!("{:<8} {:.4}", r.n_trees, r.mean_accuracy);
    }
    println!("selected n_trees: {}", best.n_trees);
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("cv.csv"))?;
        w.write_record(["n_trees", "mean_accuracy"])?;
        for r in &table {
            w.write_record([r.n_trees.to_string(), r.mean_accuracy.to_string()])?;
        }
        w.flush()?;
    }
    let model = train_forest(&data, &hp.with_trees(best.n_trees))?;
    save_model(&model, &a.model)?;
    println!("model: {}", a.model.display());
    Ok(())
}

fn finish(report: &mut apiscan_core::ExperimentReport, started: Instant, name: &str, out: &OutputArgs) -> CliResult<()> {
    let secs = started.elapsed().as_secs_f64();
    if out.record_runtime {
        report.runtime_secs = Some(secs);
    }
    let path = write_outputs(report, name, out)?;
    log::info!("{name} finished in {secs:.2}s");
    println!("report: {}", path.display());
    Ok(())
}

fn eval_random(a: EvalRandomArgs) -> CliResult<()> {
    check_grid(&a.grid)?;
    let started = Instant::now();
    let list = reference(&a.reference)?;
    let data = load_data(&a.data, &list, a.seed)?;
    let cfg = RandomSplitConfig {
        fraction: a.fraction,
        repeats: a.repeats,
        seed: a.seed,
        grid: a.grid.clone(),
        hp: HyperParams::default().with_seed(a.seed),
        ..Default::default()
    };
    let mut report = random_split_eval(&data, &cfg)?;
    print_summary(&report);
    finish(&mut report, started, "random-split", &a.output)
}

fn parse_bin(s: &str) -> CliResult<TemporalBin> {
    let bad = || CliError::usage(format!("bad --bin `{s}`, expected LABEL:START:END"));
    let mut parts = s.rsplitn(3, ':');
    let (end, start, label) = (parts.next().ok_or_else(bad)?, parts.next().ok_or_else(bad)?, parts.next().ok_or_else(bad)?);
    let date = |d: &str| NaiveDate::parse_from_str(d, "%Y-%m-%d").map_err(|_| bad());
    Ok(TemporalBin::new(label, date(start)?, date(end)?))
}

fn half_years_after(d_tr: NaiveDate) -> Vec<TemporalBin> {
    let day = |d: NaiveDate, n| d.checked_add_days(Days::new(n)).expect("date in range");
    let start = day(d_tr, 1);
    let mid = start.checked_add_months(Months::new(6)).expect("date in range");
    let end = start.checked_add_months(Months::new(12)).expect("date in range");
    let prev = |d: NaiveDate| d.checked_sub_days(Days::new(1)).expect("date in range");
    vec![
        TemporalBin::new(format!("{start}..{}", prev(mid)), start, prev(mid)),
        TemporalBin::new(format!("{mid}..{}", prev(end)), mid, prev(end)),
    ]
}

fn eval_temporal(a: EvalTemporalArgs) -> CliResult<()> {
    check_grid(&a.grid)?;
    let started = Instant::now();
    let bins = if a.bins.is_empty() {
        half_years_after(a.d_tr)
    } else {
        a.bins.iter().map(|b| parse_bin(b)).collect::<CliResult<_>>()?
    };
    let plan = TemporalSplitSpec { d_tr: a.d_tr, bins };
    plan.validate()?;
    let list = reference(&a.reference)?;
    let data = match a.data.synthetic {
        Some(per_class) => {
            let mut gen = Generator::new(a.seed);
            let mut cfg = CorpusConfig::new(per_class, a.seed);
            cfg.first_seen_to = a.d_tr;
            cfg.first_seen_from = a.d_tr.checked_sub_months(Months::new(36)).expect("date in range");
            let mut apps = gen.generate(&cfg);
            let last = plan.bins.iter().map(|b| b.end).max().expect("validated");
            let first = plan.bins.iter().map(|b| b.start).min().expect("validated");
            apps.extend(gen.drifted_ransomware(a.drifted, first, last, "drifted"));
            dataset(&apps, &list)
        }
        None => load_data(&a.data, &list, a.seed)?,
    };
    let cfg = TemporalConfig {
        seed: a.seed,
        grid: a.grid.clone(),
        hp: HyperParams::default().with_seed(a.seed),
        ..Default::default()
    };
    let mut report = temporal_eval(&data, &plan, &cfg)?;
    println!("threshold {}", report.parameters["threshold"]);
    for row in report.rows.iter().skip(1) {
        match (row.metrics.get("detection_rate"), &row.note) {
            (Some(r), _) => println!("{:<24} {:.4} ({} samples)", row.name, r, row.metrics["samples"]),
            (None, Some(note)) => println!("{:<24} {note}", row.name),
            (None, None) => {}
        }
    }
    finish(&mut report, started, "temporal", &a.output)
}

fn eval_obfuscation(a: EvalObfuscationArgs) -> CliResult<()> {
    check_grid(&a.grid)?;
    let started = Instant::now();
    let list = reference(&a.reference)?;
    let apps = load_apps(&a.data, a.seed)?;
    let t = ObfuscationTransform::new(a.transform, a.seed);
    let cfg = ObfuscationConfig { seed: a.seed, grid: a.grid.clone(), hp: HyperParams::default().with_seed(a.seed) };
    let mut report = obfuscation_report(&apps, &list, &t, a.plus_one, &cfg)?;
    for row in &report.rows {
        println!(
            "{:<10} {:.4} ({}/{})",
            row.name, row.metrics["detection_rate"], row.metrics["detected"], row.metrics["evaluated"]
        );
    }
    finish(&mut report, started, &format!("obfuscation-{}", a.transform), &a.output)
}

fn rank(a: RankArgs) -> CliResult<()> {
    let list = reference(&a.reference)?;
    let data = load_data(&a.data, &list, a.seed)?;
    let ranked = rank_features(&[data])?;
    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    w.write_record(["rank", "key", "gain"])?;
    for (r, (i, g)) in ranked.iter().take(a.top).enumerate() {
        w.write_record([(r + 1).to_string(), list.entries()[*i].clone(), g.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn model_info(a: ModelInfoArgs) -> CliResult<()> {
    let model = open_model(&a.model)?;
    let names = match &a.reference {
        Some(p) => {
            let list = ApiReferenceList::load(p, a.granularity)?;
            ensure_fingerprint(&model, &list)?;
            Some(list)
        }
        None => Granularity::ALL
            .into_iter()
            .map(bundled_list)
            .find(|l| l.fingerprint() == model.reference_fingerprint),
    };
    let depths: Vec<usize> = model.trees.iter().map(|t| t.depth()).collect();
    let nodes: usize = model.trees.iter().map(|t| t.nodes.len()).sum();
    let hp = &model.hyperparams;
    let mut out = std::io::stdout().lock();
    writeln!(out, "format: {FORMAT_NAME} v{FORMAT_VERSION}")?;
    writeln!(out, "trees: {}", model.trees.len())?;
    writeln!(out, "features: {}", model.n_features)?;
    writeln!(out, "reference fingerprint: {}", model.reference_fingerprint)?;
    match &names {
        Some(l) => writeln!(out, "reference: {} list, {} keys", l.granularity(), l.len())?,
        None => writeln!(out, "reference: not bundled; pass --reference to name features")?,
    }
    let classes: Vec<&str> = model.class_order.iter().map(|l| l.token()).collect();
    writeln!(out, "classes: {}", classes.join(", "))?;
    writeln!(
        out,
        "hyperparameters: max_depth={} min_samples_leaf={} features_per_split={} seed={}",
        hp.max_depth.map_or("none".into(), |d| d.to_string()),
        hp.min_samples_leaf,
        hp.features_per_split.map_or("sqrt".into(), |k| k.to_string()),
        hp.seed
    )?;
    writeln!(
        out,
        "nodes: {nodes}, depth mean {:.1} max {}",
        depths.iter().sum::<usize>() as f64 / depths.len().max(1) as f64,
        depths.iter().max().unwrap_or(&0)
    )?;
    writeln!(out, "top features by importance:")?;
    for (r, i) in model.ranked_features().into_iter().take(a.top).enumerate() {
        let name = names.as_ref().map_or_else(|| format!("#{i}"), |l| l.entries()[i].clone());
        writeln!(out, "  {:>3}  {:<56} {:.6}", r + 1, name, model.feature_importance[i])?;
    }
    Ok(())
}
