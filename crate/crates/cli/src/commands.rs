use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use intent_core::corpus::{
    corpus_stats, load_corpus, CorpusFormat, CorpusStats, Record, Split, SplitSelector,
};
use intent_core::embeddings::{load_embeddings, EmbeddingTable};
use intent_core::evaluation::EvalReport;
use intent_core::experiments::{
    evaluate_bundle, grid_search, load_model, preset, presets as all_presets, run_experiment,
    save_model, score_records, train_bundle, DataConfig, ExperimentConfig, FeatureConfig, GridSpec,
};
use intent_core::linear_models::argmax;

use crate::{
    DataArgs, EvaluateArgs, GridArgs, ModelSource, PredictArgs, PresetsArgs, StatsArgs, TrainArgs,
    UsageError,
};

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let json = serde_json::to_string_pretty(value).context("serializing report")?;
    fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))
}

fn load_tables(paths: &[PathBuf]) -> Result<Option<EmbeddingTable>> {
    let mut merged: Option<EmbeddingTable> = None;
    for path in paths {
        let table = load_embeddings(path)?;
        match &mut merged {
            Some(m) => m.merge(table)?,
            None => merged = Some(table),
        }
    }
    Ok(merged)
}

/// Train and dev records, from separate files or one file with a split column.
fn load_splits(
    data: &DataArgs,
    format: &CorpusFormat,
    fallback: &DataConfig,
) -> Result<(Vec<Record>, Vec<Record>)> {
    if let Some(path) = &data.data {
        if format.split_col.is_none() {
            return Err(usage(
                "--data needs --split-col to tell train rows from dev rows",
            ));
        }
        let corpus = load_corpus(path, format)?;
        return Ok((
            corpus.split_records(SplitSelector::Only(Split::Train)),
            corpus.split_records(SplitSelector::Only(Split::Dev)),
        ));
    }
    let train_path = data
        .train
        .as_ref()
        .or(fallback.train.as_ref())
        .ok_or_else(|| usage("no training data: pass --train FILE or --data FILE"))?;
    let train = load_corpus(train_path, &format.clone().with_split(Split::Train))?;
    let dev = match data.dev.as_ref().or(fallback.dev.as_ref()) {
        Some(p) => load_corpus(p, &format.clone().with_split(Split::Dev))?,
        None => return Ok((train.records().to_vec(), Vec::new())),
    };
    Ok((train.records().to_vec(), dev.records().to_vec()))
}

fn print_stats_table(rows: &[(String, CorpusStats)]) {
    println!(
        "{:<24} {:>10} {:>10} {:>10}",
        "set", "sentences", "avg_words", "avg_chars"
    );
    for (name, s) in rows {
        println!(
            "{:<24} {:>10} {:>10.2} {:>10.2}",
            name, s.n_sentences, s.avg_words, s.avg_chars
        );
    }
}

fn weighted_total(rows: &[(String, CorpusStats)]) -> CorpusStats {
    let n: usize = rows.iter().map(|(_, s)| s.n_sentences).sum();
    let mean = |f: fn(&CorpusStats) -> f64| {
        rows.iter()
            .map(|(_, s)| f(s) * s.n_sentences as f64)
            .sum::<f64>()
            / n as f64
    };
    CorpusStats {
        n_sentences: n,
        avg_words: mean(|s| s.avg_words),
        avg_chars: mean(|s| s.avg_chars),
    }
}

pub fn stats(args: StatsArgs) -> Result<()> {
    if args.by_split && args.format.split_col.is_none() {
        return Err(usage("--by-split needs --split-col"));
    }
    // statistics never need labels unless a label column is named explicitly
    let format = args.format.apply(CorpusFormat {
        label_col: None,
        ..CorpusFormat::default()
    });
    let mut rows = Vec::new();
    for path in &args.data {
        let corpus = load_corpus(path, &format)?;
        let name = path.file_name().map_or_else(
            || path.display().to_string(),
            |n| n.to_string_lossy().into_owned(),
        );
        if args.by_split {
            for split in [Split::Train, Split::Dev, Split::Test, Split::Unassigned] {
                let sel = SplitSelector::Only(split);
                if corpus.select(sel).next().is_some() {
                    rows.push((format!("{name}:{split}"), corpus_stats(&corpus, sel)?));
                }
            }
        } else {
            rows.push((name, corpus_stats(&corpus, SplitSelector::All)?));
        }
    }
    if rows.len() > 1 {
        let total = weighted_total(&rows);
        rows.push(("total".to_owned(), total));
    }
    if args.json {
        let json: Vec<_> = rows
            .iter()
            .map(|(name, s)| serde_json::json!({ "set": name, "stats": s }))
            .collect();
        println!("{}", serde_json::to_string_pretty(&json)?);
    } else {
        print_stats_table(&rows);
    }
    Ok(())
}

fn resolve_config(source: &ModelSource) -> Result<ExperimentConfig> {
    let mut config = match (&source.preset, &source.config) {
        (Some(name), None) => {
            let interp = source.ngram_mode.unwrap_or_default();
            preset(name, interp)
                .ok_or_else(|| {
                    let names = intent_core::experiments::preset_names().join(", ");
                    usage(format!("unknown preset `{name}` (available: {names})"))
                })?
                .config
        }
        (None, Some(path)) => {
            let mut cfg = ExperimentConfig::load(path)?;
            if let Some(mode) = source.ngram_mode {
                cfg.features = cfg.features.with_interpretation(mode);
            }
            cfg
        }
        _ => return Err(usage("pass exactly one of --preset or --config")),
    };
    if source.normalize_embeddings {
        match &mut config.features {
            FeatureConfig::Embeddings(spec) => spec.normalize = true,
            FeatureConfig::Tfidf { .. } => {
                return Err(usage(
                    "--normalize-embeddings only applies to embedding models",
                ));
            }
        }
    }
    Ok(config)
}

pub fn train(args: TrainArgs) -> Result<()> {
    let mut config = resolve_config(&args.source)?;
    let format = args.format.apply(config.data.format.clone());
    let (train, dev) = load_splits(&args.data, &format, &config.data)?;
    let embedding_paths = if args.data.embeddings.is_empty() {
        config.data.embeddings.clone()
    } else {
        args.data.embeddings.clone()
    };
    let embeddings = load_tables(&embedding_paths)?;
    config.data.format = format;

    let (bundle, report) = if dev.is_empty() {
        let (bundle, _) = train_bundle(&config, &train, embeddings.as_ref())?;
        (bundle, None)
    } else {
        let outcome = run_experiment(&config, &train, &dev, embeddings.as_ref())?;
        if !outcome.traces.iter().all(|t| t.converged) {
            log::warn!(
                "solver hit its iteration limit for some classes; consider raising max_epochs"
            );
        }
        (outcome.bundle, Some(outcome.report))
    };
    let digest = save_model(&bundle, &args.out)?;
    println!(
        "trained {} on {} records ({} classes); wrote {} (sha256 {digest})",
        config.name,
        train.len(),
        bundle.model.n_classes(),
        args.out.display()
    );
    if let Some(report) = report {
        println!("dev set ({} records)", dev.len());
        print!("{}", report.render());
        if let Some(path) = &args.report_json {
            write_json(path, &report)?;
        }
    } else if args.report_json.is_some() {
        log::warn!("no dev data given; --report-json not written");
    }
    Ok(())
}

pub fn predict(args: PredictArgs) -> Result<()> {
    if args.top_k == 0 {
        return Err(usage("--top-k must be at least 1"));
    }
    let bundle = load_model(&args.model)?;
    let format = args.format.apply(CorpusFormat {
        label_col: None,
        ..bundle.config.data.format.clone()
    });
    let corpus = load_corpus(&args.input, &format)?;
    let embeddings = load_tables(&args.embeddings)?;
    let scores = score_records(&bundle, corpus.records(), embeddings.as_ref())?;

    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(BufWriter::new(
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let labels = bundle.model.labels();
    writeln!(out, "id\tprediction\ttop_scores")?;
    for (record, s) in corpus.records().iter().zip(&scores) {
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
        let top: Vec<String> = order
            .iter()
            .take(args.top_k)
            .map(|&c| format!("{}={:.6}", labels.label(c).unwrap_or("?"), s[c]))
            .collect();
        let best = labels.label(argmax(s)).unwrap_or("?");
        writeln!(out, "{}\t{}\t{}", record.id, best, top.join(" "))?;
    }
    out.flush()?;
    Ok(())
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let bundle = load_model(&args.model)?;
    let mut base = bundle.config.data.format.clone();
    if base.label_col.is_none() {
        base.label_col = Some("intent".to_owned());
    }
    let format = args.format.apply(base);
    let corpus = load_corpus(&args.data, &format)?;
    let embeddings = load_tables(&args.embeddings)?;
    let report: EvalReport = evaluate_bundle(&bundle, corpus.records(), embeddings.as_ref())?;
    println!(
        "{} on {} ({} records)",
        bundle.config.name,
        args.data.display(),
        report.n
    );
    print!("{}", report.render());
    if let Some(path) = &args.report_json {
        write_json(path, &report)?;
    }
    Ok(())
}

fn describe(config: &ExperimentConfig) -> String {
    match &config.features {
        FeatureConfig::Tfidf { union, .. } => {
            let blocks: Vec<String> = union
                .blocks
                .iter()
                .map(|b| format!("{}*{}", b.analyzer, b.weight))
                .collect();
            format!("{} C={}", blocks.join(" + "), config.train.c)
        }
        FeatureConfig::Embeddings(spec) => {
            format!("embeddings:{} C={}", spec.model, config.train.c)
        }
    }
}

pub fn grid(args: GridArgs) -> Result<()> {
    let spec = GridSpec::load(&args.grid)?;
    let format = args.format.apply(CorpusFormat::default());
    let (train, dev) = load_splits(&args.data, &format, &DataConfig::default())?;
    if dev.is_empty() {
        return Err(usage("grid search scores on dev data: pass --dev FILE"));
    }
    let results = grid_search(&spec, &train, &dev, args.results.as_deref())?;
    let failed = results.iter().filter(|r| r.error.is_some()).count();
    println!("{} combinations ({} failed)", results.len(), failed);
    println!(
        "{:>5} {:>6} {:>9} {:>9}  config",
        "rank", "index", "micro_f1", "macro_f1"
    );
    for (rank, r) in results.iter().take(args.top).enumerate() {
        match (r.micro_f1, r.macro_f1) {
            (Some(mi), Some(ma)) => println!(
                "{:>5} {:>6} {:>9.2} {:>9.2}  {}",
                rank + 1,
                r.index,
                100.0 * mi,
                100.0 * ma,
                describe(&r.config)
            ),
            _ => println!(
                "{:>5} {:>6} {:>9} {:>9}  {} ({})",
                rank + 1,
                r.index,
                "-",
                "-",
                describe(&r.config),
                r.error.as_deref().unwrap_or("failed")
            ),
        }
    }
    Ok(())
}

pub fn presets(args: PresetsArgs) -> Result<()> {
    let interp = args.ngram_mode.unwrap_or_default();
    if let Some(name) = &args.show {
        let p = preset(name, interp).ok_or_else(|| usage(format!("unknown preset `{name}`")))?;
        println!("{}", p.config.to_json());
        return Ok(());
    }
    println!("{:<12} {:>8}  description", "preset", "dev_f1");
    for p in all_presets(interp) {
        println!(
            "{:<12} {:>8.2}  {}",
            p.name, p.reported_dev_f1, p.description
        );
    }
    Ok(())
}
