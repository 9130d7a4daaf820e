//! Subcommand implementations. Each returns the process exit status.

use std::error::Error;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use smellcheck_core::detector::{
    detect_corpus, exit_status, render_report, sweep_thresholds, threshold_sweep, ReportFormat,
};
use smellcheck_core::metrics::{corpus_metrics, metric_names};
use smellcheck_core::smell::{SmellKind, SmellRegistry};
use smellcheck_core::source_model::{Corpus, Granularity};
use smellcheck_core::stats::{calibrate, CalibrationOptions, Criterion, SmellModel, StatsError, INTERCEPT};
use smellcheck_core::store::{format_number, Config, FeedbackEntry, Store, StoreError};
use smellcheck_core::sync::{pull_model, push_feedback, push_samples, request_calibration, serve, PullOutcome};
use smellcheck_core::tagging::{build_sample, record_feedback, tag_element, untag_element, FileEdit, Verdict};

use crate::*;

type Result<T> = std::result::Result<T, Box<dyn Error>>;

pub fn run(cli: Cli) -> Result<u8> {
    let store = cli.store;
    match cli.command {
        Command::Init(a) => init(&store, a),
        Command::Metrics(a) => metrics(a),
        Command::Tag(a) => tag(&store, a),
        Command::Untag(a) => untag(a),
        Command::Sample(a) => sample(&store, a),
        Command::Calibrate(a) => calibrate_cmd(&store, a),
        Command::Detect(a) => detect(&store, a),
        Command::Feedback(a) => feedback(&store, a),
        Command::Serve(a) => serve_cmd(&store, a),
        Command::Push(a) => push(&store, a),
        Command::Pull(a) => pull(&store, a),
    }
}

fn load_corpus(roots: &[PathBuf]) -> Result<Corpus> {
    let corpus = Corpus::load(roots)?;
    for d in &corpus.diagnostics {
        eprintln!("{d}");
    }
    Ok(corpus)
}

/// Registry of the store when there is one, the builtins otherwise.
fn registry_or_default(store: &Path) -> Result<SmellRegistry> {
    match Store::open(store) {
        Ok(s) => Ok(s.registry()?),
        Err(StoreError::NotInitialized(_)) => Ok(SmellRegistry::default()),
        Err(e) => Err(e.into()),
    }
}

fn smell_kind(registry: &SmellRegistry, name: &str) -> Result<SmellKind> {
    registry.get(name).cloned().ok_or_else(|| {
        format!("unknown smell `{name}` (known: {})", registry.names().join(", ")).into()
    })
}

fn init(store: &Path, a: InitArgs) -> Result<u8> {
    let application = a.application.unwrap_or_else(|| {
        std::env::current_dir()
            .ok()
            .and_then(|d| d.file_name().map(|n| n.to_string_lossy().into_owned()))
            .unwrap_or_else(|| "app".to_owned())
    });
    let existed = store.join("config.toml").is_file();
    let mut config = Config::new(application);
    config.server_url = a.server;
    config.calibration_roots = a.roots;
    Store::init(store, &config)?;
    if existed {
        println!("store already initialized at {}", store.display());
    } else {
        println!("initialized {}", store.display());
    }
    Ok(0)
}

fn metrics(a: MetricsArgs) -> Result<u8> {
    let granularity = match a.granularity {
        GranularityArg::Method => Granularity::Method,
        GranularityArg::Type => Granularity::Type,
    };
    let result = corpus_metrics(&a.roots, granularity)?;
    for d in &result.diagnostics {
        eprintln!("{d}");
    }
    match a.format {
        TableFormat::Csv => {
            let names = metric_names(granularity);
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(std::io::stdout().lock());
            w.write_record(std::iter::once("element").chain(names.iter().copied()))?;
            for v in &result.vectors {
                let mut rec = vec![v.element_id.clone()];
                rec.extend(names.iter().map(|m| v.get(m).map(format_number).unwrap_or_default()));
                w.write_record(rec)?;
            }
            w.flush()?;
        }
        TableFormat::Json => println!("{}", serde_json::to_string_pretty(&result.vectors)?),
    }
    Ok(0)
}

/// The changed lines of an edit that only inserts or removes lines.
fn print_edit(edit: &FileEdit) {
    let old: Vec<&str> = edit.old_text.lines().collect();
    let new: Vec<&str> = edit.new_text.lines().collect();
    let prefix = old.iter().zip(&new).take_while(|(a, b)| a == b).count();
    let suffix = old[prefix..]
        .iter()
        .rev()
        .zip(new[prefix..].iter().rev())
        .take_while(|(a, b)| a == b)
        .count();
    println!("--- {}\n+++ {}", edit.path.display(), edit.path.display());
    println!("@@ line {} @@", prefix + 1);
    for line in &old[prefix..old.len() - suffix] {
        println!("-{line}");
    }
    for line in &new[prefix..new.len() - suffix] {
        println!("+{line}");
    }
}

fn tag(store: &Path, a: TagArgs) -> Result<u8> {
    let smell = smell_kind(&registry_or_default(store)?, &a.smell)?;
    let corpus = load_corpus(&a.roots)?;
    let edit = tag_element(&corpus, &a.element, &smell, &a.description, a.dry_run)?;
    if a.dry_run {
        print_edit(&edit);
    } else {
        println!("tagged {} as {} in {}", edit.element_id, smell.name, edit.path.display());
    }
    Ok(0)
}

fn untag(a: UntagArgs) -> Result<u8> {
    let corpus = load_corpus(&a.roots)?;
    let edit = untag_element(&corpus, &a.element, &a.smell, a.dry_run)?;
    if a.dry_run {
        print_edit(&edit);
    } else {
        println!("untagged {} ({}) in {}", edit.element_id, a.smell, edit.path.display());
    }
    Ok(0)
}

fn roots_or_configured(roots: Vec<PathBuf>, config: &Config) -> Vec<PathBuf> {
    if !roots.is_empty() {
        roots
    } else if !config.calibration_roots.is_empty() {
        config.calibration_roots.clone()
    } else {
        vec![PathBuf::from(".")]
    }
}

fn sample(store: &Path, a: SampleArgs) -> Result<u8> {
    let store = Store::open(store)?;
    let config = store.config()?;
    let smell = store.smell(&a.smell)?;
    let corpus = load_corpus(&roots_or_configured(a.roots, &config))?;
    let application = a.application.unwrap_or(config.application);
    let table = build_sample(&corpus, &smell, &application)?;
    let written = store.append_rows(&smell, &table.rows)?;
    println!(
        "appended {written} {} ({} tagged) to {}",
        if written == 1 { "row" } else { "rows" },
        table.positives(),
        store.samples_path(&smell.name).display()
    );
    Ok(0)
}

fn print_model(model: &SmellModel) {
    let d = &model.diagnostics;
    println!(
        "{} v{}: {} rows, log-likelihood {:.4} (null {:.4}), {} iterations",
        model.smell, model.version, model.sample_size, d.log_likelihood, d.null_log_likelihood, d.iterations
    );
    for c in &d.coefficients {
        let p = c.p_value.map_or_else(|| "-".to_owned(), |p| format!("{p:.4}"));
        println!("  {:<12} {:>12.6}  se {:>10.6}  p {p}", c.name, c.estimate, c.stderr);
    }
    if model.metric_names.is_empty() {
        println!("  no metric is significant; the model is {INTERCEPT} only");
    }
    for step in &d.eliminated {
        println!("  eliminated {} (p {:.4})", step.dropped, step.p_value);
    }
    for m in &d.dropped_constant {
        println!("  dropped {m} (constant)");
    }
    for m in &d.dropped_collinear {
        println!("  dropped {m} (collinear)");
    }
    if let Some(hl) = &d.hosmer_lemeshow {
        println!("  Hosmer-Lemeshow chi2 {:.4}, df {}, p {:.4}", hl.statistic, hl.df, hl.p_value);
    }
    for w in &d.warnings {
        eprintln!("warning: {w}");
    }
}

fn calibrate_cmd(store: &Path, a: CalibrateArgs) -> Result<u8> {
    let store = Store::open(store)?;
    let smell = store.smell(&a.smell)?;
    let table = store.load_table(&smell.name)?.effective();
    let mut options = CalibrationOptions {
        alpha: a.alpha,
        criterion: match a.criterion {
            CriterionArg::Wald => Criterion::Wald,
            CriterionArg::Lr => Criterion::Lr,
        },
        strict: a.strict,
        ..CalibrationOptions::default()
    };
    options.fit.ridge = a.ridge;
    let previous = store.model_version(&smell.name)?.unwrap_or(0);
    let model = calibrate(&table, &smell, &options, previous).map_err(|e| -> Box<dyn Error> {
        match e {
            StatsError::CompleteSeparation => format!("{e}; rerun with --ridge (e.g. --ridge 0.01)").into(),
            other => other.into(),
        }
    })?;
    store.save_model(&model)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&model)?);
    } else {
        print_model(&model);
        println!("saved {}", store.model_path(&smell.name).display());
    }
    Ok(0)
}

fn detect(store: &Path, a: DetectArgs) -> Result<u8> {
    let store = Store::open(store)?;
    let config = store.config()?;
    let registry = config.registry()?;
    let names: Vec<String> = if a.smells.is_empty() {
        registry
            .names()
            .into_iter()
            .filter(|s| store.model_path(s).is_file())
            .map(str::to_owned)
            .collect()
    } else {
        a.smells.clone()
    };
    if names.is_empty() {
        return Err("no calibrated models (run `smellcheck calibrate`)".into());
    }
    let mut models = Vec::new();
    for name in &names {
        smell_kind(&registry, name)?;
        models.push(store.load_model(name)?);
    }
    let mut thresholds = IndexMap::new();
    for name in &names {
        if let Some(t) = config.threshold(name) {
            thresholds.insert(name.clone(), t);
        }
    }
    for (smell, t) in a.thresholds {
        if !names.contains(&smell) {
            return Err(format!("threshold given for `{smell}`, which is not being detected").into());
        }
        thresholds.insert(smell, t);
    }
    let corpus = load_corpus(&roots_or_configured(a.roots, &config))?;

    if let Some(steps) = a.sweep {
        println!("smell\tthreshold\tfindings");
        for model in &models {
            for point in threshold_sweep(&corpus, model, &sweep_thresholds(steps))? {
                println!("{}\t{:.4}\t{}", model.smell, point.threshold, point.findings);
            }
        }
        return Ok(0);
    }
    let findings = detect_corpus(&corpus, &models, &thresholds)?;
    let format = match a.format {
        ReportArg::Text => ReportFormat::Text,
        ReportArg::Json => ReportFormat::Json,
    };
    print!("{}", render_report(&findings, format));
    Ok(exit_status(&findings) as u8)
}

fn feedback(store: &Path, a: FeedbackArgs) -> Result<u8> {
    let store = Store::open(store)?;
    let config = store.config()?;
    let smell = store.smell(&a.smell)?;
    let corpus = load_corpus(&a.roots)?;
    let verdict = match a.verdict {
        VerdictArg::Fp => Verdict::FalsePositive,
        VerdictArg::Fn => Verdict::FalseNegative,
    };
    let row = record_feedback(&corpus, &a.element, &smell, verdict, &config.application)?;
    store.append_rows(&smell, std::slice::from_ref(&row))?;
    store.append_feedback_log(&FeedbackEntry {
        timestamp: row.timestamp.clone(),
        smell: smell.name.clone(),
        origin: row.origin,
        element_id: row.element_id(),
        application: row.application.clone(),
    })?;
    let what = match verdict {
        Verdict::FalsePositive => "false positive",
        Verdict::FalseNegative => "false negative",
    };
    println!("recorded {what} for {} ({}); run `smellcheck calibrate --smell {}` to refit", row.element_id(), smell.name, smell.name);
    Ok(0)
}

fn serve_cmd(store: &Path, a: ServeArgs) -> Result<u8> {
    let store = Store::open(store)?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&a.bind).await?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        serve(listener, store, CalibrationOptions::default(), async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
    })?;
    Ok(0)
}

fn server_url(arg: ServerArg, config: &Config) -> Result<String> {
    arg.server
        .or_else(|| config.server_url.clone())
        .ok_or_else(|| "no server given (use --server, SMELLCHECK_SERVER or server_url in the config)".into())
}

fn push(store: &Path, a: PushArgs) -> Result<u8> {
    let store = Store::open(store)?;
    let config = store.config()?;
    let url = server_url(a.server, &config)?;
    let smells: Vec<String> = match &a.smell {
        Some(s) => vec![store.smell(s)?.name],
        None => config
            .registry()?
            .names()
            .into_iter()
            .filter(|s| store.samples_path(s).is_file())
            .map(str::to_owned)
            .collect(),
    };
    for smell in &smells {
        let out = push_samples(&store, &url, smell)?;
        println!("{smell}: sent {} sample rows, {} accepted, {} already known", out.sent, out.accepted, out.duplicates);
    }
    let out = push_feedback(&store, &url)?;
    println!("feedback: sent {} rows, {} accepted, {} already known", out.sent, out.accepted, out.duplicates);
    if a.calibrate {
        let smell = a.smell.as_deref().unwrap_or_default();
        let model = request_calibration(&url, smell)?;
        println!("server calibrated {} v{} on {} rows", model.smell, model.version, model.sample_size);
    }
    Ok(0)
}

fn pull(store: &Path, a: PullArgs) -> Result<u8> {
    let store = Store::open(store)?;
    let config = store.config()?;
    let url = server_url(a.server, &config)?;
    match pull_model(&store, &url, &a.smell)? {
        PullOutcome::Updated { from, to } => match from {
            Some(v) => println!("{}: updated v{v} -> v{to}", a.smell),
            None => println!("{}: installed v{to}", a.smell),
        },
        PullOutcome::UpToDate { local, server } => {
            println!("{}: local v{local} is current (server v{server})", a.smell)
        }
    }
    Ok(0)
}
