//! The project-local store under `.smellchecker/`: configuration, labeled
//! samples, calibrated models and the feedback log.
//!
//! ```text
//! .smellchecker/
//!   config.toml
//!   client_id
//!   lock
//!   sync.json
//!   feedback.log
//!   samples/<smell>.csv
//!   models/<smell>.json
//!   models/<smell>.history/v<N>.json
//! ```
//!
//! Sample and model files are replaced by write-temp-and-rename, so readers
//! see either the old or the new file. Mutating operations hold an exclusive
//! lock on `lock` for their duration.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sample::{Origin, SampleRow, SampleTable};
use crate::smell::{SmellError, SmellKind, SmellRegistry};
use crate::source_model::Granularity;
use crate::stats::SmellModel;
use crate::fsutil::write_atomic;

pub const STORE_DIR: &str = ".smellchecker";

const IDENTITY_COLUMNS: [&str; 4] = ["application", "package", "class", "method"];
const TRAILING_COLUMNS: [&str; 3] = ["label", "origin", "timestamp"];

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("no store at {0} (run `smellcheck init`)")]
    NotInitialized(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: invalid configuration: {message}")]
    Config { path: PathBuf, message: String },
    #[error(transparent)]
    Smell(#[from] SmellError),
    #[error("unknown smell `{0}`")]
    UnknownSmell(String),
    #[error("schema mismatch for `{smell}`: expected columns [{expected}], found [{found}]")]
    SchemaMismatch {
        smell: String,
        expected: String,
        found: String,
    },
    #[error("invalid row for `{smell}`: {reason}")]
    InvalidRow { smell: String, reason: String },
    #[error("duplicate row {element} ({origin}, {timestamp})")]
    DuplicateRow {
        element: String,
        origin: Origin,
        timestamp: String,
    },
    #[error("{0}: no such sample file")]
    MissingFile(PathBuf),
    #[error("{path}:{line}: {message}")]
    ParseError {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("model `{smell}` is at version {stored}; cannot save version {attempted}")]
    VersionConflict {
        smell: String,
        stored: u32,
        attempted: u32,
    },
    #[error("no model for `{0}` (run `smellcheck calibrate`)")]
    MissingModel(String),
    #[error("{path}: {message}")]
    Json { path: PathBuf, message: String },
}

impl StoreError {
    fn io(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
        move |source| StoreError::Io {
            path: path.to_owned(),
            source,
        }
    }
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

/// One `[[smell]]` entry. A builtin kind may be listed without `metrics`
/// to set only its threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmellConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub granularity: Option<Granularity>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub metrics: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub application: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub server_url: Option<String>,
    /// Source roots scanned by `sample` when none are given.
    #[serde(default)]
    pub calibration_roots: Vec<PathBuf>,
    #[serde(default, rename = "smell", skip_serializing_if = "Vec::is_empty")]
    pub smells: Vec<SmellConfig>,
}

impl Config {
    pub fn new(application: impl Into<String>) -> Self {
        Config {
            application: application.into(),
            server_url: None,
            calibration_roots: Vec::new(),
            smells: Vec::new(),
        }
    }

    /// Builtin kinds plus the declared ones.
    pub fn registry(&self) -> Result<SmellRegistry> {
        let mut registry = SmellRegistry::default();
        for entry in &self.smells {
            if entry.metrics.is_empty() && entry.granularity.is_none() {
                if registry.get(&entry.name).is_none() {
                    return Err(StoreError::UnknownSmell(entry.name.clone()));
                }
                continue;
            }
            let granularity = entry
                .granularity
                .or_else(|| registry.get(&entry.name).map(|k| k.granularity))
                .unwrap_or(Granularity::Method);
            let metrics: Vec<&str> = entry.metrics.iter().map(String::as_str).collect();
            registry.declare(SmellKind::new(entry.name.clone(), granularity, &metrics)?)?;
        }
        Ok(registry)
    }

    pub fn threshold(&self, smell: &str) -> Option<f64> {
        self.smells.iter().rev().find(|s| s.name == smell)?.threshold
    }

    pub fn parse(text: &str, path: &Path) -> Result<Config> {
        let config: Config = toml::from_str(text).map_err(|e| StoreError::Config {
            path: path.to_owned(),
            message: e.message().to_owned(),
        })?;
        for entry in &config.smells {
            if let Some(t) = entry.threshold {
                if !(t > 0.0 && t <= 1.0) {
                    return Err(StoreError::Config {
                        path: path.to_owned(),
                        message: format!("threshold of `{}` must be in (0, 1], got {t}", entry.name),
                    });
                }
            }
        }
        config.registry().map_err(|e| StoreError::Config {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Rows already sent to the server, per smell and stream.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Watermark {
    /// Expert rows, counted in file order.
    pub samples: usize,
    /// Feedback rows, counted in file order.
    pub feedback: usize,
}

/// One line of `feedback.log`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedbackEntry {
    pub timestamp: String,
    pub smell: String,
    pub origin: Origin,
    pub element_id: String,
    pub application: String,
}

impl FeedbackEntry {
    fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\n",
            self.timestamp, self.smell, self.origin, self.element_id, self.application
        )
    }

    fn parse(line: &str) -> Option<FeedbackEntry> {
        let mut it = line.split('\t');
        let entry = FeedbackEntry {
            timestamp: it.next()?.to_owned(),
            smell: it.next()?.to_owned(),
            origin: it.next()?.parse().ok()?,
            element_id: it.next()?.to_owned(),
            application: it.next()?.to_owned(),
        };
        it.next().is_none().then_some(entry)
    }
}

/// Result of [`Store::merge_rows`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeOutcome {
    /// Indices of the input rows that were appended.
    pub appended: Vec<usize>,
    pub duplicates: usize,
}

/// Held while a store mutation runs; released on drop.
#[derive(Debug)]
pub struct StoreLock {
    _file: File,
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    /// Creates the layout under `root` (the `.smellchecker` directory
    /// itself). Existing files are kept; `config` is written only when no
    /// config exists yet.
    pub fn init(root: impl Into<PathBuf>, config: &Config) -> Result<Store> {
        let store = Store { root: root.into() };
        for dir in [store.root.clone(), store.root.join("samples"), store.root.join("models")] {
            fs::create_dir_all(&dir).map_err(StoreError::io(&dir))?;
        }
        let _lock = store.lock()?;
        let config_path = store.config_path();
        if !config_path.exists() {
            write_atomic(&config_path, config.to_toml().as_bytes()).map_err(StoreError::io(&config_path))?;
        }
        let id_path = store.root.join("client_id");
        if !id_path.exists() {
            let id = format!("{}\n", uuid::Uuid::new_v4());
            write_atomic(&id_path, id.as_bytes()).map_err(StoreError::io(&id_path))?;
        }
        let log = store.feedback_log_path();
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log)
            .map_err(StoreError::io(&log))?;
        Ok(store)
    }

    /// A store rooted at `root` without any layout checks. Only the
    /// sample and model operations are usable on it.
    pub fn bare(root: impl Into<PathBuf>) -> Store {
        Store { root: root.into() }
    }

    pub fn open(root: impl Into<PathBuf>) -> Result<Store> {
        let store = Store { root: root.into() };
        if !store.config_path().is_file() {
            return Err(StoreError::NotInitialized(store.root));
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config_path(&self) -> PathBuf {
        self.root.join("config.toml")
    }

    pub fn samples_path(&self, smell: &str) -> PathBuf {
        self.root.join("samples").join(format!("{smell}.csv"))
    }

    pub fn model_path(&self, smell: &str) -> PathBuf {
        self.root.join("models").join(format!("{smell}.json"))
    }

    pub fn history_dir(&self, smell: &str) -> PathBuf {
        self.root.join("models").join(format!("{smell}.history"))
    }

    pub fn feedback_log_path(&self) -> PathBuf {
        self.root.join("feedback.log")
    }

    fn sync_path(&self) -> PathBuf {
        self.root.join("sync.json")
    }

    /// Blocks until this process holds the store's writer lock.
    pub fn lock(&self) -> Result<StoreLock> {
        let path = self.root.join("lock");
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(StoreError::io(&path))?;
        file.lock().map_err(StoreError::io(&path))?;
        Ok(StoreLock { _file: file })
    }

    pub fn config(&self) -> Result<Config> {
        let path = self.config_path();
        let text = fs::read_to_string(&path).map_err(StoreError::io(&path))?;
        Config::parse(&text, &path)
    }

    pub fn save_config(&self, config: &Config) -> Result<()> {
        let _lock = self.lock()?;
        let path = self.config_path();
        write_atomic(&path, config.to_toml().as_bytes()).map_err(StoreError::io(&path))
    }

    pub fn registry(&self) -> Result<SmellRegistry> {
        self.config()?.registry()
    }

    pub fn smell(&self, name: &str) -> Result<SmellKind> {
        self.registry()?
            .get(name)
            .cloned()
            .ok_or_else(|| StoreError::UnknownSmell(name.to_owned()))
    }

    pub fn client_id(&self) -> Result<String> {
        let path = self.root.join("client_id");
        let id = fs::read_to_string(&path).map_err(StoreError::io(&path))?;
        Ok(id.trim().to_owned())
    }

    /// Appends rows to the smell's sample file. Fails without writing if any
    /// row is malformed or repeats an existing (element, origin, timestamp).
    pub fn append_rows(&self, smell: &SmellKind, rows: &[SampleRow]) -> Result<usize> {
        self.insert_rows(smell, rows, true).map(|o| o.appended.len())
    }

    /// Like [`Store::append_rows`] but skips duplicates instead of failing.
    pub fn merge_rows(&self, smell: &SmellKind, rows: &[SampleRow]) -> Result<MergeOutcome> {
        self.insert_rows(smell, rows, false)
    }

    fn insert_rows(&self, smell: &SmellKind, rows: &[SampleRow], strict: bool) -> Result<MergeOutcome> {
        for row in rows {
            validate_row(smell, row)?;
        }
        if rows.is_empty() {
            return Ok(MergeOutcome::default());
        }
        let samples = self.root.join("samples");
        fs::create_dir_all(&samples).map_err(StoreError::io(&samples))?;
        let _lock = self.lock()?;
        let path = self.samples_path(&smell.name);
        let existing = match fs::read(&path) {
            Ok(bytes) => Some(bytes),
            Err(e) if e.kind() == io::ErrorKind::NotFound => None,
            Err(e) => return Err(StoreError::io(&path)(e)),
        };
        let mut seen: HashSet<(String, Origin, String)> = HashSet::new();
        if existing.is_some() {
            let table = self.read_table(&path, &smell.name)?;
            check_schema(smell, &table.metric_names)?;
            seen.extend(table.rows.iter().map(owned_key));
        }
        let mut fresh = Vec::new();
        let mut outcome = MergeOutcome::default();
        for (i, row) in rows.iter().enumerate() {
            if seen.insert(owned_key(row)) {
                fresh.push(row);
                outcome.appended.push(i);
            } else if strict {
                return Err(StoreError::DuplicateRow {
                    element: row.element_id(),
                    origin: row.origin,
                    timestamp: row.timestamp.clone(),
                });
            } else {
                outcome.duplicates += 1;
            }
        }
        if fresh.is_empty() {
            return Ok(outcome);
        }

        let mut out = existing.unwrap_or_else(|| header_line(&smell.metric_set));
        if !out.is_empty() && !out.ends_with(b"\n") {
            out.push(b'\n');
        }
        let mut writer = csv_writer(&mut out);
        for row in &fresh {
            writer.write_record(row_record(row)).map_err(|e| csv_io(&path, e))?;
        }
        writer.flush().map_err(StoreError::io(&path))?;
        drop(writer);
        write_atomic(&path, &out).map_err(StoreError::io(&path))?;
        Ok(outcome)
    }

    /// The smell's sample table, rows in file order.
    pub fn load_table(&self, smell: &str) -> Result<SampleTable> {
        let path = self.samples_path(smell);
        if !path.is_file() {
            return Err(StoreError::MissingFile(path));
        }
        self.read_table(&path, smell)
    }

    /// The table, or an empty one with the smell's columns when no sample
    /// file exists yet.
    pub fn load_table_or_empty(&self, smell: &SmellKind) -> Result<SampleTable> {
        match self.load_table(&smell.name) {
            Err(StoreError::MissingFile(_)) => Ok(SampleTable::new(smell.name.clone(), smell.metric_set.clone())),
            other => other,
        }
    }

    fn read_table(&self, path: &Path, smell: &str) -> Result<SampleTable> {
        let file = File::open(path).map_err(StoreError::io(path))?;
        parse_table(file, path, smell)
    }

    /// Stores `model` as the current version, moving the previous current
    /// model into the history directory.
    pub fn save_model(&self, model: &SmellModel) -> Result<()> {
        let _lock = self.lock()?;
        let path = self.model_path(&model.smell);
        if path.is_file() {
            let previous = read_model(&path)?;
            if model.version <= previous.version {
                return Err(StoreError::VersionConflict {
                    smell: model.smell.clone(),
                    stored: previous.version,
                    attempted: model.version,
                });
            }
            let history = self.history_dir(&model.smell);
            fs::create_dir_all(&history).map_err(StoreError::io(&history))?;
            let archived = history.join(format!("v{}.json", previous.version));
            let bytes = fs::read(&path).map_err(StoreError::io(&path))?;
            match OpenOptions::new().write(true).create_new(true).open(&archived) {
                Ok(mut f) => {
                    f.write_all(&bytes).map_err(StoreError::io(&archived))?;
                    f.sync_all().map_err(StoreError::io(&archived))?;
                }
                // left behind by an interrupted save of the same model
                Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                    let stored = fs::read(&archived).map_err(StoreError::io(&archived))?;
                    if stored != bytes {
                        return Err(StoreError::VersionConflict {
                            smell: model.smell.clone(),
                            stored: previous.version,
                            attempted: model.version,
                        });
                    }
                }
                Err(e) => return Err(StoreError::io(&archived)(e)),
            }
        }
        let mut json = serde_json::to_string_pretty(model).expect("model serializes");
        json.push('\n');
        write_atomic(&path, json.as_bytes()).map_err(StoreError::io(&path))
    }

    pub fn load_model(&self, smell: &str) -> Result<SmellModel> {
        let path = self.model_path(smell);
        if !path.is_file() {
            return Err(StoreError::MissingModel(smell.to_owned()));
        }
        read_model(&path)
    }

    /// Version of the current model, if any.
    pub fn model_version(&self, smell: &str) -> Result<Option<u32>> {
        match self.load_model(smell) {
            Ok(m) => Ok(Some(m.version)),
            Err(StoreError::MissingModel(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Archived versions, oldest first, followed by the current model.
    pub fn model_history(&self, smell: &str) -> Result<Vec<SmellModel>> {
        let mut models = Vec::new();
        let dir = self.history_dir(smell);
        if dir.is_dir() {
            for entry in fs::read_dir(&dir).map_err(StoreError::io(&dir))? {
                let path = entry.map_err(StoreError::io(&dir))?.path();
                if path.extension().is_some_and(|e| e == "json") {
                    models.push(read_model(&path)?);
                }
            }
        }
        models.sort_by_key(|m| m.version);
        if let Ok(current) = self.load_model(smell) {
            models.push(current);
        }
        Ok(models)
    }

    pub fn append_feedback_log(&self, entry: &FeedbackEntry) -> Result<()> {
        let _lock = self.lock()?;
        let path = self.feedback_log_path();
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(StoreError::io(&path))?;
        file.write_all(entry.to_line().as_bytes()).map_err(StoreError::io(&path))?;
        file.sync_data().map_err(StoreError::io(&path))
    }

    pub fn feedback_log(&self) -> Result<Vec<FeedbackEntry>> {
        let path = self.feedback_log_path();
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(StoreError::io(&path)(e)),
        };
        text.lines()
            .enumerate()
            .map(|(i, line)| {
                FeedbackEntry::parse(line).ok_or_else(|| StoreError::ParseError {
                    path: path.clone(),
                    line: i as u64 + 1,
                    message: "expected 5 tab-separated fields".into(),
                })
            })
            .collect()
    }

    pub fn watermark(&self, smell: &str) -> Result<Watermark> {
        Ok(self.read_watermarks()?.get(smell).copied().unwrap_or_default())
    }

    pub fn set_watermark(&self, smell: &str, mark: Watermark) -> Result<()> {
        let _lock = self.lock()?;
        let mut marks = self.read_watermarks()?;
        marks.insert(smell.to_owned(), mark);
        let path = self.sync_path();
        let json = serde_json::to_string_pretty(&marks).expect("watermarks serialize");
        write_atomic(&path, json.as_bytes()).map_err(StoreError::io(&path))
    }

    fn read_watermarks(&self) -> Result<BTreeMap<String, Watermark>> {
        let path = self.sync_path();
        match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| StoreError::Json {
                path,
                message: e.to_string(),
            }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(BTreeMap::new()),
            Err(e) => Err(StoreError::io(&path)(e)),
        }
    }
}

fn owned_key(row: &SampleRow) -> (String, Origin, String) {
    (row.element_id(), row.origin, row.timestamp.clone())
}

fn read_model(path: &Path) -> Result<SmellModel> {
    let text = fs::read_to_string(path).map_err(StoreError::io(path))?;
    serde_json::from_str(&text).map_err(|e| StoreError::Json {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

fn validate_row(smell: &SmellKind, row: &SampleRow) -> Result<()> {
    let invalid = |reason: String| StoreError::InvalidRow {
        smell: smell.name.clone(),
        reason,
    };
    if row.values.len() != smell.metric_set.len() {
        return Err(StoreError::SchemaMismatch {
            smell: smell.name.clone(),
            expected: smell.metric_set.join(","),
            found: format!("{} metric values", row.values.len()),
        });
    }
    if row.method.is_some() != (smell.granularity == Granularity::Method) {
        return Err(invalid(format!("{} is not a {} element", row.element_id(), smell.granularity)));
    }
    if let Some(v) = row.values.iter().find(|v| !v.is_finite()) {
        return Err(invalid(format!("non-finite metric value {v}")));
    }
    if row.label > 1 {
        return Err(invalid(format!("label {} is not 0 or 1", row.label)));
    }
    if row.timestamp.contains(['\n', '\r']) || row.application.contains(['\n', '\r']) {
        return Err(invalid("line break in a text field".into()));
    }
    Ok(())
}

fn check_schema(smell: &SmellKind, metric_names: &[String]) -> Result<()> {
    if metric_names != smell.metric_set.as_slice() {
        return Err(StoreError::SchemaMismatch {
            smell: smell.name.clone(),
            expected: smell.metric_set.join(","),
            found: metric_names.join(","),
        });
    }
    Ok(())
}

fn csv_writer<W: io::Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn csv_io(path: &Path, e: csv::Error) -> StoreError {
    StoreError::Io {
        path: path.to_owned(),
        source: io::Error::other(e),
    }
}

fn header_line(metrics: &[String]) -> Vec<u8> {
    let mut out = Vec::new();
    let mut w = csv_writer(&mut out);
    let header = IDENTITY_COLUMNS
        .iter()
        .copied()
        .chain(metrics.iter().map(String::as_str))
        .chain(TRAILING_COLUMNS);
    w.write_record(header).expect("in-memory write");
    drop(w);
    out
}

/// Integers print without a decimal point; other values print as the
/// shortest decimal that parses back to the same f64.
pub fn format_number(v: f64) -> String {
    format!("{v}")
}

fn row_record(row: &SampleRow) -> Vec<String> {
    let mut rec = vec![
        row.application.clone(),
        row.package.clone(),
        row.class.clone(),
        row.method.clone().unwrap_or_default(),
    ];
    rec.extend(row.values.iter().map(|v| format_number(*v)));
    rec.push(row.label.to_string());
    rec.push(row.origin.to_string());
    rec.push(row.timestamp.clone());
    rec
}

/// Parses a sample CSV. Line numbers in errors are 1-based file lines.
pub fn parse_table(input: impl io::Read, path: &Path, smell: &str) -> Result<SampleTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut records = reader.records();
    let parse_err = |line: u64, message: String| StoreError::ParseError {
        path: path.to_owned(),
        line,
        message,
    };
    let header = match records.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(parse_err(1, e.to_string())),
        None => return Err(parse_err(1, "missing header".into())),
    };
    let cols: Vec<&str> = header.iter().collect();
    let n = cols.len();
    let well_formed = n > IDENTITY_COLUMNS.len() + TRAILING_COLUMNS.len()
        && cols[..4] == IDENTITY_COLUMNS
        && cols[n - 3..] == TRAILING_COLUMNS;
    if !well_formed {
        return Err(parse_err(1, format!("unexpected header `{}`", cols.join(","))));
    }
    let metric_names: Vec<String> = cols[4..n - 3].iter().map(|s| (*s).to_owned()).collect();
    let k = metric_names.len();
    let mut table = SampleTable::new(smell, metric_names);

    for record in records {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != n {
            return Err(parse_err(line, format!("expected {n} fields, found {}", record.len())));
        }
        let mut values = Vec::with_capacity(k);
        for (j, field) in record.iter().skip(4).take(k).enumerate() {
            let v: f64 = field
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("{}: `{field}` is not a number", table.metric_names[j])))?;
            values.push(v);
        }
        let label = match &record[n - 3] {
            "0" => 0,
            "1" => 1,
            other => return Err(parse_err(line, format!("label `{other}` is not 0 or 1"))),
        };
        let origin = record[n - 2].parse().map_err(|e: String| parse_err(line, e))?;
        let method = &record[3];
        table.rows.push(SampleRow {
            application: record[0].to_owned(),
            package: record[1].to_owned(),
            class: record[2].to_owned(),
            method: (!method.is_empty()).then(|| method.to_owned()),
            values,
            label,
            origin,
            timestamp: record[n - 1].to_owned(),
        });
    }
    Ok(table)
}

/// Serializes a table in the sample file format.
pub fn render_table(table: &SampleTable) -> Vec<u8> {
    let mut out = header_line(&table.metric_names);
    let mut w = csv_writer(&mut out);
    for row in &table.rows {
        w.write_record(row_record(row)).expect("in-memory write");
    }
    drop(w);
    out
}

#[cfg(test)]
mod tests;
