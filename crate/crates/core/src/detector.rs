//! Applies calibrated models to a corpus and reports likely smells in the
//! style of compiler warnings.

use std::fmt::Write as _;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{element_metrics, Hierarchy};
use crate::source_model::{Corpus, CorpusError, ParseDiagnostic};
use crate::stats::{predict, SmellModel, StatsError};
use crate::tagging::is_tagged;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub file_path: String,
    /// Line of the element's name.
    pub line: usize,
    pub element_id: String,
    pub smell: String,
    pub probability: f64,
    pub threshold_used: f64,
    pub model_version: u32,
    /// The element already carries a tag for this smell.
    pub confirmed: bool,
}

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("threshold for `{smell}` must be in (0, 1], got {value}")]
    InvalidThreshold { smell: String, value: f64 },
    #[error("no model for `{0}`")]
    MissingModel(String),
    #[error("model `{smell}`: {source}")]
    Model { smell: String, source: StatsError },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

pub fn validate_threshold(smell: &str, value: f64) -> Result<f64, DetectError> {
    if value > 0.0 && value <= 1.0 {
        Ok(value)
    } else {
        Err(DetectError::InvalidThreshold {
            smell: smell.to_owned(),
            value,
        })
    }
}

/// Probability of every measurable element of the model's granularity, in
/// corpus order.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub file_path: String,
    pub line: usize,
    pub element_id: String,
    pub probability: f64,
    pub confirmed: bool,
}

pub fn score(corpus: &Corpus, hierarchy: &Hierarchy<'_>, model: &SmellModel) -> Result<Vec<Scored>, DetectError> {
    let mut out = Vec::new();
    for e in corpus.elements(model.granularity) {
        let Some(vector) = element_metrics(e, hierarchy) else {
            continue;
        };
        let probability = predict(model, &vector).map_err(|source| DetectError::Model {
            smell: model.smell.clone(),
            source,
        })?;
        out.push(Scored {
            file_path: e.unit.file_path.display().to_string(),
            line: e.element.decl_line(),
            element_id: e.id().to_owned(),
            probability,
            confirmed: is_tagged(&e.element, &model.smell),
        });
    }
    Ok(out)
}

fn sort_findings(findings: &mut [Finding]) {
    findings.sort_by(|a, b| {
        (&a.file_path, a.line, &a.smell, &a.element_id).cmp(&(&b.file_path, b.line, &b.smell, &b.element_id))
    });
}

/// Findings of all models over a parsed corpus. A smell without an entry in
/// `thresholds` uses its model's default.
pub fn detect_corpus(
    corpus: &Corpus,
    models: &[SmellModel],
    thresholds: &IndexMap<String, f64>,
) -> Result<Vec<Finding>, DetectError> {
    let hierarchy = Hierarchy::new(corpus);
    let mut findings = Vec::new();
    for model in models {
        let threshold = validate_threshold(
            &model.smell,
            thresholds.get(&model.smell).copied().unwrap_or(model.threshold_default),
        )?;
        for s in score(corpus, &hierarchy, model)? {
            if s.probability >= threshold {
                findings.push(Finding {
                    file_path: s.file_path,
                    line: s.line,
                    element_id: s.element_id,
                    smell: model.smell.clone(),
                    probability: s.probability,
                    threshold_used: threshold,
                    model_version: model.version,
                    confirmed: s.confirmed,
                });
            }
        }
    }
    sort_findings(&mut findings);
    Ok(findings)
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub findings: Vec<Finding>,
    /// Files that could not be parsed; their elements are not scored.
    pub diagnostics: Vec<ParseDiagnostic>,
}

pub fn detect<P: AsRef<Path>>(
    roots: &[P],
    models: &[SmellModel],
    thresholds: &IndexMap<String, f64>,
) -> Result<Detection, DetectError> {
    for (smell, t) in thresholds {
        validate_threshold(smell, *t)?;
    }
    if let Some(smell) = thresholds.keys().find(|s| !models.iter().any(|m| &m.smell == *s)) {
        return Err(DetectError::MissingModel(smell.clone()));
    }
    let corpus = Corpus::load(roots)?;
    let findings = detect_corpus(&corpus, models, thresholds)?;
    Ok(Detection {
        findings,
        diagnostics: corpus.diagnostics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format `{other}` (expected text or json)")),
        }
    }
}

pub fn render_finding(f: &Finding) -> String {
    format!(
        "{}:{}: warning[smell]: {} probability={:.2} (model v{})",
        f.file_path, f.line, f.smell, f.probability, f.model_version
    )
}

/// Text: one line per finding, empty for no findings. JSON: an array of
/// findings.
pub fn render_report(findings: &[Finding], format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => {
            let mut out = String::new();
            for f in findings {
                let _ = writeln!(out, "{}", render_finding(f));
            }
            out
        }
        ReportFormat::Json => {
            let mut out = serde_json::to_string_pretty(findings).expect("findings serialize");
            out.push('\n');
            out
        }
    }
}

pub fn parse_json_report(text: &str) -> Result<Vec<Finding>, serde_json::Error> {
    serde_json::from_str(text)
}

/// 0 when clean, 1 when anything was reported.
pub fn exit_status(findings: &[Finding]) -> i32 {
    i32::from(!findings.is_empty())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub findings: usize,
}

/// `steps` evenly spaced thresholds from 0.1 to 0.9.
pub fn sweep_thresholds(steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..steps).map(|i| 0.1 + 0.8 * i as f64 / (steps - 1) as f64).collect(),
    }
}

/// Number of findings of one model at each threshold.
pub fn threshold_sweep(corpus: &Corpus, model: &SmellModel, thresholds: &[f64]) -> Result<Vec<SweepPoint>, DetectError> {
    for t in thresholds {
        validate_threshold(&model.smell, *t)?;
    }
    let hierarchy = Hierarchy::new(corpus);
    let mut probabilities: Vec<f64> = score(corpus, &hierarchy, model)?.into_iter().map(|s| s.probability).collect();
    probabilities.sort_by(f64::total_cmp);
    Ok(thresholds
        .iter()
        .map(|&t| SweepPoint {
            threshold: t,
            findings: probabilities.len() - probabilities.partition_point(|p| *p < t),
        })
        .collect())
}
