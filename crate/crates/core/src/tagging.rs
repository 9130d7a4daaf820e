//! `@CodeSmell` annotations: reading them from a corpus, writing and
//! removing them in source files, and turning tags into sample rows.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{element_metrics, Hierarchy};
use crate::sample::{timestamp_now, Origin, SampleRow, SampleTable};
use crate::smell::{SmellKind, SmellRegistry};
use crate::source_model::{
    enumerate_elements, parse_compilation_unit, AnnotationNode, CompilationUnit, Corpus, Element,
    ElementRef, Granularity, ResolveError, SyntaxError,
};

pub const ANNOTATION: &str = "CodeSmell";
pub const TYPE_ENUM: &str = "CodeSmellType";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmellTag {
    pub element_id: String,
    pub smell: String,
    pub description: String,
    pub origin: Origin,
    /// Set for tags that did not come from source annotations.
    pub timestamp: Option<String>,
    pub file_path: PathBuf,
    pub line: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    FalsePositive,
    FalseNegative,
}

impl std::str::FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fp" | "false_positive" => Ok(Verdict::FalsePositive),
            "fn" | "false_negative" => Ok(Verdict::FalseNegative),
            other => Err(format!("unknown verdict `{other}` (expected fp or fn)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum TagError {
    #[error("{location}: unknown smell kind `{name}`")]
    UnknownSmellKind { name: String, location: String },
    #[error("{location}: {smell} applies to {expected} elements, not to `{element}`")]
    GranularityMismatch {
        smell: String,
        element: String,
        expected: Granularity,
        location: String,
    },
    #[error("`{element}` is already tagged {smell}")]
    AlreadyTagged { element: String, smell: String },
    #[error("`{element}` is not tagged {smell}")]
    NotTagged { element: String, smell: String },
    #[error("element `{0}` not found")]
    ElementNotFound(String),
    #[error(transparent)]
    Resolve(#[from] ResolveError),
    #[error("corpus has no {0} elements to sample")]
    EmptyCorpus(Granularity),
    #[error("`{0}` has no body to measure")]
    NotMeasurable(String),
    #[error("{path}:{line}:{column}: {message}")]
    Syntax {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl TagError {
    fn syntax(path: &Path, e: SyntaxError) -> TagError {
        TagError::Syntax {
            path: path.to_owned(),
            line: e.line,
            column: e.column,
            message: e.message,
        }
    }
}

fn is_code_smell(a: &AnnotationNode) -> bool {
    a.simple_name() == ANNOTATION
}

/// Smell name of a `type=` argument: `CodeSmellType.LongMethod` and
/// `LongMethod` both name `LongMethod`.
fn smell_name(a: &AnnotationNode) -> Option<&str> {
    let raw = a.arguments.get("type").or_else(|| a.arguments.get("value"))?;
    Some(raw.trim().rsplit('.').next().unwrap_or(raw))
}

/// Escapes text for a Java string literal.
pub fn escape_java(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

/// Value of a Java string literal (or `+`-concatenation of literals) as
/// written in source. Anything else is returned verbatim.
pub fn unescape_java(raw: &str) -> String {
    let raw = raw.trim();
    if !raw.starts_with('"') {
        return raw.to_owned();
    }
    let mut out = String::new();
    let mut chars = raw.chars().peekable();
    let mut inside = false;
    while let Some(c) = chars.next() {
        if !inside {
            if c == '"' {
                inside = true;
            }
            continue;
        }
        match c {
            '"' => inside = false,
            '\\' => match chars.next() {
                Some('n') => out.push('\n'),
                Some('r') => out.push('\r'),
                Some('t') => out.push('\t'),
                Some('b') => out.push('\u{8}'),
                Some('f') => out.push('\u{c}'),
                Some('s') => out.push(' '),
                Some('u') => {
                    while chars.peek() == Some(&'u') {
                        chars.next();
                    }
                    let hex: String = chars.by_ref().take(4).collect();
                    if let Some(ch) = u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32) {
                        out.push(ch);
                    }
                }
                Some(d @ '0'..='7') => {
                    let mut code = d.to_digit(8).unwrap_or(0);
                    for _ in 0..2 {
                        match chars.peek().and_then(|c| c.to_digit(8)) {
                            Some(v) if code * 8 + v <= 0o377 => {
                                code = code * 8 + v;
                                chars.next();
                            }
                            _ => break,
                        }
                    }
                    out.extend(char::from_u32(code));
                }
                Some(other) => out.push(other),
                None => {}
            },
            c => out.push(c),
        }
    }
    out
}

fn location(unit: &CompilationUnit, line: usize) -> String {
    format!("{}:{}", unit.file_path.display(), line)
}

fn unit_tags(unit: &CompilationUnit, registry: &SmellRegistry) -> Result<Vec<SmellTag>, TagError> {
    let mut tags = Vec::new();
    for granularity in [Granularity::Type, Granularity::Method] {
        for (id, element) in enumerate_elements(unit, granularity) {
            for a in element.annotations().iter().filter(|a| is_code_smell(a)) {
                let name = smell_name(a).unwrap_or("");
                let kind = registry.get(name).ok_or_else(|| TagError::UnknownSmellKind {
                    name: name.to_owned(),
                    location: location(unit, a.line),
                })?;
                if kind.granularity != granularity {
                    return Err(TagError::GranularityMismatch {
                        smell: kind.name.clone(),
                        element: id.clone(),
                        expected: kind.granularity,
                        location: location(unit, a.line),
                    });
                }
                tags.push(SmellTag {
                    element_id: id.clone(),
                    smell: kind.name.clone(),
                    description: a
                        .arguments
                        .get("description")
                        .map(|d| unescape_java(d))
                        .unwrap_or_default(),
                    origin: Origin::Expert,
                    timestamp: None,
                    file_path: unit.file_path.clone(),
                    line: a.line,
                });
            }
        }
    }
    tags.sort_by_key(|t| t.line);
    Ok(tags)
}

/// Every `@CodeSmell` tag of the corpus, in file order then line order.
pub fn read_tags(corpus: &Corpus, registry: &SmellRegistry) -> Result<Vec<SmellTag>, TagError> {
    let mut out = Vec::new();
    for unit in &corpus.units {
        out.extend(unit_tags(unit, registry)?);
    }
    Ok(out)
}

fn find_element<'a>(unit: &'a CompilationUnit, element_id: &str) -> Option<Element<'a>> {
    [Granularity::Type, Granularity::Method]
        .into_iter()
        .flat_map(|g| enumerate_elements(unit, g))
        .find(|(id, _)| id == element_id)
        .map(|(_, e)| e)
}

/// True iff the element carries a `@CodeSmell` tag naming `smell`.
pub fn is_tagged(element: &Element<'_>, smell: &str) -> bool {
    tagged_with(element, smell).is_some()
}

fn tagged_with<'a>(element: &Element<'a>, smell: &str) -> Option<&'a AnnotationNode> {
    element
        .annotations()
        .iter()
        .find(|a| is_code_smell(a) && smell_name(a) == Some(smell))
}

fn check_granularity(element: &Element<'_>, smell: &SmellKind, unit: &CompilationUnit) -> Result<(), TagError> {
    if element.granularity() != smell.granularity {
        return Err(TagError::GranularityMismatch {
            smell: smell.name.clone(),
            element: element.qualified_id().to_owned(),
            expected: smell.granularity,
            location: location(unit, element.decl_line()),
        });
    }
    Ok(())
}

pub fn annotation_text(smell: &str, description: &str) -> String {
    format!(
        "@{ANNOTATION}(type={TYPE_ENUM}.{smell}, description=\"{}\")",
        escape_java(description)
    )
}

/// Source text with the annotation inserted on its own line directly above
/// the element's declaration (above any annotations it already has).
pub fn write_tag(
    source: &str,
    path: &Path,
    element_id: &str,
    smell: &SmellKind,
    description: &str,
) -> Result<String, TagError> {
    let unit = parse_compilation_unit(source, path).map_err(|e| TagError::syntax(path, e))?;
    let element = find_element(&unit, element_id)
        .ok_or_else(|| TagError::ElementNotFound(element_id.to_owned()))?;
    check_granularity(&element, smell, &unit)?;
    if tagged_with(&element, &smell.name).is_some() {
        return Err(TagError::AlreadyTagged {
            element: element_id.to_owned(),
            smell: smell.name.clone(),
        });
    }

    let newline = if source.contains("\r\n") { "\r\n" } else { "\n" };
    let start = element.decl_start();
    let line_start = source[..start].rfind('\n').map_or(0, |i| i + 1);
    let line = &source[line_start..];
    let indent = &line[..line.len() - line.trim_start_matches([' ', '\t']).len()];
    let annotation = annotation_text(&smell.name, description);

    let mut out = String::with_capacity(source.len() + annotation.len() + 2 * indent.len() + 4);
    if source[line_start..start].trim().is_empty() {
        let own_indent = &source[line_start..start];
        out.push_str(&source[..line_start]);
        out.push_str(own_indent);
        out.push_str(&annotation);
        out.push_str(newline);
        out.push_str(&source[line_start..]);
    } else {
        // The declaration shares its line with earlier code; break the line.
        out.push_str(source[..start].trim_end_matches([' ', '\t']));
        out.push_str(newline);
        out.push_str(indent);
        out.push_str(&annotation);
        out.push_str(newline);
        out.push_str(indent);
        out.push_str(&source[start..]);
    }
    Ok(out)
}

/// Source text with the element's annotation for `smell` removed. A line
/// left blank by the removal is removed with it.
pub fn remove_tag(source: &str, path: &Path, element_id: &str, smell: &str) -> Result<String, TagError> {
    let unit = parse_compilation_unit(source, path).map_err(|e| TagError::syntax(path, e))?;
    let element = find_element(&unit, element_id)
        .ok_or_else(|| TagError::ElementNotFound(element_id.to_owned()))?;
    let a = tagged_with(&element, smell).ok_or_else(|| TagError::NotTagged {
        element: element_id.to_owned(),
        smell: smell.to_owned(),
    })?;
    let mut start = a.range.start;
    let mut end = a.range.end;
    let line_start = source[..start].rfind('\n').map_or(0, |i| i + 1);
    let line_end = source[end..].find('\n').map_or(source.len(), |i| end + i + 1);
    if source[line_start..start].trim().is_empty() && source[end..line_end].trim().is_empty() {
        start = line_start;
        end = line_end;
    } else {
        end += source[end..].len() - source[end..].trim_start_matches([' ', '\t']).len();
    }
    Ok(format!("{}{}", &source[..start], &source[end..]))
}

fn read_file(path: &Path) -> Result<String, TagError> {
    std::fs::read_to_string(path).map_err(|source| TagError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Replaces a file's content via write-temp-and-rename.
pub fn write_file_atomic(path: &Path, text: &str) -> Result<(), TagError> {
    crate::fsutil::write_atomic(path, text.as_bytes()).map_err(|source| TagError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Result of a file rewrite; `new_text` is what was (or would be) written.
#[derive(Debug, Clone)]
pub struct FileEdit {
    pub path: PathBuf,
    pub element_id: String,
    pub old_text: String,
    pub new_text: String,
}

/// Resolves `query` in the corpus and tags the element's file.
/// Nothing is written when `dry_run` is set.
pub fn tag_element(
    corpus: &Corpus,
    query: &str,
    smell: &SmellKind,
    description: &str,
    dry_run: bool,
) -> Result<FileEdit, TagError> {
    let target = corpus.resolve(query)?;
    let path = target.unit.file_path.clone();
    let old_text = read_file(&path)?;
    let new_text = write_tag(&old_text, &path, target.id(), smell, description)?;
    if !dry_run {
        write_file_atomic(&path, &new_text)?;
    }
    Ok(FileEdit {
        path,
        element_id: target.id().to_owned(),
        old_text,
        new_text,
    })
}

pub fn untag_element(corpus: &Corpus, query: &str, smell: &str, dry_run: bool) -> Result<FileEdit, TagError> {
    let target = corpus.resolve(query)?;
    let path = target.unit.file_path.clone();
    let old_text = read_file(&path)?;
    let new_text = remove_tag(&old_text, &path, target.id(), smell)?;
    if !dry_run {
        write_file_atomic(&path, &new_text)?;
    }
    Ok(FileEdit {
        path,
        element_id: target.id().to_owned(),
        old_text,
        new_text,
    })
}

fn row_for(
    element: ElementRef<'_>,
    hierarchy: &Hierarchy<'_>,
    smell: &SmellKind,
    application: &str,
    label: u8,
    origin: Origin,
    timestamp: &str,
) -> Option<SampleRow> {
    let vector = element_metrics(element, hierarchy)?;
    let values = smell
        .metric_set
        .iter()
        .map(|m| vector.get(m))
        .collect::<Option<Vec<f64>>>()?;
    let (owner, method) = match element.element {
        Element::Type(t) => (t, None),
        Element::Method(t, m) => (t, Some(m.signature.clone())),
    };
    Some(SampleRow {
        application: application.to_owned(),
        package: element.unit.package_name.clone(),
        class: owner.path.clone(),
        method,
        values,
        label,
        origin,
        timestamp: timestamp.to_owned(),
    })
}

/// One expert row per measurable element of the smell's granularity,
/// labeled 1 iff the element carries a tag for the smell.
///
/// Untagged elements are negatives, so the corpus must be one whose
/// untagged elements were reviewed. Methods without a body are skipped.
pub fn build_sample(corpus: &Corpus, smell: &SmellKind, application: &str) -> Result<SampleTable, TagError> {
    build_sample_at(corpus, smell, application, &timestamp_now())
}

pub fn build_sample_at(
    corpus: &Corpus,
    smell: &SmellKind,
    application: &str,
    timestamp: &str,
) -> Result<SampleTable, TagError> {
    let hierarchy = Hierarchy::new(corpus);
    let mut table = SampleTable::new(smell.name.clone(), smell.metric_set.clone());
    for unit in &corpus.units {
        // Misplaced tags for this smell are errors; tags for other smells are ignored.
        for granularity in [Granularity::Type, Granularity::Method] {
            if granularity == smell.granularity {
                continue;
            }
            for (_, element) in enumerate_elements(unit, granularity) {
                if let Some(a) = tagged_with(&element, &smell.name) {
                    return Err(TagError::GranularityMismatch {
                        smell: smell.name.clone(),
                        element: element.qualified_id().to_owned(),
                        expected: smell.granularity,
                        location: location(unit, a.line),
                    });
                }
            }
        }
        for (_, element) in enumerate_elements(unit, smell.granularity) {
            let label = u8::from(tagged_with(&element, &smell.name).is_some());
            let element_ref = ElementRef { unit, element };
            if let Some(row) = row_for(element_ref, &hierarchy, smell, application, label, Origin::Expert, timestamp) {
                table.rows.push(row);
            }
        }
    }
    if table.is_empty() {
        return Err(TagError::EmptyCorpus(smell.granularity));
    }
    Ok(table)
}

/// Sample row recording a developer's verdict on an element:
/// label 0 for a false positive, 1 for a false negative.
pub fn record_feedback(
    corpus: &Corpus,
    query: &str,
    smell: &SmellKind,
    verdict: Verdict,
    application: &str,
) -> Result<SampleRow, TagError> {
    let target = corpus.resolve(query).map_err(|e| match e {
        ResolveError::NotFound(q) => TagError::ElementNotFound(q),
        other => TagError::Resolve(other),
    })?;
    check_granularity(&target.element, smell, target.unit)?;
    let (label, origin) = match verdict {
        Verdict::FalsePositive => (0, Origin::FeedbackFp),
        Verdict::FalseNegative => (1, Origin::FeedbackFn),
    };
    let hierarchy = Hierarchy::new(corpus);
    row_for(target, &hierarchy, smell, application, label, origin, &timestamp_now())
        .ok_or_else(|| TagError::NotMeasurable(target.id().to_owned()))
}

#[cfg(test)]
mod tests;
