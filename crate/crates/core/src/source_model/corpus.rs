use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;
use walkdir::WalkDir;

use super::{enumerate_elements, parse_compilation_unit, CompilationUnit, Element, Granularity};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ResolveError {
    #[error("element `{0}` not found")]
    NotFound(String),
    #[error("element `{query}` is ambiguous: {}", candidates.join(", "))]
    Ambiguous { query: String, candidates: Vec<String> },
}

/// A file that could not be read or parsed. Reported, never fatal.
#[derive(Debug, Clone)]
pub struct ParseDiagnostic {
    pub path: PathBuf,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl std::fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}:{}:{}: error: {}",
            self.path.display(),
            self.line,
            self.column,
            self.message
        )
    }
}

/// Every parsed compilation unit under a set of roots.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub units: Vec<CompilationUnit>,
    pub diagnostics: Vec<ParseDiagnostic>,
}

/// An element together with the unit that declares it.
#[derive(Debug, Clone, Copy)]
pub struct ElementRef<'a> {
    pub unit: &'a CompilationUnit,
    pub element: Element<'a>,
}

impl<'a> ElementRef<'a> {
    pub fn id(&self) -> &'a str {
        self.element.qualified_id()
    }
}

impl Corpus {
    /// Parses every `.java` file under `roots`. A root may also be a single file.
    ///
    /// Files are visited root by root, in lexicographic path order within a
    /// root. Unparseable files end up in `diagnostics`.
    pub fn load<P: AsRef<Path>>(roots: &[P]) -> Result<Corpus, CorpusError> {
        let mut files = Vec::new();
        for root in roots {
            let root = root.as_ref();
            let meta = std::fs::metadata(root).map_err(|source| CorpusError::Io {
                path: root.to_owned(),
                source,
            })?;
            if meta.is_file() {
                files.push(root.to_owned());
                continue;
            }
            let mut found = Vec::new();
            for entry in WalkDir::new(root).sort_by_file_name() {
                let entry = entry.map_err(|e| CorpusError::Io {
                    path: e.path().map(Path::to_owned).unwrap_or_else(|| root.to_owned()),
                    source: e.into_io_error().unwrap_or_else(|| io::Error::other("walk error")),
                })?;
                if entry.file_type().is_file()
                    && entry.path().extension().is_some_and(|ext| ext == "java")
                {
                    found.push(entry.into_path());
                }
            }
            found.sort();
            files.extend(found);
        }

        let parsed: Vec<Result<CompilationUnit, ParseDiagnostic>> = files
            .par_iter()
            .map(|path| {
                let text = std::fs::read_to_string(path).map_err(|e| ParseDiagnostic {
                    path: path.clone(),
                    line: 0,
                    column: 0,
                    message: e.to_string(),
                })?;
                parse_compilation_unit(&text, path.clone()).map_err(|e| ParseDiagnostic {
                    path: path.clone(),
                    line: e.line,
                    column: e.column,
                    message: e.message,
                })
            })
            .collect();

        let mut corpus = Corpus::default();
        for result in parsed {
            match result {
                Ok(unit) => corpus.units.push(unit),
                Err(diag) => corpus.diagnostics.push(diag),
            }
        }
        Ok(corpus)
    }

    pub fn from_units(units: Vec<CompilationUnit>) -> Corpus {
        Corpus {
            units,
            diagnostics: Vec::new(),
        }
    }

    /// All elements of a granularity: file order, then declaration order.
    pub fn elements(&self, granularity: Granularity) -> Vec<ElementRef<'_>> {
        self.units
            .iter()
            .flat_map(|unit| {
                enumerate_elements(unit, granularity)
                    .into_iter()
                    .map(move |(_, element)| ElementRef { unit, element })
            })
            .collect()
    }

    fn all_elements(&self) -> impl Iterator<Item = ElementRef<'_>> {
        self.elements(Granularity::Type)
            .into_iter()
            .chain(self.elements(Granularity::Method))
    }

    pub fn find(&self, id: &str) -> Option<ElementRef<'_>> {
        self.all_elements().find(|e| e.id() == id)
    }

    /// Resolves a user-supplied element reference.
    ///
    /// Accepts the exact id, or any unique suffix that starts at a `.` or `#`
    /// boundary, optionally without the parameter list (`Customer#total`).
    pub fn resolve(&self, query: &str) -> Result<ElementRef<'_>, ResolveError> {
        if let Some(exact) = self.find(query) {
            return Ok(exact);
        }
        let matches: Vec<ElementRef<'_>> = self
            .all_elements()
            .filter(|e| {
                let id = e.id();
                let full = suffix_match(id, query);
                let no_params = id
                    .split_once('(')
                    .map(|(head, _)| suffix_match(head, query))
                    .unwrap_or(false);
                full || no_params
            })
            .collect();
        match matches.len() {
            0 => Err(ResolveError::NotFound(query.to_owned())),
            1 => Ok(matches[0]),
            _ => Err(ResolveError::Ambiguous {
                query: query.to_owned(),
                candidates: matches.iter().map(|e| e.id().to_owned()).collect(),
            }),
        }
    }
}

fn suffix_match(id: &str, query: &str) -> bool {
    id == query
        || (id.ends_with(query)
            && matches!(id.as_bytes()[id.len() - query.len() - 1], b'.' | b'#'))
}
