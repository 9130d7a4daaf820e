//! Structural model of Java compilation units.
//!
//! Source text is parsed with tree-sitter's Java grammar and lowered into a
//! small owned model: types, their fields and methods, and for every method
//! body a tree of [`StatementNode`]s. The model is immutable after
//! construction and carries everything the metric and tagging code needs, so
//! nothing downstream touches the concrete syntax tree.

mod build;
mod corpus;
mod lines;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use corpus::{Corpus, CorpusError, ElementRef, ParseDiagnostic, ResolveError};
pub use lines::{LineKind, LineMap};

/// The level at which a smell (and its metrics) applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Method,
    Type,
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Method => "method",
            Granularity::Type => "type",
        })
    }
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "method" => Ok(Granularity::Method),
            "type" | "class" => Ok(Granularity::Type),
            other => Err(format!("unknown granularity `{other}` (expected method or type)")),
        }
    }
}

/// Inclusive 1-based line range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineSpan {
    pub start: usize,
    pub end: usize,
}

impl LineSpan {
    pub fn contains(&self, line: usize) -> bool {
        self.start <= line && line <= self.end
    }

    pub fn encloses(&self, other: &LineSpan) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: syntax error: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct CompilationUnit {
    pub file_path: PathBuf,
    pub package_name: String,
    /// All types of the file in pre-order: an outer type precedes its members.
    pub types: Vec<TypeUnit>,
    pub source_text: String,
    pub lines: LineMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeKind {
    Class,
    Interface,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: String,
    pub is_static: bool,
}

#[derive(Debug, Clone)]
pub struct TypeUnit {
    /// Simple name.
    pub name: String,
    /// Dotted name within the file, `Outer.Inner` for member types.
    pub path: String,
    /// Package-qualified dotted name; the element id of the type.
    pub qualified_id: String,
    pub kind: TypeKind,
    /// Erased superclass name as written (`extends` clause of a class).
    pub superclass_name: Option<String>,
    pub attributes: Vec<FieldDecl>,
    pub methods: Vec<MethodUnit>,
    pub annotations: Vec<AnnotationNode>,
    pub line_span: LineSpan,
    /// Line of the type's name token.
    pub decl_line: usize,
    /// Byte offset where the declaration starts, modifiers and annotations included.
    pub decl_start: usize,
}

#[derive(Debug, Clone)]
pub struct MethodUnit {
    pub name: String,
    /// `name(T1,T2)` with erased parameter types.
    pub signature: String,
    pub parameters: Vec<String>,
    pub is_static: bool,
    pub is_constructor: bool,
    /// True iff the method carries `@Override`.
    pub is_override: bool,
    /// Absent for abstract and interface methods.
    pub body: Option<StatementNode>,
    /// Byte range of the body, braces included.
    pub body_range: Option<Range<usize>>,
    /// Names of every local variable declared anywhere in the body.
    pub local_declarations: Vec<String>,
    /// Simple names the body reads or writes that may denote fields of the
    /// enclosing type (bare identifiers that are not locals or parameters,
    /// and `this.x` accesses).
    pub referenced_names: Vec<String>,
    pub annotations: Vec<AnnotationNode>,
    pub line_span: LineSpan,
    pub decl_line: usize,
    pub decl_start: usize,
    /// `package.Type#name(T1,T2)`.
    pub qualified_id: String,
}

impl MethodUnit {
    pub fn has_body(&self) -> bool {
        self.body.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatementKind {
    Block,
    If,
    ElseBranch,
    For,
    EnhancedFor,
    While,
    Do,
    Switch,
    CaseLabel,
    DefaultLabel,
    Try,
    Catch,
    Finally,
    Return,
    Throw,
    /// Expression statements and every other simple statement
    /// (`break`, `continue`, `yield`, `assert`, local type declarations...).
    Expression,
    LocalVarDecl,
    Synchronized,
    Labeled,
}

impl StatementKind {
    /// Kinds that open a nesting level.
    pub fn is_block(self) -> bool {
        matches!(self, StatementKind::Block)
    }

    /// Kinds that add one path to the cyclomatic complexity.
    pub fn is_decision(self) -> bool {
        matches!(
            self,
            StatementKind::If
                | StatementKind::For
                | StatementKind::EnhancedFor
                | StatementKind::While
                | StatementKind::Do
                | StatementKind::CaseLabel
                | StatementKind::Catch
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatementNode {
    pub kind: StatementKind,
    pub children: Vec<StatementNode>,
    /// `&&`, `||` and `?:` occurrences in this statement's own expressions.
    pub boolean_operator_count: usize,
    pub line_span: LineSpan,
}

impl StatementNode {
    /// Pre-order traversal.
    pub fn walk(&self) -> impl Iterator<Item = &StatementNode> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let node = stack.pop()?;
            stack.extend(node.children.iter().rev());
            Some(node)
        })
    }

    /// Same tree with line spans erased, for structural comparison.
    pub fn shape(&self) -> Shape {
        Shape {
            kind: self.kind,
            boolean_operator_count: self.boolean_operator_count,
            children: self.children.iter().map(StatementNode::shape).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape {
    pub kind: StatementKind,
    pub boolean_operator_count: usize,
    pub children: Vec<Shape>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationNode {
    /// Name as written, possibly qualified.
    pub name: String,
    /// Raw source text of each member value. A single unnamed value is keyed `value`.
    pub arguments: BTreeMap<String, String>,
    pub line: usize,
    /// Byte range of the annotation text.
    pub range: Range<usize>,
}

impl AnnotationNode {
    pub fn simple_name(&self) -> &str {
        self.name.rsplit('.').next().unwrap_or(&self.name)
    }
}

/// Parses one Java compilation unit.
pub fn parse_compilation_unit(
    source_text: &str,
    file_path: impl Into<PathBuf>,
) -> Result<CompilationUnit, SyntaxError> {
    build::parse(source_text, file_path.into())
}

/// A type or method inside a [`CompilationUnit`].
#[derive(Debug, Clone, Copy)]
pub enum Element<'a> {
    Type(&'a TypeUnit),
    Method(&'a TypeUnit, &'a MethodUnit),
}

impl<'a> Element<'a> {
    pub fn qualified_id(&self) -> &'a str {
        match self {
            Element::Type(t) => &t.qualified_id,
            Element::Method(_, m) => &m.qualified_id,
        }
    }

    pub fn granularity(&self) -> Granularity {
        match self {
            Element::Type(_) => Granularity::Type,
            Element::Method(..) => Granularity::Method,
        }
    }

    pub fn owner(&self) -> &'a TypeUnit {
        match self {
            Element::Type(t) | Element::Method(t, _) => t,
        }
    }

    pub fn annotations(&self) -> &'a [AnnotationNode] {
        match self {
            Element::Type(t) => &t.annotations,
            Element::Method(_, m) => &m.annotations,
        }
    }

    pub fn decl_line(&self) -> usize {
        match self {
            Element::Type(t) => t.decl_line,
            Element::Method(_, m) => m.decl_line,
        }
    }

    pub fn decl_start(&self) -> usize {
        match self {
            Element::Type(t) => t.decl_start,
            Element::Method(_, m) => m.decl_start,
        }
    }
}

/// Lists the unit's elements of one granularity in declaration order.
pub fn enumerate_elements(
    unit: &CompilationUnit,
    granularity: Granularity,
) -> Vec<(String, Element<'_>)> {
    match granularity {
        Granularity::Type => unit
            .types
            .iter()
            .map(|t| (t.qualified_id.clone(), Element::Type(t)))
            .collect(),
        Granularity::Method => unit
            .types
            .iter()
            .flat_map(|t| {
                t.methods
                    .iter()
                    .map(move |m| (m.qualified_id.clone(), Element::Method(t, m)))
            })
            .collect(),
    }
}

/// Splits an element id into (package, class path, method signature).
pub fn split_element_id<'a>(id: &'a str, package: &str) -> (&'a str, Option<&'a str>) {
    let rest = if !package.is_empty() && id.starts_with(package) && id[package.len()..].starts_with('.') {
        &id[package.len() + 1..]
    } else {
        id
    };
    match rest.split_once('#') {
        Some((class, method)) => (class, Some(method)),
        None => (rest, None),
    }
}

/// Builds the element id from its identity columns.
pub fn element_id(package: &str, class: &str, method: Option<&str>) -> String {
    let mut id = String::new();
    if !package.is_empty() {
        id.push_str(package);
        id.push('.');
    }
    id.push_str(class);
    if let Some(method) = method {
        id.push('#');
        id.push_str(method);
    }
    id
}
