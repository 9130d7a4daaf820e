//! Method- and class-level complexity metrics.
//!
//! Counting rules:
//!
//! * `MLOC`: physical lines holding code strictly inside the body braces.
//!   Comment-only and blank lines never count.
//! * `NBD`: deepest block nesting; the body block is depth 1. Brace blocks and
//!   switch bodies open a level, wherever they occur (lambda and anonymous
//!   class bodies included).
//! * `VG`: 1 + `if`, `for`, enhanced `for`, `while`, `do`, non-default `case`
//!   labels, `catch` clauses, `?:` and every `&&`/`||`.
//! * `PAR`: declared parameters.
//! * `LVAR`: local variable declarators, including `for` initialisers,
//!   enhanced-`for` variables and try-with-resources variables.
//!
//! Class metrics follow the Eclipse Metrics vocabulary; see [`CLASS_METRICS`].

use std::collections::HashMap;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::source_model::{
    CompilationUnit, Corpus, CorpusError, Element, ElementRef, Granularity, MethodUnit,
    ParseDiagnostic, StatementNode, TypeUnit,
};

pub const METHOD_METRICS: [&str; 5] = ["MLOC", "NBD", "VG", "PAR", "LVAR"];

pub const CLASS_METRICS: [&str; 11] = [
    "NORM",
    "NOA",
    "NSA",
    "NOC",
    "MLOC_total",
    "NOM",
    "NSM",
    "DIT",
    "LCOM",
    "SIX",
    "WMC",
];

pub fn metric_names(granularity: Granularity) -> &'static [&'static str] {
    match granularity {
        Granularity::Method => &METHOD_METRICS,
        Granularity::Type => &CLASS_METRICS,
    }
}

pub fn is_metric(granularity: Granularity, name: &str) -> bool {
    metric_names(granularity).contains(&name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub element_id: String,
    pub granularity: Granularity,
    pub values: IndexMap<String, f64>,
}

impl MetricVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }
}

fn nesting_depth(node: &StatementNode) -> usize {
    let own = usize::from(node.kind.is_block());
    own + node.children.iter().map(nesting_depth).max().unwrap_or(0)
}

fn decision_points(node: &StatementNode) -> usize {
    node.walk()
        .map(|s| usize::from(s.kind.is_decision()) + s.boolean_operator_count)
        .sum()
}

/// McCabe complexity of a body.
pub fn cyclomatic(body: &StatementNode) -> usize {
    1 + decision_points(body)
}

pub fn method_lines(m: &MethodUnit, unit: &CompilationUnit) -> Option<usize> {
    let range = m.body_range.clone()?;
    // strictly inside the braces
    Some(unit.lines.code_lines_in(range.start + 1..range.end.saturating_sub(1)))
}

/// Metric vector of a method. `None` for methods without a body.
pub fn method_metrics(m: &MethodUnit, unit: &CompilationUnit) -> Option<MetricVector> {
    let body = m.body.as_ref()?;
    let mut values = IndexMap::new();
    values.insert("MLOC".to_owned(), method_lines(m, unit)? as f64);
    values.insert("NBD".to_owned(), nesting_depth(body) as f64);
    values.insert("VG".to_owned(), cyclomatic(body) as f64);
    values.insert("PAR".to_owned(), m.parameters.len() as f64);
    values.insert("LVAR".to_owned(), m.local_declarations.len() as f64);
    Some(MetricVector {
        element_id: m.qualified_id.clone(),
        granularity: Granularity::Method,
        values,
    })
}

/// Superclass links resolved within a corpus.
///
/// A superclass name resolves to a corpus type whose qualified id equals the
/// name or ends with `.name`; same-package candidates win, then corpus order.
/// Names that do not resolve terminate the chain.
pub struct Hierarchy<'a> {
    parent: HashMap<&'a str, &'a str>,
    children: HashMap<&'a str, usize>,
}

impl<'a> Hierarchy<'a> {
    pub fn new(corpus: &'a Corpus) -> Self {
        let types: Vec<(&'a CompilationUnit, &'a TypeUnit)> = corpus
            .units
            .iter()
            .flat_map(|u| u.types.iter().map(move |t| (u, t)))
            .collect();
        let mut parent = HashMap::new();
        let mut children: HashMap<&str, usize> = HashMap::new();
        for (unit, ty) in &types {
            let Some(sup) = ty.superclass_name.as_deref() else {
                continue;
            };
            let candidates: Vec<&(&CompilationUnit, &TypeUnit)> = types
                .iter()
                .filter(|(_, c)| !std::ptr::eq(*c, *ty))
                .filter(|(_, c)| {
                    c.qualified_id == sup
                        || (c.qualified_id.ends_with(sup)
                            && c.qualified_id.as_bytes()[c.qualified_id.len() - sup.len() - 1]
                                == b'.')
                })
                .collect();
            let chosen = candidates
                .iter()
                .find(|(u, _)| u.package_name == unit.package_name)
                .or_else(|| candidates.first());
            if let Some((_, sup_ty)) = chosen {
                parent.insert(ty.qualified_id.as_str(), sup_ty.qualified_id.as_str());
                *children.entry(sup_ty.qualified_id.as_str()).or_default() += 1;
            }
        }
        Hierarchy { parent, children }
    }

    /// 1 + number of resolvable ancestors.
    pub fn depth(&self, id: &str) -> usize {
        let mut depth = 1;
        let mut seen = vec![id];
        let mut current = id;
        while let Some(&next) = self.parent.get(current) {
            if seen.contains(&next) {
                break;
            }
            seen.push(next);
            depth += 1;
            current = next;
        }
        depth
    }

    pub fn children(&self, id: &str) -> usize {
        self.children.get(id).copied().unwrap_or(0)
    }
}

/// Henderson-Sellers LCOM*: `((1/a)·Σ μ(A_j) − m) / (1 − m)`.
///
/// `usage[j]` is the number of methods referencing attribute `j`. Zero when
/// there are no attributes or at most one method.
pub fn lcom_star(usage: &[usize], methods: usize) -> f64 {
    if usage.is_empty() || methods <= 1 {
        return 0.0;
    }
    let a = usage.len() as f64;
    let m = methods as f64;
    let mean = usage.iter().sum::<usize>() as f64 / a;
    (mean - m) / (1.0 - m)
}

pub fn class_metrics(t: &TypeUnit, unit: &CompilationUnit, hierarchy: &Hierarchy<'_>) -> MetricVector {
    let nsm = t.methods.iter().filter(|m| m.is_static).count();
    let nom = t.methods.len() - nsm;
    let norm = t.methods.iter().filter(|m| m.is_override).count();
    let noa = t.attributes.iter().filter(|a| !a.is_static).count();
    let nsa = t.attributes.len() - noa;
    let dit = hierarchy.depth(&t.qualified_id);
    let noc = hierarchy.children(&t.qualified_id);
    let mloc_total: usize = t.methods.iter().filter_map(|m| method_lines(m, unit)).sum();
    let wmc: usize = t
        .methods
        .iter()
        .filter_map(|m| m.body.as_ref().map(cyclomatic))
        .sum();
    let usage: Vec<usize> = t
        .attributes
        .iter()
        .map(|a| {
            t.methods
                .iter()
                .filter(|m| m.referenced_names.contains(&a.name))
                .count()
        })
        .collect();
    let total_methods = nom + nsm;
    let lcom = lcom_star(&usage, total_methods);
    let six = if total_methods == 0 {
        0.0
    } else {
        (norm * dit) as f64 / total_methods as f64
    };

    let values = [
        ("NORM", norm as f64),
        ("NOA", noa as f64),
        ("NSA", nsa as f64),
        ("NOC", noc as f64),
        ("MLOC_total", mloc_total as f64),
        ("NOM", nom as f64),
        ("NSM", nsm as f64),
        ("DIT", dit as f64),
        ("LCOM", lcom),
        ("SIX", six),
        ("WMC", wmc as f64),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_owned(), v))
    .collect();

    MetricVector {
        element_id: t.qualified_id.clone(),
        granularity: Granularity::Type,
        values,
    }
}

/// Metric vector for any element. `None` for methods without a body.
pub fn element_metrics(
    element: ElementRef<'_>,
    hierarchy: &Hierarchy<'_>,
) -> Option<MetricVector> {
    match element.element {
        Element::Method(_, m) => method_metrics(m, element.unit),
        Element::Type(t) => Some(class_metrics(t, element.unit, hierarchy)),
    }
}

/// Measurable elements of a corpus with their vectors, in corpus order.
pub fn corpus_vectors(
    corpus: &Corpus,
    granularity: Granularity,
) -> Vec<(ElementRef<'_>, MetricVector)> {
    let hierarchy = Hierarchy::new(corpus);
    corpus
        .elements(granularity)
        .into_iter()
        .filter_map(|e| element_metrics(e, &hierarchy).map(|v| (e, v)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct CorpusMetrics {
    pub vectors: Vec<MetricVector>,
    pub diagnostics: Vec<ParseDiagnostic>,
}

/// Parses every Java file under `roots` and measures all elements of a granularity.
pub fn corpus_metrics<P: AsRef<Path>>(
    roots: &[P],
    granularity: Granularity,
) -> Result<CorpusMetrics, CorpusError> {
    let corpus = Corpus::load(roots)?;
    let vectors = corpus_vectors(&corpus, granularity)
        .into_iter()
        .map(|(_, v)| v)
        .collect();
    Ok(CorpusMetrics {
        vectors,
        diagnostics: corpus.diagnostics,
    })
}
