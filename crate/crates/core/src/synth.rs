//! Synthetic Java sources with prescribed method metrics, for tests,
//! fixtures and benchmarks.
//!
//! A generated method body holds local declarations, a chain of bare nested
//! blocks, conditional expressions on the field `f` and `f++;` filler lines.
//! None of them adds to a metric other than the one it is meant for.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub name: String,
    pub mloc: usize,
    pub nbd: usize,
    pub vg: usize,
    pub par: usize,
    pub lvar: usize,
}

impl MethodSpec {
    pub fn new(name: impl Into<String>, mloc: usize, nbd: usize, vg: usize, par: usize, lvar: usize) -> Self {
        MethodSpec {
            name: name.into(),
            mloc,
            nbd,
            vg,
            par,
            lvar,
        }
    }

    /// Fewest body lines that can carry the other metrics.
    pub fn min_mloc(&self) -> usize {
        usize::from(self.lvar > 0) + 2 * self.nbd.saturating_sub(1) + usize::from(self.vg > 1)
    }

    pub fn is_feasible(&self) -> bool {
        self.nbd >= 1 && self.vg >= 1 && self.mloc >= self.min_mloc()
    }

    /// `name(int,int,...)`, the signature part of the element id.
    pub fn signature(&self) -> String {
        format!("{}({})", self.name, vec!["int"; self.par].join(","))
    }
}

/// Splits `total` items into `parts` near-equal non-empty chunks.
fn chunks(total: usize, parts: usize) -> Vec<usize> {
    (0..parts)
        .map(|i| total / parts + usize::from(i < total % parts))
        .collect()
}

/// Java text of a method with exactly the metrics of `spec`, indented by
/// `indent`. Panics when the spec is infeasible.
pub fn render_method(spec: &MethodSpec, indent: &str) -> String {
    assert!(spec.is_feasible(), "infeasible method spec {spec:?}");
    let decisions = spec.vg - 1;
    let nest = spec.nbd - 1;
    let mut spare = spec.mloc - spec.min_mloc();

    let lvar_lines = if spec.lvar == 0 { 0 } else { spec.lvar.min(1 + spare) };
    spare -= lvar_lines.saturating_sub(1);
    let decision_lines = if decisions == 0 { 0 } else { decisions.min(1 + spare) };
    spare -= decision_lines.saturating_sub(1);
    let filler = spare;

    let params: Vec<String> = (0..spec.par).map(|i| format!("int p{i}")).collect();
    let mut out = String::new();
    let _ = writeln!(out, "{indent}void {}({}) {{", spec.name, params.join(", "));
    let mut depth = 1;
    let pad = |d: usize| format!("{indent}{}", "    ".repeat(d));

    let mut var = 0;
    for n in chunks(spec.lvar, lvar_lines) {
        let decls: Vec<String> = (var..var + n).map(|v| format!("v{v} = {v}")).collect();
        var += n;
        let _ = writeln!(out, "{}int {};", pad(depth), decls.join(", "));
    }
    for _ in 0..nest {
        let _ = writeln!(out, "{}{{", pad(depth));
        depth += 1;
    }
    for (k, n) in chunks(decisions, decision_lines).into_iter().enumerate() {
        let mut expr = String::new();
        for i in 0..n {
            let _ = write!(expr, "f > {} ? {} : ", k + i, i + 1);
        }
        let _ = writeln!(out, "{}f = {expr}0;", pad(depth));
    }
    for _ in 0..filler {
        let _ = writeln!(out, "{}f++;", pad(depth));
    }
    while depth > 1 {
        depth -= 1;
        let _ = writeln!(out, "{}}}", pad(depth));
    }
    let _ = writeln!(out, "{indent}}}");
    out
}

/// A compilation unit with one class holding the given methods. `tags`
/// holds the annotation lines (if any) to place above each method.
pub fn render_class(package: &str, class: &str, methods: &[(MethodSpec, Vec<String>)]) -> String {
    let mut out = String::new();
    if !package.is_empty() {
        let _ = writeln!(out, "package {package};\n");
    }
    let _ = writeln!(out, "public class {class} {{");
    let _ = writeln!(out, "    int f;");
    for (spec, tags) in methods {
        out.push('\n');
        for tag in tags {
            let _ = writeln!(out, "    {tag}");
        }
        out.push_str(&render_method(spec, "    "));
    }
    out.push_str("}\n");
    out
}
