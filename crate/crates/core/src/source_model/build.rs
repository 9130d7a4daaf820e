use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;
use std::path::PathBuf;

use tree_sitter::{Node, Parser};

use super::{
    AnnotationNode, CompilationUnit, FieldDecl, LineMap, LineSpan, MethodUnit, StatementKind,
    StatementNode, SyntaxError, TypeKind, TypeUnit,
};

pub(super) fn parse(source: &str, file_path: PathBuf) -> Result<CompilationUnit, SyntaxError> {
    let mut parser = Parser::new();
    parser
        .set_language(&tree_sitter_java::LANGUAGE.into())
        .expect("bundled Java grammar is ABI compatible");
    let tree = parser.parse(source, None).ok_or_else(|| SyntaxError {
        line: 1,
        column: 1,
        message: "parser produced no tree".into(),
    })?;
    let root = tree.root_node();
    if root.has_error() {
        return Err(first_error(root, source));
    }

    let mut comments = Vec::new();
    collect_comments(root, &mut comments);
    let lines = LineMap::new(source, &comments);

    let mut builder = Builder {
        src: source,
        package: String::new(),
        types: Vec::new(),
    };
    let mut cursor = root.walk();
    for child in root.named_children(&mut cursor) {
        match child.kind() {
            "package_declaration" => {
                let mut c = child.walk();
                let name = child
                    .named_children(&mut c)
                    .find(|n| matches!(n.kind(), "identifier" | "scoped_identifier"));
                if let Some(name) = name {
                    builder.package = strip_ws(builder.text(name));
                }
            }
            kind if is_type_declaration(kind) => builder.type_decl(child, None),
            _ => {}
        }
    }

    Ok(CompilationUnit {
        file_path,
        package_name: builder.package,
        types: builder.types,
        source_text: source.to_owned(),
        lines,
    })
}

fn first_error(root: Node<'_>, src: &str) -> SyntaxError {
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        if node.is_missing() {
            let pos = node.start_position();
            return SyntaxError {
                line: pos.row + 1,
                column: pos.column + 1,
                message: format!("missing `{}`", node.kind()),
            };
        }
        if node.is_error() {
            // The last token the parser could not place is where it gave up.
            let mut leaf = node;
            while let Some(last) = leaf.child(leaf.child_count().saturating_sub(1)) {
                leaf = last;
            }
            let pos = leaf.start_position();
            let snippet: String = src[node.byte_range()].chars().take(40).collect();
            return SyntaxError {
                line: pos.row + 1,
                column: pos.column + 1,
                message: format!("unexpected input near `{}`", snippet.trim()),
            };
        }
        let mut cursor = node.walk();
        let children: Vec<_> = node.children(&mut cursor).collect();
        stack.extend(children.into_iter().rev().filter(|c| c.has_error() || c.is_missing()));
    }
    let pos = root.start_position();
    SyntaxError {
        line: pos.row + 1,
        column: pos.column + 1,
        message: "malformed compilation unit".into(),
    }
}

fn collect_comments(node: Node<'_>, out: &mut Vec<Range<usize>>) {
    if matches!(node.kind(), "line_comment" | "block_comment") {
        out.push(node.byte_range());
        return;
    }
    let mut cursor = node.walk();
    for child in node.children(&mut cursor) {
        collect_comments(child, out);
    }
}

fn is_type_declaration(kind: &str) -> bool {
    matches!(
        kind,
        "class_declaration"
            | "interface_declaration"
            | "enum_declaration"
            | "record_declaration"
            | "annotation_type_declaration"
    )
}

fn is_comment(kind: &str) -> bool {
    matches!(kind, "line_comment" | "block_comment")
}

fn strip_ws(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

/// Drops generic arguments and whitespace from a type.
fn erase(type_text: &str) -> String {
    let mut out = String::new();
    let mut depth = 0usize;
    for ch in type_text.chars() {
        match ch {
            '<' => depth += 1,
            '>' => depth = depth.saturating_sub(1),
            c if depth == 0 && !c.is_whitespace() => out.push(c),
            _ => {}
        }
    }
    out
}

fn span(node: Node<'_>) -> LineSpan {
    LineSpan {
        start: node.start_position().row + 1,
        end: node.end_position().row + 1,
    }
}

struct Modifiers {
    is_static: bool,
    annotations: Vec<AnnotationNode>,
}

struct Builder<'s> {
    src: &'s str,
    package: String,
    types: Vec<TypeUnit>,
}

impl<'s> Builder<'s> {
    fn text(&self, node: Node<'_>) -> &'s str {
        &self.src[node.byte_range()]
    }

    fn modifiers(&self, decl: Node<'_>) -> Modifiers {
        let mut mods = Modifiers {
            is_static: false,
            annotations: Vec::new(),
        };
        let mut cursor = decl.walk();
        let Some(node) = decl.children(&mut cursor).find(|c| c.kind() == "modifiers") else {
            return mods;
        };
        let mut c = node.walk();
        for child in node.children(&mut c) {
            match child.kind() {
                "static" => mods.is_static = true,
                "annotation" | "marker_annotation" => mods.annotations.push(self.annotation(child)),
                _ => {}
            }
        }
        mods
    }

    fn annotation(&self, node: Node<'_>) -> AnnotationNode {
        let name = node
            .child_by_field_name("name")
            .map(|n| strip_ws(self.text(n)))
            .unwrap_or_default();
        let mut arguments = BTreeMap::new();
        if let Some(args) = node.child_by_field_name("arguments") {
            let mut cursor = args.walk();
            for arg in args.named_children(&mut cursor) {
                if is_comment(arg.kind()) {
                    continue;
                }
                if arg.kind() == "element_value_pair" {
                    let key = arg.child_by_field_name("key").map(|k| self.text(k));
                    let value = arg.child_by_field_name("value").map(|v| self.text(v));
                    if let (Some(key), Some(value)) = (key, value) {
                        arguments.insert(key.to_owned(), value.to_owned());
                    }
                } else {
                    arguments.insert("value".to_owned(), self.text(arg).to_owned());
                }
            }
        }
        AnnotationNode {
            name,
            arguments,
            line: node.start_position().row + 1,
            range: node.byte_range(),
        }
    }

    fn type_decl(&mut self, node: Node<'_>, outer: Option<&str>) {
        let name = node
            .child_by_field_name("name")
            .map(|n| self.text(n).to_owned())
            .unwrap_or_default();
        let path = match outer {
            Some(outer) => format!("{outer}.{name}"),
            None => name.clone(),
        };
        let qualified_id = super::element_id(&self.package, &path, None);
        let kind = match node.kind() {
            "interface_declaration" | "annotation_type_declaration" => TypeKind::Interface,
            _ => TypeKind::Class,
        };
        let superclass_name = node.child_by_field_name("superclass").and_then(|sc| {
            let mut cursor = sc.walk();
            let ty = sc.named_children(&mut cursor).find(|c| !is_comment(c.kind()));
            ty.map(|t| erase(self.text(t)))
        });
        let mods = self.modifiers(node);
        let name_line = node
            .child_by_field_name("name")
            .map(|n| n.start_position().row + 1)
            .unwrap_or(node.start_position().row + 1);

        let index = self.types.len();
        self.types.push(TypeUnit {
            name,
            path: path.clone(),
            qualified_id: qualified_id.clone(),
            kind,
            superclass_name,
            attributes: Vec::new(),
            methods: Vec::new(),
            annotations: mods.annotations,
            line_span: span(node),
            decl_line: name_line,
            decl_start: node.start_byte(),
        });

        // record components are instance fields
        if node.kind() == "record_declaration" {
            if let Some(params) = node.child_by_field_name("parameters") {
                let mut cursor = params.walk();
                for p in params.named_children(&mut cursor) {
                    if let Some(n) = p.child_by_field_name("name") {
                        let name = self.text(n).to_owned();
                        self.types[index].attributes.push(FieldDecl {
                            name,
                            is_static: false,
                        });
                    }
                }
            }
        }

        let Some(body) = node.child_by_field_name("body") else {
            return;
        };
        let is_interface = kind == TypeKind::Interface;
        let mut members = Vec::new();
        let mut cursor = body.walk();
        for child in body.named_children(&mut cursor) {
            if child.kind() == "enum_body_declarations" {
                let mut c = child.walk();
                members.extend(child.named_children(&mut c));
            } else {
                members.push(child);
            }
        }

        for member in members {
            match member.kind() {
                "field_declaration" | "constant_declaration" => {
                    let is_static = is_interface
                        || member.kind() == "constant_declaration"
                        || self.modifiers(member).is_static;
                    let mut c = member.walk();
                    for decl in member.children_by_field_name("declarator", &mut c) {
                        if let Some(n) = decl.child_by_field_name("name") {
                            let name = self.text(n).to_owned();
                            self.types[index].attributes.push(FieldDecl { name, is_static });
                        }
                    }
                }
                "method_declaration" | "constructor_declaration" | "compact_constructor_declaration" => {
                    let method = self.method(member, &qualified_id, &self.types[index].name.clone());
                    self.types[index].methods.push(method);
                }
                kind if is_type_declaration(kind) => self.type_decl(member, Some(&path)),
                _ => {}
            }
        }
    }

    fn method(&self, node: Node<'_>, type_id: &str, type_name: &str) -> MethodUnit {
        let is_constructor = node.kind() != "method_declaration";
        let name = node
            .child_by_field_name("name")
            .map(|n| self.text(n).to_owned())
            .unwrap_or_else(|| type_name.to_owned());
        let mods = self.modifiers(node);

        let mut parameters = Vec::new();
        let mut param_types = Vec::new();
        if let Some(params) = node.child_by_field_name("parameters") {
            let mut cursor = params.walk();
            for p in params.named_children(&mut cursor) {
                match p.kind() {
                    "formal_parameter" => {
                        let mut ty = p
                            .child_by_field_name("type")
                            .map(|t| erase(self.text(t)))
                            .unwrap_or_default();
                        if let Some(dims) = p.child_by_field_name("dimensions") {
                            ty.push_str(&strip_ws(self.text(dims)));
                        }
                        param_types.push(ty);
                        if let Some(n) = p.child_by_field_name("name") {
                            parameters.push(self.text(n).to_owned());
                        }
                    }
                    "spread_parameter" => {
                        let mut c = p.walk();
                        let mut ty = String::new();
                        for part in p.named_children(&mut c) {
                            match part.kind() {
                                "variable_declarator" => {
                                    if let Some(n) = part.child_by_field_name("name") {
                                        parameters.push(self.text(n).to_owned());
                                    }
                                }
                                "modifiers" => {}
                                _ if ty.is_empty() => ty = erase(self.text(part)),
                                _ => {}
                            }
                        }
                        param_types.push(format!("{ty}..."));
                    }
                    _ => {}
                }
            }
        }
        let signature = format!("{name}({})", param_types.join(","));
        let qualified_id = format!("{type_id}#{signature}");

        let is_override = mods
            .annotations
            .iter()
            .any(|a| a.simple_name() == "Override");

        let body_node = node.child_by_field_name("body");
        let mut locals = Vec::new();
        let mut refs = BTreeSet::new();
        let mut shadowed = Vec::new();
        let body = body_node.map(|b| {
            let mut walker = BodyWalker {
                builder: self,
                locals: &mut locals,
                refs: &mut refs,
                shadowed: &mut shadowed,
            };
            walker.statement(b)
        });
        let declared: BTreeSet<&str> = parameters
            .iter()
            .chain(locals.iter())
            .chain(shadowed.iter())
            .map(String::as_str)
            .collect();
        let referenced_names = refs
            .iter()
            .filter(|(name, via_this)| *via_this || !declared.contains(name.as_str()))
            .map(|(name, _)| name.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();

        MethodUnit {
            name,
            signature,
            parameters,
            is_static: mods.is_static,
            is_constructor,
            is_override,
            body,
            body_range: body_node.map(|b| b.byte_range()),
            local_declarations: locals,
            referenced_names,
            annotations: mods.annotations,
            line_span: span(node),
            decl_line: node
                .child_by_field_name("name")
                .map(|n| n.start_position().row + 1)
                .unwrap_or(node.start_position().row + 1),
            decl_start: node.start_byte(),
            qualified_id,
        }
    }
}

struct BodyWalker<'b, 's> {
    builder: &'b Builder<'s>,
    locals: &'b mut Vec<String>,
    /// (name, reached through `this.`)
    refs: &'b mut BTreeSet<(String, bool)>,
    /// Lambda and catch parameters: declared names that are not locals.
    shadowed: &'b mut Vec<String>,
}

fn statement_kind(kind: &str) -> Option<StatementKind> {
    Some(match kind {
        "block" | "constructor_body" | "switch_block" => StatementKind::Block,
        "if_statement" => StatementKind::If,
        "for_statement" => StatementKind::For,
        "enhanced_for_statement" => StatementKind::EnhancedFor,
        "while_statement" => StatementKind::While,
        "do_statement" => StatementKind::Do,
        "switch_expression" | "switch_statement" => StatementKind::Switch,
        "try_statement" | "try_with_resources_statement" => StatementKind::Try,
        "catch_clause" => StatementKind::Catch,
        "finally_clause" => StatementKind::Finally,
        "return_statement" => StatementKind::Return,
        "throw_statement" => StatementKind::Throw,
        "local_variable_declaration" => StatementKind::LocalVarDecl,
        "synchronized_statement" => StatementKind::Synchronized,
        "labeled_statement" => StatementKind::Labeled,
        "expression_statement" | "break_statement" | "continue_statement" | "yield_statement"
        | "assert_statement" | "explicit_constructor_invocation" | "local_class_declaration"
        | "class_declaration" | "interface_declaration" | "enum_declaration"
        | "record_declaration" | "annotation_type_declaration" | ";" => StatementKind::Expression,
        _ => return None,
    })
}

impl BodyWalker<'_, '_> {
    fn text(&self, node: Node<'_>) -> String {
        self.builder.text(node).to_owned()
    }

    fn statement(&mut self, node: Node<'_>) -> StatementNode {
        let kind = statement_kind(node.kind()).unwrap_or(StatementKind::Expression);
        let mut out = StatementNode {
            kind,
            children: Vec::new(),
            boolean_operator_count: 0,
            line_span: span(node),
        };

        match node.kind() {
            "if_statement" => {
                let mut cursor = node.walk();
                let mut else_kw: Option<Node<'_>> = None;
                for (i, child) in node.children(&mut cursor).enumerate() {
                    match node.field_name_for_child(i as u32) {
                        Some("condition") => self.expression(child, &mut out),
                        Some("consequence") => out.children.push(self.statement(child)),
                        Some("alternative") => {
                            let start = else_kw.map(|k| k.start_position().row + 1);
                            let inner = self.statement(child);
                            out.children.push(StatementNode {
                                kind: StatementKind::ElseBranch,
                                line_span: LineSpan {
                                    start: start.unwrap_or(inner.line_span.start),
                                    end: inner.line_span.end,
                                },
                                children: vec![inner],
                                boolean_operator_count: 0,
                            });
                        }
                        _ if child.kind() == "else" => else_kw = Some(child),
                        _ => {}
                    }
                }
            }
            "switch_block" => {
                let mut cursor = node.walk();
                for child in node.named_children(&mut cursor) {
                    match child.kind() {
                        "switch_block_statement_group" | "switch_rule" => {
                            let mut c = child.walk();
                            for part in child.named_children(&mut c) {
                                if part.kind() == "switch_label" {
                                    out.children.push(self.switch_label(part));
                                } else if statement_kind(part.kind()).is_some() {
                                    out.children.push(self.statement(part));
                                } else if !is_comment(part.kind()) {
                                    self.expression(part, &mut out);
                                }
                            }
                        }
                        k if is_comment(k) => {}
                        _ => self.expression(child, &mut out),
                    }
                }
            }
            "enhanced_for_statement" => {
                if let Some(name) = node.child_by_field_name("name") {
                    self.locals.push(self.text(name));
                }
                self.children_generic(node, &mut out, &["name", "type"]);
            }
            "local_variable_declaration" => {
                let mut cursor = node.walk();
                for decl in node.children_by_field_name("declarator", &mut cursor) {
                    if let Some(n) = decl.child_by_field_name("name") {
                        self.locals.push(self.text(n));
                    }
                    if let Some(v) = decl.child_by_field_name("value") {
                        self.expression(v, &mut out);
                    }
                }
            }
            "labeled_statement" => {
                let mut cursor = node.walk();
                for child in node.named_children(&mut cursor) {
                    if child.kind() == "identifier" || is_comment(child.kind()) {
                        continue;
                    }
                    if statement_kind(child.kind()).is_some() {
                        out.children.push(self.statement(child));
                    } else {
                        self.expression(child, &mut out);
                    }
                }
            }
            "break_statement" | "continue_statement" => {}
            "class_declaration" | "interface_declaration" | "enum_declaration"
            | "record_declaration" | "local_class_declaration" => {
                if let Some(body) = node.child_by_field_name("body") {
                    self.class_body(body, &mut out);
                }
            }
            _ => self.children_generic(node, &mut out, &[]),
        }
        out
    }

    fn children_generic(&mut self, node: Node<'_>, out: &mut StatementNode, skip_fields: &[&str]) {
        let mut cursor = node.walk();
        for (i, child) in node.children(&mut cursor).enumerate() {
            if !child.is_named() || is_comment(child.kind()) {
                continue;
            }
            if let Some(field) = node.field_name_for_child(i as u32) {
                if skip_fields.contains(&field) {
                    continue;
                }
            }
            match child.kind() {
                "resource_specification" => {
                    let mut c = child.walk();
                    for res in child.named_children(&mut c) {
                        if let Some(n) = res.child_by_field_name("name") {
                            self.locals.push(self.text(n));
                        }
                        if let Some(v) = res.child_by_field_name("value") {
                            self.expression(v, out);
                        } else if res.child_by_field_name("name").is_none() {
                            self.expression(res, out);
                        }
                    }
                }
                // catch parameters are not locals
                "catch_formal_parameter" => {
                    if let Some(n) = child.child_by_field_name("name") {
                        self.shadowed.push(self.text(n));
                    }
                }
                kind if statement_kind(kind).is_some() => out.children.push(self.statement(child)),
                _ => self.expression(child, out),
            }
        }
    }

    fn lambda_parameters(&mut self, params: Node<'_>) {
        if params.kind() == "identifier" {
            self.shadowed.push(self.text(params));
            return;
        }
        let mut cursor = params.walk();
        for p in params.named_children(&mut cursor) {
            match p.kind() {
                "identifier" => self.shadowed.push(self.text(p)),
                _ => {
                    if let Some(n) = p.child_by_field_name("name") {
                        self.shadowed.push(self.text(n));
                    }
                }
            }
        }
    }

    fn switch_label(&mut self, node: Node<'_>) -> StatementNode {
        let is_default = {
            let mut cursor = node.walk();
            let first = node.children(&mut cursor).next();
            first.map(|c| c.kind() == "default").unwrap_or(false)
        };
        let mut out = StatementNode {
            kind: if is_default {
                StatementKind::DefaultLabel
            } else {
                StatementKind::CaseLabel
            },
            children: Vec::new(),
            boolean_operator_count: 0,
            line_span: span(node),
        };
        let mut cursor = node.walk();
        for child in node.named_children(&mut cursor) {
            if !is_comment(child.kind()) {
                self.expression(child, &mut out);
            }
        }
        out
    }

    fn class_body(&mut self, body: Node<'_>, out: &mut StatementNode) {
        let mut cursor = body.walk();
        for member in body.named_children(&mut cursor) {
            match member.kind() {
                "method_declaration" | "constructor_declaration" => {
                    if let Some(b) = member.child_by_field_name("body") {
                        out.children.push(self.statement(b));
                    }
                }
                "field_declaration" => {
                    let mut c = member.walk();
                    for decl in member.children_by_field_name("declarator", &mut c) {
                        if let Some(v) = decl.child_by_field_name("value") {
                            self.expression(v, out);
                        }
                    }
                }
                "block" | "static_initializer" => out.children.push(self.statement(member)),
                kind if is_type_declaration(kind) => out.children.push(self.statement(member)),
                _ => {}
            }
        }
    }

    /// Scans an expression subtree: counts short-circuit and conditional
    /// operators into `out` and lifts any embedded statement bodies (lambda
    /// blocks, anonymous class members, switch expressions) into children.
    fn expression(&mut self, node: Node<'_>, out: &mut StatementNode) {
        match node.kind() {
            "binary_expression" => {
                if let Some(op) = node.child_by_field_name("operator") {
                    if matches!(op.kind(), "&&" | "||") {
                        out.boolean_operator_count += 1;
                    }
                }
            }
            "ternary_expression" => out.boolean_operator_count += 1,
            "lambda_expression" => {
                if let Some(params) = node.child_by_field_name("parameters") {
                    self.lambda_parameters(params);
                }
                if let Some(body) = node.child_by_field_name("body") {
                    if body.kind() == "block" {
                        out.children.push(self.statement(body));
                    } else {
                        self.expression(body, out);
                    }
                }
                return;
            }
            "switch_expression" => {
                out.children.push(self.statement(node));
                return;
            }
            "object_creation_expression" => {
                let mut cursor = node.walk();
                for child in node.named_children(&mut cursor) {
                    match child.kind() {
                        "class_body" => self.class_body(child, out),
                        "argument_list" => self.expression(child, out),
                        _ => {}
                    }
                }
                return;
            }
            "field_access" => {
                let object = node.child_by_field_name("object");
                let field = node.child_by_field_name("field");
                if let (Some(object), Some(field)) = (object, field) {
                    if object.kind() == "this" {
                        self.refs.insert((self.text(field), true));
                    } else {
                        self.expression(object, out);
                    }
                }
                return;
            }
            "method_invocation" => {
                if let Some(object) = node.child_by_field_name("object") {
                    self.expression(object, out);
                }
                if let Some(args) = node.child_by_field_name("arguments") {
                    self.expression(args, out);
                }
                return;
            }
            "identifier" => {
                self.refs.insert((self.text(node), false));
                return;
            }
            "block" => {
                out.children.push(self.statement(node));
                return;
            }
            _ => {}
        }
        let mut cursor = node.walk();
        for child in node.named_children(&mut cursor) {
            if !is_comment(child.kind()) {
                self.expression(child, out);
            }
        }
    }
}
