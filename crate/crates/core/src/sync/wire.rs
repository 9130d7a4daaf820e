//! The XML exchange document shared by the sync client and server.
//!
//! ```xml
//! <smellchecker version="1">
//!   <samples smell="LongMethod" client="...">
//!     <row application="app" package="p" class="C" method="m(int)" label="1"
//!          origin="expert" timestamp="...">
//!       <metric name="MLOC" value="69"/>
//!     </row>
//!   </samples>
//! </smellchecker>
//! ```
//!
//! Numbers use the sample file formatting, so every f64 survives a round
//! trip bit for bit.

use std::fmt::Write as _;

use quick_xml::events::{BytesStart, Event};
use quick_xml::{Reader, XmlVersion};
use thiserror::Error;

use crate::sample::{Origin, SampleRow};
use crate::source_model::Granularity;
use crate::stats::{SmellModel, INTERCEPT};
use crate::store::format_number;

pub const WIRE_VERSION: &str = "1";
pub const CONTENT_TYPE: &str = "application/xml";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WireError {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("schema violation: {0}")]
    Schema(String),
}

fn schema(msg: impl Into<String>) -> WireError {
    WireError::Schema(msg.into())
}

/// Rows of one smell uploaded by one client.
#[derive(Debug, Clone, PartialEq)]
pub struct RowBatch {
    pub smell: String,
    pub client: String,
    /// Column names shared by every row; empty when there are no rows.
    pub metric_names: Vec<String>,
    pub rows: Vec<SampleRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExchangeDocument {
    Samples(RowBatch),
    Feedback(RowBatch),
    /// Model parameters only; diagnostics stay on the calibrating side.
    Model(SmellModel),
    Accepted { count: usize, duplicates: usize },
    Error { message: String },
}

/// Escapes text for a double-quoted attribute. Whitespace other than a
/// plain space is written as a character reference so that attribute
/// normalization leaves it intact.
fn attr(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\t' => out.push_str("&#9;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
    out
}

fn write_rows(out: &mut String, tag: &str, batch: &RowBatch) {
    let _ = writeln!(out, "  <{tag} smell=\"{}\" client=\"{}\">", attr(&batch.smell), attr(&batch.client));
    for row in &batch.rows {
        let _ = write!(
            out,
            "    <row application=\"{}\" package=\"{}\" class=\"{}\"",
            attr(&row.application),
            attr(&row.package),
            attr(&row.class)
        );
        if let Some(m) = &row.method {
            let _ = write!(out, " method=\"{}\"", attr(m));
        }
        let _ = writeln!(
            out,
            " label=\"{}\" origin=\"{}\" timestamp=\"{}\">",
            row.label,
            row.origin,
            attr(&row.timestamp)
        );
        for (name, value) in batch.metric_names.iter().zip(&row.values) {
            let _ = writeln!(out, "      <metric name=\"{}\" value=\"{}\"/>", attr(name), format_number(*value));
        }
        out.push_str("    </row>\n");
    }
    let _ = writeln!(out, "  </{tag}>");
}

pub fn encode(doc: &ExchangeDocument) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(out, "<smellchecker version=\"{WIRE_VERSION}\">");
    match doc {
        ExchangeDocument::Samples(b) => write_rows(&mut out, "samples", b),
        ExchangeDocument::Feedback(b) => write_rows(&mut out, "feedback", b),
        ExchangeDocument::Model(m) => {
            let _ = writeln!(
                out,
                "  <model smell=\"{}\" version=\"{}\" granularity=\"{}\" threshold=\"{}\" sample_size=\"{}\" calibrated_at=\"{}\">",
                attr(&m.smell),
                m.version,
                m.granularity,
                format_number(m.threshold_default),
                m.sample_size,
                attr(&m.calibrated_at)
            );
            let names = std::iter::once(INTERCEPT).chain(m.metric_names.iter().map(String::as_str));
            for ((name, beta), se) in names.zip(&m.beta).zip(&m.stderr) {
                let _ = writeln!(
                    out,
                    "    <coef name=\"{}\" value=\"{}\" stderr=\"{}\"/>",
                    attr(name),
                    format_number(*beta),
                    format_number(*se)
                );
            }
            out.push_str("  </model>\n");
        }
        ExchangeDocument::Accepted { count, duplicates } => {
            let _ = writeln!(out, "  <accepted count=\"{count}\" duplicates=\"{duplicates}\"/>");
        }
        ExchangeDocument::Error { message } => {
            let _ = writeln!(out, "  <error message=\"{}\"/>", attr(message));
        }
    }
    out.push_str("</smellchecker>\n");
    out
}

#[derive(Debug)]
struct Node {
    name: String,
    attrs: Vec<(String, String)>,
    children: Vec<Node>,
}

impl Node {
    fn from_start(start: &BytesStart<'_>) -> Result<Node, WireError> {
        let name = start.name().as_ref().to_owned();
        let mut attrs = Vec::new();
        for a in start.attributes() {
            let a = a.map_err(|e| WireError::Xml(e.to_string()))?;
            let key = a.key.as_ref().to_owned();
            let value = a
                .normalized_value(XmlVersion::Implicit1_0)
                .map_err(|e| WireError::Xml(e.to_string()))?
                .into_owned();
            attrs.push((key, value));
        }
        Ok(Node {
            name,
            attrs,
            children: Vec::new(),
        })
    }

    /// Fails on attributes outside `allowed`.
    fn check_attrs(&self, allowed: &[&str]) -> Result<(), WireError> {
        match self.attrs.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            Some((k, _)) => Err(schema(format!("unexpected attribute `{k}` on <{}>", self.name))),
            None => Ok(()),
        }
    }

    fn opt(&self, key: &str) -> Option<&str> {
        self.attrs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn req(&self, key: &str) -> Result<&str, WireError> {
        self.opt(key)
            .ok_or_else(|| schema(format!("<{}> lacks attribute `{key}`", self.name)))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, WireError> {
        let raw = self.req(key)?;
        raw.parse()
            .map_err(|_| schema(format!("<{}> attribute `{key}`: cannot parse `{raw}`", self.name)))
    }

    fn number(&self, key: &str) -> Result<f64, WireError> {
        let v: f64 = self.parse(key)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(schema(format!("<{}> attribute `{key}` is not finite", self.name)))
        }
    }

    fn no_children(&self) -> Result<(), WireError> {
        match self.children.first() {
            Some(c) => Err(schema(format!("unexpected <{}> inside <{}>", c.name, self.name))),
            None => Ok(()),
        }
    }
}

fn parse_tree(text: &str) -> Result<Node, WireError> {
    let mut reader = Reader::from_str(text);
    let mut stack: Vec<Node> = Vec::new();
    let mut root = None;
    loop {
        let event = reader.read_event().map_err(|e| WireError::Xml(e.to_string()))?;
        match event {
            Event::Start(s) => {
                if root.is_some() {
                    return Err(WireError::Xml("content after the root element".into()));
                }
                stack.push(Node::from_start(&s)?);
            }
            Event::Empty(s) => {
                let node = Node::from_start(&s)?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(node),
                    None if root.is_none() => root = Some(node),
                    None => return Err(WireError::Xml("content after the root element".into())),
                }
            }
            Event::End(_) => {
                let node = stack.pop().ok_or_else(|| WireError::Xml("unbalanced end tag".into()))?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(node),
                    None => root = Some(node),
                }
            }
            Event::Text(t) => {
                if !t.xml10_content().trim().is_empty() {
                    return Err(schema("unexpected text content"));
                }
            }
            Event::CData(_) | Event::GeneralRef(_) => return Err(schema("unexpected text content")),
            Event::Decl(_) | Event::Comment(_) | Event::PI(_) => {}
            Event::DocType(_) => return Err(schema("document type declarations are not accepted")),
            Event::Eof => break,
        }
    }
    if !stack.is_empty() {
        return Err(WireError::Xml("unclosed element".into()));
    }
    root.ok_or_else(|| WireError::Xml("empty document".into()))
}

fn parse_rows(node: &Node) -> Result<RowBatch, WireError> {
    node.check_attrs(&["smell", "client"])?;
    let mut batch = RowBatch {
        smell: node.req("smell")?.to_owned(),
        client: node.req("client")?.to_owned(),
        metric_names: Vec::new(),
        rows: Vec::new(),
    };
    for (i, row) in node.children.iter().enumerate() {
        if row.name != "row" {
            return Err(schema(format!("unexpected <{}> inside <{}>", row.name, node.name)));
        }
        row.check_attrs(&["application", "package", "class", "method", "label", "origin", "timestamp"])?;
        let mut names = Vec::new();
        let mut values = Vec::new();
        for m in &row.children {
            if m.name != "metric" {
                return Err(schema(format!("unexpected <{}> inside <row>", m.name)));
            }
            m.check_attrs(&["name", "value"])?;
            m.no_children()?;
            names.push(m.req("name")?.to_owned());
            values.push(m.number("value")?);
        }
        if i == 0 {
            batch.metric_names = names;
        } else if names != batch.metric_names {
            return Err(schema(format!("row {} has metrics [{}], expected [{}]", i + 1, names.join(","), batch.metric_names.join(","))));
        }
        let label: u8 = row.parse("label")?;
        if label > 1 {
            return Err(schema(format!("row {}: label must be 0 or 1", i + 1)));
        }
        let origin: Origin = row.parse("origin")?;
        batch.rows.push(SampleRow {
            application: row.req("application")?.to_owned(),
            package: row.req("package")?.to_owned(),
            class: row.req("class")?.to_owned(),
            method: row.opt("method").map(str::to_owned),
            values,
            label,
            origin,
            timestamp: row.req("timestamp")?.to_owned(),
        });
    }
    Ok(batch)
}

fn parse_model(node: &Node) -> Result<SmellModel, WireError> {
    node.check_attrs(&["smell", "version", "granularity", "threshold", "sample_size", "calibrated_at"])?;
    let granularity: Granularity = node
        .req("granularity")?
        .parse()
        .map_err(|e: String| schema(e))?;
    let mut metric_names = Vec::new();
    let mut beta = Vec::new();
    let mut stderr = Vec::new();
    for (i, c) in node.children.iter().enumerate() {
        if c.name != "coef" {
            return Err(schema(format!("unexpected <{}> inside <model>", c.name)));
        }
        c.check_attrs(&["name", "value", "stderr"])?;
        c.no_children()?;
        let name = c.req("name")?;
        if (i == 0) != (name == INTERCEPT) {
            return Err(schema(format!("the first coefficient, and only it, must be `{INTERCEPT}`")));
        }
        if i > 0 {
            metric_names.push(name.to_owned());
        }
        beta.push(c.number("value")?);
        stderr.push(c.number("stderr")?);
    }
    if beta.is_empty() {
        return Err(schema("<model> has no coefficients"));
    }
    Ok(SmellModel {
        smell: node.req("smell")?.to_owned(),
        granularity,
        metric_names,
        beta,
        stderr,
        threshold_default: node.number("threshold")?,
        sample_size: node.parse("sample_size")?,
        version: node.parse("version")?,
        calibrated_at: node.req("calibrated_at")?.to_owned(),
        diagnostics: Default::default(),
    })
}

pub fn decode(text: &str) -> Result<ExchangeDocument, WireError> {
    let root = parse_tree(text)?;
    if root.name != "smellchecker" {
        return Err(schema(format!("root element is <{}>, expected <smellchecker>", root.name)));
    }
    root.check_attrs(&["version"])?;
    let version = root.req("version")?;
    if version != WIRE_VERSION {
        return Err(schema(format!("unsupported version `{version}`")));
    }
    let [child] = root.children.as_slice() else {
        return Err(schema("<smellchecker> must hold exactly one payload element"));
    };
    match child.name.as_str() {
        "samples" => Ok(ExchangeDocument::Samples(parse_rows(child)?)),
        "feedback" => Ok(ExchangeDocument::Feedback(parse_rows(child)?)),
        "model" => Ok(ExchangeDocument::Model(parse_model(child)?)),
        "accepted" => {
            child.check_attrs(&["count", "duplicates"])?;
            child.no_children()?;
            Ok(ExchangeDocument::Accepted {
                count: child.parse("count")?,
                duplicates: child.parse("duplicates")?,
            })
        }
        "error" => {
            child.check_attrs(&["message"])?;
            child.no_children()?;
            Ok(ExchangeDocument::Error {
                message: child.req("message")?.to_owned(),
            })
        }
        other => Err(schema(format!("unknown payload <{other}>"))),
    }
}
