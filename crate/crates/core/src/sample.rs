//! Labeled observations: the calibration data of a smell model.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::source_model::element_id;

/// Where a label came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Expert,
    FeedbackFp,
    FeedbackFn,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Expert => "expert",
            Origin::FeedbackFp => "feedback_fp",
            Origin::FeedbackFn => "feedback_fn",
        }
    }

    pub fn is_feedback(self) -> bool {
        !matches!(self, Origin::Expert)
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Origin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "expert" => Ok(Origin::Expert),
            "feedback_fp" => Ok(Origin::FeedbackFp),
            "feedback_fn" => Ok(Origin::FeedbackFn),
            other => Err(format!("unknown origin `{other}`")),
        }
    }
}

/// Current UTC time, RFC 3339 with nanoseconds.
pub fn timestamp_now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Nanos, true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub application: String,
    pub package: String,
    /// Dotted type path within the package.
    pub class: String,
    /// Method signature; `None` for type-level rows.
    pub method: Option<String>,
    /// One value per metric of the owning table, in column order.
    pub values: Vec<f64>,
    pub label: u8,
    pub origin: Origin,
    pub timestamp: String,
}

impl SampleRow {
    pub fn element_id(&self) -> String {
        element_id(&self.package, &self.class, self.method.as_deref())
    }

    /// Identity used for duplicate detection.
    pub fn key(&self) -> (String, Origin, &str) {
        (self.element_id(), self.origin, self.timestamp.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleTable {
    pub smell: String,
    pub metric_names: Vec<String>,
    pub rows: Vec<SampleRow>,
}

impl SampleTable {
    pub fn new(smell: impl Into<String>, metric_names: Vec<String>) -> Self {
        SampleTable {
            smell: smell.into(),
            metric_names,
            rows: Vec::new(),
        }
    }

    /// Anonymous table from raw columns, for numerical work.
    pub fn from_xy(names: &[&str], x: &[Vec<f64>], y: &[u8]) -> Self {
        assert_eq!(x.len(), y.len(), "one label per row");
        let mut table = SampleTable::new("", names.iter().map(|s| (*s).to_owned()).collect());
        for (i, (values, label)) in x.iter().zip(y).enumerate() {
            assert_eq!(values.len(), names.len(), "row arity");
            table.rows.push(SampleRow {
                application: String::new(),
                package: String::new(),
                class: format!("R{i}"),
                method: None,
                values: values.clone(),
                label: *label,
                origin: Origin::Expert,
                timestamp: String::new(),
            });
        }
        table
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.metric_names.iter().position(|m| m == name)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.values[j]).collect()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.rows.iter().map(|r| f64::from(r.label)).collect()
    }

    pub fn positives(&self) -> usize {
        self.rows.iter().filter(|r| r.label == 1).count()
    }

    /// Projection onto a subset of columns, in the given order.
    /// Returns `None` when a name is not a column.
    pub fn select(&self, names: &[String]) -> Option<SampleTable> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| self.column_index(n))
            .collect::<Option<_>>()?;
        Some(SampleTable {
            smell: self.smell.clone(),
            metric_names: names.to_vec(),
            rows: self
                .rows
                .iter()
                .map(|r| SampleRow {
                    values: idx.iter().map(|&j| r.values[j]).collect(),
                    ..r.clone()
                })
                .collect(),
        })
    }

    /// Rows that enter a calibration: the latest expert row of every
    /// (application, element) pair plus every feedback row.
    ///
    /// Rebuilding a sample appends a fresh expert snapshot, so older expert
    /// rows for the same element are superseded rather than double counted.
    /// Feedback rows are independent observations and are all kept.
    pub fn effective(&self) -> SampleTable {
        let mut latest: std::collections::HashMap<(String, String), usize> = Default::default();
        for (i, row) in self.rows.iter().enumerate() {
            if row.origin == Origin::Expert {
                latest.insert((row.application.clone(), row.element_id()), i);
            }
        }
        let rows = self
            .rows
            .iter()
            .enumerate()
            .filter(|(i, row)| {
                row.origin.is_feedback()
                    || latest.get(&(row.application.clone(), row.element_id())) == Some(i)
            })
            .map(|(_, row)| row.clone())
            .collect();
        SampleTable {
            smell: self.smell.clone(),
            metric_names: self.metric_names.clone(),
            rows,
        }
    }
}
