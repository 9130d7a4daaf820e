//! Smell kinds and the registry that maps names to metric sets.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::is_metric;
use crate::source_model::Granularity;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmellKind {
    pub name: String,
    pub granularity: Granularity,
    /// Regressors of the smell's model, in column order.
    pub metric_set: Vec<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SmellError {
    #[error("smell `{0}` declares no metrics")]
    EmptyMetricSet(String),
    #[error("smell `{smell}`: `{metric}` is not a {granularity} metric")]
    InvalidMetric {
        smell: String,
        metric: String,
        granularity: Granularity,
    },
    #[error("smell `{smell}` lists `{metric}` twice")]
    DuplicateMetric { smell: String, metric: String },
    #[error("smell name `{0}` is not a Java identifier")]
    InvalidName(String),
}

impl SmellKind {
    pub fn new(
        name: impl Into<String>,
        granularity: Granularity,
        metrics: &[&str],
    ) -> Result<SmellKind, SmellError> {
        let kind = SmellKind {
            name: name.into(),
            granularity,
            metric_set: metrics.iter().map(|m| (*m).to_owned()).collect(),
        };
        kind.validate()?;
        Ok(kind)
    }

    pub fn validate(&self) -> Result<(), SmellError> {
        let ident = !self.name.is_empty()
            && self.name.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_')
            && self.name.chars().all(|c| c.is_alphanumeric() || c == '_');
        if !ident {
            return Err(SmellError::InvalidName(self.name.clone()));
        }
        if self.metric_set.is_empty() {
            return Err(SmellError::EmptyMetricSet(self.name.clone()));
        }
        for (i, metric) in self.metric_set.iter().enumerate() {
            if !is_metric(self.granularity, metric) {
                return Err(SmellError::InvalidMetric {
                    smell: self.name.clone(),
                    metric: metric.clone(),
                    granularity: self.granularity,
                });
            }
            if self.metric_set[..i].contains(metric) {
                return Err(SmellError::DuplicateMetric {
                    smell: self.name.clone(),
                    metric: metric.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn long_method() -> SmellKind {
        SmellKind::new(
            "LongMethod",
            Granularity::Method,
            &["MLOC", "NBD", "VG", "PAR", "LVAR"],
        )
        .expect("builtin")
    }

    pub fn large_class() -> SmellKind {
        SmellKind::new(
            "LargeClass",
            Granularity::Type,
            &["MLOC_total", "NOM", "NOA", "WMC", "LCOM"],
        )
        .expect("builtin")
    }
}

/// Known smell kinds: the builtins plus whatever the project config declares.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmellRegistry {
    kinds: IndexMap<String, SmellKind>,
}

impl Default for SmellRegistry {
    fn default() -> Self {
        let mut kinds = IndexMap::new();
        for kind in [SmellKind::long_method(), SmellKind::large_class()] {
            kinds.insert(kind.name.clone(), kind);
        }
        SmellRegistry { kinds }
    }
}

impl SmellRegistry {
    /// Adds or replaces a kind.
    pub fn declare(&mut self, kind: SmellKind) -> Result<(), SmellError> {
        kind.validate()?;
        self.kinds.insert(kind.name.clone(), kind);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&SmellKind> {
        self.kinds.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &SmellKind> {
        self.kinds.values()
    }

    pub fn names(&self) -> Vec<&str> {
        self.kinds.keys().map(String::as_str).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_valid() {
        let reg = SmellRegistry::default();
        assert_eq!(reg.names(), ["LongMethod", "LargeClass"]);
        assert_eq!(reg.get("LongMethod").unwrap().metric_set, ["MLOC", "NBD", "VG", "PAR", "LVAR"]);
        assert_eq!(reg.get("LargeClass").unwrap().granularity, Granularity::Type);
    }

    #[test]
    fn rejects_bad_declarations() {
        assert_eq!(
            SmellKind::new("X", Granularity::Method, &[]),
            Err(SmellError::EmptyMetricSet("X".into()))
        );
        assert!(matches!(
            SmellKind::new("X", Granularity::Method, &["WMC"]),
            Err(SmellError::InvalidMetric { .. })
        ));
        assert!(matches!(
            SmellKind::new("X", Granularity::Type, &["NOM", "NOM"]),
            Err(SmellError::DuplicateMetric { .. })
        ));
        assert!(matches!(
            SmellKind::new("Feature Envy", Granularity::Method, &["VG"]),
            Err(SmellError::InvalidName(_))
        ));
    }
}
