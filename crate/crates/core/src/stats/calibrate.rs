use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::correlation::{correlation, vif_values, CorrelationMethod};
use super::goodness::hosmer_lemeshow;
use super::inference::{select_variables, wald_test, Criterion, EliminationStep};
use super::logistic::{logistic, FitOptions};
use super::normality::shapiro_wilk;
use super::StatsError;
use crate::metrics::MetricVector;
use crate::sample::SampleTable;
use crate::smell::SmellKind;
use crate::source_model::Granularity;

/// Coefficient name of the intercept in serialized models.
pub const INTERCEPT: &str = "_intercept";

const HL_REJECT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub alpha: f64,
    pub criterion: Criterion,
    pub fit: FitOptions,
    /// Refuse a model whose Hosmer–Lemeshow p-value is below 0.01.
    pub strict: bool,
    pub vif_limit: f64,
    pub hl_groups: usize,
    /// Significance level of the normality test that picks the correlation method.
    pub normality_alpha: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            alpha: 0.05,
            criterion: Criterion::Wald,
            fit: FitOptions::default(),
            strict: false,
            vif_limit: 10.0,
            hl_groups: 10,
            normality_alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityDiag {
    pub metric: String,
    pub w: Option<f64>,
    pub p_value: Option<f64>,
    pub normal: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationDiag {
    pub a: String,
    pub b: String,
    pub method: CorrelationMethod,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientDiag {
    pub name: String,
    pub estimate: f64,
    pub stderr: f64,
    pub wald: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub normality: Vec<NormalityDiag>,
    pub correlations: Vec<CorrelationDiag>,
    /// VIF of each screened column before any collinear column was dropped;
    /// `None` for an exact linear combination.
    pub vif: IndexMap<String, Option<f64>>,
    pub dropped_constant: Vec<String>,
    pub dropped_collinear: Vec<String>,
    pub eliminated: Vec<EliminationStep>,
    pub coefficients: Vec<CoefficientDiag>,
    pub log_likelihood: f64,
    pub null_log_likelihood: f64,
    pub iterations: usize,
    pub ridge: f64,
    pub hosmer_lemeshow: Option<super::HosmerLemeshow>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmellModel {
    pub smell: String,
    pub granularity: Granularity,
    /// Selected regressors; `beta[j + 1]` belongs to `metric_names[j]`.
    pub metric_names: Vec<String>,
    pub beta: Vec<f64>,
    pub stderr: Vec<f64>,
    pub threshold_default: f64,
    pub sample_size: usize,
    pub version: u32,
    pub calibrated_at: String,
    #[serde(default)]
    pub diagnostics: Diagnostics,
}

impl SmellModel {
    pub fn linear_predictor(&self, values: &[f64]) -> f64 {
        self.beta[0]
            + self.beta[1..]
                .iter()
                .zip(values)
                .map(|(b, v)| b * v)
                .sum::<f64>()
    }
}

/// Probability that the element described by `x` exhibits the model's smell.
pub fn predict(model: &SmellModel, x: &MetricVector) -> Result<f64, StatsError> {
    let values = model
        .metric_names
        .iter()
        .map(|m| x.get(m).ok_or_else(|| StatsError::MissingMetric(m.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(logistic(model.linear_predictor(&values)))
}

pub fn predict_values(model: &SmellModel, x: &IndexMap<String, f64>) -> Result<f64, StatsError> {
    let values = model
        .metric_names
        .iter()
        .map(|m| x.get(m).copied().ok_or_else(|| StatsError::MissingMetric(m.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(logistic(model.linear_predictor(&values)))
}

/// Full calibration: normality, correlations, collinearity screen, backward
/// elimination, final fit and goodness of fit. The result carries version
/// `previous_version + 1`.
///
/// Constant columns are dropped before screening because no regression can
/// estimate them; a sample too small for Hosmer–Lemeshow skips that test
/// with a warning.
pub fn calibrate(
    table: &SampleTable,
    smell: &SmellKind,
    opts: &CalibrationOptions,
    previous_version: u32,
) -> Result<SmellModel, StatsError> {
    if table.metric_names != smell.metric_set {
        return Err(StatsError::SchemaMismatch {
            table: table.metric_names.clone(),
            smell: smell.metric_set.clone(),
        });
    }
    if table.is_empty() {
        return Err(StatsError::EmptyTable);
    }
    let positives = table.positives();
    if positives == 0 || positives == table.len() {
        return Err(StatsError::OneClassOnly);
    }

    let mut diag = Diagnostics::default();
    let mut columns: Vec<String> = Vec::new();
    for (j, name) in table.metric_names.iter().enumerate() {
        let first = table.rows[0].values[j];
        if table.rows.iter().all(|r| r.values[j] == first) {
            diag.dropped_constant.push(name.clone());
        } else {
            columns.push(name.clone());
        }
    }

    let mut normal = Vec::new();
    for name in &columns {
        let values = table.column(table.column_index(name).expect("own column"));
        let entry = match shapiro_wilk(&values) {
            Ok((w, p)) => NormalityDiag {
                metric: name.clone(),
                w: Some(w),
                p_value: Some(p),
                normal: p > opts.normality_alpha,
                note: None,
            },
            Err(e) => NormalityDiag {
                metric: name.clone(),
                w: None,
                p_value: None,
                normal: false,
                note: Some(e.to_string()),
            },
        };
        normal.push(entry.normal);
        diag.normality.push(entry);
    }

    if table.len() >= 3 {
        for a in 0..columns.len() {
            for b in a + 1..columns.len() {
                let method = if normal[a] && normal[b] {
                    CorrelationMethod::Pearson
                } else {
                    CorrelationMethod::Spearman
                };
                let xa = table.column(table.column_index(&columns[a]).expect("own column"));
                let xb = table.column(table.column_index(&columns[b]).expect("own column"));
                // Rank transforms can tie a non-constant column into a constant one.
                if let Ok(r) = correlation(&xa, &xb, method) {
                    diag.correlations.push(CorrelationDiag {
                        a: columns[a].clone(),
                        b: columns[b].clone(),
                        method,
                        r,
                    });
                }
            }
        }
    }

    let mut first_round = true;
    while columns.len() >= 2 {
        let view = table.select(&columns).expect("subset of own columns");
        let values = vif_values(&view)?;
        if first_round {
            diag.vif = columns.iter().cloned().zip(values.iter().copied()).collect();
            first_round = false;
        }
        let score = |v: &Option<f64>| v.unwrap_or(f64::INFINITY);
        let (worst, worst_vif) = values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (j, v)| {
                if score(v) >= acc.1 {
                    (j, score(v))
                } else {
                    acc
                }
            });
        if worst_vif <= opts.vif_limit {
            break;
        }
        diag.warnings.push(format!(
            "dropped {} (VIF {})",
            columns[worst],
            if worst_vif.is_finite() {
                format!("{worst_vif:.2}")
            } else {
                "infinite".to_owned()
            }
        ));
        diag.dropped_collinear.push(columns.remove(worst));
    }

    let screened = table.select(&columns).expect("subset of own columns");
    let selection = select_variables(&screened, opts.alpha, opts.criterion, &opts.fit)?;
    let fit = selection.fit;
    diag.eliminated = selection.steps;

    for j in 0..fit.beta.len() {
        let name = if j == 0 {
            INTERCEPT.to_owned()
        } else {
            fit.metric_names[j - 1].clone()
        };
        let (wald, p_value) = match wald_test(&fit, j) {
            Ok((w, p)) => (Some(w), Some(p)),
            Err(_) => (None, None),
        };
        diag.coefficients.push(CoefficientDiag {
            name,
            estimate: fit.beta[j],
            stderr: fit.stderr[j],
            wald,
            p_value,
        });
    }
    diag.log_likelihood = fit.log_likelihood;
    diag.null_log_likelihood = fit.null_log_likelihood;
    diag.iterations = fit.iterations;
    diag.ridge = fit.ridge;

    match hosmer_lemeshow(&fit, table, opts.hl_groups) {
        Ok(hl) => {
            if hl.p_value < HL_REJECT {
                if opts.strict {
                    return Err(StatsError::CalibrationRejected(hl.p_value));
                }
                diag.warnings.push(format!(
                    "Hosmer-Lemeshow p = {:.4} indicates poor fit",
                    hl.p_value
                ));
            }
            diag.hosmer_lemeshow = Some(hl);
        }
        Err(StatsError::TooFewRows { n, groups }) => diag.warnings.push(format!(
            "Hosmer-Lemeshow skipped: {n} rows are too few for {groups} groups"
        )),
        Err(e) => return Err(e),
    }

    Ok(SmellModel {
        smell: smell.name.clone(),
        granularity: smell.granularity,
        metric_names: fit.metric_names.clone(),
        beta: fit.beta.clone(),
        stderr: fit.stderr.clone(),
        threshold_default: 0.5,
        sample_size: table.len(),
        version: previous_version + 1,
        calibrated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        diagnostics: diag,
    })
}
