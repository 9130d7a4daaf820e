//! Binary logistic regression: fitting, inference, diagnostics and the
//! calibration pipeline that turns a sample table into a smell model.

mod calibrate;
mod correlation;
pub mod dist;
mod goodness;
mod inference;
mod logistic;
mod normality;
#[cfg(test)]
pub(crate) mod testdata;

use thiserror::Error;

pub use calibrate::{
    calibrate, predict, predict_values, CalibrationOptions, CoefficientDiag, CorrelationDiag,
    Diagnostics, NormalityDiag, SmellModel, INTERCEPT,
};
pub use correlation::{correlation, correlation_auto, vif, CorrelationMethod};
pub use goodness::{hosmer_lemeshow, HlGroup, HosmerLemeshow};
pub use inference::{lr_test, select_variables, wald_test, Criterion, EliminationStep, Selection};
pub use logistic::{
    fit_blr, fitted_probabilities, log_likelihood, logistic, score, FitOptions, FitResult,
};
pub use normality::shapiro_wilk;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StatsError {
    #[error("sample table has no rows")]
    EmptyTable,
    #[error("sample contains only one class; both labels 0 and 1 are required")]
    OneClassOnly,
    #[error("metric column `{0}` is constant")]
    ConstantColumn(String),
    #[error("non-finite value in `{0}`")]
    InvalidValue(String),
    #[error("label {0} is not 0 or 1")]
    InvalidLabel(u8),
    #[error("complete separation: the maximum likelihood estimate does not exist (consider a ridge penalty)")]
    CompleteSeparation,
    #[error("information matrix is singular")]
    SingularInformation,
    #[error("fit did not converge within {0} iterations")]
    NotConverged(usize),
    #[error("coefficient {0} has zero standard error")]
    ZeroStderr(usize),
    #[error("coefficient index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("models are not nested on the same rows")]
    NotNested,
    #[error("sample of size {n} is outside the supported range {min}..={max}")]
    SampleSize { n: usize, min: usize, max: usize },
    #[error("all values in the sample are equal")]
    ConstantSample,
    #[error("input to correlation is constant")]
    ConstantInput,
    #[error("inputs have different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("at least two metric columns are required")]
    TooFewColumns,
    #[error("column `{0}` is an exact linear combination of the others")]
    ExactCollinearity(String),
    #[error("{n} rows cannot form {groups} groups of at least two")]
    TooFewRows { n: usize, groups: usize },
    #[error("missing metric `{0}`")]
    MissingMetric(String),
    #[error("table metrics {table:?} do not match smell metrics {smell:?}")]
    SchemaMismatch { table: Vec<String>, smell: Vec<String> },
    #[error("calibration rejected: Hosmer-Lemeshow p = {0:.4} < 0.01")]
    CalibrationRejected(f64),
}
