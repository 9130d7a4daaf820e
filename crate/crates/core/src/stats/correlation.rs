use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::normality::shapiro_wilk;
use super::StatsError;
use crate::sample::SampleTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMethod {
    Pearson,
    Spearman,
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of their positions.
fn fractional_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

pub fn correlation(x: &[f64], y: &[f64], method: CorrelationMethod) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::SampleSize { n: x.len(), min: 3, max: usize::MAX });
    }
    match method {
        CorrelationMethod::Pearson => pearson(x, y),
        CorrelationMethod::Spearman => pearson(&fractional_ranks(x), &fractional_ranks(y)),
    }
}

/// Pearson when both inputs pass Shapiro–Wilk at 0.05, Spearman otherwise.
/// Inputs the normality test cannot handle count as non-normal.
pub fn correlation_auto(x: &[f64], y: &[f64]) -> Result<(CorrelationMethod, f64), StatsError> {
    let normal = |v: &[f64]| shapiro_wilk(v).is_ok_and(|(_, p)| p > 0.05);
    let method = if normal(x) && normal(y) {
        CorrelationMethod::Pearson
    } else {
        CorrelationMethod::Spearman
    };
    Ok((method, correlation(x, y, method)?))
}

/// Variance inflation factor of every column: `1 / (1 − R²)` of the least
/// squares regression of the column on all others plus an intercept.
pub fn vif(table: &SampleTable) -> Result<IndexMap<String, f64>, StatsError> {
    let values = vif_values(table)?;
    let mut out = IndexMap::new();
    for (name, v) in table.metric_names.iter().zip(values) {
        let v = v.ok_or_else(|| StatsError::ExactCollinearity(name.clone()))?;
        out.insert(name.clone(), v);
    }
    Ok(out)
}

/// Per-column VIF; `None` marks a column that is an exact linear
/// combination of the others.
pub(crate) fn vif_values(table: &SampleTable) -> Result<Vec<Option<f64>>, StatsError> {
    let k = table.metric_names.len();
    if k < 2 {
        return Err(StatsError::TooFewColumns);
    }
    let n = table.len();
    let mut out = Vec::with_capacity(k);
    for (j, name) in table.metric_names.iter().enumerate() {
        let y = DVector::from_iterator(n, table.rows.iter().map(|r| r.values[j]));
        let mean = y.mean();
        let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
        if sst == 0.0 {
            return Err(StatsError::ConstantColumn(name.clone()));
        }
        let x = DMatrix::from_fn(n, k, |i, c| match c {
            0 => 1.0,
            c if c <= j => table.rows[i].values[c - 1],
            c => table.rows[i].values[c],
        });
        let Ok(coef) = x.clone().svd(true, true).solve(&y, 1e-12) else {
            out.push(None);
            continue;
        };
        let resid = &y - &x * coef;
        let r2 = 1.0 - resid.norm_squared() / sst;
        out.push((r2 < 1.0 - 1e-12).then(|| 1.0 / (1.0 - r2)));
    }
    Ok(out)
}
