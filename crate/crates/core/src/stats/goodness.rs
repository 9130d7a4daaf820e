use serde::{Deserialize, Serialize};

use super::dist::chi2_sf;
use super::logistic::{fitted_probabilities, FitResult};
use super::StatsError;
use crate::sample::SampleTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HlGroup {
    pub size: usize,
    pub observed: f64,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HosmerLemeshow {
    pub statistic: f64,
    pub p_value: f64,
    pub df: usize,
    pub groups: Vec<HlGroup>,
}

/// Hosmer–Lemeshow test over deciles of risk. Rows with equal fitted
/// probability always land in the same group, so fewer than `groups`
/// groups may result.
pub fn hosmer_lemeshow(
    fit: &FitResult,
    table: &SampleTable,
    groups: usize,
) -> Result<HosmerLemeshow, StatsError> {
    let n = table.len();
    if groups < 3 || n < 2 * groups {
        return Err(StatsError::TooFewRows { n, groups });
    }
    if !fit.converged {
        return Err(StatsError::NotConverged(fit.iterations));
    }
    let view = table
        .select(&fit.metric_names)
        .ok_or_else(|| StatsError::MissingMetric(fit.metric_names.join(",")))?;
    let p = fitted_probabilities(fit, &view);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));

    let mut out = Vec::new();
    let mut start = 0;
    for g in 0..groups {
        if start >= n {
            break;
        }
        let mut end = ((g + 1) * n / groups).max(start + 1);
        while end < n && p[order[end]] == p[order[end - 1]] {
            end += 1;
        }
        let members = &order[start..end];
        out.push(HlGroup {
            size: members.len(),
            observed: members.iter().map(|&i| f64::from(view.rows[i].label)).sum(),
            expected: members.iter().map(|&i| p[i]).sum(),
        });
        start = end;
    }

    let statistic = out
        .iter()
        .map(|g| {
            let denom = g.expected * (1.0 - g.expected / g.size as f64);
            if denom > 0.0 {
                (g.observed - g.expected).powi(2) / denom
            } else {
                0.0
            }
        })
        .sum();
    let df = out.len().saturating_sub(2).max(1);
    Ok(HosmerLemeshow {
        statistic,
        p_value: chi2_sf(statistic, df as f64),
        df,
        groups: out,
    })
}
