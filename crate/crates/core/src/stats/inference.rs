use serde::{Deserialize, Serialize};

use super::dist::chi2_sf;
use super::logistic::{fit_blr, FitOptions, FitResult};
use super::StatsError;
use crate::sample::SampleTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    #[default]
    Wald,
    Lr,
}

impl std::str::FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wald" => Ok(Criterion::Wald),
            "lr" => Ok(Criterion::Lr),
            other => Err(format!("unknown criterion `{other}` (expected wald or lr)")),
        }
    }
}

/// Wald statistic `(β_j / se_j)²` and its chi-square(1) p-value.
/// Index 0 is the intercept.
pub fn wald_test(fit: &FitResult, j: usize) -> Result<(f64, f64), StatsError> {
    if !fit.converged {
        return Err(StatsError::NotConverged(fit.iterations));
    }
    let (&beta, &se) = fit
        .beta
        .get(j)
        .zip(fit.stderr.get(j))
        .ok_or(StatsError::IndexOutOfRange(j))?;
    if se == 0.0 {
        return Err(StatsError::ZeroStderr(j));
    }
    let stat = (beta / se).powi(2);
    Ok((stat, chi2_sf(stat, 1.0)))
}

/// Likelihood-ratio statistic `2 (L_full − L_reduced)` with `df` degrees of
/// freedom, which must equal the difference in parameter count.
pub fn lr_test(full: &FitResult, reduced: &FitResult, df: usize) -> Result<(f64, f64), StatsError> {
    let nested = reduced
        .metric_names
        .iter()
        .all(|m| full.metric_names.contains(m));
    if !nested
        || full.n_obs != reduced.n_obs
        || full.beta.len() < reduced.beta.len()
        || full.beta.len() - reduced.beta.len() != df
    {
        return Err(StatsError::NotNested);
    }
    if !full.converged {
        return Err(StatsError::NotConverged(full.iterations));
    }
    if !reduced.converged {
        return Err(StatsError::NotConverged(reduced.iterations));
    }
    let stat = (2.0 * (full.log_likelihood - reduced.log_likelihood)).max(0.0);
    let p = if df == 0 { 1.0 } else { chi2_sf(stat, df as f64) };
    Ok((stat, p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliminationStep {
    pub dropped: String,
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub metric_names: Vec<String>,
    pub fit: FitResult,
    pub steps: Vec<EliminationStep>,
}

fn fit_subset(table: &SampleTable, names: &[String], opts: &FitOptions) -> Result<FitResult, StatsError> {
    let sub = table
        .select(names)
        .ok_or_else(|| StatsError::MissingMetric(names.join(",")))?;
    fit_blr(&sub, opts)
}

/// Backward elimination: drop the least significant regressor while its
/// p-value exceeds `alpha`, refitting after every drop. An all-insignificant
/// table ends with the intercept-only model. Ties drop the later column.
pub fn select_variables(
    table: &SampleTable,
    alpha: f64,
    criterion: Criterion,
    opts: &FitOptions,
) -> Result<Selection, StatsError> {
    let mut names = table.metric_names.clone();
    let mut fit = fit_subset(table, &names, opts)?;
    let mut steps = Vec::new();

    while !names.is_empty() {
        let mut worst: Option<(usize, f64, f64)> = None;
        for j in 0..names.len() {
            let (stat, p) = match criterion {
                Criterion::Wald => wald_test(&fit, j + 1)?,
                Criterion::Lr => {
                    let mut rest = names.clone();
                    rest.remove(j);
                    let reduced = fit_subset(table, &rest, opts)?;
                    lr_test(&fit, &reduced, 1)?
                }
            };
            if worst.is_none_or(|(_, _, wp)| p >= wp) {
                worst = Some((j, stat, p));
            }
        }
        let (j, statistic, p_value) = worst.expect("at least one regressor");
        if p_value <= alpha {
            break;
        }
        steps.push(EliminationStep {
            dropped: names.remove(j),
            statistic,
            p_value,
        });
        fit = fit_subset(table, &names, opts)?;
    }

    Ok(Selection {
        metric_names: names,
        fit,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::logistic::log_likelihood;
    use crate::stats::testdata::{simulated, two_by_two};
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn with_noise(table: &SampleTable, seed: u64, extra: usize) -> SampleTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = table.clone();
        for e in 0..extra {
            t.metric_names.push(format!("noise{e}"));
        }
        for r in &mut t.rows {
            for _ in 0..extra {
                r.values.push(rng.random_range(0.0..10.0));
            }
        }
        t
    }

    #[test]
    fn wald_reference_values() {
        let fit = fit_blr(&two_by_two(), &FitOptions::default()).unwrap();
        let (stat, p) = wald_test(&fit, 1).unwrap();
        assert!((stat - 4f64.ln().powi(2) / 0.3).abs() < 1e-5);
        assert!((stat - 6.406).abs() < 1e-3);
        assert!(p < 0.05);

        let mut synthetic = fit.clone();
        synthetic.beta[1] = 1.96;
        synthetic.stderr[1] = 1.0;
        let (_, p) = wald_test(&synthetic, 1).unwrap();
        assert!((p - 0.05).abs() < 5e-4);
        synthetic.beta[1] = 0.0;
        assert_eq!(wald_test(&synthetic, 1).unwrap(), (0.0, 1.0));
        synthetic.stderr[1] = 0.0;
        assert_eq!(wald_test(&synthetic, 1), Err(StatsError::ZeroStderr(1)));
        assert_eq!(wald_test(&synthetic, 7), Err(StatsError::IndexOutOfRange(7)));
    }

    #[test]
    fn lr_reference_values() {
        let t = two_by_two();
        let full = fit_blr(&t, &FitOptions::default()).unwrap();
        assert_eq!(lr_test(&full, &full, 0).unwrap(), (0.0, 1.0));

        let null = fit_subset(&t, &[], &FitOptions::default()).unwrap();
        let (stat, _) = lr_test(&full, &null, 1).unwrap();
        let direct = 2.0 * (log_likelihood(&t, &full.beta) - log_likelihood(&t, &null.beta));
        assert!((stat - direct).abs() < 1e-9);
        assert!((null.log_likelihood - full.null_log_likelihood).abs() < 1e-9);

        let noisy = with_noise(&t, 5, 1);
        let bigger = fit_blr(&noisy, &FitOptions::default()).unwrap();
        let smaller = fit_subset(&noisy, &["flag".into()], &FitOptions::default()).unwrap();
        let (_, p) = lr_test(&bigger, &smaller, 1).unwrap();
        assert!(p > 0.01, "p={p}");

        assert_eq!(lr_test(&smaller, &bigger, 1), Err(StatsError::NotNested));
        assert_eq!(lr_test(&bigger, &smaller, 2), Err(StatsError::NotNested));
    }

    #[test]
    fn selection_drops_noise_and_keeps_signal() {
        let base = simulated(21, 300, &[-3.0, 3.0]);
        let t = with_noise(&base, 22, 3);
        for criterion in [Criterion::Wald, Criterion::Lr] {
            let s = select_variables(&t, 0.05, criterion, &FitOptions::default()).unwrap();
            assert_eq!(s.metric_names, ["x1"], "{criterion:?}");
            assert_eq!(s.steps.len(), 3);
        }
    }

    #[test]
    fn selection_of_pure_noise_is_intercept_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..3).map(|_| rng.random_range(0.0..5.0)).collect())
            .collect();
        let y: Vec<u8> = (0..200).map(|_| u8::from(rng.random::<bool>())).collect();
        let t = SampleTable::from_xy(&["a", "b", "c"], &x, &y);
        let s = select_variables(&t, 0.05, Criterion::Wald, &FitOptions::default()).unwrap();
        assert!(s.metric_names.is_empty());
        assert_eq!(s.fit.beta.len(), 1);
    }

    #[test]
    fn significant_single_column_is_retained() {
        let s = select_variables(&two_by_two(), 0.05, Criterion::Wald, &FitOptions::default()).unwrap();
        assert_eq!(s.metric_names, ["flag"]);
        assert!(s.steps.is_empty());
    }

    #[test]
    fn wald_and_lr_agree_at_scale() {
        let t = simulated(99, 1000, &[-1.0, 0.25, 0.15]);
        let full = fit_blr(&t, &FitOptions::default()).unwrap();
        let reduced = fit_subset(&t, &["x1".into()], &FitOptions::default()).unwrap();
        let (lr, _) = lr_test(&full, &reduced, 1).unwrap();
        let (wald, _) = wald_test(&full, 2).unwrap();
        assert!((lr - wald).abs() <= 0.15 * lr.max(wald), "lr={lr} wald={wald}");
    }
}
