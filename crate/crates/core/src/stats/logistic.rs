use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::sample::SampleTable;

/// Largest `f64` below 1.
const ONE_BELOW: f64 = 1.0 - f64::EPSILON / 2.0;
/// Separation is declared once a coefficient grows past this while the
/// likelihood still improves.
const SEPARATION_BETA: f64 = 30.0;
const SEPARATION_FIT: f64 = 1e-8;
/// Smallest reciprocal condition number of the scale-normalized information
/// matrix that is still treated as invertible.
const MIN_RCOND: f64 = 1e-13;

/// `1 / (1 + e^-z)`, evaluated without overflow and kept inside (0, 1).
pub fn logistic(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(f64::MIN_POSITIVE, ONE_BELOW)
}

/// `ln(1 + e^z)`.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Convergence bound on the largest gradient component.
    pub tol: f64,
    /// L2 penalty on the slopes; the intercept is never penalized.
    pub ridge: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 100,
            tol: 1e-8,
            ridge: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Regressor names; `beta[j + 1]` belongs to `metric_names[j]`.
    pub metric_names: Vec<String>,
    /// Intercept first.
    pub beta: Vec<f64>,
    pub stderr: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub log_likelihood: f64,
    pub null_log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub n_obs: usize,
    pub ridge: f64,
    /// Objective after every accepted step, starting point included.
    pub trace: Vec<f64>,
}

impl FitResult {
    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len() + 1, self.beta.len());
        self.beta[0] + self.beta[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        logistic(self.linear_predictor(x))
    }
}

/// Rows with a leading intercept column.
struct Design {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
}

impl Design {
    fn new(table: &SampleTable) -> Design {
        Design {
            x: table
                .rows
                .iter()
                .map(|r| std::iter::once(1.0).chain(r.values.iter().copied()).collect())
                .collect(),
            y: table.labels(),
        }
    }

    fn k(&self) -> usize {
        self.x.first().map_or(1, Vec::len)
    }

    fn eta(&self, beta: &[f64]) -> impl Iterator<Item = f64> + '_ {
        let beta = beta.to_vec();
        self.x
            .iter()
            .map(move |row| row.iter().zip(&beta).map(|(a, b)| a * b).sum())
    }

    fn log_likelihood(&self, beta: &[f64]) -> f64 {
        self.eta(beta)
            .zip(&self.y)
            .map(|(z, y)| y * z - softplus(z))
            .sum()
    }

    fn objective(&self, beta: &[f64], ridge: f64) -> f64 {
        self.log_likelihood(beta) - 0.5 * ridge * beta[1..].iter().map(|b| b * b).sum::<f64>()
    }

    /// Penalized gradient and information matrix.
    fn derivatives(&self, beta: &[f64], ridge: f64) -> (DVector<f64>, DMatrix<f64>) {
        let k = self.k();
        let mut grad = DVector::zeros(k);
        let mut info = DMatrix::zeros(k, k);
        for (row, (z, y)) in self.x.iter().zip(self.eta(beta).zip(&self.y)) {
            let p = logistic(z);
            let w = p * (1.0 - p);
            for a in 0..k {
                grad[a] += (y - p) * row[a];
                for b in 0..=a {
                    info[(a, b)] += w * row[a] * row[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                info[(b, a)] = info[(a, b)];
            }
        }
        for j in 1..k {
            grad[j] -= ridge * beta[j];
            info[(j, j)] += ridge;
        }
        (grad, info)
    }
}

/// Log-likelihood of `beta` (intercept first) on `table`.
pub fn log_likelihood(table: &SampleTable, beta: &[f64]) -> f64 {
    Design::new(table).log_likelihood(beta)
}

/// Gradient of the log-likelihood, `Σ (y − p) x`.
pub fn score(table: &SampleTable, beta: &[f64]) -> Vec<f64> {
    Design::new(table).derivatives(beta, 0.0).0.as_slice().to_vec()
}

/// Fitted probability of every row of `table`, whose columns must be the
/// fit's regressors.
pub fn fitted_probabilities(fit: &FitResult, table: &SampleTable) -> Vec<f64> {
    table.rows.iter().map(|r| fit.predict(&r.values)).collect()
}

/// Inverts a symmetric positive definite matrix, refusing ill-conditioned
/// input. Conditioning is judged after scaling to unit diagonal so that the
/// units of the metrics do not matter.
fn invert_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>, StatsError> {
    let n = m.nrows();
    let mut d = DVector::zeros(n);
    for i in 0..n {
        if !(m[(i, i)] > 0.0) || !m[(i, i)].is_finite() {
            return Err(StatsError::SingularInformation);
        }
        d[i] = 1.0 / m[(i, i)].sqrt();
    }
    let scaled = DMatrix::from_fn(n, n, |i, j| m[(i, j)] * d[i] * d[j]);
    let eig = scaled.clone().symmetric_eigenvalues();
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    if !(lo > hi * MIN_RCOND) {
        return Err(StatsError::SingularInformation);
    }
    let inv = scaled
        .cholesky()
        .ok_or(StatsError::SingularInformation)?
        .inverse();
    Ok(DMatrix::from_fn(n, n, |i, j| inv[(i, j)] * d[i] * d[j]))
}

fn validate(table: &SampleTable) -> Result<(), StatsError> {
    if table.is_empty() {
        return Err(StatsError::EmptyTable);
    }
    for row in &table.rows {
        if row.label > 1 {
            return Err(StatsError::InvalidLabel(row.label));
        }
        for (v, name) in row.values.iter().zip(&table.metric_names) {
            if !v.is_finite() {
                return Err(StatsError::InvalidValue(name.clone()));
            }
        }
    }
    let pos = table.positives();
    if pos == 0 || pos == table.len() {
        return Err(StatsError::OneClassOnly);
    }
    for (j, name) in table.metric_names.iter().enumerate() {
        let first = table.rows[0].values[j];
        if table.rows.iter().all(|r| r.values[j] == first) {
            return Err(StatsError::ConstantColumn(name.clone()));
        }
    }
    Ok(())
}

/// Maximum likelihood fit by Newton–Raphson (IRLS) with step-halving.
pub fn fit_blr(table: &SampleTable, opts: &FitOptions) -> Result<FitResult, StatsError> {
    validate(table)?;
    let design = Design::new(table);
    let n = table.len();
    let k = design.k();
    let ridge = opts.ridge.max(0.0);

    let ybar = table.positives() as f64 / n as f64;
    let null_ll = n as f64 * (ybar * ybar.ln() + (1.0 - ybar) * (1.0 - ybar).ln());

    let mut beta = vec![0.0; k];
    beta[0] = (ybar / (1.0 - ybar)).ln();
    let mut objective = design.objective(&beta, ridge);
    let mut trace = vec![objective];
    let mut iterations = 0;

    let info = loop {
        let (grad, info) = design.derivatives(&beta, ridge);
        if grad.amax() <= opts.tol {
            break info;
        }
        if iterations >= opts.max_iter {
            return Err(StatsError::NotConverged(opts.max_iter));
        }
        let inverse = invert_spd(&info)?;
        let delta = inverse * grad;

        // Rounding near the optimum can make an exact ascent step look like a
        // tiny descent; accept steps within a few ulps of the current value.
        let slack = 1e-12 * (1.0 + objective.abs());
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = beta.iter().zip(delta.iter()).map(|(b, d)| b + step * d).collect();
            let value = design.objective(&cand, ridge);
            if value.is_finite() && value >= objective - slack {
                accepted = Some((cand, value));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, value)) = accepted else {
            return Err(StatsError::NotConverged(iterations));
        };

        if ridge == 0.0 {
            let growing = value > objective && cand.iter().any(|b| b.abs() > SEPARATION_BETA);
            let perfect = design
                .eta(&cand)
                .zip(&design.y)
                .all(|(z, y)| (logistic(z) - y).abs() < SEPARATION_FIT);
            if growing || perfect {
                return Err(StatsError::CompleteSeparation);
            }
        }

        beta = cand;
        objective = value;
        trace.push(objective);
        iterations += 1;
    };

    let cov = invert_spd(&info)?;
    let covariance: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| cov[(i, j)]).collect()).collect();
    let stderr = (0..k).map(|i| cov[(i, i)].max(0.0).sqrt()).collect();

    Ok(FitResult {
        metric_names: table.metric_names.clone(),
        log_likelihood: design.log_likelihood(&beta),
        beta,
        stderr,
        covariance,
        null_log_likelihood: null_ll,
        iterations,
        converged: true,
        n_obs: n,
        ridge,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::testdata::{simulated, two_by_two};
    use proptest::prelude::*;

    #[test]
    fn logistic_reference_points() {
        assert_eq!(logistic(0.0), 0.5);
        assert!((logistic(3f64.ln()) - 0.75).abs() < 1e-15);
        let high = logistic(40.0);
        assert!(high < 1.0 && 1.0 - high < 1e-15);
        for z in [-700.0, -40.0, 40.0, 700.0, f64::MAX, f64::MIN] {
            let p = logistic(z);
            assert!(p > 0.0 && p < 1.0, "z={z}");
        }
        assert!((logistic(-40.0) - 4.248354255291589e-18).abs() < 1e-30);
    }

    #[test]
    fn grouped_two_by_two_matches_log_odds() {
        let fit = fit_blr(&two_by_two(), &FitOptions::default()).unwrap();
        assert!((fit.beta[0] - (10.0f64 / 20.0).ln()).abs() < 1e-6);
        assert!((fit.beta[1] - 4f64.ln()).abs() < 1e-6);
        let var: f64 = 1.0 / 10.0 + 1.0 / 20.0 + 1.0 / 20.0 + 1.0 / 10.0;
        assert!((fit.stderr[1] - var.sqrt()).abs() < 1e-6);
        assert!((fit.predict(&[1.0]) - 2.0 / 3.0).abs() < 1e-6);
        assert!(fit.log_likelihood <= 0.0);
        assert!(fit.null_log_likelihood < fit.log_likelihood);
    }

    #[test]
    fn separation_is_an_error() {
        let t = SampleTable::from_xy(
            &["x"],
            &[vec![0.0], vec![0.0], vec![1.0], vec![1.0]],
            &[0, 0, 1, 1],
        );
        assert_eq!(fit_blr(&t, &FitOptions::default()), Err(StatsError::CompleteSeparation));
        let ridged = fit_blr(&t, &FitOptions { ridge: 1.0, ..FitOptions::default() }).unwrap();
        assert!(ridged.beta[1] > 0.0 && ridged.beta[1].is_finite());
    }

    #[test]
    fn precondition_errors() {
        let one_class = SampleTable::from_xy(&["x"], &[vec![1.0], vec![2.0]], &[1, 1]);
        assert_eq!(fit_blr(&one_class, &FitOptions::default()), Err(StatsError::OneClassOnly));
        let constant = SampleTable::from_xy(&["x"], &[vec![1.0], vec![1.0]], &[0, 1]);
        assert_eq!(
            fit_blr(&constant, &FitOptions::default()),
            Err(StatsError::ConstantColumn("x".into()))
        );
        let dup = SampleTable::from_xy(
            &["a", "b"],
            &[vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0], vec![4.0, 4.0]],
            &[0, 1, 0, 1],
        );
        assert_eq!(fit_blr(&dup, &FitOptions::default()), Err(StatsError::SingularInformation));
        let t = simulated(3, 200, &[-1.0, 0.5, 0.3]);
        let tight = FitOptions { max_iter: 1, ..FitOptions::default() };
        assert_eq!(fit_blr(&t, &tight), Err(StatsError::NotConverged(1)));
    }

    #[test]
    fn gradient_vanishes_and_matches_finite_differences() {
        let t = simulated(11, 300, &[-2.0, 0.8, -0.4, 0.3]);
        let fit = fit_blr(&t, &FitOptions::default()).unwrap();
        let g = score(&t, &fit.beta);
        assert!(g.iter().all(|c| c.abs() <= 1e-8), "{g:?}");

        // Away from the optimum the analytic gradient must match L numerically.
        let probe: Vec<f64> = fit.beta.iter().map(|b| b + 0.1).collect();
        let g = score(&t, &probe);
        let h = 1e-5;
        for j in 0..probe.len() {
            let mut up = probe.clone();
            let mut down = probe.clone();
            up[j] += h;
            down[j] -= h;
            let fd = (log_likelihood(&t, &up) - log_likelihood(&t, &down)) / (2.0 * h);
            assert!((fd - g[j]).abs() <= 1e-4 * g[j].abs().max(1.0), "j={j} fd={fd} g={}", g[j]);
        }
    }

    #[test]
    fn likelihood_never_decreases() {
        for seed in 0..10 {
            let t = simulated(seed, 120, &[1.0, -0.7, 0.9]);
            let fit = fit_blr(&t, &FitOptions::default()).unwrap();
            for w in fit.trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-9 * (1.0 + w[0].abs()), "{:?}", fit.trace);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn scaling_a_column_rescales_its_coefficient(seed in 0u64..1000, c in 0.05f64..20.0) {
            let t = simulated(seed, 150, &[-0.5, 0.6, -0.3]);
            let Ok(fit) = fit_blr(&t, &FitOptions::default()) else { return Ok(()); };
            let mut scaled = t.clone();
            for r in &mut scaled.rows {
                r.values[0] *= c;
            }
            let sfit = fit_blr(&scaled, &FitOptions::default()).unwrap();
            prop_assert!((sfit.beta[1] * c - fit.beta[1]).abs() <= 1e-6 * (1.0 + fit.beta[1].abs()));
            for (a, b) in fitted_probabilities(&fit, &t).iter().zip(fitted_probabilities(&sfit, &scaled)) {
                prop_assert!((a - b).abs() <= 1e-6);
            }
            let w = (fit.beta[1] / fit.stderr[1]).powi(2);
            let sw = (sfit.beta[1] / sfit.stderr[1]).powi(2);
            prop_assert!((w - sw).abs() <= 1e-6 * (1.0 + w));
            prop_assert!((fit.log_likelihood - sfit.log_likelihood).abs() <= 1e-6);
        }
    }
}
