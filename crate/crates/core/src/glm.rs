//! Binomial logit models over a J×K grid of equally spaced covariate levels,
//! likelihood-ratio statistics, and chi-square tail probabilities.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::tables::{Count, Table};

/// Gradient max-norm required for convergence.
pub const GRADIENT_TOLERANCE: f64 = 1e-8;
/// Relative log-likelihood change required for convergence.
pub const LOGLIK_TOLERANCE: f64 = 1e-12;
/// Any coefficient beyond this magnitude is treated as divergence.
pub const SEPARATION_BOUND: f64 = 30.0;
pub const MAX_ITERATIONS: usize = 100;
pub const MAX_HALVINGS: usize = 20;
/// Negative LR values down to this are rounding noise and clamp to zero.
pub const LR_NEGATIVE_SLACK: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// `μ + αj + βk`
    LinearBivariate,
    /// `μ + α_j + β_k` with `Σα_j = Σβ_k = 0`
    Anova,
    /// `μ + αj`
    LinearJOnly,
    /// `μ + βk`
    LinearKOnly,
    /// `μ`
    InterceptOnly,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::InterceptOnly,
        ModelKind::LinearJOnly,
        ModelKind::LinearKOnly,
        ModelKind::LinearBivariate,
        ModelKind::Anova,
    ];

    /// Whether every linear predictor of `self` is also one of `other`.
    pub fn nested_in(self, other: ModelKind) -> bool {
        use ModelKind::*;
        match self {
            InterceptOnly => true,
            LinearJOnly => matches!(other, LinearJOnly | LinearBivariate | Anova),
            LinearKOnly => matches!(other, LinearKOnly | LinearBivariate | Anova),
            LinearBivariate => matches!(other, LinearBivariate | Anova),
            Anova => other == Anova,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "linear" | "linear_bivariate" => ModelKind::LinearBivariate,
            "anova" => ModelKind::Anova,
            "j-only" | "linear_j_only" => ModelKind::LinearJOnly,
            "k-only" | "linear_k_only" => ModelKind::LinearKOnly,
            "intercept" | "intercept_only" => ModelKind::InterceptOnly,
            _ => return None,
        })
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::LinearBivariate => "linear_bivariate",
            ModelKind::Anova => "anova",
            ModelKind::LinearJOnly => "linear_j_only",
            ModelKind::LinearKOnly => "linear_k_only",
            ModelKind::InterceptOnly => "intercept_only",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub j_levels: usize,
    pub k_levels: usize,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, j_levels: usize, k_levels: usize) -> Self {
        ModelSpec { kind, j_levels, k_levels }
    }

    pub fn num_params(&self) -> usize {
        match self.kind {
            ModelKind::LinearBivariate => 3,
            ModelKind::Anova => 1 + (self.j_levels - 1) + (self.k_levels - 1),
            ModelKind::LinearJOnly | ModelKind::LinearKOnly => 2,
            ModelKind::InterceptOnly => 1,
        }
    }

    /// Design row for 1-based levels `(j, k)`. ANOVA effects use sum-to-zero
    /// coding: the last level of each factor carries minus the others.
    pub fn design_row(&self, j: usize, k: usize) -> Vec<f64> {
        let (jf, kf) = (j as f64, k as f64);
        match self.kind {
            ModelKind::LinearBivariate => vec![1.0, jf, kf],
            ModelKind::LinearJOnly => vec![1.0, jf],
            ModelKind::LinearKOnly => vec![1.0, kf],
            ModelKind::InterceptOnly => vec![1.0],
            ModelKind::Anova => {
                let mut row = vec![1.0];
                row.extend(effect_coding(j, self.j_levels));
                row.extend(effect_coding(k, self.k_levels));
                row
            }
        }
    }

    /// Degrees of freedom between nested specs.
    pub fn df_against(&self, alt: &ModelSpec) -> Result<usize> {
        check_nesting(self, alt)?;
        Ok(alt.num_params() - self.num_params())
    }
}

fn effect_coding(level: usize, levels: usize) -> Vec<f64> {
    (1..levels)
        .map(|l| {
            if level == levels {
                -1.0
            } else if level == l {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

fn check_nesting(null: &ModelSpec, alt: &ModelSpec) -> Result<()> {
    if (null.j_levels, null.k_levels) != (alt.j_levels, alt.k_levels) || !null.kind.nested_in(alt.kind) {
        return Err(Error::Domain(format!(
            "{} on {}×{} is not nested in {} on {}×{}",
            null.kind, null.j_levels, null.k_levels, alt.kind, alt.j_levels, alt.k_levels
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub coefficients: Vec<f64>,
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    pub max_gradient: f64,
}

/// Successes and trials per `(j, k)` cell, row-major in `(j, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BinomialData {
    pub j_levels: usize,
    pub k_levels: usize,
    pub successes: Vec<f64>,
    pub trials: Vec<f64>,
}

impl BinomialData {
    /// Reads a 2×J×K table (success layer first). Every cell needs trials.
    pub fn from_table(table: &Table) -> Result<Self> {
        let (j_levels, k_levels) = match table.axes() {
            [2, j, k] => (*j, *k),
            other => return Err(Error::Shape(format!("expected a 2×J×K table, got axes {other:?}"))),
        };
        let cells = j_levels * k_levels;
        let c = table.counts();
        let mut successes = Vec::with_capacity(cells);
        let mut trials = Vec::with_capacity(cells);
        for p in 0..cells {
            let n: Count = c[p] + c[cells + p];
            if n == 0 {
                return Err(Error::Precondition(format!(
                    "cell (j={}, k={}) has zero trials",
                    p / k_levels + 1,
                    p % k_levels + 1
                )));
            }
            successes.push(c[p] as f64);
            trials.push(n as f64);
        }
        Ok(BinomialData {
            j_levels,
            k_levels,
            successes,
            trials,
        })
    }

    /// Sum of `ln C(n, y)`, the part of the log-likelihood free of parameters.
    fn log_binomial_constant(&self) -> f64 {
        self.successes
            .iter()
            .zip(&self.trials)
            .map(|(&y, &n)| ln_gamma(n + 1.0) - ln_gamma(y + 1.0) - ln_gamma(n - y + 1.0))
            .sum()
    }
}

fn softplus(eta: f64) -> f64 {
    eta.max(0.0) + (-eta.abs()).exp().ln_1p()
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// A logit model with its design matrix built once.
#[derive(Clone, Debug)]
pub struct LogitModel {
    spec: ModelSpec,
    design: DMatrix<f64>,
}

impl LogitModel {
    pub fn new(spec: ModelSpec) -> Self {
        let cells = spec.j_levels * spec.k_levels;
        let p = spec.num_params();
        let mut design = DMatrix::zeros(cells, p);
        for j in 1..=spec.j_levels {
            for k in 1..=spec.k_levels {
                let row = (j - 1) * spec.k_levels + (k - 1);
                for (c, v) in spec.design_row(j, k).into_iter().enumerate() {
                    design[(row, c)] = v;
                }
            }
        }
        LogitModel { spec, design }
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    fn check(&self, data: &BinomialData) -> Result<()> {
        if (data.j_levels, data.k_levels) != (self.spec.j_levels, self.spec.k_levels) {
            return Err(Error::Shape(format!(
                "data is {}×{}, model is {}×{}",
                data.j_levels, data.k_levels, self.spec.j_levels, self.spec.k_levels
            )));
        }
        Ok(())
    }

    fn linear_predictor(&self, beta: &DVector<f64>) -> DVector<f64> {
        &self.design * beta
    }

    /// Log-likelihood without the `ln C(n, y)` constant.
    fn kernel_loglik(&self, data: &BinomialData, beta: &DVector<f64>) -> f64 {
        self.linear_predictor(beta)
            .iter()
            .zip(data.successes.iter().zip(&data.trials))
            .map(|(&eta, (&y, &n))| y * eta - n * softplus(eta))
            .sum()
    }

    pub fn log_likelihood(&self, data: &BinomialData, coefficients: &[f64]) -> Result<f64> {
        self.check(data)?;
        self.check_len(coefficients)?;
        let beta = DVector::from_column_slice(coefficients);
        Ok(self.kernel_loglik(data, &beta) + data.log_binomial_constant())
    }

    /// Analytic score `Xᵀ(y − nπ)`.
    pub fn score(&self, data: &BinomialData, coefficients: &[f64]) -> Result<Vec<f64>> {
        self.check(data)?;
        self.check_len(coefficients)?;
        let beta = DVector::from_column_slice(coefficients);
        let (grad, _) = self.score_and_information(data, &beta);
        Ok(grad.iter().copied().collect())
    }

    fn check_len(&self, coefficients: &[f64]) -> Result<()> {
        if coefficients.len() != self.spec.num_params() {
            return Err(Error::Shape(format!(
                "{} coefficients for a model with {} parameters",
                coefficients.len(),
                self.spec.num_params()
            )));
        }
        Ok(())
    }

    fn score_and_information(&self, data: &BinomialData, beta: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let eta = self.linear_predictor(beta);
        let p = self.design.ncols();
        let mut grad = DVector::zeros(p);
        let mut info = DMatrix::zeros(p, p);
        for (row, &e) in eta.iter().enumerate() {
            let pi = sigmoid(e);
            let n = data.trials[row];
            let resid = data.successes[row] - n * pi;
            let w = n * pi * (1.0 - pi);
            for a in 0..p {
                let xa = self.design[(row, a)];
                if xa == 0.0 {
                    continue;
                }
                grad[a] += xa * resid;
                for b in 0..=a {
                    info[(a, b)] += w * xa * self.design[(row, b)];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                info[(b, a)] = info[(a, b)];
            }
        }
        (grad, info)
    }

    /// Newton–Raphson from zero with step halving.
    pub fn fit(&self, data: &BinomialData) -> Result<FitResult> {
        self.check(data)?;
        let constant = data.log_binomial_constant();
        let p = self.spec.num_params();
        let mut beta = DVector::zeros(p);
        let mut ll = self.kernel_loglik(data, &beta);
        let mut rel_change = 0.0;
        let result = |beta: &DVector<f64>, ll: f64, converged: bool, iterations: usize, max_gradient: f64| FitResult {
            spec: self.spec,
            coefficients: beta.iter().copied().collect(),
            log_likelihood: ll + constant,
            converged,
            iterations,
            max_gradient,
        };
        for iteration in 0..=MAX_ITERATIONS {
            let (grad, info) = self.score_and_information(data, &beta);
            let max_gradient = grad.amax();
            if max_gradient <= GRADIENT_TOLERANCE && rel_change <= LOGLIK_TOLERANCE {
                return Ok(result(&beta, ll, true, iteration, max_gradient));
            }
            if iteration == MAX_ITERATIONS || beta.amax() > SEPARATION_BOUND {
                return Err(Error::NonConvergence(Box::new(result(&beta, ll, false, iteration, max_gradient))));
            }
            let step = match info.clone().cholesky() {
                Some(chol) => chol.solve(&grad),
                None => info
                    .lu()
                    .solve(&grad)
                    .ok_or_else(|| Error::Numeric(format!("singular information matrix for {}", self.spec.kind)))?,
            };
            let mut scale = 1.0;
            let mut accepted = None;
            for _ in 0..=MAX_HALVINGS {
                let candidate = &beta + &step * scale;
                let cand_ll = self.kernel_loglik(data, &candidate);
                if cand_ll.is_finite() && cand_ll >= ll - LOGLIK_TOLERANCE * ll.abs().max(1.0) {
                    accepted = Some((candidate, cand_ll));
                    break;
                }
                scale *= 0.5;
            }
            let Some((next, next_ll)) = accepted else {
                return Err(Error::NonConvergence(Box::new(result(&beta, ll, false, iteration + 1, max_gradient))));
            };
            rel_change = (next_ll - ll).abs() / ll.abs().max(f64::MIN_POSITIVE);
            beta = next;
            ll = next_ll;
        }
        unreachable!("loop returns on its last iteration")
    }
}

pub fn fit_logit(data: &Table, spec: &ModelSpec) -> Result<FitResult> {
    LogitModel::new(*spec).fit(&BinomialData::from_table(data)?)
}

/// `2 (ℓ_alt − ℓ_null)` for nested fits, with rounding negatives clamped to zero.
pub fn lr_statistic(null: &FitResult, alt: &FitResult) -> Result<f64> {
    check_nesting(&null.spec, &alt.spec)?;
    let value = 2.0 * (alt.log_likelihood - null.log_likelihood);
    if value < -LR_NEGATIVE_SLACK {
        return Err(Error::Numeric(format!(
            "likelihood ratio {value} is negative for nested models"
        )));
    }
    Ok(value.max(0.0))
}

/// An LR value computed inside a chain; `flagged` marks fits that stopped
/// at their best iterate without converging.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LrValue {
    pub value: f64,
    pub flagged: bool,
}

/// Null/alternative model pair evaluated repeatedly over fiber tables.
#[derive(Clone, Debug)]
pub struct LrTest {
    null: LogitModel,
    alt: LogitModel,
}

impl LrTest {
    pub fn new(null: ModelSpec, alt: ModelSpec) -> Result<Self> {
        check_nesting(&null, &alt)?;
        Ok(LrTest {
            null: LogitModel::new(null),
            alt: LogitModel::new(alt),
        })
    }

    pub fn df(&self) -> usize {
        self.alt.spec.num_params() - self.null.spec.num_params()
    }

    pub fn null_spec(&self) -> &ModelSpec {
        &self.null.spec
    }

    pub fn alt_spec(&self) -> &ModelSpec {
        &self.alt.spec
    }

    pub fn evaluate(&self, table: &Table) -> Result<LrValue> {
        let data = BinomialData::from_table(table)?;
        let mut flagged = false;
        let mut fit = |model: &LogitModel| match model.fit(&data) {
            Ok(f) => Ok(f),
            Err(Error::NonConvergence(best)) => {
                flagged = true;
                Ok(*best)
            }
            Err(e) => Err(e),
        };
        let null = fit(&self.null)?;
        let alt = fit(&self.alt)?;
        let value = if flagged {
            (2.0 * (alt.log_likelihood - null.log_likelihood)).max(0.0)
        } else {
            lr_statistic(&null, &alt)?
        };
        Ok(LrValue { value, flagged })
    }
}

pub fn lr_over_fiber(null: &ModelSpec, alt: &ModelSpec, table: &Table) -> Result<LrValue> {
    LrTest::new(*null, *alt)?.evaluate(table)
}

const GAMMA_EPS: f64 = 1e-15;
const GAMMA_MAX_ITER: usize = 1000;

/// Regularized upper incomplete gamma `Q(a, x) = Γ(a, x) / Γ(a)`.
///
/// Series for `x < a + 1`, Lentz continued fraction otherwise.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0, "shape must be positive");
    if x <= 0.0 {
        return 1.0;
    }
    let log_prefix = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut term = 1.0 / a;
        let mut sum = term;
        for _ in 0..GAMMA_MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * GAMMA_EPS {
                break;
            }
        }
        (1.0 - sum * log_prefix.exp()).max(0.0)
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=GAMMA_MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < GAMMA_EPS {
                break;
            }
        }
        (log_prefix.exp() * h).min(1.0)
    }
}

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
pub fn chisq_upper_tail(x: f64, df: u32) -> f64 {
    assert!(df > 0, "degrees of freedom must be positive");
    gamma_q(df as f64 / 2.0, x.max(0.0) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(j: usize, k: usize, successes: &[Count], trials: &[Count]) -> Table {
        let mut counts = successes.to_vec();
        counts.extend(trials.iter().zip(successes).map(|(n, y)| n - y));
        Table::new(vec![2, j, k], counts).unwrap()
    }

    #[test]
    fn parameter_counts() {
        let count = |kind| ModelSpec::new(kind, 7, 8).num_params();
        assert_eq!(count(ModelKind::LinearBivariate), 3);
        assert_eq!(count(ModelKind::Anova), 14);
        assert_eq!(count(ModelKind::LinearJOnly), 2);
        assert_eq!(count(ModelKind::LinearKOnly), 2);
        assert_eq!(count(ModelKind::InterceptOnly), 1);
        let lin = ModelSpec::new(ModelKind::LinearBivariate, 7, 8);
        assert_eq!(lin.df_against(&ModelSpec::new(ModelKind::Anova, 7, 8)).unwrap(), 11);
        let lin = ModelSpec::new(ModelKind::LinearBivariate, 6, 2);
        assert_eq!(lin.df_against(&ModelSpec::new(ModelKind::Anova, 6, 2)).unwrap(), 4);
    }

    #[test]
    fn symmetric_data_fits_zero() {
        let x = table(3, 2, &[1, 2, 3, 1, 2, 5], &[2, 4, 6, 2, 4, 10]);
        let fit = fit_logit(&x, &ModelSpec::new(ModelKind::LinearBivariate, 3, 2)).unwrap();
        assert!(fit.converged);
        assert!(fit.coefficients.iter().all(|c| c.abs() < 1e-10));
    }

    #[test]
    fn zero_trials_rejected() {
        let x = table(2, 2, &[0, 1, 0, 1], &[0, 2, 3, 4]);
        assert!(matches!(
            fit_logit(&x, &ModelSpec::new(ModelKind::InterceptOnly, 2, 2)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn separation_is_reported_with_best_iterate() {
        let x = table(2, 2, &[0, 0, 3, 3], &[3, 3, 3, 3]);
        match fit_logit(&x, &ModelSpec::new(ModelKind::LinearJOnly, 2, 2)) {
            Err(Error::NonConvergence(best)) => {
                assert!(!best.converged);
                assert!(best.log_likelihood > -1e-2, "ll {}", best.log_likelihood);
                assert!(best.coefficients.iter().any(|c| c.abs() > SEPARATION_BOUND));
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
        let lr = lr_over_fiber(
            &ModelSpec::new(ModelKind::InterceptOnly, 2, 2),
            &ModelSpec::new(ModelKind::LinearJOnly, 2, 2),
            &x,
        )
        .unwrap();
        assert!(lr.flagged);
        // saturated separation: 2·(0 − 12·ln 2)
        assert!((lr.value - 24.0 * 2f64.ln()).abs() < 1e-2);
    }

    #[test]
    fn lr_identity_and_nesting() {
        let x = table(2, 2, &[1, 2, 0, 3], &[3, 4, 2, 5]);
        let spec = ModelSpec::new(ModelKind::LinearBivariate, 2, 2);
        let fit = fit_logit(&x, &spec).unwrap();
        assert_eq!(lr_statistic(&fit, &fit).unwrap(), 0.0);
        let anova = fit_logit(&x, &ModelSpec::new(ModelKind::Anova, 2, 2)).unwrap();
        assert!(lr_statistic(&fit, &anova).unwrap() >= 0.0);
        assert!(matches!(lr_statistic(&anova, &fit), Err(Error::Domain(_))));
        let j_only = ModelSpec::new(ModelKind::LinearJOnly, 2, 2);
        let k_only = ModelSpec::new(ModelKind::LinearKOnly, 2, 2);
        assert!(LrTest::new(j_only, k_only).is_err());
    }

    #[test]
    fn rounded_expectations_give_small_lr() {
        let (jn, kn) = (4, 3);
        let n = 1000;
        let mut succ = Vec::new();
        for j in 1..=jn {
            for k in 1..=kn {
                let eta = -1.0 + 0.3 * j as f64 - 0.2 * k as f64;
                succ.push((n as f64 * sigmoid(eta)).round() as Count);
            }
        }
        let x = table(jn, kn, &succ, &vec![n; jn * kn]);
        let lr = lr_over_fiber(
            &ModelSpec::new(ModelKind::LinearBivariate, jn, kn),
            &ModelSpec::new(ModelKind::Anova, jn, kn),
            &x,
        )
        .unwrap();
        assert!(!lr.flagged);
        assert!(lr.value < 0.05, "{}", lr.value);
    }

    #[test]
    fn layer_relabeling_keeps_lr() {
        let s = [1, 2, 0, 3, 4, 1];
        let n = [3, 4, 2, 5, 6, 4];
        let flipped: Vec<Count> = s.iter().zip(&n).map(|(a, b)| b - a).collect();
        let null = ModelSpec::new(ModelKind::LinearBivariate, 3, 2);
        let alt = ModelSpec::new(ModelKind::Anova, 3, 2);
        let a = lr_over_fiber(&null, &alt, &table(3, 2, &s, &n)).unwrap();
        let b = lr_over_fiber(&null, &alt, &table(3, 2, &flipped, &n)).unwrap();
        assert!((a.value - b.value).abs() < 1e-9);
        let fa = fit_logit(&table(3, 2, &s, &n), &null).unwrap();
        let fb = fit_logit(&table(3, 2, &flipped, &n), &null).unwrap();
        for (x, y) in fa.coefficients.iter().zip(&fb.coefficients) {
            assert!((x + y).abs() < 1e-8);
        }
    }

    #[test]
    fn chi_square_closed_forms() {
        use statrs::function::erf::erfc;
        for x in [0.01, 0.7, 3.0, 18.09, 22.56, 45.0] {
            // df = 1: erfc(sqrt(x / 2)); statrs erfc itself is good to about 1e-10
            let odd = erfc((x / 2.0f64).sqrt());
            assert!((chisq_upper_tail(x, 1) - odd).abs() < 1e-10, "df 1 at {x}");
            // even df: Poisson partial sums of e^{-x/2} (x/2)^i / i!
            for half in 1..=6u32 {
                let mut term = (-x / 2.0f64).exp();
                let mut sum = term;
                for i in 1..half {
                    term *= x / 2.0 / i as f64;
                    sum += term;
                }
                assert!((chisq_upper_tail(x, 2 * half) - sum).abs() < 1e-12, "df {} at {x}", 2 * half);
            }
        }
    }

    #[test]
    fn chi_square_reference_values() {
        // scipy.stats.chi2.sf
        let cases = [
            (18.09, 1, 2.1070513346984658e-05),
            (22.56, 1, 2.0368153227617452e-06),
            (13.07587, 11, 0.28839553199722306),
            (20.890335, 4, 0.00033292280506113726),
            (0.5, 3, 0.9188914116546758),
            (60.0, 7, 1.5095553022989154e-10),
        ];
        for (x, df, q) in cases {
            assert!((chisq_upper_tail(x, df) - q).abs() < 1e-10 * q.max(1e-3), "{x} {df}");
        }
        let mut last = 1.0;
        for i in 0..200 {
            let q = chisq_upper_tail(i as f64 * 0.25, 11);
            assert!(q <= last);
            last = q;
        }
    }

    #[test]
    fn chi_square_edges() {
        assert_eq!(chisq_upper_tail(0.0, 1), 1.0);
        assert_eq!(chisq_upper_tail(0.0, 11), 1.0);
        // df = 2 is an exponential tail
        for x in [0.1, 1.0, 5.0, 40.0] {
            assert!((chisq_upper_tail(x, 2) - (-x / 2.0).exp()).abs() < 1e-14);
        }
    }
}
