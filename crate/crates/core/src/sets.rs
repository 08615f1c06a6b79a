//! Per-element failure attribution: empirical log fail rates per test,
//! Lasso regression on the tests-by-elements incidence relation, element
//! ranking, and the five-category roll-up.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{SuiteResult, Verdict};
use crate::extract::{ElementMapSet, IncidenceMatrix};
use crate::lang::Category;

/// Default Jeffreys-style smoothing for empirical fail rates.
pub const DEFAULT_SMOOTHING_ALPHA: f64 = 0.5;

#[derive(Debug, Error)]
pub enum SetsError {
    #[error("suite contains no results")]
    EmptySuite,
    #[error("matrix has {rows} rows but fail-rate vector has {len} entries")]
    DimensionMismatch { rows: usize, len: usize },
    #[error("test `{0}` appears in the corpus matrix but not in the run (or vice versa)")]
    CorpusRunMismatch(String),
    #[error("element `{0}` has no category in any loaded element map")]
    UnknownElement(String),
    #[error("incidence matrix has an all-zero row for test `{0}`")]
    AllZeroRow(String),
}

/// Smoothed empirical log fail rate per test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailRateVector {
    pub test_ids: Vec<String>,
    /// y_i = ln p̂_i, with p̂_i = (fail_i + α) / (K_i + 2α).
    pub y: Vec<f64>,
    pub attempts: Vec<u32>,
    pub fail_counts: Vec<u32>,
}

/// Aggregate suite outcomes into per-test smoothed log fail rates.
///
/// All records with the same case id pool into one test: K is the record
/// count, the fail count is the number of non-Pass verdicts.
pub fn empirical_fail_rates(
    suite: &SuiteResult,
    smoothing_alpha: f64,
) -> Result<FailRateVector, SetsError> {
    if suite.results.is_empty() {
        return Err(SetsError::EmptySuite);
    }
    let mut per_test: BTreeMap<String, (u32, u32)> = BTreeMap::new();
    for result in &suite.results {
        let entry = per_test.entry(result.record.case_id.clone()).or_insert((0, 0));
        entry.0 += 1;
        if result.verdict != Verdict::Pass {
            entry.1 += 1;
        }
    }
    let mut out = FailRateVector {
        test_ids: Vec::with_capacity(per_test.len()),
        y: Vec::with_capacity(per_test.len()),
        attempts: Vec::with_capacity(per_test.len()),
        fail_counts: Vec::with_capacity(per_test.len()),
    };
    for (id, (k, fails)) in per_test {
        let p = (f64::from(fails) + smoothing_alpha) / (f64::from(k) + 2.0 * smoothing_alpha);
        out.test_ids.push(id);
        out.y.push(p.ln());
        out.attempts.push(k);
        out.fail_counts.push(fails);
    }
    Ok(out)
}

/// Regularization choice: a fixed λ or seeded cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaChoice {
    Fixed(f64),
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoConfig {
    pub lambda: LambdaChoice,
    pub max_iters: usize,
    pub tol: f64,
    pub cv_folds: usize,
    pub seed: u64,
}

impl Default for LassoConfig {
    fn default() -> Self {
        LassoConfig {
            lambda: LambdaChoice::Auto,
            max_iters: 10_000,
            tol: 1e-8,
            cv_folds: 5,
            seed: 0,
        }
    }
}

/// Solver output. `x` is always populated, converged or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub x: Vec<f64>,
    pub lambda: f64,
    pub converged: bool,
    pub sweeps: usize,
}

/// Lasso objective `(1/2n)·‖y − Ax‖² + λ·‖x‖₁` on a row-major dense matrix.
pub fn lasso_objective(a: &[f64], n_rows: usize, n_cols: usize, y: &[f64], x: &[f64], lambda: f64) -> f64 {
    let mut sq = 0.0;
    for i in 0..n_rows {
        let mut pred = 0.0;
        for j in 0..n_cols {
            pred += a[i * n_cols + j] * x[j];
        }
        let r = y[i] - pred;
        sq += r * r;
    }
    sq / (2.0 * n_rows as f64) + lambda * x.iter().map(|v| v.abs()).sum::<f64>()
}

/// Cyclic coordinate descent with soft-thresholding, each coordinate clamped
/// to the non-positive half-line (log probabilities cannot exceed zero).
fn coordinate_descent(
    a: &[f64],
    n_rows: usize,
    n_cols: usize,
    y: &[f64],
    lambda: f64,
    max_iters: usize,
    tol: f64,
) -> (Vec<f64>, bool, usize) {
    let n = n_rows as f64;
    let mut x = vec![0.0f64; n_cols];
    // z_j = (1/n)·Σ_i A_ij²
    let mut z = vec![0.0f64; n_cols];
    for j in 0..n_cols {
        let mut s = 0.0;
        for i in 0..n_rows {
            let v = a[i * n_cols + j];
            s += v * v;
        }
        z[j] = s / n;
    }
    // residual r = y - Ax, with x = 0 initially
    let mut r: Vec<f64> = y.to_vec();

    for sweep in 1..=max_iters {
        let mut max_delta = 0.0f64;
        for j in 0..n_cols {
            if z[j] == 0.0 {
                continue;
            }
            let mut dot = 0.0;
            for i in 0..n_rows {
                dot += a[i * n_cols + j] * r[i];
            }
            let rho = dot / n + z[j] * x[j];
            let soft = rho.signum() * (rho.abs() - lambda).max(0.0);
            let new_x = (soft / z[j]).min(0.0);
            let delta = new_x - x[j];
            if delta != 0.0 {
                for i in 0..n_rows {
                    r[i] -= a[i * n_cols + j] * delta;
                }
                x[j] = new_x;
            }
            max_delta = max_delta.max(delta.abs());
        }
        if max_delta < tol {
            return (x, true, sweep);
        }
    }
    (x, false, max_iters)
}

/// `λ_max = max_j |Aᵀy|_j / n`: the smallest λ at which the all-zero fit is
/// stationary.
pub fn lambda_max(a: &[f64], n_rows: usize, n_cols: usize, y: &[f64]) -> f64 {
    let n = n_rows as f64;
    (0..n_cols)
        .map(|j| {
            let dot: f64 = (0..n_rows).map(|i| a[i * n_cols + j] * y[i]).sum();
            (dot / n).abs()
        })
        .fold(0.0, f64::max)
}

/// The λ grid used by cross-validation: `λ_max·10^(−k/4)` for k = 0..=12.
pub fn lambda_grid(lam_max: f64) -> Vec<f64> {
    (0..=12).map(|k| lam_max * 10f64.powf(-(k as f64) / 4.0)).collect()
}

/// Fit x in y = Ax by Lasso with the non-positivity constraint.
pub fn lasso_fit(
    matrix: &IncidenceMatrix,
    rates: &FailRateVector,
    config: &LassoConfig,
) -> Result<LassoFit, SetsError> {
    let n_rows = matrix.n_tests();
    let n_cols = matrix.n_elements();
    if rates.y.len() != n_rows {
        return Err(SetsError::DimensionMismatch {
            rows: n_rows,
            len: rates.y.len(),
        });
    }
    for i in 0..n_rows {
        if matrix.row_sum(i) == 0 {
            return Err(SetsError::AllZeroRow(matrix.test_ids[i].clone()));
        }
    }
    let a = matrix.to_f64();
    let lambda = match config.lambda {
        LambdaChoice::Fixed(v) => v,
        LambdaChoice::Auto => {
            select_lambda_cv(&a, n_rows, n_cols, &rates.y, config)
        }
    };
    let (x, converged, sweeps) =
        coordinate_descent(&a, n_rows, n_cols, &rates.y, lambda, config.max_iters, config.tol);
    Ok(LassoFit {
        x,
        lambda,
        converged,
        sweeps,
    })
}

/// Deterministic seeded K-fold cross-validation over the fixed λ grid.
/// Ties keep the earlier (larger-λ) grid entry.
fn select_lambda_cv(a: &[f64], n_rows: usize, n_cols: usize, y: &[f64], config: &LassoConfig) -> f64 {
    let folds = config.cv_folds.max(2).min(n_rows);
    let mut order: Vec<usize> = (0..n_rows).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    order.shuffle(&mut rng);

    let lam_max = lambda_max(a, n_rows, n_cols, y);
    let grid = lambda_grid(lam_max);
    let mut best = (f64::INFINITY, grid[0]);
    for &lambda in &grid {
        let mut total_se = 0.0;
        let mut total_n = 0usize;
        for fold in 0..folds {
            let val: Vec<usize> = order
                .iter()
                .copied()
                .enumerate()
                .filter(|(pos, _)| pos % folds == fold)
                .map(|(_, i)| i)
                .collect();
            let train: Vec<usize> = order
                .iter()
                .copied()
                .enumerate()
                .filter(|(pos, _)| pos % folds != fold)
                .map(|(_, i)| i)
                .collect();
            if train.is_empty() || val.is_empty() {
                continue;
            }
            let mut a_train = Vec::with_capacity(train.len() * n_cols);
            let mut y_train = Vec::with_capacity(train.len());
            for &i in &train {
                a_train.extend_from_slice(&a[i * n_cols..(i + 1) * n_cols]);
                y_train.push(y[i]);
            }
            let (x, _, _) = coordinate_descent(
                &a_train,
                train.len(),
                n_cols,
                &y_train,
                lambda,
                config.max_iters,
                config.tol,
            );
            for &i in &val {
                let mut pred = 0.0;
                for j in 0..n_cols {
                    pred += a[i * n_cols + j] * x[j];
                }
                let err = y[i] - pred;
                total_se += err * err;
                total_n += 1;
            }
        }
        let mse = if total_n == 0 { f64::INFINITY } else { total_se / total_n as f64 };
        if mse < best.0 {
            best = (mse, lambda);
        }
    }
    best.1
}

/// Estimated log fail rate of one syntax element, with rank and category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementScore {
    pub element: String,
    pub log_fail_rate: f64,
    pub fail_probability: f64,
    pub rank: usize,
    pub category: Category,
}

/// Sort elements worst-first (descending log fail rate; ties by id).
pub fn rank_elements(
    x: &[f64],
    element_ids: &[String],
    maps: &ElementMapSet,
) -> Result<Vec<ElementScore>, SetsError> {
    assert_eq!(x.len(), element_ids.len(), "score/element length mismatch");
    let mut scores: Vec<ElementScore> = x
        .iter()
        .zip(element_ids)
        .map(|(&xj, id)| {
            let category = maps
                .category_of(id)
                .ok_or_else(|| SetsError::UnknownElement(id.clone()))?;
            Ok(ElementScore {
                element: id.clone(),
                log_fail_rate: xj,
                fail_probability: xj.exp(),
                rank: 0,
                category,
            })
        })
        .collect::<Result<Vec<_>, SetsError>>()?;
    scores.sort_by(|a, b| {
        b.log_fail_rate
            .partial_cmp(&a.log_fail_rate)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.element.cmp(&b.element))
    });
    for (i, score) in scores.iter_mut().enumerate() {
        score.rank = i + 1;
    }
    Ok(scores)
}

/// Share of estimated failure mass per category:
/// `share(c) = Σ_{j∈c} exp(x_j) / Σ_j exp(x_j)`.
pub fn category_distribution(scores: &[ElementScore]) -> BTreeMap<Category, f64> {
    let total: f64 = scores.iter().map(|s| s.fail_probability).sum();
    let mut out = BTreeMap::new();
    if total == 0.0 {
        return out;
    }
    for score in scores {
        *out.entry(score.category).or_insert(0.0) += score.fail_probability / total;
    }
    out
}

/// The SETS report, serialized per the documented JSON schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetsReport {
    pub lambda: f64,
    pub converged: bool,
    pub scores: Vec<ElementScore>,
    pub category_distribution: BTreeMap<Category, f64>,
}

/// Full pipeline: align suite outcomes with matrix rows, fit, rank, roll up.
pub fn sets_report(
    matrix: &IncidenceMatrix,
    suite: &SuiteResult,
    maps: &ElementMapSet,
    config: &LassoConfig,
    smoothing_alpha: f64,
) -> Result<SetsReport, SetsError> {
    let rates = empirical_fail_rates(suite, smoothing_alpha)?;
    let aligned = align_rates(&rates, matrix)?;
    let fit = lasso_fit(matrix, &aligned, config)?;
    let scores = rank_elements(&fit.x, &matrix.element_ids, maps)?;
    let category_distribution = category_distribution(&scores);
    Ok(SetsReport {
        lambda: fit.lambda,
        converged: fit.converged,
        scores,
        category_distribution,
    })
}

/// Reorder a fail-rate vector to matrix row order; every matrix test must be
/// present in the run and vice versa.
pub fn align_rates(
    rates: &FailRateVector,
    matrix: &IncidenceMatrix,
) -> Result<FailRateVector, SetsError> {
    let index: BTreeMap<&str, usize> = rates
        .test_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    for id in &rates.test_ids {
        if !matrix.test_ids.contains(id) {
            return Err(SetsError::CorpusRunMismatch(id.clone()));
        }
    }
    let mut out = FailRateVector {
        test_ids: Vec::with_capacity(matrix.test_ids.len()),
        y: Vec::new(),
        attempts: Vec::new(),
        fail_counts: Vec::new(),
    };
    for id in &matrix.test_ids {
        let &i = index
            .get(id.as_str())
            .ok_or_else(|| SetsError::CorpusRunMismatch(id.clone()))?;
        out.test_ids.push(id.clone());
        out.y.push(rates.y[i]);
        out.attempts.push(rates.attempts[i]);
        out.fail_counts.push(rates.fail_counts[i]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::{CaseResult, Limits, RunMetadata, TranslationRecord};
    use crate::lang::Language;

    fn fake_result(case_id: &str, verdict: Verdict) -> CaseResult {
        CaseResult {
            record: TranslationRecord {
                case_id: case_id.into(),
                source_language: Language::Cpp,
                target_language: Language::Python,
                model_id: "m".into(),
                attempt: 0,
                translated_source: String::new(),
            },
            verdict,
            per_input: vec![],
            diagnostics: String::new(),
            wall_time_ms: 0,
        }
    }

    fn fake_suite(results: Vec<CaseResult>) -> SuiteResult {
        SuiteResult {
            metadata: RunMetadata {
                model_id: "m".into(),
                timestamp_unix_s: 0,
                toolchain_versions: BTreeMap::new(),
                limits: Limits::default(),
                parallelism: 1,
            },
            results,
        }
    }

    // Arithmetic frozen from the smoothing formula with α = 0.5:
    //   K=1 failed: p̂ = 1.5/2 = 0.75; K=1 passed: p̂ = 0.5/2 = 0.25;
    //   K=10, 5 fails: p̂ = 5.5/11 = 0.5.
    #[test]
    fn smoothed_rates_match_hand_computation() {
        let suite = fake_suite(vec![
            fake_result("a", Verdict::WrongOutput),
            fake_result("b", Verdict::Pass),
        ]);
        let rates = empirical_fail_rates(&suite, 0.5).unwrap();
        assert_eq!(rates.test_ids, vec!["a".to_string(), "b".to_string()]);
        assert!((rates.y[0] - 0.75f64.ln()).abs() < 1e-12);
        assert!((rates.y[1] - 0.25f64.ln()).abs() < 1e-12);

        let mut results = Vec::new();
        for i in 0..10 {
            results.push(fake_result(
                "c",
                if i < 5 { Verdict::Pass } else { Verdict::RuntimeError },
            ));
        }
        let rates = empirical_fail_rates(&fake_suite(results), 0.5).unwrap();
        assert_eq!(rates.attempts[0], 10);
        assert_eq!(rates.fail_counts[0], 5);
        assert!((rates.y[0] - 0.5f64.ln()).abs() < 1e-12);
    }

    fn identity_matrix(n: usize) -> IncidenceMatrix {
        let ids: Vec<String> = (0..n).map(|i| format!("t{i:02}")).collect();
        let els: Vec<String> = (0..n).map(|i| format!("e{i:02}")).collect();
        let rows: Vec<std::collections::BTreeSet<String>> = (0..n)
            .map(|i| [els[i].clone()].into_iter().collect())
            .collect();
        IncidenceMatrix::from_rows(ids, els, &rows)
    }

    fn rates_from_y(y: Vec<f64>, n: usize) -> FailRateVector {
        FailRateVector {
            test_ids: (0..n).map(|i| format!("t{i:02}")).collect(),
            attempts: vec![1; n],
            fail_counts: vec![0; n],
            y,
        }
    }

    #[test]
    fn identity_design_with_zero_lambda_recovers_y() {
        let n = 8;
        let y: Vec<f64> = (0..n).map(|i| -0.1 - 0.3 * i as f64).collect();
        let fit = lasso_fit(
            &identity_matrix(n),
            &rates_from_y(y.clone(), n),
            &LassoConfig {
                lambda: LambdaChoice::Fixed(0.0),
                ..LassoConfig::default()
            },
        )
        .unwrap();
        for (xj, yj) in fit.x.iter().zip(&y) {
            assert!((xj - yj).abs() < 1e-6, "{xj} vs {yj}");
        }
        assert!(fit.converged);
    }

    #[test]
    fn huge_lambda_fully_shrinks() {
        let n = 6;
        let y: Vec<f64> = (0..n).map(|i| -0.2 - 0.1 * i as f64).collect();
        let matrix = identity_matrix(n);
        let a = matrix.to_f64();
        let lam = 10.0 * lambda_max(&a, n, n, &y);
        let fit = lasso_fit(
            &matrix,
            &rates_from_y(y, n),
            &LassoConfig {
                lambda: LambdaChoice::Fixed(lam),
                ..LassoConfig::default()
            },
        )
        .unwrap();
        assert!(fit.x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn coordinates_never_positive() {
        // y with positive entries would pull x above zero without the clamp.
        let n = 4;
        let y = vec![0.5, -0.1, 0.2, -0.4];
        let fit = lasso_fit(
            &identity_matrix(n),
            &rates_from_y(y, n),
            &LassoConfig {
                lambda: LambdaChoice::Fixed(0.0),
                ..LassoConfig::default()
            },
        )
        .unwrap();
        assert!(fit.x.iter().all(|&v| v <= 0.0));
        assert_eq!(fit.x[1], -0.1);
        assert_eq!(fit.x[0], 0.0);
    }

    #[test]
    fn all_zero_row_rejected() {
        let matrix = IncidenceMatrix::from_rows(
            vec!["t0".into(), "t1".into()],
            vec!["e0".into()],
            &[
                ["e0".to_string()].into_iter().collect(),
                std::collections::BTreeSet::new(),
            ],
        );
        let err = lasso_fit(
            &matrix,
            &rates_from_y(vec![-0.5, -0.5], 2),
            &LassoConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, SetsError::AllZeroRow(_)));
    }

    #[test]
    fn ranking_sorts_descending_with_id_tiebreak() {
        let mut maps = ElementMapSet::default();
        let mut elements = BTreeMap::new();
        let mut categories = BTreeMap::new();
        for id in ["alpha", "beta", "gamma"] {
            elements.insert(id.to_string(), id.to_string());
            categories.insert(id.to_string(), Category::Operator);
        }
        maps.insert(
            crate::extract::ElementMap::from_parts(
                Language::Cpp,
                elements,
                categories,
                BTreeMap::new(),
            )
            .unwrap(),
        );
        let ids: Vec<String> = ["beta", "alpha", "gamma"].iter().map(|s| s.to_string()).collect();
        let scores = rank_elements(&[-2.3, -0.1, -0.1], &ids, &maps).unwrap();
        assert_eq!(scores[0].element, "alpha");
        assert_eq!(scores[0].rank, 1);
        assert_eq!(scores[1].element, "gamma");
        assert_eq!(scores[2].element, "beta");
    }

    #[test]
    fn category_shares_sum_to_one() {
        let scores = vec![
            ElementScore {
                element: "a".into(),
                log_fail_rate: -1.0,
                fail_probability: (-1.0f64).exp(),
                rank: 1,
                category: Category::Operator,
            },
            ElementScore {
                element: "b".into(),
                log_fail_rate: -1.0,
                fail_probability: (-1.0f64).exp(),
                rank: 2,
                category: Category::LoopBranch,
            },
        ];
        let dist = category_distribution(&scores);
        assert!((dist[&Category::Operator] - 0.5).abs() < 1e-9);
        assert!((dist[&Category::LoopBranch] - 0.5).abs() < 1e-9);
        let sum: f64 = dist.values().sum();
        assert!((sum - 1.0).abs() < 1e-9);

        let solo = vec![scores[0].clone()];
        let dist = category_distribution(&solo);
        assert!((dist[&Category::Operator] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn permutation_equivariance() {
        // permuting rows leaves x unchanged; permuting columns permutes x
        let test_ids: Vec<String> = (0..4).map(|i| format!("t{i}")).collect();
        let element_ids: Vec<String> = vec!["e0".into(), "e1".into()];
        let rows: Vec<std::collections::BTreeSet<String>> = vec![
            ["e0".to_string()].into_iter().collect(),
            ["e1".to_string()].into_iter().collect(),
            ["e0".to_string(), "e1".to_string()].into_iter().collect(),
            ["e1".to_string()].into_iter().collect(),
        ];
        let matrix = IncidenceMatrix::from_rows(test_ids.clone(), element_ids, &rows);
        let y = vec![-0.3, -0.9, -1.1, -0.8];
        let cfg = LassoConfig {
            lambda: LambdaChoice::Fixed(0.01),
            ..LassoConfig::default()
        };
        let base = lasso_fit(
            &matrix,
            &FailRateVector {
                test_ids: test_ids.clone(),
                y: y.clone(),
                attempts: vec![1; 4],
                fail_counts: vec![1; 4],
            },
            &cfg,
        )
        .unwrap();

        let perm = [2usize, 0, 3, 1];
        let p_rows: Vec<std::collections::BTreeSet<String>> =
            perm.iter().map(|&i| rows[i].clone()).collect();
        let p_ids: Vec<String> = perm.iter().map(|&i| test_ids[i].clone()).collect();
        let p_matrix = IncidenceMatrix::from_rows(p_ids.clone(), vec!["e0".into(), "e1".into()], &p_rows);
        let p_y: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        let permuted = lasso_fit(
            &p_matrix,
            &FailRateVector {
                test_ids: p_ids,
                y: p_y,
                attempts: vec![1; 4],
                fail_counts: vec![1; 4],
            },
            &cfg,
        )
        .unwrap();
        for (a, b) in base.x.iter().zip(&permuted.x) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
