//! Generative oracle for the attribution model: simulate tests whose fail
//! probability is the product of their elements' fail probabilities, then
//! check the solver recovers the element ranking. The simulation and the
//! rank-correlation check are independent of the solver internals.

use std::collections::BTreeSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use syntaxprobe::sets::{
    lambda_grid, lambda_max, lasso_fit, lasso_objective, FailRateVector, LambdaChoice, LassoConfig,
};
use syntaxprobe::IncidenceMatrix;

const N_ELEMENTS: usize = 20;
const N_TESTS: usize = 200;
const ATTEMPTS: u32 = 1000;

struct Synthetic {
    matrix: IncidenceMatrix,
    rates: FailRateVector,
    true_log_probs: Vec<f64>,
}

/// Draw element fail probs in [0.05, 0.6], tests containing 1..=4 distinct
/// elements, and `ATTEMPTS` Bernoulli attempts per test with
/// P(fail) = product of contained element fail probs.
fn simulate(seed: u64) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probs: Vec<f64> = (0..N_ELEMENTS).map(|_| rng.gen_range(0.05..0.6)).collect();
    let element_ids: Vec<String> = (0..N_ELEMENTS).map(|j| format!("e{j:02}")).collect();

    let mut rows: Vec<BTreeSet<String>> = Vec::with_capacity(N_TESTS);
    let mut test_ids = Vec::with_capacity(N_TESTS);
    let mut fail_counts = Vec::with_capacity(N_TESTS);
    for i in 0..N_TESTS {
        let k = rng.gen_range(1..=4usize);
        let mut members = BTreeSet::new();
        while members.len() < k {
            members.insert(rng.gen_range(0..N_ELEMENTS));
        }
        let fail_prob: f64 = members.iter().map(|&j| probs[j]).product();
        let mut fails = 0u32;
        for _ in 0..ATTEMPTS {
            if rng.gen::<f64>() < fail_prob {
                fails += 1;
            }
        }
        rows.push(members.iter().map(|&j| element_ids[j].clone()).collect());
        test_ids.push(format!("t{i:03}"));
        fail_counts.push(fails);
    }

    let matrix = IncidenceMatrix::from_rows(test_ids.clone(), element_ids.clone(), &rows);
    // Columns of the matrix are the sorted union of OBSERVED elements; align
    // true probs to that column order.
    let true_log_probs: Vec<f64> = matrix
        .element_ids
        .iter()
        .map(|id| {
            let j: usize = id[1..].parse().unwrap();
            probs[j].ln()
        })
        .collect();

    let alpha = 0.5;
    let y: Vec<f64> = fail_counts
        .iter()
        .map(|&f| ((f64::from(f) + alpha) / (f64::from(ATTEMPTS) + 2.0 * alpha)).ln())
        .collect();
    let rates = FailRateVector {
        test_ids,
        y,
        attempts: vec![ATTEMPTS; N_TESTS],
        fail_counts,
    };
    Synthetic {
        matrix,
        rates,
        true_log_probs,
    }
}

/// Spearman rank correlation, implemented directly from ranks.
fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ra = ranks(a);
    let rb = ranks(b);
    pearson(&ra, &rb)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].partial_cmp(&v[j]).unwrap());
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va.sqrt() * vb.sqrt())
}

#[test]
fn solver_recovers_element_ranking_from_simulation() {
    let mut correlations = Vec::new();
    for seed in 0..5u64 {
        let sim = simulate(1000 + seed);
        let fit = lasso_fit(
            &sim.matrix,
            &sim.rates,
            &LassoConfig {
                lambda: LambdaChoice::Fixed(0.0),
                ..LassoConfig::default()
            },
        )
        .unwrap();
        correlations.push(spearman(&fit.x, &sim.true_log_probs));
    }
    correlations.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = correlations[correlations.len() / 2];
    assert!(median >= 0.9, "median spearman {median}, all {correlations:?}");
}

// Measured with this oracle: ranks 3 and 4 of twenty U[0.05, 0.6] draws are
// usually too close (ln-gap < 0.1) to separate at K=1000 attempts, so exact
// top-3 set recovery caps out near half the replications. The frozen
// assertions below are what the simulation supports: the recovered top 3
// always shares at least 2 elements with the truth, and full-set recovery
// happens in a solid fraction of runs.
#[test]
fn top_ranked_elements_overlap_true_worst_elements() {
    let mut exact = 0;
    let reps = 25;
    for seed in 0..reps {
        let sim = simulate(7000 + seed);
        let fit = lasso_fit(
            &sim.matrix,
            &sim.rates,
            &LassoConfig {
                lambda: LambdaChoice::Fixed(0.0),
                ..LassoConfig::default()
            },
        )
        .unwrap();
        let top3 = |v: &[f64]| -> BTreeSet<usize> {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&i, &j| v[j].partial_cmp(&v[i]).unwrap());
            idx.into_iter().take(3).collect()
        };
        let got = top3(&fit.x);
        let want = top3(&sim.true_log_probs);
        assert!(
            got.intersection(&want).count() >= 2,
            "seed {seed}: top-3 {got:?} vs true {want:?}"
        );
        if got == want {
            exact += 1;
        }
    }
    assert!(
        exact * 100 >= reps * 30,
        "exact top-3 in only {exact}/{reps} replications"
    );
}

#[test]
fn objective_is_non_increasing_across_sweeps() {
    for seed in 0..20u64 {
        let sim = simulate(3000 + seed);
        let a = sim.matrix.to_f64();
        let n_rows = sim.matrix.n_tests();
        let n_cols = sim.matrix.n_elements();
        let lambda = 0.05 * lambda_max(&a, n_rows, n_cols, &sim.rates.y);
        let mut previous = f64::INFINITY;
        for sweeps in 1..=8 {
            let fit = lasso_fit(
                &sim.matrix,
                &sim.rates,
                &LassoConfig {
                    lambda: LambdaChoice::Fixed(lambda),
                    max_iters: sweeps,
                    ..LassoConfig::default()
                },
            )
            .unwrap();
            let objective = lasso_objective(&a, n_rows, n_cols, &sim.rates.y, &fit.x, lambda);
            assert!(
                objective <= previous + 1e-12,
                "seed {seed}: objective rose {previous} -> {objective} at sweep {sweeps}"
            );
            previous = objective;
        }
    }
}

#[test]
fn l1_norm_shrinks_monotonically_in_lambda() {
    for seed in 0..10u64 {
        let sim = simulate(5000 + seed);
        let a = sim.matrix.to_f64();
        let lam_max = lambda_max(&a, sim.matrix.n_tests(), sim.matrix.n_elements(), &sim.rates.y);
        let mut previous_norm = f64::INFINITY;
        for lambda in lambda_grid(lam_max).into_iter().rev() {
            // ascending λ
            let fit = lasso_fit(
                &sim.matrix,
                &sim.rates,
                &LassoConfig {
                    lambda: LambdaChoice::Fixed(lambda),
                    ..LassoConfig::default()
                },
            )
            .unwrap();
            let norm: f64 = fit.x.iter().map(|v| v.abs()).sum();
            assert!(
                norm <= previous_norm + 1e-6,
                "seed {seed}: ‖x‖₁ grew from {previous_norm} to {norm} at λ={lambda}"
            );
            previous_norm = norm;
        }
    }
}

#[test]
fn lambda_at_or_above_max_gives_zero_vector() {
    for seed in 0..10u64 {
        let sim = simulate(9000 + seed);
        let a = sim.matrix.to_f64();
        let lam_max = lambda_max(&a, sim.matrix.n_tests(), sim.matrix.n_elements(), &sim.rates.y);
        let fit = lasso_fit(
            &sim.matrix,
            &sim.rates,
            &LassoConfig {
                lambda: LambdaChoice::Fixed(10.0 * lam_max),
                ..LassoConfig::default()
            },
        )
        .unwrap();
        assert!(fit.x.iter().all(|&v| v == 0.0), "seed {seed}: {:?}", fit.x);
    }
}

#[test]
fn auto_lambda_is_deterministic_given_seed() {
    let sim = simulate(4242);
    let cfg = LassoConfig {
        lambda: LambdaChoice::Auto,
        seed: 7,
        ..LassoConfig::default()
    };
    let fit1 = lasso_fit(&sim.matrix, &sim.rates, &cfg).unwrap();
    let fit2 = lasso_fit(&sim.matrix, &sim.rates, &cfg).unwrap();
    assert_eq!(fit1, fit2);
    assert!(fit1.lambda > 0.0);
}
