//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p amr-cli --test acceptance`.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use amr_core::assistant::{
    answer_question, extractive_fallback, verify_citations, GenerationError, Generator,
    OnGenerationError, Verdict, POLICY_QUESTIONS, TOP_K,
};
use amr_core::data::{synthesize_dataset, Dataset, SynthConfig};
use amr_core::eval::{
    build_report, compute_metrics, improvement_vs_naive, mae, r2, rmse, EvalReport,
    RegionalEntry, RegionalTable,
};
use amr_core::features::{prepare, FeatureMatrix, SplitSpec, DEFAULT_SMOOTHING_K};
use amr_core::models::gbt::{fit_ensemble, GbtParams, SplitMode, TreeNode};
use amr_core::models::linear::fit_weights;
use amr_core::models::lstm::LstmNet;
use amr_core::models::{train_all, GbtGrid, LstmSpec, ZooConfig};
use amr_core::rag::{
    default_index, index_from_bytes, index_to_bytes, DocChunk, HashingEmbedder, VectorIndex,
};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, elapsed: Duration) -> Result<(), String> {
    ensure(elapsed <= limit, || {
        format!("took {elapsed:.2?}, limit {limit:.0?}")
    })
}

// 1. Published (naive, model) MAE pairs reproduce the published percentages.
fn c1_improvement_arithmetic() -> Outcome {
    let naive = 41.83;
    let cases = [(8.23, 80.3), (8.25, 80.3), (7.17, 82.9), (7.16, 82.9), (7.07, 83.1)];
    for (model, expected) in cases {
        let got = improvement_vs_naive(model, naive).map_err(|e| e.to_string())?;
        ensure(got == expected, || format!("MAE {model}: got {got}, expected {expected}"))?;
    }
    Ok("5/5 rows exact".into())
}

// 2. Observation-weighted regional MAE recombines to the overall MAE.
fn c2_regional_recombination() -> Outcome {
    let rows = [
        ("A", 4.16, 809usize),
        ("B", 7.30, 181),
        ("C", 8.70, 265),
        ("D", 9.00, 709),
        ("E", 10.14, 161),
    ];
    let table = RegionalTable {
        entries: rows
            .iter()
            .map(|&(r, mae, n)| RegionalEntry {
                region: r.into(),
                mae,
                n_observations: n,
            })
            .collect(),
        excluded: Vec::new(),
    };
    let got = table.weighted_mae().ok_or("no observations")?;
    let n: usize = rows.iter().map(|r| r.2).sum();
    let oracle = rows.iter().map(|r| r.1 * r.2 as f64).sum::<f64>() / n as f64;
    ensure(n == 2125, || format!("n = {n}"))?;
    ensure((got - oracle).abs() < 1e-12, || format!("{got} vs oracle {oracle}"))?;
    ensure((7.00..=7.12).contains(&got), || format!("weighted MAE {got}"))?;
    Ok(format!("weighted MAE {got:.4} over n={n}"))
}

// 3. Lag importance and improvement over naive on the default synthetic data.
fn c3_synthetic_reproduction() -> Outcome {
    let started = Instant::now();
    let config = SynthConfig {
        n_countries: 44,
        pairs_per_country: 10,
        first_year: 2021,
        last_year: 2023,
        ar_noise_sd: 5.0,
        ..SynthConfig::default()
    };
    let dataset = synthesize_dataset(&config, 7).map_err(|e| e.to_string())?;
    let data = prepare(&dataset, &SplitSpec::default(), DEFAULT_SMOOTHING_K).map_err(|e| e.to_string())?;
    let models = train_all(&data, &ZooConfig::default()).map_err(|e| e.to_string())?;
    let eval = build_report(&models, &data, "1970-01-01T00:00:00Z".into()).map_err(|e| e.to_string())?;
    let report = &eval.report;
    let top = report.importance.first().ok_or("no importances")?;
    ensure(top.feature == "Resistance_lag1", || format!("top feature is {}", top.feature))?;
    ensure(top.importance > 0.40, || format!("lag importance {}", top.importance))?;
    let naive = report.model("naive").ok_or("no naive row")?.mae;
    let best = report.best();
    let gain = 1.0 - best.mae / naive;
    ensure(gain >= 0.30, || format!("best {} beats naive by {:.1}%", best.model, 100.0 * gain))?;
    within(Duration::from_secs(60), started.elapsed())?;
    Ok(format!(
        "lag importance {:.3} ({}), best {} MAE {:.2} vs naive {:.2} ({:.1}% better), {:.1?}",
        top.importance,
        report.importance_model,
        best.model,
        best.mae,
        naive,
        100.0 * gain,
        started.elapsed()
    ))
}

/// Integer-valued targets whose mean is an integer, so every gradient sum
/// is exact whatever the summation order.
fn exact_instance(rng: &mut ChaCha8Rng, n: usize, distinct: u32) -> FeatureMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..2)
                .map(|_| f64::from(rng.random_range(0..distinct)) * 0.5 - 3.0)
                .collect()
        })
        .collect();
    let mut y: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..=100u32))).collect();
    let rem = y.iter().sum::<f64>() as i64 % n as i64;
    // Move the remainder onto targets that can absorb it.
    let mut left = rem;
    for v in y.iter_mut() {
        let take = left.min(*v as i64);
        *v -= take as f64;
        left -= take;
    }
    assert_eq!(left, 0);
    FeatureMatrix::from_rows(&["a", "b"], &rows, y)
}

struct OracleSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
    left: f64,
    right: f64,
    root: f64,
}

/// Every (feature, threshold between adjacent distinct values) pair, scored
/// by summing gradients of the rows on each side directly.
fn brute_force_stump(x: &FeatureMatrix, lambda: f64, gamma: f64) -> OracleSplit {
    let y = x.target();
    let n = y.len();
    let base = y.iter().sum::<f64>() / n as f64;
    let g: Vec<f64> = y.iter().map(|t| base - t).collect();
    let total: f64 = g.iter().sum();
    let root = -total / (n as f64 + lambda);
    let score = |gs: f64, hs: f64| gs * gs / (hs + lambda);
    let mut best = OracleSplit {
        feature: usize::MAX,
        threshold: f64::NAN,
        gain: 0.0,
        left: root,
        right: root,
        root,
    };
    for f in 0..x.n_cols() {
        let mut values = x.column(f);
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let (mut gl, mut hl, mut gr, mut hr) = (0.0, 0.0, 0.0, 0.0);
            for i in 0..n {
                if x.get(i, f) < t {
                    gl += g[i];
                    hl += 1.0;
                } else {
                    gr += g[i];
                    hr += 1.0;
                }
            }
            let gain = 0.5 * (score(gl, hl) + score(gr, hr) - score(total, n as f64)) - gamma;
            if gain > best.gain {
                best = OracleSplit {
                    feature: f,
                    threshold: t,
                    gain,
                    left: -gl / (hl + lambda),
                    right: -gr / (hr + lambda),
                    root,
                };
            }
        }
    }
    best
}

// 4. Depth-1, one-round boosting equals the exhaustive split search.
fn c4_gbt_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut splits = 0;
    for case in 0..50 {
        let n = rng.random_range(2..=64);
        let distinct = rng.random_range(1..=12);
        let x = exact_instance(&mut rng, n, distinct);
        let params = GbtParams {
            learning_rate: 1.0,
            max_depth: 1,
            n_estimators: 1,
            subsample_ratio: 1.0,
            reg_lambda: 1.0,
            gamma: 0.0,
            ..GbtParams::default()
        };
        let ens = fit_ensemble(&x, &params, SplitMode::Exact).map_err(|e| e.to_string())?;
        let oracle = brute_force_stump(&x, params.reg_lambda, params.gamma);
        let nodes = &ens.trees[0].nodes;
        match (nodes[0], oracle.feature) {
            (TreeNode::Leaf { weight }, usize::MAX) => {
                ensure(weight == oracle.root, || format!("case {case}: leaf {weight} vs {}", oracle.root))?;
            }
            (TreeNode::Split { feature, threshold, gain, left, right }, f) => {
                splits += 1;
                ensure(feature == f && threshold == oracle.threshold && gain == oracle.gain, || {
                    format!(
                        "case {case}: split ({feature}, {threshold}, {gain}) vs oracle ({f}, {}, {})",
                        oracle.threshold, oracle.gain
                    )
                })?;
                let (TreeNode::Leaf { weight: wl }, TreeNode::Leaf { weight: wr }) = (nodes[left], nodes[right]) else {
                    return Err(format!("case {case}: children are not leaves"));
                };
                ensure(wl == oracle.left && wr == oracle.right, || {
                    format!("case {case}: leaves ({wl}, {wr}) vs ({}, {})", oracle.left, oracle.right)
                })?;
            }
            (TreeNode::Leaf { .. }, f) => return Err(format!("case {case}: no split, oracle splits on {f}")),
        }
        // Prediction is base plus the leaf weight.
        for i in 0..x.n_rows() {
            let row = x.row(i);
            let base = x.target().iter().sum::<f64>() / n as f64;
            let leaf = if oracle.feature == usize::MAX {
                oracle.root
            } else if row[oracle.feature] < oracle.threshold {
                oracle.left
            } else {
                oracle.right
            };
            ensure(ens.predict_row(row) == base + leaf, || format!("case {case}: prediction differs"))?;
        }
    }
    within(Duration::from_secs(10), started.elapsed())?;
    Ok(format!("50/50 instances exact ({splits} split, {} leaf-only)", 50 - splits))
}

// 5. Histogram and exact splitters agree when every value has its own bin.
fn c5_histogram_equivalence() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..20 {
        let n = rng.random_range(20..=300);
        let p = rng.random_range(1..=6);
        let distinct = rng.random_range(2..=40u32);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| f64::from(rng.random_range(0..distinct)) * 1.7).collect())
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().sum::<f64>() + rng.random_range(-5.0..5.0))
            .collect();
        let names: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let x = FeatureMatrix::from_rows(&names, &rows, y);
        let params = GbtParams {
            learning_rate: rng.random_range(0.05..0.5),
            max_depth: rng.random_range(1..=5),
            n_estimators: rng.random_range(1..=30),
            subsample_ratio: if rng.random_bool(0.5) { 1.0 } else { 0.8 },
            n_bins: distinct as usize + rng.random_range(0..4),
            seed: case,
            ..GbtParams::default()
        };
        let exact = fit_ensemble(&x, &params, SplitMode::Exact).map_err(|e| e.to_string())?;
        let hist = fit_ensemble(&x, &params, SplitMode::Histogram).map_err(|e| e.to_string())?;
        for i in 0..n {
            let (a, b) = (exact.predict_row(x.row(i)), hist.predict_row(x.row(i)));
            ensure(a.to_bits() == b.to_bits(), || format!("case {case} row {i}: {a} vs {b}"))?;
        }
    }
    within(Duration::from_secs(10), started.elapsed())?;
    Ok("20/20 instances bit-identical".into())
}

// 6. Analytic LSTM gradients against central differences.
fn c6_lstm_gradient() -> Outcome {
    let started = Instant::now();
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let (d, h) = (8, 32);
        let mut net = LstmNet::new(d, h, &mut rng);
        // A nonzero state exercises the recurrent and forget-gate paths.
        let (h0, c0): (Vec<f64>, Vec<f64>) = if seed % 2 == 0 {
            (vec![0.0; h], vec![0.0; h])
        } else {
            (
                (0..h).map(|_| rng.random_range(-0.5..0.5)).collect(),
                (0..h).map(|_| rng.random_range(-0.5..0.5)).collect(),
            )
        };
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..d).map(|_| rng.random_range(-1.5..1.5)).collect())
            .collect();
        let xs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let ys: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, analytic) = net.loss_and_grad(&xs, &ys, &h0, &c0);
        // Loss recomputed from forward passes only.
        let loss = |net: &LstmNet| {
            xs.iter()
                .zip(&ys)
                .map(|(x, y)| (net.forward(x, &h0, &c0) - y).powi(2))
                .sum::<f64>()
                / xs.len() as f64
        };
        for k in 0..net.params.len() {
            let orig = net.params[k];
            net.params[k] = orig + eps;
            let up = loss(&net);
            net.params[k] = orig - eps;
            let down = loss(&net);
            net.params[k] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let a = analytic[k];
            let denom = a.abs().max(numeric.abs()).max(1e-6);
            let rel = if a == numeric { 0.0 } else { (a - numeric).abs() / denom };
            worst = worst.max(rel);
        }
    }
    ensure(worst < 1e-4, || format!("max relative error {worst:.3e}"))?;
    within(Duration::from_secs(30), started.elapsed())?;
    Ok(format!("max relative error {worst:.2e} over 10 seeds"))
}

/// OLS with an explicit intercept column, solved by Gaussian elimination
/// with partial pivoting on the normal equations.
fn ols_oracle(x: &FeatureMatrix) -> (f64, Vec<f64>) {
    let (n, p) = (x.n_rows(), x.n_cols());
    let m = p + 1;
    let design = |i: usize, j: usize| if j == 0 { 1.0 } else { x.get(i, j - 1) };
    let mut a = vec![vec![0.0; m + 1]; m];
    for (r, row) in a.iter_mut().enumerate() {
        for c in 0..m {
            row[c] = (0..n).map(|i| design(i, r) * design(i, c)).sum();
        }
        row[m] = (0..n).map(|i| design(i, r) * x.target()[i]).sum();
    }
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for r in 0..m {
            if r != col {
                let factor = a[r][col] / a[col][col];
                for c in col..=m {
                    a[r][c] -= factor * a[col][c];
                }
            }
        }
    }
    let beta: Vec<f64> = (0..m).map(|r| a[r][m] / a[r][r]).collect();
    (beta[0], beta[1..].to_vec())
}

// 7. Ridge tends to OLS as the penalty vanishes and to zero as it explodes.
fn c7_ridge_limits() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_ols: f64 = 0.0;
    let mut worst_big: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.random_range(30..200);
        let p = rng.random_range(1..=8);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let w_true: Vec<f64> = (0..p).map(|_| rng.random_range(-3.0..3.0)).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 5.0 + r.iter().zip(&w_true).map(|(a, b)| a * b).sum::<f64>() + rng.random_range(-1.0..1.0))
            .collect();
        let names: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let x = FeatureMatrix::from_rows(&names, &rows, y);
        let idx: Vec<usize> = (0..n).collect();
        let (b0, w_ols) = ols_oracle(&x);
        for lambda in [0.0, 1e-12] {
            let fit = fit_weights(&x, &idx, lambda).map_err(|e| e.to_string())?;
            for (a, b) in fit.weights.iter().zip(&w_ols) {
                worst_ols = worst_ols.max((a - b).abs());
            }
            worst_ols = worst_ols.max((fit.intercept - b0).abs());
        }
        let big = fit_weights(&x, &idx, 1e12).map_err(|e| e.to_string())?;
        for w in &big.weights {
            worst_big = worst_big.max(w.abs());
        }
    }
    ensure(worst_ols <= 1e-8, || format!("max |w - w_ols| = {worst_ols:e}"))?;
    ensure(worst_big < 1e-6, || format!("max |w| at 1e12 = {worst_big:e}"))?;
    within(Duration::from_secs(5), started.elapsed())?;
    Ok(format!("max |w - w_ols| {worst_ols:.1e}; max |w| at 1e12 {worst_big:.1e}"))
}

// 8. Metric identities.
fn c8_metric_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for t in 0..1000 {
        let n = rng.random_range(1..60);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..100.0)).collect();
        let yhat: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..100.0)).collect();
        let (m, r) = (mae(&y, &yhat).unwrap(), rmse(&y, &yhat).unwrap());
        ensure(r >= m, || format!("vector {t}: rmse {r} < mae {m}"))?;
    }
    for t in 0..100 {
        let n = rng.random_range(2..60);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..100.0)).collect();
        let mean = y.iter().sum::<f64>() / n as f64;
        let value = r2(&y, &vec![mean; n]).unwrap().ok_or("R² undefined")?;
        ensure(value.abs() <= 1e-12, || format!("vector {t}: mean-predictor R² {value:e}"))?;
    }
    let m = compute_metrics(&[0.0, 10.0], &[5.0, 5.0]).map_err(|e| e.to_string())?;
    ensure(m.mae == 5.0 && m.rmse == 5.0 && m.r2 == Some(0.0), || format!("hand case {m:?}"))?;
    Ok("1000 vectors RMSE >= MAE; mean-predictor R² = 0; hand case (5, 5, 0)".into())
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

// 9. Index top-3 equals an exhaustive scan, and survives save/load.
fn c9_retrieval_exactness() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut total_chunks = 0;
    for corpus in 0..100 {
        let n = if corpus == 0 { 1000 } else { rng.random_range(1..=1000) };
        let dim = *[4usize, 16, 64, 384].choose(&mut rng).unwrap();
        let mut ids: Vec<u64> = (0..n as u64).map(|i| i * 3 + 1).collect();
        ids.shuffle(&mut rng);
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(n);
        for i in 0..n {
            // Repeat earlier vectors so ties occur.
            if i > 0 && rng.random_bool(0.2) {
                let j = rng.random_range(0..i);
                vectors.push(vectors[j].clone());
            } else {
                vectors.push(random_unit(&mut rng, dim));
            }
        }
        let mut index = VectorIndex::new("test-vectors", dim);
        for (i, v) in vectors.iter().enumerate() {
            let chunk = DocChunk {
                id: ids[i],
                label: format!("L{}", ids[i]),
                source_title: "t".into(),
                text: format!("chunk {i}"),
            };
            index.insert(chunk, v.clone()).map_err(|e| e.to_string())?;
        }
        let reloaded = index_from_bytes(&index_to_bytes(&index)).map_err(|e| e.to_string())?;
        for q in 0..5 {
            let query = if q == 0 { vectors[rng.random_range(0..n)].clone() } else { random_unit(&mut rng, dim) };
            let mut scan: Vec<(f64, u64)> = vectors
                .iter()
                .zip(&ids)
                .map(|(v, &id)| {
                    let mut s = 0.0;
                    for k in 0..dim {
                        s += query[k] * v[k];
                    }
                    (s, id)
                })
                .collect();
            scan.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
            scan.truncate(TOP_K);
            let hits = index.query_vector(&query, TOP_K).map_err(|e| e.to_string())?;
            let got: Vec<(f64, u64)> = hits.iter().map(|h| (h.score, h.id)).collect();
            ensure(got == scan, || format!("corpus {corpus} query {q}: {got:?} vs {scan:?}"))?;
            let again = reloaded.query_vector(&query, TOP_K).map_err(|e| e.to_string())?;
            ensure(
                hits.len() == again.len()
                    && hits.iter().zip(&again).all(|(a, b)| a.id == b.id && a.score.to_bits() == b.score.to_bits()),
                || format!("corpus {corpus} query {q}: reloaded ranking differs"),
            )?;
        }
        total_chunks += n;
    }
    within(Duration::from_secs(30), started.elapsed())?;
    Ok(format!("100 corpora ({total_chunks} chunks), 500 queries, save/load bit-identical"))
}

/// Returns the same text for every prompt.
struct Fixed(String);

impl Generator for Fixed {
    fn generate(&self, _prompt: &str) -> Result<String, GenerationError> {
        Ok(self.0.clone())
    }
}

fn small_report() -> Result<EvalReport, String> {
    let config = SynthConfig {
        n_countries: 12,
        pairs_per_country: 4,
        ..SynthConfig::default()
    };
    let dataset = synthesize_dataset(&config, 3).map_err(|e| e.to_string())?;
    let data = prepare(&dataset, &SplitSpec::default(), DEFAULT_SMOOTHING_K).map_err(|e| e.to_string())?;
    let zoo = ZooConfig {
        gbt_grid: GbtGrid {
            learning_rates: vec![0.1],
            max_depths: vec![3],
            n_estimators: vec![20],
            subsample_ratios: vec![1.0],
            ..GbtGrid::default()
        },
        lstm: LstmSpec {
            max_epochs: 5,
            ..LstmSpec::default()
        },
        ..ZooConfig::default()
    };
    let models = train_all(&data, &zoo).map_err(|e| e.to_string())?;
    Ok(build_report(&models, &data, "1970-01-01T00:00:00Z".into()).map_err(|e| e.to_string())?.report)
}

const WORDS: [&str; 16] = [
    "carbapenem", "stewardship", "Southeast", "Asia", "surveillance", "Access", "Watch",
    "Reserve", "income", "forecast", "resistance", "laboratory", "Africa", "treatment",
    "ESKAPE", "priority",
];

// 10. Citation verdicts under adversarial generators; the fallback is always
// accepted.
fn c10_grounding_soundness() -> Outcome {
    let started = Instant::now();
    let report = small_report()?;
    let index = default_index().map_err(|e| e.to_string())?;
    let all_labels: Vec<String> = index.entries().iter().map(|e| e.chunk.label.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut tally = BTreeMap::new();
    for trial in 0..100 {
        let question = if trial < POLICY_QUESTIONS.len() {
            POLICY_QUESTIONS[trial].to_string()
        } else {
            (0..rng.random_range(2..8))
                .map(|_| *WORDS.choose(&mut rng).unwrap())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let hits = index.query(&question, TOP_K, &HashingEmbedder).map_err(|e| e.to_string())?;
        let retrieved: Vec<String> = hits.iter().map(|h| h.label.clone()).collect();

        // Fabricated: labels near the retrieved ones but not among them, or
        // real corpus labels that were not retrieved.
        let real = &retrieved[rng.random_range(0..retrieved.len())];
        let fake = match rng.random_range(0..5) {
            0 => format!("{real}0"),
            1 => real.to_lowercase(),
            2 => format!("{real}-X"),
            3 => "WHO-2024".to_string(),
            _ => all_labels
                .iter()
                .find(|l| !retrieved.contains(l))
                .cloned()
                .unwrap_or_else(|| "NOT-RETRIEVED".into()),
        };
        let fabricated = format!("Prioritise carbapenems [Source: {real}] and Reserve agents [Source: {fake}].");
        let uncited = "Countries should preserve Reserve antibiotics. (Source: AWARE-1) Source: AWARE-1 [AWARE-1]".to_string();
        let valid = retrieved
            .iter()
            .map(|l| format!("A claim drawn from this excerpt [Source: {l}]."))
            .collect::<Vec<_>>()
            .join(" ");

        for (kind, text) in [("fabricated", fabricated), ("uncited", uncited), ("valid", valid)] {
            let (_, direct) = verify_citations(&text, &retrieved);
            let answer = answer_question(
                &question,
                &index,
                &HashingEmbedder,
                &report,
                Some(&Fixed(text)),
                OnGenerationError::Fail,
            )
            .map_err(|e| e.to_string())?;
            let ok = match kind {
                "fabricated" => {
                    matches!(&direct, Verdict::Rejected(bad) if bad == &vec![fake.clone()])
                        && answer.verdict == "Rejected"
                        && answer.rejected_labels == vec![fake.clone()]
                        && answer.attempts == 2
                }
                "uncited" => direct == Verdict::Uncited && answer.verdict == "Uncited",
                _ => direct == Verdict::Accepted && answer.verdict == "Accepted",
            };
            ensure(ok, || format!("trial {trial} {kind}: direct {direct:?}, answer {}", answer.verdict))?;
            *tally.entry(kind).or_insert(0) += 1;
        }

        let fallback = extractive_fallback(&hits, &index).map_err(|e| e.to_string())?;
        let (_, verdict) = verify_citations(&fallback, &retrieved);
        let answer = answer_question(&question, &index, &HashingEmbedder, &report, None, OnGenerationError::Fail)
            .map_err(|e| e.to_string())?;
        ensure(verdict == Verdict::Accepted && answer.verdict == "Accepted", || {
            format!("trial {trial}: fallback verdict {verdict:?}")
        })?;
        *tally.entry("fallback").or_insert(0) += 1;
    }
    Ok(format!(
        "Rejected {}/100, Uncited {}/100, Accepted {}/100, fallback Accepted {}/100 ({:.1?})",
        tally["fabricated"],
        tally["uncited"],
        tally["valid"],
        tally["fallback"],
        started.elapsed()
    ))
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_amr"))
        .current_dir(dir)
        .args(args)
        .env_remove("AMR_LLM_URL")
        .env_remove("AMR_LLM_MODEL")
        .output()
        .map_err(|e| format!("spawn: {e}"))?;
    if !out.status.success() {
        return Err(format!(
            "`amr {}` exited with {}: {}",
            args.join(" "),
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

// 11. The CLI pipeline end to end without a generation endpoint.
fn c11_end_to_end() -> Outcome {
    let started = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    std::fs::write(
        dir.path().join("amr.json"),
        r#"{"data": {"csv": "data.csv"}, "artifacts_dir": "artifacts"}"#,
    )
    .map_err(|e| e.to_string())?;
    run_cli(dir.path(), &["synth", "--seed", "7", "--out", "data.csv"])?;
    for cmd in ["train", "evaluate", "index"] {
        run_cli(dir.path(), &[cmd])?;
    }
    let stdout = run_cli(dir.path(), &["eval-rag"])?;

    let report: serde_json::Value = serde_json::from_slice(
        &std::fs::read(dir.path().join("artifacts/report.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let rows = report["models"].as_array().map_or(0, Vec::len);
    ensure(rows == 6, || format!("{rows} model rows"))?;

    let answers: Vec<serde_json::Value> = serde_json::from_str(&stdout).map_err(|e| e.to_string())?;
    ensure(answers.len() == 5, || format!("{} answers", answers.len()))?;
    for (i, a) in answers.iter().enumerate() {
        let retrieved: Vec<&str> = a["retrieved"]
            .as_array()
            .map(|r| r.iter().filter_map(|s| s["label"].as_str()).collect())
            .unwrap_or_default();
        let cited: Vec<&str> = a["cited_labels"]
            .as_array()
            .map(|r| r.iter().filter_map(|s| s.as_str()).collect())
            .unwrap_or_default();
        ensure(a["mode"] == "Extractive", || format!("answer {i} mode {}", a["mode"]))?;
        ensure(retrieved.len() <= 3 && cited.len() <= 3, || format!("answer {i}: too many labels"))?;
        ensure(!cited.is_empty() && cited.iter().all(|c| retrieved.contains(c)), || {
            format!("answer {i} cites {cited:?} outside {retrieved:?}")
        })?;
    }
    within(Duration::from_secs(300), started.elapsed())?;
    Ok(format!("exit 0 at every step, 6 model rows, 5 Extractive answers, {:.1?}", started.elapsed()))
}

fn bits_equal<T: serde::Serialize>(a: &T, b: &T) -> bool {
    // Shortest round-trip float formatting is injective, so equal text means
    // equal bits.
    serde_json::to_string(a).unwrap() == serde_json::to_string(b).unwrap()
}

// 12. Test-year targets never reach the fitted encoder or imputation.
fn c12_leakage_guard() -> Outcome {
    let dataset = synthesize_dataset(&SynthConfig::default(), 7).map_err(|e| e.to_string())?;
    let spec = SplitSpec::default();
    let base = prepare(&dataset, &spec, DEFAULT_SMOOTHING_K).map_err(|e| e.to_string())?;
    let test_rows: Vec<usize> = dataset
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.year == 2023)
        .map(|(i, _)| i)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut checked = 0;
    for trial in 0..60 {
        let mut rows = dataset.rows.clone();
        let targets: Vec<usize> = if trial == 0 {
            test_rows.clone()
        } else {
            (0..rng.random_range(1..5)).map(|_| *test_rows.choose(&mut rng).unwrap()).collect()
        };
        for &i in &targets {
            rows[i].resistance_pct = match rng.random_range(0..3) {
                0 => None,
                1 => Some(0.0),
                _ => Some(rng.random_range(0.0..=100.0)),
            };
        }
        let mutated = Dataset::new(rows, dataset.provenance, dataset.generator_seed).map_err(|e| e.to_string())?;
        let prepared = prepare(&mutated, &spec, DEFAULT_SMOOTHING_K).map_err(|e| e.to_string())?;
        ensure(bits_equal(&prepared.fitted.encoder, &base.fitted.encoder), || {
            format!("trial {trial}: encoder changed")
        })?;
        ensure(bits_equal(&prepared.fitted.imputation, &base.fitted.imputation), || {
            format!("trial {trial}: imputation changed")
        })?;
        ensure(prepared.train.matrix.values() == base.train.matrix.values(), || {
            format!("trial {trial}: training matrix changed")
        })?;
        checked += 1;
    }
    Ok(format!("{checked} mutations of 2023 targets, fitted state bit-identical"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("improvement vs naive arithmetic", c1_improvement_arithmetic),
        ("regional MAE recombination", c2_regional_recombination),
        ("synthetic importance and improvement", c3_synthetic_reproduction),
        ("GBT brute-force oracle", c4_gbt_oracle),
        ("histogram/exact equivalence", c5_histogram_equivalence),
        ("LSTM gradient check", c6_lstm_gradient),
        ("ridge limits", c7_ridge_limits),
        ("metric identities", c8_metric_identities),
        ("retrieval exactness", c9_retrieval_exactness),
        ("grounding soundness", c10_grounding_soundness),
        ("end-to-end CLI", c11_end_to_end),
        ("leakage guard", c12_leakage_guard),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let number = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| f == &number.to_string()) {
            continue;
        }
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {number:>2} PASS  {name}: {detail} [{:.2?}]", started.elapsed()),
            Err(why) => {
                failed += 1;
                println!("criterion {number:>2} FAIL  {name}: {why} [{:.2?}]", started.elapsed());
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
