//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use rand::Rng;
use submatch::experiments::{generate_dataset, initialize, loss, loss_and_gradients, twin_experiment, TrainConfig};
use submatch::forge::{corrected_fixture, example1_fixture, forge_twin, verify_counterexample, ForgeTarget};
use submatch::linalg::{spans_equal, Matrix, SubspaceBasis};
use submatch::network::{apply_scaled_permutation, record_activations, Dataset, Layer, Network};
use submatch::repmatch::{compare_networks, exact_match};

const RANK_TOL: f64 = 1e-8;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);
/// Two spanning sets of integer vectors.
type SubspacePair = (Vec<Vec<i64>>, Vec<Vec<i64>>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(start: Instant, limit: Duration) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:?}, limit {limit:?}"))?;
    Ok(t)
}

fn max_abs_diff(m: &Matrix, expected: &[&[f64]]) -> f64 {
    let e = Matrix::from_rows(expected).unwrap();
    assert_eq!(m.shape(), e.shape());
    m.sub(&e).unwrap().max_abs()
}

/// 1. Printed fixture recomputation.
fn example1_recomputation() -> Outcome {
    let start = Instant::now();
    let f = example1_fixture();
    let ra = record_activations(&f.net_a, &f.data).map_err(|e| e.to_string())?;
    let rb = record_activations(&f.net_b, &f.data).map_err(|e| e.to_string())?;
    let checks = [
        ("net_a hidden", max_abs_diff(ra.post(1).unwrap(), &[&[1.0, 0.0], &[1.0, 0.0]])),
        ("net_b hidden", max_abs_diff(rb.post(1).unwrap(), &[&[1.0, 0.0], &[0.0, 1.0]])),
        ("net_a output", max_abs_diff(ra.post(2).unwrap(), &[&[0.0, 0.0], &[0.0, 0.0]])),
        ("net_b output", max_abs_diff(rb.post(2).unwrap(), &[&[1.0, -1.0], &[1.0, -1.0]])),
    ];
    for (name, dev) in checks {
        ensure(dev <= 1e-12, || format!("{name} deviates by {dev:e}"))?;
    }
    let t = within_time(start, Duration::from_secs(1))?;
    Ok(format!("activation matrices reproduced exactly ({t:?})"))
}

/// 2. Corrected fixture verdict.
fn corrected_fixture_verdict() -> Outcome {
    let start = Instant::now();
    let f = corrected_fixture();
    let v = verify_counterexample(&f.net_a, &f.net_b, &f.data, 1e-12, RANK_TOL).map_err(|e| e.to_string())?;
    let h = v.first_hidden().ok_or("no hidden layer")?;
    ensure(v.outputs_equal && v.max_output_deviation <= 1e-12, || {
        format!("output deviation {:e}", v.max_output_deviation)
    })?;
    ensure(!h.exact_match, || "hidden layers match".into())?;
    ensure(h.isomorphic && h.dims == (1, 1), || format!("hidden dims {:?}", h.dims))?;
    ensure(h.score <= 1e-9, || format!("hidden score {:e}", h.score))?;
    let t = within_time(start, Duration::from_secs(1))?;
    Ok(format!(
        "outputs equal (dev {:e}), hidden lines distinct and isomorphic, score {:e} ({t:?})",
        v.max_output_deviation, h.score
    ))
}

/// 3. Scaled-permutation twins compute the same function and match everywhere.
fn scaled_permutation_invariance() -> Outcome {
    let mut rng = common::rng(3);
    let trials = 25;
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let widths = common::random_widths(&mut rng, 6);
        let net = common::random_network(&mut rng, &widths);
        let mut twin = net.clone();
        for layer in 0..net.num_layers() - 1 {
            let w = widths[layer + 1];
            let perm = common::random_permutation(&mut rng, w);
            let scales: Vec<f64> = (0..w).map(|_| rng.random_range(0.1..10.0)).collect();
            twin = apply_scaled_permutation(&twin, layer, &perm, &scales).map_err(|e| e.to_string())?;
        }
        let data = common::random_dataset(&mut rng, widths[0], 10);
        for x in data.inputs() {
            let (a, b) = (net.forward(x).unwrap(), twin.forward(x).unwrap());
            for (p, q) in a.iter().zip(&b) {
                worst = worst.max((p - q).abs());
            }
        }
        ensure(worst <= 1e-9, || format!("trial {trial}: output deviation {worst:e}"))?;
        let report = compare_networks(&net, &twin, &data, RANK_TOL).map_err(|e| e.to_string())?;
        if let Some(l) = report.layers.iter().find(|l| !l.exact_match) {
            return Err(format!("trial {trial} ({widths:?}): layer {} not an exact match", l.layer_index));
        }
    }
    Ok(format!("{trials} random networks, max output deviation {worst:e}, all layers exact"))
}

/// Random hidden rows `relu(W a_j)` for a random `W`.
fn random_pattern(rng: &mut rand_chacha::ChaCha8Rng, data: &Dataset, rows: usize) -> Matrix {
    let w = common::gaussian_matrix(rng, rows, data.input_dim());
    let net = Network::new(vec![Layer::new(w, None, submatch::Activation::Relu).unwrap()]).unwrap();
    record_activations(&net, data).unwrap().post(1).unwrap().clone()
}

/// 4. Forged twins verify, and span differences are detected.
fn forge_round_trip() -> Outcome {
    let mut rng = common::rng(4);
    let trials = 30;
    let (mut differ, mut same, mut worst) = (0, 0, 0.0f64);
    for trial in 0..trials {
        let n = rng.random_range(2..=4);
        let d = rng.random_range(2..=6);
        let data = common::random_dataset(&mut rng, n, d);
        let h = d;
        let mut reference = common::random_network(&mut rng, &[n, h, 2]);
        if trial % 3 == 0 && h >= 2 {
            // rank-deficient reference: hidden neuron 1 duplicates neuron 0
            let mut w1 = reference.layers()[0].weights.to_rows();
            w1[1] = w1[0].iter().map(|v| 2.0 * v).collect();
            let w2 = reference.layers()[1].weights.clone();
            reference = Network::from_weights(vec![Matrix::from_rows(&w1).unwrap(), w2]).unwrap();
        }
        let ref_rec = record_activations(&reference, &data).unwrap();
        let ref_hidden = ref_rec.post(1).unwrap().to_rows();
        let outputs = ref_rec.post(2).unwrap().to_rows();

        let pattern = if trial % 3 == 1 {
            // same rows, permuted and positively rescaled
            let perm = common::random_permutation(&mut rng, h);
            let rows: Vec<Vec<f64>> = perm
                .iter()
                .map(|&p| {
                    let s = rng.random_range(0.5..3.0);
                    ref_hidden[p].iter().map(|v| s * v).collect()
                })
                .collect();
            Matrix::from_rows(&rows).unwrap()
        } else {
            // random realizable pattern whose span contains the reference outputs
            let mut found = None;
            for _ in 0..200 {
                let cand = random_pattern(&mut rng, &data, h);
                let rows = cand.to_rows();
                let with_outputs: Vec<Vec<f64>> = rows.iter().chain(&outputs).cloned().collect();
                if common::pivoted_gs_rank(&with_outputs, 1e-10) == common::pivoted_gs_rank(&rows, 1e-10) {
                    found = Some(cand);
                    break;
                }
            }
            found.ok_or_else(|| format!("trial {trial}: no feasible target sampled"))?
        };

        let target = ForgeTarget::new(pattern.clone()).map_err(|e| e.to_string())?;
        let twin = forge_twin(&data, &reference, &target, 1e-8).map_err(|e| format!("trial {trial}: {e}"))?;
        let v = verify_counterexample(&reference, &twin, &data, 1e-8, RANK_TOL).map_err(|e| e.to_string())?;
        worst = worst.max(v.max_output_deviation);
        ensure(v.outputs_equal, || format!("trial {trial}: deviation {:e}", v.max_output_deviation))?;

        let expected_same = common::oracle_same_span(&pattern.to_rows(), &ref_hidden, RANK_TOL);
        let got = v.first_hidden().unwrap().exact_match;
        ensure(got == expected_same, || {
            format!("trial {trial}: exact_match {got}, oracle says same span = {expected_same}")
        })?;
        if expected_same {
            same += 1;
        } else {
            differ += 1;
        }
    }
    ensure(differ > 0 && same > 0, || format!("battery degenerate: {differ} differing, {same} equal"))?;
    Ok(format!(
        "{trials} datasets, max deviation {worst:e}; {differ} differing spans detected, {same} equal spans confirmed"
    ))
}

/// Fixed battery of integer subspace pairs in ambient dimension <= 4.
fn subspace_battery() -> Vec<SubspacePair> {
    let mut cases: Vec<SubspacePair> = vec![
        (vec![vec![0, 0]], vec![vec![0, 0]]),
        (vec![vec![1, 0]], vec![vec![0, 0]]),
        (vec![vec![1, 0]], vec![vec![2, 0]]),
        (vec![vec![1, 0]], vec![vec![0, 1]]),
        (vec![vec![1, 0], vec![0, 1]], vec![vec![1, 1], vec![1, -1]]),
        (vec![vec![1, 1, 0]], vec![vec![1, 1, 1]]),
        (vec![vec![1, 2, 3], vec![2, 4, 6]], vec![vec![-1, -2, -3]]),
        (vec![vec![1, 0, 0], vec![0, 1, 0]], vec![vec![1, 1, 0], vec![1, -1, 0], vec![2, 0, 0]]),
        (vec![vec![1, 0, 0, 0], vec![0, 0, 1, 0]], vec![vec![1, 0, 1, 0], vec![1, 0, -1, 1]]),
        (vec![vec![1, 1, 1, 1]], vec![vec![1, 1, 1, 1], vec![0, 0, 0, 0]]),
    ];
    let mut rng = common::rng(5);
    while cases.len() < 50 {
        let n = rng.random_range(1..=4);
        let k = rng.random_range(1..=3);
        let u: Vec<Vec<i64>> = (0..k).map(|_| (0..n).map(|_| rng.random_range(-2..=2)).collect()).collect();
        let v: Vec<Vec<i64>> = if cases.len().is_multiple_of(2) {
            // integer combinations of u: often the same span, sometimes smaller
            let m = rng.random_range(1..=3);
            (0..m)
                .map(|_| {
                    let c: Vec<i64> = (0..k).map(|_| rng.random_range(-2..=2)).collect();
                    (0..n).map(|j| (0..k).map(|i| c[i] * u[i][j]).sum()).collect()
                })
                .collect()
        } else {
            let m = rng.random_range(1..=3);
            (0..m).map(|_| (0..n).map(|_| rng.random_range(-2..=2)).collect()).collect()
        };
        cases.push((u, v));
    }
    cases
}

/// 5. spans_equal / exact_match agree with exact Gram-determinant ranks.
fn linalg_oracle_equivalence() -> Outcome {
    let cases = subspace_battery();
    let (mut equal, mut unequal) = (0, 0);
    for (i, (u, v)) in cases.iter().enumerate() {
        let n = u[0].len();
        let both: Vec<Vec<i64>> = u.iter().chain(v).cloned().collect();
        let (ru, rv, ruv) = (common::gram_rank(u), common::gram_rank(v), common::gram_rank(&both));
        let oracle = ru == rv && ruv == ru;

        let to_f = |s: &[Vec<i64>]| s.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect::<Vec<Vec<f64>>>();
        let bu = SubspaceBasis::span_of(n, &to_f(u), RANK_TOL).map_err(|e| e.to_string())?;
        let bv = SubspaceBasis::span_of(n, &to_f(v), RANK_TOL).map_err(|e| e.to_string())?;
        ensure(bu.dim() == ru && bv.dim() == rv, || {
            format!("case {i}: dims ({}, {}) vs exact ranks ({ru}, {rv})", bu.dim(), bv.dim())
        })?;
        let se = spans_equal(&bu, &bv, RANK_TOL).map_err(|e| e.to_string())?;
        let em = exact_match(&bu, &bv, RANK_TOL).map_err(|e| e.to_string())?;
        ensure(se == oracle && em == oracle, || {
            format!("case {i}: spans_equal {se}, exact_match {em}, oracle {oracle} for {u:?} vs {v:?}")
        })?;
        if oracle {
            equal += 1;
        } else {
            unequal += 1;
        }
    }
    ensure(cases.len() == 50, || format!("battery has {} cases", cases.len()))?;
    Ok(format!("50 cases agree with the oracle ({equal} equal, {unequal} unequal)"))
}

/// 6. Analytic gradients vs central finite differences.
fn gradient_check() -> Outcome {
    let mut rng = common::rng(6);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for trial in 0..10 {
        let sizes = match trial % 3 {
            0 => vec![2, 4, 2],
            1 => vec![2, 3, 3, 2],
            _ => vec![3, 5, 2],
        };
        let cfg = TrainConfig::new(sizes.clone(), 0.1, 0, rng.random()).unwrap();
        let net = initialize(&cfg).unwrap();
        let n_weights: usize = net.layers().iter().map(|l| l.out_dim() * l.in_dim()).sum();
        ensure(n_weights <= 30, || format!("{n_weights} weights"))?;
        let inputs = (0..6).map(|_| common::gaussian_vec(&mut rng, sizes[0])).collect();
        let labels = (0..6).map(|i| i % 2).collect();
        let data = Dataset::new(inputs, Some(labels)).unwrap();

        let (_, grads) = loss_and_gradients(&net, &data).map_err(|e| e.to_string())?;
        for li in 0..net.num_layers() {
            let (rows, cols) = net.layers()[li].weights.shape();
            for r in 0..rows {
                for c in 0..cols {
                    let perturbed = |delta: f64| {
                        let mut layers = net.layers().to_vec();
                        let mut w = layers[li].weights.to_rows();
                        w[r][c] += delta;
                        layers[li].weights = Matrix::from_rows(&w).unwrap();
                        loss(&Network::new(layers).unwrap(), &data).unwrap()
                    };
                    let numeric = (perturbed(h) - perturbed(-h)) / (2.0 * h);
                    let analytic = grads[li].weights[(r, c)];
                    let denom = numeric.abs().max(analytic.abs());
                    let rel = if denom < 1e-10 { 0.0 } else { (numeric - analytic).abs() / denom };
                    worst = worst.max(rel);
                    checked += 1;
                    ensure(rel <= 1e-4, || {
                        format!("trial {trial} layer {li} ({r},{c}): analytic {analytic:e}, numeric {numeric:e}")
                    })?;
                }
            }
        }
    }
    Ok(format!("10 networks, {checked} weights, max relative error {worst:e}"))
}

/// 7. Hidden layers match less than the output layer across twin pairs.
fn phenomenon_reproduction() -> Outcome {
    let start = Instant::now();
    let data = generate_dataset(100, 0).map_err(|e| e.to_string())?;
    let config = TrainConfig::new(vec![2, 16, 16, 2], 0.1, 500, 0).unwrap();
    let pairs: Vec<(u64, u64)> = (0..5).map(|i| (2 * i + 1, 2 * i + 2)).collect();
    let summary = twin_experiment(&config, &data, &pairs, RANK_TOL).map_err(|e| e.to_string())?;
    let mut below = 0;
    let mut detail = Vec::new();
    for run in &summary.runs {
        ensure(run.scores[0] == 1.0, || format!("pair {:?}: layer-0 score {}", run.seeds, run.scores[0]))?;
        let (hid, out) = (run.mean_hidden_score(), run.output_score());
        if hid < out {
            below += 1;
        }
        detail.push(format!("{:?}: {hid:.3}/{out:.3}", run.seeds));
    }
    ensure(below >= 4, || format!("hidden < output in only {below}/5 pairs: {}", detail.join(", ")))?;
    let t = within_time(start, Duration::from_secs(120))?;
    Ok(format!("hidden < output in {below}/5 pairs [{}] ({t:?})", detail.join(", ")))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("AC1 printed fixture recomputation", example1_recomputation),
        ("AC2 corrected fixture verdict", corrected_fixture_verdict),
        ("AC3 scaled-permutation invariance", scaled_permutation_invariance),
        ("AC4 forge round-trip", forge_round_trip),
        ("AC5 span-equality oracle battery", linalg_oracle_equivalence),
        ("AC6 gradient check", gradient_check),
        ("AC7 layer-wise match decay", phenomenon_reproduction),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(msg) => println!("PASS  {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name}: {msg}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
