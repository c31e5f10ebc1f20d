//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any failed.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use graphon_sba::baselines::usvt;
use graphon_sba::harness::{results_csv, run_experiment_with_threads, summarize, Summary};
use graphon_sba::rng::{seeded, substream};
use graphon_sba::{
    cv_risk, estimate_distance, run_experiment, DistanceEstimator, sample_graphs, BinaryMatrix, Blocking, ExperimentConfig,
    Graphon, GraphSampleSet, NeighborhoodPolicy,
};

const FOUR_BLOCK: &str = r#"{"type":"blockmodel","probabilities":[[0.8,0.9,0.4,0.5],[0.1,0.6,0.3,0.2],[0.3,0.2,0.8,0.3],[0.4,0.1,0.2,0.9]]}"#;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// The distance estimate evaluated term by term, straight from its
/// definition, in plain floating point.
fn brute_force_distance(s: &GraphSampleSet, i: usize, j: usize) -> f64 {
    let n = s.n();
    let t = s.half();
    let g = s.observations();
    let tt = (t * t) as f64;
    // c^k_ab: column-slice product, r^k_ab: row-slice product.
    let c = |a: usize, b: usize, k: usize| {
        let first: f64 = (0..t).map(|t1| g[t1].get(k, a) as f64).sum();
        let second: f64 = (t..2 * t).map(|t2| g[t2].get(k, b) as f64).sum();
        first * second / tt
    };
    let r = |a: usize, b: usize, k: usize| {
        let first: f64 = (0..t).map(|t1| g[t1].get(a, k) as f64).sum();
        let second: f64 = (t..2 * t).map(|t2| g[t2].get(b, k) as f64).sum();
        first * second / tt
    };
    let mut total = 0.0;
    let mut count = 0usize;
    for k in (0..n).filter(|&k| k != i && k != j) {
        total += (r(i, i, k) - r(i, j, k) - r(j, i, k) + r(j, j, k)) + (c(i, i, k) - c(i, j, k) - c(j, i, k) + c(j, j, k));
        count += 1;
    }
    0.5 * (total / count as f64)
}

fn criterion_1() -> Outcome {
    let mut rng = seeded(101);
    let mut mismatches = 0;
    let mut asym = 0;
    let mut nonzero_diag = 0;
    for _ in 0..100 {
        let n = rng.gen_range(3..=8);
        let obs = if rng.gen_bool(0.5) { 2 } else { 4 };
        let density: f64 = rng.gen();
        let graphs: Vec<BinaryMatrix> = (0..obs)
            .map(|_| BinaryMatrix::from_fn(n, |_, _| rng.gen_bool(density)))
            .collect();
        let s = GraphSampleSet::new(graphs, None, true, None).unwrap();
        let est = DistanceEstimator::new(&s);
        for i in 0..n {
            let others: Vec<usize> = (0..n).filter(|&k| k != i).collect();
            if est.over_vertices(i, i, &others).unwrap() != 0.0 {
                nonzero_diag += 1;
            }
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d = estimate_distance(&s, i, j, NeighborhoodPolicy::Full, &mut rng).unwrap();
                if d.to_bits() != brute_force_distance(&s, i, j).to_bits() {
                    mismatches += 1;
                }
                let back = estimate_distance(&s, j, i, NeighborhoodPolicy::Full, &mut rng).unwrap();
                if d.to_bits() != back.to_bits() {
                    asym += 1;
                }
            }
        }
    }
    outcome(
        mismatches == 0 && asym == 0 && nonzero_diag == 0,
        format!("bit mismatches {mismatches}, asymmetric pairs {asym}, nonzero self-distances {nonzero_diag}"),
    )
}

/// Analytic slice distance between the first two blocks of the four-block
/// graphon, from its probability table.
fn four_block_oracle() -> f64 {
    let p = [
        [0.8, 0.9, 0.4, 0.5],
        [0.1, 0.6, 0.3, 0.2],
        [0.3, 0.2, 0.8, 0.3],
        [0.4, 0.1, 0.2, 0.9],
    ];
    let (a, b) = (0, 1);
    let rows: f64 = (0..4).map(|k| (p[a][k] - p[b][k]) * (p[a][k] - p[b][k]) / 4.0).sum();
    let cols: f64 = (0..4).map(|k| (p[k][a] - p[k][b]) * (p[k][a] - p[k][b]) / 4.0).sum();
    0.5 * (rows + cols)
}

fn criterion_2() -> Outcome {
    let g = Graphon::four_block_example();
    let oracle = four_block_oracle();
    let runs = 2000;
    let values: Vec<f64> = (0..runs)
        .map(|r| {
            let mut rng = substream(202, r as u64);
            let mut labels = vec![0.1, 0.3];
            labels.extend((0..98).map(|_| rng.gen::<f64>()));
            let s = sample_graphs(&g, &labels, 2, true, &mut rng).unwrap();
            estimate_distance(&s, 0, 1, NeighborhoodPolicy::Full, &mut rng).unwrap()
        })
        .collect();
    let mean = values.iter().sum::<f64>() / runs as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
    let se = (var / runs as f64).sqrt();
    let z = (mean - oracle) / se;
    outcome(
        z.abs() <= 3.0,
        format!("mean {mean:.5}, oracle {oracle:.5}, standard error {se:.5}, z {z:.2}"),
    )
}

fn sized(sizes: &[usize]) -> Blocking {
    let mut next = 0;
    let blocks: Vec<Vec<usize>> = sizes
        .iter()
        .map(|&s| {
            let b: Vec<usize> = (next..next + s).collect();
            next += s;
            b
        })
        .collect();
    Blocking {
        delta: 0.1,
        pivots: blocks.iter().map(|b| b[0]).collect(),
        blocks,
    }
}

fn criterion_3() -> Outcome {
    let mut bad = Vec::new();
    for n in [2usize, 10, 200] {
        let one = cv_risk(&sized(&[n]), n).unwrap();
        let all = cv_risk(&sized(&vec![1; n]), n).unwrap();
        if one != -1.0 || all != 1.0 {
            bad.push(format!("n={n}: K=1 -> {one}, K=n -> {all}"));
        }
    }
    outcome(bad.is_empty(), if bad.is_empty() { "exact for n in {2,10,200}".into() } else { bad.join("; ") })
}

fn config(json: &str) -> ExperimentConfig {
    let c = ExperimentConfig::from_json(json).unwrap();
    c.validate().unwrap();
    c
}

fn find<'a>(s: &'a [Summary], method: &str, pred: impl Fn(&Summary) -> bool) -> &'a Summary {
    s.iter().find(|x| x.method == method && pred(x)).expect("summary row present")
}

fn criterion_4() -> Outcome {
    let c = config(&format!(
        r#"{{"experiment":"grow_n","graphon":{FOUR_BLOCK},"n_values":[50,200],"trials":50,"methods":["sba"],"base_seed":1}}"#
    ));
    let s = summarize(&run_experiment(&c).unwrap());
    let small = find(&s, "sba", |x| x.n == 50);
    let large = find(&s, "sba", |x| x.n == 200);
    let k_ok = large.median_k == 4.0;
    let mae_ok = large.mean_mae < small.mean_mae;
    outcome(
        k_ok && mae_ok,
        format!(
            "median K at n=200 is {} (want 4: {}), mean MAE n=50 {:.4} > n=200 {:.4}: {}",
            large.median_k, k_ok, small.mean_mae, large.mean_mae, mae_ok
        ),
    )
}

fn criterion_5() -> Outcome {
    let c = config(&format!(
        r#"{{"experiment":"grow_t","graphon":{FOUR_BLOCK},"n_values":[200],"t_values":[1,2,4,8],"trials":50,"methods":["sba"],"base_seed":2}}"#
    ));
    let s = summarize(&run_experiment(&c).unwrap());
    let maes: Vec<f64> = [1, 2, 4, 8].iter().map(|&t| find(&s, "sba", |x| x.t == t).mean_mae).collect();
    let ok = maes.windows(2).all(|w| w[1] < w[0]);
    outcome(ok, format!("mean MAE over T=1,2,4,8: {}", fmt_list(&maes)))
}

fn criterion_6() -> Outcome {
    let c = config(
        r#"{"experiment":"grow_k","k_values":[2,4,8],"n_values":[200],"trials":50,"methods":["sba","usvt","lg"],"base_seed":3}"#,
    );
    let s = summarize(&run_experiment(&c).unwrap());
    let mut ok = true;
    let mut parts = Vec::new();
    for k in [2, 4, 8] {
        let at = |m: &str| find(&s, m, |x| x.k_true == Some(k)).mean_mae;
        let (sba, lg, usvt) = (at("sba"), at("lg"), at("usvt"));
        let good = sba <= lg && sba <= usvt;
        ok &= good;
        parts.push(format!("K={k}: sba {sba:.4} lg {lg:.4} usvt {usvt:.4}{}", if good { "" } else { " (violated)" }));
    }
    outcome(ok, parts.join("; "))
}

fn criterion_7() -> Outcome {
    let c = config(&format!(
        r#"{{"experiment":"missing_links","graphon":{FOUR_BLOCK},"n_values":[200],"xi_values":[0.0,0.2,0.4],"trials":50,"methods":["sba"],"base_seed":4}}"#
    ));
    let s = summarize(&run_experiment(&c).unwrap());
    let maes: Vec<f64> = [0.0, 0.2, 0.4].iter().map(|&xi| find(&s, "sba", |x| x.xi == xi).mean_mae).collect();
    let ok = maes.windows(2).all(|w| w[1] >= w[0]);
    outcome(ok, format!("mean MAE over xi=0,0.2,0.4: {}", fmt_list(&maes)))
}

fn criterion_8() -> Outcome {
    let run = |formula: &str, seed: u64| {
        let c = config(&format!(
            r#"{{"experiment":"continuous","graphon":{{"type":"formula","formula":"{formula}"}},"n_values":[200],"trials":50,"methods":["sba","usvt"],"base_seed":{seed}}}"#
        ));
        let s = summarize(&run_experiment(&c).unwrap());
        (find(&s, "sba", |_| true).mean_mae, find(&s, "usvt", |_| true).mean_mae)
    };
    let (sba1, usvt1) = run("w1_logistic", 5);
    let (sba2, usvt2) = run("w2_product", 6);
    outcome(
        sba1 < usvt1 && usvt2 < sba2,
        format!("w1: sba {sba1:.4} usvt {usvt1:.4}; w2: sba {sba2:.4} usvt {usvt2:.4}"),
    )
}

fn criterion_9() -> Outcome {
    // An SVD reconstruction is exact only up to rounding; allow 1e-12.
    let n = 100;
    let ones = usvt(&vec![vec![1.0; n]; n], 0.02).unwrap();
    let ones_dev = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (ones.get(i, j) - 1.0).abs()).fold(0.0, f64::max);
    let half = usvt(&vec![vec![0.5; n]; n], 0.02).unwrap();
    let half_dev = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (half.get(i, j) - 0.5).abs()).fold(0.0, f64::max);
    let (ones_ok, half_ok) = (ones_dev <= 1e-12, half_dev <= 1e-12);
    let n = 200;
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let mut rng = seeded(900 + seed);
        let a: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect())
            .collect();
        let est = usvt(&a, 0.01).unwrap();
        let mae = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (est.get(i, j) - 0.5).abs()).sum::<f64>()
            / (n * n) as f64;
        worst = worst.max(mae);
    }
    outcome(
        ones_ok && half_ok && worst < 0.1,
        format!("all-ones max deviation {ones_dev:.1e}, all-0.5 max deviation {half_dev:.1e}, worst noise MAE over 20 seeds {worst:.4}"),
    )
}

fn criterion_10() -> Outcome {
    let c = config(&format!(
        r#"{{"experiment":"grow_n","graphon":{FOUR_BLOCK},"n_values":[40,80],"trials":5,"methods":["sba","usvt","lg"],"xi_values":[0.0,0.3],"base_seed":10}}"#
    ));
    let a = results_csv(&run_experiment_with_threads(&c, 1).unwrap());
    let b = results_csv(&run_experiment_with_threads(&c, 4).unwrap());
    let k = config(r#"{"experiment":"grow_k","k_values":[3],"n_values":[60],"trials":5,"methods":["sba","usvt","lg"],"base_seed":10}"#);
    let c1 = results_csv(&run_experiment(&k).unwrap());
    let c2 = results_csv(&run_experiment(&k).unwrap());
    outcome(a == b && c1 == c2, format!("{} and {} bytes compared", a.len(), c1.len()))
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ")
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Duration); 10] = [
        ("distance estimator matches brute force", criterion_1, Duration::from_secs(10)),
        ("distance estimator is unbiased", criterion_2, Duration::from_secs(120)),
        ("cross-validation closed forms", criterion_3, Duration::from_secs(5)),
        ("block recovery and growing n", criterion_4, Duration::from_secs(600)),
        ("error falls with more observations", criterion_5, Duration::from_secs(600)),
        ("growing K against baselines", criterion_6, Duration::from_secs(900)),
        ("missing links", criterion_7, Duration::from_secs(600)),
        ("continuous graphons", criterion_8, Duration::from_secs(900)),
        ("USVT sanity", criterion_9, Duration::from_secs(60)),
        ("deterministic output", criterion_10, Duration::from_secs(5)),
    ];
    let mut failed = 0;
    for (idx, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        let pass = o.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {} ({}; {:.2}s of {}s)",
            idx + 1,
            if pass { "PASS" } else { "FAIL" },
            name,
            o.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
