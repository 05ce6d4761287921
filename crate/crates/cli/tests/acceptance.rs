//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines always reach stdout.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use proftree::baseline::fit_greedy;
use proftree::data::{stratified_split, synth_churn};
use proftree::evaluate::{auc, churn_profit, empc, eta_measures, f1_score, mer, mpc, ProfitParams, ScoredSample};
use proftree::evolve::{evolve, evolve_with_observer, fitness, EvolveConfig};
use proftree::tree::{Tree, TreeConstraints};
use proftree::tune::{tune_lambda, LambdaGrid, REPLICATIONS};
use proftree_cli::run_from;
use rand::Rng;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn sample(scores: Vec<f64>, labels: Vec<u8>) -> ScoredSample {
    ScoredSample::new(scores, labels).unwrap()
}

fn empc_oracle() -> Outcome {
    let p = ProfitParams::default();
    let mut rng = support::rng(1);
    let start = Instant::now();
    let (mut worst_empc, mut worst_eta) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = rng.gen_range(10..=500);
        let (scores, labels) = support::random_sample(&mut rng, n);
        let (want, want_eta) = support::empc_quadrature(&scores, &labels, &p);
        let got = empc(&sample(scores, labels), &p).unwrap();
        worst_empc = worst_empc.max((got.empc - want).abs());
        worst_eta = worst_eta.max((got.eta_empc - want_eta).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = worst_empc <= 1e-6 && worst_eta <= 1e-6 && secs < 30.0;
    (
        ok,
        format!("max |ΔEMPC| {worst_empc:.2e}, max |Δη| {worst_eta:.2e}, {secs:.1} s"),
    )
}

fn anchors() -> Outcome {
    let p = ProfitParams::default();
    let (scores, labels) = support::perfect_sample(1000, 300);
    let s = sample(scores, labels);
    let m = mpc(&s, &p).mpc;
    let e = empc(&s, &p).unwrap().empc;
    let all = churn_profit(&s, f64::NEG_INFINITY, &p, 0.3);
    let all_oracle = support::churn_profit_literal(&p, 0.3, 1.0, 1.0, 0.3);
    let ok = (m - 16.8).abs() < 1e-9
        && (e - 16.8).abs() <= 0.01
        && (all - 9.1).abs() < 1e-9
        && (all_oracle - 9.1).abs() < 1e-9;
    (
        ok,
        format!("MPC {m:.10}, EMPC {e:.6}, target-all {all:.10} (oracle {all_oracle:.10})"),
    )
}

/// Random strictly increasing map on the distinct scores.
fn monotone_transform(scores: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    let mut distinct = scores.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut level = rng.gen_range(-5.0..5.0);
    let mapped: Vec<f64> = distinct
        .iter()
        .map(|_| {
            level += rng.gen_range(1e-3..3.0);
            level
        })
        .collect();
    scores
        .iter()
        .map(|v| mapped[distinct.binary_search_by(|d| d.total_cmp(v)).unwrap()])
        .collect()
}

fn rank_invariance() -> Outcome {
    let p = ProfitParams::default();
    let mut rng = support::rng(3);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.gen_range(20..=300);
        let (scores, labels) = support::random_sample(&mut rng, n);
        let measure = |sc: Vec<f64>| {
            let s = sample(sc, labels.clone());
            let e = empc(&s, &p).unwrap();
            let eta = eta_measures(&s, &p).unwrap();
            [
                e.empc,
                e.eta_empc,
                mpc(&s, &p).mpc,
                auc(&s).unwrap(),
                eta.eta_precision,
                eta.eta_recall,
                eta.eta_f1,
            ]
        };
        let base = measure(scores.clone());
        for _ in 0..20 {
            let moved = measure(monotone_transform(&scores, &mut rng));
            for (a, b) in base.iter().zip(&moved) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    (
        worst <= 1e-12,
        format!("400 transforms over 20 samples, max deviation {worst:.2e}"),
    )
}

fn auc_mer_oracles() -> Outcome {
    let mut rng = support::rng(4);
    let mut mismatches = 0;
    for _ in 0..100 {
        let n = rng.gen_range(2..=200);
        let (scores, labels) = support::random_sample(&mut rng, n);
        let (a, m) = (
            support::auc_pairs(&scores, &labels),
            support::mer_sweep(&scores, &labels),
        );
        let s = sample(scores, labels);
        if auc(&s).unwrap() != a || mer(&s) != m {
            mismatches += 1;
        }
    }
    (
        mismatches == 0,
        format!("{mismatches} of 100 samples differ from the pair-count / sweep oracles"),
    )
}

fn elitism_and_constraints() -> Outcome {
    let p = ProfitParams::default();
    let c = TreeConstraints::default();
    let mut bad_trace = 0;
    let mut bad_trees = 0;
    let mut generations = 0;
    for seed in 0..3u64 {
        let d = synth_churn(600, 0.3, 3, 2, 50 + seed).unwrap().dataset;
        let cfg = EvolveConfig {
            lambda: 0.05,
            seed,
            ..EvolveConfig::default()
        };
        let r = evolve_with_observer(&d, &p, &cfg, |_, pop, _| {
            generations += 1;
            bad_trees += pop.iter().filter(|t| !t.check_constraints(&d, &c).is_empty()).count();
        })
        .unwrap();
        if !r.trace.is_monotone() {
            bad_trace += 1;
        }
    }
    let ok = bad_trace == 0 && bad_trees == 0;
    (
        ok,
        format!("3 runs, {generations} generations, {bad_trace} non-monotone traces, {bad_trees} infeasible trees"),
    )
}

fn penalty_dominance() -> Outcome {
    let p = ProfitParams::default();
    let mut leaves = Vec::new();
    for (n, rate, seed) in [(200, 0.1, 1), (800, 0.3, 2), (500, 0.5, 3), (300, 0.8, 4)] {
        let d = synth_churn(n, rate, 3, 2, seed).unwrap().dataset;
        let cfg = EvolveConfig {
            lambda: 1000.0,
            seed,
            max_iterations: 1000,
            ..EvolveConfig::default()
        };
        leaves.push(evolve(&d, &p, &cfg).unwrap().best.leaf_count());
    }
    (leaves.iter().all(|&l| l == 1), format!("leaf counts {leaves:?}"))
}

fn planted_recovery() -> Outcome {
    let p = ProfitParams::default();
    let mut hits = 0;
    let mut details = Vec::new();
    let mut slowest = 0.0f64;
    for seed in 1..=5u64 {
        let s = synth_churn(2000, 0.3, 3, 2, seed).unwrap();
        let planted = s.oracle.fit_leaves(&s.dataset).unwrap();
        let oracle = fitness(&planted, &s.dataset, &p, 0.1).unwrap();
        let cfg = EvolveConfig {
            population_size: 100,
            lambda: 0.1,
            max_iterations: 2000,
            seed,
            ..EvolveConfig::default()
        };
        let start = Instant::now();
        let r = evolve(&s.dataset, &p, &cfg).unwrap();
        slowest = slowest.max(start.elapsed().as_secs_f64());
        let gap = oracle - r.best_fitness;
        hits += usize::from(gap <= 0.05);
        details.push(format!("{gap:+.4}"));
    }
    let ok = hits >= 4 && slowest < 300.0;
    (
        ok,
        format!(
            "{hits}/5 seeds within 0.05 (oracle minus best: {}), slowest {slowest:.1} s",
            details.join(" ")
        ),
    )
}

fn beats_greedy() -> Outcome {
    let p = ProfitParams::default();
    let lambda = 0.05;
    let d = synth_churn(2000, 0.3, 3, 2, 77).unwrap().dataset;
    let plan = stratified_split(&d, REPLICATIONS, 77).unwrap();
    let mut wins = 0;
    let mut fits = 0;
    let (mut test_pt, mut test_gr) = (0.0, 0.0);
    for (rep, k, train, test) in plan.evaluations() {
        let (train, test) = (d.subset(train), d.subset(test));
        let cfg = EvolveConfig {
            lambda,
            seed: (rep * 2 + k) as u64,
            ..EvolveConfig::default()
        };
        let pt = evolve(&train, &p, &cfg).unwrap().best;
        let gr = fit_greedy(&train, &cfg.constraints, 0.0).unwrap();
        let (fp, fg) = (
            fitness(&pt, &train, &p, lambda).unwrap(),
            fitness(&gr, &train, &p, lambda).unwrap(),
        );
        wins += usize::from(fp >= fg);
        fits += 1;
        let test_empc = |t: &Tree| {
            empc(&sample(t.score_dataset(&test), test.labels().to_vec()), &p)
                .unwrap()
                .empc
        };
        test_pt += test_empc(&pt);
        test_gr += test_empc(&gr);
    }
    let f = fits as f64;
    let ok = fits == 10 && wins >= 8;
    (
        ok,
        format!(
            "ProfTree fitness ≥ greedy in {wins}/{fits} fold-fits; test EMPC mean ProfTree {:.4}, greedy {:.4}",
            test_pt / f,
            test_gr / f
        ),
    )
}

fn eta_f1() -> Outcome {
    let f = f1_score(0.520, 0.949);
    ((f - 0.672).abs() <= 0.001, format!("F1(0.520, 0.949) = {f:.5}"))
}

fn train_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    run_from(["proftree", "synth", "--n", "800", "--seed", "5", "--out", out]).unwrap();
    let data = dir.path().join("synth.csv");
    let run = |jobs: &str| {
        let target = dir.path().join(format!("jobs{jobs}"));
        run_from([
            "proftree",
            "train",
            "--data",
            data.to_str().unwrap(),
            "--seed",
            "42",
            "--jobs",
            jobs,
            "--lambda",
            "0.05",
            "--out",
            target.to_str().unwrap(),
        ])
        .unwrap();
        (
            fs::read(target.join("tree.json")).unwrap(),
            fs::read(target.join("trace.csv")).unwrap(),
        )
    };
    let (a, b) = (run("1"), run("4"));
    let ok = a == b && !a.0.is_empty() && !a.1.is_empty();
    (
        ok,
        format!("tree.json equal: {}, trace.csv equal: {}", a.0 == b.0, a.1 == b.1),
    )
}

fn cv_plumbing() -> Outcome {
    let p = ProfitParams::default();
    let d = synth_churn(1000, 0.3, 3, 2, 11).unwrap().dataset;
    let grid = LambdaGrid::new(vec![0.01, 1000.0]).unwrap();
    let cfg = EvolveConfig {
        population_size: 50,
        min_iterations: 300,
        convergence_window: 50,
        seed: 11,
        ..EvolveConfig::default()
    };
    let r = tune_lambda(&d, &p, &grid, &cfg, 11).unwrap();
    let plan = stratified_split(&d, REPLICATIONS, 11).unwrap();
    let rate = d.churn_rate();
    let mut worst_excess = f64::NEG_INFINITY;
    for folds in &plan.assignments {
        let bound = 1.0 / folds.iter().map(Vec::len).min().unwrap() as f64;
        for f in folds {
            let fr = f.iter().filter(|&&i| d.labels()[i] == 1).count() as f64 / f.len() as f64;
            worst_excess = worst_excess.max((fr - rate).abs() - bound);
        }
    }
    let ok = r.lambda_opt == 0.01 && worst_excess <= 0.0 && plan.assignments.len() == REPLICATIONS;
    let means: Vec<String> = r
        .points
        .iter()
        .map(|pt| format!("{}: {:.4}", pt.lambda, pt.mean_empc.unwrap_or(f64::NAN)))
        .collect();
    (
        ok,
        format!(
            "λ_opt = {} ({}), stratification slack {:.4}",
            r.lambda_opt,
            means.join(", "),
            -worst_excess
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("EMPC matches γ-quadrature", empc_oracle),
        ("closed-form anchors", anchors),
        ("rank invariance", rank_invariance),
        ("AUC/MER oracles", auc_mer_oracles),
        ("elitism and constraints", elitism_and_constraints),
        ("penalty dominance", penalty_dominance),
        ("planted-structure recovery", planted_recovery),
        ("ProfTree vs greedy fitness", beats_greedy),
        ("η̄-F1 arithmetic", eta_f1),
        ("train determinism across workers", train_determinism),
        ("5×2 cv plumbing", cv_plumbing),
    ];
    // keep panics from one criterion out of the others' output
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(r) => r,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        failed += usize::from(!ok);
        let verdict = if ok { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {:>2} {name}: {detail} [{:.1} s]",
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
