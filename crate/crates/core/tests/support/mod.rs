//! Independent test oracles: brute-force enumerations and adaptive
//! quadrature that never touch the library's ROC-hull code path.
#![allow(dead_code)]

use proftree::evaluate::ProfitParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Beta, Continuous};

/// Every distinct threshold worth trying: each distinct score plus one
/// below the minimum (target everybody). Targeting is `score > t`.
pub fn candidate_thresholds(scores: &[f64]) -> Vec<f64> {
    let mut t: Vec<f64> = scores.to_vec();
    t.sort_by(f64::total_cmp);
    t.dedup();
    let below = t[0] - 1.0;
    t.insert(0, below);
    t
}

/// (fraction of churners targeted, fraction of non-churners targeted,
/// fraction of everyone targeted) for each candidate threshold, counted
/// instance by instance.
pub fn targeted_table(scores: &[f64], labels: &[u8]) -> Vec<(f64, f64, f64)> {
    let n = scores.len() as f64;
    let nc = labels.iter().filter(|&&y| y == 1).count() as f64;
    let nn = n - nc;
    candidate_thresholds(scores)
        .into_iter()
        .map(|t| {
            let mut c = 0.0;
            let mut m = 0.0;
            for (&s, &y) in scores.iter().zip(labels) {
                if s > t {
                    if y == 1 {
                        c += 1.0;
                    } else {
                        m += 1.0;
                    }
                }
            }
            let fc = if nc > 0.0 { c / nc } else { 0.0 };
            let fm = if nn > 0.0 { m / nn } else { 0.0 };
            (fc, fm, (c + m) / n)
        })
        .collect()
}

/// Literal churn profit for targeted fractions.
pub fn churn_profit_literal(p: &ProfitParams, pi_c: f64, eta_c: f64, eta_n: f64, gamma: f64) -> f64 {
    let delta = p.offer_cost / p.clv;
    let phi = p.contact_cost / p.clv;
    p.clv * (gamma * (1.0 - delta) - phi) * pi_c * eta_c - p.clv * (delta + phi) * (1.0 - pi_c) * eta_n
}

/// Best profit (targeting nobody allowed) and its targeted fraction at γ.
pub fn sweep_max(table: &[(f64, f64, f64)], p: &ProfitParams, pi_c: f64, gamma: f64) -> (f64, f64) {
    let mut best = (0.0, 0.0);
    for &(ec, en, eta) in table {
        let v = churn_profit_literal(p, pi_c, ec, en, gamma);
        if v > best.0 {
            best = (v, eta);
        }
    }
    best
}

/// Adaptive Simpson quadrature on [a, b].
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let panels = 64;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = lo + h;
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            recurse(
                f,
                lo,
                hi,
                fa,
                fm,
                fb,
                simpson(fa, fm, fb, lo, hi),
                tol / panels as f64,
                60,
            )
        })
        .sum()
}

/// EMPC and expected profit-maximizing fraction by γ-quadrature with an
/// exhaustive threshold sweep at every γ.
pub fn empc_quadrature(scores: &[f64], labels: &[u8], p: &ProfitParams) -> (f64, f64) {
    let n = scores.len() as f64;
    let pi_c = labels.iter().filter(|&&y| y == 1).count() as f64 / n;
    let table = targeted_table(scores, labels);
    let prior = Beta::new(p.alpha, p.beta).unwrap();
    let profit = |g: f64| sweep_max(&table, p, pi_c, g).0 * prior.pdf(g);
    let eta = |g: f64| sweep_max(&table, p, pi_c, g).1 * prior.pdf(g);
    (
        adaptive_simpson(&profit, 0.0, 1.0, 1e-10),
        adaptive_simpson(&eta, 0.0, 1.0, 1e-11),
    )
}

/// (concordant + ties / 2) / pairs by explicit pair enumeration.
pub fn auc_pairs(scores: &[f64], labels: &[u8]) -> f64 {
    let mut good = 0.0;
    let mut pairs = 0.0;
    for i in 0..scores.len() {
        if labels[i] != 1 {
            continue;
        }
        for j in 0..scores.len() {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                good += 1.0;
            } else if scores[i] == scores[j] {
                good += 0.5;
            }
        }
    }
    good / pairs
}

/// Minimum error rate by sweeping every candidate threshold.
pub fn mer_sweep(scores: &[f64], labels: &[u8]) -> f64 {
    candidate_thresholds(scores)
        .into_iter()
        .map(|t| {
            scores
                .iter()
                .zip(labels)
                .filter(|&(&s, &y)| (s > t) != (y == 1))
                .count()
        })
        .min()
        .unwrap() as f64
        / scores.len() as f64
}

/// Random sample with `n` rows, churn prior in [0.05, 0.6], scores on a
/// coarse grid so ties occur, and a mild signal.
pub fn random_sample(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<u8>) {
    let prior: f64 = rng.gen_range(0.05..0.6);
    let levels: u32 = rng.gen_range(2..60);
    loop {
        let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.gen::<f64>() < prior)).collect();
        if labels.iter().all(|&y| y == labels[0]) {
            continue;
        }
        let scores = labels
            .iter()
            .map(|&y| {
                let shift = if y == 1 { 0.15 } else { 0.0 };
                let raw: f64 = (rng.gen::<f64>() * 0.85 + shift).min(1.0);
                (raw * levels as f64).round() / levels as f64
            })
            .collect();
        return (scores, labels);
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Perfect classifier on `n` rows with `churners` churners.
pub fn perfect_sample(n: usize, churners: usize) -> (Vec<f64>, Vec<u8>) {
    let labels: Vec<u8> = (0..n).map(|i| u8::from(i < churners)).collect();
    let scores = labels.iter().map(|&y| if y == 1 { 0.9 } else { 0.1 }).collect();
    (scores, labels)
}

/// Churn rate per group value by a direct group-by over rows.
pub fn group_rates(keys: &[usize], labels: &[u8], groups: usize) -> Vec<(usize, usize)> {
    let mut out = vec![(0usize, 0usize); groups];
    for (&k, &y) in keys.iter().zip(labels) {
        out[k].0 += usize::from(y == 1);
        out[k].1 += 1;
    }
    out
}
