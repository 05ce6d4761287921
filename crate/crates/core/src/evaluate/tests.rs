use super::*;

#[path = "../../tests/support/mod.rs"]
mod support;

use proptest::prelude::*;

fn sample(scores: Vec<f64>, labels: Vec<u8>) -> ScoredSample {
    ScoredSample::new(scores, labels).unwrap()
}

fn perfect(n: usize, churners: usize) -> ScoredSample {
    let (s, y) = support::perfect_sample(n, churners);
    sample(s, y)
}

fn constant(n: usize, churners: usize) -> ScoredSample {
    let labels: Vec<u8> = (0..n).map(|i| u8::from(i < churners)).collect();
    sample(vec![0.42; n], labels)
}

#[test]
fn churn_profit_target_nobody_and_everybody() {
    let s = constant(100, 30);
    let p = ProfitParams::default();
    assert_eq!(churn_profit(&s, 1.0, &p, 0.3), 0.0);
    // 0.3·200·0.28 − 0.7·200·0.055 = 16.8 − 7.7
    assert!((churn_profit(&s, 0.0, &p, 0.3) - 9.1).abs() < 1e-12);
}

#[test]
fn churn_profit_perfect_separation() {
    let s = perfect(100, 30);
    let p = ProfitParams::default();
    assert!((churn_profit(&s, 0.5, &p, 0.3) - 16.8).abs() < 1e-12);
}

#[test]
fn mpc_anchors() {
    let p = ProfitParams::default();
    let m = mpc(&perfect(1000, 300), &p);
    assert!((m.mpc - 16.8).abs() < 1e-12);
    assert!((m.eta_mpc - 0.3).abs() < 1e-15);
    assert_eq!(m.t_opt, 0.1);

    let m = mpc(&constant(1000, 300), &p);
    assert!((m.mpc - 9.1).abs() < 1e-12);
    assert_eq!(m.eta_mpc, 1.0);
    assert!(m.t_opt < 0.42);

    let m = mpc(&constant(50, 0), &p);
    assert_eq!((m.mpc, m.eta_mpc), (0.0, 0.0));
}

#[test]
fn empc_anchors() {
    let p = ProfitParams::default();
    // Frozen from an independent scipy quadrature of the perfect-classifier
    // profit 0.3·200·((1−δ)γ − φ) over γ > φ/(1−δ).
    let e = empc(&perfect(1000, 300), &p).unwrap();
    assert!((e.empc - 16.800_000_000_023_47).abs() < 1e-9, "{}", e.empc);
    assert!((e.eta_empc - 0.299_999_999_836_857).abs() < 1e-12, "{}", e.eta_empc);

    // Constant scorer: target everybody for γ above the break-even 0.140351...
    let e = empc(&constant(1000, 300), &p).unwrap();
    assert!((e.empc - 9.158_217_457_313_896).abs() < 1e-9, "{}", e.empc);
    assert!((e.eta_empc - 0.959_491_948_736_420_7).abs() < 1e-12, "{}", e.eta_empc);

    let e = empc(&constant(40, 0), &p).unwrap();
    assert_eq!((e.empc, e.eta_empc), (0.0, 0.0));
}

#[test]
fn empc_matches_quadrature_on_random_samples() {
    let p = ProfitParams::default();
    let mut rng = support::rng(99);
    for _ in 0..10 {
        let (scores, labels) = support::random_sample(&mut rng, 50);
        let (want, want_eta) = support::empc_quadrature(&scores, &labels, &p);
        let got = empc(&sample(scores, labels), &p).unwrap();
        assert!((got.empc - want).abs() < 1e-6, "{} vs {want}", got.empc);
        assert!((got.eta_empc - want_eta).abs() < 1e-6, "{} vs {want_eta}", got.eta_empc);
    }
}

#[test]
fn empc_approaches_mpc_as_prior_concentrates() {
    let mut rng = support::rng(5);
    for _ in 0..5 {
        let (scores, labels) = support::random_sample(&mut rng, 200);
        let s = sample(scores, labels);
        let mut gaps = Vec::new();
        for k in [1e2, 1e3, 1e4, 1e5] {
            let p = ProfitParams {
                alpha: 0.3 * k,
                beta: 0.7 * k,
                gamma_point: Some(0.3),
                ..ProfitParams::default()
            };
            gaps.push((empc(&s, &p).unwrap().empc - mpc(&s, &p).mpc).abs());
        }
        assert!(gaps[3] <= 0.01, "{gaps:?}");
    }
}

#[test]
fn threshold_metrics_basics() {
    let s = perfect(10, 4);
    let m = threshold_metrics(&s, 0.5);
    assert_eq!((m.accuracy, m.error_rate), (1.0, 0.0));
    assert_eq!(m.recall, Some(1.0));
    assert_eq!(m.precision, Some(1.0));

    let m = threshold_metrics(&s, 1.0);
    assert_eq!(m.accuracy, 0.6);
    assert_eq!(m.precision, Some(0.6));

    // nothing predicted class 0
    let m = threshold_metrics(&s, 0.0);
    assert_eq!(m.precision, None);
    assert_eq!(m.recall, Some(0.0));
    assert_eq!(m.f1, Some(0.0));
}

#[test]
fn threshold_metrics_match_confusion_count() {
    let mut rng = support::rng(17);
    let (scores, labels) = support::random_sample(&mut rng, 50);
    let s = sample(scores.clone(), labels.clone());
    let m = threshold_metrics(&s, 0.5);
    let mut cm = [[0usize; 2]; 2]; // [actual][predicted]
    for (&sc, &y) in scores.iter().zip(&labels) {
        cm[y as usize][usize::from(sc > 0.5)] += 1;
    }
    let n = 50.0;
    assert_eq!(m.accuracy, (cm[0][0] + cm[1][1]) as f64 / n);
    assert_eq!(m.recall, Some(cm[0][0] as f64 / (cm[0][0] + cm[0][1]) as f64));
    assert_eq!(m.precision, Some(cm[0][0] as f64 / (cm[0][0] + cm[1][0]) as f64));
    let f1 = 2.0 * cm[0][0] as f64 / ((cm[0][0] + cm[0][1]) + cm[0][0] + cm[1][0]) as f64;
    assert_eq!(m.f1, Some(f1));
    assert_eq!(m.accuracy + m.error_rate, 1.0);
}

#[test]
fn auc_cases() {
    assert_eq!(auc(&perfect(10, 3)).unwrap(), 1.0);
    assert_eq!(auc(&constant(10, 3)).unwrap(), 0.5);
    assert!(matches!(auc(&constant(10, 0)), Err(Error::SingleClass)));
    let mut rng = support::rng(3);
    let (scores, labels) = support::random_sample(&mut rng, 30);
    assert_eq!(
        auc(&sample(scores.clone(), labels.clone())).unwrap(),
        support::auc_pairs(&scores, &labels)
    );
}

#[test]
fn mer_cases() {
    assert_eq!(mer(&perfect(10, 3)), 0.0);
    assert_eq!(mer(&constant(10, 3)), 0.3);
    assert_eq!(mer(&constant(10, 8)), 0.2);
    let mut rng = support::rng(4);
    let (scores, labels) = support::random_sample(&mut rng, 40);
    assert_eq!(
        mer(&sample(scores.clone(), labels.clone())),
        support::mer_sweep(&scores, &labels)
    );
}

#[test]
fn general_profit_specializations() {
    let mut rng = support::rng(8);
    let (scores, labels) = support::random_sample(&mut rng, 60);
    let s = sample(scores, labels);
    let ones = CostBenefitMatrix {
        b0: 1.0,
        b1: 1.0,
        c0: 0.0,
        c1: 0.0,
    };
    let zeros = CostBenefitMatrix {
        b0: 0.0,
        b1: 0.0,
        c0: 0.0,
        c1: 0.0,
    };
    let p = ProfitParams::default();
    for t in [0.0, 0.2, 0.5, 0.77, 1.0] {
        assert!((general_profit(&s, t, &ones) - threshold_metrics(&s, t).accuracy).abs() < 1e-12);
        assert_eq!(general_profit(&s, t, &zeros), 0.0);
        for gamma in [0.0, 0.1, 0.3, 0.9] {
            let cb = CostBenefitMatrix::churn(&p, gamma);
            assert_eq!(general_profit(&s, t, &cb), churn_profit(&s, t, &p, gamma));
        }
    }
}

#[test]
fn eta_measures_cases() {
    let p = ProfitParams::default();
    let s = perfect(1000, 300);
    let m = eta_measures(&s, &p).unwrap();
    assert_eq!((m.eta_precision, m.eta_recall, m.eta_f1), (1.0, 1.0, 1.0));
    let m = eta_measures_at(&s, 0.0);
    assert_eq!((m.eta_precision, m.eta_recall, m.eta_f1), (0.0, 0.0, 0.0));
    assert!((f1_score(0.520, 0.949) - 0.672).abs() < 1e-3);
}

#[test]
fn campaign_size_rounding() {
    assert_eq!(campaign_size(0.3, 100), 30);
    assert_eq!(campaign_size(0.301, 100), 31);
    assert_eq!(campaign_size(0.0, 100), 0);
    assert_eq!(campaign_size(1.0, 7), 7);
}

#[test]
fn report_fields_and_table() {
    let p = ProfitParams::default();
    let r = ProfitReport::compute(&perfect(100, 30), &p).unwrap();
    assert!((r.empc - 16.8).abs() < 1e-6);
    assert_eq!(r.auc, 1.0);
    assert_eq!(r.mer, 0.0);
    let table = ProfitReport::table(&[("perfect", &r)]);
    let header: Vec<&str> = table.lines().next().unwrap().split_whitespace().collect();
    assert_eq!(header, vec!["model", "EMPC", "MPC", "η̄_p", "η̄_r", "η̄_F", "AUC", "MER"]);
    let campaign = r.campaign(&perfect(100, 30)).unwrap();
    assert_eq!(campaign.len(), 30);
    assert!(campaign.iter().all(|c| c.row < 30));
    assert_eq!(campaign[0].rank, 1);
}

#[test]
fn profit_curve_rows() {
    let p = ProfitParams::default();
    let rows = profit_curve(&constant(10, 3), &p);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].profit, 0.0);
    assert!((rows[1].profit - 9.1).abs() < 1e-12);
    let mut buf = Vec::new();
    write_profit_curve_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("threshold,eta,eta_churners,eta_nonchurners,profit\n"));
}

fn arb_sample() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
    (2usize..80)
        .prop_flat_map(|n| {
            (
                prop::collection::vec((0u32..20).prop_map(|k| k as f64 / 20.0), n),
                prop::collection::vec(0u8..2, n),
            )
        })
        .prop_filter("both classes", |(_, y)| y.contains(&0) && y.contains(&1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn measures_are_rank_invariant((scores, labels) in arb_sample(), power in 0.2f64..5.0, shift in -3.0f64..3.0) {
        let p = ProfitParams::default();
        let a = sample(scores.clone(), labels.clone());
        let b = sample(scores.iter().map(|s| s.powf(power) * 7.0 + shift).collect(), labels);
        let (ea, eb) = (empc(&a, &p).unwrap(), empc(&b, &p).unwrap());
        prop_assert!((ea.empc - eb.empc).abs() <= 1e-12);
        prop_assert!((ea.eta_empc - eb.eta_empc).abs() <= 1e-12);
        prop_assert!((mpc(&a, &p).mpc - mpc(&b, &p).mpc).abs() <= 1e-12);
        prop_assert_eq!(auc(&a).unwrap(), auc(&b).unwrap());
        prop_assert_eq!(eta_measures(&a, &p).unwrap(), eta_measures(&b, &p).unwrap());
    }

    #[test]
    fn mpc_dominates_every_threshold((scores, labels) in arb_sample(), t in -0.1f64..1.1) {
        let p = ProfitParams::default();
        let s = sample(scores, labels);
        prop_assert!(mpc(&s, &p).mpc >= churn_profit(&s, t, &p, p.gamma()) - 1e-12);
    }

    #[test]
    fn auc_of_reversed_scores_is_complement((scores, labels) in arb_sample()) {
        let a = auc(&sample(scores.clone(), labels.clone())).unwrap();
        let b = auc(&sample(scores.iter().map(|s| 1.0 - s).collect(), labels)).unwrap();
        prop_assert!((a + b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eta_measure_bounds((scores, labels) in arb_sample()) {
        let p = ProfitParams::default();
        let s = sample(scores, labels);
        let m = eta_measures(&s, &p).unwrap();
        prop_assert!((0.0..=1.0).contains(&m.eta_precision));
        prop_assert!((0.0..=1.0).contains(&m.eta_recall));
        prop_assert!(m.eta_f1 <= 2.0 * m.eta_precision.min(m.eta_recall) + 1e-15);
        let r = ProfitReport::compute(&s, &p).unwrap();
        prop_assert!(r.empc >= 0.0 && r.mpc >= 0.0);
        for v in [r.eta_empc, r.eta_mpc, r.auc, r.mer] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn hull_is_convex_and_spans_the_square((scores, labels) in arb_sample()) {
        let hull = sample(scores, labels).roc().hull();
        let v = &hull.vertices;
        prop_assert_eq!((v[0].eta_n, v[0].eta_c), (0.0, 0.0));
        let last = v.last().unwrap();
        prop_assert_eq!((last.eta_n, last.eta_c), (1.0, 1.0));
        for w in v.windows(3) {
            let s1 = (w[1].eta_c - w[0].eta_c) * (w[2].eta_n - w[1].eta_n);
            let s2 = (w[2].eta_c - w[1].eta_c) * (w[1].eta_n - w[0].eta_n);
            prop_assert!(s1 > s2);
        }
    }
}
