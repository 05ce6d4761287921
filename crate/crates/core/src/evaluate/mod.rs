//! Profit-based and accuracy-based performance measures for churn scores.
//!
//! Scores rank customers by churn propensity: a customer is targeted by the
//! retention campaign (predicted to churn) iff its score exceeds the
//! threshold `t`. Profit measures are stated in terms of the fractions of
//! churners (`η_c`) and non-churners (`η_n`) targeted.

mod beta;
mod report;
mod roc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use beta::{betainc_reg, ln_beta, ln_gamma};
pub use report::{profit_curve, write_profit_curve_csv, CampaignEntry, ProfitCurveRow, ProfitReport};
pub use roc::{HullVertex, RocCurve, RocHull, RocPoint, ScoreGroup};

/// Economics of a retention campaign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfitParams {
    /// Customer lifetime value of a retained customer.
    pub clv: f64,
    /// Cost of the retention offer (d).
    pub offer_cost: f64,
    /// Cost of contacting a customer (f).
    pub contact_cost: f64,
    /// Shape α' of the Beta prior on the acceptance probability γ.
    pub alpha: f64,
    /// Shape β' of the Beta prior on γ.
    pub beta: f64,
    /// Fixed γ used by MPC; the prior mean when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_point: Option<f64>,
}

impl Default for ProfitParams {
    fn default() -> Self {
        ProfitParams {
            clv: 200.0,
            offer_cost: 10.0,
            contact_cost: 1.0,
            alpha: 6.0,
            beta: 14.0,
            gamma_point: None,
        }
    }
}

impl ProfitParams {
    /// δ = d / CLV.
    pub fn delta(&self) -> f64 {
        self.offer_cost / self.clv
    }

    /// φ = f / CLV.
    pub fn phi(&self) -> f64 {
        self.contact_cost / self.clv
    }

    /// γ used by MPC.
    pub fn gamma(&self) -> f64 {
        self.gamma_point.unwrap_or(self.alpha / (self.alpha + self.beta))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidArgument(msg.to_string()));
        if !(self.offer_cost > 0.0 && self.clv > self.offer_cost && self.clv.is_finite()) {
            return fail("profit parameters need CLV > d > 0");
        }
        if !(self.contact_cost > 0.0 && self.contact_cost.is_finite()) {
            return fail("contact cost f must be positive");
        }
        if !(self.alpha > 1.0 && self.beta > 1.0 && self.alpha.is_finite() && self.beta.is_finite()) {
            return fail("Beta prior needs alpha > 1 and beta > 1");
        }
        if let Some(g) = self.gamma_point {
            if !(0.0..=1.0).contains(&g) {
                return fail("gamma must lie in [0, 1]");
            }
        }
        Ok(())
    }
}

/// Benefits `b_k` and costs `c_k` of correct and incorrect classification,
/// indexed as in the churn profit framework: index 0 is the churn (case)
/// class, i.e. `b0` is earned per targeted churner and `c1` is paid per
/// targeted non-churner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBenefitMatrix {
    pub b0: f64,
    pub b1: f64,
    pub c0: f64,
    pub c1: f64,
}

impl CostBenefitMatrix {
    /// The churn specialization at acceptance rate `gamma`.
    pub fn churn(params: &ProfitParams, gamma: f64) -> Self {
        let (delta, phi) = (params.delta(), params.phi());
        CostBenefitMatrix {
            b0: params.clv * (gamma * (1.0 - delta) - phi),
            b1: 0.0,
            c0: 0.0,
            c1: params.clv * (delta + phi),
        }
    }
}

/// Paired scores and binary churn labels (1 = churner).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSample {
    scores: Vec<f64>,
    labels: Vec<u8>,
    churners: usize,
}

impl ScoredSample {
    pub fn new(scores: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::EmptySample);
        }
        if scores.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} scores for {} labels",
                scores.len(),
                labels.len()
            )));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("scores must be finite".into()));
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
        }
        let churners = labels.iter().filter(|&&y| y == 1).count();
        Ok(ScoredSample {
            scores,
            labels,
            churners,
        })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn churners(&self) -> usize {
        self.churners
    }

    pub fn nonchurners(&self) -> usize {
        self.len() - self.churners
    }

    pub fn pi_churn(&self) -> f64 {
        self.churners as f64 / self.len() as f64
    }

    pub fn pi_nonchurn(&self) -> f64 {
        self.nonchurners() as f64 / self.len() as f64
    }

    fn has_both_classes(&self) -> bool {
        self.churners > 0 && self.churners < self.len()
    }

    /// Distinct scores in descending order with per-class counts.
    pub fn groups(&self) -> Vec<ScoreGroup> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&i, &j| self.scores[j].total_cmp(&self.scores[i]));
        let mut out: Vec<ScoreGroup> = Vec::new();
        for i in order {
            let s = self.scores[i];
            let churn = u64::from(self.labels[i] == 1);
            match out.last_mut() {
                Some(g) if g.score == s => {
                    g.churners += churn;
                    g.nonchurners += 1 - churn;
                }
                _ => out.push(ScoreGroup {
                    score: s,
                    churners: churn,
                    nonchurners: 1 - churn,
                }),
            }
        }
        out
    }

    pub fn roc(&self) -> RocCurve {
        RocCurve::from_groups(&self.groups())
    }

    /// Empirical CDF of scores within class `label`: the fraction of that
    /// class with score `<= t`. `None` when the class is absent.
    pub fn class_cdf(&self, label: u8, t: f64) -> Option<f64> {
        let (mut below, mut total) = (0usize, 0usize);
        for (&s, &y) in self.scores.iter().zip(&self.labels) {
            if y == label {
                total += 1;
                below += usize::from(s <= t);
            }
        }
        (total > 0).then(|| below as f64 / total as f64)
    }

    /// Fractions of churners and of non-churners with score above `t`.
    pub fn targeted_fractions(&self, t: f64) -> (f64, f64) {
        let (mut c, mut n) = (0usize, 0usize);
        for (&s, &y) in self.scores.iter().zip(&self.labels) {
            if s > t {
                if y == 1 {
                    c += 1;
                } else {
                    n += 1;
                }
            }
        }
        let frac = |k: usize, of: usize| if of == 0 { 0.0 } else { k as f64 / of as f64 };
        (frac(c, self.churners), frac(n, self.nonchurners()))
    }
}

/// Threshold-dependent accuracy measures. Class 0 (non-churn) is predicted
/// iff `score <= t`; recall, precision and F1 are those of class 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdMetrics {
    pub accuracy: f64,
    pub error_rate: f64,
    /// `None` without class-0 instances.
    pub recall: Option<f64>,
    /// `None` when nothing is predicted class 0.
    pub precision: Option<f64>,
    pub f1: Option<f64>,
}

pub fn threshold_metrics(s: &ScoredSample, t: f64) -> ThresholdMetrics {
    // a: class 0 predicted 0, b: class 1 predicted 0, d: class 1 predicted 1
    let (mut a, mut b, mut d) = (0usize, 0usize, 0usize);
    for (&score, &y) in s.scores.iter().zip(&s.labels) {
        match (y, score <= t) {
            (0, true) => a += 1,
            (1, true) => b += 1,
            (1, false) => d += 1,
            _ => {}
        }
    }
    let n = s.len() as f64;
    let n0 = s.nonchurners();
    let accuracy = (a + d) as f64 / n;
    ThresholdMetrics {
        accuracy,
        error_rate: 1.0 - accuracy,
        recall: (n0 > 0).then(|| a as f64 / n0 as f64),
        precision: (a + b > 0).then(|| a as f64 / (a + b) as f64),
        f1: (n0 + a + b > 0).then(|| 2.0 * a as f64 / (n0 + a + b) as f64),
    }
}

/// Probability that a random churner scores above a random non-churner,
/// ties counting one half.
pub fn auc(s: &ScoredSample) -> Result<f64> {
    if !s.has_both_classes() {
        return Err(Error::SingleClass);
    }
    // Sweep ascending groups; twice the Mann-Whitney U in integer arithmetic.
    let mut groups = s.groups();
    groups.reverse();
    let mut below_non = 0u64;
    let mut twice_u = 0u64;
    for g in &groups {
        twice_u += g.churners * (2 * below_non + g.nonchurners);
        below_non += g.nonchurners;
    }
    let pairs = 2 * s.churners() as u64 * s.nonchurners() as u64;
    Ok(twice_u as f64 / pairs as f64)
}

/// Minimum error rate over every distinct-score threshold and the
/// threshold below the lowest score.
pub fn mer(s: &ScoredSample) -> f64 {
    let curve = s.roc();
    let min_errors = curve
        .points()
        .iter()
        .map(|p| (curve.churners() - p.targeted_churners) + p.targeted_nonchurners)
        .min()
        .expect("curve has at least one point");
    min_errors as f64 / s.len() as f64
}

/// Average profit per customer at threshold `t` for a general cost-benefit
/// matrix.
pub fn general_profit(s: &ScoredSample, t: f64, cb: &CostBenefitMatrix) -> f64 {
    let (eta_c, eta_n) = s.targeted_fractions(t);
    let (pc, pn) = (s.pi_churn(), s.pi_nonchurn());
    cb.b0 * pc * eta_c + cb.b1 * pn * (1.0 - eta_n) - cb.c0 * pc * (1.0 - eta_c) - cb.c1 * pn * eta_n
}

/// Average churn-campaign profit per customer when targeting every customer
/// with score above `t`.
pub fn churn_profit(s: &ScoredSample, t: f64, p: &ProfitParams, gamma: f64) -> f64 {
    let (eta_c, eta_n) = s.targeted_fractions(t);
    let (delta, phi) = (p.delta(), p.phi());
    p.clv * (gamma * (1.0 - delta) - phi) * s.pi_churn() * eta_c - p.clv * (delta + phi) * s.pi_nonchurn() * eta_n
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpcResult {
    pub mpc: f64,
    pub t_opt: f64,
    pub eta_mpc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpcResult {
    pub empc: f64,
    pub eta_empc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaMeasures {
    pub eta_precision: f64,
    pub eta_recall: f64,
    pub eta_f1: f64,
}

pub(crate) fn mpc_from_curve(curve: &RocCurve, p: &ProfitParams) -> MpcResult {
    let (profit, idx) = curve.max_profit(p, p.gamma());
    let point = &curve.points()[idx];
    MpcResult {
        mpc: profit.max(0.0),
        t_opt: point.cutoff,
        eta_mpc: curve.eta(point),
    }
}

/// Maximum profit at the fixed γ of `p`, its optimal cutoff and the
/// targeted fraction there.
pub fn mpc(s: &ScoredSample, p: &ProfitParams) -> MpcResult {
    mpc_from_curve(&s.roc(), p)
}

/// Expected maximum profit under the Beta prior on γ and the expected
/// profit-maximizing targeted fraction, computed exactly on the ROC hull.
pub fn empc(s: &ScoredSample, p: &ProfitParams) -> Result<EmpcResult> {
    let (empc, eta_empc) = s.roc().expected_max_profit(p)?;
    Ok(EmpcResult { empc, eta_empc })
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Size of the campaign list for a targeted fraction: `ceil(eta · n)`,
/// ignoring floating-point excess below 1e-9 of a customer.
pub fn campaign_size(eta: f64, n: usize) -> usize {
    let raw = eta * n as f64;
    ((raw - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// Row indices sorted by descending score, ties kept in input order.
pub fn ranking(s: &ScoredSample) -> Vec<usize> {
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s.scores[j].total_cmp(&s.scores[i]));
    order
}

/// η̄-precision, η̄-recall and η̄-F1 of the campaign list sized by the
/// expected profit-maximizing fraction.
pub fn eta_measures(s: &ScoredSample, p: &ProfitParams) -> Result<EtaMeasures> {
    Ok(eta_measures_at(s, empc(s, p)?.eta_empc))
}

/// η̄-measures of the campaign list made of the top `ceil(eta_empc · N)`
/// customers.
pub fn eta_measures_at(s: &ScoredSample, eta_empc: f64) -> EtaMeasures {
    let size = campaign_size(eta_empc, s.len());
    if size == 0 || s.churners() == 0 {
        return EtaMeasures {
            eta_precision: 0.0,
            eta_recall: 0.0,
            eta_f1: 0.0,
        };
    }
    let hits = ranking(s)[..size].iter().filter(|&&i| s.labels[i] == 1).count();
    let precision = hits as f64 / size as f64;
    let recall = hits as f64 / s.churners() as f64;
    EtaMeasures {
        eta_precision: precision,
        eta_recall: recall,
        eta_f1: f1_score(precision, recall),
    }
}

#[cfg(test)]
mod tests;
