use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{auc, campaign_size, eta_measures_at, mer, mpc_from_curve, ranking, ProfitParams, ScoredSample};
use crate::error::{Error, Result};

/// Profit and accuracy measures of one model on one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfitReport {
    pub empc: f64,
    pub mpc: f64,
    pub t_opt: f64,
    pub eta_empc: f64,
    pub eta_mpc: f64,
    pub eta_precision: f64,
    pub eta_recall: f64,
    pub eta_f1: f64,
    pub auc: f64,
    pub mer: f64,
    pub n: usize,
    pub churners: usize,
}

const COLUMNS: [&str; 7] = ["EMPC", "MPC", "η̄_p", "η̄_r", "η̄_F", "AUC", "MER"];

fn display_width(s: &str) -> usize {
    s.chars().filter(|c| !('\u{300}'..='\u{36f}').contains(c)).count()
}

fn pad_left(s: &str, width: usize) -> String {
    let w = display_width(s);
    format!("{}{s}", " ".repeat(width.saturating_sub(w)))
}

fn pad_right(s: &str, width: usize) -> String {
    let w = display_width(s);
    format!("{s}{}", " ".repeat(width.saturating_sub(w)))
}

impl ProfitReport {
    pub fn compute(s: &ScoredSample, p: &ProfitParams) -> Result<Self> {
        let curve = s.roc();
        let m = mpc_from_curve(&curve, p);
        let (empc, eta_empc) = curve.expected_max_profit(p)?;
        let eta = eta_measures_at(s, eta_empc);
        Ok(ProfitReport {
            empc,
            mpc: m.mpc,
            t_opt: m.t_opt,
            eta_empc,
            eta_mpc: m.eta_mpc,
            eta_precision: eta.eta_precision,
            eta_recall: eta.eta_recall,
            eta_f1: eta.eta_f1,
            auc: auc(s)?,
            mer: mer(s),
            n: s.len(),
            churners: s.churners(),
        })
    }

    /// Values in table column order.
    pub fn row(&self) -> [f64; 7] {
        [
            self.empc,
            self.mpc,
            self.eta_precision,
            self.eta_recall,
            self.eta_f1,
            self.auc,
            self.mer,
        ]
    }

    pub fn column_names() -> [&'static str; 7] {
        COLUMNS
    }

    /// Aligned table with one row per named report.
    pub fn table(rows: &[(&str, &ProfitReport)]) -> String {
        let name_width = rows
            .iter()
            .map(|(n, _)| display_width(n))
            .chain(std::iter::once(5))
            .max()
            .unwrap_or(5);
        let mut out = pad_right("model", name_width);
        for c in COLUMNS {
            out.push_str(&pad_left(c, 9));
        }
        out.push('\n');
        for (name, r) in rows {
            out.push_str(&pad_right(name, name_width));
            for v in r.row() {
                let _ = write!(out, "{:>9.3}", v);
            }
            out.push('\n');
        }
        out
    }
}

/// One customer on the campaign list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampaignEntry {
    /// Index into the scored sample.
    pub row: usize,
    pub score: f64,
    /// 1-based position on the list.
    pub rank: usize,
}

impl ProfitReport {
    /// The top `ceil(eta_empc · N)` customers by descending score.
    pub fn campaign(&self, s: &ScoredSample) -> Result<Vec<CampaignEntry>> {
        if s.len() != self.n {
            return Err(Error::InvalidArgument("sample does not match report".into()));
        }
        let size = campaign_size(self.eta_empc, s.len());
        Ok(ranking(s)[..size]
            .iter()
            .enumerate()
            .map(|(k, &row)| CampaignEntry {
                row,
                score: s.scores()[row],
                rank: k + 1,
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfitCurveRow {
    pub threshold: f64,
    pub eta: f64,
    pub eta_churners: f64,
    pub eta_nonchurners: f64,
    pub profit: f64,
}

/// Churn profit at the fixed γ of `p` for every distinct cutoff.
pub fn profit_curve(s: &ScoredSample, p: &ProfitParams) -> Vec<ProfitCurveRow> {
    let curve = s.roc();
    curve
        .points()
        .iter()
        .map(|pt| ProfitCurveRow {
            threshold: pt.cutoff,
            eta: curve.eta(pt),
            eta_churners: curve.eta_c(pt),
            eta_nonchurners: curve.eta_n(pt),
            profit: curve.profit(pt, p, p.gamma()),
        })
        .collect()
}

pub fn write_profit_curve_csv<W: std::io::Write>(rows: &[ProfitCurveRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<profit curve>", e))?;
    Ok(())
}
