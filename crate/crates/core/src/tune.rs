//! Cross-validated choice of the leaf penalty λ and the benchmark harness.
//!
//! Both use five replications of stratified two-fold cross-validation. The
//! same fold plan is shared by every λ and every model, and each fold fit
//! draws its evolutionary seed from `(seed, replication, fold)` alone.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{fit_greedy, prune_greedy};
use crate::data::{stratified_split, Dataset, FoldPlan};
use crate::error::{Error, Result};
use crate::evaluate::{empc, ProfitParams, ProfitReport, ScoredSample};
use crate::evolve::{evolve, fitness, EvolveConfig};
use crate::tree::Tree;

pub const REPLICATIONS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    values: Vec<f64>,
}

impl LambdaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("λ grid is empty".into()));
        }
        if values.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "λ values must be finite and ≥ 0: {values:?}"
            )));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(format!(
                "λ grid must increase strictly: {values:?}"
            )));
        }
        Ok(LambdaGrid { values })
    }

    /// `count` points evenly spaced in log scale from `min` to `max`.
    pub fn log_spaced(min: f64, max: f64, count: usize) -> Result<Self> {
        if !(min > 0.0 && max >= min) || count == 0 {
            return Err(Error::InvalidArgument(format!(
                "cannot space {count} points from {min} to {max}"
            )));
        }
        if count == 1 {
            return Self::new(vec![min]);
        }
        let (a, b) = (min.ln(), max.ln());
        let step = (b - a) / (count - 1) as f64;
        let mut values: Vec<f64> = (0..count).map(|i| (a + step * i as f64).exp()).collect();
        values[0] = min;
        values[count - 1] = max;
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl Default for LambdaGrid {
    fn default() -> Self {
        Self::log_spaced(0.01, 1.0, 20).expect("valid default grid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunePoint {
    pub lambda: f64,
    /// Mean test-fold EMPC; `None` when the grid had a single value and no
    /// fits were run.
    pub mean_empc: Option<f64>,
    pub sd_empc: Option<f64>,
    pub fold_empc: Vec<f64>,
}

pub type CurveRow = (f64, Option<f64>, Option<f64>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub points: Vec<TunePoint>,
    pub lambda_opt: f64,
    pub seed: u64,
}

impl TuneResult {
    /// `lambda,mean_empc,sd_empc` rows; empty cells for unevaluated points.
    pub fn write_curve_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lambda", "mean_empc", "sd_empc"])?;
        let cell = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
        for p in &self.points {
            w.write_record([p.lambda.to_string(), cell(p.mean_empc), cell(p.sd_empc)])?;
        }
        w.flush().map_err(|e| Error::io("<tuning curve>", e))?;
        Ok(())
    }

    /// Rows of `(lambda, mean_empc, sd_empc)`.
    pub fn read_curve_csv<R: std::io::Read>(input: R) -> Result<Vec<CurveRow>> {
        let mut out = Vec::new();
        for rec in csv::Reader::from_reader(input).into_records() {
            let rec = rec?;
            let num = |i: usize| -> Result<Option<f64>> {
                let s = rec.get(i).unwrap_or("");
                if s.is_empty() {
                    return Ok(None);
                }
                s.parse()
                    .map(Some)
                    .map_err(|_| Error::InvalidArgument(format!("bad number `{s}` in tuning curve")))
            };
            let lambda = num(0)?.ok_or_else(|| Error::InvalidArgument("missing λ in tuning curve".into()))?;
            out.push((lambda, num(1)?, num(2)?));
        }
        Ok(out)
    }
}

/// Seed of the fit on fold `k` of replication `rep`.
pub fn fold_seed(seed: u64, rep: usize, k: usize) -> u64 {
    // splitmix64 finalizer over the packed indices
    let mut z = seed ^ (((rep as u64) << 8 | k as u64).wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn check_folds(data: &Dataset, plan: &FoldPlan) -> Result<()> {
    for (_, _, train, test) in plan.evaluations() {
        for part in [train, test] {
            let churners = part.iter().filter(|&&r| data.labels()[r] == 1).count();
            if churners == 0 || churners == part.len() {
                return Err(Error::SingleClass);
            }
        }
    }
    Ok(())
}

/// One ProfTree fit per fold evaluation at penalty `lambda`.
struct FoldFit {
    tree: Tree,
    train_fitness: f64,
}

fn profit_fits(
    data: &Dataset,
    plan: &FoldPlan,
    p: &ProfitParams,
    cfg: &EvolveConfig,
    lambda: f64,
) -> Result<Vec<FoldFit>> {
    let jobs: Vec<(usize, usize, &[usize])> = plan.evaluations().map(|(rep, k, train, _)| (rep, k, train)).collect();
    jobs.into_par_iter()
        .map(|(rep, k, train)| {
            let train = data.subset(train);
            let cfg = EvolveConfig {
                lambda,
                seed: fold_seed(cfg.seed, rep, k),
                ..*cfg
            };
            let r = evolve(&train, p, &cfg)?;
            Ok(FoldFit {
                tree: r.best,
                train_fitness: r.best_fitness,
            })
        })
        .collect()
}

fn test_sample(tree: &Tree, data: &Dataset, test: &[usize]) -> Result<ScoredSample> {
    let test = data.subset(test);
    ScoredSample::new(tree.score_dataset(&test), test.labels().to_vec())
}

/// Grid search for λ under 5×2 cross-validated test-fold EMPC. `cfg.seed`
/// seeds the fold fits and `seed` the fold plan. The largest λ attaining
/// the highest mean wins.
pub fn tune_lambda(
    data: &Dataset,
    p: &ProfitParams,
    grid: &LambdaGrid,
    cfg: &EvolveConfig,
    seed: u64,
) -> Result<TuneResult> {
    let plan = stratified_split(data, REPLICATIONS, seed)?;
    tune_on_plan(data, &plan, p, grid, cfg)
}

pub fn tune_on_plan(
    data: &Dataset,
    plan: &FoldPlan,
    p: &ProfitParams,
    grid: &LambdaGrid,
    cfg: &EvolveConfig,
) -> Result<TuneResult> {
    p.validate()?;
    cfg.validate()?;
    if grid.len() == 1 {
        return Ok(TuneResult {
            points: vec![TunePoint {
                lambda: grid.values()[0],
                mean_empc: None,
                sd_empc: None,
                fold_empc: Vec::new(),
            }],
            lambda_opt: grid.values()[0],
            seed: plan.seed,
        });
    }
    check_folds(data, plan)?;
    let tests: Vec<&[usize]> = plan.evaluations().map(|(_, _, _, test)| test).collect();
    let mut points = Vec::with_capacity(grid.len());
    for &lambda in grid.values() {
        let fits = profit_fits(data, plan, p, cfg, lambda)?;
        let fold_empc = fits
            .iter()
            .zip(&tests)
            .map(|(f, test)| Ok(empc(&test_sample(&f.tree, data, test)?, p)?.empc))
            .collect::<Result<Vec<f64>>>()?;
        let (mean, sd) = mean_sd(&fold_empc);
        points.push(TunePoint {
            lambda,
            mean_empc: Some(mean),
            sd_empc: Some(sd),
            fold_empc,
        });
    }
    let mut best = &points[0];
    for pt in &points[1..] {
        if pt.mean_empc >= best.mean_empc {
            best = pt;
        }
    }
    Ok(TuneResult {
        lambda_opt: best.lambda,
        points,
        seed: plan.seed,
    })
}

pub const MODELS: [&str; 4] = ["proftree", "greedy", "greedy+prune", "constant"];

/// Test-fold measures of one model on one fold evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub dataset: String,
    pub model: String,
    pub replication: usize,
    pub fold: usize,
    pub lambda: f64,
    /// `EMPC - λ·M` of the model on its own training fold.
    pub train_fitness: f64,
    pub leaves: usize,
    pub report: ProfitReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    /// Means over the fold evaluations, in [`ProfitReport::column_names`] order.
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub mean_train_fitness: f64,
    pub mean_leaves: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetResult {
    pub dataset: String,
    pub n: usize,
    pub churn_rate: f64,
    pub lambda_opt: f64,
    pub tuning: TuneResult,
    pub models: Vec<ModelSummary>,
    /// `ranks[metric][model]`, 1 = best, ties averaged.
    pub ranks: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub metrics: Vec<String>,
    pub models: Vec<String>,
    pub datasets: Vec<DatasetResult>,
    /// `average_ranks[metric][model]` over datasets.
    pub average_ranks: Vec<Vec<f64>>,
    pub folds: Vec<FoldRecord>,
    pub seed: u64,
}

/// Ranks of `values` (1 = best) with ties sharing their average rank.
pub fn rank(values: &[f64], higher_is_better: bool) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let o = values[a].total_cmp(&values[b]);
        if higher_is_better {
            o.reverse()
        } else {
            o
        }
    });
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Only MER is better when lower.
fn higher_is_better(metric: &str) -> bool {
    metric != "MER"
}

/// Runs ProfTree with λ tuned on the dataset's fold plan, the greedy tree,
/// the greedy tree pruned at that λ, and the constant scorer, all on the
/// same 5×2 folds.
pub fn benchmark(
    datasets: &[(String, Dataset)],
    p: &ProfitParams,
    cfg: &EvolveConfig,
    grid: &LambdaGrid,
    seed: u64,
) -> Result<BenchReport> {
    if datasets.is_empty() {
        return Err(Error::InvalidArgument("benchmark needs at least one dataset".into()));
    }
    let metrics: Vec<String> = ProfitReport::column_names().iter().map(|s| s.to_string()).collect();
    let mut results = Vec::new();
    let mut folds = Vec::new();
    for (name, data) in datasets {
        let plan = stratified_split(data, REPLICATIONS, seed)?;
        check_folds(data, &plan)?;
        let tuning = tune_on_plan(data, &plan, p, grid, cfg)?;
        let lambda = tuning.lambda_opt;
        let fits = profit_fits(data, &plan, p, cfg, lambda)?;
        let evals: Vec<_> = plan.evaluations().collect();
        let per_fold = evals
            .par_iter()
            .zip(fits.par_iter())
            .map(|(&(rep, k, train_idx, test_idx), fit)| {
                let train = data.subset(train_idx);
                let greedy = fit_greedy(&train, &cfg.constraints, 0.0)?;
                let pruned = prune_greedy(&greedy, &train, lambda, p)?;
                let constant = Tree::stump(Arc::new(train.schema().to_vec())).fit_leaves(&train)?;
                let models: [(&str, &Tree, f64); 4] = [
                    ("proftree", &fit.tree, fit.train_fitness),
                    ("greedy", &greedy, fitness(&greedy, &train, p, lambda)?),
                    ("greedy+prune", &pruned, fitness(&pruned, &train, p, lambda)?),
                    ("constant", &constant, fitness(&constant, &train, p, lambda)?),
                ];
                models
                    .into_iter()
                    .map(|(model, tree, train_fitness)| {
                        Ok(FoldRecord {
                            dataset: name.clone(),
                            model: model.to_string(),
                            replication: rep,
                            fold: k,
                            lambda,
                            train_fitness,
                            leaves: tree.leaf_count(),
                            report: ProfitReport::compute(&test_sample(tree, data, test_idx)?, p)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let records: Vec<FoldRecord> = per_fold.into_iter().flatten().collect();

        let models: Vec<ModelSummary> = MODELS
            .iter()
            .map(|&m| {
                let rows: Vec<&FoldRecord> = records.iter().filter(|r| r.model == m).collect();
                let stats: Vec<(f64, f64)> = (0..metrics.len())
                    .map(|j| mean_sd(&rows.iter().map(|r| r.report.row()[j]).collect::<Vec<_>>()))
                    .collect();
                ModelSummary {
                    model: m.to_string(),
                    means: stats.iter().map(|s| s.0).collect(),
                    sds: stats.iter().map(|s| s.1).collect(),
                    mean_train_fitness: mean_sd(&rows.iter().map(|r| r.train_fitness).collect::<Vec<_>>()).0,
                    mean_leaves: mean_sd(&rows.iter().map(|r| r.leaves as f64).collect::<Vec<_>>()).0,
                }
            })
            .collect();
        let ranks = metrics
            .iter()
            .enumerate()
            .map(|(j, m)| {
                rank(
                    &models.iter().map(|s| s.means[j]).collect::<Vec<_>>(),
                    higher_is_better(m),
                )
            })
            .collect();
        results.push(DatasetResult {
            dataset: name.clone(),
            n: data.n_rows(),
            churn_rate: data.churn_rate(),
            lambda_opt: lambda,
            tuning,
            models,
            ranks,
        });
        folds.extend(records);
    }

    let average_ranks = (0..metrics.len())
        .map(|j| {
            (0..MODELS.len())
                .map(|m| results.iter().map(|r| r.ranks[j][m]).sum::<f64>() / results.len() as f64)
                .collect()
        })
        .collect();
    Ok(BenchReport {
        metrics,
        models: MODELS.iter().map(|s| s.to_string()).collect(),
        datasets: results,
        average_ranks,
        folds,
        seed,
    })
}

impl BenchReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Per-dataset mean tables followed by the per-dataset and average rank
    /// tables.
    pub fn text(&self) -> String {
        let mut out = String::new();
        for d in &self.datasets {
            let _ = writeln!(
                out,
                "dataset {} (N = {}, churn rate {:.4}, λ_opt = {})",
                d.dataset, d.n, d.churn_rate, d.lambda_opt
            );
            let reports: Vec<(String, ProfitReport)> = d
                .models
                .iter()
                .map(|m| {
                    let v = &m.means;
                    (
                        m.model.clone(),
                        ProfitReport {
                            empc: v[0],
                            mpc: v[1],
                            eta_precision: v[2],
                            eta_recall: v[3],
                            eta_f1: v[4],
                            auc: v[5],
                            mer: v[6],
                            t_opt: f64::NAN,
                            eta_empc: f64::NAN,
                            eta_mpc: f64::NAN,
                            n: 0,
                            churners: 0,
                        },
                    )
                })
                .collect();
            let rows: Vec<(&str, &ProfitReport)> = reports.iter().map(|(n, r)| (n.as_str(), r)).collect();
            out.push_str(&ProfitReport::table(&rows));
            let _ = writeln!(out, "{:<14}{:>12}{:>9}", "model", "train fit", "leaves");
            for m in &d.models {
                let _ = writeln!(
                    out,
                    "{:<14}{:>12.4}{:>9.2}",
                    m.model, m.mean_train_fitness, m.mean_leaves
                );
            }
            out.push('\n');
            out.push_str(&self.rank_table(&format!("ranks on {}", d.dataset), &d.ranks));
            out.push('\n');
        }
        out.push_str(&self.rank_table("average rank", &self.average_ranks));
        out
    }

    fn rank_table(&self, title: &str, ranks: &[Vec<f64>]) -> String {
        let mut out = format!("{title}\n{:<8}", "metric");
        for m in &self.models {
            let _ = write!(out, "{m:>14}");
        }
        out.push('\n');
        for (metric, row) in self.metrics.iter().zip(ranks) {
            let width = metric.chars().filter(|c| !('\u{300}'..='\u{36f}').contains(c)).count();
            out.push_str(metric);
            out.push_str(&" ".repeat(8usize.saturating_sub(width)));
            for r in row {
                let _ = write!(out, "{r:>14.2}");
            }
            out.push('\n');
        }
        out
    }

    /// One row per (dataset, model, fold evaluation) with every test-fold
    /// measure, for boxplots.
    pub fn write_boxplot_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![
            "dataset",
            "model",
            "replication",
            "fold",
            "lambda",
            "train_fitness",
            "leaves",
        ];
        header.extend(["empc", "mpc", "eta_precision", "eta_recall", "eta_f1", "auc", "mer"]);
        w.write_record(&header)?;
        for f in &self.folds {
            let mut rec = vec![
                f.dataset.clone(),
                f.model.clone(),
                f.replication.to_string(),
                f.fold.to_string(),
                f.lambda.to_string(),
                f.train_fitness.to_string(),
                f.leaves.to_string(),
            ];
            rec.extend(f.report.row().iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<boxplot data>", e))?;
        Ok(())
    }

    /// Mean of each metric per model over all datasets, keyed by model.
    pub fn overall_means(&self) -> BTreeMap<String, Vec<f64>> {
        let mut out = BTreeMap::new();
        for (m, model) in self.models.iter().enumerate() {
            let k = self.datasets.len() as f64;
            let means = (0..self.metrics.len())
                .map(|j| self.datasets.iter().map(|d| d.models[m].means[j]).sum::<f64>() / k)
                .collect();
            out.insert(model.clone(), means);
        }
        out
    }
}
