//! Evolutionary search for trees maximizing `EMPC - λ·M`.
//!
//! Every iteration each population slot is varied by one operator and the
//! candidate replaces the incumbent unless it is less fit. Slots are
//! processed in parallel; each draws from its own random stream derived
//! from `(seed, iteration, slot)`, so the outcome does not depend on the
//! number of worker threads.

mod operators;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::evaluate::{empc, ProfitParams, RocCurve, ScoreGroup, ScoredSample};
use crate::tree::{Tree, TreeConstraints};

pub use operators::{swap_subtrees, Variation, MAX_ATTEMPTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    Split,
    Prune,
    MajorMutation,
    MinorMutation,
    Crossover,
}

impl Operator {
    /// Order of [`EvolveConfig::operator_probs`].
    pub const ALL: [Operator; 5] = [
        Operator::Split,
        Operator::Prune,
        Operator::MajorMutation,
        Operator::MinorMutation,
        Operator::Crossover,
    ];
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Operator::Split => "split",
            Operator::Prune => "prune",
            Operator::MajorMutation => "major_mutation",
            Operator::MinorMutation => "minor_mutation",
            Operator::Crossover => "crossover",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub population_size: usize,
    /// Probabilities of split, prune, major mutation, minor mutation and
    /// crossover.
    pub operator_probs: [f64; 5],
    /// Fitness penalty per leaf, in currency per customer.
    pub lambda: f64,
    pub min_iterations: usize,
    /// Iterations without improvement of the elite mean before stopping.
    pub convergence_window: usize,
    pub elite_fraction: f64,
    /// Cap on iterations, counted from the start.
    pub max_iterations: usize,
    pub constraints: TreeConstraints,
    pub seed: u64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            population_size: 100,
            operator_probs: [0.2; 5],
            lambda: 0.0,
            min_iterations: 1000,
            convergence_window: 100,
            elite_fraction: 0.05,
            max_iterations: 10_000,
            constraints: TreeConstraints::default(),
            seed: 0,
        }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.population_size == 0 {
            return bad("population size must be positive".into());
        }
        // also rejects NaN
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if self.operator_probs.iter().any(|&p| !(p >= 0.0)) {
            return bad(format!(
                "operator probabilities must be non-negative: {:?}",
                self.operator_probs
            ));
        }
        let total: f64 = self.operator_probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("operator probabilities sum to {total}, not 1"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be finite and non-negative, got {}", self.lambda));
        }
        if self.convergence_window > self.min_iterations {
            return bad(format!(
                "convergence window {} exceeds minimum iterations {}",
                self.convergence_window, self.min_iterations
            ));
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction <= 1.0) {
            return bad(format!(
                "elite fraction must lie in (0, 1], got {}",
                self.elite_fraction
            ));
        }
        if self.max_iterations == 0 {
            return bad("maximum iterations must be positive".into());
        }
        self.constraints.validate()
    }

    /// Number of trees whose mean fitness decides convergence.
    pub fn elite_size(&self) -> usize {
        ((self.elite_fraction * self.population_size as f64 - 1e-9).ceil() as usize).clamp(1, self.population_size)
    }

    fn draw_operator<R: Rng + ?Sized>(&self, rng: &mut R) -> Operator {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (op, &p) in Operator::ALL.iter().zip(&self.operator_probs) {
            acc += p;
            if u < acc {
                return *op;
            }
        }
        // Rounding slack: the last operator with positive probability.
        Operator::ALL
            .iter()
            .zip(&self.operator_probs)
            .rev()
            .find(|(_, &p)| p > 0.0)
            .map_or(Operator::Split, |(op, _)| *op)
    }
}

/// `EMPC - λ·M` of `tree` scored on `data`, in currency per customer.
pub fn fitness(tree: &Tree, data: &Dataset, p: &ProfitParams, lambda: f64) -> Result<f64> {
    let sample = ScoredSample::new(tree.score_dataset(data), data.labels().to_vec())?;
    Ok(empc(&sample, p)?.empc - lambda * tree.leaf_count() as f64)
}

/// EMPC of a fitted tree from its stored leaf counts. Leaves with equal
/// churn fractions form one score group, exactly as when the rows are
/// scored one by one.
pub fn leaf_empc(counts: &[(usize, usize)], p: &ProfitParams) -> Result<f64> {
    let mut groups: Vec<ScoreGroup> = counts
        .iter()
        .filter(|&&(_, n)| n > 0)
        .map(|&(churners, n)| ScoreGroup {
            score: churners as f64 / n as f64,
            churners: churners as u64,
            nonchurners: (n - churners) as u64,
        })
        .collect();
    if groups.is_empty() {
        return Err(Error::EmptySample);
    }
    groups.sort_by(|a, b| b.score.total_cmp(&a.score));
    groups.dedup_by(|next, kept| {
        if next.score == kept.score {
            kept.churners += next.churners;
            kept.nonchurners += next.nonchurners;
            true
        } else {
            false
        }
    });
    Ok(RocCurve::from_groups(&groups).expected_max_profit(p)?.0)
}

const CACHE_LIMIT: usize = 1 << 18;

/// Memo of EMPC by the sorted `(churners, n)` leaf counts of a tree.
#[derive(Debug, Default)]
pub struct FitnessCache {
    map: Mutex<HashMap<Vec<(u32, u32)>, f64>>,
}

impl FitnessCache {
    pub fn empc(&self, tree: &Tree, p: &ProfitParams) -> Result<f64> {
        let mut key: Vec<(u32, u32)> = tree.leaves().iter().map(|l| (l.churners as u32, l.n as u32)).collect();
        key.sort_unstable();
        if let Some(&v) = self.map.lock().expect("cache lock").get(&key) {
            return Ok(v);
        }
        let counts: Vec<(usize, usize)> = key.iter().map(|&(c, n)| (c as usize, n as usize)).collect();
        let v = leaf_empc(&counts, p)?;
        let mut map = self.map.lock().expect("cache lock");
        if map.len() >= CACHE_LIMIT {
            map.clear();
        }
        map.insert(key, v);
        Ok(v)
    }

    pub fn fitness(&self, tree: &Tree, p: &ProfitParams, lambda: f64) -> Result<f64> {
        Ok(self.empc(tree, p)? - lambda * tree.leaf_count() as f64)
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Population statistics of one iteration (iteration 0 is the initial
/// population).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub best: f64,
    pub mean: f64,
    pub best_size: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitnessTrace {
    pub rows: Vec<TraceRow>,
}

impl FitnessTrace {
    pub fn best(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r.best)
    }

    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].best >= w[0].best)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io("<trace>", e))?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let rows = csv::Reader::from_reader(input)
            .deserialize()
            .collect::<std::result::Result<Vec<TraceRow>, _>>()?;
        Ok(FitnessTrace { rows })
    }
}

#[derive(Debug, Clone)]
pub struct EvolveResult {
    pub best: Tree,
    pub best_fitness: f64,
    pub trace: FitnessTrace,
    pub iterations: usize,
    /// Set when no depth-1 tree met the constraints and the search started
    /// from single leaves.
    pub warning: Option<String>,
}

fn slot_rng(seed: u64, iteration: usize, slot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((iteration as u64) << 32) | slot as u64);
    rng
}

/// Initial population: depth-1 trees with a random root split, resampled
/// up to [`MAX_ATTEMPTS`] times before falling back to a single leaf.
/// Errors if even a single leaf violates the constraints.
pub fn init_population(data: &Dataset, cfg: &EvolveConfig) -> Result<Vec<Tree>> {
    init_with(&Variation::new(data, cfg.constraints), cfg)
}

fn init_with(var: &Variation<'_>, cfg: &EvolveConfig) -> Result<Vec<Tree>> {
    cfg.validate()?;
    let stump = Tree::stump(Arc::new(var.data.schema().to_vec())).fit_leaves(var.data)?;
    if !stump.satisfies(&cfg.constraints) {
        return Err(Error::InvalidArgument(format!(
            "{} rows cannot satisfy a minimum leaf size of {}",
            var.data.n_rows(),
            cfg.constraints.min_leaf
        )));
    }
    Ok((0..cfg.population_size)
        .into_par_iter()
        .map(|slot| var.split(&stump, &mut slot_rng(cfg.seed, 0, slot)))
        .collect())
}

fn apply(var: &Variation<'_>, op: Operator, tree: &Tree, partner: &Tree, rng: &mut ChaCha8Rng) -> Tree {
    match op {
        Operator::Split => var.split(tree, rng),
        Operator::Prune => var.prune(tree, rng),
        Operator::MajorMutation => var.major(tree, rng),
        Operator::MinorMutation => var.minor(tree, rng),
        Operator::Crossover => var.crossover(tree, partner, rng).0,
    }
}

pub fn evolve(data: &Dataset, p: &ProfitParams, cfg: &EvolveConfig) -> Result<EvolveResult> {
    evolve_with_observer(data, p, cfg, |_, _, _| {})
}

/// [`evolve`] calling `observer(iteration, population, fitness)` after the
/// initial population and after every iteration.
pub fn evolve_with_observer<F>(
    data: &Dataset,
    p: &ProfitParams,
    cfg: &EvolveConfig,
    mut observer: F,
) -> Result<EvolveResult>
where
    F: FnMut(usize, &[Tree], &[f64]),
{
    p.validate()?;
    let var = Variation::new(data, cfg.constraints);
    let mut population = init_with(&var, cfg)?;
    let warning = population
        .iter()
        .all(|t| t.leaf_count() == 1)
        .then(|| "no depth-1 tree satisfies the constraints; starting from single leaves".to_string());
    let cache = FitnessCache::default();
    let mut fit = population
        .par_iter()
        .map(|t| cache.fitness(t, p, cfg.lambda))
        .collect::<Result<Vec<f64>>>()?;

    let elite = cfg.elite_size();
    let elite_mean = |fit: &[f64]| {
        let mut sorted = fit.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        sorted[..elite].iter().sum::<f64>() / elite as f64
    };
    let best_slot = |fit: &[f64]| (0..fit.len()).fold(0, |b, i| if fit[i] > fit[b] { i } else { b });
    let row = |iteration: usize, pop: &[Tree], fit: &[f64]| {
        let b = best_slot(fit);
        TraceRow {
            iteration,
            best: fit[b],
            mean: fit.iter().sum::<f64>() / fit.len() as f64,
            best_size: pop[b].leaf_count(),
        }
    };

    let mut trace = FitnessTrace {
        rows: vec![row(0, &population, &fit)],
    };
    observer(0, &population, &fit);
    let b = best_slot(&fit);
    let (mut best, mut best_fitness) = (population[b].clone(), fit[b]);
    let mut best_elite = elite_mean(&fit);
    let mut stale = 0;
    let mut iterations = 0;

    for iteration in 1..=cfg.max_iterations {
        let candidates = (0..population.len())
            .into_par_iter()
            .map(|slot| {
                let mut rng = slot_rng(cfg.seed, iteration, slot);
                let op = cfg.draw_operator(&mut rng);
                let partner = if op == Operator::Crossover {
                    &population[rng.gen_range(0..population.len())]
                } else {
                    &population[slot]
                };
                let cand = apply(&var, op, &population[slot], partner, &mut rng);
                let f = cache.fitness(&cand, p, cfg.lambda)?;
                Ok((cand, f))
            })
            .collect::<Result<Vec<(Tree, f64)>>>()?;
        for (slot, (cand, f)) in candidates.into_iter().enumerate() {
            if f >= fit[slot] {
                population[slot] = cand;
                fit[slot] = f;
            }
        }
        debug_assert!(population.iter().all(|t| t.satisfies(&cfg.constraints)));
        iterations = iteration;
        trace.rows.push(row(iteration, &population, &fit));
        observer(iteration, &population, &fit);

        let b = best_slot(&fit);
        if fit[b] > best_fitness {
            best = population[b].clone();
            best_fitness = fit[b];
        }
        let m = elite_mean(&fit);
        if m > best_elite + 1e-12 {
            best_elite = m;
            stale = 0;
        } else {
            stale += 1;
        }
        if iteration >= cfg.min_iterations && stale >= cfg.convergence_window {
            break;
        }
    }

    Ok(EvolveResult {
        best,
        best_fitness,
        trace,
        iterations,
        warning,
    })
}
