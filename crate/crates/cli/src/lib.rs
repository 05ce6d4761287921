//! Batch command-line front end for `proftree`.
//!
//! Each subcommand resolves its settings (flag, then config file, then
//! built-in default), runs inside a rayon pool capped by `--jobs`, and
//! writes its artifacts to the output directory.

pub mod config;

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use proftree::data::{load_csv, load_csv_with_schema, synth_churn, write_csv, Dataset, SchemaOverride};
use proftree::evaluate::{ProfitParams, ProfitReport, ScoredSample};
use proftree::evolve::{evolve, EvolveConfig};
use proftree::tree::{ExportFormat, Tree, TreeConstraints};
use proftree::tune::{benchmark, tune_lambda, LambdaGrid};

pub use config::{ConfigFile, NumberList};

/// Error with the process exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    /// 1 for computation errors, 2 for usage and I/O errors.
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    pub fn compute(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<proftree::Error> for CliError {
    fn from(e: proftree::Error) -> Self {
        use proftree::Error as E;
        let code = match e {
            E::Io { .. }
            | E::Csv(_)
            | E::Json(_)
            | E::MissingLabel(_)
            | E::BadLabel { .. }
            | E::EmptyDataset
            | E::Schema(_)
            | E::SchemaMismatch(_)
            | E::InvalidArgument(_) => 2,
            _ => 1,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "proftree",
    version,
    about = "Profit-driven decision trees for churn prediction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve a tree on a dataset and write it with its fitness trace and report.
    Train(TrainArgs),
    /// Score a dataset with a saved tree; write the report and campaign list.
    Evaluate(EvaluateArgs),
    /// Choose λ by 5×2 cross-validated EMPC over a grid.
    Tune(TuneArgs),
    /// Compare the evolved tree with greedy and constant baselines on 5×2 folds.
    Bench(BenchArgs),
    /// Generate a synthetic churn dataset with a planted depth-2 tree.
    Synth(SynthArgs),
    /// Convert a saved tree to JSON, Graphviz DOT or text.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// `key = value` file supplying defaults for any flag below.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for all randomness; drawn from the OS and logged when absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Maximum worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    /// Name of the churn label column.
    #[arg(long)]
    pub label: Option<String>,
    /// Column kind override file (`name = kind[: level, ...]`).
    #[arg(long)]
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ProfitArgs {
    /// Customer lifetime value.
    #[arg(long)]
    pub clv: Option<f64>,
    /// Cost of the retention offer.
    #[arg(long)]
    pub offer_cost: Option<f64>,
    /// Cost of contacting a customer.
    #[arg(long)]
    pub contact_cost: Option<f64>,
    /// Shape α′ of the Beta prior on the acceptance rate.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Shape β′ of the Beta prior on the acceptance rate.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Fixed acceptance rate for MPC (default: prior mean).
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub population: Option<usize>,
    /// Fitness penalty per leaf.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Split, prune, major, minor, crossover probabilities, comma-separated.
    #[arg(long)]
    pub operator_probs: Option<NumberList>,
    #[arg(long)]
    pub min_iterations: Option<usize>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub convergence_window: Option<usize>,
    #[arg(long)]
    pub elite_fraction: Option<f64>,
    #[arg(long)]
    pub min_internal: Option<usize>,
    #[arg(long)]
    pub min_leaf: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub max_leaves: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GridArgs {
    /// Explicit λ values, comma-separated.
    #[arg(long)]
    pub grid: Option<NumberList>,
    #[arg(long)]
    pub grid_min: Option<f64>,
    #[arg(long)]
    pub grid_max: Option<f64>,
    #[arg(long)]
    pub grid_count: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Training CSV.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub data_args: DataArgs,
    #[command(flatten)]
    pub profit: ProfitArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Tree JSON written by `train`.
    #[arg(long)]
    pub tree: PathBuf,
    /// CSV to score.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub label: Option<String>,
    #[command(flatten)]
    pub profit: ProfitArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub data_args: DataArgs,
    #[command(flatten)]
    pub profit: ProfitArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Dataset CSVs; repeat the flag for several.
    #[arg(long, required = true)]
    pub data: Vec<PathBuf>,
    #[command(flatten)]
    pub data_args: DataArgs,
    #[command(flatten)]
    pub profit: ProfitArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.3)]
    pub churn_rate: f64,
    #[arg(long, default_value_t = 3)]
    pub numeric: usize,
    #[arg(long, default_value_t = 2)]
    pub categorical: usize,
    /// File name of the generated CSV inside the output directory.
    #[arg(long, default_value = "synth.csv")]
    pub name: String,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub tree: PathBuf,
    /// json, dot or text.
    #[arg(long, default_value = "text")]
    pub format: String,
    /// Write here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Settings shared by the subcommands after merging flags, the config file
/// and defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub label: String,
    pub seed: u64,
    /// Whether the seed was drawn from the OS.
    pub seed_generated: bool,
    pub jobs: Option<usize>,
    pub out: PathBuf,
    pub profit: ProfitParams,
    pub evolve: EvolveConfig,
    pub grid: LambdaGrid,
}

impl RunConfig {
    pub fn resolve(
        common: &CommonArgs,
        label: Option<String>,
        profit: &ProfitArgs,
        search: &SearchArgs,
        grid: &GridArgs,
    ) -> Result<Self> {
        let file = match &common.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let seed = file.pick(common.seed, "seed")?;
        let seed_generated = seed.is_none();
        let seed = seed.unwrap_or_else(rand::random);

        let dp = ProfitParams::default();
        let profit = ProfitParams {
            clv: file.pick(profit.clv, "clv")?.unwrap_or(dp.clv),
            offer_cost: file.pick(profit.offer_cost, "offer_cost")?.unwrap_or(dp.offer_cost),
            contact_cost: file
                .pick(profit.contact_cost, "contact_cost")?
                .unwrap_or(dp.contact_cost),
            alpha: file.pick(profit.alpha, "alpha")?.unwrap_or(dp.alpha),
            beta: file.pick(profit.beta, "beta")?.unwrap_or(dp.beta),
            gamma_point: file.pick(profit.gamma, "gamma")?.or(dp.gamma_point),
        };
        profit.validate()?;

        let de = EvolveConfig::default();
        let dc = TreeConstraints::default();
        let constraints = TreeConstraints {
            min_internal: file
                .pick(search.min_internal, "min_internal")?
                .unwrap_or(dc.min_internal),
            min_leaf: file.pick(search.min_leaf, "min_leaf")?.unwrap_or(dc.min_leaf),
            max_depth: file.pick(search.max_depth, "max_depth")?.unwrap_or(dc.max_depth),
            max_leaves: file.pick(search.max_leaves, "max_leaves")?.or(dc.max_leaves),
        };
        let probs = match file.pick(search.operator_probs.clone(), "operator_probs")? {
            None => de.operator_probs,
            Some(NumberList(v)) => v
                .try_into()
                .map_err(|v: Vec<f64>| CliError::usage(format!("need 5 operator probabilities, got {}", v.len())))?,
        };
        let evolve = EvolveConfig {
            population_size: file
                .pick(search.population, "population")?
                .unwrap_or(de.population_size),
            operator_probs: probs,
            lambda: file.pick(search.lambda, "lambda")?.unwrap_or(de.lambda),
            min_iterations: file
                .pick(search.min_iterations, "min_iterations")?
                .unwrap_or(de.min_iterations),
            convergence_window: file
                .pick(search.convergence_window, "convergence_window")?
                .unwrap_or(de.convergence_window),
            elite_fraction: file
                .pick(search.elite_fraction, "elite_fraction")?
                .unwrap_or(de.elite_fraction),
            max_iterations: file
                .pick(search.max_iterations, "max_iterations")?
                .unwrap_or(de.max_iterations),
            constraints,
            seed,
        };
        evolve.validate()?;

        let grid = match file.pick(grid.grid.clone(), "grid")? {
            Some(NumberList(v)) => LambdaGrid::new(v)?,
            None => {
                let d = LambdaGrid::default();
                let min = file.pick(grid.grid_min, "grid_min")?.unwrap_or(d.values()[0]);
                let max = file.pick(grid.grid_max, "grid_max")?.unwrap_or(d.values()[d.len() - 1]);
                let count = file.pick(grid.grid_count, "grid_count")?.unwrap_or(d.len());
                LambdaGrid::log_spaced(min, max, count)?
            }
        };

        let jobs = file.pick(common.jobs, "jobs")?;
        if jobs == Some(0) {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        Ok(RunConfig {
            label: file.pick(label, "label")?.unwrap_or_else(|| "churn".to_string()),
            seed,
            seed_generated,
            jobs,
            out: common.out.clone(),
            profit,
            evolve,
            grid,
        })
    }

    /// The resolved settings as a config file that reproduces them.
    pub fn render(&self) -> String {
        let p = &self.profit;
        let e = &self.evolve;
        let c = &e.constraints;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("label", self.label.clone());
        kv("seed", self.seed.to_string());
        kv("clv", p.clv.to_string());
        kv("offer_cost", p.offer_cost.to_string());
        kv("contact_cost", p.contact_cost.to_string());
        kv("alpha", p.alpha.to_string());
        kv("beta", p.beta.to_string());
        if let Some(g) = p.gamma_point {
            kv("gamma", g.to_string());
        }
        kv("population", e.population_size.to_string());
        kv("lambda", e.lambda.to_string());
        kv("operator_probs", NumberList(e.operator_probs.to_vec()).to_string());
        kv("min_iterations", e.min_iterations.to_string());
        kv("max_iterations", e.max_iterations.to_string());
        kv("convergence_window", e.convergence_window.to_string());
        kv("elite_fraction", e.elite_fraction.to_string());
        kv("min_internal", c.min_internal.to_string());
        kv("min_leaf", c.min_leaf.to_string());
        kv("max_depth", c.max_depth.to_string());
        if let Some(m) = c.max_leaves {
            kv("max_leaves", m.to_string());
        }
        kv("grid", NumberList(self.grid.values().to_vec()).to_string());
        s
    }

    fn log_seed(&self) {
        if self.seed_generated {
            eprintln!("proftree: no --seed given, using seed {}", self.seed);
        }
    }

    fn install<T: Send>(&self, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
        match self.jobs {
            None => f(),
            Some(j) => rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| CliError::usage(format!("cannot start {j} workers: {e}")))?
                .install(f),
        }
    }

    fn output(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("cannot create {}: {e}", dir.display())))?;
        }
    }
    fs::write(path, contents).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

fn load_training(path: &Path, label: &str, schema: Option<&Path>) -> Result<Dataset> {
    let ov = schema.map(SchemaOverride::from_file).transpose()?;
    let (data, report) = load_csv(path, label, ov.as_ref())?;
    eprint!("proftree: {}: {report}", path.display());
    Ok(data)
}

/// Report table plus the campaign-size and cutoff details.
pub fn render_report(name: &str, r: &ProfitReport) -> String {
    let mut s = ProfitReport::table(&[(name, r)]);
    let _ = writeln!(s, "N = {}, churners = {}", r.n, r.churners);
    let _ = writeln!(
        s,
        "eta_empc = {:.4}, eta_mpc = {:.4}, t_opt = {:.4}",
        r.eta_empc, r.eta_mpc, r.t_opt
    );
    s
}

fn report_json(r: &ProfitReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(r).map_err(|e| CliError::compute(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn cmd_train(args: &TrainArgs) -> Result<ProfitReport> {
    let cfg = RunConfig::resolve(
        &args.common,
        args.data_args.label.clone(),
        &args.profit,
        &args.search,
        &GridArgs::default(),
    )?;
    cfg.log_seed();
    let data = load_training(&args.data, &cfg.label, args.data_args.schema.as_deref())?;
    let result = cfg.install(|| Ok(evolve(&data, &cfg.profit, &cfg.evolve)?))?;
    if let Some(w) = &result.warning {
        eprintln!("proftree: warning: {w}");
    }
    let tree = &result.best;
    let sample = ScoredSample::new(tree.score_dataset(&data), data.labels().to_vec())?;
    let report = ProfitReport::compute(&sample, &cfg.profit)?;

    for format in [ExportFormat::Json, ExportFormat::Dot, ExportFormat::Text] {
        write_file(
            &cfg.output(&format!("tree.{}", format.extension())),
            tree.export(format),
        )?;
    }
    let mut trace = Vec::new();
    result.trace.write_csv(&mut trace)?;
    write_file(&cfg.output("trace.csv"), trace)?;
    let text = render_report("proftree", &report);
    write_file(&cfg.output("report.txt"), &text)?;
    write_file(&cfg.output("report.json"), report_json(&report)?)?;
    write_file(&cfg.output("config.txt"), cfg.render())?;
    eprintln!(
        "proftree: {} iterations, best fitness {:.6}, {} leaves",
        result.iterations,
        result.best_fitness,
        tree.leaf_count()
    );
    print!("{text}");
    Ok(report)
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<ProfitReport> {
    let cfg = RunConfig::resolve(
        &args.common,
        args.label.clone(),
        &args.profit,
        &SearchArgs::default(),
        &GridArgs::default(),
    )?;
    let tree = Tree::from_json(&read_file(&args.tree)?)?;
    let (data, ingest) = load_csv_with_schema(&args.data, &cfg.label, tree.columns())?;
    eprint!("proftree: {}: {ingest}", args.data.display());
    let (scores, pred) = tree.score_dataset_with_report(&data);
    if pred.unseen_level_rows > 0 {
        eprintln!(
            "proftree: {} rows carried levels unknown to the tree and were routed right",
            pred.unseen_level_rows
        );
    }
    let sample = ScoredSample::new(scores, data.labels().to_vec())?;
    let report = ProfitReport::compute(&sample, &cfg.profit)?;

    let mut w = String::new();
    w.push_str("row_id,score,rank\n");
    for entry in report.campaign(&sample)? {
        let _ = writeln!(w, "{},{},{}", data.row_ids()[entry.row], entry.score, entry.rank);
    }
    write_file(&cfg.output("campaign.csv"), w)?;
    let text = render_report("proftree", &report);
    write_file(&cfg.output("report.txt"), &text)?;
    write_file(&cfg.output("report.json"), report_json(&report)?)?;
    print!("{text}");
    Ok(report)
}

pub fn cmd_tune(args: &TuneArgs) -> Result<proftree::tune::TuneResult> {
    let cfg = RunConfig::resolve(
        &args.common,
        args.data_args.label.clone(),
        &args.profit,
        &args.search,
        &args.grid,
    )?;
    cfg.log_seed();
    let data = load_training(&args.data, &cfg.label, args.data_args.schema.as_deref())?;
    let result = cfg.install(|| Ok(tune_lambda(&data, &cfg.profit, &cfg.grid, &cfg.evolve, cfg.seed)?))?;
    let mut curve = Vec::new();
    result.write_curve_csv(&mut curve)?;
    write_file(&cfg.output("tuning.csv"), curve)?;
    let mut json = serde_json::to_string_pretty(&result).map_err(|e| CliError::compute(e.to_string()))?;
    json.push('\n');
    write_file(&cfg.output("tuning.json"), json)?;
    println!("{:>12} {:>12} {:>12}", "lambda", "mean EMPC", "sd");
    for p in &result.points {
        let cell = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!("{:>12.6} {:>12} {:>12}", p.lambda, cell(p.mean_empc), cell(p.sd_empc));
    }
    println!("lambda_opt = {}", result.lambda_opt);
    Ok(result)
}

pub fn cmd_bench(args: &BenchArgs) -> Result<proftree::tune::BenchReport> {
    let cfg = RunConfig::resolve(
        &args.common,
        args.data_args.label.clone(),
        &args.profit,
        &args.search,
        &args.grid,
    )?;
    cfg.log_seed();
    let mut datasets = Vec::new();
    for path in &args.data {
        let name = path
            .file_stem()
            .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        datasets.push((name, load_training(path, &cfg.label, args.data_args.schema.as_deref())?));
    }
    let report = cfg.install(|| Ok(benchmark(&datasets, &cfg.profit, &cfg.evolve, &cfg.grid, cfg.seed)?))?;
    write_file(&cfg.output("bench.json"), report.to_json()?)?;
    let text = report.text();
    write_file(&cfg.output("bench.txt"), &text)?;
    let mut box_csv = Vec::new();
    report.write_boxplot_csv(&mut box_csv)?;
    write_file(&cfg.output("boxplot.csv"), box_csv)?;
    print!("{text}");
    Ok(report)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<PathBuf> {
    let file = match &args.common.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let seed = file.pick(args.common.seed, "seed")?;
    let seed = seed.unwrap_or_else(|| {
        let s = rand::random();
        eprintln!("proftree: no --seed given, using seed {s}");
        s
    });
    let s = synth_churn(args.n, args.churn_rate, args.numeric, args.categorical, seed)?;
    let mut csv = Vec::new();
    write_csv(&s.dataset, &mut csv)?;
    let path = args.common.out.join(&args.name);
    write_file(&path, csv)?;
    let stem = Path::new(&args.name)
        .file_stem()
        .map_or("synth".into(), |s| s.to_string_lossy().into_owned());
    write_file(&args.common.out.join(format!("{stem}_oracle.json")), s.oracle.to_json())?;
    eprintln!(
        "proftree: wrote {} rows ({} churners) to {}",
        s.dataset.n_rows(),
        s.dataset.churners(),
        path.display()
    );
    Ok(path)
}

pub fn cmd_export(args: &ExportArgs) -> Result<String> {
    let format: ExportFormat = args
        .format
        .parse()
        .map_err(|e: proftree::Error| CliError::usage(e.to_string()))?;
    let tree = Tree::from_json(&read_file(&args.tree)?)?;
    let text = tree.export(format);
    match &args.output {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(text)
}

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Train(a) => cmd_train(a).map(drop),
        Command::Evaluate(a) => cmd_evaluate(a).map(drop),
        Command::Tune(a) => cmd_tune(a).map(drop),
        Command::Bench(a) => cmd_bench(a).map(drop),
        Command::Synth(a) => cmd_synth(a).map(drop),
        Command::Export(a) => cmd_export(a).map(drop),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_from<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::usage(e.to_string()))?;
    run(cli)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(args: &[&str]) -> Result<RunConfig> {
        let mut full = vec!["proftree", "tune", "--data", "x.csv"];
        full.extend(args);
        let cli = Cli::try_parse_from(full).map_err(|e| CliError::usage(e.to_string()))?;
        let Command::Tune(a) = cli.command else { unreachable!() };
        RunConfig::resolve(&a.common, a.data_args.label, &a.profit, &a.search, &a.grid)
    }

    #[test]
    fn rendered_config_resolves_to_itself() {
        let cfg = resolve(&[
            "--seed",
            "5",
            "--clv",
            "300",
            "--gamma",
            "0.25",
            "--max-leaves",
            "6",
            "--grid",
            "0.1,0.2",
        ])
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.txt");
        fs::write(&path, cfg.render()).unwrap();
        let again = resolve(&["--config", path.to_str().unwrap()]).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn flags_override_file_and_defaults_fill_the_rest() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.txt");
        fs::write(&path, "seed = 1\nlambda = 0.5\nmin_leaf = 12\n").unwrap();
        let cfg = resolve(&["--config", path.to_str().unwrap(), "--lambda", "0.2"]).unwrap();
        assert_eq!(cfg.evolve.lambda, 0.2);
        assert_eq!(cfg.evolve.constraints.min_leaf, 12);
        assert_eq!(cfg.evolve.population_size, EvolveConfig::default().population_size);
        assert_eq!(cfg.seed, 1);
        assert!(!cfg.seed_generated);
        assert_eq!(cfg.grid, LambdaGrid::default());
    }

    #[test]
    fn invalid_settings_are_usage_errors() {
        assert_eq!(resolve(&["--operator-probs", "0.5,0.5"]).unwrap_err().code, 2);
        assert_eq!(resolve(&["--clv", "-1"]).unwrap_err().code, 2);
        assert_eq!(resolve(&["--grid", "-0.1"]).unwrap_err().code, 2);
        assert!(resolve(&[]).unwrap().seed_generated);
    }

    #[test]
    fn error_codes_follow_error_kind() {
        assert_eq!(CliError::from(proftree::Error::EmptyDataset).code, 2);
        assert_eq!(CliError::from(proftree::Error::SingleClass).code, 1);
        assert_eq!(CliError::from(proftree::Error::EmptyLeaf { leaf: 0 }).code, 1);
    }
}
