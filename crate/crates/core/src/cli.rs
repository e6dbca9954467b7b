//! Command-line interface: format sampling, search runs, analysis, plotting
//! data series, and task conversion.

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::analysis;
use crate::constants::ConstantSets;
use crate::error::{Error, Result};
use crate::evaluator::remote::{RemoteClient, RemoteConfig, RemoteTaskEvaluator};
use crate::evaluator::{RecordingEvaluator, SyntheticEvaluator, SyntheticSurface};
use crate::format::{render_format, FormatAst};
use crate::metrics::{EvalRecord, Metric};
use crate::report;
use crate::search::{self, Algorithm, Arm, SearchConfig};
use crate::spacegen;
use crate::task::{self, TaskSpec};

#[derive(Parser)]
#[command(
    name = "formatprobe",
    version,
    about = "Quantify LLM accuracy spread across equivalent prompt formats"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample restriction-valid formats equivalent to a task's original.
    SampleFormats(SampleArgs),
    /// Run a spread search over sampled formats and write artifacts.
    Run(RunArgs),
    /// Aggregate evaluation records into accuracy, spread, and
    /// per-constant dissimilarity tables.
    Analyze(AnalyzeArgs),
    /// Emit CSV series for plotting (spread gain, atomic-change impact,
    /// per-constant boxes, cross-model flips).
    PlotData(PlotArgs),
    /// Convert a Super-NaturalInstructions task JSON into the native schema.
    ConvertTask(ConvertArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EvaluatorKind {
    Synthetic,
    Remote,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Prefix,
    Ranking,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Metric {
        match m {
            MetricArg::Prefix => Metric::Prefix,
            MetricArg::Ranking => Metric::Ranking,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgorithmArg {
    Thompson,
    Ucb,
    Naive,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Algorithm {
        match a {
            AlgorithmArg::Thompson => Algorithm::Thompson,
            AlgorithmArg::Ucb => Algorithm::Ucb,
            AlgorithmArg::Naive => Algorithm::Naive,
        }
    }
}

fn load_sets(path: &Option<PathBuf>) -> Result<ConstantSets> {
    let sets = match path {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p).map_err(|e| Error::Load {
            path: p.display().to_string(),
            message: e.to_string(),
        })?)?,
        None => ConstantSets::default(),
    };
    sets.validate()?;
    Ok(sets)
}

// --- sample-formats --------------------------------------------------------

#[derive(Args)]
struct SampleArgs {
    /// Task file (native schema).
    #[arg(long)]
    task: PathBuf,
    /// Number of formats to sample (excluding the original).
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Constant pools JSON; defaults to the built-in pools.
    #[arg(long)]
    constants: Option<PathBuf>,
    /// Output JSON path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SampleOutput {
    seed: u64,
    rejection_rate: f64,
    formats: Vec<report::FormatSummary>,
}

fn preview(format: &FormatAst, sets: &ConstantSets, task: &TaskSpec) -> String {
    task.instances
        .first()
        .and_then(|inst| render_format(format, sets, inst, "").ok())
        .unwrap_or_default()
}

fn sample_arms(
    task: &TaskSpec,
    sets: &ConstantSets,
    count: usize,
    seed: u64,
) -> Result<(Vec<Arm>, spacegen::SampleStats)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exclude = vec![task.original_format.assignment()];
    let (sampled, stats) = spacegen::sample_equivalent_with_stats(
        &task.original_format,
        sets,
        &mut rng,
        count,
        &exclude,
    )?;
    let mut arms = vec![Arm {
        format_id: "f000".into(),
        format: task.original_format.clone(),
    }];
    for (i, format) in sampled.into_iter().enumerate() {
        arms.push(Arm {
            format_id: format!("f{:03}", i + 1),
            format,
        });
    }
    Ok((arms, stats))
}

fn cmd_sample(args: &SampleArgs) -> Result<()> {
    let sets = load_sets(&args.constants)?;
    let task = task::load_task(&args.task, &sets)?;
    let (arms, stats) = sample_arms(&task, &sets, args.count, args.seed)?;
    let output = SampleOutput {
        seed: args.seed,
        rejection_rate: stats.rejection_rate(),
        formats: arms
            .iter()
            .map(|a| {
                report::summarize_format(
                    &a.format_id,
                    &a.format,
                    &sets,
                    preview(&a.format, &sets, &task),
                )
            })
            .collect(),
    };
    match &args.out {
        Some(path) => report::write_json(path, &output)?,
        None => println!("{}", serde_json::to_string_pretty(&output)?),
    }
    Ok(())
}

// --- run -------------------------------------------------------------------

/// Config-file form of the run options. Explicit CLI flags win over these.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunFileConfig {
    pub evaluator: Option<String>,
    pub metric: Option<Metric>,
    pub n_shots: Option<usize>,
    pub formats: Option<usize>,
    pub budget: Option<u64>,
    pub batch: Option<u64>,
    pub algorithm: Option<Algorithm>,
    pub ucb_c: Option<f64>,
    pub x0: Option<f64>,
    pub seed: Option<u64>,
    pub verify: Option<bool>,
    pub surface_alpha: Option<f64>,
    pub surface_beta: Option<f64>,
    pub remote: Option<RemoteConfig>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    task: PathBuf,
    /// JSON file with the same options; explicit flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    constants: Option<PathBuf>,
    #[arg(long, value_enum)]
    evaluator: Option<EvaluatorKind>,
    #[arg(long, value_enum)]
    metric: Option<MetricArg>,
    #[arg(long)]
    n_shots: Option<usize>,
    /// Total formats K, including the original.
    #[arg(long)]
    formats: Option<usize>,
    /// Evaluation budget E.
    #[arg(long)]
    budget: Option<u64>,
    /// Mini-batch size B.
    #[arg(long)]
    batch: Option<u64>,
    #[arg(long, value_enum)]
    algorithm: Option<AlgorithmArg>,
    #[arg(long)]
    ucb_c: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Re-evaluate the chosen best/worst formats on the full data.
    #[arg(long)]
    verify: bool,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    // synthetic surface (accuracies drawn from Beta(alpha, beta))
    #[arg(long)]
    surface_alpha: Option<f64>,
    #[arg(long)]
    surface_beta: Option<f64>,
    // remote evaluator
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    max_tokens: Option<u32>,
    #[arg(long)]
    timeout_secs: Option<u64>,
    #[arg(long)]
    retries: Option<u32>,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    cache: Option<PathBuf>,
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let file_cfg: RunFileConfig = match &args.config {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p).map_err(|e| Error::Load {
            path: p.display().to_string(),
            message: e.to_string(),
        })?)?,
        None => RunFileConfig::default(),
    };
    let sets = load_sets(&args.constants)?;
    let task = task::load_task(&args.task, &sets)?;

    let evaluator_kind = match args.evaluator {
        Some(k) => k,
        None => match file_cfg.evaluator.as_deref() {
            Some("remote") => EvaluatorKind::Remote,
            Some("synthetic") | None => EvaluatorKind::Synthetic,
            Some(other) => {
                return Err(Error::Config(format!("unknown evaluator {other:?}")));
            }
        },
    };
    let metric: Metric = args
        .metric
        .map(Metric::from)
        .or(file_cfg.metric)
        .unwrap_or(Metric::Prefix);
    let n_shots = args.n_shots.or(file_cfg.n_shots).unwrap_or(1);
    let k_formats = args.formats.or(file_cfg.formats).unwrap_or(10);
    if k_formats < 2 {
        return Err(Error::Config("need at least 2 formats".into()));
    }
    let seed = args.seed.or(file_cfg.seed).unwrap_or(0);
    let search_cfg = SearchConfig {
        budget: args.budget.or(file_cfg.budget).unwrap_or(2000),
        batch: args.batch.or(file_cfg.batch).unwrap_or(20),
        algorithm: args
            .algorithm
            .map(Algorithm::from)
            .or(file_cfg.algorithm)
            .unwrap_or(Algorithm::Thompson),
        ucb_c: args.ucb_c.or(file_cfg.ucb_c).unwrap_or(2.0),
        x0: args.x0.or(file_cfg.x0).unwrap_or(0.5),
        seed,
        verify: args.verify || file_cfg.verify.unwrap_or(false),
    };

    let (arms, stats) = sample_arms(&task, &sets, k_formats - 1, seed)?;
    log::info!(
        "sampled {} formats (rejection rate {:.3})",
        arms.len(),
        stats.rejection_rate()
    );
    let instances = task.eval_instances();
    if instances.is_empty() {
        return Err(Error::EmptyInput("task has no evaluation instances".into()));
    }

    std::fs::create_dir_all(&args.out_dir)?;
    let (search_report, mut records) = match evaluator_kind {
        EvaluatorKind::Synthetic => {
            let alpha = args.surface_alpha.or(file_cfg.surface_alpha).unwrap_or(2.0);
            let beta = args.surface_beta.or(file_cfg.surface_beta).unwrap_or(2.0);
            let inner =
                SyntheticEvaluator::new(seed, SyntheticSurface::Beta { alpha, beta });
            let evaluator = RecordingEvaluator::new(inner, metric);
            let report = search::run_search(&search_cfg, &arms, &instances, &evaluator)?;
            (report, evaluator.take_records())
        }
        EvaluatorKind::Remote => {
            let base = file_cfg.remote.clone().unwrap_or(RemoteConfig {
                endpoint: String::new(),
                model: String::new(),
                auth_token: None,
                max_tokens: 20,
                timeout_secs: 60,
                max_retries: 3,
                parallelism: 4,
                cache_path: None,
            });
            let remote_cfg = RemoteConfig {
                endpoint: args.endpoint.clone().unwrap_or(base.endpoint),
                model: args.model.clone().unwrap_or(base.model),
                auth_token: base.auth_token,
                max_tokens: args.max_tokens.unwrap_or(base.max_tokens),
                timeout_secs: args.timeout_secs.unwrap_or(base.timeout_secs),
                max_retries: args.retries.unwrap_or(base.max_retries),
                parallelism: args.parallelism.unwrap_or(base.parallelism),
                cache_path: args.cache.clone().or(base.cache_path),
            };
            if remote_cfg.endpoint.is_empty() || remote_cfg.model.is_empty() {
                return Err(Error::Config(
                    "remote evaluator needs --endpoint and --model".into(),
                ));
            }
            let client = RemoteClient::new(remote_cfg)?;
            let evaluator = RemoteTaskEvaluator::new(client, &task, &sets, metric, n_shots);
            let report = search::run_search(&search_cfg, &arms, &instances, &evaluator)?;
            log::info!("remote calls: {}", evaluator.client.remote_calls());
            (report, evaluator.take_records())
        }
    };

    report::write_json(&args.out_dir.join("report.json"), &search_report)?;
    report::write_records(&args.out_dir.join("records.jsonl"), &mut records)?;
    report::write_summary_csv(&args.out_dir.join("summary.csv"), &search_report)?;
    let summaries: Vec<report::FormatSummary> = arms
        .iter()
        .map(|a| {
            report::summarize_format(
                &a.format_id,
                &a.format,
                &sets,
                preview(&a.format, &sets, &task),
            )
        })
        .collect();
    report::write_json(&args.out_dir.join("formats.json"), &summaries)?;
    println!(
        "spread estimate {:.4} (best {} {:.4}, worst {} {:.4}); artifacts in {}",
        search_report.spread_estimate,
        search_report.best.format_id,
        search_report.best.estimate,
        search_report.worst.format_id,
        search_report.worst.estimate,
        args.out_dir.display()
    );
    Ok(())
}

// --- analyze ---------------------------------------------------------------

#[derive(Args)]
struct AnalyzeArgs {
    /// Evaluation records (JSONL) from a run.
    #[arg(long)]
    records: PathBuf,
    /// formats.json from the same run; enables per-constant dissimilarity.
    #[arg(long)]
    formats: Option<PathBuf>,
    #[arg(long, default_value = "analysis")]
    out_dir: PathBuf,
    #[arg(long, default_value = "model")]
    model_id: String,
    #[arg(long, default_value_t = 1)]
    n_shots: usize,
    /// Minimum samples per constant-value group.
    #[arg(long, default_value_t = 5)]
    min_group: usize,
}

fn read_records(path: &Path) -> Result<Vec<EvalRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Load {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

#[derive(Deserialize)]
struct FormatSummaryIn {
    format_id: String,
    assignment: Vec<usize>,
    groups: Vec<GroupIn>,
}

#[derive(Deserialize)]
struct GroupIn {
    pool: crate::constants::Pool,
    value: String,
}

fn read_formats(path: &Path) -> Result<Vec<FormatSummaryIn>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Load {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn format_accuracies(records: &[EvalRecord]) -> BTreeMap<String, f64> {
    analysis::accuracy_table(records, "", 0)
        .into_iter()
        .map(|r| (r.format_id, r.accuracy))
        .collect()
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let records = read_records(&args.records)?;
    if records.is_empty() {
        return Err(Error::EmptyInput("records".into()));
    }
    std::fs::create_dir_all(&args.out_dir)?;
    let table = analysis::accuracy_table(&records, &args.model_id, args.n_shots);
    report::write_accuracy_csv(&args.out_dir.join("accuracy.csv"), &table)?;

    let accs: Vec<f64> = table.iter().map(|r| r.accuracy).collect();
    let spread = analysis::spread(&accs)?;
    let mut writer = csv::Writer::from_path(args.out_dir.join("spread.csv"))?;
    writer.write_record(["statistic", "value"])?;
    writer.write_record(["spread", &spread.to_string()])?;
    writer.write_record(["n_formats", &accs.len().to_string()])?;
    writer.flush()?;

    if let Some(formats_path) = &args.formats {
        let formats = read_formats(formats_path)?;
        let by_acc = format_accuracies(&records);
        let n_groups = formats.first().map_or(0, |f| f.groups.len());
        let mut writer =
            csv::Writer::from_path(args.out_dir.join("dissimilarity.csv"))?;
        writer.write_record(["group", "pool", "value_a", "value_b", "verdict"])?;
        for g in 0..n_groups {
            let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
            let mut pool = String::new();
            for f in &formats {
                let Some(&acc) = by_acc.get(&f.format_id) else {
                    continue;
                };
                pool = serde_json::to_string(&f.groups[g].pool)?;
                groups
                    .entry(f.groups[g].value.clone())
                    .or_default()
                    .push(acc);
            }
            for verdict in analysis::constant_dissimilarity(&groups, args.min_group)? {
                writer.write_record([
                    &g.to_string(),
                    &pool,
                    &verdict.value_a,
                    &verdict.value_b,
                    &format!("{:?}", verdict.verdict).to_lowercase(),
                ])?;
            }
        }
        writer.flush()?;
    }
    println!("analysis written to {}", args.out_dir.display());
    Ok(())
}

// --- plot-data -------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlotKind {
    /// P(spread gain >= d) when growing the format sample from k1 to k2.
    SpreadGain,
    /// Exceedance curve of |Δ accuracy| over single-constant changes.
    AtomicHist,
    /// Box/whisker statistics per constant value.
    Box,
    /// Cross-model flip probability vs threshold d.
    Flip,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long, value_enum)]
    kind: PlotKind,
    #[arg(long)]
    records: Option<PathBuf>,
    /// Second model's records (flip plots).
    #[arg(long)]
    records_b: Option<PathBuf>,
    #[arg(long)]
    formats: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    k1: usize,
    /// Comma-separated k2 grid.
    #[arg(long, default_value = "10,20,50")]
    k2_grid: String,
    /// Comma-separated threshold grid.
    #[arg(long, default_value = "0.0,0.02,0.05,0.1,0.2")]
    d_grid: String,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    min_group: usize,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_grid<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<T>()
                .map_err(|e| Error::Config(format!("bad grid entry {x:?}: {e}")))
        })
        .collect()
}

fn csv_writer(out: &Option<PathBuf>) -> Result<csv::Writer<Box<dyn std::io::Write>>> {
    let sink: Box<dyn std::io::Write> = match out {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout()),
    };
    Ok(csv::Writer::from_writer(sink))
}

fn require_records(args: &PlotArgs) -> Result<Vec<EvalRecord>> {
    let path = args
        .records
        .as_ref()
        .ok_or_else(|| Error::Config("--records is required for this plot".into()))?;
    read_records(path)
}

fn cmd_plot(args: &PlotArgs) -> Result<()> {
    let mut writer = csv_writer(&args.out)?;
    match args.kind {
        PlotKind::SpreadGain => {
            let records = require_records(args)?;
            let accs: Vec<f64> = format_accuracies(&records).into_values().collect();
            let k2_grid: Vec<usize> = parse_grid(&args.k2_grid)?;
            let d_grid: Vec<f64> = parse_grid(&args.d_grid)?;
            writer.write_record(["k1", "k2", "d", "probability"])?;
            for &k2 in &k2_grid {
                for &d in &d_grid {
                    let p =
                        analysis::spread_gain(&accs, args.k1, k2, d, args.trials, args.seed)?;
                    writer.write_record([
                        args.k1.to_string(),
                        k2.to_string(),
                        d.to_string(),
                        p.to_string(),
                    ])?;
                }
            }
        }
        PlotKind::AtomicHist => {
            let records = require_records(args)?;
            let formats_path = args
                .formats
                .as_ref()
                .ok_or_else(|| Error::Config("--formats is required for atomic-hist".into()))?;
            let formats = read_formats(formats_path)?;
            let by_acc = format_accuracies(&records);
            // pairs of sampled formats one atomic change apart
            let mut pairs = Vec::new();
            for i in 0..formats.len() {
                for j in i + 1..formats.len() {
                    let a = &formats[i];
                    let b = &formats[j];
                    let diff = a
                        .assignment
                        .iter()
                        .zip(&b.assignment)
                        .filter(|(x, y)| x != y)
                        .count();
                    if diff == 1 {
                        if let (Some(&x), Some(&y)) =
                            (by_acc.get(&a.format_id), by_acc.get(&b.format_id))
                        {
                            pairs.push((x, y));
                        }
                    }
                }
            }
            if pairs.is_empty() {
                return Err(Error::EmptyInput(
                    "no atomic-change pairs among the sampled formats".into(),
                ));
            }
            writer.write_record(["threshold", "exceedance"])?;
            let thresholds = analysis::default_thresholds();
            for (t, p) in analysis::atomic_change_histogram(&pairs, &thresholds)? {
                writer.write_record([t.to_string(), p.to_string()])?;
            }
        }
        PlotKind::Box => {
            let records = require_records(args)?;
            let formats_path = args
                .formats
                .as_ref()
                .ok_or_else(|| Error::Config("--formats is required for box".into()))?;
            let formats = read_formats(formats_path)?;
            let by_acc = format_accuracies(&records);
            writer.write_record([
                "group", "pool", "value", "n", "whisker_lo", "q1", "median", "q3", "whisker_hi",
            ])?;
            let n_groups = formats.first().map_or(0, |f| f.groups.len());
            for g in 0..n_groups {
                let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
                let mut pool = String::new();
                for f in &formats {
                    if let Some(&acc) = by_acc.get(&f.format_id) {
                        pool = serde_json::to_string(&f.groups[g].pool)?;
                        groups
                            .entry(f.groups[g].value.clone())
                            .or_default()
                            .push(acc);
                    }
                }
                for (value, samples) in &groups {
                    if samples.len() < args.min_group {
                        continue;
                    }
                    let s = analysis::box_stats(samples)?;
                    writer.write_record([
                        g.to_string(),
                        pool.clone(),
                        value.clone(),
                        samples.len().to_string(),
                        s.whisker_lo.to_string(),
                        s.q1.to_string(),
                        s.median.to_string(),
                        s.q3.to_string(),
                        s.whisker_hi.to_string(),
                    ])?;
                }
            }
        }
        PlotKind::Flip => {
            let records_a = require_records(args)?;
            let path_b = args
                .records_b
                .as_ref()
                .ok_or_else(|| Error::Config("--records-b is required for flip".into()))?;
            let records_b = read_records(path_b)?;
            let acc_a = format_accuracies(&records_a);
            let acc_b = format_accuracies(&records_b);
            let paired: Vec<(f64, f64)> = acc_a
                .iter()
                .filter_map(|(f, &a)| acc_b.get(f).map(|&b| (a, b)))
                .collect();
            if paired.is_empty() {
                return Err(Error::EmptyInput("no shared formats between records".into()));
            }
            let d_grid: Vec<f64> = parse_grid(&args.d_grid)?;
            writer.write_record(["d", "flip_probability", "defined"])?;
            for &d in &d_grid {
                match analysis::flip_probability(&paired, d)? {
                    Some(p) => {
                        writer.write_record([d.to_string(), p.to_string(), "true".into()])?
                    }
                    None => writer.write_record([d.to_string(), String::new(), "false".into()])?,
                }
            }
        }
    }
    writer.flush()?;
    Ok(())
}

// --- convert-task ----------------------------------------------------------

#[derive(Args)]
struct ConvertArgs {
    /// Super-NaturalInstructions task JSON.
    #[arg(long)]
    input: PathBuf,
    /// Conversion recipe JSON (field patterns, options, format).
    #[arg(long)]
    recipe: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    constants: Option<PathBuf>,
}

fn cmd_convert(args: &ConvertArgs) -> Result<()> {
    let sets = load_sets(&args.constants)?;
    let sni: task::SniTask =
        serde_json::from_str(&std::fs::read_to_string(&args.input).map_err(|e| Error::Load {
            path: args.input.display().to_string(),
            message: e.to_string(),
        })?)
        .map_err(|e| Error::Load {
            path: args.input.display().to_string(),
            message: format!("schema violation: {e}"),
        })?;
    let recipe: task::ConvertRecipe =
        serde_json::from_str(&std::fs::read_to_string(&args.recipe).map_err(|e| Error::Load {
            path: args.recipe.display().to_string(),
            message: e.to_string(),
        })?)?;
    let format = crate::format::compile_literal(&recipe.original_format, &sets)?;
    let arity = task::field_arity(&format);
    let file = task::convert_sni(&sni, &recipe, arity)?;
    // validate by loading
    TaskSpec::from_file(file.clone(), &sets)?;
    report::write_json(&args.out, &file)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

/// Entry point used by the binary.
pub fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::SampleFormats(args) => cmd_sample(args),
        Command::Run(args) => cmd_run(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::PlotData(args) => cmd_plot(args),
        Command::ConvertTask(args) => cmd_convert(args),
    }
}
