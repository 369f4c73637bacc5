use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use semmap_core::eval::{
    candidate_correlation, k_sweep_each, render_metric_table, sweep_csv, MetricColumn, SweepOptions,
    DEFAULT_PRECISION_CAP,
};
use semmap_core::formats::resolve_graph;
use semmap_core::mst::{DEFAULT_K, DEFAULT_M};
use semmap_core::{
    build_g0, enumerate_mst, evaluate, parse_gold, parse_graph, parse_table, run_pipeline, AccuracyMode, EvalOptions,
    GraphFormat, MergeOrder, PipelineConfig, PipelineError, Stage,
};

#[derive(Parser)]
#[command(
    name = "semmap",
    version,
    about = "Build and evaluate semantic map models from form-function tables"
)]
struct Cli {
    /// Worker threads for enumeration and evaluation (default: all cores)
    #[arg(long, global = true, env = "SEMMAP_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build candidate maps from a table and write them with their reports
    Build(BuildArgs),
    /// Evaluate an existing graph against a table
    Eval(EvalArgs),
    /// Time enumeration over a grid of K values
    Bench(BenchArgs),
}

#[derive(Args)]
struct MetricArgs {
    /// Accuracy definition used with a gold map
    #[arg(long, default_value = "matrix", value_parser = parse_acc_mode)]
    acc_mode: AccuracyMode,

    /// Largest node count for exact precision
    #[arg(long, default_value_t = DEFAULT_PRECISION_CAP)]
    precision_cap: usize,
}

impl MetricArgs {
    fn options(&self) -> EvalOptions {
        EvalOptions {
            acc_mode: self.acc_mode,
            precision_cap: self.precision_cap,
            defer_precision: false,
        }
    }
}

#[derive(Args)]
struct BuildArgs {
    /// Form-function table (CSV)
    #[arg(long)]
    input: PathBuf,

    /// Maximum spanning trees to enumerate before ranking
    #[arg(long, default_value_t = DEFAULT_K, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    k: usize,

    /// Candidates to keep
    #[arg(long, default_value_t = DEFAULT_M)]
    m: usize,

    /// Add edges until every form is connected
    #[arg(long)]
    merge: bool,

    /// Ranking direction for merge edges (desc or asc)
    #[arg(long, default_value = "desc", value_parser = parse_merge_order)]
    merge_order: MergeOrder,

    /// Gold-standard map (graph JSON) for accuracy
    #[arg(long)]
    gold: Option<PathBuf>,

    /// Output directory
    #[arg(long)]
    out: PathBuf,

    /// Graph output format; dot also writes the JSON files
    #[arg(long, default_value = "json", value_parser = parse_format)]
    format: GraphFormat,

    #[command(flatten)]
    metrics: MetricArgs,
}

#[derive(Args)]
struct EvalArgs {
    /// Graph to evaluate (graph JSON)
    #[arg(long)]
    graph: PathBuf,

    /// Form-function table (CSV)
    #[arg(long)]
    input: PathBuf,

    /// Gold-standard map (graph JSON) for accuracy
    #[arg(long)]
    gold: Option<PathBuf>,

    /// Print the report as JSON instead of a table
    #[arg(long)]
    json: bool,

    #[command(flatten)]
    metrics: MetricArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Form-function table (CSV)
    #[arg(long)]
    input: PathBuf,

    /// Comma-separated K values, ascending
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    k_grid: Vec<usize>,

    /// Gold-standard map (graph JSON) for accuracy
    #[arg(long)]
    gold: Option<PathBuf>,

    /// Output CSV
    #[arg(long)]
    out: PathBuf,

    /// Runs per K; the median time is reported
    #[arg(long, default_value_t = 3)]
    repeats: usize,

    /// Candidates evaluated per K
    #[arg(long, default_value_t = DEFAULT_M)]
    m: usize,

    #[command(flatten)]
    metrics: MetricArgs,
}

fn parse_acc_mode(s: &str) -> Result<AccuracyMode, String> {
    s.parse()
}

fn parse_merge_order(s: &str) -> Result<MergeOrder, String> {
    s.parse()
}

fn parse_format(s: &str) -> Result<GraphFormat, String> {
    s.parse()
}

/// A failure that maps to exit code 1.
enum Failure {
    Io(PathBuf, std::io::Error),
    Pipeline(PipelineError),
    Other(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Io(path, e) => write!(f, "{}: {e}", path.display()),
            Failure::Pipeline(e) => write!(f, "{e}"),
            Failure::Other(msg) => f.write_str(msg),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure::Pipeline(e)
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Io(path.to_owned(), e))
}

fn read_opt(path: Option<&PathBuf>) -> Result<Option<Vec<u8>>, Failure> {
    path.map(|p| read(p)).transpose()
}

fn cmd_build(args: &BuildArgs) -> Result<(), Failure> {
    let table = read(&args.input)?;
    let gold = read_opt(args.gold.as_ref())?;
    let cfg = PipelineConfig {
        k: args.k,
        m: args.m,
        merge: args.merge,
        merge_order: args.merge_order,
        eval: args.metrics.options(),
    };
    let start = Instant::now();
    let bundle = run_pipeline(&table, gold.as_deref(), &cfg)?;
    let elapsed = start.elapsed().as_secs_f64();

    let stats = bundle.table().stats();
    println!(
        "table: {} languages, {} forms, {} functions, sparsity {:.4}",
        stats.languages, stats.forms, stats.functions, stats.sparsity
    );
    println!(
        "enumerated {} maximum spanning tree(s) of weight {}{}",
        bundle.enumerated(),
        bundle.max_weight(),
        if bundle.truncated() {
            format!(" (stopped at K={})", args.k)
        } else {
            String::new()
        }
    );
    let columns: Vec<MetricColumn<'_>> = bundle
        .candidates()
        .iter()
        .enumerate()
        .map(|(i, c)| MetricColumn {
            name: format!("candidate_{i}"),
            report: c.report(),
            time_s: Some(elapsed),
        })
        .collect();
    print!("{}", render_metric_table(&columns));

    bundle
        .write_bundle(&args.out, args.format)
        .map_err(|e| Failure::Io(args.out.clone(), e))?;
    println!(
        "wrote {} candidate(s) to {}",
        bundle.candidates().len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<(), Failure> {
    let table = parse_table(&read(&args.input)?).map_err(|e| PipelineError::new(Stage::Parse, e))?;
    let graph = parse_graph(&read(&args.graph)?)
        .and_then(|g| resolve_graph(&g, &table))
        .map_err(|e| Failure::Other(format!("{}: {e}", args.graph.display())))?;
    let gold = read_opt(args.gold.as_ref())?
        .map(|raw| parse_gold(&raw, &table))
        .transpose()
        .map_err(|e| PipelineError::new(Stage::Gold, e))?;
    let report = evaluate(&graph, &table, gold.as_ref(), &args.metrics.options())
        .map_err(|e| PipelineError::new(Stage::Evaluate, e))?;
    if args.json {
        println!("{}", report.to_json());
    } else {
        let name = args
            .graph
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "graph".to_owned());
        print!(
            "{}",
            render_metric_table(&[MetricColumn {
                name,
                report: &report,
                time_s: None,
            }])
        );
        for f in &report.unconnected_forms {
            println!("unconnected: {}:{} (row {})", f.language, f.form, f.instance);
        }
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<(), Failure> {
    let table = parse_table(&read(&args.input)?).map_err(|e| PipelineError::new(Stage::Parse, e))?;
    let gold = read_opt(args.gold.as_ref())?
        .map(|raw| parse_gold(&raw, &table))
        .transpose()
        .map_err(|e| PipelineError::new(Stage::Gold, e))?;
    let opts = SweepOptions {
        m: args.m,
        repeats: args.repeats,
        eval: args.metrics.options(),
    };
    let outcomes =
        k_sweep_each(&table, &args.k_grid, gold.as_ref(), &opts).map_err(|e| Failure::Other(e.to_string()))?;
    fs::write(&args.out, sweep_csv(&outcomes)).map_err(|e| Failure::Io(args.out.clone(), e))?;

    for (k, outcome) in &outcomes {
        match outcome {
            Ok(r) => println!(
                "K={k:<8} time {:.6}s  Div_D {:.4}  Acc {}  ({} trees{})",
                r.time_s,
                r.div_d,
                r.acc.map(|a| format!("{a:.4}")).unwrap_or_else(|| "-".to_owned()),
                r.candidates,
                if r.truncated { ", truncated" } else { "" }
            ),
            Err(e) => eprintln!("K={k}: {e}"),
        }
    }
    if outcomes.iter().all(|(_, o)| o.is_err()) {
        return Err(Failure::Other("every K failed".to_owned()));
    }

    let summary = match &gold {
        None => "n/a (no gold map)".to_owned(),
        Some(gold) => {
            let k_max = *args.k_grid.last().expect("grid is non-empty");
            let cands = build_g0(&table)
                .map_err(|e| PipelineError::new(Stage::Build, e))
                .and_then(|g0| enumerate_mst(&g0, k_max).map_err(|e| PipelineError::new(Stage::Enumerate, e)))?;
            match candidate_correlation(&cands, gold, args.metrics.acc_mode) {
                Ok(r) => format!("{r:.6} over {} candidates at K={k_max}", cands.len()),
                Err(e) => format!("n/a ({e})"),
            }
        }
    };
    println!("pearson(acc, div_d): {summary}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} workers: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
