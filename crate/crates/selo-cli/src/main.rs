//! `selo` — link sign prediction for signed directed networks.
//!
//! Subcommands: `encode` materializes per-edge features into a cache file,
//! `evaluate` runs the full split/encode/train/score experiment, `scan`
//! sweeps beta or alpha, and `download-info` prints where to get the
//! standard datasets.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use selo_core::cache::{read_matching, write_cache, CacheHeader, CacheKey};
use selo_core::encoder::{encode_edge_set, BetaMode, EncoderConfig, NodeOrdering, Variant};
use selo_core::experiment::{run_experiment, scan, OrderingMode, RunConfig, ScanParam, ScanPoint};
use selo_core::graph::{load_edge_list, LoadOutcome, SignRule};
use selo_core::{Result, SeloError, SignedDigraph};

#[derive(Parser)]
#[command(
    name = "selo",
    version,
    about = "Link sign prediction in signed directed networks via subgraph encoding"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Encode every edge of a dataset into a feature cache file
    Encode {
        #[command(flatten)]
        common: CommonOpts,
        /// Cache file to write (reused when its header already matches)
        #[arg(long)]
        output: PathBuf,
    },
    /// Run repeated split/encode/train/score cycles and report metrics
    Evaluate {
        #[command(flatten)]
        common: CommonOpts,
        #[command(flatten)]
        eval: EvalOpts,
        /// Report file (JSON); stdout when omitted
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sweep beta or alpha over a value range and tabulate the metrics
    Scan {
        #[command(flatten)]
        common: CommonOpts,
        #[command(flatten)]
        eval: EvalOpts,
        /// Which hyper-parameter to sweep
        #[arg(long)]
        param: String,
        /// `start:end:step` (inclusive) or a comma-separated list
        #[arg(long)]
        values: String,
        /// Table file (CSV, or JSON when the extension is .json); stdout when omitted
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print dataset source URLs and the statistics to verify them against
    DownloadInfo,
}

#[derive(Args)]
struct CommonOpts {
    /// Edge-list file: `src dst value` separated by comma, tab or space;
    /// a fourth column (timestamp) is ignored, `#` lines are comments
    #[arg(long)]
    data: PathBuf,
    /// How the value column maps to a sign: `threshold` (sign of a rating)
    /// or `signed` (the column is exactly +1/-1)
    #[arg(long, default_value = "threshold")]
    sign_rule: SignRule,
    /// Subgraph size
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Likelihood free parameter
    #[arg(long, default_value_t = 0.005)]
    alpha: f64,
    /// Negative-edge scaling: `benchmark` or an explicit positive value
    #[arg(long, default_value = "benchmark")]
    beta: BetaMode,
    /// Feature variant: concat | adj | weight | s1 | s2 | s3
    #[arg(long, default_value = "concat")]
    variant: Variant,
    /// Node ordering: selo | random
    #[arg(long, default_value = "selo")]
    ordering: OrderingMode,
    /// Base seed; split, init, shuffle and ordering streams derive from it
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads for encoding (defaults to the machine's parallelism)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct EvalOpts {
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 512)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.001)]
    learning_rate: f64,
    /// Number of independent train/test splits
    #[arg(long, default_value_t = 5)]
    runs: usize,
    /// Directory for per-split feature caches
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0u8,
                _ => 1u8,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(e: &SeloError) -> u8 {
    match e {
        SeloError::Argument(_) => 1,
        SeloError::Parse { .. }
        | SeloError::Data(_)
        | SeloError::Io { .. }
        | SeloError::UndefinedMetric(_) => 2,
        SeloError::Numeric(_) => 3,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Encode { common, output } => cmd_encode(&common, &output),
        Cmd::Evaluate {
            common,
            eval,
            output,
        } => cmd_evaluate(&common, &eval, output.as_deref()),
        Cmd::Scan {
            common,
            eval,
            param,
            values,
            output,
        } => cmd_scan(&common, &eval, &param, &values, output.as_deref()),
        Cmd::DownloadInfo => {
            cmd_download_info();
            Ok(())
        }
    }
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(SeloError::Argument("--threads must be positive".to_string()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| SeloError::Argument(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn load_dataset(opts: &CommonOpts) -> Result<SignedDigraph> {
    let file = File::open(&opts.data).map_err(|e| SeloError::io(&opts.data, e))?;
    let LoadOutcome {
        graph,
        self_loops_skipped,
        duplicates_overwritten,
    } = load_edge_list(BufReader::new(file), opts.sign_rule)?;
    log::info!(
        "loaded {}: {} nodes, {} edges ({} positive, {} negative), {} self-loops skipped, {} duplicates overwritten",
        opts.data.display(),
        graph.num_nodes(),
        graph.num_edges(),
        graph.n_pos(),
        graph.n_neg(),
        self_loops_skipped,
        duplicates_overwritten
    );
    Ok(graph)
}

fn dataset_label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn cmd_encode(common: &CommonOpts, output: &Path) -> Result<()> {
    configure_threads(common.threads)?;
    let g = load_dataset(common)?;
    let enc = EncoderConfig {
        k: common.k,
        alpha: common.alpha,
        beta: common.beta,
        variant: common.variant,
        ordering: match common.ordering {
            OrderingMode::Selo => NodeOrdering::Selo,
            OrderingMode::Random => NodeOrdering::Random { seed: common.seed },
        },
    };
    let beta = enc.resolve_beta(&g)?;
    let key = CacheKey {
        role: "full".to_string(),
        k: enc.k,
        alpha: enc.alpha,
        beta,
        variant: enc.variant.as_str().to_string(),
        ordering: enc.ordering.label(),
        dataset_hash: g.content_hash(),
        fraction: None,
        split_seed: None,
        feature_width: enc.feature_width(),
    };

    if let Some((header, _)) = read_matching(output, &key)? {
        println!(
            "cache hit: {} already holds {} records (mean subgraph size {:.2}), nothing to do",
            output.display(),
            header.stats.edges,
            header.stats.mean_subgraph_size
        );
        return Ok(());
    }

    let set = encode_edge_set(&g, g.edges(), &enc)?;
    write_cache(
        output,
        &CacheHeader {
            key,
            stats: set.stats,
        },
        &set.samples(),
    )?;
    println!(
        "encoded {} edges (beta {:.4}, mean subgraph size {:.2}, max {}) in {:.2}s -> {}",
        set.stats.edges,
        beta,
        set.stats.mean_subgraph_size,
        set.stats.max_subgraph_size,
        set.stats.seconds,
        output.display()
    );
    Ok(())
}

fn run_config(common: &CommonOpts, eval: &EvalOpts) -> RunConfig {
    RunConfig {
        k: common.k,
        alpha: common.alpha,
        beta: common.beta,
        variant: common.variant,
        ordering: common.ordering,
        train_fraction: eval.train_fraction,
        epochs: eval.epochs,
        batch_size: eval.batch_size,
        learning_rate: eval.learning_rate,
        n_runs: eval.runs,
        seed: common.seed,
    }
}

fn cmd_evaluate(common: &CommonOpts, eval: &EvalOpts, output: Option<&Path>) -> Result<()> {
    configure_threads(common.threads)?;
    let g = load_dataset(common)?;
    let cfg = run_config(common, eval);
    let started = Instant::now();
    let report = run_experiment(&g, &dataset_label(&common.data), &cfg, eval.cache_dir.as_deref())?;
    log::info!("experiment finished in {:.1}s", started.elapsed().as_secs_f64());

    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| SeloError::Data(format!("report serialization: {e}")))?;
    match output {
        Some(path) => {
            std::fs::write(path, json).map_err(|e| SeloError::io(path, e))?;
            println!(
                "auc {:.4}±{:.4}  f1 {:.4}±{:.4}  micro-f1 {:.4}±{:.4}  macro-f1 {:.4}±{:.4}  -> {}",
                report.mean.auc,
                report.std.auc,
                report.mean.f1,
                report.std.f1,
                report.mean.micro_f1,
                report.std.micro_f1,
                report.mean.macro_f1,
                report.std.macro_f1,
                path.display()
            );
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn parse_scan_values(expr: &str) -> Result<Vec<f64>> {
    let parse = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| SeloError::Argument(format!("bad scan value {s:?}")))
    };
    if expr.contains(':') {
        let parts: Vec<&str> = expr.split(':').collect();
        if parts.len() != 3 {
            return Err(SeloError::Argument(format!(
                "range must be start:end:step, got {expr:?}"
            )));
        }
        let (start, end, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if step <= 0.0 || !step.is_finite() {
            return Err(SeloError::Argument(format!("step must be positive, got {step}")));
        }
        if end < start {
            return Err(SeloError::Argument(format!(
                "range end {end} is before start {start}"
            )));
        }
        let count = ((end - start) / step).round() as usize + 1;
        Ok((0..count).map(|i| start + i as f64 * step).collect())
    } else {
        let values: Result<Vec<f64>> = expr.split(',').map(parse).collect();
        let values = values?;
        if values.is_empty() {
            return Err(SeloError::Argument("no scan values given".to_string()));
        }
        Ok(values)
    }
}

fn scan_csv(param: ScanParam, points: &[ScanPoint]) -> String {
    let name = match param {
        ScanParam::Beta => "beta",
        ScanParam::Alpha => "alpha",
    };
    let mut out = String::from(
        "param,value,auc_mean,auc_std,f1_mean,f1_std,micro_f1_mean,micro_f1_std,macro_f1_mean,macro_f1_std\n",
    );
    for p in points {
        out.push_str(&format!(
            "{name},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            p.value,
            p.report.mean.auc,
            p.report.std.auc,
            p.report.mean.f1,
            p.report.std.f1,
            p.report.mean.micro_f1,
            p.report.std.micro_f1,
            p.report.mean.macro_f1,
            p.report.std.macro_f1,
        ));
    }
    out
}

fn cmd_scan(
    common: &CommonOpts,
    eval: &EvalOpts,
    param: &str,
    values: &str,
    output: Option<&Path>,
) -> Result<()> {
    configure_threads(common.threads)?;
    let param: ScanParam = param.parse()?;
    let values = parse_scan_values(values)?;
    let g = load_dataset(common)?;
    let cfg = run_config(common, eval);
    let points = scan(
        &g,
        &dataset_label(&common.data),
        param,
        &values,
        &cfg,
        eval.cache_dir.as_deref(),
    )?;

    let as_json = output
        .map(|p| p.extension().is_some_and(|e| e == "json"))
        .unwrap_or(false);
    let body = if as_json {
        serde_json::to_string_pretty(&points)
            .map_err(|e| SeloError::Data(format!("scan serialization: {e}")))?
    } else {
        scan_csv(param, &points)
    };
    match output {
        Some(path) => {
            let file = File::create(path).map_err(|e| SeloError::io(path, e))?;
            let mut w = BufWriter::new(file);
            w.write_all(body.as_bytes())
                .map_err(|e| SeloError::io(path, e))?;
            println!("wrote {} scan points -> {}", points.len(), path.display());
        }
        None => print!("{body}"),
    }
    Ok(())
}

struct DatasetInfo {
    name: &'static str,
    url: &'static str,
    sign_rule: &'static str,
    nodes: u64,
    pos: u64,
    neg: u64,
}

const DATASETS: &[DatasetInfo] = &[
    DatasetInfo {
        name: "bitcoin-alpha",
        url: "https://snap.stanford.edu/data/soc-sign-bitcoinalpha.csv.gz",
        sign_rule: "threshold",
        nodes: 3782,
        pos: 22649,
        neg: 1536,
    },
    DatasetInfo {
        name: "bitcoin-otc",
        url: "https://snap.stanford.edu/data/soc-sign-bitcoinotc.csv.gz",
        sign_rule: "threshold",
        nodes: 5881,
        pos: 32028,
        neg: 3563,
    },
    DatasetInfo {
        name: "wiki-rfa",
        url: "https://snap.stanford.edu/data/wiki-RfA.html",
        sign_rule: "signed",
        nodes: 11259,
        pos: 138813,
        neg: 39283,
    },
    DatasetInfo {
        name: "slashdot",
        url: "https://snap.stanford.edu/data/soc-sign-Slashdot090221.txt.gz",
        sign_rule: "signed",
        nodes: 82140,
        pos: 425071,
        neg: 124130,
    },
    DatasetInfo {
        name: "epinions",
        url: "https://snap.stanford.edu/data/soc-sign-epinions.txt.gz",
        sign_rule: "signed",
        nodes: 131827,
        pos: 717667,
        neg: 123704,
    },
];

fn cmd_download_info() {
    println!("Datasets are not downloaded automatically. Fetch, decompress, and");
    println!("verify each file against the expected statistics below (the loader");
    println!("prints them; self-loops are dropped and the last duplicate wins).");
    println!("SNAP publishes no checksums, so record the sha256 of your download");
    println!("alongside the file and compare the loaded counts instead.");
    println!();
    for d in DATASETS {
        println!("{}", d.name);
        println!("  url:        {}", d.url);
        println!("  sign rule:  --sign-rule {}", d.sign_rule);
        println!(
            "  expected:   {} nodes, {} positive links, {} negative links",
            d.nodes, d.pos, d.neg
        );
        println!();
    }
    println!("Note: wiki-RfA ships as a multi-line vote dump; convert it to");
    println!("`src,dst,vote` rows (votes of 0 removed) before loading.");
    println!("Slashdot and Epinions files start with `#` comment headers, which");
    println!("the loader skips. All files load with: selo evaluate --data <file>");
    println!("--sign-rule <rule>.");
}
