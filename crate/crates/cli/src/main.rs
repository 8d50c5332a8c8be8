use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use log::info;
use snap_core::bench::{bench, load_instances, BenchConfig, EngineKind};
use snap_core::metrics::{ncd_capped, DEFAULT_NCD_CAP};
use snap_core::suite::{parse_suite_file, RunStats, Suite};
use snap_core::{
    entropy, entropy_histogram, falsified_clauses, gen_planted, identical_delta_count,
    parse_dimacs, run, run_baseline, BaselineConfig, CnfFormula, Error, RunConfig, SolverKind,
};

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_UNSAT: u8 = 3;
const EXIT_INVALID: u8 = 4;

#[derive(Parser)]
#[command(name = "snap", version, about = "Small, valid, diverse test suites from CNF models")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a suite by centroid mutation and repair.
    Sample(SampleArgs),
    /// Sample a suite with the XOR-combination baseline.
    Baseline(BaselineArgs),
    /// Check every row of a suite against a formula.
    Verify { cnf: PathBuf, suite: PathBuf },
    /// Diversity statistics for a suite.
    Stats(StatsArgs),
    /// Write a random planted k-CNF instance.
    GenSynth(GenSynthArgs),
    /// Run engines over instances and seeds and write a report.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Root of all randomness in the run.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Initial number of solver-generated samples.
    #[arg(long, default_value_t = 100)]
    n_init: usize,
    /// Wall-clock budget in seconds.
    #[arg(long, default_value_t = 600.0)]
    time_budget: f64,
    /// `internal` or `external:<command>`.
    #[arg(long, default_value = "internal")]
    solver: String,
    /// Maximum rows used for an NCD computation.
    #[arg(long, default_value_t = DEFAULT_NCD_CAP)]
    ncd_cap: usize,
    /// Suite output path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stats JSON output path.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    cnf: PathBuf,
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 0.05)]
    improve_threshold: f64,
    /// Mutations per centroid per iteration (defaults to --n-init).
    #[arg(long)]
    mutations_per_centroid: Option<usize>,
}

#[derive(Args)]
struct BaselineArgs {
    cnf: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Stop after this many proposed combinations.
    #[arg(long)]
    max_candidates: Option<u64>,
    /// Emit combinations without verifying them.
    #[arg(long)]
    no_verify: bool,
}

#[derive(Args)]
struct StatsArgs {
    cnf: PathBuf,
    suite: PathBuf,
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// Write the entropy histogram CSV here instead of stdout.
    #[arg(long)]
    histogram: Option<PathBuf>,
    /// Write the identical-delta multiplicities of the suite as CSV.
    #[arg(long)]
    delta_histogram: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_NCD_CAP)]
    ncd_cap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenSynthArgs {
    #[arg(long, default_value_t = 200)]
    vars: usize,
    #[arg(long, default_value_t = 3.0)]
    ratio: f64,
    #[arg(long, default_value_t = 3)]
    width: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// DIMACS files or directories of `*.cnf` files.
    #[arg(long, num_args = 1.., required = true)]
    instances: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "snap,baseline")]
    engines: Vec<String>,
    /// Explicit seed list.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Number of seeds (1..=N) when --seeds is not given.
    #[arg(long, default_value_t = 1)]
    repeats: u64,
    /// Report CSV path; a JSON report with aggregates is written next to it.
    #[arg(long, default_value = "report.csv")]
    report: PathBuf,
    /// Directory for per-run suite and stats files.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value_t = 100)]
    n_init: usize,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 0.05)]
    improve_threshold: f64,
    #[arg(long)]
    mutations_per_centroid: Option<usize>,
    /// Budget in seconds for each run of either engine.
    #[arg(long, default_value_t = 600.0)]
    time_budget: f64,
    #[arg(long)]
    max_candidates: Option<u64>,
    #[arg(long, default_value = "internal")]
    solver: String,
    #[arg(long, default_value_t = DEFAULT_NCD_CAP)]
    ncd_cap: usize,
}

/// An error paired with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let error = e.into();
        let code = match error.downcast_ref::<Error>() {
            Some(Error::NoSolutions | Error::TooFewSolutions { .. }) => EXIT_UNSAT,
            _ => EXIT_INPUT,
        };
        Failure { code, error }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn budget(secs: f64) -> CliResult<Duration> {
    Duration::try_from_secs_f64(secs)
        .ok()
        .filter(|d| !d.is_zero())
        .ok_or_else(|| anyhow::anyhow!("time budget must be a positive number of seconds").into())
}

fn read_formula(path: &Path) -> CliResult<CnfFormula> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let f = parse_dimacs(file).with_context(|| format!("parsing {}", path.display()))?;
    if f.tautologies() > 0 {
        info!("dropped {} tautological clauses", f.tautologies());
    }
    Ok(f)
}

fn read_suite(path: &Path, f: &CnfFormula) -> CliResult<snap_core::suite::SuiteFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let suite = parse_suite_file(&text).with_context(|| format!("parsing {}", path.display()))?;
    if suite.num_vars != f.num_vars() {
        return Err(anyhow::anyhow!(
            "suite has {} variables, formula has {}",
            suite.num_vars,
            f.num_vars()
        )
        .into());
    }
    Ok(suite)
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit_run(common: &Common, suite: &Suite, stats: &RunStats) -> CliResult {
    write_output(common.out.as_deref(), &suite.to_file_string(common.seed))?;
    if let Some(p) = &common.stats {
        fs::write(p, stats.to_json()?).with_context(|| format!("writing {}", p.display()))?;
    }
    eprintln!(
        "{}: {} tests, {} candidates, {} repairs ({} unrepairable), {:.2}s",
        stats.engine,
        suite.len(),
        stats.candidates_proposed,
        stats.repair_successes,
        stats.repair_failures,
        stats.wall_time.as_secs_f64()
    );
    Ok(())
}

fn cmd_sample(args: SampleArgs) -> CliResult {
    let f = read_formula(&args.cnf)?;
    let cfg = RunConfig {
        n_init: args.common.n_init,
        k: args.k,
        improve_threshold: args.improve_threshold,
        time_budget: budget(args.common.time_budget)?,
        mutations_per_centroid: args.mutations_per_centroid,
        seed: args.common.seed,
        solver: args.common.solver.parse::<SolverKind>()?,
        ncd_subsample_cap: args.common.ncd_cap,
    };
    let (suite, stats) = run(&f, &cfg)?;
    emit_run(&args.common, &suite, &stats)
}

fn cmd_baseline(args: BaselineArgs) -> CliResult {
    let f = read_formula(&args.cnf)?;
    let cfg = BaselineConfig {
        n_init: args.common.n_init,
        seed: args.common.seed,
        time_budget: budget(args.common.time_budget)?,
        verify_all: !args.no_verify,
        max_candidates: args.max_candidates,
        solver: args.common.solver.parse::<SolverKind>()?,
        ncd_subsample_cap: args.common.ncd_cap,
    };
    let (suite, stats) = run_baseline(&f, &cfg)?;
    emit_run(&args.common, &suite, &stats)
}

fn cmd_verify(cnf: &Path, suite_path: &Path) -> CliResult {
    let f = read_formula(cnf)?;
    let suite = read_suite(suite_path, &f)?;
    let mut invalid = 0usize;
    for (i, row) in suite.rows.iter().enumerate() {
        let bad = falsified_clauses(&f, row)?;
        if let Some(&c) = bad.first() {
            invalid += 1;
            let clause: Vec<String> = f.clauses()[c].iter().map(|l| l.to_dimacs().to_string()).collect();
            println!(
                "row {}: invalid, falsifies {} clause(s), first #{} ({} 0)",
                i + 1,
                bad.len(),
                c + 1,
                clause.join(" ")
            );
        }
    }
    let distinct: std::collections::HashSet<_> = suite.rows.iter().collect();
    if distinct.len() != suite.rows.len() {
        println!("warning: {} duplicate row(s)", suite.rows.len() - distinct.len());
    }
    if invalid > 0 {
        return Err(Failure {
            code: EXIT_INVALID,
            error: anyhow::anyhow!("{invalid} of {} rows invalid", suite.rows.len()),
        });
    }
    println!("ok: {} rows valid", suite.rows.len());
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> CliResult {
    let f = read_formula(&args.cnf)?;
    let suite = read_suite(&args.suite, &f)?;
    let rows = &suite.rows;
    let valid = rows
        .iter()
        .map(|r| snap_core::evaluate(&f, r))
        .collect::<Result<Vec<bool>, _>>()?
        .into_iter()
        .filter(|&v| v)
        .count();
    let mut out = String::new();
    out.push_str(&format!("tests={}\n", rows.len()));
    out.push_str(&format!("valid={valid}\n"));
    if !rows.is_empty() {
        out.push_str(&format!("validity_rate={:.6}\n", valid as f64 / rows.len() as f64));
        let mean_h = rows.iter().map(entropy).sum::<f64>() / rows.len() as f64;
        out.push_str(&format!("mean_entropy={mean_h:.6}\n"));
    }
    if rows.len() >= 2 {
        let ncd = ncd_capped(rows, args.ncd_cap, args.seed)?;
        out.push_str(&format!(
            "ncd={:.6}\nncd_rows={}\nncd_subsampled={}\n",
            ncd.value, ncd.rows_used, ncd.subsampled
        ));
    }
    print!("{out}");

    if !rows.is_empty() {
        let hist = entropy_histogram(rows, args.bins)?;
        let mut csv = String::from("bucket_low,bucket_high,percent\n");
        for b in &hist {
            csv.push_str(&format!("{},{},{}\n", b.bucket_low, b.bucket_high, b.percent));
        }
        match &args.histogram {
            Some(p) => fs::write(p, csv).with_context(|| format!("writing {}", p.display()))?,
            None => print!("\n{csv}"),
        }
    }
    if let Some(p) = &args.delta_histogram {
        let counts = identical_delta_count(rows)?;
        let mut csv = String::from("delta,multiplicity\n");
        for (d, m) in &counts {
            csv.push_str(&format!("{d},{m}\n"));
        }
        fs::write(p, csv).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn cmd_gen_synth(args: GenSynthArgs) -> CliResult {
    let p = gen_planted(args.vars, args.ratio, args.width, args.seed)?;
    let mut text = format!(
        "c planted vars={} ratio={} width={} seed={}\n",
        args.vars, args.ratio, args.width, args.seed
    );
    text.push_str(&p.formula.to_dimacs());
    write_output(args.out.as_deref(), &text)
}

fn cmd_bench(args: BenchArgs) -> CliResult {
    let engines = args
        .engines
        .iter()
        .map(|e| e.parse::<EngineKind>())
        .collect::<Result<Vec<_>, _>>()?;
    let seeds = if args.seeds.is_empty() {
        (1..=args.repeats.max(1)).collect()
    } else {
        args.seeds.clone()
    };
    let time_budget = budget(args.time_budget)?;
    let solver: SolverKind = args.solver.parse()?;
    let cfg = BenchConfig {
        snap: RunConfig {
            n_init: args.n_init,
            k: args.k,
            improve_threshold: args.improve_threshold,
            time_budget,
            mutations_per_centroid: args.mutations_per_centroid,
            seed: 0,
            solver: solver.clone(),
            ncd_subsample_cap: args.ncd_cap,
        },
        baseline: BaselineConfig {
            n_init: args.n_init,
            seed: 0,
            time_budget,
            verify_all: true,
            max_candidates: args.max_candidates,
            solver,
            ncd_subsample_cap: args.ncd_cap,
        },
        engines,
        seeds,
        out_dir: args.out_dir.clone(),
        jobs: args.jobs,
    };
    cfg.snap.validate()?;
    cfg.baseline.validate()?;
    let instances = load_instances(&args.instances)?;
    if instances.is_empty() {
        return Err(anyhow::anyhow!("no instances found").into());
    }
    let report = bench(&instances, &cfg);
    let file = fs::File::create(&args.report).with_context(|| format!("writing {}", args.report.display()))?;
    report.write_csv(file)?;
    let json_path = args.report.with_extension("json");
    fs::write(&json_path, report.to_json()?).with_context(|| format!("writing {}", json_path.display()))?;
    for r in &report.ratios {
        println!(
            "{}: size ratio {:.2}, time ratio {:.2}, ncd ratio {}",
            r.instance,
            r.size_ratio,
            r.time_ratio,
            r.ncd_ratio.map_or("n/a".to_string(), |v| format!("{v:.3}"))
        );
    }
    let failed = report.rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} run(s) failed; see the report");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Sample(a) => cmd_sample(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Verify { cnf, suite } => cmd_verify(&cnf, &suite),
        Command::Stats(a) => cmd_stats(a),
        Command::GenSynth(a) => cmd_gen_synth(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
