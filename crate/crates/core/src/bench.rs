//! Benchmark harness: every engine on every instance and seed, with
//! per-(instance, engine) medians and IQRs and paired engine ratios.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use log::{info, warn};
use serde::Serialize;

use crate::baseline::{run_baseline, BaselineConfig};
use crate::cnf::{evaluate, parse_dimacs, CnfFormula};
use crate::engine::{run, RunConfig};
use crate::error::{Error, Result};
use crate::suite::{RunStats, Suite};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Snap,
    Baseline,
}

impl FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snap" => Ok(EngineKind::Snap),
            "baseline" => Ok(EngineKind::Baseline),
            other => Err(Error::InvalidArgument(format!("unknown engine {other:?}"))),
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngineKind::Snap => "snap",
            EngineKind::Baseline => "baseline",
        })
    }
}

/// A named instance; load failures are kept so they show up as report rows.
pub struct Instance {
    pub name: String,
    pub formula: Result<CnfFormula>,
}

impl Instance {
    pub fn new(name: impl Into<String>, formula: CnfFormula) -> Self {
        Instance {
            name: name.into(),
            formula: Ok(formula),
        }
    }
}

/// Reads DIMACS files; directories expand to their `*.cnf` entries in
/// name order.
pub fn load_instances(paths: &[PathBuf]) -> Result<Vec<Instance>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|e| e.extension().is_some_and(|x| x == "cnf"))
                .collect();
            entries.sort();
            files.extend(entries);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files
        .into_iter()
        .map(|path| {
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string());
            let formula = fs::File::open(&path)
                .map_err(Error::from)
                .and_then(parse_dimacs);
            Instance { name, formula }
        })
        .collect())
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub snap: RunConfig,
    pub baseline: BaselineConfig,
    pub engines: Vec<EngineKind>,
    pub seeds: Vec<u64>,
    /// Where per-run suite and stats files go, if anywhere.
    pub out_dir: Option<PathBuf>,
    pub jobs: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            snap: RunConfig::default(),
            baseline: BaselineConfig::default(),
            engines: vec![EngineKind::Snap, EngineKind::Baseline],
            seeds: vec![1],
            out_dir: None,
            jobs: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub instance: String,
    pub num_vars: usize,
    pub num_clauses: usize,
    pub engine: EngineKind,
    pub seed: u64,
    pub wall_time_secs: f64,
    pub suite_size: usize,
    pub ncd: Option<f64>,
    /// Share of suite rows that pass an independent re-check.
    pub validity_rate: f64,
    /// Share of proposed candidates valid before any repair.
    pub first_try_valid_rate: Option<f64>,
    pub generate_calls: u64,
    pub repair_calls: u64,
    pub verify_calls: u64,
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub median: f64,
    pub iqr: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Summary {
            median: quantile(&v, 0.5),
            iqr: quantile(&v, 0.75) - quantile(&v, 0.25),
        })
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> Option<f64> {
    Summary::of(values).map(|s| s.median)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub instance: String,
    pub engine: EngineKind,
    pub runs: usize,
    pub suite_size: Option<Summary>,
    pub ncd: Option<Summary>,
    pub wall_time_secs: Option<Summary>,
    pub validity_rate: Option<Summary>,
}

/// Engine comparison on one instance over the seeds both engines finished.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ratio {
    pub instance: String,
    pub paired_seeds: usize,
    /// Median of baseline suite size over snap suite size.
    pub size_ratio: f64,
    /// Median of baseline time over snap time.
    pub time_ratio: f64,
    /// Median of snap NCD over baseline NCD, when both are defined.
    pub ncd_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub aggregates: Vec<Aggregate>,
    pub ratios: Vec<Ratio>,
}

fn validity_rate(f: &CnfFormula, suite: &Suite) -> f64 {
    if suite.is_empty() {
        return 0.0;
    }
    let ok = suite
        .tests()
        .iter()
        .filter(|t| evaluate(f, t).unwrap_or(false))
        .count();
    ok as f64 / suite.len() as f64
}

fn run_one(f: &CnfFormula, engine: EngineKind, seed: u64, cfg: &BenchConfig) -> Result<(Suite, RunStats)> {
    match engine {
        EngineKind::Snap => run(f, &RunConfig { seed, ..cfg.snap.clone() }),
        EngineKind::Baseline => run_baseline(f, &BaselineConfig { seed, ..cfg.baseline.clone() }),
    }
}

fn write_run_files(dir: &Path, name: &str, engine: EngineKind, seed: u64, suite: &Suite, stats: &RunStats) -> Result<()> {
    fs::create_dir_all(dir)?;
    let stem = format!("{name}.{engine}.s{seed}");
    fs::write(dir.join(format!("{stem}.suite")), suite.to_file_string(seed))?;
    fs::write(dir.join(format!("{stem}.stats.json")), stats.to_json()?)?;
    Ok(())
}

struct Job<'a> {
    instance: &'a Instance,
    engine: EngineKind,
    seed: u64,
}

fn execute(job: &Job<'_>, cfg: &BenchConfig) -> BenchRow {
    let mut row = BenchRow {
        instance: job.instance.name.clone(),
        num_vars: 0,
        num_clauses: 0,
        engine: job.engine,
        seed: job.seed,
        wall_time_secs: 0.0,
        suite_size: 0,
        ncd: None,
        validity_rate: 0.0,
        first_try_valid_rate: None,
        generate_calls: 0,
        repair_calls: 0,
        verify_calls: 0,
        error: None,
    };
    let f = match &job.instance.formula {
        Ok(f) => f,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.num_vars = f.num_vars();
    row.num_clauses = f.num_clauses();
    info!("{} / {} / seed {}", job.instance.name, job.engine, job.seed);
    let result = run_one(f, job.engine, job.seed, cfg).and_then(|(suite, stats)| {
        if let Some(dir) = &cfg.out_dir {
            write_run_files(dir, &job.instance.name, job.engine, job.seed, &suite, &stats)?;
        }
        Ok((suite, stats))
    });
    match result {
        Ok((suite, stats)) => {
            row.wall_time_secs = stats.wall_time.as_secs_f64();
            row.suite_size = suite.len();
            row.ncd = stats.ncd_history.last().copied();
            row.validity_rate = validity_rate(f, &suite);
            row.first_try_valid_rate = stats.first_try_valid_rate();
            row.generate_calls = stats.calls.generate_calls;
            row.repair_calls = stats.calls.repair_calls;
            row.verify_calls = stats.calls.verify_calls;
        }
        Err(e) => {
            warn!("{} / {} / seed {} failed: {e}", job.instance.name, job.engine, job.seed);
            row.error = Some(e.to_string());
        }
    }
    row
}

/// Runs every (instance, engine, seed) job on `cfg.jobs` threads. Failed
/// jobs become rows with `error` set; the rest still run.
pub fn bench(instances: &[Instance], cfg: &BenchConfig) -> BenchReport {
    let jobs: Vec<Job<'_>> = instances
        .iter()
        .flat_map(|instance| {
            cfg.engines.iter().flat_map(move |&engine| {
                cfg.seeds.iter().map(move |&seed| Job { instance, engine, seed })
            })
        })
        .collect();
    let results: Mutex<Vec<Option<BenchRow>>> = Mutex::new(vec![None; jobs.len()]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..cfg.jobs.max(1).min(jobs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let row = execute(job, cfg);
                results.lock().expect("poisoned")[i] = Some(row);
            });
        }
    });
    let rows: Vec<BenchRow> = results
        .into_inner()
        .expect("poisoned")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect();
    summarize(rows)
}

/// Aggregates and ratios from finished rows. Independent of row order.
pub fn summarize(rows: Vec<BenchRow>) -> BenchReport {
    let mut groups: BTreeMap<(String, EngineKind), Vec<&BenchRow>> = BTreeMap::new();
    for r in &rows {
        groups.entry((r.instance.clone(), r.engine)).or_default().push(r);
    }
    let aggregates = groups
        .iter()
        .map(|((instance, engine), rs)| {
            let ok: Vec<&&BenchRow> = rs.iter().filter(|r| r.error.is_none()).collect();
            let col = |g: fn(&BenchRow) -> Option<f64>| {
                Summary::of(&ok.iter().filter_map(|r| g(r)).collect::<Vec<_>>())
            };
            Aggregate {
                instance: instance.clone(),
                engine: *engine,
                runs: ok.len(),
                suite_size: col(|r| Some(r.suite_size as f64)),
                ncd: col(|r| r.ncd),
                wall_time_secs: col(|r| Some(r.wall_time_secs)),
                validity_rate: col(|r| Some(r.validity_rate)),
            }
        })
        .collect();

    // instance -> seed -> (snap run, baseline run)
    type Pair<'a> = (Option<&'a BenchRow>, Option<&'a BenchRow>);
    let mut paired: BTreeMap<String, BTreeMap<u64, Pair>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.error.is_none()) {
        let slot = paired.entry(r.instance.clone()).or_default().entry(r.seed).or_default();
        match r.engine {
            EngineKind::Snap => slot.0 = Some(r),
            EngineKind::Baseline => slot.1 = Some(r),
        }
    }
    let ratios = paired
        .into_iter()
        .filter_map(|(instance, by_seed)| {
            let both: Vec<(&BenchRow, &BenchRow)> = by_seed
                .values()
                .filter_map(|(s, b)| s.zip(*b))
                .filter(|(s, _)| s.suite_size > 0)
                .collect();
            if both.is_empty() {
                return None;
            }
            let size: Vec<f64> = both.iter().map(|(s, b)| b.suite_size as f64 / s.suite_size as f64).collect();
            let time: Vec<f64> = both
                .iter()
                .map(|(s, b)| b.wall_time_secs / s.wall_time_secs.max(f64::MIN_POSITIVE))
                .collect();
            let ncd: Vec<f64> = both
                .iter()
                .filter_map(|(s, b)| s.ncd.zip(b.ncd).filter(|(_, bn)| *bn > 0.0).map(|(sn, bn)| sn / bn))
                .collect();
            Some(Ratio {
                instance,
                paired_seeds: both.len(),
                size_ratio: median(&size)?,
                time_ratio: median(&time)?,
                ncd_ratio: median(&ncd),
            })
        })
        .collect();
    BenchReport { rows, aggregates, ratios }
}

impl BenchReport {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
