//! Output suites, run statistics, and the suite file format.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::time::Duration;

use serde::Serialize;

use crate::cnf::Assignment;
use crate::error::{Error, Result};
use crate::solver::CallCounters;

const SUITE_MAGIC: &str = "c snap suite v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    /// From the initial solver-generated samples.
    Initial,
    /// A mutant that passed verification unchanged.
    MutatedValid,
    /// A mutant completed by a repair call.
    Repaired,
    /// A verified XOR combination from the baseline sampler.
    Combined,
    /// A baseline combination emitted without verification.
    Unverified,
}

/// Insertion-ordered set of distinct tests with their origins.
#[derive(Clone, Debug)]
pub struct Suite {
    num_vars: usize,
    tests: Vec<Assignment>,
    origins: Vec<Origin>,
    index: HashSet<Assignment>,
}

impl Suite {
    pub fn new(num_vars: usize) -> Self {
        Suite {
            num_vars,
            tests: Vec::new(),
            origins: Vec::new(),
            index: HashSet::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Adds `a` unless already present. Returns whether it was new.
    pub fn insert(&mut self, a: Assignment, origin: Origin) -> Result<bool> {
        Error::check_len(self.num_vars, a.len())?;
        if self.index.contains(&a) {
            return Ok(false);
        }
        self.index.insert(a.clone());
        self.tests.push(a);
        self.origins.push(origin);
        Ok(true)
    }

    pub fn contains(&self, a: &Assignment) -> bool {
        self.index.contains(a)
    }

    pub fn tests(&self) -> &[Assignment] {
        &self.tests
    }

    pub fn origins(&self) -> &[Origin] {
        &self.origins
    }

    pub fn len(&self) -> usize {
        self.tests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tests.is_empty()
    }

    pub fn count_origin(&self, origin: Origin) -> usize {
        self.origins.iter().filter(|&&o| o == origin).count()
    }

    /// Header line, then one `0`/`1` row per test with variable 1 leftmost.
    pub fn to_file_string(&self, seed: u64) -> String {
        let mut s = String::with_capacity((self.num_vars + 1) * (self.len() + 1) + 64);
        writeln!(
            s,
            "{SUITE_MAGIC} vars={} tests={} seed={seed}",
            self.num_vars,
            self.len()
        )
        .unwrap();
        for t in &self.tests {
            writeln!(s, "{t}").unwrap();
        }
        s
    }
}

/// A suite file as read back from disk. Rows are kept verbatim, including
/// duplicates, so that checkers see exactly what was written.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteFile {
    pub num_vars: usize,
    pub seed: u64,
    pub rows: Vec<Assignment>,
}

pub fn parse_suite_file(text: &str) -> Result<SuiteFile> {
    let mut lines = text.lines().enumerate();
    let bad = |line: usize, reason: &str| Error::SuiteFormat {
        line,
        reason: reason.to_string(),
    };
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty file"))?;
    let fields = header
        .strip_prefix(SUITE_MAGIC)
        .ok_or_else(|| bad(1, "missing suite header"))?;
    let mut vars = None;
    let mut tests = None;
    let mut seed = None;
    for kv in fields.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(|| bad(1, "malformed header field"))?;
        let n: u64 = v.parse().map_err(|_| bad(1, "non-numeric header field"))?;
        match k {
            "vars" => vars = Some(n as usize),
            "tests" => tests = Some(n as usize),
            "seed" => seed = Some(n),
            _ => return Err(bad(1, "unknown header field")),
        }
    }
    let (Some(num_vars), Some(tests), Some(seed)) = (vars, tests, seed) else {
        return Err(bad(1, "header needs vars, tests and seed"));
    };
    let mut rows = Vec::with_capacity(tests);
    for (i, line) in lines {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if line.len() != num_vars {
            return Err(bad(i + 1, &format!("row has {} bits, expected {num_vars}", line.len())));
        }
        rows.push(line.parse().map_err(|_| bad(i + 1, "row is not a 0/1 string"))?);
    }
    if rows.len() != tests {
        return Err(bad(1, &format!("header says {tests} tests, found {}", rows.len())));
    }
    Ok(SuiteFile { num_vars, seed, rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Relative NCD gain fell below the threshold.
    NoImprovement,
    TimeBudget,
    /// Fewer than two samples exist, so there is nothing to mutate.
    TooFewSamples,
    CandidateCap,
}

/// Everything a run reports besides the suite itself.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunStats {
    pub engine: &'static str,
    pub seed: u64,
    #[serde(serialize_with = "secs")]
    pub wall_time: Duration,
    #[serde(flatten)]
    pub calls: CallCounters,
    pub initial_samples: usize,
    pub candidates_proposed: u64,
    pub valid_on_first_verify: u64,
    pub repair_attempts: u64,
    pub repair_successes: u64,
    pub repair_failures: u64,
    /// Valid or repaired tests that were already in the suite.
    pub duplicates: u64,
    pub samples_final: usize,
    pub outer_iterations: usize,
    pub ncd_history: Vec<f64>,
    pub ncd_subsampled: bool,
    pub final_suite_size: usize,
    pub stop_reason: StopReason,
}

fn secs<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

impl RunStats {
    pub(crate) fn new(engine: &'static str, seed: u64) -> Self {
        RunStats {
            engine,
            seed,
            wall_time: Duration::ZERO,
            calls: CallCounters::default(),
            initial_samples: 0,
            candidates_proposed: 0,
            valid_on_first_verify: 0,
            repair_attempts: 0,
            repair_successes: 0,
            repair_failures: 0,
            duplicates: 0,
            samples_final: 0,
            outer_iterations: 0,
            ncd_history: Vec::new(),
            ncd_subsampled: false,
            final_suite_size: 0,
            stop_reason: StopReason::NoImprovement,
        }
    }

    /// Fraction of proposed candidates that were valid before any repair.
    pub fn first_try_valid_rate(&self) -> Option<f64> {
        (self.candidates_proposed > 0)
            .then(|| self.valid_on_first_verify as f64 / self.candidates_proposed as f64)
    }

    /// A copy with all timing fields zeroed, for reproducibility checks.
    pub fn without_timings(&self) -> RunStats {
        let mut s = self.clone();
        s.wall_time = Duration::ZERO;
        s.calls.generate_time = Duration::ZERO;
        s.calls.repair_time = Duration::ZERO;
        s.calls.verify_time = Duration::ZERO;
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(s: &str) -> Assignment {
        s.parse().unwrap()
    }

    #[test]
    fn insert_deduplicates() {
        let mut s = Suite::new(3);
        assert!(s.insert(a("010"), Origin::Initial).unwrap());
        assert!(!s.insert(a("010"), Origin::Repaired).unwrap());
        assert!(s.insert(a("011"), Origin::Repaired).unwrap());
        assert_eq!(s.len(), 2);
        assert_eq!(s.origins(), &[Origin::Initial, Origin::Repaired]);
        assert!(s.insert(a("01"), Origin::Initial).is_err());
    }

    #[test]
    fn file_format() {
        let mut s = Suite::new(4);
        s.insert(a("1000"), Origin::Initial).unwrap();
        s.insert(a("0011"), Origin::Initial).unwrap();
        let text = s.to_file_string(7);
        assert_eq!(text, "c snap suite v1 vars=4 tests=2 seed=7\n1000\n0011\n");
        let back = parse_suite_file(&text).unwrap();
        assert_eq!(back.num_vars, 4);
        assert_eq!(back.seed, 7);
        assert_eq!(back.rows, vec![a("1000"), a("0011")]);
    }

    #[test]
    fn malformed_suite_files() {
        assert!(parse_suite_file("").is_err());
        assert!(parse_suite_file("1010\n").is_err());
        assert!(parse_suite_file("c snap suite v1 vars=2 tests=1 seed=0\n101\n").is_err());
        assert!(parse_suite_file("c snap suite v1 vars=2 tests=2 seed=0\n10\n").is_err());
        assert!(parse_suite_file("c snap suite v1 vars=2 tests=1 seed=0\n1x\n").is_err());
        assert!(parse_suite_file("c snap suite v1 vars=2 tests=1\n10\n").is_err());
    }
}
