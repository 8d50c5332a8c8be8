//! Comparison sampler: new tests as XOR combinations `c ^ (a ^ b)` of three
//! known-valid tests, without mutation-guided repair.

use std::time::{Duration, Instant};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cnf::{evaluate, Assignment, CnfFormula};
use crate::error::{Error, Result};
use crate::metrics::{ncd_capped, DEFAULT_NCD_CAP};
use crate::solver::{SolverBackend, SolverKind};
use crate::suite::{Origin, RunStats, StopReason, Suite};

const COMBINE_STREAM: u64 = 0x51_7c_c1_b7_27_22_0a_95;

#[derive(Clone, Debug)]
pub struct BaselineConfig {
    pub n_init: usize,
    pub seed: u64,
    pub time_budget: Duration,
    /// Verify every combination before it joins the suite.
    pub verify_all: bool,
    /// Stop after this many proposals; makes runs reproducible regardless
    /// of machine speed.
    pub max_candidates: Option<u64>,
    pub solver: SolverKind,
    pub ncd_subsample_cap: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            n_init: 100,
            seed: 0,
            time_budget: Duration::from_secs(600),
            verify_all: true,
            max_candidates: None,
            solver: SolverKind::Internal,
            ncd_subsample_cap: DEFAULT_NCD_CAP,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_init == 0 || self.time_budget.is_zero() || self.ncd_subsample_cap < 2 {
            return Err(Error::InvalidArgument(
                "baseline n_init, time_budget and ncd cap must be positive".into(),
            ));
        }
        if self.max_candidates == Some(0) {
            return Err(Error::InvalidArgument("max_candidates must be positive".into()));
        }
        Ok(())
    }
}

/// `c ^ (a ^ b)`.
pub fn combine(a: &Assignment, b: &Assignment, c: &Assignment) -> Result<Assignment> {
    Ok(Assignment::new(c.bits().xor(&a.bits().xor(b.bits())?)?))
}

fn pick_three<'a>(valid: &'a [Assignment], rng: &mut ChaCha8Rng) -> [&'a Assignment; 3] {
    let idx = index::sample(rng, valid.len(), 3);
    [&valid[idx.index(0)], &valid[idx.index(1)], &valid[idx.index(2)]]
}

pub fn run_baseline(f: &CnfFormula, cfg: &BaselineConfig) -> Result<(Suite, RunStats)> {
    cfg.validate()?;
    let start = Instant::now();
    let mut backend = SolverBackend::new(cfg.solver.clone(), cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ COMBINE_STREAM);
    let mut stats = RunStats::new("baseline", cfg.seed);
    let mut suite = Suite::new(f.num_vars());

    let mut valid = backend.generate_distinct(f, cfg.n_init)?;
    for a in &valid {
        if !backend.verify(f, a)? {
            return Err(Error::InvalidArgument("solver returned an invalid model".into()));
        }
        suite.insert(a.clone(), Origin::Initial)?;
    }
    stats.initial_samples = valid.len();

    let stop = if valid.len() < 3 {
        StopReason::TooFewSamples
    } else {
        loop {
            if start.elapsed() >= cfg.time_budget {
                break StopReason::TimeBudget;
            }
            if cfg.max_candidates.is_some_and(|m| stats.candidates_proposed >= m) {
                break StopReason::CandidateCap;
            }
            let [a, b, c] = pick_three(&valid, &mut rng);
            let d = combine(a, b, c)?;
            stats.candidates_proposed += 1;
            if cfg.verify_all {
                if !backend.verify(f, &d)? {
                    continue;
                }
                stats.valid_on_first_verify += 1;
                if suite.insert(d.clone(), Origin::Combined)? {
                    valid.push(d);
                } else {
                    stats.duplicates += 1;
                }
            } else if !suite.insert(d, Origin::Unverified)? {
                stats.duplicates += 1;
            }
        }
    };

    if suite.len() >= 2 {
        let ncd = ncd_capped(suite.tests(), cfg.ncd_subsample_cap, cfg.seed)?;
        stats.ncd_history.push(ncd.value);
        stats.ncd_subsampled = ncd.subsampled;
        stats.outer_iterations = 1;
    }
    stats.stop_reason = stop;
    stats.samples_final = valid.len();
    stats.final_suite_size = suite.len();
    stats.calls = backend.counters().clone();
    stats.wall_time = start.elapsed();
    Ok((suite, stats))
}

/// Fraction of `n_trials` random XOR combinations of `n_valid` distinct
/// models that are themselves models.
pub fn eq1_validity_probe(f: &CnfFormula, n_valid: usize, n_trials: usize, seed: u64) -> Result<f64> {
    if n_valid < 3 {
        return Err(Error::InvalidArgument("n_valid must be at least 3".into()));
    }
    if n_trials == 0 {
        return Err(Error::InvalidArgument("n_trials must be positive".into()));
    }
    let valid = crate::solver::generate_distinct(f, n_valid, seed)?;
    if valid.len() < 3 {
        return Err(Error::TooFewSolutions {
            needed: 3,
            found: valid.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ COMBINE_STREAM);
    let mut hits = 0usize;
    for _ in 0..n_trials {
        let [a, b, c] = pick_three(&valid, &mut rng);
        if evaluate(f, &combine(a, b, c)?)? {
            hits += 1;
        }
    }
    Ok(hits as f64 / n_trials as f64)
}
