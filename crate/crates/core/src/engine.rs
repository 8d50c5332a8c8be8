//! The sampling loop: initial models, delta pool, centroid mutation,
//! verify-or-repair, and NCD-based termination.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use log::debug;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BitVector;
use crate::cluster::kmeans;
use crate::cnf::{Assignment, CnfFormula, PartialAssignment};
use crate::delta::{Delta, DeltaPool};
use crate::error::{Error, Result};
use crate::metrics::{ncd_capped, DEFAULT_NCD_CAP};
use crate::solver::{SolveResult, SolverBackend, SolverKind};
use crate::suite::{Origin, RunStats, StopReason, Suite};

/// Stream separator so mutation draws never share state with solver seeds.
const MUTATION_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Initial sample size N.
    pub n_init: usize,
    /// Cluster count.
    pub k: usize,
    /// Minimum relative NCD gain X needed to run another outer iteration.
    pub improve_threshold: f64,
    /// Wall-clock cap T for the whole run.
    pub time_budget: Duration,
    /// Mutations per centroid per iteration; `None` means `n_init`.
    pub mutations_per_centroid: Option<usize>,
    pub seed: u64,
    pub solver: SolverKind,
    pub ncd_subsample_cap: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_init: 100,
            k: 5,
            improve_threshold: 0.05,
            time_budget: Duration::from_secs(600),
            mutations_per_centroid: None,
            seed: 0,
            solver: SolverKind::Internal,
            ncd_subsample_cap: DEFAULT_NCD_CAP,
        }
    }
}

impl RunConfig {
    pub fn mutations(&self) -> usize {
        self.mutations_per_centroid.unwrap_or(self.n_init)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.n_init == 0 {
            return bad("n_init must be positive");
        }
        if self.k == 0 {
            return bad("k must be positive");
        }
        if !(self.improve_threshold > 0.0 && self.improve_threshold < 1.0) {
            return bad("improve_threshold must lie in (0, 1)");
        }
        if self.time_budget.is_zero() {
            return bad("time_budget must be positive");
        }
        if self.mutations() == 0 {
            return bad("mutations_per_centroid must be positive");
        }
        if self.ncd_subsample_cap < 2 {
            return bad("ncd_subsample_cap must be at least 2");
        }
        Ok(())
    }
}

/// `c XOR (di OR dj)`, returned with the mask `di OR dj`.
pub fn mutate(c: &Assignment, di: &Delta, dj: &Delta) -> Result<(Assignment, Delta)> {
    let mask = di.bits().or(dj.bits())?;
    let candidate = c.bits().xor(&mask)?;
    Ok((Assignment::new(candidate), Delta::new(mask)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RepairOutcome {
    Repaired(Assignment),
    Unrepairable,
}

/// Keeps the candidate's bits under `mask`, frees the rest, and asks the
/// backend for a completion. Meant for candidates that failed verification.
pub fn repair(
    f: &CnfFormula,
    candidate: &Assignment,
    mask: &Delta,
    backend: &mut SolverBackend,
) -> Result<RepairOutcome> {
    Error::check_len(f.num_vars(), candidate.len())?;
    let fixed = PartialAssignment::new(candidate.bits().clone(), mask.bits().clone())?;
    match backend.repair_solve(f, &fixed)? {
        SolveResult::Sat(r) => {
            debug_assert!(fixed.agrees_with(&r).unwrap());
            Ok(RepairOutcome::Repaired(r))
        }
        SolveResult::Unsat => Ok(RepairOutcome::Unrepairable),
    }
}

/// Another outer iteration runs while time remains and the last NCD gain,
/// relative to the previous iteration, is at least the threshold.
pub fn should_continue(ncd_history: &[f64], elapsed: Duration, cfg: &RunConfig) -> bool {
    if elapsed >= cfg.time_budget {
        return false;
    }
    match ncd_history {
        [] | [_] => true,
        [.., prev, last] => *prev > 0.0 && (last - prev) / prev >= cfg.improve_threshold,
    }
}

/// Runs the sampler to termination and returns the suite with its stats.
pub fn run(f: &CnfFormula, cfg: &RunConfig) -> Result<(Suite, RunStats)> {
    cfg.validate()?;
    let start = Instant::now();
    let mut backend = SolverBackend::new(cfg.solver.clone(), cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ MUTATION_STREAM);
    let mut stats = RunStats::new("snap", cfg.seed);
    let mut suite = Suite::new(f.num_vars());

    let initial = backend.generate_distinct(f, cfg.n_init)?;
    for a in &initial {
        if !backend.verify(f, a)? {
            return Err(Error::InvalidArgument("solver returned an invalid model".into()));
        }
        suite.insert(a.clone(), Origin::Initial)?;
    }
    stats.initial_samples = initial.len();
    let mut seen: HashSet<Assignment> = initial.iter().cloned().collect();
    let mut samples = initial;

    let mutations = cfg.mutations();
    let stop = if samples.len() < 2 {
        StopReason::TooFewSamples
    } else {
        loop {
            stats.outer_iterations += 1;
            let pool = DeltaPool::build(&samples)?;
            let clusters = kmeans(&samples, cfg.k, rng.next_u64())?;
            debug!(
                "iteration {}: {} samples, {} distinct deltas, {} centroids",
                stats.outer_iterations,
                samples.len(),
                pool.len(),
                clusters.k
            );
            let mut timed_out = false;
            'centroids: for centroid in &clusters.binarized {
                for _ in 0..mutations {
                    if start.elapsed() >= cfg.time_budget {
                        timed_out = true;
                        break 'centroids;
                    }
                    let di = pool.sample(&mut rng)?;
                    let dj = pool.sample(&mut rng)?;
                    let (candidate, mask) = mutate(centroid, di, dj)?;
                    stats.candidates_proposed += 1;
                    if backend.verify(f, &candidate)? {
                        stats.valid_on_first_verify += 1;
                        if !suite.insert(candidate, Origin::MutatedValid)? {
                            stats.duplicates += 1;
                        }
                        continue;
                    }
                    stats.repair_attempts += 1;
                    match repair(f, &candidate, &mask, &mut backend)? {
                        RepairOutcome::Repaired(r) => {
                            if !backend.verify(f, &r)? {
                                return Err(Error::InvalidArgument(
                                    "repair produced an invalid model".into(),
                                ));
                            }
                            stats.repair_successes += 1;
                            if seen.insert(r.clone()) {
                                samples.push(r.clone());
                            }
                            if !suite.insert(r, Origin::Repaired)? {
                                stats.duplicates += 1;
                            }
                        }
                        RepairOutcome::Unrepairable => stats.repair_failures += 1,
                    }
                }
            }
            let ncd_seed = cfg.seed.wrapping_add(stats.outer_iterations as u64);
            let ncd = ncd_capped(suite.tests(), cfg.ncd_subsample_cap, ncd_seed)?;
            stats.ncd_subsampled |= ncd.subsampled;
            stats.ncd_history.push(ncd.value);
            debug!(
                "iteration {}: suite {} tests, ncd {:.4}",
                stats.outer_iterations,
                suite.len(),
                ncd.value
            );
            if timed_out || start.elapsed() >= cfg.time_budget {
                break StopReason::TimeBudget;
            }
            if !should_continue(&stats.ncd_history, start.elapsed(), cfg) {
                break StopReason::NoImprovement;
            }
        }
    };

    debug_assert!(suite
        .tests()
        .iter()
        .all(|t| crate::cnf::evaluate(f, t).unwrap()));
    stats.stop_reason = stop;
    stats.samples_final = samples.len();
    stats.final_suite_size = suite.len();
    stats.calls = backend.counters().clone();
    stats.wall_time = start.elapsed();
    Ok((suite, stats))
}

/// Mask-preservation check: `(repaired XOR candidate) AND mask == 0`.
pub fn preserves_mask(repaired: &Assignment, candidate: &Assignment, mask: &Delta) -> Result<bool> {
    let diff: BitVector = repaired.bits().xor(candidate.bits())?;
    Ok(diff.and(mask.bits())?.is_zero())
}
