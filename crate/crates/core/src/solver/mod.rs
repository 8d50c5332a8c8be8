//! Model generation and repair: the internal CDCL solver, the external
//! adapter, and the call-counting backend the samplers run against.

mod cdcl;
mod external;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cnf::{evaluate, Assignment, CnfFormula, Lit, PartialAssignment};
use crate::error::{Error, Result};

pub(crate) use self::cdcl::Cdcl;
pub use self::external::{
    external_solve_adapter, parse_competition_output, with_fixed_units, CompetitionOutput,
    ExternalError, ExternalSolver, TMPDIR_ENV,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveResult {
    Sat(Assignment),
    Unsat,
}

impl SolveResult {
    pub fn model(self) -> Option<Assignment> {
        match self {
            SolveResult::Sat(a) => Some(a),
            SolveResult::Unsat => None,
        }
    }

    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat(_))
    }
}

fn blocking_clause(a: &Assignment) -> Vec<Lit> {
    a.iter().enumerate().map(|(v, b)| Lit::new(v, b)).collect()
}

fn internal_solve(f: &CnfFormula, fixed: Option<&PartialAssignment>, seed: u64) -> Result<SolveResult> {
    if let Some(p) = fixed {
        Error::check_len(f.num_vars(), p.len())?;
    }
    let mut s = Cdcl::from_formula(f, seed);
    if let Some(p) = fixed {
        for l in p.fixed_literals() {
            if !s.add_clause(&[l]) {
                return Ok(SolveResult::Unsat);
            }
        }
    }
    Ok(match s.solve() {
        Some(model) => {
            let a = Assignment::new(crate::bits::BitVector::from_bools(model));
            debug_assert!(evaluate(f, &a).unwrap());
            SolveResult::Sat(a)
        }
        None => SolveResult::Unsat,
    })
}

/// Finds a model of `f` agreeing with `fixed` on its mask, using the
/// internal solver with a seeded branching order and phase.
pub fn solve(f: &CnfFormula, fixed: Option<&PartialAssignment>, seed: u64) -> Result<SolveResult> {
    internal_solve(f, fixed, seed)
}

/// Up to `n` pairwise-distinct models, each found after blocking all
/// previous ones. Fewer than `n` means the formula has no more models.
pub fn generate_distinct(f: &CnfFormula, n: usize, seed: u64) -> Result<Vec<Assignment>> {
    SolverBackend::new(SolverKind::Internal, seed).generate_distinct(f, n)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverKind {
    Internal,
    External(ExternalSolver),
}

impl FromStr for SolverKind {
    type Err = Error;

    /// `internal` or `external:<command line>`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "internal" {
            Ok(SolverKind::Internal)
        } else if let Some(cmd) = s.strip_prefix("external:") {
            if cmd.trim().is_empty() {
                return Err(Error::InvalidArgument("external solver needs a command".into()));
            }
            Ok(SolverKind::External(ExternalSolver::new(cmd.trim())))
        } else {
            Err(Error::InvalidArgument(format!(
                "unknown solver {s:?}, expected `internal` or `external:<cmd>`"
            )))
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverKind::Internal => f.write_str("internal"),
            SolverKind::External(e) => write!(f, "external:{}", e.command),
        }
    }
}

/// Per-category solver call counts and cumulative time.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CallCounters {
    pub generate_calls: u64,
    pub repair_calls: u64,
    pub verify_calls: u64,
    #[serde(serialize_with = "secs")]
    pub generate_time: Duration,
    #[serde(serialize_with = "secs")]
    pub repair_time: Duration,
    #[serde(serialize_with = "secs")]
    pub verify_time: Duration,
}

fn secs<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

/// A solver plus its call accounting. Single-threaded; one per run.
pub struct SolverBackend {
    kind: SolverKind,
    seed: u64,
    rng: ChaCha8Rng,
    counters: CallCounters,
}

impl SolverBackend {
    pub fn new(kind: SolverKind, seed: u64) -> Self {
        SolverBackend {
            kind,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            counters: CallCounters::default(),
        }
    }

    pub fn internal(seed: u64) -> Self {
        SolverBackend::new(SolverKind::Internal, seed)
    }

    pub fn kind(&self) -> &SolverKind {
        &self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counters(&self) -> &CallCounters {
        &self.counters
    }

    fn raw_solve(&mut self, f: &CnfFormula, fixed: Option<&PartialAssignment>) -> Result<SolveResult> {
        let call_seed = self.rng.next_u64();
        match &self.kind {
            SolverKind::Internal => internal_solve(f, fixed, call_seed),
            SolverKind::External(ext) => external_solve_adapter(f, fixed, ext),
        }
    }

    /// Uncounted solve, for callers outside the sampling loop.
    pub fn solve(&mut self, f: &CnfFormula, fixed: Option<&PartialAssignment>) -> Result<SolveResult> {
        self.raw_solve(f, fixed)
    }

    /// Generating calls: up to `n` distinct models via blocking clauses.
    pub fn generate_distinct(&mut self, f: &CnfFormula, n: usize) -> Result<Vec<Assignment>> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        let mut models: Vec<Assignment> = Vec::with_capacity(n);
        match self.kind.clone() {
            SolverKind::Internal => {
                let mut s = Cdcl::from_formula(f, self.rng.next_u64());
                s.set_phase_saving(true);
                while models.len() < n {
                    let start = Instant::now();
                    let found = s.solve();
                    self.counters.generate_calls += 1;
                    self.counters.generate_time += start.elapsed();
                    let Some(m) = found else { break };
                    let a = Assignment::new(crate::bits::BitVector::from_bools(m));
                    debug_assert!(evaluate(f, &a).unwrap());
                    s.add_clause(&blocking_clause(&a));
                    models.push(a);
                }
            }
            SolverKind::External(ext) => {
                let mut query = f.clone();
                while models.len() < n {
                    let start = Instant::now();
                    let found = external_solve_adapter(&query, None, &ext);
                    self.counters.generate_calls += 1;
                    self.counters.generate_time += start.elapsed();
                    let Some(a) = found?.model() else { break };
                    query = query.with_clauses([blocking_clause(&a)]);
                    models.push(a);
                }
            }
        }
        if models.is_empty() {
            return Err(Error::NoSolutions);
        }
        Ok(models)
    }

    /// Repair call: completes the free bits of `fixed`.
    pub fn repair_solve(&mut self, f: &CnfFormula, fixed: &PartialAssignment) -> Result<SolveResult> {
        let start = Instant::now();
        let out = self.raw_solve(f, Some(fixed));
        self.counters.repair_calls += 1;
        self.counters.repair_time += start.elapsed();
        out
    }

    /// Verification call: a plain clause-by-clause evaluation.
    pub fn verify(&mut self, f: &CnfFormula, a: &Assignment) -> Result<bool> {
        let start = Instant::now();
        let out = evaluate(f, a);
        self.counters.verify_calls += 1;
        self.counters.verify_time += start.elapsed();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(s: &str) -> CnfFormula {
        s.parse().unwrap()
    }

    #[test]
    fn fixed_bit_forces_propagation() {
        let g = f("p cnf 2 2\n1 2 0\n-1 2 0\n");
        let p = PartialAssignment::new("10".parse().unwrap(), "10".parse().unwrap()).unwrap();
        let a = solve(&g, Some(&p), 3).unwrap().model().unwrap();
        assert_eq!(a.to_string(), "11");
    }

    #[test]
    fn contradiction_is_unsat() {
        assert_eq!(solve(&f("p cnf 1 2\n1 0\n-1 0\n"), None, 0).unwrap(), SolveResult::Unsat);
    }

    #[test]
    fn every_seed_yields_a_model() {
        let g = f("p cnf 2 1\n1 2 0\n");
        let models = ["01", "10", "11"];
        for seed in 0..10 {
            let a = solve(&g, None, seed).unwrap().model().unwrap();
            assert!(models.contains(&a.to_string().as_str()));
        }
    }

    #[test]
    fn generate_distinct_stops_at_model_count() {
        let g = f("p cnf 2 1\n1 2 0\n");
        let mut ms: Vec<String> = generate_distinct(&g, 10, 1).unwrap().iter().map(|a| a.to_string()).collect();
        ms.sort();
        assert_eq!(ms, vec!["01", "10", "11"]);

        let units = f("p cnf 2 2\n1 0\n2 0\n");
        assert_eq!(generate_distinct(&units, 5, 1).unwrap().len(), 1);
        assert!(matches!(generate_distinct(&units, 0, 1), Err(Error::InvalidArgument(_))));
        assert!(matches!(
            generate_distinct(&f("p cnf 1 2\n1 0\n-1 0\n"), 3, 1),
            Err(Error::NoSolutions)
        ));
    }

    #[test]
    fn same_seed_same_models() {
        let g = f("p cnf 4 2\n1 2 0\n-3 4 0\n");
        assert_eq!(generate_distinct(&g, 6, 5).unwrap(), generate_distinct(&g, 6, 5).unwrap());
    }

    #[test]
    fn counters_track_categories() {
        let g = f("p cnf 2 1\n1 2 0\n");
        let mut b = SolverBackend::internal(1);
        b.generate_distinct(&g, 10).unwrap();
        assert_eq!(b.counters().generate_calls, 4);
        b.verify(&g, &"01".parse().unwrap()).unwrap();
        let p = PartialAssignment::new("00".parse().unwrap(), "10".parse().unwrap()).unwrap();
        b.repair_solve(&g, &p).unwrap();
        assert_eq!(b.counters().verify_calls, 1);
        assert_eq!(b.counters().repair_calls, 1);
    }

    #[test]
    fn parses_solver_selector() {
        assert_eq!("internal".parse::<SolverKind>().unwrap(), SolverKind::Internal);
        let SolverKind::External(e) = "external:kissat -q".parse::<SolverKind>().unwrap() else {
            panic!()
        };
        assert_eq!(e.command, "kissat -q");
        assert!("external:".parse::<SolverKind>().is_err());
        assert!("z3".parse::<SolverKind>().is_err());
    }
}
