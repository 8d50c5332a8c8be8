use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snap_core::solver::{external_solve_adapter, ExternalError, ExternalSolver};
use snap_core::{
    evaluate, generate_distinct, solve, Assignment, BitVector, CnfFormula, Error, PartialAssignment,
    SolveResult,
};

fn random_formula(rng: &mut ChaCha8Rng) -> CnfFormula {
    let n = rng.gen_range(1..=16usize);
    let m = rng.gen_range(1..=5 * n);
    let clauses: Vec<Vec<i64>> = (0..m)
        .map(|_| {
            let w = rng.gen_range(1..=3usize.min(n));
            (0..w)
                .map(|_| {
                    let v = rng.gen_range(1..=n as i64);
                    if rng.gen_bool(0.5) { v } else { -v }
                })
                .collect()
        })
        .collect();
    CnfFormula::new(n, &clauses).unwrap()
}

fn assignment_from_index(n: usize, idx: u32) -> Assignment {
    Assignment::new(BitVector::from_bools((0..n).map(|i| idx >> i & 1 == 1)))
}

fn truth_table(f: &CnfFormula) -> Vec<Assignment> {
    (0..1u32 << f.num_vars())
        .map(|i| assignment_from_index(f.num_vars(), i))
        .filter(|a| evaluate(f, a).unwrap())
        .collect()
}

#[test]
fn verdict_matches_truth_table() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut sat, mut unsat) = (0, 0);
    for i in 0..200 {
        let f = random_formula(&mut rng);
        let models = truth_table(&f);
        match solve(&f, None, i).unwrap() {
            SolveResult::Sat(a) => {
                assert!(evaluate(&f, &a).unwrap());
                sat += 1;
            }
            SolveResult::Unsat => {
                assert!(models.is_empty(), "solver missed a model of\n{}", f.to_dimacs());
                unsat += 1;
            }
        }
    }
    assert!(sat > 20 && unsat > 20, "mix was {sat} sat / {unsat} unsat");
}

#[test]
fn enumeration_finds_every_model_once() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..60 {
        let f = random_formula(&mut rng);
        if f.num_vars() > 10 {
            continue;
        }
        let mut want: Vec<String> = truth_table(&f).iter().map(|a| a.to_string()).collect();
        match generate_distinct(&f, 2000, i) {
            Ok(models) => {
                let mut got: Vec<String> = models.iter().map(|a| a.to_string()).collect();
                got.sort();
                want.sort();
                assert_eq!(got, want);
            }
            Err(Error::NoSolutions) => assert!(want.is_empty()),
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn fixed_bits_are_respected_or_unsat() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in 0..100 {
        let f = random_formula(&mut rng);
        let n = f.num_vars();
        let bits = BitVector::from_bools((0..n).map(|_| rng.gen_bool(0.5)));
        let mask = BitVector::from_bools((0..n).map(|_| rng.gen_bool(0.3)));
        let p = PartialAssignment::new(bits, mask).unwrap();
        let consistent = truth_table(&f).iter().any(|a| p.agrees_with(a).unwrap());
        match solve(&f, Some(&p), i).unwrap() {
            SolveResult::Sat(a) => {
                assert!(evaluate(&f, &a).unwrap());
                assert!(p.agrees_with(&a).unwrap());
            }
            SolveResult::Unsat => assert!(!consistent),
        }
    }
}

#[test]
fn seeds_diversify_models() {
    let f = CnfFormula::new(12, &[vec![1, 2, 3]]).unwrap();
    let distinct: std::collections::HashSet<String> =
        (0..20).map(|s| solve(&f, None, s).unwrap().model().unwrap().to_string()).collect();
    assert!(distinct.len() > 10);
}

#[cfg(unix)]
mod external {
    use super::*;
    use std::os::unix::fs::PermissionsExt;
    use std::path::PathBuf;
    use std::time::Duration;

    fn script(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
        let path = dir.path().join(name);
        std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
        std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
        path
    }

    fn formula() -> CnfFormula {
        "p cnf 3 2\n1 2 0\n-1 3 0\n".parse().unwrap()
    }

    #[test]
    fn sat_model_is_parsed_and_checked() {
        let dir = tempfile::tempdir().unwrap();
        let s = script(&dir, "sat.sh", "echo 'c hi'; echo 's SATISFIABLE'; echo 'v 1 -2'; echo 'v 3 0'; exit 10");
        let out = external_solve_adapter(&formula(), None, &ExternalSolver::new(s.to_str().unwrap())).unwrap();
        assert_eq!(out.model().unwrap().to_string(), "101");
    }

    #[test]
    fn unsat_and_failures() {
        let dir = tempfile::tempdir().unwrap();
        let unsat = script(&dir, "unsat.sh", "echo 's UNSATISFIABLE'; exit 20");
        let out = external_solve_adapter(&formula(), None, &ExternalSolver::new(unsat.to_str().unwrap()));
        assert_eq!(out.unwrap(), SolveResult::Unsat);

        let wrong = script(&dir, "wrong.sh", "echo 's SATISFIABLE'; echo 'v 1 -2 -3 0'");
        let err = external_solve_adapter(&formula(), None, &ExternalSolver::new(wrong.to_str().unwrap()));
        assert!(matches!(err, Err(Error::External(ExternalError::Inconsistent))));

        let crash = script(&dir, "crash.sh", "exit 3");
        let err = external_solve_adapter(&formula(), None, &ExternalSolver::new(crash.to_str().unwrap()));
        assert!(matches!(err, Err(Error::External(ExternalError::ProcessFailed { .. }))));

        let garbage = script(&dir, "garbage.sh", "echo 's MAYBE'");
        let err = external_solve_adapter(&formula(), None, &ExternalSolver::new(garbage.to_str().unwrap()));
        assert!(matches!(err, Err(Error::External(ExternalError::Unparsable(_)))));

        let err = external_solve_adapter(&formula(), None, &ExternalSolver::new("/nonexistent/solver"));
        assert!(matches!(err, Err(Error::External(ExternalError::Spawn { .. }))));
    }

    #[test]
    fn timeout_kills_the_solver() {
        let dir = tempfile::tempdir().unwrap();
        let slow = script(&dir, "slow.sh", "exec sleep 30");
        let mut solver = ExternalSolver::new(slow.to_str().unwrap());
        solver.timeout = Duration::from_millis(200);
        let start = std::time::Instant::now();
        let err = external_solve_adapter(&formula(), None, &solver);
        assert!(matches!(err, Err(Error::External(ExternalError::Timeout(_)))));
        assert!(start.elapsed() < Duration::from_secs(10));
    }

    #[test]
    fn fixed_bits_reach_the_solver_file() {
        let dir = tempfile::tempdir().unwrap();
        // Answers with the model whose first bit matches the unit clause.
        let s = script(
            &dir,
            "units.sh",
            r#"if grep -q '^-1 0$' "$2"; then echo 's SATISFIABLE'; echo 'v -1 2 3 0';
else echo 's SATISFIABLE'; echo 'v 1 -2 3 0'; fi"#,
        );
        let solver = ExternalSolver::new(format!("{} --file {{}}", s.display()));
        let p = PartialAssignment::new("000".parse().unwrap(), "100".parse().unwrap()).unwrap();
        let out = external_solve_adapter(&formula(), Some(&p), &solver).unwrap();
        assert_eq!(out.model().unwrap().to_string(), "011");
    }
}
