//! Random k-CNF instances with a planted solution.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BitVector;
use crate::cnf::{Assignment, CnfFormula};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Planted {
    pub formula: CnfFormula,
    /// The assignment every clause was checked against.
    pub solution: Assignment,
}

/// Samples a hidden assignment, then `ceil(ratio * num_vars)` clauses of
/// `width` distinct variables with random signs, each re-drawn until the
/// hidden assignment satisfies it.
pub fn gen_planted(num_vars: usize, clause_ratio: f64, clause_width: usize, seed: u64) -> Result<Planted> {
    if clause_width < 2 {
        return Err(Error::InvalidArgument("clause width must be at least 2".into()));
    }
    if clause_width > num_vars {
        return Err(Error::InvalidArgument(format!(
            "clause width {clause_width} exceeds {num_vars} variables"
        )));
    }
    if !(clause_ratio > 0.0 && clause_ratio.is_finite()) {
        return Err(Error::InvalidArgument("clause ratio must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let solution = BitVector::from_bools((0..num_vars).map(|_| rng.gen_bool(0.5)));
    let num_clauses = (clause_ratio * num_vars as f64).ceil() as usize;
    let mut clauses = Vec::with_capacity(num_clauses);
    for _ in 0..num_clauses {
        let clause = loop {
            let vars = index::sample(&mut rng, num_vars, clause_width);
            let lits: Vec<i64> = vars
                .iter()
                .map(|v| if rng.gen_bool(0.5) { v as i64 + 1 } else { -(v as i64 + 1) })
                .collect();
            if lits.iter().any(|&l| solution.get(l.unsigned_abs() as usize - 1) == (l > 0)) {
                break lits;
            }
        };
        clauses.push(clause);
    }
    Ok(Planted {
        formula: CnfFormula::new(num_vars, &clauses)?,
        solution: Assignment::new(solution),
    })
}
