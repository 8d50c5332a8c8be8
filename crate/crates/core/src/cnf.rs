//! CNF data model, DIMACS ingestion and assignment evaluation.

use std::fmt::{self, Write as _};
use std::io::{BufRead, BufReader, Read};
use std::ops::Deref;
use std::str::FromStr;

use thiserror::Error;

use crate::bits::BitVector;
use crate::error::{Error, Result};

/// A literal: 0-based variable index plus sign, packed as `var * 2 + negated`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    #[inline]
    pub fn new(var: usize, negated: bool) -> Lit {
        Lit((var as u32) << 1 | negated as u32)
    }

    /// From a signed 1-based DIMACS literal. Panics on 0.
    pub fn from_dimacs(lit: i64) -> Lit {
        assert!(lit != 0, "0 is not a literal");
        Lit::new(lit.unsigned_abs() as usize - 1, lit < 0)
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var() as i64 + 1;
        if self.is_negated() {
            -v
        } else {
            v
        }
    }

    #[inline]
    pub fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    #[inline]
    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    #[inline]
    pub fn code(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn from_code(code: usize) -> Lit {
        Lit(code as u32)
    }

    #[inline]
    pub fn is_satisfied_by(self, bits: &BitVector) -> bool {
        bits.get(self.var()) != self.is_negated()
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;

    #[inline]
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// A full truth assignment, bit `i` holding variable `i + 1`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment(BitVector);

impl Assignment {
    pub fn new(bits: BitVector) -> Self {
        Assignment(bits)
    }

    pub fn bits(&self) -> &BitVector {
        &self.0
    }

    pub fn into_bits(self) -> BitVector {
        self.0
    }

    /// From signed DIMACS literals; every variable in `1..=num_vars` must be
    /// mentioned exactly once.
    pub fn from_literals(num_vars: usize, lits: &[i64]) -> Result<Self> {
        let mut bits = BitVector::zeros(num_vars);
        let mut seen = vec![false; num_vars];
        for &l in lits {
            let v = l.unsigned_abs() as usize;
            if l == 0 || v > num_vars {
                return Err(Error::InvalidArgument(format!("literal {l} out of range")));
            }
            if std::mem::replace(&mut seen[v - 1], true) {
                return Err(Error::InvalidArgument(format!("variable {v} assigned twice")));
            }
            bits.set(v - 1, l > 0);
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidArgument(format!(
                "variable {} not assigned",
                missing + 1
            )));
        }
        Ok(Assignment(bits))
    }
}

impl Deref for Assignment {
    type Target = BitVector;

    fn deref(&self) -> &BitVector {
        &self.0
    }
}

impl From<BitVector> for Assignment {
    fn from(bits: BitVector) -> Self {
        Assignment(bits)
    }
}

impl FromStr for Assignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse().map(Assignment)
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Debug for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Assignment({})", self.0)
    }
}

/// Bits under `mask = 1` are fixed; the rest are free and ignored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialAssignment {
    bits: BitVector,
    mask: BitVector,
}

impl PartialAssignment {
    pub fn new(bits: BitVector, mask: BitVector) -> Result<Self> {
        Error::check_len(bits.len(), mask.len())?;
        let bits = bits.and(&mask)?;
        Ok(PartialAssignment { bits, mask })
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn bits(&self) -> &BitVector {
        &self.bits
    }

    pub fn mask(&self) -> &BitVector {
        &self.mask
    }

    /// The fixed positions as unit literals.
    pub fn fixed_literals(&self) -> impl Iterator<Item = Lit> + '_ {
        self.mask.ones_iter().map(|v| Lit::new(v, !self.bits.get(v)))
    }

    pub fn agrees_with(&self, a: &BitVector) -> Result<bool> {
        Error::check_len(self.len(), a.len())?;
        Ok(a.and(&self.mask)? == self.bits)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("missing `p cnf` header")]
    MissingHeader,
    #[error("line {line}: duplicate `p cnf` header")]
    DuplicateHeader { line: usize },
    #[error("line {line}: malformed header")]
    BadHeader { line: usize },
    #[error("line {line}: clause data before `p cnf` header")]
    DataBeforeHeader { line: usize },
    #[error("line {line}: literal {literal} out of range 1..={num_vars}")]
    LiteralOutOfRange { line: usize, literal: i64, num_vars: usize },
    #[error("line {line}: invalid token {token:?}")]
    BadToken { line: usize, token: String },
    #[error("line {line}: clause not terminated by 0 at end of input")]
    UnterminatedClause { line: usize },
    #[error("line {line}: empty clause")]
    EmptyClause { line: usize },
}

/// An immutable clause database.
///
/// Clauses are normalized on construction: duplicate literals are removed
/// (first occurrence kept) and tautologies are dropped and counted.
#[derive(Clone, Debug)]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<Vec<Lit>>,
    header_clauses: usize,
    tautologies: usize,
}

impl PartialEq for CnfFormula {
    fn eq(&self, other: &Self) -> bool {
        self.num_vars == other.num_vars && self.clauses == other.clauses
    }
}

impl Eq for CnfFormula {}

enum Normalized {
    Clause(Vec<Lit>),
    Tautology,
}

fn normalize(lits: &[Lit], seen: &mut [u8]) -> Normalized {
    // seen[v]: bit 0 = positive seen, bit 1 = negative seen
    let mut out = Vec::with_capacity(lits.len());
    let mut tautology = false;
    for &l in lits {
        let flag = 1u8 << l.is_negated() as u8;
        let s = &mut seen[l.var()];
        if *s & flag == 0 {
            if *s != 0 {
                tautology = true;
            }
            *s |= flag;
            out.push(l);
        }
    }
    for l in &out {
        seen[l.var()] = 0;
    }
    if tautology {
        Normalized::Tautology
    } else {
        Normalized::Clause(out)
    }
}

impl CnfFormula {
    /// Builds a formula from signed 1-based literals.
    pub fn new(num_vars: usize, clauses: &[Vec<i64>]) -> Result<Self> {
        let mut seen = vec![0u8; num_vars];
        let mut kept = Vec::with_capacity(clauses.len());
        let mut tautologies = 0;
        for c in clauses {
            if c.is_empty() {
                return Err(Error::InvalidArgument("empty clause".into()));
            }
            let mut lits = Vec::with_capacity(c.len());
            for &l in c {
                if l == 0 || l.unsigned_abs() as usize > num_vars {
                    return Err(Error::InvalidArgument(format!(
                        "literal {l} out of range 1..={num_vars}"
                    )));
                }
                lits.push(Lit::from_dimacs(l));
            }
            match normalize(&lits, &mut seen) {
                Normalized::Clause(c) => kept.push(c),
                Normalized::Tautology => tautologies += 1,
            }
        }
        Ok(CnfFormula {
            num_vars,
            clauses: kept,
            header_clauses: clauses.len(),
            tautologies,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    /// Clause count declared in the DIMACS header.
    pub fn header_clauses(&self) -> usize {
        self.header_clauses
    }

    pub fn tautologies(&self) -> usize {
        self.tautologies
    }

    pub fn clauses_dimacs(&self) -> Vec<Vec<i64>> {
        self.clauses
            .iter()
            .map(|c| c.iter().map(|l| l.to_dimacs()).collect())
            .collect()
    }

    /// A copy with `extra` clauses appended (already normalized by the caller).
    pub fn with_clauses(&self, extra: impl IntoIterator<Item = Vec<Lit>>) -> CnfFormula {
        let mut f = self.clone();
        f.clauses.extend(extra);
        f.header_clauses = f.clauses.len();
        f
    }

    pub fn to_dimacs(&self) -> String {
        let mut s = String::new();
        writeln!(s, "p cnf {} {}", self.num_vars, self.clauses.len()).unwrap();
        for c in &self.clauses {
            for l in c {
                write!(s, "{} ", l.to_dimacs()).unwrap();
            }
            s.push_str("0\n");
        }
        s
    }
}

impl FromStr for CnfFormula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_dimacs(s.as_bytes())
    }
}

/// Parses a DIMACS CNF stream.
///
/// Comment lines start with `c`. A line starting with `%` ends the clause
/// section (a common trailer in older benchmark sets).
pub fn parse_dimacs<R: Read>(input: R) -> Result<CnfFormula> {
    let reader = BufReader::new(input);
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<Lit> = Vec::new();
    let mut current_start = 0;
    let mut tautologies = 0;
    let mut seen: Vec<u8> = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        if trimmed.starts_with('%') {
            break;
        }
        if trimmed.starts_with('p') {
            if header.is_some() {
                return Err(ParseError::DuplicateHeader { line: lineno }.into());
            }
            let parts: Vec<&str> = trimmed.split_whitespace().collect();
            let parsed = match parts.as_slice() {
                ["p", "cnf", v, c] => v.parse::<usize>().ok().zip(c.parse::<usize>().ok()),
                _ => None,
            };
            let (v, c) = parsed.ok_or(ParseError::BadHeader { line: lineno })?;
            seen = vec![0; v];
            header = Some((v, c));
            continue;
        }
        let Some((num_vars, _)) = header else {
            return Err(ParseError::DataBeforeHeader { line: lineno }.into());
        };
        for tok in trimmed.split_whitespace() {
            let lit: i64 = tok.parse().map_err(|_| ParseError::BadToken {
                line: lineno,
                token: tok.to_string(),
            })?;
            if lit == 0 {
                if current.is_empty() {
                    return Err(ParseError::EmptyClause { line: lineno }.into());
                }
                match normalize(&current, &mut seen) {
                    Normalized::Clause(c) => clauses.push(c),
                    Normalized::Tautology => tautologies += 1,
                }
                current.clear();
                continue;
            }
            if lit.unsigned_abs() as usize > num_vars {
                return Err(ParseError::LiteralOutOfRange {
                    line: lineno,
                    literal: lit,
                    num_vars,
                }
                .into());
            }
            if current.is_empty() {
                current_start = lineno;
            }
            current.push(Lit::from_dimacs(lit));
        }
    }

    let (num_vars, header_clauses) = header.ok_or(ParseError::MissingHeader)?;
    if !current.is_empty() {
        return Err(ParseError::UnterminatedClause { line: current_start }.into());
    }
    Ok(CnfFormula {
        num_vars,
        clauses,
        header_clauses,
        tautologies,
    })
}

/// True iff every clause has a satisfied literal.
pub fn evaluate(f: &CnfFormula, a: &Assignment) -> Result<bool> {
    Error::check_len(f.num_vars, a.len())?;
    Ok(f
        .clauses
        .iter()
        .all(|c| c.iter().any(|l| l.is_satisfied_by(a))))
}

/// 0-based indices of clauses with no satisfied literal.
pub fn falsified_clauses(f: &CnfFormula, a: &Assignment) -> Result<Vec<usize>> {
    Error::check_len(f.num_vars, a.len())?;
    Ok(f.clauses
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.iter().any(|l| l.is_satisfied_by(a)))
        .map(|(i, _)| i)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<CnfFormula> {
        parse_dimacs(s.as_bytes())
    }

    fn a(s: &str) -> Assignment {
        s.parse().unwrap()
    }

    #[test]
    fn parses_basic_formula() {
        let f = parse("p cnf 3 2\n1 -3 0\n2 3 -1 0").unwrap();
        assert_eq!(f.num_vars(), 3);
        assert_eq!(f.clauses_dimacs(), vec![vec![1, -3], vec![2, 3, -1]]);
    }

    #[test]
    fn skips_comments() {
        let f = parse("c comment\np cnf 2 1\n1 2 0").unwrap();
        assert_eq!(f.num_vars(), 2);
        assert_eq!(f.num_clauses(), 1);
    }

    #[test]
    fn drops_tautologies_and_counts_them() {
        let f = parse("p cnf 2 1\n1 -1 0").unwrap();
        assert_eq!(f.num_clauses(), 0);
        assert_eq!(f.tautologies(), 1);
        assert_eq!(f.header_clauses(), 1);
    }

    #[test]
    fn deduplicates_literals() {
        let f = parse("p cnf 3 1\n1 2 1 2 -3 0\n").unwrap();
        assert_eq!(f.clauses_dimacs(), vec![vec![1, 2, -3]]);
    }

    #[test]
    fn clauses_may_span_lines() {
        let f = parse("p cnf 3 2\n1 2\n 3 0 -1\n0\n").unwrap();
        assert_eq!(f.clauses_dimacs(), vec![vec![1, 2, 3], vec![-1]]);
    }

    #[test]
    fn percent_trailer_ends_input() {
        let f = parse("p cnf 2 1\n1 2 0\n%\n0\n").unwrap();
        assert_eq!(f.num_clauses(), 1);
    }

    #[test]
    fn parse_errors_are_distinct_and_name_lines() {
        use ParseError::*;
        let err = |s: &str| match parse(s) {
            Err(Error::Parse(e)) => e,
            other => panic!("expected parse error, got {other:?}"),
        };
        assert_eq!(err("1 2 0\n"), DataBeforeHeader { line: 1 });
        assert_eq!(err("c only\n"), MissingHeader);
        assert_eq!(err("p cnf 2 1\np cnf 2 1\n"), DuplicateHeader { line: 2 });
        assert_eq!(err("p cnf x 1\n"), BadHeader { line: 1 });
        assert_eq!(
            err("p cnf 2 1\n1 3 0\n"),
            LiteralOutOfRange { line: 2, literal: 3, num_vars: 2 }
        );
        assert_eq!(err("p cnf 2 2\n1 0\n2\n"), UnterminatedClause { line: 3 });
        assert_eq!(err("p cnf 2 2\n1 0\n0\n"), EmptyClause { line: 3 });
        assert_eq!(
            err("p cnf 2 1\n1 q 0\n"),
            BadToken { line: 2, token: "q".into() }
        );
    }

    #[test]
    fn evaluate_examples() {
        let f = parse("p cnf 2 2\n1 2 0\n-1 2 0\n").unwrap();
        assert!(evaluate(&f, &a("11")).unwrap());
        assert!(!evaluate(&f, &a("10")).unwrap());
        let empty = parse("p cnf 4 0\n").unwrap();
        assert!(evaluate(&empty, &a("0110")).unwrap());
    }

    #[test]
    fn falsified_examples() {
        let f = parse("p cnf 2 2\n1 2 0\n-1 2 0\n").unwrap();
        assert_eq!(falsified_clauses(&f, &a("10")).unwrap(), vec![1]);
        assert!(falsified_clauses(&f, &a("11")).unwrap().is_empty());
        let units = parse("p cnf 2 2\n1 0\n2 0\n").unwrap();
        assert_eq!(falsified_clauses(&units, &a("00")).unwrap(), vec![0, 1]);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let f = parse("p cnf 2 1\n1 2 0\n").unwrap();
        assert!(matches!(
            evaluate(&f, &a("1")),
            Err(Error::LengthMismatch { expected: 2, actual: 1 })
        ));
        assert!(falsified_clauses(&f, &a("101")).is_err());
    }

    #[test]
    fn assignment_from_value_line_literals() {
        let x = Assignment::from_literals(2, &[1, -2]).unwrap();
        assert_eq!(x.to_string(), "10");
        assert!(Assignment::from_literals(2, &[1]).is_err());
        assert!(Assignment::from_literals(2, &[1, 2, -2]).is_err());
    }

    #[test]
    fn partial_assignment_masks_free_bits() {
        let p = PartialAssignment::new("111".parse().unwrap(), "101".parse().unwrap()).unwrap();
        assert_eq!(p.bits().to_string(), "101");
        let fixed: Vec<i64> = p.fixed_literals().map(|l| l.to_dimacs()).collect();
        assert_eq!(fixed, vec![1, 3]);
        assert!(p.agrees_with(&"101".parse().unwrap()).unwrap());
        assert!(p.agrees_with(&"111".parse().unwrap()).unwrap());
        assert!(!p.agrees_with(&"001".parse().unwrap()).unwrap());
    }
}
