//! Adapter for an external SAT solver speaking the competition I/O format.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::cnf::{evaluate, Assignment, CnfFormula, PartialAssignment};
use crate::error::{Error, Result};
use crate::solver::SolveResult;

/// Overrides the directory used for temporary DIMACS files.
pub const TMPDIR_ENV: &str = "SNAP_TMPDIR";

#[derive(Debug, Error)]
pub enum ExternalError {
    #[error("failed to launch external solver `{command}`: {source}")]
    Spawn {
        command: String,
        source: std::io::Error,
    },
    #[error("external solver exited with {status} and no status line")]
    ProcessFailed { status: String },
    #[error("external solver timed out after {0:?}")]
    Timeout(Duration),
    #[error("unparsable external solver output: {0}")]
    Unparsable(String),
    #[error("external solver inconsistency: reported model does not satisfy the formula")]
    Inconsistent,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExternalSolver {
    /// Whitespace-separated command line. A `{}` token is replaced by the
    /// DIMACS path; otherwise the path is appended.
    pub command: String,
    pub timeout: Duration,
}

impl ExternalSolver {
    pub fn new(command: impl Into<String>) -> Self {
        ExternalSolver {
            command: command.into(),
            timeout: Duration::from_secs(300),
        }
    }
}

/// Status and values parsed from competition-format output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompetitionOutput {
    Satisfiable(Vec<i64>),
    Unsatisfiable,
    Unknown,
}

pub fn parse_competition_output(text: &str) -> Result<Option<CompetitionOutput>, ExternalError> {
    let mut status = None;
    let mut values = Vec::new();
    let mut terminated = false;
    for line in text.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("s ") {
            let s = match rest.trim() {
                "SATISFIABLE" => 0,
                "UNSATISFIABLE" => 1,
                "UNKNOWN" => 2,
                other => return Err(ExternalError::Unparsable(format!("status {other:?}"))),
            };
            if status.replace(s).is_some() {
                return Err(ExternalError::Unparsable("multiple status lines".into()));
            }
        } else if let Some(rest) = line.strip_prefix("v ").or(if line == "v" { Some("") } else { None }) {
            for tok in rest.split_whitespace() {
                let lit: i64 = tok
                    .parse()
                    .map_err(|_| ExternalError::Unparsable(format!("value token {tok:?}")))?;
                if lit == 0 {
                    terminated = true;
                } else {
                    values.push(lit);
                }
            }
        }
    }
    Ok(match status {
        None => None,
        Some(0) => {
            if !terminated && values.is_empty() {
                return Err(ExternalError::Unparsable("SATISFIABLE without value lines".into()));
            }
            Some(CompetitionOutput::Satisfiable(values))
        }
        Some(1) => Some(CompetitionOutput::Unsatisfiable),
        Some(_) => Some(CompetitionOutput::Unknown),
    })
}

/// Fixed bits become unit clauses appended to the formula.
pub fn with_fixed_units(f: &CnfFormula, fixed: Option<&PartialAssignment>) -> Result<CnfFormula> {
    match fixed {
        None => Ok(f.clone()),
        Some(p) => {
            Error::check_len(f.num_vars(), p.len())?;
            Ok(f.with_clauses(p.fixed_literals().map(|l| vec![l])))
        }
    }
}

/// Values for variables the solver leaves out default to false; the model
/// is checked against the formula either way.
fn model_from_values(num_vars: usize, values: &[i64]) -> Result<Assignment, ExternalError> {
    let mut bits = crate::bits::BitVector::zeros(num_vars);
    for &l in values {
        let v = l.unsigned_abs() as usize;
        if v > num_vars {
            return Err(ExternalError::Unparsable(format!("value {l} out of range")));
        }
        bits.set(v - 1, l > 0);
    }
    Ok(Assignment::new(bits))
}

pub fn external_solve_adapter(
    f: &CnfFormula,
    fixed: Option<&PartialAssignment>,
    solver: &ExternalSolver,
) -> Result<SolveResult> {
    let query = with_fixed_units(f, fixed)?;
    let mut builder = tempfile::Builder::new();
    builder.prefix("snap-").suffix(".cnf");
    let mut file = match std::env::var_os(TMPDIR_ENV) {
        Some(dir) => builder.tempfile_in(PathBuf::from(dir))?,
        None => builder.tempfile()?,
    };
    file.write_all(query.to_dimacs().as_bytes())?;
    file.flush()?;
    let path = file.path().to_string_lossy().into_owned();

    let mut parts: Vec<String> = solver.command.split_whitespace().map(str::to_string).collect();
    if parts.is_empty() {
        return Err(Error::InvalidArgument("empty external solver command".into()));
    }
    if parts.iter().any(|p| p == "{}") {
        for p in &mut parts {
            if p == "{}" {
                *p = path.clone();
            }
        }
    } else {
        parts.push(path);
    }

    let mut child = Command::new(&parts[0])
        .args(&parts[1..])
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|source| ExternalError::Spawn {
            command: solver.command.clone(),
            source,
        })?;
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = std::thread::spawn(move || {
        let mut s = String::new();
        stdout.read_to_string(&mut s).map(|_| s)
    });

    let start = Instant::now();
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if start.elapsed() >= solver.timeout {
            let _ = child.kill();
            let _ = child.wait();
            return Err(ExternalError::Timeout(solver.timeout).into());
        }
        std::thread::sleep(Duration::from_millis(5));
    };
    let text = reader
        .join()
        .map_err(|_| ExternalError::Unparsable("output reader panicked".into()))??;

    let parsed = parse_competition_output(&text)?;
    match parsed {
        None => {
            if status.success() {
                Err(ExternalError::Unparsable("missing status line".into()).into())
            } else {
                Err(ExternalError::ProcessFailed {
                    status: status.to_string(),
                }
                .into())
            }
        }
        Some(CompetitionOutput::Unsatisfiable) => Ok(SolveResult::Unsat),
        Some(CompetitionOutput::Unknown) => {
            Err(ExternalError::Unparsable("solver reported UNKNOWN".into()).into())
        }
        Some(CompetitionOutput::Satisfiable(values)) => {
            let model = model_from_values(f.num_vars(), &values)?;
            if !evaluate(&query, &model)? {
                return Err(ExternalError::Inconsistent.into());
            }
            Ok(SolveResult::Sat(model))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_bits_become_unit_clauses() {
        let f: CnfFormula = "p cnf 3 1\n1 2 3 0\n".parse().unwrap();
        let p = PartialAssignment::new("000".parse().unwrap(), "001".parse().unwrap()).unwrap();
        let q = with_fixed_units(&f, Some(&p)).unwrap();
        assert_eq!(q.to_dimacs(), "p cnf 3 2\n1 2 3 0\n-3 0\n");
    }

    #[test]
    fn parses_unsat_status() {
        assert_eq!(
            parse_competition_output("c hi\ns UNSATISFIABLE\n").unwrap(),
            Some(CompetitionOutput::Unsatisfiable)
        );
    }

    #[test]
    fn parses_value_lines() {
        let out = parse_competition_output("s SATISFIABLE\nv 1 -2 0\n").unwrap();
        let Some(CompetitionOutput::Satisfiable(vals)) = out else {
            panic!("expected SAT")
        };
        assert_eq!(model_from_values(2, &vals).unwrap().to_string(), "10");
    }

    #[test]
    fn value_lines_may_wrap() {
        let out = parse_competition_output("s SATISFIABLE\nv 1 -2\nv 3 0\n").unwrap();
        assert_eq!(out, Some(CompetitionOutput::Satisfiable(vec![1, -2, 3])));
    }

    #[test]
    fn missing_status_is_none() {
        assert_eq!(parse_competition_output("c nothing\n").unwrap(), None);
        assert!(parse_competition_output("s MAYBE\n").is_err());
        assert!(parse_competition_output("s SATISFIABLE\nv 1 x 0\n").is_err());
    }
}
