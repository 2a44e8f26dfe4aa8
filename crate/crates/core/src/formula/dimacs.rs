//! DIMACS CNF reader and writer.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use super::{Clause, ClauseId, CnfFormula, FormulaError, Literal, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("missing \"p cnf\" header")]
    MissingHeader,
    #[error("line {line}: malformed header: {text}")]
    MalformedHeader { line: usize, text: String },
    #[error("line {line}: unexpected token {token:?}")]
    BadToken { line: usize, token: String },
    #[error("line {line}: literal with variable index 0")]
    ZeroLiteral { line: usize },
    #[error("line {line}: variable {var} exceeds the declared {declared}")]
    VariableOutOfRange { line: usize, var: u64, declared: u64 },
    #[error("line {line}: {source}")]
    Formula { line: usize, source: FormulaError },
    #[error("header declares {declared} clauses but {found} were read")]
    ClauseCountMismatch { declared: usize, found: usize },
    #[error("last clause is not terminated by 0")]
    UnterminatedClause,
}

/// Parses DIMACS CNF text. Clause ids are assigned 1, 2, ... in file
/// order; declared variables absent from every clause become free
/// variables.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula, ParseError> {
    let mut header: Option<(u64, usize)> = None;
    let mut clauses: Vec<Clause> = Vec::new();
    let mut current: Vec<Literal> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(ParseError::MalformedHeader { line: line_no, text: line.to_string() });
            }
            header = Some(parse_header(line, line_no)?);
            continue;
        }
        let Some((declared, _)) = header else {
            return Err(ParseError::MissingHeader);
        };
        for token in line.split_whitespace() {
            let value: i64 = token
                .parse()
                .map_err(|_| ParseError::BadToken { line: line_no, token: token.to_string() })?;
            if value == 0 {
                if token.starts_with('-') || token.starts_with('+') {
                    return Err(ParseError::ZeroLiteral { line: line_no });
                }
                let id = clauses.len() as ClauseId + 1;
                let clause = Clause::new(id, current.drain(..))
                    .map_err(|source| ParseError::Formula { line: line_no, source })?;
                clauses.push(clause);
                continue;
            }
            if value.unsigned_abs() > declared {
                return Err(ParseError::VariableOutOfRange {
                    line: line_no,
                    var: value.unsigned_abs(),
                    declared,
                });
            }
            current.push(Literal::from_dimacs(value).expect("nonzero literal in range"));
        }
    }

    let Some((declared, expected)) = header else {
        return Err(ParseError::MissingHeader);
    };
    if !current.is_empty() {
        return Err(ParseError::UnterminatedClause);
    }
    if clauses.len() != expected {
        return Err(ParseError::ClauseCountMismatch { declared: expected, found: clauses.len() });
    }
    let used: BTreeSet<Var> = clauses.iter().flat_map(|c| c.vars()).collect();
    let free: BTreeSet<Var> = (1..=declared as Var).filter(|v| !used.contains(v)).collect();
    CnfFormula::new(declared as Var, clauses, free)
        .map_err(|source| ParseError::Formula { line: 0, source })
}

fn parse_header(line: &str, line_no: usize) -> Result<(u64, usize), ParseError> {
    let bad = || ParseError::MalformedHeader { line: line_no, text: line.to_string() };
    let mut parts = line.split_whitespace();
    if parts.next() != Some("p") || parts.next() != Some("cnf") {
        return Err(bad());
    }
    let n: u64 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let m: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    if parts.next().is_some() || n > u64::from(Var::MAX) {
        return Err(bad());
    }
    Ok((n, m))
}

/// Writes `p cnf <max-var-id> <#clauses>` followed by one 0-terminated
/// clause per line.
pub fn to_dimacs(formula: &CnfFormula) -> String {
    let max_var = formula.all_vars().into_iter().next_back().unwrap_or(0);
    let mut out = format!("p cnf {} {}\n", max_var, formula.clauses().len());
    for clause in formula.clauses() {
        for lit in clause.literals() {
            write!(out, "{} ", lit.to_dimacs()).unwrap();
        }
        out.push_str("0\n");
    }
    out
}
