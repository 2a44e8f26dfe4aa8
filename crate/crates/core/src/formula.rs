//! CNF formulas, truth assignments, reduction under an assignment and
//! literal deletion.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod dimacs;

pub use dimacs::{parse_dimacs, to_dimacs, ParseError};

pub type Var = u32;
pub type ClauseId = u32;

/// Default cap on the number of variables an assignment enumeration may cover.
pub const DEFAULT_ASSIGNMENT_CAP: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    var: Var,
    polarity: Polarity,
}

impl Literal {
    pub fn new(var: Var, polarity: Polarity) -> Self {
        assert!(var >= 1, "variable ids start at 1");
        Literal { var, polarity }
    }

    pub fn positive(var: Var) -> Self {
        Self::new(var, Polarity::Positive)
    }

    pub fn negative(var: Var) -> Self {
        Self::new(var, Polarity::Negative)
    }

    /// From a signed DIMACS integer.
    pub fn from_dimacs(lit: i64) -> Option<Self> {
        if lit == 0 || lit.unsigned_abs() > u64::from(Var::MAX) {
            return None;
        }
        let polarity = if lit > 0 { Polarity::Positive } else { Polarity::Negative };
        Some(Literal { var: lit.unsigned_abs() as Var, polarity })
    }

    pub fn to_dimacs(self) -> i64 {
        match self.polarity {
            Polarity::Positive => i64::from(self.var),
            Polarity::Negative => -i64::from(self.var),
        }
    }

    pub fn var(self) -> Var {
        self.var
    }

    pub fn polarity(self) -> Polarity {
        self.polarity
    }

    pub fn is_positive(self) -> bool {
        self.polarity == Polarity::Positive
    }

    /// Truth value of the literal when its variable takes `value`.
    pub fn eval(self, value: bool) -> bool {
        value == self.is_positive()
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// A clause with a stable id. Literals are kept sorted by variable and no
/// two literals share a variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Clause {
    id: ClauseId,
    literals: Vec<Literal>,
}

impl Clause {
    /// Builds a clause, collapsing duplicate literals. Fails on a
    /// complementary pair.
    pub fn new(id: ClauseId, literals: impl IntoIterator<Item = Literal>) -> Result<Self, FormulaError> {
        let mut lits: Vec<Literal> = literals.into_iter().collect();
        lits.sort();
        lits.dedup();
        for pair in lits.windows(2) {
            if pair[0].var == pair[1].var {
                return Err(FormulaError::ComplementaryPair { clause: id, var: pair[0].var });
            }
        }
        Ok(Clause { id, literals: lits })
    }

    pub fn id(&self) -> ClauseId {
        self.id
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.literals.iter().map(|l| l.var)
    }

    pub fn literal_of(&self, var: Var) -> Option<Literal> {
        self.literals
            .binary_search_by_key(&var, |l| l.var)
            .ok()
            .map(|i| self.literals[i])
    }

    pub fn contains_var(&self, var: Var) -> bool {
        self.literal_of(var).is_some()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("clause {clause} contains both {var} and -{var}")]
    ComplementaryPair { clause: ClauseId, var: Var },
    #[error("duplicate clause id {0}")]
    DuplicateClauseId(ClauseId),
    #[error("variable {0} is not declared in the formula")]
    UndeclaredVariable(Var),
    #[error("variable {0} does not occur in any clause")]
    NotOccurring(Var),
    #[error("free variable {0} also occurs in a clause")]
    FreeVariableOccurs(Var),
    #[error("assignment enumeration over {size} variables exceeds the cap of {cap}")]
    AssignmentCapExceeded { size: usize, cap: usize },
}

/// A CNF formula: a sequence of clauses plus the variables that were
/// declared but occur in no clause.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CnfFormula {
    num_vars_declared: Var,
    clauses: Vec<Clause>,
    free_vars: BTreeSet<Var>,
}

impl CnfFormula {
    /// Builds a formula. `num_vars_declared` is raised to the largest
    /// variable seen if it is smaller.
    pub fn new(
        num_vars_declared: Var,
        clauses: Vec<Clause>,
        free_vars: BTreeSet<Var>,
    ) -> Result<Self, FormulaError> {
        let mut ids = BTreeSet::new();
        for c in &clauses {
            if !ids.insert(c.id) {
                return Err(FormulaError::DuplicateClauseId(c.id));
            }
        }
        let mut declared = num_vars_declared;
        for c in &clauses {
            for v in c.vars() {
                if free_vars.contains(&v) {
                    return Err(FormulaError::FreeVariableOccurs(v));
                }
                declared = declared.max(v);
            }
        }
        if let Some(&max_free) = free_vars.iter().next_back() {
            declared = declared.max(max_free);
        }
        Ok(CnfFormula { num_vars_declared: declared, clauses, free_vars })
    }

    /// Clauses from signed integer lists, ids assigned 1, 2, ... in order.
    pub fn from_clauses<I, C>(clauses: I) -> Result<Self, FormulaError>
    where
        I: IntoIterator<Item = C>,
        C: IntoIterator<Item = i64>,
    {
        let mut out = Vec::new();
        for (i, c) in clauses.into_iter().enumerate() {
            let lits: Vec<Literal> = c
                .into_iter()
                .map(|l| Literal::from_dimacs(l).expect("literal must be nonzero"))
                .collect();
            out.push(Clause::new(i as ClauseId + 1, lits)?);
        }
        CnfFormula::new(0, out, BTreeSet::new())
    }

    pub fn num_vars_declared(&self) -> Var {
        self.num_vars_declared
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clause(&self, id: ClauseId) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.id == id)
    }

    pub fn free_vars(&self) -> &BTreeSet<Var> {
        &self.free_vars
    }

    /// var(F): variables occurring in some clause.
    pub fn vars(&self) -> BTreeSet<Var> {
        self.clauses.iter().flat_map(|c| c.vars()).collect()
    }

    /// var(F) together with the free variables.
    pub fn all_vars(&self) -> BTreeSet<Var> {
        let mut all = self.vars();
        all.extend(self.free_vars.iter().copied());
        all
    }

    pub fn clause_ids(&self) -> BTreeSet<ClauseId> {
        self.clauses.iter().map(|c| c.id).collect()
    }

    pub fn has_empty_clause(&self) -> bool {
        self.clauses.iter().any(Clause::is_empty)
    }

    /// |F| = |var(F)| + sum over clauses of (1 + |lit(c)|).
    pub fn size(&self) -> usize {
        self.vars().len() + self.clauses.iter().map(|c| 1 + c.len()).sum::<usize>()
    }

    /// Adds a declared variable that occurs in no clause.
    pub fn with_free_var(&self, var: Var) -> Result<Self, FormulaError> {
        if self.vars().contains(&var) {
            return Err(FormulaError::FreeVariableOccurs(var));
        }
        let mut free = self.free_vars.clone();
        free.insert(var);
        CnfFormula::new(self.num_vars_declared.max(var), self.clauses.clone(), free)
    }

    /// F[τ]: clauses satisfied by τ disappear, literals falsified by τ are
    /// dropped. Surviving clauses keep their ids; an emptied clause stays
    /// as a zero-literal clause. Assigned free variables leave the free set;
    /// variables that vanish because all their clauses were satisfied are
    /// not added to it.
    pub fn reduce(&self, tau: &Assignment) -> Result<CnfFormula, FormulaError> {
        if tau.is_empty() {
            return Ok(self.clone());
        }
        let vars = self.vars();
        for v in tau.domain() {
            if !vars.contains(&v) && !self.free_vars.contains(&v) {
                return Err(FormulaError::UndeclaredVariable(v));
            }
        }
        let clauses = self
            .clauses
            .iter()
            .filter(|c| !c.literals.iter().any(|l| tau.get(l.var).is_some_and(|b| l.eval(b))))
            .map(|c| Clause {
                id: c.id,
                literals: c.literals.iter().copied().filter(|l| !tau.contains(l.var)).collect(),
            })
            .collect();
        let free_vars = self.free_vars.iter().copied().filter(|v| !tau.contains(*v)).collect();
        Ok(CnfFormula { num_vars_declared: self.num_vars_declared, clauses, free_vars })
    }

    /// F − B: every literal over a variable of B is removed. No clause is
    /// deleted.
    pub fn delete_vars(&self, b: &BTreeSet<Var>) -> Result<CnfFormula, FormulaError> {
        let vars = self.vars();
        if let Some(&v) = b.iter().find(|v| !vars.contains(v)) {
            return Err(FormulaError::NotOccurring(v));
        }
        let clauses = self
            .clauses
            .iter()
            .map(|c| Clause {
                id: c.id,
                literals: c.literals.iter().copied().filter(|l| !b.contains(&l.var)).collect(),
            })
            .collect();
        Ok(CnfFormula {
            num_vars_declared: self.num_vars_declared,
            clauses,
            free_vars: self.free_vars.clone(),
        })
    }

    /// Whether `tau` (total on var(F)) satisfies every clause.
    pub fn is_satisfied_by(&self, tau: &Assignment) -> bool {
        self.clauses
            .iter()
            .all(|c| c.literals.iter().any(|l| tau.get(l.var).is_some_and(|b| l.eval(b))))
    }
}

/// A truth assignment on a finite set of variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Assignment {
    values: BTreeMap<Var, bool>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(var: Var, value: bool) -> Self {
        let mut a = Self::new();
        a.set(var, value);
        a
    }

    pub fn set(&mut self, var: Var, value: bool) {
        self.values.insert(var, value);
    }

    pub fn get(&self, var: Var) -> Option<bool> {
        self.values.get(&var).copied()
    }

    pub fn contains(&self, var: Var) -> bool {
        self.values.contains_key(&var)
    }

    pub fn domain(&self) -> impl Iterator<Item = Var> + '_ {
        self.values.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, bool)> + '_ {
        self.values.iter().map(|(&v, &b)| (v, b))
    }

    /// Union of two assignments on disjoint domains.
    pub fn union(&self, other: &Assignment) -> Assignment {
        let mut values = self.values.clone();
        values.extend(other.values.iter().map(|(&v, &b)| (v, b)));
        Assignment { values }
    }
}

impl FromIterator<(Var, bool)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (Var, bool)>>(iter: T) -> Self {
        Assignment { values: iter.into_iter().collect() }
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, b)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}={}", u8::from(b))?;
        }
        write!(f, "}}")
    }
}

impl Serialize for Assignment {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(self.values.len()))?;
        for (v, b) in &self.values {
            map.serialize_entry(&v.to_string(), &u8::from(*b))?;
        }
        map.end()
    }
}

/// All 2^|X| assignments on `vars`, in binary counting order with the
/// smallest variable as the most significant digit.
pub fn assignments(vars: &BTreeSet<Var>) -> Result<Assignments, FormulaError> {
    assignments_capped(vars, DEFAULT_ASSIGNMENT_CAP)
}

pub fn assignments_capped(vars: &BTreeSet<Var>, cap: usize) -> Result<Assignments, FormulaError> {
    if vars.len() > cap || vars.len() >= 64 {
        return Err(FormulaError::AssignmentCapExceeded { size: vars.len(), cap });
    }
    Ok(Assignments { vars: vars.iter().copied().collect(), next: 0, end: 1u64 << vars.len() })
}

#[derive(Debug, Clone)]
pub struct Assignments {
    vars: Vec<Var>,
    next: u64,
    end: u64,
}

impl Assignments {
    /// The assignment with the given position in the enumeration.
    pub fn nth_assignment(vars: &[Var], index: u64) -> Assignment {
        let n = vars.len();
        vars.iter()
            .enumerate()
            .map(|(i, &v)| (v, (index >> (n - 1 - i)) & 1 == 1))
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.end
    }
}

impl Iterator for Assignments {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        if self.next >= self.end {
            return None;
        }
        let a = Self::nth_assignment(&self.vars, self.next);
        self.next += 1;
        Some(a)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rest = (self.end - self.next) as usize;
        (rest, Some(rest))
    }
}

impl ExactSizeIterator for Assignments {}
