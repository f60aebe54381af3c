use std::collections::BTreeMap;
use std::fmt;

use super::ast::{Command, Expr, VarRef};
use crate::error::{Error, Result};

/// A total mapping from a declared set of variables to integer values.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Store {
    values: BTreeMap<VarRef, i64>,
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, var: VarRef, value: i64) {
        self.values.insert(var, value);
    }

    pub fn with(mut self, var: VarRef, value: i64) -> Self {
        self.declare(var, value);
        self
    }

    pub fn get(&self, var: &VarRef) -> Result<i64> {
        self.values
            .get(var)
            .copied()
            .ok_or_else(|| Error::UndeclaredVariable(var.to_string()))
    }

    /// Updates a declared variable; undeclared targets are an error.
    pub fn set(&mut self, var: &VarRef, value: i64) -> Result<()> {
        match self.values.get_mut(var) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(Error::UndeclaredVariable(var.to_string())),
        }
    }

    pub fn contains(&self, var: &VarRef) -> bool {
        self.values.contains_key(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarRef, i64)> {
        self.values.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn eval(&self, e: &Expr) -> Result<i64> {
        Ok(match e {
            Expr::Lit(n) => *n,
            Expr::Var(v) => self.get(v)?,
            Expr::Bin(op, l, r) => op.apply(self.eval(l)?, self.eval(r)?),
        })
    }
}

impl FromIterator<(VarRef, i64)> for Store {
    fn from_iter<I: IntoIterator<Item = (VarRef, i64)>>(iter: I) -> Self {
        Store {
            values: iter.into_iter().collect(),
        }
    }
}

/// Renders in the store-file format, one `ident = integer` per line.
impl fmt::Display for Store {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.values {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

/// Result of a fuel-bounded run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Done(Store),
    /// The fuel ran out before the program finished.
    OutOfFuel,
}

impl Outcome {
    pub fn store(&self) -> Option<&Store> {
        match self {
            Outcome::Done(s) => Some(s),
            Outcome::OutOfFuel => None,
        }
    }

    pub fn into_store(self) -> Option<Store> {
        match self {
            Outcome::Done(s) => Some(s),
            Outcome::OutOfFuel => None,
        }
    }
}

struct OutOfFuel;

fn run(c: &Command, s: &mut Store, fuel: &mut u64) -> Result<Result<(), OutOfFuel>> {
    match c {
        Command::Skip => {}
        Command::Assign(x, e) => {
            let v = s.eval(e)?;
            s.set(x, v)?;
        }
        Command::Seq(a, b) => {
            if run(a, s, fuel)?.is_err() {
                return Ok(Err(OutOfFuel));
            }
            return run(b, s, fuel);
        }
        Command::If(e, a, b) => {
            return if s.eval(e)? != 0 { run(a, s, fuel) } else { run(b, s, fuel) };
        }
        Command::While(e, body) => {
            while s.eval(e)? != 0 {
                if *fuel == 0 {
                    return Ok(Err(OutOfFuel));
                }
                *fuel -= 1;
                if run(body, s, fuel)?.is_err() {
                    return Ok(Err(OutOfFuel));
                }
            }
        }
    }
    Ok(Ok(()))
}

/// Big-step execution with a fuel bound; each loop unrolling costs one unit.
pub fn exec(c: &Command, s: &Store, fuel: u64) -> Result<Outcome> {
    let mut store = s.clone();
    let mut fuel = fuel;
    Ok(match run(c, &mut store, &mut fuel)? {
        Ok(()) => Outcome::Done(store),
        Err(OutOfFuel) => Outcome::OutOfFuel,
    })
}
