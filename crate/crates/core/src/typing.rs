//! Flow-sensitive security typing.
//!
//! [`spc`] is the algorithmic transfer function: given a program-counter level
//! and a pre-environment it computes the least post-environment derivable for
//! a command. Because that result is least, derivability of an arbitrary
//! judgement reduces to one pointwise comparison ([`check_judgement`]).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lang::{Command, Expr, VarRef};
use crate::lattice::{Elem, Lattice};

/// A total map from a declared variable set to elements of one lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeEnv {
    lattice: Arc<Lattice>,
    map: BTreeMap<String, Elem>,
}

impl TypeEnv {
    pub fn new(lattice: Arc<Lattice>, bindings: impl IntoIterator<Item = (String, Elem)>) -> Self {
        let map: BTreeMap<String, Elem> = bindings.into_iter().collect();
        debug_assert!(map.values().all(|&e| lattice.contains(e)));
        TypeEnv { lattice, map }
    }

    /// Every variable bound to the same element.
    pub fn uniform<S: Into<String>>(lattice: Arc<Lattice>, vars: impl IntoIterator<Item = S>, e: Elem) -> Self {
        let map = vars.into_iter().map(|v| (v.into(), e)).collect();
        TypeEnv { lattice, map }
    }

    /// Parses `var: element` pairs against the lattice, e.g.
    /// `[("l", "L"), ("h", "H")]`.
    pub fn from_names<S: AsRef<str>>(lattice: Arc<Lattice>, pairs: &[(S, S)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (v, e) in pairs {
            map.insert(v.as_ref().to_string(), lattice.parse_element(e.as_ref())?);
        }
        Ok(TypeEnv { lattice, map })
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn get(&self, var: &str) -> Result<Elem> {
        self.map
            .get(var)
            .copied()
            .ok_or_else(|| Error::UndeclaredVariable(var.to_string()))
    }

    pub fn set(&mut self, var: &str, e: Elem) {
        debug_assert!(self.lattice.contains(e));
        self.map.insert(var.to_string(), e);
    }

    pub fn with(mut self, var: &str, e: Elem) -> Self {
        self.set(var, e);
        self
    }

    pub fn contains(&self, var: &str) -> bool {
        self.map.contains_key(var)
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Elem)> {
        self.map.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Applies `f` to every binding, targeting another lattice.
    pub fn map_elems(&self, target: Arc<Lattice>, mut f: impl FnMut(Elem) -> Elem) -> TypeEnv {
        let map = self.map.iter().map(|(k, &v)| (k.clone(), f(v))).collect();
        TypeEnv { lattice: target, map }
    }

    pub fn same_domain(&self, other: &TypeEnv) -> bool {
        self.map.len() == other.map.len() && self.map.keys().zip(other.map.keys()).all(|(a, b)| a == b)
    }

    fn require_compatible(&self, other: &TypeEnv) -> Result<()> {
        if *self.lattice != *other.lattice {
            return Err(Error::DomainMismatch(format!(
                "environments over lattices `{}` and `{}`",
                self.lattice.name(),
                other.lattice.name()
            )));
        }
        if !self.same_domain(other) {
            let a: Vec<&str> = self.vars().collect();
            let b: Vec<&str> = other.vars().collect();
            return Err(Error::DomainMismatch(format!(
                "variables [{}] vs [{}]",
                a.join(", "),
                b.join(", ")
            )));
        }
        Ok(())
    }

    /// Pointwise order.
    pub fn leq(&self, other: &TypeEnv) -> Result<bool> {
        self.require_compatible(other)?;
        Ok(self
            .map
            .values()
            .zip(other.map.values())
            .all(|(&a, &b)| self.lattice.leq(a, b)))
    }

    /// Pointwise join.
    pub fn join(&self, other: &TypeEnv) -> Result<TypeEnv> {
        self.require_compatible(other)?;
        let map = self
            .map
            .iter()
            .zip(other.map.values())
            .map(|((k, &a), &b)| (k.clone(), self.lattice.join(a, b)))
            .collect();
        Ok(TypeEnv {
            lattice: self.lattice.clone(),
            map,
        })
    }

    /// Bindings of `other` that differ from `self`, in variable order.
    pub fn changes_to(&self, other: &TypeEnv) -> Vec<(String, Elem)> {
        other
            .map
            .iter()
            .filter(|(k, v)| self.map.get(*k) != Some(v))
            .map(|(k, v)| (k.clone(), *v))
            .collect()
    }

    pub fn element_name(&self, var: &str) -> Result<String> {
        Ok(self.lattice.element_name(self.get(var)?))
    }
}

/// Renders in the environment-file format, one `var : element` per line.
impl fmt::Display for TypeEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, &v) in &self.map {
            writeln!(f, "{k} : {}", self.lattice.element_name(v))?;
        }
        Ok(())
    }
}

/// `pc ⊢ pre {command} post`.
#[derive(Debug, Clone)]
pub struct Judgement {
    pub pc: Elem,
    pub pre: TypeEnv,
    pub command: Command,
    pub post: TypeEnv,
}

/// The type of an expression: the join of the types of its floating
/// variables and the indices of its fixed variables.
pub fn expr_type(env: &TypeEnv, e: &Expr) -> Result<Elem> {
    let lat = env.lattice();
    let mut acc = lat.bottom();
    let mut err = None;
    e.for_each_var(&mut |v| {
        if err.is_some() {
            return;
        }
        let t = match v {
            VarRef::Floating(x) => env.get(x),
            VarRef::Fixed { name, level } => lat.parse_element(level).map_err(|_| Error::FixedIndexNotInLattice {
                var: name.clone(),
                level: level.clone(),
            }),
        };
        match t {
            Ok(t) => acc = lat.join(acc, t),
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(acc),
    }
}

/// Expression type for programs that must be all-floating.
fn floating_expr_type(env: &TypeEnv, e: &Expr) -> Result<Elem> {
    let mut fixed = None;
    e.for_each_var(&mut |v| {
        if v.is_fixed() && fixed.is_none() {
            fixed = Some(v.to_string());
        }
    });
    match fixed {
        Some(v) => Err(Error::FixedVariable(v)),
        None => expr_type(env, e),
    }
}

/// One environment change recorded while typing, positioned by nesting depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub depth: usize,
    /// Short rendering of the program point: the assignment, or the head of
    /// a conditional or loop.
    pub point: String,
    pub changes: Vec<(String, Elem)>,
}

/// Computes the least post-environment of `c` from `pc` and `env`.
pub fn spc(pc: Elem, env: &TypeEnv, c: &Command) -> Result<TypeEnv> {
    Spc { trace: None }.run(pc, env, c, 0)
}

/// Like [`spc`] but also records the environment change at every program
/// point. Loop bodies are traced only at the final fixpoint iterate.
pub fn spc_traced(pc: Elem, env: &TypeEnv, c: &Command) -> Result<(TypeEnv, Vec<TraceStep>)> {
    let mut trace = Vec::new();
    let post = Spc { trace: Some(&mut trace) }.run(pc, env, c, 0)?;
    Ok((post, trace))
}

struct Spc<'t> {
    trace: Option<&'t mut Vec<TraceStep>>,
}

impl Spc<'_> {
    fn record(&mut self, depth: usize, point: String, pre: &TypeEnv, post: &TypeEnv) {
        if let Some(trace) = self.trace.as_deref_mut() {
            trace.push(TraceStep {
                depth,
                point,
                changes: pre.changes_to(post),
            });
        }
    }

    fn run(&mut self, pc: Elem, env: &TypeEnv, c: &Command, depth: usize) -> Result<TypeEnv> {
        let lat = env.lattice().clone();
        match c {
            Command::Skip => Ok(env.clone()),
            Command::Assign(x, e) => {
                let VarRef::Floating(name) = x else {
                    return Err(Error::FixedVariable(x.to_string()));
                };
                if !env.contains(name) {
                    return Err(Error::UndeclaredVariable(name.clone()));
                }
                let t = floating_expr_type(env, e)?;
                let post = env.clone().with(name, lat.join(pc, t));
                self.record(depth, c.to_string(), env, &post);
                Ok(post)
            }
            Command::Seq(a, b) => {
                let mid = self.run(pc, env, a, depth)?;
                self.run(pc, &mid, b, depth)
            }
            Command::If(e, a, b) => {
                let t = floating_expr_type(env, e)?;
                let inner = lat.join(pc, t);
                // Trace entries for the branches follow the entry for the
                // conditional itself.
                let slot = self.trace.as_deref().map(Vec::len);
                let left = self.run(inner, env, a, depth + 1)?;
                let right = self.run(inner, env, b, depth + 1)?;
                let post = left.join(&right)?;
                if let (Some(trace), Some(slot)) = (self.trace.as_deref_mut(), slot) {
                    trace.insert(
                        slot,
                        TraceStep {
                            depth,
                            point: format!("if {e}"),
                            changes: env.changes_to(&post),
                        },
                    );
                }
                Ok(post)
            }
            Command::While(e, body) => {
                let (post, body_pc) = while_fixpoint(pc, env, e, |p, g| spc(p, g, body))?;
                if self.trace.is_some() {
                    let slot = self.trace.as_deref().map_or(0, Vec::len);
                    self.run(body_pc, &post, body, depth + 1)?;
                    let trace = self.trace.as_deref_mut().expect("trace present");
                    trace.insert(
                        slot,
                        TraceStep {
                            depth,
                            point: format!("while {e}"),
                            changes: env.changes_to(&post),
                        },
                    );
                }
                Ok(post)
            }
        }
    }
}

/// Least-fixpoint iteration for a loop: `Γ'_0 = Γ`, `Γ'_{i+1} = body(pc ⊔ t_i,
/// Γ'_i) ⊔ Γ`, stopping at the first repeated iterate. Returns the limit and
/// the program-counter level of the final body typing.
pub(crate) fn while_fixpoint(
    pc: Elem,
    env: &TypeEnv,
    guard: &Expr,
    mut body_post: impl FnMut(Elem, &TypeEnv) -> Result<TypeEnv>,
) -> Result<(TypeEnv, Elem)> {
    let lat = env.lattice().clone();
    let mut current = env.clone();
    loop {
        let t = floating_expr_type(&current, guard)?;
        let body_pc = lat.join(pc, t);
        let next = body_post(body_pc, &current)?.join(env)?;
        if next == current {
            return Ok((current, body_pc));
        }
        current = next;
    }
}

/// Decides `pc ⊢ pre {command} post` in the declarative system: it holds
/// exactly when the least post-environment is below `post`.
pub fn check_judgement(j: &Judgement) -> Result<bool> {
    spc(j.pc, &j.pre, &j.command)?.leq(&j.post)
}
