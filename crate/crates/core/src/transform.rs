//! Type-directed translation from floating-variable programs to programs over
//! fixed, type-indexed variables, and the flow-insensitive checker for the
//! result.
//!
//! Each floating variable `x` is represented by a family of copies `x@t`, one
//! per lattice element. At every program point exactly one copy is in play,
//! namely `x@Γ(x)` for the environment `Γ` at that point. Where typing raises
//! a variable's level at a control-flow join, the translation inserts copy
//! assignments moving the value into the copy now in play.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::lang::{Command, Expr, VarRef};
use crate::lattice::{Elem, Lattice};
use crate::typing::{expr_type, while_fixpoint, TypeEnv};

/// One copy assignment `var@target := var@source`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedCopy {
    pub var: String,
    pub target: String,
    pub source: String,
}

/// An independent set of copy assignments, ordered by variable name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FixedAssignBlock {
    copies: Vec<FixedCopy>,
}

impl FixedAssignBlock {
    pub fn copies(&self) -> &[FixedCopy] {
        &self.copies
    }

    pub fn len(&self) -> usize {
        self.copies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.copies.is_empty()
    }

    /// No variable is shared between two distinct assignments, so every
    /// ordering of the block behaves the same.
    pub fn is_independent(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.copies.iter().all(|c| {
            let lhs = VarRef::fixed(&c.var, &c.target);
            let rhs = VarRef::fixed(&c.var, &c.source);
            lhs != rhs && seen.insert(lhs) && seen.insert(rhs)
        })
    }

    /// The block sequentialized in the given order, or `None` when empty.
    pub fn to_command_in(&self, order: &[usize]) -> Option<Command> {
        order
            .iter()
            .map(|&i| {
                let c = &self.copies[i];
                Command::Assign(VarRef::fixed(&c.var, &c.target), Expr::Var(VarRef::fixed(&c.var, &c.source)))
            })
            .reduce(Command::then)
    }

    /// The canonical sequentialization, or `None` when empty.
    pub fn to_command(&self) -> Option<Command> {
        let order: Vec<usize> = (0..self.copies.len()).collect();
        self.to_command_in(&order)
    }
}

impl fmt::Display for FixedAssignBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_command() {
            Some(c) => write!(f, "{c}"),
            None => Ok(()),
        }
    }
}

/// Copy assignments realizing the change from `source` to `target`: for every
/// `x` with `target(x) ≠ source(x)`, `x@target(x) := x@source(x)`.
pub fn fassign(target: &TypeEnv, source: &TypeEnv) -> Result<FixedAssignBlock> {
    // Validates lattice and domain agreement.
    target.leq(source)?;
    let lat = target.lattice();
    let copies = target
        .iter()
        .zip(source.iter())
        .filter(|((_, t), (_, s))| t != s)
        .map(|((x, t), (_, s))| FixedCopy {
            var: x.to_string(),
            target: lat.element_name(t),
            source: lat.element_name(s),
        })
        .collect();
    Ok(FixedAssignBlock { copies })
}

/// `E^Γ`: every floating `x` becomes `x@Γ(x)`.
pub fn fix_expr(env: &TypeEnv, e: &Expr) -> Result<Expr> {
    let lat = env.lattice();
    e.try_map_vars(&mut |v| match v {
        VarRef::Floating(x) => Ok(VarRef::fixed(x, lat.element_name(env.get(x)?))),
        fixed => Ok(fixed.clone()),
    })
}

#[derive(Debug, Clone)]
pub struct TranslationResult {
    /// The translated program, over fixed variables only.
    pub output: Command,
    /// The post-environment, identical to the least typing of the source.
    pub post: TypeEnv,
    pub pc: Elem,
    /// Number of copy assignments inserted by the translation.
    pub inserted: usize,
}

/// `d ; block`, dropping an empty block and a leading `skip`.
fn append_block(d: Command, block: &FixedAssignBlock) -> Command {
    match block.to_command() {
        None => d,
        Some(b) if d == Command::Skip => b,
        Some(b) => d.then(b),
    }
}

fn reject_fixed(e: &Expr) -> Result<()> {
    let mut fixed = None;
    e.for_each_var(&mut |v| {
        if v.is_fixed() && fixed.is_none() {
            fixed = Some(v.to_string());
        }
    });
    fixed.map_or(Ok(()), |v| Err(Error::FixedVariable(v)))
}

fn translate_rec(pc: Elem, env: &TypeEnv, c: &Command) -> Result<(Command, TypeEnv, usize)> {
    let lat = env.lattice().clone();
    match c {
        Command::Skip => Ok((Command::Skip, env.clone(), 0)),
        Command::Assign(x, e) => {
            let VarRef::Floating(name) = x else {
                return Err(Error::FixedVariable(x.to_string()));
            };
            if !env.contains(name) {
                return Err(Error::UndeclaredVariable(name.clone()));
            }
            reject_fixed(e)?;
            let level = lat.join(pc, expr_type(env, e)?);
            let out = Command::Assign(VarRef::fixed(name, lat.element_name(level)), fix_expr(env, e)?);
            Ok((out, env.clone().with(name, level), 0))
        }
        Command::Seq(a, b) => {
            let (d1, mid, n1) = translate_rec(pc, env, a)?;
            let (d2, post, n2) = translate_rec(pc, &mid, b)?;
            Ok((d1.then(d2), post, n1 + n2))
        }
        Command::If(e, a, b) => {
            reject_fixed(e)?;
            let inner = lat.join(pc, expr_type(env, e)?);
            let (d1, g1, n1) = translate_rec(inner, env, a)?;
            let (d2, g2, n2) = translate_rec(inner, env, b)?;
            let post = g1.join(&g2)?;
            let (b1, b2) = (fassign(&post, &g1)?, fassign(&post, &g2)?);
            let inserted = n1 + n2 + b1.len() + b2.len();
            let out = Command::if_(fix_expr(env, e)?, append_block(d1, &b1), append_block(d2, &b2));
            Ok((out, post, inserted))
        }
        Command::While(e, body) => {
            reject_fixed(e)?;
            // The body translation from the final iterate is the one emitted;
            // translations of earlier iterates are discarded.
            let mut last = None;
            let (limit, _) = while_fixpoint(pc, env, e, |p, g| {
                let (d, g2, n) = translate_rec(p, g, body)?;
                last = Some((d, g2.clone(), n));
                Ok(g2)
            })?;
            let (d, body_post, n) = last.expect("fixpoint iteration runs at least once");
            let entry = fassign(&limit, env)?;
            let back = fassign(&limit, &body_post)?;
            let inserted = n + entry.len() + back.len();
            let looped = Command::while_(fix_expr(&limit, e)?, append_block(d, &back));
            let out = match entry.to_command() {
                Some(pre) => pre.then(looped),
                None => looped,
            };
            Ok((out, limit, inserted))
        }
    }
}

/// Translates an all-floating program into an equivalent fixed-variable one.
pub fn translate(pc: Elem, env: &TypeEnv, c: &Command) -> Result<TranslationResult> {
    let (output, post, inserted) = translate_rec(pc, env, c)?;
    Ok(TranslationResult {
        output,
        post,
        pc,
        inserted,
    })
}

/// Why a fixed-variable program fails the flow-insensitive check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedViolation {
    pub assignment: String,
    pub rhs_level: Elem,
    pub pc: Elem,
    pub target_level: Elem,
}

fn fixed_expr_type(lat: &Lattice, e: &Expr) -> Result<Elem> {
    let mut acc = lat.bottom();
    let mut err = None;
    e.for_each_var(&mut |v| {
        if err.is_some() {
            return;
        }
        match v {
            VarRef::Floating(x) => err = Some(Error::FloatingVariable(x.clone())),
            VarRef::Fixed { name, level } => match lat.parse_element(level) {
                Ok(t) => acc = lat.join(acc, t),
                Err(_) => {
                    err = Some(Error::FixedIndexNotInLattice {
                        var: name.clone(),
                        level: level.clone(),
                    })
                }
            },
        }
    });
    err.map_or(Ok(acc), Err)
}

/// The first assignment rejected by the flow-insensitive fixed-type system,
/// or `None` if the program is typeable at `pc`.
pub fn first_violation(lat: &Lattice, pc: Elem, d: &Command) -> Result<Option<FixedViolation>> {
    match d {
        Command::Skip => Ok(None),
        Command::Assign(x, e) => {
            let VarRef::Fixed { name, level } = x else {
                return Err(Error::FloatingVariable(x.to_string()));
            };
            let target_level = lat.parse_element(level).map_err(|_| Error::FixedIndexNotInLattice {
                var: name.clone(),
                level: level.clone(),
            })?;
            let rhs_level = fixed_expr_type(lat, e)?;
            if lat.leq(rhs_level, target_level) && lat.leq(pc, target_level) {
                Ok(None)
            } else {
                Ok(Some(FixedViolation {
                    assignment: d.to_string(),
                    rhs_level,
                    pc,
                    target_level,
                }))
            }
        }
        Command::Seq(a, b) => match first_violation(lat, pc, a)? {
            Some(v) => Ok(Some(v)),
            None => first_violation(lat, pc, b),
        },
        Command::If(e, a, b) => {
            let inner = lat.join(pc, fixed_expr_type(lat, e)?);
            match first_violation(lat, inner, a)? {
                Some(v) => Ok(Some(v)),
                None => first_violation(lat, inner, b),
            }
        }
        Command::While(e, body) => {
            let inner = lat.join(pc, fixed_expr_type(lat, e)?);
            first_violation(lat, inner, body)
        }
    }
}

/// Flow-insensitive typeability of a fixed-variable program at `pc`.
pub fn check_fixed(lat: &Lattice, pc: Elem, d: &Command) -> Result<bool> {
    Ok(first_violation(lat, pc, d)?.is_none())
}

/// Nested one-armed conditionals over guards `y1..yn` around
/// `if h then x1 := 0 ; ... ; xn := 0 end`. Typed with `h` high and
/// everything else low, its translation inserts `n` copies at each of the
/// `n + 1` else branches.
pub fn blowup_family(n: usize) -> Command {
    assert!(n >= 1, "blowup_family needs n >= 1");
    let body = (1..=n)
        .map(|i| Command::assign(&format!("x{i}"), Expr::Lit(0)))
        .reduce(Command::then)
        .expect("n >= 1");
    let mut c = Command::if_(Expr::var("h"), body, Command::Skip);
    for i in (1..=n).rev() {
        c = Command::if_(Expr::var(&format!("y{i}")), c, Command::Skip);
    }
    c
}
