use std::collections::BTreeSet;
use std::fmt;

/// A variable reference: either a floating program variable `x` or a
/// type-indexed fixed copy `x@T`.
///
/// The level of a fixed variable is kept as the canonical rendering of a
/// lattice element so that programs can be parsed before a lattice is chosen.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarRef {
    Floating(String),
    Fixed { name: String, level: String },
}

impl VarRef {
    pub fn floating(name: impl Into<String>) -> Self {
        VarRef::Floating(name.into())
    }

    pub fn fixed(name: impl Into<String>, level: impl Into<String>) -> Self {
        VarRef::Fixed {
            name: name.into(),
            level: level.into(),
        }
    }

    /// The underlying program variable name.
    pub fn base(&self) -> &str {
        match self {
            VarRef::Floating(name) | VarRef::Fixed { name, .. } => name,
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, VarRef::Fixed { .. })
    }
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarRef::Floating(name) => f.write_str(name),
            VarRef::Fixed { name, level } => write!(f, "{name}@{level}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
}

impl BinOp {
    pub const ALL: [BinOp; 7] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::Lt,
        BinOp::Le,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le => 1,
            BinOp::Add | BinOp::Sub => 2,
            BinOp::Mul => 3,
        }
    }

    /// Wrapping integer semantics; comparisons yield 1 or 0.
    pub fn apply(self, a: i64, b: i64) -> i64 {
        match self {
            BinOp::Add => a.wrapping_add(b),
            BinOp::Sub => a.wrapping_sub(b),
            BinOp::Mul => a.wrapping_mul(b),
            BinOp::Eq => (a == b) as i64,
            BinOp::Ne => (a != b) as i64,
            BinOp::Lt => (a < b) as i64,
            BinOp::Le => (a <= b) as i64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Lit(i64),
    Var(VarRef),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Self {
        Expr::Var(VarRef::floating(name))
    }

    pub fn fixed(name: &str, level: &str) -> Self {
        Expr::Var(VarRef::fixed(name, level))
    }

    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Bin(op, Box::new(lhs), Box::new(rhs))
    }

    /// Visits every variable reference in left-to-right order.
    pub fn for_each_var<'a>(&'a self, f: &mut impl FnMut(&'a VarRef)) {
        match self {
            Expr::Lit(_) => {}
            Expr::Var(v) => f(v),
            Expr::Bin(_, l, r) => {
                l.for_each_var(f);
                r.for_each_var(f);
            }
        }
    }

    /// Rewrites every variable reference, keeping the tree shape.
    pub fn try_map_vars<E>(&self, f: &mut impl FnMut(&VarRef) -> Result<VarRef, E>) -> Result<Expr, E> {
        Ok(match self {
            Expr::Lit(n) => Expr::Lit(*n),
            Expr::Var(v) => Expr::Var(f(v)?),
            Expr::Bin(op, l, r) => Expr::bin(*op, l.try_map_vars(f)?, r.try_map_vars(f)?),
        })
    }
}

/// Free variables of an expression, split into floating and fixed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FreeVars {
    pub floating: BTreeSet<String>,
    pub fixed: BTreeSet<(String, String)>,
}

pub fn free_vars(e: &Expr) -> FreeVars {
    let mut out = FreeVars::default();
    e.for_each_var(&mut |v| match v {
        VarRef::Floating(name) => {
            out.floating.insert(name.clone());
        }
        VarRef::Fixed { name, level } => {
            out.fixed.insert((name.clone(), level.clone()));
        }
    });
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Command {
    Skip,
    Assign(VarRef, Expr),
    Seq(Box<Command>, Box<Command>),
    If(Expr, Box<Command>, Box<Command>),
    While(Expr, Box<Command>),
}

impl Command {
    pub fn assign(target: &str, rhs: Expr) -> Self {
        Command::Assign(VarRef::floating(target), rhs)
    }

    pub fn seq(first: Command, second: Command) -> Self {
        Command::Seq(Box::new(first), Box::new(second))
    }

    pub fn if_(cond: Expr, then: Command, els: Command) -> Self {
        Command::If(cond, Box::new(then), Box::new(els))
    }

    pub fn while_(cond: Expr, body: Command) -> Self {
        Command::While(cond, Box::new(body))
    }

    /// Sequential composition that keeps `;` right-nested, the shape the
    /// parser produces.
    pub fn then(self, next: Command) -> Command {
        match self {
            Command::Seq(a, b) => Command::Seq(a, Box::new(b.then(next))),
            other => Command::seq(other, next),
        }
    }

    /// Right-associates every sequence in the tree.
    pub fn normalized(&self) -> Command {
        match self {
            Command::Skip | Command::Assign(..) => self.clone(),
            Command::Seq(a, b) => a.normalized().then(b.normalized()),
            Command::If(e, a, b) => Command::if_(e.clone(), a.normalized(), b.normalized()),
            Command::While(e, body) => Command::while_(e.clone(), body.normalized()),
        }
    }

    /// Visits every variable reference (targets and expressions).
    pub fn for_each_var<'a>(&'a self, f: &mut impl FnMut(&'a VarRef)) {
        match self {
            Command::Skip => {}
            Command::Assign(x, e) => {
                f(x);
                e.for_each_var(f);
            }
            Command::Seq(a, b) => {
                a.for_each_var(f);
                b.for_each_var(f);
            }
            Command::If(e, a, b) => {
                e.for_each_var(f);
                a.for_each_var(f);
                b.for_each_var(f);
            }
            Command::While(e, body) => {
                e.for_each_var(f);
                body.for_each_var(f);
            }
        }
    }

    /// Every floating variable name mentioned anywhere in the command.
    pub fn floating_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.for_each_var(&mut |v| {
            if let VarRef::Floating(name) = v {
                out.insert(name.clone());
            }
        });
        out
    }

    /// Every variable reference mentioned anywhere in the command.
    pub fn all_vars(&self) -> BTreeSet<VarRef> {
        let mut out = BTreeSet::new();
        self.for_each_var(&mut |v| {
            out.insert(v.clone());
        });
        out
    }

    /// Number of nodes, counting each command form once.
    pub fn size(&self) -> usize {
        match self {
            Command::Skip | Command::Assign(..) => 1,
            Command::Seq(a, b) | Command::If(_, a, b) => 1 + a.size() + b.size(),
            Command::While(_, body) => 1 + body.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Command::Skip | Command::Assign(..) => 1,
            Command::Seq(a, b) | Command::If(_, a, b) => 1 + a.depth().max(b.depth()),
            Command::While(_, body) => 1 + body.depth(),
        }
    }
}

/// Targets of every assignment syntactically occurring in `c`.
pub fn assigned_vars(c: &Command) -> BTreeSet<VarRef> {
    fn go(c: &Command, out: &mut BTreeSet<VarRef>) {
        match c {
            Command::Skip => {}
            Command::Assign(x, _) => {
                out.insert(x.clone());
            }
            Command::Seq(a, b) | Command::If(_, a, b) => {
                go(a, out);
                go(b, out);
            }
            Command::While(_, body) => go(body, out),
        }
    }
    let mut out = BTreeSet::new();
    go(c, &mut out);
    out
}

fn fmt_expr(e: &Expr, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
    match e {
        Expr::Lit(n) if *n < 0 => write!(f, "(0 - {})", n.unsigned_abs()),
        Expr::Lit(n) => write!(f, "{n}"),
        Expr::Var(v) => write!(f, "{v}"),
        Expr::Bin(op, l, r) => {
            let prec = op.precedence();
            let paren = prec < min_prec;
            if paren {
                f.write_str("(")?;
            }
            fmt_expr(l, f, prec)?;
            write!(f, " {} ", op.symbol())?;
            // Operators are left-associative, so an equal-precedence right
            // operand needs parentheses.
            fmt_expr(r, f, prec + 1)?;
            if paren {
                f.write_str(")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_expr(self, f, 0)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Skip => f.write_str("skip"),
            Command::Assign(x, e) => write!(f, "{x} := {e}"),
            Command::Seq(a, b) => {
                // A left-nested sequence cannot be expressed in the concrete
                // syntax; it prints as its right-associated equivalent.
                write!(f, "{a} ; {b}")
            }
            Command::If(e, a, b) if **b == Command::Skip => write!(f, "if {e} then {a} end"),
            Command::If(e, a, b) => write!(f, "if {e} then {a} else {b} end"),
            Command::While(e, body) => write!(f, "while {e} do {body} end"),
        }
    }
}
