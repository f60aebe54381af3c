//! Shared test machinery: an independent brute-force enumerator of the
//! declarative typing rules, exhaustive small-program enumeration, and the
//! generated corpus used by the property suites.
#![allow(dead_code)]

use std::collections::HashSet;
use std::sync::Arc;

use flowlat::harness::{gen_env, gen_program};
use flowlat::lang::{BinOp, Command, Expr, VarRef};
use flowlat::{Elem, Lattice, TypeEnv};

/// A typing triple `(p, Γ, Γ')` with environments as vectors in variable order.
pub type Triple = (Elem, Vec<Elem>, Vec<Elem>);

/// Every triple derivable for a command, computed bottom-up from the
/// declarative rules without any fixpoint iteration: each rule's conclusions
/// are closed under one use of subsumption, which is all that is ever needed
/// because subsumption composes.
pub struct DeclarativeOracle {
    pub lattice: Arc<Lattice>,
    pub vars: Vec<String>,
    pub elems: Vec<Elem>,
    pub envs: Vec<Vec<Elem>>,
}

impl DeclarativeOracle {
    pub fn new(lattice: Arc<Lattice>, vars: &[&str]) -> Self {
        let elems = lattice.elements().expect("enumerable lattice");
        let mut envs: Vec<Vec<Elem>> = vec![Vec::new()];
        for _ in vars {
            envs = envs
                .into_iter()
                .flat_map(|prefix| {
                    elems.iter().map(move |&e| {
                        let mut next = prefix.clone();
                        next.push(e);
                        next
                    })
                })
                .collect();
        }
        DeclarativeOracle {
            lattice,
            vars: vars.iter().map(|s| s.to_string()).collect(),
            elems,
            envs,
        }
    }

    fn index(&self, x: &str) -> usize {
        self.vars.iter().position(|v| v == x).expect("known variable")
    }

    fn expr_type(&self, env: &[Elem], e: &Expr) -> Elem {
        let mut t = self.lattice.bottom();
        e.for_each_var(&mut |v| match v {
            VarRef::Floating(x) => t = self.lattice.join(t, env[self.index(x)]),
            VarRef::Fixed { .. } => panic!("floating programs only"),
        });
        t
    }

    fn env_leq(&self, a: &[Elem], b: &[Elem]) -> bool {
        a.iter().zip(b).all(|(&x, &y)| self.lattice.leq(x, y))
    }

    fn close(&self, base: HashSet<Triple>) -> HashSet<Triple> {
        let mut out = HashSet::new();
        for &p2 in &self.elems {
            for g2 in &self.envs {
                for g2p in &self.envs {
                    let derivable = base.iter().any(|(p1, g1, g1p)| {
                        self.lattice.leq(p2, *p1) && self.env_leq(g2, g1) && self.env_leq(g1p, g2p)
                    });
                    if derivable {
                        out.insert((p2, g2.clone(), g2p.clone()));
                    }
                }
            }
        }
        out
    }

    pub fn derivable(&self, c: &Command) -> HashSet<Triple> {
        let lat = &self.lattice;
        let mut base = HashSet::new();
        match c {
            Command::Skip => {
                for &p in &self.elems {
                    for g in &self.envs {
                        base.insert((p, g.clone(), g.clone()));
                    }
                }
            }
            Command::Assign(x, e) => {
                let i = self.index(x.base());
                for &p in &self.elems {
                    for g in &self.envs {
                        let mut post = g.clone();
                        post[i] = lat.join(p, self.expr_type(g, e));
                        base.insert((p, g.clone(), post));
                    }
                }
            }
            Command::Seq(a, b) => {
                let (ra, rb) = (self.derivable(a), self.derivable(b));
                for (p, g, mid) in &ra {
                    for g2 in &self.envs {
                        if rb.contains(&(*p, mid.clone(), g2.clone())) {
                            base.insert((*p, g.clone(), g2.clone()));
                        }
                    }
                }
            }
            Command::If(e, a, b) => {
                let (ra, rb) = (self.derivable(a), self.derivable(b));
                for &p in &self.elems {
                    for g in &self.envs {
                        let inner = lat.join(p, self.expr_type(g, e));
                        for gp in &self.envs {
                            let key = (inner, g.clone(), gp.clone());
                            if ra.contains(&key) && rb.contains(&key) {
                                base.insert((p, g.clone(), gp.clone()));
                            }
                        }
                    }
                }
            }
            Command::While(e, body) => {
                let rb = self.derivable(body);
                for &p in &self.elems {
                    for g in &self.envs {
                        let inner = lat.join(p, self.expr_type(g, e));
                        if rb.contains(&(inner, g.clone(), g.clone())) {
                            base.insert((p, g.clone(), g.clone()));
                        }
                    }
                }
            }
        }
        self.close(base)
    }

    pub fn to_env(&self, vals: &[Elem]) -> TypeEnv {
        TypeEnv::new(self.lattice.clone(), self.vars.iter().cloned().zip(vals.iter().copied()))
    }
}

/// Every command of nesting depth at most `depth` over `vars`, with
/// expressions drawn from a set covering each possible free-variable set.
pub fn all_programs(depth: usize, vars: &[&str]) -> Vec<Command> {
    let mut exprs = vec![Expr::Lit(0)];
    exprs.extend(vars.iter().map(|v| Expr::var(v)));
    if vars.len() >= 2 {
        exprs.push(Expr::bin(BinOp::Add, Expr::var(vars[0]), Expr::var(vars[1])));
    }
    let mut leaves = vec![Command::Skip];
    for x in vars {
        for e in &exprs {
            leaves.push(Command::assign(x, e.clone()));
        }
    }
    let mut programs = leaves.clone();
    let mut previous = leaves;
    for _ in 1..depth {
        let mut next = programs.clone();
        for a in &previous {
            for b in &previous {
                next.push(Command::seq(a.clone(), b.clone()));
                for e in &exprs {
                    next.push(Command::if_(e.clone(), a.clone(), b.clone()));
                }
            }
            for e in &exprs {
                next.push(Command::while_(e.clone(), a.clone()));
            }
        }
        previous = next.clone();
        programs = next;
    }
    programs
}

pub fn names(vars: &[&str]) -> Vec<String> {
    vars.iter().map(|s| s.to_string()).collect()
}

/// Corpus entry: a generated program with its variable universe.
pub struct Sample {
    pub seed: u64,
    pub vars: Vec<String>,
    pub program: Command,
}

/// `count` generated programs of depth at most 4 over two to four variables.
pub fn corpus(count: usize) -> Vec<Sample> {
    const POOL: [&str; 4] = ["a", "b", "c", "d"];
    (0..count as u64)
        .map(|seed| {
            let vars = names(&POOL[..2 + (seed % 3) as usize]);
            let program = gen_program(seed, 4, &vars);
            Sample { seed, vars, program }
        })
        .collect()
}

pub fn two_point() -> Arc<Lattice> {
    Arc::new(Lattice::two_point())
}

pub fn diamond() -> Arc<Lattice> {
    Arc::new(Lattice::diamond())
}

pub fn chain3() -> Arc<Lattice> {
    Arc::new(Lattice::build("chain3", &["A", "B", "C"], &[("A", "B"), ("B", "C")]).unwrap())
}

pub fn unit() -> Arc<Lattice> {
    Arc::new(Lattice::build("unit", &["U"], &[] as &[(&str, &str)]).unwrap())
}

pub fn powerset(vars: &[String]) -> Arc<Lattice> {
    Arc::new(Lattice::powerset(vars.iter().cloned()).unwrap())
}

pub fn random_env(seed: u64, lattice: &Arc<Lattice>, vars: &[String]) -> TypeEnv {
    gen_env(seed, lattice, vars)
}

/// All monotone maps between two enumerable lattices, as element tables.
pub fn monotone_maps(from: &Lattice, to: &Lattice) -> Vec<Vec<(Elem, Elem)>> {
    let src = from.elements().unwrap();
    let dst = to.elements().unwrap();
    let mut maps: Vec<Vec<(Elem, Elem)>> = vec![Vec::new()];
    for &a in &src {
        maps = maps
            .into_iter()
            .flat_map(|m| {
                dst.iter().map(move |&b| {
                    let mut next = m.clone();
                    next.push((a, b));
                    next
                })
            })
            .collect();
    }
    maps.into_iter()
        .filter(|m| {
            m.iter()
                .all(|&(a, fa)| m.iter().all(|&(b, fb)| !from.leq(a, b) || to.leq(fa, fb)))
        })
        .collect()
}

pub fn apply(map: &[(Elem, Elem)], e: Elem) -> Elem {
    map.iter().find(|(a, _)| *a == e).expect("total map").1
}
