//! Semantic testing of typings: noninterference, the pc-safety condition,
//! and equivalence of a program with its fixed-variable translation. Also
//! the random program and environment generators used by the test suites.
//!
//! Runs that exhaust their fuel are treated as divergent and never falsify a
//! check; they are counted in the statistics.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lang::{exec, BinOp, Command, Expr, Outcome, Store, VarRef};
use crate::lattice::{Elem, Lattice};
use crate::typing::TypeEnv;

pub const DEFAULT_FUEL: u64 = 64;
pub const DEFAULT_DOMAIN: [i64; 2] = [0, 1];
/// Upper bound on the number of stores enumerated in exhaustive mode.
pub const MAX_STORES: u128 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exhaustive,
    Random { seed: u64, trials: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarnessConfig {
    pub domain: Vec<i64>,
    pub mode: Mode,
    pub fuel: u64,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            domain: DEFAULT_DOMAIN.to_vec(),
            mode: Mode::Exhaustive,
            fuel: DEFAULT_FUEL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Counterexample,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Counterexample => "counterexample",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// A falsifying run. For noninterference `first` and `second` are the two
/// related inputs; for safety they are the input and the final store; for
/// equivalence they are the floating input and its compatible fixed input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub level: Option<Elem>,
    pub first: Store,
    pub second: Store,
    pub variable: VarRef,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stats {
    /// Distinct observation levels examined.
    pub levels: usize,
    /// Program executions performed.
    pub runs: u64,
    /// Related inputs compared with both runs terminating.
    pub pairs_tested: u64,
    /// Executions that ran out of fuel.
    pub skipped: u64,
    /// Equivalence only: inputs where exactly one side terminated.
    pub termination_mismatches: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NIVerdict {
    pub outcome: Verdict,
    pub witness: Option<Witness>,
    pub stats: Stats,
}

impl NIVerdict {
    pub fn passed(&self) -> bool {
        self.outcome == Verdict::Pass
    }

    fn counterexample(witness: Witness, stats: Stats) -> Self {
        NIVerdict {
            outcome: Verdict::Counterexample,
            witness: Some(witness),
            stats,
        }
    }

    fn pass(stats: Stats) -> Self {
        NIVerdict {
            outcome: Verdict::Pass,
            witness: None,
            stats,
        }
    }
}

fn check_domain(config: &HarnessConfig) -> Result<()> {
    if config.domain.is_empty() {
        Err(Error::EmptyDomain)
    } else {
        Ok(())
    }
}

fn check_floating_program(c: &Command, env: &TypeEnv) -> Result<()> {
    for v in c.all_vars() {
        match v {
            VarRef::Fixed { .. } => return Err(Error::FixedVariable(v.to_string())),
            VarRef::Floating(x) if !env.contains(&x) => return Err(Error::UndeclaredVariable(x)),
            _ => {}
        }
    }
    Ok(())
}

fn store_count(domain: usize, vars: usize) -> Result<usize> {
    let total = (domain as u128).checked_pow(vars as u32).unwrap_or(u128::MAX);
    if total > MAX_STORES {
        return Err(Error::SearchSpaceTooLarge(total));
    }
    Ok(total as usize)
}

/// The `index`-th store in lexicographic order, the first variable varying
/// slowest.
fn decode(mut index: usize, domain: &[i64], n: usize) -> Vec<i64> {
    let mut vals = vec![domain[0]; n];
    for slot in vals.iter_mut().rev() {
        *slot = domain[index % domain.len()];
        index /= domain.len();
    }
    vals
}

fn to_store(vars: &[String], vals: &[i64]) -> Store {
    vars.iter().zip(vals).map(|(x, &v)| (VarRef::floating(x.as_str()), v)).collect()
}

/// Executes a floating program on stores over a fixed variable order,
/// memoizing results.
struct Runner<'a> {
    c: &'a Command,
    vars: &'a [String],
    fuel: u64,
    cache: HashMap<Vec<i64>, Option<Vec<i64>>>,
    stats: Stats,
}

impl<'a> Runner<'a> {
    fn new(c: &'a Command, vars: &'a [String], fuel: u64) -> Self {
        Runner {
            c,
            vars,
            fuel,
            cache: HashMap::new(),
            stats: Stats::default(),
        }
    }

    fn run(&mut self, vals: &[i64]) -> Result<Option<Vec<i64>>> {
        if let Some(hit) = self.cache.get(vals) {
            return Ok(hit.clone());
        }
        self.stats.runs += 1;
        let out = match exec(self.c, &to_store(self.vars, vals), self.fuel)? {
            Outcome::Done(s) => Some(
                self.vars
                    .iter()
                    .map(|x| s.get(&VarRef::floating(x.as_str())))
                    .collect::<Result<Vec<_>>>()?,
            ),
            Outcome::OutOfFuel => {
                self.stats.skipped += 1;
                None
            }
        };
        self.cache.insert(vals.to_vec(), out.clone());
        Ok(out)
    }
}

struct Level {
    t: Elem,
    low: Vec<bool>,
    observed: Vec<bool>,
}

/// Candidate observation levels, one per distinct pair of induced low input
/// and observable output sets. When the lattice is too large to enumerate,
/// the join-closure of the environments' images suffices: replacing any `t`
/// by the join of the images below it leaves both sets unchanged.
fn levels(pre: &TypeEnv, post: &TypeEnv) -> Vec<Level> {
    let lat = pre.lattice();
    let candidates = lat.elements().unwrap_or_else(|| {
        let mut closure: BTreeSet<Elem> = pre.iter().chain(post.iter()).map(|(_, e)| e).collect();
        closure.insert(lat.bottom());
        loop {
            let current: Vec<Elem> = closure.iter().copied().collect();
            let before = closure.len();
            for (i, &a) in current.iter().enumerate() {
                for &b in &current[i + 1..] {
                    closure.insert(lat.join(a, b));
                }
            }
            if closure.len() == before {
                break closure.into_iter().collect();
            }
        }
    });
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for t in candidates {
        let low: Vec<bool> = pre.iter().map(|(_, e)| lat.leq(e, t)).collect();
        let observed: Vec<bool> = post.iter().map(|(_, e)| lat.leq(e, t)).collect();
        if observed.iter().any(|&b| b) && seen.insert((low.clone(), observed.clone())) {
            out.push(Level { t, low, observed });
        }
    }
    out
}

fn project(vals: &[i64], mask: &[bool]) -> Vec<i64> {
    vals.iter().zip(mask).filter(|(_, &m)| m).map(|(&v, _)| v).collect()
}

fn first_difference(a: &[i64], b: &[i64], mask: &[bool]) -> Option<usize> {
    (0..a.len()).find(|&i| mask[i] && a[i] != b[i])
}

/// Tests the noninterference condition of `pre {c} post`: for every level
/// `t`, inputs that agree on the variables `pre` types at or below `t` must,
/// when both runs terminate, agree on the variables `post` types at or below
/// `t`.
pub fn ni_check(c: &Command, pre: &TypeEnv, post: &TypeEnv, config: &HarnessConfig) -> Result<NIVerdict> {
    check_domain(config)?;
    pre.leq(post)?;
    check_floating_program(c, pre)?;
    let vars: Vec<String> = pre.vars().map(str::to_string).collect();
    let levels = levels(pre, post);
    let mut runner = Runner::new(c, &vars, config.fuel);
    runner.stats.levels = levels.len();
    let domain = &config.domain;

    match config.mode {
        Mode::Exhaustive => {
            let count = store_count(domain.len(), vars.len())?;
            let inputs: Vec<Vec<i64>> = (0..count).map(|i| decode(i, domain, vars.len())).collect();
            let mut outputs = Vec::with_capacity(count);
            for input in &inputs {
                outputs.push(runner.run(input)?);
            }
            for level in &levels {
                let mut groups: Vec<Vec<usize>> = Vec::new();
                let mut by_key: HashMap<Vec<i64>, usize> = HashMap::new();
                for (i, input) in inputs.iter().enumerate() {
                    if outputs[i].is_none() {
                        continue;
                    }
                    let slot = *by_key.entry(project(input, &level.low)).or_insert_with(|| {
                        groups.push(Vec::new());
                        groups.len() - 1
                    });
                    groups[slot].push(i);
                }
                for group in &groups {
                    let k = group.len() as u64;
                    runner.stats.pairs_tested += k * k.saturating_sub(1) / 2;
                    let a = group[0];
                    let out_a = outputs[a].as_ref().expect("terminating");
                    for &b in &group[1..] {
                        let out_b = outputs[b].as_ref().expect("terminating");
                        if let Some(y) = first_difference(out_a, out_b, &level.observed) {
                            let witness = Witness {
                                level: Some(level.t),
                                first: to_store(&vars, &inputs[a]),
                                second: to_store(&vars, &inputs[b]),
                                variable: VarRef::floating(vars[y].as_str()),
                            };
                            return Ok(NIVerdict::counterexample(witness, runner.stats));
                        }
                    }
                }
            }
        }
        Mode::Random { seed, trials } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..trials {
                for level in &levels {
                    let first: Vec<i64> = (0..vars.len()).map(|_| *domain.choose(&mut rng).expect("nonempty")).collect();
                    let second: Vec<i64> = first
                        .iter()
                        .zip(&level.low)
                        .map(|(&v, &low)| if low { v } else { *domain.choose(&mut rng).expect("nonempty") })
                        .collect();
                    let (Some(a), Some(b)) = (runner.run(&first)?, runner.run(&second)?) else {
                        continue;
                    };
                    runner.stats.pairs_tested += 1;
                    if let Some(y) = first_difference(&a, &b, &level.observed) {
                        let witness = Witness {
                            level: Some(level.t),
                            first: to_store(&vars, &first),
                            second: to_store(&vars, &second),
                            variable: VarRef::floating(vars[y].as_str()),
                        };
                        return Ok(NIVerdict::counterexample(witness, runner.stats));
                    }
                }
            }
        }
    }
    Ok(NIVerdict::pass(runner.stats))
}

fn inputs_for(config: &HarnessConfig, n: usize) -> Result<Vec<Vec<i64>>> {
    let domain = &config.domain;
    match config.mode {
        Mode::Exhaustive => {
            let count = store_count(domain.len(), n)?;
            Ok((0..count).map(|i| decode(i, domain, n)).collect())
        }
        Mode::Random { seed, trials } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..trials)
                .map(|_| (0..n).map(|_| *domain.choose(&mut rng).expect("nonempty")).collect())
                .collect())
        }
    }
}

/// Tests the safety condition at `pc`: every variable whose `post` type is
/// not above `pc` is left unchanged by every terminating run.
pub fn safety_check(c: &Command, pc: Elem, post: &TypeEnv, config: &HarnessConfig) -> Result<NIVerdict> {
    check_domain(config)?;
    check_floating_program(c, post)?;
    let lat = post.lattice();
    let vars: Vec<String> = post.vars().map(str::to_string).collect();
    let guarded: Vec<bool> = post.iter().map(|(_, e)| !lat.leq(pc, e)).collect();
    let mut runner = Runner::new(c, &vars, config.fuel);
    if !guarded.iter().any(|&g| g) {
        return Ok(NIVerdict::pass(runner.stats));
    }
    runner.stats.levels = 1;
    for input in inputs_for(config, vars.len())? {
        let Some(output) = runner.run(&input)? else {
            continue;
        };
        runner.stats.pairs_tested += 1;
        if let Some(x) = first_difference(&input, &output, &guarded) {
            let witness = Witness {
                level: Some(pc),
                first: to_store(&vars, &input),
                second: to_store(&vars, &output),
                variable: VarRef::floating(vars[x].as_str()),
            };
            return Ok(NIVerdict::counterexample(witness, runner.stats));
        }
    }
    Ok(NIVerdict::pass(runner.stats))
}

/// The fixed-variable store compatible with `sigma` under `pre`: each
/// `x@pre(x)` holds `sigma(x)`; every other fixed variable holds 0.
pub fn compatible_store(sigma: &Store, d: &Command, pre: &TypeEnv, post: &TypeEnv) -> Result<Store> {
    let lat = pre.lattice();
    let mut rho = Store::new();
    for v in d.all_vars() {
        match v {
            VarRef::Floating(x) => return Err(Error::FloatingVariable(x)),
            fixed => rho.declare(fixed, 0),
        }
    }
    for (x, e) in post.iter() {
        rho.declare(VarRef::fixed(x, lat.element_name(e)), 0);
    }
    for (x, e) in pre.iter() {
        rho.declare(VarRef::fixed(x, lat.element_name(e)), sigma.get(&VarRef::floating(x))?);
    }
    Ok(rho)
}

/// Tests that `d` simulates `c`: started from compatible stores under `pre`,
/// terminating runs end in stores compatible under `post`.
pub fn equiv_check(c: &Command, d: &Command, pre: &TypeEnv, post: &TypeEnv, config: &HarnessConfig) -> Result<NIVerdict> {
    check_domain(config)?;
    pre.leq(post)?;
    check_floating_program(c, pre)?;
    let lat = pre.lattice();
    let vars: Vec<String> = pre.vars().map(str::to_string).collect();
    let mut stats = Stats {
        levels: 1,
        ..Stats::default()
    };
    for input in inputs_for(config, vars.len())? {
        let sigma = to_store(&vars, &input);
        let rho = compatible_store(&sigma, d, pre, post)?;
        stats.runs += 2;
        let (left, right) = (exec(c, &sigma, config.fuel)?, exec(d, &rho, config.fuel)?);
        match (left, right) {
            (Outcome::Done(s), Outcome::Done(r)) => {
                stats.pairs_tested += 1;
                for (x, e) in post.iter() {
                    let fx = VarRef::floating(x);
                    if s.get(&fx)? != r.get(&VarRef::fixed(x, lat.element_name(e)))? {
                        let witness = Witness {
                            level: None,
                            first: sigma,
                            second: rho,
                            variable: fx,
                        };
                        return Ok(NIVerdict::counterexample(witness, stats));
                    }
                }
            }
            (Outcome::OutOfFuel, Outcome::OutOfFuel) => stats.skipped += 2,
            _ => {
                stats.skipped += 1;
                stats.termination_mismatches += 1;
            }
        }
    }
    let outcome = if stats.termination_mismatches > 0 {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    Ok(NIVerdict {
        outcome,
        witness: None,
        stats,
    })
}

fn done(c: &Command, s: &Store, fuel: u64) -> Result<Option<Store>> {
    Ok(exec(c, s, fuel)?.into_store())
}

/// Re-executes a noninterference witness and confirms it falsifies the
/// typing.
pub fn replay_ni(c: &Command, pre: &TypeEnv, post: &TypeEnv, w: &Witness, fuel: u64) -> Result<bool> {
    let lat = pre.lattice();
    let Some(t) = w.level else { return Ok(false) };
    for (x, e) in pre.iter() {
        let v = VarRef::floating(x);
        if lat.leq(e, t) && w.first.get(&v)? != w.second.get(&v)? {
            return Ok(false);
        }
    }
    if !lat.leq(post.get(w.variable.base())?, t) {
        return Ok(false);
    }
    match (done(c, &w.first, fuel)?, done(c, &w.second, fuel)?) {
        (Some(a), Some(b)) => Ok(a.get(&w.variable)? != b.get(&w.variable)?),
        _ => Ok(false),
    }
}

/// Re-executes a safety witness and confirms it falsifies the typing.
pub fn replay_safety(c: &Command, pc: Elem, post: &TypeEnv, w: &Witness, fuel: u64) -> Result<bool> {
    if post.lattice().leq(pc, post.get(w.variable.base())?) {
        return Ok(false);
    }
    match done(c, &w.first, fuel)? {
        Some(out) => Ok(out == w.second && out.get(&w.variable)? != w.first.get(&w.variable)?),
        None => Ok(false),
    }
}

/// Re-executes an equivalence witness and confirms the final stores are
/// incompatible.
pub fn replay_equiv(c: &Command, d: &Command, post: &TypeEnv, w: &Witness, fuel: u64) -> Result<bool> {
    let x = w.variable.base();
    let fixed = VarRef::fixed(x, post.element_name(x)?);
    match (done(c, &w.first, fuel)?, done(d, &w.second, fuel)?) {
        (Some(s), Some(r)) => Ok(s.get(&w.variable)? != r.get(&fixed)?),
        _ => Ok(false),
    }
}

struct Generator<'a> {
    rng: ChaCha8Rng,
    vars: &'a [String],
}

impl Generator<'_> {
    fn var(&mut self) -> String {
        self.vars.choose(&mut self.rng).expect("nonempty").clone()
    }

    fn expr(&mut self, depth: usize) -> Expr {
        if depth <= 1 || self.rng.gen_bool(0.5) {
            if self.rng.gen_bool(0.7) {
                Expr::var(&self.var())
            } else {
                Expr::Lit(self.rng.gen_range(0..=2))
            }
        } else {
            let op = *BinOp::ALL.choose(&mut self.rng).expect("nonempty");
            Expr::bin(op, self.expr(depth - 1), self.expr(depth - 1))
        }
    }

    fn assignment(&mut self) -> Command {
        let x = self.var();
        Command::assign(&x, self.expr(2))
    }

    fn leaf(&mut self) -> Command {
        if self.rng.gen_bool(0.85) {
            self.assignment()
        } else {
            Command::Skip
        }
    }

    fn command(&mut self, depth: usize) -> Command {
        if depth <= 1 {
            return self.leaf();
        }
        match self.rng.gen_range(0..10) {
            0 => self.leaf(),
            1..=3 => Command::seq(self.command(depth - 1), self.command(depth - 1)),
            4..=6 => {
                let guard = self.expr(2);
                let then = self.command(depth - 1);
                let els = if self.rng.gen_bool(0.3) {
                    Command::Skip
                } else {
                    self.command(depth - 1)
                };
                Command::if_(guard, then, els)
            }
            _ if self.rng.gen_bool(0.7) => {
                let v = self.var();
                let step = Command::assign(&v, Expr::bin(BinOp::Sub, Expr::var(&v), Expr::Lit(1)));
                let body = if depth > 2 {
                    Command::seq(self.command(depth - 2), step)
                } else {
                    step
                };
                Command::while_(Expr::bin(BinOp::Lt, Expr::Lit(0), Expr::var(&v)), body)
            }
            _ => {
                let guard = self.expr(2);
                Command::while_(guard, self.command(depth - 1))
            }
        }
    }
}

/// A pseudo-random program of nesting depth at most `depth` over `vars`,
/// determined by `seed`. Loops mostly follow a counting-down pattern so that
/// runs usually terminate within the default fuel.
pub fn gen_program(seed: u64, depth: usize, vars: &[String]) -> Command {
    assert!(depth >= 1 && !vars.is_empty(), "generator bounds must be positive");
    let mut g = Generator {
        rng: ChaCha8Rng::seed_from_u64(seed),
        vars,
    };
    if depth == 1 {
        g.assignment()
    } else {
        g.command(depth)
    }
}

/// A pseudo-random environment over `vars`, determined by `seed`.
pub fn gen_env(seed: u64, lattice: &std::sync::Arc<Lattice>, vars: &[String]) -> TypeEnv {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    TypeEnv::new(lattice.clone(), vars.iter().map(|x| (x.clone(), lattice.sample(&mut rng))))
}
