//! The `flowlat` command-line front end.
//!
//! Exit status: 0 when the command succeeds or the verdict holds, 1 when a
//! verdict is false or a test finds a counterexample (or cannot conclude),
//! 2 on usage or input errors.

mod render;

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::formats::{self, EnvFile};
use crate::harness::{self, HarnessConfig, Mode, NIVerdict, Verdict};
use crate::lang::{parse_program_with, Command};
use crate::lattice::{Elem, Lattice};
use crate::principal::{self, to_independence};
use crate::transform::{first_violation, translate};
use crate::typing::{spc, spc_traced, TypeEnv};

use render::Report;

#[derive(Parser, Debug)]
#[command(
    name = "flowlat",
    version,
    about = "Flow-sensitive information-flow typing over finite lattices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// `two-point`, `diamond`, `powerset`, or a lattice spec file.
    #[arg(long, default_value = "two-point")]
    lattice: String,
    /// Extra variables for the powerset universe (comma separated).
    #[arg(long, value_delimiter = ',')]
    universe: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug, Clone, Default)]
pub struct PreEnv {
    /// Inline environment, e.g. `l:L,h:H`. Wins over `--env-file`.
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    env_file: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct PostEnv {
    /// Inline post-environment. Wins over `--post-file`.
    #[arg(long)]
    post: Option<String>,
    #[arg(long)]
    post_file: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct HarnessOpts {
    /// Value domain for inputs (comma separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = harness::DEFAULT_DOMAIN)]
    domain: Vec<i64>,
    /// Loop unrollings allowed per run.
    #[arg(long, default_value_t = harness::DEFAULT_FUEL)]
    fuel: u64,
    /// Sample this many inputs per level instead of enumerating all.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write counterexample stores to `first.store` and `second.store` here.
    #[arg(long)]
    witness_dir: Option<PathBuf>,
}

impl HarnessOpts {
    fn config(&self) -> HarnessConfig {
        HarnessConfig {
            domain: self.domain.clone(),
            mode: match self.trials {
                Some(trials) => Mode::Random { seed: self.seed, trials },
                None => Mode::Exhaustive,
            },
            fuel: self.fuel,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Print the least post-environment.
    Infer {
        program: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pre: PreEnv,
        #[arg(long)]
        pc: Option<String>,
        /// Also report the environment change at each program point.
        #[arg(long)]
        trace: bool,
    },
    /// Decide a judgement `pc |- env {program} post`.
    Check {
        program: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pre: PreEnv,
        #[command(flatten)]
        post: PostEnv,
        #[arg(long)]
        pc: Option<String>,
    },
    /// Print the dependency sets of the principal typing.
    Principal {
        program: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Print the complemented (independence) view.
        #[arg(long)]
        independence: bool,
        #[arg(long)]
        trace: bool,
    },
    /// Least post-environment read off the principal typing.
    Derive {
        program: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pre: PreEnv,
    },
    /// Greatest pre-environment for a post-environment.
    Reverse {
        program: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        post: PostEnv,
    },
    /// Does the first typing subsume the second?
    Subsume {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pre: PreEnv,
        #[command(flatten)]
        post: PostEnv,
        #[arg(long, default_value = "two-point")]
        lattice2: String,
        #[arg(long)]
        env2: Option<String>,
        #[arg(long)]
        env2_file: Option<PathBuf>,
        #[arg(long)]
        post2: Option<String>,
        #[arg(long)]
        post2_file: Option<PathBuf>,
    },
    /// Convert a powerset environment between dependency and independence views.
    Dual {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pre: PreEnv,
    },
    /// Translate to a program over fixed-type variables.
    Transform {
        program: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pre: PreEnv,
        #[arg(long)]
        pc: Option<String>,
        /// Write the translated program here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Write the post-environment file here.
        #[arg(long)]
        emit_env: Option<PathBuf>,
    },
    /// Flow-insensitive check of a fixed-variable program.
    CheckFixed {
        program: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        pc: Option<String>,
    },
    /// Test noninterference of a typing by execution.
    TestNi {
        program: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pre: PreEnv,
        /// Defaults to the least post-environment.
        #[command(flatten)]
        post: PostEnv,
        #[arg(long)]
        pc: Option<String>,
        #[command(flatten)]
        harness: HarnessOpts,
    },
    /// Test that variables not above pc are never modified.
    TestSafety {
        program: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pre: PreEnv,
        #[command(flatten)]
        post: PostEnv,
        #[arg(long)]
        pc: Option<String>,
        #[command(flatten)]
        harness: HarnessOpts,
    },
    /// Test that a fixed-variable program simulates the original.
    TestEquiv {
        program: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pre: PreEnv,
        #[arg(long)]
        pc: Option<String>,
        /// Fixed-variable program to compare against; defaults to the translation.
        #[arg(long)]
        fixed: Option<PathBuf>,
        #[command(flatten)]
        harness: HarnessOpts,
    },
    /// Check that a lattice spec describes a lattice.
    LatticeValidate {
        /// Spec file; defaults to `--lattice`.
        file: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

/// Outcome of a successful invocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Holds,
    Fails,
}

impl Status {
    fn from_bool(b: bool) -> Status {
        if b {
            Status::Holds
        } else {
            Status::Fails
        }
    }
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let mut stdout = io::stdout().lock();
    let mut stderr = io::stderr().lock();
    match run(cli, &mut stdout, &mut stderr) {
        Ok(Status::Holds) => ExitCode::SUCCESS,
        Ok(Status::Fails) => ExitCode::from(1),
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read_source(path: &Path) -> anyhow::Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).context("reading stdin")?;
        return Ok(s);
    }
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_program(path: &Path, fixed: bool) -> anyhow::Result<Command> {
    let text = read_source(path)?;
    parse_program_with(&text, fixed).map_err(|e| anyhow!("{}:{e}", path.display()))
}

/// Left-hand sides of an environment text, used to size a powerset universe
/// before the environment itself can be parsed.
fn env_text_vars(text: &str, inline: bool) -> BTreeSet<String> {
    let entries: Vec<&str> = if inline {
        formats::split_top_level(text)
    } else {
        text.lines().map(|l| l.split('#').next().unwrap_or("")).collect()
    };
    entries
        .into_iter()
        .filter_map(|e| e.split_once(':').map(|(x, _)| x.trim().to_string()))
        .filter(|x| !x.is_empty())
        .collect()
}

/// Raw environment sources: inline text and file contents.
struct EnvSource {
    inline: Option<String>,
    file: Option<(PathBuf, String)>,
}

impl EnvSource {
    fn read(inline: &Option<String>, file: &Option<PathBuf>) -> anyhow::Result<EnvSource> {
        let file = match file {
            Some(p) => Some((p.clone(), read_source(p)?)),
            None => None,
        };
        Ok(EnvSource {
            inline: inline.clone(),
            file,
        })
    }

    fn is_given(&self) -> bool {
        self.inline.is_some() || self.file.is_some()
    }

    fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        if let Some(text) = &self.inline {
            out.extend(env_text_vars(text, true));
        }
        if let Some((_, text)) = &self.file {
            out.extend(env_text_vars(text, false));
        }
        out
    }

    /// The environment, inline bindings overriding file bindings.
    fn resolve(&self, lattice: &Arc<Lattice>, flag: &str, warn: &mut dyn Write) -> anyhow::Result<Option<TypeEnv>> {
        let mut env = match &self.file {
            Some((path, text)) => Some(
                formats::parse_env_file(text, lattice)
                    .and_then(EnvFile::into_env)
                    .map_err(|e| anyhow!("{}: {e}", path.display()))?,
            ),
            None => None,
        };
        if let Some(text) = &self.inline {
            let bindings = formats::parse_inline_bindings(text, lattice).map_err(|e| anyhow!("--{flag}: {e}"))?;
            let mut merged = env.take().unwrap_or_else(|| TypeEnv::new(lattice.clone(), Vec::new()));
            if **merged.lattice() != **lattice {
                bail!("--{flag}: file environment is over a different lattice");
            }
            for (x, e) in bindings {
                if let Ok(old) = merged.get(&x) {
                    if old != e {
                        writeln!(
                            warn,
                            "warning: --{flag} sets `{x}` to {} overriding {} from the file",
                            lattice.element_name(e),
                            lattice.element_name(old)
                        )?;
                    }
                }
                merged.set(&x, e);
            }
            env = Some(merged);
        }
        Ok(env)
    }
}

fn resolve_lattice(selector: &str, universe: &BTreeSet<String>) -> anyhow::Result<Arc<Lattice>> {
    let lat = match selector {
        "two-point" => Lattice::two_point(),
        "diamond" => Lattice::diamond(),
        "powerset" => Lattice::powerset(universe.iter().cloned()).context("building the powerset lattice")?,
        path => {
            let text = read_source(Path::new(path))?;
            formats::parse_lattice_spec(&text).map_err(|e| anyhow!("{path}: {e}"))?
        }
    };
    Ok(Arc::new(lat))
}

fn parse_pc(lattice: &Lattice, pc: &Option<String>) -> anyhow::Result<Elem> {
    match pc {
        Some(text) => lattice.parse_element(text).map_err(|e| anyhow!("--pc: {e}")),
        None => Ok(lattice.bottom()),
    }
}

fn require(env: Option<TypeEnv>, what: &str) -> anyhow::Result<TypeEnv> {
    env.ok_or_else(|| anyhow!("missing {what}"))
}

fn universe_for(common: &Common, program: Option<&Command>, sources: &[&EnvSource]) -> BTreeSet<String> {
    let mut u: BTreeSet<String> = common.universe.iter().cloned().collect();
    if let Some(c) = program {
        u.extend(c.floating_vars());
    }
    for s in sources {
        u.extend(s.vars());
    }
    u
}

fn emit(out: &mut dyn Write, format: Format, report: &Report) -> anyhow::Result<()> {
    match format {
        Format::Text => out.write_all(report.text.as_bytes())?,
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report.json)?)?,
    }
    Ok(())
}

fn write_witness(dir: &Option<PathBuf>, verdict: &NIVerdict) -> anyhow::Result<()> {
    if let (Some(dir), Some(w)) = (dir, &verdict.witness) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, store) in [("first.store", &w.first), ("second.store", &w.second)] {
            let path = dir.join(name);
            fs::write(&path, store.to_string()).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}

fn harness_status(v: &NIVerdict) -> Status {
    Status::from_bool(v.outcome == Verdict::Pass)
}

/// Runs one invocation, writing results to `out` and warnings to `err`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<Status> {
    match cli.command {
        Cmd::Infer {
            program,
            common,
            pre,
            pc,
            trace,
        } => {
            let c = load_program(&program, false)?;
            let pre = EnvSource::read(&pre.env, &pre.env_file)?;
            let lat = resolve_lattice(&common.lattice, &universe_for(&common, Some(&c), &[&pre]))?;
            let env = require(pre.resolve(&lat, "env", err)?, "--env or --env-file")?;
            let pc = parse_pc(&lat, &pc)?;
            let (post, steps) = spc_traced(pc, &env, &c)?;
            let report = render::environment("infer", &post, trace.then_some(&steps[..]));
            emit(out, common.format, &report)?;
            Ok(Status::Holds)
        }
        Cmd::Check {
            program,
            common,
            pre,
            post,
            pc,
        } => {
            let c = load_program(&program, false)?;
            let pre = EnvSource::read(&pre.env, &pre.env_file)?;
            let post = EnvSource::read(&post.post, &post.post_file)?;
            let lat = resolve_lattice(&common.lattice, &universe_for(&common, Some(&c), &[&pre, &post]))?;
            let env = require(pre.resolve(&lat, "env", err)?, "--env or --env-file")?;
            let target = require(post.resolve(&lat, "post", err)?, "--post or --post-file")?;
            let pc = parse_pc(&lat, &pc)?;
            let least = spc(pc, &env, &c)?;
            let holds = least.leq(&target)?;
            emit(out, common.format, &render::check(&least, &target, holds))?;
            Ok(Status::from_bool(holds))
        }
        Cmd::Principal {
            program,
            common,
            independence,
            trace,
        } => {
            let c = load_program(&program, false)?;
            let universe = universe_for(&common, Some(&c), &[]);
            let pt = principal::principal(&c, universe)?;
            let steps = if trace {
                Some(spc_traced(pt.lattice().bottom(), &pt.delta0, &c)?.1)
            } else {
                None
            };
            let report = if independence {
                render::independence("principal", &to_independence(&pt.delta_c)?)
            } else {
                render::environment("principal", &pt.delta_c, steps.as_deref())
            };
            emit(out, common.format, &report)?;
            Ok(Status::Holds)
        }
        Cmd::Derive { program, common, pre } => {
            let c = load_program(&program, false)?;
            let pre = EnvSource::read(&pre.env, &pre.env_file)?;
            let lat = resolve_lattice(&common.lattice, &universe_for(&common, Some(&c), &[&pre]))?;
            let env = require(pre.resolve(&lat, "env", err)?, "--env or --env-file")?;
            let pt = principal::principal(&c, env.vars().map(str::to_string))?;
            let post = principal::derive_smallest(&pt, &env)?;
            emit(out, common.format, &render::environment("derive", &post, None))?;
            Ok(Status::Holds)
        }
        Cmd::Reverse { program, common, post } => {
            let c = load_program(&program, false)?;
            let post = EnvSource::read(&post.post, &post.post_file)?;
            let lat = resolve_lattice(&common.lattice, &universe_for(&common, Some(&c), &[&post]))?;
            let target = require(post.resolve(&lat, "post", err)?, "--post or --post-file")?;
            let pt = principal::principal(&c, target.vars().map(str::to_string))?;
            let pre = principal::derive_greatest(&pt, &target)?;
            emit(out, common.format, &render::environment("reverse", &pre, None))?;
            Ok(Status::Holds)
        }
        Cmd::Subsume {
            common,
            pre,
            post,
            lattice2,
            env2,
            env2_file,
            post2,
            post2_file,
        } => {
            let pre1 = EnvSource::read(&pre.env, &pre.env_file)?;
            let post1 = EnvSource::read(&post.post, &post.post_file)?;
            let pre2 = EnvSource::read(&env2, &env2_file)?;
            let post2 = EnvSource::read(&post2, &post2_file)?;
            let universe = universe_for(&common, None, &[&pre1, &post1, &pre2, &post2]);
            let lat1 = resolve_lattice(&common.lattice, &universe)?;
            let lat2 = resolve_lattice(&lattice2, &universe)?;
            let g1 = require(pre1.resolve(&lat1, "env", err)?, "--env or --env-file")?;
            let g1p = require(post1.resolve(&lat1, "post", err)?, "--post or --post-file")?;
            let g2 = require(pre2.resolve(&lat2, "env2", err)?, "--env2 or --env2-file")?;
            let g2p = require(post2.resolve(&lat2, "post2", err)?, "--post2 or --post2-file")?;
            let holds = principal::subsumes((&g1, &g1p), (&g2, &g2p))?;
            emit(out, common.format, &render::verdict("subsume", holds))?;
            Ok(Status::from_bool(holds))
        }
        Cmd::Dual { common, pre } => {
            let src = EnvSource::read(&pre.env, &pre.env_file)?;
            if !src.is_given() {
                bail!("missing --env or --env-file");
            }
            let universe = universe_for(&common, None, &[&src]);
            let lat = Arc::new(Lattice::powerset(universe).context("building the powerset lattice")?);
            let independent = src
                .file
                .as_ref()
                .is_some_and(|(_, text)| formats::parse_env_file(text, &lat).is_ok_and(|f| matches!(f, EnvFile::Independence(_))));
            if independent && src.inline.is_some() {
                bail!("--env cannot be combined with an independence-view file");
            }
            let env = require(src.resolve(&lat, "env", err)?, "--env or --env-file")?;
            let report = if independent {
                render::environment("dual", &env, None)
            } else {
                render::independence("dual", &to_independence(&env)?)
            };
            emit(out, common.format, &report)?;
            Ok(Status::Holds)
        }
        Cmd::Transform {
            program,
            common,
            pre,
            pc,
            output,
            emit_env,
        } => {
            let c = load_program(&program, false)?;
            let pre = EnvSource::read(&pre.env, &pre.env_file)?;
            let lat = resolve_lattice(&common.lattice, &universe_for(&common, Some(&c), &[&pre]))?;
            let env = require(pre.resolve(&lat, "env", err)?, "--env or --env-file")?;
            let pc = parse_pc(&lat, &pc)?;
            let result = translate(pc, &env, &c)?;
            if let Some(path) = &emit_env {
                fs::write(path, result.post.to_string()).with_context(|| format!("writing {}", path.display()))?;
            }
            let report = render::transform(&result);
            match &output {
                Some(path) => {
                    fs::write(path, format!("{}\n", result.output))
                        .with_context(|| format!("writing {}", path.display()))?;
                    if common.format == Format::Json {
                        emit(out, common.format, &report)?;
                    }
                }
                None => emit(out, common.format, &report)?,
            }
            Ok(Status::Holds)
        }
        Cmd::CheckFixed { program, common, pc } => {
            let d = load_program(&program, true)?;
            let universe = universe_for(&common, None, &[]);
            let lat = resolve_lattice(&common.lattice, &universe)?;
            let pc = parse_pc(&lat, &pc)?;
            let violation = first_violation(&lat, pc, &d)?;
            let holds = violation.is_none();
            emit(out, common.format, &render::check_fixed(&lat, violation.as_ref()))?;
            Ok(Status::from_bool(holds))
        }
        Cmd::TestNi {
            program,
            common,
            pre,
            post,
            pc,
            harness,
        } => {
            let c = load_program(&program, false)?;
            let pre = EnvSource::read(&pre.env, &pre.env_file)?;
            let post = EnvSource::read(&post.post, &post.post_file)?;
            let lat = resolve_lattice(&common.lattice, &universe_for(&common, Some(&c), &[&pre, &post]))?;
            let env = require(pre.resolve(&lat, "env", err)?, "--env or --env-file")?;
            let pc = parse_pc(&lat, &pc)?;
            let target = match post.resolve(&lat, "post", err)? {
                Some(t) => t,
                None => spc(pc, &env, &c)?,
            };
            let verdict = harness::ni_check(&c, &env, &target, &harness.config())?;
            write_witness(&harness.witness_dir, &verdict)?;
            emit(out, common.format, &render::harness("test-ni", &lat, &verdict))?;
            Ok(harness_status(&verdict))
        }
        Cmd::TestSafety {
            program,
            common,
            pre,
            post,
            pc,
            harness,
        } => {
            let c = load_program(&program, false)?;
            let pre = EnvSource::read(&pre.env, &pre.env_file)?;
            let post = EnvSource::read(&post.post, &post.post_file)?;
            let lat = resolve_lattice(&common.lattice, &universe_for(&common, Some(&c), &[&pre, &post]))?;
            let pc = parse_pc(&lat, &pc)?;
            let target = match post.resolve(&lat, "post", err)? {
                Some(t) => t,
                None => {
                    let env = require(pre.resolve(&lat, "env", err)?, "--post, --post-file, or an environment")?;
                    spc(pc, &env, &c)?
                }
            };
            let verdict = harness::safety_check(&c, pc, &target, &harness.config())?;
            write_witness(&harness.witness_dir, &verdict)?;
            emit(out, common.format, &render::harness("test-safety", &lat, &verdict))?;
            Ok(harness_status(&verdict))
        }
        Cmd::TestEquiv {
            program,
            common,
            pre,
            pc,
            fixed,
            harness,
        } => {
            let c = load_program(&program, false)?;
            let pre = EnvSource::read(&pre.env, &pre.env_file)?;
            let lat = resolve_lattice(&common.lattice, &universe_for(&common, Some(&c), &[&pre]))?;
            let env = require(pre.resolve(&lat, "env", err)?, "--env or --env-file")?;
            let pc = parse_pc(&lat, &pc)?;
            let translated = translate(pc, &env, &c)?;
            let d = match &fixed {
                Some(path) => load_program(path, true)?,
                None => translated.output.clone(),
            };
            let verdict = harness::equiv_check(&c, &d, &env, &translated.post, &harness.config())?;
            write_witness(&harness.witness_dir, &verdict)?;
            emit(out, common.format, &render::harness("test-equiv", &lat, &verdict))?;
            Ok(harness_status(&verdict))
        }
        Cmd::LatticeValidate { file, common } => {
            let selector = match &file {
                Some(p) => p.to_string_lossy().into_owned(),
                None => common.lattice.clone(),
            };
            let lat = resolve_lattice(&selector, &common.universe.iter().cloned().collect())?;
            emit(out, common.format, &render::lattice(&lat))?;
            Ok(Status::Holds)
        }
    }
}
