//! Plain-text and JSON formats: lattice spec files, environment files,
//! inline environments, and store files.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::harness::NIVerdict;
use crate::lang::{parse_expr, Expr, Store, VarRef};
use crate::lattice::{Elem, Lattice, VarSet};
use crate::principal::{from_independence, IndependenceEnv};
use crate::typing::TypeEnv;

pub const INDEPENDENCE_HEADER: &str = "# independence";

fn format_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Format { line, msg: msg.into() }
}

/// Content lines with their 1-based numbers, comments and blanks removed.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

/// Parses a lattice spec file:
///
/// ```text
/// lattice diamond
/// elements L M N H
/// order L < M
/// order L < N
/// order M < H
/// order N < H
/// ```
pub fn parse_lattice_spec(text: &str) -> Result<Lattice> {
    let mut name = None;
    let mut elements: Option<Vec<String>> = None;
    let mut covers = Vec::new();
    for (n, line) in content_lines(text) {
        let mut words = line.split_whitespace();
        match words.next() {
            Some("lattice") if name.is_none() => {
                let rest: Vec<&str> = words.collect();
                if rest.len() != 1 {
                    return Err(format_err(n, "expected `lattice <name>`"));
                }
                name = Some(rest[0].to_string());
            }
            Some("elements") if name.is_some() && elements.is_none() => {
                let rest: Vec<String> = words.map(str::to_string).collect();
                if rest.is_empty() {
                    return Err(format_err(n, "expected at least one element"));
                }
                elements = Some(rest);
            }
            Some("order") if elements.is_some() => {
                let rest: Vec<&str> = words.collect();
                match rest.as_slice() {
                    [lo, "<", hi] => covers.push((lo.to_string(), hi.to_string())),
                    _ => return Err(format_err(n, "expected `order <lower> < <upper>`")),
                }
            }
            Some(other) => {
                let expected = match (&name, &elements) {
                    (None, _) => "`lattice <name>`",
                    (Some(_), None) => "`elements ...`",
                    _ => "`order <lower> < <upper>`",
                };
                return Err(format_err(n, format!("unexpected `{other}`, expected {expected}")));
            }
            None => unreachable!("content lines are nonempty"),
        }
    }
    let name = name.ok_or_else(|| format_err(1, "missing `lattice <name>` line"))?;
    let elements = elements.ok_or_else(|| format_err(1, "missing `elements` line"))?;
    Lattice::build(name, &elements, &covers)
}

/// An environment file, in either view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EnvFile {
    Dependency(TypeEnv),
    Independence(IndependenceEnv),
}

impl EnvFile {
    /// The environment in the dependency view.
    pub fn into_env(self) -> Result<TypeEnv> {
        match self {
            EnvFile::Dependency(env) => Ok(env),
            EnvFile::Independence(n) => from_independence(&n),
        }
    }
}

/// Parses `x : element` lines. A first line `# independence` marks the
/// complemented view, whose sets are independence sets over the powerset
/// lattice's universe.
pub fn parse_env_file(text: &str, lattice: &Arc<Lattice>) -> Result<EnvFile> {
    let independence = text.lines().find(|l| !l.trim().is_empty()).map(str::trim) == Some(INDEPENDENCE_HEADER);
    let mut bindings: BTreeMap<String, Elem> = BTreeMap::new();
    for (n, line) in content_lines(text) {
        let (var, elem) = line
            .split_once(':')
            .ok_or_else(|| format_err(n, "expected `variable : element`"))?;
        let var = var.trim();
        if !crate::lattice::is_identifier(var) {
            return Err(format_err(n, format!("`{var}` is not a variable name")));
        }
        let e = lattice
            .parse_element(elem)
            .map_err(|e| format_err(n, e.to_string()))?;
        if bindings.insert(var.to_string(), e).is_some() {
            return Err(format_err(n, format!("variable `{var}` bound twice")));
        }
    }
    let env = TypeEnv::new(lattice.clone(), bindings);
    if !independence {
        return Ok(EnvFile::Dependency(env));
    }
    let universe = lattice
        .universe()
        .ok_or_else(|| format_err(1, "independence view requires the powerset lattice"))?;
    let map = env
        .iter()
        .map(|(x, e)| (x.to_string(), lattice.set_of(e).unwrap_or_default()))
        .collect();
    Ok(EnvFile::Independence(IndependenceEnv {
        universe: universe.to_vec(),
        map,
    }))
}

/// Splits on commas outside braces, so `x:{a,b},y:L` has two entries.
pub(crate) fn split_top_level(text: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let (mut depth, mut start) = (0usize, 0usize);
    for (i, ch) in text.char_indices() {
        match ch {
            '{' => depth += 1,
            '}' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&text[start..]);
    parts
}

/// Inline bindings such as `l:L,h:H`, in order of appearance.
pub fn parse_inline_bindings(text: &str, lattice: &Lattice) -> Result<Vec<(String, Elem)>> {
    let mut out: Vec<(String, Elem)> = Vec::new();
    for part in split_top_level(text).into_iter().map(str::trim).filter(|p| !p.is_empty()) {
        let (var, elem) = part
            .split_once(':')
            .ok_or_else(|| format_err(1, format!("expected `variable:element`, found `{part}`")))?;
        let var = var.trim();
        if !crate::lattice::is_identifier(var) {
            return Err(format_err(1, format!("`{var}` is not a variable name")));
        }
        let e = lattice.parse_element(elem)?;
        if out.iter().any(|(x, _)| x == var) {
            return Err(format_err(1, format!("variable `{var}` bound twice")));
        }
        out.push((var.to_string(), e));
    }
    Ok(out)
}

pub fn parse_inline_env(text: &str, lattice: &Arc<Lattice>) -> Result<TypeEnv> {
    Ok(TypeEnv::new(lattice.clone(), parse_inline_bindings(text, lattice)?))
}

pub fn render_independence(n: &IndependenceEnv) -> String {
    let mut out = format!("{INDEPENDENCE_HEADER}\n");
    for (x, set) in &n.map {
        out.push_str(&format!(
            "{x} : {}\n",
            crate::lattice::render_set(set.iter().map(String::as_str))
        ));
    }
    out
}

fn var_key(text: &str) -> Option<VarRef> {
    match parse_expr(text, true) {
        Ok(Expr::Var(v)) => Some(v),
        _ => None,
    }
}

/// Parses `ident = integer` lines; fixed variables `x@T` are accepted.
pub fn parse_store(text: &str) -> Result<Store> {
    let mut store = Store::new();
    for (n, line) in content_lines(text) {
        let (lhs, rhs) = line
            .split_once('=')
            .ok_or_else(|| format_err(n, "expected `variable = integer`"))?;
        let var = var_key(lhs.trim()).ok_or_else(|| format_err(n, format!("`{}` is not a variable", lhs.trim())))?;
        let value: i64 = rhs
            .trim()
            .parse()
            .map_err(|_| format_err(n, format!("`{}` is not an integer", rhs.trim())))?;
        if store.contains(&var) {
            return Err(format_err(n, format!("variable `{var}` bound twice")));
        }
        store.declare(var, value);
    }
    Ok(store)
}

/// An element as JSON: a name, or a sorted array for powerset elements.
pub fn element_json(lattice: &Lattice, e: Elem) -> Value {
    match lattice.set_of(e) {
        Some(set) => json!(set.into_iter().collect::<Vec<_>>()),
        None => json!(lattice.element_name(e)),
    }
}

/// Variable-to-element map; powerset elements become sorted arrays.
pub fn env_to_json(env: &TypeEnv) -> Value {
    let lat = env.lattice();
    Value::Object(env.iter().map(|(x, e)| (x.to_string(), element_json(lat, e))).collect())
}

pub fn env_from_json(value: &Value, lattice: &Arc<Lattice>) -> Result<TypeEnv> {
    let obj = value
        .as_object()
        .ok_or_else(|| format_err(1, "environment must be a JSON object"))?;
    let mut bindings = Vec::with_capacity(obj.len());
    for (x, v) in obj {
        let e = match v {
            Value::String(s) => lattice.parse_element(s)?,
            Value::Array(items) => {
                let set: VarSet = items
                    .iter()
                    .map(|i| i.as_str().map(str::to_string))
                    .collect::<Option<_>>()
                    .ok_or_else(|| format_err(1, format!("`{x}`: set members must be strings")))?;
                lattice.elem_of_set(&set)?
            }
            _ => return Err(format_err(1, format!("`{x}`: expected a string or an array"))),
        };
        bindings.push((x.clone(), e));
    }
    Ok(TypeEnv::new(lattice.clone(), bindings))
}

pub fn independence_to_json(n: &IndependenceEnv) -> Value {
    Value::Object(
        n.map
            .iter()
            .map(|(x, set)| (x.clone(), json!(set.iter().collect::<Vec<_>>())))
            .collect(),
    )
}

pub fn store_to_json(store: &Store) -> Value {
    let mut map = Map::new();
    for (v, value) in store.iter() {
        map.insert(v.to_string(), json!(value));
    }
    Value::Object(map)
}

pub fn store_from_json(value: &Value) -> Result<Store> {
    let obj = value
        .as_object()
        .ok_or_else(|| format_err(1, "store must be a JSON object"))?;
    let mut store = Store::new();
    for (k, v) in obj {
        let var = var_key(k).ok_or_else(|| format_err(1, format!("`{k}` is not a variable")))?;
        let n = v
            .as_i64()
            .ok_or_else(|| format_err(1, format!("`{k}`: expected an integer")))?;
        store.declare(var, n);
    }
    Ok(store)
}

/// The record for a harness verdict: `verdict`, `witness` (or null), and
/// `stats`.
pub fn verdict_to_json(subcommand: &str, lattice: &Lattice, v: &NIVerdict) -> Value {
    let s = &v.stats;
    let witness = match &v.witness {
        Some(w) => json!({
            "level": w.level.map(|t| element_json(lattice, t)),
            "variable": w.variable.to_string(),
            "first": store_to_json(&w.first),
            "second": store_to_json(&w.second),
        }),
        None => Value::Null,
    };
    json!({
        "subcommand": subcommand,
        "verdict": v.outcome.as_str(),
        "witness": witness,
        "stats": {
            "levels": s.levels,
            "runs": s.runs,
            "pairs_tested": s.pairs_tested,
            "skipped": s.skipped,
            "termination_mismatches": s.termination_mismatches,
        },
    })
}
