//! Text and JSON renderings of command results. Text output for
//! environments is itself a valid environment file; commentary goes on `#`
//! lines.

use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::formats::{element_json, env_to_json, independence_to_json, render_independence, verdict_to_json};
use crate::harness::NIVerdict;
use crate::lattice::{Elem, Lattice};
use crate::principal::IndependenceEnv;
use crate::transform::{FixedViolation, TranslationResult};
use crate::typing::{TraceStep, TypeEnv};

pub struct Report {
    pub text: String,
    pub json: Value,
}

fn changes_text(lattice: &Lattice, changes: &[(String, Elem)]) -> String {
    if changes.is_empty() {
        return "no change".into();
    }
    changes
        .iter()
        .map(|(x, e)| format!("{x} : {}", lattice.element_name(*e)))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn environment(subcommand: &str, env: &TypeEnv, trace: Option<&[TraceStep]>) -> Report {
    let lat = env.lattice();
    let mut text = String::new();
    let mut record = json!({
        "subcommand": subcommand,
        "environment": env_to_json(env),
    });
    if let Some(steps) = trace {
        for s in steps {
            let _ = writeln!(
                text,
                "# {}{} => {}",
                "  ".repeat(s.depth),
                s.point,
                changes_text(lat, &s.changes)
            );
        }
        record["trace"] = Value::Array(
            steps
                .iter()
                .map(|s| {
                    let changes: serde_json::Map<String, Value> =
                        s.changes.iter().map(|(x, e)| (x.clone(), element_json(lat, *e))).collect();
                    json!({ "depth": s.depth, "point": s.point, "changes": changes })
                })
                .collect(),
        );
    }
    text.push_str(&env.to_string());
    Report { text, json: record }
}

pub fn independence(subcommand: &str, n: &IndependenceEnv) -> Report {
    Report {
        text: render_independence(n),
        json: json!({
            "subcommand": subcommand,
            "view": "independence",
            "environment": independence_to_json(n),
        }),
    }
}

pub fn verdict(subcommand: &str, holds: bool) -> Report {
    Report {
        text: format!("{}\n", if holds { "holds" } else { "fails" }),
        json: json!({ "subcommand": subcommand, "verdict": holds }),
    }
}

pub fn check(least: &TypeEnv, target: &TypeEnv, holds: bool) -> Report {
    let lat = least.lattice();
    let violations: Vec<(&str, Elem, Elem)> = least
        .iter()
        .zip(target.iter())
        .filter(|((_, a), (_, b))| !lat.leq(*a, *b))
        .map(|((x, a), (_, b))| (x, a, b))
        .collect();
    let mut text = format!("{}\n", if holds { "accepted" } else { "rejected" });
    for (x, least, given) in &violations {
        let _ = writeln!(
            text,
            "# {x}: least type {} is not below {}",
            lat.element_name(*least),
            lat.element_name(*given)
        );
    }
    let json = json!({
        "subcommand": "check",
        "verdict": holds,
        "environment": env_to_json(least),
        "violations": violations
            .iter()
            .map(|(x, a, b)| json!({ "variable": x, "least": element_json(lat, *a), "given": element_json(lat, *b) }))
            .collect::<Vec<_>>(),
    });
    Report { text, json }
}

pub fn transform(r: &TranslationResult) -> Report {
    let mut text = format!("{}\n", r.output);
    let _ = writeln!(text, "# inserted copies: {}", r.inserted);
    for line in r.post.to_string().lines() {
        let _ = writeln!(text, "# {line}");
    }
    Report {
        text,
        json: json!({
            "subcommand": "transform",
            "program": r.output.to_string(),
            "environment": env_to_json(&r.post),
            "stats": { "inserted": r.inserted },
        }),
    }
}

pub fn check_fixed(lattice: &Lattice, violation: Option<&FixedViolation>) -> Report {
    match violation {
        None => Report {
            text: "accepted\n".into(),
            json: json!({ "subcommand": "check-fixed", "verdict": true }),
        },
        Some(v) => Report {
            text: format!(
                "rejected\n# {}: expression at {}, pc {}, target {}\n",
                v.assignment,
                lattice.element_name(v.rhs_level),
                lattice.element_name(v.pc),
                lattice.element_name(v.target_level)
            ),
            json: json!({
                "subcommand": "check-fixed",
                "verdict": false,
                "violation": {
                    "assignment": v.assignment,
                    "expression": element_json(lattice, v.rhs_level),
                    "pc": element_json(lattice, v.pc),
                    "target": element_json(lattice, v.target_level),
                },
            }),
        },
    }
}

pub fn harness(subcommand: &str, lattice: &Lattice, v: &NIVerdict) -> Report {
    let s = &v.stats;
    let mut text = format!("verdict : {}\n", v.outcome.as_str());
    let _ = writeln!(
        text,
        "levels : {}\nruns : {}\npairs : {}\nskipped : {}\nmismatches : {}",
        s.levels, s.runs, s.pairs_tested, s.skipped, s.termination_mismatches
    );
    if let Some(w) = &v.witness {
        if let Some(t) = w.level {
            let _ = writeln!(text, "level : {}", lattice.element_name(t));
        }
        let _ = writeln!(text, "variable : {}", w.variable);
        let _ = write!(text, "# first\n{}# second\n{}", w.first, w.second);
    }
    Report {
        text,
        json: verdict_to_json(subcommand, lattice, v),
    }
}

pub fn lattice(lat: &Lattice) -> Report {
    let mut text = lat.to_string();
    let _ = writeln!(
        text,
        "# bottom {}\n# top {}\n# height {}\n# size {}",
        lat.element_name(lat.bottom()),
        lat.element_name(lat.top()),
        lat.height(),
        lat.size()
    );
    let elements: Value = match lat.elements() {
        Some(es) if !lat.is_powerset() => json!(es.iter().map(|&e| lat.element_name(e)).collect::<Vec<_>>()),
        _ => Value::Null,
    };
    let order: Vec<Value> = lat
        .covers()
        .into_iter()
        .map(|(lo, hi)| json!([lat.element_name(lo), lat.element_name(hi)]))
        .collect();
    Report {
        text,
        json: json!({
            "subcommand": "lattice-validate",
            "verdict": true,
            "lattice": {
                "name": lat.name(),
                "elements": elements,
                "order": order,
                "universe": lat.universe(),
                "bottom": element_json(lat, lat.bottom()),
                "top": element_json(lat, lat.top()),
                "height": lat.height(),
                "size": lat.size().to_string(),
            },
        }),
    }
}
