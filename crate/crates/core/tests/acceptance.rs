//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Built with `harness = false`.

mod support;

use std::collections::BTreeSet;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command as Proc, ExitCode, Output};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, bail, ensure, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use flowlat::harness::{equiv_check, ni_check, safety_check, HarnessConfig};
use flowlat::lang::Command;
use flowlat::principal::{
    alpha, derive_greatest, derive_smallest, from_independence, gamma, principal, subsumes, to_independence,
};
use flowlat::transform::{blowup_family, check_fixed, translate};
use flowlat::{check_judgement, spc, Elem, Judgement, Lattice, TypeEnv, VarSet};

use support::*;

type Check = fn() -> Result<()>;

fn workdir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    fs::create_dir_all(&dir).expect("temp dir");
    dir
}

fn program_file(name: &str, text: &str) -> PathBuf {
    let path = workdir().join(name);
    fs::write(&path, text).expect("write program");
    path
}

fn cli(args: &[&str]) -> Output {
    Proc::new(env!("CARGO_BIN_EXE_flowlat"))
        .args(args)
        .output()
        .expect("run flowlat")
}

fn cli_json(args: &[&str]) -> Result<(i32, Value)> {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let out = cli(&full);
    let code = out.status.code().unwrap_or(-1);
    let v = serde_json::from_slice(&out.stdout)
        .with_context(|| format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))?;
    Ok((code, v))
}

fn judge(pc: Elem, pre: &TypeEnv, c: &Command, post: &TypeEnv) -> bool {
    check_judgement(&Judgement {
        pc,
        pre: pre.clone(),
        command: c.clone(),
        post: post.clone(),
    })
    .expect("well-formed judgement")
}

fn lattices_for(vars: &[String]) -> Vec<Arc<Lattice>> {
    vec![two_point(), diamond(), powerset(vars)]
}

fn criterion_1() -> Result<()> {
    let p = program_file("cond.w", "if x then y := z else y := 0 end");
    let out = cli(&["principal", p.to_str().unwrap()]);
    ensure!(out.status.success(), "exit {:?}", out.status);
    let text = String::from_utf8(out.stdout)?;
    ensure!(text == "x : {x}\ny : {x,z}\nz : {z}\n", "got {text:?}");
    Ok(())
}

fn criterion_2() -> Result<()> {
    let p = program_file("cond.w", "if x then y := z else y := 0 end");
    let p = p.to_str().unwrap();
    let (code, v) = cli_json(&["infer", "--lattice", "diamond", "--env", "x:M,y:L,z:N", p])?;
    ensure!(code == 0, "infer exit {code}");
    let want = serde_json::json!({ "x": "M", "y": "H", "z": "N" });
    ensure!(v["environment"] == want, "spc gave {}", v["environment"]);
    let (code, v) = cli_json(&[
        "subsume", "--lattice", "powerset", "--universe", "x,y,z",
        "--env", "x:{x},y:{y},z:{z}", "--post", "x:{x},y:{x,z},z:{z}",
        "--lattice2", "diamond", "--env2", "x:M,y:L,z:N", "--post2", "x:M,y:H,z:N",
    ])?;
    ensure!(code == 0 && v["verdict"] == true, "subsume said {v}");
    Ok(())
}

fn criterion_3() -> Result<()> {
    let p = program_file("reuse.w", "l := h ; l := 0 ; h := 0 ; l := h");
    let p = p.to_str().unwrap();
    let out = cli(&["check", "--env", "l:L,h:H", "--post", "l:L,h:H", p]);
    ensure!(out.status.success(), "check rejected: {}", String::from_utf8_lossy(&out.stdout));
    let fixed = workdir().join("reuse.fixed.w");
    let out = cli(&["transform", "--env", "l:L,h:H", "-o", fixed.to_str().unwrap(), p]);
    ensure!(out.status.success(), "transform failed: {}", String::from_utf8_lossy(&out.stderr));
    let emitted = fs::read_to_string(&fixed)?;
    ensure!(
        emitted.trim() == "l@H := h@H ; l@L := 0 ; h@L := 0 ; l@L := h@L",
        "emitted {emitted:?}"
    );
    let out = cli(&["check-fixed", "--pc", "L", fixed.to_str().unwrap()]);
    ensure!(out.status.success(), "check-fixed rejected: {}", String::from_utf8_lossy(&out.stdout));
    Ok(())
}

fn criterion_4() -> Result<()> {
    let p = program_file(
        "diamond.w",
        "if x == 0 then y := y + 1 ; w := z end ; while 0 < x do z := z + w ; x := x - 1 ; z := x end",
    );
    let p = p.to_str().unwrap();
    let env = "w:L,x:M,y:N,z:H";
    let (code, v) = cli_json(&["infer", "--trace", "--lattice", "diamond", "--env", env, p])?;
    ensure!(code == 0, "infer exit {code}");
    let trace = v["trace"].as_array().ok_or_else(|| anyhow!("no trace"))?;
    let step = |point: &str| trace.iter().find(|s| s["point"] == point).map(|s| s["changes"].clone());
    let after_if = step("if x == 0").ok_or_else(|| anyhow!("no conditional step"))?;
    ensure!(after_if == serde_json::json!({ "w": "H", "y": "H" }), "conditional delta {after_if}");
    let in_loop = trace
        .iter()
        .find(|s| s["point"] == "z := x" && s["depth"].as_u64() > Some(0))
        .ok_or_else(|| anyhow!("no loop-body step for z := x"))?;
    ensure!(in_loop["changes"] == serde_json::json!({ "z": "M" }), "loop delta {}", in_loop["changes"]);

    let (code, v) = cli_json(&["transform", "--lattice", "diamond", "--env", env, p])?;
    ensure!(code == 0, "transform exit {code}");
    let code_text = v["program"].as_str().unwrap_or_default();
    let else_block = code_text
        .split(" else ")
        .nth(1)
        .and_then(|rest| rest.split(" end").next())
        .ok_or_else(|| anyhow!("no else branch in {code_text}"))?;
    let copies: BTreeSet<&str> = else_block.split(" ; ").collect();
    // The pre-level of y is N here: y := y + 1 under a guard at M must reach H.
    ensure!(
        copies == BTreeSet::from(["w@H := w@L", "y@H := y@N"]),
        "else block {else_block:?}"
    );
    ensure!(code_text.ends_with("z@H := z@M end"), "loop body tail in {code_text}");
    Ok(())
}

fn criterion_5() -> Result<()> {
    let p = program_file("incomplete.w", "if h == 0 then l := h else l := 0 end");
    let p = p.to_str().unwrap();
    let typing = ["--env", "l:L,h:H", "--post", "l:L,h:H"];
    let (code, v) = cli_json(&[&["check", p][..], &typing].concat())?;
    ensure!(code == 1 && v["verdict"] == false, "check gave exit {code}, {v}");
    let (code, v) = cli_json(&[&["test-ni", p, "--domain", "0,1"][..], &typing].concat())?;
    ensure!(code == 0 && v["verdict"] == "pass", "test-ni gave exit {code}, {v}");
    ensure!(v["stats"]["skipped"] == 0, "unexpected skips {v}");
    Ok(())
}

fn criterion_6() -> Result<()> {
    let mut ns = Vec::new();
    let mut counts = Vec::new();
    for n in 1..=6usize {
        let c = blowup_family(n);
        let env: Vec<String> = c
            .floating_vars()
            .into_iter()
            .map(|v| format!("{v}:{}", if v == "h" { "H" } else { "L" }))
            .collect();
        let p = program_file(&format!("blowup{n}.w"), &c.to_string());
        let (code, v) = cli_json(&["transform", "--env", &env.join(","), p.to_str().unwrap()])?;
        ensure!(code == 0, "transform exit {code} at n={n}");
        let k = v["stats"]["inserted"].as_f64().ok_or_else(|| anyhow!("no count"))?;
        ns.push(n as f64);
        counts.push(k);
    }
    let a = ns.iter().zip(&counts).map(|(n, y)| n * n * y).sum::<f64>() / ns.iter().map(|n| n.powi(4)).sum::<f64>();
    let resid = ns
        .iter()
        .zip(&counts)
        .map(|(n, y)| (y - a * n * n).powi(2))
        .sum::<f64>()
        .sqrt();
    let rel = resid / counts.iter().map(|y| y * y).sum::<f64>().sqrt();
    println!("  inserted copies {counts:?}, fit a = {a:.4}, relative residual = {:.2}%", rel * 100.0);
    ensure!(rel < 0.05, "relative residual {rel:.4}");
    Ok(())
}

fn criterion_7() -> Result<()> {
    let config = HarnessConfig::default();
    let mut skipped = 0u64;
    let mut checks = 0usize;
    for s in corpus(200) {
        for (li, lat) in lattices_for(&s.vars).iter().enumerate() {
            let seed = s.seed * 7 + li as u64;
            let pre = random_env(seed, lat, &s.vars);
            let pc = lat.sample(&mut ChaCha8Rng::seed_from_u64(seed));
            let post = spc(pc, &pre, &s.program)?;
            let ni = ni_check(&s.program, &pre, &post, &config)?;
            ensure!(ni.passed(), "noninterference fails for seed {} over {}: {}\n{:?}", s.seed, lat.name(), s.program, ni.witness);
            let safe = safety_check(&s.program, pc, &post, &config)?;
            ensure!(safe.passed(), "safety fails for seed {} over {}: {}", s.seed, lat.name(), s.program);
            skipped += ni.stats.skipped + safe.stats.skipped;
            checks += 2;
        }
    }
    println!("  {checks} checks, {skipped} nonterminating runs skipped");
    Ok(())
}

fn criterion_8() -> Result<()> {
    let vars = ["x", "y"];
    let oracle = DeclarativeOracle::new(two_point(), &vars);
    let programs = all_programs(2, &vars);
    let mut triples = 0usize;
    for c in &programs {
        let derivable = oracle.derivable(c);
        for &p in &oracle.elems {
            for g in &oracle.envs {
                for gp in &oracle.envs {
                    let expected = derivable.contains(&(p, g.clone(), gp.clone()));
                    let got = judge(p, &oracle.to_env(g), c, &oracle.to_env(gp));
                    ensure!(expected == got, "disagreement on {c} at p={p:?} {g:?} -> {gp:?}: oracle {expected}, checker {got}");
                    triples += 1;
                }
            }
        }
    }
    println!("  {} programs, {triples} triples", programs.len());
    Ok(())
}

fn all_subsets(vars: &[String]) -> Vec<VarSet> {
    (0..1u32 << vars.len())
        .map(|mask| {
            vars.iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, v)| v.clone())
                .collect()
        })
        .collect()
}

fn galois_laws() -> Result<()> {
    let vars = names(&["a", "b", "c"]);
    let subsets = all_subsets(&vars);
    let lats = [two_point(), diamond(), chain3()];
    for i in 0..50u64 {
        let lat = &lats[i as usize % lats.len()];
        let env = random_env(1000 + i, lat, &vars);
        for t in lat.elements().unwrap() {
            let gt = gamma(&env, t)?;
            ensure!(lat.leq(alpha(&env, &gt)?, t), "alpha(gamma(t)) not below t");
            for x in &subsets {
                ensure!(lat.leq(alpha(&env, x)?, t) == x.is_subset(&gt), "adjunction fails for {x:?}, {t:?}");
            }
        }
        for x in &subsets {
            ensure!(x.is_subset(&gamma(&env, alpha(&env, x)?)?), "X not within gamma(alpha(X))");
        }
    }
    Ok(())
}

fn monotone_renaming() -> Result<()> {
    let lats = [unit(), two_point(), chain3()];
    let samples = corpus(30);
    for l1 in &lats {
        for l2 in &lats {
            for f in monotone_maps(l1, l2) {
                for s in &samples {
                    let env = random_env(s.seed, l1, &s.vars);
                    for p in l1.elements().unwrap() {
                        let renamed_pre = env.map_elems(l2.clone(), |e| apply(&f, e));
                        let lhs = spc(apply(&f, p), &renamed_pre, &s.program)?;
                        let rhs = spc(p, &env, &s.program)?.map_elems(l2.clone(), |e| apply(&f, e));
                        ensure!(lhs.leq(&rhs)?, "{} -> {}: {} at seed {}", l1.name(), l2.name(), s.program, s.seed);
                    }
                }
            }
        }
    }
    Ok(())
}

fn canonical_derivations() -> Result<()> {
    for s in corpus(200) {
        let pt = principal(&s.program, s.vars.iter().cloned())?;
        for (li, lat) in [two_point(), diamond()].iter().enumerate() {
            let pre = random_env(s.seed * 3 + li as u64, lat, &s.vars);
            let least = spc(lat.bottom(), &pre, &s.program)?;
            let posts = [least, random_env(s.seed * 3 + li as u64 + 500, lat, &s.vars)];
            for post in &posts {
                let mut bound = true;
                for x in &s.vars {
                    for y in pt.dependencies(x)? {
                        bound &= lat.leq(pre.get(&y)?, post.get(x)?);
                    }
                }
                ensure!(
                    judge(lat.bottom(), &pre, &s.program, post) == bound,
                    "seed {}: {} over {}",
                    s.seed,
                    s.program,
                    lat.name()
                );
            }
        }
    }
    Ok(())
}

fn internal_completeness() -> Result<()> {
    let lats = [unit(), two_point(), chain3(), diamond()];
    let samples = corpus(200);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut found = 0;
    let mut attempts = 0;
    while found < 100 {
        attempts += 1;
        ensure!(attempts < 200_000, "only {found} subsuming pairs found");
        let s = &samples[rng.gen_range(0..samples.len())];
        let l1 = &lats[rng.gen_range(0..lats.len())];
        let l2 = &lats[rng.gen_range(0..lats.len())];
        let g1 = random_env(rng.gen(), l1, &s.vars);
        let mut g1p = spc(l1.bottom(), &g1, &s.program)?;
        for x in &s.vars {
            if rng.gen_bool(0.3) {
                let bumped = l1.join(g1p.get(x)?, l1.sample(&mut rng));
                g1p.set(x, bumped);
            }
        }
        let g2 = random_env(rng.gen(), l2, &s.vars);
        let g2p = random_env(rng.gen(), l2, &s.vars);
        if !subsumes((&g1, &g1p), (&g2, &g2p))? {
            continue;
        }
        ensure!(judge(l1.bottom(), &g1, &s.program, &g1p), "first typing should be accepted");
        ensure!(
            judge(l2.bottom(), &g2, &s.program, &g2p),
            "subsumed typing rejected: {} from {} to {}",
            s.program,
            l1.name(),
            l2.name()
        );
        found += 1;
    }
    println!("  internal completeness: 100 pairs in {attempts} attempts");
    Ok(())
}

fn smallest_and_duality() -> Result<()> {
    for s in corpus(200) {
        let pt = principal(&s.program, s.vars.iter().cloned())?;
        for (li, lat) in lattices_for(&s.vars).iter().enumerate() {
            let pre = random_env(s.seed * 5 + li as u64, lat, &s.vars);
            ensure!(
                derive_smallest(&pt, &pre)? == spc(lat.bottom(), &pre, &s.program)?,
                "derive_smallest differs for seed {}",
                s.seed
            );
        }
        let nabla = to_independence(&pt.delta_c)?;
        ensure!(from_independence(&nabla)? == pt.delta_c, "complement is not an involution");
        let d0 = to_independence(&pt.delta0)?;
        ensure!(
            pt.delta0.leq(&pt.delta_c)? == d0.preceq(&nabla),
            "order not reversed for seed {}",
            s.seed
        );
        let other = principal(&gen_other(s.seed, &s.vars), s.vars.iter().cloned())?;
        ensure!(
            other.delta_c.leq(&pt.delta_c)? == to_independence(&other.delta_c)?.preceq(&nabla),
            "order not reversed for seed {}",
            s.seed
        );
    }
    Ok(())
}

fn gen_other(seed: u64, vars: &[String]) -> Command {
    flowlat::harness::gen_program(seed + 10_000, 3, vars)
}

fn greatest_maximality() -> Result<()> {
    let lat = two_point();
    let samples: Vec<_> = corpus(200).into_iter().filter(|s| s.vars.len() <= 3).take(60).collect();
    for s in &samples {
        let pt = principal(&s.program, s.vars.iter().cloned())?;
        let oracle = DeclarativeOracle::new(lat.clone(), &s.vars.iter().map(String::as_str).collect::<Vec<_>>());
        for post in &oracle.envs {
            let post = oracle.to_env(post);
            let g = derive_greatest(&pt, &post)?;
            for pre in &oracle.envs {
                let pre = oracle.to_env(pre);
                ensure!(
                    judge(lat.bottom(), &pre, &s.program, &post) == pre.leq(&g)?,
                    "seed {}: {} with post {} and greatest {}",
                    s.seed,
                    s.program,
                    post,
                    g
                );
            }
        }
    }
    Ok(())
}

fn translation() -> Result<()> {
    let config = HarnessConfig::default();
    for s in corpus(200) {
        for (li, lat) in lattices_for(&s.vars).iter().enumerate() {
            let pre = random_env(s.seed * 11 + li as u64, lat, &s.vars);
            let r = translate(lat.bottom(), &pre, &s.program)?;
            ensure!(r.post == spc(lat.bottom(), &pre, &s.program)?, "post differs for seed {}", s.seed);
            ensure!(check_fixed(lat, lat.bottom(), &r.output)?, "fixed check rejects {}", r.output);
            let eq = equiv_check(&s.program, &r.output, &pre, &r.post, &config)?;
            ensure!(eq.passed(), "translation of {} differs: {:?}", s.program, eq.witness);
        }
    }
    Ok(())
}

fn weakening() -> Result<()> {
    for s in corpus(200) {
        for (li, lat) in lattices_for(&s.vars).iter().enumerate() {
            let seed = s.seed * 13 + li as u64;
            let pre = random_env(seed, lat, &s.vars);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = lat.sample(&mut rng);
            let post = spc(p, &pre, &s.program)?;
            for (x, before) in pre.iter() {
                let after = post.get(x)?;
                ensure!(before == after || lat.leq(p, after), "{x} changed without rising to pc");
            }
            let r = translate(p, &pre, &s.program)?;
            ensure!(check_fixed(lat, p, &r.output)?, "translation rejected at its own pc");
            for _ in 0..4 {
                let lower = lat.meet(p, lat.sample(&mut rng));
                ensure!(check_fixed(lat, lower, &r.output)?, "fixed check not weakened to a lower pc");
            }
        }
    }
    Ok(())
}

fn criterion_9() -> Result<()> {
    let parts: [(&str, Check); 8] = [
        ("galois laws", galois_laws),
        ("monotone renaming", monotone_renaming),
        ("canonical derivations", canonical_derivations),
        ("internal completeness", internal_completeness),
        ("smallest typing and duality", smallest_and_duality),
        ("greatest pre-environment", greatest_maximality),
        ("translation", translation),
        ("weakening", weakening),
    ];
    let mut failed = Vec::new();
    for (name, f) in parts {
        match f() {
            Ok(()) => println!("  ok   {name}"),
            Err(e) => {
                println!("  FAIL {name}: {e:#}");
                failed.push(name);
            }
        }
    }
    if !failed.is_empty() {
        bail!("failed: {}", failed.join(", "));
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 9] = [
        ("1 principal typing of the conditional", criterion_1),
        ("2 diamond least typing and subsumption", criterion_2),
        ("3 low-reuse check, transform, check-fixed", criterion_3),
        ("4 traced translation over the diamond", criterion_4),
        ("5 incomplete but noninterferent", criterion_5),
        ("6 quadratic copy growth", criterion_6),
        ("7 soundness corpus", criterion_7),
        ("8 declarative oracle agreement", criterion_8),
        ("9 property suite", criterion_9),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = match panic::catch_unwind(AssertUnwindSafe(f)) {
            Ok(r) => r,
            Err(p) => Err(anyhow!(
                "panic: {}",
                p.downcast_ref::<String>().map(String::as_str).or(p.downcast_ref::<&str>().copied()).unwrap_or("?")
            )),
        };
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("PASS criterion {name} ({secs:.1}s)"),
            Err(e) => {
                failures += 1;
                println!("FAIL criterion {name} ({secs:.1}s): {e:#}");
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
