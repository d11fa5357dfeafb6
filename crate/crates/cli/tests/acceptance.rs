//! One line per acceptance criterion, then a single assertion over all of them.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use pir::gen::{generate, GenConfig};
use pir::ir::{print_ir, Const, InstrKind, Program, Version};
use pir::passes::Pass;
use pir_cli::driver::{self, Config};

#[path = "../../core/tests/support/props.rs"]
mod props;

type Check = Result<String, String>;

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn pirc(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_pirc")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn optimized(name: &str) -> (Program, Program) {
    let p = driver::load_file(&corpus(name)).unwrap();
    let o = driver::optimize(&p, &Config::full().pipeline).unwrap();
    (p, o)
}

fn version<'a>(p: &'a Program, fun: &str) -> &'a Version {
    &p.functions.iter().find(|f| f.name == fun).unwrap().versions[1]
}

fn ops(v: &Version) -> Vec<&'static str> {
    let mut ops: Vec<_> = v.all_instrs().map(|i| i.opcode()).collect();
    ops.sort();
    ops
}

fn expect(cond: bool, ok: String, bad: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(ok)
    } else {
        Err(bad())
    }
}

fn within(start: Instant, limit: Duration) -> Check {
    let t = start.elapsed().as_secs_f64();
    expect(t <= limit.as_secs_f64(), format!("{:.1}s", t), || format!("took {:.1}s, limit {}s", t, limit.as_secs()))
}

fn answer_golden() -> Check {
    let (_, o) = optimized("answer.mr");
    let v = version(&o, "f");
    expect(ops(v) == ["LdConst", "Return"], "f is LdConst; Return".into(), || print_ir(v))
}

fn diamond_golden() -> Check {
    let (_, o) = optimized("diamond.mr");
    let v = version(&o, "f");
    let want = ["Branch", "Branch", "Branch", "LdConst", "LdConst", "LdVar", "Phi", "Return"];
    let defs = v.body.defs();
    let phis: Vec<_> = v.body.instrs().filter(|i| i.is_phi()).collect();
    let phi_of_consts = phis.len() == 1
        && matches!(&phis[0].kind, InstrKind::Phi(ins) if ins.len() == 2 && ins.iter().all(|(_, o)| {
            o.reg().is_some_and(|r| matches!(v.body.instr(defs[&r]).kind, InstrKind::LdConst(_)))
        }));
    expect(ops(v) == want && phi_of_consts, "one Phi of two LdConst, no MkEnv, no Force".into(), || print_ir(v))
}

fn closure_call_golden() -> Check {
    let (_, o) = optimized("closure_call.mr");
    let v = version(&o, "g");
    let three = matches!(&v.body.blocks[0].instrs[0].kind, InstrKind::LdConst(c) if *c == Const::num(3.0));
    let (code, out) = pirc(&["run", corpus("closure_call.mr").to_str().unwrap()]);
    expect(
        ops(v) == ["LdConst", "Return"] && three && code == 0 && out.trim() == "[3]",
        "g is LdConst 3; Return, run prints [3]".into(),
        || format!("{}\nrun: {} {}", print_ir(v), code, out),
    )
}

fn twisters() -> Check {
    for t in ["twister_a", "twister_b", "twister_c", "twister_d"] {
        let (code, out) = pirc(&["diff", corpus(&format!("{t}.mr")).to_str().unwrap()]);
        if code != 0 {
            return Err(format!("{t}: diff exit {code}\n{out}"));
        }
    }
    Ok(format!("all four agree with baseline under {} configurations", Config::all().len()))
}

fn deopt() -> Check {
    let (p, o) = optimized("deopt_write.mr");
    let base = driver::run_baseline(&p);
    let opt = driver::run_optimized(&o);
    expect(
        opt.counters.deopts_taken >= 1 && opt.outcome() == base.outcome() && opt.trace == base.trace,
        format!("deopts_taken={} output {}", opt.counters.deopts_taken, opt.outcome()),
        || format!("deopts_taken={} {} vs {}", opt.counters.deopts_taken, opt.outcome(), base.outcome()),
    )
}

fn dynamic_reduction() -> Check {
    let start = Instant::now();
    let (p, o) = optimized("mandelbrot_like.mr");
    let base = driver::run_baseline(&p).counters.envs_created;
    let opt = driver::run_optimized(&o).counters.envs_created;
    if opt * 2 > base {
        return Err(format!("mandelbrot_like: {opt} envs vs baseline {base}"));
    }
    let cfg = GenConfig::default();
    for seed in 0..1000 {
        let p = driver::load(&generate(seed, &cfg)).map_err(|e| format!("seed {seed}: {e}"))?;
        let b = driver::run_baseline(&p);
        if driver::hit_limit(&b) {
            continue;
        }
        let o = driver::optimize(&p, &Config::full().pipeline).map_err(|e| format!("seed {seed}: {e}"))?;
        let r = driver::run_optimized(&o);
        if r.counters.envs_created > b.counters.envs_created {
            return Err(format!("seed {seed}: {} envs vs baseline {}", r.counters.envs_created, b.counters.envs_created));
        }
    }
    let t = within(start, Duration::from_secs(60))?;
    Ok(format!("mandelbrot_like {opt}/{base} envs, 1000 seeds no worse, {t}"))
}

fn field<'a>(line: &'a str, key: &str) -> &'a str {
    line.split_whitespace().find_map(|kv| kv.strip_prefix(key)?.strip_prefix('=')).unwrap_or("")
}

fn static_elision() -> Check {
    let start = Instant::now();
    let (code, out) = pirc(&["stats", corpus("").to_str().unwrap()]);
    if code != 0 {
        return Err(format!("stats exit {code}"));
    }
    let mut n = 0;
    for line in out.lines() {
        let name = field(line, "program");
        let p = driver::load_file(&corpus(&format!("{name}.mr"))).unwrap();
        let no_env: f64 = field(line, "pct_no_env").parse().unwrap();
        let stub_env: f64 = field(line, "pct_stub_env").parse().unwrap();
        if ["answer", "diamond"].contains(&name) && no_env != 100.0 {
            return Err(format!("{name}: pct_no_env={no_env}"));
        }
        if !p.facts.env_reflective {
            n += 1;
            if no_env + stub_env <= 0.0 {
                return Err(format!("{name}: nothing elided or stubbed"));
            }
        }
    }
    let t = within(start, Duration::from_secs(5))?;
    Ok(format!("{n} reflection-free programs elide or stub, answer and diamond 100% no-env, {t}"))
}

fn property_suites() -> Check {
    let start = Instant::now();
    let suites: [(&str, fn()); 4] = [
        ("dominators", props::dominators_match_path_definition),
        ("monotonicity", props::transfer_functions_are_monotone),
        ("scope soundness", props::scope_analysis_predicts_observed_stores),
        ("per-pass equivalence", props::every_pass_preserves_behaviour),
    ];
    for (name, f) in suites {
        catch_unwind(f).map_err(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            format!("{name}: {}", msg.unwrap_or_default())
        })?;
    }
    let t = within(start, Duration::from_secs(300))?;
    Ok(format!("all four suites hold, {t}"))
}

fn ablations() -> Check {
    let start = Instant::now();
    let p = driver::load_file(&corpus("mandelbrot_like.mr")).unwrap();
    let configs = [Config::full(), Config::without(Pass::Scope), Config::without(Pass::PromiseInline)];
    let results = driver::compare(&p, &configs).map_err(|e| e.to_string())?;
    let full = results[0].optimized.counters.envs_created;
    for c in &results {
        if !c.matches() || c.optimized.outcome() != results[0].optimized.outcome() {
            return Err(c.to_string());
        }
        if c.optimized.counters.envs_created < full {
            return Err(format!("{}: {} envs below full pipeline {full}", c.config, c.optimized.counters.envs_created));
        }
    }
    let envs: Vec<String> =
        results.iter().map(|c| format!("{}={}", c.config, c.optimized.counters.envs_created)).collect();
    let t = within(start, Duration::from_secs(10))?;
    Ok(format!("same output, envs {}, {t}", envs.join(" ")))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("answer golden", answer_golden),
        ("diamond golden", diamond_golden),
        ("closure call golden", closure_call_golden),
        ("twisters", twisters),
        ("deoptimization", deopt),
        ("dynamic env reduction", dynamic_reduction),
        ("static env elision", static_elision),
        ("property suites", property_suites),
        ("ablations", ablations),
    ];
    // Written past the test harness capture so the lines always show.
    let mut out = std::io::stdout().lock();
    let mut failed = Vec::new();
    for (k, (name, check)) in criteria.into_iter().enumerate() {
        let r = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match r {
            Ok(msg) => writeln!(out, "PASS {} {}: {}", k + 1, name, msg).unwrap(),
            Err(msg) => {
                writeln!(out, "FAIL {} {}: {}", k + 1, name, msg).unwrap();
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
