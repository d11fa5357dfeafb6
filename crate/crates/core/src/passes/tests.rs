use super::*;
use crate::frontend::parse;
use crate::interp::{run, RunOptions};
use crate::ir::{print_ir, verify_program, InstrKind, Program};
use crate::lower::lower_program;

fn optimized(src: &str) -> (Program, Program) {
    let p = lower_program(&parse(src).unwrap());
    let o = optimize_program(&p, &PipelineConfig::default(), &mut |e| {
        assert!(e.rejected.is_none(), "{} rejected: {:?}\n{}", e.pass, e.rejected, print_ir(e.version))
    });
    verify_program(&o).unwrap();
    (p, o)
}

fn named<'a>(p: &'a Program, name: &str) -> &'a crate::ir::FunctionDecl {
    p.functions.iter().find(|f| f.name == name).unwrap()
}

fn sorted_ops(v: &crate::ir::Version) -> Vec<&'static str> {
    let mut ops: Vec<_> = v.all_instrs().map(|i| i.opcode()).collect();
    ops.sort();
    ops
}

fn same_behaviour(base: &Program, opt: &Program) {
    let a = run(base, &RunOptions::baseline());
    let b = run(opt, &RunOptions::default());
    assert_eq!(a.outcome(), b.outcome());
    assert_eq!(a.trace, b.trace);
}

#[test]
fn answer_folds_to_constant() {
    let (p, o) = optimized("function(){answer<-42; answer}");
    let v = &o.function(1).versions[1];
    assert_eq!(sorted_ops(v), ["LdConst", "Return"], "{}", print_ir(v));
    same_behaviour(&p, &o);
}

#[test]
fn diamond_becomes_phi_of_constants() {
    let (p, o) = optimized("flag <- TRUE; f <- function(){ if (flag) x <- 1 else x <- 2; x }; f()");
    let v = &named(&o, "f").versions[1];
    assert_eq!(
        sorted_ops(v),
        ["Branch", "Branch", "Branch", "LdConst", "LdConst", "LdVar", "Phi", "Return"],
        "{}",
        print_ir(v)
    );
    let phi = v.body.instrs().find(|i| i.is_phi()).unwrap();
    let InstrKind::Phi(ins) = &phi.kind else { unreachable!() };
    let defs = v.body.defs();
    assert!(ins.iter().all(|(_, o)| matches!(v.body.instr(defs[&o.reg().unwrap()]).kind, InstrKind::LdConst(_))));
    same_behaviour(&p, &o);
}

#[test]
fn closure_call_folds_to_constant() {
    let src = "g <- function(){ a <- 1; f <- function(b) b+a; f(2) }; g()";
    let (p, o) = optimized(src);
    let v = &named(&o, "g").versions[1];
    assert_eq!(sorted_ops(v), ["LdConst", "Return"], "{}", print_ir(v));
    let InstrKind::LdConst(c) = &v.body.blocks[0].instrs[0].kind else { panic!("{}", print_ir(v)) };
    assert_eq!(*c, crate::ir::Const::num(3.0));
    assert_eq!(run(&o, &RunOptions::default()).outcome(), "[3]");
    same_behaviour(&p, &o);
}

const TWISTERS: [&str; 4] = [
    "f <- function(a,b) if (b) a\nf({x<-TRUE; x}, x)",
    "f <- function(c) { c(1,2) + c }\nf(3)",
    "bad <- function() rm(\"c\", sys.frame(-1))\nf <- function(c) { c(1,2) + c }\nf(bad())",
    "f <- function() sys.frame(-1)\ng <- function(x) { y <- 7; e <- x; get(\"y\", e) }\ng(f())",
];

#[test]
fn twisters_keep_their_behaviour() {
    for src in TWISTERS {
        let (p, o) = optimized(src);
        same_behaviour(&p, &o);
    }
}

#[test]
fn reflective_write_to_stub_deoptimizes() {
    let src = "h <- function() assign(\"x\", 2, parent.frame())\nf <- function() { x <- 1; h(); x }\nf()";
    let (p, o) = optimized(src);
    let v = &named(&o, "f").versions[1];
    assert!(v.body.instrs().any(|i| matches!(i.kind, InstrKind::MkEnv { stub: true, .. })), "{}", print_ir(v));
    let r = run(&o, &RunOptions::default());
    assert_eq!(r.outcome(), "[2]");
    assert!(r.counters.deopts_taken >= 1);
    same_behaviour(&p, &o);
}

#[test]
fn unwritten_stub_does_not_deoptimize() {
    let src = "h <- function() get(\"x\", parent.frame())\nf <- function() { x <- 1; h() }\nf()";
    let (p, o) = optimized(src);
    let r = run(&o, &RunOptions::default());
    assert_eq!(r.outcome(), "[1]");
    assert_eq!(r.counters.deopts_taken, 0);
    assert!(r.counters.stub_envs_created >= 1);
    same_behaviour(&p, &o);
}

#[test]
fn every_pass_is_reported_by_name() {
    for p in Pass::ALL {
        assert_eq!(Pass::from_name(p.name()), Some(p));
    }
    assert!(!PipelineConfig::default().without(Pass::Scope).passes.contains(&Pass::Scope));
}
