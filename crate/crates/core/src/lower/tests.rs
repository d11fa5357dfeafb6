use super::*;
use crate::frontend::parse;
use crate::ir::{print_ir, verify_program, CheckpointKind};

fn lower_src(src: &str) -> Program {
    let p = lower_program(&parse(src).unwrap());
    verify_program(&p).unwrap();
    p
}

fn opcodes(code: &Code) -> Vec<&'static str> {
    code.instrs().map(|i| i.opcode()).collect()
}

#[test]
fn answer_matches_listing() {
    let p = lower_src("function(){answer<-42; answer}");
    assert_eq!(
        print_ir(p.function(1).baseline()),
        "version []
BB0:
  e0 = MkEnv(: G)
  %1 = LdConst [1] 42
  StVar(answer, %1, e0)
  %3 = LdVar(answer, e0)
  %4 = Force(%3) e0
  Return(%4)
"
    );
}

#[test]
fn call_argument_becomes_promise() {
    let p = lower_src("f(a+b)");
    let top = p.function(0).baseline();
    assert_eq!(opcodes(&top.body), ["LdFun", "MkArg", "Call", "Return"]);
    let mut ops = opcodes(&top.promises[&0]);
    ops.sort();
    assert_eq!(ops, ["Add", "Force", "Force", "LdVar", "LdVar", "Return"]);
}

#[test]
fn parameter_is_bound_at_entry() {
    let p = lower_src("f <- function(b) b");
    let text = print_ir(p.function(1).baseline());
    assert!(text.contains("%0 = LdArg(0)"));
    assert!(text.contains("e1 = MkEnv(b=%0 : G)"));
    assert_eq!(p.function(1).name, "f");
}

#[test]
fn inner_functions_close_over_open_env() {
    let p = lower_src("g <- function() { a <- 1; f <- function(b) b + a; f(2) }");
    let f = print_ir(p.function(2).baseline());
    assert!(f.contains("MkEnv(b=%0 : O)"), "{f}");
    let g = print_ir(p.function(1).baseline());
    assert!(g.contains("MkClosure(fun2, e0)"), "{g}");
    assert!(g.contains("MkArg(pr0, e0)"), "{g}");
}

#[test]
fn literals_assigned_without_force() {
    let p = lower_src("function() { x <- 42 }");
    assert!(!opcodes(&p.function(1).baseline().body).contains(&"Force"));
}

#[test]
fn lazy_and_strict_positions() {
    let e = parse("f(x)").unwrap();
    let ExprKind::Block(s) = &e.kind else { panic!() };
    assert!(strict_positions(&s[0], 0));
    assert!(!strict_positions(&s[0], 1));
    let e = parse("if (b) 1").unwrap();
    let ExprKind::Block(s) = &e.kind else { panic!() };
    assert!(strict_positions(&s[0], 0));
}

#[test]
fn checkpoint_counts() {
    let p = lower_src("f <- function(x) g(x)\nh <- function(x) x + 1");
    let count = |id: u32| {
        p.function(id).checkpoints.iter().filter(|c| c.kind != CheckpointKind::AfterCall).count()
    };
    assert_eq!(count(1), 2);
    assert_eq!(count(2), 1);
}

#[test]
fn while_loop_shape() {
    let p = lower_src("i <- 0\nwhile (i < 3) i <- i + 1\ni");
    assert!(p.function(0).baseline().body.blocks.len() >= 4);
}

#[test]
fn facts_for_stable_globals_and_reflection() {
    let p = lower_src("f <- function() 1\ng <- function() 2\ng <- 3\nh <- function() get(\"f\", environment())");
    assert!(p.facts.stable_globals.get("f").is_none());
    assert!(p.facts.stable_globals.get("g").is_none());
    assert_eq!(p.facts.stable_globals.get("h"), Some(&3));
    assert!(p.facts.env_reflective);
    assert!(!p.facts.frame_reflective);
}
