use super::*;
use crate::cfg::compute_dominators;
use crate::ir::{parse_ir, Location, ProgramFacts, Version};

const DIAMOND: &str = "version []
BB0:
  e1 = MkEnv(: G)
  %2 = LdConst [1] TRUE
  Branch(%2, BB1, BB2)
BB1:
  %4 = LdConst [1] 1
  StVar(x, %4, e1)
  Branch(BB3)
BB2:
  %7 = LdConst [1] 2
  StVar(x, %7, e1)
  Branch(BB3)
BB3:
  %10 = LdVar(x, e1)
  %11 = Force(%10) e1
  Return(%11)
";

fn scope_of(v: &Version, facts: &ProgramFacts) -> (ScopeAnalysis, Solution<ScopeState>) {
    let a = ScopeAnalysis::new(v, facts);
    let dom = compute_dominators(&v.body);
    let s = a.solve(v, &dom);
    (a, s)
}

fn at(b: usize, i: usize) -> AbsLoc {
    AbsLoc::At(Location::new(b, i))
}

fn set(ls: &[AbsLoc]) -> Cell {
    Cell::Set(ls.iter().copied().collect())
}

#[test]
fn empty_env_marks_mentioned_names_undefined() {
    let v = parse_ir(DIAMOND).unwrap();
    let (_, s) = scope_of(&v, &ProgramFacts::default());
    assert_eq!(s.at(Location::new(0, 1)).get(1, "x"), Cell::single(AbsLoc::Undefined));
}

#[test]
fn diamond_merges_both_stores() {
    let v = parse_ir(DIAMOND).unwrap();
    let (_, s) = scope_of(&v, &ProgramFacts::default());
    assert_eq!(s.at(Location::new(3, 0)).get(1, "x"), set(&[at(1, 1), at(2, 1)]));
}

#[test]
fn straight_line_store_reaches_load() {
    let v = parse_ir(
        "version []
BB0:
  e0 = MkEnv(: G)
  %1 = LdConst [1] 42
  StVar(answer, %1, e0)
  %3 = LdVar(answer, e0)
  %4 = Force(%3) e0
  Return(%4)
",
    )
    .unwrap();
    let (_, s) = scope_of(&v, &ProgramFacts::default());
    assert_eq!(s.at(Location::new(0, 3)).get(0, "answer"), Cell::single(at(0, 2)));
}

#[test]
fn loop_store_joins_with_undefined() {
    let v = parse_ir(
        "version []
BB0:
  e0 = MkEnv(: G)
  Branch(BB1)
BB1:
  %2 = LdConst [1] TRUE
  Branch(%2, BB2, BB3)
BB2:
  %4 = LdConst [1] 1
  StVar(i, %4, e0)
  Branch(BB1)
BB3:
  %7 = LdVar(i, e0)
  Return(%7)
",
    )
    .unwrap();
    let (_, s) = scope_of(&v, &ProgramFacts::default());
    let want = set(&[AbsLoc::Undefined, at(2, 1)]);
    assert_eq!(s.at(Location::new(1, 0)).get(0, "i"), want);
    assert_eq!(s.at(Location::new(3, 0)).get(0, "i"), want);
}

const CALLS: &str = "version []
BB0:
  e0 = MkEnv(: G)
  %1 = LdConst [1] 1
  StVar(x, %1, e0)
  %3 = LdFun(f, G)
  %4 = Call %3 () e0
  %5 = LdVar(x, e0)
  Return(%5)
";

#[test]
fn call_taints_defined_cells_in_reflective_programs() {
    let v = parse_ir(CALLS).unwrap();
    let facts = ProgramFacts { env_reflective: true, ..Default::default() };
    let (_, s) = scope_of(&v, &facts);
    assert_eq!(s.at(Location::new(0, 5)).get(0, "x"), Cell::Top);
    // Empty cells stay empty.
    assert!(s.at(Location::new(0, 5)).get(0, "y").is_empty());
}

#[test]
fn call_keeps_cells_without_reflection_or_writing_promises() {
    let v = parse_ir(CALLS).unwrap();
    let (_, s) = scope_of(&v, &ProgramFacts::default());
    assert_eq!(s.at(Location::new(0, 5)).get(0, "x"), Cell::single(at(0, 2)));
}

#[test]
fn stub_envs_are_not_tainted() {
    let v = parse_ir(&CALLS.replace("e0 = MkEnv(: G)", "e0 = MkEnv(: G) stub")).unwrap();
    let facts = ProgramFacts { env_reflective: true, ..Default::default() };
    let (_, s) = scope_of(&v, &facts);
    assert_eq!(s.at(Location::new(0, 5)).get(0, "x"), Cell::single(at(0, 2)));
}

#[test]
fn writing_promise_taints_its_env() {
    let v = parse_ir(
        "version []
BB0:
  e0 = MkEnv(: G)
  %1 = LdConst [1] 1
  StVar(x, %1, e0)
  %3 = MkArg(pr0, e0)
  %4 = Force(%3) e0
  %5 = LdVar(x, e0)
  Return(%5)
promise pr0:
BB1:
  %6 = LdConst [1] 2
  StVar(x, %6, e0)
  Return(%6)
",
    )
    .unwrap();
    let (_, s) = scope_of(&v, &ProgramFacts::default());
    assert_eq!(s.at(Location::new(0, 5)).get(0, "x"), Cell::Top);
}

#[test]
fn force_of_constant_and_eager_argument_do_not_taint() {
    let src = "version [EagerArgs]
BB0:
  %0 = LdArg(0)
  e1 = MkEnv(a=%0 : G)
  %2 = LdConst [1] 1
  %3 = Force(%2) e1
  %4 = Force(%0) e1
  %5 = LdVar(a, e1)
  Return(%5)
";
    let v = parse_ir(src).unwrap();
    let facts = ProgramFacts { env_reflective: true, ..Default::default() };
    let (_, s) = scope_of(&v, &facts);
    assert_eq!(s.at(Location::new(0, 5)).get(1, "a"), Cell::single(at(0, 1)));
    let lazy = parse_ir(&src.replace("[EagerArgs]", "[]")).unwrap();
    let (_, s) = scope_of(&lazy, &facts);
    assert_eq!(s.at(Location::new(0, 5)).get(1, "a"), Cell::Top);
}

fn promise_states(src: &str) -> (Version, PromiseAnalysis, Solution<PromState>) {
    let v = parse_ir(src).unwrap();
    let a = PromiseAnalysis::new(&v, ScopeAnalysis::new(&v, &ProgramFacts::default()));
    let s = a.solve(&v, &compute_dominators(&v.body));
    (v, a, s)
}

const PROMISE: &str = "version []
BB0:
  %0 = MkArg(pr0, G)
  %1 = Force(%0) G
  %2 = Return(%1)
promise pr0:
BB1:
  %3 = LdConst [1] 2
  Return(%3)
";

#[test]
fn first_force_records_location() {
    let (v, a, s) = promise_states(&PROMISE.replace("%2 = Return", "Return"));
    assert_eq!(s.after(Location::new(0, 1)).get(0), PromAbs::Forced(Location::new(0, 1)));
    assert_eq!(a.inlinable(&v, &s), vec![(0, Location::new(0, 1))]);
}

#[test]
fn leaked_then_forced_is_top() {
    let src = "version []
BB0:
  %0 = MkArg(pr0, G)
  e1 = MkEnv(b=%0 : G)
  %2 = Force(%0) e1
  Return(%2)
promise pr0:
BB1:
  %3 = LdConst [1] 2
  Return(%3)
";
    let (v, a, s) = promise_states(src);
    assert_eq!(s.at(Location::new(0, 2)).get(0), PromAbs::Leaked);
    assert_eq!(s.after(Location::new(0, 2)).get(0), PromAbs::Top);
    assert!(a.inlinable(&v, &s).is_empty());
}

#[test]
fn forces_on_different_branches_merge_to_top() {
    let src = "version []
BB0:
  %0 = MkArg(pr0, G)
  %1 = LdConst [1] TRUE
  Branch(%1, BB1, BB2)
BB1:
  %3 = Force(%0) G
  Branch(BB3)
BB2:
  %5 = Force(%0) G
  Branch(BB3)
BB3:
  %7 = Phi(BB1:%3, BB2:%5)
  Return(%7)
promise pr0:
BB4:
  %8 = LdConst [1] 2
  Return(%8)
";
    let (v, a, s) = promise_states(src);
    assert_eq!(s.at(Location::new(3, 0)).get(0), PromAbs::Top);
    assert!(a.inlinable(&v, &s).is_empty());
}

#[test]
fn lattice_joins() {
    let l1 = PromAbs::Forced(Location::new(0, 1));
    let l2 = PromAbs::Forced(Location::new(0, 2));
    assert_eq!(l1.join(l2), PromAbs::Top);
    assert_eq!(PromAbs::Bot.join(l1), l1);
    assert_eq!(PromAbs::Leaked.join(l1), PromAbs::Top);
    assert!(PromAbs::Bot.leq(PromAbs::Leaked));
    assert!(!l1.leq(PromAbs::Leaked));
}

#[test]
fn escape_classes() {
    let v = parse_ir(
        "version []
BB0:
  e0 = MkEnv(: G)
  e1 = MkEnv(: G)
  %2 = MkClosure(fun1, e1)
  e3 = MkEnv(: G)
  %4 = LdFun(f, G)
  %5 = Call %4 () e3
  Return(%5)
",
    )
    .unwrap();
    let plain = escape_analysis(&v, &ProgramFacts::default());
    assert_eq!(plain[&0].class, EnvClass::NoEscape);
    assert_eq!(plain[&1].class, EnvClass::Escapes);
    assert_eq!(plain[&3].class, EnvClass::NoEscape);
    let refl = escape_analysis(&v, &ProgramFacts { env_reflective: true, ..Default::default() });
    assert_eq!(refl[&3].class, EnvClass::StubEligible);
}

#[test]
fn known_values_through_phis() {
    let v = parse_ir(DIAMOND).unwrap();
    let k = known_values(&v);
    assert!(k.contains(&4) && k.contains(&7) && k.contains(&11));
    assert!(!k.contains(&10));
}
