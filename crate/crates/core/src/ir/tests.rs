use super::*;

const ANSWER: &str = "version []
BB0:
  e0 = MkEnv(: G)
  %1 = LdConst [1] 42
  StVar(answer, %1, e0)
  %3 = LdVar(answer, e0)
  %4 = Force(%3) e0
  Return(%4)
";

#[test]
fn answer_listing_round_trips() {
    let v = parse_ir(ANSWER).unwrap();
    assert_eq!(v.body.instr_count(), 6);
    assert!(verify(&v).is_ok());
    assert_eq!(print_ir(&v), ANSWER);
}

#[test]
fn empty_body_is_one_line() {
    let v = parse_ir("version []\nBB0:\n  Return(_)\n").unwrap();
    assert!(verify(&v).is_ok());
    assert_eq!(print_ir(&v).lines().filter(|l| l.starts_with("  ")).count(), 1);
}

#[test]
fn use_in_other_branch_is_rejected() {
    let v = parse_ir(
        "version []
BB0:
  %0 = LdConst [1] TRUE
  Branch(%0, BB1, BB2)
BB1:
  %4 = LdConst [1] 1
  Branch(BB3)
BB2:
  Branch(BB3)
BB3:
  Return(%4)
",
    )
    .unwrap();
    let errs = verify(&v).unwrap_err();
    assert!(errs.iter().any(|e| e.0.contains("not dominated by def")), "{errs:?}");
}

#[test]
fn two_returns_in_a_block() {
    let v = parse_ir("version []\nBB0:\n  %0 = LdConst NULL\n  Return(%0)\n  Return(%0)\n").unwrap();
    let errs = verify(&v).unwrap_err();
    assert!(errs.iter().any(|e| e.0.contains("terminator mid-block")));
}

#[test]
fn replace_load_by_stored_register() {
    let mut v = parse_ir(ANSWER).unwrap();
    replace_uses(&mut v, 3, Operand::Reg(1)).unwrap();
    assert!(print_ir(&v).contains("%4 = Force(%1) e0"));
    assert!(verify(&v).is_ok());
}

#[test]
fn replace_unused_register_is_identity() {
    let before = parse_ir(ANSWER).unwrap();
    let mut w = before.clone();
    replace_uses(&mut w, 99, Operand::Reg(1)).unwrap();
    assert_eq!(w, before);
}

#[test]
fn later_definition_cannot_replace() {
    let mut v = parse_ir(ANSWER).unwrap();
    assert!(replace_uses(&mut v, 1, Operand::Reg(3)).is_err());
}

#[test]
fn every_instruction_form_round_trips() {
    let text = "version [EagerArgs, NoReflectiveWrite]
BB0:
  %0 = LdArg(0)
  e1 = MkEnv(a=%0, b=_ : G) stub
  %2 = LdFun(f, e1)
  %3 = MkArg(pr0, e1)
  %4 = Call %2 (%3, %0) e1
  %5 = IsMaterialized(e1)
  Branch(%5, BB1, BB2)
BB1:
  Deopt(cp2, [%7=%4, %8=_], e1)
BB2:
  %6 = MkClosure(fun3, e1)
  %9 = LdConst [3] \"a\", \"b,c\", \"\\\"q\\\"\"
  %10 = LdConst [2] TRUE, FALSE
  %11 = LdConst [2] -1.5, 1e300
  %12 = Colon(%4, %4) e1
  StVar(x.y, %12, e1)
  %13 = LdConst [0] num
  Branch(BB3)
BB3:
  %14 = Phi(BB2:%13)
  Return(%14)
promise pr0:
BB4:
  %20 = LdVar(a, e1)
  %21 = Force(%20) e1
  Return(%21)
";
    let v = parse_ir(text).unwrap();
    let printed = print_ir(&v);
    assert_eq!(parse_ir(&printed).unwrap(), v);
    assert_eq!(print_ir(&parse_ir(&printed).unwrap()), printed);
}

#[test]
fn parse_errors_report_line() {
    let e = parse_ir("version []\nBB0:\n  %0 = Frobnicate(1)\n").unwrap_err();
    assert_eq!(e.line, 3);
}
