use std::collections::BTreeSet;
use std::fmt::Write;

use super::{Code, Const, Instr, InstrKind, Location, Operand, Program, Reg, Version};
use crate::frontend::print::{format_num, quote_str};

pub fn format_const(c: &Const) -> String {
    match c {
        Const::Null => "NULL".to_string(),
        Const::Num(v) if v.is_empty() => "[0] num".to_string(),
        Const::Lgl(v) if v.is_empty() => "[0] lgl".to_string(),
        Const::Str(v) if v.is_empty() => "[0] str".to_string(),
        Const::Num(v) => format!("[{}] {}", v.len(), v.iter().map(|x| format_num(*x)).collect::<Vec<_>>().join(", ")),
        Const::Lgl(v) => format!(
            "[{}] {}",
            v.len(),
            v.iter().map(|b| if *b { "TRUE" } else { "FALSE" }).collect::<Vec<_>>().join(", ")
        ),
        Const::Str(v) => format!("[{}] {}", v.len(), v.iter().map(|s| quote_str(s)).collect::<Vec<_>>().join(", ")),
    }
}

struct Ctx {
    envs: BTreeSet<Reg>,
}

impl Ctx {
    fn reg(&self, r: Reg) -> String {
        if self.envs.contains(&r) {
            format!("e{}", r)
        } else {
            format!("%{}", r)
        }
    }

    fn op(&self, o: Operand) -> String {
        match o {
            Operand::Reg(r) => self.reg(r),
            Operand::Global => "G".into(),
            Operand::Open => "O".into(),
            Operand::Missing => "_".into(),
        }
    }

    fn instr(&self, i: &Instr) -> String {
        let body = match &i.kind {
            InstrKind::Binop { op, lhs, rhs, env } => {
                format!("{}({}, {}) {}", op.ir_name(), self.op(*lhs), self.op(*rhs), self.op(*env))
            }
            InstrKind::Jump(l) => format!("Branch(BB{})", l),
            InstrKind::Branch { cond, then, els } => format!("Branch({}, BB{}, BB{})", self.op(*cond), then, els),
            InstrKind::Call { callee, args, env } => format!(
                "Call {} ({}) {}",
                self.op(*callee),
                args.iter().map(|a| self.op(*a)).collect::<Vec<_>>().join(", "),
                self.op(*env)
            ),
            InstrKind::Deopt { checkpoint, bindings, env } => format!(
                "Deopt(cp{}, [{}], {})",
                checkpoint,
                bindings.iter().map(|(r, o)| format!("%{}={}", r, self.op(*o))).collect::<Vec<_>>().join(", "),
                self.op(*env)
            ),
            InstrKind::Force { value, env } => format!("Force({}) {}", self.op(*value), self.op(*env)),
            InstrKind::LdArg(n) => format!("LdArg({})", n),
            InstrKind::LdConst(c) => format!("LdConst {}", format_const(c)),
            InstrKind::LdFun { name, env } => format!("LdFun({}, {})", name, self.op(*env)),
            InstrKind::LdVar { name, env } => format!("LdVar({}, {})", name, self.op(*env)),
            InstrKind::MkArg { promise, env } => format!("MkArg(pr{}, {})", promise, self.op(*env)),
            InstrKind::MkEnv { bindings, parent, stub } => {
                let b = bindings.iter().map(|(n, o)| format!("{}={}", n, self.op(*o))).collect::<Vec<_>>();
                let sep = if b.is_empty() { "" } else { " " };
                format!(
                    "MkEnv({}{}: {}){}",
                    b.join(", "),
                    sep,
                    self.op(*parent),
                    if *stub { " stub" } else { "" }
                )
            }
            InstrKind::MkClosure { func, env } => format!("MkClosure(fun{}, {})", func, self.op(*env)),
            InstrKind::Phi(ins) => format!(
                "Phi({})",
                ins.iter().map(|(l, o)| format!("BB{}:{}", l, self.op(*o))).collect::<Vec<_>>().join(", ")
            ),
            InstrKind::Return(o) => format!("Return({})", self.op(*o)),
            InstrKind::StVar { name, value, env } => {
                format!("StVar({}, {}, {})", name, self.op(*value), self.op(*env))
            }
            InstrKind::IsMaterialized(e) => format!("IsMaterialized({})", self.op(*e)),
        };
        match i.dst {
            Some(d) => format!("{} = {}", self.reg(d), body),
            None => body,
        }
    }

    fn code(&self, c: &Code, out: &mut String, note: &dyn Fn(Location) -> Option<String>) {
        for (b, blk) in c.blocks.iter().enumerate() {
            let _ = writeln!(out, "BB{}:", blk.label);
            for (k, i) in blk.instrs.iter().enumerate() {
                let line = self.instr(i);
                match note(Location::new(b, k)) {
                    Some(n) => {
                        let _ = writeln!(out, "  {:<40} # {}", line, n);
                    }
                    None => {
                        let _ = writeln!(out, "  {}", line);
                    }
                }
            }
        }
    }
}

/// Print a version in the textual IR format accepted by `parse_ir`.
pub fn print_ir(v: &Version) -> String {
    print_version_with(v, &|_| None)
}

/// Like `print_ir`, appending `# note` comments to body instructions.
pub fn print_version_with(v: &Version, note: &dyn Fn(Location) -> Option<String>) -> String {
    let ctx = Ctx { envs: v.env_regs() };
    let mut out = String::new();
    let assumptions: Vec<&str> = v.assumptions.iter().map(|a| a.name()).collect();
    let _ = writeln!(out, "version [{}]", assumptions.join(", "));
    ctx.code(&v.body, &mut out, note);
    for (id, code) in &v.promises {
        let _ = writeln!(out, "promise pr{}:", id);
        ctx.code(code, &mut out, &|_| None);
    }
    out
}

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for f in &p.functions {
        let entry = if f.id == p.entry { " entry" } else { "" };
        let _ = writeln!(out, "function fun{} {}({}){}", f.id, f.name, f.params.join(", "), entry);
        for (k, v) in f.versions.iter().enumerate() {
            let _ = write!(out, "# version {}\n{}", k, print_ir(v));
        }
        out.push('\n');
    }
    out
}
