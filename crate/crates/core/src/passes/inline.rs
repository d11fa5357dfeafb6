use std::collections::BTreeMap;

use super::edit::{prune_unreachable, rename_code, rename_uses, splice};
use super::FnCtx;
use crate::frontend::lookup_builtin;
use crate::ir::{Code, FunId, InstrKind, Location, Operand, Reg};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InlineLimits {
    /// Largest callee, in baseline instructions, that is inlined.
    pub max_size: usize,
    /// Number of inlining rounds per version.
    pub max_depth: usize,
}

impl Default for InlineLimits {
    fn default() -> Self {
        InlineLimits { max_size: 50, max_depth: 3 }
    }
}

struct Site {
    loc: Location,
    dst: Reg,
    func: FunId,
    args: Vec<Operand>,
    /// Environment the callee closes over.
    env: Operand,
}

fn sites(cx: &FnCtx) -> Vec<Site> {
    let code = &cx.v.body;
    let defs = code.defs();
    let facts = &cx.prog.facts;
    let mut out = Vec::new();
    for (loc, i) in code.iter() {
        let InstrKind::Call { callee: Operand::Reg(c), args, .. } = &i.kind else { continue };
        let Some(def) = defs.get(c) else { continue };
        let (func, env) = match &code.instr(*def).kind {
            InstrKind::MkClosure { func, env } => (*func, *env),
            InstrKind::LdFun { name, env: Operand::Global } if lookup_builtin(name).is_none() => {
                let Some(f) = facts.stable_globals.get(name) else { continue };
                (*f, Operand::Global)
            }
            _ => continue,
        };
        let callee = cx.prog.function(func);
        let size: usize = callee.baseline().codes().map(Code::instr_count).sum();
        if func == cx.fun || callee.param_count() != args.len() || size > cx.limits.max_size {
            continue;
        }
        out.push(Site { loc, dst: i.dst.unwrap(), func, args: args.clone(), env });
    }
    out
}

/// Replace calls to known closures by the callee's body.
pub fn inline_closures(cx: &mut FnCtx) -> bool {
    if cx.prog.facts.frame_reflective || cx.inline_rounds >= cx.limits.max_depth {
        return false;
    }
    let mut found = sites(cx);
    if found.is_empty() {
        return false;
    }
    cx.inline_rounds += 1;
    // Later sites first, so earlier locations stay valid.
    found.sort_by_key(|s| std::cmp::Reverse(s.loc));
    let mut prune = false;
    for s in found {
        let callee = cx.prog.function(s.func).baseline();
        let mut regs = BTreeMap::new();
        let mut body = rename_code(&callee.body, &mut cx.fresh, &mut regs);
        let mut promises: BTreeMap<u32, Code> = BTreeMap::new();
        let mut pids = BTreeMap::new();
        for (p, c) in &callee.promises {
            let np = cx.fresh.promise();
            pids.insert(*p, np);
            promises.insert(np, rename_code(c, &mut cx.fresh, &mut regs));
        }
        // Arguments and the closure environment come from the call site.
        let mut subst: BTreeMap<Operand, Operand> = BTreeMap::new();
        subst.insert(Operand::Open, s.env);
        for b in body.blocks.iter_mut() {
            b.instrs.retain(|i| match i.kind {
                InstrKind::LdArg(k) => {
                    subst.insert(Operand::Reg(i.dst.unwrap()), s.args[k as usize]);
                    false
                }
                _ => true,
            });
        }
        for c in std::iter::once(&mut body).chain(promises.values_mut()) {
            rename_uses(c, &regs);
            for i in c.instrs_mut() {
                if let InstrKind::MkArg { promise, .. } = &mut i.kind {
                    *promise = pids[promise];
                }
                for o in i.operands_mut() {
                    if let Some(n) = subst.get(o) {
                        *o = *n;
                    }
                }
            }
        }
        cx.v.promises.extend(promises);
        let result = splice(&mut cx.v.body, s.loc, body, &mut cx.fresh);
        cx.replace(s.dst, result);
        prune |= result == Operand::Missing;
    }
    if prune {
        prune_unreachable(&mut cx.v.body);
    }
    true
}
