use std::collections::{BTreeMap, BTreeSet};

use super::edit::{prune_unreachable, rename_code, rename_uses, splice};
use super::FnCtx;
use crate::analysis::{PromiseAnalysis, ScopeAnalysis};
use crate::cfg::compute_dominators;
use crate::ir::{InstrKind, Operand, Reg};

/// Evaluate promises inline at the force that is certain to evaluate them
/// first, removing the promise.
pub fn inline_promises(cx: &mut FnCtx) -> bool {
    // Calls made from promise code see different frames.
    if cx.prog.facts.frame_reflective {
        return false;
    }
    let dom = compute_dominators(&cx.v.body);
    let a = PromiseAnalysis::new(&cx.v, ScopeAnalysis::new(&cx.v, &cx.prog.facts));
    let sol = a.solve(&cx.v, &dom);
    let mut found = a.inlinable(&cx.v, &sol);
    if found.is_empty() {
        return false;
    }
    let promise_of: BTreeMap<Reg, u32> = cx
        .v
        .body
        .instrs()
        .filter_map(|i| match i.kind {
            InstrKind::MkArg { promise, .. } => Some((i.dst?, promise)),
            _ => None,
        })
        .collect();
    found.sort_by_key(|(_, l)| std::cmp::Reverse(*l));
    let mut prune = false;
    let mut gone: BTreeSet<Reg> = BTreeSet::new();
    for (r, loc) in found {
        let p = promise_of[&r];
        let Some(code) = cx.v.promises.get(&p) else { continue };
        let mut regs = BTreeMap::new();
        let mut copy = rename_code(code, &mut cx.fresh, &mut regs);
        rename_uses(&mut copy, &regs);
        let dst = cx.v.body.instr(loc).dst.unwrap();
        let result = splice(&mut cx.v.body, loc, copy, &mut cx.fresh);
        cx.replace(dst, result);
        prune |= result == Operand::Missing;
        cx.v.promises.remove(&p);
        gone.insert(r);
    }
    for b in cx.v.body.blocks.iter_mut() {
        b.instrs.retain(|i| !i.dst.is_some_and(|d| gone.contains(&d)));
    }
    if prune {
        prune_unreachable(&mut cx.v.body);
    }
    true
}
