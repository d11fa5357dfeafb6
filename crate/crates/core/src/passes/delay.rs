use std::collections::BTreeSet;

use super::resolve::ssa_value;
use super::FnCtx;
use crate::ir::{Instr, InstrKind, Location, Operand, Reg};

/// Environments only written to and handed to deoptimization: their
/// creation moves onto the deoptimizing paths.
fn candidates(cx: &FnCtx) -> Vec<Reg> {
    let mut out = Vec::new();
    for i in cx.v.body.instrs() {
        let (Some(e), InstrKind::MkEnv { stub: false, .. }) = (i.dst, &i.kind) else { continue };
        let r = Operand::Reg(e);
        let mut deopts = 0;
        let ok = cx.v.all_instrs().all(|j| {
            if !j.uses_reg(e) {
                return true;
            }
            match &j.kind {
                InstrKind::Deopt { env, bindings, .. } if *env == r && bindings.iter().all(|(_, o)| *o != r) => {
                    deopts += 1;
                    true
                }
                InstrKind::StVar { env, value, .. } => *env == r && *value != r,
                _ => false,
            }
        });
        if ok && deopts > 0 && !cx.v.promises.values().any(|c| c.instrs().any(|j| j.uses_reg(e))) {
            out.push(e);
        }
    }
    out
}

fn deopt_using(cx: &FnCtx, e: Reg) -> Option<Location> {
    cx.v.body.iter().find(|(_, i)| matches!(i.kind, InstrKind::Deopt { env: Operand::Reg(x), .. } if x == e)).map(|(l, _)| l)
}

pub fn delay_environments(cx: &mut FnCtx) -> bool {
    let mut changed = false;
    for e in candidates(cx) {
        let saved = (cx.v.clone(), cx.fresh.clone());
        if delay_one(cx, e).is_some() {
            changed = true;
        } else {
            (cx.v, cx.fresh) = saved;
        }
    }
    changed
}

fn delay_one(cx: &mut FnCtx, e: Reg) -> Option<()> {
    let (parent, mut names) = cx.v.body.instrs().find_map(|i| match &i.kind {
        InstrKind::MkEnv { bindings, parent, .. } if i.dst == Some(e) => {
            Some((*parent, bindings.iter().map(|(n, _)| n.clone()).collect::<BTreeSet<String>>()))
        }
        _ => None,
    })?;
    for i in cx.v.body.instrs() {
        if let InstrKind::StVar { name, .. } = &i.kind {
            if i.uses_reg(e) {
                names.insert(name.clone());
            }
        }
    }
    while let Some(loc) = deopt_using(cx, e) {
        let mut bindings = Vec::new();
        for n in &names {
            let at = deopt_using(cx, e).unwrap_or(loc);
            let val = ssa_value(&mut cx.v, &mut cx.fresh, e, n, at, Some(Operand::Missing))?;
            bindings.push((n.clone(), val));
        }
        let at = deopt_using(cx, e)?;
        let r = cx.fresh.reg();
        let blk = &mut cx.v.body.blocks[at.block];
        blk.instrs.insert(at.index, Instr::new(Some(r), InstrKind::MkEnv { bindings, parent, stub: false }));
        if let Some(env) = blk.instrs[at.index + 1].env_mut() {
            *env = Operand::Reg(r);
        }
    }
    for b in cx.v.body.blocks.iter_mut() {
        b.instrs.retain(|i| i.dst != Some(e) && !matches!(&i.kind, InstrKind::StVar { env: Operand::Reg(x), .. } if *x == e));
    }
    Some(())
}
