use std::collections::BTreeMap;

use super::edit::split_block;
use super::FnCtx;
use crate::analysis::{escape_analysis, EnvClass, ScopeAnalysis};
use crate::cfg::compute_dominators;
use crate::ir::{Assumption, Block, CheckpointKind, Instr, InstrKind, Location, Operand, Reg};

/// A guard to insert after the instruction at `after`.
struct Guard {
    after: Location,
    checkpoint: u32,
    bindings: Vec<(Reg, Operand)>,
}

/// Turn environments that are only accessed directly into stubs. In
/// programs that can reach environments reflectively, each point where a
/// stub may have been written is followed by a check that deoptimizes if
/// it was.
pub fn speculate_stub_envs(cx: &mut FnCtx) -> bool {
    let esc = escape_analysis(&cx.v, &cx.prog.facts);
    let cands: Vec<Reg> =
        esc.iter().filter(|(_, i)| i.class == EnvClass::StubEligible && !i.stub).map(|(e, _)| *e).collect();
    if cands.is_empty() {
        return false;
    }
    if !cx.prog.facts.env_reflective {
        set_stub(cx, &cands);
        return true;
    }
    let mut changed = false;
    for e in cands {
        if let Some(guards) = plan_guards(cx, e) {
            insert_guards(cx, e, guards);
            set_stub(cx, &[e]);
            cx.v.assumptions.insert(Assumption::NoReflectiveWrite);
            changed = true;
        }
    }
    changed
}

fn set_stub(cx: &mut FnCtx, envs: &[Reg]) {
    for i in cx.v.body.instrs_mut() {
        if let InstrKind::MkEnv { stub, .. } = &mut i.kind {
            if i.dst.is_some_and(|d| envs.contains(&d)) {
                *stub = true;
            }
        }
    }
}

/// Guards for every instruction that may write `e` reflectively, or None
/// if one of them has no resume point in the baseline.
fn plan_guards(cx: &FnCtx, e: Reg) -> Option<Vec<Guard>> {
    let decl = cx.decl();
    if decl.baseline_env != Some(e) {
        return None;
    }
    let code = &cx.v.body;
    let dom = compute_dominators(code);
    let defs = code.defs();
    let env_def = *defs.get(&e)?;
    let scope = ScopeAnalysis::new(&cx.v, &cx.prog.facts);
    let base_defs = decl.baseline().body.defs();
    let mut out = Vec::new();
    for (loc, i) in code.iter() {
        if !dom.is_reachable(loc.block) || !scope.taints(i) || !dom.dominates(env_def, loc) {
            continue;
        }
        let d = i.dst?;
        if !cx.is_original(d) {
            return None;
        }
        let b = base_defs.get(&d)?;
        let resume = Location::new(b.block, b.index + 1);
        let cp = decl.checkpoints.iter().find(|c| c.kind == CheckpointKind::AfterCall && c.location == resume)?;
        let mut bindings = Vec::new();
        for r in &cp.live {
            let o = *cx.forward.get(r)?;
            if let Operand::Reg(x) = o {
                let at = *defs.get(&x)?;
                if at != loc && !dom.dominates(at, loc) {
                    return None;
                }
            }
            if o == Operand::Missing {
                return None;
            }
            bindings.push((*r, o));
        }
        out.push(Guard { after: loc, checkpoint: cp.id, bindings });
    }
    Some(out)
}

fn insert_guards(cx: &mut FnCtx, e: Reg, mut guards: Vec<Guard>) {
    guards.sort_by_key(|g| std::cmp::Reverse(g.after));
    let mut deopt_blocks = BTreeMap::new();
    for g in guards {
        let at = Location::new(g.after.block, g.after.index + 1);
        let cont = split_block(&mut cx.v.body, at, &mut cx.fresh);
        let cont_label = cx.v.body.blocks[cont].label;
        let deopt_label = cx.fresh.label();
        let m = cx.fresh.reg();
        let blk = &mut cx.v.body.blocks[g.after.block];
        blk.instrs.push(Instr::new(Some(m), InstrKind::IsMaterialized(Operand::Reg(e))));
        blk.instrs.push(Instr::new(
            None,
            InstrKind::Branch { cond: Operand::Reg(m), then: deopt_label, els: cont_label },
        ));
        let deopt = Instr::new(
            None,
            InstrKind::Deopt { checkpoint: g.checkpoint, bindings: g.bindings, env: Operand::Reg(e) },
        );
        deopt_blocks.insert(deopt_label, Block { label: deopt_label, instrs: vec![deopt] });
    }
    cx.v.body.blocks.extend(deopt_blocks.into_values());
}
