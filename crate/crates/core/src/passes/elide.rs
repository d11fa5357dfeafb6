use super::FnCtx;
use crate::analysis::escape_analysis;
use crate::ir::{Const, InstrKind, Operand};

/// Remove environments nothing reads, writes or exposes. Remaining
/// references (call frames, error contexts) fall back to the parent.
pub fn elide_environments(cx: &mut FnCtx) -> bool {
    let esc = escape_analysis(&cx.v, &cx.prog.facts);
    let mut changed = false;
    for (e, info) in esc {
        if !info.elidable() {
            continue;
        }
        let Some(parent) = cx.v.body.instrs().find_map(|i| match &i.kind {
            InstrKind::MkEnv { parent, .. } if i.dst == Some(e) => Some(*parent),
            _ => None,
        }) else {
            continue;
        };
        for i in cx.v.body.instrs_mut() {
            if i.dst == Some(e) {
                continue;
            }
            if i.kind == InstrKind::IsMaterialized(Operand::Reg(e)) {
                i.kind = InstrKind::LdConst(Const::Lgl(vec![false]));
            } else if let Some(env) = i.env_mut() {
                if *env == Operand::Reg(e) {
                    *env = parent;
                }
            }
        }
        for b in cx.v.body.blocks.iter_mut() {
            b.instrs.retain(|i| i.dst != Some(e));
        }
        for o in cx.forward.values_mut() {
            if *o == Operand::Reg(e) {
                *o = Operand::Missing;
            }
        }
        changed = true;
    }
    changed
}
