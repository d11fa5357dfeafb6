use std::collections::{BTreeSet, HashMap};

use super::FnCtx;
use crate::analysis::{AbsLoc, Cell, ScopeAnalysis};
use crate::cfg::compute_dominators;
use crate::ir::{Instr, InstrKind, Location, Operand, Reg};

fn removable(i: &Instr, envs: &BTreeSet<Reg>) -> bool {
    match &i.kind {
        InstrKind::StVar { env: Operand::Reg(e), .. } => envs.contains(e),
        InstrKind::LdConst(_)
        | InstrKind::LdArg(_)
        | InstrKind::MkArg { .. }
        | InstrKind::MkClosure { .. }
        | InstrKind::MkEnv { .. }
        | InstrKind::Phi(_)
        | InstrKind::IsMaterialized(_) => true,
        _ => false,
    }
}

/// Whether a use of `e` by `i` lets code outside this version see it.
fn observes(i: &Instr, e: Reg, reflective: bool, scope: &ScopeAnalysis) -> bool {
    let r = Operand::Reg(e);
    if i.value_operands().contains(&r) {
        return true;
    }
    if i.env() != Some(r) {
        return false;
    }
    match &i.kind {
        InstrKind::LdVar { .. } | InstrKind::StVar { .. } | InstrKind::Binop { .. } | InstrKind::IsMaterialized(_) => {
            false
        }
        InstrKind::LdFun { .. } => reflective,
        InstrKind::Call { .. } | InstrKind::Force { .. } => reflective && scope.taints(i),
        _ => true,
    }
}

/// Remove stores to environments created here that no later load can see.
/// Liveness is computed by marking from instructions with effects, so a
/// store is kept only if a live load may read it or its environment is
/// visible from outside.
pub fn dead_store_elim(cx: &mut FnCtx) -> bool {
    let v = &cx.v;
    let code = &v.body;
    let dom = compute_dominators(code);
    let scope = ScopeAnalysis::new(v, &cx.prog.facts);
    let sol = scope.solve(v, &dom);
    let reflective = cx.prog.facts.env_reflective;
    let envs: BTreeSet<Reg> = scope.names.keys().copied().collect();
    let defs: HashMap<Reg, Location> = code.defs();
    let instrs: Vec<(Location, &Instr)> = code.iter().collect();

    let mut live: BTreeSet<Location> = BTreeSet::new();
    let mut work: Vec<Location> = Vec::new();
    for (l, i) in &instrs {
        if !removable(i, &envs) {
            work.push(*l);
        }
    }
    // Registers used from promise code are live.
    let mut observable: BTreeSet<Reg> = scope.stubs.clone();
    for c in v.promises.values() {
        for i in c.instrs() {
            for o in i.operands() {
                if let Some(r) = o.reg() {
                    if let Some(l) = defs.get(&r) {
                        work.push(*l);
                    }
                    if envs.contains(&r) {
                        observable.insert(r);
                    }
                }
            }
        }
    }
    let stores = |e: Reg, name: Option<&str>| -> Vec<Location> {
        instrs
            .iter()
            .filter(|(_, i)| match &i.kind {
                InstrKind::StVar { name: n, env: Operand::Reg(x), .. } => *x == e && name.is_none_or(|m| m == n),
                _ => false,
            })
            .map(|(l, _)| *l)
            .collect()
    };
    let mut done_envs: BTreeSet<Reg> = BTreeSet::new();
    loop {
        while let Some(l) = work.pop() {
            if !live.insert(l) {
                continue;
            }
            let i = code.instr(l);
            for o in i.operands() {
                let Some(r) = o.reg() else { continue };
                if let Some(d) = defs.get(&r) {
                    work.push(*d);
                }
                if envs.contains(&r) && observes(i, r, reflective, &scope) {
                    observable.insert(r);
                }
            }
            let (InstrKind::LdVar { name, env: Operand::Reg(e) } | InstrKind::LdFun { name, env: Operand::Reg(e) }) =
                &i.kind
            else {
                continue;
            };
            if !envs.contains(e) {
                continue;
            }
            match sol.at(l).get(*e, name) {
                Cell::Top => work.extend(stores(*e, Some(name))),
                Cell::Set(s) => work.extend(s.iter().filter_map(|a| match a {
                    AbsLoc::At(x) => Some(*x),
                    AbsLoc::Undefined => None,
                })),
            }
        }
        let pending: Vec<Reg> = observable.difference(&done_envs).copied().collect();
        if pending.is_empty() {
            break;
        }
        for e in pending {
            done_envs.insert(e);
            work.extend(stores(e, None));
        }
    }
    let dead: BTreeSet<Location> = instrs
        .iter()
        .filter(|(l, i)| matches!(i.kind, InstrKind::StVar { .. }) && removable(i, &envs) && !live.contains(l))
        .map(|(l, _)| *l)
        .collect();
    if dead.is_empty() {
        return false;
    }
    super::edit::remove_at(&mut cx.v.body, &dead);
    true
}
