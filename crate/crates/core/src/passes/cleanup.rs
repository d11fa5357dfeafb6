use std::collections::{BTreeSet, HashMap};

use super::edit::{prune_unreachable, relabel_phis, use_counts};
use super::FnCtx;
use crate::analysis::ScopeAnalysis;
use crate::cfg::compute_dominators;
use crate::interp::value::{binop, truthy, RtValue};
use crate::ir::{Code, Const, Instr, InstrKind, Location, Operand, Reg};

/// Folded constants longer than this are left as computations.
const MAX_FOLDED_LEN: usize = 16;

/// Local simplifications, repeated until nothing changes.
pub fn cleanup(cx: &mut FnCtx) -> bool {
    let mut changed = false;
    for _ in 0..64 {
        let mut c = fold_constants(cx);
        c |= elide_value_forces(cx);
        c |= constant_promises(cx);
        c |= value_numbering(cx);
        c |= fold_branches(&mut cx.v.body);
        c |= prune_unreachable(&mut cx.v.body);
        c |= trivial_phis(cx);
        c |= merge_blocks(&mut cx.v.body);
        c |= dead_code(cx);
        c |= unused_promises(cx);
        if !c {
            break;
        }
        changed = true;
    }
    changed
}

fn constants(code: &Code) -> HashMap<Reg, Const> {
    code.instrs()
        .filter_map(|i| match &i.kind {
            InstrKind::LdConst(c) => Some((i.dst?, c.clone())),
            _ => None,
        })
        .collect()
}

fn const_of(consts: &HashMap<Reg, Const>, o: Operand) -> Option<&Const> {
    consts.get(&o.reg()?)
}

fn fold_constants(cx: &mut FnCtx) -> bool {
    let consts = constants(&cx.v.body);
    let mut changed = false;
    for i in cx.v.body.instrs_mut() {
        let InstrKind::Binop { op, lhs, rhs, .. } = &i.kind else { continue };
        let (Some(a), Some(b)) = (const_of(&consts, *lhs), const_of(&consts, *rhs)) else { continue };
        let Ok(r) = binop(*op, &RtValue::from_const(a), &RtValue::from_const(b)) else { continue };
        let Some(c) = r.to_const() else { continue };
        let len = match &c {
            Const::Null => 0,
            Const::Num(v) => v.len(),
            Const::Lgl(v) => v.len(),
            Const::Str(v) => v.len(),
        };
        if len <= MAX_FOLDED_LEN {
            i.kind = InstrKind::LdConst(c);
            changed = true;
        }
    }
    changed
}

/// Forcing something that is already a value yields it unchanged.
fn elide_value_forces(cx: &mut FnCtx) -> bool {
    let a = ScopeAnalysis::new(&cx.v, &cx.prog.facts);
    let mut repl = Vec::new();
    for i in cx.v.body.instrs() {
        if let InstrKind::Force { value, .. } = i.kind {
            if value != Operand::Missing && a.is_value(value) {
                repl.push((i.dst.unwrap(), value));
            }
        }
    }
    remove_replaced(cx, repl)
}

/// Replace each register by its operand and drop its definition.
fn remove_replaced(cx: &mut FnCtx, repl: Vec<(Reg, Operand)>) -> bool {
    if repl.is_empty() {
        return false;
    }
    let gone: BTreeSet<Reg> = repl.iter().map(|(r, _)| *r).collect();
    for b in cx.v.body.blocks.iter_mut() {
        b.instrs.retain(|i| !i.dst.is_some_and(|d| gone.contains(&d)));
    }
    let map: HashMap<Reg, Operand> = repl.iter().copied().collect();
    for (r, mut o) in repl {
        // Replacements may chain through each other.
        while let Some(n) = o.reg().and_then(|x| map.get(&x)) {
            o = *n;
        }
        cx.replace(r, o);
    }
    true
}

/// A promise that just returns a constant is passed as that constant.
fn constant_promises(cx: &mut FnCtx) -> bool {
    let mut consts = HashMap::new();
    for (p, code) in &cx.v.promises {
        if let [b] = code.blocks.as_slice() {
            if let [Instr { dst: Some(d), kind: InstrKind::LdConst(c) }, Instr { kind: InstrKind::Return(Operand::Reg(r)), .. }] =
                b.instrs.as_slice()
            {
                if d == r {
                    consts.insert(*p, c.clone());
                }
            }
        }
    }
    let mut changed = false;
    for i in cx.v.body.instrs_mut() {
        if let InstrKind::MkArg { promise, .. } = &i.kind {
            if let Some(c) = consts.get(promise) {
                i.kind = InstrKind::LdConst(c.clone());
                changed = true;
            }
        }
    }
    changed
}

/// Key identifying instructions that compute the same value wherever the
/// first one dominates the second.
fn vn_key(i: &Instr) -> Option<String> {
    match &i.kind {
        InstrKind::LdConst(_) | InstrKind::LdArg(_) => Some(format!("{:?}", i.kind)),
        InstrKind::Binop { op, lhs, rhs, .. } => Some(format!("{:?} {:?} {:?}", op, lhs, rhs)),
        // Promises are evaluated once; forcing again yields the same value.
        InstrKind::Force { value: Operand::Reg(r), .. } => Some(format!("force {}", r)),
        _ => None,
    }
}

fn value_numbering(cx: &mut FnCtx) -> bool {
    let code = &cx.v.body;
    let dom = compute_dominators(code);
    let mut seen: HashMap<String, Vec<(Location, Reg)>> = HashMap::new();
    let mut repl = Vec::new();
    for &b in &dom.rpo {
        for (k, i) in code.blocks[b].instrs.iter().enumerate() {
            let Some(key) = vn_key(i) else { continue };
            let loc = Location::new(b, k);
            let d = i.dst.unwrap();
            let entry = seen.entry(key).or_default();
            match entry.iter().find(|(l, _)| dom.dominates(*l, loc)) {
                Some((_, r)) => repl.push((d, Operand::Reg(*r))),
                None => entry.push((loc, d)),
            }
        }
    }
    remove_replaced(cx, repl)
}

fn fold_branches(code: &mut Code) -> bool {
    let consts = constants(code);
    let mut changed = false;
    for b in code.blocks.iter_mut() {
        let Some(last) = b.instrs.last_mut() else { continue };
        let InstrKind::Branch { cond, then, els } = last.kind else { continue };
        let target = if then == els {
            then
        } else {
            let Some(c) = const_of(&consts, cond) else { continue };
            match truthy(&RtValue::from_const(c)) {
                Ok(true) => then,
                Ok(false) => els,
                Err(_) => continue,
            }
        };
        last.kind = InstrKind::Jump(target);
        changed = true;
    }
    changed
}

/// Phis whose inputs are all the same operand (or the phi itself).
fn trivial_phis(cx: &mut FnCtx) -> bool {
    let mut repl = Vec::new();
    for i in cx.v.body.instrs() {
        let InstrKind::Phi(ins) = &i.kind else { continue };
        let d = i.dst.unwrap();
        let others: BTreeSet<Operand> = ins.iter().map(|(_, o)| *o).filter(|o| *o != Operand::Reg(d)).collect();
        if others.len() == 1 {
            repl.push((d, *others.iter().next().unwrap()));
            // One at a time: replacements may feed each other.
            break;
        }
    }
    remove_replaced(cx, repl)
}

/// Merge a block into its only predecessor when that ends in a jump to it,
/// and bypass empty blocks that only jump on.
fn merge_blocks(code: &mut Code) -> bool {
    let mut changed = false;
    'outer: loop {
        let preds = code.predecessors();
        for b in 1..code.blocks.len() {
            let [p] = preds[b].as_slice() else { continue };
            let p = *p;
            let lbl = code.blocks[b].label;
            if p == b || !matches!(code.blocks[p].terminator().map(|t| &t.kind), Some(InstrKind::Jump(l)) if *l == lbl) {
                continue;
            }
            let moved = std::mem::take(&mut code.blocks[b].instrs);
            if moved.iter().any(|i| i.is_phi()) {
                // Single-predecessor phis are removed by `trivial_phis` first.
                code.blocks[b].instrs = moved;
                continue;
            }
            let plabel = code.blocks[p].label;
            let succs: Vec<_> = moved.last().map(|t| t.successors()).unwrap_or_default();
            code.blocks[p].instrs.pop();
            code.blocks[p].instrs.extend(moved);
            code.blocks.remove(b);
            relabel_phis(code, &succs, lbl, plabel);
            changed = true;
            continue 'outer;
        }
        for b in 1..code.blocks.len() {
            let [Instr { kind: InstrKind::Jump(t), .. }] = code.blocks[b].instrs.as_slice() else { continue };
            let t = *t;
            let lbl = code.blocks[b].label;
            let Some(ti) = code.blocks.iter().position(|x| x.label == t) else { continue };
            if t == lbl || code.blocks[ti].instrs.iter().any(|i| i.is_phi()) {
                continue;
            }
            let mut hit = false;
            for p in &preds[b] {
                for s in code.blocks[*p].instrs.last_mut().unwrap().successors_mut() {
                    if *s == lbl {
                        *s = t;
                        hit = true;
                    }
                }
            }
            if hit {
                changed = true;
                prune_unreachable(code);
                continue 'outer;
            }
        }
        return changed;
    }
}

fn is_pure(k: &InstrKind) -> bool {
    matches!(
        k,
        InstrKind::LdConst(_)
            | InstrKind::LdArg(_)
            | InstrKind::MkArg { .. }
            | InstrKind::MkClosure { .. }
            | InstrKind::MkEnv { .. }
            | InstrKind::Phi(_)
            | InstrKind::IsMaterialized(_)
    )
}

fn dead_code(cx: &mut FnCtx) -> bool {
    let mut changed = false;
    loop {
        let uses = use_counts(&cx.v);
        let dead = |i: &Instr| is_pure(&i.kind) && i.dst.is_some_and(|d| !uses.contains_key(&d));
        if !cx.v.body.instrs().any(dead) {
            return changed;
        }
        for b in cx.v.body.blocks.iter_mut() {
            b.instrs.retain(|i| !dead(i));
        }
        changed = true;
    }
}

fn unused_promises(cx: &mut FnCtx) -> bool {
    let used: BTreeSet<u32> = cx
        .v
        .all_instrs()
        .filter_map(|i| match i.kind {
            InstrKind::MkArg { promise, .. } => Some(promise),
            _ => None,
        })
        .collect();
    let before = cx.v.promises.len();
    cx.v.promises.retain(|p, _| used.contains(p));
    before != cx.v.promises.len()
}
