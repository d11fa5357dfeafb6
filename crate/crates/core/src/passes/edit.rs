use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::cfg::compute_dominators;
use crate::ir::{Block, Code, Const, Fresh, Instr, InstrKind, Label, Location, Operand, Reg, Version};

/// Rewrite every use of `old` in all codes of the version.
pub fn replace_all(v: &mut Version, old: Reg, new: Operand) {
    for code in v.codes_mut() {
        for i in code.instrs_mut() {
            for o in i.operands_mut() {
                if *o == Operand::Reg(old) {
                    *o = new;
                }
            }
        }
    }
}

/// Move the instructions from `loc` onwards into a new block placed right
/// after the original, which is left without a terminator. Returns the new
/// block's index.
pub fn split_block(code: &mut Code, loc: Location, fresh: &mut Fresh) -> usize {
    let old_label = code.blocks[loc.block].label;
    let tail: Vec<Instr> = code.blocks[loc.block].instrs.split_off(loc.index);
    let label = fresh.label();
    let succs: Vec<Label> = tail.last().map(|t| t.successors()).unwrap_or_default();
    code.blocks.insert(loc.block + 1, Block { label, instrs: tail });
    relabel_phis(code, &succs, old_label, label);
    loc.block + 1
}

/// In the blocks labelled `targets`, phi inputs coming from `from` now come from `to`.
pub fn relabel_phis(code: &mut Code, targets: &[Label], from: Label, to: Label) {
    for b in code.blocks.iter_mut().filter(|b| targets.contains(&b.label)) {
        for i in b.instrs.iter_mut() {
            if let InstrKind::Phi(ins) = &mut i.kind {
                for (l, _) in ins.iter_mut() {
                    if *l == from {
                        *l = to;
                    }
                }
            }
        }
    }
}

/// Remove blocks unreachable from the entry and phi inputs from them.
/// Returns true if anything was removed.
pub fn prune_unreachable(code: &mut Code) -> bool {
    let dom = compute_dominators(code);
    let dead: BTreeSet<Label> =
        (0..code.blocks.len()).filter(|b| !dom.is_reachable(*b)).map(|b| code.blocks[b].label).collect();
    let mut changed = !dead.is_empty();
    code.blocks.retain(|b| !dead.contains(&b.label));
    changed |= fix_phi_inputs(code);
    changed
}

/// Drop phi inputs whose label is no longer a predecessor.
pub fn fix_phi_inputs(code: &mut Code) -> bool {
    let preds = code.predecessors();
    let mut changed = false;
    for (b, blk) in code.blocks.clone().iter().enumerate() {
        let labels: BTreeSet<Label> = preds[b].iter().map(|p| code.blocks[*p].label).collect();
        for (k, i) in blk.instrs.iter().enumerate() {
            if let InstrKind::Phi(ins) = &i.kind {
                if ins.iter().any(|(l, _)| !labels.contains(l)) {
                    let kept: Vec<(Label, Operand)> = ins.iter().filter(|(l, _)| labels.contains(l)).cloned().collect();
                    code.blocks[b].instrs[k].kind = InstrKind::Phi(kept);
                    changed = true;
                }
            }
        }
    }
    changed
}

/// Delete the instructions at the given locations.
pub fn remove_at(code: &mut Code, locs: &BTreeSet<Location>) {
    for (b, blk) in code.blocks.iter_mut().enumerate() {
        let mut k = 0;
        blk.instrs.retain(|_| {
            let keep = !locs.contains(&Location::new(b, k));
            k += 1;
            keep
        });
    }
}

/// Number of uses of each register across all codes.
pub fn use_counts(v: &Version) -> HashMap<Reg, usize> {
    let mut n = HashMap::new();
    for i in v.all_instrs() {
        for o in i.operands() {
            if let Operand::Reg(r) = o {
                *n.entry(r).or_default() += 1;
            }
        }
    }
    n
}

/// A copy of `code` with every register defined in it and every label
/// renamed to fresh ones, recording the register renaming in `regs`. Uses
/// are left alone; apply `rename_uses` once all related codes are renamed.
pub fn rename_code(code: &Code, fresh: &mut Fresh, regs: &mut BTreeMap<Reg, Reg>) -> Code {
    let mut labels = BTreeMap::new();
    for b in &code.blocks {
        labels.insert(b.label, fresh.label());
        for i in &b.instrs {
            if let Some(d) = i.dst {
                regs.insert(d, fresh.reg());
            }
        }
    }
    let mut out = code.clone();
    for b in out.blocks.iter_mut() {
        b.label = labels[&b.label];
        for i in b.instrs.iter_mut() {
            if let Some(d) = i.dst.as_mut() {
                *d = regs[d];
            }
            for l in i.successors_mut() {
                *l = labels[l];
            }
            if let InstrKind::Phi(ins) = &mut i.kind {
                for (l, _) in ins.iter_mut() {
                    *l = labels[l];
                }
            }
        }
    }
    out
}

/// Apply a register renaming to every operand in `code`.
pub fn rename_uses(code: &mut Code, regs: &BTreeMap<Reg, Reg>) {
    for i in code.instrs_mut() {
        for o in i.operands_mut() {
            if let Operand::Reg(r) = o {
                if let Some(n) = regs.get(r) {
                    *r = *n;
                }
            }
        }
    }
}

/// Splice `callee` (already renamed) in place of the instruction at `loc`,
/// whose result becomes the value the callee returns. The callee's
/// `Return`s jump to a continuation block holding the rest of the original
/// block. Returns the operand carrying the result.
pub fn splice(code: &mut Code, loc: Location, callee: Code, fresh: &mut Fresh) -> Operand {
    let cont = split_block(code, loc, fresh);
    // Drop the replaced instruction, now first in the continuation.
    code.blocks[cont].instrs.remove(0);
    let cont_label = code.blocks[cont].label;
    let entry = callee.blocks[0].label;
    code.blocks[loc.block].instrs.push(Instr::new(None, InstrKind::Jump(entry)));
    let mut rets: Vec<(Label, Operand)> = Vec::new();
    let mut blocks = callee.blocks;
    for b in blocks.iter_mut() {
        if let Some(last) = b.instrs.last_mut() {
            if let InstrKind::Return(o) = last.kind {
                rets.push((b.label, o));
                *last = Instr::new(None, InstrKind::Jump(cont_label));
            }
        }
    }
    let nulls: Vec<usize> = rets.iter().enumerate().filter(|(_, (_, o))| *o == Operand::Missing).map(|(k, _)| k).collect();
    for k in nulls {
        // A missing return value reads as NULL.
        let r = fresh.reg();
        let lbl = rets[k].0;
        let b = blocks.iter_mut().find(|b| b.label == lbl).unwrap();
        let at = b.instrs.len() - 1;
        b.instrs.insert(at, Instr::new(Some(r), InstrKind::LdConst(Const::Null)));
        rets[k].1 = Operand::Reg(r);
    }
    for (k, b) in blocks.into_iter().enumerate() {
        code.blocks.insert(cont + k, b);
    }
    match rets.len() {
        // Never returns; the continuation is unreachable.
        0 => Operand::Missing,
        1 => rets[0].1,
        _ => {
            let r = fresh.reg();
            let cont_idx = code.blocks.iter().position(|b| b.label == cont_label).unwrap();
            code.blocks[cont_idx].instrs.insert(0, Instr::new(Some(r), InstrKind::Phi(rets)));
            Operand::Reg(r)
        }
    }
}
