use std::collections::{HashMap, HashSet};
use std::fmt;

use super::{Code, InstrKind, Location, Operand, Program, Reg, Version};
use crate::cfg::compute_dominators;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation(pub String);

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("replacement %{new} does not dominate use of %{old} at {at}")]
pub struct DominanceError {
    pub old: Reg,
    pub new: Reg,
    pub at: Location,
}

/// Where a register is defined: `None` for the body, `Some(p)` for promise `p`.
type CodeKey = Option<u32>;

/// Check well-formedness of a version. Collects every violation found.
pub fn verify(v: &Version) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let envs = v.env_regs();

    let mut owner: HashMap<Reg, CodeKey> = HashMap::new();
    let mut labels = HashSet::new();
    let codes: Vec<(CodeKey, &Code)> =
        std::iter::once((None, &v.body)).chain(v.promises.iter().map(|(k, c)| (Some(*k), c))).collect();
    for (key, code) in &codes {
        for blk in &code.blocks {
            if !labels.insert(blk.label) {
                out.push(Violation(format!("duplicate label BB{}", blk.label)));
            }
        }
        for (_, i) in code.iter() {
            if let Some(d) = i.dst {
                if owner.insert(d, *key).is_some() {
                    out.push(Violation(format!("register %{} defined more than once", d)));
                }
            }
        }
    }

    for (key, code) in &codes {
        let what = match key {
            None => "body".to_string(),
            Some(p) => format!("promise pr{}", p),
        };
        verify_code(v, code, *key, &what, &envs, &owner, &mut out);
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

fn verify_code(
    v: &Version,
    code: &Code,
    key: CodeKey,
    what: &str,
    envs: &std::collections::BTreeSet<Reg>,
    owner: &HashMap<Reg, CodeKey>,
    out: &mut Vec<Violation>,
) {
    let mut bad = |m: String| out.push(Violation(format!("{}: {}", what, m)));
    if code.blocks.is_empty() {
        bad("no blocks".into());
        return;
    }
    let idx = code.label_index();
    let mut structural_ok = true;
    for blk in &code.blocks {
        if blk.instrs.is_empty() {
            bad(format!("empty block BB{}", blk.label));
            structural_ok = false;
            continue;
        }
        let n = blk.instrs.len();
        for (k, i) in blk.instrs.iter().enumerate() {
            if i.is_terminator() && k + 1 != n {
                bad(format!("terminator mid-block in BB{}", blk.label));
                structural_ok = false;
            }
            if k + 1 == n && !i.is_terminator() {
                bad(format!("BB{} does not end in a terminator", blk.label));
                structural_ok = false;
            }
            if i.is_phi() && blk.instrs[..k].iter().any(|p| !p.is_phi()) {
                bad(format!("phi after non-phi in BB{}", blk.label));
            }
            for s in i.successors() {
                if !idx.contains_key(&s) {
                    bad(format!("branch to unknown block BB{}", s));
                    structural_ok = false;
                }
            }
        }
    }
    if !structural_ok {
        return;
    }

    let dom = compute_dominators(code);
    for (b, blk) in code.blocks.iter().enumerate() {
        if !dom.is_reachable(b) {
            bad(format!("unreachable block BB{}", blk.label));
        }
    }
    let defs = code.defs();

    for (loc, i) in code.iter() {
        if !dom.is_reachable(loc.block) {
            continue;
        }
        if let InstrKind::Phi(ins) = &i.kind {
            let mut pred_labels: Vec<u32> = dom.preds[loc.block]
                .iter()
                .filter(|p| dom.is_reachable(**p))
                .map(|p| code.blocks[*p].label)
                .collect();
            let mut in_labels: Vec<u32> = ins.iter().map(|(l, _)| *l).collect();
            pred_labels.sort();
            in_labels.sort();
            if pred_labels != in_labels {
                bad(format!("phi inputs do not match predecessors of BB{}", code.blocks[loc.block].label));
            }
        }

        // Operand kinds.
        if let Some(env) = i.env() {
            let ok = match env {
                Operand::Global | Operand::Open => true,
                Operand::Reg(r) => envs.contains(&r),
                Operand::Missing => false,
            };
            if !ok {
                bad(format!("environment operand of {} at {} is not an environment", i.opcode(), loc));
            }
        }
        let missing_ok = matches!(
            i.kind,
            InstrKind::Phi(_) | InstrKind::MkEnv { .. } | InstrKind::Deopt { .. } | InstrKind::Return(_)
        );
        for o in i.value_operands() {
            match o {
                Operand::Global | Operand::Open => bad(format!("environment used as a value at {}", loc)),
                Operand::Missing if !missing_ok => bad(format!("missing marker used as a value at {}", loc)),
                _ => {}
            }
        }
        match &i.kind {
            InstrKind::MkArg { promise, .. } if !v.promises.contains_key(promise) => {
                bad(format!("MkArg references unknown promise pr{}", promise))
            }
            InstrKind::LdArg(_) if key.is_some() => bad("LdArg inside promise code".into()),
            _ => {}
        }

        // Definitions dominate uses.
        let phi_ins: Option<&Vec<(u32, Operand)>> = match &i.kind {
            InstrKind::Phi(ins) => Some(ins),
            _ => None,
        };
        let mut check = |r: Reg, pred: Option<u32>| match defs.get(&r) {
            Some(d) => {
                let ok = match pred {
                    Some(l) => idx.get(&l).is_some_and(|pb| dom.block_dominates(d.block, *pb)),
                    None => dom.dominates(*d, loc),
                };
                if !ok {
                    bad(format!("use of %{} at {} not dominated by def", r, loc));
                }
            }
            None => match owner.get(&r) {
                Some(None) if key.is_some() && envs.contains(&r) => {}
                Some(_) => bad(format!("use of %{} at {} defined in other code", r, loc)),
                None => bad(format!("use of undefined register %{} at {}", r, loc)),
            },
        };
        match phi_ins {
            Some(ins) => {
                for (l, o) in ins {
                    if let Operand::Reg(r) = o {
                        check(*r, Some(*l));
                    }
                }
            }
            None => {
                for o in i.operands() {
                    if let Operand::Reg(r) = o {
                        check(r, None);
                    }
                }
            }
        }
    }
}

/// Verify every version of every function plus program-level references.
pub fn verify_program(p: &Program) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    for f in &p.functions {
        if f.versions.is_empty() {
            out.push(Violation(format!("fun{} has no versions", f.id)));
        }
        if f.versions.first().is_some_and(|b| !b.assumptions.is_empty()) {
            out.push(Violation(format!("fun{} baseline carries assumptions", f.id)));
        }
        for (k, v) in f.versions.iter().enumerate() {
            let tag = format!("fun{} version {}", f.id, k);
            if let Err(vs) = verify(v) {
                out.extend(vs.into_iter().map(|x| Violation(format!("{}: {}", tag, x))));
            }
            for i in v.all_instrs() {
                match &i.kind {
                    InstrKind::LdArg(n) if *n as usize >= f.params.len() => {
                        out.push(Violation(format!("{}: LdArg({}) out of range", tag, n)))
                    }
                    InstrKind::MkClosure { func, .. } if *func as usize >= p.functions.len() => {
                        out.push(Violation(format!("{}: unknown function fun{}", tag, func)))
                    }
                    InstrKind::Deopt { checkpoint, .. } if f.checkpoint(*checkpoint).is_none() => {
                        out.push(Violation(format!("{}: unknown checkpoint cp{}", tag, checkpoint)))
                    }
                    _ => {}
                }
                if f.id == p.entry && i.operands().contains(&Operand::Open) {
                    out.push(Violation(format!("{}: O used in top-level code", tag)));
                }
            }
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Rewrite every use of `old` to `new` across the version. A register
/// replacement must dominate each use in the body code.
pub fn replace_uses(v: &mut Version, old: Reg, new: Operand) -> Result<(), DominanceError> {
    if let Operand::Reg(n) = new {
        for code in v.codes() {
            let defs = code.defs();
            let Some(dn) = defs.get(&n) else { continue };
            let dom = compute_dominators(code);
            for (loc, i) in code.iter() {
                let ok = match &i.kind {
                    InstrKind::Phi(ins) => ins.iter().all(|(l, o)| {
                        *o != Operand::Reg(old)
                            || code.label_index().get(l).is_some_and(|pb| dom.block_dominates(dn.block, *pb))
                    }),
                    _ => !i.uses_reg(old) || dom.dominates(*dn, loc),
                };
                if !ok {
                    return Err(DominanceError { old, new: n, at: loc });
                }
            }
        }
    }
    for code in v.codes_mut() {
        for i in code.instrs_mut() {
            for o in i.operands_mut() {
                if *o == Operand::Reg(old) {
                    *o = new;
                }
            }
        }
    }
    Ok(())
}
