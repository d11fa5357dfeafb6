use std::collections::{BTreeMap, HashMap};

use super::FnCtx;
use crate::analysis::{AbsLoc, Cell, ScopeAnalysis};
use crate::cfg::{compute_dominators, DomInfo};
use crate::ir::{Code, Fresh, Instr, InstrKind, Label, Location, Operand, Reg, Version};

/// Value bound to `name` by the `MkEnv` or `StVar` at `l`.
fn stored_value(code: &Code, l: Location, name: &str) -> Option<Operand> {
    match &code.instr(l).kind {
        InstrKind::StVar { value, .. } => Some(*value),
        InstrKind::MkEnv { bindings, .. } => bindings.iter().find(|(n, _)| n == name).map(|(_, o)| *o),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FunKind {
    Function,
    NotFunction,
    Unknown,
}

fn fun_kind(code: &Code, defs: &HashMap<Reg, Location>, o: Operand) -> FunKind {
    let Operand::Reg(r) = o else { return FunKind::Unknown };
    match defs.get(&r).map(|l| &code.instr(*l).kind) {
        Some(InstrKind::MkClosure { .. } | InstrKind::LdFun { .. }) => FunKind::Function,
        Some(InstrKind::LdConst(_) | InstrKind::Binop { .. } | InstrKind::MkEnv { .. }) => FunKind::NotFunction,
        _ => FunKind::Unknown,
    }
}

enum Action {
    Retarget(Location, Operand),
    Replace(Reg, Operand),
    Join(Reg, Reg, String),
}

/// Replace loads whose reaching stores are known by the stored values,
/// joining several stores with phis; loads of variables known to be
/// absent move to the parent environment.
pub fn resolve_loads(cx: &mut FnCtx) -> bool {
    let code = &cx.v.body;
    let dom = compute_dominators(code);
    let a = ScopeAnalysis::new(&cx.v, &cx.prog.facts);
    let sol = a.solve(&cx.v, &dom);
    let defs = code.defs();
    let mut actions = Vec::new();
    for (loc, i) in code.iter() {
        if !dom.is_reachable(loc.block) {
            continue;
        }
        let (name, e, is_fun) = match &i.kind {
            InstrKind::LdVar { name, env: Operand::Reg(e) } => (name, *e, false),
            InstrKind::LdFun { name, env: Operand::Reg(e) } => (name, *e, true),
            _ => continue,
        };
        if !a.names.contains_key(&e) {
            continue;
        }
        let Cell::Set(set) = sol.at(loc).get(e, name) else { continue };
        let Some(parent) = defs.get(&e).and_then(|l| match &code.instr(*l).kind {
            InstrKind::MkEnv { parent, .. } => Some(*parent),
            _ => None,
        }) else {
            continue;
        };
        let dst = i.dst.unwrap();
        let values: Vec<Option<Operand>> = set
            .iter()
            .map(|l| match l {
                AbsLoc::Undefined => None,
                AbsLoc::At(l) => stored_value(code, *l, name).filter(|o| *o != Operand::Missing),
            })
            .collect();
        if is_fun {
            let kinds: Vec<FunKind> =
                values.iter().map(|v| v.map_or(FunKind::NotFunction, |o| fun_kind(code, &defs, o))).collect();
            if kinds.iter().all(|k| *k == FunKind::NotFunction) {
                actions.push(Action::Retarget(loc, parent));
            } else if kinds == [FunKind::Function] {
                actions.push(Action::Replace(dst, values[0].unwrap()));
            }
            continue;
        }
        if set.contains(&AbsLoc::Undefined) {
            if set.len() == 1 {
                actions.push(Action::Retarget(loc, parent));
            }
            continue;
        }
        match values.as_slice() {
            [Some(v)] => actions.push(Action::Replace(dst, *v)),
            vs if vs.iter().all(Option::is_some) => actions.push(Action::Join(dst, e, name.clone())),
            _ => {}
        }
    }
    let mut changed = false;
    let mut removed = Vec::new();
    // Joins insert phis, which moves instructions; retarget first.
    actions.sort_by_key(|a| !matches!(a, Action::Retarget(..)));
    for act in actions {
        match act {
            Action::Retarget(loc, parent) => {
                if let Some(env) = cx.v.body.instr_mut(loc).env_mut() {
                    *env = parent;
                    changed = true;
                }
            }
            Action::Replace(dst, v) => {
                cx.replace(dst, v);
                removed.push(dst);
                changed = true;
            }
            Action::Join(dst, e, name) => {
                let loc = cx.v.body.defs()[&dst];
                let (v, fresh) = (&mut cx.v, &mut cx.fresh);
                if let Some(val) = ssa_value(v, fresh, e, &name, loc, None) {
                    cx.replace(dst, val);
                    removed.push(dst);
                    changed = true;
                }
            }
        }
    }
    for b in cx.v.body.blocks.iter_mut() {
        b.instrs.retain(|i| !i.dst.is_some_and(|d| removed.contains(&d)));
    }
    changed
}

struct Builder<'a> {
    code: &'a Code,
    dom: DomInfo,
    env_block: usize,
    /// Definitions of the variable per block: (index, value; None if unbound).
    defs: BTreeMap<usize, Vec<(usize, Option<Operand>)>>,
    undefined: Option<Operand>,
    start: HashMap<usize, Operand>,
    phis: Vec<(usize, Reg, Vec<(Label, Operand)>)>,
    fresh: &'a mut Fresh,
}

impl Builder<'_> {
    fn before(&mut self, b: usize, idx: usize) -> Option<Operand> {
        let hit = self.defs.get(&b).and_then(|ds| ds.iter().rev().find(|(k, _)| *k < idx).map(|(_, v)| *v));
        match hit {
            Some(Some(v)) => Some(v),
            Some(None) => self.undefined,
            None => self.at_start(b),
        }
    }

    fn at_start(&mut self, b: usize) -> Option<Operand> {
        if let Some(v) = self.start.get(&b) {
            return Some(*v);
        }
        if !self.dom.block_strictly_dominates(self.env_block, b) {
            return None;
        }
        let preds: Vec<usize> = self.dom.preds[b].iter().copied().filter(|p| self.dom.is_reachable(*p)).collect();
        if let [p] = preds.as_slice() {
            let v = self.before(*p, usize::MAX)?;
            self.start.insert(b, v);
            return Some(v);
        }
        let r = self.fresh.reg();
        self.start.insert(b, Operand::Reg(r));
        let k = self.phis.len();
        self.phis.push((b, r, Vec::new()));
        for p in preds {
            let v = self.before(p, usize::MAX)?;
            let l = self.code.blocks[p].label;
            self.phis[k].2.push((l, v));
        }
        Some(Operand::Reg(r))
    }
}

/// The value of variable `name` in environment `env` just before `at`,
/// built from the stores that reach it, inserting phis where paths meet.
/// Paths on which the variable is unbound yield `undefined`, or make the
/// query fail when it is `None`. On failure the version is unchanged.
pub fn ssa_value(
    v: &mut Version,
    fresh: &mut Fresh,
    env: Reg,
    name: &str,
    at: Location,
    undefined: Option<Operand>,
) -> Option<Operand> {
    let code = &v.body;
    let mut defs: BTreeMap<usize, Vec<(usize, Option<Operand>)>> = BTreeMap::new();
    let mut env_block = None;
    for (loc, i) in code.iter() {
        match &i.kind {
            InstrKind::StVar { name: n, value, env: Operand::Reg(e) } if *e == env && n == name => {
                defs.entry(loc.block).or_default().push((loc.index, Some(*value)));
            }
            InstrKind::MkEnv { bindings, .. } if i.dst == Some(env) => {
                env_block = Some(loc.block);
                let b = bindings.iter().find(|(n, _)| n == name).map(|(_, o)| *o).filter(|o| *o != Operand::Missing);
                defs.entry(loc.block).or_default().push((loc.index, b));
            }
            _ => {}
        }
    }
    let mut bld = Builder {
        code,
        dom: compute_dominators(code),
        env_block: env_block?,
        defs,
        undefined,
        start: HashMap::new(),
        phis: Vec::new(),
        fresh,
    };
    let result = bld.before(at.block, at.index)?;
    let phis = std::mem::take(&mut bld.phis);
    for (b, r, ins) in phis {
        let blk = &mut v.body.blocks[b];
        let pos = blk.instrs.iter().take_while(|i| i.is_phi()).count();
        blk.instrs.insert(pos, Instr::new(Some(r), InstrKind::Phi(ins)));
    }
    Some(result)
}
