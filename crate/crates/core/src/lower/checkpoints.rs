use std::collections::{BTreeSet, HashMap};

use crate::frontend::NodeId;
use crate::ir::{Checkpoint, CheckpointKind, Code, InstrKind, Location, Operand, Reg, Version};

/// Register liveness over one code, with phi uses attributed to the
/// incoming edge.
#[derive(Debug, Clone)]
pub struct Liveness {
    pub live_in: Vec<BTreeSet<Reg>>,
    pub live_out: Vec<BTreeSet<Reg>>,
}

fn regs(ops: impl IntoIterator<Item = Operand>) -> impl Iterator<Item = Reg> {
    ops.into_iter().filter_map(Operand::reg)
}

pub fn liveness(code: &Code) -> Liveness {
    let n = code.blocks.len();
    let succs = code.successors();
    let labels: Vec<u32> = code.blocks.iter().map(|b| b.label).collect();
    let mut gen = vec![BTreeSet::new(); n];
    let mut kill = vec![BTreeSet::new(); n];
    for (b, blk) in code.blocks.iter().enumerate() {
        for i in blk.instrs.iter().rev() {
            if let Some(d) = i.dst {
                gen[b].remove(&d);
                kill[b].insert(d);
            }
            if !i.is_phi() {
                gen[b].extend(regs(i.operands()));
            }
        }
    }
    // Phi inputs flowing along edge (pred -> succ).
    let phi_uses = |pred: usize, succ: usize| -> Vec<Reg> {
        code.blocks[succ]
            .instrs
            .iter()
            .filter_map(|i| match &i.kind {
                InstrKind::Phi(ins) => Some(ins),
                _ => None,
            })
            .flat_map(|ins| ins.iter().filter(|(l, _)| *l == labels[pred]).filter_map(|(_, o)| o.reg()))
            .collect()
    };
    let mut live_in = vec![BTreeSet::new(); n];
    let mut live_out = vec![BTreeSet::new(); n];
    let mut changed = true;
    while changed {
        changed = false;
        for b in (0..n).rev() {
            let mut out = BTreeSet::new();
            for &s in &succs[b] {
                out.extend(live_in[s].iter().copied());
                out.extend(phi_uses(b, s));
            }
            let mut inn: BTreeSet<Reg> = out.difference(&kill[b]).copied().collect();
            inn.extend(gen[b].iter().copied());
            if out != live_out[b] || inn != live_in[b] {
                live_out[b] = out;
                live_in[b] = inn;
                changed = true;
            }
        }
    }
    Liveness { live_in, live_out }
}

impl Liveness {
    /// Registers live just before the instruction at `loc` executes.
    pub fn live_before(&self, code: &Code, loc: Location) -> BTreeSet<Reg> {
        let mut live = self.live_out[loc.block].clone();
        for i in code.blocks[loc.block].instrs[loc.index..].iter().rev() {
            if let Some(d) = i.dst {
                live.remove(&d);
            }
            if !i.is_phi() {
                live.extend(regs(i.operands()));
            }
        }
        live
    }
}

fn checkpoint(
    id: u32,
    kind: CheckpointKind,
    node: Option<NodeId>,
    loc: Location,
    code: &Code,
    live: &Liveness,
    env: Option<Reg>,
) -> Checkpoint {
    let mut regs = live.live_before(code, loc);
    if let Some(e) = env {
        regs.remove(&e);
    }
    Checkpoint { id, kind, node, location: loc, live: regs.into_iter().collect() }
}

/// Checkpoints at function entry (after the environment is created) and
/// before every call in the body.
pub fn emit_checkpoints(
    baseline: &Version,
    param_count: usize,
    env: Option<Reg>,
    call_nodes: &HashMap<(usize, usize), NodeId>,
) -> Vec<Checkpoint> {
    let code = &baseline.body;
    let live = liveness(code);
    let prologue = if env.is_some() { param_count + 1 } else { 0 };
    let mut out = vec![checkpoint(0, CheckpointKind::Entry, None, Location::new(0, prologue), code, &live, env)];
    for (loc, i) in code.iter() {
        if matches!(i.kind, InstrKind::Call { .. }) {
            let id = out.len() as u32;
            let node = call_nodes.get(&(loc.block, loc.index)).copied();
            out.push(checkpoint(id, CheckpointKind::BeforeCall, node, loc, code, &live, env));
        }
    }
    out
}

/// Resume points right after every instruction in the body that may run
/// code, numbered from `first_id`.
pub fn resume_points(baseline: &Version, env: Option<Reg>, first_id: u32) -> Vec<Checkpoint> {
    let code = &baseline.body;
    let live = liveness(code);
    let mut out = Vec::new();
    for (loc, i) in code.iter() {
        let runs_code = match &i.kind {
            InstrKind::Call { .. } | InstrKind::Force { .. } => true,
            InstrKind::LdFun { env, .. } => *env != Operand::Global,
            _ => false,
        };
        if runs_code {
            let id = first_id + out.len() as u32;
            let next = Location::new(loc.block, loc.index + 1);
            out.push(checkpoint(id, CheckpointKind::AfterCall, None, next, code, &live, env));
        }
    }
    out
}
