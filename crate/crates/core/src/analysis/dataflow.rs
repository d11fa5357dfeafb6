use crate::cfg::DomInfo;
use crate::ir::{Code, Instr, Location};

/// A forward dataflow problem over one code.
pub trait Forward {
    type State: Clone + PartialEq;

    fn bottom(&self) -> Self::State;
    /// State on entry to the first block.
    fn entry(&self) -> Self::State;
    fn join(&self, into: &mut Self::State, other: &Self::State);
    fn transfer(&self, loc: Location, instr: &Instr, state: &mut Self::State);
}

/// Fixpoint solution: the state before every instruction, and at each block exit.
#[derive(Debug, Clone)]
pub struct Solution<S> {
    pub before: Vec<Vec<S>>,
    pub exit: Vec<S>,
}

impl<S: Clone> Solution<S> {
    pub fn at(&self, loc: Location) -> &S {
        &self.before[loc.block][loc.index]
    }

    /// State right after the instruction at `loc`.
    pub fn after(&self, loc: Location) -> &S {
        self.before[loc.block].get(loc.index + 1).unwrap_or(&self.exit[loc.block])
    }
}

/// Round-robin iteration in reverse postorder until nothing changes.
pub fn solve<A: Forward>(a: &A, code: &Code, dom: &DomInfo) -> Solution<A::State> {
    let n = code.blocks.len();
    let mut entry_states: Vec<A::State> = vec![a.bottom(); n];
    let mut exit: Vec<A::State> = vec![a.bottom(); n];
    if n == 0 {
        return Solution { before: Vec::new(), exit };
    }
    let mut visited = vec![false; n];
    let mut changed = true;
    while changed {
        changed = false;
        for &b in &dom.rpo {
            let mut s = if b == 0 { a.entry() } else { a.bottom() };
            for &p in &dom.preds[b] {
                if dom.is_reachable(p) {
                    a.join(&mut s, &exit[p]);
                }
            }
            if visited[b] && s == entry_states[b] {
                continue;
            }
            visited[b] = true;
            entry_states[b] = s.clone();
            for (i, instr) in code.blocks[b].instrs.iter().enumerate() {
                a.transfer(Location::new(b, i), instr, &mut s);
            }
            if s != exit[b] {
                exit[b] = s;
                changed = true;
            }
        }
    }
    // Record the states inside blocks once the block entries are stable.
    let mut before: Vec<Vec<A::State>> = Vec::with_capacity(n);
    for (b, blk) in code.blocks.iter().enumerate() {
        let mut s = entry_states[b].clone();
        let mut states = Vec::with_capacity(blk.instrs.len());
        for (i, instr) in blk.instrs.iter().enumerate() {
            states.push(s.clone());
            a.transfer(Location::new(b, i), instr, &mut s);
        }
        before.push(states);
    }
    Solution { before, exit }
}
