use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::dataflow::{solve, Forward, Solution};
use super::scope::ScopeAnalysis;
use crate::cfg::DomInfo;
use crate::ir::{Instr, InstrKind, Location, Operand, Reg, Version};

/// Abstract state of one promise created by a `MkArg`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromAbs {
    Bot,
    /// First forced at this location.
    Forced(Location),
    /// Reachable from somewhere that may force it.
    Leaked,
    Top,
}

impl PromAbs {
    pub fn join(self, other: PromAbs) -> PromAbs {
        match (self, other) {
            (PromAbs::Bot, x) | (x, PromAbs::Bot) => x,
            (a, b) if a == b => a,
            _ => PromAbs::Top,
        }
    }

    pub fn leq(self, other: PromAbs) -> bool {
        self.join(other) == other
    }

    fn force_at(self, l: Location) -> PromAbs {
        match self {
            PromAbs::Bot => PromAbs::Forced(l),
            PromAbs::Forced(m) if m == l => self,
            _ => PromAbs::Top,
        }
    }

    fn leak(self) -> PromAbs {
        match self {
            PromAbs::Bot | PromAbs::Leaked => PromAbs::Leaked,
            _ => PromAbs::Top,
        }
    }

    fn taint(self) -> PromAbs {
        match self {
            PromAbs::Leaked => PromAbs::Top,
            x => x,
        }
    }
}

impl fmt::Display for PromAbs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PromAbs::Bot => f.write_str("⊥"),
            PromAbs::Forced(l) => write!(f, "forced@{}", l),
            PromAbs::Leaked => f.write_str("leaked"),
            PromAbs::Top => f.write_str("T"),
        }
    }
}

/// State per `MkArg` register; absent means `Bot`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PromState {
    cells: BTreeMap<Reg, PromAbs>,
}

impl PromState {
    pub fn get(&self, r: Reg) -> PromAbs {
        self.cells.get(&r).copied().unwrap_or(PromAbs::Bot)
    }

    pub fn set(&mut self, r: Reg, p: PromAbs) {
        if p == PromAbs::Bot {
            self.cells.remove(&r);
        } else {
            self.cells.insert(r, p);
        }
    }

    pub fn leq(&self, other: &PromState) -> bool {
        self.cells.iter().all(|(r, p)| p.leq(other.get(*r)))
    }
}

#[derive(Debug, Clone, Default)]
pub struct PromiseAnalysis {
    pub mkargs: BTreeSet<Reg>,
    pub scope: ScopeAnalysis,
}

impl PromiseAnalysis {
    pub fn new(v: &Version, scope: ScopeAnalysis) -> Self {
        let mkargs = v
            .body
            .instrs()
            .filter(|i| matches!(i.kind, InstrKind::MkArg { .. }))
            .filter_map(|i| i.dst)
            .collect();
        PromiseAnalysis { mkargs, scope }
    }

    pub fn solve(&self, v: &Version, dom: &DomInfo) -> Solution<PromState> {
        solve(self, &v.body, dom)
    }

    /// `MkArg` registers whose promise may be evaluated at the `Force` at
    /// `loc` instead: the force is the promise's only use and is reached
    /// before anything else could force it.
    pub fn inlinable(&self, v: &Version, sol: &Solution<PromState>) -> Vec<(Reg, Location)> {
        let mut uses: BTreeMap<Reg, Vec<(Location, &Instr)>> = BTreeMap::new();
        for code in v.codes() {
            for (loc, i) in code.iter() {
                for o in i.operands() {
                    if let Operand::Reg(r) = o {
                        if self.mkargs.contains(&r) {
                            uses.entry(r).or_default().push((loc, i));
                        }
                    }
                }
            }
        }
        let in_promises: BTreeSet<Reg> = v
            .promises
            .values()
            .flat_map(|c| c.instrs().flat_map(|i| i.operands()))
            .filter_map(Operand::reg)
            .collect();
        let mut out = Vec::new();
        for (r, us) in uses {
            if us.len() != 1 || in_promises.contains(&r) {
                continue;
            }
            let (loc, i) = us[0];
            if !matches!(i.kind, InstrKind::Force { value: Operand::Reg(x), .. } if x == r) {
                continue;
            }
            if sol.at(loc).get(r) == PromAbs::Bot && sol.after(loc).get(r) == PromAbs::Forced(loc) {
                out.push((r, loc));
            }
        }
        out
    }
}

impl Forward for PromiseAnalysis {
    type State = PromState;

    fn bottom(&self) -> PromState {
        PromState::default()
    }

    fn entry(&self) -> PromState {
        PromState::default()
    }

    fn join(&self, into: &mut PromState, other: &PromState) {
        for (r, p) in &other.cells {
            let j = into.get(*r).join(*p);
            into.set(*r, j);
        }
    }

    fn transfer(&self, loc: Location, i: &Instr, s: &mut PromState) {
        if let InstrKind::MkArg { .. } = i.kind {
            s.set(i.dst.unwrap(), PromAbs::Bot);
            return;
        }
        if i.may_run_code() && self.scope.taints(i) {
            for p in s.cells.values_mut() {
                *p = p.taint();
            }
        }
        if let InstrKind::Force { value: Operand::Reg(r), .. } = i.kind {
            if self.mkargs.contains(&r) {
                s.set(r, s.get(r).force_at(loc));
            }
            return;
        }
        for o in i.value_operands() {
            if let Operand::Reg(r) = o {
                if self.mkargs.contains(&r) {
                    s.set(r, s.get(r).leak());
                }
            }
        }
    }
}
