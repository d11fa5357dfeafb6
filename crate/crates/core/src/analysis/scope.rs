use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::rc::Rc;

use super::dataflow::{solve, Forward, Solution};
use super::known_values;
use crate::cfg::DomInfo;
use crate::ir::{Assumption, Instr, InstrKind, Location, Operand, ProgramFacts, PromiseId, Reg, Version};

/// Where a variable may have been defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AbsLoc {
    /// Not bound in the environment.
    Undefined,
    At(Location),
}

impl fmt::Display for AbsLoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbsLoc::Undefined => f.write_str("ε"),
            AbsLoc::At(l) => write!(f, "{}", l),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cell {
    Top,
    Set(BTreeSet<AbsLoc>),
}

impl Cell {
    pub fn empty() -> Cell {
        Cell::Set(BTreeSet::new())
    }

    pub fn single(l: AbsLoc) -> Cell {
        Cell::Set(BTreeSet::from([l]))
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Cell::Set(s) if s.is_empty())
    }

    pub fn join(&self, other: &Cell) -> Cell {
        match (self, other) {
            (Cell::Set(a), Cell::Set(b)) => Cell::Set(a.union(b).copied().collect()),
            _ => Cell::Top,
        }
    }

    pub fn leq(&self, other: &Cell) -> bool {
        match (self, other) {
            (_, Cell::Top) => true,
            (Cell::Top, _) => false,
            (Cell::Set(a), Cell::Set(b)) => a.is_subset(b),
        }
    }

    pub fn contains(&self, l: &AbsLoc) -> bool {
        match self {
            Cell::Top => true,
            Cell::Set(s) => s.contains(l),
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Top => f.write_str("T"),
            Cell::Set(s) => write!(f, "{{{}}}", s.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",")),
        }
    }
}

/// Abstract store: (environment register, variable) to cell. Absent keys
/// are the empty set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScopeState {
    cells: BTreeMap<Reg, BTreeMap<Rc<str>, Cell>>,
}

impl ScopeState {
    pub fn get(&self, env: Reg, name: &str) -> Cell {
        self.cells.get(&env).and_then(|m| m.get(name)).cloned().unwrap_or_else(Cell::empty)
    }

    pub fn set(&mut self, env: Reg, name: &str, c: Cell) {
        if c.is_empty() {
            if let Some(m) = self.cells.get_mut(&env) {
                m.remove(name);
                if m.is_empty() {
                    self.cells.remove(&env);
                }
            }
            return;
        }
        let m = self.cells.entry(env).or_default();
        match m.get_mut(name) {
            Some(x) => *x = c,
            None => {
                m.insert(Rc::from(name), c);
            }
        }
    }

    pub fn join_with(&mut self, other: &ScopeState) {
        for (e, om) in &other.cells {
            let m = self.cells.entry(*e).or_default();
            for (n, c) in om {
                match m.get_mut(n) {
                    Some(mine) => {
                        if !c.leq(mine) {
                            *mine = mine.join(c);
                        }
                    }
                    None => {
                        m.insert(n.clone(), c.clone());
                    }
                }
            }
        }
    }

    pub fn leq(&self, other: &ScopeState) -> bool {
        self.cells().all(|(e, n, c)| c.leq(&other.get(e, n)))
    }

    /// Every defined cell of a tainted environment becomes Top.
    pub fn taint(&mut self, tainted: impl Fn(Reg) -> bool) {
        for (e, m) in self.cells.iter_mut() {
            if tainted(*e) {
                for c in m.values_mut() {
                    *c = Cell::Top;
                }
            }
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = (Reg, &str, &Cell)> {
        self.cells.iter().flat_map(|(e, m)| m.iter().map(move |(n, c)| (*e, &**n, c)))
    }
}

/// Per-version facts the scope transfer function depends on.
#[derive(Debug, Clone, Default)]
pub struct ScopeAnalysis {
    /// Variables mentioned for each environment created in the body.
    pub names: BTreeMap<Reg, BTreeSet<String>>,
    pub stubs: BTreeSet<Reg>,
    /// Registers statically known not to hold promises.
    pub known: BTreeSet<Reg>,
    /// Under EagerArgs, arguments are values.
    pub eager: bool,
    pub args: BTreeSet<Reg>,
    /// Any code may write any non-stub environment (reflective programs).
    pub taint_all: bool,
    /// Environments that forcing some promise may write to.
    pub writable: BTreeSet<Reg>,
}

impl ScopeAnalysis {
    pub fn new(v: &Version, facts: &ProgramFacts) -> Self {
        let mut a = ScopeAnalysis {
            known: known_values(v),
            eager: v.assumptions.contains(&Assumption::EagerArgs),
            taint_all: facts.env_reflective,
            ..Default::default()
        };
        for i in v.body.instrs() {
            match &i.kind {
                InstrKind::MkEnv { bindings, stub, .. } => {
                    let e = i.dst.unwrap();
                    a.names.entry(e).or_default().extend(bindings.iter().map(|(n, _)| n.clone()));
                    if *stub {
                        a.stubs.insert(e);
                    }
                }
                InstrKind::LdArg(_) => {
                    a.args.insert(i.dst.unwrap());
                }
                _ => {}
            }
        }
        for i in v.body.instrs() {
            let (name, env) = match &i.kind {
                InstrKind::StVar { name, env, .. }
                | InstrKind::LdVar { name, env }
                | InstrKind::LdFun { name, env } => (name, env),
                _ => continue,
            };
            if let Some(e) = env.reg() {
                if let Some(ns) = a.names.get_mut(&e) {
                    ns.insert(name.clone());
                }
            }
        }
        let writers = writing_promises(v);
        for i in v.all_instrs() {
            if let InstrKind::MkArg { promise, env: Operand::Reg(e) } = &i.kind {
                if writers.contains(promise) {
                    a.writable.insert(*e);
                }
            }
        }
        a
    }

    pub fn is_value(&self, o: Operand) -> bool {
        match o {
            Operand::Reg(r) => self.known.contains(&r) || (self.eager && self.args.contains(&r)),
            _ => true,
        }
    }

    /// Whether executing `i` may run code that writes environments.
    pub fn taints(&self, i: &Instr) -> bool {
        match &i.kind {
            InstrKind::Call { .. } => true,
            InstrKind::Force { value, .. } => !self.is_value(*value),
            // The global environment never holds promises.
            InstrKind::LdFun { env, .. } => *env != Operand::Global,
            _ => false,
        }
    }

    pub fn env_tainted(&self, e: Reg) -> bool {
        !self.stubs.contains(&e) && (self.taint_all || self.writable.contains(&e))
    }

    pub fn solve(&self, v: &Version, dom: &DomInfo) -> Solution<ScopeState> {
        solve(self, &v.body, dom)
    }
}

/// Promises whose code, directly or through promises it creates, stores to
/// a variable.
fn writing_promises(v: &Version) -> BTreeSet<PromiseId> {
    let mut out = BTreeSet::new();
    loop {
        let before = out.len();
        for (p, code) in &v.promises {
            let writes = code.instrs().any(|i| match &i.kind {
                InstrKind::StVar { .. } => true,
                InstrKind::MkArg { promise, .. } => out.contains(promise),
                _ => false,
            });
            if writes {
                out.insert(*p);
            }
        }
        if out.len() == before {
            return out;
        }
    }
}

impl Forward for ScopeAnalysis {
    type State = ScopeState;

    fn bottom(&self) -> ScopeState {
        ScopeState::default()
    }

    fn entry(&self) -> ScopeState {
        ScopeState::default()
    }

    fn join(&self, into: &mut ScopeState, other: &ScopeState) {
        into.join_with(other);
    }

    fn transfer(&self, loc: Location, i: &Instr, s: &mut ScopeState) {
        match &i.kind {
            InstrKind::MkEnv { bindings, .. } => {
                let e = i.dst.unwrap();
                if let Some(names) = self.names.get(&e) {
                    for n in names {
                        let l = if bindings.iter().any(|(b, _)| b == n) { AbsLoc::At(loc) } else { AbsLoc::Undefined };
                        s.set(e, n, Cell::single(l));
                    }
                }
            }
            InstrKind::StVar { name, env: Operand::Reg(e), .. } if self.names.contains_key(e) => {
                s.set(*e, name, Cell::single(AbsLoc::At(loc)));
            }
            _ if self.taints(i) => s.taint(|e| self.env_tainted(e)),
            _ => {}
        }
    }
}
