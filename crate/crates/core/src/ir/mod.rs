//! The SSA IR: programs, function versions, code, and the instruction set.

mod parser;
mod printer;
mod verify;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

pub use crate::frontend::BinopKind;
pub use parser::{parse_ir, IrParseError};
pub use printer::{print_ir, print_program, print_version_with};
pub use verify::{replace_uses, verify, verify_program, DominanceError, Violation};

pub type Reg = u32;
pub type Label = u32;
pub type PromiseId = u32;
pub type FunId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operand {
    Reg(Reg),
    /// The global environment.
    Global,
    /// Placeholder for the environment a closure is created in.
    Open,
    /// No value. Bindings to it are skipped by `MkEnv`.
    Missing,
}

impl Operand {
    pub fn reg(self) -> Option<Reg> {
        match self {
            Operand::Reg(r) => Some(r),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Const {
    Null,
    Num(Vec<f64>),
    Lgl(Vec<bool>),
    Str(Vec<String>),
}

impl PartialEq for Const {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Const::Null, Const::Null) => true,
            (Const::Num(a), Const::Num(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (Const::Lgl(a), Const::Lgl(b)) => a == b,
            (Const::Str(a), Const::Str(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Const {}

impl Const {
    pub fn num(v: f64) -> Const {
        Const::Num(vec![v])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Assumption {
    EagerArgs,
    NoReflectiveWrite,
}

impl Assumption {
    pub fn name(self) -> &'static str {
        match self {
            Assumption::EagerArgs => "EagerArgs",
            Assumption::NoReflectiveWrite => "NoReflectiveWrite",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstrKind {
    Binop { op: BinopKind, lhs: Operand, rhs: Operand, env: Operand },
    /// Unconditional branch.
    Jump(Label),
    Branch { cond: Operand, then: Label, els: Label },
    Call { callee: Operand, args: Vec<Operand>, env: Operand },
    /// Transfer to the baseline version. `bindings` maps baseline registers to
    /// values in the current code.
    Deopt { checkpoint: u32, bindings: Vec<(Reg, Operand)>, env: Operand },
    Force { value: Operand, env: Operand },
    LdArg(u32),
    LdConst(Const),
    LdFun { name: String, env: Operand },
    LdVar { name: String, env: Operand },
    MkArg { promise: PromiseId, env: Operand },
    MkEnv { bindings: Vec<(String, Operand)>, parent: Operand, stub: bool },
    MkClosure { func: FunId, env: Operand },
    Phi(Vec<(Label, Operand)>),
    Return(Operand),
    StVar { name: String, value: Operand, env: Operand },
    IsMaterialized(Operand),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instr {
    pub dst: Option<Reg>,
    pub kind: InstrKind,
}

impl Instr {
    pub fn new(dst: Option<Reg>, kind: InstrKind) -> Self {
        Instr { dst, kind }
    }

    pub fn is_terminator(&self) -> bool {
        matches!(
            self.kind,
            InstrKind::Jump(_) | InstrKind::Branch { .. } | InstrKind::Return(_) | InstrKind::Deopt { .. }
        )
    }

    pub fn is_phi(&self) -> bool {
        matches!(self.kind, InstrKind::Phi(_))
    }

    pub fn successors(&self) -> Vec<Label> {
        match &self.kind {
            InstrKind::Jump(l) => vec![*l],
            InstrKind::Branch { then, els, .. } => vec![*then, *els],
            _ => vec![],
        }
    }

    pub fn successors_mut(&mut self) -> Vec<&mut Label> {
        match &mut self.kind {
            InstrKind::Jump(l) => vec![l],
            InstrKind::Branch { then, els, .. } => vec![then, els],
            _ => vec![],
        }
    }

    /// The environment-typed operand, if the instruction has one.
    pub fn env(&self) -> Option<Operand> {
        match &self.kind {
            InstrKind::Binop { env, .. }
            | InstrKind::Call { env, .. }
            | InstrKind::Deopt { env, .. }
            | InstrKind::Force { env, .. }
            | InstrKind::LdFun { env, .. }
            | InstrKind::LdVar { env, .. }
            | InstrKind::MkArg { env, .. }
            | InstrKind::MkClosure { env, .. }
            | InstrKind::StVar { env, .. }
            | InstrKind::IsMaterialized(env) => Some(*env),
            InstrKind::MkEnv { parent, .. } => Some(*parent),
            _ => None,
        }
    }

    pub fn env_mut(&mut self) -> Option<&mut Operand> {
        match &mut self.kind {
            InstrKind::Binop { env, .. }
            | InstrKind::Call { env, .. }
            | InstrKind::Deopt { env, .. }
            | InstrKind::Force { env, .. }
            | InstrKind::LdFun { env, .. }
            | InstrKind::LdVar { env, .. }
            | InstrKind::MkArg { env, .. }
            | InstrKind::MkClosure { env, .. }
            | InstrKind::StVar { env, .. }
            | InstrKind::IsMaterialized(env) => Some(env),
            InstrKind::MkEnv { parent, .. } => Some(parent),
            _ => None,
        }
    }

    /// Operands read as values (everything but the environment operand).
    pub fn value_operands(&self) -> Vec<Operand> {
        match &self.kind {
            InstrKind::Binop { lhs, rhs, .. } => vec![*lhs, *rhs],
            InstrKind::Branch { cond, .. } => vec![*cond],
            InstrKind::Call { callee, args, .. } => {
                let mut v = vec![*callee];
                v.extend(args.iter().copied());
                v
            }
            InstrKind::Deopt { bindings, .. } => bindings.iter().map(|(_, o)| *o).collect(),
            InstrKind::Force { value, .. } => vec![*value],
            InstrKind::MkEnv { bindings, .. } => bindings.iter().map(|(_, o)| *o).collect(),
            InstrKind::Phi(ins) => ins.iter().map(|(_, o)| *o).collect(),
            InstrKind::Return(o) => vec![*o],
            InstrKind::StVar { value, .. } => vec![*value],
            _ => vec![],
        }
    }

    /// All operands, environment operand last.
    pub fn operands(&self) -> Vec<Operand> {
        let mut v = self.value_operands();
        v.extend(self.env());
        v
    }

    pub fn operands_mut(&mut self) -> Vec<&mut Operand> {
        match &mut self.kind {
            InstrKind::Binop { lhs, rhs, env, .. } => vec![lhs, rhs, env],
            InstrKind::Branch { cond, .. } => vec![cond],
            InstrKind::Call { callee, args, env } => {
                let mut v = vec![callee];
                v.extend(args.iter_mut());
                v.push(env);
                v
            }
            InstrKind::Deopt { bindings, env, .. } => {
                let mut v: Vec<&mut Operand> = bindings.iter_mut().map(|(_, o)| o).collect();
                v.push(env);
                v
            }
            InstrKind::Force { value, env } => vec![value, env],
            InstrKind::LdFun { env, .. }
            | InstrKind::LdVar { env, .. }
            | InstrKind::MkArg { env, .. }
            | InstrKind::MkClosure { env, .. }
            | InstrKind::IsMaterialized(env) => vec![env],
            InstrKind::MkEnv { bindings, parent, .. } => {
                let mut v: Vec<&mut Operand> = bindings.iter_mut().map(|(_, o)| o).collect();
                v.push(parent);
                v
            }
            InstrKind::Phi(ins) => ins.iter_mut().map(|(_, o)| o).collect(),
            InstrKind::Return(o) => vec![o],
            InstrKind::StVar { value, env, .. } => vec![value, env],
            InstrKind::Jump(_) | InstrKind::LdArg(_) | InstrKind::LdConst(_) => vec![],
        }
    }

    pub fn uses_reg(&self, r: Reg) -> bool {
        self.operands().contains(&Operand::Reg(r))
    }

    /// Instructions that may run arbitrary code: promise bodies or callees.
    pub fn may_run_code(&self) -> bool {
        matches!(self.kind, InstrKind::Call { .. } | InstrKind::Force { .. } | InstrKind::LdFun { .. })
    }

    pub fn opcode(&self) -> &'static str {
        match &self.kind {
            InstrKind::Binop { op, .. } => op.ir_name(),
            InstrKind::Jump(_) | InstrKind::Branch { .. } => "Branch",
            InstrKind::Call { .. } => "Call",
            InstrKind::Deopt { .. } => "Deopt",
            InstrKind::Force { .. } => "Force",
            InstrKind::LdArg(_) => "LdArg",
            InstrKind::LdConst(_) => "LdConst",
            InstrKind::LdFun { .. } => "LdFun",
            InstrKind::LdVar { .. } => "LdVar",
            InstrKind::MkArg { .. } => "MkArg",
            InstrKind::MkEnv { .. } => "MkEnv",
            InstrKind::MkClosure { .. } => "MkClosure",
            InstrKind::Phi(_) => "Phi",
            InstrKind::Return(_) => "Return",
            InstrKind::StVar { .. } => "StVar",
            InstrKind::IsMaterialized(_) => "IsMaterialized",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub label: Label,
    pub instrs: Vec<Instr>,
}

impl Block {
    pub fn new(label: Label) -> Self {
        Block { label, instrs: Vec::new() }
    }

    pub fn terminator(&self) -> Option<&Instr> {
        self.instrs.last().filter(|i| i.is_terminator())
    }

    pub fn successors(&self) -> Vec<Label> {
        self.terminator().map(|t| t.successors()).unwrap_or_default()
    }
}

/// A location is a (block index, instruction index) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Location {
    pub block: usize,
    pub index: usize,
}

impl Location {
    pub fn new(block: usize, index: usize) -> Self {
        Location { block, index }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.block, self.index)
    }
}

/// A list of basic blocks; the first is the entry.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Code {
    pub blocks: Vec<Block>,
}

impl Code {
    pub fn label_index(&self) -> HashMap<Label, usize> {
        self.blocks.iter().enumerate().map(|(i, b)| (b.label, i)).collect()
    }

    pub fn instr(&self, loc: Location) -> &Instr {
        &self.blocks[loc.block].instrs[loc.index]
    }

    pub fn instr_mut(&mut self, loc: Location) -> &mut Instr {
        &mut self.blocks[loc.block].instrs[loc.index]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Location, &Instr)> {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(b, blk)| blk.instrs.iter().enumerate().map(move |(i, ins)| (Location::new(b, i), ins)))
    }

    pub fn instrs(&self) -> impl Iterator<Item = &Instr> {
        self.blocks.iter().flat_map(|b| b.instrs.iter())
    }

    pub fn instrs_mut(&mut self) -> impl Iterator<Item = &mut Instr> {
        self.blocks.iter_mut().flat_map(|b| b.instrs.iter_mut())
    }

    pub fn defs(&self) -> HashMap<Reg, Location> {
        self.iter().filter_map(|(l, i)| i.dst.map(|d| (d, l))).collect()
    }

    pub fn instr_count(&self) -> usize {
        self.blocks.iter().map(|b| b.instrs.len()).sum()
    }

    /// Predecessor block indices for each block, in block order.
    pub fn predecessors(&self) -> Vec<Vec<usize>> {
        let idx = self.label_index();
        let mut preds = vec![Vec::new(); self.blocks.len()];
        for (b, blk) in self.blocks.iter().enumerate() {
            for s in blk.successors() {
                if let Some(&t) = idx.get(&s) {
                    if !preds[t].contains(&b) {
                        preds[t].push(b);
                    }
                }
            }
        }
        preds
    }

    pub fn successors(&self) -> Vec<Vec<usize>> {
        let idx = self.label_index();
        self.blocks
            .iter()
            .map(|blk| {
                let mut out = Vec::new();
                for s in blk.successors() {
                    if let Some(&t) = idx.get(&s) {
                        if !out.contains(&t) {
                            out.push(t);
                        }
                    }
                }
                out
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Version {
    pub assumptions: BTreeSet<Assumption>,
    pub body: Code,
    pub promises: BTreeMap<PromiseId, Code>,
}

impl Version {
    pub fn codes(&self) -> impl Iterator<Item = &Code> {
        std::iter::once(&self.body).chain(self.promises.values())
    }

    pub fn codes_mut(&mut self) -> impl Iterator<Item = &mut Code> {
        std::iter::once(&mut self.body).chain(self.promises.values_mut())
    }

    pub fn all_instrs(&self) -> impl Iterator<Item = &Instr> {
        self.codes().flat_map(|c| c.instrs())
    }

    /// Registers defined by `MkEnv` anywhere in the version.
    pub fn env_regs(&self) -> BTreeSet<Reg> {
        self.all_instrs()
            .filter(|i| matches!(i.kind, InstrKind::MkEnv { .. }))
            .filter_map(|i| i.dst)
            .collect()
    }

    pub fn max_reg(&self) -> Option<Reg> {
        let mut m: Option<Reg> = None;
        for i in self.all_instrs() {
            for r in i.dst.into_iter().chain(i.operands().into_iter().filter_map(Operand::reg)) {
                m = Some(m.map_or(r, |x| x.max(r)));
            }
        }
        m
    }

    pub fn max_label(&self) -> Option<Label> {
        self.codes().flat_map(|c| c.blocks.iter().map(|b| b.label)).max()
    }
}

/// Allocator for registers, labels and promise ids that are fresh in a version.
#[derive(Debug, Clone)]
pub struct Fresh {
    pub next_reg: Reg,
    pub next_label: Label,
    pub next_promise: PromiseId,
}

impl Fresh {
    pub fn for_version(v: &Version) -> Self {
        Fresh {
            next_reg: v.max_reg().map_or(0, |r| r + 1),
            next_label: v.max_label().map_or(0, |l| l + 1),
            next_promise: v.promises.keys().max().map_or(0, |p| p + 1),
        }
    }

    pub fn reg(&mut self) -> Reg {
        self.next_reg += 1;
        self.next_reg - 1
    }

    pub fn label(&mut self) -> Label {
        self.next_label += 1;
        self.next_label - 1
    }

    pub fn promise(&mut self) -> PromiseId {
        self.next_promise += 1;
        self.next_promise - 1
    }
}

/// A register not used anywhere in the version.
pub fn fresh_register(v: &Version) -> Reg {
    v.max_reg().map_or(0, |r| r + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CheckpointKind {
    Entry,
    BeforeCall,
    /// Resume point right after a call or force; used by stub guards.
    AfterCall,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Checkpoint {
    pub id: u32,
    pub kind: CheckpointKind,
    /// Anchoring AST node, when there is one.
    pub node: Option<crate::frontend::NodeId>,
    /// Next baseline instruction to execute on resume.
    pub location: Location,
    /// Baseline registers live at `location`, not counting the environment.
    pub live: Vec<Reg>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDecl {
    pub id: FunId,
    pub name: String,
    pub params: Vec<String>,
    pub versions: Vec<Version>,
    pub checkpoints: Vec<Checkpoint>,
    /// Register holding the baseline environment (None for top-level code).
    pub baseline_env: Option<Reg>,
}

impl FunctionDecl {
    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn baseline(&self) -> &Version {
        &self.versions[0]
    }

    pub fn checkpoint(&self, id: u32) -> Option<&Checkpoint> {
        self.checkpoints.iter().find(|c| c.id == id)
    }
}

/// Whole-program facts gathered from the source at lowering time.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProgramFacts {
    /// Globals bound exactly once, at top level, to a function definition.
    pub stable_globals: BTreeMap<String, FunId>,
    /// The program may inspect call frames (`sys.frame`, `parent.frame`).
    pub frame_reflective: bool,
    /// The program may obtain environments as values at all.
    pub env_reflective: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub functions: Vec<FunctionDecl>,
    pub entry: FunId,
    pub facts: ProgramFacts,
}

impl Program {
    pub fn function(&self, id: FunId) -> &FunctionDecl {
        &self.functions[id as usize]
    }

    pub fn function_mut(&mut self, id: FunId) -> &mut FunctionDecl {
        &mut self.functions[id as usize]
    }
}

#[cfg(test)]
mod tests;
