use std::collections::BTreeMap;
use std::fmt;

use super::scope::ScopeAnalysis;
use crate::ir::{InstrKind, Operand, ProgramFacts, Reg, Version};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvClass {
    /// Only used as a data dependency; can be removed.
    NoEscape,
    /// Still read or written directly, or exposed to reflection through a
    /// call; a stub can stand in for it.
    StubEligible,
    Escapes,
}

impl fmt::Display for EnvClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnvClass::NoEscape => "no-escape",
            EnvClass::StubEligible => "stub-eligible",
            EnvClass::Escapes => "escapes",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnvInfo {
    pub class: EnvClass,
    /// Number of remaining loads, stores and function lookups on it.
    pub accesses: usize,
    /// Number of `Deopt` instructions that need it.
    pub deopts: usize,
    pub stub: bool,
}

impl EnvInfo {
    pub fn elidable(&self) -> bool {
        self.class == EnvClass::NoEscape && self.deopts == 0
    }
}

/// Classify every environment created in the body.
pub fn escape_analysis(v: &Version, facts: &ProgramFacts) -> BTreeMap<Reg, EnvInfo> {
    let scope = ScopeAnalysis::new(v, facts);
    let mut out: BTreeMap<Reg, (bool, bool, usize, usize, bool)> = BTreeMap::new();
    for i in v.body.instrs() {
        if let InstrKind::MkEnv { stub, .. } = i.kind {
            out.insert(i.dst.unwrap(), (false, false, 0, 0, stub));
        }
    }
    for code in v.promises.values() {
        for i in code.instrs() {
            for o in i.operands() {
                if let Some(e) = o.reg() {
                    if let Some(x) = out.get_mut(&e) {
                        x.0 = true;
                    }
                }
            }
        }
    }
    for i in v.body.instrs() {
        for o in i.value_operands() {
            if let Some(x) = o.reg().and_then(|e| out.get_mut(&e)) {
                x.0 = true;
            }
        }
        let Some(Operand::Reg(e)) = i.env() else { continue };
        let Some(x) = out.get_mut(&e) else { continue };
        match &i.kind {
            InstrKind::MkEnv { .. } | InstrKind::MkArg { .. } | InstrKind::MkClosure { .. } => x.0 = true,
            InstrKind::LdVar { .. } | InstrKind::StVar { .. } => x.2 += 1,
            InstrKind::LdFun { .. } => {
                x.2 += 1;
                x.1 |= facts.env_reflective;
            }
            InstrKind::Deopt { .. } => x.3 += 1,
            InstrKind::Call { .. } | InstrKind::Force { .. } if scope.taints(i) => x.1 |= facts.env_reflective,
            _ => {}
        }
    }
    out.into_iter()
        .map(|(e, (escapes, exposed, accesses, deopts, stub))| {
            let class = if escapes {
                EnvClass::Escapes
            } else if exposed || accesses > 0 {
                EnvClass::StubEligible
            } else {
                EnvClass::NoEscape
            };
            (e, EnvInfo { class, accesses, deopts, stub })
        })
        .collect()
}
