//! Dataflow analyses over a version's body: scope resolution, promise
//! force dominance and environment escape.

pub mod dataflow;
pub mod escape;
pub mod promise;
pub mod scope;

#[cfg(test)]
mod tests;

use std::collections::BTreeSet;

use crate::cfg::compute_dominators;
use crate::ir::{print_version_with, InstrKind, Operand, ProgramFacts, Reg, Version};
pub use dataflow::{solve, Forward, Solution};
pub use escape::{escape_analysis, EnvClass, EnvInfo};
pub use promise::{PromAbs, PromState, PromiseAnalysis};
pub use scope::{AbsLoc, Cell, ScopeAnalysis, ScopeState};

/// Body registers that can never hold a promise.
pub fn known_values(v: &Version) -> BTreeSet<Reg> {
    let mut known = BTreeSet::new();
    let mut phis = Vec::new();
    for i in v.body.instrs() {
        let Some(d) = i.dst else { continue };
        match &i.kind {
            InstrKind::LdConst(_)
            | InstrKind::Binop { .. }
            | InstrKind::MkClosure { .. }
            | InstrKind::MkEnv { .. }
            | InstrKind::Call { .. }
            | InstrKind::Force { .. }
            | InstrKind::LdFun { .. }
            | InstrKind::IsMaterialized(_)
            | InstrKind::LdVar { env: Operand::Global, .. } => {
                known.insert(d);
            }
            InstrKind::Phi(ins) => phis.push((d, ins)),
            _ => {}
        }
    }
    // Optimistically assume phis are values, then drop those with an
    // input that is not.
    let mut cand: BTreeSet<Reg> = phis.iter().map(|(d, _)| *d).collect();
    loop {
        let next: BTreeSet<Reg> = phis
            .iter()
            .filter(|(d, ins)| {
                cand.contains(d)
                    && ins.iter().all(|(_, o)| match o {
                        Operand::Reg(r) => known.contains(r) || cand.contains(r),
                        _ => true,
                    })
            })
            .map(|(d, _)| *d)
            .collect();
        if next == cand {
            break;
        }
        cand = next;
    }
    known.extend(cand);
    known
}

/// The version annotated with the scope state before each instruction
/// (cells that are defined) and the class of each environment.
pub fn dump_analysis(v: &Version, facts: &ProgramFacts) -> String {
    let dom = compute_dominators(&v.body);
    let scope = ScopeAnalysis::new(v, facts);
    let sol = scope.solve(v, &dom);
    let esc = escape_analysis(v, facts);
    let mut out = String::new();
    for (e, info) in &esc {
        out.push_str(&format!("# e{}: {}\n", e, info.class));
    }
    let note = |loc| {
        let s: &ScopeState = sol.at(loc);
        let cells: Vec<String> = s.cells().map(|(e, n, c)| format!("e{}.{}={}", e, n, c)).collect();
        if cells.is_empty() {
            None
        } else {
            Some(cells.join(" "))
        }
    };
    out.push_str(&print_version_with(v, &note));
    out
}
