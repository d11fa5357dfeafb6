//! Transformations on function versions and the pass manager that runs them.

mod cleanup;
mod delay;
mod dse;
mod edit;
mod elide;
mod inline;
mod pipeline;
mod promise_inline;
mod resolve;
mod stub;

use std::collections::BTreeMap;
use std::fmt;

use crate::ir::{Assumption, FunId, FunctionDecl, Fresh, Operand, Program, Reg, Version};

pub use cleanup::cleanup;
pub use delay::delay_environments;
pub use dse::dead_store_elim;
pub use edit::{prune_unreachable, replace_all, split_block};
pub use elide::elide_environments;
pub use inline::{inline_closures, InlineLimits};
pub use pipeline::{optimize_function, optimize_program, PassEvent, PipelineConfig};
pub use promise_inline::inline_promises;
pub use resolve::{resolve_loads, ssa_value};
pub use stub::speculate_stub_envs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pass {
    Cleanup,
    Scope,
    Dse,
    Inline,
    PromiseInline,
    StubEnv,
    DelayEnv,
    ElideEnv,
}

impl Pass {
    pub const ALL: [Pass; 8] = [
        Pass::Cleanup,
        Pass::Scope,
        Pass::Dse,
        Pass::Inline,
        Pass::PromiseInline,
        Pass::StubEnv,
        Pass::DelayEnv,
        Pass::ElideEnv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pass::Cleanup => "cleanup",
            Pass::Scope => "scope",
            Pass::Dse => "dse",
            Pass::Inline => "inline",
            Pass::PromiseInline => "promise-inline",
            Pass::StubEnv => "stub-env",
            Pass::DelayEnv => "delay-env",
            Pass::ElideEnv => "elide-env",
        }
    }

    pub fn from_name(s: &str) -> Option<Pass> {
        Pass::ALL.into_iter().find(|p| p.name() == s)
    }

    /// Apply the pass once; true if the version changed.
    pub fn run(self, cx: &mut FnCtx) -> bool {
        match self {
            Pass::Cleanup => cleanup(cx),
            Pass::Scope => resolve_loads(cx),
            Pass::Dse => dead_store_elim(cx),
            Pass::Inline => inline_closures(cx),
            Pass::PromiseInline => inline_promises(cx),
            Pass::StubEnv => speculate_stub_envs(cx),
            Pass::DelayEnv => delay_environments(cx),
            Pass::ElideEnv => elide_environments(cx),
        }
    }
}

impl fmt::Display for Pass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A version being optimized, with what is needed to relate it back to
/// the baseline.
#[derive(Debug, Clone)]
pub struct FnCtx<'p> {
    pub prog: &'p Program,
    pub fun: FunId,
    pub v: Version,
    /// Baseline register to the operand holding the same value here.
    pub forward: BTreeMap<Reg, Operand>,
    pub fresh: Fresh,
    /// Registers at or below this number come from the baseline.
    pub baseline_max: Option<Reg>,
    pub limits: InlineLimits,
    pub inline_rounds: usize,
}

impl<'p> FnCtx<'p> {
    pub fn new(prog: &'p Program, fun: FunId, assumptions: &[Assumption]) -> Self {
        let mut v = prog.function(fun).baseline().clone();
        v.assumptions.extend(assumptions.iter().copied());
        let baseline_max = v.max_reg();
        let forward = (0..baseline_max.map_or(0, |m| m + 1)).map(|r| (r, Operand::Reg(r))).collect();
        let fresh = Fresh::for_version(&v);
        FnCtx { prog, fun, v, forward, fresh, baseline_max, limits: InlineLimits::default(), inline_rounds: 0 }
    }

    pub fn decl(&self) -> &'p FunctionDecl {
        self.prog.function(self.fun)
    }

    /// Replace every use of `old` and keep the baseline mapping current.
    pub fn replace(&mut self, old: Reg, new: Operand) {
        replace_all(&mut self.v, old, new);
        for o in self.forward.values_mut() {
            if *o == Operand::Reg(old) {
                *o = new;
            }
        }
    }

    pub fn is_original(&self, r: Reg) -> bool {
        self.baseline_max.is_some_and(|m| r <= m)
    }
}

#[cfg(test)]
mod tests;
