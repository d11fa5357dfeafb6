use super::{FnCtx, Pass};
use crate::ir::{verify, Assumption, FunId, InstrKind, Operand, Program, Version, Violation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineConfig {
    /// One round of the pipeline; rounds repeat until nothing changes.
    pub passes: Vec<Pass>,
    /// Maximum number of rounds.
    pub fuel: usize,
    /// Also build a version assuming all arguments are values.
    pub eager_versions: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        use Pass::*;
        PipelineConfig {
            passes: vec![
                Cleanup,
                Scope,
                Dse,
                Inline,
                PromiseInline,
                Scope,
                Dse,
                StubEnv,
                DelayEnv,
                ElideEnv,
                Cleanup,
            ],
            fuel: 10,
            eager_versions: true,
        }
    }
}

impl PipelineConfig {
    pub fn without(mut self, p: Pass) -> Self {
        self.passes.retain(|x| *x != p);
        self
    }

    pub fn only(passes: Vec<Pass>) -> Self {
        PipelineConfig { passes, ..Default::default() }
    }
}

/// Reported after each pass application that changed something.
#[derive(Debug)]
pub struct PassEvent<'a> {
    pub fun: FunId,
    pub pass: Pass,
    /// The version after the pass (before it, if rolled back).
    pub version: &'a Version,
    /// Set when the result failed verification and was discarded.
    pub rejected: Option<Vec<Violation>>,
}

fn check(prog: &Program, fun: FunId, v: &Version) -> Result<(), Vec<Violation>> {
    verify(v)?;
    let decl = prog.function(fun);
    let mut out = Vec::new();
    for i in v.all_instrs() {
        match &i.kind {
            InstrKind::LdArg(n) if *n as usize >= decl.params.len() => {
                out.push(Violation(format!("LdArg({}) out of range", n)))
            }
            InstrKind::Deopt { checkpoint, .. } if decl.checkpoint(*checkpoint).is_none() => {
                out.push(Violation(format!("unknown checkpoint cp{}", checkpoint)))
            }
            _ => {}
        }
        if fun == prog.entry && i.operands().contains(&Operand::Open) {
            out.push(Violation("O used in top-level code".into()));
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Optimize one function's baseline under the given assumptions.
pub fn optimize_function(
    prog: &Program,
    fun: FunId,
    assumptions: &[Assumption],
    config: &PipelineConfig,
    observer: &mut dyn FnMut(PassEvent),
) -> Version {
    let mut cx = FnCtx::new(prog, fun, assumptions);
    for _ in 0..config.fuel {
        let mut changed = false;
        for &pass in &config.passes {
            let saved = cx.clone();
            if !pass.run(&mut cx) {
                continue;
            }
            match check(prog, fun, &cx.v) {
                Ok(()) => {
                    changed = true;
                    observer(PassEvent { fun, pass, version: &cx.v, rejected: None });
                }
                Err(vs) => {
                    cx = saved;
                    observer(PassEvent { fun, pass, version: &cx.v, rejected: Some(vs) });
                }
            }
        }
        if !changed {
            break;
        }
    }
    cx.v
}

/// Whether the version forces one of its arguments.
fn forces_argument(v: &Version) -> bool {
    let args: Vec<_> =
        v.body.instrs().filter(|i| matches!(i.kind, InstrKind::LdArg(_))).filter_map(|i| i.dst).collect();
    v.body.instrs().any(|i| matches!(i.kind, InstrKind::Force { value: Operand::Reg(r), .. } if args.contains(&r)))
}

/// Add optimized versions to every function of the program.
pub fn optimize_program(prog: &Program, config: &PipelineConfig, observer: &mut dyn FnMut(PassEvent)) -> Program {
    let mut out = prog.clone();
    for f in &prog.functions {
        let v = optimize_function(prog, f.id, &[], config, observer);
        let eager = config.eager_versions && forces_argument(&v);
        out.function_mut(f.id).versions.push(v);
        if eager {
            let v2 = optimize_function(prog, f.id, &[Assumption::EagerArgs], config, observer);
            out.function_mut(f.id).versions.push(v2);
        }
    }
    out
}
