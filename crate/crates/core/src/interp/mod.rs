//! Reference interpreter for any version of a program: environments,
//! promises, reflection, stub materialization and deoptimization.

mod builtins;
pub mod value;


use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use indexmap::IndexMap;

use crate::frontend::builtin_table;
use crate::ir::{Assumption, FunId, InstrKind, Label, Location, Operand, Program, PromiseId, Reg};
pub use value::{binop, truthy, Binding, Closure, EnvRef, Origin, Promise, RtEnv, RtValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    UnboundVariable,
    NotAFunction,
    MissingArgumentUsed,
    ArityMismatch,
    TypeError,
    FrameOutOfRange,
    RecursionLimit,
    StepLimit,
    PromiseRecursion,
    /// Malformed IR reached at runtime.
    Internal,
}

impl ErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::UnboundVariable => "unbound-variable",
            ErrorKind::NotAFunction => "not-a-function",
            ErrorKind::MissingArgumentUsed => "missing-argument-used",
            ErrorKind::ArityMismatch => "arity-mismatch",
            ErrorKind::TypeError => "type-error",
            ErrorKind::FrameOutOfRange => "frame-out-of-range",
            ErrorKind::RecursionLimit => "recursion-limit",
            ErrorKind::StepLimit => "step-limit",
            ErrorKind::PromiseRecursion => "promise-recursion",
            ErrorKind::Internal => "internal",
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind}: {msg}")]
pub struct RtError {
    pub kind: ErrorKind,
    pub msg: String,
}

impl RtError {
    pub fn new(kind: ErrorKind, msg: impl Into<String>) -> Self {
        RtError { kind, msg: msg.into() }
    }
}

fn internal(msg: impl Into<String>) -> RtError {
    RtError::new(ErrorKind::Internal, msg)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub envs_created: u64,
    pub stub_envs_created: u64,
    pub stubs_materialized: u64,
    pub promises_created: u64,
    pub promises_forced: u64,
    pub deopts_taken: u64,
    pub calls: u64,
}

/// Observable events, compared between baseline and optimized runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    Reflect { builtin: &'static str, detail: String },
    StoreGlobal { name: String, value: String },
    Error(ErrorKind),
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Reflect { builtin, detail } if detail.is_empty() => write!(f, "EVT reflect {}", builtin),
            Event::Reflect { builtin, detail } => write!(f, "EVT reflect {} {}", builtin, detail),
            Event::StoreGlobal { name, value } => write!(f, "EVT store {} {}", name, value),
            Event::Error(k) => write!(f, "EVT error {}", k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VersionSelector {
    BaselineOnly,
    /// The last version whose assumptions hold for the call.
    Best,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub selector: VersionSelector,
    pub step_limit: u64,
    pub depth_limit: usize,
    /// Record the defining store of every body `LdVar` on a local environment.
    pub record_loads: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { selector: VersionSelector::Best, step_limit: 5_000_000, depth_limit: 120, record_loads: false }
    }
}

impl RunOptions {
    pub fn baseline() -> Self {
        RunOptions { selector: VersionSelector::BaselineOnly, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadObservation {
    pub fun: FunId,
    pub version: usize,
    pub loc: Location,
    pub name: String,
    /// `None` when the environment had no binding for the name.
    pub origin: Option<Origin>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub value: Result<RtValue, RtError>,
    pub counters: Counters,
    pub trace: Vec<Event>,
    pub loads: Vec<LoadObservation>,
}

impl RunResult {
    /// Printed form of the outcome: the value, or the error kind.
    pub fn outcome(&self) -> String {
        match &self.value {
            Ok(v) => v.to_string(),
            Err(e) => format!("Error: {}", e.kind),
        }
    }

    pub fn error_kind(&self) -> Option<ErrorKind> {
        self.value.as_ref().err().map(|e| e.kind)
    }
}

pub fn run(program: &Program, opts: &RunOptions) -> RunResult {
    let mut it = Interp::new(program, opts);
    let global = it.global.clone();
    let version = it.select(program.entry, &[]);
    let mut act = Act {
        fun: program.entry,
        version,
        promise: None,
        regs: HashMap::new(),
        args: Rc::new(Vec::new()),
        closure_env: global,
        frame: 0,
    };
    let value = it.exec(&mut act);
    if let Err(e) = &value {
        it.trace.push(Event::Error(e.kind));
    }
    RunResult { value, counters: it.counters, trace: it.trace, loads: it.loads }
}

struct Frame {
    /// Environment the frame most recently exposed through a call or force.
    env: Option<EnvRef>,
    /// Environment dependency of the call that created the frame.
    caller_env: EnvRef,
}

struct Act {
    fun: FunId,
    version: usize,
    promise: Option<PromiseId>,
    regs: HashMap<Reg, RtValue>,
    args: Rc<Vec<RtValue>>,
    closure_env: EnvRef,
    frame: usize,
}

pub(crate) struct Interp<'p> {
    prog: &'p Program,
    opts: &'p RunOptions,
    global: EnvRef,
    frames: Vec<Frame>,
    counters: Counters,
    trace: Vec<Event>,
    loads: Vec<LoadObservation>,
    steps: u64,
    depth: usize,
    next_env: u64,
}

impl<'p> Interp<'p> {
    fn new(prog: &'p Program, opts: &'p RunOptions) -> Self {
        let mut bindings = IndexMap::new();
        for b in builtin_table() {
            bindings.insert(b.name.to_string(), Binding { value: RtValue::Builtin(b.kind), origin: Origin::Reflective });
        }
        let global = Rc::new(RefCell::new(RtEnv { id: 0, bindings, parent: None, is_stub: false, materialized: false }));
        let counters = Counters { envs_created: 1, ..Default::default() };
        Interp {
            prog,
            opts,
            frames: vec![Frame { env: Some(global.clone()), caller_env: global.clone() }],
            global,
            counters,
            trace: Vec::new(),
            loads: Vec::new(),
            steps: 0,
            depth: 0,
            next_env: 1,
        }
    }

    fn select(&self, fun: FunId, args: &[RtValue]) -> usize {
        let versions = &self.prog.function(fun).versions;
        match self.opts.selector {
            VersionSelector::BaselineOnly => 0,
            VersionSelector::Best => (0..versions.len())
                .rev()
                .find(|&i| {
                    versions[i].assumptions.iter().all(|a| match a {
                        Assumption::EagerArgs => args.iter().all(|v| !v.is_promise()),
                        Assumption::NoReflectiveWrite => true,
                    })
                })
                .unwrap_or(0),
        }
    }

    fn new_env(&mut self, bindings: IndexMap<String, Binding>, parent: EnvRef, stub: bool) -> EnvRef {
        if stub {
            self.counters.stub_envs_created += 1;
        } else {
            self.counters.envs_created += 1;
        }
        self.next_env += 1;
        Rc::new(RefCell::new(RtEnv {
            id: self.next_env,
            bindings,
            parent: Some(parent),
            is_stub: stub,
            materialized: false,
        }))
    }

    /// Note a structural write to `env`, upgrading a stub in place.
    fn materialize(&mut self, env: &EnvRef) {
        let mut e = env.borrow_mut();
        if e.is_stub && !e.materialized {
            e.materialized = true;
            self.counters.envs_created += 1;
            self.counters.stubs_materialized += 1;
        }
    }

    fn val(&self, act: &Act, o: Operand) -> Result<RtValue, RtError> {
        match o {
            Operand::Reg(r) => act.regs.get(&r).cloned().ok_or_else(|| internal(format!("register %{} unset", r))),
            Operand::Global => Ok(RtValue::Env(self.global.clone())),
            Operand::Open => Ok(RtValue::Env(act.closure_env.clone())),
            Operand::Missing => Ok(RtValue::Missing),
        }
    }

    fn env_of(&self, act: &Act, o: Operand) -> Result<EnvRef, RtError> {
        match self.val(act, o)? {
            RtValue::Env(e) => Ok(e),
            other => Err(internal(format!("expected an environment, found {}", other.type_name()))),
        }
    }

    /// A value operand that must not be a promise or missing.
    fn strict_val(&self, act: &Act, o: Operand) -> Result<RtValue, RtError> {
        match self.val(act, o)? {
            RtValue::Missing => Err(RtError::new(ErrorKind::MissingArgumentUsed, "argument is missing")),
            RtValue::Promise(_) => Err(internal("unforced promise used as a value")),
            v => Ok(v),
        }
    }

    fn expose_frame_env(&mut self, act: &Act, env: &EnvRef) {
        if act.promise.is_none() {
            self.frames[act.frame].env = Some(env.clone());
        }
    }

    fn enter(&mut self) -> Result<(), RtError> {
        self.depth += 1;
        if self.depth > self.opts.depth_limit {
            self.depth -= 1;
            return Err(RtError::new(ErrorKind::RecursionLimit, "evaluation nested too deeply"));
        }
        Ok(())
    }

    pub(crate) fn force(&mut self, v: RtValue, frame: usize) -> Result<RtValue, RtError> {
        let mut v = v;
        while let RtValue::Promise(p) = &v {
            let p = p.clone();
            let memo = p.borrow().memo.clone();
            if let Some(m) = memo {
                v = m;
                continue;
            }
            if p.borrow().forcing {
                return Err(RtError::new(ErrorKind::PromiseRecursion, "promise already under evaluation"));
            }
            let mut act = {
                let pr = p.borrow();
                let mut regs = HashMap::new();
                if let Some(r) = pr.env_reg {
                    regs.insert(r, RtValue::Env(pr.env.clone()));
                }
                Act {
                    fun: pr.fun,
                    version: pr.version,
                    promise: Some(pr.id),
                    regs,
                    args: Rc::new(Vec::new()),
                    closure_env: pr.closure_env.clone(),
                    frame,
                }
            };
            self.enter()?;
            p.borrow_mut().forcing = true;
            let res = self.exec(&mut act);
            p.borrow_mut().forcing = false;
            self.depth -= 1;
            let r = res?;
            self.counters.promises_forced += 1;
            p.borrow_mut().memo = Some(r.clone());
            v = r;
        }
        Ok(v)
    }

    fn call(&mut self, f: RtValue, args: Vec<RtValue>, call_env: EnvRef, frame: usize) -> Result<RtValue, RtError> {
        self.counters.calls += 1;
        match f {
            RtValue::Closure(c) => {
                let decl = self.prog.function(c.fun);
                if decl.param_count() != args.len() {
                    return Err(RtError::new(
                        ErrorKind::ArityMismatch,
                        format!("{} expects {} arguments, got {}", decl.name, decl.param_count(), args.len()),
                    ));
                }
                self.enter()?;
                let version = self.select(c.fun, &args);
                self.frames.push(Frame { env: None, caller_env: call_env });
                let mut act = Act {
                    fun: c.fun,
                    version,
                    promise: None,
                    regs: HashMap::new(),
                    args: Rc::new(args),
                    closure_env: c.env.clone(),
                    frame: self.frames.len() - 1,
                };
                let res = self.exec(&mut act);
                self.frames.pop();
                self.depth -= 1;
                res
            }
            RtValue::Builtin(b) => {
                let mut forced = Vec::with_capacity(args.len());
                for a in args {
                    forced.push(self.force(a, frame)?);
                }
                self.apply_builtin(b, forced, call_env, frame)
            }
            other => Err(RtError::new(ErrorKind::NotAFunction, format!("attempt to apply non-function {}", other))),
        }
    }

    fn lookup_fun(&mut self, name: &str, env: EnvRef, frame: usize) -> Result<RtValue, RtError> {
        let mut cur = Some(env);
        while let Some(e) = cur {
            let found = e.borrow().bindings.get(name).map(|b| b.value.clone());
            if let Some(v) = found {
                let v = self.force(v, frame)?;
                if v.is_function() {
                    return Ok(v);
                }
            }
            cur = e.borrow().parent.clone();
        }
        Err(RtError::new(ErrorKind::NotAFunction, format!("could not find function \"{}\"", name)))
    }

    fn exec(&mut self, act: &mut Act) -> Result<RtValue, RtError> {
        let prog = self.prog;
        let mut block = 0usize;
        let mut idx = 0usize;
        let mut prev: Option<Label> = None;
        loop {
            let decl = prog.function(act.fun);
            let version = &decl.versions[act.version];
            let code = match act.promise {
                None => &version.body,
                Some(p) => version.promises.get(&p).ok_or_else(|| internal(format!("no promise pr{}", p)))?,
            };
            let blk = &code.blocks[block];
            if idx == 0 {
                if let Some(pl) = prev {
                    let mut vals = Vec::new();
                    while let Some(i) = blk.instrs.get(idx) {
                        let InstrKind::Phi(ins) = &i.kind else { break };
                        let (_, o) = ins
                            .iter()
                            .find(|(l, _)| *l == pl)
                            .ok_or_else(|| internal(format!("phi has no input for BB{}", pl)))?;
                        vals.push((i.dst.unwrap(), self.val(act, *o)?));
                        idx += 1;
                    }
                    act.regs.extend(vals);
                }
            }
            let Some(instr) = blk.instrs.get(idx) else {
                return Err(internal("fell off the end of a block"));
            };
            self.steps += 1;
            if self.steps > self.opts.step_limit {
                return Err(RtError::new(ErrorKind::StepLimit, "step limit exceeded"));
            }
            let loc = Location::new(block, idx);
            let origin = Origin::Code { fun: act.fun, version: act.version, promise: act.promise, loc };
            idx += 1;
            let result: RtValue = match &instr.kind {
                InstrKind::Binop { op, lhs, rhs, .. } => {
                    let l = self.strict_val(act, *lhs)?;
                    let r = self.strict_val(act, *rhs)?;
                    binop(*op, &l, &r)?
                }
                InstrKind::Jump(l) => {
                    prev = Some(blk.label);
                    block = code.blocks.iter().position(|b| b.label == *l).ok_or_else(|| internal("bad label"))?;
                    idx = 0;
                    continue;
                }
                InstrKind::Branch { cond, then, els } => {
                    let c = self.strict_val(act, *cond)?;
                    let target = if truthy(&c)? { then } else { els };
                    prev = Some(blk.label);
                    block = code.blocks.iter().position(|b| b.label == *target).ok_or_else(|| internal("bad label"))?;
                    idx = 0;
                    continue;
                }
                InstrKind::Call { callee, args, env } => {
                    let f = self.val(act, *callee)?;
                    let mut argv = Vec::with_capacity(args.len());
                    for a in args {
                        argv.push(self.val(act, *a)?);
                    }
                    let call_env = self.env_of(act, *env)?;
                    self.expose_frame_env(act, &call_env);
                    self.call(f, argv, call_env, act.frame)?
                }
                InstrKind::Deopt { checkpoint, bindings, env } => {
                    if act.promise.is_some() {
                        return Err(internal("Deopt in promise code"));
                    }
                    let cp = decl.checkpoint(*checkpoint).ok_or_else(|| internal("unknown checkpoint"))?;
                    let envv = self.val(act, *env)?;
                    let mut regs = HashMap::new();
                    for (r, o) in bindings {
                        regs.insert(*r, self.val(act, *o)?);
                    }
                    if let Some(e) = decl.baseline_env {
                        regs.insert(e, envv);
                    }
                    self.counters.deopts_taken += 1;
                    act.version = 0;
                    act.regs = regs;
                    block = cp.location.block;
                    idx = cp.location.index;
                    prev = None;
                    continue;
                }
                InstrKind::Force { value, env } => {
                    let v = self.val(act, *value)?;
                    if v.is_promise() {
                        let e = self.env_of(act, *env)?;
                        self.expose_frame_env(act, &e);
                    }
                    self.force(v, act.frame)?
                }
                InstrKind::LdArg(n) => {
                    act.args.get(*n as usize).cloned().ok_or_else(|| internal("argument index out of range"))?
                }
                InstrKind::LdConst(c) => RtValue::from_const(c),
                InstrKind::LdFun { name, env } => {
                    let e = self.env_of(act, *env)?;
                    self.expose_frame_env(act, &e);
                    self.lookup_fun(name, e, act.frame)?
                }
                InstrKind::LdVar { name, env } => {
                    let e = self.env_of(act, *env)?;
                    if self.opts.record_loads && act.promise.is_none() && matches!(env, Operand::Reg(_)) {
                        let origin = e.borrow().bindings.get(name).map(|b| b.origin);
                        self.loads.push(LoadObservation {
                            fun: act.fun,
                            version: act.version,
                            loc,
                            name: name.clone(),
                            origin,
                        });
                    }
                    lookup_var(&e, name)?
                }
                InstrKind::MkArg { promise, env } => {
                    let e = self.env_of(act, *env)?;
                    self.counters.promises_created += 1;
                    RtValue::Promise(Rc::new(RefCell::new(Promise {
                        fun: act.fun,
                        version: act.version,
                        id: *promise,
                        env: e,
                        env_reg: env.reg(),
                        closure_env: act.closure_env.clone(),
                        memo: None,
                        forcing: false,
                    })))
                }
                InstrKind::MkEnv { bindings, parent, stub } => {
                    let p = self.env_of(act, *parent)?;
                    let mut map = IndexMap::new();
                    for (name, o) in bindings {
                        let v = self.val(act, *o)?;
                        if !matches!(v, RtValue::Missing) {
                            map.insert(name.clone(), Binding { value: v, origin });
                        }
                    }
                    RtValue::Env(self.new_env(map, p, *stub))
                }
                InstrKind::MkClosure { func, env } => {
                    let e = self.env_of(act, *env)?;
                    RtValue::Closure(Rc::new(Closure { fun: *func, env: e }))
                }
                InstrKind::Phi(_) => return Err(internal("phi after block head")),
                InstrKind::Return(o) => {
                    return Ok(match self.val(act, *o)? {
                        RtValue::Missing => RtValue::Null,
                        v => v,
                    })
                }
                InstrKind::StVar { name, value, env } => {
                    let e = self.env_of(act, *env)?;
                    let v = self.val(act, *value)?;
                    if Rc::ptr_eq(&e, &self.global) {
                        self.trace.push(Event::StoreGlobal { name: name.clone(), value: v.to_string() });
                    }
                    e.borrow_mut().bindings.insert(name.clone(), Binding { value: v, origin });
                    continue;
                }
                InstrKind::IsMaterialized(env) => {
                    let e = self.env_of(act, *env)?;
                    let m = e.borrow().materialized;
                    RtValue::Lgl(Rc::new(vec![m]))
                }
            };
            if let Some(d) = instr.dst {
                act.regs.insert(d, result);
            }
        }
    }
}

fn lookup_var(env: &EnvRef, name: &str) -> Result<RtValue, RtError> {
    let mut cur = Some(env.clone());
    while let Some(e) = cur {
        if let Some(b) = e.borrow().bindings.get(name) {
            return Ok(b.value.clone());
        }
        cur = e.borrow().parent.clone();
    }
    Err(RtError::new(ErrorKind::UnboundVariable, format!("object '{}' not found", name)))
}
