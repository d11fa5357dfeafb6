//! AST to baseline IR. Callees create their own environments; call
//! arguments become promises; every variable read is a load plus a force.

mod checkpoints;

use std::collections::{BTreeMap, BTreeSet, HashMap};

pub use checkpoints::{emit_checkpoints, liveness, resume_points, Liveness};

use crate::frontend::{Expr, ExprKind, NodeId};
use crate::ir::{
    Block, Code, Const, FunId, FunctionDecl, Instr, InstrKind, Label, Operand, Program, ProgramFacts, PromiseId,
    Reg, Version,
};

/// Whether `e` is evaluated strictly where it appears. Call arguments are
/// the only lazy positions.
pub fn strict_positions(parent: &Expr, child_index: usize) -> bool {
    !matches!(parent.kind, ExprKind::Call { .. }) || child_index == 0
}

pub fn lower_program(ast: &Expr) -> Program {
    let mut st = State { functions: Vec::new(), fun_ids: HashMap::new() };
    let stmts: Vec<&Expr> = match &ast.kind {
        ExprKind::Block(s) => s.iter().collect(),
        _ => vec![ast],
    };
    st.functions.push(None);
    let mut fb = FnBuilder::new(&mut st, Operand::Global);
    let v = fb.lower_seq(&stmts);
    fb.emit(None, InstrKind::Return(v));
    let (version, nodes) = fb.finish();
    st.functions[0] = Some(build_decl(0, "toplevel".into(), vec![], version, None, &nodes));
    let functions: Vec<FunctionDecl> = st.functions.into_iter().map(|f| f.expect("function lowered")).collect();
    Program { functions, entry: 0, facts: program_facts(ast, &st.fun_ids) }
}

fn build_decl(
    id: FunId,
    name: String,
    params: Vec<String>,
    version: Version,
    env: Option<Reg>,
    call_nodes: &HashMap<(usize, usize), NodeId>,
) -> FunctionDecl {
    let mut checkpoints = emit_checkpoints(&version, params.len(), env, call_nodes);
    let next = checkpoints.len() as u32;
    checkpoints.extend(resume_points(&version, env, next));
    FunctionDecl { id, name, params, versions: vec![version], checkpoints, baseline_env: env }
}

struct State {
    functions: Vec<Option<FunctionDecl>>,
    fun_ids: HashMap<NodeId, FunId>,
}

struct Emitter {
    code: Code,
    cur: usize,
}

struct FnBuilder<'a> {
    st: &'a mut State,
    env: Operand,
    next_reg: Reg,
    next_label: Label,
    next_promise: PromiseId,
    /// Innermost code last; index 0 is the body.
    stack: Vec<Emitter>,
    promises: BTreeMap<PromiseId, Code>,
    call_nodes: HashMap<(usize, usize), NodeId>,
}

impl<'a> FnBuilder<'a> {
    fn new(st: &'a mut State, env: Operand) -> Self {
        let mut fb = FnBuilder {
            st,
            env,
            next_reg: 0,
            next_label: 0,
            next_promise: 0,
            stack: Vec::new(),
            promises: BTreeMap::new(),
            call_nodes: HashMap::new(),
        };
        let l = fb.label();
        fb.stack.push(Emitter { code: Code { blocks: vec![Block::new(l)] }, cur: 0 });
        fb
    }

    fn reg(&mut self) -> Reg {
        self.next_reg += 1;
        self.next_reg - 1
    }

    fn label(&mut self) -> Label {
        self.next_label += 1;
        self.next_label - 1
    }

    fn top(&mut self) -> &mut Emitter {
        self.stack.last_mut().unwrap()
    }

    /// Every instruction takes a number, as in the listings, so value-less
    /// instructions leave gaps in register numbering.
    fn emit(&mut self, dst: Option<Reg>, kind: InstrKind) -> Operand {
        if dst.is_none() {
            self.next_reg += 1;
        }
        let e = self.top();
        e.code.blocks[e.cur].instrs.push(Instr::new(dst, kind));
        dst.map(Operand::Reg).unwrap_or(Operand::Missing)
    }

    fn emit_val(&mut self, kind: InstrKind) -> Operand {
        let r = self.reg();
        self.emit(Some(r), kind)
    }

    fn location(&mut self) -> (usize, usize) {
        let e = self.top();
        (e.cur, e.code.blocks[e.cur].instrs.len())
    }

    fn new_block(&mut self) -> Label {
        let l = self.label();
        self.top().code.blocks.push(Block::new(l));
        l
    }

    fn switch_to(&mut self, l: Label) {
        let e = self.top();
        e.cur = e.code.blocks.iter().position(|b| b.label == l).unwrap();
    }

    fn current_label(&mut self) -> Label {
        let e = self.top();
        e.code.blocks[e.cur].label
    }

    fn finish(mut self) -> (Version, HashMap<(usize, usize), NodeId>) {
        let body = self.stack.pop().unwrap().code;
        (Version { assumptions: BTreeSet::new(), body, promises: self.promises }, self.call_nodes)
    }

    fn constant(&mut self, c: Const) -> Operand {
        self.emit_val(InstrKind::LdConst(c))
    }

    fn lower_seq(&mut self, es: &[&Expr]) -> Operand {
        let mut last = None;
        for e in es {
            last = Some(self.lower(e));
        }
        match last {
            Some(v) => v,
            None => self.constant(Const::Null),
        }
    }

    fn lower(&mut self, e: &Expr) -> Operand {
        let env = self.env;
        match &e.kind {
            ExprKind::NumLit(v) => self.constant(Const::num(*v)),
            ExprKind::BoolLit(b) => self.constant(Const::Lgl(vec![*b])),
            ExprKind::StrLit(s) => self.constant(Const::Str(vec![s.clone()])),
            ExprKind::Var(name) => {
                let v = self.emit_val(InstrKind::LdVar { name: name.clone(), env });
                self.emit_val(InstrKind::Force { value: v, env })
            }
            ExprKind::Assign(name, rhs) => {
                let v = match &rhs.kind {
                    ExprKind::FunDef { params, body } => {
                        let id = self.lower_function(name.clone(), rhs.id, params, body);
                        self.emit_val(InstrKind::MkClosure { func: id, env })
                    }
                    _ => self.lower(rhs),
                };
                self.emit(None, InstrKind::StVar { name: name.clone(), value: v, env });
                v
            }
            ExprKind::FunDef { params, body } => {
                let id = self.lower_function("anonymous".into(), e.id, params, body);
                self.emit_val(InstrKind::MkClosure { func: id, env })
            }
            ExprKind::Call { callee, args } => {
                let f = match &callee.kind {
                    ExprKind::Var(name) => self.emit_val(InstrKind::LdFun { name: name.clone(), env }),
                    _ => self.lower(callee),
                };
                let mut ops = Vec::with_capacity(args.len());
                for a in args {
                    let p = self.lower_promise(a);
                    ops.push(self.emit_val(InstrKind::MkArg { promise: p, env }));
                }
                if self.stack.len() == 1 {
                    let loc = self.location();
                    self.call_nodes.insert(loc, e.id);
                }
                self.emit_val(InstrKind::Call { callee: f, args: ops, env })
            }
            ExprKind::If { cond, then, els } => {
                let c = self.lower(cond);
                let (lt, le, lj) = (self.label(), self.label(), self.label());
                self.emit(None, InstrKind::Branch { cond: c, then: lt, els: le });
                self.top().code.blocks.push(Block::new(lt));
                self.switch_to(lt);
                let tv = self.lower(then);
                let tend = self.current_label();
                self.emit(None, InstrKind::Jump(lj));
                self.top().code.blocks.push(Block::new(le));
                self.switch_to(le);
                let ev = match els {
                    Some(e) => self.lower(e),
                    None => self.constant(Const::Null),
                };
                let eend = self.current_label();
                self.emit(None, InstrKind::Jump(lj));
                self.top().code.blocks.push(Block::new(lj));
                self.switch_to(lj);
                self.emit_val(InstrKind::Phi(vec![(tend, tv), (eend, ev)]))
            }
            ExprKind::While { cond, body } => {
                let h = self.new_block();
                self.emit(None, InstrKind::Jump(h));
                self.switch_to(h);
                let c = self.lower(cond);
                let (lb, lx) = (self.label(), self.label());
                self.emit(None, InstrKind::Branch { cond: c, then: lb, els: lx });
                self.top().code.blocks.push(Block::new(lb));
                self.switch_to(lb);
                self.lower(body);
                self.emit(None, InstrKind::Jump(h));
                self.top().code.blocks.push(Block::new(lx));
                self.switch_to(lx);
                self.constant(Const::Null)
            }
            ExprKind::Block(es) => {
                let refs: Vec<&Expr> = es.iter().collect();
                self.lower_seq(&refs)
            }
            ExprKind::Binop(op, l, r) => {
                let lv = self.lower(l);
                let rv = self.lower(r);
                self.emit_val(InstrKind::Binop { op: *op, lhs: lv, rhs: rv, env })
            }
        }
    }

    fn lower_promise(&mut self, e: &Expr) -> PromiseId {
        let id = self.next_promise;
        self.next_promise += 1;
        let l = self.label();
        self.stack.push(Emitter { code: Code { blocks: vec![Block::new(l)] }, cur: 0 });
        let v = self.lower(e);
        self.emit(None, InstrKind::Return(v));
        let code = self.stack.pop().unwrap().code;
        self.promises.insert(id, code);
        id
    }

    fn lower_function(&mut self, name: String, node: NodeId, params: &[String], body: &Expr) -> FunId {
        let id = self.st.functions.len() as FunId;
        self.st.functions.push(None);
        self.st.fun_ids.insert(node, id);
        let parent = if self.env == Operand::Global { Operand::Global } else { Operand::Open };
        // Placeholder env until the MkEnv register is known.
        let mut fb = FnBuilder::new(self.st, Operand::Global);
        let args: Vec<(String, Operand)> = params
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), fb.emit_val(InstrKind::LdArg(i as u32))))
            .collect();
        let e = fb.reg();
        fb.emit(Some(e), InstrKind::MkEnv { bindings: args, parent, stub: false });
        fb.env = Operand::Reg(e);
        let v = fb.lower(body);
        fb.emit(None, InstrKind::Return(v));
        let (version, nodes) = fb.finish();
        self.st.functions[id as usize] = Some(build_decl(id, name, params.to_vec(), version, Some(e), &nodes));
        id
    }
}

pub fn program_facts(ast: &Expr, fun_ids: &HashMap<NodeId, FunId>) -> ProgramFacts {
    let mut assigned: HashMap<&str, usize> = HashMap::new();
    let mut strings: BTreeSet<&str> = BTreeSet::new();
    let mut idents: BTreeSet<&str> = BTreeSet::new();
    ast.walk(&mut |e| match &e.kind {
        ExprKind::Assign(n, _) => *assigned.entry(n.as_str()).or_default() += 1,
        ExprKind::StrLit(s) => {
            strings.insert(s.as_str());
        }
        ExprKind::Var(n) => {
            idents.insert(n.as_str());
        }
        ExprKind::FunDef { params, .. } => {
            for p in params {
                *assigned.entry(p.as_str()).or_default() += 1;
            }
        }
        _ => {}
    });
    let mentions = |n: &str| strings.contains(n) || idents.contains(n);
    let frame_reflective = mentions("sys.frame") || mentions("parent.frame");
    let env_reflective = frame_reflective || mentions("environment");

    let mut stable_globals = BTreeMap::new();
    if let ExprKind::Block(stmts) = &ast.kind {
        for s in stmts {
            if let ExprKind::Assign(name, rhs) = &s.kind {
                if matches!(rhs.kind, ExprKind::FunDef { .. })
                    && assigned.get(name.as_str()) == Some(&1)
                    && !strings.contains(name.as_str())
                {
                    stable_globals.insert(name.clone(), fun_ids[&rhs.id]);
                }
            }
        }
    }
    ProgramFacts { stable_globals, frame_reflective, env_reflective }
}

#[cfg(test)]
mod tests;
