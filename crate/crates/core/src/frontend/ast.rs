use std::fmt;

pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinopKind {
    Add,
    Sub,
    Mul,
    Lt,
    Eq,
    Colon,
}

impl BinopKind {
    pub fn symbol(self) -> &'static str {
        match self {
            BinopKind::Add => "+",
            BinopKind::Sub => "-",
            BinopKind::Mul => "*",
            BinopKind::Lt => "<",
            BinopKind::Eq => "==",
            BinopKind::Colon => ":",
        }
    }

    /// Name used by the IR printer.
    pub fn ir_name(self) -> &'static str {
        match self {
            BinopKind::Add => "Add",
            BinopKind::Sub => "Sub",
            BinopKind::Mul => "Mul",
            BinopKind::Lt => "Lt",
            BinopKind::Eq => "Eq",
            BinopKind::Colon => "Colon",
        }
    }

    pub fn from_ir_name(name: &str) -> Option<Self> {
        Some(match name {
            "Add" => BinopKind::Add,
            "Sub" => BinopKind::Sub,
            "Mul" => BinopKind::Mul,
            "Lt" => BinopKind::Lt,
            "Eq" => BinopKind::Eq,
            "Colon" => BinopKind::Colon,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    NumLit(f64),
    BoolLit(bool),
    StrLit(String),
    Var(String),
    Assign(String, Box<Expr>),
    FunDef { params: Vec<String>, body: Box<Expr> },
    Call { callee: Box<Expr>, args: Vec<Expr> },
    If { cond: Box<Expr>, then: Box<Expr>, els: Option<Box<Expr>> },
    While { cond: Box<Expr>, body: Box<Expr> },
    Block(Vec<Expr>),
    Binop(BinopKind, Box<Expr>, Box<Expr>),
}

/// An AST node. `id` doubles as the checkpoint anchor and is assigned in
/// pre-order once the whole program has been parsed.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub id: NodeId,
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Expr { kind, id: 0 }
    }

    pub fn is_literal(&self) -> bool {
        matches!(self.kind, ExprKind::NumLit(_) | ExprKind::BoolLit(_) | ExprKind::StrLit(_))
    }

    /// Children in evaluation (and numbering) order.
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::NumLit(_) | ExprKind::BoolLit(_) | ExprKind::StrLit(_) | ExprKind::Var(_) => vec![],
            ExprKind::Assign(_, e) => vec![e],
            ExprKind::FunDef { body, .. } => vec![body],
            ExprKind::Call { callee, args } => {
                let mut v = vec![&**callee];
                v.extend(args.iter());
                v
            }
            ExprKind::If { cond, then, els } => {
                let mut v = vec![&**cond, &**then];
                if let Some(e) = els {
                    v.push(e);
                }
                v
            }
            ExprKind::While { cond, body } => vec![cond, body],
            ExprKind::Block(es) => es.iter().collect(),
            ExprKind::Binop(_, l, r) => vec![l, r],
        }
    }

    fn children_mut(&mut self) -> Vec<&mut Expr> {
        match &mut self.kind {
            ExprKind::NumLit(_) | ExprKind::BoolLit(_) | ExprKind::StrLit(_) | ExprKind::Var(_) => vec![],
            ExprKind::Assign(_, e) => vec![&mut **e],
            ExprKind::FunDef { body, .. } => vec![&mut **body],
            ExprKind::Call { callee, args } => {
                let mut v = vec![&mut **callee];
                v.extend(args.iter_mut());
                v
            }
            ExprKind::If { cond, then, els } => {
                let mut v = vec![&mut **cond, &mut **then];
                if let Some(e) = els {
                    v.push(&mut **e);
                }
                v
            }
            ExprKind::While { cond, body } => vec![&mut **cond, &mut **body],
            ExprKind::Block(es) => es.iter_mut().collect(),
            ExprKind::Binop(_, l, r) => vec![&mut **l, &mut **r],
        }
    }

    /// Renumber the tree in pre-order starting at `start`; returns the next free id.
    pub fn number(&mut self, start: NodeId) -> NodeId {
        self.id = start;
        let mut next = start + 1;
        for c in self.children_mut() {
            next = c.number(next);
        }
        next
    }

    /// Pre-order walk.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::print::print_expr(self))
    }
}
