use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use indexmap::IndexMap;

use super::{ErrorKind, RtError};
use crate::frontend::print::{format_num, quote_str};
use crate::frontend::{BinopKind, BuiltinKind};
use crate::ir::{Const, FunId, Location, PromiseId, Reg};

pub type EnvRef = Rc<RefCell<RtEnv>>;

/// Where a binding was last written, for checking scope analysis results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Code { fun: FunId, version: usize, promise: Option<PromiseId>, loc: Location },
    /// Written by a builtin such as `assign`.
    Reflective,
}

#[derive(Debug, Clone)]
pub struct Binding {
    pub value: RtValue,
    pub origin: Origin,
}

#[derive(Debug)]
pub struct RtEnv {
    pub id: u64,
    pub bindings: IndexMap<String, Binding>,
    pub parent: Option<EnvRef>,
    pub is_stub: bool,
    pub materialized: bool,
}

#[derive(Debug)]
pub struct Closure {
    pub fun: FunId,
    pub env: EnvRef,
}

#[derive(Debug)]
pub struct Promise {
    pub fun: FunId,
    pub version: usize,
    pub id: PromiseId,
    pub env: EnvRef,
    /// Register through which the promise code refers to `env`.
    pub env_reg: Option<Reg>,
    /// Value of `O` where the promise was created.
    pub closure_env: EnvRef,
    pub memo: Option<RtValue>,
    pub forcing: bool,
}

#[derive(Debug, Clone)]
pub enum RtValue {
    Null,
    Num(Rc<Vec<f64>>),
    Lgl(Rc<Vec<bool>>),
    Str(Rc<Vec<String>>),
    Closure(Rc<Closure>),
    Builtin(BuiltinKind),
    Promise(Rc<RefCell<Promise>>),
    Env(EnvRef),
    Missing,
}

impl RtValue {
    pub fn num(v: f64) -> RtValue {
        RtValue::Num(Rc::new(vec![v]))
    }

    pub fn from_const(c: &Const) -> RtValue {
        match c {
            Const::Null => RtValue::Null,
            Const::Num(v) => RtValue::Num(Rc::new(v.clone())),
            Const::Lgl(v) => RtValue::Lgl(Rc::new(v.clone())),
            Const::Str(v) => RtValue::Str(Rc::new(v.clone())),
        }
    }

    pub fn to_const(&self) -> Option<Const> {
        Some(match self {
            RtValue::Null => Const::Null,
            RtValue::Num(v) => Const::Num(v.to_vec()),
            RtValue::Lgl(v) => Const::Lgl(v.to_vec()),
            RtValue::Str(v) => Const::Str(v.to_vec()),
            _ => return None,
        })
    }

    pub fn is_function(&self) -> bool {
        matches!(self, RtValue::Closure(_) | RtValue::Builtin(_))
    }

    pub fn is_promise(&self) -> bool {
        matches!(self, RtValue::Promise(_))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            RtValue::Null => "NULL",
            RtValue::Num(_) => "double",
            RtValue::Lgl(_) => "logical",
            RtValue::Str(_) => "character",
            RtValue::Closure(_) | RtValue::Builtin(_) => "closure",
            RtValue::Promise(_) => "promise",
            RtValue::Env(_) => "environment",
            RtValue::Missing => "missing",
        }
    }

    /// Observable equality: vectors by content, references by identity.
    pub fn same(&self, other: &RtValue) -> bool {
        match (self, other) {
            (RtValue::Null, RtValue::Null) | (RtValue::Missing, RtValue::Missing) => true,
            (RtValue::Num(a), RtValue::Num(b)) => {
                a.len() == b.len() && a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (RtValue::Lgl(a), RtValue::Lgl(b)) => a == b,
            (RtValue::Str(a), RtValue::Str(b)) => a == b,
            (RtValue::Closure(a), RtValue::Closure(b)) => a.fun == b.fun && Rc::ptr_eq(&a.env, &b.env),
            (RtValue::Builtin(a), RtValue::Builtin(b)) => a == b,
            (RtValue::Env(a), RtValue::Env(b)) => Rc::ptr_eq(a, b),
            (RtValue::Promise(a), RtValue::Promise(b)) => Rc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl fmt::Display for RtValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list<T>(f: &mut fmt::Formatter<'_>, v: &[T], g: impl Fn(&T) -> String) -> fmt::Result {
            write!(f, "[{}]", v.iter().map(g).collect::<Vec<_>>().join(","))
        }
        match self {
            RtValue::Null => f.write_str("NULL"),
            RtValue::Num(v) => list(f, v, |x| format_num(*x)),
            RtValue::Lgl(v) => list(f, v, |b| if *b { "TRUE".into() } else { "FALSE".into() }),
            RtValue::Str(v) => list(f, v, |s| quote_str(s)),
            RtValue::Closure(c) => write!(f, "<closure fun{}>", c.fun),
            RtValue::Builtin(b) => write!(f, "<builtin {}>", b.name()),
            RtValue::Promise(_) => f.write_str("<promise>"),
            RtValue::Env(_) => f.write_str("<environment>"),
            RtValue::Missing => f.write_str("<missing>"),
        }
    }
}

fn type_error(msg: String) -> RtError {
    RtError::new(ErrorKind::TypeError, msg)
}

fn as_numbers(v: &RtValue, op: BinopKind) -> Result<Vec<f64>, RtError> {
    match v {
        RtValue::Num(x) => Ok(x.to_vec()),
        RtValue::Lgl(x) => Ok(x.iter().map(|b| if *b { 1.0 } else { 0.0 }).collect()),
        RtValue::Null => Ok(vec![]),
        other => Err(type_error(format!("non-numeric argument to '{}': {}", op.symbol(), other.type_name()))),
    }
}

fn recycle<A: Clone, B: Clone, R>(a: &[A], b: &[B], f: impl Fn(A, B) -> R) -> Result<Vec<R>, RtError> {
    if a.is_empty() || b.is_empty() {
        return Ok(vec![]);
    }
    let n = a.len().max(b.len());
    if n % a.len() != 0 || n % b.len() != 0 {
        return Err(type_error(format!("vector lengths {} and {} do not recycle", a.len(), b.len())));
    }
    Ok((0..n).map(|i| f(a[i % a.len()].clone(), b[i % b.len()].clone())).collect())
}

/// Longest sequence `a:b` may produce.
pub const MAX_SEQ: usize = 1 << 20;

/// Arithmetic and comparison shared by the interpreter and constant folding.
pub fn binop(op: BinopKind, l: &RtValue, r: &RtValue) -> Result<RtValue, RtError> {
    if let (RtValue::Str(a), RtValue::Str(b)) = (l, r) {
        return match op {
            BinopKind::Eq => Ok(RtValue::Lgl(Rc::new(recycle(a, b, |x, y| x == y)?))),
            BinopKind::Lt => Ok(RtValue::Lgl(Rc::new(recycle(a, b, |x, y| x < y)?))),
            _ => Err(type_error(format!("non-numeric argument to '{}'", op.symbol()))),
        };
    }
    let a = as_numbers(l, op)?;
    let b = as_numbers(r, op)?;
    Ok(match op {
        BinopKind::Add => RtValue::Num(Rc::new(recycle(&a, &b, |x, y| x + y)?)),
        BinopKind::Sub => RtValue::Num(Rc::new(recycle(&a, &b, |x, y| x - y)?)),
        BinopKind::Mul => RtValue::Num(Rc::new(recycle(&a, &b, |x, y| x * y)?)),
        BinopKind::Lt => RtValue::Lgl(Rc::new(recycle(&a, &b, |x, y| x < y)?)),
        BinopKind::Eq => RtValue::Lgl(Rc::new(recycle(&a, &b, |x, y| x == y)?)),
        BinopKind::Colon => {
            let (Some(&from), Some(&to)) = (a.first(), b.first()) else {
                return Err(type_error("argument of length 0 to ':'".into()));
            };
            if !from.is_finite() || !to.is_finite() || (to - from).abs() >= MAX_SEQ as f64 {
                return Err(type_error("bad sequence bounds".into()));
            }
            let n = (to - from).abs().floor() as usize + 1;
            let step = if to >= from { 1.0 } else { -1.0 };
            RtValue::Num(Rc::new((0..n).map(|i| from + step * i as f64).collect()))
        }
    })
}

/// Truth value of a branch condition.
pub fn truthy(v: &RtValue) -> Result<bool, RtError> {
    match v {
        RtValue::Lgl(x) if !x.is_empty() => Ok(x[0]),
        RtValue::Num(x) if !x.is_empty() => {
            if x[0].is_nan() {
                Err(type_error("missing value where TRUE/FALSE needed".into()))
            } else {
                Ok(x[0] != 0.0)
            }
        }
        RtValue::Lgl(_) | RtValue::Num(_) | RtValue::Null => Err(type_error("argument is of length zero".into())),
        other => Err(type_error(format!("argument is not interpretable as logical: {}", other.type_name()))),
    }
}
