use std::collections::BTreeSet;

use super::{Assumption, BinopKind, Block, Code, Const, Instr, InstrKind, Operand, Reg, Version};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("IR parse error on line {line}: {msg}")]
pub struct IrParseError {
    pub line: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq)]
enum T {
    Word(String),
    Str(String),
    P(char),
}

fn is_word(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '%' | '-' | '+')
}

fn tokenize(line: &str) -> Result<Vec<T>, String> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '#' {
            break;
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err("unterminated string".into()),
                    Some('"') => break,
                    Some('\\') => {
                        s.push(match chars.get(i + 1) {
                            Some('n') => '\n',
                            Some('t') => '\t',
                            Some('"') => '"',
                            Some('\\') => '\\',
                            _ => return Err("bad escape".into()),
                        });
                        i += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            i += 1;
            out.push(T::Str(s));
        } else if is_word(c) {
            let start = i;
            while i < chars.len() && is_word(chars[i]) {
                i += 1;
            }
            out.push(T::Word(chars[start..i].iter().collect()));
        } else if "(),=:[]".contains(c) {
            out.push(T::P(c));
            i += 1;
        } else {
            return Err(format!("unexpected character '{}'", c));
        }
    }
    Ok(out)
}

struct Cur<'a> {
    toks: &'a [T],
    pos: usize,
}

impl<'a> Cur<'a> {
    fn peek(&self) -> Option<&T> {
        self.toks.get(self.pos)
    }

    fn word(&mut self) -> Result<String, String> {
        match self.toks.get(self.pos) {
            Some(T::Word(w)) => {
                self.pos += 1;
                Ok(w.clone())
            }
            other => Err(format!("expected a name, found {:?}", other)),
        }
    }

    fn punct(&mut self, c: char) -> Result<(), String> {
        match self.toks.get(self.pos) {
            Some(T::P(p)) if *p == c => {
                self.pos += 1;
                Ok(())
            }
            other => Err(format!("expected '{}', found {:?}", c, other)),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&T::P(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn done(&self) -> Result<(), String> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(format!("trailing input {:?}", t)),
        }
    }

    fn operand(&mut self) -> Result<Operand, String> {
        let w = self.word()?;
        parse_operand(&w)
    }

    fn prefixed_num(&mut self, prefix: &str) -> Result<u32, String> {
        let w = self.word()?;
        w.strip_prefix(prefix)
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| format!("expected {}<n>, found {}", prefix, w))
    }

    fn label(&mut self) -> Result<u32, String> {
        self.prefixed_num("BB")
    }

    /// Comma separated items up to (and consuming) `close`.
    fn list<X>(&mut self, close: char, mut item: impl FnMut(&mut Self) -> Result<X, String>) -> Result<Vec<X>, String> {
        let mut v = Vec::new();
        if self.eat(close) {
            return Ok(v);
        }
        loop {
            v.push(item(self)?);
            if self.eat(',') {
                continue;
            }
            self.punct(close)?;
            return Ok(v);
        }
    }
}

fn parse_reg(w: &str) -> Option<Reg> {
    w.strip_prefix('%').or_else(|| w.strip_prefix('e')).and_then(|n| n.parse().ok())
}

fn parse_operand(w: &str) -> Result<Operand, String> {
    match w {
        "G" => Ok(Operand::Global),
        "O" => Ok(Operand::Open),
        "_" => Ok(Operand::Missing),
        _ => parse_reg(w).map(Operand::Reg).ok_or_else(|| format!("bad operand '{}'", w)),
    }
}

fn parse_const(c: &mut Cur) -> Result<Const, String> {
    if c.peek() == Some(&T::Word("NULL".into())) {
        c.pos += 1;
        return Ok(Const::Null);
    }
    c.punct('[')?;
    let n: usize = c.word()?.parse().map_err(|_| "bad vector length".to_string())?;
    c.punct(']')?;
    if n == 0 {
        return match c.word()?.as_str() {
            "num" => Ok(Const::Num(vec![])),
            "lgl" => Ok(Const::Lgl(vec![])),
            "str" => Ok(Const::Str(vec![])),
            other => Err(format!("bad empty vector type '{}'", other)),
        };
    }
    let mut items = Vec::new();
    loop {
        items.push(c.peek().cloned().ok_or("missing vector element")?);
        c.pos += 1;
        if !c.eat(',') {
            break;
        }
    }
    if items.len() != n {
        return Err(format!("vector length {} but {} elements", n, items.len()));
    }
    match &items[0] {
        T::Str(_) => items
            .into_iter()
            .map(|t| match t {
                T::Str(s) => Ok(s),
                _ => Err("mixed vector".to_string()),
            })
            .collect::<Result<_, _>>()
            .map(Const::Str),
        T::Word(w) if w == "TRUE" || w == "FALSE" => items
            .into_iter()
            .map(|t| match t {
                T::Word(w) if w == "TRUE" => Ok(true),
                T::Word(w) if w == "FALSE" => Ok(false),
                _ => Err("mixed vector".to_string()),
            })
            .collect::<Result<_, _>>()
            .map(Const::Lgl),
        _ => items
            .into_iter()
            .map(|t| match t {
                T::Word(w) => w.parse::<f64>().map_err(|_| format!("bad number '{}'", w)),
                _ => Err("mixed vector".to_string()),
            })
            .collect::<Result<_, _>>()
            .map(Const::Num),
    }
}

fn parse_instr(toks: &[T]) -> Result<Instr, String> {
    let mut c = Cur { toks, pos: 0 };
    let mut dst = None;
    if toks.get(1) == Some(&T::P('=')) {
        let w = c.word()?;
        dst = Some(parse_reg(&w).ok_or_else(|| format!("bad register '{}'", w))?);
        c.pos += 1;
    }
    let op = c.word()?;
    let kind = match op.as_str() {
        "Branch" => {
            c.punct('(')?;
            if matches!(c.peek(), Some(T::Word(w)) if w.starts_with("BB")) {
                let l = c.label()?;
                c.punct(')')?;
                InstrKind::Jump(l)
            } else {
                let cond = c.operand()?;
                c.punct(',')?;
                let then = c.label()?;
                c.punct(',')?;
                let els = c.label()?;
                c.punct(')')?;
                InstrKind::Branch { cond, then, els }
            }
        }
        "Call" => {
            let callee = c.operand()?;
            c.punct('(')?;
            let args = c.list(')', |c| c.operand())?;
            let env = c.operand()?;
            InstrKind::Call { callee, args, env }
        }
        "Deopt" => {
            c.punct('(')?;
            let checkpoint = c.prefixed_num("cp")?;
            c.punct(',')?;
            c.punct('[')?;
            let bindings = c.list(']', |c| {
                let w = c.word()?;
                let r = parse_reg(&w).ok_or_else(|| format!("bad register '{}'", w))?;
                c.punct('=')?;
                Ok((r, c.operand()?))
            })?;
            c.punct(',')?;
            let env = c.operand()?;
            c.punct(')')?;
            InstrKind::Deopt { checkpoint, bindings, env }
        }
        "Force" => {
            c.punct('(')?;
            let value = c.operand()?;
            c.punct(')')?;
            InstrKind::Force { value, env: c.operand()? }
        }
        "LdArg" => {
            c.punct('(')?;
            let n = c.word()?.parse().map_err(|_| "bad argument index".to_string())?;
            c.punct(')')?;
            InstrKind::LdArg(n)
        }
        "LdConst" => InstrKind::LdConst(parse_const(&mut c)?),
        "LdFun" | "LdVar" | "StVar" => {
            c.punct('(')?;
            let name = c.word()?;
            c.punct(',')?;
            let kind = if op == "StVar" {
                let value = c.operand()?;
                c.punct(',')?;
                InstrKind::StVar { name, value, env: c.operand()? }
            } else if op == "LdFun" {
                InstrKind::LdFun { name, env: c.operand()? }
            } else {
                InstrKind::LdVar { name, env: c.operand()? }
            };
            c.punct(')')?;
            kind
        }
        "MkArg" => {
            c.punct('(')?;
            let promise = c.prefixed_num("pr")?;
            c.punct(',')?;
            let env = c.operand()?;
            c.punct(')')?;
            InstrKind::MkArg { promise, env }
        }
        "MkClosure" => {
            c.punct('(')?;
            let func = c.prefixed_num("fun")?;
            c.punct(',')?;
            let env = c.operand()?;
            c.punct(')')?;
            InstrKind::MkClosure { func, env }
        }
        "MkEnv" => {
            c.punct('(')?;
            let mut bindings = Vec::new();
            if !c.eat(':') {
                loop {
                    let name = c.word()?;
                    c.punct('=')?;
                    bindings.push((name, c.operand()?));
                    if c.eat(',') {
                        continue;
                    }
                    c.punct(':')?;
                    break;
                }
            }
            let parent = c.operand()?;
            c.punct(')')?;
            let stub = c.peek() == Some(&T::Word("stub".into()));
            if stub {
                c.pos += 1;
            }
            InstrKind::MkEnv { bindings, parent, stub }
        }
        "Phi" => {
            c.punct('(')?;
            let ins = c.list(')', |c| {
                let l = c.label()?;
                c.punct(':')?;
                Ok((l, c.operand()?))
            })?;
            InstrKind::Phi(ins)
        }
        "Return" => {
            c.punct('(')?;
            let o = c.operand()?;
            c.punct(')')?;
            InstrKind::Return(o)
        }
        "IsMaterialized" => {
            c.punct('(')?;
            let o = c.operand()?;
            c.punct(')')?;
            InstrKind::IsMaterialized(o)
        }
        other => match BinopKind::from_ir_name(other) {
            Some(op) => {
                c.punct('(')?;
                let lhs = c.operand()?;
                c.punct(',')?;
                let rhs = c.operand()?;
                c.punct(')')?;
                InstrKind::Binop { op, lhs, rhs, env: c.operand()? }
            }
            None => return Err(format!("unknown instruction '{}'", other)),
        },
    };
    c.done()?;
    Ok(Instr { dst, kind })
}

/// Parse the text produced by `print_ir` back into a version.
pub fn parse_ir(text: &str) -> Result<Version, IrParseError> {
    let mut v = Version::default();
    let mut current: Option<Code> = None;
    let mut current_promise: Option<u32> = None;
    let mut seen_header = false;

    fn flush(v: &mut Version, code: Option<Code>, promise: Option<u32>) {
        if let Some(code) = code {
            match promise {
                None => v.body = code,
                Some(p) => {
                    v.promises.insert(p, code);
                }
            }
        }
    }

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let err = |msg: String| IrParseError { line, msg };
        let toks = tokenize(raw).map_err(err)?;
        if toks.is_empty() {
            continue;
        }
        match &toks[0] {
            T::Word(w) if w == "version" && !seen_header => {
                let mut c = Cur { toks: &toks, pos: 1 };
                c.punct('[').map_err(err)?;
                let names = c.list(']', |c| c.word()).map_err(err)?;
                let mut set = BTreeSet::new();
                for name in names {
                    set.insert(match name.as_str() {
                        "EagerArgs" => Assumption::EagerArgs,
                        "NoReflectiveWrite" => Assumption::NoReflectiveWrite,
                        _ => return Err(err(format!("unknown assumption '{}'", name))),
                    });
                }
                v.assumptions = set;
                seen_header = true;
                current = Some(Code::default());
            }
            T::Word(w) if w == "promise" => {
                if current.is_none() {
                    return Err(err("promise before version header".into()));
                }
                flush(&mut v, current.take(), current_promise);
                let mut c = Cur { toks: &toks, pos: 1 };
                let id = c.prefixed_num("pr").map_err(err)?;
                c.punct(':').map_err(err)?;
                current_promise = Some(id);
                current = Some(Code::default());
            }
            T::Word(w) if w.starts_with("BB") && toks.len() == 2 && toks[1] == T::P(':') => {
                let code = current.as_mut().ok_or_else(|| err("block before version header".into()))?;
                let label = w[2..].parse().map_err(|_| err(format!("bad label '{}'", w)))?;
                code.blocks.push(Block::new(label));
            }
            _ => {
                let code = current.as_mut().ok_or_else(|| err("instruction before version header".into()))?;
                let blk = code.blocks.last_mut().ok_or_else(|| err("instruction outside a block".into()))?;
                blk.instrs.push(parse_instr(&toks).map_err(err)?);
            }
        }
    }
    if !seen_header {
        return Err(IrParseError { line: 0, msg: "missing version header".into() });
    }
    flush(&mut v, current, current_promise);
    Ok(v)
}
