use super::ast::{BinopKind, Expr, ExprKind};
use super::lexer::{lex, Tok, Token};
use super::SyntaxError;

/// Parse a whole program. The result is always a `Block` holding the
/// top-level statements, numbered in pre-order from 0.
pub fn parse(src: &str) -> Result<Expr, SyntaxError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, skip_nl: vec![false] };
    let mut stmts = Vec::new();
    p.skip_separators();
    while p.peek().tok != Tok::Eof {
        stmts.push(p.expr()?);
        let t = p.peek_raw().clone();
        match t.tok {
            Tok::Newline | Tok::Semi => p.skip_separators(),
            Tok::Eof => {}
            _ => return Err(p.unexpected(&t)),
        }
    }
    let mut prog = Expr::new(ExprKind::Block(stmts));
    prog.number(0);
    Ok(prog)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    /// Whether newlines are insignificant in the current nesting context.
    skip_nl: Vec<bool>,
}

impl Parser {
    fn peek_raw(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek(&mut self) -> &Token {
        if *self.skip_nl.last().unwrap() {
            while self.toks[self.pos].tok == Tok::Newline {
                self.pos += 1;
            }
        }
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        self.peek();
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn skip_newlines(&mut self) {
        while self.toks[self.pos].tok == Tok::Newline {
            self.pos += 1;
        }
    }

    fn skip_separators(&mut self) {
        while matches!(self.toks[self.pos].tok, Tok::Newline | Tok::Semi) {
            self.pos += 1;
        }
    }

    fn unexpected(&self, t: &Token) -> SyntaxError {
        let what = match &t.tok {
            Tok::Eof => "end of input".to_string(),
            Tok::Newline => "newline".to_string(),
            other => format!("{:?}", other),
        };
        SyntaxError { line: t.line, col: t.col, msg: format!("unexpected {}", what) }
    }

    fn expect(&mut self, want: Tok) -> Result<Token, SyntaxError> {
        let t = self.next();
        if t.tok == want {
            Ok(t)
        } else {
            Err(self.unexpected(&t))
        }
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        let start = self.peek().clone();
        let lhs = self.compare()?;
        if self.peek().tok == Tok::Arrow {
            self.next();
            self.skip_newlines();
            let rhs = self.expr()?;
            return match lhs.kind {
                ExprKind::Var(name) => Ok(Expr::new(ExprKind::Assign(name, Box::new(rhs)))),
                _ => {
                    let msg = match start.tok {
                        Tok::True | Tok::False | Tok::Function | Tok::If | Tok::While => {
                            "reserved word cannot be used as a variable name".to_string()
                        }
                        _ => "invalid assignment target".to_string(),
                    };
                    Err(SyntaxError { line: start.line, col: start.col, msg })
                }
            };
        }
        Ok(lhs)
    }

    fn binary_level(
        &mut self,
        ops: &[(Tok, BinopKind)],
        sub: fn(&mut Self) -> Result<Expr, SyntaxError>,
    ) -> Result<Expr, SyntaxError> {
        let mut lhs = sub(self)?;
        loop {
            let tok = self.peek().tok.clone();
            let Some((_, kind)) = ops.iter().find(|(t, _)| *t == tok) else {
                return Ok(lhs);
            };
            self.next();
            self.skip_newlines();
            let rhs = sub(self)?;
            lhs = Expr::new(ExprKind::Binop(*kind, Box::new(lhs), Box::new(rhs)));
        }
    }

    fn compare(&mut self) -> Result<Expr, SyntaxError> {
        self.binary_level(&[(Tok::EqEq, BinopKind::Eq), (Tok::Lt, BinopKind::Lt)], Self::additive)
    }

    fn additive(&mut self) -> Result<Expr, SyntaxError> {
        self.binary_level(&[(Tok::Plus, BinopKind::Add), (Tok::Minus, BinopKind::Sub)], Self::mult)
    }

    fn mult(&mut self) -> Result<Expr, SyntaxError> {
        self.binary_level(&[(Tok::Star, BinopKind::Mul)], Self::colon)
    }

    fn colon(&mut self) -> Result<Expr, SyntaxError> {
        self.binary_level(&[(Tok::Colon, BinopKind::Colon)], Self::unary)
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        if self.peek().tok == Tok::Minus {
            self.next();
            let inner = self.unary()?;
            return Ok(match inner.kind {
                ExprKind::NumLit(v) => Expr::new(ExprKind::NumLit(-v)),
                _ => Expr::new(ExprKind::Binop(
                    BinopKind::Sub,
                    Box::new(Expr::new(ExprKind::NumLit(0.0))),
                    Box::new(inner),
                )),
            });
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, SyntaxError> {
        let mut e = self.primary()?;
        while self.peek_raw().tok == Tok::LParen {
            self.next();
            self.skip_nl.push(true);
            let mut args = Vec::new();
            if self.peek().tok != Tok::RParen {
                loop {
                    args.push(self.expr()?);
                    if self.peek().tok == Tok::Comma {
                        self.next();
                        continue;
                    }
                    break;
                }
            }
            self.expect(Tok::RParen)?;
            self.skip_nl.pop();
            e = Expr::new(ExprKind::Call { callee: Box::new(e), args });
        }
        Ok(e)
    }

    fn paren_expr(&mut self) -> Result<Expr, SyntaxError> {
        self.expect(Tok::LParen)?;
        self.skip_nl.push(true);
        let e = self.expr()?;
        self.expect(Tok::RParen)?;
        self.skip_nl.pop();
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, SyntaxError> {
        let t = self.next();
        Ok(match t.tok {
            Tok::Num(v) => Expr::new(ExprKind::NumLit(v)),
            Tok::Str(s) => Expr::new(ExprKind::StrLit(s)),
            Tok::True => Expr::new(ExprKind::BoolLit(true)),
            Tok::False => Expr::new(ExprKind::BoolLit(false)),
            Tok::Ident(name) => Expr::new(ExprKind::Var(name)),
            Tok::LParen => {
                self.skip_nl.push(true);
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                self.skip_nl.pop();
                e
            }
            Tok::LBrace => {
                self.skip_nl.push(false);
                let mut stmts = Vec::new();
                self.skip_separators();
                while self.peek().tok != Tok::RBrace {
                    stmts.push(self.expr()?);
                    let t = self.peek_raw().clone();
                    match t.tok {
                        Tok::Newline | Tok::Semi => self.skip_separators(),
                        Tok::RBrace => {}
                        _ => return Err(self.unexpected(&t)),
                    }
                }
                self.expect(Tok::RBrace)?;
                self.skip_nl.pop();
                Expr::new(ExprKind::Block(stmts))
            }
            Tok::Function => {
                self.expect(Tok::LParen)?;
                self.skip_nl.push(true);
                let mut params: Vec<String> = Vec::new();
                if self.peek().tok != Tok::RParen {
                    loop {
                        let p = self.next();
                        match p.tok {
                            Tok::Ident(name) => {
                                if params.contains(&name) {
                                    return Err(SyntaxError {
                                        line: p.line,
                                        col: p.col,
                                        msg: format!("repeated formal argument '{}'", name),
                                    });
                                }
                                params.push(name)
                            }
                            Tok::True | Tok::False | Tok::Function | Tok::If | Tok::Else | Tok::While => {
                                return Err(SyntaxError {
                                    line: p.line,
                                    col: p.col,
                                    msg: "reserved word cannot be used as a variable name".into(),
                                })
                            }
                            _ => return Err(self.unexpected(&p)),
                        }
                        if self.peek().tok == Tok::Comma {
                            self.next();
                            continue;
                        }
                        break;
                    }
                }
                self.expect(Tok::RParen)?;
                self.skip_nl.pop();
                self.skip_newlines();
                let body = self.expr()?;
                Expr::new(ExprKind::FunDef { params, body: Box::new(body) })
            }
            Tok::If => {
                let cond = self.paren_expr()?;
                self.skip_newlines();
                let then = self.expr()?;
                // `else` may follow on a later line inside braces or parentheses.
                let save = self.pos;
                self.skip_newlines();
                let els = if self.toks[self.pos].tok == Tok::Else {
                    self.pos += 1;
                    self.skip_newlines();
                    Some(Box::new(self.expr()?))
                } else {
                    self.pos = save;
                    None
                };
                Expr::new(ExprKind::If { cond: Box::new(cond), then: Box::new(then), els })
            }
            Tok::While => {
                let cond = self.paren_expr()?;
                self.skip_newlines();
                let body = self.expr()?;
                Expr::new(ExprKind::While { cond: Box::new(cond), body: Box::new(body) })
            }
            _ => return Err(self.unexpected(&t)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stmts(src: &str) -> Vec<Expr> {
        match parse(src).unwrap().kind {
            ExprKind::Block(s) => s,
            _ => unreachable!(),
        }
    }

    fn var(n: &str) -> Expr {
        Expr::new(ExprKind::Var(n.into()))
    }

    fn num(v: f64) -> Expr {
        Expr::new(ExprKind::NumLit(v))
    }

    /// Structural equality ignoring node ids.
    fn same(a: &Expr, b: &Expr) -> bool {
        let mut a = a.clone();
        let mut b = b.clone();
        a.number(0);
        b.number(0);
        a == b
    }

    #[test]
    fn answer_function() {
        let s = stmts("function() { answer <- 42; answer }");
        let want = Expr::new(ExprKind::FunDef {
            params: vec![],
            body: Box::new(Expr::new(ExprKind::Block(vec![
                Expr::new(ExprKind::Assign("answer".into(), Box::new(num(42.0)))),
                var("answer"),
            ]))),
        });
        assert_eq!(s.len(), 1);
        assert!(same(&s[0], &want));
    }

    #[test]
    fn single_literal() {
        let p = parse("1").unwrap();
        assert!(same(&p, &Expr::new(ExprKind::Block(vec![num(1.0)]))));
    }

    #[test]
    fn if_without_else_as_body() {
        let s = stmts("f <- function(a, b) if (b) a");
        let want = Expr::new(ExprKind::Assign(
            "f".into(),
            Box::new(Expr::new(ExprKind::FunDef {
                params: vec!["a".into(), "b".into()],
                body: Box::new(Expr::new(ExprKind::If {
                    cond: Box::new(var("b")),
                    then: Box::new(var("a")),
                    els: None,
                })),
            })),
        ));
        assert!(same(&s[0], &want));
    }

    #[test]
    fn precedence_ladder() {
        // `<-` < comparison < additive < `*` < `:`
        let s = stmts("x <- 1 + 2 * 3 : 4 == 5");
        let colon = Expr::new(ExprKind::Binop(BinopKind::Colon, Box::new(num(3.0)), Box::new(num(4.0))));
        let mul = Expr::new(ExprKind::Binop(BinopKind::Mul, Box::new(num(2.0)), Box::new(colon)));
        let add = Expr::new(ExprKind::Binop(BinopKind::Add, Box::new(num(1.0)), Box::new(mul)));
        let eq = Expr::new(ExprKind::Binop(BinopKind::Eq, Box::new(add), Box::new(num(5.0))));
        let want = Expr::new(ExprKind::Assign("x".into(), Box::new(eq)));
        assert!(same(&s[0], &want));
    }

    #[test]
    fn assignment_is_right_associative() {
        let s = stmts("a <- b <- 1");
        let want = Expr::new(ExprKind::Assign(
            "a".into(),
            Box::new(Expr::new(ExprKind::Assign("b".into(), Box::new(num(1.0))))),
        ));
        assert!(same(&s[0], &want));
    }

    #[test]
    fn subtraction_is_left_associative() {
        let s = stmts("1 - 2 - 3");
        let inner = Expr::new(ExprKind::Binop(BinopKind::Sub, Box::new(num(1.0)), Box::new(num(2.0))));
        let want = Expr::new(ExprKind::Binop(BinopKind::Sub, Box::new(inner), Box::new(num(3.0))));
        assert!(same(&s[0], &want));
    }

    #[test]
    fn else_on_next_line_inside_braces() {
        let s = stmts("function() {\n  if (c) x <- 1\n  else x <- 2\n  x\n}");
        let ExprKind::FunDef { body, .. } = &s[0].kind else { panic!() };
        let ExprKind::Block(b) = &body.kind else { panic!() };
        assert_eq!(b.len(), 2);
        assert!(matches!(&b[0].kind, ExprKind::If { els: Some(_), .. }));
    }

    #[test]
    fn newlines_inside_call_are_ignored() {
        let s = stmts("f(1,\n  2)\ng()");
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn node_ids_are_preorder_and_unique() {
        let p = parse("f <- function(a) a + 1; f(2)").unwrap();
        let mut ids = Vec::new();
        p.walk(&mut |e| ids.push(e.id));
        let expect: Vec<u32> = (0..ids.len() as u32).collect();
        assert_eq!(ids, expect);
    }

    #[test]
    fn reserved_words_rejected() {
        for src in ["TRUE <- 1", "if <- 2", "function(while) 1", "function(x, x) 1"] {
            assert!(parse(src).is_err(), "{src}");
        }
    }

    #[test]
    fn errors_carry_position() {
        let e = parse("x <- 1\ny <- )").unwrap_err();
        assert_eq!((e.line, e.col), (2, 6));
    }

    #[test]
    fn negative_literal_folds() {
        let s = stmts("-3");
        assert!(same(&s[0], &num(-3.0)));
    }
}
