use super::ast::{Expr, ExprKind};

pub fn format_num(v: f64) -> String {
    format!("{}", v)
}

pub fn quote_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Print a whole program (a top-level `Block`) one statement per line.
pub fn print_program(prog: &Expr) -> String {
    match &prog.kind {
        ExprKind::Block(stmts) => {
            let mut s = stmts.iter().map(print_expr).collect::<Vec<_>>().join("\n");
            s.push('\n');
            s
        }
        _ => format!("{}\n", print_expr(prog)),
    }
}

/// Print an expression so that `parse` yields the same tree back.
pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out);
    out
}

fn is_compound(e: &Expr) -> bool {
    matches!(
        e.kind,
        ExprKind::Assign(..)
            | ExprKind::FunDef { .. }
            | ExprKind::If { .. }
            | ExprKind::While { .. }
            | ExprKind::Binop(..)
    )
}

fn write_sub(e: &Expr, out: &mut String) {
    if is_compound(e) {
        out.push('(');
        write_expr(e, out);
        out.push(')');
    } else {
        write_expr(e, out);
    }
}

fn write_expr(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::NumLit(v) => out.push_str(&format_num(*v)),
        ExprKind::BoolLit(b) => out.push_str(if *b { "TRUE" } else { "FALSE" }),
        ExprKind::StrLit(s) => out.push_str(&quote_str(s)),
        ExprKind::Var(name) => out.push_str(name),
        ExprKind::Assign(name, rhs) => {
            out.push_str(name);
            out.push_str(" <- ");
            write_expr(rhs, out);
        }
        ExprKind::FunDef { params, body } => {
            out.push_str("function(");
            out.push_str(&params.join(", "));
            out.push_str(") ");
            write_expr(body, out);
        }
        ExprKind::Call { callee, args } => {
            if matches!(callee.kind, ExprKind::Var(_)) {
                write_expr(callee, out);
            } else {
                out.push('(');
                write_expr(callee, out);
                out.push(')');
            }
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(a, out);
            }
            out.push(')');
        }
        ExprKind::If { cond, then, els } => {
            out.push_str("if (");
            write_expr(cond, out);
            out.push_str(") ");
            write_sub(then, out);
            if let Some(els) = els {
                out.push_str(" else ");
                write_expr(els, out);
            }
        }
        ExprKind::While { cond, body } => {
            out.push_str("while (");
            write_expr(cond, out);
            out.push_str(") ");
            write_expr(body, out);
        }
        ExprKind::Block(stmts) => {
            if stmts.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{ ");
            for (i, s) in stmts.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                write_expr(s, out);
            }
            out.push_str(" }");
        }
        ExprKind::Binop(op, l, r) => {
            write_sub(l, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_sub(r, out);
        }
    }
}
