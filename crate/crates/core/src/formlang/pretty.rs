//! Source printer. Output re-parses to the same tree (up to positions).

use std::fmt::Write;

use super::ast::{BinOp, Expr, ExprKind, FormAst};

const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const UNARY: u8 = 3;
const POWER: u8 = 4;
const POSTFIX: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary { op: BinOp::Add | BinOp::Sub, .. } => SUM,
        ExprKind::Binary { op: BinOp::Mul | BinOp::Div, .. } => PRODUCT,
        ExprKind::Binary { op: BinOp::Pow, .. } => POWER,
        ExprKind::Neg(_) => UNARY,
        _ => POSTFIX,
    }
}

fn write_operand(out: &mut String, e: &Expr, min: u8) {
    if precedence(e) < min {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_list(out: &mut String, items: &[Expr]) {
    for (k, a) in items.iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        write_expr(out, a);
    }
}

pub fn write_expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Number(x) => {
            let _ = write!(out, "{x:?}");
        }
        ExprKind::Str(s) => {
            let q = if s.contains('"') { '\'' } else { '"' };
            let _ = write!(out, "{q}{s}{q}");
        }
        ExprKind::Name(n) => out.push_str(n),
        ExprKind::Call { func, args } => {
            out.push_str(func);
            out.push('(');
            write_list(out, args);
            out.push(')');
        }
        ExprKind::Index { base, indices } => {
            write_operand(out, base, POSTFIX);
            out.push('[');
            write_list(out, indices);
            out.push(']');
        }
        ExprKind::Derivative { base, direction } => {
            write_operand(out, base, POSTFIX);
            out.push_str(".dx(");
            write_expr(out, direction);
            out.push(')');
        }
        ExprKind::Neg(inner) => {
            out.push('-');
            write_operand(out, inner, UNARY);
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let (left, right) = match op {
                BinOp::Add | BinOp::Sub => (SUM, PRODUCT),
                BinOp::Mul | BinOp::Div => (PRODUCT, UNARY),
                BinOp::Pow => (POSTFIX, UNARY),
            };
            write_operand(out, lhs, left);
            let _ = write!(out, " {} ", op.symbol());
            write_operand(out, rhs, right);
        }
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

/// One statement per line.
pub fn pretty_print(ast: &FormAst) -> String {
    let mut out = String::new();
    for s in &ast.statements {
        out.push_str(&s.name);
        out.push_str(" = ");
        write_expr(&mut out, &s.value);
        out.push('\n');
    }
    out
}
