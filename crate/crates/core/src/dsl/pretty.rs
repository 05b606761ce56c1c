use alloc::string::String;
use core::fmt::Write;

use super::ast::{BinaryOp, Expr, ExprKind, RewardProgram, UnaryOp};

/// Canonical text of a program: one statement per line, single spaces
/// around binary operators and only the parentheses the grammar needs.
///
/// One exception to minimality: a power directly under unary minus is
/// parenthesised (`-(x ^ 2.0)`), since `-x ^ 2.0` reads ambiguously.
pub fn pretty_print(program: &RewardProgram) -> String {
    let mut out = String::new();
    for binding in &program.bindings {
        out.push_str("let ");
        out.push_str(&binding.name);
        out.push_str(" = ");
        write_expr(&mut out, &binding.expr, 0);
        out.push_str(";\n");
    }
    out.push_str("return ");
    write_expr(&mut out, &program.result, 0);
    out.push(';');
    out
}

const IF: u8 = 0;
const OR: u8 = 1;
const AND: u8 = 2;
const NOT: u8 = 3;
const CMP: u8 = 4;
const ADD: u8 = 5;
const MUL: u8 = 6;
const NEG: u8 = 7;
const POW: u8 = 8;
const ATOM: u8 = 9;

fn precedence(expr: &Expr) -> u8 {
    match &expr.kind {
        ExprKind::If(..) => IF,
        ExprKind::Unary(UnaryOp::Not, _) => NOT,
        ExprKind::Unary(UnaryOp::Neg, _) => NEG,
        ExprKind::Binary(op, ..) => binary_precedence(*op),
        ExprKind::Number(_) | ExprKind::Bool(_) | ExprKind::Var { .. } | ExprKind::Call(..) => ATOM,
    }
}

fn binary_precedence(op: BinaryOp) -> u8 {
    match op {
        BinaryOp::Or => OR,
        BinaryOp::And => AND,
        BinaryOp::Add | BinaryOp::Sub => ADD,
        BinaryOp::Mul | BinaryOp::Div => MUL,
        BinaryOp::Pow => POW,
        _ => CMP,
    }
}

fn write_expr(out: &mut String, expr: &Expr, min_prec: u8) {
    let parens = precedence(expr) < min_prec;
    if parens {
        out.push('(');
    }
    match &expr.kind {
        ExprKind::Number(value) => {
            let _ = write!(out, "{value:?}");
        }
        ExprKind::Bool(value) => out.push_str(if *value { "true" } else { "false" }),
        ExprKind::Var { name, .. } => out.push_str(name),
        ExprKind::Unary(UnaryOp::Not, operand) => {
            out.push_str("not ");
            write_expr(out, operand, NOT);
        }
        ExprKind::Unary(UnaryOp::Neg, operand) => {
            out.push('-');
            let is_pow = matches!(operand.kind, ExprKind::Binary(BinaryOp::Pow, ..));
            write_expr(out, operand, if is_pow { ATOM } else { NEG });
        }
        ExprKind::Binary(BinaryOp::Pow, base, exponent) => {
            write_expr(out, base, ATOM);
            out.push_str(" ^ ");
            write_expr(out, exponent, NEG);
        }
        ExprKind::Binary(op, lhs, rhs) => {
            let prec = binary_precedence(*op);
            let (left_min, right_min) = if prec == CMP { (ADD, ADD) } else { (prec, prec + 1) };
            write_expr(out, lhs, left_min);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_expr(out, rhs, right_min);
        }
        ExprKind::If(cond, then, otherwise) => {
            out.push_str("if ");
            write_expr(out, cond, IF);
            out.push_str(" then ");
            write_expr(out, then, IF);
            out.push_str(" else ");
            write_expr(out, otherwise, IF);
        }
        ExprKind::Call(func, args) => {
            out.push_str(func.name());
            out.push('(');
            for (i, arg) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, arg, IF);
            }
            out.push(')');
        }
    }
    if parens {
        out.push(')');
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;

    fn canon(src: &str) -> alloc::string::String {
        parse(src).unwrap().source
    }

    #[test]
    fn strips_redundant_parentheses() {
        assert_eq!(canon("return ((1.0)+(2.0));"), "return 1.0 + 2.0;");
        assert_eq!(canon("return (a * b) + (c / d);"), "return a * b + c / d;");
    }

    #[test]
    fn keeps_needed_parentheses() {
        assert_eq!(canon("return a - (b - c);"), "return a - (b - c);");
        assert_eq!(canon("return (a + b) * c;"), "return (a + b) * c;");
        assert_eq!(canon("return (a ^ b) ^ c;"), "return (a ^ b) ^ c;");
        assert_eq!(canon("return a ^ (b ^ c);"), "return a ^ b ^ c;");
        assert_eq!(canon("return (-a) ^ 2;"), "return (-a) ^ 2.0;");
        assert_eq!(canon("return 1 + (if s then 1 else 2);"), "return 1.0 + (if s then 1.0 else 2.0);");
        assert_eq!(canon("return not (a and b);"), "return not (a and b);");
        assert_eq!(canon("return (a < b) == c;"), "return (a < b) == c;");
    }

    #[test]
    fn unary_minus_over_power_is_parenthesised() {
        assert_eq!(canon("return -(pole_angle^2.0);"), "return -(pole_angle ^ 2.0);");
        assert_eq!(canon("return -pole_angle^2.0;"), "return -(pole_angle ^ 2.0);");
        assert_eq!(canon("return --x;"), "return --x;");
    }

    #[test]
    fn one_binding_per_line() {
        assert_eq!(
            canon("let a=1;let b=max(a,2.5e-7); return clamp(b,0,1);"),
            "let a = 1.0;\nlet b = max(a, 2.5e-7);\nreturn clamp(b, 0.0, 1.0);"
        );
    }

    #[test]
    fn canonical_text_is_a_fixed_point() {
        for src in [
            "return if a > 0 then -(a^2) else sqrt(abs(a)) * 1e20;",
            "let t = not (x != 1) or y >= 2; return if t then 1 else 0;",
        ] {
            let once = canon(src);
            assert_eq!(canon(&once), once);
        }
    }
}
