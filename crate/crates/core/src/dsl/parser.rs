use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::ast::{BinaryOp, Binding, Builtin, Expr, ExprKind, RewardProgram, UnaryOp};
use super::diagnostic::{Diagnostic, DiagnosticCode, SourceSpan};
use super::lexer::{tokenize, Tok, Token};

/// Parses reward program source text.
///
/// On failure the returned list holds a single error pointing at the first
/// offending token.
pub fn parse(source: &str) -> Result<RewardProgram, Vec<Diagnostic>> {
    let tokens = tokenize(source).map_err(|d| vec![d])?;
    let mut parser = Parser { tokens, pos: 0 };
    parser.program().map_err(|d| vec![d])
}

type PResult<T> = Result<T, Diagnostic>;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let idx = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    fn span(&self) -> SourceSpan {
        self.tokens[self.pos].span
    }

    fn advance(&mut self) -> Token {
        let token = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        token
    }

    fn eat(&mut self, tok: &Tok) -> Option<Token> {
        (self.peek() == tok).then(|| self.advance())
    }

    fn unexpected(&self, expected: &str) -> Diagnostic {
        let found = self.peek();
        if *found == Tok::Eof {
            Diagnostic::error(
                DiagnosticCode::ParseUnterminated,
                format!("unexpected end of input, expected {expected}"),
                Some(self.span()),
            )
        } else {
            Diagnostic::error(
                DiagnosticCode::ParseUnexpectedToken,
                format!("expected {expected}, found {}", found.describe()),
                Some(self.span()),
            )
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> PResult<Token> {
        self.eat(&tok).ok_or_else(|| self.unexpected(expected))
    }

    fn program(&mut self) -> PResult<RewardProgram> {
        let mut bindings = Vec::new();
        while self.eat(&Tok::Let).is_some() {
            let (name, name_span) = match self.peek().clone() {
                Tok::Ident(name) if Builtin::from_name(&name).is_none() => {
                    (name, self.advance().span)
                }
                Tok::Ident(name) => {
                    return Err(Diagnostic::error(
                        DiagnosticCode::ParseUnexpectedToken,
                        format!("`{name}` is a built-in function and cannot be bound"),
                        Some(self.span()),
                    )
                    .with_hint("pick a different binding name"))
                }
                _ => return Err(self.unexpected("a binding name")),
            };
            self.expect(Tok::Assign, "`=`")?;
            let expr = self.expr()?;
            self.expect(Tok::Semi, "`;` after binding")?;
            bindings.push(Binding { name, name_span, expr });
        }
        if *self.peek() != Tok::Return {
            return Err(self.unexpected("`let` or `return`"));
        }
        self.advance();
        let result = self.expr()?;
        self.expect(Tok::Semi, "`;` after return expression")?;
        if *self.peek() != Tok::Eof {
            return Err(Diagnostic::error(
                DiagnosticCode::ParseUnexpectedToken,
                format!("unexpected {} after the return statement", self.peek().describe()),
                Some(self.span()),
            )
            .with_hint("`return ...;` must be the last statement"));
        }
        Ok(RewardProgram::new(bindings, result))
    }

    fn expr(&mut self) -> PResult<Expr> {
        if let Some(kw) = self.eat(&Tok::If) {
            let cond = self.expr()?;
            self.expect(Tok::Then, "`then`")?;
            let then = self.expr()?;
            self.expect(Tok::Else, "`else`")?;
            let otherwise = self.expr()?;
            let span = kw.span.join(otherwise.span);
            return Ok(Expr::new(
                ExprKind::If(Box::new(cond), Box::new(then), Box::new(otherwise)),
                span,
            ));
        }
        self.or_expr()
    }

    fn left_assoc(
        &mut self,
        next: fn(&mut Self) -> PResult<Expr>,
        op_for: fn(&Tok) -> Option<BinaryOp>,
    ) -> PResult<Expr> {
        let mut lhs = next(self)?;
        while let Some(op) = op_for(self.peek()) {
            self.advance();
            let rhs = next(self)?;
            let span = lhs.span.join(rhs.span);
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        self.left_assoc(Self::and_expr, |t| (*t == Tok::Or).then_some(BinaryOp::Or))
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        self.left_assoc(Self::not_expr, |t| (*t == Tok::And).then_some(BinaryOp::And))
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if let Some(kw) = self.eat(&Tok::Not) {
            let operand = self.not_expr()?;
            let span = kw.span.join(operand.span);
            return Ok(Expr::new(ExprKind::Unary(UnaryOp::Not, Box::new(operand)), span));
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let lhs = self.add_expr()?;
        let op = match self.peek() {
            Tok::Lt => BinaryOp::Lt,
            Tok::Le => BinaryOp::Le,
            Tok::Gt => BinaryOp::Gt,
            Tok::Ge => BinaryOp::Ge,
            Tok::EqEq => BinaryOp::Eq,
            Tok::NotEq => BinaryOp::Ne,
            _ => return Ok(lhs),
        };
        self.advance();
        let rhs = self.add_expr()?;
        if matches!(self.peek(), Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge | Tok::EqEq | Tok::NotEq) {
            return Err(Diagnostic::error(
                DiagnosticCode::ParseUnexpectedToken,
                format!("comparisons cannot be chained, found {}", self.peek().describe()),
                Some(self.span()),
            )
            .with_hint("combine comparisons with `and`"));
        }
        let span = lhs.span.join(rhs.span);
        Ok(Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span))
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        self.left_assoc(Self::mul_expr, |t| match t {
            Tok::Plus => Some(BinaryOp::Add),
            Tok::Minus => Some(BinaryOp::Sub),
            _ => None,
        })
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        self.left_assoc(Self::unary, |t| match t {
            Tok::Star => Some(BinaryOp::Mul),
            Tok::Slash => Some(BinaryOp::Div),
            _ => None,
        })
    }

    fn unary(&mut self) -> PResult<Expr> {
        if let Some(minus) = self.eat(&Tok::Minus) {
            let operand = self.unary()?;
            let span = minus.span.join(operand.span);
            return Ok(Expr::new(ExprKind::Unary(UnaryOp::Neg, Box::new(operand)), span));
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Expr> {
        let base = self.atom()?;
        if self.eat(&Tok::Caret).is_some() {
            // Exponent is a `unary`, which recurses into `power`: right-associative.
            let exponent = self.unary()?;
            let span = base.span.join(exponent.span);
            return Ok(Expr::new(
                ExprKind::Binary(BinaryOp::Pow, Box::new(base), Box::new(exponent)),
                span,
            ));
        }
        Ok(base)
    }

    fn atom(&mut self) -> PResult<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Number(value) => {
                self.advance();
                Ok(Expr::new(ExprKind::Number(value), span))
            }
            Tok::True | Tok::False => {
                let value = *self.peek() == Tok::True;
                self.advance();
                Ok(Expr::new(ExprKind::Bool(value), span))
            }
            Tok::LParen => {
                self.advance();
                let mut inner = self.expr()?;
                let close = self.expect(Tok::RParen, "`)`")?;
                inner.span = span.join(close.span);
                Ok(inner)
            }
            Tok::Ident(name) => match Builtin::from_name(&name) {
                Some(func) => self.call(func, span),
                None if *self.peek_at(1) == Tok::LParen => Err(Diagnostic::error(
                    DiagnosticCode::ParseUnexpectedToken,
                    format!("unknown function `{name}`"),
                    Some(span),
                )
                .with_hint(builtin_list())),
                None => {
                    self.advance();
                    Ok(Expr::new(ExprKind::Var { name, resolved: None }, span))
                }
            },
            _ => Err(self.unexpected("an expression")),
        }
    }

    fn call(&mut self, func: Builtin, start: SourceSpan) -> PResult<Expr> {
        self.advance();
        if *self.peek() != Tok::LParen {
            return Err(Diagnostic::error(
                DiagnosticCode::ParseUnexpectedToken,
                format!("built-in `{}` must be called, found {}", func.name(), self.peek().describe()),
                Some(self.span()),
            )
            .with_hint(format!("write `{}(...)`", func.name())));
        }
        self.advance();
        let mut args = vec![self.expr()?];
        while self.eat(&Tok::Comma).is_some() {
            args.push(self.expr()?);
        }
        let close = self.expect(Tok::RParen, "`,` or `)`")?;
        let span = start.join(close.span);
        if args.len() != func.arity() {
            return Err(Diagnostic::error(
                DiagnosticCode::ParseArity,
                format!(
                    "`{}` takes {} argument{}, found {}",
                    func.name(),
                    func.arity(),
                    if func.arity() == 1 { "" } else { "s" },
                    args.len()
                ),
                Some(span),
            ));
        }
        Ok(Expr::new(ExprKind::Call(func, args), span))
    }
}

fn builtin_list() -> String {
    let names: Vec<&str> = Builtin::ALL.iter().map(|b| b.name()).collect();
    format!("available functions: {}", names.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first_error(src: &str) -> Diagnostic {
        parse(src).unwrap_err().remove(0)
    }

    #[test]
    fn minimal_program() {
        let p = parse("return 1.0;").unwrap();
        assert!(p.bindings.is_empty());
        assert!(p.result.same_structure(&Expr::number(1.0)));
    }

    #[test]
    fn binding_and_negated_call() {
        let p = parse("let a = pole_angle * 2.0; return -abs(a);").unwrap();
        assert_eq!(p.bindings.len(), 1);
        assert_eq!(p.bindings[0].name, "a");
        let expected = Expr::unary(UnaryOp::Neg, Expr::call(Builtin::Abs, vec![Expr::var("a")]));
        assert!(p.result.same_structure(&expected));
    }

    #[test]
    fn arity_error_spans_the_call() {
        let d = first_error("return min(1.0);");
        assert_eq!(d.code, DiagnosticCode::ParseArity);
        // "min(1.0)" occupies columns 8..=15.
        assert_eq!(d.span, Some(SourceSpan::new(1, 8, 1, 16)));
    }

    #[test]
    fn precedence_and_associativity() {
        let p = parse("return -a ^ b ^ c;").unwrap();
        let expected = Expr::unary(
            UnaryOp::Neg,
            Expr::binary(
                BinaryOp::Pow,
                Expr::var("a"),
                Expr::binary(BinaryOp::Pow, Expr::var("b"), Expr::var("c")),
            ),
        );
        assert!(p.result.same_structure(&expected));

        let p = parse("return a - b - c * d;").unwrap();
        let expected = Expr::binary(
            BinaryOp::Sub,
            Expr::binary(BinaryOp::Sub, Expr::var("a"), Expr::var("b")),
            Expr::binary(BinaryOp::Mul, Expr::var("c"), Expr::var("d")),
        );
        assert!(p.result.same_structure(&expected));

        let p = parse("return not a < b and c;").unwrap();
        let expected = Expr::binary(
            BinaryOp::And,
            Expr::unary(UnaryOp::Not, Expr::binary(BinaryOp::Lt, Expr::var("a"), Expr::var("b"))),
            Expr::var("c"),
        );
        assert!(p.result.same_structure(&expected));
    }

    #[test]
    fn exponent_may_be_negated() {
        let p = parse("return 2.0 ^ -x;").unwrap();
        let expected = Expr::binary(
            BinaryOp::Pow,
            Expr::number(2.0),
            Expr::unary(UnaryOp::Neg, Expr::var("x")),
        );
        assert!(p.result.same_structure(&expected));
    }

    #[test]
    fn unterminated_inputs() {
        assert_eq!(first_error("return 1.0").code, DiagnosticCode::ParseUnterminated);
        assert_eq!(first_error("return (1.0;").code, DiagnosticCode::ParseUnexpectedToken);
        assert_eq!(first_error("return (1.0").code, DiagnosticCode::ParseUnterminated);
        assert_eq!(first_error("").code, DiagnosticCode::ParseUnterminated);
        assert_eq!(first_error("let a = 1.0;").code, DiagnosticCode::ParseUnterminated);
    }

    #[test]
    fn unexpected_tokens_point_at_the_token() {
        let d = first_error("return 1.0 +;");
        assert_eq!(d.code, DiagnosticCode::ParseUnexpectedToken);
        assert_eq!(d.span, Some(SourceSpan::new(1, 13, 1, 14)));

        assert_eq!(first_error("return 1; return 2;").code, DiagnosticCode::ParseUnexpectedToken);
        assert_eq!(first_error("return a < b < c;").code, DiagnosticCode::ParseUnexpectedToken);
        assert_eq!(first_error("return foo(1.0);").code, DiagnosticCode::ParseUnexpectedToken);
        assert_eq!(first_error("return abs;").code, DiagnosticCode::ParseUnexpectedToken);
        assert_eq!(first_error("let abs = 1.0; return abs;").code, DiagnosticCode::ParseUnexpectedToken);
        assert_eq!(first_error("return 1 + if a then 1 else 2;").code, DiagnosticCode::ParseUnexpectedToken);
    }

    #[test]
    fn comments_and_whitespace_are_ignored() {
        let a = parse("# header\nlet  x =\n 1.0 ; # note\n return x ;").unwrap();
        let b = parse("let x = 1.0; return x;").unwrap();
        assert!(a.same_structure(&b));
        assert_eq!(a.source, b.source);
    }

    #[test]
    fn parse_is_deterministic() {
        let src = "let a = min(x, 2.0); return if a > 1.0 then a else -a;";
        assert_eq!(parse(src), parse(src));
    }
}
