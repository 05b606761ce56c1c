use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::diagnostic::{Diagnostic, DiagnosticCode, SourceSpan};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Number(f64),
    Ident(String),
    Let,
    Return,
    If,
    Then,
    Else,
    And,
    Or,
    Not,
    True,
    False,
    LParen,
    RParen,
    Comma,
    Semi,
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    NotEq,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Number(n) => format!("number `{n:?}`"),
            Tok::Ident(name) => format!("identifier `{name}`"),
            Tok::Eof => String::from("end of input"),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Let => "let",
            Tok::Return => "return",
            Tok::If => "if",
            Tok::Then => "then",
            Tok::Else => "else",
            Tok::And => "and",
            Tok::Or => "or",
            Tok::Not => "not",
            Tok::True => "true",
            Tok::False => "false",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Assign => "=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Caret => "^",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Number(_) | Tok::Ident(_) | Tok::Eof => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

struct Cursor<'a> {
    chars: core::iter::Peekable<core::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> (u32, u32) {
        (self.line, self.col)
    }
}

pub(crate) fn tokenize(source: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut cur = Cursor { chars: source.chars().peekable(), line: 1, col: 1 };
    let mut tokens = Vec::new();

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '#' {
            while !matches!(cur.peek(), None | Some('\n')) {
                cur.bump();
            }
            continue;
        }

        let (line, col) = cur.pos();
        let tok = if c.is_ascii_digit() {
            lex_number(&mut cur, line, col)?
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while let Some(c) = cur.peek().filter(|c| c.is_ascii_alphanumeric() || *c == '_') {
                word.push(c);
                cur.bump();
            }
            keyword(&word).unwrap_or(Tok::Ident(word))
        } else {
            cur.bump();
            let two = |cur: &mut Cursor<'_>, next: char, yes: Tok, no: Option<Tok>| {
                if cur.peek() == Some(next) {
                    cur.bump();
                    Some(yes)
                } else {
                    no
                }
            };
            let tok = match c {
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                ',' => Some(Tok::Comma),
                ';' => Some(Tok::Semi),
                '+' => Some(Tok::Plus),
                '-' => Some(Tok::Minus),
                '*' => Some(Tok::Star),
                '/' => Some(Tok::Slash),
                '^' => Some(Tok::Caret),
                '<' => two(&mut cur, '=', Tok::Le, Some(Tok::Lt)),
                '>' => two(&mut cur, '=', Tok::Ge, Some(Tok::Gt)),
                '=' => two(&mut cur, '=', Tok::EqEq, Some(Tok::Assign)),
                '!' => two(&mut cur, '=', Tok::NotEq, None),
                _ => None,
            };
            match tok {
                Some(tok) => tok,
                None => {
                    let (end_line, end_col) = cur.pos();
                    let mut diag = Diagnostic::error(
                        DiagnosticCode::ParseUnexpectedToken,
                        format!("unexpected character `{c}`"),
                        Some(SourceSpan::new(line, col, end_line, end_col)),
                    );
                    if c == '!' {
                        diag = diag.with_hint("use `not` for logical negation");
                    } else if c == '&' || c == '|' {
                        diag = diag.with_hint("use `and` / `or` for logical connectives");
                    }
                    return Err(diag);
                }
            }
        };
        let (end_line, end_col) = cur.pos();
        tokens.push(Token { tok, span: SourceSpan::new(line, col, end_line, end_col) });
    }

    let (line, col) = cur.pos();
    tokens.push(Token { tok: Tok::Eof, span: SourceSpan::new(line, col, line, col) });
    Ok(tokens)
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "let" => Tok::Let,
        "return" => Tok::Return,
        "if" => Tok::If,
        "then" => Tok::Then,
        "else" => Tok::Else,
        "and" => Tok::And,
        "or" => Tok::Or,
        "not" => Tok::Not,
        "true" => Tok::True,
        "false" => Tok::False,
        _ => return None,
    })
}

// digits ("." digits)? ([eE] [+-]? digits)?
fn lex_number(cur: &mut Cursor<'_>, line: u32, col: u32) -> Result<Tok, Diagnostic> {
    let mut text = String::new();
    let take_digits = |cur: &mut Cursor<'_>, text: &mut String| {
        let mut any = false;
        while let Some(d) = cur.peek().filter(char::is_ascii_digit) {
            text.push(d);
            cur.bump();
            any = true;
        }
        any
    };
    take_digits(cur, &mut text);

    let malformed = |cur: &Cursor<'_>, what: &str| {
        let (end_line, end_col) = cur.pos();
        Diagnostic::error(
            DiagnosticCode::ParseUnexpectedToken,
            format!("malformed number literal: {what}"),
            Some(SourceSpan::new(line, col, end_line, end_col)),
        )
        .with_hint("number literals look like 2, 0.5 or 1.5e-3")
    };

    if cur.peek() == Some('.') {
        text.push('.');
        cur.bump();
        if !take_digits(cur, &mut text) {
            return Err(malformed(cur, "expected digits after `.`"));
        }
    }
    if let Some(e) = cur.peek().filter(|c| *c == 'e' || *c == 'E') {
        text.push(e);
        cur.bump();
        if let Some(sign) = cur.peek().filter(|c| *c == '+' || *c == '-') {
            text.push(sign);
            cur.bump();
        }
        if !take_digits(cur, &mut text) {
            return Err(malformed(cur, "expected digits in exponent"));
        }
    }
    if cur.peek().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
        cur.bump();
        return Err(malformed(cur, "identifier characters directly after a number"));
    }
    match text.parse::<f64>() {
        Ok(value) if value.is_finite() => Ok(Tok::Number(value)),
        _ => Err(malformed(cur, "value is not a finite double")),
    }
}
