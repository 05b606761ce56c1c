use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use super::diagnostic::SourceSpan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Type {
    Num,
    Bool,
}

impl Type {
    pub fn name(self) -> &'static str {
        match self {
            Type::Num => "Num",
            Type::Bool => "Bool",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Or,
    And,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Or => "or",
            BinaryOp::And => "and",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge | BinaryOp::Eq | BinaryOp::Ne
        )
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinaryOp::Or | BinaryOp::And)
    }
}

/// Built-in numeric functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Abs,
    Min,
    Max,
    Exp,
    Log,
    Sqrt,
    Tanh,
    Sin,
    Cos,
    Sign,
    Clamp,
}

impl Builtin {
    pub const ALL: [Builtin; 11] = [
        Builtin::Abs,
        Builtin::Min,
        Builtin::Max,
        Builtin::Exp,
        Builtin::Log,
        Builtin::Sqrt,
        Builtin::Tanh,
        Builtin::Sin,
        Builtin::Cos,
        Builtin::Sign,
        Builtin::Clamp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Abs => "abs",
            Builtin::Min => "min",
            Builtin::Max => "max",
            Builtin::Exp => "exp",
            Builtin::Log => "log",
            Builtin::Sqrt => "sqrt",
            Builtin::Tanh => "tanh",
            Builtin::Sin => "sin",
            Builtin::Cos => "cos",
            Builtin::Sign => "sign",
            Builtin::Clamp => "clamp",
        }
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        Builtin::ALL.into_iter().find(|b| b.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::Min | Builtin::Max => 2,
            Builtin::Clamp => 3,
            _ => 1,
        }
    }
}

/// What an identifier refers to, filled in by the type checker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarRef {
    Observation(usize),
    Success,
    Failure,
    Binding(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Number(f64),
    Bool(bool),
    Var { name: String, resolved: Option<VarRef> },
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Call(Builtin, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: SourceSpan,
    /// `None` until the program has been type checked.
    pub ty: Option<Type>,
}

impl Expr {
    pub fn new(kind: ExprKind, span: SourceSpan) -> Self {
        Self { kind, span, ty: None }
    }

    pub fn number(value: f64) -> Self {
        Self::new(ExprKind::Number(value), SourceSpan::default())
    }

    pub fn boolean(value: bool) -> Self {
        Self::new(ExprKind::Bool(value), SourceSpan::default())
    }

    pub fn var(name: impl Into<String>) -> Self {
        Self::new(ExprKind::Var { name: name.into(), resolved: None }, SourceSpan::default())
    }

    pub fn unary(op: UnaryOp, operand: Expr) -> Self {
        Self::new(ExprKind::Unary(op, Box::new(operand)), SourceSpan::default())
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Self {
        Self::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), SourceSpan::default())
    }

    pub fn if_else(cond: Expr, then: Expr, otherwise: Expr) -> Self {
        Self::new(
            ExprKind::If(Box::new(cond), Box::new(then), Box::new(otherwise)),
            SourceSpan::default(),
        )
    }

    pub fn call(func: Builtin, args: Vec<Expr>) -> Self {
        Self::new(ExprKind::Call(func, args), SourceSpan::default())
    }

    /// Equality ignoring spans, type tags and name resolution.
    pub fn same_structure(&self, other: &Expr) -> bool {
        use ExprKind::*;
        match (&self.kind, &other.kind) {
            (Number(a), Number(b)) => a.to_bits() == b.to_bits(),
            (Bool(a), Bool(b)) => a == b,
            (Var { name: a, .. }, Var { name: b, .. }) => a == b,
            (Unary(op_a, a), Unary(op_b, b)) => op_a == op_b && a.same_structure(b),
            (Binary(op_a, la, ra), Binary(op_b, lb, rb)) => {
                op_a == op_b && la.same_structure(lb) && ra.same_structure(rb)
            }
            (If(ca, ta, ea), If(cb, tb, eb)) => {
                ca.same_structure(cb) && ta.same_structure(tb) && ea.same_structure(eb)
            }
            (Call(fa, aa), Call(fb, ab)) => {
                fa == fb && aa.len() == ab.len() && aa.iter().zip(ab).all(|(x, y)| x.same_structure(y))
            }
            _ => false,
        }
    }

    /// Nesting depth; a leaf has depth 1.
    pub fn depth(&self) -> usize {
        1 + match &self.kind {
            ExprKind::Number(_) | ExprKind::Bool(_) | ExprKind::Var { .. } => 0,
            ExprKind::Unary(_, e) => e.depth(),
            ExprKind::Binary(_, l, r) => l.depth().max(r.depth()),
            ExprKind::If(c, t, e) => c.depth().max(t.depth()).max(e.depth()),
            ExprKind::Call(_, args) => args.iter().map(Expr::depth).max().unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binding {
    pub name: String,
    pub name_span: SourceSpan,
    pub expr: Expr,
}

/// A reward function: `let` bindings evaluated in order, then a result.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardProgram {
    pub bindings: Vec<Binding>,
    pub result: Expr,
    /// Canonical pretty-printed text of the program.
    pub source: String,
}

impl RewardProgram {
    /// Builds a program from parts, deriving the canonical source text.
    pub fn new(bindings: Vec<Binding>, result: Expr) -> Self {
        let mut program = Self { bindings, result, source: String::new() };
        program.source = super::pretty::pretty_print(&program);
        program
    }

    pub fn same_structure(&self, other: &RewardProgram) -> bool {
        self.bindings.len() == other.bindings.len()
            && self
                .bindings
                .iter()
                .zip(&other.bindings)
                .all(|(a, b)| a.name == b.name && a.expr.same_structure(&b.expr))
            && self.result.same_structure(&other.result)
    }
}
