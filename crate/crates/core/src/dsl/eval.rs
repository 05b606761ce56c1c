//! Compilation of typed programs to a flat stack code, and its evaluation.

use alloc::format;
use alloc::vec::Vec;

use super::ast::{BinaryOp, Builtin, Expr, ExprKind, RewardProgram, UnaryOp, VarRef};
use super::diagnostic::{Diagnostic, DiagnosticCode, SourceSpan};
use super::typeck::TypedProgram;

/// Default bound on the magnitude of a reward.
pub const DEFAULT_R_MAX: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub reward: f64,
    /// The raw result exceeded `r_max` in magnitude and was clamped.
    pub clamped: bool,
}

/// Stack instructions. Booleans live on the stack as 0.0 / 1.0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(super) enum Instr {
    Const(f64),
    Obs(usize),
    Success,
    Failure,
    Load(usize),
    Store(usize),
    Neg,
    Not,
    Bin(BinaryOp),
    Call(Builtin),
    Jump(usize),
    /// Pops; jumps when false.
    JumpIfFalse(usize),
    /// Jumps keeping the value when false, else pops it (`and`).
    JumpIfFalseKeep(usize),
    /// Jumps keeping the value when true, else pops it (`or`).
    JumpIfTrueKeep(usize),
}

pub(super) struct Compiled {
    pub code: Vec<Instr>,
    pub spans: Vec<SourceSpan>,
    pub n_locals: usize,
}

pub(super) fn compile(program: &RewardProgram) -> Compiled {
    let mut c = Compiled { code: Vec::new(), spans: Vec::new(), n_locals: program.bindings.len() };
    for (slot, binding) in program.bindings.iter().enumerate() {
        emit_expr(&mut c, &binding.expr);
        c.push(Instr::Store(slot), binding.name_span);
    }
    emit_expr(&mut c, &program.result);
    c
}

impl Compiled {
    fn push(&mut self, instr: Instr, span: SourceSpan) -> usize {
        self.code.push(instr);
        self.spans.push(span);
        self.code.len() - 1
    }

    fn patch(&mut self, at: usize, target: usize) {
        self.code[at] = match self.code[at] {
            Instr::Jump(_) => Instr::Jump(target),
            Instr::JumpIfFalse(_) => Instr::JumpIfFalse(target),
            Instr::JumpIfFalseKeep(_) => Instr::JumpIfFalseKeep(target),
            Instr::JumpIfTrueKeep(_) => Instr::JumpIfTrueKeep(target),
            other => other,
        };
    }
}

fn emit_expr(c: &mut Compiled, expr: &Expr) {
    let span = expr.span;
    match &expr.kind {
        ExprKind::Number(v) => {
            c.push(Instr::Const(*v), span);
        }
        ExprKind::Bool(b) => {
            c.push(Instr::Const(if *b { 1.0 } else { 0.0 }), span);
        }
        ExprKind::Var { resolved, .. } => {
            let instr = match resolved.expect("type checked program has resolved names") {
                VarRef::Observation(i) => Instr::Obs(i),
                VarRef::Success => Instr::Success,
                VarRef::Failure => Instr::Failure,
                VarRef::Binding(i) => Instr::Load(i),
            };
            c.push(instr, span);
        }
        ExprKind::Unary(op, operand) => {
            emit_expr(c, operand);
            c.push(if *op == UnaryOp::Neg { Instr::Neg } else { Instr::Not }, span);
        }
        ExprKind::Binary(op @ (BinaryOp::And | BinaryOp::Or), lhs, rhs) => {
            emit_expr(c, lhs);
            let jump = if *op == BinaryOp::And { Instr::JumpIfFalseKeep(0) } else { Instr::JumpIfTrueKeep(0) };
            let at = c.push(jump, span);
            emit_expr(c, rhs);
            let end = c.code.len();
            c.patch(at, end);
        }
        ExprKind::Binary(op, lhs, rhs) => {
            emit_expr(c, lhs);
            emit_expr(c, rhs);
            c.push(Instr::Bin(*op), span);
        }
        ExprKind::If(cond, then, otherwise) => {
            emit_expr(c, cond);
            let to_else = c.push(Instr::JumpIfFalse(0), span);
            emit_expr(c, then);
            let to_end = c.push(Instr::Jump(0), span);
            let else_start = c.code.len();
            c.patch(to_else, else_start);
            emit_expr(c, otherwise);
            let end = c.code.len();
            c.patch(to_end, end);
        }
        ExprKind::Call(func, args) => {
            for arg in args {
                emit_expr(c, arg);
            }
            c.push(Instr::Call(*func), span);
        }
    }
}

fn truth(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

impl TypedProgram {
    /// Evaluates the reward for one transition.
    ///
    /// `obs` is laid out in observation-spec order. Division by zero, `log`
    /// of a non-positive value, `sqrt` of a negative value and `clamp` with
    /// inverted bounds abort with `DOMAIN_FAULT`; any other non-finite value
    /// aborts with `NONFINITE_RESULT`. A finite result is clamped to
    /// `[-r_max, r_max]`.
    pub fn evaluate(&self, obs: &[f64], success: bool, failure: bool, r_max: f64) -> Result<Evaluation, Diagnostic> {
        assert_eq!(obs.len(), self.observation_names().len(), "observation arity");
        assert!(r_max > 0.0 && r_max.is_finite(), "r_max must be positive and finite");

        let mut stack: Vec<f64> = Vec::with_capacity(16);
        let mut locals = alloc::vec![0.0f64; self.n_locals];
        let mut pc = 0;

        while pc < self.code.len() {
            let span = self.code_spans[pc];
            let domain = |msg: &str| Diagnostic::error(DiagnosticCode::DomainFault, msg, Some(span));
            let mut next = pc + 1;
            match self.code[pc] {
                Instr::Const(v) => stack.push(v),
                Instr::Obs(i) => {
                    let v = obs[i];
                    if !v.is_finite() {
                        return Err(Diagnostic::error(
                            DiagnosticCode::NonfiniteResult,
                            format!("observation `{}` is not finite", self.observation_names()[i]),
                            Some(span),
                        ));
                    }
                    stack.push(v);
                }
                Instr::Success => stack.push(truth(success)),
                Instr::Failure => stack.push(truth(failure)),
                Instr::Load(i) => stack.push(locals[i]),
                Instr::Store(i) => locals[i] = stack.pop().expect("stack"),
                Instr::Neg => {
                    let v = stack.pop().expect("stack");
                    stack.push(-v);
                }
                Instr::Not => {
                    let v = stack.pop().expect("stack");
                    stack.push(truth(v == 0.0));
                }
                Instr::Bin(op) => {
                    let b = stack.pop().expect("stack");
                    let a = stack.pop().expect("stack");
                    let v = match op {
                        BinaryOp::Add => a + b,
                        BinaryOp::Sub => a - b,
                        BinaryOp::Mul => a * b,
                        BinaryOp::Div => {
                            if b == 0.0 {
                                return Err(domain("division by zero"));
                            }
                            a / b
                        }
                        BinaryOp::Pow => libm::pow(a, b),
                        BinaryOp::Lt => truth(a < b),
                        BinaryOp::Le => truth(a <= b),
                        BinaryOp::Gt => truth(a > b),
                        BinaryOp::Ge => truth(a >= b),
                        BinaryOp::Eq => truth(a == b),
                        BinaryOp::Ne => truth(a != b),
                        BinaryOp::And | BinaryOp::Or => unreachable!("compiled to jumps"),
                    };
                    stack.push(finite(v, span)?);
                }
                Instr::Call(func) => {
                    let v = match func {
                        Builtin::Min | Builtin::Max => {
                            let b = stack.pop().expect("stack");
                            let a = stack.pop().expect("stack");
                            if func == Builtin::Min { a.min(b) } else { a.max(b) }
                        }
                        Builtin::Clamp => {
                            let hi = stack.pop().expect("stack");
                            let lo = stack.pop().expect("stack");
                            let x = stack.pop().expect("stack");
                            if lo > hi {
                                return Err(domain("clamp lower bound exceeds upper bound"));
                            }
                            x.max(lo).min(hi)
                        }
                        _ => {
                            let x = stack.pop().expect("stack");
                            match func {
                                Builtin::Abs => libm::fabs(x),
                                Builtin::Exp => libm::exp(x),
                                Builtin::Log => {
                                    if x <= 0.0 {
                                        return Err(domain("log of a non-positive value"));
                                    }
                                    libm::log(x)
                                }
                                Builtin::Sqrt => {
                                    if x < 0.0 {
                                        return Err(domain("sqrt of a negative value"));
                                    }
                                    libm::sqrt(x)
                                }
                                Builtin::Tanh => libm::tanh(x),
                                Builtin::Sin => libm::sin(x),
                                Builtin::Cos => libm::cos(x),
                                Builtin::Sign => {
                                    if x > 0.0 {
                                        1.0
                                    } else if x < 0.0 {
                                        -1.0
                                    } else {
                                        0.0
                                    }
                                }
                                _ => unreachable!(),
                            }
                        }
                    };
                    stack.push(finite(v, span)?);
                }
                Instr::Jump(target) => next = target,
                Instr::JumpIfFalse(target) => {
                    if stack.pop().expect("stack") == 0.0 {
                        next = target;
                    }
                }
                Instr::JumpIfFalseKeep(target) => {
                    if *stack.last().expect("stack") == 0.0 {
                        next = target;
                    } else {
                        stack.pop();
                    }
                }
                Instr::JumpIfTrueKeep(target) => {
                    if *stack.last().expect("stack") != 0.0 {
                        next = target;
                    } else {
                        stack.pop();
                    }
                }
            }
            pc = next;
        }

        let raw = stack.pop().expect("program leaves its result on the stack");
        debug_assert!(stack.is_empty());
        let clamped = raw.abs() > r_max;
        Ok(Evaluation { reward: raw.clamp(-r_max, r_max), clamped })
    }

    /// [`evaluate`](Self::evaluate) with observations given by name.
    ///
    /// Returns `None` if an observation variable is missing.
    pub fn evaluate_named(
        &self,
        obs: &[(&str, f64)],
        success: bool,
        failure: bool,
        r_max: f64,
    ) -> Option<Result<Evaluation, Diagnostic>> {
        let ordered: Option<Vec<f64>> = self
            .observation_names()
            .iter()
            .map(|name| obs.iter().find(|(n, _)| n == name).map(|(_, v)| *v))
            .collect();
        ordered.map(|values| self.evaluate(&values, success, failure, r_max))
    }
}

fn finite(v: f64, span: SourceSpan) -> Result<f64, Diagnostic> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Diagnostic::error(
            DiagnosticCode::NonfiniteResult,
            "intermediate value is not finite",
            Some(span),
        )
        .with_hint("guard large exponents and divisions by small values"))
    }
}
