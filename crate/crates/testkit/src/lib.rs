//! Test support: an independent reference interpreter for reward programs
//! and a generator of random well-typed programs.
//!
//! The reference interpreter walks the untyped AST directly, resolving names
//! through an environment map. It shares nothing with the production
//! evaluator except the scalar math routines (`libm`), so results agree
//! bit-for-bit on the same operation order.

use std::collections::HashMap;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rewardforge_core::dsl::{
    BinaryOp, Binding, Builtin, DiagnosticCode, Expr, ExprKind, RewardProgram, UnaryOp,
};
use rewardforge_core::ObservationSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Value {
    Num(f64),
    Bool(bool),
}

impl Value {
    fn num(self) -> f64 {
        match self {
            Value::Num(v) => v,
            Value::Bool(_) => panic!("reference interpreter: expected Num"),
        }
    }

    fn boolean(self) -> bool {
        match self {
            Value::Bool(b) => b,
            Value::Num(_) => panic!("reference interpreter: expected Bool"),
        }
    }
}

type Outcome<T> = Result<T, DiagnosticCode>;

fn checked(v: f64) -> Outcome<Value> {
    if v.is_finite() {
        Ok(Value::Num(v))
    } else {
        Err(DiagnosticCode::NonfiniteResult)
    }
}

fn eval(expr: &Expr, env: &HashMap<String, Value>) -> Outcome<Value> {
    match &expr.kind {
        ExprKind::Number(v) => Ok(Value::Num(*v)),
        ExprKind::Bool(b) => Ok(Value::Bool(*b)),
        ExprKind::Var { name, .. } => {
            let v = *env.get(name).unwrap_or_else(|| panic!("unbound name {name}"));
            match v {
                Value::Num(x) if !x.is_finite() => Err(DiagnosticCode::NonfiniteResult),
                _ => Ok(v),
            }
        }
        ExprKind::Unary(UnaryOp::Neg, e) => Ok(Value::Num(-eval(e, env)?.num())),
        ExprKind::Unary(UnaryOp::Not, e) => Ok(Value::Bool(!eval(e, env)?.boolean())),
        ExprKind::Binary(BinaryOp::And, l, r) => {
            if !eval(l, env)?.boolean() {
                return Ok(Value::Bool(false));
            }
            Ok(Value::Bool(eval(r, env)?.boolean()))
        }
        ExprKind::Binary(BinaryOp::Or, l, r) => {
            if eval(l, env)?.boolean() {
                return Ok(Value::Bool(true));
            }
            Ok(Value::Bool(eval(r, env)?.boolean()))
        }
        ExprKind::Binary(op, l, r) => {
            let a = eval(l, env)?.num();
            let b = eval(r, env)?.num();
            match op {
                BinaryOp::Add => checked(a + b),
                BinaryOp::Sub => checked(a - b),
                BinaryOp::Mul => checked(a * b),
                BinaryOp::Div if b == 0.0 => Err(DiagnosticCode::DomainFault),
                BinaryOp::Div => checked(a / b),
                BinaryOp::Pow => checked(libm::pow(a, b)),
                BinaryOp::Lt => Ok(Value::Bool(a < b)),
                BinaryOp::Le => Ok(Value::Bool(a <= b)),
                BinaryOp::Gt => Ok(Value::Bool(a > b)),
                BinaryOp::Ge => Ok(Value::Bool(a >= b)),
                BinaryOp::Eq => Ok(Value::Bool(a == b)),
                BinaryOp::Ne => Ok(Value::Bool(a != b)),
                BinaryOp::And | BinaryOp::Or => unreachable!(),
            }
        }
        ExprKind::If(c, t, e) => {
            if eval(c, env)?.boolean() {
                eval(t, env)
            } else {
                eval(e, env)
            }
        }
        ExprKind::Call(func, args) => {
            let mut xs = Vec::with_capacity(args.len());
            for a in args {
                xs.push(eval(a, env)?.num());
            }
            match func {
                Builtin::Abs => checked(xs[0].abs()),
                Builtin::Min => checked(xs[0].min(xs[1])),
                Builtin::Max => checked(xs[0].max(xs[1])),
                Builtin::Exp => checked(libm::exp(xs[0])),
                Builtin::Log if xs[0] <= 0.0 => Err(DiagnosticCode::DomainFault),
                Builtin::Log => checked(libm::log(xs[0])),
                Builtin::Sqrt if xs[0] < 0.0 => Err(DiagnosticCode::DomainFault),
                Builtin::Sqrt => checked(libm::sqrt(xs[0])),
                Builtin::Tanh => checked(libm::tanh(xs[0])),
                Builtin::Sin => checked(libm::sin(xs[0])),
                Builtin::Cos => checked(libm::cos(xs[0])),
                Builtin::Sign => checked(if xs[0] > 0.0 {
                    1.0
                } else if xs[0] < 0.0 {
                    -1.0
                } else {
                    0.0
                }),
                Builtin::Clamp if xs[1] > xs[2] => Err(DiagnosticCode::DomainFault),
                Builtin::Clamp => checked(xs[0].max(xs[1]).min(xs[2])),
            }
        }
    }
}

/// Naive recursive interpreter. Returns `(reward, clamped)` or the fault
/// code. The program must be well typed.
pub fn reference_eval(
    program: &RewardProgram,
    spec: &ObservationSpec,
    obs: &[f64],
    success: bool,
    failure: bool,
    r_max: f64,
) -> Result<(f64, bool), DiagnosticCode> {
    let mut env: HashMap<String, Value> = spec
        .variables()
        .iter()
        .zip(obs)
        .map(|(var, x)| (var.name.clone(), Value::Num(*x)))
        .collect();
    env.insert("success".into(), Value::Bool(success));
    env.insert("failure".into(), Value::Bool(failure));
    for binding in &program.bindings {
        let value = eval(&binding.expr, &env)?;
        env.insert(binding.name.clone(), value);
    }
    let raw = eval(&program.result, &env)?.num();
    if raw > r_max {
        Ok((r_max, true))
    } else if raw < -r_max {
        Ok((-r_max, true))
    } else {
        Ok((raw, false))
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Ty {
    Num,
    Bool,
}

/// Seeded generator of random well-typed reward programs.
pub struct ProgramGen {
    rng: Xoshiro256PlusPlus,
}

impl ProgramGen {
    pub fn new(seed: u64) -> Self {
        Self { rng: Xoshiro256PlusPlus::seed_from_u64(seed) }
    }

    fn unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    fn pick(&mut self, n: usize) -> usize {
        ((self.unit() * n as f64) as usize).min(n - 1)
    }

    fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    /// A random observation inside the observation bounds; about one component in
    /// eight is exactly zero to exercise division and log faults.
    pub fn observation(&mut self, spec: &ObservationSpec) -> Vec<f64> {
        spec.variables()
            .iter()
            .map(|v| if self.chance(0.125) { 0.0 } else { v.low + (v.high - v.low) * self.unit() })
            .collect()
    }

    fn literal(&mut self) -> f64 {
        match self.pick(6) {
            0 => 0.0,
            1 => 1.0,
            2 => 0.5,
            3 => (self.unit() * 10.0 * 1000.0).round() / 1000.0,
            4 => self.pick(5) as f64,
            _ => self.unit() * 3.0,
        }
    }

    /// A program with 0 to 3 bindings whose expressions have depth at most
    /// `max_depth`.
    pub fn program(&mut self, spec: &ObservationSpec, max_depth: usize) -> RewardProgram {
        let mut scope: Vec<(String, Ty)> = spec.names().map(|n| (n.to_string(), Ty::Num)).collect();
        scope.push(("success".into(), Ty::Bool));
        scope.push(("failure".into(), Ty::Bool));
        let mut bindings = Vec::new();
        for i in 0..self.pick(4) {
            let ty = if self.chance(0.75) { Ty::Num } else { Ty::Bool };
            let depth = 1 + self.pick(max_depth);
            let expr = self.expr(ty, depth, &scope);
            let name = format!("b{i}");
            scope.push((name.clone(), ty));
            bindings.push(Binding { name, name_span: Default::default(), expr });
        }
        let depth = 1 + self.pick(max_depth);
        let result = self.expr(Ty::Num, depth, &scope);
        RewardProgram::new(bindings, result)
    }

    fn leaf(&mut self, ty: Ty, scope: &[(String, Ty)]) -> Expr {
        let names: Vec<&String> = scope.iter().filter(|(_, t)| *t == ty).map(|(n, _)| n).collect();
        if self.chance(0.6) {
            return Expr::var(names[self.pick(names.len())].clone());
        }
        match ty {
            Ty::Num => Expr::number(self.literal()),
            Ty::Bool => Expr::boolean(self.chance(0.5)),
        }
    }

    fn expr(&mut self, ty: Ty, depth: usize, scope: &[(String, Ty)]) -> Expr {
        if depth <= 1 {
            return self.leaf(ty, scope);
        }
        let d = depth - 1;
        match ty {
            Ty::Num => match self.pick(7) {
                0 => self.leaf(ty, scope),
                1 => Expr::unary(UnaryOp::Neg, self.expr(Ty::Num, d, scope)),
                2 | 3 => {
                    let op = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div, BinaryOp::Pow][self.pick(5)];
                    Expr::binary(op, self.expr(Ty::Num, d, scope), self.expr(Ty::Num, d, scope))
                }
                4 => Expr::if_else(self.expr(Ty::Bool, d, scope), self.expr(Ty::Num, d, scope), self.expr(Ty::Num, d, scope)),
                _ => {
                    let func = Builtin::ALL[self.pick(Builtin::ALL.len())];
                    let args = (0..func.arity()).map(|_| self.expr(Ty::Num, d, scope)).collect();
                    Expr::call(func, args)
                }
            },
            Ty::Bool => match self.pick(5) {
                0 => self.leaf(ty, scope),
                1 => Expr::unary(UnaryOp::Not, self.expr(Ty::Bool, d, scope)),
                2 => {
                    let op = if self.chance(0.5) { BinaryOp::And } else { BinaryOp::Or };
                    Expr::binary(op, self.expr(Ty::Bool, d, scope), self.expr(Ty::Bool, d, scope))
                }
                3 => Expr::if_else(self.expr(Ty::Bool, d, scope), self.expr(Ty::Bool, d, scope), self.expr(Ty::Bool, d, scope)),
                _ => {
                    let op = [BinaryOp::Lt, BinaryOp::Le, BinaryOp::Gt, BinaryOp::Ge, BinaryOp::Eq, BinaryOp::Ne][self.pick(6)];
                    Expr::binary(op, self.expr(Ty::Num, d, scope), self.expr(Ty::Num, d, scope))
                }
            },
        }
    }
}

/// Relative closeness used by the oracle comparisons.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// One Euler step of the printed cart-pole equations, written out
/// independently of the core simulator. `state = [x, x_dot, theta, theta_dot]`.
pub fn cartpole_euler_step(state: [f64; 4], action: u32) -> [f64; 4] {
    let (g, m_cart, m_pole, half_len, force_mag, tau) = (9.8, 1.0, 0.1, 0.5, 10.0, 0.02);
    let [x, x_dot, theta, theta_dot] = state;
    let force = if action == 1 { force_mag } else { -force_mag };
    let m_total = m_cart + m_pole;
    let (sin, cos) = (libm::sin(theta), libm::cos(theta));
    let temp = (force + m_pole * half_len * theta_dot * theta_dot * sin) / m_total;
    let theta_acc = (g * sin - cos * temp) / (half_len * (4.0 / 3.0 - m_pole * cos * cos / m_total));
    let x_acc = temp - m_pole * half_len * theta_acc * cos / m_total;
    [x + tau * x_dot, x_dot + tau * x_acc, theta + tau * theta_dot, theta_dot + tau * theta_acc]
}

/// One mountain-car step by direct arithmetic. `state = [position, velocity]`.
pub fn mountaincar_step(state: [f64; 2], action: u32) -> [f64; 2] {
    let [p, v] = state;
    let v = (v + (action as f64 - 1.0) * 0.001 - 0.0025 * libm::cos(3.0 * p)).clamp(-0.07, 0.07);
    let p = (p + v).clamp(-1.2, 0.6);
    let v = if p == -1.2 && v < 0.0 { 0.0 } else { v };
    [p, v]
}
