use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::ast::{Builtin, Expr, ExprKind, RewardProgram, Type, UnaryOp, VarRef};
use super::diagnostic::{Diagnostic, DiagnosticCode, SourceSpan};
use super::eval::{compile, Instr};
use crate::ObservationSpec;

/// A program that passed type checking against a particular observation
/// spec, together with its compiled form.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedProgram {
    program: RewardProgram,
    obs_names: Vec<String>,
    warnings: Vec<Diagnostic>,
    pub(super) code: Vec<Instr>,
    pub(super) code_spans: Vec<SourceSpan>,
    pub(super) n_locals: usize,
}

impl TypedProgram {
    /// The type-annotated, name-resolved program.
    pub fn program(&self) -> &RewardProgram {
        &self.program
    }

    pub fn source(&self) -> &str {
        &self.program.source
    }

    pub fn warnings(&self) -> &[Diagnostic] {
        &self.warnings
    }

    /// Observation names in the order `evaluate` expects them.
    pub fn observation_names(&self) -> &[String] {
        &self.obs_names
    }
}

/// Type checks `program` against `spec`, resolving every identifier.
///
/// All errors are collected; an identifier or operand that already failed
/// does not produce follow-on errors in enclosing expressions.
pub fn typecheck(program: &RewardProgram, spec: &ObservationSpec) -> Result<TypedProgram, Vec<Diagnostic>> {
    let mut checker = Checker { spec, scope: Vec::new(), diags: Vec::new() };
    let mut typed = program.clone();

    for binding in typed.bindings.iter_mut() {
        let ty = checker.check(&mut binding.expr);
        let name = binding.name.as_str();
        let clash = if spec.index_of(name).is_some() {
            Some("shadows an observation variable")
        } else if name == "success" || name == "failure" {
            Some("shadows a reserved name")
        } else if checker.scope.iter().any(|(n, _)| n == name) {
            Some("is already bound")
        } else {
            None
        };
        if let Some(why) = clash {
            checker.diags.push(
                Diagnostic::error(
                    DiagnosticCode::DuplicateBinding,
                    format!("binding `{name}` {why}"),
                    Some(binding.name_span),
                )
                .with_hint("rename the binding"),
            );
        }
        checker.scope.push((binding.name.clone(), ty));
    }

    if let Some(Type::Bool) = checker.check(&mut typed.result) {
        checker.diags.push(
            Diagnostic::error(
                DiagnosticCode::TypeMismatch,
                "the reward must be a number, found Bool",
                Some(typed.result.span),
            )
            .with_hint("use `if <condition> then <number> else <number>`"),
        );
    }

    let (errors, warnings): (Vec<_>, Vec<_>) = checker.diags.into_iter().partition(Diagnostic::is_error);
    if !errors.is_empty() {
        return Err(errors);
    }
    let compiled = compile(&typed);
    Ok(TypedProgram {
        program: typed,
        obs_names: spec.names().map(String::from).collect(),
        warnings,
        code: compiled.code,
        code_spans: compiled.spans,
        n_locals: compiled.n_locals,
    })
}

struct Checker<'a> {
    spec: &'a ObservationSpec,
    /// Bindings visible so far; `None` type means the binding itself failed.
    scope: Vec<(String, Option<Type>)>,
    diags: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn check(&mut self, expr: &mut Expr) -> Option<Type> {
        let ty = match &mut expr.kind {
            ExprKind::Number(_) => Some(Type::Num),
            ExprKind::Bool(_) => Some(Type::Bool),
            ExprKind::Var { name, resolved } => {
                let found = self.resolve(name);
                match found {
                    Some((var, ty)) => {
                        *resolved = Some(var);
                        ty
                    }
                    None => {
                        let diag = self.unknown_identifier(name, expr.span);
                        self.diags.push(diag);
                        None
                    }
                }
            }
            ExprKind::Unary(UnaryOp::Neg, operand) => {
                self.expect(operand, Type::Num, "unary `-`");
                Some(Type::Num)
            }
            ExprKind::Unary(UnaryOp::Not, operand) => {
                self.expect(operand, Type::Bool, "`not`");
                Some(Type::Bool)
            }
            ExprKind::Binary(op, lhs, rhs) => {
                let op = *op;
                let (operand, result) = if op.is_logical() {
                    (Type::Bool, Type::Bool)
                } else if op.is_comparison() {
                    (Type::Num, Type::Bool)
                } else {
                    (Type::Num, Type::Num)
                };
                let what = format!("`{}`", op.symbol());
                self.expect(lhs, operand, &what);
                self.expect(rhs, operand, &what);
                Some(result)
            }
            ExprKind::If(cond, then, otherwise) => {
                self.expect(cond, Type::Bool, "an `if` condition");
                let then_ty = self.check(then);
                let else_ty = self.check(otherwise);
                match (then_ty, else_ty) {
                    (Some(a), Some(b)) if a != b => {
                        self.diags.push(Diagnostic::error(
                            DiagnosticCode::TypeMismatch,
                            format!(
                                "`if` branches have different types: then-branch is {}, else-branch is {}",
                                a.name(),
                                b.name()
                            ),
                            Some(otherwise.span),
                        ));
                        None
                    }
                    (Some(a), _) | (None, Some(a)) => Some(a),
                    (None, None) => None,
                }
            }
            ExprKind::Call(func, args) => {
                let func = *func;
                let what = format!("`{}`", func.name());
                for arg in args.iter_mut() {
                    self.expect(arg, Type::Num, &what);
                }
                if func == Builtin::Clamp {
                    if let (Some(lo), Some(hi)) = (const_num(&args[1]), const_num(&args[2])) {
                        if lo > hi {
                            self.diags.push(
                                Diagnostic::warning(
                                    DiagnosticCode::ClampBounds,
                                    format!("clamp lower bound {lo:?} exceeds upper bound {hi:?}; this faults at runtime"),
                                    Some(expr.span),
                                )
                                .with_hint("swap the bounds"),
                            );
                        }
                    }
                }
                Some(Type::Num)
            }
        };
        expr.ty = ty;
        ty
    }

    fn expect(&mut self, expr: &mut Expr, want: Type, context: &str) {
        match self.check(expr) {
            Some(found) if found != want => {
                let mut diag = Diagnostic::error(
                    DiagnosticCode::TypeMismatch,
                    format!("{context} expects {}, found {}", want.name(), found.name()),
                    Some(expr.span),
                );
                if want == Type::Num {
                    diag = diag.with_hint("convert with `if <condition> then 1.0 else 0.0`");
                }
                self.diags.push(diag);
            }
            _ => {}
        }
    }

    fn resolve(&self, name: &str) -> Option<(VarRef, Option<Type>)> {
        if let Some(idx) = self.scope.iter().position(|(n, _)| n == name) {
            return Some((VarRef::Binding(idx), self.scope[idx].1));
        }
        match name {
            "success" => return Some((VarRef::Success, Some(Type::Bool))),
            "failure" => return Some((VarRef::Failure, Some(Type::Bool))),
            _ => {}
        }
        self.spec.index_of(name).map(|idx| (VarRef::Observation(idx), Some(Type::Num)))
    }

    fn unknown_identifier(&self, name: &str, span: SourceSpan) -> Diagnostic {
        let diag = Diagnostic::error(
            DiagnosticCode::UnknownIdentifier,
            format!("unknown identifier `{name}`"),
            Some(span),
        );
        let nearest = self
            .spec
            .names()
            .chain(["success", "failure"])
            .map(|candidate| (edit_distance(name, candidate), candidate))
            .filter(|(d, _)| *d <= 2)
            .min_by_key(|(d, _)| *d);
        match nearest {
            Some((_, candidate)) => diag.with_hint(format!("did you mean `{candidate}`?")),
            None => {
                let names: Vec<&str> = self.spec.names().collect();
                diag.with_hint(format!("observation variables are: {}", names.join(", ")))
            }
        }
    }
}

/// Value of a literal or negated literal.
fn const_num(expr: &Expr) -> Option<f64> {
    match &expr.kind {
        ExprKind::Number(v) => Some(*v),
        ExprKind::Unary(UnaryOp::Neg, inner) => const_num(inner).map(|v| -v),
        _ => None,
    }
}

/// Levenshtein distance over chars.
fn edit_distance(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = (diag + usize::from(ca != *cb)).min(above + 1).min(row[j] + 1);
            diag = above;
        }
    }
    row[b.len()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use crate::envs::EnvId;

    fn check(src: &str) -> Result<TypedProgram, Vec<Diagnostic>> {
        typecheck(&parse(src).unwrap(), &EnvId::CartPole.observation_spec())
    }

    fn codes(src: &str) -> Vec<DiagnosticCode> {
        check(src).unwrap_err().into_iter().map(|d| d.code).collect()
    }

    #[test]
    fn branches_agree() {
        let typed = check("return if success then 1.0 else 0.0;").unwrap();
        assert_eq!(typed.program().result.ty, Some(Type::Num));
    }

    #[test]
    fn misspelling_hints_nearest_name() {
        let errs = check("return pole_angel;").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].code, DiagnosticCode::UnknownIdentifier);
        assert_eq!(errs[0].hint.as_deref(), Some("did you mean `pole_angle`?"));

        let far = check("return velocity_of_pole;").unwrap_err();
        assert!(far[0].hint.as_deref().unwrap().starts_with("observation variables are"));
    }

    #[test]
    fn bool_in_arithmetic() {
        assert_eq!(codes("return success + 1.0;"), [DiagnosticCode::TypeMismatch]);
    }

    #[test]
    fn reports_every_error() {
        assert_eq!(
            codes("let a = foo; return bar + (success * 2.0);"),
            [DiagnosticCode::UnknownIdentifier, DiagnosticCode::UnknownIdentifier, DiagnosticCode::TypeMismatch]
        );
    }

    #[test]
    fn failed_operands_do_not_cascade() {
        assert_eq!(codes("return -(unknown_thing) * 2.0 + 1.0;"), [DiagnosticCode::UnknownIdentifier]);
        assert_eq!(codes("let a = nope; return a * 2.0;"), [DiagnosticCode::UnknownIdentifier]);
    }

    #[test]
    fn typing_rules() {
        assert_eq!(codes("return success;"), [DiagnosticCode::TypeMismatch]);
        assert_eq!(codes("return if 1.0 then 1.0 else 0.0;"), [DiagnosticCode::TypeMismatch]);
        assert_eq!(codes("return if success then 1.0 else failure;"), [DiagnosticCode::TypeMismatch]);
        assert_eq!(codes("return if success == failure then 1.0 else 0.0;"), [DiagnosticCode::TypeMismatch, DiagnosticCode::TypeMismatch]);
        assert_eq!(codes("return if not 1.0 then 1.0 else 0.0;"), [DiagnosticCode::TypeMismatch]);
        assert_eq!(codes("return abs(success);"), [DiagnosticCode::TypeMismatch]);
        assert!(check("let s = success and not failure; return if s then 1.0 else -1.0;").is_ok());
    }

    #[test]
    fn duplicate_and_shadowing_bindings() {
        assert_eq!(codes("let a = 1.0; let a = 2.0; return a;"), [DiagnosticCode::DuplicateBinding]);
        assert_eq!(codes("let pole_angle = 1.0; return pole_angle;"), [DiagnosticCode::DuplicateBinding]);
        assert_eq!(codes("let success = 1.0; return 0.0;"), [DiagnosticCode::DuplicateBinding]);
    }

    #[test]
    fn bindings_are_visible_only_after_definition() {
        assert_eq!(codes("let a = b; let b = 1.0; return a;"), [DiagnosticCode::UnknownIdentifier]);
    }

    #[test]
    fn inverted_constant_clamp_warns() {
        let typed = check("return clamp(pole_angle, 1.0, -1.0);").unwrap();
        assert_eq!(typed.warnings().len(), 1);
        assert_eq!(typed.warnings()[0].code, DiagnosticCode::ClampBounds);
        assert!(check("return clamp(pole_angle, -1.0, 1.0);").unwrap().warnings().is_empty());
    }

    #[test]
    fn every_node_gets_a_type() {
        fn all_typed(e: &Expr) -> bool {
            e.ty.is_some()
                && match &e.kind {
                    ExprKind::Unary(_, x) => all_typed(x),
                    ExprKind::Binary(_, l, r) => all_typed(l) && all_typed(r),
                    ExprKind::If(c, t, f) => all_typed(c) && all_typed(t) && all_typed(f),
                    ExprKind::Call(_, args) => args.iter().all(all_typed),
                    _ => true,
                }
        }
        let typed = check("let k = 2.0; return if cart_position > 0.0 and not failure then -k * abs(pole_angle) ^ 2 else max(k, 1.0);").unwrap();
        assert!(all_typed(&typed.program().result));
        assert!(all_typed(&typed.program().bindings[0].expr));
    }

    #[test]
    fn edit_distance_basics() {
        assert_eq!(edit_distance("pole_angel", "pole_angle"), 2);
        assert_eq!(edit_distance("", "abc"), 3);
        assert_eq!(edit_distance("kitten", "sitting"), 3);
    }
}
