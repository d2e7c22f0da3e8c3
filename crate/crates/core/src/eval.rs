//! The expected-result generator: evaluates specification expressions under
//! VDM semantics with invariant, precondition, and postcondition checking.
//!
//! Arithmetic is unbounded and exact — the oracle must not inherit an
//! implementation's overflow behavior. A failure while evaluating an
//! invariant or an `is_T` check makes the judgement false instead of an
//! error, so malformed candidate values classify as non-members. Everything
//! else reports [`EvalError`] with a source position.
//!
//! `div` truncates toward zero and `mod` takes the sign of the divisor.
//! Entry-point evaluation runs on a dedicated wide-stack thread so the
//! configured recursion limit (default 10,000 frames) is reached before the
//! native stack runs out.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::ast::*;
use crate::resolve::ResolvedClass;
use crate::value::Value;

/// Default upper bound for the `M` input symbol: 2^31 - 1, the largest
/// 32-bit signed integer.
pub fn default_max_nat() -> BigInt {
    BigInt::from(2_147_483_647u32)
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    /// Specification-level call depth after which evaluation stops with an
    /// error; runaway recursion in a spec must terminate, not crash.
    pub max_depth: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { max_depth: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} (at {location})")]
pub struct EvalError {
    pub message: String,
    pub location: Span,
}

impl EvalError {
    fn new(message: impl Into<String>, location: Span) -> Self {
        EvalError { message: message.into(), location }
    }
}

type EResult<T> = Result<T, EvalError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Invariant,
    Precondition,
    Postcondition,
    TypeMembership,
}

impl std::fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ViolationKind::Invariant => write!(f, "invariant"),
            ViolationKind::Precondition => write!(f, "precondition"),
            ViolationKind::Postcondition => write!(f, "postcondition"),
            ViolationKind::TypeMembership => write!(f, "type-membership"),
        }
    }
}

/// Outcome of asking the oracle for an expected result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleOutcome {
    Result(Value),
    ContractViolation { kind: ViolationKind, location: Span, message: String },
    EvalError(EvalError),
}

impl OracleOutcome {
    pub fn is_result(&self) -> bool {
        matches!(self, OracleOutcome::Result(_))
    }
}

impl std::fmt::Display for OracleOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OracleOutcome::Result(v) => write!(f, "{}", v),
            OracleOutcome::ContractViolation { kind, location, message } => {
                write!(f, "contract violation ({}) at {}: {}", kind, location, message)
            }
            OracleOutcome::EvalError(e) => write!(f, "evaluation error: {}", e),
        }
    }
}

/// One raw test input before decoding to a [`Value`]. The `M` symbols
/// resolve against the configured maximum-natural bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputToken {
    Int(BigInt),
    Char(char),
    Symbol(MSymbol),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MSymbol {
    M,
    MPlus1,
    MMinus1,
}

impl InputToken {
    pub fn decode(&self, m: &BigInt) -> Value {
        match self {
            InputToken::Int(i) => Value::Int(i.clone()),
            InputToken::Char(c) => Value::Char(*c),
            InputToken::Symbol(MSymbol::M) => Value::Int(m.clone()),
            InputToken::Symbol(MSymbol::MPlus1) => Value::Int(m + 1),
            InputToken::Symbol(MSymbol::MMinus1) => Value::Int(m - 1),
        }
    }

    /// The rendering used in suite files and reports.
    pub fn render(&self) -> String {
        match self {
            InputToken::Int(i) => i.to_string(),
            InputToken::Char(c) => format!("'{}'", c),
            InputToken::Symbol(MSymbol::M) => "M".to_string(),
            InputToken::Symbol(MSymbol::MPlus1) => "M+1".to_string(),
            InputToken::Symbol(MSymbol::MMinus1) => "M-1".to_string(),
        }
    }

    /// Parse the textual form used on the command line: an integer, one of
    /// the `M` symbols, or a single character.
    pub fn parse(text: &str) -> Option<InputToken> {
        let t = text.trim();
        match t {
            "M" => return Some(InputToken::Symbol(MSymbol::M)),
            "M+1" => return Some(InputToken::Symbol(MSymbol::MPlus1)),
            "M-1" => return Some(InputToken::Symbol(MSymbol::MMinus1)),
            _ => {}
        }
        if let Ok(i) = t.parse::<BigInt>() {
            return Some(InputToken::Int(i));
        }
        let mut chars = t.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Some(InputToken::Char(c)),
            _ => {
                // Quoted form 'A'.
                let inner = t.strip_prefix('\'')?.strip_suffix('\'')?;
                let mut cs = inner.chars();
                match (cs.next(), cs.next()) {
                    (Some(c), None) => Some(InputToken::Char(c)),
                    _ => None,
                }
            }
        }
    }
}

/// Local bindings, innermost last. Lookup is exact-match first, then
/// case-insensitive, mirroring the resolver.
#[derive(Debug, Default)]
pub struct Scope {
    bindings: Vec<(String, Value)>,
}

impl Scope {
    pub fn new() -> Self {
        Scope::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: Value) {
        self.bindings.push((name.into(), value));
    }

    pub fn pop(&mut self, n: usize) {
        for _ in 0..n {
            self.bindings.pop();
        }
    }

    fn lookup(&self, name: &str) -> Option<&Value> {
        if let Some((_, v)) = self.bindings.iter().rev().find(|(n, _)| n == name) {
            return Some(v);
        }
        self.bindings
            .iter()
            .rev()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, v)| v)
    }
}

pub struct Evaluator<'a> {
    ctx: &'a ResolvedClass,
    config: EvalConfig,
    depth: usize,
}

impl<'a> Evaluator<'a> {
    pub fn new(ctx: &'a ResolvedClass) -> Self {
        Evaluator { ctx, config: EvalConfig::default(), depth: 0 }
    }

    pub fn with_config(ctx: &'a ResolvedClass, config: EvalConfig) -> Self {
        Evaluator { ctx, config, depth: 0 }
    }

    pub fn eval(&mut self, scope: &mut Scope, e: &Expr) -> EResult<Value> {
        match &e.kind {
            ExprKind::Literal(lit) => Ok(Value::from(lit.clone())),
            ExprKind::Var(name) => self.eval_var(scope, name, e.span),
            ExprKind::Unary(op, inner) => {
                let v = self.eval(scope, inner)?;
                self.apply_unary(*op, v, e.span)
            }
            ExprKind::Binary(op, lhs, rhs) => self.eval_binary(scope, *op, lhs, rhs, e.span),
            ExprKind::IfThenElse { cond, then_branch, else_branch } => {
                match self.eval(scope, cond)? {
                    Value::Bool(true) => self.eval(scope, then_branch),
                    Value::Bool(false) => self.eval(scope, else_branch),
                    v => Err(EvalError::new(
                        format!("if condition must be a bool, got {}", v.type_name()),
                        cond.span,
                    )),
                }
            }
            ExprKind::Cases { scrutinee, branches, others } => {
                let subject = self.eval(scope, scrutinee)?;
                for (pattern, result) in branches {
                    let candidate = self.eval(scope, pattern)?;
                    if candidate == subject {
                        return self.eval(scope, result);
                    }
                }
                match others {
                    Some(other) => self.eval(scope, other),
                    None => Err(EvalError::new(
                        format!("non-exhaustive cases: no branch matches {}", subject),
                        e.span,
                    )),
                }
            }
            ExprKind::LetIn { bindings, body } => {
                let mut pushed = 0;
                let result = (|| {
                    for (name, value_expr) in bindings {
                        let v = self.eval(scope, value_expr)?;
                        scope.push(name.clone(), v);
                        pushed += 1;
                    }
                    self.eval(scope, body)
                })();
                scope.pop(pushed);
                result
            }
            ExprKind::Quantifier { kind, binder, domain, predicate } => {
                let collection = self.eval(scope, domain)?;
                let items: Vec<Value> = match collection {
                    Value::Set(s) => s.into_iter().collect(),
                    Value::Seq(s) => s,
                    v => {
                        return Err(EvalError::new(
                            format!(
                                "quantifier domain must be a set or sequence, got {}",
                                v.type_name()
                            ),
                            domain.span,
                        ))
                    }
                };
                let forall = *kind == QuantifierKind::Forall;
                for item in items {
                    scope.push(binder.clone(), item);
                    let verdict = self.eval(scope, predicate);
                    scope.pop(1);
                    match verdict? {
                        Value::Bool(b) => {
                            if forall && !b {
                                return Ok(Value::Bool(false));
                            }
                            if !forall && b {
                                return Ok(Value::Bool(true));
                            }
                        }
                        v => {
                            return Err(EvalError::new(
                                format!(
                                    "quantifier predicate must be a bool, got {}",
                                    v.type_name()
                                ),
                                predicate.span,
                            ))
                        }
                    }
                }
                Ok(Value::Bool(forall))
            }
            ExprKind::SetEnum(items) => {
                let mut set = BTreeSet::new();
                for item in items {
                    set.insert(self.eval(scope, item)?);
                }
                Ok(Value::Set(set))
            }
            ExprKind::SeqEnum(items) => {
                let mut seq = Vec::with_capacity(items.len());
                for item in items {
                    seq.push(self.eval(scope, item)?);
                }
                Ok(Value::Seq(seq))
            }
            ExprKind::MapEnum(pairs) => {
                let mut map = BTreeMap::new();
                for (k, v) in pairs {
                    let key = self.eval(scope, k)?;
                    let value = self.eval(scope, v)?;
                    if let Some(existing) = map.get(&key) {
                        if *existing != value {
                            return Err(EvalError::new(
                                format!("duplicate map key {} with conflicting values", key),
                                k.span,
                            ));
                        }
                    }
                    map.insert(key, value);
                }
                Ok(Value::Map(map))
            }
            ExprKind::Apply { callee, args } => {
                let mut arg_values = Vec::with_capacity(args.len());
                for a in args {
                    arg_values.push(self.eval(scope, a)?);
                }
                self.apply(scope, callee, arg_values, e.span)
            }
            ExprKind::RecordCtor { tag, args } => {
                let mut fields = Vec::with_capacity(args.len());
                for a in args {
                    fields.push(self.eval(scope, a)?);
                }
                if tag.eq_ignore_ascii_case("token") {
                    if fields.len() != 1 {
                        return Err(EvalError::new("mk_token takes exactly one argument", e.span));
                    }
                    return Ok(Value::Token(fields[0].to_string()));
                }
                let def = self.composite_def(tag).ok_or_else(|| {
                    EvalError::new(format!("no composite type '{}' in scope", tag), e.span)
                })?;
                let (canonical, field_count) = def;
                if fields.len() != field_count {
                    return Err(EvalError::new(
                        format!(
                            "mk_{} expects {} field(s), got {}",
                            canonical,
                            field_count,
                            fields.len()
                        ),
                        e.span,
                    ));
                }
                Ok(Value::Record { tag: canonical, fields })
            }
            ExprKind::FieldSelect { base, field } => {
                let v = self.eval(scope, base)?;
                match v {
                    Value::Record { tag, fields } => {
                        let index = self.field_index(&tag, field).ok_or_else(|| {
                            EvalError::new(
                                format!("record '{}' has no field '{}'", tag, field),
                                e.span,
                            )
                        })?;
                        Ok(fields[index].clone())
                    }
                    v => Err(EvalError::new(
                        format!("field selection on a {}, not a record", v.type_name()),
                        e.span,
                    )),
                }
            }
            ExprKind::TypeJudgement { expr, target } => {
                let v = self.eval(scope, expr)?;
                Ok(Value::Bool(self.membership(&v, target, 10_000)))
            }
        }
    }

    fn eval_var(&mut self, scope: &Scope, name: &str, span: Span) -> EResult<Value> {
        if let Some(v) = scope.lookup(name) {
            return Ok(v.clone());
        }
        if let Some(v) = self.ctx.lookup_const(name) {
            return Ok(v.clone());
        }
        let overloads = self.ctx.class.find_functions(name);
        if let Some(f) = overloads.first() {
            return Ok(Value::Closure { name: f.name.clone(), arity: f.params.len() });
        }
        if self.ctx.find_operation(name).is_some() {
            return Err(EvalError::new(
                format!("operation '{}' is not evaluable; only functions are", name),
                span,
            ));
        }
        if self.ctx.class.find_type_def(name).is_some() {
            return Err(EvalError::new(format!("type '{}' is not a value", name), span));
        }
        Err(EvalError::new(format!("unbound identifier '{}'", name), span))
    }

    fn apply_unary(&mut self, op: UnaryOp, v: Value, span: Span) -> EResult<Value> {
        let err = |msg: String| Err(EvalError::new(msg, span));
        match op {
            UnaryOp::Not => match v {
                Value::Bool(b) => Ok(Value::Bool(!b)),
                v => err(format!("'not' applied to {}", v.type_name())),
            },
            UnaryOp::Neg => match v {
                Value::Int(i) => Ok(Value::Int(-i)),
                Value::Real(r) => Ok(Value::from_rational(-r)),
                v => err(format!("negation applied to {}", v.type_name())),
            },
            UnaryOp::Len => match v {
                Value::Seq(s) => Ok(Value::int(s.len() as u64)),
                v => err(format!("'len' applied to {}", v.type_name())),
            },
            UnaryOp::Hd => match v {
                Value::Seq(s) => match s.first() {
                    Some(first) => Ok(first.clone()),
                    None => err("'hd' of empty sequence".to_string()),
                },
                v => err(format!("'hd' applied to {}", v.type_name())),
            },
            UnaryOp::Tl => match v {
                Value::Seq(s) => {
                    if s.is_empty() {
                        err("'tl' of empty sequence".to_string())
                    } else {
                        Ok(Value::Seq(s[1..].to_vec()))
                    }
                }
                v => err(format!("'tl' applied to {}", v.type_name())),
            },
            UnaryOp::Elems => match v {
                Value::Seq(s) => Ok(Value::Set(s.into_iter().collect())),
                v => err(format!("'elems' applied to {}", v.type_name())),
            },
            UnaryOp::Inds => match v {
                Value::Seq(s) => {
                    Ok(Value::Set((1..=s.len() as u64).map(Value::int).collect()))
                }
                v => err(format!("'inds' applied to {}", v.type_name())),
            },
            UnaryOp::Card => match v {
                Value::Set(s) => Ok(Value::int(s.len() as u64)),
                v => err(format!("'card' applied to {}", v.type_name())),
            },
            UnaryOp::Dom => match v {
                Value::Map(m) => Ok(Value::Set(m.keys().cloned().collect())),
                v => err(format!("'dom' applied to {}", v.type_name())),
            },
            UnaryOp::Rng => match v {
                Value::Map(m) => Ok(Value::Set(m.values().cloned().collect())),
                v => err(format!("'rng' applied to {}", v.type_name())),
            },
            UnaryOp::Floor => match v {
                Value::Int(i) => Ok(Value::Int(i)),
                Value::Real(r) => Ok(Value::Int(r.floor().to_integer())),
                v => err(format!("'floor' applied to {}", v.type_name())),
            },
            UnaryOp::Abs => match v {
                Value::Int(i) => Ok(Value::Int(i.abs())),
                Value::Real(r) => Ok(Value::from_rational(r.abs())),
                v => err(format!("'abs' applied to {}", v.type_name())),
            },
        }
    }

    fn eval_binary(
        &mut self,
        scope: &mut Scope,
        op: BinaryOp,
        lhs: &Expr,
        rhs: &Expr,
        span: Span,
    ) -> EResult<Value> {
        // Short-circuit logical connectives evaluate the right side only
        // when needed.
        match op {
            BinaryOp::And | BinaryOp::Or | BinaryOp::Implies => {
                let l = match self.eval(scope, lhs)? {
                    Value::Bool(b) => b,
                    v => {
                        return Err(EvalError::new(
                            format!("'{}' applied to {}", op.name(), v.type_name()),
                            lhs.span,
                        ))
                    }
                };
                match (op, l) {
                    (BinaryOp::And, false) => return Ok(Value::Bool(false)),
                    (BinaryOp::Or, true) => return Ok(Value::Bool(true)),
                    (BinaryOp::Implies, false) => return Ok(Value::Bool(true)),
                    _ => {}
                }
                return match self.eval(scope, rhs)? {
                    Value::Bool(b) => Ok(Value::Bool(b)),
                    v => Err(EvalError::new(
                        format!("'{}' applied to {}", op.name(), v.type_name()),
                        rhs.span,
                    )),
                };
            }
            _ => {}
        }
        let l = self.eval(scope, lhs)?;
        let r = self.eval(scope, rhs)?;
        let err = |msg: String| Err(EvalError::new(msg, span));
        let type_err = |l: &Value, r: &Value| {
            Err(EvalError::new(
                format!("'{}' applied to {} and {}", op.name(), l.type_name(), r.type_name()),
                span,
            ))
        };
        match op {
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Divide => {
                let (Some(a), Some(b)) = (l.as_rational(), r.as_rational()) else {
                    return type_err(&l, &r);
                };
                let result = match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Divide => {
                        if b.is_zero() {
                            return err("division by zero".to_string());
                        }
                        a / b
                    }
                    _ => unreachable!(),
                };
                Ok(Value::from_rational(result))
            }
            BinaryOp::IntDiv | BinaryOp::Mod => match (&l, &r) {
                (Value::Int(a), Value::Int(b)) => {
                    if b.is_zero() {
                        return err(format!("'{}' by zero", op.name()));
                    }
                    if op == BinaryOp::IntDiv {
                        Ok(Value::Int(a / b)) // truncates toward zero
                    } else {
                        Ok(Value::Int(a.mod_floor(b)))
                    }
                }
                _ => type_err(&l, &r),
            },
            BinaryOp::Eq => Ok(Value::Bool(l == r)),
            BinaryOp::Neq => Ok(Value::Bool(l != r)),
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => {
                let (Some(a), Some(b)) = (l.as_rational(), r.as_rational()) else {
                    return type_err(&l, &r);
                };
                let result = match op {
                    BinaryOp::Lt => a < b,
                    BinaryOp::Le => a <= b,
                    BinaryOp::Gt => a > b,
                    BinaryOp::Ge => a >= b,
                    _ => unreachable!(),
                };
                Ok(Value::Bool(result))
            }
            BinaryOp::InSet | BinaryOp::NotInSet => match &r {
                Value::Set(s) => {
                    let contains = s.contains(&l);
                    Ok(Value::Bool(if op == BinaryOp::InSet { contains } else { !contains }))
                }
                _ => type_err(&l, &r),
            },
            BinaryOp::Union | BinaryOp::Inter | BinaryOp::SetDiff => match (l, r) {
                (Value::Set(a), Value::Set(b)) => {
                    let result = match op {
                        BinaryOp::Union => a.union(&b).cloned().collect(),
                        BinaryOp::Inter => a.intersection(&b).cloned().collect(),
                        BinaryOp::SetDiff => a.difference(&b).cloned().collect(),
                        _ => unreachable!(),
                    };
                    Ok(Value::Set(result))
                }
                (l, r) => type_err(&l, &r),
            },
            BinaryOp::Subset | BinaryOp::PSubset => match (l, r) {
                (Value::Set(a), Value::Set(b)) => {
                    let sub = a.is_subset(&b);
                    Ok(Value::Bool(if op == BinaryOp::Subset { sub } else { sub && a != b }))
                }
                (l, r) => type_err(&l, &r),
            },
            BinaryOp::Concat => match (l, r) {
                (Value::Seq(mut a), Value::Seq(b)) => {
                    a.extend(b);
                    Ok(Value::Seq(a))
                }
                (l, r) => type_err(&l, &r),
            },
            BinaryOp::MapOverride => match (l, r) {
                (Value::Map(mut a), Value::Map(b)) => {
                    a.extend(b);
                    Ok(Value::Map(a))
                }
                (l, r) => type_err(&l, &r),
            },
            BinaryOp::And | BinaryOp::Or | BinaryOp::Implies => unreachable!(),
        }
    }

    /// Apply `callee` to already-evaluated arguments: a local map, sequence,
    /// or function value if one is bound, otherwise a class function.
    fn apply(
        &mut self,
        scope: &mut Scope,
        callee: &str,
        args: Vec<Value>,
        span: Span,
    ) -> EResult<Value> {
        if let Some(bound) = scope.lookup(callee).or_else(|| self.ctx.lookup_const(callee)) {
            let bound = bound.clone();
            match bound {
                Value::Map(m) => {
                    if args.len() != 1 {
                        return Err(EvalError::new(
                            "map application takes exactly one argument".to_string(),
                            span,
                        ));
                    }
                    return match m.get(&args[0]) {
                        Some(v) => Ok(v.clone()),
                        None => Err(EvalError::new(
                            format!("map applied outside its domain: {}", args[0]),
                            span,
                        )),
                    };
                }
                Value::Seq(s) => {
                    if args.len() != 1 {
                        return Err(EvalError::new(
                            "sequence application takes exactly one argument".to_string(),
                            span,
                        ));
                    }
                    let index = match &args[0] {
                        Value::Int(i) => i.to_usize(),
                        _ => None,
                    };
                    return match index {
                        Some(i) if i >= 1 && i <= s.len() => Ok(s[i - 1].clone()),
                        _ => Err(EvalError::new(
                            format!("sequence index {} out of range 1..{}", args[0], s.len()),
                            span,
                        )),
                    };
                }
                Value::Closure { name, .. } => {
                    return self.call_internal(&name, args, span);
                }
                v => {
                    return Err(EvalError::new(
                        format!("'{}' is a {} and cannot be applied", callee, v.type_name()),
                        span,
                    ))
                }
            }
        }
        self.call_internal(callee, args, span)
    }

    /// Call a class function with full contract checking. Violations inside
    /// a nested call surface as evaluation errors; only the top-level entry
    /// reports structured contract violations.
    fn call_internal(&mut self, name: &str, args: Vec<Value>, span: Span) -> EResult<Value> {
        if self.depth >= self.config.max_depth {
            return Err(EvalError::new(
                format!("recursion depth limit ({}) exceeded", self.config.max_depth),
                span,
            ));
        }
        self.depth += 1;
        let result = self.call_checked(name, args, span, false).map(|outcome| match outcome {
            CallOutcome::Ok(v) => Ok(v),
            CallOutcome::Violation { kind, message, location } => Err(EvalError::new(
                format!("{} of '{}' violated: {}", kind, name, message),
                location,
            )),
        });
        self.depth -= 1;
        result?
    }

    fn resolve_overload(&self, name: &str, args: &[Value], span: Span) -> EResult<&'a FunctionDef> {
        let class: &'a ClassDef = &self.ctx.class;
        let overloads = class.find_functions(name);
        if overloads.is_empty() {
            if self.ctx.find_operation(name).is_some() {
                return Err(EvalError::new(
                    format!("operation '{}' is not evaluable; only functions are", name),
                    span,
                ));
            }
            return Err(EvalError::new(format!("no function named '{}'", name), span));
        }
        let mut candidates: Vec<&'a FunctionDef> =
            overloads.into_iter().filter(|f| f.params.len() == args.len()).collect();
        if candidates.is_empty() {
            return Err(EvalError::new(
                format!("no overload of '{}' takes {} argument(s)", name, args.len()),
                span,
            ));
        }
        // Disambiguate by leftmost argument whose declared types differ.
        let mut position = 0;
        while candidates.len() > 1 && position < args.len() {
            let narrowed: Vec<&'a FunctionDef> = candidates
                .iter()
                .copied()
                .filter(|f| {
                    let mut ev = Evaluator::with_config(self.ctx, self.config.clone());
                    ev.membership(&args[position], &f.param_types[position], 10_000)
                })
                .collect();
            if !narrowed.is_empty() {
                candidates = narrowed;
            }
            position += 1;
        }
        if candidates.len() > 1 {
            let distinct: BTreeSet<String> =
                candidates.iter().map(|f| format!("{:?}", f.param_types)).collect();
            if distinct.len() > 1 {
                return Err(EvalError::new(
                    format!("ambiguous call to overloaded function '{}'", name),
                    span,
                ));
            }
        }
        Ok(candidates[0])
    }

    fn call_checked(
        &mut self,
        name: &str,
        args: Vec<Value>,
        span: Span,
        lenient: bool,
    ) -> EResult<CallOutcome> {
        let f = self.resolve_overload(name, &args, span)?;
        if !lenient {
            for (position, (arg, ty)) in args.iter().zip(&f.param_types).enumerate() {
                if !self.membership(arg, ty, 10_000) {
                    return Ok(CallOutcome::Violation {
                        kind: ViolationKind::TypeMembership,
                        message: format!(
                            "argument {} of '{}' ({}) does not inhabit its declared type",
                            position + 1,
                            f.name,
                            arg
                        ),
                        location: ty.span,
                    });
                }
            }
        }
        let mut scope = Scope::new();
        for (param, arg) in f.params.iter().zip(args.iter()) {
            scope.push(param.clone(), arg.clone());
        }
        if let Some(pre) = &f.pre {
            match self.eval(&mut scope, pre)? {
                Value::Bool(true) => {}
                Value::Bool(false) => {
                    return Ok(CallOutcome::Violation {
                        kind: ViolationKind::Precondition,
                        message: format!("precondition of '{}' is false", f.name),
                        location: pre.span,
                    });
                }
                v => {
                    return Err(EvalError::new(
                        format!("precondition must evaluate to a bool, got {}", v.type_name()),
                        pre.span,
                    ))
                }
            }
        }
        let result = self.eval(&mut scope, &f.body)?;
        if !self.membership(&result, &f.result_type, 10_000) {
            return Ok(CallOutcome::Violation {
                kind: ViolationKind::Postcondition,
                message: format!(
                    "result {} of '{}' does not inhabit the declared result type",
                    result, f.name
                ),
                location: f.result_type.span,
            });
        }
        if let Some(post) = &f.post {
            scope.push("RESULT", result.clone());
            let verdict = self.eval(&mut scope, post);
            scope.pop(1);
            match verdict? {
                Value::Bool(true) => {}
                Value::Bool(false) => {
                    return Ok(CallOutcome::Violation {
                        kind: ViolationKind::Postcondition,
                        message: format!("postcondition of '{}' is false", f.name),
                        location: post.span,
                    });
                }
                v => {
                    return Err(EvalError::new(
                        format!("postcondition must evaluate to a bool, got {}", v.type_name()),
                        post.span,
                    ))
                }
            }
        }
        Ok(CallOutcome::Ok(result))
    }

    /// Type membership: total, never an error. `fuel` bounds chains of
    /// named-type resolution so alias cycles answer false instead of
    /// looping.
    pub fn membership(&mut self, v: &Value, t: &TypeExpr, fuel: u32) -> bool {
        if fuel == 0 {
            return false;
        }
        match &t.kind {
            TypeExprKind::Basic(b) => match (b, v) {
                (BasicType::Bool, Value::Bool(_)) => true,
                (BasicType::Nat1, Value::Int(i)) => i.is_positive(),
                (BasicType::Nat, Value::Int(i)) => !i.is_negative(),
                (BasicType::Int, Value::Int(_)) => true,
                (BasicType::Rat | BasicType::Real, Value::Int(_) | Value::Real(_)) => true,
                (BasicType::Char, Value::Char(_)) => true,
                (BasicType::Token, Value::Token(_)) => true,
                _ => false,
            },
            TypeExprKind::Quote(name) => matches!(v, Value::Quote(q) if q == name),
            TypeExprKind::QuoteUnion(names) => {
                matches!(v, Value::Quote(q) if names.contains(q))
            }
            TypeExprKind::Set(elem) => match v {
                Value::Set(s) => s.iter().all(|e| self.membership(e, elem, fuel)),
                _ => false,
            },
            TypeExprKind::Seq(elem) => match v {
                Value::Seq(s) => s.iter().all(|e| self.membership(e, elem, fuel)),
                _ => false,
            },
            TypeExprKind::Map(kt, vt) => match v {
                Value::Map(m) => m
                    .iter()
                    .all(|(k, val)| self.membership(k, kt, fuel) && self.membership(val, vt, fuel)),
                _ => false,
            },
            TypeExprKind::Product(components) => match v {
                Value::Record { tag, fields } => {
                    tag.is_empty()
                        && fields.len() == components.len()
                        && fields
                            .iter()
                            .zip(components)
                            .all(|(f, c)| self.membership(f, c, fuel))
                }
                _ => false,
            },
            TypeExprKind::Composite { tag, fields } => match v {
                Value::Record { tag: vtag, fields: vfields } => {
                    vtag.eq_ignore_ascii_case(tag)
                        && vfields.len() == fields.len()
                        && vfields
                            .iter()
                            .zip(fields)
                            .all(|(f, (_, ft))| self.membership(f, ft, fuel))
                }
                _ => false,
            },
            TypeExprKind::Optional(inner) => {
                matches!(v, Value::Nil) || self.membership(v, inner, fuel)
            }
            TypeExprKind::Func { params, .. } => {
                matches!(v, Value::Closure { arity, .. } if *arity == params.len())
            }
            TypeExprKind::Named(name) => {
                if name.eq_ignore_ascii_case(&self.ctx.class.name) {
                    return self.class_predicate(v);
                }
                let class: &'a ClassDef = &self.ctx.class;
                let Some(td) = class.find_type_def(name) else {
                    return false;
                };
                if !self.membership(v, &td.body, fuel - 1) {
                    return false;
                }
                match &td.invariant {
                    None => true,
                    Some((binder, inv_expr)) => self.holds_absorbing(binder, v, inv_expr),
                }
            }
        }
    }

    /// Evaluate a boolean predicate with `binder` bound to `v`; any
    /// evaluation error or non-boolean result counts as false.
    fn holds_absorbing(&mut self, binder: &str, v: &Value, predicate: &Expr) -> bool {
        let mut scope = Scope::new();
        scope.push(binder, v.clone());
        matches!(self.eval(&mut scope, predicate), Ok(Value::Bool(true)))
    }

    /// The synthesized `is_ClassName` test: membership in the declared state
    /// type, plus every invariant in the inheritance chain.
    pub fn class_predicate(&mut self, v: &Value) -> bool {
        let ctx: &'a ResolvedClass = self.ctx;
        if let Some(state_ty) = ctx.state_type() {
            if !self.membership(v, state_ty, 10_000) {
                return false;
            }
        }
        ctx.invariants.iter().all(|inv| self.holds_absorbing(&inv.binder, v, &inv.expr))
    }

    fn composite_def(&self, tag: &str) -> Option<(String, usize)> {
        let mut current = self.ctx.class.find_type_def(tag)?;
        for _ in 0..64 {
            match &current.body.kind {
                TypeExprKind::Composite { tag, fields } => {
                    return Some((tag.clone(), fields.len()))
                }
                TypeExprKind::Named(next) => {
                    current = self.ctx.class.find_type_def(next)?;
                }
                _ => return None,
            }
        }
        None
    }

    fn field_index(&self, tag: &str, field: &str) -> Option<usize> {
        let td = self.ctx.class.find_type_def(tag)?;
        match &td.body.kind {
            TypeExprKind::Composite { fields, .. } => fields
                .iter()
                .position(|(name, _)| name == field)
                .or_else(|| fields.iter().position(|(name, _)| name.eq_ignore_ascii_case(field))),
            _ => None,
        }
    }
}

enum CallOutcome {
    Ok(Value),
    Violation { kind: ViolationKind, message: String, location: Span },
}

/// Run `f` on a thread with a wide stack so the configured specification
/// recursion limit, not the native stack, is the binding constraint.
pub(crate) fn with_wide_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(256 * 1024 * 1024)
            .spawn_scoped(s, f)
            .expect("spawn evaluation thread")
            .join()
            .expect("evaluation thread panicked")
    })
}

/// Evaluate one expression in the given class context with the given local
/// bindings.
pub fn eval_expr(
    ctx: &ResolvedClass,
    bindings: &[(String, Value)],
    e: &Expr,
) -> Result<Value, EvalError> {
    with_wide_stack(|| {
        let mut evaluator = Evaluator::new(ctx);
        let mut scope = Scope::new();
        for (name, value) in bindings {
            scope.push(name.clone(), value.clone());
        }
        evaluator.eval(&mut scope, e)
    })
}

/// Total membership test for `v` in type `t`.
pub fn type_membership(v: &Value, t: &TypeExpr, ctx: &ResolvedClass) -> bool {
    with_wide_stack(|| Evaluator::new(ctx).membership(v, t, 10_000))
}

/// The synthesized `is_ClassName` predicate over candidate state values.
pub fn invariant_predicate(ctx: &ResolvedClass) -> impl Fn(&Value) -> bool + '_ {
    move |v| with_wide_stack(|| Evaluator::new(ctx).class_predicate(v))
}

/// Call a function with full contract checking: argument types, then the
/// precondition, then the body, then result type and postcondition.
pub fn call_function(ctx: &ResolvedClass, name: &str, args: &[Value]) -> OracleOutcome {
    call_function_cfg(ctx, &EvalConfig::default(), name, args, false)
}

fn call_function_cfg(
    ctx: &ResolvedClass,
    config: &EvalConfig,
    name: &str,
    args: &[Value],
    lenient: bool,
) -> OracleOutcome {
    with_wide_stack(|| {
        let mut evaluator = Evaluator::with_config(ctx, config.clone());
        let span = Span::default();
        match evaluator.call_checked(name, args.to_vec(), span, lenient) {
            Ok(CallOutcome::Ok(v)) => OracleOutcome::Result(v),
            Ok(CallOutcome::Violation { kind, message, location }) => {
                OracleOutcome::ContractViolation { kind, location, message }
            }
            Err(e) => OracleOutcome::EvalError(e),
        }
    })
}

/// The expected-result generator: decode raw inputs (resolving the `M`
/// symbols against `m`), then delegate to checked function application.
///
/// When an argument fails its declared type, the call is retried without
/// the argument check; if the specification itself encodes a rejection path
/// (as `classify` does via `is_Triangle`) that path's clean result is the
/// expected result, otherwise the original type-membership violation
/// stands.
pub fn expected_result(
    ctx: &ResolvedClass,
    entry: &str,
    raw_inputs: &[InputToken],
    m: &BigInt,
) -> OracleOutcome {
    expected_result_cfg(ctx, &EvalConfig::default(), entry, raw_inputs, m)
}

pub fn expected_result_cfg(
    ctx: &ResolvedClass,
    config: &EvalConfig,
    entry: &str,
    raw_inputs: &[InputToken],
    m: &BigInt,
) -> OracleOutcome {
    let decoded: Vec<Value> = raw_inputs.iter().map(|t| t.decode(m)).collect();
    // A test case's token list is the one sequence argument of a
    // sequence-taking entry point; otherwise tokens map to parameters
    // positionally.
    let args = if entry_takes_one_sequence(ctx, entry) {
        vec![Value::Seq(decoded)]
    } else {
        decoded
    };
    let strict = call_function_cfg(ctx, config, entry, &args, false);
    if let OracleOutcome::ContractViolation { kind: ViolationKind::TypeMembership, .. } = &strict
    {
        let relaxed = call_function_cfg(ctx, config, entry, &args, true);
        if relaxed.is_result() {
            return relaxed;
        }
    }
    strict
}

fn entry_takes_one_sequence(ctx: &ResolvedClass, entry: &str) -> bool {
    ctx.class
        .find_functions(entry)
        .iter()
        .any(|f| f.param_types.len() == 1 && is_sequence_type(ctx, &f.param_types[0], 64))
}

fn is_sequence_type(ctx: &ResolvedClass, t: &TypeExpr, fuel: u32) -> bool {
    if fuel == 0 {
        return false;
    }
    match &t.kind {
        TypeExprKind::Seq(_) => true,
        TypeExprKind::Named(name) => match ctx.class.find_type_def(name) {
            Some(td) => is_sequence_type(ctx, &td.body, fuel - 1),
            None => false,
        },
        _ => false,
    }
}
