//! The transformation phase: emits oracle-class and driver-class source
//! skeletons in a fixed C++17 profile from a [`TargetClassModel`].
//!
//! Every emitted unit carries a structure manifest (enums with members,
//! classes with method signatures and access levels) that is machine
//! checkable without compiling the text. Emission is deterministic: the
//! same model always produces byte-identical units.
//!
//! Shape notes for the generated code:
//! - methods return values; no console output inside oracle methods, and
//!   enumeration results are returned as enumeration members;
//! - a `vdm_error` exception class carries contract failures;
//! - preconditions are guarded at method entry, postconditions checked
//!   before returning;
//! - set/sequence/map operators call into an embedded support layer whose
//!   sections mirror the STLSetAlgos/STLSequenceAlgos/STLMapAlgos extension
//!   headers;
//! - rational arithmetic is approximated with `double` in emitted code (the
//!   in-process evaluator stays exact);
//! - `Int` renders as `long long` so the emitted oracle survives the
//!   boundary inputs that overflow a 32-bit int.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::ast::*;
use crate::optimize::{MethodModel, TargetClassModel, TargetType};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} (at {span})")]
pub struct EmitError {
    pub message: String,
    pub span: Span,
}

impl EmitError {
    fn new(message: impl Into<String>, span: Span) -> Self {
        EmitError { message: message.into(), span }
    }
}

/// One declared entity of an emitted unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ManifestEntry {
    Enum { name: String, members: Vec<String> },
    Class { name: String },
    Method { class: String, access: Access, name: String, params: Vec<String>, result: String },
}

impl ManifestEntry {
    /// One line per entity, stable and diffable.
    pub fn render(&self) -> String {
        match self {
            ManifestEntry::Enum { name, members } => {
                format!("enum {} = {}", name, members.join(" "))
            }
            ManifestEntry::Class { name } => format!("class {}", name),
            ManifestEntry::Method { class, access, name, params, result } => {
                format!("method {} {} {}({}) -> {}", class, access, name, params.join(", "), result)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedUnit {
    pub filename: String,
    pub text: String,
    pub structure: Vec<ManifestEntry>,
}

impl EmittedUnit {
    pub fn manifest_lines(&self) -> Vec<String> {
        self.structure.iter().map(ManifestEntry::render).collect()
    }
}

/// Render a target type in the emitted C++ profile.
pub fn cpp_type(t: &TargetType) -> String {
    match t {
        TargetType::Bool => "bool".to_string(),
        TargetType::Int => "long long".to_string(),
        TargetType::Float => "double".to_string(),
        TargetType::Char => "char".to_string(),
        TargetType::Enumeration { name, .. } => name.clone(),
        TargetType::StringVector => "std::vector<std::string>".to_string(),
        TargetType::SetOf(inner) => format!("std::set<{}>", cpp_type(inner)),
        TargetType::VectorOf(inner) => format!("std::vector<{}>", cpp_type(inner)),
        TargetType::MapOf(k, v) => format!("std::map<{}, {}>", cpp_type(k), cpp_type(v)),
        TargetType::Struct { name, .. } => name.clone(),
        TargetType::OptionalOf(inner) => format!("std::optional<{}>", cpp_type(inner)),
        TargetType::FunctionResult(inner) => cpp_type(inner),
    }
}

const SUPPORT_LAYER: &str = r#"class vdm_error {
public:
    explicit vdm_error(const char* what) : what_(what) {}
    const char* what() const { return what_; }
private:
    const char* what_;
};

namespace vdm_support {

// STLSequenceAlgos: length, head, tail, elements, indexes, concatenation.
template <typename T> long long len(const std::vector<T>& s) { return (long long)s.size(); }
template <typename T> T hd(const std::vector<T>& s) {
    if (s.empty()) throw vdm_error("hd of empty sequence");
    return s.front();
}
template <typename T> std::vector<T> tl(const std::vector<T>& s) {
    if (s.empty()) throw vdm_error("tl of empty sequence");
    return std::vector<T>(s.begin() + 1, s.end());
}
template <typename T> std::set<T> elems(const std::vector<T>& s) {
    return std::set<T>(s.begin(), s.end());
}
template <typename T> std::set<long long> inds(const std::vector<T>& s) {
    std::set<long long> r;
    for (long long i = 1; i <= (long long)s.size(); ++i) r.insert(i);
    return r;
}
template <typename T> std::vector<T> concat(std::vector<T> a, const std::vector<T>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}
template <typename T> T vdm_apply(const std::vector<T>& s, long long i) {
    if (i < 1 || i > (long long)s.size()) throw vdm_error("sequence index out of range");
    return s[(size_t)(i - 1)];
}

// STLSetAlgos: cardinality, membership, union, intersection, difference,
// subset, proper subset.
template <typename T> long long card(const std::set<T>& s) { return (long long)s.size(); }
template <typename T, typename X> bool in_set(const X& x, const std::set<T>& s) {
    return s.count(x) > 0;
}
template <typename T> std::set<T> set_union(std::set<T> a, const std::set<T>& b) {
    a.insert(b.begin(), b.end());
    return a;
}
template <typename T> std::set<T> set_inter(const std::set<T>& a, const std::set<T>& b) {
    std::set<T> r;
    for (const auto& x : a) if (b.count(x)) r.insert(x);
    return r;
}
template <typename T> std::set<T> set_diff(const std::set<T>& a, const std::set<T>& b) {
    std::set<T> r;
    for (const auto& x : a) if (!b.count(x)) r.insert(x);
    return r;
}
template <typename T> bool subset(const std::set<T>& a, const std::set<T>& b) {
    for (const auto& x : a) if (!b.count(x)) return false;
    return true;
}
template <typename T> bool psubset(const std::set<T>& a, const std::set<T>& b) {
    return subset(a, b) && a != b;
}

// STLMapAlgos: domain, range, application, override.
template <typename K, typename V> std::set<K> dom(const std::map<K, V>& m) {
    std::set<K> r;
    for (const auto& kv : m) r.insert(kv.first);
    return r;
}
template <typename K, typename V> std::set<V> rng(const std::map<K, V>& m) {
    std::set<V> r;
    for (const auto& kv : m) r.insert(kv.second);
    return r;
}
template <typename K, typename V, typename X> V vdm_apply(const std::map<K, V>& m, const X& k) {
    auto it = m.find(k);
    if (it == m.end()) throw vdm_error("map applied outside its domain");
    return it->second;
}
template <typename K, typename V> std::map<K, V> map_override(std::map<K, V> a, const std::map<K, V>& b) {
    for (const auto& kv : b) a[kv.first] = kv.second;
    return a;
}

// Token construction.
inline std::vector<std::string> mk_token(long long x) { return {std::to_string(x)}; }
inline std::vector<std::string> mk_token(double x) { return {std::to_string(x)}; }
inline std::vector<std::string> mk_token(char x) { return {std::string(1, x)}; }
inline std::vector<std::string> mk_token(const std::string& x) { return {x}; }

// Arithmetic.
inline long long vdm_div(long long a, long long b) {
    if (b == 0) throw vdm_error("div by zero");
    return a / b;
}
inline long long vdm_mod(long long a, long long b) {
    if (b == 0) throw vdm_error("mod by zero");
    long long r = a % b;
    if (r != 0 && ((r < 0) != (b < 0))) r += b;
    return r;
}
inline double vdm_divide(double a, double b) {
    if (b == 0.0) throw vdm_error("division by zero");
    return a / b;
}
inline long long vdm_floor(long long x) { return x; }
inline long long vdm_floor(double x) { return (long long)std::floor(x); }
inline long long vdm_abs(long long x) { return x < 0 ? -x : x; }
inline double vdm_abs(double x) { return x < 0 ? -x : x; }

} // namespace vdm_support
"#;

struct EmitCtx<'a> {
    model: &'a TargetClassModel,
    structs: BTreeMap<String, Vec<(String, TargetType)>>,
}

impl<'a> EmitCtx<'a> {
    fn new(model: &'a TargetClassModel) -> Self {
        let mut structs = BTreeMap::new();
        let mut collect = |t: &TargetType| collect_structs(t, &mut structs);
        for c in &model.constants {
            collect(&c.ty);
        }
        for f in &model.fields {
            collect(&f.ty);
        }
        for m in &model.methods {
            for (_, ty) in &m.params {
                collect(ty);
            }
            collect(&m.result);
        }
        if let Some(inv) = &model.inv_method {
            collect(&inv.state_type);
        }
        EmitCtx { model, structs }
    }

    fn is_method(&self, name: &str) -> bool {
        self.model.methods.iter().any(|m| m.name.eq_ignore_ascii_case(name))
    }

    fn enum_of_quote(&self, quote: &str) -> Option<&str> {
        self.model
            .enums
            .iter()
            .find(|(_, members)| members.iter().any(|m| m == quote))
            .map(|(name, _)| name.as_str())
    }
}

fn collect_structs(t: &TargetType, out: &mut BTreeMap<String, Vec<(String, TargetType)>>) {
    match t {
        TargetType::Struct { name, fields } => {
            for (_, ty) in fields {
                collect_structs(ty, out);
            }
            out.entry(name.clone()).or_insert_with(|| fields.clone());
        }
        TargetType::SetOf(inner)
        | TargetType::VectorOf(inner)
        | TargetType::OptionalOf(inner)
        | TargetType::FunctionResult(inner) => collect_structs(inner, out),
        TargetType::MapOf(k, v) => {
            collect_structs(k, out);
            collect_structs(v, out);
        }
        _ => {}
    }
}

type EmitResult<T> = Result<T, EmitError>;

fn is_empty_enum(e: &Expr) -> bool {
    matches!(&e.kind,
        ExprKind::SeqEnum(items) if items.is_empty())
        || matches!(&e.kind, ExprKind::SetEnum(items) if items.is_empty())
        || matches!(&e.kind, ExprKind::MapEnum(pairs) if pairs.is_empty())
}

/// Translate a specification predicate/expression into a C++ expression
/// fragment. Statement forms (cases, quantifiers, let) become immediately
/// invoked lambdas so the result is always an expression.
pub fn predicate_translate(e: &Expr, model: &TargetClassModel) -> EmitResult<String> {
    let ctx = EmitCtx::new(model);
    translate(e, &ctx)
}

fn translate(e: &Expr, ctx: &EmitCtx) -> EmitResult<String> {
    match &e.kind {
        ExprKind::Literal(lit) => translate_literal(lit, ctx, e.span),
        ExprKind::Var(name) => {
            if name == "RESULT" {
                Ok("vdm_result".to_string())
            } else {
                Ok(name.clone())
            }
        }
        ExprKind::Unary(op, inner) => {
            let operand = translate(inner, ctx)?;
            Ok(match op {
                UnaryOp::Not => format!("(!({}))", operand),
                UnaryOp::Neg => format!("(-({}))", operand),
                UnaryOp::Len => format!("vdm_support::len({})", operand),
                UnaryOp::Hd => format!("vdm_support::hd({})", operand),
                UnaryOp::Tl => format!("vdm_support::tl({})", operand),
                UnaryOp::Elems => format!("vdm_support::elems({})", operand),
                UnaryOp::Inds => format!("vdm_support::inds({})", operand),
                UnaryOp::Card => format!("vdm_support::card({})", operand),
                UnaryOp::Dom => format!("vdm_support::dom({})", operand),
                UnaryOp::Rng => format!("vdm_support::rng({})", operand),
                UnaryOp::Floor => format!("vdm_support::vdm_floor({})", operand),
                UnaryOp::Abs => format!("vdm_support::vdm_abs({})", operand),
            })
        }
        ExprKind::Binary(op, lhs, rhs) => translate_binary(*op, lhs, rhs, ctx, e.span),
        ExprKind::IfThenElse { cond, then_branch, else_branch } => Ok(format!(
            "({} ? {} : {})",
            translate(cond, ctx)?,
            translate(then_branch, ctx)?,
            translate(else_branch, ctx)?
        )),
        ExprKind::Cases { scrutinee, branches, others } => {
            translate_cases(scrutinee, branches, others, ctx)
        }
        ExprKind::LetIn { bindings, body } => {
            let mut out = String::from("[&]{ ");
            for (name, value) in bindings {
                out.push_str(&format!("const auto {} = {}; ", name, translate(value, ctx)?));
            }
            out.push_str(&format!("return {}; }}()", translate(body, ctx)?));
            Ok(out)
        }
        ExprKind::Quantifier { kind, binder, domain, predicate } => {
            let domain_code = translate(domain, ctx)?;
            let pred = translate(predicate, ctx)?;
            Ok(match kind {
                QuantifierKind::Forall => format!(
                    "[&]{{ for (const auto& {} : {}) {{ if (!({})) return false; }} return true; }}()",
                    binder, domain_code, pred
                ),
                QuantifierKind::Exists => format!(
                    "[&]{{ for (const auto& {} : {}) {{ if ({}) return true; }} return false; }}()",
                    binder, domain_code, pred
                ),
            })
        }
        ExprKind::SetEnum(items) => {
            if items.is_empty() {
                return Err(EmitError::new(
                    "empty set enumeration has no inferable element type here",
                    e.span,
                ));
            }
            let inner = items.iter().map(|i| translate(i, ctx)).collect::<EmitResult<Vec<_>>>()?;
            Ok(format!("std::set{{{}}}", inner.join(", ")))
        }
        ExprKind::SeqEnum(items) => {
            if items.is_empty() {
                return Err(EmitError::new(
                    "empty sequence enumeration has no inferable element type here",
                    e.span,
                ));
            }
            let inner = items.iter().map(|i| translate(i, ctx)).collect::<EmitResult<Vec<_>>>()?;
            Ok(format!("std::vector{{{}}}", inner.join(", ")))
        }
        ExprKind::MapEnum(pairs) => {
            if pairs.is_empty() {
                return Err(EmitError::new(
                    "empty map enumeration has no inferable key/value types here",
                    e.span,
                ));
            }
            let inner = pairs
                .iter()
                .map(|(k, v)| {
                    Ok(format!("std::pair{{{}, {}}}", translate(k, ctx)?, translate(v, ctx)?))
                })
                .collect::<EmitResult<Vec<_>>>()?;
            Ok(format!("std::map{{{}}}", inner.join(", ")))
        }
        ExprKind::Apply { callee, args } => {
            let translated =
                args.iter().map(|a| translate(a, ctx)).collect::<EmitResult<Vec<_>>>()?;
            if ctx.is_method(callee) {
                return Ok(format!("{}({})", callee, translated.join(", ")));
            }
            if args.len() == 1 {
                // Map or sequence application on a bound collection.
                return Ok(format!("vdm_support::vdm_apply({}, {})", callee, translated[0]));
            }
            Err(EmitError::new(
                format!("'{}' is not a method and cannot be applied to {} arguments", callee, args.len()),
                e.span,
            ))
        }
        ExprKind::RecordCtor { tag, args } => {
            if tag.eq_ignore_ascii_case("token") {
                if args.len() != 1 {
                    return Err(EmitError::new("mk_token takes exactly one argument", e.span));
                }
                return Ok(format!("vdm_support::mk_token({})", translate(&args[0], ctx)?));
            }
            let name = ctx
                .structs
                .keys()
                .find(|n| n.eq_ignore_ascii_case(tag))
                .cloned()
                .unwrap_or_else(|| tag.clone());
            let inner = args.iter().map(|a| translate(a, ctx)).collect::<EmitResult<Vec<_>>>()?;
            Ok(format!("{}{{{}}}", name, inner.join(", ")))
        }
        ExprKind::FieldSelect { base, field } => {
            Ok(format!("({}).{}", translate(base, ctx)?, field))
        }
        ExprKind::TypeJudgement { expr: inner, target } => {
            let operand = translate(inner, ctx)?;
            match &target.kind {
                TypeExprKind::Basic(BasicType::Nat) => Ok(format!("(({}) >= 0)", operand)),
                TypeExprKind::Basic(BasicType::Nat1) => Ok(format!("(({}) >= 1)", operand)),
                // Static typing upholds the remaining basic memberships.
                TypeExprKind::Basic(_) => Ok("true".to_string()),
                TypeExprKind::Named(name)
                    if name.eq_ignore_ascii_case(&ctx.model.source_name) =>
                {
                    Ok(format!("inv({})", operand))
                }
                TypeExprKind::Named(name) => Err(EmitError::new(
                    format!("no translation rule for is_{}", name),
                    target.span,
                )),
                _ => Err(EmitError::new("no translation rule for this is_ target", target.span)),
            }
        }
    }
}

fn translate_literal(lit: &Literal, ctx: &EmitCtx, span: Span) -> EmitResult<String> {
    match lit {
        Literal::Bool(b) => Ok(b.to_string()),
        Literal::Int(i) => {
            if i64::try_from(i).is_err() {
                return Err(EmitError::new(
                    format!("integer literal {} exceeds the emitted profile's integer range", i),
                    span,
                ));
            }
            Ok(format!("{}LL", i))
        }
        Literal::Real(r) => Ok(format!(
            "({}.0 / {}.0)",
            r.numer(),
            r.denom()
        )),
        Literal::Char(c) => Ok(crate::value::escape_char(*c)),
        Literal::Quote(q) => {
            if ctx.enum_of_quote(q).is_none() {
                return Err(EmitError::new(
                    format!("quote '{}' is not a member of any enumeration in the model", q),
                    span,
                ));
            }
            Ok(q.clone())
        }
        Literal::Nil => Ok("std::nullopt".to_string()),
    }
}

fn translate_binary(
    op: BinaryOp,
    lhs: &Expr,
    rhs: &Expr,
    ctx: &EmitCtx,
    span: Span,
) -> EmitResult<String> {
    // Equality against an empty enumeration compiles to an emptiness check;
    // the element type is not expressible at this point.
    if matches!(op, BinaryOp::Eq | BinaryOp::Neq) {
        let target = if is_empty_enum(rhs) {
            Some(lhs)
        } else if is_empty_enum(lhs) {
            Some(rhs)
        } else {
            None
        };
        if let Some(subject) = target {
            let inner = translate(subject, ctx)?;
            return Ok(if op == BinaryOp::Eq {
                format!("({}).empty()", inner)
            } else {
                format!("(!({}).empty())", inner)
            });
        }
    }
    let a = translate(lhs, ctx)?;
    let b = translate(rhs, ctx)?;
    Ok(match op {
        BinaryOp::Add => format!("({} + {})", a, b),
        BinaryOp::Sub => format!("({} - {})", a, b),
        BinaryOp::Mul => format!("({} * {})", a, b),
        BinaryOp::Divide => format!("vdm_support::vdm_divide((double)({}), (double)({}))", a, b),
        BinaryOp::IntDiv => format!("vdm_support::vdm_div({}, {})", a, b),
        BinaryOp::Mod => format!("vdm_support::vdm_mod({}, {})", a, b),
        BinaryOp::Eq => format!("({} == {})", a, b),
        BinaryOp::Neq => format!("({} != {})", a, b),
        BinaryOp::Lt => format!("({} < {})", a, b),
        BinaryOp::Le => format!("({} <= {})", a, b),
        BinaryOp::Gt => format!("({} > {})", a, b),
        BinaryOp::Ge => format!("({} >= {})", a, b),
        BinaryOp::And => format!("({} && {})", a, b),
        BinaryOp::Or => format!("({} || {})", a, b),
        BinaryOp::Implies => format!("((!({})) || ({}))", a, b),
        BinaryOp::InSet => format!("vdm_support::in_set({}, {})", a, b),
        BinaryOp::NotInSet => format!("(!vdm_support::in_set({}, {}))", a, b),
        BinaryOp::Union => format!("vdm_support::set_union({}, {})", a, b),
        BinaryOp::Inter => format!("vdm_support::set_inter({}, {})", a, b),
        BinaryOp::SetDiff => format!("vdm_support::set_diff({}, {})", a, b),
        BinaryOp::Subset => format!("vdm_support::subset({}, {})", a, b),
        BinaryOp::PSubset => format!("vdm_support::psubset({}, {})", a, b),
        BinaryOp::Concat => format!("vdm_support::concat({}, {})", a, b),
        BinaryOp::MapOverride => format!("vdm_support::map_override({}, {})", a, b),
    })
    .map(|s| {
        let _ = span;
        s
    })
}

/// Cases over integer-literal patterns become a switch; anything else
/// becomes an equality chain.
fn translate_cases(
    scrutinee: &Expr,
    branches: &[(Expr, Expr)],
    others: &Option<Box<Expr>>,
    ctx: &EmitCtx,
) -> EmitResult<String> {
    let scrut = translate(scrutinee, ctx)?;
    let all_int_literals = branches
        .iter()
        .all(|(p, _)| matches!(&p.kind, ExprKind::Literal(Literal::Int(_))));
    if all_int_literals {
        let mut out = format!("[&]{{ switch ({}) {{ ", scrut);
        for (pattern, result) in branches {
            let ExprKind::Literal(Literal::Int(i)) = &pattern.kind else { unreachable!() };
            out.push_str(&format!("case {}: return {}; ", i, translate(result, ctx)?));
        }
        if let Some(other) = others {
            out.push_str(&format!("default: return {}; ", translate(other, ctx)?));
        }
        out.push_str("} throw vdm_error(\"non-exhaustive cases\"); }()");
        Ok(out)
    } else {
        let mut out = format!("[&]{{ const auto vdm_scrutinee = {}; ", scrut);
        for (pattern, result) in branches {
            out.push_str(&format!(
                "if (vdm_scrutinee == ({})) return {}; ",
                translate(pattern, ctx)?,
                translate(result, ctx)?
            ));
        }
        if let Some(other) = others {
            out.push_str(&format!("return {}; }}()", translate(other, ctx)?));
        } else {
            out.push_str("throw vdm_error(\"non-exhaustive cases\"); }()");
        }
        Ok(out)
    }
}

/// A boolean membership check of `var` against a source type, for the
/// shapes the emitted profile can express. `None` means the check is
/// upheld by static typing alone.
fn membership_check(var: &str, t: &TypeExpr) -> Option<String> {
    match &t.kind {
        TypeExprKind::Basic(BasicType::Nat) => Some(format!("({} >= 0)", var)),
        TypeExprKind::Basic(BasicType::Nat1) => Some(format!("({} >= 1)", var)),
        TypeExprKind::Seq(inner) | TypeExprKind::Set(inner) => {
            let elem = membership_check("vdm_element", inner)?;
            Some(format!(
                "[&]{{ for (const auto& vdm_element : {}) {{ if (!{}) return false; }} return true; }}()",
                var, elem
            ))
        }
        _ => None,
    }
}

fn method_text(m: &MethodModel, ctx: &EmitCtx, model: &TargetClassModel) -> EmitResult<String> {
    let params = m
        .params
        .iter()
        .map(|(name, ty)| format!("{} {}", cpp_type(ty), name))
        .collect::<Vec<_>>()
        .join(", ");
    let mut body = String::new();
    // Operations may change state: check the class invariant around them.
    let state_guard = if m.is_operation && model.inv_method.is_some() && model.fields.len() == 1 {
        Some(model.fields[0].name.clone())
    } else {
        None
    };
    if let Some(field) = &state_guard {
        body.push_str(&format!(
            "        if (!inv({})) throw vdm_error(\"invariant violated on entry to {}\");\n",
            field, m.name
        ));
    }
    if let Some(pre) = &m.pre {
        body.push_str(&format!(
            "        if (!({})) throw vdm_error(\"precondition of {} violated\");\n",
            translate(pre, ctx)?,
            m.name
        ));
    }
    let body_code = translate(&m.body, ctx)?;
    let needs_result = m.post.is_some() || state_guard.is_some();
    if needs_result {
        body.push_str(&format!("        auto vdm_result = {};\n", body_code));
        if let Some(post) = &m.post {
            body.push_str(&format!(
                "        if (!({})) throw vdm_error(\"postcondition of {} violated\");\n",
                translate(post, ctx)?,
                m.name
            ));
        }
        if let Some(field) = &state_guard {
            body.push_str(&format!(
                "        if (!inv({})) throw vdm_error(\"invariant violated on exit from {}\");\n",
                field, m.name
            ));
        }
        body.push_str("        return vdm_result;\n");
    } else {
        body.push_str(&format!("        return {};\n", body_code));
    }
    Ok(format!(
        "    {} {}({}) {{\n{}    }}\n",
        cpp_type(&m.result),
        m.name,
        params,
        body
    ))
}

fn inv_method_text(model: &TargetClassModel, ctx: &EmitCtx) -> EmitResult<Option<String>> {
    let Some(inv) = &model.inv_method else { return Ok(None) };
    let mut body = String::new();
    if let Some(check) = membership_check(&inv.binder, &inv.source_state_type) {
        body.push_str(&format!("        if (!{}) return false;\n", check));
    }
    body.push_str(&format!("        return {};\n", translate(&inv.expr, ctx)?));
    Ok(Some(format!(
        "    bool inv({} {}) {{\n{}    }}\n",
        cpp_type(&inv.state_type),
        inv.binder,
        body
    )))
}

fn struct_defs(ctx: &EmitCtx) -> String {
    let mut out = String::new();
    for (name, fields) in &ctx.structs {
        out.push_str(&format!("struct {} {{\n", name));
        for (fname, fty) in fields {
            out.push_str(&format!("    {} {};\n", cpp_type(fty), fname));
        }
        let tie = |prefix: &str| {
            if fields.is_empty() {
                "std::tie()".to_string()
            } else {
                format!(
                    "std::tie({})",
                    fields
                        .iter()
                        .map(|(f, _)| format!("{}{}", prefix, f))
                        .collect::<Vec<_>>()
                        .join(", ")
                )
            }
        };
        out.push_str(&format!(
            "    bool operator==(const {}& other) const {{ return {} == {}; }}\n",
            name,
            tie(""),
            tie("other.")
        ));
        out.push_str(&format!(
            "    bool operator<(const {}& other) const {{ return {} < {}; }}\n",
            name,
            tie(""),
            tie("other.")
        ));
        out.push_str("};\n\n");
    }
    out
}

/// Emit the oracle class for a model: enumerations, the class with its
/// private/protected/public sections, contract guards, and the embedded
/// support layer.
pub fn emit_oracle_class(model: &TargetClassModel) -> EmitResult<EmittedUnit> {
    let ctx = EmitCtx::new(model);
    let mut text = String::new();
    text.push_str(&format!(
        "// Generated test oracle for class {}. Machine-written; edit the\n\
         // specification instead of this file.\n",
        model.source_name
    ));
    text.push_str(
        "// Oracle methods return values (enumeration members, never integer\n\
         // literals) and print nothing; contract failures throw vdm_error.\n\
         // rat/real arithmetic is approximated by double in this profile.\n",
    );
    text.push_str("#pragma once\n\n");
    text.push_str("#include <cmath>\n#include <cstdint>\n#include <map>\n#include <optional>\n#include <set>\n#include <string>\n#include <tuple>\n#include <vector>\n\n");
    for base in &model.base_classes {
        text.push_str(&format!("#include \"{}.gen.cpp\"\n", base));
    }
    if !model.base_classes.is_empty() {
        text.push('\n');
    }
    text.push_str("#ifndef VDM_SUPPORT_DEFINED\n#define VDM_SUPPORT_DEFINED\n");
    text.push_str(SUPPORT_LAYER);
    text.push_str("#endif // VDM_SUPPORT_DEFINED\n\n");

    let mut structure = Vec::new();
    for (name, members) in &model.enums {
        text.push_str(&format!("enum {} {{ {} }};\n", name, members.join(", ")));
        structure.push(ManifestEntry::Enum { name: name.clone(), members: members.clone() });
    }
    if !model.enums.is_empty() {
        text.push('\n');
    }
    text.push_str(&struct_defs(&ctx));

    let header = if model.base_classes.is_empty() {
        format!("class {} {{\n", model.name)
    } else {
        let bases = model
            .base_classes
            .iter()
            .map(|b| format!("public {}", b))
            .collect::<Vec<_>>()
            .join(", ");
        format!("class {} : {} {{\n", model.name, bases)
    };
    text.push_str(&header);
    structure.push(ManifestEntry::Class { name: model.name.clone() });

    let method_entry = |m: &MethodModel| ManifestEntry::Method {
        class: model.name.clone(),
        access: m.access,
        name: m.name.clone(),
        params: m.params.iter().map(|(_, ty)| cpp_type(ty)).collect(),
        result: cpp_type(&m.result),
    };

    for access in [Access::Private, Access::Protected, Access::Public] {
        let constants: Vec<_> = model.constants.iter().filter(|c| c.access == access).collect();
        let fields: Vec<_> = model.fields.iter().filter(|f| f.access == access).collect();
        let methods: Vec<_> = model.methods.iter().filter(|m| m.access == access).collect();
        let has_inv = access == Access::Private && model.inv_method.is_some();
        let needs_ctor =
            access == Access::Public && model.fields.iter().any(|f| f.init.is_some());
        if constants.is_empty() && fields.is_empty() && methods.is_empty() && !has_inv && !needs_ctor
        {
            continue;
        }
        text.push_str(match access {
            Access::Private => "private:\n",
            Access::Protected => "protected:\n",
            Access::Public => "public:\n",
        });
        for c in constants {
            text.push_str(&format!(
                "    inline static const {} {} = {};\n",
                cpp_type(&c.ty),
                c.name,
                translate(&c.value, &ctx)?
            ));
        }
        for f in fields {
            text.push_str(&format!("    {} {};\n", cpp_type(&f.ty), f.name));
        }
        if needs_ctor {
            let inits = model
                .fields
                .iter()
                .filter_map(|f| {
                    f.init
                        .as_ref()
                        .map(|init| Ok(format!("{}({})", f.name, translate(init, &ctx)?)))
                })
                .collect::<EmitResult<Vec<_>>>()?;
            text.push_str(&format!("    {}() : {} {{}}\n", model.name, inits.join(", ")));
        }
        if has_inv {
            if let Some(inv_text) = inv_method_text(model, &ctx)? {
                text.push_str(&inv_text);
                let inv = model.inv_method.as_ref().expect("checked above");
                structure.push(ManifestEntry::Method {
                    class: model.name.clone(),
                    access: Access::Private,
                    name: "inv".to_string(),
                    params: vec![cpp_type(&inv.state_type)],
                    result: "bool".to_string(),
                });
            }
        }
        for m in methods {
            text.push_str(&method_text(m, &ctx, model)?);
            structure.push(method_entry(m));
        }
    }
    text.push_str("};\n");

    debug_assert!(syntactic_balance(&text));
    Ok(EmittedUnit { filename: format!("{}.gen.cpp", model.name), text, structure })
}

/// Emit the driver class: one oracle instance, one implementation-under-test
/// instance, and a comparator per public entry point that returns whether
/// their results agree.
pub fn emit_driver(model: &TargetClassModel, iut_class_name: &str) -> EmitResult<EmittedUnit> {
    let public_methods: Vec<_> =
        model.methods.iter().filter(|m| m.access == Access::Public).collect();
    if public_methods.is_empty() {
        return Err(EmitError::new(
            format!("class {} has no public entry point to drive", model.source_name),
            Span::default(),
        ));
    }
    let mut text = String::new();
    text.push_str(
        "// Generated driver: runs the oracle and the implementation under test\n\
         // on the same inputs and compares their results.\n",
    );
    text.push_str(&format!(
        "// The implementation class {} must be available to the build.\n",
        iut_class_name
    ));
    text.push_str("#pragma once\n\n");
    text.push_str(&format!("#include \"{}.gen.cpp\"\n\n", model.name));

    let mut structure = vec![ManifestEntry::Class { name: "driver".to_string() }];
    text.push_str("class driver {\npublic:\n");
    let mut seen_signatures: Vec<Vec<String>> = Vec::new();
    for m in &public_methods {
        let param_types: Vec<String> = m.params.iter().map(|(_, ty)| cpp_type(ty)).collect();
        let method_name = if seen_signatures.contains(&param_types) {
            format!("comparator_{}", m.name)
        } else {
            "comparator".to_string()
        };
        seen_signatures.push(param_types.clone());
        let params = m
            .params
            .iter()
            .map(|(name, ty)| format!("{} {}", cpp_type(ty), name))
            .collect::<Vec<_>>()
            .join(", ");
        let args =
            m.params.iter().map(|(name, _)| name.clone()).collect::<Vec<_>>().join(", ");
        text.push_str(&format!(
            "    bool {}({}) {{\n        if (ot.{}({}) == t.{}({}))\n            return true;\n        return false;\n    }}\n",
            method_name, params, m.name, args, m.name, args
        ));
        structure.push(ManifestEntry::Method {
            class: "driver".to_string(),
            access: Access::Public,
            name: method_name,
            params: param_types,
            result: "bool".to_string(),
        });
    }
    text.push_str("private:\n");
    text.push_str(&format!("    {} ot;\n", model.name));
    text.push_str(&format!("    {} t;\n", iut_class_name));
    text.push_str("};\n");

    debug_assert!(syntactic_balance(&text));
    Ok(EmittedUnit { filename: "driver.gen.cpp".to_string(), text, structure })
}

/// Counter scan for balanced braces, parentheses, and brackets, skipping
/// string/character literals and comments.
pub fn syntactic_balance(text: &str) -> bool {
    let mut depth_paren = 0i64;
    let mut depth_brace = 0i64;
    let mut depth_bracket = 0i64;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '/' if chars.peek() == Some(&'/') => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            '/' if chars.peek() == Some(&'*') => {
                chars.next();
                let mut prev = ' ';
                for c in chars.by_ref() {
                    if prev == '*' && c == '/' {
                        break;
                    }
                    prev = c;
                }
            }
            '"' => {
                let mut escaped = false;
                for c in chars.by_ref() {
                    if escaped {
                        escaped = false;
                    } else if c == '\\' {
                        escaped = true;
                    } else if c == '"' {
                        break;
                    }
                }
            }
            '\'' => {
                let mut escaped = false;
                for c in chars.by_ref() {
                    if escaped {
                        escaped = false;
                    } else if c == '\\' {
                        escaped = true;
                    } else if c == '\'' {
                        break;
                    }
                }
            }
            '(' => depth_paren += 1,
            ')' => depth_paren -= 1,
            '{' => depth_brace += 1,
            '}' => depth_brace -= 1,
            '[' => depth_bracket += 1,
            ']' => depth_bracket -= 1,
            _ => {}
        }
        if depth_paren < 0 || depth_brace < 0 || depth_bracket < 0 {
            return false;
        }
    }
    depth_paren == 0 && depth_brace == 0 && depth_bracket == 0
}

/// Write emitted units plus a `manifest.txt` listing every declared entity,
/// one per line. Returns the manifest path.
pub fn write_units(units: &[EmittedUnit], out_dir: &Path) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    for unit in units {
        std::fs::write(out_dir.join(&unit.filename), &unit.text)?;
    }
    let manifest_path = out_dir.join("manifest.txt");
    let mut f = std::fs::File::create(&manifest_path)?;
    for unit in units {
        for line in unit.manifest_lines() {
            writeln!(f, "{}", line)?;
        }
    }
    Ok(manifest_path)
}
