//! Pretty-printer for parsed classes.
//!
//! Output is canonical concrete syntax: lowercase keywords, ASCII operator
//! spellings, `seq of`/`set of` type forms. For every parser-built class
//! `c`, `parse(pretty_print(c))` is `ast_equal` to `c`. Greedy forms
//! (if/let/cases/quantifiers) are parenthesized in operand position so the
//! printed text reparses with the same shape.

use crate::ast::*;

/// Expression precedence levels; higher binds tighter.
mod level {
    pub const GREEDY: u8 = 0;
    pub const IMPLIES: u8 = 1;
    pub const OR: u8 = 2;
    pub const AND: u8 = 3;
    pub const NOT: u8 = 4;
    pub const RELATION: u8 = 5;
    pub const ADDITIVE: u8 = 6;
    pub const MULTIPLICATIVE: u8 = 7;
    pub const PREFIX: u8 = 8;
    pub const POSTFIX: u8 = 9;
    pub const ATOM: u8 = 10;
}

fn binary_level(op: BinaryOp) -> u8 {
    use BinaryOp::*;
    match op {
        Implies => level::IMPLIES,
        Or => level::OR,
        And => level::AND,
        Eq | Neq | Lt | Le | Gt | Ge | InSet | NotInSet | Subset | PSubset => level::RELATION,
        Add | Sub | Union | SetDiff | Concat | MapOverride => level::ADDITIVE,
        Mul | Divide | IntDiv | Mod | Inter => level::MULTIPLICATIVE,
    }
}

fn expr_level(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::IfThenElse { .. }
        | ExprKind::LetIn { .. }
        | ExprKind::Cases { .. }
        | ExprKind::Quantifier { .. } => level::GREEDY,
        ExprKind::Binary(op, _, _) => binary_level(*op),
        ExprKind::Unary(UnaryOp::Not, _) => level::NOT,
        ExprKind::Unary(_, _) => level::PREFIX,
        ExprKind::FieldSelect { .. } => level::POSTFIX,
        _ => level::ATOM,
    }
}

fn literal(lit: &Literal) -> String {
    match lit {
        Literal::Bool(b) => b.to_string(),
        Literal::Int(i) => i.to_string(),
        Literal::Real(r) => crate::value::render_rational(r),
        Literal::Char(c) => crate::value::escape_char(*c),
        Literal::Quote(q) => q.clone(),
        Literal::Nil => "nil".to_string(),
    }
}

fn expr(e: &Expr, required: u8) -> String {
    let own = expr_level(e);
    let body = match &e.kind {
        ExprKind::Literal(lit) => literal(lit),
        ExprKind::Var(name) => name.clone(),
        ExprKind::Unary(UnaryOp::Not, inner) => format!("not {}", expr(inner, level::NOT)),
        ExprKind::Unary(UnaryOp::Neg, inner) => format!("-{}", expr(inner, level::PREFIX)),
        ExprKind::Unary(op, inner) => format!("{} {}", op.name(), expr(inner, level::PREFIX)),
        ExprKind::Binary(op, lhs, rhs) => {
            let lvl = binary_level(*op);
            match op {
                // Right-associative.
                BinaryOp::Implies => {
                    format!("{} => {}", expr(lhs, lvl + 1), expr(rhs, lvl))
                }
                // Non-associative comparisons.
                _ if lvl == level::RELATION => {
                    format!("{} {} {}", expr(lhs, lvl + 1), op.name(), expr(rhs, lvl + 1))
                }
                _ => format!("{} {} {}", expr(lhs, lvl), op.name(), expr(rhs, lvl + 1)),
            }
        }
        ExprKind::IfThenElse { cond, then_branch, else_branch } => format!(
            "if {} then {} else {}",
            expr(cond, level::GREEDY),
            expr(then_branch, level::GREEDY),
            expr(else_branch, level::GREEDY)
        ),
        ExprKind::Cases { scrutinee, branches, others } => {
            let mut parts = Vec::new();
            for (pattern, result) in branches {
                parts.push(format!(
                    "{} -> {}",
                    expr(pattern, level::IMPLIES),
                    expr(result, level::IMPLIES)
                ));
            }
            if let Some(other) = others {
                parts.push(format!("others -> {}", expr(other, level::GREEDY)));
            }
            format!("cases {} of {} end", expr(scrutinee, level::IMPLIES), parts.join(", "))
        }
        ExprKind::LetIn { bindings, body } => {
            let binds = bindings
                .iter()
                .map(|(name, value)| format!("{} = {}", name, expr(value, level::IMPLIES)))
                .collect::<Vec<_>>()
                .join(", ");
            format!("let {} in {}", binds, expr(body, level::GREEDY))
        }
        ExprKind::Quantifier { kind, binder, domain, predicate } => {
            let word = match kind {
                QuantifierKind::Forall => "forall",
                QuantifierKind::Exists => "exists",
            };
            format!(
                "{} {} in set {} . {}",
                word,
                binder,
                expr(domain, level::ATOM),
                expr(predicate, level::GREEDY)
            )
        }
        ExprKind::SetEnum(items) => {
            format!("{{{}}}", items.iter().map(|i| expr(i, level::GREEDY)).collect::<Vec<_>>().join(", "))
        }
        ExprKind::SeqEnum(items) => {
            format!("[{}]", items.iter().map(|i| expr(i, level::GREEDY)).collect::<Vec<_>>().join(", "))
        }
        ExprKind::MapEnum(pairs) => {
            if pairs.is_empty() {
                "{|->}".to_string()
            } else {
                let inner = pairs
                    .iter()
                    .map(|(k, v)| {
                        format!("{} |-> {}", expr(k, level::IMPLIES), expr(v, level::IMPLIES))
                    })
                    .collect::<Vec<_>>()
                    .join(", ");
                format!("{{{}}}", inner)
            }
        }
        ExprKind::Apply { callee, args } => {
            let inner =
                args.iter().map(|a| expr(a, level::GREEDY)).collect::<Vec<_>>().join(", ");
            format!("{}({})", callee, inner)
        }
        ExprKind::RecordCtor { tag, args } => {
            let inner =
                args.iter().map(|a| expr(a, level::GREEDY)).collect::<Vec<_>>().join(", ");
            format!("mk_{}({})", tag, inner)
        }
        ExprKind::FieldSelect { base, field } => {
            format!("{}.{}", expr(base, level::POSTFIX), field)
        }
        ExprKind::TypeJudgement { expr: inner, target } => {
            let name = match &target.kind {
                TypeExprKind::Basic(b) => b.name().to_string(),
                TypeExprKind::Named(n) => n.clone(),
                other => format!("{:?}", other),
            };
            format!("is_{}({})", name, expr(inner, level::GREEDY))
        }
    };
    if own < required {
        format!("({})", body)
    } else {
        body
    }
}

/// Type precedence: function arrows bind loosest, then products, then the
/// prefix constructors.
mod tylevel {
    pub const FUNC: u8 = 0;
    pub const PRODUCT: u8 = 1;
    pub const PREFIX: u8 = 2;
}

fn type_expr(t: &TypeExpr, required: u8) -> String {
    let (own, body) = match &t.kind {
        TypeExprKind::Basic(b) => (tylevel::PREFIX + 1, b.name().to_string()),
        TypeExprKind::Quote(q) => (tylevel::PREFIX + 1, q.clone()),
        TypeExprKind::QuoteUnion(members) => (tylevel::PREFIX + 1, members.join(" | ")),
        TypeExprKind::Named(n) => (tylevel::PREFIX + 1, n.clone()),
        TypeExprKind::Optional(inner) => {
            (tylevel::PREFIX + 1, format!("[{}]", type_expr(inner, tylevel::FUNC)))
        }
        TypeExprKind::Set(inner) => {
            (tylevel::PREFIX, format!("set of {}", type_expr(inner, tylevel::PREFIX)))
        }
        TypeExprKind::Seq(inner) => {
            (tylevel::PREFIX, format!("seq of {}", type_expr(inner, tylevel::PREFIX)))
        }
        TypeExprKind::Map(k, v) => (
            tylevel::PREFIX,
            format!("map {} to {}", type_expr(k, tylevel::PREFIX), type_expr(v, tylevel::PREFIX)),
        ),
        TypeExprKind::Product(components) => (
            tylevel::PRODUCT,
            components
                .iter()
                .map(|c| type_expr(c, tylevel::PREFIX))
                .collect::<Vec<_>>()
                .join(" * "),
        ),
        TypeExprKind::Func { params, result } => {
            let lhs = if params.is_empty() {
                "()".to_string()
            } else {
                params
                    .iter()
                    .map(|p| type_expr(p, tylevel::PREFIX))
                    .collect::<Vec<_>>()
                    .join(" * ")
            };
            (tylevel::FUNC, format!("{} -> {}", lhs, type_expr(result, tylevel::FUNC)))
        }
        TypeExprKind::Composite { tag, fields } => {
            // Only legal as a type-definition body; rendered there.
            let inner = fields
                .iter()
                .map(|(name, ty)| format!("{} : {}", name, type_expr(ty, tylevel::PRODUCT)))
                .collect::<Vec<_>>()
                .join(" ");
            (tylevel::FUNC, format!("{} :: {}", tag, inner))
        }
    };
    if own < required {
        format!("({})", body)
    } else {
        body
    }
}

fn signature(param_types: &[TypeExpr], result: &TypeExpr, arrow: &str) -> String {
    let lhs = if param_types.is_empty() {
        "()".to_string()
    } else {
        param_types
            .iter()
            .map(|p| type_expr(p, tylevel::PREFIX))
            .collect::<Vec<_>>()
            .join(" * ")
    };
    format!("{} {} {}", lhs, arrow, type_expr(result, tylevel::FUNC))
}

fn type_def_line(td: &TypeDef) -> String {
    let mut line = match &td.body.kind {
        TypeExprKind::Composite { fields, .. } => {
            let inner = fields
                .iter()
                .map(|(name, ty)| format!("{} : {}", name, type_expr(ty, tylevel::PRODUCT)))
                .collect::<Vec<_>>()
                .join(" ");
            format!("  {} {} :: {}", td.access, td.name, inner)
        }
        _ => format!("  {} {} = {}", td.access, td.name, type_expr(&td.body, tylevel::FUNC)),
    };
    if let Some((binder, inv)) = &td.invariant {
        line.push_str(&format!(" inv {} == {}", binder, expr(inv, level::GREEDY)));
    }
    line.push(';');
    line
}

fn routine_lines(
    out: &mut Vec<String>,
    access: Access,
    name: &str,
    param_types: &[TypeExpr],
    result_type: &TypeExpr,
    params: &[String],
    body: &Expr,
    pre: &Option<Expr>,
    post: &Option<Expr>,
    arrow: &str,
) {
    out.push(format!("  {} {} : {}", access, name, signature(param_types, result_type, arrow)));
    let mut def = format!("  {}({}) == {}", name, params.join(", "), expr(body, level::GREEDY));
    if let Some(pre) = pre {
        def.push_str(&format!(" pre {}", expr(pre, level::GREEDY)));
    }
    if let Some(post) = post {
        def.push_str(&format!(" post {}", expr(post, level::GREEDY)));
    }
    def.push(';');
    out.push(def);
}

/// Render a class back to concrete syntax in the module grammar.
pub fn pretty_print(c: &ClassDef) -> String {
    let mut lines = Vec::new();
    let header = if c.superclasses.is_empty() {
        format!("class {}", c.name)
    } else {
        format!("class {} is subclass of {}", c.name, c.superclasses.join(", "))
    };
    lines.push(header);
    if !c.value_defs.is_empty() {
        lines.push("values".to_string());
        for vd in &c.value_defs {
            let ty = match &vd.declared_type {
                Some(t) => format!(" : {}", type_expr(t, tylevel::FUNC)),
                None => String::new(),
            };
            lines.push(format!(
                "  {} {}{} = {};",
                vd.access,
                vd.name,
                ty,
                expr(&vd.value, level::GREEDY)
            ));
        }
    }
    if !c.type_defs.is_empty() {
        lines.push("types".to_string());
        for td in &c.type_defs {
            lines.push(type_def_line(td));
        }
    }
    if !c.instance_vars.is_empty() {
        lines.push("instance variables".to_string());
        for iv in &c.instance_vars {
            let init = match &iv.init {
                Some(e) => format!(" := {}", expr(e, level::GREEDY)),
                None => String::new(),
            };
            lines.push(format!(
                "  {} {} : {}{};",
                iv.access,
                iv.name,
                type_expr(&iv.declared_type, tylevel::FUNC),
                init
            ));
        }
    }
    if let Some(inv) = &c.invariant {
        lines.push(format!(
            "inv {}({}) == {}",
            c.name,
            inv.binder,
            expr(&inv.expr, level::GREEDY)
        ));
    }
    if !c.function_defs.is_empty() {
        lines.push("functions".to_string());
        for f in &c.function_defs {
            routine_lines(
                &mut lines,
                f.access,
                &f.name,
                &f.param_types,
                &f.result_type,
                &f.params,
                &f.body,
                &f.pre,
                &f.post,
                "->",
            );
        }
    }
    if !c.operations.is_empty() {
        lines.push("operations".to_string());
        for op in &c.operations {
            routine_lines(
                &mut lines,
                op.access,
                &op.name,
                &op.param_types,
                &op.result_type,
                &op.params,
                &op.body,
                &op.pre,
                &op.post,
                "==>",
            );
        }
    }
    lines.push(format!("end {}", c.name));
    lines.join("\n")
}
