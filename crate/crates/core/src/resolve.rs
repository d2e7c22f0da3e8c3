//! Superclass flattening and post-parse validation.
//!
//! [`ResolvedClass`] is the evaluation context: one class with inherited
//! members folded in, constants evaluated, and the invariant chain collected
//! (own invariant first, then superclass invariants).

use crate::ast::*;
use crate::lexer::Diagnostic;
use crate::value::Value;

/// A class ready for evaluation.
#[derive(Debug, Clone)]
pub struct ResolvedClass {
    /// Flattened view: superclass members appended after the class's own,
    /// with shadowed members dropped.
    pub class: ClassDef,
    /// Invariant chain: the class's own invariant, then inherited ones.
    pub invariants: Vec<InvariantDef>,
    /// Evaluated value definitions and initialized instance variables.
    consts: Vec<(String, Value)>,
}

impl ResolvedClass {
    /// Flatten `name` against the other classes in `file`, evaluate its
    /// constant definitions, and type-check instance-variable initializers.
    pub fn resolve(file: &SpecFile, name: &str) -> Result<ResolvedClass, Diagnostic> {
        let (class, invariants) = flatten(file, name, &mut Vec::new())?;
        let mut resolved = ResolvedClass { class, invariants, consts: Vec::new() };

        // Value definitions may reference one another in any order; iterate
        // until no further definition evaluates.
        let mut remaining: Vec<usize> = (0..resolved.class.value_defs.len()).collect();
        let mut last_error: Option<(usize, crate::eval::EvalError)> = None;
        while !remaining.is_empty() {
            let mut next = Vec::new();
            let mut progressed = false;
            for &i in &remaining {
                let vd = resolved.class.value_defs[i].clone();
                match crate::eval::eval_expr(&resolved, &[], &vd.value) {
                    Ok(v) => {
                        if let Some(ty) = &vd.declared_type {
                            if !crate::eval::type_membership(&v, ty, &resolved) {
                                return Err(Diagnostic::error(
                                    format!(
                                        "value '{}' ({}) does not satisfy its declared type",
                                        vd.name, v
                                    ),
                                    vd.span.line,
                                    vd.span.column,
                                ));
                            }
                        }
                        resolved.consts.push((vd.name.clone(), v));
                        progressed = true;
                    }
                    Err(e) => {
                        last_error = Some((i, e));
                        next.push(i);
                    }
                }
            }
            if !progressed {
                let (i, e) = last_error.expect("no progress implies an error");
                let vd = &resolved.class.value_defs[i];
                return Err(Diagnostic::error(
                    format!("value '{}' failed to evaluate: {}", vd.name, e.message),
                    vd.span.line,
                    vd.span.column,
                ));
            }
            remaining = next;
        }

        for i in 0..resolved.class.instance_vars.len() {
            let iv = resolved.class.instance_vars[i].clone();
            let Some(init) = &iv.init else { continue };
            let v = crate::eval::eval_expr(&resolved, &[], init).map_err(|e| {
                Diagnostic::error(
                    format!("initializer of '{}' failed to evaluate: {}", iv.name, e.message),
                    iv.span.line,
                    iv.span.column,
                )
            })?;
            if !crate::eval::type_membership(&v, &iv.declared_type, &resolved) {
                return Err(Diagnostic::error(
                    format!(
                        "initializer of '{}' ({}) does not type-check against its declared type",
                        iv.name, v
                    ),
                    iv.span.line,
                    iv.span.column,
                ));
            }
            resolved.consts.push((iv.name.clone(), v));
        }
        Ok(resolved)
    }

    /// Resolve a standalone class with no superclasses to chase.
    pub fn single(class: ClassDef) -> Result<ResolvedClass, Diagnostic> {
        let name = class.name.clone();
        let file = SpecFile { classes: vec![class] };
        ResolvedClass::resolve(&file, &name)
    }

    pub fn lookup_const(&self, name: &str) -> Option<&Value> {
        if let Some((_, v)) = self.consts.iter().find(|(n, _)| n == name) {
            return Some(v);
        }
        self.consts
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, v)| v)
    }

    pub fn find_operation(&self, name: &str) -> Option<&OperationDef> {
        self.class.operations.iter().find(|o| o.name == name).or_else(|| {
            self.class
                .operations
                .iter()
                .find(|o| o.name.eq_ignore_ascii_case(name))
        })
    }

    /// The declared state type of the class, used as the membership half of
    /// the synthesized `is_ClassName` predicate: the type of the single
    /// instance variable if there is exactly one, otherwise the body of a
    /// type definition named `<class>_<invariant binder>` (as in
    /// `triangle_sides` for class `Triangle` with binder `sides`).
    pub fn state_type(&self) -> Option<&TypeExpr> {
        if self.class.instance_vars.len() == 1 {
            return Some(&self.class.instance_vars[0].declared_type);
        }
        let binder = self
            .class
            .invariant
            .as_ref()
            .map(|inv| inv.binder.as_str())
            .or_else(|| self.invariants.first().map(|inv| inv.binder.as_str()))?;
        let wanted = format!("{}_{}", self.class.name, binder);
        self.class
            .type_defs
            .iter()
            .find(|td| td.name.eq_ignore_ascii_case(&wanted))
            .map(|td| &td.body)
    }
}

fn flatten(
    file: &SpecFile,
    name: &str,
    visiting: &mut Vec<String>,
) -> Result<(ClassDef, Vec<InvariantDef>), Diagnostic> {
    let class = file.find_class(name).ok_or_else(|| {
        Diagnostic::error(format!("unknown class '{}'", name), 1, 1)
    })?;
    let lower = class.name.to_ascii_lowercase();
    if visiting.contains(&lower) {
        return Err(Diagnostic::error(
            format!("inheritance cycle through class '{}'", class.name),
            class.span.line,
            class.span.column,
        ));
    }
    visiting.push(lower);
    let mut flat = class.clone();
    let mut invariants: Vec<InvariantDef> = class.invariant.clone().into_iter().collect();
    for superclass in &class.superclasses {
        if file.find_class(superclass).is_none() {
            visiting.pop();
            return Err(Diagnostic::error(
                format!("unknown superclass '{}' of class '{}'", superclass, class.name),
                class.span.line,
                class.span.column,
            ));
        }
        let (super_flat, super_invs) = flatten(file, superclass, visiting)?;
        merge_members(&mut flat, super_flat);
        invariants.extend(super_invs);
    }
    visiting.pop();
    Ok((flat, invariants))
}

/// Append the superclass's members that the subclass does not shadow.
/// Functions shadow by name and parameter-type list, everything else by
/// name alone.
fn merge_members(sub: &mut ClassDef, sup: ClassDef) {
    for td in sup.type_defs {
        if sub.find_type_def(&td.name).is_none() {
            sub.type_defs.push(td);
        }
    }
    for vd in sup.value_defs {
        if sub.find_value_def(&vd.name).is_none() {
            sub.value_defs.push(vd);
        }
    }
    for iv in sup.instance_vars {
        if sub.find_instance_var(&iv.name).is_none() {
            sub.instance_vars.push(iv);
        }
    }
    for f in sup.function_defs {
        let shadowed = sub
            .function_defs
            .iter()
            .any(|own| own.name.eq_ignore_ascii_case(&f.name) && own.param_types == f.param_types);
        if !shadowed {
            sub.function_defs.push(f);
        }
    }
    for op in sup.operations {
        let shadowed = sub
            .operations
            .iter()
            .any(|own| own.name.eq_ignore_ascii_case(&op.name) && own.param_types == op.param_types);
        if !shadowed {
            sub.operations.push(op);
        }
    }
}

/// Run every post-parse check over a file; any `Error`-severity diagnostic
/// makes the parse fail.
pub fn validate_file(file: &SpecFile) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    for (i, class) in file.classes.iter().enumerate() {
        if file.classes[..i]
            .iter()
            .any(|other| other.name.eq_ignore_ascii_case(&class.name))
        {
            diags.push(Diagnostic::error(
                format!("duplicate class name '{}'", class.name),
                class.span.line,
                class.span.column,
            ));
        }
    }
    if !diags.is_empty() {
        return diags;
    }

    for class in &file.classes {
        check_duplicate_members(class, &mut diags);
        check_alias_cycles(class, &mut diags);
        if !diags.is_empty() {
            continue;
        }
        match ResolvedClass::resolve(file, &class.name) {
            Ok(resolved) => {
                check_type_references(&resolved, &mut diags);
                check_expressions(file, &resolved, class, &mut diags);
            }
            Err(d) => diags.push(d),
        }
    }
    diags
}

fn check_duplicate_members(class: &ClassDef, diags: &mut Vec<Diagnostic>) {
    let mut flag_dups = |names: Vec<(&String, Span)>, category: &str| {
        for (i, (name, span)) in names.iter().enumerate() {
            if names[..i].iter().any(|(n, _)| n == name) {
                diags.push(Diagnostic::error(
                    format!("duplicate {} '{}'", category, name),
                    span.line,
                    span.column,
                ));
            }
        }
    };
    flag_dups(
        class.value_defs.iter().map(|v| (&v.name, v.span)).collect(),
        "value definition",
    );
    flag_dups(
        class.type_defs.iter().map(|t| (&t.name, t.span)).collect(),
        "type definition",
    );
    flag_dups(
        class.instance_vars.iter().map(|v| (&v.name, v.span)).collect(),
        "instance variable",
    );
    for (i, f) in class.function_defs.iter().enumerate() {
        if class.function_defs[..i]
            .iter()
            .any(|other| other.name == f.name && other.param_types == f.param_types)
        {
            diags.push(Diagnostic::error(
                format!("duplicate overload of function '{}'", f.name),
                f.span.line,
                f.span.column,
            ));
        }
    }
    for (i, op) in class.operations.iter().enumerate() {
        if class.operations[..i]
            .iter()
            .any(|other| other.name == op.name && other.param_types == op.param_types)
        {
            diags.push(Diagnostic::error(
                format!("duplicate overload of operation '{}'", op.name),
                op.span.line,
                op.span.column,
            ));
        }
    }
}

/// A chain of pure `name = othername` aliases must not loop.
fn check_alias_cycles(class: &ClassDef, diags: &mut Vec<Diagnostic>) {
    for td in &class.type_defs {
        let mut seen = vec![td.name.to_ascii_lowercase()];
        let mut current = td;
        while let TypeExprKind::Named(next) = &current.body.kind {
            let Some(next_td) = class.find_type_def(next) else { break };
            let lower = next_td.name.to_ascii_lowercase();
            if seen.contains(&lower) {
                diags.push(Diagnostic::error(
                    format!("cyclic type alias through '{}'", td.name),
                    td.span.line,
                    td.span.column,
                ));
                break;
            }
            seen.push(lower);
            current = next_td;
        }
    }
}

fn check_type_references(resolved: &ResolvedClass, diags: &mut Vec<Diagnostic>) {
    let class = &resolved.class;
    for td in &class.type_defs {
        walk_type(resolved, &td.body, diags);
    }
    for vd in &class.value_defs {
        if let Some(ty) = &vd.declared_type {
            walk_type(resolved, ty, diags);
        }
    }
    for iv in &class.instance_vars {
        walk_type(resolved, &iv.declared_type, diags);
    }
    for f in &class.function_defs {
        for ty in &f.param_types {
            walk_type(resolved, ty, diags);
        }
        walk_type(resolved, &f.result_type, diags);
    }
    for op in &class.operations {
        for ty in &op.param_types {
            walk_type(resolved, ty, diags);
        }
        walk_type(resolved, &op.result_type, diags);
    }
}

fn walk_type(resolved: &ResolvedClass, t: &TypeExpr, diags: &mut Vec<Diagnostic>) {
    match &t.kind {
        TypeExprKind::Named(name) => {
            if resolved.class.find_type_def(name).is_none() {
                diags.push(Diagnostic::error(
                    format!("unresolved type reference '{}'", name),
                    t.span.line,
                    t.span.column,
                ));
            }
        }
        TypeExprKind::Set(inner)
        | TypeExprKind::Seq(inner)
        | TypeExprKind::Optional(inner) => walk_type(resolved, inner, diags),
        TypeExprKind::Map(k, v) => {
            walk_type(resolved, k, diags);
            walk_type(resolved, v, diags);
        }
        TypeExprKind::Product(components) => {
            for c in components {
                walk_type(resolved, c, diags);
            }
        }
        TypeExprKind::Composite { fields, .. } => {
            for (_, ty) in fields {
                walk_type(resolved, ty, diags);
            }
        }
        TypeExprKind::Func { params, result } => {
            for p in params {
                walk_type(resolved, p, diags);
            }
            walk_type(resolved, result, diags);
        }
        TypeExprKind::Basic(_) | TypeExprKind::Quote(_) | TypeExprKind::QuoteUnion(_) => {}
    }
}

struct ExprChecker<'a> {
    file: &'a SpecFile,
    resolved: &'a ResolvedClass,
    locals: Vec<String>,
    allow_result: bool,
    diags: &'a mut Vec<Diagnostic>,
}

impl ExprChecker<'_> {
    fn resolves_local(&self, name: &str) -> bool {
        self.locals.iter().any(|l| l == name)
            || self.locals.iter().any(|l| l.eq_ignore_ascii_case(name))
    }

    fn resolves_member(&self, name: &str) -> bool {
        let class = &self.resolved.class;
        class.find_value_def(name).is_some()
            || class.find_instance_var(name).is_some()
            || !class.find_functions(name).is_empty()
            || self.resolved.find_operation(name).is_some()
            || class.find_type_def(name).is_some()
    }

    fn check_name(&mut self, name: &str, span: Span) {
        if name == "RESULT" {
            if !self.allow_result {
                self.diags.push(Diagnostic::error(
                    "'RESULT' may only appear in postconditions",
                    span.line,
                    span.column,
                ));
            }
            return;
        }
        if !self.resolves_local(name) && !self.resolves_member(name) {
            self.diags.push(Diagnostic::error(
                format!("unresolved identifier '{}'", name),
                span.line,
                span.column,
            ));
        }
    }

    fn check(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Literal(_) => {}
            ExprKind::Var(name) => self.check_name(name, e.span),
            ExprKind::Unary(_, inner) => self.check(inner),
            ExprKind::Binary(_, l, r) => {
                self.check(l);
                self.check(r);
            }
            ExprKind::IfThenElse { cond, then_branch, else_branch } => {
                self.check(cond);
                self.check(then_branch);
                self.check(else_branch);
            }
            ExprKind::Cases { scrutinee, branches, others } => {
                self.check(scrutinee);
                for (pattern, result) in branches {
                    self.check(pattern);
                    self.check(result);
                }
                if let Some(other) = others {
                    self.check(other);
                }
            }
            ExprKind::LetIn { bindings, body } => {
                let depth = self.locals.len();
                for (name, value) in bindings {
                    self.check(value);
                    self.locals.push(name.clone());
                }
                self.check(body);
                self.locals.truncate(depth);
            }
            ExprKind::Quantifier { binder, domain, predicate, .. } => {
                self.check(domain);
                self.locals.push(binder.clone());
                self.check(predicate);
                self.locals.pop();
            }
            ExprKind::SetEnum(items) | ExprKind::SeqEnum(items) => {
                for item in items {
                    self.check(item);
                }
            }
            ExprKind::MapEnum(pairs) => {
                for (k, v) in pairs {
                    self.check(k);
                    self.check(v);
                }
            }
            ExprKind::Apply { callee, args } => {
                self.check_name(callee, e.span);
                for a in args {
                    self.check(a);
                }
            }
            ExprKind::RecordCtor { tag, args } => {
                if !tag.eq_ignore_ascii_case("token") {
                    match self.resolved.class.find_type_def(tag) {
                        Some(td) => {
                            if let TypeExprKind::Composite { fields, .. } = &td.body.kind {
                                if fields.len() != args.len() {
                                    self.diags.push(Diagnostic::error(
                                        format!(
                                            "mk_{} expects {} field(s), got {}",
                                            tag,
                                            fields.len(),
                                            args.len()
                                        ),
                                        e.span.line,
                                        e.span.column,
                                    ));
                                }
                            }
                        }
                        None => self.diags.push(Diagnostic::error(
                            format!("no composite type '{}' for mk_{}", tag, tag),
                            e.span.line,
                            e.span.column,
                        )),
                    }
                }
                for a in args {
                    self.check(a);
                }
            }
            ExprKind::FieldSelect { base, .. } => self.check(base),
            ExprKind::TypeJudgement { expr, target } => {
                self.check(expr);
                if let TypeExprKind::Named(name) = &target.kind {
                    let in_scope = self.resolved.class.find_type_def(name).is_some()
                        || self.file.find_class(name).is_some();
                    if !in_scope {
                        self.diags.push(Diagnostic::error(
                            format!("'is_{}' does not name a type or class in scope", name),
                            target.span.line,
                            target.span.column,
                        ));
                    }
                }
            }
        }
    }
}

fn check_expressions(
    file: &SpecFile,
    resolved: &ResolvedClass,
    class: &ClassDef,
    diags: &mut Vec<Diagnostic>,
) {
    let run = |locals: Vec<String>, allow_result: bool, e: &Expr, diags: &mut Vec<Diagnostic>| {
        let mut checker = ExprChecker { file, resolved, locals, allow_result, diags };
        checker.check(e);
    };
    for vd in &class.value_defs {
        run(Vec::new(), false, &vd.value, diags);
    }
    for td in &class.type_defs {
        if let Some((binder, inv)) = &td.invariant {
            run(vec![binder.clone()], false, inv, diags);
        }
    }
    for iv in &class.instance_vars {
        if let Some(init) = &iv.init {
            run(Vec::new(), false, init, diags);
        }
    }
    if let Some(inv) = &class.invariant {
        run(vec![inv.binder.clone()], false, &inv.expr, diags);
    }
    let routines = class
        .function_defs
        .iter()
        .map(|f| (&f.params, &f.body, &f.pre, &f.post))
        .chain(class.operations.iter().map(|o| (&o.params, &o.body, &o.pre, &o.post)));
    for (params, body, pre, post) in routines {
        run(params.clone(), false, body, diags);
        if let Some(pre) = pre {
            run(params.clone(), false, pre, diags);
        }
        if let Some(post) = post {
            run(params.clone(), true, post, diags);
        }
    }
}
