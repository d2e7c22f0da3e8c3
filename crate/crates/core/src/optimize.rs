//! The optimization phase: maps specification types and class structure to
//! a language-neutral target model consumed by the emitter.
//!
//! Mapping of basic types: bool stays Bool; nat1, nat, and int collapse to
//! Int; rat and real to Float; char to Char; a quote union becomes an
//! Enumeration (member order preserved from the source, so the first quote
//! is member 0); token becomes a vector of strings. Target member names and
//! access levels equal their source counterparts; only the class name gains
//! the `Oracle_` prefix.

use thiserror::Error;

use crate::ast::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} (at {span})")]
pub struct MappingError {
    pub message: String,
    pub span: Span,
}

impl MappingError {
    fn new(message: impl Into<String>, span: Span) -> Self {
        MappingError { message: message.into(), span }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetType {
    Bool,
    Int,
    Float,
    Char,
    Enumeration { name: String, members: Vec<String> },
    StringVector,
    SetOf(Box<TargetType>),
    VectorOf(Box<TargetType>),
    MapOf(Box<TargetType>, Box<TargetType>),
    Struct { name: String, fields: Vec<(String, TargetType)> },
    OptionalOf(Box<TargetType>),
    /// A function-typed member maps to the type of its result; the emitter
    /// realizes the body as a recursive method.
    FunctionResult(Box<TargetType>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstantModel {
    pub name: String,
    pub access: Access,
    pub ty: TargetType,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldModel {
    pub name: String,
    pub access: Access,
    pub ty: TargetType,
    /// Initializer noted for constructor initialization.
    pub init: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodModel {
    pub name: String,
    pub access: Access,
    pub params: Vec<(String, TargetType)>,
    pub result: TargetType,
    pub body: Expr,
    pub pre: Option<Expr>,
    pub post: Option<Expr>,
    /// True for members that came from an operation definition (may act on
    /// state); the emitter guards these with invariant checks.
    pub is_operation: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvMethodModel {
    pub binder: String,
    pub state_type: TargetType,
    /// Source-level state type, kept so the emitter can synthesize the
    /// membership half of the check (e.g. non-negativity for nat).
    pub source_state_type: TypeExpr,
    pub expr: Expr,
}

/// Language-neutral model of one oracle class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetClassModel {
    /// Source class name prefixed `Oracle_`.
    pub name: String,
    pub source_name: String,
    pub enums: Vec<(String, Vec<String>)>,
    pub constants: Vec<ConstantModel>,
    pub fields: Vec<FieldModel>,
    pub methods: Vec<MethodModel>,
    pub inv_method: Option<InvMethodModel>,
    pub base_classes: Vec<String>,
}

/// Map one type expression. `ctx` supplies names for enumerations and
/// resolution for named types.
pub fn map_type(t: &TypeExpr, ctx: &ClassDef) -> Result<TargetType, MappingError> {
    map_type_inner(t, ctx, &mut Vec::new())
}

fn map_type_inner(
    t: &TypeExpr,
    ctx: &ClassDef,
    visiting: &mut Vec<String>,
) -> Result<TargetType, MappingError> {
    match &t.kind {
        TypeExprKind::Basic(b) => Ok(match b {
            BasicType::Bool => TargetType::Bool,
            BasicType::Nat1 | BasicType::Nat | BasicType::Int => TargetType::Int,
            BasicType::Rat | BasicType::Real => TargetType::Float,
            BasicType::Char => TargetType::Char,
            BasicType::Token => TargetType::StringVector,
        }),
        TypeExprKind::Quote(name) => Ok(TargetType::Enumeration {
            name: enum_name(ctx, t, || format!("{}_quote", name.to_lowercase())),
            members: vec![name.clone()],
        }),
        TypeExprKind::QuoteUnion(members) => Ok(TargetType::Enumeration {
            name: enum_name(ctx, t, || format!("{}_union", members[0].to_lowercase())),
            members: members.clone(),
        }),
        TypeExprKind::Set(elem) => {
            Ok(TargetType::SetOf(Box::new(map_type_inner(elem, ctx, visiting)?)))
        }
        TypeExprKind::Seq(elem) => {
            Ok(TargetType::VectorOf(Box::new(map_type_inner(elem, ctx, visiting)?)))
        }
        TypeExprKind::Map(k, v) => Ok(TargetType::MapOf(
            Box::new(map_type_inner(k, ctx, visiting)?),
            Box::new(map_type_inner(v, ctx, visiting)?),
        )),
        TypeExprKind::Product(components) => {
            let fields = components
                .iter()
                .enumerate()
                .map(|(i, c)| Ok((format!("item{}", i + 1), map_type_inner(c, ctx, visiting)?)))
                .collect::<Result<Vec<_>, MappingError>>()?;
            Ok(TargetType::Struct { name: struct_name(ctx, t, components.len()), fields })
        }
        TypeExprKind::Composite { tag, fields } => {
            let mapped = fields
                .iter()
                .map(|(name, ty)| Ok((name.clone(), map_type_inner(ty, ctx, visiting)?)))
                .collect::<Result<Vec<_>, MappingError>>()?;
            Ok(TargetType::Struct { name: tag.clone(), fields: mapped })
        }
        TypeExprKind::Optional(inner) => {
            Ok(TargetType::OptionalOf(Box::new(map_type_inner(inner, ctx, visiting)?)))
        }
        TypeExprKind::Func { result, .. } => {
            Ok(TargetType::FunctionResult(Box::new(map_type_inner(result, ctx, visiting)?)))
        }
        TypeExprKind::Named(name) => {
            let td = ctx.find_type_def(name).ok_or_else(|| {
                MappingError::new(format!("unresolved type reference '{}'", name), t.span)
            })?;
            let lower = td.name.to_ascii_lowercase();
            if visiting.contains(&lower) {
                return Err(MappingError::new(
                    format!("recursive type '{}' has no target mapping", td.name),
                    t.span,
                ));
            }
            visiting.push(lower);
            let mapped = match &td.body.kind {
                // The type definition supplies the enumeration/struct name.
                TypeExprKind::Quote(member) => Ok(TargetType::Enumeration {
                    name: td.name.clone(),
                    members: vec![member.clone()],
                }),
                TypeExprKind::QuoteUnion(members) => Ok(TargetType::Enumeration {
                    name: td.name.clone(),
                    members: members.clone(),
                }),
                TypeExprKind::Product(components) => {
                    let fields = components
                        .iter()
                        .enumerate()
                        .map(|(i, c)| {
                            Ok((format!("item{}", i + 1), map_type_inner(c, ctx, visiting)?))
                        })
                        .collect::<Result<Vec<_>, MappingError>>()?;
                    Ok(TargetType::Struct { name: td.name.clone(), fields })
                }
                _ => map_type_inner(&td.body, ctx, visiting),
            };
            visiting.pop();
            mapped
        }
    }
}

/// Prefer the name of a type definition whose body is this exact type;
/// otherwise fall back to a content-derived name.
fn enum_name(ctx: &ClassDef, t: &TypeExpr, fallback: impl Fn() -> String) -> String {
    ctx.type_defs
        .iter()
        .find(|td| td.body == *t)
        .map(|td| td.name.clone())
        .unwrap_or_else(fallback)
}

fn struct_name(ctx: &ClassDef, t: &TypeExpr, arity: usize) -> String {
    ctx.type_defs
        .iter()
        .find(|td| td.body == *t)
        .map(|td| td.name.clone())
        .unwrap_or_else(|| format!("tuple{}", arity))
}

/// Infer a constant's target type from its declared type, or from the shape
/// of a literal initializer.
fn constant_type(vd: &ValueDef, ctx: &ClassDef) -> Result<TargetType, MappingError> {
    if let Some(ty) = &vd.declared_type {
        return map_type(ty, ctx);
    }
    match &vd.value.kind {
        ExprKind::Literal(Literal::Bool(_)) => Ok(TargetType::Bool),
        ExprKind::Literal(Literal::Int(_)) => Ok(TargetType::Int),
        ExprKind::Literal(Literal::Real(_)) => Ok(TargetType::Float),
        ExprKind::Literal(Literal::Char(_)) => Ok(TargetType::Char),
        ExprKind::Literal(Literal::Quote(q)) => {
            for td in &ctx.type_defs {
                match &td.body.kind {
                    TypeExprKind::QuoteUnion(members) if members.contains(q) => {
                        return Ok(TargetType::Enumeration {
                            name: td.name.clone(),
                            members: members.clone(),
                        })
                    }
                    TypeExprKind::Quote(member) if member == q => {
                        return Ok(TargetType::Enumeration {
                            name: td.name.clone(),
                            members: vec![member.clone()],
                        })
                    }
                    _ => {}
                }
            }
            Err(MappingError::new(
                format!("no enumeration in scope contains quote '{}'", q),
                vd.span,
            ))
        }
        _ => Err(MappingError::new(
            format!("cannot infer a target type for value '{}'; annotate it", vd.name),
            vd.span,
        )),
    }
}

/// Map a whole class to its oracle-class model. Member names and access
/// levels carry over unchanged; functions become methods with their
/// contracts attached; the invariant becomes the `inv` method.
pub fn map_class(c: &ClassDef) -> Result<TargetClassModel, MappingError> {
    map_class_with_scope(c, c)
}

/// Like [`map_class`], but resolves type references against `scope` — a
/// flattened view that includes inherited type definitions — while mapping
/// only `c`'s own members.
pub fn map_class_with_scope(
    c: &ClassDef,
    scope: &ClassDef,
) -> Result<TargetClassModel, MappingError> {
    let mut enums = Vec::new();
    for td in &c.type_defs {
        match &td.body.kind {
            TypeExprKind::QuoteUnion(members) => {
                enums.push((td.name.clone(), members.clone()));
            }
            TypeExprKind::Quote(member) => {
                enums.push((td.name.clone(), vec![member.clone()]));
            }
            _ => {}
        }
    }

    let constants = c
        .value_defs
        .iter()
        .map(|vd| {
            Ok(ConstantModel {
                name: vd.name.clone(),
                access: vd.access,
                ty: constant_type(vd, scope)?,
                value: vd.value.clone(),
            })
        })
        .collect::<Result<Vec<_>, MappingError>>()?;

    let fields = c
        .instance_vars
        .iter()
        .map(|iv| {
            Ok(FieldModel {
                name: iv.name.clone(),
                access: iv.access,
                ty: map_type(&iv.declared_type, scope)?,
                init: iv.init.clone(),
            })
        })
        .collect::<Result<Vec<_>, MappingError>>()?;

    let mut methods = Vec::new();
    for f in &c.function_defs {
        methods.push(MethodModel {
            name: f.name.clone(),
            access: f.access,
            params: f
                .params
                .iter()
                .zip(&f.param_types)
                .map(|(name, ty)| Ok((name.clone(), map_type(ty, scope)?)))
                .collect::<Result<Vec<_>, MappingError>>()?,
            result: map_type(&f.result_type, scope)?,
            body: f.body.clone(),
            pre: f.pre.clone(),
            post: f.post.clone(),
            is_operation: false,
        });
    }
    for op in &c.operations {
        methods.push(MethodModel {
            name: op.name.clone(),
            access: op.access,
            params: op
                .params
                .iter()
                .zip(&op.param_types)
                .map(|(name, ty)| Ok((name.clone(), map_type(ty, scope)?)))
                .collect::<Result<Vec<_>, MappingError>>()?,
            result: map_type(&op.result_type, scope)?,
            body: op.body.clone(),
            pre: op.pre.clone(),
            post: op.post.clone(),
            is_operation: true,
        });
    }

    let inv_method = match &c.invariant {
        None => None,
        Some(inv) => {
            let source_state_type = state_type_in(c, scope).ok_or_else(|| {
                MappingError::new(
                    format!("cannot determine the state type for the invariant of '{}'", c.name),
                    inv.span,
                )
            })?;
            Some(InvMethodModel {
                binder: inv.binder.clone(),
                state_type: map_type(source_state_type, scope)?,
                source_state_type: source_state_type.clone(),
                expr: inv.expr.clone(),
            })
        }
    };

    Ok(TargetClassModel {
        name: format!("Oracle_{}", c.name),
        source_name: c.name.clone(),
        enums,
        constants,
        fields,
        methods,
        inv_method,
        base_classes: c.superclasses.iter().map(|s| format!("Oracle_{}", s)).collect(),
    })
}

/// The declared state type of a class: the single instance variable's type,
/// or the body of a type definition named `<class>_<invariant binder>`.
pub fn state_type_of(c: &ClassDef) -> Option<&TypeExpr> {
    state_type_in(c, c)
}

fn state_type_in<'a>(c: &'a ClassDef, scope: &'a ClassDef) -> Option<&'a TypeExpr> {
    if scope.instance_vars.len() == 1 {
        return Some(&scope.instance_vars[0].declared_type);
    }
    let binder = c.invariant.as_ref().map(|inv| inv.binder.as_str())?;
    let wanted = format!("{}_{}", c.name, binder);
    scope
        .type_defs
        .iter()
        .find(|td| td.name.eq_ignore_ascii_case(&wanted))
        .map(|td| &td.body)
}
