//! Abstract syntax for the supported VDM++ subset.
//!
//! Every node that can be reported in a diagnostic carries a [`Span`].
//! Spans are deliberately excluded from equality: two trees that differ
//! only in source positions compare equal, which is what [`ast_equal`]
//! and the parse/pretty round-trip tests rely on.

use num_bigint::BigInt;
use num_rational::BigRational;

/// Line/column position of a node in its source text (both 1-based).
#[derive(Debug, Clone, Copy, Default, PartialOrd, Ord)]
pub struct Span {
    pub line: u32,
    pub column: u32,
}

impl Span {
    pub fn new(line: u32, column: u32) -> Self {
        Span { line, column }
    }
}

// All spans are equal to each other so that derived PartialEq on the
// enclosing nodes ignores source positions.
impl PartialEq for Span {
    fn eq(&self, _other: &Span) -> bool {
        true
    }
}
impl Eq for Span {}

impl std::fmt::Display for Span {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Member visibility. Defaults to `Private` wherever the source is silent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Access {
    Public,
    Private,
    Protected,
}

impl Default for Access {
    fn default() -> Self {
        Access::Private
    }
}

impl std::fmt::Display for Access {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Access::Public => write!(f, "public"),
            Access::Private => write!(f, "private"),
            Access::Protected => write!(f, "protected"),
        }
    }
}

/// The eight basic VDM types of the subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BasicType {
    Bool,
    Nat1,
    Nat,
    Int,
    Rat,
    Real,
    Char,
    Token,
}

impl BasicType {
    pub fn name(self) -> &'static str {
        match self {
            BasicType::Bool => "bool",
            BasicType::Nat1 => "nat1",
            BasicType::Nat => "nat",
            BasicType::Int => "int",
            BasicType::Rat => "rat",
            BasicType::Real => "real",
            BasicType::Char => "char",
            BasicType::Token => "token",
        }
    }

    /// Resolve a basic-type spelling, including the `N` alias for `nat`.
    pub fn from_name(name: &str) -> Option<BasicType> {
        match name.to_ascii_lowercase().as_str() {
            "bool" => Some(BasicType::Bool),
            "nat1" => Some(BasicType::Nat1),
            "nat" | "n" => Some(BasicType::Nat),
            "int" => Some(BasicType::Int),
            "rat" => Some(BasicType::Rat),
            "real" => Some(BasicType::Real),
            "char" => Some(BasicType::Char),
            "token" => Some(BasicType::Token),
            _ => None,
        }
    }
}

/// A type expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeExpr {
    pub kind: TypeExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeExprKind {
    Basic(BasicType),
    /// A single quote literal used as a type, e.g. `RED`.
    Quote(String),
    /// A union of two or more distinct quote literals.
    QuoteUnion(Vec<String>),
    Set(Box<TypeExpr>),
    Seq(Box<TypeExpr>),
    Map(Box<TypeExpr>, Box<TypeExpr>),
    /// `T1 * T2 * ...`, at least two components.
    Product(Vec<TypeExpr>),
    /// `Tag :: field1 : T1 field2 : T2 ...`
    Composite { tag: String, fields: Vec<(String, TypeExpr)> },
    /// `[T]`
    Optional(Box<TypeExpr>),
    /// `T1 * T2 -> R` in signature position.
    Func { params: Vec<TypeExpr>, result: Box<TypeExpr> },
    /// Reference to a type definition in scope.
    Named(String),
}

impl TypeExpr {
    pub fn new(kind: TypeExprKind, span: Span) -> Self {
        TypeExpr { kind, span }
    }

    pub fn basic(b: BasicType) -> Self {
        TypeExpr { kind: TypeExprKind::Basic(b), span: Span::default() }
    }
}

/// Literal constants that can appear directly in source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Bool(bool),
    Int(BigInt),
    /// Exact rational; produced by decimal literals like `3.14`.
    Real(BigRational),
    Char(char),
    Quote(String),
    Nil,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Not,
    Neg,
    Len,
    Hd,
    Tl,
    Elems,
    Inds,
    Card,
    Dom,
    Rng,
    Floor,
    Abs,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Not => "not",
            UnaryOp::Neg => "-",
            UnaryOp::Len => "len",
            UnaryOp::Hd => "hd",
            UnaryOp::Tl => "tl",
            UnaryOp::Elems => "elems",
            UnaryOp::Inds => "inds",
            UnaryOp::Card => "card",
            UnaryOp::Dom => "dom",
            UnaryOp::Rng => "rng",
            UnaryOp::Floor => "floor",
            UnaryOp::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Divide,
    IntDiv,
    Mod,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Implies,
    InSet,
    NotInSet,
    Union,
    Inter,
    SetDiff,
    Subset,
    PSubset,
    Concat,
    MapOverride,
}

impl BinaryOp {
    pub fn name(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Divide => "/",
            BinaryOp::IntDiv => "div",
            BinaryOp::Mod => "mod",
            BinaryOp::Eq => "=",
            BinaryOp::Neq => "<>",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::And => "and",
            BinaryOp::Or => "or",
            BinaryOp::Implies => "=>",
            BinaryOp::InSet => "in set",
            BinaryOp::NotInSet => "not in set",
            BinaryOp::Union => "union",
            BinaryOp::Inter => "inter",
            BinaryOp::SetDiff => "\\",
            BinaryOp::Subset => "subset",
            BinaryOp::PSubset => "psubset",
            BinaryOp::Concat => "^",
            BinaryOp::MapOverride => "++",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantifierKind {
    Forall,
    Exists,
}

/// An expression node. Equality ignores spans (see [`Span`]).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Literal(Literal),
    Var(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    IfThenElse { cond: Box<Expr>, then_branch: Box<Expr>, else_branch: Box<Expr> },
    /// First-match-wins on value equality of the branch patterns.
    Cases { scrutinee: Box<Expr>, branches: Vec<(Expr, Expr)>, others: Option<Box<Expr>> },
    LetIn { bindings: Vec<(String, Expr)>, body: Box<Expr> },
    Quantifier { kind: QuantifierKind, binder: String, domain: Box<Expr>, predicate: Box<Expr> },
    SetEnum(Vec<Expr>),
    SeqEnum(Vec<Expr>),
    MapEnum(Vec<(Expr, Expr)>),
    /// `callee(args)` — a function call, or application of a map/sequence/
    /// closure bound to `callee`.
    Apply { callee: String, args: Vec<Expr> },
    /// `mk_Tag(args)`
    RecordCtor { tag: String, args: Vec<Expr> },
    FieldSelect { base: Box<Expr>, field: String },
    /// `is_T(e)` type-membership judgement. The target may name a basic
    /// type, a type definition, or the enclosing class itself.
    TypeJudgement { expr: Box<Expr>, target: TypeExpr },
}

/// `name = value` constant definition from a `values` section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueDef {
    pub name: String,
    pub access: Access,
    pub declared_type: Option<TypeExpr>,
    pub value: Expr,
    pub span: Span,
}

/// `name = type` definition, optionally carrying its own invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDef {
    pub name: String,
    pub access: Access,
    pub body: TypeExpr,
    /// `inv binder == expr`
    pub invariant: Option<(String, Expr)>,
    pub span: Span,
}

/// An explicit function definition with optional pre/post conditions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDef {
    pub name: String,
    pub access: Access,
    pub param_types: Vec<TypeExpr>,
    pub result_type: TypeExpr,
    pub params: Vec<String>,
    pub body: Expr,
    pub pre: Option<Expr>,
    pub post: Option<Expr>,
    pub span: Span,
}

/// An instance variable with optional initializer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceVar {
    pub name: String,
    pub access: Access,
    pub declared_type: TypeExpr,
    pub init: Option<Expr>,
    pub span: Span,
}

/// A state-mutating operation definition. Operations are parsed and stored
/// structurally but are not evaluable; only functions are.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperationDef {
    pub name: String,
    pub access: Access,
    pub param_types: Vec<TypeExpr>,
    pub result_type: TypeExpr,
    pub params: Vec<String>,
    pub body: Expr,
    pub pre: Option<Expr>,
    pub post: Option<Expr>,
    pub span: Span,
}

/// The class invariant clause: `inv ClassName (binder) == expr`.
///
/// The binder is recorded explicitly; it is not guessed from state-variable
/// names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantDef {
    pub binder: String,
    pub expr: Expr,
    pub span: Span,
}

/// One parsed VDM++ class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDef {
    pub name: String,
    pub superclasses: Vec<String>,
    pub value_defs: Vec<ValueDef>,
    pub type_defs: Vec<TypeDef>,
    pub function_defs: Vec<FunctionDef>,
    pub instance_vars: Vec<InstanceVar>,
    pub operations: Vec<OperationDef>,
    pub invariant: Option<InvariantDef>,
    pub span: Span,
}

impl ClassDef {
    /// An empty class with the given name.
    pub fn empty(name: &str) -> Self {
        ClassDef {
            name: name.to_string(),
            superclasses: Vec::new(),
            value_defs: Vec::new(),
            type_defs: Vec::new(),
            function_defs: Vec::new(),
            instance_vars: Vec::new(),
            operations: Vec::new(),
            invariant: None,
            span: Span::default(),
        }
    }

    /// Look up a type definition by name. Resolution is exact-match first,
    /// then unique case-insensitive match; the source material capitalizes
    /// type references freely.
    pub fn find_type_def(&self, name: &str) -> Option<&TypeDef> {
        if let Some(td) = self.type_defs.iter().find(|td| td.name == name) {
            return Some(td);
        }
        let lower = name.to_ascii_lowercase();
        let mut hits = self.type_defs.iter().filter(|td| td.name.to_ascii_lowercase() == lower);
        match (hits.next(), hits.next()) {
            (Some(td), None) => Some(td),
            _ => None,
        }
    }

    /// All function definitions sharing `name` (overload set), same
    /// resolution rule as [`ClassDef::find_type_def`].
    pub fn find_functions(&self, name: &str) -> Vec<&FunctionDef> {
        let exact: Vec<_> = self.function_defs.iter().filter(|f| f.name == name).collect();
        if !exact.is_empty() {
            return exact;
        }
        let lower = name.to_ascii_lowercase();
        self.function_defs
            .iter()
            .filter(|f| f.name.to_ascii_lowercase() == lower)
            .collect()
    }

    pub fn find_value_def(&self, name: &str) -> Option<&ValueDef> {
        self.value_defs
            .iter()
            .find(|v| v.name == name)
            .or_else(|| {
                let lower = name.to_ascii_lowercase();
                self.value_defs.iter().find(|v| v.name.to_ascii_lowercase() == lower)
            })
    }

    pub fn find_instance_var(&self, name: &str) -> Option<&InstanceVar> {
        self.instance_vars
            .iter()
            .find(|v| v.name == name)
            .or_else(|| {
                let lower = name.to_ascii_lowercase();
                self.instance_vars.iter().find(|v| v.name.to_ascii_lowercase() == lower)
            })
    }
}

/// A parsed source file: one or more classes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpecFile {
    pub classes: Vec<ClassDef>,
}

impl SpecFile {
    pub fn find_class(&self, name: &str) -> Option<&ClassDef> {
        self.classes.iter().find(|c| c.name == name).or_else(|| {
            let lower = name.to_ascii_lowercase();
            self.classes.iter().find(|c| c.name.to_ascii_lowercase() == lower)
        })
    }
}

/// Structural equality up to source positions. Order of members within each
/// definition category is significant.
pub fn ast_equal(a: &ClassDef, b: &ClassDef) -> bool {
    a == b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nat() -> TypeExpr {
        TypeExpr::basic(BasicType::Nat)
    }

    #[test]
    fn spans_do_not_affect_equality() {
        let a = TypeExpr::new(TypeExprKind::Basic(BasicType::Nat), Span::new(1, 1));
        let b = TypeExpr::new(TypeExprKind::Basic(BasicType::Nat), Span::new(9, 40));
        assert_eq!(a, b);
    }

    #[test]
    fn member_order_is_significant() {
        let f = |name: &str| FunctionDef {
            name: name.to_string(),
            access: Access::Private,
            param_types: vec![nat()],
            result_type: nat(),
            params: vec!["x".to_string()],
            body: Expr::new(ExprKind::Var("x".to_string()), Span::default()),
            pre: None,
            post: None,
            span: Span::default(),
        };
        let mut a = ClassDef::empty("C");
        a.function_defs = vec![f("sum"), f("variety")];
        let mut b = ClassDef::empty("C");
        b.function_defs = vec![f("variety"), f("sum")];
        assert!(ast_equal(&a, &a));
        assert!(!ast_equal(&a, &b));
    }

    #[test]
    fn n_is_an_alias_for_nat() {
        assert_eq!(BasicType::from_name("N"), Some(BasicType::Nat));
        assert_eq!(BasicType::from_name("nat"), Some(BasicType::Nat));
        assert_eq!(BasicType::from_name("triangle"), None);
    }
}
