//! Runtime values under VDM semantics.
//!
//! All integer arithmetic is unbounded and rationals are exact. Integral
//! rationals normalize to [`Value::Int`], so the numeric tower has one
//! canonical representation per number and structural equality doubles as
//! numeric equality. Cross-variant equality is `false`, never an error.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, Zero};

use crate::ast::{Expr, ExprKind, Literal, UnaryOp};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Int(BigInt),
    /// Always a non-integral rational; integral results collapse to `Int`.
    Real(BigRational),
    Char(char),
    Quote(String),
    Token(String),
    Set(BTreeSet<Value>),
    Seq(Vec<Value>),
    Map(BTreeMap<Value, Value>),
    Record { tag: String, fields: Vec<Value> },
    /// A class function used as a value. Compared by name and arity.
    Closure { name: String, arity: usize },
    Nil,
}

impl Value {
    pub fn int(i: impl Into<BigInt>) -> Value {
        Value::Int(i.into())
    }

    /// Normalizing rational constructor: `6/2` is `Int 3`.
    pub fn from_rational(r: BigRational) -> Value {
        if r.is_integer() {
            Value::Int(r.to_integer())
        } else {
            Value::Real(r)
        }
    }

    pub fn quote(name: &str) -> Value {
        Value::Quote(name.to_string())
    }

    pub fn seq_of_ints<I: Into<BigInt>>(items: impl IntoIterator<Item = I>) -> Value {
        Value::Seq(items.into_iter().map(Value::int).collect())
    }

    /// Numeric view shared by `Int` and `Real`.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self {
            Value::Int(i) => Some(BigRational::from_integer(i.clone())),
            Value::Real(r) => Some(r.clone()),
            _ => None,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Real(_) => "real",
            Value::Char(_) => "char",
            Value::Quote(_) => "quote",
            Value::Token(_) => "token",
            Value::Set(_) => "set",
            Value::Seq(_) => "seq",
            Value::Map(_) => "map",
            Value::Record { .. } => "record",
            Value::Closure { .. } => "function",
            Value::Nil => "nil",
        }
    }
}

impl From<Literal> for Value {
    fn from(lit: Literal) -> Value {
        match lit {
            Literal::Bool(b) => Value::Bool(b),
            Literal::Int(i) => Value::Int(i),
            Literal::Real(r) => Value::from_rational(r),
            Literal::Char(c) => Value::Char(c),
            Literal::Quote(q) => Value::Quote(q),
            Literal::Nil => Value::Nil,
        }
    }
}

/// Render a rational exactly: as a terminating decimal when the reduced
/// denominator is of the form 2^a·5^b, otherwise as `p/q`.
pub(crate) fn render_rational(r: &BigRational) -> String {
    let num = r.numer();
    let den = r.denom();
    let mut twos = 0u32;
    let mut fives = 0u32;
    let mut rest = den.clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while (&rest % &two).is_zero() {
        rest /= &two;
        twos += 1;
    }
    while (&rest % &five).is_zero() {
        rest /= &five;
        fives += 1;
    }
    if rest.is_one() {
        let k = twos.max(fives);
        let scale = BigInt::from(10).pow(k);
        let scaled = (num * &scale) / den;
        let negative = scaled.is_negative();
        let digits = scaled.magnitude().to_string();
        let digits = if digits.len() <= k as usize {
            format!("{}{}", "0".repeat(k as usize + 1 - digits.len()), digits)
        } else {
            digits
        };
        let split = digits.len() - k as usize;
        let sign = if negative { "-" } else { "" };
        format!("{}{}.{}", sign, &digits[..split], &digits[split..])
    } else {
        format!("{}/{}", num, den)
    }
}

pub(crate) fn escape_char(c: char) -> String {
    match c {
        '\n' => "'\\n'".to_string(),
        '\t' => "'\\t'".to_string(),
        '\\' => "'\\\\'".to_string(),
        '\'' => "'\\''".to_string(),
        c => format!("'{}'", c),
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{}", b),
            Value::Int(i) => write!(f, "{}", i),
            Value::Real(r) => write!(f, "{}", render_rational(r)),
            Value::Char(c) => write!(f, "{}", escape_char(*c)),
            Value::Quote(q) => write!(f, "{}", q),
            Value::Token(t) => write!(f, "mk_token({})", t),
            Value::Set(s) => {
                write!(f, "{{")?;
                for (i, v) in s.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", v)?;
                }
                write!(f, "}}")
            }
            Value::Seq(s) => {
                write!(f, "[")?;
                for (i, v) in s.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", v)?;
                }
                write!(f, "]")
            }
            Value::Map(m) => {
                if m.is_empty() {
                    return write!(f, "{{|->}}");
                }
                write!(f, "{{")?;
                for (i, (k, v)) in m.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{} |-> {}", k, v)?;
                }
                write!(f, "}}")
            }
            Value::Record { tag, fields } => {
                write!(f, "mk_{}(", tag)?;
                for (i, v) in fields.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", v)?;
                }
                write!(f, ")")
            }
            Value::Closure { name, arity } => write!(f, "<function {}/{}>", name, arity),
            Value::Nil => write!(f, "nil"),
        }
    }
}

/// Decode a rendered value back into a [`Value`]. The grammar is the
/// constant fragment of the expression language, so anything [`Display`]
/// produces (except closures) round-trips. Used by the comparator to
/// interpret implementation output.
pub fn parse_rendered(text: &str) -> Option<Value> {
    let expr = crate::parser::parse_expr_text(text.trim()).ok()?;
    const_eval(&expr)
}

/// Evaluate the constant fragment: literals, enumerations, record and token
/// constructors, negation, and exact division (for `p/q` renderings).
fn const_eval(e: &Expr) -> Option<Value> {
    match &e.kind {
        ExprKind::Literal(lit) => Some(Value::from(lit.clone())),
        ExprKind::Unary(UnaryOp::Neg, inner) => match const_eval(inner)? {
            Value::Int(i) => Some(Value::Int(-i)),
            Value::Real(r) => Some(Value::from_rational(-r)),
            _ => None,
        },
        ExprKind::Binary(crate::ast::BinaryOp::Divide, lhs, rhs) => {
            let l = const_eval(lhs)?.as_rational()?;
            let r = const_eval(rhs)?.as_rational()?;
            if r.is_zero() {
                return None;
            }
            Some(Value::from_rational(l / r))
        }
        ExprKind::SetEnum(items) => {
            let mut set = BTreeSet::new();
            for item in items {
                set.insert(const_eval(item)?);
            }
            Some(Value::Set(set))
        }
        ExprKind::SeqEnum(items) => {
            items.iter().map(const_eval).collect::<Option<Vec<_>>>().map(Value::Seq)
        }
        ExprKind::MapEnum(pairs) => {
            let mut map = BTreeMap::new();
            for (k, v) in pairs {
                map.insert(const_eval(k)?, const_eval(v)?);
            }
            Some(Value::Map(map))
        }
        ExprKind::RecordCtor { tag, args } => {
            if tag.eq_ignore_ascii_case("token") && args.len() == 1 {
                return Some(Value::Token(const_eval(&args[0])?.to_string()));
            }
            let fields = args.iter().map(const_eval).collect::<Option<Vec<_>>>()?;
            Some(Value::Record { tag: tag.clone(), fields })
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integral_rationals_collapse_to_int() {
        let six_halves = BigRational::new(BigInt::from(6), BigInt::from(2));
        assert_eq!(Value::from_rational(six_halves), Value::int(3));
    }

    #[test]
    fn cross_variant_equality_is_false() {
        assert_ne!(Value::Bool(true), Value::quote("TRUE"));
        assert_ne!(Value::int(0), Value::Nil);
        assert_ne!(Value::Char('1'), Value::int(1));
    }

    #[test]
    fn rational_rendering_is_exact() {
        let half = Value::from_rational(BigRational::new(1.into(), 2.into()));
        assert_eq!(half.to_string(), "0.5");
        let third = Value::from_rational(BigRational::new(1.into(), 3.into()));
        assert_eq!(third.to_string(), "1/3");
        let neg = Value::from_rational(BigRational::new((-157).into(), 50.into()));
        assert_eq!(neg.to_string(), "-3.14");
    }

    #[test]
    fn rendering_round_trips_through_parse() {
        let values = vec![
            Value::int(42),
            Value::Int(BigInt::from(-7)),
            Value::quote("SCALENE"),
            Value::Bool(false),
            Value::Char('A'),
            Value::Nil,
            Value::from_rational(BigRational::new(1.into(), 3.into())),
            Value::Seq(vec![Value::int(1), Value::quote("X"), Value::Char('z')]),
            Value::Set([Value::int(2), Value::int(1)].into_iter().collect()),
            Value::Map([(Value::int(1), Value::Bool(true))].into_iter().collect()),
            Value::Record { tag: "pair".to_string(), fields: vec![Value::int(1), Value::int(2)] },
            Value::Token("42".to_string()),
        ];
        for v in values {
            let rendered = v.to_string();
            let decoded = parse_rendered(&rendered);
            assert_eq!(decoded.as_ref(), Some(&v), "render {rendered:?}");
        }
    }

    #[test]
    fn empty_map_renders_distinct_from_empty_set() {
        assert_eq!(Value::Map(BTreeMap::new()).to_string(), "{|->}");
        assert_eq!(Value::Set(BTreeSet::new()).to_string(), "{}");
        assert_eq!(parse_rendered("{|->}"), Some(Value::Map(BTreeMap::new())));
        assert_eq!(parse_rendered("{}"), Some(Value::Set(BTreeSet::new())));
    }
}
