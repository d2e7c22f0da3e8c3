//! Specification-based test-oracle toolkit for a VDM++ subset.
//!
//! The pipeline: parse a specification ([`parser`]), evaluate it directly to
//! produce expected results with contract checking ([`eval`]), map its types
//! and class structure to a language-neutral target model ([`optimize`]),
//! emit oracle-class source skeletons ([`emit`]), and run test suites
//! through the comparator and oracle manager ([`harness`]).

pub mod ast;
pub mod emit;
pub mod eval;
pub mod harness;
pub mod lexer;
pub mod optimize;
pub mod parser;
pub mod pretty;
pub mod resolve;
pub mod value;

pub use ast::{ast_equal, ClassDef, Expr, SpecFile, TypeExpr};
pub use eval::{
    call_function, eval_expr, expected_result, invariant_predicate, type_membership, EvalConfig,
    EvalError, InputToken, OracleOutcome,
};
pub use lexer::{detokenize, tokenize, Diagnostic, Token};
pub use optimize::{map_class, map_type, TargetClassModel, TargetType};
pub use parser::{parse_class, parse_source, parse_type_expr};
pub use pretty::pretty_print;
pub use resolve::ResolvedClass;
pub use value::Value;
