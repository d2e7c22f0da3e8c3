//! Recursive descent parser for the VDM++ subset, plus the post-parse
//! resolution checks that make a [`ClassDef`] well-formed.
//!
//! The accepted grammar is a minimal closed subset; anything outside it is
//! a parse error, never silent acceptance:
//!
//! ```text
//! file        := (typedef* classdef)+        leading type definitions fold
//!                                            into the class that follows
//! classdef    := 'class' NAME ['is' 'subclass' 'of' NAME (',' NAME)*]
//!                member* 'end' NAME
//! member      := 'values' valuedef*
//!              | 'types' typedef*
//!              | 'functions' functiondef*
//!              | 'operations' operationdef*
//!              | 'instance' 'variables' instvar*
//!              | invclause
//!              | typedef | instvar           bare members, before the
//!                                            first section keyword
//! valuedef    := [access] NAME [':' type] '=' expr [';']
//! typedef     := [access] NAME '=' type ['inv' NAME '==' expr] [';']
//!              | [access] NAME '::' (NAME ':' type)+ ['inv' NAME '==' expr] [';']
//! functiondef := [access] NAME ':' type '->' type
//!                NAME '(' [NAME (',' NAME)*] ')' '==' expr
//!                ['pre' expr] ['post' expr] [';']
//! operationdef:= as functiondef, with '==>' in place of '->'
//! instvar     := [access] NAME ':' type [':=' expr] [';']
//! invclause   := 'inv' NAME '(' NAME ')' '==' expr      first NAME is the
//!                                                       class name
//! access      := 'public' | 'private' | 'protected'     default private
//!
//! type        := startype ('*' startype)* ['->' type]
//! startype    := prefixtype ['*' ...]                   postfix '*' when no
//!                                                       type follows: seq of
//! prefixtype  := 'set' 'of' prefixtype
//!              | 'seq' 'of' prefixtype
//!              | 'map' prefixtype 'to' prefixtype
//!              | atomtype
//! atomtype    := BASIC | 'N'                            N aliases nat
//!              | QUOTE ('|' QUOTE)*                     quote unions only
//!              | NAME | '(' type ')' | '[' type ']'
//!
//! expr        := 'if' expr 'then' expr 'else' expr
//!              | 'let' NAME '=' expr (',' NAME '=' expr)* 'in' expr
//!              | 'cases' expr 'of' (expr '->' expr [','])+
//!                ['others' '->' expr] 'end'
//!              | ('forall'|'exists') NAME 'in' 'set' expr '.' expr
//!              | implies
//! implies     := disj ['=>' implies]
//! disj        := conj ('or' conj)*
//! conj        := negation ('and' negation)*
//! negation    := 'not' negation | relation
//! relation    := additive [RELOP additive]
//! RELOP       := '=' | '<>' | '<' | '<=' | '>' | '>=' | 'in set'
//!              | 'not in set' | 'subset' | 'psubset'
//! additive    := multiplicative (('+'|'-'|'union'|'\'|'^'|'++') multiplicative)*
//! multiplicative := prefix (('*'|'/'|'div'|'mod'|'inter') prefix)*
//! prefix      := ('len'|'hd'|'tl'|'elems'|'inds'|'card'|'dom'|'rng'
//!                |'floor'|'abs'|'-') prefix | postfix
//! postfix     := atom ('.' NAME)*                       field selection
//! atom        := NUMBER | CHARLIT | 'true' | 'false' | 'nil' | QUOTE
//!              | 'mk_'TAG '(' args ')' | 'is_'TYPE '(' expr ')'
//!              | NAME ['(' args ')'] | '(' expr ')'
//!              | '{' [expr (',' expr)*] '}'             set enumeration
//!              | '{' '|->' '}' | '{' expr '|->' expr (',' ...)* '}'
//!              | '[' [expr (',' expr)*] ']'             sequence enumeration
//! ```
//!
//! Notes on deliberate grammar decisions:
//! - `NAME` is an identifier, or an all-uppercase word in declaration
//!   position (so `class A end A` is legal even though `A` lexes as a
//!   quote literal).
//! - A `let` or quantifier body extends to the end of the enclosing
//!   expression, so `p and let x = e in q` parses as `p and (let ... in q)`.
//! - In a quantifier domain, `.` terminates the domain instead of selecting
//!   a field; parenthesize the domain to select fields there.
//! - Type-name references resolve exact-match first, then unique
//!   case-insensitive match, because the source material freely
//!   capitalizes references (`Triangle_sides` for `triangle_sides`).
//! - Unions of anything other than quote literals are rejected with a
//!   diagnostic rather than guessed at.
//! - The identifier prefixes `mk_` and `is_` are reserved for record
//!   construction and type-membership judgements.

use crate::ast::*;
use crate::lexer::{tokenize, Diagnostic, Token, TokenKind};

type PResult<T> = Result<T, Diagnostic>;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    /// When true, `.` does not select fields (quantifier-domain position).
    no_dot: bool,
}

impl Parser {
    fn new(tokens: Vec<Token>) -> Self {
        Parser { tokens, pos: 0, no_dot: false }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&Token> {
        self.tokens.get(self.pos + offset)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> Span {
        match self.peek() {
            Some(t) => Span::new(t.line, t.column),
            None => self
                .tokens
                .last()
                .map(|t| Span::new(t.line, t.column + t.text.chars().count() as u32))
                .unwrap_or(Span::new(1, 1)),
        }
    }

    fn err(&self, message: impl Into<String>) -> Diagnostic {
        let span = self.here();
        Diagnostic::error(message, span.line, span.column)
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Keyword && t.text.eq_ignore_ascii_case(kw))
    }

    fn at_keyword_at(&self, offset: usize, kw: &str) -> bool {
        matches!(self.peek_at(offset), Some(t) if t.kind == TokenKind::Keyword && t.text.eq_ignore_ascii_case(kw))
    }

    fn at_symbol(&self, sym: &str) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Symbol && t.text == sym)
    }

    fn at_symbol_at(&self, offset: usize, sym: &str) -> bool {
        matches!(self.peek_at(offset), Some(t) if t.kind == TokenKind::Symbol && t.text == sym)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_symbol(&mut self, sym: &str) -> bool {
        if self.at_symbol(sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<()> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.err(format!("expected keyword '{}', found {}", kw, self.describe_here())))
        }
    }

    fn expect_symbol(&mut self, sym: &str) -> PResult<()> {
        if self.eat_symbol(sym) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{}', found {}", sym, self.describe_here())))
        }
    }

    fn describe_here(&self) -> String {
        match self.peek() {
            Some(t) => format!("'{}'", t.text),
            None => "end of input".to_string(),
        }
    }

    /// A declaration-position name: an identifier, or an all-uppercase word.
    fn take_name(&mut self) -> PResult<String> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident || t.kind == TokenKind::QuoteLit => {
                Ok(self.bump().unwrap().text)
            }
            _ => Err(self.err(format!("expected a name, found {}", self.describe_here()))),
        }
    }

    fn at_ident_text(&self, text: &str) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Ident && t.text.eq_ignore_ascii_case(text))
    }

    // ------------------------------------------------------------------
    // Types
    // ------------------------------------------------------------------

    fn at_type_start(&self, offset: usize) -> bool {
        match self.peek_at(offset) {
            Some(t) => match t.kind {
                TokenKind::Ident | TokenKind::QuoteLit => true,
                TokenKind::Keyword => BasicType::from_name(&t.text).is_some(),
                TokenKind::Symbol => t.text == "(" || t.text == "[",
                _ => false,
            },
            None => false,
        }
    }

    fn parse_type(&mut self) -> PResult<TypeExpr> {
        let span = self.here();
        let mut components = vec![self.parse_star_type()?];
        while self.at_symbol("*") && self.at_type_start(1) {
            self.bump();
            components.push(self.parse_star_type()?);
        }
        if self.at_symbol("->") {
            self.bump();
            let result = self.parse_type()?;
            return Ok(TypeExpr::new(
                TypeExprKind::Func { params: components, result: Box::new(result) },
                span,
            ));
        }
        if self.at_symbol("|") {
            return Err(self.err(
                "general union types are not supported; only unions of quote literals",
            ));
        }
        if components.len() == 1 {
            Ok(components.pop().unwrap())
        } else {
            Ok(TypeExpr::new(TypeExprKind::Product(components), span))
        }
    }

    /// A type with postfix `*` (sequence-of) applied. `N*` is `seq of nat`;
    /// a `*` followed by another type is a product separator instead.
    fn parse_star_type(&mut self) -> PResult<TypeExpr> {
        let span = self.here();
        let mut ty = self.parse_prefix_type()?;
        while self.at_symbol("*") && !self.at_type_start(1) {
            self.bump();
            ty = TypeExpr::new(TypeExprKind::Seq(Box::new(ty)), span);
        }
        Ok(ty)
    }

    fn parse_prefix_type(&mut self) -> PResult<TypeExpr> {
        let span = self.here();
        if self.at_ident_text("set") && self.at_keyword_at(1, "of") {
            self.bump();
            self.bump();
            let elem = self.parse_prefix_type()?;
            return Ok(TypeExpr::new(TypeExprKind::Set(Box::new(elem)), span));
        }
        if self.at_ident_text("seq") && self.at_keyword_at(1, "of") {
            self.bump();
            self.bump();
            let elem = self.parse_prefix_type()?;
            return Ok(TypeExpr::new(TypeExprKind::Seq(Box::new(elem)), span));
        }
        if self.at_ident_text("map") {
            self.bump();
            let key = self.parse_star_type()?;
            if !self.at_ident_text("to") {
                return Err(self.err("expected 'to' in map type"));
            }
            self.bump();
            let val = self.parse_prefix_type()?;
            return Ok(TypeExpr::new(TypeExprKind::Map(Box::new(key), Box::new(val)), span));
        }
        self.parse_atom_type()
    }

    fn parse_atom_type(&mut self) -> PResult<TypeExpr> {
        let span = self.here();
        let token = match self.peek() {
            Some(t) => t.clone(),
            None => return Err(self.err("expected a type")),
        };
        match token.kind {
            TokenKind::Keyword => {
                if let Some(basic) = BasicType::from_name(&token.text) {
                    self.bump();
                    Ok(TypeExpr::new(TypeExprKind::Basic(basic), span))
                } else {
                    Err(self.err(format!("expected a type, found '{}'", token.text)))
                }
            }
            TokenKind::QuoteLit => {
                // N (and NAT etc.) alias basic types in type position.
                if let Some(basic) = BasicType::from_name(&token.text) {
                    self.bump();
                    return Ok(TypeExpr::new(TypeExprKind::Basic(basic), span));
                }
                self.bump();
                let mut members = vec![token.text];
                while self.at_symbol("|") {
                    self.bump();
                    match self.peek() {
                        Some(t) if t.kind == TokenKind::QuoteLit => {
                            let name = self.bump().unwrap().text;
                            if members.contains(&name) {
                                return Err(self.err(format!(
                                    "duplicate quote literal '{}' in union",
                                    name
                                )));
                            }
                            members.push(name);
                        }
                        _ => {
                            return Err(self.err(
                                "general union types are not supported; only unions of quote literals",
                            ))
                        }
                    }
                }
                if members.len() == 1 {
                    Ok(TypeExpr::new(TypeExprKind::Quote(members.pop().unwrap()), span))
                } else {
                    Ok(TypeExpr::new(TypeExprKind::QuoteUnion(members), span))
                }
            }
            TokenKind::Ident => {
                self.bump();
                Ok(TypeExpr::new(TypeExprKind::Named(token.text), span))
            }
            TokenKind::Symbol if token.text == "(" => {
                self.bump();
                let inner = self.parse_type()?;
                self.expect_symbol(")")?;
                Ok(inner)
            }
            TokenKind::Symbol if token.text == "[" => {
                self.bump();
                let inner = self.parse_type()?;
                self.expect_symbol("]")?;
                Ok(TypeExpr::new(TypeExprKind::Optional(Box::new(inner)), span))
            }
            _ => Err(self.err(format!("expected a type, found '{}'", token.text))),
        }
    }

    // ------------------------------------------------------------------
    // Expressions
    // ------------------------------------------------------------------

    fn at_greedy_expr_start(&self) -> bool {
        self.at_keyword("if")
            || self.at_keyword("let")
            || self.at_keyword("cases")
            || self.at_keyword("forall")
            || self.at_keyword("exists")
    }

    fn parse_expr(&mut self) -> PResult<Expr> {
        let span = self.here();
        if self.eat_keyword("if") {
            let cond = self.parse_expr()?;
            self.expect_keyword("then")?;
            let then_branch = self.parse_expr()?;
            self.expect_keyword("else")?;
            let else_branch = self.parse_expr()?;
            return Ok(Expr::new(
                ExprKind::IfThenElse {
                    cond: Box::new(cond),
                    then_branch: Box::new(then_branch),
                    else_branch: Box::new(else_branch),
                },
                span,
            ));
        }
        if self.eat_keyword("let") {
            let mut bindings = Vec::new();
            loop {
                let name = self.take_name()?;
                self.expect_symbol("=")?;
                let value = self.parse_expr_operand()?;
                bindings.push((name, value));
                if !self.eat_symbol(",") {
                    break;
                }
            }
            self.expect_keyword("in")?;
            let body = self.parse_expr()?;
            return Ok(Expr::new(ExprKind::LetIn { bindings, body: Box::new(body) }, span));
        }
        if self.eat_keyword("cases") {
            return self.parse_cases(span);
        }
        if self.at_keyword("forall") || self.at_keyword("exists") {
            let kind = if self.eat_keyword("forall") {
                QuantifierKind::Forall
            } else {
                self.bump();
                QuantifierKind::Exists
            };
            let binder = self.take_name()?;
            self.expect_keyword("in")?;
            if !self.at_ident_text("set") {
                return Err(self.err("expected 'set' after 'in' in quantifier binding"));
            }
            self.bump();
            let saved = self.no_dot;
            self.no_dot = true;
            let domain = self.parse_implies();
            self.no_dot = saved;
            let domain = domain?;
            self.expect_symbol(".")?;
            let predicate = self.parse_expr()?;
            return Ok(Expr::new(
                ExprKind::Quantifier {
                    kind,
                    binder,
                    domain: Box::new(domain),
                    predicate: Box::new(predicate),
                },
                span,
            ));
        }
        self.parse_implies()
    }

    fn parse_cases(&mut self, span: Span) -> PResult<Expr> {
        let scrutinee = self.parse_expr_operand()?;
        self.expect_keyword("of")?;
        let mut branches = Vec::new();
        let mut others = None;
        loop {
            if self.eat_keyword("others") {
                self.expect_symbol("->")?;
                others = Some(Box::new(self.parse_expr()?));
                self.eat_symbol(",");
                self.expect_keyword("end")?;
                break;
            }
            if self.eat_keyword("end") {
                break;
            }
            if self.peek().is_none() {
                return Err(self.err("unterminated cases expression"));
            }
            let pattern = self.parse_implies()?;
            self.expect_symbol("->")?;
            let result = self.parse_expr_operand()?;
            self.eat_symbol(",");
            branches.push((pattern, result));
        }
        if branches.is_empty() {
            return Err(Diagnostic::error(
                "cases expression needs at least one branch",
                span.line,
                span.column,
            ));
        }
        Ok(Expr::new(
            ExprKind::Cases { scrutinee: Box::new(scrutinee), branches, others },
            span,
        ))
    }

    /// An operand position that still admits the greedy forms (if/let/...),
    /// which then extend to the end of the enclosing expression.
    fn parse_expr_operand(&mut self) -> PResult<Expr> {
        if self.at_greedy_expr_start() {
            self.parse_expr()
        } else {
            self.parse_implies()
        }
    }

    fn parse_implies(&mut self) -> PResult<Expr> {
        let span = self.here();
        let lhs = self.parse_disjunction()?;
        if self.eat_symbol("=>") {
            let rhs =
                if self.at_greedy_expr_start() { self.parse_expr()? } else { self.parse_implies()? };
            return Ok(Expr::new(
                ExprKind::Binary(BinaryOp::Implies, Box::new(lhs), Box::new(rhs)),
                span,
            ));
        }
        Ok(lhs)
    }

    fn parse_disjunction(&mut self) -> PResult<Expr> {
        let span = self.here();
        let mut lhs = self.parse_conjunction()?;
        while self.at_keyword("or") {
            self.bump();
            let rhs = if self.at_greedy_expr_start() {
                self.parse_expr()?
            } else {
                self.parse_conjunction()?
            };
            lhs = Expr::new(ExprKind::Binary(BinaryOp::Or, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn parse_conjunction(&mut self) -> PResult<Expr> {
        let span = self.here();
        let mut lhs = self.parse_negation()?;
        while self.at_keyword("and") {
            self.bump();
            let rhs = if self.at_greedy_expr_start() {
                self.parse_expr()?
            } else {
                self.parse_negation()?
            };
            lhs = Expr::new(ExprKind::Binary(BinaryOp::And, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn parse_negation(&mut self) -> PResult<Expr> {
        let span = self.here();
        if self.at_keyword("not") && !self.at_keyword_at(1, "in") {
            self.bump();
            let operand = self.parse_negation()?;
            return Ok(Expr::new(ExprKind::Unary(UnaryOp::Not, Box::new(operand)), span));
        }
        self.parse_relation()
    }

    fn relation_op(&self) -> Option<(BinaryOp, usize)> {
        let t = self.peek()?;
        match (t.kind, t.text.as_str()) {
            (TokenKind::Symbol, "=") => Some((BinaryOp::Eq, 1)),
            (TokenKind::Symbol, "<>") => Some((BinaryOp::Neq, 1)),
            (TokenKind::Symbol, "<") => Some((BinaryOp::Lt, 1)),
            (TokenKind::Symbol, "<=") => Some((BinaryOp::Le, 1)),
            (TokenKind::Symbol, ">") => Some((BinaryOp::Gt, 1)),
            (TokenKind::Symbol, ">=") => Some((BinaryOp::Ge, 1)),
            (TokenKind::Keyword, kw) if kw.eq_ignore_ascii_case("subset") => {
                Some((BinaryOp::Subset, 1))
            }
            (TokenKind::Keyword, kw) if kw.eq_ignore_ascii_case("psubset") => {
                Some((BinaryOp::PSubset, 1))
            }
            (TokenKind::Keyword, kw) if kw.eq_ignore_ascii_case("in") => {
                if matches!(self.peek_at(1), Some(t) if t.kind == TokenKind::Ident && t.text.eq_ignore_ascii_case("set"))
                {
                    Some((BinaryOp::InSet, 2))
                } else {
                    None
                }
            }
            (TokenKind::Keyword, kw) if kw.eq_ignore_ascii_case("not") => {
                if self.at_keyword_at(1, "in")
                    && matches!(self.peek_at(2), Some(t) if t.kind == TokenKind::Ident && t.text.eq_ignore_ascii_case("set"))
                {
                    Some((BinaryOp::NotInSet, 3))
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    fn parse_relation(&mut self) -> PResult<Expr> {
        let span = self.here();
        let lhs = self.parse_additive()?;
        if let Some((op, tokens)) = self.relation_op() {
            for _ in 0..tokens {
                self.bump();
            }
            let rhs = if self.at_greedy_expr_start() {
                self.parse_expr()?
            } else {
                self.parse_additive()?
            };
            return Ok(Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span));
        }
        Ok(lhs)
    }

    fn additive_op(&self) -> Option<BinaryOp> {
        let t = self.peek()?;
        match (t.kind, t.text.as_str()) {
            (TokenKind::Symbol, "+") => Some(BinaryOp::Add),
            (TokenKind::Symbol, "-") => Some(BinaryOp::Sub),
            (TokenKind::Symbol, "\\") => Some(BinaryOp::SetDiff),
            (TokenKind::Symbol, "^") => Some(BinaryOp::Concat),
            (TokenKind::Symbol, "++") => Some(BinaryOp::MapOverride),
            (TokenKind::Keyword, kw) if kw.eq_ignore_ascii_case("union") => Some(BinaryOp::Union),
            _ => None,
        }
    }

    fn parse_additive(&mut self) -> PResult<Expr> {
        let span = self.here();
        let mut lhs = self.parse_multiplicative()?;
        while let Some(op) = self.additive_op() {
            self.bump();
            let rhs = if self.at_greedy_expr_start() {
                self.parse_expr()?
            } else {
                self.parse_multiplicative()?
            };
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn multiplicative_op(&self) -> Option<BinaryOp> {
        let t = self.peek()?;
        match (t.kind, t.text.as_str()) {
            (TokenKind::Symbol, "*") => Some(BinaryOp::Mul),
            (TokenKind::Symbol, "/") => Some(BinaryOp::Divide),
            (TokenKind::Keyword, kw) if kw.eq_ignore_ascii_case("div") => Some(BinaryOp::IntDiv),
            (TokenKind::Keyword, kw) if kw.eq_ignore_ascii_case("mod") => Some(BinaryOp::Mod),
            (TokenKind::Keyword, kw) if kw.eq_ignore_ascii_case("inter") => Some(BinaryOp::Inter),
            _ => None,
        }
    }

    fn parse_multiplicative(&mut self) -> PResult<Expr> {
        let span = self.here();
        let mut lhs = self.parse_prefix()?;
        while let Some(op) = self.multiplicative_op() {
            self.bump();
            let rhs = if self.at_greedy_expr_start() {
                self.parse_expr()?
            } else {
                self.parse_prefix()?
            };
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn prefix_op(&self) -> Option<UnaryOp> {
        let t = self.peek()?;
        if t.kind != TokenKind::Keyword && !(t.kind == TokenKind::Symbol && t.text == "-") {
            return None;
        }
        match t.text.to_ascii_lowercase().as_str() {
            "-" => Some(UnaryOp::Neg),
            "len" => Some(UnaryOp::Len),
            "hd" => Some(UnaryOp::Hd),
            "tl" => Some(UnaryOp::Tl),
            "elems" => Some(UnaryOp::Elems),
            "inds" => Some(UnaryOp::Inds),
            "card" => Some(UnaryOp::Card),
            "dom" => Some(UnaryOp::Dom),
            "rng" => Some(UnaryOp::Rng),
            "floor" => Some(UnaryOp::Floor),
            "abs" => Some(UnaryOp::Abs),
            _ => None,
        }
    }

    fn parse_prefix(&mut self) -> PResult<Expr> {
        let span = self.here();
        if let Some(op) = self.prefix_op() {
            self.bump();
            let operand = self.parse_prefix()?;
            return Ok(Expr::new(ExprKind::Unary(op, Box::new(operand)), span));
        }
        self.parse_postfix()
    }

    fn parse_postfix(&mut self) -> PResult<Expr> {
        let mut expr = self.parse_atom()?;
        while !self.no_dot && self.at_symbol(".") {
            let span = self.here();
            // Only a field selection if a name follows the dot.
            match self.peek_at(1) {
                Some(t) if t.kind == TokenKind::Ident || t.kind == TokenKind::QuoteLit => {
                    self.bump();
                    let field = self.bump().unwrap().text;
                    expr = Expr::new(
                        ExprKind::FieldSelect { base: Box::new(expr), field },
                        span,
                    );
                }
                _ => break,
            }
        }
        Ok(expr)
    }

    fn parse_args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_symbol("(")?;
        let mut args = Vec::new();
        if self.eat_symbol(")") {
            return Ok(args);
        }
        loop {
            args.push(self.parse_expr_operand()?);
            if self.eat_symbol(",") {
                continue;
            }
            self.expect_symbol(")")?;
            break;
        }
        Ok(args)
    }

    fn parse_atom(&mut self) -> PResult<Expr> {
        let span = self.here();
        let token = match self.peek() {
            Some(t) => t.clone(),
            None => return Err(self.err("expected an expression")),
        };
        match token.kind {
            TokenKind::Number => {
                self.bump();
                let lit = literal_from_number(&token.text)
                    .ok_or_else(|| Diagnostic::error("malformed number", token.line, token.column))?;
                Ok(Expr::new(ExprKind::Literal(lit), span))
            }
            TokenKind::CharLit => {
                self.bump();
                let c = decode_char_literal(&token.text)
                    .ok_or_else(|| Diagnostic::error("malformed character literal", token.line, token.column))?;
                Ok(Expr::new(ExprKind::Literal(Literal::Char(c)), span))
            }
            TokenKind::QuoteLit => {
                self.bump();
                Ok(Expr::new(ExprKind::Literal(Literal::Quote(token.text)), span))
            }
            TokenKind::Keyword if token.text.eq_ignore_ascii_case("true") => {
                self.bump();
                Ok(Expr::new(ExprKind::Literal(Literal::Bool(true)), span))
            }
            TokenKind::Keyword if token.text.eq_ignore_ascii_case("false") => {
                self.bump();
                Ok(Expr::new(ExprKind::Literal(Literal::Bool(false)), span))
            }
            TokenKind::Keyword if token.text.eq_ignore_ascii_case("nil") => {
                self.bump();
                Ok(Expr::new(ExprKind::Literal(Literal::Nil), span))
            }
            TokenKind::Ident => {
                self.bump();
                let name = token.text;
                if self.at_symbol("(") {
                    if let Some(tag) = name.strip_prefix("mk_") {
                        if !tag.is_empty() {
                            let args = self.parse_args()?;
                            return Ok(Expr::new(
                                ExprKind::RecordCtor { tag: tag.to_string(), args },
                                span,
                            ));
                        }
                    }
                    if let Some(target) = name.strip_prefix("is_") {
                        if !target.is_empty() {
                            let target_ty = if let Some(basic) = BasicType::from_name(target) {
                                TypeExpr::new(TypeExprKind::Basic(basic), span)
                            } else {
                                TypeExpr::new(TypeExprKind::Named(target.to_string()), span)
                            };
                            self.expect_symbol("(")?;
                            let inner = self.parse_expr_operand()?;
                            self.expect_symbol(")")?;
                            return Ok(Expr::new(
                                ExprKind::TypeJudgement {
                                    expr: Box::new(inner),
                                    target: target_ty,
                                },
                                span,
                            ));
                        }
                    }
                    let args = self.parse_args()?;
                    return Ok(Expr::new(ExprKind::Apply { callee: name, args }, span));
                }
                Ok(Expr::new(ExprKind::Var(name), span))
            }
            TokenKind::Symbol if token.text == "(" => {
                self.bump();
                let saved = self.no_dot;
                self.no_dot = false;
                let inner = self.parse_expr();
                self.no_dot = saved;
                let inner = inner?;
                self.expect_symbol(")")?;
                Ok(inner)
            }
            TokenKind::Symbol if token.text == "[" => {
                self.bump();
                let saved = self.no_dot;
                self.no_dot = false;
                let mut elems = Vec::new();
                if !self.at_symbol("]") {
                    loop {
                        match self.parse_expr_operand() {
                            Ok(e) => elems.push(e),
                            Err(e) => {
                                self.no_dot = saved;
                                return Err(e);
                            }
                        }
                        if !self.eat_symbol(",") {
                            break;
                        }
                    }
                }
                self.no_dot = saved;
                self.expect_symbol("]")?;
                Ok(Expr::new(ExprKind::SeqEnum(elems), span))
            }
            TokenKind::Symbol if token.text == "{" => {
                self.bump();
                let saved = self.no_dot;
                self.no_dot = false;
                let result = self.parse_braced(span);
                self.no_dot = saved;
                result
            }
            _ => Err(self.err(format!("expected an expression, found '{}'", token.text))),
        }
    }

    /// Contents of `{ ... }`: a set enumeration, `{|->}`, or a map
    /// enumeration.
    fn parse_braced(&mut self, span: Span) -> PResult<Expr> {
        if self.eat_symbol("}") {
            return Ok(Expr::new(ExprKind::SetEnum(Vec::new()), span));
        }
        if self.eat_symbol("|->") {
            self.expect_symbol("}")?;
            return Ok(Expr::new(ExprKind::MapEnum(Vec::new()), span));
        }
        let first = self.parse_expr_operand()?;
        if self.eat_symbol("|->") {
            let mut pairs = Vec::new();
            let value = self.parse_expr_operand()?;
            pairs.push((first, value));
            while self.eat_symbol(",") {
                let k = self.parse_expr_operand()?;
                self.expect_symbol("|->")?;
                let v = self.parse_expr_operand()?;
                pairs.push((k, v));
            }
            self.expect_symbol("}")?;
            return Ok(Expr::new(ExprKind::MapEnum(pairs), span));
        }
        let mut elems = vec![first];
        while self.eat_symbol(",") {
            elems.push(self.parse_expr_operand()?);
        }
        self.expect_symbol("}")?;
        Ok(Expr::new(ExprKind::SetEnum(elems), span))
    }

    // ------------------------------------------------------------------
    // Members and classes
    // ------------------------------------------------------------------

    fn parse_access(&mut self) -> Access {
        if self.at_ident_text("public") {
            self.bump();
            Access::Public
        } else if self.at_ident_text("private") {
            self.bump();
            Access::Private
        } else if self.at_ident_text("protected") {
            self.bump();
            Access::Protected
        } else {
            Access::Private
        }
    }

    fn parse_type_def(&mut self, access: Access) -> PResult<TypeDef> {
        let span = self.here();
        let name = self.take_name()?;
        if self.eat_symbol("::") {
            let mut fields = Vec::new();
            loop {
                let fname = match self.peek() {
                    Some(t) if t.kind == TokenKind::Ident && self.at_symbol_at(1, ":") => {
                        self.bump().unwrap().text
                    }
                    _ => break,
                };
                self.expect_symbol(":")?;
                let fty = self.parse_type()?;
                fields.push((fname, fty));
            }
            if fields.is_empty() {
                return Err(self.err("composite type needs at least one field"));
            }
            let invariant = self.parse_inline_invariant()?;
            self.eat_symbol(";");
            let body = TypeExpr::new(
                TypeExprKind::Composite { tag: name.clone(), fields },
                span,
            );
            return Ok(TypeDef { name, access, body, invariant, span });
        }
        self.expect_symbol("=")?;
        let body = self.parse_type()?;
        let invariant = self.parse_inline_invariant()?;
        self.eat_symbol(";");
        Ok(TypeDef { name, access, body, invariant, span })
    }

    /// `inv binder == expr` attached to a type definition. Not consumed if
    /// the `inv` introduces a class invariant clause (`inv Name (binder)`).
    fn parse_inline_invariant(&mut self) -> PResult<Option<(String, Expr)>> {
        if self.at_keyword("inv") && !self.at_symbol_at(2, "(") {
            self.bump();
            let binder = self.take_name()?;
            self.expect_symbol("==")?;
            let expr = self.parse_expr()?;
            return Ok(Some((binder, expr)));
        }
        Ok(None)
    }

    fn parse_value_def(&mut self, access: Access) -> PResult<ValueDef> {
        let span = self.here();
        let name = self.take_name()?;
        let declared_type = if self.eat_symbol(":") { Some(self.parse_type()?) } else { None };
        self.expect_symbol("=")?;
        let value = self.parse_expr()?;
        self.eat_symbol(";");
        Ok(ValueDef { name, access, declared_type, value, span })
    }

    fn parse_instance_var(&mut self, access: Access) -> PResult<InstanceVar> {
        let span = self.here();
        let name = self.take_name()?;
        self.expect_symbol(":")?;
        let declared_type = self.parse_type()?;
        let init = if self.eat_symbol(":=") { Some(self.parse_expr()?) } else { None };
        self.eat_symbol(";");
        Ok(InstanceVar { name, access, declared_type, init, span })
    }

    /// Shared shape of function and operation definitions; `op_arrow`
    /// selects `==>` (operations) over `->` (functions).
    #[allow(clippy::type_complexity)]
    fn parse_routine(
        &mut self,
        op_arrow: bool,
    ) -> PResult<(String, Vec<TypeExpr>, TypeExpr, Vec<String>, Expr, Option<Expr>, Option<Expr>, Span)>
    {
        let span = self.here();
        let name = self.take_name()?;
        self.expect_symbol(":")?;
        let (param_types, result_type) = if op_arrow {
            // `()` or a product of types, then `==>`.
            let params = if self.at_symbol("(") && self.at_symbol_at(1, ")") {
                self.bump();
                self.bump();
                Vec::new()
            } else {
                match self.parse_type()?.kind {
                    TypeExprKind::Product(components) => components,
                    other => vec![TypeExpr::new(other, span)],
                }
            };
            self.expect_symbol("==>")?;
            let result = self.parse_type()?;
            (params, result)
        } else {
            if self.at_symbol("(") && self.at_symbol_at(1, ")") {
                self.bump();
                self.bump();
                self.expect_symbol("->")?;
                let result = self.parse_type()?;
                (Vec::new(), result)
            } else {
                let ty = self.parse_type()?;
                match ty.kind {
                    TypeExprKind::Func { params, result } => (params, *result),
                    _ => {
                        return Err(Diagnostic::error(
                            format!("signature of '{}' must be a function type (T -> R)", name),
                            span.line,
                            span.column,
                        ))
                    }
                }
            }
        };
        let body_name = self.take_name()?;
        if !body_name.eq_ignore_ascii_case(&name) {
            return Err(self.err(format!(
                "definition name '{}' does not match signature name '{}'",
                body_name, name
            )));
        }
        self.expect_symbol("(")?;
        let mut params = Vec::new();
        if !self.at_symbol(")") {
            loop {
                params.push(self.take_name()?);
                if !self.eat_symbol(",") {
                    break;
                }
            }
        }
        self.expect_symbol(")")?;
        if params.len() != param_types.len() {
            return Err(self.err(format!(
                "'{}' declares {} parameter type(s) but binds {} parameter name(s)",
                name,
                param_types.len(),
                params.len()
            )));
        }
        self.expect_symbol("==")?;
        let body = self.parse_expr()?;
        let pre = if self.eat_keyword("pre") { Some(self.parse_expr()?) } else { None };
        let post = if self.eat_keyword("post") { Some(self.parse_expr()?) } else { None };
        self.eat_symbol(";");
        Ok((name, param_types, result_type, params, body, pre, post, span))
    }

    fn at_class_invariant(&self) -> bool {
        self.at_keyword("inv") && self.at_symbol_at(2, "(")
    }

    fn parse_class_invariant(&mut self, class: &mut ClassDef) -> PResult<()> {
        let span = self.here();
        self.expect_keyword("inv")?;
        let target = self.take_name()?;
        if !target.eq_ignore_ascii_case(&class.name) {
            return Err(Diagnostic::error(
                format!(
                    "invariant names '{}' but the enclosing class is '{}'",
                    target, class.name
                ),
                span.line,
                span.column,
            ));
        }
        self.expect_symbol("(")?;
        let binder = self.take_name()?;
        self.expect_symbol(")")?;
        self.expect_symbol("==")?;
        let expr = self.parse_expr()?;
        if class.invariant.is_some() {
            return Err(Diagnostic::error(
                format!("class '{}' already has an invariant", class.name),
                span.line,
                span.column,
            ));
        }
        class.invariant = Some(InvariantDef { binder, expr, span });
        Ok(())
    }

    fn parse_class_def(&mut self, leading_types: Vec<TypeDef>) -> PResult<ClassDef> {
        let span = self.here();
        self.expect_keyword("class")?;
        let name = self.take_name()?;
        let mut class = ClassDef::empty(&name);
        class.span = span;
        class.type_defs = leading_types;
        if self.at_keyword("is") {
            self.bump();
            self.expect_keyword("subclass")?;
            self.expect_keyword("of")?;
            loop {
                class.superclasses.push(self.take_name()?);
                if !self.eat_symbol(",") {
                    break;
                }
            }
        }
        enum Section {
            None,
            Values,
            Types,
            Functions,
            Operations,
            InstanceVars,
        }
        let mut section = Section::None;
        loop {
            if self.at_keyword("end") {
                self.bump();
                let end_name = self.take_name()?;
                if !end_name.eq_ignore_ascii_case(&class.name) {
                    return Err(self.err(format!(
                        "'end {}' does not match class '{}'",
                        end_name, class.name
                    )));
                }
                return Ok(class);
            }
            if self.peek().is_none() {
                return Err(self.err(format!("missing 'end {}'", class.name)));
            }
            if self.at_class_invariant() {
                self.parse_class_invariant(&mut class)?;
                continue;
            }
            if self.eat_keyword("values") {
                section = Section::Values;
                continue;
            }
            if self.eat_keyword("types") {
                section = Section::Types;
                continue;
            }
            if self.eat_keyword("functions") {
                section = Section::Functions;
                continue;
            }
            if self.eat_keyword("operations") {
                section = Section::Operations;
                continue;
            }
            if self.at_keyword("instance") && self.at_keyword_at(1, "variables") {
                self.bump();
                self.bump();
                section = Section::InstanceVars;
                continue;
            }
            match section {
                Section::None => {
                    // Bare members between the header and the first section:
                    // `name = type` is a type definition, `name : type` an
                    // instance variable.
                    let access = self.parse_access();
                    let is_typedef = self.at_symbol_at(1, "=") || self.at_symbol_at(1, "::");
                    if is_typedef {
                        let td = self.parse_type_def(access)?;
                        class.type_defs.push(td);
                    } else {
                        let iv = self.parse_instance_var(access)?;
                        class.instance_vars.push(iv);
                    }
                }
                Section::Values => {
                    let access = self.parse_access();
                    let vd = self.parse_value_def(access)?;
                    class.value_defs.push(vd);
                }
                Section::Types => {
                    let access = self.parse_access();
                    let td = self.parse_type_def(access)?;
                    class.type_defs.push(td);
                }
                Section::Functions => {
                    let access = self.parse_access();
                    let (name, param_types, result_type, params, body, pre, post, span) =
                        self.parse_routine(false)?;
                    class.function_defs.push(FunctionDef {
                        name,
                        access,
                        param_types,
                        result_type,
                        params,
                        body,
                        pre,
                        post,
                        span,
                    });
                }
                Section::Operations => {
                    let access = self.parse_access();
                    let (name, param_types, result_type, params, body, pre, post, span) =
                        self.parse_routine(true)?;
                    class.operations.push(OperationDef {
                        name,
                        access,
                        param_types,
                        result_type,
                        params,
                        body,
                        pre,
                        post,
                        span,
                    });
                }
                Section::InstanceVars => {
                    let access = self.parse_access();
                    let iv = self.parse_instance_var(access)?;
                    class.instance_vars.push(iv);
                }
            }
        }
    }

    fn parse_file(&mut self) -> PResult<SpecFile> {
        let mut classes = Vec::new();
        while self.peek().is_some() {
            // Collect type definitions written before the class header; they
            // belong to the class that follows.
            let mut leading = Vec::new();
            while !self.at_keyword("class") && self.peek().is_some() {
                let access = self.parse_access();
                leading.push(self.parse_type_def(access)?);
            }
            if self.peek().is_none() {
                if classes.is_empty() || !leading.is_empty() {
                    return Err(self.err("expected a class definition"));
                }
                break;
            }
            classes.push(self.parse_class_def(leading)?);
        }
        if classes.is_empty() {
            return Err(self.err("expected a class definition"));
        }
        Ok(SpecFile { classes })
    }
}

fn literal_from_number(text: &str) -> Option<Literal> {
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::pow::Pow;
    if let Some(dot) = text.find('.') {
        let (ip, fp) = (&text[..dot], &text[dot + 1..]);
        let digits: String = format!("{ip}{fp}");
        let numerator: BigInt = digits.parse().ok()?;
        let denominator = BigInt::from(10u32).pow(fp.len() as u32);
        let value = BigRational::new(numerator, denominator);
        Some(Literal::Real(value))
    } else {
        text.parse::<BigInt>().ok().map(Literal::Int)
    }
}

fn decode_char_literal(text: &str) -> Option<char> {
    let inner = text.strip_prefix('\'')?.strip_suffix('\'')?;
    let mut chars = inner.chars();
    let c = match chars.next()? {
        '\\' => match chars.next()? {
            'n' => '\n',
            't' => '\t',
            '\\' => '\\',
            '\'' => '\'',
            _ => return None,
        },
        c => c,
    };
    if chars.next().is_some() {
        return None;
    }
    Some(c)
}

/// Parse a complete source file (one or more classes) and run resolution
/// checks over every class.
pub fn parse_source(text: &str) -> Result<SpecFile, Vec<Diagnostic>> {
    let tokens = tokenize(text)?;
    let mut parser = Parser::new(tokens);
    let file = parser.parse_file().map_err(|d| vec![d])?;
    let diags = crate::resolve::validate_file(&file);
    if diags.iter().any(|d| d.severity == crate::lexer::Severity::Error) {
        return Err(diags);
    }
    Ok(file)
}

/// Parse the first class of a source file.
pub fn parse_class(text: &str) -> Result<ClassDef, Vec<Diagnostic>> {
    let file = parse_source(text)?;
    Ok(file.classes.into_iter().next().expect("parse_source returns >= 1 class"))
}

/// Parse a standalone type expression, for tooling and tests.
pub fn parse_type_expr(text: &str) -> Result<TypeExpr, Diagnostic> {
    let tokens = tokenize(text).map_err(|mut ds| ds.remove(0))?;
    let mut parser = Parser::new(tokens);
    let ty = parser.parse_type()?;
    if let Some(t) = parser.peek() {
        return Err(Diagnostic::error(
            format!("unexpected trailing input '{}'", t.text),
            t.line,
            t.column,
        ));
    }
    Ok(ty)
}

/// Parse a standalone expression, used by the harness to decode rendered
/// values and by tests.
pub fn parse_expr_text(text: &str) -> Result<Expr, Diagnostic> {
    let tokens = tokenize(text).map_err(|mut ds| ds.remove(0))?;
    let mut parser = Parser::new(tokens);
    let expr = parser.parse_expr()?;
    if let Some(t) = parser.peek() {
        return Err(Diagnostic::error(
            format!("unexpected trailing input '{}'", t.text),
            t.line,
            t.column,
        ));
    }
    Ok(expr)
}
