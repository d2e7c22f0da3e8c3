//! Tokenizer for the VDM++ subset.
//!
//! Keywords are matched case-insensitively (`Class`, `Inv`, `End` all
//! lex as keywords), and the mathematical symbols `->`/`→`, `and`/`∧`,
//! `or`/`∨`, `forall`/`∀`, `exists`/`∃`, `in set`/`∈`, `.`/`·`, `<>`/`≠`,
//! `<=`/`≤`, `>=`/`≥`, `=>`/`⇒` tokenize identically: the Unicode forms
//! canonicalize to their ASCII spellings. Comments run from `--` to end
//! of line. An identifier written entirely in uppercase (e.g. `INVALID`)
//! lexes as a quote literal; `RESULT` is reserved for postconditions and
//! stays an identifier.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

/// A positioned message produced by the lexer, parser, or resolver.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub line: u32,
    pub column: u32,
}

impl Diagnostic {
    pub fn error(message: impl Into<String>, line: u32, column: u32) -> Self {
        Diagnostic { severity: Severity::Error, message: message.into(), line, column }
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {}: {}", self.line, self.column, sev, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Keyword,
    Ident,
    /// All-uppercase identifier, e.g. `INVALID`.
    QuoteLit,
    Number,
    CharLit,
    Symbol,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub line: u32,
    pub column: u32,
}

impl Token {
    fn new(kind: TokenKind, text: impl Into<String>, line: u32, column: u32) -> Self {
        Token { kind, text: text.into(), line, column }
    }
}

const KEYWORDS: &[&str] = &[
    "class",
    "end",
    "functions",
    "types",
    "values",
    "instance",
    "variables",
    "operations",
    "inv",
    "pre",
    "post",
    "if",
    "then",
    "else",
    "cases",
    "others",
    "let",
    "in",
    "forall",
    "exists",
    "is",
    "subclass",
    "of",
    "not",
    "and",
    "or",
    "div",
    "mod",
    "len",
    "hd",
    "tl",
    "elems",
    "inds",
    "card",
    "dom",
    "rng",
    "floor",
    "abs",
    "union",
    "inter",
    "subset",
    "psubset",
    "true",
    "false",
    "nil",
    "bool",
    "nat",
    "nat1",
    "int",
    "rat",
    "real",
    "char",
    "token",
];

pub fn is_keyword(word: &str) -> bool {
    let lower = word.to_ascii_lowercase();
    KEYWORDS.contains(&lower.as_str())
}

fn is_quote_shaped(word: &str) -> bool {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) if c.is_ascii_uppercase() => {}
        _ => return false,
    }
    word.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
}

/// Multi-character symbols, longest first.
const SYMBOLS: &[&str] = &[
    "==>", "==", "=>", "=", "<>", "<=", ">=", "<", ">", "->", "|->", "|", "++", "+", "-", "*",
    "/", "\\", "^", "(", ")", "[", "]", "{", "}", ",", ";", ":=", "::", ":", ".",
];

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    column: u32,
    tokens: Vec<Token>,
    diagnostics: Vec<Diagnostic>,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
            tokens: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn push(&mut self, kind: TokenKind, text: impl Into<String>, line: u32, column: u32) {
        self.tokens.push(Token::new(kind, text, line, column));
    }

    fn word(&mut self, first: char, line: u32, column: u32) {
        let mut word = String::new();
        word.push(first);
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                word.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if word == "RESULT" {
            self.push(TokenKind::Ident, word, line, column);
        } else if is_keyword(&word) {
            self.push(TokenKind::Keyword, word, line, column);
        } else if is_quote_shaped(&word) {
            self.push(TokenKind::QuoteLit, word, line, column);
        } else {
            self.push(TokenKind::Ident, word, line, column);
        }
    }

    fn number(&mut self, first: char, line: u32, column: u32) {
        let mut num = String::new();
        num.push(first);
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                num.push(c);
                self.bump();
            } else {
                break;
            }
        }
        // A decimal point only belongs to the number if a digit follows it;
        // `sides.` keeps its `.` as a symbol.
        if self.peek() == Some('.') {
            let mut lookahead = self.chars.clone();
            lookahead.next();
            if matches!(lookahead.peek(), Some(c) if c.is_ascii_digit()) {
                num.push('.');
                self.bump();
                while let Some(c) = self.peek() {
                    if c.is_ascii_digit() {
                        num.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
        }
        self.push(TokenKind::Number, num, line, column);
    }

    fn char_literal(&mut self, line: u32, column: u32) {
        let c = match self.bump() {
            Some('\\') => match self.bump() {
                Some('n') => '\n',
                Some('t') => '\t',
                Some('\\') => '\\',
                Some('\'') => '\'',
                other => {
                    self.diagnostics.push(Diagnostic::error(
                        format!("invalid escape sequence in character literal: {:?}", other),
                        line,
                        column,
                    ));
                    return;
                }
            },
            Some(c) if c != '\'' => c,
            _ => {
                self.diagnostics.push(Diagnostic::error(
                    "empty or unterminated character literal",
                    line,
                    column,
                ));
                return;
            }
        };
        if self.bump() != Some('\'') {
            self.diagnostics.push(Diagnostic::error(
                "unterminated character literal",
                line,
                column,
            ));
            return;
        }
        let rendered = match c {
            '\n' => "'\\n'".to_string(),
            '\t' => "'\\t'".to_string(),
            '\\' => "'\\\\'".to_string(),
            '\'' => "'\\''".to_string(),
            c => format!("'{}'", c),
        };
        self.push(TokenKind::CharLit, rendered, line, column);
    }

    fn symbol_at(&mut self, first: char, line: u32, column: u32) {
        let mut rest = String::new();
        rest.push(first);
        {
            let mut lookahead = self.chars.clone();
            for _ in 0..2 {
                match lookahead.next() {
                    Some(c) => rest.push(c),
                    None => break,
                }
            }
        }
        for sym in SYMBOLS {
            if rest.starts_with(sym) {
                for _ in 0..sym.len() - 1 {
                    self.bump();
                }
                self.push(TokenKind::Symbol, *sym, line, column);
                return;
            }
        }
        self.diagnostics.push(Diagnostic::error(
            format!("unexpected character {:?}", first),
            line,
            column,
        ));
    }

    fn run(mut self) -> Result<Vec<Token>, Vec<Diagnostic>> {
        while let Some(c) = self.peek() {
            let (line, column) = (self.line, self.column);
            match c {
                ' ' | '\t' | '\r' | '\n' => {
                    self.bump();
                }
                '-' => {
                    // Comment or minus/arrow.
                    let mut lookahead = self.chars.clone();
                    lookahead.next();
                    if lookahead.peek() == Some(&'-') {
                        while let Some(c) = self.peek() {
                            if c == '\n' {
                                break;
                            }
                            self.bump();
                        }
                    } else {
                        self.bump();
                        self.symbol_at('-', line, column);
                    }
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    self.bump();
                    self.word(c, line, column);
                }
                c if c.is_ascii_digit() => {
                    self.bump();
                    self.number(c, line, column);
                }
                '\'' => {
                    self.bump();
                    self.char_literal(line, column);
                }
                '→' => {
                    self.bump();
                    self.push(TokenKind::Symbol, "->", line, column);
                }
                '⇒' => {
                    self.bump();
                    self.push(TokenKind::Symbol, "=>", line, column);
                }
                '∧' => {
                    self.bump();
                    self.push(TokenKind::Keyword, "and", line, column);
                }
                '∨' => {
                    self.bump();
                    self.push(TokenKind::Keyword, "or", line, column);
                }
                '∀' => {
                    self.bump();
                    self.push(TokenKind::Keyword, "forall", line, column);
                }
                '∃' => {
                    self.bump();
                    self.push(TokenKind::Keyword, "exists", line, column);
                }
                '∈' => {
                    self.bump();
                    self.push(TokenKind::Keyword, "in", line, column);
                    self.push(TokenKind::Ident, "set", line, column);
                }
                '≠' => {
                    self.bump();
                    self.push(TokenKind::Symbol, "<>", line, column);
                }
                '≤' => {
                    self.bump();
                    self.push(TokenKind::Symbol, "<=", line, column);
                }
                '≥' => {
                    self.bump();
                    self.push(TokenKind::Symbol, ">=", line, column);
                }
                '·' => {
                    self.bump();
                    self.push(TokenKind::Symbol, ".", line, column);
                }
                c => {
                    self.bump();
                    self.symbol_at(c, line, column);
                }
            }
        }
        if self.diagnostics.is_empty() {
            Ok(self.tokens)
        } else {
            Err(self.diagnostics)
        }
    }
}

/// Tokenize source text. On any lexical error the full list of diagnostics
/// is returned instead of a token stream.
pub fn tokenize(text: &str) -> Result<Vec<Token>, Vec<Diagnostic>> {
    Lexer::new(text).run()
}

/// Render a token stream back to text, one space between tokens. Re-lexing
/// the result reproduces the same (kind, text) sequence.
pub fn detokenize(tokens: &[Token]) -> String {
    tokens.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds_and_texts(tokens: &[Token]) -> Vec<(TokenKind, String)> {
        tokens.iter().map(|t| (t.kind, t.text.clone())).collect()
    }

    #[test]
    fn len_sides_equals_three() {
        let tokens = tokenize("len sides = 3").unwrap();
        assert_eq!(
            kinds_and_texts(&tokens),
            vec![
                (TokenKind::Keyword, "len".to_string()),
                (TokenKind::Ident, "sides".to_string()),
                (TokenKind::Symbol, "=".to_string()),
                (TokenKind::Number, "3".to_string()),
            ]
        );
    }

    #[test]
    fn empty_input_gives_no_tokens() {
        assert_eq!(tokenize("").unwrap(), Vec::new());
    }

    #[test]
    fn unicode_symbols_match_ascii_spellings() {
        let uni = tokenize("∀ i ∈ elems sides · 2*i < perim ∧ a → b").unwrap();
        let ascii = tokenize("forall i in set elems sides . 2*i < perim and a -> b").unwrap();
        assert_eq!(kinds_and_texts(&uni), kinds_and_texts(&ascii));
    }

    #[test]
    fn quote_literals_are_uppercase_words() {
        let tokens = tokenize("INVALID | EQUILATERAL").unwrap();
        assert_eq!(tokens[0].kind, TokenKind::QuoteLit);
        assert_eq!(tokens[1].kind, TokenKind::Symbol);
        assert_eq!(tokens[2].kind, TokenKind::QuoteLit);
        // RESULT is reserved for postconditions.
        assert_eq!(tokenize("RESULT").unwrap()[0].kind, TokenKind::Ident);
    }

    #[test]
    fn keywords_are_case_insensitive() {
        for text in ["class", "Class", "CLASS"] {
            let tokens = tokenize(text).unwrap();
            assert_eq!(tokens[0].kind, TokenKind::Keyword, "{text}");
        }
    }

    #[test]
    fn comments_are_skipped() {
        let tokens = tokenize("a -- comment with symbols @#\nb").unwrap();
        assert_eq!(
            kinds_and_texts(&tokens),
            vec![(TokenKind::Ident, "a".to_string()), (TokenKind::Ident, "b".to_string())]
        );
    }

    #[test]
    fn bad_character_is_a_positioned_error() {
        let errs = tokenize("a\n  @").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!((errs[0].line, errs[0].column), (2, 3));
        assert!(errs[0].message.contains('@'));
    }

    #[test]
    fn detokenize_round_trips() {
        let src = "classify (sides) == if is_Triangle (sides) then variety (sides) else INVALID";
        let tokens = tokenize(src).unwrap();
        let relexed = tokenize(&detokenize(&tokens)).unwrap();
        assert_eq!(kinds_and_texts(&tokens), kinds_and_texts(&relexed));
    }

    #[test]
    fn decimal_numbers_and_field_dots() {
        let tokens = tokenize("3.14 sides.len").unwrap();
        assert_eq!(tokens[0].text, "3.14");
        assert_eq!(tokens[1].text, "sides");
        assert_eq!(tokens[2].text, ".");
    }
}
