//! Rule-file parser.
//!
//! Grammar, one rule per clause:
//!
//! ```text
//! [@tag(weight=W)] head(Vars) :- atom {, atom} .
//! ```
//!
//! `#` starts a line comment. Identifiers are case-sensitive; terms beginning
//! with an uppercase letter are variables, anything else is a constant.
//! Parse errors carry line and column.

use std::fmt;

use super::{Atom, Rule, RuleTag, Term};

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Number(f64),
    At,
    LParen,
    RParen,
    Comma,
    ColonDash,
    Period,
    Equals,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Ident(s) => write!(f, "identifier {s:?}"),
            Token::Number(n) => write!(f, "number {n}"),
            Token::At => write!(f, "'@'"),
            Token::LParen => write!(f, "'('"),
            Token::RParen => write!(f, "')'"),
            Token::Comma => write!(f, "','"),
            Token::ColonDash => write!(f, "':-'"),
            Token::Period => write!(f, "'.'"),
            Token::Equals => write!(f, "'='"),
        }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

#[derive(Debug, Clone)]
struct Spanned {
    token: Token,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            message: message.into(),
        }
    }

    fn tokenize(mut self) -> Result<Vec<Spanned>, ParseError> {
        let mut tokens = Vec::new();
        loop {
            let Some(&c) = self.chars.peek() else { break };
            if c.is_whitespace() {
                self.bump();
                continue;
            }
            if c == '#' {
                while let Some(&c) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            let (line, col) = (self.line, self.col);
            let token = match c {
                '@' => {
                    self.bump();
                    Token::At
                }
                '(' => {
                    self.bump();
                    Token::LParen
                }
                ')' => {
                    self.bump();
                    Token::RParen
                }
                ',' => {
                    self.bump();
                    Token::Comma
                }
                '.' => {
                    self.bump();
                    Token::Period
                }
                '=' => {
                    self.bump();
                    Token::Equals
                }
                ':' => {
                    self.bump();
                    if self.chars.peek() == Some(&'-') {
                        self.bump();
                        Token::ColonDash
                    } else {
                        return Err(self.error("expected '-' after ':'"));
                    }
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let mut ident = String::new();
                    while let Some(&c) = self.chars.peek() {
                        if c.is_ascii_alphanumeric() || c == '_' {
                            ident.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    Token::Ident(ident)
                }
                c if c.is_ascii_digit() || c == '-' || c == '+' => {
                    let mut text = String::new();
                    while let Some(&c) = self.chars.peek() {
                        if c.is_ascii_digit() || c == '.' || c == '-' || c == '+' || c == 'e' {
                            // A '.' directly followed by a non-digit is the
                            // rule terminator, not part of the number.
                            if c == '.' {
                                let mut ahead = self.chars.clone();
                                ahead.next();
                                if !matches!(ahead.peek(), Some(d) if d.is_ascii_digit()) {
                                    break;
                                }
                            }
                            text.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    let value: f64 = text
                        .parse()
                        .map_err(|_| self.error(format!("bad number {text:?}")))?;
                    Token::Number(value)
                }
                other => return Err(self.error(format!("unexpected character {other:?}"))),
            };
            tokens.push(Spanned { token, line, col });
        }
        Ok(tokens)
    }
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    end_line: usize,
    end_col: usize,
    /// Predicate name -> (arity, first-seen line).
    arities: std::collections::HashMap<String, (usize, usize)>,
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Spanned> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, line: usize, col: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        match self.peek() {
            Some(t) => self.error_at(t.line, t.col, message),
            None => self.error_at(self.end_line, self.end_col, message),
        }
    }

    fn expect(&mut self, want: &Token, what: &str) -> Result<Spanned, ParseError> {
        match self.next() {
            Some(t) if t.token == *want => Ok(t),
            Some(t) => Err(self.error_at(
                t.line,
                t.col,
                format!("expected {what}, found {}", t.token),
            )),
            None => Err(self.error_at(
                self.end_line,
                self.end_col,
                format!("expected {what}, found end of input"),
            )),
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, usize, usize), ParseError> {
        match self.next() {
            Some(Spanned {
                token: Token::Ident(s),
                line,
                col,
            }) => Ok((s, line, col)),
            Some(t) => Err(self.error_at(
                t.line,
                t.col,
                format!("expected {what}, found {}", t.token),
            )),
            None => Err(self.error_at(
                self.end_line,
                self.end_col,
                format!("expected {what}, found end of input"),
            )),
        }
    }

    fn check_arity(
        &mut self,
        pred: &str,
        arity: usize,
        line: usize,
        col: usize,
    ) -> Result<(), ParseError> {
        match self.arities.get(pred) {
            Some(&(expected, first_line)) if expected != arity => Err(self.error_at(
                line,
                col,
                format!(
                    "predicate {pred} used with arity {arity} but declared with arity {expected} at line {first_line}"
                ),
            )),
            Some(_) => Ok(()),
            None => {
                self.arities.insert(pred.to_string(), (arity, line));
                Ok(())
            }
        }
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let (pred, line, col) = self.ident("a predicate name")?;
        self.expect(&Token::LParen, "'('")?;
        let mut terms = Vec::new();
        loop {
            let (term, _, _) = self.ident("a variable or constant")?;
            terms.push(if term.chars().next().is_some_and(|c| c.is_uppercase()) {
                Term::Var(term)
            } else {
                Term::Const(term)
            });
            match self.next() {
                Some(Spanned {
                    token: Token::Comma,
                    ..
                }) => continue,
                Some(Spanned {
                    token: Token::RParen,
                    ..
                }) => break,
                Some(t) => {
                    return Err(self.error_at(
                        t.line,
                        t.col,
                        format!("expected ',' or ')', found {}", t.token),
                    ))
                }
                None => return Err(self.error_here("expected ',' or ')', found end of input")),
            }
        }
        self.check_arity(&pred, terms.len(), line, col)?;
        Ok(Atom { pred, terms })
    }

    fn annotation(&mut self) -> Result<(RuleTag, f64), ParseError> {
        // '@' already consumed by the caller.
        let (tag_name, line, col) = self.ident("a tag name")?;
        let tag = match tag_name.as_str() {
            "safety" => RuleTag::Safety,
            "efficiency" => RuleTag::Efficiency,
            other => {
                return Err(self.error_at(
                    line,
                    col,
                    format!("unknown tag {other:?}, expected safety or efficiency"),
                ))
            }
        };
        self.expect(&Token::LParen, "'('")?;
        let (key, kline, kcol) = self.ident("weight")?;
        if key != "weight" {
            return Err(self.error_at(kline, kcol, format!("expected 'weight', found {key:?}")));
        }
        self.expect(&Token::Equals, "'='")?;
        let weight = match self.next() {
            Some(Spanned {
                token: Token::Number(w),
                line,
                col,
            }) => {
                if !w.is_finite() || w < 0.0 {
                    return Err(self.error_at(line, col, format!("bad weight {w}")));
                }
                w
            }
            Some(t) => {
                return Err(self.error_at(
                    t.line,
                    t.col,
                    format!("expected a weight value, found {}", t.token),
                ))
            }
            None => return Err(self.error_here("expected a weight value, found end of input")),
        };
        self.expect(&Token::RParen, "')'")?;
        Ok((tag, weight))
    }

    fn rule(&mut self) -> Result<Rule, ParseError> {
        let mut tag = RuleTag::None;
        let mut importance = 1.0;
        if matches!(
            self.peek(),
            Some(Spanned {
                token: Token::At,
                ..
            })
        ) {
            self.next();
            let (t, w) = self.annotation()?;
            tag = t;
            importance = w;
        }
        let head = self.atom()?;
        let head_pos = (self.end_line, self.end_col);
        self.expect(&Token::ColonDash, "':-'")?;
        let mut body = vec![self.atom()?];
        loop {
            match self.next() {
                Some(Spanned {
                    token: Token::Comma,
                    ..
                }) => body.push(self.atom()?),
                Some(Spanned {
                    token: Token::Period,
                    ..
                }) => break,
                Some(t) => {
                    return Err(self.error_at(
                        t.line,
                        t.col,
                        format!("expected ',' or '.', found {}", t.token),
                    ))
                }
                None => {
                    return Err(self.error_at(
                        self.end_line,
                        self.end_col,
                        "missing terminal '.'".to_string(),
                    ))
                }
            }
        }

        // Range restriction: every head variable must occur in the body.
        for term in &head.terms {
            if let Term::Var(v) = term {
                let bound = body.iter().any(|atom| {
                    atom.terms
                        .iter()
                        .any(|t| matches!(t, Term::Var(b) if b == v))
                });
                if !bound {
                    return Err(self.error_at(
                        head_pos.0,
                        head_pos.1,
                        format!("head variable {v} does not appear in the rule body"),
                    ));
                }
            }
        }

        Ok(Rule {
            head,
            body,
            tag,
            importance,
        })
    }
}

/// Parses a rule file. Duplicate heads are permitted (disjunction).
pub fn parse_rules(text: &str) -> Result<Vec<Rule>, ParseError> {
    let end_line = text.lines().count().max(1);
    let end_col = text.lines().last().map_or(1, |l| l.chars().count() + 1);
    let tokens = Lexer::new(text).tokenize()?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end_line,
        end_col,
        arities: std::collections::HashMap::new(),
    };
    let mut rules = Vec::new();
    while parser.peek().is_some() {
        rules.push(parser.rule()?);
    }
    Ok(rules)
}
