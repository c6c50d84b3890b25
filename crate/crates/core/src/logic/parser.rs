//! Recursive-descent parser for the textual MITL dialect.
//!
//! Precedence from tightest to loosest: negation and prefix temporal operators,
//! `U`, `and`, `or`, `->` (right associative), `<->`.

use thiserror::Error;

use super::{Atom, Comparator, Formula, TimeInterval};
use crate::rational::{parse_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Not,
    And,
    Or,
    Implies,
    Iff,
    Cmp(Comparator),
    Equals,
    Number(String),
    Ident(String),
    End,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::LBracket => "`[`".into(),
            Token::RBracket => "`]`".into(),
            Token::Comma => "`,`".into(),
            Token::Not => "negation".into(),
            Token::And => "`and`".into(),
            Token::Or => "`or`".into(),
            Token::Implies => "`->`".into(),
            Token::Iff => "`<->`".into(),
            Token::Cmp(c) => format!("`{}`", c.symbol()),
            Token::Equals => "`==`".into(),
            Token::Number(n) => format!("number `{n}`"),
            Token::Ident(i) => format!("`{i}`"),
            Token::End => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    token: Token,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut column) = (0usize, 1usize, 1usize);

    while i < chars.len() {
        let c = chars[i];
        let start = (line, column);
        let peek = |k: usize| chars.get(i + k).copied();

        if c == '\n' {
            i += 1;
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            column += 1;
            continue;
        }
        // Line comments.
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }

        let (token, width) = match c {
            '(' => (Token::LParen, 1),
            ')' => (Token::RParen, 1),
            '[' => (Token::LBracket, 1),
            ']' => (Token::RBracket, 1),
            ',' => (Token::Comma, 1),
            '!' => (Token::Not, 1),
            '/' if peek(1) == Some('\\') => (Token::And, 2),
            '\\' if peek(1) == Some('/') => (Token::Or, 2),
            '&' if peek(1) == Some('&') => (Token::And, 2),
            '|' if peek(1) == Some('|') => (Token::Or, 2),
            '-' if peek(1) == Some('>') => (Token::Implies, 2),
            '<' if peek(1) == Some('-') && peek(2) == Some('>') => (Token::Iff, 3),
            '<' if peek(1) == Some('=') => (Token::Cmp(Comparator::Le), 2),
            '<' => (Token::Cmp(Comparator::Lt), 1),
            '>' if peek(1) == Some('=') => (Token::Cmp(Comparator::Ge), 2),
            '>' => (Token::Cmp(Comparator::Gt), 1),
            '=' if peek(1) == Some('=') => (Token::Equals, 2),
            '=' => (Token::Equals, 1),
            _ if c.is_ascii_digit()
                || c == '.'
                || (c == '-' && peek(1).is_some_and(|d| d.is_ascii_digit() || d == '.')) =>
            {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                // Fraction `int/int`, but not the `/\` conjunction.
                if j + 1 < chars.len()
                    && chars[j] == '/'
                    && (chars[j + 1].is_ascii_digit() || chars[j + 1] == '-')
                {
                    j += 1;
                    if chars[j] == '-' {
                        j += 1;
                    }
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                let literal: String = chars[i..j].iter().collect();
                (Token::Number(literal), j - i)
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                let token = match word.as_str() {
                    "not" => Token::Not,
                    "and" => Token::And,
                    "or" => Token::Or,
                    _ => Token::Ident(word),
                };
                (token, j - i)
            }
            other => {
                return Err(ParseError {
                    line: start.0,
                    column: start.1,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        tokens.push(Spanned {
            token,
            line: start.0,
            column: start.1,
        });
        i += width;
        column += width;
    }
    tokens.push(Spanned {
        token: Token::End,
        line,
        column,
    });
    Ok(tokens)
}

const RESERVED: &[&str] = &[
    "true",
    "false",
    "G",
    "F",
    "U",
    "always",
    "eventually",
    "not",
    "and",
    "or",
];

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
}

/// Parses a specification source into a formula.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let mut parser = Parser {
        tokens: lex(text)?,
        pos: 0,
    };
    let formula = parser.formula()?;
    match parser.peek() {
        Token::End => Ok(formula),
        other => Err(parser.error_here(format!("unexpected {} after formula", other.describe()))),
    }
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].token
    }

    fn next(&mut self) -> Token {
        let token = self.tokens[self.pos].token.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        token
    }

    fn error_here(&self, message: String) -> ParseError {
        let spanned = &self.tokens[self.pos];
        ParseError {
            line: spanned.line,
            column: spanned.column,
            message,
        }
    }

    fn expect(&mut self, expected: Token) -> Result<(), ParseError> {
        if *self.peek() == expected {
            self.next();
            Ok(())
        } else {
            Err(self.error_here(format!(
                "expected {}, found {}",
                expected.describe(),
                self.peek().describe()
            )))
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.implication()?;
        while *self.peek() == Token::Iff {
            self.next();
            let right = self.implication()?;
            left = Formula::or(vec![
                Formula::and(vec![left.clone(), right.clone()]),
                Formula::and(vec![Formula::not(left), Formula::not(right)]),
            ]);
        }
        Ok(left)
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let left = self.disjunction()?;
        if *self.peek() == Token::Implies {
            self.next();
            let right = self.implication()?;
            return Ok(Formula::implies(left, right));
        }
        Ok(left)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut children = vec![self.conjunction()?];
        while *self.peek() == Token::Or {
            self.next();
            children.push(self.conjunction()?);
        }
        Ok(if children.len() == 1 {
            children.pop().unwrap()
        } else {
            Formula::Or(children)
        })
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut children = vec![self.unary()?];
        while *self.peek() == Token::And {
            self.next();
            children.push(self.unary()?);
        }
        Ok(if children.len() == 1 {
            children.pop().unwrap()
        } else {
            Formula::And(children)
        })
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Token::Not => {
                self.next();
                Ok(Formula::not(self.unary()?))
            }
            Token::Ident(word) if matches!(word.as_str(), "G" | "always" | "F" | "eventually") => {
                self.next();
                let interval = self.interval()?;
                let inner = self.unary()?;
                Ok(if matches!(word.as_str(), "G" | "always") {
                    Formula::always(interval, inner)
                } else {
                    Formula::eventually(interval, inner)
                })
            }
            _ => self.until(),
        }
    }

    fn until(&mut self) -> Result<Formula, ParseError> {
        let left = self.primary()?;
        if matches!(self.peek(), Token::Ident(word) if word == "U") {
            self.next();
            let interval = self.interval()?;
            let right = self.until()?;
            return Ok(Formula::until(interval, left, right));
        }
        Ok(left)
    }

    fn interval(&mut self) -> Result<TimeInterval, ParseError> {
        if *self.peek() != Token::LBracket {
            return Err(self.error_here(format!(
                "temporal operators need an explicit interval `[a,b]`, found {}",
                self.peek().describe()
            )));
        }
        let open = self.pos;
        self.next();
        let lower = self.number()?;
        self.expect(Token::Comma)?;
        let upper = self.number()?;
        self.expect(Token::RBracket)?;
        TimeInterval::new(lower, upper).map_err(|e| {
            let spanned = &self.tokens[open];
            ParseError {
                line: spanned.line,
                column: spanned.column,
                message: e.to_string(),
            }
        })
    }

    fn number(&mut self) -> Result<Rational, ParseError> {
        match self.peek().clone() {
            Token::Number(literal) => {
                let value = parse_rational(&literal).map_err(|e| self.error_here(e.to_string()))?;
                self.next();
                Ok(value)
            }
            other => Err(self.error_here(format!("expected a number, found {}", other.describe()))),
        }
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Token::LParen => {
                self.next();
                let inner = self.formula()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Token::Ident(word) if word == "true" => {
                self.next();
                Ok(Formula::True)
            }
            Token::Ident(word) if word == "false" => {
                self.next();
                Ok(Formula::False)
            }
            Token::Ident(word) if RESERVED.contains(&word.as_str()) => {
                Err(self.error_here(format!("unexpected keyword `{word}`")))
            }
            Token::Ident(channel) => {
                self.next();
                match self.peek().clone() {
                    Token::Cmp(comparator) => {
                        self.next();
                        let bound = self.number()?;
                        Ok(Formula::Atom(Atom::threshold(channel, comparator, bound)))
                    }
                    Token::Equals => Err(self.error_here(
                        "equality comparisons are not supported; use a pair of inequalities".into(),
                    )),
                    _ => Ok(Formula::Atom(Atom::prop(channel))),
                }
            }
            other => {
                Err(self.error_here(format!("expected a formula, found {}", other.describe())))
            }
        }
    }
}
