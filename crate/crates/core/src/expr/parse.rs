//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-'? power
//! power  := atom ('^' factor)?
//! atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```

use thiserror::Error;

use super::{BinOp, Constant, Func, Node};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at offset {offset}: expected {expected}, found {found}")]
    Syntax {
        offset: usize,
        expected: &'static str,
        found: String,
    },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("coordinate `{name}` at offset {offset} is outside 1..={arity}")]
    CoordinateOutOfRange {
        name: String,
        index: usize,
        arity: usize,
        offset: usize,
    },
    #[error("`{func}` takes one argument, got {got} (offset {offset})")]
    ArgumentCount {
        func: &'static str,
        got: usize,
        offset: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Number(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'0'..=b'9' | b'.' => {
                let (v, end) = lex_number(bytes, i)?;
                out.push((Tok::Number(v), start));
                i = end;
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: i,
                    expected: "a token",
                    found: format!("character `{ch}`"),
                });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, bytes.len()));
    Ok(out)
}

fn lex_number(b: &[u8], start: usize) -> Result<(f64, usize), ParseError> {
    let digits = |mut i: usize| {
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        i
    };
    let mut i = digits(start);
    let int_len = i - start;
    let mut frac_len = 0;
    if i < b.len() && b[i] == b'.' {
        let j = digits(i + 1);
        frac_len = j - i - 1;
        i = j;
    }
    if int_len == 0 && frac_len == 0 {
        return Err(ParseError::Syntax {
            offset: start,
            expected: "digits",
            found: "`.`".into(),
        });
    }
    // An exponent is only consumed when digits follow, so `2e` stays `2` then `e`.
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        let mut j = i + 1;
        if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
            j += 1;
        }
        let k = digits(j);
        if k > j {
            i = k;
        }
    }
    let text = std::str::from_utf8(&b[start..i]).expect("ascii slice");
    let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
        offset: start,
        expected: "a number",
        found: format!("`{text}`"),
    })?;
    if !v.is_finite() {
        return Err(ParseError::Syntax {
            offset: start,
            expected: "a finite number",
            found: format!("`{text}`"),
        });
    }
    Ok((v, i))
}

pub(crate) struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    arity: usize,
    prefix: &'a str,
}

impl<'a> Parser<'a> {
    pub(crate) fn new(src: &str, arity: usize, prefix: &'a str) -> Result<Self, ParseError> {
        if src.trim().is_empty() {
            return Err(ParseError::Empty);
        }
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
            arity,
            prefix,
        })
    }

    pub(crate) fn parse(mut self) -> Result<Node, ParseError> {
        let node = self.expr()?;
        match self.peek() {
            Tok::End => Ok(node),
            _ => Err(self.unexpected("an operator or end of input")),
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            expected,
            found: self.peek().describe(),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &'static str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Node, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            let inner = self.power()?;
            return Ok(Node::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exp = self.factor()?;
            return Ok(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        match self.peek().clone() {
            Tok::Number(v) => {
                self.bump();
                Ok(Node::Number(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let (_, offset) = self.bump();
                if *self.peek() == Tok::LParen {
                    return self.call(name, offset);
                }
                self.identifier(name, offset)
            }
            _ => Err(self.unexpected("a number, identifier or `(`")),
        }
    }

    fn call(&mut self, name: String, offset: usize) -> Result<Node, ParseError> {
        let func = Func::from_name(&name).ok_or(ParseError::UnknownIdentifier {
            name: name.clone(),
            offset,
        })?;
        self.bump();
        let mut args = vec![self.expr()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.expr()?);
        }
        self.expect(Tok::RParen, "`,` or `)`")?;
        if args.len() != 1 {
            return Err(ParseError::ArgumentCount {
                func: func.name(),
                got: args.len(),
                offset,
            });
        }
        Ok(Node::Call(
            func,
            Box::new(args.pop().expect("one argument")),
        ))
    }

    fn identifier(&mut self, name: String, offset: usize) -> Result<Node, ParseError> {
        match name.as_str() {
            "pi" => return Ok(Node::Const(Constant::Pi)),
            "e" => return Ok(Node::Const(Constant::E)),
            _ => {}
        }
        if Func::from_name(&name).is_some() {
            return Err(self.unexpected("`(` after function name"));
        }
        let index = name
            .strip_prefix(self.prefix)
            .filter(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|rest| rest.parse::<usize>().ok());
        match index {
            Some(k) if (1..=self.arity).contains(&k) => Ok(Node::Coord(k - 1)),
            Some(k) => Err(ParseError::CoordinateOutOfRange {
                name,
                index: k,
                arity: self.arity,
                offset,
            }),
            None => Err(ParseError::UnknownIdentifier { name, offset }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expression;

    fn err(s: &str, arity: usize) -> ParseError {
        Expression::parse(s, arity, "x").unwrap_err()
    }

    #[test]
    fn unterminated_call_reports_offset() {
        match err("sin(", 1) {
            ParseError::Syntax { offset, .. } => assert_eq!(offset, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn coordinate_out_of_range() {
        assert!(matches!(
            err("x3", 2),
            ParseError::CoordinateOutOfRange {
                index: 3,
                arity: 2,
                offset: 0,
                ..
            }
        ));
        assert!(matches!(
            err("x0", 2),
            ParseError::CoordinateOutOfRange { index: 0, .. }
        ));
    }

    #[test]
    fn unknown_identifiers() {
        assert!(matches!(err("y1", 2), ParseError::UnknownIdentifier { .. }));
        assert!(matches!(
            err("tan(x1)", 2),
            ParseError::UnknownIdentifier { .. }
        ));
        assert!(matches!(err("x", 2), ParseError::UnknownIdentifier { .. }));
    }

    #[test]
    fn misc_syntax_errors() {
        assert_eq!(err("", 1), ParseError::Empty);
        assert!(matches!(
            err("1 +", 1),
            ParseError::Syntax { offset: 3, .. }
        ));
        assert!(matches!(err("(1", 1), ParseError::Syntax { offset: 2, .. }));
        assert!(matches!(
            err("1 2", 1),
            ParseError::Syntax { offset: 2, .. }
        ));
        assert!(matches!(err("sin x1", 1), ParseError::Syntax { .. }));
        assert!(matches!(err("1e999", 1), ParseError::Syntax { .. }));
        assert!(matches!(
            err("x1 $ 2", 1),
            ParseError::Syntax { offset: 3, .. }
        ));
        assert!(matches!(
            err("--x1", 1),
            ParseError::Syntax { offset: 1, .. }
        ));
        assert!(matches!(
            err("sin(x1, 2)", 1),
            ParseError::ArgumentCount { got: 2, .. }
        ));
    }

    #[test]
    fn exponent_needs_digits() {
        // `2e` is the number 2 followed by the constant e: a syntax error, not 2e0.
        assert!(matches!(err("2e", 1), ParseError::Syntax { offset: 1, .. }));
        let e = Expression::parse("2*e", 1, "x").unwrap();
        assert_eq!(e.eval(&[0.0]).unwrap(), 2.0 * std::f64::consts::E);
    }

    #[test]
    fn prefix_is_configurable() {
        let e = Expression::parse("u1 * u2", 2, "u").unwrap();
        assert_eq!(e.eval(&[2.0, 3.0]).unwrap(), 6.0);
        assert!(Expression::parse("x1", 2, "u").is_err());
    }
}
