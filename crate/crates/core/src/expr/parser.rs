//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := atom ("^" nonneg-integer)?
//! atom   := number | "i" | var | func "(" expr ")" | "(" expr ")" | "-" atom
//! var    := "z" positive-integer
//! func   := re | im | abs | abs2 | ln | exp | conj
//! ```
//!
//! Unary minus is an atom, so `-z1^2` parses as `(-z1)^2`.

use super::{BinaryOp, Expr, UnaryOp};
use crate::error::{Error, Result};
use crate::point::C64;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
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
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // optional exponent, only if digits follow
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                out.push((start, Tok::Number(text[start..i].to_string())));
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                while i < bytes.len() && bytes[i].is_ascii_alphabetic() {
                    i += 1;
                }
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
                continue;
            }
            _ => {
                return Err(Error::Syntax {
                    position: start,
                    expected: "a token".into(),
                    found: format!(
                        "character `{}`",
                        text[start..].chars().next().unwrap_or('?')
                    ),
                })
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    dimension: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn position(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> Error {
        Error::Syntax {
            position: self.position(),
            expected: expected.into(),
            found: self.peek().describe(),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&tok.describe()))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        match self.peek().clone() {
            Tok::Number(s) if s.bytes().all(|b| b.is_ascii_digit()) => {
                let k: u32 = s
                    .parse()
                    .map_err(|_| self.error("a non-negative integer exponent"))?;
                self.bump();
                Ok(Expr::pow_raw(base, k))
            }
            _ => Err(self.error("a non-negative integer exponent")),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Number(s) => {
                let v: f64 = s.parse().map_err(|_| self.error("a decimal literal"))?;
                self.bump();
                Ok(Expr::real(v))
            }
            Tok::Minus => {
                self.bump();
                Ok(Expr::unary(UnaryOp::Neg, self.atom()?))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let at = self.position();
                if name == "i" {
                    self.bump();
                    return Ok(Expr::constant(C64::new(0.0, 1.0)));
                }
                if let Some(digits) = name.strip_prefix('z') {
                    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                        let index: usize = digits.parse().unwrap_or(0);
                        if index == 0 || index > self.dimension {
                            return Err(Error::VariableOutOfRange {
                                index,
                                dimension: self.dimension,
                            });
                        }
                        self.bump();
                        return Ok(Expr::var(index));
                    }
                }
                if let Some(op) = UnaryOp::from_name(&name) {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen)?;
                    return Ok(Expr::unary(op, arg));
                }
                Err(Error::Syntax {
                    position: at,
                    expected: "a variable z<k>, `i`, or one of re, im, abs, abs2, ln, exp, conj"
                        .into(),
                    found: format!("identifier `{name}`"),
                })
            }
            _ => Err(self.error("a number, variable, function, '(' or '-'")),
        }
    }
}

/// Parses `text` as an expression in `dimension` complex variables.
pub fn parse(text: &str, dimension: usize) -> Result<Expr> {
    if dimension == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
        dimension,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error("an operator or end of input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Node;

    #[test]
    fn sum_of_squared_moduli() {
        let e = parse("abs2(z1) + abs2(z2)", 2).unwrap();
        let expected = Expr::binary(
            BinaryOp::Add,
            Expr::unary(UnaryOp::Abs2, Expr::var(1)),
            Expr::unary(UnaryOp::Abs2, Expr::var(2)),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn product_of_re_and_im() {
        let e = parse("re(z1)*im(z2)", 2).unwrap();
        let expected = Expr::binary(
            BinaryOp::Mul,
            Expr::unary(UnaryOp::Re, Expr::var(1)),
            Expr::unary(UnaryOp::Im, Expr::var(2)),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn unbalanced_parenthesis_reports_end_of_input() {
        let err = parse("ln(abs(z1)", 1).unwrap_err();
        match err {
            Error::Syntax {
                position, found, ..
            } => {
                assert_eq!(position, 10);
                assert_eq!(found, "end of input");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn variable_out_of_range() {
        assert_eq!(
            parse("z3", 2).unwrap_err(),
            Error::VariableOutOfRange {
                index: 3,
                dimension: 2
            }
        );
        assert!(matches!(
            parse("z0", 2),
            Err(Error::VariableOutOfRange { .. })
        ));
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse("z1 - z2 - 1", 2).unwrap();
        assert_eq!(e.to_string(), "((z1 - z2) - 1)");
        let e = parse("2 + 3*z1^2", 1).unwrap();
        assert_eq!(e.to_string(), "(2 + (3 * (z1)^2))");
        // unary minus is an atom
        let e = parse("-z1^2", 1).unwrap();
        assert!(matches!(e.node(), Node::Pow(..)));
    }

    #[test]
    fn rejects_bad_exponent_and_trailing_tokens() {
        assert!(matches!(parse("z1^1.5", 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse("z1^-2", 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse("z1 z1", 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse("foo(z1)", 1), Err(Error::Syntax { .. })));
        assert!(matches!(
            parse("z1 $ 2", 1),
            Err(Error::Syntax { position: 3, .. })
        ));
    }

    #[test]
    fn literals() {
        assert_eq!(parse("1.25", 1).unwrap(), Expr::real(1.25));
        assert_eq!(parse("1e-3", 1).unwrap(), Expr::real(1e-3));
        assert_eq!(parse(" i ", 1).unwrap(), Expr::constant(C64::new(0.0, 1.0)));
    }
}
