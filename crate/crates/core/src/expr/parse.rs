use super::{BinaryOp, Constant, Expr, UnaryOp, Var, VarKind};
use thiserror::Error;

/// Parse failures. Positions are 1-based character offsets; the end of input
/// is reported as `len + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown identifier `{name}` at position {position}")]
    UnknownIdentifier { position: usize, name: String },
    #[error("variable `{name}` at position {position} exceeds dimension {dimension}")]
    IndexOutOfRange {
        position: usize,
        name: String,
        dimension: usize,
    },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { position, .. }
            | ParseError::UnknownIdentifier { position, .. }
            | ParseError::IndexOutOfRange { position, .. } => *position,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Punct(char),
    End,
}

#[derive(Debug, Clone)]
struct Spanned {
    token: Token,
    position: usize,
}

fn tokenize(source: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let position = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            // exponent only when followed by digits, so `2e` stays `2` then `e`
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text.parse::<f64>().map_err(|_| ParseError::Syntax {
                position,
                message: format!("malformed number `{text}`"),
            })?;
            tokens.push(Spanned {
                token: Token::Num(value),
                position,
            });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            tokens.push(Spanned {
                token: Token::Ident(chars[start..i].iter().collect()),
                position,
            });
        } else if "+-*/^(),".contains(c) {
            tokens.push(Spanned {
                token: Token::Punct(c),
                position,
            });
            i += 1;
        } else {
            return Err(ParseError::Syntax {
                position,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    tokens.push(Spanned {
        token: Token::End,
        position: chars.len() + 1,
    });
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Spanned>,
    cursor: usize,
    dimension: usize,
}

/// Parse `source` into an expression whose variable indices lie in
/// `1..=dimension`.
///
/// Precedence from loosest to tightest: `+ -`, `* /`, unary minus, `^`.
/// Binary operators are left-associative except `^`, which is
/// right-associative and accepts a signed exponent (`2^-x`).
pub fn parse(source: &str, dimension: usize) -> Result<Expr, ParseError> {
    let mut parser = Parser {
        tokens: tokenize(source)?,
        cursor: 0,
        dimension,
    };
    let expr = parser.expression()?;
    let trailing = parser.peek();
    if trailing.token != Token::End {
        return Err(ParseError::Syntax {
            position: trailing.position,
            message: "unexpected trailing input".into(),
        });
    }
    Ok(expr)
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.tokens[self.cursor]
    }

    fn advance(&mut self) -> Spanned {
        let tok = self.tokens[self.cursor].clone();
        if self.cursor + 1 < self.tokens.len() {
            self.cursor += 1;
        }
        tok
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek().token == Token::Punct(c) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            let tok = self.peek();
            Err(ParseError::Syntax {
                position: tok.position,
                message: format!("expected `{c}`, found {}", describe(&tok.token)),
            })
        }
    }

    fn expression(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().token {
                Token::Punct('+') => BinaryOp::Add,
                Token::Punct('-') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().token {
                Token::Punct('*') => BinaryOp::Mul,
                Token::Punct('/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            Ok(Expr::neg(self.unary()?))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.eat('^') {
            let exponent = self.unary()?;
            Ok(Expr::pow(base, exponent))
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let tok = self.advance();
        match tok.token {
            Token::Num(v) => Ok(Expr::Num(v)),
            Token::Punct('(') => {
                let inner = self.expression()?;
                self.expect(')')?;
                Ok(inner)
            }
            Token::Ident(name) => self.identifier(name, tok.position),
            other => Err(ParseError::Syntax {
                position: tok.position,
                message: format!("expected an operand, found {}", describe(&other)),
            }),
        }
    }

    fn identifier(&mut self, name: String, position: usize) -> Result<Expr, ParseError> {
        let function = UnaryOp::FUNCTIONS
            .iter()
            .find(|(fname, _)| *fname == name)
            .map(|(_, op)| *op);
        let called = self.peek().token == Token::Punct('(');
        match (function, called) {
            (Some(op), true) => {
                self.advance();
                let arg = self.expression()?;
                self.expect(')')?;
                Ok(Expr::unary(op, arg))
            }
            (Some(_), false) => {
                let next = self.peek();
                Err(ParseError::Syntax {
                    position: next.position,
                    message: format!("expected `(` after function `{name}`"),
                })
            }
            (None, true) => Err(ParseError::UnknownIdentifier { position, name }),
            (None, false) => match name.as_str() {
                "pi" => Ok(Expr::Const(Constant::Pi)),
                "e" => Ok(Expr::Const(Constant::E)),
                _ => self.variable(name, position),
            },
        }
    }

    fn variable(&self, name: String, position: usize) -> Result<Expr, ParseError> {
        let kind = match name.chars().next() {
            Some('x') => VarKind::Chart,
            Some('y') => VarKind::Fiber,
            _ => return Err(ParseError::UnknownIdentifier { position, name }),
        };
        let digits = &name[1..];
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(ParseError::UnknownIdentifier { position, name });
        }
        let index: usize = match digits.parse() {
            Ok(i) => i,
            Err(_) => {
                return Err(ParseError::IndexOutOfRange {
                    position,
                    name,
                    dimension: self.dimension,
                })
            }
        };
        if index == 0 || index > self.dimension {
            return Err(ParseError::IndexOutOfRange {
                position,
                name,
                dimension: self.dimension,
            });
        }
        Ok(Expr::Var(Var { kind, index }))
    }
}

fn describe(token: &Token) -> String {
    match token {
        Token::Num(v) => format!("number {v}"),
        Token::Ident(name) => format!("`{name}`"),
        Token::Punct(c) => format!("`{c}`"),
        Token::End => "end of input".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::UnaryOp;

    #[test]
    fn parses_blow_up_spray() {
        let e = parse("pi*(1 + y1^2)", 1).unwrap();
        let expected = Expr::mul(
            Expr::Const(Constant::Pi),
            Expr::add(Expr::num(1.0), Expr::pow(Expr::y(1), Expr::num(2.0))),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn single_identifier() {
        assert_eq!(parse("x1", 2).unwrap(), Expr::x(1));
    }

    #[test]
    fn dangling_operator_reports_end_position() {
        let err = parse("1 +", 1).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { position: 4, .. }), "{err:?}");
    }

    #[test]
    fn precedence_and_associativity() {
        // -x^2 is -(x^2)
        assert_eq!(
            parse("-x1^2", 1).unwrap(),
            Expr::neg(Expr::pow(Expr::x(1), Expr::num(2.0)))
        );
        // right-associative power
        assert_eq!(
            parse("2^3^2", 1).unwrap(),
            Expr::pow(Expr::num(2.0), Expr::pow(Expr::num(3.0), Expr::num(2.0)))
        );
        // left-associative subtraction
        assert_eq!(
            parse("1-2-3", 1).unwrap(),
            Expr::sub(Expr::sub(Expr::num(1.0), Expr::num(2.0)), Expr::num(3.0))
        );
        assert_eq!(
            parse("2^-y1", 1).unwrap(),
            Expr::pow(Expr::num(2.0), Expr::neg(Expr::y(1)))
        );
        assert_eq!(
            parse("sin(x1)*2", 1).unwrap(),
            Expr::mul(Expr::unary(UnaryOp::Sin, Expr::x(1)), Expr::num(2.0))
        );
    }

    #[test]
    fn scientific_literals() {
        assert_eq!(parse("2.5e-3", 1).unwrap(), Expr::num(2.5e-3));
        assert_eq!(parse(".5", 1).unwrap(), Expr::num(0.5));
    }

    #[test]
    fn distinct_error_kinds() {
        assert!(matches!(
            parse("z1 + 1", 1),
            Err(ParseError::UnknownIdentifier { position: 1, .. })
        ));
        assert!(matches!(
            parse("foo(x1)", 1),
            Err(ParseError::UnknownIdentifier { position: 1, .. })
        ));
        assert!(matches!(
            parse("x1 + y3", 2),
            Err(ParseError::IndexOutOfRange { position: 6, dimension: 2, .. })
        ));
        assert!(matches!(parse("x0", 2), Err(ParseError::IndexOutOfRange { .. })));
        assert!(matches!(parse("sin x1", 1), Err(ParseError::Syntax { position: 5, .. })));
    }

    #[test]
    fn rejects_malformed_corpus() {
        let corpus = [
            ("", 1),
            ("(", 2),
            ("x1)", 3),
            ("1 2", 3),
            ("*x1", 1),
            ("x1 +* y1", 5),
            ("sin()", 5),
            ("(x1", 4),
            ("x1 # 2", 4),
            ("3..2", 3),
            ("x1^", 4),
            ("cos(x1,", 7),
            ("1 / ", 5),
        ];
        for (src, pos) in corpus {
            let err = parse(src, 2).expect_err(src);
            assert_eq!(err.position(), pos, "source {src:?}: {err}");
        }
    }
}
