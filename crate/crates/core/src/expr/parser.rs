//! Recursive-descent parser. Grammar, loosest to tightest binding:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ('^' factor)?            -- '^' is right-associative
//! base   := literal | variable | call | '(' expr ')' | '-' base
//! ```
//!
//! Comparisons never appear in ordinary expressions; they exist only as the
//! condition slots of `pw(cond1, v1, ..., condk, vk, default)`.

use super::lexer::{tokenize, Spanned, Tok};
use super::{BinOp, Cond, Expr, Func1, Func2, ParseError, RelOp};

pub(super) fn parse(source: &str, order: usize) -> Result<Expr, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        order,
    };
    let expr = parser.expr()?;
    if let Some(tok) = parser.peek() {
        return Err(parser.unexpected(&tok, "end of expression"));
    }
    Ok(expr)
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    order: usize,
}

impl Parser {
    fn peek(&self) -> Option<Spanned> {
        self.tokens.get(self.pos).cloned()
    }

    fn bump(&mut self) -> Option<Spanned> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    /// Position of the previous token's end, for errors at end of input.
    fn eof_pos(&self) -> (u32, u32) {
        self.tokens
            .last()
            .map(|s| (s.line, s.col + 1))
            .unwrap_or((1, 1))
    }

    fn unexpected(&self, found: &Spanned, wanted: &str) -> ParseError {
        if found.tok.is_relop() {
            return ParseError::new(
                found.line,
                found.col,
                "comparisons are only allowed as pw(...) conditions",
            );
        }
        ParseError::new(
            found.line,
            found.col,
            format!("expected {wanted}, found {}", found.tok.describe()),
        )
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> Result<(), ParseError> {
        match self.bump() {
            Some(s) if s.tok == tok => Ok(()),
            Some(s) => Err(self.unexpected(&s, wanted)),
            None => {
                let (line, col) = self.eof_pos();
                Err(ParseError::new(
                    line,
                    col,
                    format!("expected {wanted}, found end of input"),
                ))
            }
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().map(|s| s.tok) {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek().map(|s| s.tok) {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if matches!(self.peek().map(|s| s.tok), Some(Tok::Caret)) {
            self.bump();
            let exponent = self.factor()?; // right-associative
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let Some(s) = self.bump() else {
            let (line, col) = self.eof_pos();
            return Err(ParseError::new(
                line,
                col,
                "expected expression, found end of input",
            ));
        };
        match s.tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Minus => Ok(Expr::Neg(Box::new(self.base()?))),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => self.ident(name, s.line, s.col),
            other => Err(self.unexpected(
                &Spanned {
                    tok: other,
                    line: s.line,
                    col: s.col,
                },
                "expression",
            )),
        }
    }

    fn ident(&mut self, name: String, line: u32, col: u32) -> Result<Expr, ParseError> {
        let called = matches!(self.peek().map(|s| s.tok), Some(Tok::LParen));
        if called {
            self.bump(); // consume '('
            if name == "pw" {
                return self.piecewise();
            }
            if let Some(f) = func1(&name) {
                let arg = self.expr()?;
                if matches!(self.peek().map(|s| s.tok), Some(Tok::Comma)) {
                    let s = self.peek().unwrap();
                    return Err(ParseError::new(
                        s.line,
                        s.col,
                        format!("{name} takes exactly 1 argument"),
                    ));
                }
                self.expect(Tok::RParen, "`)`")?;
                return Ok(Expr::Call1(f, Box::new(arg)));
            }
            if let Some(f) = func2(&name) {
                let a = self.expr()?;
                self.expect(
                    Tok::Comma,
                    &format!("`,` ({name} takes exactly 2 arguments)"),
                )?;
                let b = self.expr()?;
                self.expect(
                    Tok::RParen,
                    &format!("`)` ({name} takes exactly 2 arguments)"),
                )?;
                return Ok(Expr::Call2(f, Box::new(a), Box::new(b)));
            }
            return Err(ParseError::new(
                line,
                col,
                format!("unknown function `{name}`"),
            ));
        }
        match name.as_str() {
            "t" => Ok(Expr::Time),
            "pi" => Ok(Expr::Pi),
            _ => {
                if let Some(digits) = name.strip_prefix('x') {
                    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                        let index: usize = digits.parse().map_err(|_| {
                            ParseError::new(line, col, format!("state index `{name}` overflows"))
                        })?;
                        if index == 0 {
                            return Err(ParseError::new(line, col, "state indices start at x1"));
                        }
                        if index > self.order {
                            return Err(ParseError::new(
                                line,
                                col,
                                format!(
                                    "state variable x{index} out of range: this expression may use {}",
                                    match self.order {
                                        0 => "t only".to_string(),
                                        1 => "x1".to_string(),
                                        n => format!("x1..x{n}"),
                                    }
                                ),
                            ));
                        }
                        return Ok(Expr::State(index));
                    }
                }
                Err(ParseError::new(
                    line,
                    col,
                    format!("unknown identifier `{name}`"),
                ))
            }
        }
    }

    /// Arguments of `pw(...)` after the opening paren: one or more
    /// `cond, value` pairs followed by a default expression.
    fn piecewise(&mut self) -> Result<Expr, ParseError> {
        let mut arms = Vec::new();
        loop {
            let first = self.expr()?;
            let relop = match self.peek().map(|s| s.tok) {
                Some(Tok::Lt) => Some(RelOp::Lt),
                Some(Tok::Le) => Some(RelOp::Le),
                Some(Tok::Gt) => Some(RelOp::Gt),
                Some(Tok::Ge) => Some(RelOp::Ge),
                _ => None,
            };
            let Some(op) = relop else {
                // `first` is the default expression.
                if arms.is_empty() {
                    let (line, col) = match self.peek() {
                        Some(s) => (s.line, s.col),
                        None => self.eof_pos(),
                    };
                    return Err(ParseError::new(
                        line,
                        col,
                        "pw needs at least one `condition, value` pair before the default",
                    ));
                }
                self.expect(Tok::RParen, "`)` after the pw default")?;
                return Ok(Expr::Piecewise {
                    arms,
                    default: Box::new(first),
                });
            };
            self.bump(); // consume the relop
            let rhs = self.expr()?;
            self.expect(Tok::Comma, "`,` after pw condition")?;
            let value = self.expr()?;
            arms.push((
                Cond {
                    lhs: first,
                    op,
                    rhs,
                },
                value,
            ));
            self.expect(Tok::Comma, "`,` and then another pw arm or the default")?;
        }
    }
}

fn func1(name: &str) -> Option<Func1> {
    Some(match name {
        "sin" => Func1::Sin,
        "cos" => Func1::Cos,
        "tan" => Func1::Tan,
        "exp" => Func1::Exp,
        "ln" => Func1::Ln,
        "sqrt" => Func1::Sqrt,
        "abs" => Func1::Abs,
        "sign" => Func1::Sign,
        _ => return None,
    })
}

fn func2(name: &str) -> Option<Func2> {
    Some(match name {
        "min" => Func2::Min,
        "max" => Func2::Max,
        _ => return None,
    })
}
