//! Tokenizer for the expression language. Tracks line and column (both
//! 1-based) so parse errors point at the offending character.

use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(super) enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Tok {
    /// Human-readable form for error messages.
    pub(super) fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number `{v}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Ge => "`>=`".into(),
        }
    }

    pub(super) fn is_relop(&self) -> bool {
        matches!(self, Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(super) struct Spanned {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> char {
        let c = self.chars.next().expect("bump past end of input");
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }
}

pub(super) fn tokenize(source: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut cur = Cursor {
        chars: source.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let (line, col) = (cur.line, cur.col);
        let tok = match c {
            '+' => {
                cur.bump();
                Tok::Plus
            }
            '-' => {
                cur.bump();
                Tok::Minus
            }
            '*' => {
                cur.bump();
                Tok::Star
            }
            '/' => {
                cur.bump();
                Tok::Slash
            }
            '^' => {
                cur.bump();
                Tok::Caret
            }
            '(' => {
                cur.bump();
                Tok::LParen
            }
            ')' => {
                cur.bump();
                Tok::RParen
            }
            ',' => {
                cur.bump();
                Tok::Comma
            }
            '<' | '>' => {
                let first = cur.bump();
                let eq = cur.peek() == Some('=');
                if eq {
                    cur.bump();
                }
                match (first, eq) {
                    ('<', false) => Tok::Lt,
                    ('<', true) => Tok::Le,
                    ('>', false) => Tok::Gt,
                    _ => Tok::Ge,
                }
            }
            '0'..='9' => {
                let mut text = String::new();
                while matches!(cur.peek(), Some('0'..='9')) {
                    text.push(cur.bump());
                }
                if cur.peek() == Some('.') {
                    text.push(cur.bump());
                    if !matches!(cur.peek(), Some('0'..='9')) {
                        return Err(ParseError::new(
                            cur.line,
                            cur.col,
                            "expected digit after decimal point",
                        ));
                    }
                    while matches!(cur.peek(), Some('0'..='9')) {
                        text.push(cur.bump());
                    }
                }
                if matches!(cur.peek(), Some('e' | 'E')) {
                    text.push(cur.bump());
                    if matches!(cur.peek(), Some('+' | '-')) {
                        text.push(cur.bump());
                    }
                    if !matches!(cur.peek(), Some('0'..='9')) {
                        return Err(ParseError::new(
                            cur.line,
                            cur.col,
                            "expected digit in exponent",
                        ));
                    }
                    while matches!(cur.peek(), Some('0'..='9')) {
                        text.push(cur.bump());
                    }
                }
                let value: f64 = text.parse().map_err(|_| {
                    ParseError::new(line, col, format!("invalid number literal `{text}`"))
                })?;
                Tok::Num(value)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut name = String::new();
                while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                    name.push(cur.bump());
                }
                Tok::Ident(name)
            }
            other => {
                return Err(ParseError::new(
                    line,
                    col,
                    format!("unexpected character `{other}`"),
                ));
            }
        };
        out.push(Spanned { tok, line, col });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|s| s.tok).collect()
    }

    #[test]
    fn numbers_and_operators() {
        assert_eq!(
            toks("1 + 2.5*3e-1"),
            vec![
                Tok::Num(1.0),
                Tok::Plus,
                Tok::Num(2.5),
                Tok::Star,
                Tok::Num(0.3)
            ]
        );
    }

    #[test]
    fn relational_operators() {
        assert_eq!(toks("< <= > >="), vec![Tok::Lt, Tok::Le, Tok::Gt, Tok::Ge]);
    }

    #[test]
    fn identifiers() {
        assert_eq!(
            toks("sin(x12)"),
            vec![
                Tok::Ident("sin".into()),
                Tok::LParen,
                Tok::Ident("x12".into()),
                Tok::RParen
            ]
        );
    }

    #[test]
    fn positions_track_lines_and_columns() {
        let spanned = tokenize("1 +\n  t").unwrap();
        assert_eq!((spanned[0].line, spanned[0].col), (1, 1));
        assert_eq!((spanned[1].line, spanned[1].col), (1, 3));
        assert_eq!((spanned[2].line, spanned[2].col), (2, 3));
    }

    #[test]
    fn bad_input_is_rejected_with_position() {
        let err = tokenize("1 + $").unwrap_err();
        assert_eq!((err.line, err.col), (1, 5));

        assert!(tokenize("1.").is_err());
        assert!(tokenize("2e").is_err());
        assert!(tokenize("2e+").is_err());
    }
}
