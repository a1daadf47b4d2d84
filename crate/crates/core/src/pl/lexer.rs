use serde::Serialize;

use super::PlError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Tok {
    Let,
    Ident(String),
    Str(String),
    Num(f64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Colon,
    Comma,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
    /// Byte range in the source.
    pub start: usize,
    pub end: usize,
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, c: char) -> PlError {
        PlError::Lex {
            line: self.line,
            col: self.col,
            ch: c,
        }
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, PlError> {
    let mut c = Cursor {
        src,
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    while let Some(ch) = c.peek() {
        if ch.is_whitespace() {
            c.bump();
            continue;
        }
        if ch == '#' {
            while c.peek().is_some_and(|x| x != '\n') {
                c.bump();
            }
            continue;
        }
        let (line, col, start) = (c.line, c.col, c.pos);
        let tok = match ch {
            '(' | ')' | '{' | '}' | '[' | ']' | ':' | ',' | '=' => {
                c.bump();
                match ch {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ':' => Tok::Colon,
                    ',' => Tok::Comma,
                    _ => Tok::Eq,
                }
            }
            '"' => Tok::Str(lex_string(&mut c)?),
            '-' | '0'..='9' => {
                if ch == '-' && !c.peek2().is_some_and(|d| d.is_ascii_digit()) {
                    return Err(c.err(ch));
                }
                lex_number(&mut c)?
            }
            _ if ch.is_ascii_alphabetic() || ch == '_' => {
                while c.peek().is_some_and(|x| x.is_ascii_alphanumeric() || x == '_') {
                    c.bump();
                }
                let word = &src[start..c.pos];
                if word == "let" {
                    Tok::Let
                } else {
                    Tok::Ident(word.to_string())
                }
            }
            _ => return Err(c.err(ch)),
        };
        out.push(Token {
            tok,
            line,
            col,
            start,
            end: c.pos,
        });
    }
    Ok(out)
}

fn lex_string(c: &mut Cursor) -> Result<String, PlError> {
    c.bump();
    let mut s = String::new();
    loop {
        let Some(ch) = c.bump() else {
            return Err(c.err('"'));
        };
        match ch {
            '"' => return Ok(s),
            '\n' => return Err(c.err('\n')),
            '\\' => {
                let e = c.bump().ok_or_else(|| c.err('\\'))?;
                match e {
                    '"' => s.push('"'),
                    '\\' => s.push('\\'),
                    '/' => s.push('/'),
                    'n' => s.push('\n'),
                    't' => s.push('\t'),
                    'r' => s.push('\r'),
                    'b' => s.push('\u{8}'),
                    'f' => s.push('\u{c}'),
                    'u' => {
                        let hi = hex4(c)?;
                        let code = if (0xD800..0xDC00).contains(&hi) {
                            if c.bump() != Some('\\') || c.bump() != Some('u') {
                                return Err(c.err('u'));
                            }
                            let lo = hex4(c)?;
                            0x10000 + ((hi - 0xD800) << 10) + (lo.wrapping_sub(0xDC00) & 0x3FF)
                        } else {
                            hi
                        };
                        s.push(char::from_u32(code).ok_or_else(|| c.err('u'))?);
                    }
                    other => return Err(c.err(other)),
                }
            }
            _ => s.push(ch),
        }
    }
}

fn hex4(c: &mut Cursor) -> Result<u32, PlError> {
    let mut v = 0;
    for _ in 0..4 {
        let ch = c.bump().ok_or_else(|| c.err('u'))?;
        v = v * 16 + ch.to_digit(16).ok_or_else(|| c.err(ch))?;
    }
    Ok(v)
}

fn lex_number(c: &mut Cursor) -> Result<Tok, PlError> {
    let start = c.pos;
    if c.peek() == Some('-') {
        c.bump();
    }
    let digits = |c: &mut Cursor| {
        let s = c.pos;
        while c.peek().is_some_and(|d| d.is_ascii_digit()) {
            c.bump();
        }
        c.pos > s
    };
    digits(c);
    if c.peek() == Some('.') {
        c.bump();
        if !digits(c) {
            return Err(c.err(c.peek().unwrap_or('.')));
        }
    }
    if matches!(c.peek(), Some('e' | 'E')) {
        c.bump();
        if matches!(c.peek(), Some('+' | '-')) {
            c.bump();
        }
        if !digits(c) {
            return Err(c.err(c.peek().unwrap_or('e')));
        }
    }
    let text = &c.src[start..c.pos];
    text.parse::<f64>()
        .map(Tok::Num)
        .map_err(|_| c.err(text.chars().next().unwrap_or('0')))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn let_statement() {
        assert_eq!(
            toks("let s = get_cell_state()"),
            vec![
                Tok::Let,
                Tok::Ident("s".into()),
                Tok::Eq,
                Tok::Ident("get_cell_state".into()),
                Tok::LParen,
                Tok::RParen
            ]
        );
    }

    #[test]
    fn empty_and_comments() {
        assert!(toks("").is_empty());
        assert!(toks("  # nothing here\n\n# more").is_empty());
    }

    #[test]
    fn stray_char_position() {
        let e = tokenize("let x = f()\n  @").unwrap_err();
        assert_eq!(
            e,
            PlError::Lex {
                line: 2,
                col: 3,
                ch: '@'
            }
        );
    }

    #[test]
    fn numbers_and_strings() {
        assert_eq!(toks("-1.5e-3 42"), vec![Tok::Num(-1.5e-3), Tok::Num(42.0)]);
        assert_eq!(toks(r#""a\"bé\n""#), vec![Tok::Str("a\"bé\n".into())]);
        assert!(tokenize("\"open").is_err());
        assert!(tokenize("1.").is_err());
    }
}
