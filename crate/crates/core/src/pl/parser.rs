use std::collections::BTreeSet;

use super::lexer::{tokenize, Tok, Token};
use super::{Call, Expr, PlError, Program, Stmt};

struct Parser<'a> {
    src: &'a str,
    toks: &'a [Token],
    i: usize,
    bound: BTreeSet<String>,
}

fn describe(t: Option<&Token>) -> String {
    match t.map(|t| &t.tok) {
        None => "end of input".into(),
        Some(Tok::Let) => "`let`".into(),
        Some(Tok::Ident(s)) => format!("identifier `{s}`"),
        Some(Tok::Str(_)) => "string".into(),
        Some(Tok::Num(_)) => "number".into(),
        Some(t) => format!("{t:?}"),
    }
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.tok)
    }

    fn err(&self, expected: &str) -> PlError {
        let t = self.toks.get(self.i);
        let (line, col) = t
            .map(|t| (t.line, t.col))
            .or_else(|| self.toks.last().map(|t| (t.line, t.col + (t.end - t.start))))
            .unwrap_or((1, 1));
        PlError::Parse {
            line,
            col,
            expected: expected.into(),
            found: describe(t),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), PlError> {
        if self.peek() == Some(&want) {
            self.i += 1;
            Ok(())
        } else {
            Err(self.err(what))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, PlError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.i += 1;
                Ok(s)
            }
            _ => Err(self.err(what)),
        }
    }

    fn statement(&mut self) -> Result<Stmt, PlError> {
        let line = self.toks[self.i].line;
        let binding = if self.peek() == Some(&Tok::Let) {
            self.i += 1;
            let name = self.ident("variable name")?;
            self.expect(Tok::Eq, "`=`")?;
            Some(name)
        } else {
            None
        };
        let call = self.call()?;
        if let Some(b) = &binding {
            self.bound.insert(b.clone());
        }
        Ok(Stmt { binding, call, line })
    }

    fn call(&mut self) -> Result<Call, PlError> {
        let ability = self.ident("ability name")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut args: Vec<(String, Expr)> = Vec::new();
        if self.peek() != Some(&Tok::RParen) {
            loop {
                let at = self.i;
                let name = self.ident("argument name")?;
                if args.iter().any(|(n, _)| *n == name) {
                    self.i = at;
                    return Err(self.err(&format!("argument other than duplicate `{name}`")));
                }
                self.expect(Tok::Colon, "`:`")?;
                let e = self.expr()?;
                args.push((name, e));
                if self.peek() == Some(&Tok::Comma) {
                    self.i += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)` or `,`")?;
        Ok(Call { ability, args })
    }

    fn number(&mut self) -> Result<f64, PlError> {
        match self.peek() {
            Some(Tok::Num(v)) => {
                let v = *v;
                self.i += 1;
                Ok(v)
            }
            _ => Err(self.err("number")),
        }
    }

    fn expr(&mut self) -> Result<Expr, PlError> {
        match self.peek().cloned() {
            Some(Tok::Str(s)) => {
                self.i += 1;
                Ok(Expr::Str(s))
            }
            Some(Tok::Num(v)) => {
                self.i += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Ident(name))
                if name == "pose" && self.toks.get(self.i + 1).map(|t| &t.tok) == Some(&Tok::LParen) =>
            {
                self.i += 2;
                let mut v = [0.0; 7];
                for (k, slot) in v.iter_mut().enumerate() {
                    if k > 0 {
                        self.expect(Tok::Comma, "`,`")?;
                    }
                    *slot = self.number()?;
                }
                self.expect(Tok::RParen, "`)`")?;
                Ok(Expr::Pose(v))
            }
            Some(Tok::Ident(name)) => {
                if !self.bound.contains(&name) {
                    let t = &self.toks[self.i];
                    return Err(PlError::UnboundVariable { name, line: t.line });
                }
                self.i += 1;
                Ok(Expr::Var(name))
            }
            Some(Tok::LBrace | Tok::LBracket) => self.json(),
            _ => Err(self.err("expression")),
        }
    }

    /// Inline JSON: find the matching bracket, then hand the source slice
    /// to the JSON parser so number formats survive unchanged.
    fn json(&mut self) -> Result<Expr, PlError> {
        let start_tok = self.i;
        let mut depth = 0usize;
        loop {
            match self.peek() {
                None => return Err(self.err("closing bracket")),
                Some(Tok::LBrace | Tok::LBracket) => depth += 1,
                Some(Tok::RBrace | Tok::RBracket) => {
                    depth -= 1;
                    if depth == 0 {
                        self.i += 1;
                        break;
                    }
                }
                Some(Tok::Let) => return Err(self.err("JSON value")),
                Some(Tok::Ident(w)) if !matches!(w.as_str(), "true" | "false" | "null") => {
                    return Err(self.err("JSON value"))
                }
                _ => {}
            }
            self.i += 1;
        }
        let (a, b) = (self.toks[start_tok].start, self.toks[self.i - 1].end);
        serde_json::from_str(&self.src[a..b]).map(Expr::Json).map_err(|e| {
            self.i = start_tok;
            let mut err = self.err("valid JSON");
            if let PlError::Parse { found, .. } = &mut err {
                *found = e.to_string();
            }
            err
        })
    }
}

pub fn parse_tokens(src: &str, toks: &[Token]) -> Result<Program, PlError> {
    let mut p = Parser {
        src,
        toks,
        i: 0,
        bound: BTreeSet::new(),
    };
    let mut statements = Vec::new();
    while p.i < toks.len() {
        statements.push(p.statement()?);
    }
    Ok(Program { statements })
}

pub fn parse(src: &str) -> Result<Program, PlError> {
    parse_tokens(src, &tokenize(src)?)
}
