use crate::bundles::TrivialSpec;
use crate::chern::{ChernError, GradedClass};
use crate::scalars::Scalar;

use super::lexer::{lex, Tok, Token};
use super::{
    BundleExpr, BundleTerm, Expr, HandleExpr, ParseError, Query, Script, Span, Statement, StatementKind, TauKind,
    TheoryExpr, KEYWORDS,
};

pub fn parse(src: &str) -> Result<Script, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { src, toks, pos: 0 };
    let mut statements = Vec::new();
    loop {
        while p.peek().tok == Tok::End {
            p.pos += 1;
        }
        if p.peek().tok == Tok::Eof {
            break;
        }
        statements.push(p.statement()?);
        match p.peek().tok {
            Tok::End | Tok::Eof => {}
            _ => return Err(p.error(&["';'", "a line break"])),
        }
    }
    Ok(Script { statements })
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
}

type Res<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let t = self.peek();
        ParseError { span: t.span, expected: expected.iter().map(|s| s.to_string()).collect(), found: t.tok.to_string() }
    }

    fn expect(&mut self, tok: Tok) -> Res<Token> {
        if self.peek().tok == tok {
            Ok(self.bump())
        } else {
            Err(self.error(&[&tok.to_string()]))
        }
    }

    fn at_ident(&self, word: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == word)
    }

    fn keyword(&mut self, word: &str) -> Res<()> {
        if self.at_ident(word) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[&format!("'{word}'")]))
        }
    }

    /// `word =`
    fn key(&mut self, word: &str) -> Res<()> {
        self.keyword(word)?;
        self.expect(Tok::Eq).map(drop)
    }

    fn name(&mut self) -> Res<String> {
        match &self.peek().tok {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&["a name"])),
        }
    }

    fn int(&mut self) -> Res<i64> {
        let negative = self.peek().tok == Tok::Minus;
        if negative {
            self.bump();
        }
        let Tok::Int(digits) = &self.peek().tok else {
            return Err(self.error(&["an integer"]));
        };
        let text = if negative { format!("-{digits}") } else { digits.clone() };
        let v = text.parse().map_err(|_| self.error(&["an integer in range"]))?;
        self.bump();
        Ok(v)
    }

    fn positive(&mut self) -> Res<u32> {
        let at = self.pos;
        let v = self.int()?;
        match u32::try_from(v) {
            Ok(v) if v >= 1 => Ok(v),
            _ => {
                self.pos = at;
                Err(self.error(&["a positive integer"]))
            }
        }
    }

    fn call<T>(&mut self, body: impl FnOnce(&mut Self) -> Res<T>) -> Res<T> {
        self.expect(Tok::LParen)?;
        let v = body(self)?;
        self.expect(Tok::RParen)?;
        Ok(v)
    }

    fn comma(&mut self) -> Res<()> {
        self.expect(Tok::Comma).map(drop)
    }

    /// Source text up to the next `,` or `)` outside parentheses.
    fn raw(&mut self, what: &str) -> Res<(&'a str, Span)> {
        let first = self.peek().clone();
        let mut depth = 0usize;
        let mut end = first.start;
        loop {
            match self.peek().tok {
                Tok::Comma | Tok::RParen if depth == 0 => break,
                Tok::End | Tok::Eof => break,
                Tok::LParen => depth += 1,
                Tok::RParen => depth -= 1,
                _ => {}
            }
            end = self.bump().end;
        }
        if end == first.start {
            return Err(ParseError { span: first.span, expected: vec![what.into()], found: first.tok.to_string() });
        }
        Ok((&self.src[first.start..end], first.span))
    }

    fn scalar(&mut self) -> Res<Scalar> {
        let (text, span) = self.raw("a scalar")?;
        text.parse()
            .map_err(|e| ParseError { span, expected: vec!["a scalar".into()], found: format!("'{text}' ({e})") })
    }

    fn class(&mut self) -> Res<GradedClass> {
        let (text, span) = self.raw("a class")?;
        let err = |e: ChernError| ParseError { span, expected: vec!["a class".into()], found: format!("'{text}' ({e})") };
        match GradedClass::parse(text, 0) {
            Err(ChernError::InhomogeneousTerm { expected: 0, found }) => GradedClass::parse(text, found).map_err(err),
            other => other.map_err(err),
        }
    }

    fn statement(&mut self) -> Res<Statement> {
        let span = self.peek().span;
        let kind = if self.at_ident("root") {
            self.bump();
            let mut names = vec![self.name()?];
            while self.peek().tok == Tok::Comma {
                self.bump();
                names.push(self.name()?);
            }
            StatementKind::Root(names)
        } else if self.at_ident("vb") {
            self.bump();
            let name = self.name()?;
            self.expect(Tok::Eq)?;
            StatementKind::Bundle { name, value: self.bundle()? }
        } else if self.at_ident("theory") {
            self.bump();
            let name = self.name()?;
            self.expect(Tok::Eq)?;
            StatementKind::Theory { name, value: self.theory()? }
        } else if self.at_ident("query") {
            self.bump();
            StatementKind::Query(self.query()?)
        } else {
            let name = self.name().map_err(|_| self.error(&["'root'", "'vb'", "'theory'", "'query'", "a name"]))?;
            self.expect(Tok::Eq)?;
            StatementKind::Expr { name, value: self.expr()? }
        };
        Ok(Statement { kind, span })
    }

    fn bundle(&mut self) -> Res<BundleExpr> {
        let mut terms = vec![self.bundle_term()?];
        while self.peek().tok == Tok::Plus {
            self.bump();
            terms.push(self.bundle_term()?);
        }
        Ok(BundleExpr { terms })
    }

    fn bundle_term(&mut self) -> Res<BundleTerm> {
        if self.at_ident("line") {
            self.bump();
            return self.call(|p| Ok(BundleTerm::Line(p.name()?)));
        }
        if self.at_ident("trivial") {
            self.bump();
            return self.call(|p| Ok(BundleTerm::Trivial(p.int()?)));
        }
        if self.at_ident("complement") {
            self.bump();
            return self.call(|p| {
                let inner = p.bundle()?;
                p.comma()?;
                Ok(BundleTerm::Complement(Box::new(inner), p.int()?))
            });
        }
        self.name().map(BundleTerm::Name).map_err(|_| self.error(&["'line'", "'trivial'", "'complement'", "a bundle name"]))
    }

    fn theory(&mut self) -> Res<TheoryExpr> {
        if self.at_ident("fr") {
            self.bump();
            return self.call(|p| Ok(TheoryExpr::Fr(p.positive()?)));
        }
        if self.at_ident("mmm") {
            self.bump();
            return self.call(|p| Ok(TheoryExpr::Mmm(p.positive()?)));
        }
        if self.at_ident("custom") {
            self.bump();
            return self.call(|p| {
                let k = p.positive()?;
                p.comma()?;
                let s1 = p.scalar()?;
                p.comma()?;
                Ok(TheoryExpr::Custom(k, s1, p.scalar()?))
            });
        }
        self.name().map(TheoryExpr::Name).map_err(|_| self.error(&["'fr'", "'mmm'", "'custom'", "a theory name"]))
    }

    fn unary(&mut self, f: fn(Box<Expr>) -> Expr) -> Res<Expr> {
        self.bump();
        self.call(|p| Ok(f(Box::new(p.expr()?))))
    }

    fn binary(&mut self, f: fn(Box<Expr>, Box<Expr>) -> Expr) -> Res<Expr> {
        self.bump();
        self.call(|p| {
            let a = p.expr()?;
            p.comma()?;
            Ok(f(Box::new(a), Box::new(p.expr()?)))
        })
    }

    fn expr(&mut self) -> Res<Expr> {
        let Tok::Ident(word) = self.peek().tok.clone() else {
            return Err(self.error(&["an expression"]));
        };
        match word.as_str() {
            "trivial" => {
                self.bump();
                self.call(|p| p.trivial())
            }
            "sphere" => {
                self.bump();
                self.call(|p| {
                    let xi = p.bundle()?;
                    p.comma()?;
                    p.key("n")?;
                    Ok(Expr::Sphere(xi, p.int()?))
                })
            }
            "disk" => {
                self.bump();
                self.call(|p| Ok(Expr::Disk(p.bundle()?)))
            }
            "reldisk" => {
                self.bump();
                self.call(|p| Ok(Expr::RelDisk(p.bundle()?)))
            }
            "double" => self.unary(Expr::Double),
            "dv" => self.unary(Expr::Dv),
            "union" => self.binary(Expr::Union),
            "glue" => self.binary(Expr::Glue),
            "prod" => self.binary(Expr::Prod),
            "morse" => {
                self.bump();
                self.call(|p| p.morse())
            }
            "hatcher" => {
                self.bump();
                self.call(|p| {
                    let xi = p.bundle()?;
                    p.comma()?;
                    p.key("n")?;
                    let n = p.int()?;
                    p.comma()?;
                    p.key("total")?;
                    Ok(Expr::Hatcher(xi, n, p.int()?))
                })
            }
            _ => self.name().map(Expr::Name).map_err(|_| self.error(&["an expression"])),
        }
    }

    fn trivial(&mut self) -> Res<Expr> {
        self.key("n")?;
        let dim = self.int()?;
        self.comma()?;
        self.key("chi")?;
        let chi = self.int()?;
        let mut spec = TrivialSpec { dim, chi, chi0: None, chi1: None, corner: None };
        while self.peek().tok == Tok::Comma {
            self.bump();
            let slot = match &self.peek().tok {
                Tok::Ident(k) if k == "chi0" && spec.chi0.is_none() => &mut spec.chi0,
                Tok::Ident(k) if k == "chi1" && spec.chi1.is_none() => &mut spec.chi1,
                Tok::Ident(k) if k == "corner" && spec.corner.is_none() => &mut spec.corner,
                _ => return Err(self.error(&["'chi0'", "'chi1'", "'corner'"])),
            };
            self.pos += 1;
            self.expect(Tok::Eq)?;
            *slot = Some(self.int()?);
        }
        Ok(Expr::Trivial(spec))
    }

    fn morse(&mut self) -> Res<Expr> {
        let base = if self.at_ident("base") {
            self.key("base")?;
            let b = self.expr()?;
            self.comma()?;
            Some(Box::new(b))
        } else {
            None
        };
        self.key("handles")?;
        self.expect(Tok::LBracket)?;
        let mut handles = Vec::new();
        if self.peek().tok != Tok::RBracket {
            loop {
                handles.push(self.call(|p| {
                    let index = p.int()?;
                    p.comma()?;
                    let xi = p.bundle()?;
                    p.comma()?;
                    Ok(HandleExpr { index, xi, eta: p.bundle()? })
                })?);
                if self.peek().tok != Tok::Comma {
                    break;
                }
                self.bump();
            }
        }
        self.expect(Tok::RBracket)?;
        Ok(Expr::Morse { base, handles })
    }

    fn query(&mut self) -> Res<Query> {
        let kind = match &self.peek().tok {
            Tok::Ident(w) if w == "tau" => Some(TauKind::Tau),
            Tok::Ident(w) if w == "tau_even" => Some(TauKind::Even),
            Tok::Ident(w) if w == "tau_odd" => Some(TauKind::Odd),
            Tok::Ident(w) if w == "tdelta" => Some(TauKind::Delta),
            _ => None,
        };
        if let Some(kind) = kind {
            self.bump();
            return self.call(|p| {
                let theory = p.theory()?;
                p.comma()?;
                Ok(Query::Tau { kind, theory, expr: p.expr()? })
            });
        }
        if self.at_ident("m2k") {
            self.bump();
            return self.call(|p| {
                let expr = p.expr()?;
                p.comma()?;
                Ok(Query::M2k { expr, k: p.positive()? })
            });
        }
        if self.at_ident("chi") {
            self.bump();
            return self.call(|p| Ok(Query::Chi(p.expr()?)));
        }
        if self.at_ident("transfer") {
            self.bump();
            return self.call(|p| {
                let expr = p.expr()?;
                p.comma()?;
                Ok(Query::Transfer { expr, class: p.class()? })
            });
        }
        Err(self.error(&["'tau'", "'tau_even'", "'tau_odd'", "'tdelta'", "'m2k'", "'chi'", "'transfer'"]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_script() {
        let s = parse("root x; vb l = line(x); E = sphere(l, n=1); theory F = fr(1); query tau(F, E)").unwrap();
        assert_eq!(s.statements.len(), 5);
        assert_eq!(s.statements[4].span, Span { line: 1, col: 63 });
        assert_eq!(
            s.statements[2].kind,
            StatementKind::Expr {
                name: "E".into(),
                value: Expr::Sphere(BundleExpr { terms: vec![BundleTerm::Name("l".into())] }, 1)
            }
        );
    }

    #[test]
    fn custom_scalars_use_the_scalar_grammar() {
        let s = parse("theory T = custom(1, 3/2 + -1/2*z3, -1/2*z3)").unwrap();
        let StatementKind::Theory { value: TheoryExpr::Custom(1, a, b), .. } = &s.statements[0].kind else { panic!() };
        assert_eq!(a.to_string(), "3/2 + -1/2*z3");
        assert_eq!(b.to_string(), "-1/2*z3");
    }

    #[test]
    fn errors_carry_location_and_expectations() {
        let e = parse("root x\nE = sphere(line(x), 2)").unwrap_err();
        assert_eq!(e.span, Span { line: 2, col: 21 });
        assert_eq!(e.expected, vec!["'n'"]);
        let e = parse("theory T = fr(0)").unwrap_err();
        assert_eq!(e.expected, vec!["a positive integer"]);
        assert!(parse("vb sphere = line(x)").is_err());
        assert!(parse("E = disk(trivial(2)) disk").is_err());
    }

    #[test]
    fn morse_and_trivial_forms() {
        let s = parse(
            "E = morse(base=trivial(n=1, chi=0, chi1=-1, chi0=1, corner=0), handles=[(0, trivial(0), trivial(2)),\n (2, trivial(2), trivial(0))])\nF = morse(handles=[])",
        )
        .unwrap();
        assert_eq!(s.statements.len(), 2);
        assert!(parse("E = trivial(n=1, chi=0, chi0=1, chi0=1)").is_err());
    }

    #[test]
    fn transfer_class_degree_is_inferred() {
        let s = parse("query transfer(E, 2*x^2 + 1/2*z3*y^2)").unwrap();
        let StatementKind::Query(Query::Transfer { class, .. }) = &s.statements[0].kind else { panic!() };
        assert_eq!(class.degree(), 4);
    }
}
