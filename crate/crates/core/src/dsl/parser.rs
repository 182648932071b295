use super::lexer::{syntax, tokenize, Pos, Tok, Token};
use super::{Name, Term};
use crate::error::Result;
use crate::lp::Cmp;
use crate::rational::Rational;

const KEYWORDS: &[&str] = &["skip", "abort", "if", "else", "star", "states", "atom", "guard", "spec", "proc"];

/// `*` or an explicit list of states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SetExpr {
    All,
    States(Vec<Name>),
}

/// `w1 s1 + w2 s2 + ...`; a bare state has weight one.
pub type DistExpr = Vec<(Rational, Name)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecRow {
    pub at: SetExpr,
    pub constraints: Vec<(SetExpr, Cmp, Rational)>,
    pub within: Option<SetExpr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    States(Vec<Name>),
    Atom { name: Name, rows: Vec<(SetExpr, Vec<DistExpr>)> },
    Guard { name: Name, states: SetExpr },
    Spec { name: Name, rows: Vec<SpecRow> },
    Proc { name: Name, term: Term },
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(syntax(self.pos(), format!("expected {}, found {}", t.describe(), self.peek().describe())))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            Err(syntax(self.pos(), format!("expected `{kw}`, found {}", self.peek().describe())))
        }
    }

    fn ident(&mut self) -> Result<Name> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(Name { text: s, pos })
            }
            t => Err(syntax(pos, format!("expected a name, found {}", t.describe()))),
        }
    }

    /// State names may be identifiers or numerals.
    fn state(&mut self) -> Result<Name> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(s) | Tok::Number(_, s) => {
                self.bump();
                Ok(Name { text: s, pos })
            }
            t => Err(syntax(pos, format!("expected a state, found {}", t.describe()))),
        }
    }

    fn number(&mut self) -> Result<Rational> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Number(r, _) => {
                self.bump();
                Ok(r)
            }
            t => Err(syntax(pos, format!("expected a number, found {}", t.describe()))),
        }
    }

    fn probability(&mut self) -> Result<Rational> {
        let pos = self.pos();
        let p = self.number()?;
        if p > Rational::one() {
            return Err(syntax(pos, format!("probability {p} is out of range")));
        }
        Ok(p)
    }

    fn state_set(&mut self) -> Result<SetExpr> {
        if self.eat(&Tok::Star) {
            return Ok(SetExpr::All);
        }
        let mut v = Vec::new();
        if self.eat(&Tok::LBrace) {
            if !self.eat(&Tok::RBrace) {
                loop {
                    v.push(self.state()?);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RBrace)?;
            }
            return Ok(SetExpr::States(v));
        }
        loop {
            v.push(self.state()?);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(SetExpr::States(v))
    }

    fn dist(&mut self) -> Result<DistExpr> {
        let mut out = Vec::new();
        loop {
            let weighted = matches!(self.peek(), Tok::Number(..))
                && matches!(self.peek2(), Tok::Ident(_) | Tok::Number(..));
            let w = if weighted { self.probability()? } else { Rational::one() };
            out.push((w, self.state()?));
            if !self.eat(&Tok::Plus) {
                break;
            }
        }
        Ok(out)
    }

    fn block<T>(&mut self, mut row: impl FnMut(&mut Parser) -> Result<T>) -> Result<Vec<T>> {
        self.expect(Tok::LBrace)?;
        let mut rows = Vec::new();
        while !self.eat(&Tok::RBrace) {
            rows.push(row(self)?);
            if !self.eat(&Tok::Semi) {
                self.expect(Tok::RBrace)?;
                break;
            }
        }
        Ok(rows)
    }

    fn item(&mut self) -> Result<Item> {
        let pos = self.pos();
        let Tok::Ident(kw) = self.peek().clone() else {
            return Err(syntax(pos, format!("expected a declaration, found {}", self.peek().describe())));
        };
        self.bump();
        match kw.as_str() {
            "states" => {
                let mut v = Vec::new();
                while !self.eat(&Tok::Semi) {
                    v.push(self.state()?);
                    self.eat(&Tok::Comma);
                }
                Ok(Item::States(v))
            }
            "atom" => {
                let name = self.ident()?;
                let rows = self.block(|p| {
                    let at = p.state_set()?;
                    p.expect(Tok::Arrow)?;
                    let mut ds = vec![p.dist()?];
                    while p.eat(&Tok::Bar) {
                        ds.push(p.dist()?);
                    }
                    Ok((at, ds))
                })?;
                Ok(Item::Atom { name, rows })
            }
            "guard" => {
                let name = self.ident()?;
                let states = self.state_set()?;
                self.eat(&Tok::Semi);
                Ok(Item::Guard { name, states })
            }
            "spec" => {
                let name = self.ident()?;
                let rows = self.block(|p| {
                    let at = p.state_set()?;
                    p.expect(Tok::Arrow)?;
                    let mut constraints = Vec::new();
                    let mut within = None;
                    loop {
                        if p.is_kw("within") {
                            p.bump();
                            within = Some(p.state_set()?);
                        } else {
                            p.keyword("mass")?;
                            let set = p.state_set()?;
                            let cmp = match p.bump().tok {
                                Tok::Ge => Cmp::Ge,
                                Tok::Le => Cmp::Le,
                                Tok::Eq => Cmp::Eq,
                                t => return Err(syntax(p.pos(), format!("expected a comparison, found {}", t.describe()))),
                            };
                            constraints.push((set, cmp, p.probability()?));
                        }
                        if !p.eat(&Tok::Comma) && !p.is_kw("within") {
                            break;
                        }
                    }
                    Ok(SpecRow { at, constraints, within })
                })?;
                Ok(Item::Spec { name, rows })
            }
            "proc" => {
                let name = self.ident()?;
                self.expect(Tok::Eq)?;
                let term = self.term()?;
                if !self.eat(&Tok::Semi) && *self.peek() != Tok::Eof {
                    return Err(syntax(self.pos(), format!("expected `;`, found {}", self.peek().describe())));
                }
                Ok(Item::Proc { name, term })
            }
            other => Err(syntax(pos, format!("unknown declaration `{other}`"))),
        }
    }

    /// A `;` followed by a declaration or the end closes a `proc`.
    fn declaration_follows(&self) -> bool {
        match self.peek2() {
            Tok::Eof => true,
            Tok::Ident(s) => matches!(s.as_str(), "states" | "atom" | "guard" | "spec" | "proc"),
            _ => false,
        }
    }

    fn term(&mut self) -> Result<Term> {
        let mut t = self.choice()?;
        while self.eat(&Tok::ParBar) {
            t = Term::par(t, self.choice()?);
        }
        Ok(t)
    }

    fn choice(&mut self) -> Result<Term> {
        let mut t = self.pchoice()?;
        while self.eat(&Tok::Plus) {
            t = Term::choice(t, self.pchoice()?);
        }
        Ok(t)
    }

    fn pchoice(&mut self) -> Result<Term> {
        let mut t = self.seq()?;
        while self.eat(&Tok::LBracket) {
            let p = self.probability()?;
            self.expect(Tok::RBracket)?;
            t = Term::pchoice(p, t, self.seq()?);
        }
        Ok(t)
    }

    fn seq(&mut self) -> Result<Term> {
        let mut t = self.primary()?;
        while *self.peek() == Tok::Semi && !self.declaration_follows() {
            self.bump();
            t = Term::seq(t, self.primary()?);
        }
        Ok(t)
    }

    fn primary(&mut self) -> Result<Term> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::Ident(s) if s == "skip" => {
                self.bump();
                Ok(Term::Skip)
            }
            Tok::Ident(s) if s == "abort" => {
                self.bump();
                Ok(Term::Abort)
            }
            Tok::Ident(s) if s == "if" => {
                self.bump();
                let g = self.ident()?;
                self.expect(Tok::LBrace)?;
                let a = self.term()?;
                self.expect(Tok::RBrace)?;
                self.keyword("else")?;
                self.expect(Tok::LBrace)?;
                let b = self.term()?;
                self.expect(Tok::RBrace)?;
                Ok(Term::If(g, Box::new(a), Box::new(b)))
            }
            Tok::Ident(s) if s == "star" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let body = self.term()?;
                self.expect(Tok::Comma)?;
                let exit = self.term()?;
                self.expect(Tok::Comma)?;
                let dpos = self.pos();
                let d = self.number()?;
                if !d.is_integer() || d.is_negative() {
                    return Err(syntax(dpos, "star depth must be a natural number"));
                }
                self.expect(Tok::RParen)?;
                let depth = d.to_f64() as usize;
                Ok(Term::star(body, exit, depth))
            }
            Tok::Ident(_) => Ok(Term::Atom(self.ident()?)),
            t => Err(syntax(pos, format!("expected a term, found {}", t.describe()))),
        }
    }
}

pub fn parse_term(src: &str) -> Result<Term> {
    let mut p = Parser { toks: tokenize(src)?, at: 0 };
    let t = p.term()?;
    if *p.peek() != Tok::Eof {
        return Err(syntax(p.pos(), format!("unexpected {}", p.peek().describe())));
    }
    Ok(t)
}

pub fn parse_module(src: &str) -> Result<Vec<Item>> {
    let mut p = Parser { toks: tokenize(src)?, at: 0 };
    let mut items = Vec::new();
    while *p.peek() != Tok::Eof {
        items.push(p.item()?);
    }
    Ok(items)
}
