//! A small concurrent probabilistic language.
//!
//! ```text
//! states s0 s1;
//! atom a { s0 -> s1; s1 -> 1/2 s0 + 1/2 s1 | s1 }
//! guard b { s0 }
//! spec q { * -> mass { s1 } >= 1/2 }
//! proc main = a ; (skip + a);
//! ```
//!
//! `;` binds tighter than `t [p] u`, which binds tighter than `+`, which
//! binds tighter than `||`. All binary operators associate to the left.

mod elab;
mod lexer;
mod parser;
mod pretty;

use std::fmt;

pub use elab::{elaborate, Module};
pub use lexer::{tokenize, Pos, Tok, Token};
pub use parser::{parse_module, parse_term, DistExpr, Item, SetExpr, SpecRow};
pub use pretty::pretty;

use crate::rational::Rational;

/// An identifier with the position it was read at. Positions do not take
/// part in comparisons.
#[derive(Clone)]
pub struct Name {
    pub text: String,
    pub pos: Pos,
}

impl Name {
    pub fn new(text: impl Into<String>) -> Name {
        Name { text: text.into(), pos: Pos::default() }
    }
}

impl PartialEq for Name {
    fn eq(&self, o: &Name) -> bool {
        self.text == o.text
    }
}

impl Eq for Name {}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Atom(Name),
    Skip,
    Abort,
    Seq(Box<Term>, Box<Term>),
    Choice(Box<Term>, Box<Term>),
    /// `left [p] right`: `left` with probability `p`.
    PChoice(Rational, Box<Term>, Box<Term>),
    Par(Box<Term>, Box<Term>),
    If(Name, Box<Term>, Box<Term>),
    Star(Box<Term>, Box<Term>, usize),
}

impl Term {
    pub fn atom(name: &str) -> Term {
        Term::Atom(Name::new(name))
    }

    pub fn seq(a: Term, b: Term) -> Term {
        Term::Seq(Box::new(a), Box::new(b))
    }

    pub fn choice(a: Term, b: Term) -> Term {
        Term::Choice(Box::new(a), Box::new(b))
    }

    pub fn pchoice(p: Rational, a: Term, b: Term) -> Term {
        Term::PChoice(p, Box::new(a), Box::new(b))
    }

    pub fn par(a: Term, b: Term) -> Term {
        Term::Par(Box::new(a), Box::new(b))
    }

    pub fn if_else(g: &str, a: Term, b: Term) -> Term {
        Term::If(Name::new(g), Box::new(a), Box::new(b))
    }

    pub fn star(body: Term, exit: Term, depth: usize) -> Term {
        Term::Star(Box::new(body), Box::new(exit), depth)
    }

    /// Folds a non-empty list with `;`.
    pub fn seq_all(parts: Vec<Term>) -> Option<Term> {
        parts.into_iter().reduce(Term::seq)
    }

    /// Folds a non-empty list with `||`.
    pub fn par_all(parts: Vec<Term>) -> Option<Term> {
        parts.into_iter().reduce(Term::par)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty(self))
    }
}

#[cfg(test)]
mod tests;
