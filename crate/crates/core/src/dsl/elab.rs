use std::collections::BTreeMap;
use std::sync::Arc;

use super::parser::{parse_module, DistExpr, Item, SetExpr};
use super::{pretty, Name, Term};
use crate::convex::{Constraint, ConvexSet};
use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::ipbes::IpBes;
use crate::program::{prob_choice, ConvexProgram};
use crate::space::{State, StateSpace};

#[derive(Debug, Clone)]
enum Entry {
    Atom(Arc<ConvexProgram>),
    Guard(Arc<ConvexProgram>),
    Spec(Arc<ConvexProgram>),
    Proc(Term),
}

/// Declarations of one source file.
#[derive(Debug, Clone)]
pub struct Module {
    space: Arc<StateSpace>,
    entries: BTreeMap<String, Entry>,
    procs: Vec<String>,
}

fn undeclared(n: &Name) -> Error {
    Error::Undeclared(format!("{} (at {}:{})", n.text, n.pos.line, n.pos.column))
}

impl Module {
    pub fn parse(src: &str) -> Result<Module> {
        let items = parse_module(src)?;
        let mut it = items.into_iter();
        let space = match it.next() {
            Some(Item::States(names)) => StateSpace::new(names.into_iter().map(|n| n.text))?,
            _ => return Err(Error::StateSpace("a module starts with a `states` declaration".into())),
        };
        let mut m = Module { space, entries: BTreeMap::new(), procs: Vec::new() };
        for item in it {
            m.declare(item)?;
        }
        Ok(m)
    }

    /// A module with no declarations over the given states.
    pub fn over(space: Arc<StateSpace>) -> Module {
        Module { space, entries: BTreeMap::new(), procs: Vec::new() }
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    fn states(&self, set: &SetExpr) -> Result<Vec<State>> {
        match set {
            SetExpr::All => Ok(self.space.states().collect()),
            SetExpr::States(v) => v.iter().map(|n| self.state(n)).collect(),
        }
    }

    fn state(&self, n: &Name) -> Result<State> {
        self.space
            .lookup(&n.text)
            .map_err(|_| Error::StateSpace(format!("unknown state `{}` at {}:{}", n.text, n.pos.line, n.pos.column)))
    }

    fn dist(&self, d: &DistExpr) -> Result<Distribution> {
        let pairs = d.iter().map(|(w, n)| Ok((self.state(n)?, w.clone()))).collect::<Result<Vec<_>>>()?;
        Distribution::new(self.space.len(), pairs)
    }

    fn insert(&mut self, name: &Name, e: Entry) -> Result<()> {
        if self.entries.contains_key(&name.text) {
            return Err(Error::IllFormed(format!("`{}` is declared twice", name.text)));
        }
        if matches!(e, Entry::Proc(_)) {
            self.procs.push(name.text.clone());
        }
        self.entries.insert(name.text.clone(), e);
        Ok(())
    }

    pub fn declare(&mut self, item: Item) -> Result<()> {
        let n = self.space.len();
        match item {
            Item::States(_) => Err(Error::StateSpace("states are declared once, first".into())),
            Item::Atom { name, rows } => {
                let mut body: Vec<Option<ConvexSet>> = vec![None; n];
                for (at, ds) in &rows {
                    let pts = ds.iter().map(|d| self.dist(d)).collect::<Result<Vec<_>>>()?;
                    let set = ConvexSet::hull(pts)?;
                    for s in self.states(at)? {
                        body[s] = Some(set.clone());
                    }
                }
                let p = ConvexProgram::new(self.space.clone(), body)?;
                self.insert(&name, Entry::Atom(Arc::new(p)))
            }
            Item::Guard { name, states } => {
                let holds = self.states(&states)?;
                let p = ConvexProgram::test(self.space.clone(), |s| holds.contains(&s));
                self.insert(&name, Entry::Guard(Arc::new(p)))
            }
            Item::Spec { name, rows } => {
                let all: Vec<State> = self.space.states().collect();
                let mut body: Vec<Option<ConvexSet>> =
                    all.iter().map(|_| ConvexSet::simplex(n, all.clone()).map(Some)).collect::<Result<_>>()?;
                for row in &rows {
                    let support = match &row.within {
                        Some(w) => self.states(w)?,
                        None => all.clone(),
                    };
                    let cs = row
                        .constraints
                        .iter()
                        .map(|(set, cmp, p)| {
                            let coeffs = self.states(set)?.into_iter().map(|s| (s, crate::rational::Rational::one())).collect();
                            Ok(Constraint::new(coeffs, *cmp, p.clone()))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let set = ConvexSet::halfspaces(n, support, cs)?;
                    for s in self.states(&row.at)? {
                        body[s] = Some(set.clone());
                    }
                }
                let p = ConvexProgram::new(self.space.clone(), body)?;
                self.insert(&name, Entry::Spec(Arc::new(p)))
            }
            Item::Proc { name, term } => {
                self.check_names(&term)?;
                self.insert(&name, Entry::Proc(term))
            }
        }
    }

    fn check_names(&self, t: &Term) -> Result<()> {
        match t {
            Term::Atom(n) => self.entries.get(&n.text).map(|_| ()).ok_or_else(|| undeclared(n)),
            Term::Skip | Term::Abort => Ok(()),
            Term::Seq(a, b) | Term::Choice(a, b) | Term::PChoice(_, a, b) | Term::Par(a, b) | Term::Star(a, b, _) => {
                self.check_names(a)?;
                self.check_names(b)
            }
            Term::If(g, a, b) => {
                match self.entries.get(&g.text) {
                    Some(Entry::Guard(_)) => {}
                    Some(_) => return Err(Error::Kind(format!("`{}` is not a guard", g.text))),
                    None => return Err(undeclared(g)),
                }
                self.check_names(a)?;
                self.check_names(b)
            }
        }
    }

    /// Declares an atom from an already built program.
    pub fn define_atom(&mut self, name: &str, p: ConvexProgram) -> Result<()> {
        crate::space::check_same(&self.space, p.space())?;
        self.insert(&Name::new(name), Entry::Atom(Arc::new(p)))
    }

    pub fn define_spec(&mut self, name: &str, p: ConvexProgram) -> Result<()> {
        crate::space::check_same(&self.space, p.space())?;
        self.insert(&Name::new(name), Entry::Spec(Arc::new(p)))
    }

    pub fn define_proc(&mut self, name: &str, t: Term) -> Result<()> {
        self.check_names(&t)?;
        self.insert(&Name::new(name), Entry::Proc(t))
    }

    /// Names of the `proc` declarations, in order.
    pub fn procs(&self) -> &[String] {
        &self.procs
    }

    pub fn proc_term(&self, name: &str) -> Result<&Term> {
        match self.entries.get(name) {
            Some(Entry::Proc(t)) => Ok(t),
            Some(_) => Err(Error::Kind(format!("`{name}` is not a proc"))),
            None => Err(Error::Undeclared(name.into())),
        }
    }

    /// The program behind an atom, guard or spec, or `skip`.
    pub fn program(&self, name: &str) -> Result<ConvexProgram> {
        if name == "skip" {
            return Ok(ConvexProgram::skip(self.space.clone()));
        }
        match self.entries.get(name) {
            Some(Entry::Atom(p) | Entry::Guard(p) | Entry::Spec(p)) => Ok((**p).clone()),
            Some(Entry::Proc(_)) => Err(Error::Kind(format!("`{name}` is a proc, not a program"))),
            None => Err(Error::Undeclared(name.into())),
        }
    }

    /// Elaborates a declared proc.
    pub fn structure(&self, name: &str) -> Result<IpBes> {
        elaborate(self.proc_term(name)?, self)
    }

    /// Parses and elaborates a term against these declarations.
    pub fn structure_of(&self, src: &str) -> Result<IpBes> {
        let t = super::parse_term(src)?;
        self.check_names(&t)?;
        elaborate(&t, self)
    }

    fn atomic_program(&self, t: &Term) -> Result<Option<Arc<ConvexProgram>>> {
        Ok(match t {
            Term::Skip => Some(Arc::new(ConvexProgram::skip(self.space.clone()))),
            Term::Atom(n) => match self.entries.get(&n.text) {
                Some(Entry::Atom(p) | Entry::Spec(p) | Entry::Guard(p)) => Some(p.clone()),
                Some(Entry::Proc(t)) => self.atomic_program(t)?,
                None => return Err(undeclared(n)),
            },
            Term::PChoice(p, a, b) => match (self.atomic_program(a)?, self.atomic_program(b)?) {
                (Some(x), Some(y)) => Some(Arc::new(prob_choice(&y, &x, p)?)),
                _ => None,
            },
            _ => None,
        })
    }

    pub(crate) fn build(&self, t: &Term, depth: usize) -> Result<IpBes> {
        if depth > 64 {
            return Err(Error::IllFormed("proc references nest too deeply".into()));
        }
        let sp = &self.space;
        match t {
            Term::Skip => Ok(IpBes::unit(sp.clone())),
            Term::Abort => Ok(IpBes::zero(sp.clone())),
            Term::Atom(n) => match self.entries.get(&n.text) {
                Some(Entry::Atom(p) | Entry::Guard(p) | Entry::Spec(p)) => Ok(IpBes::atomic_shared(p.clone(), &n.text)),
                Some(Entry::Proc(body)) => self.build(body, depth + 1),
                None => Err(undeclared(n)),
            },
            Term::Seq(a, b) => IpBes::seq(&self.build(a, depth)?, &self.build(b, depth)?),
            Term::Choice(a, b) => IpBes::sum(&self.build(a, depth)?, &self.build(b, depth)?),
            Term::Par(a, b) => IpBes::par(&self.build(a, depth)?, &self.build(b, depth)?),
            Term::PChoice(..) => match self.atomic_program(t)? {
                Some(p) => Ok(IpBes::atomic_shared(p, pretty(t))),
                None => Err(Error::Atomicity(format!(
                    "`{}` mixes non-atomic operands; split with `if` instead",
                    pretty(t)
                ))),
            },
            Term::If(g, a, b) => {
                let Some(Entry::Guard(p)) = self.entries.get(&g.text) else {
                    return Err(undeclared(g));
                };
                let neg = p.negate()?;
                IpBes::sum(
                    &IpBes::seq(&IpBes::atomic_shared(p.clone(), &g.text), &self.build(a, depth)?)?,
                    &IpBes::seq(&IpBes::atomic(neg, format!("!{}", g.text)), &self.build(b, depth)?)?,
                )
            }
            Term::Star(a, b, d) => IpBes::star_unfold(&self.build(a, depth)?, &self.build(b, depth)?, *d),
        }
    }
}

/// Translates a term into a structure and checks it is feasible.
pub fn elaborate(t: &Term, m: &Module) -> Result<IpBes> {
    let es = m.build(t, 0)?;
    es.require_feasible()?;
    Ok(es)
}
