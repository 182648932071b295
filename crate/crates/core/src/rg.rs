//! Rely/guarantee conditions, quintuples and the composition rules.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::convex::{Constraint, ConvexSet};
use crate::error::{Error, Result};
use crate::expr::ProgramExpr;
use crate::ipbes::{IpBes, Shape};
use crate::program::{kleene_star, ndet_choice, refinement_witness, refines, ConvexProgram, Kind, DEFAULT_STAR_BOUND};
use crate::rational::Rational;
use crate::sim::{find_t_simulation, star_of};
use crate::space::{check_same, State, StateSpace};

/// `r*` for an atomic program `r`, kept with its sequential reading.
#[derive(Clone)]
pub struct RelyCondition {
    base: ConvexProgram,
    transitive: Arc<OnceLock<Result<bool>>>,
    star: Arc<OnceLock<Result<ProgramExpr>>>,
}

impl fmt::Debug for RelyCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RelyCondition").field("transitive", &self.transitive.get()).finish()
    }
}

impl RelyCondition {
    pub fn new(base: ConvexProgram) -> Result<RelyCondition> {
        if base.kind() != Kind::Program {
            return Err(Error::Kind(format!("a rely base must be total, got {:?}", base.kind())));
        }
        Ok(RelyCondition { base, transitive: Arc::default(), star: Arc::default() })
    }

    /// The environment that never moves.
    pub fn identity(space: Arc<StateSpace>) -> RelyCondition {
        RelyCondition::new(ConvexProgram::skip(space)).expect("skip is a total program")
    }

    pub fn base(&self) -> &ConvexProgram {
        &self.base
    }

    /// `r . (delta + r)` refines `r`.
    pub fn is_transitive(&self) -> Result<bool> {
        self.transitive
            .get_or_init(|| {
                let skip = ConvexProgram::skip(self.base.space().clone());
                let all: Vec<State> = self.base.space().states().collect();
                let closure = ProgramExpr::seq(vec![
                    ProgramExpr::atom(self.base.clone()),
                    ProgramExpr::choice(vec![ProgramExpr::atom(skip), ProgramExpr::atom(self.base.clone())]),
                ]);
                Ok(closure.refinement_witness(&self.base, &all)?.is_none())
            })
            .clone()
    }

    /// Sequential reading of `r*`: `delta + r` when `r` is transitive.
    pub fn star(&self) -> Result<&ProgramExpr> {
        let star = self.star.get_or_init(|| {
            let skip = ConvexProgram::skip(self.base.space().clone());
            if self.is_transitive()? {
                if refines(&skip, &self.base)? {
                    Ok(ProgramExpr::atom(self.base.clone()))
                } else {
                    Ok(ProgramExpr::choice(vec![ProgramExpr::atom(skip), ProgramExpr::atom(self.base.clone())]))
                }
            } else {
                Ok(ProgramExpr::atom(kleene_star(&self.base, &skip, DEFAULT_STAR_BOUND)?))
            }
        });
        star.as_ref().map_err(Clone::clone)
    }

    /// `r* || r*` is simulated by `r*`, with both sides unfolded.
    pub fn check_closure(&self, depth: usize) -> Result<bool> {
        let one = star_of(&self.base, "r", depth)?;
        let lhs = IpBes::par(&one, &one)?;
        Ok(find_t_simulation(&lhs, &star_of(&self.base, "r", 2 * depth)?)?.is_some())
    }
}

/// Postcondition: one program, or a sequence `Q_1 . ... . Q_k` matched
/// step by step against a sequential component.
#[derive(Debug, Clone)]
pub enum Post {
    Program(ConvexProgram),
    Chain(Vec<ConvexProgram>),
}

#[derive(Debug, Clone)]
pub struct Quintuple {
    pub pre: ConvexProgram,
    pub rely: RelyCondition,
    pub component: IpBes,
    pub guar: RelyCondition,
    pub post: Post,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub holds: bool,
    pub failing_state: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub valid: bool,
    pub checks: Vec<Check>,
    /// `P . (R || E)` after interleaving the rely.
    pub bound: ProgramExpr,
}

impl Verdict {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.holds)
    }
}

/// Strongest guarantee: the choice over all non-test labels.
pub fn guarantee_of(es: &IpBes) -> Result<ConvexProgram> {
    if es.is_empty() {
        return Err(Error::Rule("the empty structure has no guarantee".into()));
    }
    let mut acc: Option<ConvexProgram> = None;
    for e in es.events() {
        let l = es.label(e);
        if l.kind() == Kind::Test || l.is_subidentity() {
            continue;
        }
        acc = Some(match acc {
            None => l.clone(),
            Some(g) => ndet_choice(&g, l)?,
        });
    }
    Ok(acc.unwrap_or_else(|| ConvexProgram::skip(es.space().clone())))
}

/// Every label refines `g` or stutters.
pub fn check_guarantee(es: &IpBes, g: &ConvexProgram) -> Result<bool> {
    check_same(es.space(), g.space())?;
    let skip = ConvexProgram::skip(g.space().clone());
    for e in es.events() {
        let l = es.label(e);
        if !refines(l, g)? && !refines(l, &skip)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Sequential upper bound of `r* || es`, threading the rely between the
/// steps of a sequential component.
pub fn interleave_rely(rely: &RelyCondition, es: &IpBes) -> Result<ProgramExpr> {
    check_same(rely.base.space(), es.space())?;
    let shape = es
        .shape()
        .ok_or_else(|| Error::Rule("the component was not built from the regular constructors".into()))?;
    Ok(ProgramExpr::seq(realize(rely, interleave(rely, es, shape)?)?))
}

enum Piece {
    Rely,
    Expr(ProgramExpr),
}

fn realize(rely: &RelyCondition, pieces: Vec<Piece>) -> Result<Vec<ProgramExpr>> {
    pieces
        .into_iter()
        .map(|p| match p {
            Piece::Rely => Ok(rely.star()?.clone()),
            Piece::Expr(e) => Ok(e),
        })
        .collect()
}

fn concat(mut acc: Vec<Piece>, next: Vec<Piece>) -> Vec<Piece> {
    let mut it = next.into_iter().peekable();
    if matches!(acc.last(), Some(Piece::Rely)) && matches!(it.peek(), Some(Piece::Rely)) {
        it.next();
    }
    acc.extend(it);
    acc
}

fn interleave(rely: &RelyCondition, es: &IpBes, shape: &Shape) -> Result<Vec<Piece>> {
    Ok(match shape {
        Shape::Zero | Shape::Unit(_) => vec![Piece::Rely],
        Shape::Atomic(e) => vec![Piece::Rely, Piece::Expr(ProgramExpr::Atom(es.label_shared(*e).clone())), Piece::Rely],
        Shape::Seq(a, b) => concat(interleave(rely, es, a)?, interleave(rely, es, b)?),
        Shape::Sum(a, b) => {
            let mut branches = Vec::new();
            for side in [a, b] {
                collect_branches(rely, es, side, &mut branches)?;
            }
            vec![Piece::Rely, Piece::Expr(ProgramExpr::choice(branches))]
        }
        Shape::Par(_, _) => {
            return Err(Error::Rule("interleaving a rely needs a sequential component".into()))
        }
    })
}

fn collect_branches(rely: &RelyCondition, es: &IpBes, shape: &Shape, out: &mut Vec<ProgramExpr>) -> Result<()> {
    let is_test = |e: usize| es.label(e).is_subidentity();
    let atom = |e: usize| ProgramExpr::Atom(es.label_shared(e).clone());
    match shape {
        Shape::Sum(a, b) => {
            collect_branches(rely, es, a, out)?;
            collect_branches(rely, es, b, out)?;
        }
        Shape::Atomic(e) if is_test(*e) => out.push(ProgramExpr::seq(vec![atom(*e), rely.star()?.clone()])),
        Shape::Seq(head, rest) if matches!(head.as_ref(), Shape::Atomic(e) if is_test(*e)) => {
            let Shape::Atomic(e) = head.as_ref() else { unreachable!() };
            let mut parts = vec![atom(*e)];
            parts.extend(realize(rely, interleave(rely, es, rest)?)?);
            out.push(ProgramExpr::seq(parts));
        }
        _ => out.push(ProgramExpr::seq(realize(rely, interleave(rely, es, shape)?)?)),
    }
    Ok(())
}

fn atoms_in_sequence(shape: &Shape, out: &mut Vec<usize>) -> Result<()> {
    match shape {
        Shape::Atomic(e) => out.push(*e),
        Shape::Seq(a, b) => {
            atoms_in_sequence(a, out)?;
            atoms_in_sequence(b, out)?;
        }
        _ => return Err(Error::Rule("a chained post needs a component that is a sequence of atoms".into())),
    }
    Ok(())
}

fn check(name: impl Into<String>, failing: Option<State>, q: &Quintuple) -> Check {
    Check {
        name: name.into(),
        holds: failing.is_none(),
        failing_state: failing.map(|s| q.pre.space().name(s).to_string()),
    }
}

/// Decides `P . (R || E) ⊑ Q` through the interleaved bound, and `E`
/// against the guarantee.
pub fn check_quintuple(q: &Quintuple) -> Result<Verdict> {
    let sp = q.pre.space().clone();
    for p in [q.rely.base.space(), q.component.space(), q.guar.base.space()] {
        check_same(&sp, p)?;
    }
    let all: Vec<State> = sp.states().collect();
    let inner = interleave_rely(&q.rely, &q.component)?;
    let bound = ProgramExpr::seq(vec![ProgramExpr::atom(q.pre.clone()), inner.clone()]);
    let mut checks = Vec::new();
    match &q.post {
        Post::Program(post) => {
            check_same(&sp, post.space())?;
            checks.push(check("P.(R||E) refines Q", bound.refinement_witness(post, &all)?, q));
        }
        Post::Chain(posts) => {
            let shape = q.component.shape().ok_or_else(|| Error::Rule("component has no construction shape".into()))?;
            let mut atoms = Vec::new();
            atoms_in_sequence(shape, &mut atoms)?;
            if atoms.len() != posts.len() {
                return Err(Error::Rule(format!(
                    "{} atoms but {} postconditions in the chain",
                    atoms.len(),
                    posts.len()
                )));
            }
            let r = q.rely.star()?;
            for (k, (&e, post)) in atoms.iter().zip(posts).enumerate() {
                check_same(&sp, post.space())?;
                let name = q.component.name(e);
                checks.push(check(
                    format!("{name} refines Q[{k}]"),
                    refinement_witness(q.component.label(e), post)?,
                    q,
                ));
                let qa = ProgramExpr::atom(post.clone());
                let left = ProgramExpr::seq(vec![r.clone(), qa.clone()]);
                checks.push(check(format!("R*.Q[{k}] refines Q[{k}]"), left.refinement_witness(post, &all)?, q));
                let right = ProgramExpr::seq(vec![qa, r.clone()]);
                checks.push(check(format!("Q[{k}].R* refines Q[{k}]"), right.refinement_witness(post, &all)?, q));
            }
        }
    }
    let guar_ok = check_guarantee(&q.component, &q.guar.base)?;
    checks.push(Check { name: "E simulated by G*".into(), holds: guar_ok, failing_state: None });
    Ok(Verdict { valid: checks.iter().all(|c| c.holds), checks, bound })
}

/// Pointwise intersection of two relies.
pub fn rely_intersection(r1: &ConvexProgram, r2: &ConvexProgram) -> Result<ConvexProgram> {
    check_same(r1.space(), r2.space())?;
    let mut body = Vec::with_capacity(r1.len());
    for s in r1.space().states() {
        let (Some(a), Some(b)) = (r1.at(s), r2.at(s)) else {
            return Err(Error::Kind("rely intersection needs total programs".into()));
        };
        match a.intersect(b)? {
            Some(c) => body.push(Some(c)),
            None => {
                return Err(Error::Infeasible(format!(
                    "relies have no common behaviour at state {}",
                    r1.space().name(s)
                )))
            }
        }
    }
    ConvexProgram::new(r1.space().clone(), body)
}

/// A concurrent quintuple obtained by the composition rule.
#[derive(Debug, Clone)]
pub struct Composed {
    pub quintuple: Quintuple,
    pub premises: [Verdict; 2],
}

/// Composition rule for atomic relies: both premises valid, each
/// guarantee within the other's rely. The result posts `q1`'s post.
pub fn compose_concurrent(q1: &Quintuple, q2: &Quintuple) -> Result<Composed> {
    if !crate::program::equivalent(&q1.pre, &q2.pre)? {
        return Err(Error::SideCondition("the premises have different preconditions".into()));
    }
    if !refines(&q1.guar.base, &q2.rely.base)? {
        return Err(Error::SideCondition("g1 does not refine r2".into()));
    }
    if !refines(&q2.guar.base, &q1.rely.base)? {
        return Err(Error::SideCondition("g2 does not refine r1".into()));
    }
    let v1 = check_quintuple(q1)?;
    if !v1.valid {
        return Err(Error::SideCondition("first premise is not valid".into()));
    }
    let v2 = check_quintuple(q2)?;
    if !v2.valid {
        return Err(Error::SideCondition("second premise is not valid".into()));
    }
    let rely = RelyCondition::new(rely_intersection(&q1.rely.base, &q2.rely.base)?)?;
    let guar = RelyCondition::new(ndet_choice(&q1.guar.base, &q2.guar.base)?)?;
    let quintuple = Quintuple {
        pre: q1.pre.clone(),
        rely,
        component: IpBes::par(&q1.component, &q2.component)?,
        guar,
        post: q1.post.clone(),
    };
    Ok(Composed { quintuple, premises: [v1, v2] })
}

/// The same rule, posting `q2`'s post.
pub fn compose_concurrent_second(q1: &Quintuple, q2: &Quintuple) -> Result<Composed> {
    let mut c = compose_concurrent(q1, q2)?;
    c.quintuple.post = q2.post.clone();
    Ok(c)
}

/// `{delta_s0, r} E {g, mu(O) >= p}` in the form the bound rule consumes.
#[derive(Debug, Clone)]
pub struct BoundPremise {
    pub initial: State,
    pub rely: RelyCondition,
    pub component: IpBes,
    pub guar: ConvexProgram,
    pub target: Vec<State>,
    pub p: Rational,
}

impl BoundPremise {
    /// The premise as a quintuple with a halfspace post at the initial state.
    pub fn quintuple(&self) -> Result<Quintuple> {
        let sp = self.component.space().clone();
        let n = sp.len();
        let s0 = self.initial;
        if s0 >= n {
            return Err(Error::StateSpace(format!("state {s0} out of range")));
        }
        let all: Vec<State> = sp.states().collect();
        let post = ConvexProgram::from_fn(sp.clone(), |s| {
            let cs = if s == s0 {
                vec![Constraint::mass_at_least(self.target.iter().copied(), self.p.clone())]
            } else {
                Vec::new()
            };
            ConvexSet::halfspaces(n, all.clone(), cs).map(Some)
        })?;
        Ok(Quintuple {
            pre: ConvexProgram::test(sp, |s| s == s0),
            rely: self.rely.clone(),
            component: self.component.clone(),
            guar: RelyCondition::new(self.guar.clone())?,
            post: Post::Program(post),
        })
    }
}

#[derive(Debug, Clone)]
pub struct BoundConclusion {
    pub bound: Rational,
    pub target: Vec<State>,
    pub rely: ConvexProgram,
    pub guarantee: ConvexProgram,
    pub component: IpBes,
}

/// `p1 + p2 - 1`, not clamped.
pub fn bound_arithmetic(p1: &Rational, p2: &Rational) -> Rational {
    p1 + p2 - Rational::one()
}

/// The explicit-probability composition rule. Both premises are
/// certified before the bound is returned.
pub fn probability_bound(b1: &BoundPremise, b2: &BoundPremise) -> Result<BoundConclusion> {
    if b1.initial != b2.initial {
        return Err(Error::SideCondition("premises start from different states".into()));
    }
    for (k, b) in [b1, b2].iter().enumerate() {
        let v = check_quintuple(&b.quintuple()?)?;
        if !v.valid {
            return Err(Error::Rule(format!("premise {} is not certified", k + 1)));
        }
    }
    if !refines(&b1.guar, b2.rely.base())? {
        return Err(Error::SideCondition("g1 does not refine r2".into()));
    }
    if !refines(&b2.guar, b1.rely.base())? {
        return Err(Error::SideCondition("g2 does not refine r1".into()));
    }
    let mut target: Vec<State> = b1.target.iter().copied().filter(|s| b2.target.contains(s)).collect();
    target.sort_unstable();
    target.dedup();
    Ok(BoundConclusion {
        bound: bound_arithmetic(&b1.p, &b2.p),
        target,
        rely: rely_intersection(b1.rely.base(), b2.rely.base())?,
        guarantee: ndet_choice(&b1.guar, &b2.guar)?,
        component: IpBes::par(&b1.component, &b2.component)?,
    })
}
