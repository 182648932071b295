//! Convex programs: maps from states to convex sets of distributions.
//!
//! An entry may be `None` (EMPTY). Total maps are programs; maps whose
//! entries are `{delta_s}` or EMPTY are tests; guarded branches produce
//! partial maps that are neither.

use std::fmt;
use std::sync::Arc;

use crate::convex::{hull_reduce, weighted_minkowski, ConvexSet};
use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::space::{check_same, State, StateSpace};

/// Iteration bound used when none is given.
pub const DEFAULT_STAR_BOUND: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Every entry is non-empty.
    Program,
    /// Every entry is `{delta_s}` or EMPTY, and some entry is EMPTY.
    Test,
    /// Some entry is EMPTY and some other entry is not a point on its own state.
    Partial,
}

#[derive(Clone, PartialEq, Eq)]
pub struct ConvexProgram {
    space: Arc<StateSpace>,
    body: Vec<Option<ConvexSet>>,
}

impl ConvexProgram {
    pub fn new(space: Arc<StateSpace>, body: Vec<Option<ConvexSet>>) -> Result<ConvexProgram> {
        if body.len() != space.len() {
            return Err(Error::Domain(format!(
                "program has {} entries for {} states",
                body.len(),
                space.len()
            )));
        }
        if body.iter().flatten().any(|c| c.dim() != space.len()) {
            return Err(Error::Domain("entry dimension does not match state space".into()));
        }
        Ok(ConvexProgram { space, body })
    }

    pub fn from_fn<F>(space: Arc<StateSpace>, mut f: F) -> Result<ConvexProgram>
    where
        F: FnMut(State) -> Result<Option<ConvexSet>>,
    {
        let body = space.states().map(&mut f).collect::<Result<Vec<_>>>()?;
        ConvexProgram::new(space, body)
    }

    /// `delta`: every state stays put. Also the always-true test.
    pub fn skip(space: Arc<StateSpace>) -> ConvexProgram {
        let n = space.len();
        let body = (0..n).map(|s| Some(ConvexSet::point(n, s))).collect();
        ConvexProgram { space, body }
    }

    /// `bot`: the everywhere-EMPTY test.
    pub fn bottom(space: Arc<StateSpace>) -> ConvexProgram {
        let body = vec![None; space.len()];
        ConvexProgram { space, body }
    }

    /// Test holding exactly on the states where `pred` is true.
    pub fn test(space: Arc<StateSpace>, pred: impl Fn(State) -> bool) -> ConvexProgram {
        let n = space.len();
        let body = (0..n).map(|s| pred(s).then(|| ConvexSet::point(n, s))).collect();
        ConvexProgram { space, body }
    }

    /// One distribution per state.
    pub fn deterministic<F>(space: Arc<StateSpace>, mut f: F) -> Result<ConvexProgram>
    where
        F: FnMut(State) -> Distribution,
    {
        ConvexProgram::from_fn(space, |s| ConvexSet::hull(vec![f(s)]).map(Some))
    }

    /// Convex closure of a state relation: `s -> conv { delta_t | (s, t) in rel }`.
    pub fn relation_convex_closure(
        space: Arc<StateSpace>,
        rel: &[(State, State)],
    ) -> Result<ConvexProgram> {
        let n = space.len();
        let mut succ: Vec<Vec<Distribution>> = vec![Vec::new(); n];
        for &(s, t) in rel {
            if s >= n || t >= n {
                return Err(Error::Domain(format!("relation pair ({s}, {t}) out of range")));
            }
            succ[s].push(Distribution::point(n, t));
        }
        let body = succ
            .into_iter()
            .map(|v| if v.is_empty() { Ok(None) } else { ConvexSet::hull(v).map(Some) })
            .collect::<Result<Vec<_>>>()?;
        ConvexProgram::new(space, body)
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.body.len()
    }

    pub fn is_empty(&self) -> bool {
        self.body.is_empty()
    }

    pub fn at(&self, s: State) -> Option<&ConvexSet> {
        self.body[s].as_ref()
    }

    pub fn entries(&self) -> &[Option<ConvexSet>] {
        &self.body
    }

    pub fn is_total(&self) -> bool {
        self.body.iter().all(Option::is_some)
    }

    pub fn is_bottom(&self) -> bool {
        self.body.iter().all(Option::is_none)
    }

    /// Every entry is EMPTY or `{delta_s}`.
    pub fn is_subidentity(&self) -> bool {
        self.body
            .iter()
            .enumerate()
            .all(|(s, c)| c.as_ref().is_none_or(|c| c.is_point_set(s)))
    }

    pub fn kind(&self) -> Kind {
        if self.is_total() {
            Kind::Program
        } else if self.is_subidentity() {
            Kind::Test
        } else {
            Kind::Partial
        }
    }

    /// States where the program is defined.
    pub fn domain(&self) -> Vec<State> {
        (0..self.len()).filter(|&s| self.body[s].is_some()).collect()
    }

    /// Complement of a test.
    pub fn negate(&self) -> Result<ConvexProgram> {
        if !self.is_subidentity() {
            return Err(Error::Kind("only tests can be negated".into()));
        }
        Ok(ConvexProgram::test(self.space.clone(), |s| self.body[s].is_none()))
    }

    /// All entries in vertex form.
    pub fn to_vertex_form(&self) -> Result<ConvexProgram> {
        let body = self
            .body
            .iter()
            .map(|c| c.as_ref().map(|c| c.to_vertex_form()).transpose())
            .collect::<Result<Vec<_>>>()?;
        Ok(ConvexProgram { space: self.space.clone(), body })
    }

    pub fn display(&self) -> String {
        let mut out = String::new();
        for s in self.space.states() {
            let entry = match &self.body[s] {
                None => "EMPTY".to_string(),
                Some(c) => c.display(&self.space),
            };
            out.push_str(&format!("{} -> {}\n", self.space.name(s), entry));
        }
        out
    }
}

impl fmt::Debug for ConvexProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.space.states().map(|s| (self.space.name(s).to_string(), &self.body[s])))
            .finish()
    }
}

fn require_total(r: &ConvexProgram, op: &str) -> Result<()> {
    if r.is_total() {
        Ok(())
    } else {
        Err(Error::Kind(format!("{op} needs programs, got a {:?}", r.kind())))
    }
}

/// `r1 (+)_p r2`: run `r1` with probability `1 - p` and `r2` with probability `p`.
pub fn prob_choice(r1: &ConvexProgram, r2: &ConvexProgram, p: &Rational) -> Result<ConvexProgram> {
    check_same(&r1.space, &r2.space)?;
    if p.is_negative() || *p > Rational::one() {
        return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
    }
    require_total(r1, "probabilistic choice")?;
    require_total(r2, "probabilistic choice")?;
    if p.is_zero() {
        return Ok(r1.clone());
    }
    if p.is_one() {
        return Ok(r2.clone());
    }
    let n = r1.len();
    ConvexProgram::from_fn(r1.space.clone(), |s| {
        let a = r1.body[s].as_ref().unwrap().vertices()?;
        let b = r2.body[s].as_ref().unwrap().vertices()?;
        let mut pts = Vec::with_capacity(a.len() * b.len());
        for mu in a.iter() {
            for nu in b.iter() {
                pts.push(mu.mix(nu, p));
            }
        }
        Ok(Some(ConvexSet::from_reduced(n, hull_reduce(pts))))
    })
}

/// `r1 + r2`: per-state convex hull of the union; EMPTY is the unit.
pub fn ndet_choice(r1: &ConvexProgram, r2: &ConvexProgram) -> Result<ConvexProgram> {
    check_same(&r1.space, &r2.space)?;
    let n = r1.len();
    ConvexProgram::from_fn(r1.space.clone(), |s| match (&r1.body[s], &r2.body[s]) {
        (None, None) => Ok(None),
        (Some(a), None) | (None, Some(a)) => Ok(Some(a.clone())),
        (Some(a), Some(b)) => {
            if a == b || b.is_subset(a)? {
                return Ok(Some(a.clone()));
            }
            if a.is_subset(b)? {
                return Ok(Some(b.clone()));
            }
            let mut pts = a.vertices()?.into_owned();
            pts.extend(b.vertices()?.iter().cloned());
            Ok(Some(ConvexSet::from_reduced(n, hull_reduce(pts))))
        }
    })
}

/// `r1 . r2`. The left operand may be partial (EMPTY entries propagate);
/// an EMPTY right entry reachable from the left is an error, except that
/// `r . bot = bot`.
pub fn seq_compose(r1: &ConvexProgram, r2: &ConvexProgram) -> Result<ConvexProgram> {
    check_same(&r1.space, &r2.space)?;
    if r2.is_bottom() {
        return Ok(ConvexProgram::bottom(r1.space.clone()));
    }
    let n = r1.len();
    ConvexProgram::from_fn(r1.space.clone(), |s| {
        let Some(a) = &r1.body[s] else {
            return Ok(None);
        };
        let mut pts = Vec::new();
        for mu in a.vertices()?.iter() {
            let mut terms = Vec::with_capacity(mu.support_len());
            for (t, w) in mu.entries() {
                match &r2.body[*t] {
                    Some(c) => terms.push((w.clone(), c)),
                    None => {
                        return Err(Error::CompositionUndefined {
                            state: r1.space.name(s).to_string(),
                            detail: format!(
                                "right operand is EMPTY at reachable state {}",
                                r1.space.name(*t)
                            ),
                        })
                    }
                }
            }
            pts.extend(weighted_minkowski(&terms, n)?);
        }
        Ok(Some(ConvexSet::from_reduced(n, hull_reduce(pts))))
    })
}

/// `b . r` for a test `b`: `r(s)` where `b` holds, EMPTY elsewhere.
pub fn guard_then(b: &ConvexProgram, r: &ConvexProgram) -> Result<ConvexProgram> {
    check_same(&b.space, &r.space)?;
    if !b.is_subidentity() {
        return Err(Error::Kind("guard must be a test".into()));
    }
    let body = (0..b.len())
        .map(|s| if b.body[s].is_some() { r.body[s].clone() } else { None })
        .collect();
    ConvexProgram::new(b.space.clone(), body)
}

/// Exact per-state refinement `r1 ⊑ r2`; EMPTY refines everything.
pub fn refines(r1: &ConvexProgram, r2: &ConvexProgram) -> Result<bool> {
    Ok(refinement_witness(r1, r2)?.is_none())
}

/// First state where `r1 ⊑ r2` fails.
pub fn refinement_witness(r1: &ConvexProgram, r2: &ConvexProgram) -> Result<Option<State>> {
    check_same(&r1.space, &r2.space)?;
    for s in 0..r1.len() {
        let ok = match (&r1.body[s], &r2.body[s]) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(a), Some(b)) => a.is_subset(b)?,
        };
        if !ok {
            return Ok(Some(s));
        }
    }
    Ok(None)
}

/// Semantic equality (mutual refinement).
pub fn equivalent(r1: &ConvexProgram, r2: &ConvexProgram) -> Result<bool> {
    if r1 == r2 {
        return Ok(true);
    }
    Ok(refines(r1, r2)? && refines(r2, r1)?)
}

/// `r . (r + delta) ⊑ r`.
pub fn is_transitive(r: &ConvexProgram) -> Result<bool> {
    let skip = ConvexProgram::skip(r.space.clone());
    let rd = ndet_choice(r, &skip)?;
    refines(&seq_compose(r, &rd)?, r)
}

/// Least fixed point of `X = r2 + r . X`, by iteration from `bot`.
pub fn kleene_star(r: &ConvexProgram, r2: &ConvexProgram, bound: usize) -> Result<ConvexProgram> {
    check_same(&r.space, &r2.space)?;
    if r.is_bottom() {
        return Ok(r2.clone());
    }
    let skip = ConvexProgram::skip(r.space.clone());
    if *r2 == skip && r.is_total() && is_transitive(r)? {
        return ndet_choice(&skip, r);
    }
    kleene_iterate(r, r2, bound)
}

/// Plain Kleene iteration without shortcuts.
pub fn kleene_iterate(r: &ConvexProgram, r2: &ConvexProgram, bound: usize) -> Result<ConvexProgram> {
    let mut x = ConvexProgram::bottom(r.space.clone());
    for _ in 0..bound {
        let next = ndet_choice(r2, &seq_compose(r, &x)?)?.to_vertex_form()?;
        if equivalent(&next, &x)? {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::NonTermination { iterations: bound })
}

/// The `d`-th iterate of `X -> r2 + r . X` from `X_0 = r2`.
pub fn kleene_iterate_bounded(r: &ConvexProgram, r2: &ConvexProgram, d: usize) -> Result<ConvexProgram> {
    let mut x = r2.clone();
    for _ in 0..d {
        x = ndet_choice(r2, &seq_compose(r, &x)?)?;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn space(n: usize) -> Arc<StateSpace> {
        StateSpace::numbered(n).unwrap()
    }

    fn coin(sp: &Arc<StateSpace>, p: Rational) -> ConvexProgram {
        let n = sp.len();
        ConvexProgram::deterministic(sp.clone(), |_| {
            Distribution::point(n, 0).mix(&Distribution::point(n, 1), &p)
        })
        .unwrap()
    }

    fn assign(sp: &Arc<StateSpace>, t: State) -> ConvexProgram {
        let n = sp.len();
        ConvexProgram::deterministic(sp.clone(), |_| Distribution::point(n, t)).unwrap()
    }

    fn d2(a: Rational) -> Distribution {
        Distribution::new(2, vec![(0, a.clone()), (1, Rational::one() - a)]).unwrap()
    }

    #[test]
    fn prob_choice_endpoints() {
        let sp = space(2);
        let a = assign(&sp, 0);
        let b = assign(&sp, 1);
        assert_eq!(prob_choice(&a, &b, &Rational::zero()).unwrap(), a);
        assert_eq!(prob_choice(&a, &b, &Rational::one()).unwrap(), b);
        let half = prob_choice(&a, &b, &rat(1, 4)).unwrap();
        assert_eq!(half.at(0).unwrap(), &ConvexSet::singleton(d2(rat(3, 4))));
        assert!(prob_choice(&a, &b, &rat(5, 4)).is_err());
        let t = ConvexProgram::test(sp.clone(), |s| s == 0);
        assert!(matches!(prob_choice(&t, &b, &rat(1, 2)), Err(Error::Kind(_))));
    }

    #[test]
    fn bottom_laws() {
        let sp = space(2);
        let c = coin(&sp, rat(1, 2));
        let bot = ConvexProgram::bottom(sp.clone());
        assert_eq!(ndet_choice(&bot, &c).unwrap(), c);
        assert_eq!(seq_compose(&bot, &c).unwrap(), bot);
        assert_eq!(seq_compose(&c, &bot).unwrap(), bot);
    }

    #[test]
    fn reachable_empty_is_an_error() {
        let sp = space(2);
        let c = coin(&sp, rat(1, 2));
        let t = ConvexProgram::test(sp.clone(), |s| s == 0);
        assert!(matches!(seq_compose(&c, &t), Err(Error::CompositionUndefined { .. })));
        // Guarded composition is fine.
        let g = guard_then(&t, &c).unwrap();
        assert_eq!(g.kind(), Kind::Partial);
        assert!(g.at(1).is_none());
    }

    #[test]
    fn skip_is_program_and_test() {
        let sp = space(3);
        let skip = ConvexProgram::skip(sp.clone());
        assert_eq!(skip.kind(), Kind::Program);
        assert!(skip.is_subidentity());
        assert_eq!(ConvexProgram::test(sp, |s| s > 0).kind(), Kind::Test);
    }

    #[test]
    fn transitivity_of_relations() {
        let sp = space(3);
        let chain = ConvexProgram::relation_convex_closure(
            sp.clone(),
            &[(0, 1), (1, 2), (0, 0), (1, 1), (2, 2)],
        )
        .unwrap();
        assert!(!is_transitive(&chain).unwrap());
        let closed = ConvexProgram::relation_convex_closure(
            sp.clone(),
            &[(0, 1), (1, 2), (0, 2), (0, 0), (1, 1), (2, 2)],
        )
        .unwrap();
        assert!(is_transitive(&closed).unwrap());
    }

    #[test]
    fn star_shortcut_agrees_with_iteration() {
        let sp = space(2);
        let r = ConvexProgram::relation_convex_closure(sp.clone(), &[(1, 0), (0, 0), (1, 1)]).unwrap();
        let skip = ConvexProgram::skip(sp.clone());
        let star = kleene_star(&r, &skip, 16).unwrap();
        assert!(equivalent(&star, &ndet_choice(&skip, &r).unwrap()).unwrap());
        let it = kleene_iterate(&r, &skip, 16).unwrap();
        assert!(equivalent(&star, &it).unwrap());
        let bot = ConvexProgram::bottom(sp.clone());
        assert_eq!(kleene_star(&bot, &r, 4).unwrap(), r);
    }

    #[test]
    fn probabilistic_loop_without_finite_fixed_point() {
        // Repeating `step` from 0 visits (3/4)^k, a new vertex every round.
        let sp = space(2);
        let step = ConvexProgram::deterministic(sp.clone(), |s| {
            if s == 0 {
                d2(rat(3, 4))
            } else {
                Distribution::point(2, 1)
            }
        })
        .unwrap();
        let skip = ConvexProgram::skip(sp.clone());
        let r = kleene_star(&step, &skip, 6);
        assert_eq!(r, Err(Error::NonTermination { iterations: 6 }));
        // A loop body that resets to 0 stabilizes immediately.
        let reset = assign(&sp, 0);
        let x = kleene_star(&step, &reset, 6).unwrap();
        assert_eq!(x, reset.to_vertex_form().unwrap());
    }

    #[test]
    fn seq_compose_matches_brute_force_selection() {
        // r1(s) = {coin}, r2 nondeterministic: brute-force all selections f.
        let sp = space(2);
        let c = coin(&sp, rat(1, 3));
        let r2 = ndet_choice(&assign(&sp, 0), &ConvexProgram::skip(sp.clone())).unwrap();
        let got = seq_compose(&c, &r2).unwrap();
        let mu = d2(rat(2, 3));
        let mut outs = Vec::new();
        for f0 in r2.at(0).unwrap().vertices().unwrap().iter() {
            for f1 in r2.at(1).unwrap().vertices().unwrap().iter() {
                outs.push(f0.scale(&mu.weight(0)).add(&f1.scale(&mu.weight(1))));
            }
        }
        let expect = ConvexSet::hull(outs).unwrap();
        assert_eq!(got.at(0).unwrap(), &expect);
        assert_eq!(got.at(1).unwrap(), &expect);
    }
}
