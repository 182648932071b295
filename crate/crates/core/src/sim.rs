//! t-simulations between event structures.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::ipbes::{EventId, EventSet, IpBes, DEFAULT_TRACE_CAP};
use crate::program::{refines, ConvexProgram};
use crate::sched::refines_seq;

/// A trace map from one structure into another.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TSimulation {
    map: BTreeMap<Vec<EventId>, Vec<EventId>>,
}

impl TSimulation {
    pub fn get(&self, alpha: &[EventId]) -> Option<&Vec<EventId>> {
        self.map.get(alpha)
    }

    pub fn insert(&mut self, alpha: Vec<EventId>, beta: Vec<EventId>) {
        self.map.insert(alpha, beta);
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<EventId>, &Vec<EventId>)> {
        self.map.iter()
    }

    pub fn identity(es: &IpBes) -> Result<TSimulation> {
        let mut f = TSimulation::default();
        for t in es.traces(DEFAULT_TRACE_CAP)? {
            f.insert(t.clone(), t);
        }
        Ok(f)
    }
}

/// Pairwise label facts shared by search and checks.
struct Labels {
    stutter: Vec<bool>,
    lifts: Vec<bool>,
    covers: Vec<Vec<bool>>,
}

impl Labels {
    fn new(a: &IpBes, b: &IpBes) -> Result<Labels> {
        let skip = ConvexProgram::skip(a.space().clone());
        let stutter = a.events().map(|e| refines(a.label(e), &skip)).collect::<Result<_>>()?;
        let lifts = b.events().map(|e| refines(&skip, b.label(e))).collect::<Result<_>>()?;
        let mut covers = vec![vec![false; b.len()]; a.len()];
        let mut cache: HashMap<(*const ConvexProgram, *const ConvexProgram), bool> = HashMap::new();
        for e in a.events() {
            for f in b.events() {
                let key = (a.label_shared(e).as_ref() as *const _, b.label_shared(f).as_ref() as *const _);
                let v = match cache.get(&key) {
                    Some(v) => *v,
                    None => {
                        let v = refines(a.label(e), b.label(f))?;
                        cache.insert(key, v);
                        v
                    }
                };
                covers[e][f] = v;
            }
        }
        Ok(Labels { stutter, lifts, covers })
    }
}

fn skip_refiners(es: &IpBes) -> Result<Vec<bool>> {
    let skip = ConvexProgram::skip(es.space().clone());
    es.events().map(|e| refines(&skip, es.label(e))).collect()
}

fn weakly_maximal_set(es: &IpBes, lifts: &[bool], done: EventSet, memo: &mut HashMap<EventSet, bool>) -> bool {
    if let Some(v) = memo.get(&done) {
        return *v;
    }
    let en = es.enabled(done);
    let v = en.is_empty()
        || en
            .iter()
            .any(|&e| lifts[e] && weakly_maximal_set(es, lifts, done.with(e), memo));
    memo.insert(done, v);
    v
}

/// Maximal, or extendable to a maximal trace by events refined by skip.
pub fn is_weakly_maximal(es: &IpBes, beta: &[EventId]) -> Result<bool> {
    if !es.is_trace(beta) {
        return Err(Error::Domain("not a trace of the structure".into()));
    }
    let lifts = skip_refiners(es)?;
    Ok(weakly_maximal_set(es, &lifts, EventSet::from_iter(beta.iter().copied()), &mut HashMap::new()))
}

struct Search<'a> {
    a: &'a IpBes,
    b: &'a IpBes,
    labels: Labels,
    ok: HashMap<(EventSet, EventSet), bool>,
    wmax: HashMap<EventSet, bool>,
    visited: usize,
    cap: usize,
}

/// Where a step of `a` goes in `b`: stay put, or take event `f`.
#[derive(Clone, Copy)]
enum Step {
    Stay,
    Take(EventId),
}

impl<'a> Search<'a> {
    fn options(&mut self, sa: EventSet, e: EventId, sb: EventSet) -> Vec<Step> {
        let next_a = sa.with(e);
        let maximal = self.a.is_maximal(next_a);
        let mut out = Vec::new();
        if !maximal && self.labels.stutter[e] {
            out.push(Step::Stay);
        }
        for f in self.b.enabled(sb) {
            if !self.labels.covers[e][f] {
                continue;
            }
            if maximal && !weakly_maximal_set(self.b, &self.labels.lifts, sb.with(f), &mut self.wmax) {
                continue;
            }
            out.push(Step::Take(f));
        }
        out
    }

    fn target(sb: EventSet, step: Step) -> EventSet {
        match step {
            Step::Stay => sb,
            Step::Take(f) => sb.with(f),
        }
    }

    fn feasible(&mut self, sa: EventSet, sb: EventSet) -> Result<bool> {
        if let Some(v) = self.ok.get(&(sa, sb)) {
            return Ok(*v);
        }
        self.visited += 1;
        if self.visited > self.cap {
            return Err(Error::Explosion { what: "simulation search states".into(), cap: self.cap });
        }
        let mut all = true;
        for e in self.a.enabled(sa) {
            let mut found = false;
            for step in self.options(sa, e, sb) {
                if self.feasible(sa.with(e), Search::target(sb, step))? {
                    found = true;
                    break;
                }
            }
            if !found {
                all = false;
                break;
            }
        }
        self.ok.insert((sa, sb), all);
        Ok(all)
    }

    fn build(&mut self, alpha: &mut Vec<EventId>, sa: EventSet, beta: &mut Vec<EventId>, sb: EventSet, out: &mut TSimulation) -> Result<()> {
        out.insert(alpha.clone(), beta.clone());
        for e in self.a.enabled(sa) {
            let step = self
                .options(sa, e, sb)
                .into_iter()
                .find(|&st| self.ok.get(&(sa.with(e), Search::target(sb, st))) == Some(&true))
                .ok_or_else(|| Error::Policy("simulation witness reconstruction failed".into()))?;
            alpha.push(e);
            if let Step::Take(f) = step {
                beta.push(f);
            }
            self.build(alpha, sa.with(e), beta, Search::target(sb, step), out)?;
            alpha.pop();
            if let Step::Take(_) = step {
                beta.pop();
            }
        }
        Ok(())
    }
}

/// Searches for a t-simulation from `a` to `b`. `None` means none exists:
/// every candidate extension was tried at every trace.
pub fn find_t_simulation(a: &IpBes, b: &IpBes) -> Result<Option<TSimulation>> {
    find_t_simulation_capped(a, b, DEFAULT_TRACE_CAP)
}

pub fn find_t_simulation_capped(a: &IpBes, b: &IpBes, cap: usize) -> Result<Option<TSimulation>> {
    crate::space::check_same(a.space(), b.space())?;
    let mut s = Search {
        a,
        b,
        labels: Labels::new(a, b)?,
        ok: HashMap::new(),
        wmax: HashMap::new(),
        visited: 0,
        cap,
    };
    if !s.feasible(EventSet::EMPTY, EventSet::EMPTY)? {
        return Ok(None);
    }
    let mut out = TSimulation::default();
    s.build(&mut Vec::new(), EventSet::EMPTY, &mut Vec::new(), EventSet::EMPTY, &mut out)?;
    Ok(Some(out))
}

pub fn simulates(a: &IpBes, b: &IpBes) -> Result<bool> {
    Ok(find_t_simulation(a, b)?.is_some())
}

/// Mutual simulation.
pub fn sim_equivalent(a: &IpBes, b: &IpBes) -> Result<bool> {
    Ok(simulates(a, b)? && simulates(b, a)?)
}

fn weakly_maximal_trace(b: &IpBes, beta: &[EventId], skip: &ConvexProgram) -> Result<bool> {
    let done = EventSet::from_iter(beta.iter().copied());
    let en = b.enabled(done);
    if en.is_empty() {
        return Ok(true);
    }
    for e in en {
        if refines(skip, b.label(e))? {
            let mut next = beta.to_vec();
            next.push(e);
            if weakly_maximal_trace(b, &next, skip)? {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Clause-by-clause check of `f` against the definition, independent of
/// the search. Returns the first violation.
pub fn verify_t_simulation(a: &IpBes, b: &IpBes, f: &TSimulation) -> Result<std::result::Result<(), String>> {
    let skip = ConvexProgram::skip(a.space().clone());
    let traces = a.traces(DEFAULT_TRACE_CAP)?;
    match f.get(&[]) {
        Some(v) if v.is_empty() => {}
        _ => return Ok(Err("empty trace is not mapped to the empty trace".into())),
    }
    let mut preimages: HashMap<&Vec<EventId>, usize> = HashMap::new();
    for t in &traces {
        let Some(image) = f.get(t) else {
            return Ok(Err(format!("trace {t:?} is not mapped")));
        };
        if !b.is_trace(image) {
            return Ok(Err(format!("image {image:?} of {t:?} is not a trace")));
        }
        *preimages.entry(image).or_default() += 1;
        let Some((&e, prefix)) = t.split_last() else { continue };
        let before = f.get(prefix).unwrap();
        let ext = image.len() == before.len() + 1 && image[..before.len()] == before[..];
        let stays = image == before;
        let maximal = a.is_maximal_trace(t);
        if maximal {
            if !ext {
                return Ok(Err(format!("maximal trace {t:?} does not extend its prefix image")));
            }
            if !refines(a.label(e), b.label(*image.last().unwrap()))? {
                return Ok(Err(format!("label of last event of {t:?} is not covered")));
            }
            if !weakly_maximal_trace(b, image, &skip)? {
                return Ok(Err(format!("image of maximal {t:?} is not weakly maximal")));
            }
        } else if stays {
            if !refines(a.label(e), &skip)? {
                return Ok(Err(format!("{t:?} stutters on a non-test event")));
            }
        } else if ext {
            if !refines(a.label(e), b.label(*image.last().unwrap()))? {
                return Ok(Err(format!("label of last event of {t:?} is not covered")));
            }
        } else {
            return Ok(Err(format!("image of {t:?} neither stays nor extends by one event")));
        }
    }
    debug_assert!(preimages.values().all(|&n| n <= traces.len()));
    Ok(Ok(()))
}

/// Composition of `f: a -> b` and `g: b -> c`, with the repair for
/// maximal traces whose middle step is absorbed by `g`.
pub fn compose(a: &IpBes, _b: &IpBes, c: &IpBes, f: &TSimulation, g: &TSimulation) -> Result<TSimulation> {
    let skip = ConvexProgram::skip(a.space().clone());
    let mut out = TSimulation::default();
    let missing = || Error::Policy("composition of partial maps".into());
    for t in a.traces(DEFAULT_TRACE_CAP)? {
        let mid = f.get(&t).ok_or_else(missing)?;
        let mut image = g.get(mid).ok_or_else(missing)?.clone();
        if let Some((&e, prefix)) = t.split_last() {
            let before = g.get(f.get(prefix).ok_or_else(missing)?).ok_or_else(missing)?;
            if a.is_maximal_trace(&t) && image == *before {
                let done = EventSet::from_iter(before.iter().copied());
                let mut fixed = None;
                for x in c.enabled(done) {
                    let mut cand = before.clone();
                    cand.push(x);
                    if refines(a.label(e), c.label(x))? && weakly_maximal_trace(c, &cand, &skip)? {
                        fixed = Some(cand);
                        break;
                    }
                }
                image = fixed.ok_or_else(|| Error::Policy(format!("cannot repair image of {t:?}")))?;
            }
        }
        out.insert(t, image);
    }
    Ok(out)
}

/// `r*` as a bounded unfolding of depth `depth`.
pub fn star_of(r: &ConvexProgram, name: &str, depth: usize) -> Result<IpBes> {
    let atom = IpBes::atomic(r.clone(), name);
    IpBes::star_unfold(&atom, &IpBes::unit(r.space().clone()), depth)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LawOutcome {
    pub law: String,
    pub holds: bool,
    pub detail: String,
}

impl LawOutcome {
    fn new(law: &str, holds: bool, detail: impl Into<String>) -> LawOutcome {
        LawOutcome { law: law.into(), holds, detail: detail.into() }
    }
}

/// Commutativity, associativity, unfolding and monotonicity on one sample.
pub fn check_law_suite(e: &IpBes, f: &IpBes, g: &IpBes, depth: usize) -> Result<Vec<LawOutcome>> {
    let mut out = Vec::new();
    let ef = IpBes::par(e, f)?;
    let fe = IpBes::par(f, e)?;
    out.push(LawOutcome::new("par-comm", ef.isomorphic(&fe) && sim_equivalent(&ef, &fe)?, "up to renaming"));
    let l = IpBes::par(e, &IpBes::par(f, g)?)?;
    let r = IpBes::par(&IpBes::par(e, f)?, g)?;
    out.push(LawOutcome::new("par-assoc", l.isomorphic(&r) && sim_equivalent(&l, &r)?, "up to renaming"));
    let deep = IpBes::star_unfold(e, f, depth + 1)?;
    let step = IpBes::sum(f, &IpBes::seq(e, &IpBes::star_unfold(e, f, depth)?)?)?;
    out.push(LawOutcome::new("unfold", deep.isomorphic(&step), format!("depth {depth}")));
    if simulates(e, f)? {
        out.push(LawOutcome::new("sum-mono", simulates(&IpBes::sum(g, e)?, &IpBes::sum(g, f)?)?, "G+E vs G+F"));
        out.push(LawOutcome::new("seq-mono", simulates(&IpBes::seq(g, e)?, &IpBes::seq(g, f)?)?, "G.E vs G.F"));
        out.push(LawOutcome::new("par-mono", simulates(&IpBes::par(e, g)?, &IpBes::par(f, g)?)?, "E||G vs F||G"));
    }
    Ok(out)
}

/// The four interleaving laws for a rely `r`, instantiated at bounded
/// depth, each with its sequential consequence.
pub fn check_rely_laws(r: &ConvexProgram, r2: &ConvexProgram, e: &IpBes, depth: usize) -> Result<Vec<LawOutcome>> {
    let sp = r.space().clone();
    let rs = |d: usize| star_of(r, "r", d);
    let atom2 = IpBes::atomic(r2.clone(), "r'");
    let b = ConvexProgram::test(sp, |s| s == 0);
    let c = b.negate()?;
    let (bb, cc) = (IpBes::atomic(b, "b"), IpBes::atomic(c, "c"));
    let r_atom = IpBes::atomic(r.clone(), "r");
    let r_then = |x: &IpBes| IpBes::star_unfold(&r_atom, x, depth);

    let mut cases = Vec::new();
    cases.push(("star-par", IpBes::par(&rs(depth)?, &rs(depth)?)?, rs(2 * depth)?));
    cases.push((
        "par-atom",
        IpBes::par(&rs(depth)?, &atom2)?,
        r_then(&IpBes::seq(&atom2, &rs(depth)?)?)?,
    ));
    let branches = IpBes::sum(&IpBes::seq(&bb, e)?, &IpBes::seq(&cc, &atom2)?)?;
    cases.push((
        "par-choice",
        IpBes::par(&rs(depth)?, &branches)?,
        r_then(&IpBes::sum(
            &IpBes::seq(&bb, &IpBes::par(&rs(depth)?, e)?)?,
            &IpBes::seq(&cc, &IpBes::par(&rs(depth)?, &atom2)?)?,
        )?)?,
    ));
    cases.push((
        "par-prefix",
        IpBes::par(&rs(depth)?, &IpBes::seq(&atom2, e)?)?,
        r_then(&IpBes::seq(&atom2, &IpBes::par(&rs(depth)?, e)?)?)?,
    ));
    let mut out = Vec::new();
    for (law, lhs, rhs) in cases {
        let witness = find_t_simulation(&lhs, &rhs)?;
        let verified = match &witness {
            Some(w) => verify_t_simulation(&lhs, &rhs, w)?.is_ok(),
            None => false,
        };
        let seq = refines_seq(&lhs, &rhs)?;
        out.push(LawOutcome::new(
            law,
            verified && seq,
            format!("simulation {}, sequential refinement {}", verified, seq),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Distribution;
    use crate::program::ndet_choice;
    use crate::rational::rat;
    use crate::space::StateSpace;
    use std::sync::Arc;

    fn sp() -> Arc<StateSpace> {
        StateSpace::numbered(2).unwrap()
    }

    fn assign(sp: &Arc<StateSpace>, v: usize) -> ConvexProgram {
        ConvexProgram::deterministic(sp.clone(), |_| Distribution::point(2, v)).unwrap()
    }

    fn coin(sp: &Arc<StateSpace>) -> ConvexProgram {
        ConvexProgram::deterministic(sp.clone(), |_| {
            Distribution::point(2, 0).mix(&Distribution::point(2, 1), &rat(1, 2))
        })
        .unwrap()
    }

    /// `(x=1) + (x!=1).(x:=1)` and `1 + (x := 0 or 1)`.
    fn example_pair() -> (IpBes, IpBes) {
        let sp = sp();
        let is1 = ConvexProgram::test(sp.clone(), |s| s == 1);
        let not1 = is1.negate().unwrap();
        let lhs = IpBes::sum(
            &IpBes::atomic(is1, "x=1"),
            &IpBes::seq(&IpBes::atomic(not1, "x!=1"), &IpBes::atomic(assign(&sp, 1), "x:=1")).unwrap(),
        )
        .unwrap();
        let any = ndet_choice(&assign(&sp, 0), &assign(&sp, 1)).unwrap();
        let rhs = IpBes::sum(&IpBes::unit(sp.clone()), &IpBes::atomic(any, "x:=0|1")).unwrap();
        (lhs, rhs)
    }

    #[test]
    fn example_simulation_matches_the_diagram() {
        let (lhs, rhs) = example_pair();
        let f = find_t_simulation(&lhs, &rhs).unwrap().unwrap();
        // lhs events: 0 = x=1, 1 = x!=1, 2 = x:=1; rhs: 0 = skip, 1 = x:=0|1.
        assert_eq!(f.get(&[0]).unwrap(), &vec![0]);
        assert_eq!(f.get(&[1]).unwrap(), &Vec::<usize>::new());
        assert_eq!(f.get(&[1, 2]).unwrap(), &vec![1]);
        assert!(verify_t_simulation(&lhs, &rhs, &f).unwrap().is_ok());
        assert!(refines_seq(&lhs, &rhs).unwrap());
    }

    #[test]
    fn skip_is_not_simulated_by_exhaustive_tests() {
        let sp = sp();
        let b = ConvexProgram::test(sp.clone(), |s| s == 0);
        let both = IpBes::sum(&IpBes::atomic(b.clone(), "b"), &IpBes::atomic(b.negate().unwrap(), "!b")).unwrap();
        let unit = IpBes::unit(sp);
        assert!(find_t_simulation(&unit, &both).unwrap().is_none());
        assert!(refines_seq(&unit, &both).unwrap());
    }

    #[test]
    fn reflexive_and_weak_maximality() {
        let sp = sp();
        let e = IpBes::seq(&IpBes::atomic(coin(&sp), "c"), &IpBes::atomic(assign(&sp, 1), "a")).unwrap();
        let f = find_t_simulation(&e, &e).unwrap().unwrap();
        assert_eq!(f, TSimulation::identity(&e).unwrap());
        assert!(!is_weakly_maximal(&e, &[0]).unwrap());
        assert!(is_weakly_maximal(&e, &[0, 1]).unwrap());
        let s = star_of(&coin(&sp), "c", 2).unwrap();
        let long: Vec<usize> = s.maximal_traces(100).unwrap().into_iter().max_by_key(|t| t.len()).unwrap();
        assert!(is_weakly_maximal(&s, &long[..long.len() - 1]).unwrap());
    }

    #[test]
    fn composed_witness_verifies() {
        let (lhs, rhs) = example_pair();
        let sp = lhs.space().clone();
        let top = IpBes::sum(&rhs, &IpBes::atomic(assign(&sp, 0), "x:=0")).unwrap();
        let f = find_t_simulation(&lhs, &rhs).unwrap().unwrap();
        let g = find_t_simulation(&rhs, &top).unwrap().unwrap();
        let h = compose(&lhs, &rhs, &top, &f, &g).unwrap();
        assert!(verify_t_simulation(&lhs, &top, &h).unwrap().is_ok());
    }

    #[test]
    fn checker_rejects_bad_maps() {
        let (lhs, rhs) = example_pair();
        let mut f = find_t_simulation(&lhs, &rhs).unwrap().unwrap();
        f.insert(vec![1, 2], vec![0]);
        assert!(verify_t_simulation(&lhs, &rhs, &f).unwrap().is_err());
    }

    #[test]
    fn laws_on_small_instances() {
        let sp = sp();
        let (lhs, rhs) = example_pair();
        let g = IpBes::atomic(coin(&sp), "c");
        for o in check_law_suite(&lhs, &rhs, &g, 1).unwrap() {
            assert!(o.holds, "{o:?}");
        }
        let e = IpBes::atomic(assign(&sp, 1), "x:=1");
        for o in check_rely_laws(&coin(&sp), &assign(&sp, 0), &e, 1).unwrap() {
            assert!(o.holds, "{o:?}");
        }
    }
}
