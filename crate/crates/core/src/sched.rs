//! Schedulers, runs and the convex semantics of event structures.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::convex::{hull_reduce, weighted_minkowski, ConvexSet};
use crate::dist::{Distribution, SubDistribution};
use crate::error::{Error, Result};
use crate::ipbes::{EventId, EventSet, IpBes, DEFAULT_TRACE_CAP};
use crate::lp::{Cmp, Lp};
use crate::program::{refines, ConvexProgram};
use crate::rational::Rational;
use crate::space::State;

/// Default cap on explicitly enumerated policies.
pub const DEFAULT_POLICY_CAP: usize = 100_000;

/// A deterministic scheduler: per (trace, state), one event and one
/// distribution from its label.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SchedulerPolicy {
    decisions: HashMap<(Vec<EventId>, State), (EventId, Distribution)>,
}

impl SchedulerPolicy {
    pub fn new() -> SchedulerPolicy {
        SchedulerPolicy::default()
    }

    pub fn set(&mut self, trace: Vec<EventId>, state: State, event: EventId, mu: Distribution) {
        self.decisions.insert((trace, state), (event, mu));
    }

    pub fn get(&self, trace: &[EventId], state: State) -> Option<&(EventId, Distribution)> {
        self.decisions.get(&(trace.to_vec(), state))
    }

    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    /// Policy that asks `f` at every (trace, state) it meets.
    pub fn from_fn<F>(es: &IpBes, s0: State, mut f: F) -> Result<SchedulerPolicy>
    where
        F: FnMut(&[EventId], State) -> (EventId, Distribution),
    {
        let tree = es.trace_tree(DEFAULT_TRACE_CAP)?;
        let mut pol = SchedulerPolicy::new();
        let mut values = vec![Distribution::zero(es.space().len()); tree.len()];
        values[0] = Distribution::point(es.space().len(), s0);
        for i in 0..tree.len() {
            if tree.is_leaf(i) {
                continue;
            }
            let trace = tree.trace(i);
            for (t, m) in values[i].entries().to_vec() {
                let (e, mu) = f(&trace, t);
                let j = tree.child(i, e).ok_or_else(|| Error::Policy(format!("event {e} not enabled")))?;
                let add = mu.scale(&m);
                values[j] = values[j].add(&add);
                pol.set(trace.clone(), t, e, mu);
            }
        }
        Ok(pol)
    }
}

/// A complete run: the value of every trace, and the outcome.
#[derive(Debug, Clone)]
pub struct Run {
    pub initial: State,
    pub values: Vec<(Vec<EventId>, SubDistribution)>,
    /// Entry `n`: mass on traces of length `n` plus maximal shorter ones.
    pub frontier_mass: Vec<Rational>,
    pub outcome: SubDistribution,
}

impl Run {
    pub fn conserves_mass(&self) -> bool {
        self.frontier_mass.iter().all(|m| m.is_one())
    }
}

/// Runs `pol` from `s0` and sums the values of maximal traces.
pub fn run_policy(es: &IpBes, pol: &SchedulerPolicy, s0: State) -> Result<Run> {
    let n = es.space().len();
    if s0 >= n {
        return Err(Error::StateSpace(format!("state {s0} out of range")));
    }
    let tree = es.trace_tree(DEFAULT_TRACE_CAP)?;
    let mut values = vec![Distribution::zero(n); tree.len()];
    values[0] = Distribution::point(n, s0);
    let mut outcome = Distribution::zero(n);
    let mut max_depth = 0;
    for i in 0..tree.len() {
        max_depth = max_depth.max(tree.depth(i));
        if tree.is_leaf(i) {
            outcome = outcome.add(&values[i]);
            continue;
        }
        let trace = tree.trace(i);
        for (t, m) in values[i].entries().to_vec() {
            let (e, mu) = pol.get(&trace, t).ok_or_else(|| {
                Error::Policy(format!("no decision after [{}] at {}", es.format_trace(&trace), es.space().name(t)))
            })?;
            let j = tree.child(i, *e).ok_or_else(|| {
                Error::Policy(format!("event {e} is not enabled after [{}]", es.format_trace(&trace)))
            })?;
            match es.label(*e).at(t) {
                Some(set) if set.contains(mu) => {}
                _ => {
                    return Err(Error::Policy(format!(
                        "decision at {} after [{}] is not in the label of {}",
                        es.space().name(t),
                        es.format_trace(&trace),
                        es.name(*e)
                    )))
                }
            }
            values[j].add_scaled(&m, mu);
        }
    }
    let mut frontier_mass = vec![Rational::zero(); max_depth + 1];
    for i in 0..tree.len() {
        let d = tree.depth(i);
        let m = values[i].mass();
        let upto = if tree.is_leaf(i) { max_depth } else { d };
        for f in frontier_mass.iter_mut().take(upto + 1).skip(d) {
            *f += &m;
        }
    }
    let values = (0..tree.len()).map(|i| (tree.trace(i), values[i].clone())).collect();
    Ok(Run { initial: s0, values, frontier_mass, outcome })
}

/// Memoized backward induction over (executed events, state).
struct Evaluator<'a> {
    es: &'a IpBes,
    memo: HashMap<(EventSet, State), ConvexSet>,
}

impl<'a> Evaluator<'a> {
    fn new(es: &'a IpBes) -> Self {
        Evaluator { es, memo: HashMap::new() }
    }

    fn value(&mut self, done: EventSet, t: State) -> Result<ConvexSet> {
        if let Some(v) = self.memo.get(&(done, t)) {
            return Ok(v.clone());
        }
        let n = self.es.space().len();
        let enabled = self.es.enabled(done);
        let result = if enabled.is_empty() {
            ConvexSet::point(n, t)
        } else {
            let mut points = Vec::new();
            let mut any = false;
            for e in enabled {
                let Some(label) = self.es.label(e).at(t) else { continue };
                any = true;
                let next = done.with(e);
                for mu in label.vertices()?.iter() {
                    let mut conts = Vec::with_capacity(mu.support_len());
                    for (u, w) in mu.entries() {
                        conts.push((w.clone(), self.value(next, *u)?));
                    }
                    let terms: Vec<(Rational, &ConvexSet)> = conts.iter().map(|(w, c)| (w.clone(), c)).collect();
                    points.extend(weighted_minkowski(&terms, n)?);
                }
            }
            if !any {
                return Err(Error::Infeasible(format!(
                    "no enabled event is defined at state {} after {:?}",
                    self.es.space().name(t),
                    done
                )));
            }
            ConvexSet::from_reduced(n, hull_reduce(points))
        };
        self.memo.insert((done, t), result.clone());
        Ok(result)
    }
}

/// The set of outcomes of all schedulers from `s0`.
pub fn semantics(es: &IpBes, s0: State) -> Result<ConvexSet> {
    if s0 >= es.space().len() {
        return Err(Error::StateSpace(format!("state {s0} out of range")));
    }
    es.require_feasible()?;
    Evaluator::new(es).value(EventSet::EMPTY, s0)
}

/// [`semantics`] tabulated over every initial state.
pub fn semantics_program(es: &IpBes) -> Result<ConvexProgram> {
    es.require_feasible()?;
    let mut ev = Evaluator::new(es);
    let body = es
        .space()
        .states()
        .map(|s| ev.value(EventSet::EMPTY, s).map(Some))
        .collect::<Result<Vec<_>>>()?;
    ConvexProgram::new(es.space().clone(), body)
}

/// Sequential refinement of event structures.
pub fn refines_seq(a: &IpBes, b: &IpBes) -> Result<bool> {
    refines(&semantics_program(a)?, &semantics_program(b)?)
}

/// Every extremal policy from `s0`, restricted to the (trace, state) pairs
/// it actually reaches.
pub fn extremal_policies(es: &IpBes, s0: State, cap: usize) -> Result<Vec<SchedulerPolicy>> {
    let tree = es.trace_tree(DEFAULT_TRACE_CAP)?;
    let n = es.space().len();
    let mut work = vec![Distribution::zero(n); tree.len()];
    work[0] = Distribution::point(n, s0);
    let mut out = Vec::new();
    let mut pol = SchedulerPolicy::new();
    enumerate(es, &tree, 0, 0, &mut work, &mut pol, &mut out, cap)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    es: &IpBes,
    tree: &crate::ipbes::TraceTree,
    node: usize,
    k: usize,
    values: &mut Vec<Distribution>,
    pol: &mut SchedulerPolicy,
    out: &mut Vec<SchedulerPolicy>,
    cap: usize,
) -> Result<()> {
    if node == tree.len() {
        if out.len() >= cap {
            return Err(Error::Explosion { what: "scheduler policies".into(), cap });
        }
        out.push(pol.clone());
        return Ok(());
    }
    if tree.is_leaf(node) || k >= values[node].support_len() {
        return enumerate(es, tree, node + 1, 0, values, pol, out, cap);
    }
    let (t, m) = values[node].entries()[k].clone();
    let trace = tree.trace(node);
    let mut any = false;
    for &(e, j) in &tree.node(node).children {
        let Some(label) = es.label(e).at(t) else { continue };
        any = true;
        for mu in label.vertices()?.iter() {
            let saved = values[j].clone();
            values[j].add_scaled(&m, mu);
            pol.set(trace.clone(), t, e, mu.clone());
            enumerate(es, tree, node, k + 1, values, pol, out, cap)?;
            values[j] = saved;
        }
    }
    pol.decisions.remove(&(trace, t));
    if !any {
        return Err(Error::Infeasible(format!("no enabled event is defined at state {}", es.space().name(t))));
    }
    Ok(())
}

/// Semantics by brute force over extremal policies.
pub fn semantics_by_policies(es: &IpBes, s0: State, cap: usize) -> Result<ConvexSet> {
    let mut outcomes = Vec::new();
    for pol in extremal_policies(es, s0, cap)? {
        let run = run_policy(es, &pol, s0)?;
        if !run.outcome.is_distribution() {
            return Err(Error::Termination(format!("a policy loses mass: {:?}", run.outcome)));
        }
        outcomes.push(run.outcome);
    }
    ConvexSet::hull(outcomes)
}

/// Empirical outcome frequencies under a uniformly random scheduler.
pub fn monte_carlo(es: &IpBes, s0: State, trials: usize, seed: u64) -> Result<Distribution> {
    let n = es.space().len();
    if trials == 0 {
        return Err(Error::Domain("at least one trial is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; n];
    let mut cache: HashMap<(EventId, State), Vec<Distribution>> = HashMap::new();
    for _ in 0..trials {
        let mut done = EventSet::EMPTY;
        let mut t = s0;
        loop {
            let en = es.enabled(done);
            if en.is_empty() {
                break;
            }
            let live: Vec<EventId> = en.into_iter().filter(|&e| es.label(e).at(t).is_some()).collect();
            let &e = live
                .choose(&mut rng)
                .ok_or_else(|| Error::Infeasible(format!("stuck at state {}", es.space().name(t))))?;
            let verts = match cache.entry((e, t)) {
                Entry::Occupied(o) => o.into_mut(),
                Entry::Vacant(v) => v.insert(es.label(e).at(t).unwrap().vertices()?.into_owned()),
            };
            let mu = verts.choose(&mut rng).unwrap();
            let mut x: f64 = rng.gen();
            let mut next = mu.entries().last().unwrap().0;
            for (u, w) in mu.entries() {
                let w = w.to_f64();
                if x < w {
                    next = *u;
                    break;
                }
                x -= w;
            }
            t = next;
            done = done.with(e);
        }
        counts[t] += 1;
    }
    let total = trials as i64;
    Distribution::from_dense(&counts.iter().map(|&c| Rational::new(c as i64, total)).collect::<Vec<_>>())
}

/// Whether some point of `set` is within `tol` of `emp` in every coordinate.
pub fn within_tolerance(emp: &Distribution, set: &ConvexSet, tol: &Rational) -> Result<bool> {
    let verts = set.vertices()?;
    let k = verts.len();
    let mut lp = Lp::new(k);
    lp.add_row((0..k).map(|j| (j, Rational::one())).collect(), Cmp::Eq, Rational::one());
    for s in 0..emp.dim() {
        let coeffs: Vec<(usize, Rational)> = verts
            .iter()
            .enumerate()
            .filter_map(|(j, v)| {
                let w = v.weight(s);
                (!w.is_zero()).then_some((j, w))
            })
            .collect();
        lp.add_row(coeffs.clone(), Cmp::Ge, emp.weight(s) - tol);
        lp.add_row(coeffs, Cmp::Le, emp.weight(s) + tol);
    }
    Ok(lp.is_feasible())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{ndet_choice, seq_compose};
    use crate::rational::rat;
    use crate::space::StateSpace;

    fn coin(sp: &std::sync::Arc<StateSpace>) -> ConvexProgram {
        ConvexProgram::deterministic(sp.clone(), |_| {
            Distribution::point(2, 0).mix(&Distribution::point(2, 1), &rat(1, 2))
        })
        .unwrap()
    }

    fn assign(sp: &std::sync::Arc<StateSpace>, v: State) -> ConvexProgram {
        ConvexProgram::deterministic(sp.clone(), |_| Distribution::point(2, v)).unwrap()
    }

    fn r_then_optional_r() -> IpBes {
        let sp = StateSpace::numbered(2).unwrap();
        let r = IpBes::atomic(coin(&sp), "r");
        IpBes::seq(&r, &IpBes::sum(&IpBes::unit(sp), &r).unwrap()).unwrap()
    }

    fn d(a: Rational, b: Rational) -> Distribution {
        Distribution::from_dense(&[a, b]).unwrap()
    }

    #[test]
    fn policies_on_optional_repeat() {
        let es = r_then_optional_r();
        let always_skip = SchedulerPolicy::from_fn(&es, 0, |tr, t| match tr.len() {
            0 => (0, es.label(0).at(t).unwrap().vertices().unwrap()[0].clone()),
            _ => (1, Distribution::point(2, t)),
        })
        .unwrap();
        let run = run_policy(&es, &always_skip, 0).unwrap();
        assert_eq!(run.outcome, d(rat(1, 2), rat(1, 2)));
        assert!(run.conserves_mass());

        let by_state = SchedulerPolicy::from_fn(&es, 1, |tr, t| {
            let half = es.label(0).at(t).unwrap().vertices().unwrap()[0].clone();
            match (tr.len(), t) {
                (0, _) => (0, half),
                (_, 0) => (1, Distribution::point(2, 0)),
                _ => (2, half),
            }
        })
        .unwrap();
        let run = run_policy(&es, &by_state, 1).unwrap();
        assert_eq!(run.outcome, d(rat(3, 4), rat(1, 4)));
        assert_eq!(run.frontier_mass, vec![Rational::one(); 3]);
    }

    #[test]
    fn semantics_of_optional_repeat() {
        let es = r_then_optional_r();
        let sem = semantics(&es, 0).unwrap();
        let v = sem.vertices().unwrap().into_owned();
        assert_eq!(v, vec![d(rat(1, 4), rat(3, 4)), d(rat(3, 4), rat(1, 4))]);
        assert!(sem.contains(&d(rat(1, 2), rat(1, 2))));
        let brute = semantics_by_policies(&es, 0, 1000).unwrap();
        assert!(brute.equivalent(&sem).unwrap());
        assert_eq!(extremal_policies(&es, 0, 1000).unwrap().len(), 4);
        let mut outcomes: Vec<Distribution> = extremal_policies(&es, 0, 1000)
            .unwrap()
            .iter()
            .map(|p| run_policy(&es, p, 0).unwrap().outcome)
            .collect();
        outcomes.sort();
        outcomes.dedup();
        assert_eq!(outcomes.len(), 3);
    }

    #[test]
    fn homomorphism_on_atoms() {
        let sp = StateSpace::numbered(2).unwrap();
        let a0 = IpBes::atomic(assign(&sp, 0), "a0");
        let a1 = IpBes::atomic(assign(&sp, 1), "a1");
        let c = IpBes::atomic(coin(&sp), "c");
        let sum = semantics_program(&IpBes::sum(&a0, &a1).unwrap()).unwrap();
        assert_eq!(sum, ndet_choice(&assign(&sp, 0), &assign(&sp, 1)).unwrap());
        let seq = semantics_program(&IpBes::seq(&c, &a1).unwrap()).unwrap();
        assert!(crate::program::equivalent(&seq, &seq_compose(&coin(&sp), &assign(&sp, 1)).unwrap()).unwrap());
        assert!(refines_seq(&a0, &IpBes::sum(&a0, &a1).unwrap()).unwrap());
        assert!(!refines_seq(&IpBes::sum(&a0, &a1).unwrap(), &a0).unwrap());
    }

    #[test]
    fn if_else_is_feasible_and_lone_guard_is_not() {
        let sp = StateSpace::numbered(2).unwrap();
        let b = ConvexProgram::test(sp.clone(), |s| s == 0);
        let nb = b.negate().unwrap();
        let body = IpBes::atomic(assign(&sp, 1), "x:=1");
        let ite = IpBes::sum(
            &IpBes::seq(&IpBes::atomic(b.clone(), "b"), &body).unwrap(),
            &IpBes::atomic(nb, "!b"),
        )
        .unwrap();
        let sem = semantics_program(&ite).unwrap();
        assert_eq!(sem, assign(&sp, 1));
        let lone = IpBes::seq(&IpBes::atomic(b, "b"), &body).unwrap();
        assert!(matches!(semantics(&lone, 1), Err(Error::Infeasible(_))));
    }

    #[test]
    fn monte_carlo_lands_in_hull() {
        let es = r_then_optional_r();
        let emp = monte_carlo(&es, 0, 10_000, 7).unwrap();
        let sem = semantics(&es, 0).unwrap();
        assert!(within_tolerance(&emp, &sem, &rat(1, 40)).unwrap());
        assert_eq!(emp, monte_carlo(&es, 0, 10_000, 7).unwrap());
        let sp = StateSpace::numbered(2).unwrap();
        let a0 = IpBes::atomic(assign(&sp, 0), "a0");
        assert_eq!(monte_carlo(&a0, 1, 50, 1).unwrap(), Distribution::point(2, 0));
    }

    #[test]
    fn bad_policy_is_rejected() {
        let es = r_then_optional_r();
        let mut pol = SchedulerPolicy::new();
        pol.set(vec![], 0, 2, Distribution::point(2, 0));
        assert!(matches!(run_policy(&es, &pol, 0), Err(Error::Policy(_))));
        let mut pol = SchedulerPolicy::new();
        pol.set(vec![], 0, 0, Distribution::point(2, 0));
        assert!(matches!(run_policy(&es, &pol, 0), Err(Error::Policy(_))));
    }
}
