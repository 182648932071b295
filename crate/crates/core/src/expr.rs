//! Unevaluated compositions of convex programs.
//!
//! Long chains over large state spaces have too many vertices to
//! materialize, but their support function in any direction is computed
//! exactly by backward induction: the minimum of `a . nu` over `(r . X)(s)`
//! is the minimum over `mu in r(s)` of `sum_t mu(t) * min_X(t)`.

use std::collections::HashMap;
use std::sync::Arc;

use crate::convex::ConvexSet;
use crate::error::{Error, Result};
use crate::lp::Cmp;
use crate::program::{ndet_choice, seq_compose, ConvexProgram};
use crate::rational::Rational;
use crate::space::{State, StateSpace};

#[derive(Debug, Clone)]
pub enum ProgramExpr {
    Atom(Arc<ConvexProgram>),
    Seq(Vec<ProgramExpr>),
    Choice(Vec<ProgramExpr>),
}

/// Value of a support-function evaluation at one state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Slot {
    Unset,
    Empty,
    Min(Rational),
}

impl ProgramExpr {
    pub fn atom(p: ConvexProgram) -> ProgramExpr {
        ProgramExpr::Atom(Arc::new(p))
    }

    /// Sequential composition, flattening nested sequences.
    pub fn seq(parts: Vec<ProgramExpr>) -> ProgramExpr {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                ProgramExpr::Seq(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            return flat.pop().unwrap();
        }
        ProgramExpr::Seq(flat)
    }

    pub fn choice(parts: Vec<ProgramExpr>) -> ProgramExpr {
        if parts.len() == 1 {
            return parts.into_iter().next().unwrap();
        }
        ProgramExpr::Choice(parts)
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        match self {
            ProgramExpr::Atom(p) => p.space(),
            ProgramExpr::Seq(v) | ProgramExpr::Choice(v) => v[0].space(),
        }
    }

    /// Number of atoms, counting repeats.
    pub fn size(&self) -> usize {
        match self {
            ProgramExpr::Atom(_) => 1,
            ProgramExpr::Seq(v) | ProgramExpr::Choice(v) => v.iter().map(|e| e.size()).sum(),
        }
    }

    /// Materializes the composition as a single program.
    pub fn evaluate(&self) -> Result<ConvexProgram> {
        match self {
            ProgramExpr::Atom(p) => Ok((**p).clone()),
            ProgramExpr::Seq(parts) => {
                let mut acc = parts.last().unwrap().evaluate()?;
                for p in parts[..parts.len() - 1].iter().rev() {
                    acc = seq_compose(&p.evaluate()?, &acc)?;
                }
                Ok(acc)
            }
            ProgramExpr::Choice(parts) => {
                let mut acc = parts[0].evaluate()?;
                for p in &parts[1..] {
                    acc = ndet_choice(&acc, &p.evaluate()?)?;
                }
                Ok(acc)
            }
        }
    }

    /// States that may carry mass after running from any state in `from`.
    pub fn reach(&self, from: &[State]) -> Vec<State> {
        let n = self.space().len();
        let mut mark = vec![false; n];
        self.reach_into(from, &mut mark);
        (0..n).filter(|&s| mark[s]).collect()
    }

    fn reach_into(&self, from: &[State], mark: &mut [bool]) {
        match self {
            ProgramExpr::Atom(p) => {
                for &s in from {
                    if let Some(c) = p.at(s) {
                        for t in c.support_states() {
                            mark[t] = true;
                        }
                    }
                }
            }
            ProgramExpr::Choice(parts) => {
                for p in parts {
                    p.reach_into(from, mark);
                }
            }
            ProgramExpr::Seq(parts) => {
                let mut cur = from.to_vec();
                for p in parts {
                    cur = p.reach(&cur);
                }
                for s in cur {
                    mark[s] = true;
                }
            }
        }
    }

    /// `min { a . nu | nu in self(s) }` for every `s` in `demand`.
    pub fn min_linear(&self, a: &[Rational], demand: &[State]) -> Result<Vec<Slot>> {
        let n = self.space().len();
        match self {
            ProgramExpr::Atom(p) => {
                let mut out = vec![Slot::Unset; n];
                for &s in demand {
                    out[s] = match p.at(s) {
                        None => Slot::Empty,
                        Some(c) => Slot::Min(c.min_linear(a)),
                    };
                }
                Ok(out)
            }
            ProgramExpr::Choice(parts) => {
                let mut out = vec![Slot::Unset; n];
                for &s in demand {
                    out[s] = Slot::Empty;
                }
                for p in parts {
                    let v = p.min_linear(a, demand)?;
                    for &s in demand {
                        if let Slot::Min(x) = &v[s] {
                            out[s] = match &out[s] {
                                Slot::Min(y) if y <= x => Slot::Min(y.clone()),
                                _ => Slot::Min(x.clone()),
                            };
                        }
                    }
                }
                Ok(out)
            }
            ProgramExpr::Seq(parts) => {
                let head = &parts[0];
                let tail = ProgramExpr::seq(parts[1..].to_vec());
                let next = head.reach(demand);
                let v = tail.min_linear(a, &next)?;
                pull_back(head, &v, demand)
            }
        }
    }

    /// Whether every member of `self(s)` satisfies `c`, for each `s` in
    /// `states`. Returns the first failing state.
    pub fn constraint_violation(
        &self,
        c: &crate::convex::Constraint,
        states: &[State],
    ) -> Result<Option<State>> {
        let n = self.space().len();
        let mut a = vec![Rational::zero(); n];
        for (s, w) in &c.coeffs {
            a[*s] += w;
        }
        if matches!(c.cmp, Cmp::Ge | Cmp::Eq) {
            let v = self.min_linear(&a, states)?;
            for &s in states {
                if let Slot::Min(x) = &v[s] {
                    if *x < c.rhs {
                        return Ok(Some(s));
                    }
                }
            }
        }
        if matches!(c.cmp, Cmp::Le | Cmp::Eq) {
            let neg: Vec<Rational> = a.iter().map(|x| -x).collect();
            let v = self.min_linear(&neg, states)?;
            for &s in states {
                if let Slot::Min(x) = &v[s] {
                    if -x > c.rhs {
                        return Ok(Some(s));
                    }
                }
            }
        }
        Ok(None)
    }

    /// Exact `self ⊑ post` restricted to `states`. Constraint-form entries
    /// of `post` are checked through support functions, one sweep per
    /// distinct constraint; vertex-form entries force materialization.
    /// Returns the smallest failing state.
    pub fn refinement_witness(&self, post: &ConvexProgram, states: &[State]) -> Result<Option<State>> {
        let n = self.space().len();
        let probe = self.min_linear(&vec![Rational::zero(); n], states)?;
        let mut evaluated: Option<ConvexProgram> = None;
        let mut groups: Vec<(crate::convex::Constraint, Vec<State>)> = Vec::new();
        let mut index: HashMap<crate::convex::Constraint, usize> = HashMap::new();
        let mut worst: Option<State> = None;
        let fail = |s: State, worst: &mut Option<State>| {
            *worst = Some(worst.map_or(s, |w| w.min(s)));
        };
        for &s in states {
            if probe[s] == Slot::Empty {
                continue;
            }
            match post.at(s) {
                None => fail(s, &mut worst),
                Some(ConvexSet::Halfspaces(h)) => {
                    let inside = |t: &State| h.support().binary_search(t).is_ok();
                    if !self.reach(&[s]).iter().all(inside) {
                        let outside: Vec<(State, Rational)> = (0..n)
                            .filter(|t| !inside(t))
                            .map(|t| (t, Rational::one()))
                            .collect();
                        let c = crate::convex::Constraint::new(outside, Cmp::Le, Rational::zero());
                        if self.constraint_violation(&c, &[s])?.is_some() {
                            fail(s, &mut worst);
                            continue;
                        }
                    }
                    for c in h.constraints() {
                        match index.get(c) {
                            Some(&k) => groups[k].1.push(s),
                            None => {
                                index.insert(c.clone(), groups.len());
                                groups.push((c.clone(), vec![s]));
                            }
                        }
                    }
                }
                Some(target) => {
                    if evaluated.is_none() {
                        evaluated = Some(self.evaluate()?);
                    }
                    let here = evaluated.as_ref().unwrap().at(s).expect("non-empty entry");
                    if !here.is_subset(target)? {
                        fail(s, &mut worst);
                    }
                }
            }
        }
        for (c, ss) in &groups {
            if let Some(s) = self.constraint_violation_min(c, ss)? {
                fail(s, &mut worst);
            }
        }
        Ok(worst)
    }

    fn constraint_violation_min(&self, c: &crate::convex::Constraint, states: &[State]) -> Result<Option<State>> {
        let mut first = None;
        let mut rest = states.to_vec();
        while let Some(s) = self.constraint_violation(c, &rest)? {
            first = Some(first.map_or(s, |f: State| f.min(s)));
            rest.retain(|&t| t < s);
            if rest.is_empty() {
                break;
            }
        }
        Ok(first)
    }
}

/// `min over head(s) of mu . v` where `v` holds tail values.
fn pull_back(head: &ProgramExpr, v: &[Slot], demand: &[State]) -> Result<Vec<Slot>> {
    let n = v.len();
    match head {
        ProgramExpr::Atom(p) => {
            let mut out = vec![Slot::Unset; n];
            for &s in demand {
                let Some(c) = p.at(s) else {
                    out[s] = Slot::Empty;
                    continue;
                };
                let mut dense = vec![Rational::zero(); n];
                for t in c.support_states() {
                    match &v[t] {
                        Slot::Min(x) => dense[t] = x.clone(),
                        Slot::Empty => {
                            return Err(Error::CompositionUndefined {
                                state: p.space().name(s).to_string(),
                                detail: format!(
                                    "continuation is EMPTY at reachable state {}",
                                    p.space().name(t)
                                ),
                            })
                        }
                        Slot::Unset => unreachable!("reach set covers the support"),
                    }
                }
                out[s] = Slot::Min(c.min_linear(&dense));
            }
            Ok(out)
        }
        ProgramExpr::Seq(parts) => {
            // (x1 . x2 . ... . xk) pulled back = x1 pulled back over (x2 ... xk pulled back).
            let mut reach_sets = vec![demand.to_vec()];
            for p in &parts[..parts.len() - 1] {
                let next = p.reach(reach_sets.last().unwrap());
                reach_sets.push(next);
            }
            let mut cur = v.to_vec();
            for (i, p) in parts.iter().enumerate().rev() {
                cur = pull_back(p, &cur, &reach_sets[i])?;
            }
            Ok(cur)
        }
        ProgramExpr::Choice(parts) => {
            let mut out = vec![Slot::Unset; n];
            for &s in demand {
                out[s] = Slot::Empty;
            }
            for p in parts {
                let w = pull_back(p, v, demand)?;
                for &s in demand {
                    if let Slot::Min(x) = &w[s] {
                        out[s] = match &out[s] {
                            Slot::Min(y) if y <= x => Slot::Min(y.clone()),
                            _ => Slot::Min(x.clone()),
                        };
                    }
                }
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::Constraint;
    use crate::dist::Distribution;
    use crate::program::refines;
    use crate::rational::rat;

    fn space(n: usize) -> Arc<StateSpace> {
        StateSpace::numbered(n).unwrap()
    }

    #[test]
    fn support_function_matches_materialized_minimum() {
        let sp = space(3);
        let r = ConvexProgram::relation_convex_closure(
            sp.clone(),
            &[(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (2, 0)],
        )
        .unwrap();
        let coin = ConvexProgram::deterministic(sp.clone(), |s| {
            Distribution::point(3, s).mix(&Distribution::point(3, (s + 1) % 3), &rat(1, 3))
        })
        .unwrap();
        let e = ProgramExpr::seq(vec![
            ProgramExpr::atom(r.clone()),
            ProgramExpr::choice(vec![ProgramExpr::atom(coin.clone()), ProgramExpr::atom(r.clone())]),
            ProgramExpr::atom(coin.clone()),
        ]);
        let m = e.evaluate().unwrap();
        let a = vec![rat(2, 1), rat(-1, 1), rat(1, 2)];
        let v = e.min_linear(&a, &[0, 1, 2]).unwrap();
        for s in 0..3 {
            let direct = m.at(s).unwrap().min_linear(&a);
            assert_eq!(v[s], Slot::Min(direct));
        }
    }

    #[test]
    fn refinement_against_constraint_post() {
        let sp = space(2);
        let coin = ConvexProgram::deterministic(sp.clone(), |_| {
            Distribution::point(2, 0).mix(&Distribution::point(2, 1), &rat(1, 2))
        })
        .unwrap();
        let e = ProgramExpr::seq(vec![ProgramExpr::atom(coin.clone()), ProgramExpr::atom(coin)]);
        let at_least = |p: Rational| {
            ConvexProgram::from_fn(sp.clone(), |_| {
                ConvexSet::halfspaces(2, vec![0, 1], vec![Constraint::mass_at_least([1], p.clone())]).map(Some)
            })
            .unwrap()
        };
        assert_eq!(e.refinement_witness(&at_least(rat(1, 2)), &[0, 1]).unwrap(), None);
        assert_eq!(e.refinement_witness(&at_least(rat(3, 5)), &[0, 1]).unwrap(), Some(0));
        // Same verdicts through materialization.
        let m = e.evaluate().unwrap();
        assert!(refines(&m, &at_least(rat(1, 2))).unwrap());
        assert!(!refines(&m, &at_least(rat(3, 5))).unwrap());
    }

    #[test]
    fn guarded_branches_cover_the_space() {
        let sp = space(2);
        let b = ConvexProgram::test(sp.clone(), |s| s == 0);
        let nb = b.negate().unwrap();
        let to1 = ConvexProgram::deterministic(sp.clone(), |_| Distribution::point(2, 1)).unwrap();
        let skip = ConvexProgram::skip(sp.clone());
        let e = ProgramExpr::choice(vec![
            ProgramExpr::seq(vec![ProgramExpr::atom(b), ProgramExpr::atom(to1.clone())]),
            ProgramExpr::seq(vec![ProgramExpr::atom(nb), ProgramExpr::atom(skip)]),
        ]);
        let m = e.evaluate().unwrap();
        assert!(m.is_total());
        assert_eq!(m, to1);
    }
}
