//! Convex sets of distributions.
//!
//! A set is either given by its vertices (kept irredundant and sorted) or
//! by linear constraints on a face of the probability simplex. All
//! membership and inclusion questions are decided exactly by LP.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::lp::{basic_feasible_solutions, Cmp, Lp, LpResult};
use crate::rational::Rational;
use crate::space::{State, StateSpace};

/// Default bound on basis enumeration when converting between forms.
pub const ENUMERATION_CAP: usize = 200_000;

/// `sum_s coeffs[s] * mu(s)  cmp  rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub coeffs: Vec<(State, Rational)>,
    pub cmp: Cmp,
    pub rhs: Rational,
}

impl Constraint {
    pub fn new(coeffs: Vec<(State, Rational)>, cmp: Cmp, rhs: Rational) -> Constraint {
        Constraint { coeffs, cmp, rhs }
    }

    /// `mu(set) >= p`.
    pub fn mass_at_least(set: impl IntoIterator<Item = State>, p: Rational) -> Constraint {
        Constraint {
            coeffs: set.into_iter().map(|s| (s, Rational::one())).collect(),
            cmp: Cmp::Ge,
            rhs: p,
        }
    }

    pub fn holds(&self, mu: &Distribution) -> bool {
        let lhs: Rational = self.coeffs.iter().map(|(s, a)| a * &mu.weight(*s)).sum();
        match self.cmp {
            Cmp::Ge => lhs >= self.rhs,
            Cmp::Le => lhs <= self.rhs,
            Cmp::Eq => lhs == self.rhs,
        }
    }

    fn dense(&self, dim: usize) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); dim];
        for (s, a) in &self.coeffs {
            v[*s] += a;
        }
        v
    }
}

/// Distributions supported on `support` that satisfy every constraint.
#[derive(Clone, PartialEq, Eq)]
pub struct HalfspaceSet {
    dim: usize,
    support: Vec<State>,
    constraints: Vec<Constraint>,
    /// Support states grouped by identical constraint columns.
    groups: Vec<(Vec<Rational>, Vec<State>)>,
}

impl HalfspaceSet {
    fn build(dim: usize, mut support: Vec<State>, constraints: Vec<Constraint>) -> Result<HalfspaceSet> {
        support.sort_unstable();
        support.dedup();
        if support.iter().any(|&s| s >= dim) {
            return Err(Error::Domain("support state out of range".into()));
        }
        for c in &constraints {
            if c.coeffs.iter().any(|(s, _)| *s >= dim) {
                return Err(Error::Domain("constraint state out of range".into()));
            }
        }
        let dense: Vec<Vec<Rational>> = constraints.iter().map(|c| c.dense(dim)).collect();
        let mut by_sig: BTreeMap<Vec<Rational>, Vec<State>> = BTreeMap::new();
        for &s in &support {
            let sig: Vec<Rational> = dense.iter().map(|row| row[s].clone()).collect();
            by_sig.entry(sig).or_default().push(s);
        }
        Ok(HalfspaceSet { dim, support, constraints, groups: by_sig.into_iter().collect() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> &[State] {
        &self.support
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    fn in_support(&self, s: State) -> bool {
        self.support.binary_search(&s).is_ok()
    }

    fn contains(&self, mu: &Distribution) -> bool {
        mu.is_distribution()
            && mu.support().all(|s| self.in_support(s))
            && self.constraints.iter().all(|c| c.holds(mu))
    }

    /// LP over the merged columns; `objective` may be `None` for feasibility.
    fn lp(&self, objective: Option<&[Rational]>) -> (Lp, Vec<State>) {
        let g = self.groups.len();
        let mut reps = Vec::with_capacity(g);
        let mut costs = Vec::with_capacity(g);
        for (_, states) in &self.groups {
            match objective {
                Some(a) => {
                    let best = states.iter().copied().min_by(|x, y| a[*x].cmp(&a[*y])).unwrap();
                    costs.push(a[best].clone());
                    reps.push(best);
                }
                None => reps.push(states[0]),
            }
        }
        let mut lp = Lp::new(g);
        lp.add_row((0..g).map(|j| (j, Rational::one())).collect(), Cmp::Eq, Rational::one());
        for (k, c) in self.constraints.iter().enumerate() {
            let coeffs = self
                .groups
                .iter()
                .enumerate()
                .filter(|(_, (sig, _))| !sig[k].is_zero())
                .map(|(j, (sig, _))| (j, sig[k].clone()))
                .collect();
            lp.add_row(coeffs, c.cmp, c.rhs.clone());
        }
        if objective.is_some() {
            lp.set_objective(costs.into_iter().enumerate().collect());
        }
        (lp, reps)
    }

    fn is_feasible(&self) -> bool {
        !self.support.is_empty() && self.lp(None).0.is_feasible()
    }

    fn min_linear(&self, a: &[Rational]) -> Rational {
        match self.lp(Some(a)).0.minimize() {
            LpResult::Optimal { value, .. } => value,
            // The feasible region is a non-empty polytope.
            other => unreachable!("support function LP returned {other:?}"),
        }
    }

    fn enumerate_vertices(&self, cap: usize) -> Result<Vec<Distribution>> {
        let n = self.support.len();
        let ineq: Vec<usize> = (0..self.constraints.len())
            .filter(|&k| self.constraints[k].cmp != Cmp::Eq)
            .collect();
        let cols = n + ineq.len();
        let mut a = Vec::with_capacity(1 + self.constraints.len());
        let mut b = Vec::with_capacity(1 + self.constraints.len());
        let mut first = vec![Rational::one(); n];
        first.resize(cols, Rational::zero());
        a.push(first);
        b.push(Rational::one());
        for (k, c) in self.constraints.iter().enumerate() {
            let dense = c.dense(self.dim);
            let mut row: Vec<Rational> = self.support.iter().map(|&s| dense[s].clone()).collect();
            row.resize(cols, Rational::zero());
            if let Some(pos) = ineq.iter().position(|&i| i == k) {
                row[n + pos] = match c.cmp {
                    Cmp::Ge => -Rational::one(),
                    _ => Rational::one(),
                };
            }
            a.push(row);
            b.push(c.rhs.clone());
        }
        let sols = basic_feasible_solutions(&a, &b, cap)?;
        let pts = sols
            .into_iter()
            .map(|x| {
                Distribution::from_pairs(
                    self.dim,
                    self.support.iter().copied().zip(x.into_iter().take(n)),
                )
                .expect("non-negative basic solution")
            })
            .collect();
        Ok(hull_reduce(pts))
    }
}

impl fmt::Debug for HalfspaceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HalfspaceSet")
            .field("support", &self.support)
            .field("constraints", &self.constraints)
            .finish()
    }
}

/// A non-empty closed convex set of distributions.
#[derive(Clone, PartialEq, Eq)]
pub enum ConvexSet {
    Vertices { dim: usize, points: Vec<Distribution> },
    Halfspaces(Arc<HalfspaceSet>),
}

impl ConvexSet {
    /// Convex hull of the given distributions.
    pub fn hull(points: Vec<Distribution>) -> Result<ConvexSet> {
        let dim = points.first().ok_or(Error::EmptySet)?.dim();
        for p in &points {
            if p.dim() != dim {
                return Err(Error::Domain("points of different dimension".into()));
            }
            if !p.is_distribution() {
                return Err(Error::Domain(format!("not a distribution: {p:?}")));
            }
        }
        Ok(ConvexSet::Vertices { dim, points: hull_reduce(points) })
    }

    pub fn singleton(mu: Distribution) -> ConvexSet {
        debug_assert!(mu.is_distribution());
        ConvexSet::Vertices { dim: mu.dim(), points: vec![mu] }
    }

    pub fn point(dim: usize, s: State) -> ConvexSet {
        ConvexSet::singleton(Distribution::point(dim, s))
    }

    /// Constraint form; fails with `EmptySet` when unsatisfiable.
    pub fn halfspaces(dim: usize, support: Vec<State>, constraints: Vec<Constraint>) -> Result<ConvexSet> {
        let h = HalfspaceSet::build(dim, support, constraints)?;
        if !h.is_feasible() {
            return Err(Error::EmptySet);
        }
        Ok(ConvexSet::Halfspaces(Arc::new(h)))
    }

    /// The whole simplex over `support`.
    pub fn simplex(dim: usize, support: Vec<State>) -> Result<ConvexSet> {
        ConvexSet::halfspaces(dim, support, Vec::new())
    }

    pub(crate) fn from_reduced(dim: usize, points: Vec<Distribution>) -> ConvexSet {
        debug_assert!(!points.is_empty());
        ConvexSet::Vertices { dim, points }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Vertices { dim, .. } => *dim,
            ConvexSet::Halfspaces(h) => h.dim,
        }
    }

    pub fn is_vertex_form(&self) -> bool {
        matches!(self, ConvexSet::Vertices { .. })
    }

    /// Vertices, enumerating them for constraint-form sets.
    pub fn vertices(&self) -> Result<Cow<'_, [Distribution]>> {
        self.vertices_capped(ENUMERATION_CAP)
    }

    pub fn vertices_capped(&self, cap: usize) -> Result<Cow<'_, [Distribution]>> {
        match self {
            ConvexSet::Vertices { points, .. } => Ok(Cow::Borrowed(points)),
            ConvexSet::Halfspaces(h) => Ok(Cow::Owned(h.enumerate_vertices(cap)?)),
        }
    }

    /// Converts to vertex form.
    pub fn to_vertex_form(&self) -> Result<ConvexSet> {
        Ok(ConvexSet::Vertices { dim: self.dim(), points: self.vertices()?.into_owned() })
    }

    /// States that some member may charge with positive mass.
    pub fn support_states(&self) -> Vec<State> {
        match self {
            ConvexSet::Vertices { points, .. } => {
                let mut v: Vec<State> = points.iter().flat_map(|p| p.support()).collect();
                v.sort_unstable();
                v.dedup();
                v
            }
            ConvexSet::Halfspaces(h) => h.support.clone(),
        }
    }

    pub fn contains(&self, mu: &Distribution) -> bool {
        match self {
            ConvexSet::Vertices { points, .. } => in_hull(mu, points),
            ConvexSet::Halfspaces(h) => h.contains(mu),
        }
    }

    /// `min { a . mu | mu in self }`.
    pub fn min_linear(&self, a: &[Rational]) -> Rational {
        match self {
            ConvexSet::Vertices { points, .. } => {
                points.iter().map(|p| p.dot(a)).min().expect("non-empty")
            }
            ConvexSet::Halfspaces(h) => h.min_linear(a),
        }
    }

    /// Whether `self` is `{delta_s}`.
    pub fn is_point_set(&self, s: State) -> bool {
        match self {
            ConvexSet::Vertices { points, .. } => points.len() == 1 && points[0].as_point() == Some(s),
            ConvexSet::Halfspaces(h) => h.support == [s],
        }
    }

    /// Exact inclusion `self ⊆ other`.
    pub fn is_subset(&self, other: &ConvexSet) -> Result<bool> {
        if self.dim() != other.dim() {
            return Err(Error::Domain("sets of different dimension".into()));
        }
        match (self, other) {
            (ConvexSet::Vertices { points, .. }, _) => Ok(points.iter().all(|p| other.contains(p))),
            (ConvexSet::Halfspaces(h), ConvexSet::Halfspaces(g)) => Ok(halfspace_within(self, h.dim, g)),
            (ConvexSet::Halfspaces(_), ConvexSet::Vertices { .. }) => {
                let v = self.vertices()?;
                Ok(v.iter().all(|p| other.contains(p)))
            }
        }
    }

    pub fn equivalent(&self, other: &ConvexSet) -> Result<bool> {
        if self == other {
            return Ok(true);
        }
        Ok(self.is_subset(other)? && other.is_subset(self)?)
    }

    /// Exact intersection; `None` when disjoint.
    pub fn intersect(&self, other: &ConvexSet) -> Result<Option<ConvexSet>> {
        if self.dim() != other.dim() {
            return Err(Error::Domain("sets of different dimension".into()));
        }
        if self.is_subset(other)? {
            return Ok(Some(self.clone()));
        }
        if other.is_subset(self)? {
            return Ok(Some(other.clone()));
        }
        match (self, other) {
            (ConvexSet::Halfspaces(h), ConvexSet::Halfspaces(g)) => {
                let support: Vec<State> = h.support.iter().copied().filter(|s| g.in_support(*s)).collect();
                let mut cs = h.constraints.clone();
                cs.extend(g.constraints.iter().cloned());
                match ConvexSet::halfspaces(h.dim, support, cs) {
                    Ok(c) => Ok(Some(c)),
                    Err(Error::EmptySet) => Ok(None),
                    Err(e) => Err(e),
                }
            }
            (ConvexSet::Vertices { points, dim }, ConvexSet::Halfspaces(h))
            | (ConvexSet::Halfspaces(h), ConvexSet::Vertices { points, dim }) => {
                vertex_halfspace_intersection(*dim, points, h)
            }
            (ConvexSet::Vertices { points: p, dim }, ConvexSet::Vertices { points: q, .. }) => {
                vertex_vertex_intersection(*dim, p, q)
            }
        }
    }

    pub fn display(&self, space: &StateSpace) -> String {
        match self.vertices() {
            Ok(v) => {
                let parts: Vec<String> = v.iter().map(|p| p.display(space)).collect();
                format!("conv[{}]", parts.join(", "))
            }
            Err(_) => format!("{self:?}"),
        }
    }
}

impl fmt::Debug for ConvexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvexSet::Vertices { points, .. } => f.debug_set().entries(points).finish(),
            ConvexSet::Halfspaces(h) => h.fmt(f),
        }
    }
}

/// Inclusion of a constraint-form set `x` in another one `g`, via the
/// support function of `x` in each constraint direction.
fn halfspace_within(x: &ConvexSet, dim: usize, g: &HalfspaceSet) -> bool {
    let outside: Vec<Rational> = (0..dim)
        .map(|s| if g.in_support(s) { Rational::zero() } else { -Rational::one() })
        .collect();
    if x.min_linear(&outside).is_negative() {
        return false;
    }
    g.constraints.iter().all(|c| constraint_holds_on(x, c, dim))
}

/// Whether every member of `x` satisfies `c`.
pub fn constraint_holds_on(x: &ConvexSet, c: &Constraint, dim: usize) -> bool {
    let a = c.dense(dim);
    let lo_ok = || x.min_linear(&a) >= c.rhs;
    let hi_ok = || {
        let neg: Vec<Rational> = a.iter().map(|v| -v).collect();
        -x.min_linear(&neg) <= c.rhs
    };
    match c.cmp {
        Cmp::Ge => lo_ok(),
        Cmp::Le => hi_ok(),
        Cmp::Eq => lo_ok() && hi_ok(),
    }
}

/// Whether `x` lies in the convex hull of `points` (exact LP).
pub fn in_hull(x: &Distribution, points: &[Distribution]) -> bool {
    let refs: Vec<&Distribution> = points.iter().collect();
    in_hull_of(x, &refs)
}

fn in_hull_of(x: &Distribution, points: &[&Distribution]) -> bool {
    let supp: Vec<State> = x.support().collect();
    let within = |p: &Distribution| p.support().all(|s| supp.binary_search(&s).is_ok());
    let cands: Vec<&Distribution> = points.iter().copied().filter(|p| within(p)).collect();
    if cands.is_empty() {
        return false;
    }
    if cands.contains(&x) {
        return true;
    }
    let mut lp = Lp::new(cands.len());
    lp.add_row((0..cands.len()).map(|j| (j, Rational::one())).collect(), Cmp::Eq, Rational::one());
    for (k, &s) in supp.iter().enumerate() {
        let coeffs = cands
            .iter()
            .enumerate()
            .filter_map(|(j, p)| {
                let w = p.weight(s);
                (!w.is_zero()).then_some((j, w))
            })
            .collect();
        lp.add_row(coeffs, Cmp::Eq, x.entries()[k].1.clone());
    }
    lp.is_feasible()
}

/// Irredundant vertices of the hull of `points`, in canonical order.
/// Works for any family of non-negative vectors.
pub fn hull_reduce(mut points: Vec<Distribution>) -> Vec<Distribution> {
    points.sort();
    points.dedup();
    if points.len() <= 2 {
        return points;
    }
    let equal_mass = {
        let m = points[0].mass();
        points.iter().all(|p| p.mass() == m)
    };
    let mut keep = vec![true; points.len()];
    for i in 0..points.len() {
        if equal_mass && points[i].support_len() == 1 {
            continue;
        }
        let others: Vec<&Distribution> = (0..points.len())
            .filter(|&j| j != i && keep[j])
            .map(|j| &points[j])
            .collect();
        if in_hull_of(&points[i], &others) {
            keep[i] = false;
        }
    }
    points.into_iter().zip(keep).filter_map(|(p, k)| k.then_some(p)).collect()
}

/// Vertices of `sum_k w_k * S_k` (weighted Minkowski sum), reduced as it goes.
pub fn weighted_minkowski(terms: &[(Rational, &ConvexSet)], dim: usize) -> Result<Vec<Distribution>> {
    let mut acc = vec![Distribution::zero(dim)];
    for (w, set) in terms {
        if w.is_zero() {
            continue;
        }
        let verts = set.vertices()?;
        if verts.len() == 1 {
            let add = verts[0].scale(w);
            for a in acc.iter_mut() {
                *a = a.add(&add);
            }
            continue;
        }
        let scaled: Vec<Distribution> = verts.iter().map(|v| v.scale(w)).collect();
        let mut next = Vec::with_capacity(acc.len() * scaled.len());
        for a in &acc {
            for v in &scaled {
                next.push(a.add(v));
            }
        }
        acc = hull_reduce(next);
    }
    Ok(acc)
}

fn project(lambda: &[Rational], points: &[&Distribution], dim: usize) -> Distribution {
    let mut acc = Distribution::zero(dim);
    for (l, p) in lambda.iter().zip(points) {
        acc.add_scaled(l, p);
    }
    acc
}

fn vertex_halfspace_intersection(
    dim: usize,
    points: &[Distribution],
    h: &HalfspaceSet,
) -> Result<Option<ConvexSet>> {
    let pts: Vec<&Distribution> = points
        .iter()
        .filter(|p| p.support().all(|s| h.in_support(s)))
        .collect();
    if pts.is_empty() {
        return Ok(None);
    }
    let n = pts.len();
    let ineq: Vec<usize> = (0..h.constraints.len())
        .filter(|&k| h.constraints[k].cmp != Cmp::Eq)
        .collect();
    let cols = n + ineq.len();
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut first = vec![Rational::one(); n];
    first.resize(cols, Rational::zero());
    a.push(first);
    b.push(Rational::one());
    for (k, c) in h.constraints.iter().enumerate() {
        let dense = c.dense(dim);
        let mut row: Vec<Rational> = pts.iter().map(|p| p.dot(&dense)).collect();
        row.resize(cols, Rational::zero());
        if let Some(pos) = ineq.iter().position(|&i| i == k) {
            row[n + pos] = if c.cmp == Cmp::Ge { -Rational::one() } else { Rational::one() };
        }
        a.push(row);
        b.push(c.rhs.clone());
    }
    let sols = basic_feasible_solutions(&a, &b, ENUMERATION_CAP)?;
    if sols.is_empty() {
        return Ok(None);
    }
    let verts = sols.iter().map(|x| project(&x[..n], &pts, dim)).collect();
    Ok(Some(ConvexSet::from_reduced(dim, hull_reduce(verts))))
}

fn vertex_vertex_intersection(
    dim: usize,
    p: &[Distribution],
    q: &[Distribution],
) -> Result<Option<ConvexSet>> {
    let mut states: Vec<State> = p.iter().chain(q).flat_map(|d| d.support()).collect();
    states.sort_unstable();
    states.dedup();
    let (np, nq) = (p.len(), q.len());
    let cols = np + nq;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for &s in &states {
        let mut row: Vec<Rational> = p.iter().map(|d| d.weight(s)).collect();
        row.extend(q.iter().map(|d| -d.weight(s)));
        a.push(row);
        b.push(Rational::zero());
    }
    let mut sum_p = vec![Rational::one(); np];
    sum_p.resize(cols, Rational::zero());
    a.push(sum_p);
    b.push(Rational::one());
    let mut sum_q = vec![Rational::zero(); np];
    sum_q.resize(cols, Rational::one());
    a.push(sum_q);
    b.push(Rational::one());
    let sols = basic_feasible_solutions(&a, &b, ENUMERATION_CAP)?;
    if sols.is_empty() {
        return Ok(None);
    }
    let prefs: Vec<&Distribution> = p.iter().collect();
    let verts = sols.iter().map(|x| project(&x[..np], &prefs, dim)).collect();
    Ok(Some(ConvexSet::from_reduced(dim, hull_reduce(verts))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn d2(a: (i64, i64)) -> Distribution {
        Distribution::new(2, vec![(0, rat(a.0, a.1)), (1, Rational::one() - rat(a.0, a.1))]).unwrap()
    }

    /// Brute-force oracle: a point is redundant iff it is a convex
    /// combination of two others on the segment (valid on the 1-simplex).
    fn segment_oracle(pts: &[Distribution]) -> Vec<Distribution> {
        let mut v = pts.to_vec();
        v.sort();
        v.dedup();
        if v.len() <= 2 {
            return v;
        }
        vec![v[0].clone(), v[v.len() - 1].clone()]
    }

    #[test]
    fn hull_reduce_drops_midpoint() {
        let pts = vec![d2((1, 4)), d2((3, 4)), d2((1, 2))];
        assert_eq!(hull_reduce(pts.clone()), vec![d2((1, 4)), d2((3, 4))]);
        assert_eq!(hull_reduce(pts.clone()), segment_oracle(&pts));
    }

    #[test]
    fn hull_reduce_keeps_triangle_vertices() {
        let e = |s| Distribution::point(3, s);
        let centre = Distribution::new(3, vec![(0, rat(1, 3)), (1, rat(1, 3)), (2, rat(1, 3))]).unwrap();
        let edge = Distribution::new(3, vec![(0, rat(1, 2)), (1, rat(1, 2))]).unwrap();
        let out = hull_reduce(vec![centre, e(0), edge, e(1), e(2)]);
        assert_eq!(out, vec![e(2), e(1), e(0)]);
    }

    #[test]
    fn halfspace_vertices_and_support_function() {
        // mu(0) >= 1/2 on three states.
        let h = ConvexSet::halfspaces(3, vec![0, 1, 2], vec![Constraint::mass_at_least([0], rat(1, 2))]).unwrap();
        let v = h.vertices().unwrap().into_owned();
        let half = |s| Distribution::new(3, vec![(0, rat(1, 2)), (s, rat(1, 2))]).unwrap();
        let mut expected = vec![Distribution::point(3, 0), half(1), half(2)];
        expected.sort();
        assert_eq!(v, expected);
        let a = vec![rat(3, 1), rat(1, 1), rat(2, 1)];
        assert_eq!(h.min_linear(&a), rat(2, 1));
        let hv = h.to_vertex_form().unwrap();
        assert!(h.equivalent(&hv).unwrap());
    }

    #[test]
    fn infeasible_constraints_are_empty() {
        let r = ConvexSet::halfspaces(2, vec![1], vec![Constraint::mass_at_least([0], rat(1, 2))]);
        assert_eq!(r, Err(Error::EmptySet));
    }

    #[test]
    fn intersection_of_segments() {
        let a = ConvexSet::hull(vec![d2((1, 1)), d2((1, 2))]).unwrap();
        let b = ConvexSet::hull(vec![d2((0, 1)), d2((1, 2))]).unwrap();
        let i = a.intersect(&b).unwrap().unwrap();
        assert_eq!(i, ConvexSet::singleton(d2((1, 2))));
        let c = ConvexSet::hull(vec![d2((0, 1)), d2((1, 4))]).unwrap();
        assert_eq!(a.intersect(&c).unwrap(), None);
    }

    #[test]
    fn intersection_mixed_forms() {
        let tri = ConvexSet::hull((0..3).map(|s| Distribution::point(3, s)).collect()).unwrap();
        let h = ConvexSet::halfspaces(3, vec![0, 1, 2], vec![Constraint::mass_at_least([0], rat(1, 2))]).unwrap();
        let i = tri.intersect(&h).unwrap().unwrap();
        assert!(i.equivalent(&h).unwrap());
        let seg = ConvexSet::hull(vec![Distribution::point(3, 1), Distribution::point(3, 0)]).unwrap();
        let i = seg.intersect(&h).unwrap().unwrap();
        let half = Distribution::new(3, vec![(0, rat(1, 2)), (1, rat(1, 2))]).unwrap();
        assert_eq!(i, ConvexSet::hull(vec![Distribution::point(3, 0), half]).unwrap());
    }

    #[test]
    fn minkowski_of_segments() {
        let seg = ConvexSet::hull(vec![Distribution::point(2, 0), Distribution::point(2, 1)]).unwrap();
        let pt = ConvexSet::point(2, 0);
        let v = weighted_minkowski(&[(rat(1, 2), &seg), (rat(1, 2), &pt)], 2).unwrap();
        assert_eq!(v, vec![d2((1, 2)), d2((1, 1))]);
    }
}
