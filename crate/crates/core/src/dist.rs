//! Sparse exact (sub)distributions over a state space.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::space::{State, StateSpace};

/// A non-negative sparse vector over `0..dim`, stored sorted by state with
/// no zero entries. Used for distributions, subdistributions and weighted
/// partial sums alike; [`Distribution::is_distribution`] tells them apart.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Distribution {
    dim: usize,
    entries: Vec<(State, Rational)>,
}

pub type SubDistribution = Distribution;

impl Distribution {
    pub fn zero(dim: usize) -> Distribution {
        Distribution { dim, entries: Vec::new() }
    }

    pub fn point(dim: usize, s: State) -> Distribution {
        assert!(s < dim, "state {s} out of range {dim}");
        Distribution { dim, entries: vec![(s, Rational::one())] }
    }

    /// Builds a non-negative vector, merging repeated states.
    pub fn from_pairs<I>(dim: usize, pairs: I) -> Result<Distribution>
    where
        I: IntoIterator<Item = (State, Rational)>,
    {
        let mut entries: Vec<(State, Rational)> = pairs.into_iter().collect();
        entries.sort_by_key(|(s, _)| *s);
        let mut out: Vec<(State, Rational)> = Vec::with_capacity(entries.len());
        for (s, w) in entries {
            if s >= dim {
                return Err(Error::Domain(format!("state index {s} out of range")));
            }
            if w.is_negative() {
                return Err(Error::Domain(format!("negative weight {w}")));
            }
            match out.last_mut() {
                Some((t, acc)) if *t == s => *acc += &w,
                _ => out.push((s, w)),
            }
        }
        out.retain(|(_, w)| !w.is_zero());
        Ok(Distribution { dim, entries: out })
    }

    /// Builds a full distribution; the weights must sum to one.
    pub fn new<I>(dim: usize, pairs: I) -> Result<Distribution>
    where
        I: IntoIterator<Item = (State, Rational)>,
    {
        let d = Distribution::from_pairs(dim, pairs)?;
        if !d.mass().is_one() {
            return Err(Error::Domain(format!("weights sum to {}, not 1", d.mass())));
        }
        Ok(d)
    }

    pub fn from_dense(weights: &[Rational]) -> Result<Distribution> {
        Distribution::from_pairs(
            weights.len(),
            weights.iter().cloned().enumerate(),
        )
    }

    /// Point distribution on a named state.
    pub fn point_named(space: &StateSpace, name: &str) -> Result<Distribution> {
        Ok(Distribution::point(space.len(), space.lookup(name)?))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(State, Rational)] {
        &self.entries
    }

    pub fn support(&self) -> impl Iterator<Item = State> + '_ {
        self.entries.iter().map(|(s, _)| *s)
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn weight(&self, s: State) -> Rational {
        match self.entries.binary_search_by_key(&s, |(t, _)| *t) {
            Ok(i) => self.entries[i].1.clone(),
            Err(_) => Rational::zero(),
        }
    }

    pub fn mass(&self) -> Rational {
        self.entries.iter().map(|(_, w)| w).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_distribution(&self) -> bool {
        self.mass().is_one()
    }

    /// The single state carrying all mass, if this is a point distribution.
    pub fn as_point(&self) -> Option<State> {
        match self.entries.as_slice() {
            [(s, w)] if w.is_one() => Some(*s),
            _ => None,
        }
    }

    pub fn mass_on(&self, set: impl Fn(State) -> bool) -> Rational {
        self.entries.iter().filter(|(s, _)| set(*s)).map(|(_, w)| w).sum()
    }

    pub fn to_dense(&self) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); self.dim];
        for (s, w) in &self.entries {
            v[*s] = w.clone();
        }
        v
    }

    pub fn scale(&self, k: &Rational) -> Distribution {
        if k.is_zero() {
            return Distribution::zero(self.dim);
        }
        assert!(!k.is_negative(), "negative scale factor");
        Distribution {
            dim: self.dim,
            entries: self.entries.iter().map(|(s, w)| (*s, w * k)).collect(),
        }
    }

    pub fn add(&self, other: &Distribution) -> Distribution {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                out.push(a[i].clone());
                i += 1;
            } else if i == a.len() || b[j].0 < a[i].0 {
                out.push(b[j].clone());
                j += 1;
            } else {
                out.push((a[i].0, &a[i].1 + &b[j].1));
                i += 1;
                j += 1;
            }
        }
        Distribution { dim: self.dim, entries: out }
    }

    /// `self += k * other`.
    pub fn add_scaled(&mut self, k: &Rational, other: &Distribution) {
        if k.is_zero() || other.is_zero() {
            return;
        }
        *self = self.add(&other.scale(k));
    }

    /// `(1 - p) * self + p * other`.
    pub fn mix(&self, other: &Distribution, p: &Rational) -> Distribution {
        let q = Rational::one() - p;
        self.scale(&q).add(&other.scale(p))
    }

    pub fn dot(&self, v: &[Rational]) -> Rational {
        self.entries.iter().map(|(s, w)| w * &v[*s]).sum()
    }

    pub fn display(&self, space: &StateSpace) -> String {
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|(s, w)| format!("{}: {}", space.name(*s), w))
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

impl Ord for Distribution {
    /// Lexicographic order of the dense coordinate vectors.
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        loop {
            match (a.get(i), b.get(j)) {
                (None, None) => return self.dim.cmp(&other.dim),
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((s, x)), Some((t, y))) => {
                    if s < t {
                        return Ordering::Greater;
                    }
                    if t < s {
                        return Ordering::Less;
                    }
                    match x.cmp(y) {
                        Ordering::Equal => {
                            i += 1;
                            j += 1;
                        }
                        o => return o,
                    }
                }
            }
        }
    }
}

impl PartialOrd for Distribution {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.to_dense().iter().map(|w| w.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}
