//! Bundle event structures labelled by convex programs.
//!
//! Events are numbered densely from zero. Binary constructors keep the
//! left operand's numbering and shift the right operand's events past it,
//! so identifiers never collide.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::program::ConvexProgram;
use crate::space::{check_same, State, StateSpace};

pub type EventId = usize;

/// Hard limit on events per structure (bitset width).
pub const MAX_EVENTS: usize = 128;

/// Default cap on enumerated traces or configurations.
pub const DEFAULT_TRACE_CAP: usize = 1_000_000;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct EventSet(u128);

/// Labels, conflict rows and bundles of two structures placed side by side.
type Parts = (Vec<Label>, Vec<EventSet>, Vec<(EventSet, EventId)>);

impl FromIterator<EventId> for EventSet {
    fn from_iter<I: IntoIterator<Item = EventId>>(it: I) -> EventSet {
        it.into_iter().fold(EventSet::EMPTY, |s, e| s.with(e))
    }
}

impl EventSet {
    pub const EMPTY: EventSet = EventSet(0);

    pub fn single(e: EventId) -> EventSet {
        EventSet(1u128 << e)
    }

    pub fn contains(self, e: EventId) -> bool {
        self.0 >> e & 1 == 1
    }

    pub fn with(self, e: EventId) -> EventSet {
        EventSet(self.0 | 1u128 << e)
    }

    pub fn union(self, o: EventSet) -> EventSet {
        EventSet(self.0 | o.0)
    }

    pub fn intersects(self, o: EventSet) -> bool {
        self.0 & o.0 != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn shift(self, k: usize) -> EventSet {
        EventSet(self.0 << k)
    }

    pub fn iter(self) -> impl Iterator<Item = EventId> {
        let bits = self.0;
        (0..MAX_EVENTS).filter(move |&e| bits >> e & 1 == 1)
    }
}

impl fmt::Debug for EventSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[derive(Clone)]
pub struct Label {
    pub name: String,
    pub program: Arc<ConvexProgram>,
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// How a structure was assembled from the regular constructors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Shape {
    Zero,
    Unit(EventId),
    Atomic(EventId),
    Sum(Box<Shape>, Box<Shape>),
    Seq(Box<Shape>, Box<Shape>),
    Par(Box<Shape>, Box<Shape>),
}

impl Shape {
    fn shifted(&self, k: usize) -> Shape {
        match self {
            Shape::Zero => Shape::Zero,
            Shape::Unit(e) => Shape::Unit(e + k),
            Shape::Atomic(e) => Shape::Atomic(e + k),
            Shape::Sum(a, b) => Shape::Sum(Box::new(a.shifted(k)), Box::new(b.shifted(k))),
            Shape::Seq(a, b) => Shape::Seq(Box::new(a.shifted(k)), Box::new(b.shifted(k))),
            Shape::Par(a, b) => Shape::Par(Box::new(a.shifted(k)), Box::new(b.shifted(k))),
        }
    }
}

/// Unchecked structure description, as read from input.
#[derive(Debug, Clone)]
pub struct RawIpBes {
    pub space: Arc<StateSpace>,
    pub labels: Vec<Label>,
    pub conflict: Vec<(EventId, EventId)>,
    pub bundles: Vec<(Vec<EventId>, EventId)>,
    pub finals: Vec<Vec<EventId>>,
}

#[derive(Clone)]
pub struct IpBes {
    space: Arc<StateSpace>,
    labels: Vec<Label>,
    conflict: Vec<EventSet>,
    bundles: Vec<(EventSet, EventId)>,
    incoming: Vec<Vec<EventSet>>,
    finals: Vec<EventSet>,
    shape: Option<Shape>,
}

fn pairwise_conflicting(set: EventSet, conflict: &[EventSet]) -> bool {
    set.iter().all(|a| set.iter().all(|b| a == b || conflict[a].contains(b)))
}

impl IpBes {
    /// Checks well-formedness of a raw description.
    pub fn validate(raw: RawIpBes) -> Result<IpBes> {
        let n = raw.labels.len();
        if n > MAX_EVENTS {
            return Err(Error::Explosion { what: "events in one structure".into(), cap: MAX_EVENTS });
        }
        for l in &raw.labels {
            check_same(&raw.space, l.program.space())?;
        }
        let in_range = |e: EventId| {
            if e < n {
                Ok(())
            } else {
                Err(Error::IllFormed(format!("unknown event {e}")))
            }
        };
        let mut conflict = vec![EventSet::EMPTY; n];
        for &(a, b) in &raw.conflict {
            in_range(a)?;
            in_range(b)?;
            if a == b {
                return Err(Error::IllFormed(format!("event {a} conflicts with itself")));
            }
            conflict[a] = conflict[a].with(b);
        }
        for a in 0..n {
            for b in conflict[a].iter() {
                if !conflict[b].contains(a) {
                    return Err(Error::IllFormed(format!("conflict ({a}, {b}) is not symmetric")));
                }
            }
        }
        let mut bundles = Vec::new();
        for (x, e) in &raw.bundles {
            in_range(*e)?;
            for &y in x {
                in_range(y)?;
            }
            let xs = EventSet::from_iter(x.iter().copied());
            if xs.is_empty() {
                return Err(Error::IllFormed(format!("empty bundle into event {e}")));
            }
            if xs.contains(*e) {
                return Err(Error::IllFormed(format!("bundle into {e} contains {e}")));
            }
            if !pairwise_conflicting(xs, &conflict) {
                return Err(Error::IllFormed(format!("bundle {x:?} -> {e} is not pairwise conflicting")));
            }
            bundles.push((xs, *e));
        }
        let mut finals = Vec::new();
        for x in &raw.finals {
            for &y in x {
                in_range(y)?;
            }
            let xs = EventSet::from_iter(x.iter().copied());
            if !pairwise_conflicting(xs, &conflict) {
                return Err(Error::IllFormed(format!("final set {x:?} is not pairwise conflicting")));
            }
            finals.push(xs);
        }
        Ok(IpBes::assemble(raw.space, raw.labels, conflict, bundles, finals, None))
    }

    fn assemble(
        space: Arc<StateSpace>,
        labels: Vec<Label>,
        conflict: Vec<EventSet>,
        bundles: Vec<(EventSet, EventId)>,
        finals: Vec<EventSet>,
        shape: Option<Shape>,
    ) -> IpBes {
        let mut incoming = vec![Vec::new(); labels.len()];
        for (x, e) in &bundles {
            incoming[*e].push(*x);
        }
        IpBes { space, labels, conflict, bundles, incoming, finals, shape }
    }

    /// `0`: no events.
    pub fn zero(space: Arc<StateSpace>) -> IpBes {
        IpBes::assemble(space, Vec::new(), Vec::new(), Vec::new(), Vec::new(), Some(Shape::Zero))
    }

    /// `1`: a single `delta`-labelled event.
    pub fn unit(space: Arc<StateSpace>) -> IpBes {
        let skip = ConvexProgram::skip(space.clone());
        let labels = vec![Label { name: "skip".into(), program: Arc::new(skip) }];
        IpBes::assemble(
            space,
            labels,
            vec![EventSet::EMPTY],
            Vec::new(),
            vec![EventSet::single(0)],
            Some(Shape::Unit(0)),
        )
    }

    /// A single event labelled by `program`.
    pub fn atomic(program: ConvexProgram, name: impl Into<String>) -> IpBes {
        IpBes::atomic_shared(Arc::new(program), name)
    }

    pub fn atomic_shared(program: Arc<ConvexProgram>, name: impl Into<String>) -> IpBes {
        let space = program.space().clone();
        let labels = vec![Label { name: name.into(), program }];
        IpBes::assemble(
            space,
            labels,
            vec![EventSet::EMPTY],
            Vec::new(),
            vec![EventSet::single(0)],
            Some(Shape::Atomic(0)),
        )
    }

    fn juxtapose(a: &IpBes, b: &IpBes) -> Result<Parts> {
        check_same(&a.space, &b.space)?;
        let k = a.len();
        if k + b.len() > MAX_EVENTS {
            return Err(Error::Explosion { what: "events in one structure".into(), cap: MAX_EVENTS });
        }
        let mut labels = a.labels.clone();
        labels.extend(b.labels.iter().cloned());
        let mut conflict = a.conflict.clone();
        conflict.extend(b.conflict.iter().map(|c| c.shift(k)));
        let mut bundles = a.bundles.clone();
        bundles.extend(b.bundles.iter().map(|(x, e)| (x.shift(k), e + k)));
        Ok((labels, conflict, bundles))
    }

    fn shape_pair(a: &IpBes, b: &IpBes, f: fn(Box<Shape>, Box<Shape>) -> Shape) -> Option<Shape> {
        match (&a.shape, &b.shape) {
            (Some(x), Some(y)) => Some(f(Box::new(x.clone()), Box::new(y.shifted(a.len())))),
            _ => None,
        }
    }

    /// `a + b`.
    pub fn sum(a: &IpBes, b: &IpBes) -> Result<IpBes> {
        if a.is_zero() {
            check_same(&a.space, &b.space)?;
            return Ok(b.clone());
        }
        if b.is_zero() {
            check_same(&a.space, &b.space)?;
            return Ok(a.clone());
        }
        let k = a.len();
        let (labels, mut conflict, bundles) = IpBes::juxtapose(a, b)?;
        let mut add = |x: EventSet, y: EventSet| {
            for e in x.iter() {
                for f in y.iter() {
                    conflict[e] = conflict[e].with(f + k);
                    conflict[f + k] = conflict[f + k].with(e);
                }
            }
        };
        for x in &a.finals {
            for y in &b.finals {
                add(*x, *y);
            }
        }
        add(a.initial(), b.initial());
        let mut finals = Vec::new();
        for x in &a.finals {
            for y in &b.finals {
                finals.push(x.union(y.shift(k)));
            }
        }
        let shape = IpBes::shape_pair(a, b, Shape::Sum);
        Ok(IpBes::assemble(a.space.clone(), labels, conflict, bundles, finals, shape))
    }

    /// `a . b`.
    pub fn seq(a: &IpBes, b: &IpBes) -> Result<IpBes> {
        if a.is_zero() {
            check_same(&a.space, &b.space)?;
            return Ok(b.clone());
        }
        if b.is_zero() {
            check_same(&a.space, &b.space)?;
            return Ok(a.clone());
        }
        let k = a.len();
        let (labels, conflict, mut bundles) = IpBes::juxtapose(a, b)?;
        for x in &a.finals {
            for e in b.initial().iter() {
                bundles.push((*x, e + k));
            }
        }
        let finals = b.finals.iter().map(|x| x.shift(k)).collect();
        let shape = IpBes::shape_pair(a, b, Shape::Seq);
        Ok(IpBes::assemble(a.space.clone(), labels, conflict, bundles, finals, shape))
    }

    /// `a || b`.
    pub fn par(a: &IpBes, b: &IpBes) -> Result<IpBes> {
        if a.is_zero() {
            check_same(&a.space, &b.space)?;
            return Ok(b.clone());
        }
        if b.is_zero() {
            check_same(&a.space, &b.space)?;
            return Ok(a.clone());
        }
        let k = a.len();
        let (labels, conflict, bundles) = IpBes::juxtapose(a, b)?;
        let mut finals = a.finals.clone();
        finals.extend(b.finals.iter().map(|x| x.shift(k)));
        let shape = IpBes::shape_pair(a, b, Shape::Par);
        Ok(IpBes::assemble(a.space.clone(), labels, conflict, bundles, finals, shape))
    }

    /// `b + a . (b + a . ( ... b))` with `depth` copies of `a`.
    pub fn star_unfold(a: &IpBes, b: &IpBes, depth: usize) -> Result<IpBes> {
        let mut acc = b.clone();
        for _ in 0..depth {
            acc = IpBes::sum(b, &IpBes::seq(a, &acc)?)?;
        }
        Ok(acc)
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn events(&self) -> std::ops::Range<EventId> {
        0..self.labels.len()
    }

    pub fn label(&self, e: EventId) -> &ConvexProgram {
        &self.labels[e].program
    }

    pub fn label_shared(&self, e: EventId) -> &Arc<ConvexProgram> {
        &self.labels[e].program
    }

    pub fn name(&self, e: EventId) -> &str {
        &self.labels[e].name
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn conflicts(&self, e: EventId) -> EventSet {
        self.conflict[e]
    }

    pub fn in_conflict(&self, a: EventId, b: EventId) -> bool {
        self.conflict[a].contains(b)
    }

    pub fn bundles(&self) -> &[(EventSet, EventId)] {
        &self.bundles
    }

    pub fn finals(&self) -> &[EventSet] {
        &self.finals
    }

    pub fn shape(&self) -> Option<&Shape> {
        self.shape.as_ref()
    }

    /// Events without incoming bundles.
    pub fn initial(&self) -> EventSet {
        EventSet::from_iter(self.events().filter(|&e| self.incoming[e].is_empty()))
    }

    /// Events that may extend a trace whose events are `done`.
    pub fn enabled(&self, done: EventSet) -> Vec<EventId> {
        self.events()
            .filter(|&e| {
                !done.contains(e)
                    && !self.conflict[e].intersects(done)
                    && self.incoming[e].iter().all(|x| x.intersects(done))
            })
            .collect()
    }

    pub fn is_maximal(&self, done: EventSet) -> bool {
        self.enabled(done).is_empty()
    }

    /// Whether `trace` is a trace of this structure.
    pub fn is_trace(&self, trace: &[EventId]) -> bool {
        let mut done = EventSet::EMPTY;
        for &e in trace {
            if e >= self.len() || !self.enabled(done).contains(&e) {
                return false;
            }
            done = done.with(e);
        }
        true
    }

    pub fn is_maximal_trace(&self, trace: &[EventId]) -> bool {
        self.is_trace(trace) && self.is_maximal(EventSet::from_iter(trace.iter().copied()))
    }

    /// The prefix tree of all traces.
    pub fn trace_tree(&self, cap: usize) -> Result<TraceTree> {
        let mut nodes = vec![TraceNode {
            parent: None,
            event: None,
            done: EventSet::EMPTY,
            children: Vec::new(),
        }];
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let done = nodes[i].done;
            for e in self.enabled(done) {
                if nodes.len() >= cap {
                    return Err(Error::Explosion { what: "traces".into(), cap });
                }
                let j = nodes.len();
                nodes.push(TraceNode {
                    parent: Some(i),
                    event: Some(e),
                    done: done.with(e),
                    children: Vec::new(),
                });
                nodes[i].children.push((e, j));
                queue.push_back(j);
            }
        }
        Ok(TraceTree { nodes })
    }

    pub fn traces(&self, cap: usize) -> Result<Vec<Vec<EventId>>> {
        let t = self.trace_tree(cap)?;
        Ok((0..t.len()).map(|i| t.trace(i)).collect())
    }

    pub fn maximal_traces(&self, cap: usize) -> Result<Vec<Vec<EventId>>> {
        let t = self.trace_tree(cap)?;
        Ok((0..t.len()).filter(|&i| t.is_leaf(i)).map(|i| t.trace(i)).collect())
    }

    /// Reachable configurations (event sets of traces), each with one
    /// witnessing trace.
    pub fn configurations(&self, cap: usize) -> Result<Vec<(EventSet, Vec<EventId>)>> {
        let mut seen: HashMap<EventSet, Vec<EventId>> = HashMap::new();
        let mut order = vec![EventSet::EMPTY];
        seen.insert(EventSet::EMPTY, Vec::new());
        let mut i = 0;
        while i < order.len() {
            let done = order[i];
            let trace = seen[&done].clone();
            for e in self.enabled(done) {
                let next = done.with(e);
                if !seen.contains_key(&next) {
                    if seen.len() >= cap {
                        return Err(Error::Explosion { what: "configurations".into(), cap });
                    }
                    let mut t = trace.clone();
                    t.push(e);
                    seen.insert(next, t);
                    order.push(next);
                }
            }
            i += 1;
        }
        Ok(order.into_iter().map(|c| { let t = seen[&c].clone(); (c, t) }).collect())
    }

    /// First non-maximal trace and state where no enabled event is defined.
    pub fn feasibility_witness(&self, cap: usize) -> Result<Option<(Vec<EventId>, State)>> {
        for (done, trace) in self.configurations(cap)? {
            let en = self.enabled(done);
            if en.is_empty() {
                continue;
            }
            for s in self.space.states() {
                if en.iter().all(|&e| self.label(e).at(s).is_none()) {
                    return Ok(Some((trace, s)));
                }
            }
        }
        Ok(None)
    }

    pub fn is_feasible(&self) -> Result<bool> {
        Ok(self.feasibility_witness(DEFAULT_TRACE_CAP)?.is_none())
    }

    pub fn require_feasible(&self) -> Result<()> {
        if let Some((trace, s)) = self.feasibility_witness(DEFAULT_TRACE_CAP)? {
            return Err(Error::Infeasible(format!(
                "after [{}] no enabled event is defined at state {}",
                self.format_trace(&trace),
                self.space.name(s)
            )));
        }
        Ok(())
    }

    pub fn format_trace(&self, trace: &[EventId]) -> String {
        trace.iter().map(|&e| format!("{}#{}", self.name(e), e)).collect::<Vec<_>>().join(" ")
    }

    pub fn describe(&self) -> String {
        let mut out = String::new();
        for e in self.events() {
            out.push_str(&format!("event {}#{}\n", self.name(e), e));
        }
        for a in self.events() {
            for b in self.conflict[a].iter().filter(|&b| b > a) {
                out.push_str(&format!("conflict {a} {b}\n"));
            }
        }
        for (x, e) in &self.bundles {
            out.push_str(&format!("bundle {x:?} -> {e}\n"));
        }
        for x in &self.finals {
            out.push_str(&format!("final {x:?}\n"));
        }
        out
    }

    /// Structural equality up to renaming of events.
    pub fn isomorphic(&self, other: &IpBes) -> bool {
        if self.len() != other.len()
            || self.bundles.len() != other.bundles.len()
            || self.finals.len() != other.finals.len()
            || !Arc::ptr_eq(&self.space, &other.space) && self.space != other.space
        {
            return false;
        }
        let sig = |g: &IpBes, e: EventId| (g.conflict[e].len(), g.incoming[e].len(), g.initial().contains(e));
        let n = self.len();
        let mut map = vec![usize::MAX; n];
        let mut used = vec![false; n];
        fn extend(
            i: usize,
            a: &IpBes,
            b: &IpBes,
            map: &mut [usize],
            used: &mut [bool],
            sig: &dyn Fn(&IpBes, EventId) -> (usize, usize, bool),
        ) -> bool {
            if i == a.len() {
                let img = |x: EventSet| EventSet::from_iter(x.iter().map(|e| map[e]));
                let mut ab: Vec<(EventSet, EventId)> = a.bundles.iter().map(|(x, e)| (img(*x), map[*e])).collect();
                let mut bb = b.bundles.clone();
                ab.sort();
                bb.sort();
                let mut af: Vec<EventSet> = a.finals.iter().map(|x| img(*x)).collect();
                let mut bf = b.finals.clone();
                af.sort();
                bf.sort();
                return ab == bb && af == bf;
            }
            for j in 0..b.len() {
                if used[j] || sig(a, i) != sig(b, j) || a.labels[i].program != b.labels[j].program {
                    continue;
                }
                let consistent = (0..i).all(|k| a.conflict[i].contains(k) == b.conflict[j].contains(map[k]));
                if !consistent {
                    continue;
                }
                map[i] = j;
                used[j] = true;
                if extend(i + 1, a, b, map, used, sig) {
                    return true;
                }
                used[j] = false;
                map[i] = usize::MAX;
            }
            false
        }
        extend(0, self, other, &mut map, &mut used, &sig)
    }
}

impl fmt::Debug for IpBes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

#[derive(Debug, Clone)]
pub struct TraceNode {
    pub parent: Option<usize>,
    pub event: Option<EventId>,
    pub done: EventSet,
    pub children: Vec<(EventId, usize)>,
}

/// Prefix tree of traces; node 0 is the empty trace.
#[derive(Debug, Clone)]
pub struct TraceTree {
    nodes: Vec<TraceNode>,
}

impl TraceTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> &TraceNode {
        &self.nodes[i]
    }

    pub fn is_leaf(&self, i: usize) -> bool {
        self.nodes[i].children.is_empty()
    }

    pub fn child(&self, i: usize, e: EventId) -> Option<usize> {
        self.nodes[i].children.iter().find(|(f, _)| *f == e).map(|(_, j)| *j)
    }

    pub fn trace(&self, mut i: usize) -> Vec<EventId> {
        let mut out = Vec::new();
        while let Some(e) = self.nodes[i].event {
            out.push(e);
            i = self.nodes[i].parent.unwrap();
        }
        out.reverse();
        out
    }

    pub fn find(&self, trace: &[EventId]) -> Option<usize> {
        let mut i = 0;
        for &e in trace {
            i = self.child(i, e)?;
        }
        Some(i)
    }

    pub fn depth(&self, i: usize) -> usize {
        self.nodes[i].done.len()
    }
}
