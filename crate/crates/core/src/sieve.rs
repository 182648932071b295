//! The faulty sieve of Eratosthenes.
//!
//! States are bitmasks over the composites in `[4, n]`: bit `k` set means
//! the `k`-th composite is still present. Primes are never touched by any
//! action, so they are left out of the state.

use std::fmt;
use std::sync::Arc;

use crate::convex::{Constraint, ConvexSet};
use crate::dist::Distribution;
use crate::dsl::{Module, Term};
use crate::error::{Error, Result};
use crate::ipbes::IpBes;
use crate::program::ConvexProgram;
use crate::rational::Rational;
use crate::rg::{guarantee_of, BoundPremise, Post, Quintuple, RelyCondition};
use crate::space::{State, StateSpace};

/// Largest state space the generator will build.
pub const MAX_SIEVE_STATES: usize = 1 << 16;

/// Polynomial in `p` with rational coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly(Vec<Rational>);

impl Poly {
    pub fn constant(c: Rational) -> Poly {
        Poly(vec![c]).normalized()
    }

    pub fn monomial(k: usize) -> Poly {
        let mut v = vec![Rational::zero(); k + 1];
        v[k] = Rational::one();
        Poly(v)
    }

    pub fn one_minus_p() -> Poly {
        Poly(vec![Rational::one(), Rational::from_integer(-1)])
    }

    fn normalized(mut self) -> Poly {
        while self.0.last().is_some_and(|c| c.is_zero()) {
            self.0.pop();
        }
        self
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.0
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.0.len().max(o.0.len());
        let z = Rational::zero();
        Poly((0..n).map(|k| self.0.get(k).unwrap_or(&z) + o.0.get(k).unwrap_or(&z)).collect()).normalized()
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.scale(&Rational::from_integer(-1)))
    }

    pub fn scale(&self, k: &Rational) -> Poly {
        Poly(self.0.iter().map(|c| c * k).collect()).normalized()
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.0.is_empty() || o.0.is_empty() {
            return Poly::default();
        }
        let mut v = vec![Rational::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                v[i + j] += &(a * b);
            }
        }
        Poly(v).normalized()
    }

    pub fn pow(&self, k: u32) -> Poly {
        (0..k).fold(Poly::constant(Rational::one()), |acc, _| acc.mul(self))
    }

    pub fn eval(&self, p: &Rational) -> Rational {
        self.0.iter().rev().fold(Rational::zero(), |acc, c| &(&acc * p) + c)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.0.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let coeff = if a.is_one() && k > 0 { String::new() } else { a.to_string() };
            match k {
                0 => write!(f, "{a}")?,
                1 => write!(f, "{coeff}p")?,
                _ => write!(f, "{coeff}p^{k}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

pub fn isqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

pub fn is_prime(n: usize) -> bool {
    n >= 2 && (2..=isqrt(n)).all(|d| !n.is_multiple_of(d))
}

fn check_n(n: usize) -> Result<()> {
    if n < 4 {
        return Err(Error::Domain(format!("n = {n}: the sieve needs n >= 4")));
    }
    Ok(())
}

fn check_p(p: &Rational) -> Result<()> {
    if p.is_negative() || *p > Rational::one() {
        return Err(Error::Domain(format!("p = {p} is not a probability")));
    }
    Ok(())
}

/// Thread indices `2..=isqrt(n)`.
pub fn thread_indices(n: usize) -> Vec<usize> {
    (2..=isqrt(n)).collect()
}

/// Number of atoms of thread `i`.
pub fn thread_len(n: usize, i: usize) -> usize {
    n / i - 1
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Multiples of `i` in `[2i, n]` not divisible by any of `2..i`, by
/// inclusion-exclusion over lcms.
pub fn fresh_exponent(n: usize, i: usize) -> i64 {
    fn cnt(n: usize, i: usize, l: usize) -> i64 {
        if l > i {
            (n / l) as i64
        } else {
            (n / i) as i64 - 1
        }
    }
    fn dfs(n: usize, i: usize, start: usize, l: usize, sign: i64) -> i64 {
        let mut acc = 0;
        for d in start..i {
            let l2 = lcm(l, d);
            if l2 > n {
                continue;
            }
            acc += -sign * cnt(n, i, l2) + dfs(n, i, d + 1, l2, -sign);
        }
        acc
    }
    cnt(n, i, i) + dfs(n, i, 2, i, 1)
}

/// The same count by direct enumeration.
pub fn fresh_exponent_direct(n: usize, i: usize) -> i64 {
    (2 * i..=n).step_by(i).filter(|m| (2..i).all(|d| m % d != 0)).count() as i64
}

/// `f(p, n) = sum_i p^(n/i - 1) - (isqrt(n) - 2)`.
pub fn f_poly(n: usize) -> Result<Poly> {
    check_n(n)?;
    let mut acc = Poly::default();
    for i in thread_indices(n) {
        acc = acc.add(&Poly::monomial(thread_len(n, i)));
    }
    Ok(acc.sub(&Poly::constant(Rational::from_integer(isqrt(n) as i64 - 2))))
}

/// `g(p, n) = p^(sum of fresh exponents)`.
pub fn g_poly(n: usize) -> Result<Poly> {
    check_n(n)?;
    let e: i64 = thread_indices(n).into_iter().map(|i| fresh_exponent(n, i)).sum();
    Ok(Poly::monomial(e as usize))
}

/// How many thread actions target each composite.
pub fn hit_counts(n: usize) -> Vec<(usize, usize)> {
    composites(n)
        .into_iter()
        .map(|c| (c, thread_indices(n).into_iter().filter(|&i| c % i == 0 && c >= 2 * i).count()))
        .collect()
}

/// `prod_c (1 - (1-p)^k_c)`.
pub fn exact_poly(n: usize) -> Result<Poly> {
    check_n(n)?;
    let one = Poly::constant(Rational::one());
    Ok(hit_counts(n)
        .into_iter()
        .fold(one.clone(), |acc, (_, k)| acc.mul(&one.sub(&Poly::one_minus_p().pow(k as u32)))))
}

pub fn sieve_bounds(n: usize, p: &Rational) -> Result<(Rational, Rational)> {
    check_p(p)?;
    Ok((f_poly(n)?.eval(p), g_poly(n)?.eval(p)))
}

pub fn sieve_exact(n: usize, p: &Rational) -> Result<Rational> {
    check_p(p)?;
    Ok(exact_poly(n)?.eval(p))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRow {
    pub p: Rational,
    pub f: Rational,
    pub g: Rational,
    pub exact: Rational,
}

/// Rows at `p = k/steps` for `k = 0..=steps`.
pub fn sweep(n: usize, steps: usize) -> Result<Vec<SweepRow>> {
    if steps == 0 {
        return Err(Error::Domain("a sweep needs at least one step".into()));
    }
    let (f, g, e) = (f_poly(n)?, g_poly(n)?, exact_poly(n)?);
    Ok((0..=steps)
        .map(|k| {
            let p = Rational::new(k as i64, steps as i64);
            SweepRow { f: f.eval(&p), g: g.eval(&p), exact: e.eval(&p), p }
        })
        .collect())
}

/// Bisects `f(., n)` on `[0, 1]` down to an interval of width at most
/// `width`, returning `(lo, hi)` with `f(lo) < 0 <= f(hi)`.
pub fn f_root_bracket(n: usize, width: &Rational) -> Result<(Rational, Rational)> {
    let f = f_poly(n)?;
    let (mut lo, mut hi) = (Rational::zero(), Rational::one());
    if !f.eval(&lo).is_negative() {
        return Ok((lo.clone(), lo));
    }
    while &(&hi - &lo) > width {
        let mid = &(&lo + &hi) * &Rational::new(1, 2);
        if f.eval(&mid).is_negative() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

pub fn composites(n: usize) -> Vec<usize> {
    (4..=n).filter(|&c| !is_prime(c)).collect()
}

#[derive(Debug, Clone)]
pub struct SieveThread {
    pub i: usize,
    /// `(j, bit of i*j)` in ascending `j`.
    pub atoms: Vec<(usize, usize)>,
    pub component: IpBes,
    /// `Q_{i,j}` in the order of the atoms.
    pub posts: Vec<ConvexProgram>,
}

impl SieveThread {
    /// States where every target of the thread is gone.
    pub fn target(&self, inst: &SieveInstance) -> Vec<State> {
        let mask = self.atoms.iter().fold(0usize, |m, (_, b)| m | (1 << b));
        inst.space.states().filter(|s| s & mask == 0).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SieveInstance {
    pub n: usize,
    pub p: Rational,
    pub composites: Vec<usize>,
    pub space: Arc<StateSpace>,
    pub initial: State,
    pub rely: ConvexProgram,
    pub threads: Vec<SieveThread>,
}

fn submasks(s: usize) -> Vec<State> {
    let mut out = Vec::with_capacity(1 << s.count_ones());
    let mut t = s;
    loop {
        out.push(t);
        if t == 0 {
            break;
        }
        t = (t - 1) & s;
    }
    out.reverse();
    out
}

/// `u_{i,j}(s) = (1-p) delta_s + p delta_{s - ij}`.
pub fn removal_action(space: &Arc<StateSpace>, bit: usize, p: &Rational) -> Result<ConvexProgram> {
    let n = space.len();
    let q = &Rational::one() - p;
    ConvexProgram::deterministic(space.clone(), |s| {
        if s & (1 << bit) == 0 {
            Distribution::point(n, s)
        } else {
            Distribution::from_pairs(n, [(s, q.clone()), (s & !(1 << bit), p.clone())])
                .expect("weights in range")
        }
    })
}

/// `r(s) = conv { delta_t | t subset of s }`.
pub fn subset_rely(space: &Arc<StateSpace>) -> Result<ConvexProgram> {
    let n = space.len();
    ConvexProgram::from_fn(space.clone(), |s| ConvexSet::simplex(n, submasks(s)).map(Some))
}

/// `Q_{i,j}(s) = { mu | mu(O_{i,j}) >= p, mu supported below s }`.
pub fn removal_spec(space: &Arc<StateSpace>, bit: usize, p: &Rational) -> Result<ConvexProgram> {
    let n = space.len();
    let gone: Vec<State> = space.states().filter(|s| s & (1 << bit) == 0).collect();
    ConvexProgram::from_fn(space.clone(), |s| {
        ConvexSet::halfspaces(n, submasks(s), vec![Constraint::mass_at_least(gone.iter().copied(), p.clone())])
            .map(Some)
    })
}

pub fn state_name(composites: &[usize], s: State) -> String {
    let present: Vec<String> = composites
        .iter()
        .enumerate()
        .filter(|(k, _)| s & (1 << k) != 0)
        .map(|(_, c)| c.to_string())
        .collect();
    format!("{{{}}}", present.join(","))
}

/// Threads `thd_i`, the subset rely and the per-atom specifications.
pub fn sieve_generate(n: usize, p: &Rational) -> Result<SieveInstance> {
    check_n(n)?;
    check_p(p)?;
    let composites = composites(n);
    let k = composites.len();
    if k >= usize::BITS as usize || 1usize << k > MAX_SIEVE_STATES {
        return Err(Error::Explosion { what: format!("sieve state space for n = {n}"), cap: MAX_SIEVE_STATES });
    }
    let space = StateSpace::new((0..1usize << k).map(|s| state_name(&composites, s)))?;
    let bit_of = |c: usize| composites.iter().position(|&x| x == c).expect("target is composite");
    let mut threads = Vec::new();
    for i in thread_indices(n) {
        let atoms: Vec<(usize, usize)> = (2..=n / i).map(|j| (j, bit_of(i * j))).collect();
        let mut component: Option<IpBes> = None;
        let mut posts = Vec::new();
        for &(j, bit) in &atoms {
            let a = IpBes::atomic(removal_action(&space, bit, p)?, format!("u{i}_{j}"));
            component = Some(match component {
                None => a,
                Some(c) => IpBes::seq(&c, &a)?,
            });
            posts.push(removal_spec(&space, bit, p)?);
        }
        threads.push(SieveThread { i, atoms, component: component.expect("at least one atom"), posts });
    }
    Ok(SieveInstance {
        n,
        p: p.clone(),
        composites,
        initial: (1 << k) - 1,
        rely: subset_rely(&space)?,
        space,
        threads,
    })
}

impl SieveInstance {
    pub fn thread(&self, i: usize) -> Result<&SieveThread> {
        self.threads
            .iter()
            .find(|t| t.i == i)
            .ok_or_else(|| Error::Domain(format!("no thread {i} for n = {}", self.n)))
    }

    /// `{delta_s0, r} thd_i {r, Q_{i,2} . ... . Q_{i,n/i}}`.
    pub fn quintuple(&self, i: usize) -> Result<Quintuple> {
        let t = self.thread(i)?;
        Ok(Quintuple {
            pre: self.initial_test(),
            rely: RelyCondition::new(self.rely.clone())?,
            component: t.component.clone(),
            guar: RelyCondition::new(self.rely.clone())?,
            post: Post::Chain(t.posts.clone()),
        })
    }

    /// `{delta_s0, r} thd_i {guarantee_of(thd_i), mu(O_i) >= p^(n/i - 1)}`.
    pub fn bound_premise(&self, i: usize) -> Result<BoundPremise> {
        let t = self.thread(i)?;
        Ok(BoundPremise {
            initial: self.initial,
            rely: RelyCondition::new(self.rely.clone())?,
            component: t.component.clone(),
            guar: guarantee_of(&t.component)?,
            target: t.target(self),
            p: self.p.pow(t.atoms.len() as u32),
        })
    }

    pub fn initial_test(&self) -> ConvexProgram {
        let s0 = self.initial;
        ConvexProgram::test(self.space.clone(), move |s| s == s0)
    }

    /// Every thread in parallel.
    pub fn system(&self) -> Result<IpBes> {
        let mut it = self.threads.iter();
        let first = it.next().expect("n >= 4 gives a thread").component.clone();
        it.try_fold(first, |acc, t| IpBes::par(&acc, &t.component))
    }

    /// `thd_i` as a term over atoms named `u{i}_{j}`.
    pub fn thread_term(&self, i: usize) -> Result<Term> {
        let t = self.thread(i)?;
        Ok(Term::seq_all(t.atoms.iter().map(|(j, _)| Term::atom(&format!("u{i}_{j}"))).collect())
            .expect("at least one atom"))
    }

    /// Declarations for every atom, rely `r`, specs `q{i}_{j}`, and procs
    /// `thd{i}` and `sys`.
    pub fn module(&self) -> Result<Module> {
        let mut m = Module::over(self.space.clone());
        m.define_atom("r", self.rely.clone())?;
        for t in &self.threads {
            for (k, (j, _)) in t.atoms.iter().enumerate() {
                m.define_atom(&format!("u{}_{j}", t.i), t.component.label(k).clone())?;
                m.define_spec(&format!("q{}_{j}", t.i), t.posts[k].clone())?;
            }
            m.define_proc(&format!("thd{}", t.i), self.thread_term(t.i)?)?;
        }
        let all = self.threads.iter().map(|t| Term::atom(&format!("thd{}", t.i))).collect();
        m.define_proc("sys", Term::par_all(all).expect("n >= 4 gives a thread"))?;
        Ok(m)
    }

    /// No action ever targets a prime.
    pub fn never_removes_primes(&self) -> bool {
        self.threads.iter().all(|t| t.atoms.iter().all(|&(j, _)| !is_prime(t.i * j)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn p(k: usize) -> Poly {
        Poly::monomial(k)
    }

    #[test]
    fn closed_forms_at_fifteen() {
        assert_eq!(f_poly(15).unwrap(), p(6).add(&p(4)).sub(&Poly::constant(Rational::one())));
        assert_eq!(g_poly(15).unwrap(), p(8));
        let two_minus_p = Poly(vec![rat(2, 1), rat(-1, 1)]);
        assert_eq!(exact_poly(15).unwrap(), p(8).mul(&two_minus_p.pow(2)));
        let q = Poly::one_minus_p();
        let written = p(10).add(&p(9).mul(&q).scale(&rat(4, 1))).add(&p(8).mul(&q.pow(2)).scale(&rat(4, 1)));
        assert_eq!(exact_poly(15).unwrap(), written);
        assert_eq!(f_poly(15).unwrap().to_string(), "p^6 + p^4 - 1");
        assert_eq!(sieve_exact(15, &rat(1, 2)).unwrap(), rat(9, 1024));
    }

    #[test]
    fn worked_value_at_nine_tenths() {
        let (f, g) = sieve_bounds(15, &rat(9, 10)).unwrap();
        assert_eq!(f, rat(187541, 1_000_000));
        assert_eq!(g, rat(43046721, 100_000_000));
        assert_eq!(sieve_exact(15, &rat(9, 10)).unwrap(), rat(43046721, 100_000_000) * rat(121, 100));
    }

    #[test]
    fn exponents_agree_with_direct_count() {
        for n in 4..200 {
            for i in thread_indices(n) {
                assert_eq!(fresh_exponent(n, i), fresh_exponent_direct(n, i), "n={n} i={i}");
            }
        }
        assert_eq!(fresh_exponent(15, 3), 2);
    }

    #[test]
    fn root_bracket() {
        let (lo, hi) = f_root_bracket(15, &rat(1, 100_000)).unwrap();
        assert!(lo > rat(868, 1000) && hi < rat(869, 1000));
        assert!(f_poly(15).unwrap().eval(&rat(868, 1000)).is_negative());
        assert!(f_poly(15).unwrap().eval(&rat(869, 1000)).is_positive());
    }

    #[test]
    fn generator_shape() {
        let inst = sieve_generate(15, &rat(1, 2)).unwrap();
        assert_eq!(inst.composites, vec![4, 6, 8, 9, 10, 12, 14, 15]);
        assert_eq!(inst.space.len(), 256);
        assert_eq!(inst.threads.len(), 2);
        assert_eq!(inst.thread(2).unwrap().atoms.len(), 6);
        assert_eq!(inst.thread(3).unwrap().atoms.len(), 4);
        assert_eq!(inst.space.name(inst.initial), "{4,6,8,9,10,12,14,15}");
        assert!(inst.never_removes_primes());
        let u23 = inst.thread(2).unwrap().component.label(1);
        let six = inst.initial & !(1 << 1);
        let want = Distribution::from_pairs(256, [(inst.initial, rat(1, 2)), (six, rat(1, 2))]).unwrap();
        assert!(u23.at(inst.initial).unwrap().equivalent(&ConvexSet::singleton(want)).unwrap());
        let m = inst.module().unwrap();
        assert_eq!(m.proc_term("thd3").unwrap().to_string(), "u3_2 ; u3_3 ; u3_4 ; u3_5");
        assert!(m.structure("thd2").unwrap().isomorphic(&inst.thread(2).unwrap().component));
        assert!(m.structure("sys").unwrap().isomorphic(&inst.system().unwrap()));
        assert!(matches!(sieve_generate(3, &rat(1, 2)), Err(Error::Domain(_))));
        assert!(matches!(sieve_generate(40, &rat(1, 2)), Err(Error::Explosion { .. })));
    }

    #[test]
    fn poly_display_and_eval() {
        assert_eq!(Poly::default().to_string(), "0");
        assert_eq!(Poly(vec![rat(-1, 1), rat(3, 2), rat(0, 1), rat(1, 1)]).to_string(), "p^3 + 3/2p - 1");
        assert_eq!(Poly::one_minus_p().pow(3).eval(&rat(1, 2)), rat(1, 8));
    }
}
