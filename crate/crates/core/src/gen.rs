//! Random programs and structures for property suites.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::convex::ConvexSet;
use crate::dist::Distribution;
use crate::error::Result;
use crate::ipbes::IpBes;
use crate::program::ConvexProgram;
use crate::rational::Rational;
use crate::space::{State, StateSpace};

/// Distribution with weights in multiples of `1/den`.
pub fn distribution<R: Rng + ?Sized>(rng: &mut R, n: usize, den: u32) -> Distribution {
    let mut cuts: Vec<u32> = (0..n - 1).map(|_| rng.gen_range(0..=den)).collect();
    cuts.push(0);
    cuts.push(den);
    cuts.sort_unstable();
    let pairs = cuts
        .windows(2)
        .enumerate()
        .map(|(s, w)| (s, Rational::new((w[1] - w[0]) as i64, den as i64)));
    Distribution::new(n, pairs).expect("weights sum to one")
}

/// Hull of one to three random distributions.
pub fn convex_set<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ConvexSet {
    let k = rng.gen_range(1..=3);
    let den = *[1u32, 2, 3, 4].choose(rng).unwrap();
    ConvexSet::hull((0..k).map(|_| distribution(rng, n, den)).collect()).expect("non-empty")
}

pub fn program<R: Rng + ?Sized>(rng: &mut R, space: &Arc<StateSpace>) -> ConvexProgram {
    let n = space.len();
    ConvexProgram::from_fn(space.clone(), |_| Ok(Some(convex_set(rng, n)))).expect("total program")
}

/// Convex closure of a random total relation.
pub fn relational<R: Rng + ?Sized>(rng: &mut R, space: &Arc<StateSpace>) -> ConvexProgram {
    let n = space.len();
    let mut rel = Vec::new();
    for s in 0..n {
        let mut succ: Vec<State> = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
        if succ.is_empty() {
            succ.push(rng.gen_range(0..n));
        }
        rel.extend(succ.into_iter().map(|t| (s, t)));
    }
    ConvexProgram::relation_convex_closure(space.clone(), &rel).expect("in range")
}

/// A test that holds on a random proper, non-empty subset when one exists.
pub fn guard<R: Rng + ?Sized>(rng: &mut R, space: &Arc<StateSpace>) -> ConvexProgram {
    let n = space.len();
    let mut mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    if n > 1 && mask.iter().all(|&b| b) {
        mask[rng.gen_range(0..n)] = false;
    }
    if mask.iter().all(|&b| !b) {
        mask[rng.gen_range(0..n)] = true;
    }
    ConvexProgram::test(space.clone(), move |s| mask[s])
}

#[derive(Debug, Clone, Copy)]
pub struct TermConfig {
    /// Upper bound on events.
    pub events: usize,
    pub allow_par: bool,
    pub allow_if: bool,
}

impl Default for TermConfig {
    fn default() -> Self {
        TermConfig { events: 4, allow_par: true, allow_if: true }
    }
}

/// A random feasible structure built from the regular constructors.
pub fn structure<R: Rng + ?Sized>(rng: &mut R, space: &Arc<StateSpace>, cfg: TermConfig) -> Result<IpBes> {
    let budget = rng.gen_range(1..=cfg.events.max(1));
    build(rng, space, budget, cfg)
}

fn build<R: Rng + ?Sized>(rng: &mut R, space: &Arc<StateSpace>, budget: usize, cfg: TermConfig) -> Result<IpBes> {
    if budget <= 1 {
        return Ok(if rng.gen_bool(0.15) {
            IpBes::unit(space.clone())
        } else {
            IpBes::atomic(program(rng, space), format!("a{}", rng.gen_range(0..100)))
        });
    }
    let mut ops = vec![0, 1];
    if cfg.allow_par {
        ops.push(2);
    }
    if cfg.allow_if && budget >= 4 {
        ops.push(3);
    }
    let op = *ops.choose(rng).unwrap();
    if op == 3 {
        let b = guard(rng, space);
        let left = build(rng, space, (budget - 2) / 2, cfg)?;
        let right = build(rng, space, budget - 2 - left.len(), cfg)?;
        let nb = b.negate()?;
        return IpBes::sum(
            &IpBes::seq(&IpBes::atomic(b, "b"), &left)?,
            &IpBes::seq(&IpBes::atomic(nb, "!b"), &right)?,
        );
    }
    let k = rng.gen_range(1..budget);
    let a = build(rng, space, k, cfg)?;
    let b = build(rng, space, budget - k, cfg)?;
    match op {
        0 => IpBes::sum(&a, &b),
        1 => IpBes::seq(&a, &b),
        _ => IpBes::par(&a, &b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_objects_are_well_formed() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sp = StateSpace::numbered(3).unwrap();
        for _ in 0..50 {
            assert!(distribution(&mut rng, 3, 4).is_distribution());
            assert!(program(&mut rng, &sp).is_total());
            assert!(relational(&mut rng, &sp).is_total());
            let g = guard(&mut rng, &sp);
            assert!(g.is_subidentity() && !g.domain().is_empty() && g.domain().len() < 3);
            let es = structure(&mut rng, &sp, TermConfig::default()).unwrap();
            assert!(es.len() <= 4);
            assert!(es.is_feasible().unwrap());
        }
    }
}
