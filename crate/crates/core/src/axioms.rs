//! The probabilistic Kleene algebra laws, checked exactly on programs.

use crate::error::{Error, Result};
use crate::program::{equivalent, kleene_star, ndet_choice, refines, seq_compose, ConvexProgram, DEFAULT_STAR_BOUND};
use crate::sim::LawOutcome;

fn law(name: &str, holds: bool) -> LawOutcome {
    LawOutcome { law: name.into(), holds, detail: String::new() }
}

/// Idempotent-semiring laws except left distributivity, plus
/// sub-distributivity.
pub fn semiring_laws(x: &ConvexProgram, y: &ConvexProgram, z: &ConvexProgram) -> Result<Vec<LawOutcome>> {
    let sp = x.space().clone();
    let zero = ConvexProgram::bottom(sp.clone());
    let one = ConvexProgram::skip(sp);
    let plus = ndet_choice;
    let dot = seq_compose;
    Ok(vec![
        law("x+x=x", equivalent(&plus(x, x)?, x)?),
        law("x+y=y+x", equivalent(&plus(x, y)?, &plus(y, x)?)?),
        law("x+(y+z)=(x+y)+z", equivalent(&plus(x, &plus(y, z)?)?, &plus(&plus(x, y)?, z)?)?),
        law("x+0=x", equivalent(&plus(x, &zero)?, x)?),
        law("x.1=x", equivalent(&dot(x, &one)?, x)?),
        law("1.x=x", equivalent(&dot(&one, x)?, x)?),
        law("x.(y.z)=(x.y).z", equivalent(&dot(x, &dot(y, z)?)?, &dot(&dot(x, y)?, z)?)?),
        law("0.x=0", equivalent(&dot(&zero, x)?, &zero)?),
        law("x.0=0", equivalent(&dot(x, &zero)?, &zero)?),
        law("(x+y).z=x.z+y.z", equivalent(&dot(&plus(x, y)?, z)?, &plus(&dot(x, z)?, &dot(y, z)?)?)?),
        law("x.y+x.z<=x.(y+z)", sub_distributive(x, y, z)?),
    ])
}

pub fn sub_distributive(x: &ConvexProgram, y: &ConvexProgram, z: &ConvexProgram) -> Result<bool> {
    refines(&ndet_choice(&seq_compose(x, y)?, &seq_compose(x, z)?)?, &seq_compose(x, &ndet_choice(y, z)?)?)
}

/// `x.y + x.z` is strictly below `x.(y+z)`.
pub fn strictly_sub_distributive(x: &ConvexProgram, y: &ConvexProgram, z: &ConvexProgram) -> Result<bool> {
    let lhs = ndet_choice(&seq_compose(x, y)?, &seq_compose(x, z)?)?;
    let rhs = seq_compose(x, &ndet_choice(y, z)?)?;
    Ok(refines(&lhs, &rhs)? && !refines(&rhs, &lhs)?)
}

/// `x* = 1 + x.x*`, or `None` when the star has no finite fixed point
/// within the iteration bound.
pub fn star_unfold(x: &ConvexProgram) -> Result<Option<LawOutcome>> {
    star_unfold_bounded(x, DEFAULT_STAR_BOUND)
}

pub fn star_unfold_bounded(x: &ConvexProgram, bound: usize) -> Result<Option<LawOutcome>> {
    let one = ConvexProgram::skip(x.space().clone());
    let star = match kleene_star(x, &one, bound) {
        Ok(s) => s,
        Err(Error::NonTermination { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let unfolded = ndet_choice(&one, &seq_compose(x, &star)?)?;
    Ok(Some(law("x*=1+x.x*", equivalent(&star, &unfolded)?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Distribution;
    use crate::rational::rat;
    use crate::space::StateSpace;

    #[test]
    fn coin_skip_flip_is_strict() {
        let sp = StateSpace::numbered(2).unwrap();
        let coin = ConvexProgram::deterministic(sp.clone(), |_| {
            Distribution::from_dense(&[rat(1, 2), rat(1, 2)]).unwrap()
        })
        .unwrap();
        let flip = ConvexProgram::deterministic(sp.clone(), |s| Distribution::point(2, 1 - s)).unwrap();
        let skip = ConvexProgram::skip(sp);
        assert!(strictly_sub_distributive(&coin, &skip, &flip).unwrap());
        for l in semiring_laws(&coin, &skip, &flip).unwrap() {
            assert!(l.holds, "{}", l.law);
        }
        assert!(star_unfold(&flip).unwrap().unwrap().holds);
    }
}
