//! Exact rely-guarantee reasoning for probabilistic concurrent programs.
//!
//! Programs map each state of a finite space to a convex set of
//! distributions. Concurrent components are bundle event structures whose
//! events carry such programs; schedulers resolve the interleaving, and
//! their outcomes give a sequential semantics. Everything is computed with
//! exact rationals.
//!
//! ```
//! use probrely::dsl::Module;
//! use probrely::sched::semantics;
//!
//! let m = Module::parse("states 0 1; atom r { * -> 1/2 0 + 1/2 1 | 1 } proc ex = r ; (skip + r);").unwrap();
//! let es = m.structure("ex").unwrap();
//! assert_eq!(semantics(&es, 0).unwrap().vertices().unwrap().len(), 2);
//! ```

pub mod dist;
pub mod error;
pub mod lp;
pub mod rational;
pub mod space;
pub mod convex;
pub mod program;
pub mod expr;
pub mod ipbes;
pub mod sched;
pub mod sim;
pub mod rg;
pub mod sieve;
pub mod gen;
pub mod axioms;
pub mod dsl;

pub use convex::{Constraint, ConvexSet};
pub use dist::Distribution;
pub use error::{Error, Result};
pub use expr::ProgramExpr;
pub use ipbes::{EventId, EventSet, IpBes};
pub use program::{
    equivalent, kleene_star, ndet_choice, prob_choice, refines, seq_compose, ConvexProgram, Kind,
};
pub use rational::{rat, Rational};
pub use rg::{check_quintuple, compose_concurrent, probability_bound, Post, Quintuple, RelyCondition, Verdict};
pub use sched::{refines_seq, semantics, semantics_program, SchedulerPolicy};
pub use sim::{find_t_simulation, TSimulation};
pub use space::{State, StateSpace};
