use super::*;
use crate::error::Error;
use crate::ipbes::IpBes;
use crate::rational::rat;
use crate::sched::semantics;
use crate::space::StateSpace;
use proptest::prelude::*;

const SRC: &str = "
states 0 1;
# r sends everything to the fair coin or to 1
atom r { * -> 1/2 0 + 1/2 1 | 1 }
atom a { 0 -> 1; 1 -> 0 }
guard b { 0 }
spec q { 0 -> mass {1} >= 1/2; 1 -> mass {0, 1} = 1 within {1} }
proc ex = r ; (skip + r);
proc both = r || r;
proc branch = if b { a } else { skip };
";

fn module() -> Module {
    Module::parse(SRC).unwrap()
}

#[test]
fn precedence() {
    assert_eq!(
        parse_term("a ; (skip + a)").unwrap(),
        Term::seq(Term::atom("a"), Term::choice(Term::Skip, Term::atom("a")))
    );
    assert_eq!(parse_term("skip [1/2] a").unwrap(), Term::pchoice(rat(1, 2), Term::Skip, Term::atom("a")));
    assert_eq!(
        parse_term("a ; b + c").unwrap(),
        Term::choice(Term::seq(Term::atom("a"), Term::atom("b")), Term::atom("c"))
    );
    assert_eq!(
        parse_term("a + b || c [0.25] d ; e").unwrap(),
        Term::par(
            Term::choice(Term::atom("a"), Term::atom("b")),
            Term::pchoice(rat(1, 4), Term::atom("c"), Term::seq(Term::atom("d"), Term::atom("e")))
        )
    );
}

#[test]
fn syntax_errors_carry_positions() {
    match parse_term("a ;\n  ; b") {
        Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 3)),
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_term("a [3/2] b"), Err(Error::Syntax { .. })));
    assert!(matches!(parse_term("a $ b"), Err(Error::Syntax { .. })));
    assert!(matches!(parse_term("star(a, skip, 1/2)"), Err(Error::Syntax { .. })));
    match Module::parse("states 0;\nproc p = zz;") {
        Err(Error::Undeclared(m)) => assert!(m.contains("2:10")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn example_structure() {
    let m = module();
    let es = m.structure("ex").unwrap();
    assert_eq!(es.len(), 3);
    assert_eq!(es.bundles().len(), 2);
    assert!(es.in_conflict(1, 2));
    let sem = semantics(&es, 0).unwrap();
    assert_eq!(sem.vertices().unwrap().len(), 2);
    assert!(m.structure("both").unwrap().isomorphic(&IpBes::par(
        &IpBes::atomic(m.program("r").unwrap(), "r"),
        &IpBes::atomic(m.program("r").unwrap(), "r")
    )
    .unwrap()));
    assert_eq!(m.structure_of("skip").unwrap().len(), 1);
    assert!(m.structure("branch").unwrap().is_feasible().unwrap());
}

#[test]
fn probabilistic_choice_is_atomic_only() {
    let m = module();
    let es = m.structure_of("a [1/3] skip").unwrap();
    assert_eq!(es.len(), 1);
    let mu = es.label(0).at(0).unwrap().vertices().unwrap()[0].clone();
    assert_eq!(mu.weight(1), rat(1, 3));
    assert!(matches!(m.structure_of("(a ; a) [1/3] skip"), Err(Error::Atomicity(_))));
    assert!(matches!(m.structure_of("b"), Err(Error::Infeasible(_))));
}

#[test]
fn specs_and_guards() {
    let m = module();
    let q = m.program("q").unwrap();
    assert!(q.at(0).unwrap().contains(&crate::dist::Distribution::point(2, 1)));
    assert!(!q.at(0).unwrap().contains(&crate::dist::Distribution::point(2, 0)));
    assert_eq!(q.at(1).unwrap().support_states(), vec![1]);
    assert!(m.program("b").unwrap().is_subidentity());
    assert!(Module::parse("atom a { 0 -> 1 }").is_err());
    assert!(matches!(Module::parse("states 0;\natom a { 0 -> 1/2 0 }"), Err(Error::Domain(_))));
}

fn arb_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        Just(Term::Skip),
        Just(Term::Abort),
        "[a-c]".prop_map(|s| Term::atom(&s)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::seq(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::choice(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::par(a, b)),
            (0i64..=4, inner.clone(), inner.clone()).prop_map(|(k, a, b)| Term::pchoice(rat(k, 4), a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::if_else("g", a, b)),
            (inner.clone(), inner, 0usize..3).prop_map(|(a, b, d)| Term::star(a, b, d)),
        ]
    })
}

proptest! {
    #[test]
    fn pretty_round_trips(t in arb_term()) {
        prop_assert_eq!(parse_term(&pretty(&t)).unwrap(), t);
    }

    #[test]
    fn elaboration_is_compositional(t in arb_term(), u in arb_term(), op in 0usize..3) {
        let sp = StateSpace::numbered(2).unwrap();
        let mut m = Module::over(sp);
        for item in parse_module("atom a { * -> 0 } atom b { * -> 1 } atom c { 0 -> 1; 1 -> 1/2 0 + 1/2 1 } guard g { 0 }").unwrap() {
            m.declare(item).unwrap();
        }
        let (Ok(x), Ok(y)) = (m.build(&t, 0), m.build(&u, 0)) else { return Ok(()) };
        prop_assume!(x.len() + y.len() <= 12);
        let (whole, parts) = match op {
            0 => (Term::seq(t, u), IpBes::seq(&x, &y).unwrap()),
            1 => (Term::choice(t, u), IpBes::sum(&x, &y).unwrap()),
            _ => (Term::par(t, u), IpBes::par(&x, &y).unwrap()),
        };
        prop_assert!(m.build(&whole, 0).unwrap().isomorphic(&parts));
    }
}
