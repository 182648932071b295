//! Fixtures shared by the benchmarks in `benches/`.

use probrely::dsl::Module;
use probrely::{IpBes, Rational};

pub const COIN: &str = "states 0 1 2;
atom r { * -> 1/2 0 + 1/2 1 | 2 }
atom a { 0 -> 1; 1 -> 2; 2 -> 0 }
proc wide = (r ; (skip + r)) || (a ; r) || a;";

pub fn wide() -> IpBes {
    Module::parse(COIN).and_then(|m| m.structure("wide")).expect("fixture elaborates")
}

pub fn nine_tenths() -> Rational {
    Rational::new(9, 10)
}
