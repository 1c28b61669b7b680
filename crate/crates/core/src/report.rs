//! Serialization helpers: rationals as `"p/q"` strings.

use serde::ser::{SerializeSeq, Serializer};

use crate::rational::{self, Rational};

pub fn ser_rational<S: Serializer>(x: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&rational::format(x))
}

pub fn ser_rationals<S: Serializer>(xs: &[Rational], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        seq.serialize_element(&rational::format(x))?;
    }
    seq.end()
}

pub fn ser_opt_rational<S: Serializer>(x: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(x) => s.serialize_str(&rational::format(x)),
        None => s.serialize_none(),
    }
}
