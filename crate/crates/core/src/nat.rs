//! Unbounded naturals and their JSON encoding.
//!
//! Values that fit in a `u64` are written as JSON numbers, larger ones as
//! decimal strings. Both forms are accepted on input.

use std::fmt;

use num_bigint::BigUint;
use serde::de::{self, SeqAccess, Visitor};
use serde::{Deserializer, Serializer};

pub type Nat = BigUint;

pub fn to_u64(n: &Nat) -> Option<u64> {
    u64::try_from(n).ok()
}

pub fn serialize<S: Serializer>(n: &Nat, s: S) -> Result<S::Ok, S::Error> {
    match to_u64(n) {
        Some(v) => s.serialize_u64(v),
        None => s.serialize_str(&n.to_string()),
    }
}

struct NatVisitor;

impl<'de> Visitor<'de> for NatVisitor {
    type Value = Nat;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a natural number or a decimal string")
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Nat, E> {
        Ok(Nat::from(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Nat, E> {
        u64::try_from(v)
            .map(Nat::from)
            .map_err(|_| E::custom("negative natural"))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Nat, E> {
        v.parse::<Nat>().map_err(E::custom)
    }
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Nat, D::Error> {
    d.deserialize_any(NatVisitor)
}

/// Serde adapter for `Vec<Nat>`.
pub mod vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[Nat], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for n in v {
            seq.serialize_element(&Wrap(n))?;
        }
        seq.end()
    }

    struct Wrap<'a>(&'a Nat);

    impl serde::Serialize for Wrap<'_> {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            super::serialize(self.0, s)
        }
    }

    struct Owned(Nat);

    impl<'de> serde::Deserialize<'de> for Owned {
        fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
            super::deserialize(d).map(Owned)
        }
    }

    struct VecVisitor;

    impl<'de> Visitor<'de> for VecVisitor {
        type Value = Vec<Nat>;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a list of naturals")
        }

        fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Vec<Nat>, A::Error> {
            let mut out = Vec::new();
            while let Some(Owned(n)) = seq.next_element()? {
                out.push(n);
            }
            Ok(out)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Nat>, D::Error> {
        d.deserialize_seq(VecVisitor)
    }
}
