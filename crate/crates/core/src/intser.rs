//! Serde helpers that write big integers as JSON numbers when they fit in an
//! `i64` and as decimal strings otherwise.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Repr {
    Small(i64),
    Text(String),
}

fn to_repr(n: &BigInt) -> Repr {
    match n.to_i64() {
        Some(v) => Repr::Small(v),
        None => Repr::Text(n.to_string()),
    }
}

fn from_repr<E: de::Error>(r: Repr) -> Result<BigInt, E> {
    match r {
        Repr::Small(v) => Ok(BigInt::from(v)),
        Repr::Text(s) => s
            .parse()
            .map_err(|_| E::custom(format!("invalid integer `{s}`"))),
    }
}

pub mod option {
    use super::*;

    pub fn serialize<S: Serializer>(n: &Option<BigInt>, s: S) -> Result<S::Ok, S::Error> {
        n.as_ref().map(to_repr).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigInt>, D::Error> {
        Option::<Repr>::deserialize(d)?.map(from_repr).transpose()
    }
}

pub mod map {
    use std::collections::BTreeMap;

    use super::*;
    use crate::program::Var;

    pub fn serialize<S: Serializer>(m: &BTreeMap<Var, BigInt>, s: S) -> Result<S::Ok, S::Error> {
        m.iter()
            .map(|(k, v)| (*k, to_repr(v)))
            .collect::<BTreeMap<Var, Repr>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Var, BigInt>, D::Error> {
        BTreeMap::<Var, Repr>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| from_repr(v).map(|v| (k, v)))
            .collect()
    }
}
