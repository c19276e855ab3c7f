//! Serde adapter that writes every float as a 17-significant-digit decimal.
//!
//! Use as `#[serde(with = "precise")]` on fields of type `f64`,
//! `Option<f64>`, `Vec<f64>`, `(f64, f64)`, `[f64; N]` and nestings of
//! these. Only the JSON serializer is supported. Non-finite values are
//! rejected on write.

use serde::de::{Deserialize, Deserializer};
use serde::ser::{Error as _, Serialize, SerializeSeq, SerializeTuple, Serializer};
use serde_json::value::RawValue;

pub trait Precise {
    fn write<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error>;
}

struct Wrap<'a, T: ?Sized>(&'a T);

impl<T: Precise + ?Sized> Serialize for Wrap<'_, T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.write(s)
    }
}

/// `x` formatted with 17 significant digits, e.g. `-5.0000000000000000e-1`.
pub fn format(x: f64) -> String {
    format!("{x:.16e}")
}

impl Precise for f64 {
    fn write<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.is_finite() {
            return Err(S::Error::custom(format!("cannot write non-finite number {self}")));
        }
        RawValue::from_string(format(*self)).map_err(S::Error::custom)?.serialize(s)
    }
}

impl<T: Precise> Precise for Option<T> {
    fn write<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Some(v) => v.write(s),
            None => s.serialize_none(),
        }
    }
}

impl<T: Precise> Precise for [T] {
    fn write<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.len()))?;
        for v in self {
            seq.serialize_element(&Wrap(v))?;
        }
        seq.end()
    }
}

impl<T: Precise> Precise for Vec<T> {
    fn write<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.as_slice().write(s)
    }
}

impl<T: Precise, const N: usize> Precise for [T; N] {
    fn write<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.as_slice().write(s)
    }
}

impl<A: Precise, B: Precise> Precise for (A, B) {
    fn write<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut t = s.serialize_tuple(2)?;
        t.serialize_element(&Wrap(&self.0))?;
        t.serialize_element(&Wrap(&self.1))?;
        t.end()
    }
}

pub fn serialize<T: Precise + ?Sized, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    v.write(s)
}

pub fn deserialize<'de, T: Deserialize<'de>, D: Deserializer<'de>>(d: D) -> Result<T, D::Error> {
    T::deserialize(d)
}
