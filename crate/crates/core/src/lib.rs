//! Exact and numerical operator analysis of the nonstandard quantum complex
//! projective line.

pub mod cli;
pub mod laurent;
pub mod ncwords;
pub mod numop;
pub mod pullback;
pub mod qcp;

use num::complex::Complex64;
use serde::ser::{SerializeTuple, Serializer};

/// Complex numbers are written as `[re, im]` pairs.
pub(crate) fn serialize_complex<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}
