//! Numeric abstraction shared by every module.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumCast, ToPrimitive};
use rand::distr::uniform::SampleUniform;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar the simulator is generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumCast
    + Default
    + Debug
    + Display
    + FromStr
    + SampleUniform
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Infallible for the two supported types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal is representable")
    }

    /// Converts a count.
    #[inline]
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count is representable")
    }

    /// Converts a binary flag to 0 or 1.
    #[inline]
    fn indicator(flag: bool) -> Self {
        if flag {
            Self::one()
        } else {
            Self::zero()
        }
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
