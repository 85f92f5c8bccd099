//! Scalar abstraction shared by every kernel.
//!
//! Kernels are written once against [`Scalar`] (or [`Real`] when they need
//! transcendental functions) and instantiated with `f32`, `f64` or one of the
//! fixed-point types from [`crate::fxp`]. The scalar's [`Arith`] tag decides
//! which operation counter a multiply or MAC is charged to.

use std::fmt::Debug;
use std::ops::Neg;

use num_traits::{Float, Num};
use serde::{Deserialize, Serialize};

/// Number representation of a scalar type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arith {
    Fixed16,
    Fixed32,
    Float32,
    Float64,
}

impl Arith {
    pub fn is_fixed(self) -> bool {
        matches!(self, Arith::Fixed16 | Arith::Fixed32)
    }

    pub fn bits(self) -> u32 {
        match self {
            Arith::Fixed16 => 16,
            Arith::Fixed32 | Arith::Float32 => 32,
            Arith::Float64 => 64,
        }
    }

    /// Short label as used in workload descriptions, e.g. `16-bit FXP`.
    pub fn label(self) -> String {
        let kind = if self.is_fixed() { "FXP" } else { "FP" };
        format!("{}-bit {kind}", self.bits())
    }
}

/// A number type the kernels can compute with.
pub trait Scalar: Copy + Debug + Default + PartialOrd + Num + Neg<Output = Self> + Send + Sync + 'static {
    const ARITH: Arith;

    /// Nearest representable value; fixed-point types saturate.
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;

    fn from_usize(n: usize) -> Self {
        Self::from_f64(n as f64)
    }

    fn abs(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

/// Scalars that also provide the elementary functions used by the
/// spectral and statistical kernels.
///
/// Fixed-point implementations evaluate through a double-precision detour
/// and requantize, standing in for the lookup tables an MCU build would use.
pub trait Real: Scalar {
    /// Multiplications charged for one transcendental evaluation.
    const TRANSCENDENTAL_COST: u64;

    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn atan2(self, other: Self) -> Self;
    fn ln(self) -> Self;
    fn exp(self) -> Self;
    fn tanh(self) -> Self;
    /// Smallest positive value used as a division guard.
    fn tiny() -> Self;
    fn is_finite(self) -> bool;
}

macro_rules! float_scalar {
    ($t:ty, $arith:expr, $tiny:expr) => {
        impl Scalar for $t {
            const ARITH: Arith = $arith;

            #[inline]
            fn from_f64(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn to_f64(self) -> f64 {
                self as f64
            }
        }

        impl Real for $t {
            const TRANSCENDENTAL_COST: u64 = 1;

            #[inline]
            fn sqrt(self) -> Self {
                Float::sqrt(self)
            }
            #[inline]
            fn sin(self) -> Self {
                Float::sin(self)
            }
            #[inline]
            fn cos(self) -> Self {
                Float::cos(self)
            }
            #[inline]
            fn atan2(self, other: Self) -> Self {
                Float::atan2(self, other)
            }
            #[inline]
            fn ln(self) -> Self {
                Float::ln(self)
            }
            #[inline]
            fn exp(self) -> Self {
                Float::exp(self)
            }
            #[inline]
            fn tanh(self) -> Self {
                Float::tanh(self)
            }
            #[inline]
            fn tiny() -> Self {
                $tiny
            }
            #[inline]
            fn is_finite(self) -> bool {
                Float::is_finite(self)
            }
        }
    };
}

float_scalar!(f32, Arith::Float32, 1e-20);
float_scalar!(f64, Arith::Float64, 1e-30);

/// Converts a slice between scalar types through `f64`.
pub fn cast_slice<A: Scalar, B: Scalar>(x: &[A]) -> Vec<B> {
    x.iter().map(|v| B::from_f64(v.to_f64())).collect()
}

pub fn to_f64_vec<S: Scalar>(x: &[S]) -> Vec<f64> {
    x.iter().map(|v| v.to_f64()).collect()
}
