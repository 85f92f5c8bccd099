//! Fixed-point arithmetic in the 16/32-bit integer style of MCU kernels.
//!
//! Products are formed at double width and truncated with an arithmetic
//! right shift; every narrowing saturates instead of wrapping. Conversions
//! from reals round to nearest.
//!
//! Two views of the same arithmetic are provided: [`QValue`] carries its
//! [`QFormat`] at runtime (used for model files and tests), while
//! [`Fx16`]/[`Fx32`] fix the format at compile time so kernels can be
//! instantiated over them through [`Scalar`].

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use num_traits::{Num, One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::scalar::{Arith, Real, Scalar};

/// Fixed-point layout: word size and position of the binary point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QFormat {
    pub total_bits: u8,
    pub frac_bits: u8,
}

impl QFormat {
    pub const Q15: QFormat = QFormat { total_bits: 16, frac_bits: 15 };
    pub const Q16_16: QFormat = QFormat { total_bits: 32, frac_bits: 16 };

    pub fn new(total_bits: u8, frac_bits: u8) -> Result<Self> {
        if total_bits != 16 && total_bits != 32 {
            return domain(format!("unsupported word size {total_bits}"));
        }
        if frac_bits >= total_bits {
            return domain(format!("frac_bits {frac_bits} must be < total_bits {total_bits}"));
        }
        Ok(QFormat { total_bits, frac_bits })
    }

    pub fn max_raw(self) -> i64 {
        (1i64 << (self.total_bits - 1)) - 1
    }

    pub fn min_raw(self) -> i64 {
        -(1i64 << (self.total_bits - 1))
    }

    /// Weight of one LSB.
    pub fn resolution(self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    fn saturate(self, raw: i128) -> (i32, bool) {
        let (lo, hi) = (self.min_raw() as i128, self.max_raw() as i128);
        if raw > hi {
            (hi as i32, true)
        } else if raw < lo {
            (lo as i32, true)
        } else {
            (raw as i32, false)
        }
    }
}

/// A fixed-point operand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QValue {
    pub raw: i32,
    pub format: QFormat,
}

impl QValue {
    pub fn from_raw(raw: i64, format: QFormat) -> Result<Self> {
        if raw < format.min_raw() || raw > format.max_raw() {
            return Err(crate::Error::Range(format!("raw value {raw} outside {}-bit range", format.total_bits)));
        }
        Ok(QValue { raw: raw as i32, format })
    }

    pub fn to_real(self) -> f64 {
        q_to_real(self)
    }
}

/// Real value of `v`.
pub fn q_to_real(v: QValue) -> f64 {
    v.raw as f64 * v.format.resolution()
}

/// Rounds `x` to the nearest representable value. The flag is set when `x`
/// was outside the range and the result saturated.
pub fn q_from_real(x: f64, format: QFormat) -> (QValue, bool) {
    let (raw, saturated) = real_to_raw(x, format);
    (QValue { raw, format }, saturated)
}

fn real_to_raw(x: f64, format: QFormat) -> (i32, bool) {
    if x.is_nan() {
        return (0, true);
    }
    let scaled = (x * (format.frac_bits as f64).exp2()).round();
    if scaled >= format.max_raw() as f64 + 1.0 {
        (format.max_raw() as i32, true)
    } else if scaled < format.min_raw() as f64 {
        (format.min_raw() as i32, true)
    } else {
        let (raw, sat) = format.saturate(scaled as i128);
        (raw, sat)
    }
}

#[inline]
fn mul_raw(a: i64, b: i64, format: QFormat) -> (i32, bool) {
    format.saturate(((a as i128) * (b as i128)) >> format.frac_bits)
}

/// Saturating fixed-point product; the double-width intermediate is
/// truncated by the shift. The flag reports saturation.
pub fn q_mul(a: QValue, b: QValue) -> Result<(QValue, bool)> {
    if a.format != b.format {
        return domain(format!("format mismatch {:?} vs {:?}", a.format, b.format));
    }
    let (raw, sat) = mul_raw(a.raw as i64, b.raw as i64, a.format);
    Ok((QValue { raw, format: a.format }, sat))
}

/// Double-width multiply-accumulate register.
///
/// Products are summed unshifted; [`MacAcc::finalize`] applies the shift.
/// The register is `2 * total_bits` wide and saturates on overflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MacAcc {
    acc: i128,
    format: QFormat,
    saturated: bool,
}

impl MacAcc {
    pub fn new(format: QFormat) -> Self {
        MacAcc { acc: 0, format, saturated: false }
    }

    /// Starts from a bias already expressed in the operand format.
    pub fn with_bias(bias: QValue) -> Self {
        let mut acc = MacAcc::new(bias.format);
        acc.acc = (bias.raw as i128) << bias.format.frac_bits;
        acc
    }

    fn limits(&self) -> (i128, i128) {
        let bits = 2 * self.format.total_bits as u32;
        let hi = (1i128 << (bits - 1)) - 1;
        (-hi - 1, hi)
    }

    #[inline]
    fn push_raw(&mut self, a: i32, b: i32) {
        let (lo, hi) = self.limits();
        let next = self.acc + (a as i128) * (b as i128);
        if next > hi {
            self.acc = hi;
            self.saturated = true;
        } else if next < lo {
            self.acc = lo;
            self.saturated = true;
        } else {
            self.acc = next;
        }
    }

    pub fn raw(&self) -> i128 {
        self.acc
    }

    /// Adds a value already at product scale, e.g. a pre-scaled bias.
    pub fn add_raw(&mut self, v: i64) {
        let (lo, hi) = self.limits();
        let next = self.acc + v as i128;
        self.saturated |= next > hi || next < lo;
        self.acc = next.clamp(lo, hi);
    }

    pub fn saturated(&self) -> bool {
        self.saturated
    }

    /// Shifts the accumulator back to the operand format, with an optional
    /// extra left (`shift > 0`) or right (`shift < 0`) rescale.
    pub fn finalize_shifted(&self, shift: i32) -> (QValue, bool) {
        let total = self.format.frac_bits as i32 - shift;
        let v = if total >= 0 { self.acc >> total } else { self.acc << (-total) };
        let (raw, sat) = self.format.saturate(v);
        (QValue { raw, format: self.format }, sat || self.saturated)
    }

    pub fn finalize(&self) -> (QValue, bool) {
        self.finalize_shifted(0)
    }
}

/// Accumulates `a * b` into `acc`.
pub fn q_mac(mut acc: MacAcc, a: QValue, b: QValue) -> Result<MacAcc> {
    if a.format != b.format || a.format != acc.format {
        return domain("q_mac operands must share the accumulator format");
    }
    acc.push_raw(a.raw, b.raw);
    Ok(acc)
}

/// Fixed-point dot product through a single accumulator.
pub fn q_dot(a: &[QValue], b: &[QValue], format: QFormat) -> Result<(QValue, bool)> {
    if a.len() != b.len() {
        return domain(format!("length mismatch {} vs {}", a.len(), b.len()));
    }
    let mut acc = MacAcc::new(format);
    for (&x, &y) in a.iter().zip(b) {
        acc = q_mac(acc, x, y)?;
    }
    Ok(acc.finalize())
}

macro_rules! fixed_type {
    ($name:ident, $raw:ty, $bits:expr, $arith:expr) => {
        #[doc = concat!("Signed ", stringify!($bits), "-bit fixed-point number with `F` fractional bits.")]
        #[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        #[repr(transparent)]
        pub struct $name<const F: u32>(pub $raw);

        impl<const F: u32> $name<F> {
            pub const MAX: Self = $name(<$raw>::MAX);
            pub const MIN: Self = $name(<$raw>::MIN);

            pub const fn from_raw(raw: $raw) -> Self {
                $name(raw)
            }

            pub const fn raw(self) -> $raw {
                self.0
            }

            pub fn format() -> QFormat {
                QFormat { total_bits: $bits, frac_bits: F as u8 }
            }

            pub fn to_qvalue(self) -> QValue {
                QValue { raw: self.0 as i32, format: Self::format() }
            }

            #[inline]
            fn narrow(v: i128) -> Self {
                $name(v.clamp(<$raw>::MIN as i128, <$raw>::MAX as i128) as $raw)
            }
        }

        impl<const F: u32> fmt::Debug for $name<F> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", self.to_f64(), self.0)
            }
        }

        impl<const F: u32> fmt::Display for $name<F> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.to_f64())
            }
        }

        impl<const F: u32> Add for $name<F> {
            type Output = Self;
            #[inline]
            fn add(self, rhs: Self) -> Self {
                $name(self.0.saturating_add(rhs.0))
            }
        }

        impl<const F: u32> Sub for $name<F> {
            type Output = Self;
            #[inline]
            fn sub(self, rhs: Self) -> Self {
                $name(self.0.saturating_sub(rhs.0))
            }
        }

        impl<const F: u32> Mul for $name<F> {
            type Output = Self;
            #[inline]
            fn mul(self, rhs: Self) -> Self {
                Self::narrow(((self.0 as i128) * (rhs.0 as i128)) >> F)
            }
        }

        impl<const F: u32> Div for $name<F> {
            type Output = Self;
            #[inline]
            fn div(self, rhs: Self) -> Self {
                if rhs.0 == 0 {
                    return if self.0 >= 0 { Self::MAX } else { Self::MIN };
                }
                Self::narrow(((self.0 as i128) << F) / rhs.0 as i128)
            }
        }

        impl<const F: u32> Rem for $name<F> {
            type Output = Self;
            #[inline]
            fn rem(self, rhs: Self) -> Self {
                if rhs.0 == 0 {
                    $name(0)
                } else {
                    $name(self.0 % rhs.0)
                }
            }
        }

        impl<const F: u32> Neg for $name<F> {
            type Output = Self;
            #[inline]
            fn neg(self) -> Self {
                $name(self.0.saturating_neg())
            }
        }

        impl<const F: u32> Zero for $name<F> {
            fn zero() -> Self {
                $name(0)
            }
            fn is_zero(&self) -> bool {
                self.0 == 0
            }
        }

        /// `1.0`, or the largest value below it when the format has no
        /// integer bits.
        impl<const F: u32> One for $name<F> {
            fn one() -> Self {
                Self::narrow(1i128 << F)
            }
        }

        impl<const F: u32> Num for $name<F> {
            type FromStrRadixErr = std::num::ParseFloatError;

            fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
                if radix != 10 {
                    return "".parse::<f64>().map(Self::from_f64);
                }
                s.parse::<f64>().map(Self::from_f64)
            }
        }

        impl<const F: u32> Scalar for $name<F> {
            const ARITH: Arith = $arith;

            #[inline]
            fn from_f64(x: f64) -> Self {
                $name(real_to_raw(x, Self::format()).0 as $raw)
            }

            #[inline]
            fn to_f64(self) -> f64 {
                self.0 as f64 / (F as f64).exp2()
            }
        }

        impl<const F: u32> Real for $name<F> {
            const TRANSCENDENTAL_COST: u64 = 4;

            fn sqrt(self) -> Self {
                Self::from_f64(self.to_f64().max(0.0).sqrt())
            }
            fn sin(self) -> Self {
                Self::from_f64(self.to_f64().sin())
            }
            fn cos(self) -> Self {
                Self::from_f64(self.to_f64().cos())
            }
            fn atan2(self, other: Self) -> Self {
                Self::from_f64(self.to_f64().atan2(other.to_f64()))
            }
            fn ln(self) -> Self {
                let v = self.to_f64();
                if v <= 0.0 {
                    Self::MIN
                } else {
                    Self::from_f64(v.ln())
                }
            }
            fn exp(self) -> Self {
                Self::from_f64(self.to_f64().exp())
            }
            fn tanh(self) -> Self {
                Self::from_f64(self.to_f64().tanh())
            }
            fn tiny() -> Self {
                $name(1)
            }
            fn is_finite(self) -> bool {
                true
            }
        }
    };
}

fixed_type!(Fx16, i16, 16, Arith::Fixed16);
fixed_type!(Fx32, i32, 32, Arith::Fixed32);
