//! Saturating two's-complement fixed-point arithmetic.
//!
//! A [`QFormat`] fixes the total and fractional bit widths of a value; a
//! [`Fixed`] is a mantissa paired with its format. Every conversion rounds to
//! nearest with ties away from zero and every overflow saturates. [`Po2`]
//! values turn multiplication into a shift, and [`Accumulator`] models the
//! 32-bit multiply-accumulate registers of the training datapath.

use std::cmp::Ordering;
use std::fmt;

use crate::error::FxpError;

/// Fixed-point format: `total_bits` wide, `frac_bits` of them fractional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QFormat {
    total_bits: u8,
    frac_bits: u8,
    signed: bool,
}

impl QFormat {
    pub fn new(total_bits: u32, frac_bits: u32, signed: bool) -> Result<Self, FxpError> {
        let sign_bit = u32::from(signed);
        if !(2..=32).contains(&total_bits) || frac_bits + sign_bit > total_bits {
            return Err(FxpError::InvalidFormat {
                total_bits,
                frac_bits,
                signed,
            });
        }
        Ok(Self {
            total_bits: total_bits as u8,
            frac_bits: frac_bits as u8,
            signed,
        })
    }

    pub fn signed(total_bits: u32, frac_bits: u32) -> Result<Self, FxpError> {
        Self::new(total_bits, frac_bits, true)
    }

    pub fn unsigned(total_bits: u32, frac_bits: u32) -> Result<Self, FxpError> {
        Self::new(total_bits, frac_bits, false)
    }

    pub fn total_bits(self) -> u32 {
        u32::from(self.total_bits)
    }

    pub fn frac_bits(self) -> u32 {
        u32::from(self.frac_bits)
    }

    pub fn is_signed(self) -> bool {
        self.signed
    }

    pub fn min_mantissa(self) -> i64 {
        if self.signed {
            -(1i64 << (self.total_bits - 1))
        } else {
            0
        }
    }

    pub fn max_mantissa(self) -> i64 {
        if self.signed {
            (1i64 << (self.total_bits - 1)) - 1
        } else {
            (1i64 << self.total_bits) - 1
        }
    }

    /// Weight of one least-significant bit.
    pub fn step(self) -> f64 {
        (-f64::from(self.frac_bits)).exp2()
    }

    pub fn min_value(self) -> f64 {
        self.min_mantissa() as f64 * self.step()
    }

    pub fn max_value(self) -> f64 {
        self.max_mantissa() as f64 * self.step()
    }

    pub fn saturate(self, mantissa: i64) -> i64 {
        mantissa.clamp(self.min_mantissa(), self.max_mantissa())
    }

    /// Same width and fraction, but signed/unsigned as requested.
    pub(crate) fn with_sign(self, signed: bool) -> Result<Self, FxpError> {
        Self::new(self.total_bits(), self.frac_bits(), signed)
    }

    /// True when every mantissa of this format fits an `i32`.
    pub fn fits_i32(self) -> bool {
        self.max_mantissa() <= i64::from(i32::MAX)
    }
}

impl fmt::Display for QFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.signed { "Q" } else { "UQ" };
        write!(f, "{tag}({},{})", self.total_bits, self.frac_bits)
    }
}

/// A fixed-point value. The mantissa always lies inside the format range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fixed {
    mantissa: i64,
    fmt: QFormat,
}

impl Fixed {
    /// Builds a value from a raw mantissa, saturating into range.
    pub fn from_mantissa(mantissa: i64, fmt: QFormat) -> Self {
        Self {
            mantissa: fmt.saturate(mantissa),
            fmt,
        }
    }

    pub fn zero(fmt: QFormat) -> Self {
        Self { mantissa: 0, fmt }
    }

    pub fn mantissa(self) -> i64 {
        self.mantissa
    }

    pub fn format(self) -> QFormat {
        self.fmt
    }

    pub fn to_f64(self) -> f64 {
        self.mantissa as f64 * self.fmt.step()
    }

    pub fn is_saturated_high(self) -> bool {
        self.mantissa == self.fmt.max_mantissa()
    }

    /// Re-expresses the value in another format, rounding and saturating.
    pub fn requantize(self, target: QFormat) -> Self {
        let shift = i64::from(self.fmt.frac_bits()) - i64::from(target.frac_bits());
        Self::from_mantissa(rescale(self.mantissa, shift), target)
    }

    /// Saturating addition of two values that share one format.
    pub fn saturating_add(self, other: Fixed) -> Result<Self, FxpError> {
        if self.fmt != other.fmt {
            return Err(FxpError::FormatMismatch {
                left: self.fmt,
                right: other.fmt,
            });
        }
        Ok(Self::from_mantissa(self.mantissa + other.mantissa, self.fmt))
    }

    /// Product of two values, rounded into `target`.
    pub fn mul_into(self, other: Fixed, target: QFormat) -> Self {
        let product = i128::from(self.mantissa) * i128::from(other.mantissa);
        let shift = i64::from(self.fmt.frac_bits()) + i64::from(other.fmt.frac_bits())
            - i64::from(target.frac_bits());
        let m = rescale_wide(product, shift);
        Self::from_mantissa(clamp_i128(m), target)
    }
}

impl PartialOrd for Fixed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

/// Nearest representable value, ties away from zero, saturated to range.
/// NaN maps to zero.
pub fn quantize(x: f64, fmt: QFormat) -> Fixed {
    if x.is_nan() {
        return Fixed::zero(fmt);
    }
    let scaled = (x * f64::from(fmt.frac_bits()).exp2()).round();
    let m = if scaled >= fmt.max_mantissa() as f64 {
        fmt.max_mantissa()
    } else if scaled <= fmt.min_mantissa() as f64 {
        fmt.min_mantissa()
    } else {
        scaled as i64
    };
    Fixed { mantissa: m, fmt }
}

/// Arithmetic right shift by `shift` bits, rounding to nearest with ties
/// away from zero.
pub fn round_shift_right(value: i64, shift: u32) -> i64 {
    clamp_i128(rescale_wide(i128::from(value), i64::from(shift)))
}

/// `value * 2^-shift` with rounding (positive shift) or exact scaling
/// (negative shift), clamped to the `i64` range.
fn rescale(value: i64, shift: i64) -> i64 {
    clamp_i128(rescale_wide(i128::from(value), shift))
}

fn rescale_wide(value: i128, shift: i64) -> i128 {
    match shift.cmp(&0) {
        Ordering::Equal => value,
        Ordering::Greater => {
            if shift >= 127 {
                return 0;
            }
            let half = 1i128 << (shift - 1);
            let mag = (value.unsigned_abs() as i128 + half) >> shift;
            if value < 0 {
                -mag
            } else {
                mag
            }
        }
        Ordering::Less => {
            let left = -shift;
            if value == 0 {
                0
            } else if left >= 64 {
                if value > 0 {
                    i128::MAX
                } else {
                    i128::MIN
                }
            } else {
                value.saturating_mul(1i128 << left)
            }
        }
    }
}

fn clamp_i128(v: i128) -> i64 {
    v.clamp(i128::from(i64::MIN), i128::from(i64::MAX)) as i64
}

/// A signed power of two, `sign * 2^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Po2 {
    sign: i8,
    exponent: i32,
}

impl Po2 {
    pub const ZERO: Po2 = Po2 {
        sign: 0,
        exponent: 0,
    };

    /// Canonicalizes: a zero sign forces exponent 0.
    pub fn new(sign: i8, exponent: i32) -> Self {
        match sign.signum() {
            0 => Self::ZERO,
            s => Self { sign: s, exponent },
        }
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    pub fn exponent(self) -> i32 {
        self.exponent
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn to_f64(self) -> f64 {
        f64::from(self.sign) * f64::from(self.exponent).exp2()
    }
}

/// Sign and nearest power-of-two exponent of `x`; log2 ties round up.
pub fn po2_quantize(x: f64) -> Po2 {
    if x == 0.0 || x.is_nan() {
        return Po2::ZERO;
    }
    let sign = if x < 0.0 { -1 } else { 1 };
    let mag = x.abs();
    if mag.is_infinite() {
        return Po2::new(sign, f64::MAX_EXP);
    }
    let (mant, exp) = frexp(mag);
    // mant in [1, 2); no f64 equals sqrt(2), and SQRT_2 rounds above it
    let exponent = if mant >= std::f64::consts::SQRT_2 {
        exp + 1
    } else {
        exp
    };
    Po2::new(sign, exponent)
}

/// Splits a positive finite `x` into `m * 2^e` with `m` in `[1, 2)`.
fn frexp(x: f64) -> (f64, i32) {
    let mut x = x;
    let mut bias = 0;
    if x < f64::MIN_POSITIVE {
        x *= 2f64.powi(64);
        bias = -64;
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32 - 1023;
    let mant = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1023u64 << 52));
    (mant, exp + bias)
}

/// `a * p` computed by shifting the mantissa, rounded and saturated into
/// `a`'s own format.
pub fn shift_mul(a: Fixed, p: Po2) -> Fixed {
    if p.is_zero() || a.mantissa == 0 {
        return Fixed::zero(a.fmt);
    }
    let magnitude = i128::from(a.mantissa).abs();
    let e = i64::from(p.exponent);
    let shifted = rescale_wide(magnitude, -e);
    let signed = if (a.mantissa < 0) != (p.sign < 0) {
        -shifted
    } else {
        shifted
    };
    Fixed::from_mantissa(clamp_i128(signed), a.fmt)
}

/// Lower bound of a 32-bit accumulator.
pub const ACC_MIN: i64 = i32::MIN as i64;
/// Upper bound of a 32-bit accumulator.
pub const ACC_MAX: i64 = i32::MAX as i64;

/// 32-bit saturating accumulator aligned at `frac_bits`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Accumulator {
    value: i32,
    frac_bits: u32,
}

impl Accumulator {
    pub fn new(frac_bits: u32) -> Self {
        Self {
            value: 0,
            frac_bits,
        }
    }

    pub fn with_value(value: i64, frac_bits: u32) -> Self {
        Self {
            value: value.clamp(ACC_MIN, ACC_MAX) as i32,
            frac_bits,
        }
    }

    pub fn value(self) -> i32 {
        self.value
    }

    pub fn frac_bits(self) -> u32 {
        self.frac_bits
    }

    pub fn to_f64(self) -> f64 {
        f64::from(self.value) * (-f64::from(self.frac_bits)).exp2()
    }

    pub fn is_saturated(self) -> bool {
        self.value == i32::MAX || self.value == i32::MIN
    }

    /// Adds a raw integer already aligned to this accumulator.
    pub fn add_raw(self, term: i64) -> Self {
        Self::with_value(i64::from(self.value).saturating_add(term), self.frac_bits)
    }

    /// Adds a fixed value, aligning it to the accumulator first.
    pub fn add_fixed(self, x: Fixed) -> Self {
        let shift = i64::from(x.fmt.frac_bits()) - i64::from(self.frac_bits);
        self.add_raw(rescale(x.mantissa, shift))
    }

    /// Reads the accumulated value out into `fmt`.
    pub fn to_fixed(self, fmt: QFormat) -> Fixed {
        let shift = i64::from(self.frac_bits) - i64::from(fmt.frac_bits());
        Fixed::from_mantissa(rescale(i64::from(self.value), shift), fmt)
    }
}

/// Multiply-accumulate: `acc + a * b`, saturating. The accumulator must be
/// aligned at `a.frac + b.frac`.
pub fn fixed_mul_acc(a: Fixed, b: Fixed, acc: Accumulator) -> Result<Accumulator, FxpError> {
    let want = a.fmt.frac_bits() + b.fmt.frac_bits();
    if acc.frac_bits != want {
        return Err(FxpError::Alignment {
            expected: want,
            found: acc.frac_bits,
        });
    }
    let product = i128::from(a.mantissa) * i128::from(b.mantissa);
    Ok(acc.add_raw(clamp_i128(product)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(t: u32, f: u32) -> QFormat {
        QFormat::signed(t, f).unwrap()
    }

    #[test]
    fn format_bounds() {
        assert!(QFormat::signed(1, 0).is_err());
        assert!(QFormat::signed(33, 0).is_err());
        assert!(QFormat::signed(4, 4).is_err());
        assert!(QFormat::unsigned(4, 4).is_ok());
        let f = q(4, 2);
        assert_eq!(f.min_value(), -2.0);
        assert_eq!(f.max_value(), 1.75);
        let u = QFormat::unsigned(32, 0).unwrap();
        assert_eq!(u.max_mantissa(), (1i64 << 32) - 1);
        assert!(!u.fits_i32());
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize(0.3, q(4, 2)).mantissa(), 1);
        assert_eq!(quantize(5.0, q(4, 2)).mantissa(), 7);
        assert_eq!(quantize(-0.125, q(8, 3)).mantissa(), -1);
        assert_eq!(quantize(-5.0, q(4, 2)).mantissa(), -8);
        // ties away from zero
        assert_eq!(quantize(0.375, q(4, 2)).mantissa(), 2);
        assert_eq!(quantize(-0.375, q(4, 2)).mantissa(), -2);
        assert_eq!(quantize(f64::NAN, q(4, 2)).mantissa(), 0);
        assert_eq!(quantize(-1.0, QFormat::unsigned(8, 4).unwrap()).mantissa(), 0);
    }

    #[test]
    fn mul_acc_examples() {
        let f = q(4, 2);
        let half = quantize(0.5, f);
        let acc = fixed_mul_acc(half, half, Accumulator::new(4)).unwrap();
        assert_eq!(acc.value(), 4);
        assert_eq!(acc.to_f64(), 0.25);

        let c = Accumulator::with_value(-17, 4);
        let z = fixed_mul_acc(Fixed::zero(f), quantize(1.5, f), c).unwrap();
        assert_eq!(z, c);

        let err = fixed_mul_acc(half, half, Accumulator::new(3)).unwrap_err();
        assert!(matches!(err, FxpError::Alignment { expected: 4, found: 3 }));
    }

    #[test]
    fn accumulator_saturates() {
        let f = q(32, 0);
        let max = Fixed::from_mantissa(f.max_mantissa(), f);
        let mut acc = Accumulator::new(0);
        for _ in 0..4 {
            acc = fixed_mul_acc(max, max, acc).unwrap();
        }
        assert_eq!(acc.value(), i32::MAX);
        let min = Fixed::from_mantissa(f.min_mantissa(), f);
        for _ in 0..4 {
            acc = fixed_mul_acc(min, max, acc).unwrap();
        }
        assert_eq!(acc.value(), i32::MIN);
    }

    #[test]
    fn po2_examples() {
        assert_eq!(po2_quantize(0.7), Po2::new(1, -1));
        assert!(po2_quantize(0.0).is_zero());
        assert_eq!(po2_quantize(-3.0), Po2::new(-1, 2));
        assert_eq!(po2_quantize(1.0), Po2::new(1, 0));
        assert_eq!(po2_quantize(1.414), Po2::new(1, 0));
        assert_eq!(po2_quantize(1.4143), Po2::new(1, 1));
        assert_eq!(po2_quantize(-0.0625), Po2::new(-1, -4));
        assert_eq!(po2_quantize(f64::MIN_POSITIVE / 4.0), Po2::new(1, -1024));
        assert_eq!(Po2::new(0, 7), Po2::ZERO);
    }

    #[test]
    fn shift_mul_examples() {
        let f = q(8, 4);
        let a = quantize(0.75, f);
        assert_eq!(shift_mul(a, Po2::new(1, 1)).to_f64(), 1.5);
        assert_eq!(shift_mul(a, Po2::new(1, 4)).mantissa(), f.max_mantissa());
        assert_eq!(shift_mul(a, Po2::new(-1, 4)).mantissa(), -f.max_mantissa() - 1);
        assert_eq!(shift_mul(a, Po2::ZERO).mantissa(), 0);
        // 12/16 * 1/8 = 1.5/16 -> ties away -> 2/16
        assert_eq!(shift_mul(a, Po2::new(1, -3)).mantissa(), 2);
        assert_eq!(shift_mul(a, Po2::new(-1, -3)).mantissa(), -2);
    }

    #[test]
    fn requantize_and_mul_into() {
        let w = quantize(0.625, q(4, 3));
        let wide = w.requantize(q(12, 8));
        assert_eq!(wide.to_f64(), 0.625);
        assert_eq!(wide.requantize(q(4, 3)), w);
        let x = quantize(-1.25, q(12, 8));
        assert_eq!(w.mul_into(x, q(12, 8)).to_f64(), -0.78125);
        assert_eq!(round_shift_right(-3, 1), -2);
        assert_eq!(round_shift_right(3, 1), 2);
        assert_eq!(round_shift_right(5, 2), 1);
        assert_eq!(round_shift_right(i64::MIN, 70), 0);
    }
}
