//! Working-precision bookkeeping and decimal formatting.

use rug::float::Round;
use rug::ops::Pow;
use rug::Float;

use crate::error::{Error, Result};

const BITS_PER_DIGIT: f64 = std::f64::consts::LOG2_10;

/// A working precision, expressed both in decimal digits and in mantissa bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Precision {
    digits: u32,
    bits: u32,
}

impl Precision {
    /// Exactly `digits` decimal digits (plus a few guard bits).
    pub fn from_digits(digits: u32) -> Self {
        let digits = digits.max(1);
        let bits = (f64::from(digits) * BITS_PER_DIGIT).ceil() as u32 + 8;
        Precision { digits, bits }
    }

    /// Internal precision for a result requested to `requested` digits:
    /// max(1.2·requested + 30, 64) digits.
    pub fn working(requested: u32) -> Self {
        let d = (1.2 * f64::from(requested) + 30.0).ceil() as u32;
        Self::from_digits(d.max(64))
    }

    pub fn digits(self) -> u32 {
        self.digits
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn doubled(self) -> Self {
        Self::from_digits(self.digits * 2)
    }

    pub fn real(self, value: f64) -> Float {
        Float::with_val(self.bits, value)
    }

    pub fn zero(self) -> Float {
        Float::new(self.bits)
    }

    pub fn parse(self, text: &str) -> Result<Float> {
        let parsed =
            Float::parse(text.trim()).map_err(|e| Error::domain(format!("cannot parse {text:?} as a number: {e}")))?;
        Ok(Float::with_val(self.bits, parsed))
    }

    /// 10^(-digits + guard): the tolerance used by residual checks.
    pub fn tolerance(self, guard: i32) -> Float {
        pow10(self.bits, guard - self.digits as i32)
    }

    pub fn pi(self) -> Float {
        Float::with_val(self.bits, rug::float::Constant::Pi)
    }
}

/// 10^exponent at the given bit precision.
pub fn pow10(bits: u32, exponent: i32) -> Float {
    Float::with_val(bits, 10).pow(exponent)
}

/// Formats `x` as a plain decimal string with exactly `significant` significant
/// digits (rounded to nearest), never in exponent notation.
pub fn to_decimal(x: &Float, significant: usize) -> String {
    let significant = significant.max(1);
    if x.is_zero() {
        return if significant == 1 {
            "0".to_string()
        } else {
            format!("0.{}", "0".repeat(significant - 1))
        };
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let (negative, digits, exp) = x.to_sign_string_exp_round(10, Some(significant), Round::Nearest);
    // value = 0.DIGITS × 10^exp
    let exp = exp.expect("finite nonzero value has an exponent");
    let mut out = String::with_capacity(significant + 8);
    if negative {
        out.push('-');
    }
    if exp <= 0 {
        out.push_str("0.");
        out.push_str(&"0".repeat((-exp) as usize));
        out.push_str(&digits);
    } else if exp as usize >= digits.len() {
        out.push_str(&digits);
        out.push_str(&"0".repeat(exp as usize - digits.len()));
    } else {
        out.push_str(&digits[..exp as usize]);
        out.push('.');
        out.push_str(&digits[exp as usize..]);
    }
    out
}

/// Number of leading decimal digits on which `a` and `reference` agree,
/// measured as ⌊−log10 |a − reference| / |reference|⌋, capped at `cap`.
pub fn agreement_digits(a: &Float, reference: &Float, cap: u32) -> u32 {
    let bits = a.prec().max(reference.prec());
    let diff = Float::with_val(bits, a - reference).abs();
    if diff.is_zero() {
        return cap;
    }
    let scale = if reference.is_zero() {
        Float::with_val(bits, 1)
    } else {
        Float::with_val(bits, reference.abs_ref())
    };
    let rel = Float::with_val(bits, &diff / &scale);
    let digits = -rel.log10().to_f64();
    if digits <= 0.0 {
        0
    } else {
        (digits.floor() as u32).min(cap)
    }
}
