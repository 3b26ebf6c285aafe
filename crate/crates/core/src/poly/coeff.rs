use std::fmt::Debug;
use std::ops::{Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_traits::{One, Signed, Zero};

/// `a + b·i` with exact integer parts.
pub type GaussianInt = Complex<BigInt>;

pub fn gaussian(re: i64, im: i64) -> GaussianInt {
    Complex::new(BigInt::from(re), BigInt::from(im))
}

/// Exact ring usable as polynomial coefficients.
pub trait Coeff:
    Clone + PartialEq + Debug + Zero + One + Sub<Output = Self> + Neg<Output = Self> + Send + Sync
{
    /// Whether the coefficient renders with a leading minus sign.
    fn renders_negative(&self) -> bool;

    /// Rendering of the magnitude, parenthesised when it is a compound term.
    fn render_magnitude(&self) -> String;
}

impl Coeff for BigInt {
    fn renders_negative(&self) -> bool {
        self.is_negative()
    }

    fn render_magnitude(&self) -> String {
        self.abs().to_string()
    }
}

impl Coeff for GaussianInt {
    fn renders_negative(&self) -> bool {
        if self.im.is_zero() {
            self.re.is_negative()
        } else {
            self.re.is_zero() && self.im.is_negative()
        }
    }

    fn render_magnitude(&self) -> String {
        let unit = |v: &BigInt| {
            if v.abs().is_one() {
                String::new()
            } else {
                v.abs().to_string()
            }
        };
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => self.re.abs().to_string(),
            (true, false) => format!("{}i", unit(&self.im)),
            (false, false) => {
                let sign = if self.im.is_negative() { '-' } else { '+' };
                format!("({}{}{}i)", self.re, sign, unit(&self.im))
            }
        }
    }
}
