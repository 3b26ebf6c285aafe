use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::coeff::Coeff;
use crate::error::{Error, Result};

/// Sparse univariate polynomial. Zero coefficients are never stored.
///
/// The variable tag only affects rendering; equality compares coefficients.
#[derive(Clone, Debug)]
pub struct UniPoly<C = BigInt> {
    terms: BTreeMap<u32, C>,
    var: char,
}

impl<C: Coeff> PartialEq for UniPoly<C> {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl<C: Coeff> Eq for UniPoly<C> where C: Eq {}

impl<C: Coeff> UniPoly<C> {
    pub fn zero(var: char) -> Self {
        UniPoly {
            terms: BTreeMap::new(),
            var,
        }
    }

    pub fn one(var: char) -> Self {
        Self::constant(C::one(), var)
    }

    pub fn constant(c: C, var: char) -> Self {
        Self::monomial(c, 0, var)
    }

    pub fn monomial(c: C, exp: u32, var: char) -> Self {
        let mut p = Self::zero(var);
        p.add_term(exp, c);
        p
    }

    /// The polynomial `var` itself.
    pub fn var(var: char) -> Self {
        Self::monomial(C::one(), 1, var)
    }

    pub fn from_terms<I: IntoIterator<Item = (u32, C)>>(var: char, terms: I) -> Self {
        let mut p = Self::zero(var);
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn variable(&self) -> char {
        self.var
    }

    pub fn with_var(mut self, var: char) -> Self {
        self.var = var;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().next_back().copied()
    }

    pub fn coeff(&self, exp: u32) -> C {
        self.terms.get(&exp).cloned().unwrap_or_else(C::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &C)> {
        self.terms.iter().map(|(&e, c)| (e, c))
    }

    pub fn leading(&self) -> Option<(u32, &C)> {
        self.terms.iter().next_back().map(|(&e, c)| (e, c))
    }

    pub fn add_term(&mut self, exp: u32, c: C) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(exp).or_insert_with(C::zero);
        *slot = slot.clone() + c;
        if slot.is_zero() {
            self.terms.remove(&exp);
        }
    }

    pub fn scale(&self, c: &C) -> Self {
        UniPoly::from_terms(
            self.var,
            self.terms.iter().map(|(&e, v)| (e, v.clone() * c.clone())),
        )
    }

    /// Multiply by `var^k`.
    pub fn shift(&self, k: u32) -> Self {
        UniPoly {
            terms: self
                .terms
                .iter()
                .map(|(&e, c)| (e + k, c.clone()))
                .collect(),
            var: self.var,
        }
    }

    /// Substitute `var -> var^k`.
    pub fn substitute_power(&self, k: u32) -> Self {
        UniPoly {
            terms: self
                .terms
                .iter()
                .map(|(&e, c)| (e * k, c.clone()))
                .collect(),
            var: self.var,
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one(self.var);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn map<D: Coeff>(&self, f: impl Fn(&C) -> D) -> UniPoly<D> {
        UniPoly::from_terms(self.var, self.terms.iter().map(|(&e, c)| (e, f(c))))
    }

    /// Horner evaluation at an exact point.
    pub fn eval(&self, x: &C) -> C {
        let Some(top) = self.degree() else {
            return C::zero();
        };
        let mut acc = C::zero();
        for e in (0..=top).rev() {
            acc = acc * x.clone();
            if let Some(c) = self.terms.get(&e) {
                acc = acc + c.clone();
            }
        }
        acc
    }
}

impl UniPoly<BigInt> {
    /// Horner evaluation in floating point.
    pub fn eval_f64(&self, x: f64) -> f64 {
        let Some(top) = self.degree() else {
            return 0.0;
        };
        let mut acc = 0.0;
        for e in (0..=top).rev() {
            acc *= x;
            if let Some(c) = self.terms.get(&e) {
                acc += c.to_f64().unwrap_or(f64::NAN);
            }
        }
        acc
    }

    /// `(1 - var)^k`.
    pub fn one_minus_var_pow(k: u32, var: char) -> Self {
        let base = UniPoly::from_terms(var, [(0, BigInt::from(1)), (1, BigInt::from(-1))]);
        base.pow(k)
    }

    /// Exact quotient `self / den`; fails when the remainder is nonzero.
    pub fn exact_divide(&self, den: &Self) -> Result<Self> {
        let (den_deg, den_lead) = den
            .leading()
            .map(|(e, c)| (e, c.clone()))
            .ok_or_else(|| Error::Argument("division by the zero polynomial".into()))?;
        let mut rem = self.clone();
        let mut quot = UniPoly::zero(self.var);
        while let Some((deg, lead)) = rem.leading().map(|(e, c)| (e, c.clone())) {
            if deg < den_deg {
                break;
            }
            if !(&lead % &den_lead).is_zero() {
                return Err(Error::Divisibility(format!(
                    "coefficient {lead} is not divisible by {den_lead}"
                )));
            }
            let q = UniPoly::monomial(&lead / &den_lead, deg - den_deg, self.var);
            rem = &rem - &(&q * den);
            quot = &quot + &q;
        }
        if !rem.is_zero() {
            return Err(Error::Divisibility(format!(
                "({self}) / ({den}) leaves remainder {rem}"
            )));
        }
        Ok(quot)
    }
}

impl<C: Coeff> Add for &UniPoly<C> {
    type Output = UniPoly<C>;
    fn add(self, rhs: &UniPoly<C>) -> UniPoly<C> {
        let mut out = self.clone();
        for (&e, c) in &rhs.terms {
            out.add_term(e, c.clone());
        }
        out
    }
}

impl<C: Coeff> Sub for &UniPoly<C> {
    type Output = UniPoly<C>;
    fn sub(self, rhs: &UniPoly<C>) -> UniPoly<C> {
        let mut out = self.clone();
        for (&e, c) in &rhs.terms {
            out.add_term(e, -c.clone());
        }
        out
    }
}

impl<C: Coeff> Mul for &UniPoly<C> {
    type Output = UniPoly<C>;
    fn mul(self, rhs: &UniPoly<C>) -> UniPoly<C> {
        let mut out = UniPoly::zero(self.var);
        for (&ea, ca) in &self.terms {
            for (&eb, cb) in &rhs.terms {
                out.add_term(ea + eb, ca.clone() * cb.clone());
            }
        }
        out
    }
}

impl<C: Coeff> Neg for &UniPoly<C> {
    type Output = UniPoly<C>;
    fn neg(self) -> UniPoly<C> {
        self.map(|c| -c.clone())
    }
}

macro_rules! forward_owned {
    ($ty:ident, $($tr:ident :: $m:ident),*) => {$(
        impl<C: Coeff> $tr for $ty<C> {
            type Output = $ty<C>;
            fn $m(self, rhs: $ty<C>) -> $ty<C> {
                (&self).$m(&rhs)
            }
        }
    )*};
}
forward_owned!(UniPoly, Add::add, Sub::sub, Mul::mul);

/// Joins rendered `(negative, magnitude, monomial)` terms as
/// `1 + 3*b - 2*b^2`.
pub(super) fn render_terms<'a>(
    f: &mut fmt::Formatter<'_>,
    terms: impl Iterator<Item = (bool, String, String)> + 'a,
) -> fmt::Result {
    let mut first = true;
    for (negative, magnitude, monomial) in terms {
        let body = match (monomial.is_empty(), magnitude == "1") {
            (true, _) => magnitude,
            (false, true) => monomial,
            (false, false) => format!("{magnitude}*{monomial}"),
        };
        match (first, negative) {
            (true, false) => write!(f, "{body}")?,
            (true, true) => write!(f, "-{body}")?,
            (false, false) => write!(f, " + {body}")?,
            (false, true) => write!(f, " - {body}")?,
        }
        first = false;
    }
    if first {
        f.write_str("0")?;
    }
    Ok(())
}

pub(super) fn render_power(var: char, e: u32) -> String {
    match e {
        0 => String::new(),
        1 => var.to_string(),
        _ => format!("{var}^{e}"),
    }
}

impl<C: Coeff> fmt::Display for UniPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        render_terms(
            f,
            self.terms.iter().map(|(&e, c)| {
                (
                    c.renders_negative(),
                    c.render_magnitude(),
                    render_power(self.var, e),
                )
            }),
        )
    }
}
