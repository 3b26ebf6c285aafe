use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use super::coeff::Coeff;
use super::uni::{render_power, render_terms, UniPoly};

/// Sparse integer polynomial in `b` (β) and `g` (γ). Keys are
/// `(β-exponent, γ-exponent)`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct BiPoly {
    terms: BTreeMap<(u32, u32), BigInt>,
}

impl BiPoly {
    pub fn zero() -> Self {
        BiPoly::default()
    }

    pub fn one() -> Self {
        let mut p = BiPoly::zero();
        p.add_term(0, 0, BigInt::one());
        p
    }

    /// `β^k · p(γ)`.
    pub fn beta_power_times(k: u32, gamma_poly: &UniPoly) -> Self {
        let mut out = BiPoly::zero();
        for (e, c) in gamma_poly.terms() {
            out.add_term(k, e, c.clone());
        }
        out
    }

    pub fn add_term(&mut self, beta_exp: u32, gamma_exp: u32, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry((beta_exp, gamma_exp)).or_default();
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&(beta_exp, gamma_exp));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, beta_exp: u32, gamma_exp: u32) -> BigInt {
        self.terms
            .get(&(beta_exp, gamma_exp))
            .cloned()
            .unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), &BigInt)> {
        self.terms.iter().map(|(&k, c)| (k, c))
    }

    pub fn beta_degree(&self) -> Option<u32> {
        self.terms.keys().map(|&(b, _)| b).max()
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        let mut out = BiPoly::zero();
        for (&(b, g), v) in &self.terms {
            out.add_term(b, g, v * c);
        }
        out
    }

    /// Fix `β` and return the remaining polynomial in `γ`.
    pub fn eval_beta(&self, beta: &BigInt) -> UniPoly {
        let mut out = UniPoly::zero('g');
        for (&(b, g), c) in &self.terms {
            out.add_term(g, c * beta.pow(b));
        }
        out
    }

    /// Fix `γ` (in any coefficient ring containing the integers) and return
    /// the remaining polynomial in `β`.
    pub fn substitute_gamma<C: Coeff + From<BigInt>>(&self, gamma: &C) -> UniPoly<C> {
        let mut out = UniPoly::zero('b');
        let mut powers: Vec<C> = vec![C::one()];
        for (&(b, g), c) in &self.terms {
            while powers.len() <= g as usize {
                let next = powers.last().cloned().unwrap() * gamma.clone();
                powers.push(next);
            }
            out.add_term(b, C::from(c.clone()) * powers[g as usize].clone());
        }
        out
    }

    pub fn eval_f64(&self, beta: f64, gamma: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&(b, g), c)| {
                c.to_f64().unwrap_or(f64::NAN) * beta.powi(b as i32) * gamma.powi(g as i32)
            })
            .sum()
    }
}

impl Add for &BiPoly {
    type Output = BiPoly;
    fn add(self, rhs: &BiPoly) -> BiPoly {
        let mut out = self.clone();
        for (&(b, g), c) in &rhs.terms {
            out.add_term(b, g, c.clone());
        }
        out
    }
}

impl Sub for &BiPoly {
    type Output = BiPoly;
    fn sub(self, rhs: &BiPoly) -> BiPoly {
        self + &(-rhs)
    }
}

impl Neg for &BiPoly {
    type Output = BiPoly;
    fn neg(self) -> BiPoly {
        BiPoly {
            terms: self.terms.iter().map(|(&k, c)| (k, -c)).collect(),
        }
    }
}

impl Mul for &BiPoly {
    type Output = BiPoly;
    fn mul(self, rhs: &BiPoly) -> BiPoly {
        let mut out = BiPoly::zero();
        for (&(b1, g1), c1) in &self.terms {
            for (&(b2, g2), c2) in &rhs.terms {
                out.add_term(b1 + b2, g1 + g2, c1 * c2);
            }
        }
        out
    }
}

impl Add for BiPoly {
    type Output = BiPoly;
    fn add(self, rhs: BiPoly) -> BiPoly {
        &self + &rhs
    }
}

impl Mul for BiPoly {
    type Output = BiPoly;
    fn mul(self, rhs: BiPoly) -> BiPoly {
        &self * &rhs
    }
}

impl fmt::Display for BiPoly {
    /// Graded order: total degree ascending, higher β power first within a
    /// degree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut keys: Vec<(u32, u32)> = self.terms.keys().copied().collect();
        keys.sort_by_key(|&(b, g)| (b + g, std::cmp::Reverse(b)));
        render_terms(
            f,
            keys.into_iter().map(|(b, g)| {
                let c = &self.terms[&(b, g)];
                let monomial = [render_power('b', b), render_power('g', g)]
                    .into_iter()
                    .filter(|s| !s.is_empty())
                    .collect::<Vec<_>>()
                    .join("*");
                (c.renders_negative(), c.render_magnitude(), monomial)
            }),
        )
    }
}
