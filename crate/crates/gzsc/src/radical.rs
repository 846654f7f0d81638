//! Exact real numbers of the form `sum_s q_s sqrt(s)` with `s` squarefree.
//!
//! Closed under `+`, `-`, `*`; enough to carry Gelfand-Zetlin coefficients
//! (square roots of rationals) through products and commutators exactly.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Radical {
    terms: BTreeMap<u64, BigRational>,
}

impl Radical {
    pub fn rational(q: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !q.is_zero() {
            terms.insert(1, q);
        }
        Self { terms }
    }

    pub fn integer(x: i64) -> Self {
        Self::rational(BigRational::from_integer(BigInt::from(x)))
    }

    /// Nonnegative square root of a nonnegative rational.
    pub fn sqrt(q: Ratio<i64>) -> Self {
        assert!(q >= Ratio::zero(), "square root of negative rational {q}");
        if q.is_zero() {
            return Self::default();
        }
        let (a, b) = (*q.numer() as u128, *q.denom() as u128);
        // sqrt(a/b) = sqrt(a b) / b
        let (outside, inside) = split_square(a * b);
        let coeff = BigRational::new(BigInt::from(outside), BigInt::from(b));
        let mut terms = BTreeMap::new();
        terms.insert(u64::try_from(inside).expect("squarefree part overflows u64"), coeff);
        Self { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value when it is rational.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&1).cloned(),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(s, q)| q.to_f64().unwrap_or(f64::NAN) * (*s as f64).sqrt())
            .sum()
    }

    fn add_term(&mut self, s: u64, q: BigRational) {
        if q.is_zero() {
            return;
        }
        let entry = self.terms.entry(s).or_insert_with(BigRational::zero);
        *entry += q;
        if entry.is_zero() {
            self.terms.remove(&s);
        }
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        if q.is_zero() {
            return Self::default();
        }
        Self {
            terms: self.terms.iter().map(|(s, c)| (*s, c * q)).collect(),
        }
    }

    pub fn abs_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|(s, q)| q.abs().to_f64().unwrap_or(f64::INFINITY) * (*s as f64).sqrt())
            .sum()
    }
}

/// Writes `x = outside^2 * inside` with `inside` squarefree.
fn split_square(mut x: u128) -> (u128, u128) {
    let (mut outside, mut inside) = (1u128, 1u128);
    let mut d = 2u128;
    while d * d <= x {
        let mut e = 0;
        while x.is_multiple_of(d) {
            x /= d;
            e += 1;
        }
        for _ in 0..e / 2 {
            outside *= d;
        }
        if e % 2 == 1 {
            inside *= d;
        }
        d += if d == 2 { 1 } else { 2 };
    }
    (outside, inside * x)
}

impl Zero for Radical {
    fn zero() -> Self {
        Self::default()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for Radical {
    fn one() -> Self {
        Self::integer(1)
    }
}

impl Add for Radical {
    type Output = Radical;
    fn add(mut self, rhs: Radical) -> Radical {
        for (s, q) in rhs.terms {
            self.add_term(s, q);
        }
        self
    }
}

impl Neg for Radical {
    type Output = Radical;
    fn neg(self) -> Radical {
        Radical {
            terms: self.terms.into_iter().map(|(s, q)| (s, -q)).collect(),
        }
    }
}

impl Sub for Radical {
    type Output = Radical;
    fn sub(self, rhs: Radical) -> Radical {
        self + (-rhs)
    }
}

impl Mul for Radical {
    type Output = Radical;
    fn mul(self, rhs: Radical) -> Radical {
        &self * &rhs
    }
}

impl<'a> Mul<&'a Radical> for &'a Radical {
    type Output = Radical;
    fn mul(self, rhs: &Radical) -> Radical {
        let mut out = Radical::default();
        for (s1, q1) in &self.terms {
            for (s2, q2) in &rhs.terms {
                let g = s1.gcd(s2);
                let s = (s1 / g) * (s2 / g);
                out.add_term(s, q1 * q2 * BigRational::from_integer(BigInt::from(g)));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_products() {
        let a = Radical::sqrt(Ratio::new(2, 3));
        let b = Radical::sqrt(Ratio::new(3, 2));
        assert_eq!((&a * &b).as_rational(), Some(BigRational::one()));
        let c = Radical::sqrt(Ratio::new(8, 1));
        assert!((c.to_f64() - 8f64.sqrt()).abs() < 1e-15);
        let two = &Radical::sqrt(Ratio::new(2, 1)) * &Radical::sqrt(Ratio::new(2, 1));
        assert_eq!(two, Radical::integer(2));
    }

    #[test]
    fn cancellation() {
        let a = Radical::sqrt(Ratio::new(5, 1)) + Radical::integer(1);
        let b = a.clone() - Radical::sqrt(Ratio::new(20, 4));
        assert_eq!(b, Radical::integer(1));
        assert!((a.clone() - a).is_zero());
    }
}
