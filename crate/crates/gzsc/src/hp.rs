//! Fixed-precision binary floating point on top of `astro-float`, with a
//! small complex wrapper. Used where finite sums cancel catastrophically in
//! `f64` (Wigner sums, multinomial expansions at large degree).

use astro_float::{BigFloat, Consts, RoundingMode, Sign, Word};
use num_bigint::BigUint;
use num_complex::Complex64;

/// Working precision in bits.
pub const PREC: usize = 640;
const RM: RoundingMode = RoundingMode::ToEven;

#[derive(Clone, Debug)]
pub struct Hp(pub BigFloat);

impl Hp {
    pub fn zero() -> Self {
        Hp(BigFloat::from_u8(0, PREC))
    }

    pub fn from_f64(x: f64) -> Self {
        Hp(BigFloat::from_f64(x, PREC))
    }

    pub fn from_u64(x: u64) -> Self {
        Hp(BigFloat::from_u64(x, PREC))
    }

    pub fn from_biguint(x: &BigUint) -> Self {
        let mut acc = Self::zero();
        let base = Self::from_f64(2f64.powi(64));
        for d in x.to_u64_digits().iter().rev() {
            acc = acc.mul(&base).add(&Self::from_u64(*d));
        }
        acc
    }

    pub fn add(&self, o: &Self) -> Self {
        Hp(self.0.add(&o.0, PREC, RM))
    }

    pub fn sub(&self, o: &Self) -> Self {
        Hp(self.0.sub(&o.0, PREC, RM))
    }

    pub fn mul(&self, o: &Self) -> Self {
        Hp(self.0.mul(&o.0, PREC, RM))
    }

    pub fn div(&self, o: &Self) -> Self {
        Hp(self.0.div(&o.0, PREC, RM))
    }

    pub fn neg(&self) -> Self {
        Hp(self.0.neg())
    }

    pub fn sqrt(&self) -> Self {
        Hp(self.0.sqrt(PREC, RM))
    }

    pub fn powi(&self, n: usize) -> Self {
        if n == 0 {
            return Self::from_u64(1);
        }
        Hp(self.0.powi(n, PREC, RM))
    }

    pub fn cos(&self, cc: &mut Consts) -> Self {
        Hp(self.0.cos(PREC, RM, cc))
    }

    pub fn sin(&self, cc: &mut Consts) -> Self {
        Hp(self.0.sin(PREC, RM, cc))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        if self.0.is_zero() {
            return 0.0;
        }
        let (words, _, sign, exp, _) = self.0.as_raw_parts().expect("finite value");
        // words are 32 bits on wasm32, 64 elsewhere
        let bits = Word::BITS as i32;
        let mut frac = 0.0f64;
        let mut scale = 2f64.powi(-bits);
        for w in words.iter().rev().take((192 / bits) as usize) {
            frac += (*w as f64) * scale;
            scale *= 2f64.powi(-bits);
        }
        let v = frac * 2f64.powi(exp);
        if sign == Sign::Neg {
            -v
        } else {
            v
        }
    }
}

pub fn consts() -> Consts {
    Consts::new().expect("astro-float constants")
}

#[derive(Clone, Debug)]
pub struct HpComplex {
    pub re: Hp,
    pub im: Hp,
}

impl HpComplex {
    pub fn from_c64(z: Complex64) -> Self {
        Self { re: Hp::from_f64(z.re), im: Hp::from_f64(z.im) }
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn scale(&self, s: &Hp) -> Self {
        Self { re: self.re.mul(s), im: self.im.mul(s) }
    }
}

/// Ring operations needed by the multinomial expansion.
pub trait Coef: Clone {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_biguint(x: &BigUint) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn is_zero(&self) -> bool;
}

impl Coef for HpComplex {
    fn zero() -> Self {
        Self { re: Hp::zero(), im: Hp::zero() }
    }
    fn one() -> Self {
        Self { re: Hp::from_u64(1), im: Hp::zero() }
    }
    fn from_biguint(x: &BigUint) -> Self {
        Self { re: Hp::from_biguint(x), im: Hp::zero() }
    }
    fn add(&self, o: &Self) -> Self {
        Self { re: self.re.add(&o.re), im: self.im.add(&o.im) }
    }
    fn mul(&self, o: &Self) -> Self {
        Self {
            re: self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            im: self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        }
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

/// Gaussian rationals, for exactly unitary inputs.
pub type Gauss = num_complex::Complex<num_rational::BigRational>;

impl Coef for Gauss {
    fn zero() -> Self {
        num_traits::Zero::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn from_biguint(x: &BigUint) -> Self {
        Gauss::new(
            num_rational::BigRational::from_integer(x.clone().into()),
            num_traits::Zero::zero(),
        )
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn is_zero(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
}
