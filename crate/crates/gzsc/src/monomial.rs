//! The representation with highest weight `(p, 0, ..., 0)` on homogeneous
//! polynomials of degree `p`.
//!
//! `g` acts by `(g.f)(z) = f(g^T z)`, so `E_ab` acts as `z_a d/dz_b` and the
//! normalized monomials `b_mu = sqrt(p!/mu!) z^mu` form an orthonormal weight
//! basis. Matrix elements are `R(g)[mu, nu] = <g b_nu, b_mu>`.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::combinatorics::compositions;
use crate::error::{GzError, Result};
use crate::hp::{consts, Coef, Gauss, Hp, HpComplex};
use crate::linalg::{c, herm_eigvals, unitary_log, CMat, I};
use crate::sparse::{expm_action, Sparse};

pub struct MonomialModule {
    n: usize,
    p: i64,
    basis: Vec<Vec<i64>>,
    index: HashMap<Vec<i64>, usize>,
}

impl MonomialModule {
    pub fn new(n: usize, p: i64) -> Self {
        let basis = compositions(n, p);
        let index = basis.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        Self { n, p, basis, index }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> i64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<i64>] {
        &self.basis
    }

    pub fn index_of(&self, mu: &[i64]) -> Option<usize> {
        self.index.get(mu).copied()
    }

    /// `E_ab = z_a d/dz_b` (1-based) on the normalized monomials.
    pub fn generator(&self, a: usize, b: usize) -> Sparse<f64> {
        let d = self.dim();
        let (a, b) = (a - 1, b - 1);
        let t = self
            .basis
            .iter()
            .enumerate()
            .filter_map(|(i, mu)| {
                if a == b {
                    return Some((i, i, mu[a] as f64));
                }
                if mu[b] == 0 {
                    return None;
                }
                let mut nu = mu.clone();
                nu[b] -= 1;
                nu[a] += 1;
                let j = self.index[&nu];
                Some((j, i, ((mu[b] * (mu[a] + 1)) as f64).sqrt()))
            })
            .collect();
        Sparse::from_triplets(d, d, t)
    }

    pub fn algebra_matrix(&self, x: &CMat) -> Sparse<Complex64> {
        let d = self.dim();
        let mut acc = Sparse::zeros(d, d);
        for a in 1..=self.n {
            for b in 1..=self.n {
                let coef = x[(a - 1, b - 1)];
                if coef.norm() > 0.0 {
                    acc = acc.plus(&self.generator(a, b).to_complex().scale(&coef));
                }
            }
        }
        acc
    }

    /// `R(g) v` by Chebyshev expansion of the exponential.
    pub fn group_action(&self, g: &CMat, v: &[Complex64]) -> Vec<Complex64> {
        let x = unitary_log(g);
        let h = &x * I;
        let phi = herm_eigvals(&h);
        let hi = self.p as f64 * phi[0];
        let lo = self.p as f64 * phi[phi.len() - 1];
        expm_action(&self.algebra_matrix(&h), v, Some((lo - 1e-9, hi + 1e-9)))
    }

    /// Dense `R(g)` for small degree.
    pub fn group_matrix(&self, g: &CMat) -> CMat {
        let x = unitary_log(g);
        crate::linalg::expm_skew(&self.algebra_matrix(&x).to_dense())
    }

    /// `R(g)[mu, nu]` in double precision via the sparse exponential.
    pub fn element(&self, g: &CMat, nu: &[i64], mu: &[i64]) -> Result<Complex64> {
        let (Some(src), Some(dst)) = (self.index_of(nu), self.index_of(mu)) else {
            return Err(GzError::Invalid(format!("weights {nu:?}, {mu:?} not of degree {}", self.p)));
        };
        let mut v = vec![Complex64::zero(); self.dim()];
        v[src] = c(1.0, 0.0);
        Ok(self.group_action(g, &v)[dst])
    }
}

/// Squared norm of `z^nu` in the convention `||z^nu||^2 = nu! / p!`.
pub fn monomial_norm_sq(nu: &[i64]) -> BigRational {
    let p: i64 = nu.iter().sum();
    let num: BigUint = nu.iter().map(|x| factorial(*x)).product();
    BigRational::new(num.into(), factorial(p).into())
}

fn factorial(n: i64) -> BigUint {
    (1..=n.max(0) as u64).map(BigUint::from).product::<BigUint>().max(BigUint::one())
}

fn multinomial(parts: &[i64]) -> BigUint {
    let total: i64 = parts.iter().sum();
    parts.iter().map(|x| factorial(*x)).fold(factorial(total), |acc, f| acc / f)
}

/// Coefficient of `z^mu` in `prod_j (sum_k g[k][j] z_k)^{nu_j}`.
pub fn expansion_coefficient<C: Coef>(g: &[Vec<C>], nu: &[i64], mu: &[i64]) -> C {
    let n = nu.len();
    if nu.iter().sum::<i64>() != mu.iter().sum::<i64>() {
        return C::zero();
    }
    // powers[k][j][m] = g[k][j]^m
    let powers: Vec<Vec<Vec<C>>> = (0..n)
        .map(|k| {
            (0..n)
                .map(|j| {
                    let mut v = vec![C::one()];
                    for m in 1..=nu[j] as usize {
                        v.push(v[m - 1].mul(&g[k][j]));
                    }
                    v
                })
                .collect()
        })
        .collect();
    let factor_terms = |j: usize| -> Vec<(Vec<i64>, C)> {
        compositions(n, nu[j])
            .into_iter()
            .filter(|kappa| kappa.iter().zip(mu).all(|(a, b)| a <= b))
            .map(|kappa| {
                let mut coef = C::from_biguint(&multinomial(&kappa));
                for (k, e) in kappa.iter().enumerate() {
                    coef = coef.mul(&powers[k][j][*e as usize]);
                }
                (kappa, coef)
            })
            .collect()
    };
    let active: Vec<usize> = (0..n).filter(|&j| nu[j] > 0).collect();
    let Some((&last, rest)) = active.split_last() else {
        return C::one();
    };
    let mut poly: HashMap<Vec<i64>, C> = HashMap::new();
    poly.insert(vec![0; n], C::one());
    for &j in rest {
        let terms = factor_terms(j);
        let mut next: HashMap<Vec<i64>, C> = HashMap::new();
        for (e, a) in &poly {
            for (kappa, b) in &terms {
                let s: Vec<i64> = e.iter().zip(kappa).map(|(x, y)| x + y).collect();
                if s.iter().zip(mu).any(|(x, m)| x > m) {
                    continue;
                }
                let prod = a.mul(b);
                next.entry(s).and_modify(|v| *v = v.add(&prod)).or_insert(prod);
            }
        }
        poly = next;
    }
    // the last factor only needs the complementary exponent
    let mut acc = C::zero();
    for (e, a) in &poly {
        let kappa: Vec<i64> = mu.iter().zip(e).map(|(m, x)| m - x).collect();
        if kappa.iter().any(|x| *x < 0) || kappa.iter().sum::<i64>() != nu[last] {
            continue;
        }
        let mut coef = C::from_biguint(&multinomial(&kappa));
        for (k, x) in kappa.iter().enumerate() {
            coef = coef.mul(&powers[k][last][*x as usize]);
        }
        acc = acc.add(&a.mul(&coef));
    }
    acc
}

/// Matrix element with its provenance.
#[derive(Clone, Debug)]
pub struct ExactElement {
    pub value: Complex64,
    pub exact: bool,
}

/// `R(g)[mu, nu]` by multinomial expansion in high precision; `g` entries are
/// taken as exact binary numbers.
pub fn exact_matrix_element(g: &CMat, nu: &[i64], mu: &[i64]) -> Result<ExactElement> {
    let n = g.nrows();
    if nu.len() != n || mu.len() != n || nu.iter().chain(mu).any(|x| *x < 0) {
        return Err(GzError::Invalid("weights must be nonnegative of length n".into()));
    }
    let gh: Vec<Vec<HpComplex>> =
        (0..n).map(|k| (0..n).map(|j| HpComplex::from_c64(g[(k, j)])).collect()).collect();
    let coef = expansion_coefficient(&gh, nu, mu);
    let ratio = Hp::from_biguint(&nu_fact(mu)).div(&Hp::from_biguint(&nu_fact(nu))).sqrt();
    Ok(ExactElement { value: coef.scale(&ratio).to_c64(), exact: false })
}

fn nu_fact(nu: &[i64]) -> BigUint {
    nu.iter().map(|x| factorial(*x)).product()
}

/// Exact element for Gaussian-rational `g`: returns the expansion
/// coefficient `C` and `mu!/nu!`, with `R(g)[mu, nu] = C sqrt(mu!/nu!)`.
pub fn exact_matrix_element_gauss(g: &[Vec<Gauss>], nu: &[i64], mu: &[i64]) -> (Gauss, BigRational) {
    let coef = expansion_coefficient(g, nu, mu);
    (coef, BigRational::new(nu_fact(mu).into(), nu_fact(nu).into()))
}

/// Wigner `d^j_{m, mp}(beta)` with `j = j2/2`, `m = m2/2`, `mp = mp2/2`,
/// from the finite sum in high precision.
pub fn wigner_d(j2: i64, m2: i64, mp2: i64, beta: f64) -> Result<f64> {
    if j2 < 0 || m2.abs() > j2 || mp2.abs() > j2 || (j2 - m2) % 2 != 0 || (j2 - mp2) % 2 != 0 {
        return Err(GzError::Invalid(format!("invalid (2j, 2m, 2m') = ({j2}, {m2}, {mp2})")));
    }
    // standard form d^j_{a b}: a = m (row), b = mp (column)
    let (jpa, jma, jpb, jmb) = ((j2 + m2) / 2, (j2 - m2) / 2, (j2 + mp2) / 2, (j2 - mp2) / 2);
    let mut cc = consts();
    let half = Hp::from_f64(beta).div(&Hp::from_u64(2));
    let (co, si) = (half.cos(&mut cc), half.sin(&mut cc));
    let pref = Hp::from_biguint(&(factorial(jpa) * factorial(jma) * factorial(jpb) * factorial(jmb))).sqrt();
    let mut acc = Hp::zero();
    // k runs over the nonnegative arguments of all factorials
    let a_minus_b = (m2 - mp2) / 2;
    let kmin = 0.max(-a_minus_b);
    let kmax = jpb.min(jma);
    for k in kmin..=kmax {
        let den = factorial(jpb - k) * factorial(k) * factorial(jma - k) * factorial(k + a_minus_b);
        let cpow = (j2 - 2 * k - a_minus_b) as usize;
        let spow = (2 * k + a_minus_b) as usize;
        let term = co.powi(cpow).mul(&si.powi(spow)).div(&Hp::from_biguint(&den));
        acc = if (k + a_minus_b) % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
    }
    Ok(acc.mul(&pref).to_f64())
}

/// Binomial helper exposed for oracle tests.
pub fn binom(n: u64, k: u64) -> BigUint {
    binomial(BigUint::from(n), BigUint::from(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{haar_unitary, max_abs, rotation, unitarity_defect};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn wigner_closed_forms() {
        for beta in [0.0, 0.4, 1.3, 2.9] {
            let d = wigner_d(2, 0, 0, beta).unwrap();
            assert!((d - f64::cos(beta)).abs() < 1e-15);
            for j2 in 0..12 {
                let top = wigner_d(j2, j2, j2, beta).unwrap();
                assert!((top - (beta / 2.0).cos().powi(j2 as i32)).abs() < 1e-14);
            }
        }
        assert_eq!(wigner_d(6, 2, 2, 0.0).unwrap(), 1.0);
        assert_eq!(wigner_d(6, 2, 0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn p1_is_the_matrix() {
        let beta = 0.8;
        let g = rotation(2, 0, 1, beta);
        let m = MonomialModule::new(2, 1);
        let r = m.group_matrix(&g);
        assert!(max_abs(&(r - &g)) < 1e-14);
        let e = exact_matrix_element(&g, &[1, 0], &[0, 1]).unwrap();
        assert!((e.value - g[(1, 0)]).norm() < 1e-15);
    }

    #[test]
    fn expansion_vs_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = haar_unitary(3, &mut rng);
        let m = MonomialModule::new(3, 5);
        let r = m.group_matrix(&g);
        assert!(unitarity_defect(&r) < 1e-12);
        for (i, mu) in m.basis().iter().enumerate() {
            for (j, nu) in m.basis().iter().enumerate() {
                let e = exact_matrix_element(&g, nu, mu).unwrap().value;
                assert!((e - r[(i, j)]).norm() < 1e-12, "{mu:?} {nu:?}");
            }
        }
    }

    #[test]
    fn norms() {
        assert_eq!(monomial_norm_sq(&[3, 0]), monomial_norm_sq(&[0, 3]));
        assert_eq!(monomial_norm_sq(&[1, 1]), BigRational::new(1.into(), 2.into()));
    }
}
