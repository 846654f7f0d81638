//! Irreducible representations of U(n) in the Gelfand-Zetlin basis.
//!
//! Raising operators use the orthonormal-basis coefficients with the
//! positive square root; lowering operators are their transposes and the
//! remaining root vectors are nested commutators of adjacent ones.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use itertools::Itertools;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};

use crate::combinatorics::{enumerate_patterns, GzPattern, HighestWeight, RhoShift, Q};
use crate::error::{GzError, Result};
use crate::linalg::{c, expm_skew, unitary_log, CMat, I, TAU};
use crate::radical::Radical;
use crate::sparse::{expm_action, Sparse};

/// Largest dimension for dense group matrices.
pub const DENSE_GUARD: usize = 4000;
/// Largest dimension for assembling Gelfand invariants.
pub const INVARIANT_GUARD: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LieGenerator {
    /// `E_kk`
    Diag(usize),
    /// `E_{k,k+1}`
    Raise(usize),
    /// `E_{k+1,k}`
    Lower(usize),
    /// `E_ab`, any `a, b`
    General(usize, usize),
}

impl LieGenerator {
    fn indices(self) -> (usize, usize) {
        match self {
            LieGenerator::Diag(k) => (k, k),
            LieGenerator::Raise(k) => (k, k + 1),
            LieGenerator::Lower(k) => (k + 1, k),
            LieGenerator::General(a, b) => (a, b),
        }
    }
}

type GeneratorCache = Mutex<HashMap<(usize, usize), Arc<Sparse<f64>>>>;

pub struct GzModule {
    lambda: HighestWeight,
    patterns: Vec<GzPattern>,
    index: HashMap<Vec<i64>, usize>,
    cache: GeneratorCache,
}

impl GzModule {
    pub fn new(lambda: &HighestWeight) -> Self {
        let patterns = enumerate_patterns(lambda);
        let index = patterns.iter().enumerate().map(|(i, g)| (g.interior(), i)).collect();
        Self { lambda: lambda.clone(), patterns, index, cache: Mutex::new(HashMap::new()) }
    }

    pub fn lambda(&self) -> &HighestWeight {
        &self.lambda
    }

    pub fn n(&self) -> usize {
        self.lambda.n()
    }

    pub fn dim(&self) -> usize {
        self.patterns.len()
    }

    pub fn patterns(&self) -> &[GzPattern] {
        &self.patterns
    }

    pub fn index_of(&self, interior: &[i64]) -> Option<usize> {
        self.index.get(interior).copied()
    }

    pub fn basis_vector(&self, i: usize) -> Vec<Complex64> {
        let mut v = vec![Complex64::zero(); self.dim()];
        v[i] = c(1.0, 0.0);
        v
    }

    /// Squared coefficients of `E_{k,k+1}`: `(target, source, a^2)`.
    fn raising_squares(&self, k: usize) -> Vec<(usize, usize, Ratio<i64>)> {
        let mut out = Vec::new();
        for (src, pat) in self.patterns.iter().enumerate() {
            let shifted = |row: &[i64]| -> Vec<i64> {
                row.iter().enumerate().map(|(i, x)| x - i as i64).collect()
            };
            let lk = shifted(pat.row(k));
            let lup = shifted(pat.row(k + 1));
            let ldown = if k > 1 { shifted(pat.row(k - 1)) } else { vec![] };
            for i in 0..k {
                let mut interior = pat.interior();
                interior[crate::combinatorics::flat_index(k, i)] += 1;
                let Some(dst) = self.index_of(&interior) else { continue };
                let x = lk[i];
                let mut num: i64 = -lup.iter().map(|y| x - y).product::<i64>();
                num *= ldown.iter().map(|y| x - y + 1).product::<i64>();
                let den: i64 = (0..k)
                    .filter(|&j| j != i)
                    .map(|j| (x - lk[j]) * (x - lk[j] + 1))
                    .product();
                out.push((dst, src, Ratio::new(num, den)));
            }
        }
        out
    }

    fn adjacent(&self, a: usize, b: usize) -> Sparse<f64> {
        let d = self.dim();
        if a == b {
            let t = self
                .patterns
                .iter()
                .enumerate()
                .map(|(i, g)| (i, i, (g.row_sum(a) - g.row_sum(a - 1)) as f64))
                .collect();
            return Sparse::from_triplets(d, d, t);
        }
        let k = a.min(b);
        let t: Vec<(usize, usize, f64)> = self
            .raising_squares(k)
            .into_iter()
            .map(|(i, j, q)| (i, j, q.to_f64().unwrap().sqrt()))
            .collect();
        let raise = Sparse::from_triplets(d, d, t);
        if a < b {
            raise
        } else {
            raise.transpose()
        }
    }

    fn check(&self, a: usize, b: usize) -> Result<()> {
        let n = self.n();
        if a == 0 || b == 0 || a > n || b > n {
            return Err(GzError::Invalid(format!("generator E_{a}{b} outside u({n})")));
        }
        Ok(())
    }

    /// Matrix of `E_ab` in the GZ basis.
    pub fn generator(&self, gen: LieGenerator) -> Result<Arc<Sparse<f64>>> {
        let (a, b) = gen.indices();
        self.check(a, b)?;
        if let Some(m) = self.cache.lock().unwrap().get(&(a, b)) {
            return Ok(m.clone());
        }
        let m = if a == b || a.abs_diff(b) == 1 {
            self.adjacent(a, b)
        } else if a < b {
            let left = self.generator(LieGenerator::General(a, b - 1))?;
            let right = self.generator(LieGenerator::General(b - 1, b))?;
            left.commutator(&right)
        } else {
            self.generator(LieGenerator::General(b, a))?.transpose()
        };
        let m = Arc::new(m);
        self.cache.lock().unwrap().insert((a, b), m.clone());
        Ok(m)
    }

    /// Exact matrix of `E_ab` with square-root-of-rational entries.
    pub fn generator_exact(&self, gen: LieGenerator) -> Result<Sparse<Radical>> {
        let (a, b) = gen.indices();
        self.check(a, b)?;
        let d = self.dim();
        if a == b {
            let t = self
                .patterns
                .iter()
                .enumerate()
                .map(|(i, g)| (i, i, Radical::integer(g.row_sum(a) - g.row_sum(a - 1))))
                .collect();
            return Ok(Sparse::from_triplets(d, d, t));
        }
        if a.abs_diff(b) == 1 {
            let t = self
                .raising_squares(a.min(b))
                .into_iter()
                .map(|(i, j, q)| (i, j, Radical::sqrt(q)))
                .collect();
            let raise = Sparse::from_triplets(d, d, t);
            return Ok(if a < b { raise } else { raise.transpose() });
        }
        if a < b {
            let left = self.generator_exact(LieGenerator::General(a, b - 1))?;
            let right = self.generator_exact(LieGenerator::General(b - 1, b))?;
            Ok(left.commutator(&right))
        } else {
            Ok(self.generator_exact(LieGenerator::General(b, a))?.transpose())
        }
    }

    /// `sum_ab x_ab E_ab` for a complex `n x n` matrix `x`.
    pub fn algebra_matrix(&self, x: &CMat) -> Result<Sparse<Complex64>> {
        let n = self.n();
        let d = self.dim();
        let mut acc = Sparse::zeros(d, d);
        for a in 1..=n {
            for b in 1..=n {
                let coef = x[(a - 1, b - 1)];
                if coef.norm() == 0.0 {
                    continue;
                }
                let e = self.generator(LieGenerator::General(a, b))?;
                acc = acc.plus(&e.to_complex().scale(&coef));
            }
        }
        Ok(acc)
    }

    /// Spectral interval of `i dR(X)` for skew-Hermitian `X`, from the
    /// extreme weights of the representation.
    fn spectral_bounds(&self, x: &CMat) -> (f64, f64) {
        let h = x * I;
        let mut phi = crate::linalg::herm_eigvals(&h);
        let mut lam: Vec<f64> = self.lambda.as_slice().iter().map(|v| *v as f64).collect();
        lam.sort_by(|a, b| b.partial_cmp(a).unwrap());
        phi.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let hi: f64 = lam.iter().zip(&phi).map(|(l, p)| l * p).sum();
        let lo: f64 = lam.iter().zip(phi.iter().rev()).map(|(l, p)| l * p).sum();
        (lo - 1e-9, hi + 1e-9)
    }

    /// `R(g)` as a dense unitary matrix.
    pub fn group_matrix(&self, g: &CMat) -> Result<CMat> {
        if self.dim() > DENSE_GUARD {
            return Err(GzError::Guard { dim: self.dim(), guard: DENSE_GUARD });
        }
        check_unitary(g)?;
        let x = unitary_log(g);
        let dx = self.algebra_matrix(&x)?.to_dense();
        Ok(expm_skew(&dx))
    }

    /// `R(g) v` without forming `R(g)`.
    pub fn group_action(&self, g: &CMat, v: &[Complex64]) -> Result<Vec<Complex64>> {
        check_unitary(g)?;
        let x = unitary_log(g);
        let h = self.algebra_matrix(&(&x * I))?;
        Ok(expm_action(&h, v, Some(self.spectral_bounds(&x))))
    }

    /// `<g e_src, e_dst>` = `R(g)[dst, src]`.
    pub fn matrix_element(&self, g: &CMat, src: usize, dst: usize) -> Result<Complex64> {
        Ok(self.group_action(g, &self.basis_vector(src))?[dst])
    }

    /// Image of the degree-`j` coefficient of the characteristic polynomial
    /// of the leading `k x k` block under symmetrization, with the
    /// `(2 pi i)^j` normalization.
    pub fn gelfand_invariant(&self, k: usize, j: usize) -> Result<Sparse<Complex64>> {
        self.invariant_guard(k, j)?;
        let gens = |a: usize, b: usize| -> Sparse<f64> {
            (*self.generator(LieGenerator::General(a, b)).unwrap()).clone()
        };
        let raw = symmetrized_minors(gens, self.dim(), k, j, 1.0 / factorial(j) as f64);
        let norm = (c(0.0, TAU)).powu(j as u32);
        Ok(raw.to_complex().scale(&norm))
    }

    /// Exact invariant without the `(2 pi i)^j` factor.
    pub fn gelfand_invariant_exact(&self, k: usize, j: usize) -> Result<Sparse<Radical>> {
        self.invariant_guard(k, j)?;
        let gens = |a: usize, b: usize| self.generator_exact(LieGenerator::General(a, b)).unwrap();
        let inv = Radical::rational(BigRational::new(BigInt::one(), BigInt::from(factorial(j))));
        Ok(symmetrized_minors(gens, self.dim(), k, j, inv))
    }

    fn invariant_guard(&self, k: usize, j: usize) -> Result<()> {
        if j == 0 || j > k || k > self.n() {
            return Err(GzError::Invalid(format!("need 1 <= j <= k <= n, got j={j}, k={k}")));
        }
        if self.dim() > INVARIANT_GUARD {
            return Err(GzError::Guard { dim: self.dim(), guard: INVARIANT_GUARD });
        }
        Ok(())
    }

    /// Diagonal action of the invariant against its predicted eigenvalues.
    /// For `j <= 2` the prediction is the full shifted polynomial; for larger
    /// `j` it is the top-degree term.
    pub fn harish_chandra_check(&self, k: usize, j: usize) -> Result<Vec<HcRow>> {
        let inv = self.gelfand_invariant(k, j)?;
        let diag = inv.diagonal();
        let norm = (c(0.0, TAU)).powu(j as u32);
        Ok(self
            .patterns
            .iter()
            .zip(diag)
            .map(|(g, observed)| {
                let (value, exact) = match hc_eigenvalue(g.row(k), j) {
                    Some(q) => (q.to_f64().unwrap(), true),
                    None => (elementary(&to_f64_row(g.row(k)), j), false),
                };
                HcRow { pattern: g.clone(), predicted: norm * value, observed, exact }
            })
            .collect())
    }

    /// Exact version for `j in {1, 2}`: off-diagonal entries must vanish
    /// identically and the diagonal must equal the shifted polynomial.
    pub fn harish_chandra_exact(&self, k: usize, j: usize) -> Result<ExactHc> {
        if j > 2 {
            return Err(GzError::Invalid("exact eigenvalues are implemented for j <= 2".into()));
        }
        let inv = self.gelfand_invariant_exact(k, j)?;
        let offdiag_zero = inv.off_diagonal().all(|(_, _, x)| x.is_zero());
        let diag = inv.diagonal();
        let mut mismatches = 0;
        for (g, d) in self.patterns.iter().zip(&diag) {
            let want = hc_eigenvalue(g.row(k), j).unwrap();
            if d.as_rational() != Some(want) {
                mismatches += 1;
            }
        }
        Ok(ExactHc { offdiag_zero, mismatches, checked: diag.len() })
    }
}

#[derive(Clone, Debug)]
pub struct HcRow {
    pub pattern: GzPattern,
    pub predicted: Complex64,
    pub observed: Complex64,
    pub exact: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct ExactHc {
    pub offdiag_zero: bool,
    pub mismatches: usize,
    pub checked: usize,
}

fn check_unitary(g: &CMat) -> Result<()> {
    let d = crate::linalg::unitarity_defect(g);
    if d > 1e-12 {
        return Err(GzError::Invalid(format!("g is not unitary (defect {d:.2e})")));
    }
    Ok(())
}

fn factorial(j: usize) -> i64 {
    (1..=j as i64).product()
}

fn to_f64_row(r: &[i64]) -> Vec<f64> {
    r.iter().map(|x| *x as f64).collect()
}

/// Elementary symmetric polynomial `e_j`.
pub fn elementary(x: &[f64], j: usize) -> f64 {
    x.iter().combinations(j).map(|s| s.into_iter().product::<f64>()).sum()
}

fn elementary_q(x: &[Q], j: usize) -> BigRational {
    x.iter()
        .combinations(j)
        .map(|s| s.into_iter().fold(Q::one(), |a, b| a * b))
        .map(|q| BigRational::new(BigInt::from(*q.numer()), BigInt::from(*q.denom())))
        .fold(BigRational::zero(), |a, b| a + b)
}

/// Eigenvalue (without the `(2 pi i)^j` factor) of the degree-`j` invariant
/// on a GZ vector with level-`k` row `row`; known in closed form for `j <= 2`.
pub fn hc_eigenvalue(row: &[i64], j: usize) -> Option<BigRational> {
    let k = row.len();
    let rho = &RhoShift::new(k).rho;
    let shifted: Vec<Q> = row.iter().zip(rho).map(|(x, r)| Q::from_integer(*x) + r).collect();
    match j {
        1 => Some(BigRational::from_integer(BigInt::from(row.iter().sum::<i64>()))),
        2 => Some(elementary_q(&shifted, 2) - elementary_q(rho, 2)),
        _ => None,
    }
}

/// `sum_{|S| = j} sum_{pi in Sym(S)} sgn(pi) sym(prod_{a in S} x_{a, pi(a)})`
/// with `x_ab` realized as `E_ba`.
fn symmetrized_minors<T, F>(gen: F, dim: usize, k: usize, j: usize, inv_fact: T) -> Sparse<T>
where
    T: Clone + Zero + One + std::ops::Add<Output = T> + std::ops::Mul<Output = T> + std::ops::Neg<Output = T> + std::ops::Sub<Output = T>,
    F: Fn(usize, usize) -> Sparse<T>,
{
    let mut cache: HashMap<(usize, usize), Sparse<T>> = HashMap::new();
    let mut get = |a: usize, b: usize| -> Sparse<T> { cache.entry((a, b)).or_insert_with(|| gen(a, b)).clone() };
    let mut acc: Sparse<T> = Sparse::zeros(dim, dim);
    for subset in (1..=k).combinations(j) {
        for perm in subset.iter().copied().permutations(j) {
            let sign = permutation_sign(&subset, &perm);
            // factors x_{subset[t], perm[t]} -> E_{perm[t], subset[t]}
            let factors: Vec<Sparse<T>> = (0..j).map(|t| get(perm[t], subset[t])).collect();
            for order in (0..j).permutations(j) {
                let mut prod = factors[order[0]].clone();
                for &t in &order[1..] {
                    prod = prod.matmul(&factors[t]);
                }
                acc = if sign > 0 { acc.plus(&prod) } else { acc.minus(&prod) };
            }
        }
    }
    acc.scale(&inv_fact)
}

fn permutation_sign(base: &[usize], perm: &[usize]) -> i32 {
    let pos: Vec<usize> = perm.iter().map(|x| base.iter().position(|y| y == x).unwrap()).collect();
    let mut inversions = 0;
    for a in 0..pos.len() {
        for b in a + 1..pos.len() {
            if pos[a] > pos[b] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Finds a diagonal unitary `D` with `a ≈ D b D^†` from the first column of
/// generic matrices and returns the residual `max |a - D b D^†|`.
pub fn phase_aligned_distance(a: &CMat, b: &CMat) -> f64 {
    let n = a.nrows();
    let col = (0..n)
        .max_by(|&x, &y| {
            let mx = (0..n).map(|i| a[(i, x)].norm()).fold(f64::INFINITY, f64::min);
            let my = (0..n).map(|i| a[(i, y)].norm()).fold(f64::INFINITY, f64::min);
            mx.partial_cmp(&my).unwrap()
        })
        .unwrap_or(0);
    let d: Vec<Complex64> = (0..n)
        .map(|i| crate::linalg::unit(a[(i, col)] * b[(i, col)].conj()))
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let pred = d[i] * b[(i, j)] * d[j].conj();
            worst = worst.max((a[(i, j)] - pred).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{haar_unitary, max_abs, unitarity_defect};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn module(l: &[i64]) -> GzModule {
        GzModule::new(&HighestWeight::new(l.to_vec()).unwrap())
    }

    #[test]
    fn defining_rep() {
        let m = module(&[1, 0]);
        let e11 = m.generator(LieGenerator::Diag(1)).unwrap();
        assert_eq!(e11.diagonal(), vec![1.0, 0.0]);
        let r = m.generator(LieGenerator::Raise(1)).unwrap();
        assert_eq!(r.get(0, 1), 1.0);
    }

    #[test]
    fn commutation_relations() {
        for l in [vec![2, 1, 0], vec![3, 1, 0, 0], vec![2, 2, 1, 0]] {
            let m = module(&l);
            let n = l.len();
            let e = |a: usize, b: usize| (*m.generator(LieGenerator::General(a, b)).unwrap()).clone();
            for a in 1..=n {
                for b in 1..=n {
                    for cc in 1..=n {
                        for d in 1..=n {
                            let lhs = e(a, b).commutator(&e(cc, d));
                            let mut rhs = Sparse::zeros(m.dim(), m.dim());
                            if b == cc {
                                rhs = rhs.plus(&e(a, d));
                            }
                            if d == a {
                                rhs = rhs.minus(&e(cc, b));
                            }
                            let diff = lhs.minus(&rhs);
                            let worst = diff.iter().map(|(_, _, x)| x.abs()).fold(0.0, f64::max);
                            assert!(worst < 1e-12, "[E{a}{b},E{cc}{d}] off by {worst}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn group_matrix_unitary_and_diagonal_torus() {
        let m = module(&[2, 1, 0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = haar_unitary(3, &mut rng);
        let r = m.group_matrix(&g).unwrap();
        assert!(unitarity_defect(&r) < 1e-12);
        let th = [0.3, -1.1, 2.0];
        let t = CMat::from_diagonal(&crate::linalg::CVec::from_iterator(3, th.iter().map(|x| Complex64::from_polar(1.0, *x))));
        let rt = m.group_matrix(&t).unwrap();
        for (i, g) in m.patterns().iter().enumerate() {
            let w = g.weight();
            let ph: f64 = w.iter().zip(&th).map(|(a, b)| *a as f64 * b).sum();
            assert!((rt[(i, i)] - Complex64::from_polar(1.0, ph)).norm() < 1e-12);
        }
    }

    #[test]
    fn sparse_action_matches_dense() {
        let m = module(&[3, 1, 0]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = haar_unitary(3, &mut rng);
        let r = m.group_matrix(&g).unwrap();
        let v = m.group_action(&g, &m.basis_vector(4)).unwrap();
        for i in 0..m.dim() {
            assert!((r[(i, 4)] - v[i]).norm() < 1e-12);
        }
        assert!(max_abs(&(m.group_matrix(&CMat::identity(3, 3)).unwrap() - CMat::identity(m.dim(), m.dim()))) < 1e-12);
    }

    #[test]
    fn hc_degree_two_defining() {
        let m = module(&[1, 0]);
        let ex = m.harish_chandra_exact(2, 2).unwrap();
        assert!(ex.offdiag_zero);
        assert_eq!(ex.mismatches, 0);
        assert_eq!(hc_eigenvalue(&[1, 0], 2), Some(BigRational::new(BigInt::from(-1), BigInt::from(2))));
    }

    #[test]
    fn j1_is_row_sum() {
        let m = module(&[1, 0, 0]);
        for row in m.harish_chandra_check(2, 1).unwrap() {
            assert!((row.observed - row.predicted).norm() < 1e-12);
            let s = row.pattern.row_sum(2) as f64;
            assert!((row.observed - c(0.0, TAU * s)).norm() < 1e-12);
        }
    }
}
