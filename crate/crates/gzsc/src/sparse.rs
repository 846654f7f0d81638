//! Compressed-row sparse matrices and the exponential action used for
//! representations too large to exponentiate densely.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Zero;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Debug, PartialEq)]
pub struct Sparse<T> {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<T>,
}

impl<T> Sparse<T>
where
    T: Clone + Zero + Add<Output = T>,
{
    /// Sums duplicate entries and drops exact zeros.
    pub fn from_triplets(rows: usize, cols: usize, triplets: Vec<(usize, usize, T)>) -> Self {
        let mut by_row: Vec<BTreeMap<usize, T>> = vec![BTreeMap::new(); rows];
        for (i, j, x) in triplets {
            assert!(i < rows && j < cols, "entry ({i},{j}) outside {rows}x{cols}");
            let slot = by_row[i].entry(j).or_insert_with(T::zero);
            *slot = slot.clone() + x;
        }
        Self::from_rows(rows, cols, by_row)
    }

    fn from_rows(rows: usize, cols: usize, by_row: Vec<BTreeMap<usize, T>>) -> Self {
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for row in by_row {
            for (j, x) in row {
                if !x.is_zero() {
                    indices.push(j);
                    data.push(x);
                }
            }
            indptr.push(indices.len());
        }
        Self { rows, cols, indptr, indices, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, indptr: vec![0; rows + 1], indices: vec![], data: vec![] }
    }

    pub fn identity(n: usize) -> Self
    where
        T: num_traits::One,
    {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, T::one())).collect())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, &T)> {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(&self.data[r])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        (0..self.rows).flat_map(move |i| self.row(i).map(move |(j, x)| (i, j, x)))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.row(i).find(|(c, _)| *c == j).map(|(_, x)| x.clone()).unwrap_or_else(T::zero)
    }

    pub fn transpose(&self) -> Self {
        let t = self.iter().map(|(i, j, x)| (j, i, x.clone())).collect();
        Self::from_triplets(self.cols, self.rows, t)
    }

    pub fn map<U, F>(&self, f: F) -> Sparse<U>
    where
        U: Clone + Zero + Add<Output = U>,
        F: Fn(&T) -> U,
    {
        Sparse::from_triplets(self.rows, self.cols, self.iter().map(|(i, j, x)| (i, j, f(x))).collect())
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    /// Entries off the diagonal.
    pub fn off_diagonal(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        self.iter().filter(|(i, j, _)| i != j)
    }
}

impl<T> Sparse<T>
where
    T: Clone + Zero + Add<Output = T> + Mul<Output = T>,
{
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let by_row = (0..self.rows)
            .map(|i| {
                let mut acc: BTreeMap<usize, T> = BTreeMap::new();
                for (k, a) in self.row(i) {
                    for (j, b) in other.row(k) {
                        let slot = acc.entry(j).or_insert_with(T::zero);
                        *slot = slot.clone() + a.clone() * b.clone();
                    }
                }
                acc
            })
            .collect();
        Self::from_rows(self.rows, other.cols, by_row)
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(|x| s.clone() * x.clone())
    }

    pub fn plus(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape());
        let t = self.iter().chain(other.iter()).map(|(i, j, x)| (i, j, x.clone())).collect();
        Self::from_triplets(self.rows, self.cols, t)
    }
}

impl<T> Sparse<T>
where
    T: Clone + Zero + Add<Output = T> + Mul<Output = T> + Neg<Output = T> + Sub<Output = T>,
{
    pub fn minus(&self, other: &Self) -> Self {
        self.plus(&other.map(|x| -x.clone()))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other).minus(&other.matmul(self))
    }
}

impl Sparse<f64> {
    pub fn to_complex(&self) -> Sparse<Complex64> {
        self.map(|x| Complex64::new(*x, 0.0))
    }
}

impl Sparse<Complex64> {
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols);
        let row = |i: usize| -> Complex64 {
            let mut s = Complex64::zero();
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.data[k] * x[self.indices[k]];
            }
            s
        };
        #[cfg(feature = "parallel")]
        {
            if self.rows > 4096 {
                return (0..self.rows).into_par_iter().map(row).collect();
            }
        }
        (0..self.rows).map(row).collect()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for (i, j, x) in self.iter() {
            m[(i, j)] = *x;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Gershgorin interval containing the spectrum of a Hermitian matrix.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.rows {
            let (mut c, mut r) = (0.0, 0.0);
            for (j, x) in self.row(i) {
                if j == i {
                    c = x.re;
                } else {
                    r += x.norm();
                }
            }
            lo = lo.min(c - r);
            hi = hi.max(c + r);
        }
        (lo, hi)
    }
}

/// Bessel functions `J_0(x), ..., J_{kmax}(x)` by Miller's backward recurrence.
pub fn bessel_j_all(x: f64, kmax: usize) -> Vec<f64> {
    if x == 0.0 {
        let mut out = vec![0.0; kmax + 1];
        out[0] = 1.0;
        return out;
    }
    let start = (kmax.max(x.abs().ceil() as usize) + 40 + (6.0 * x.abs().cbrt()) as usize) | 1;
    let mut vals = vec![0.0f64; start + 2];
    vals[start + 1] = 0.0;
    vals[start] = 1e-300;
    for k in (1..=start).rev() {
        vals[k - 1] = 2.0 * k as f64 / x * vals[k] - vals[k + 1];
        if vals[k - 1].abs() > 1e250 {
            for v in vals.iter_mut().skip(k - 1) {
                *v *= 1e-250;
            }
        }
    }
    let norm = vals[0] + 2.0 * vals.iter().skip(2).step_by(2).sum::<f64>();
    vals.truncate(kmax + 1);
    vals.iter().map(|v| v / norm).collect()
}

/// `exp(-i H) v` for Hermitian `H` with spectrum inside `bounds`, by
/// Chebyshev expansion.
pub fn expm_action(h: &Sparse<Complex64>, v: &[Complex64], bounds: Option<(f64, f64)>) -> Vec<Complex64> {
    let (a, b) = bounds.unwrap_or_else(|| h.gershgorin());
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a) * (1.0 + 1e-12) + 1e-12;
    let kmax = (r + 12.0 * r.cbrt() + 40.0).ceil() as usize;
    let jk = bessel_j_all(r, kmax);
    let scaled = |x: &[Complex64]| -> Vec<Complex64> {
        let hx = h.matvec(x);
        hx.iter().zip(x).map(|(y, x0)| (y - x0 * c) / r).collect()
    };
    let mi = Complex64::new(0.0, -1.0);
    let mut phase = Complex64::new(1.0, 0.0);
    let mut prev: Vec<Complex64> = v.to_vec();
    let mut acc: Vec<Complex64> = prev.iter().map(|x| x * jk[0]).collect();
    let mut cur = scaled(&prev);
    for (k, j) in jk.iter().enumerate().skip(1) {
        phase *= mi;
        let coef = phase * (2.0 * j);
        for (a_, x) in acc.iter_mut().zip(&cur) {
            *a_ += x * coef;
        }
        if k > r as usize + 5 && j.abs() < 1e-18 {
            break;
        }
        let next_h = scaled(&cur);
        let next: Vec<Complex64> = next_h.iter().zip(&prev).map(|(y, p)| y * 2.0 - p).collect();
        prev = std::mem::replace(&mut cur, next);
    }
    let global = Complex64::from_polar(1.0, -c);
    acc.iter().map(|x| x * global).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_values() {
        let j = bessel_j_all(1.0, 3);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-14);
        let j = bessel_j_all(100.0, 120);
        assert!((j[0] - 0.019_985_850_304_223_12).abs() < 1e-13);
    }

    #[test]
    fn expm_of_diagonal() {
        let h = Sparse::from_triplets(
            3,
            3,
            vec![(0, 0, Complex64::new(1.0, 0.0)), (1, 1, Complex64::new(-40.0, 0.0)), (2, 2, Complex64::new(7.5, 0.0))],
        );
        let v = vec![Complex64::new(1.0, 0.0); 3];
        let out = expm_action(&h, &v, None);
        for (o, e) in out.iter().zip([1.0, -40.0, 7.5]) {
            assert!((o - Complex64::from_polar(1.0, -e)).norm() < 1e-13);
        }
    }

    #[test]
    fn products() {
        let a = Sparse::from_triplets(2, 2, vec![(0, 1, 1.0)]);
        let b = a.transpose();
        let c = a.commutator(&b);
        assert_eq!(c.diagonal(), vec![1.0, -1.0]);
    }
}
