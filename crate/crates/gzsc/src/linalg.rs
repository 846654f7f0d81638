//! Dense complex linear algebra shared by the geometric and representation code.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);
pub const TAU: f64 = std::f64::consts::TAU;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

/// Eigenvalues in nonincreasing order with matching eigenvector columns.
pub fn herm_eig(m: &CMat) -> (Vec<f64>, CMat) {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

pub fn herm_eigvals(m: &CMat) -> Vec<f64> {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let mut v: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v
}

/// Skew-Hermitian logarithm of a unitary matrix via its Schur form.
pub fn unitary_log(g: &CMat) -> CMat {
    let (q, t) = g.clone().schur().unpack();
    let n = g.nrows();
    let mut d = CMat::zeros(n, n);
    for i in 0..n {
        d[(i, i)] = c(0.0, t[(i, i)].arg());
    }
    let x = &q * d * q.adjoint();
    (&x - x.adjoint()) * c(0.5, 0.0)
}

/// `exp(X)` for skew-Hermitian `X`, unitary to rounding.
pub fn expm_skew(x: &CMat) -> CMat {
    let h = x * I;
    let (vals, v) = herm_eig(&h);
    let n = x.nrows();
    let mut d = CMat::zeros(n, n);
    for (i, e) in vals.iter().enumerate() {
        d[(i, i)] = Complex64::from_polar(1.0, -e);
    }
    &v * d * v.adjoint()
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix.
pub fn haar_unitary<R: Rng>(n: usize, rng: &mut R) -> CMat {
    let z = CMat::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) / 2f64.sqrt()
    });
    let qr = z.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q.clone();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..n {
            u[(i, j)] = q[(i, j)] * ph;
        }
    }
    u
}

/// `exp(scale * X)` for a Gaussian skew-Hermitian `X`.
pub fn near_identity<R: Rng>(n: usize, scale: f64, rng: &mut R) -> CMat {
    let z = CMat::from_fn(n, n, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    expm_skew(&((&z - z.adjoint()) * c(scale / 2.0, 0.0)))
}

/// Random Hermitian matrix with prescribed spectrum.
pub fn random_orbit_point<R: Rng>(spectrum: &[f64], rng: &mut R) -> CMat {
    let u = haar_unitary(spectrum.len(), rng);
    let d = CMat::from_diagonal(&CVec::from_iterator(spectrum.len(), spectrum.iter().map(|x| c(*x, 0.0))));
    &u * d * u.adjoint()
}

/// `2 x 2` rotation by `beta`, embedded in the `(a, b)` coordinate plane.
pub fn rotation(n: usize, a: usize, b: usize, beta: f64) -> CMat {
    let mut g = CMat::identity(n, n);
    let (co, si) = ((beta / 2.0).cos(), (beta / 2.0).sin());
    g[(a, a)] = c(co, 0.0);
    g[(a, b)] = c(-si, 0.0);
    g[(b, a)] = c(si, 0.0);
    g[(b, b)] = c(co, 0.0);
    g
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn unitarity_defect(g: &CMat) -> f64 {
    max_abs(&(g.adjoint() * g - CMat::identity(g.nrows(), g.ncols())))
}

/// Phase of a complex number, `1` for zero.
pub fn unit(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r > 0.0 {
        z / r
    } else {
        c(1.0, 0.0)
    }
}

/// Least-squares slope and its standard error for `y` against `x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - icept - slope * a).powi(2)).sum();
    let se = if n > 2.0 { (rss / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    (slope, icept, se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn log_exp_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..5 {
            let g = haar_unitary(n, &mut rng);
            assert!(unitarity_defect(&g) < 1e-13);
            let x = unitary_log(&g);
            assert!(max_abs(&(expm_skew(&x) - &g)) < 1e-12);
        }
    }

    #[test]
    fn slope_of_line() {
        let x = [1.0, 2.0, 3.0];
        let y = [2.0, 4.0, 6.0];
        let (s, i, _) = fit_line(&x, &y);
        assert!((s - 2.0).abs() < 1e-14 && i.abs() < 1e-14);
    }
}
