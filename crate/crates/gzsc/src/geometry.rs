//! Coadjoint orbits as Hermitian matrices: the minor-eigenvalue map, the
//! toric moment map on projective space, the KKS pairing and explicit
//! parametrizations of the fibres.

use num_complex::Complex64;
use num_traits::Zero;
use rand::Rng;
use serde::Serialize;

use crate::combinatorics::{HighestWeight, Q};
use crate::error::{GzError, Result};
use crate::linalg::{c, herm_eig, herm_eigvals, CMat, CVec, I, TAU};

/// Rows `1..n-1` of the minor spectra, each nonincreasing.
pub type MinorSpectrum = Vec<Vec<f64>>;

/// Sorted eigenvalues of the leading `k x k` minors for `k < n`.
pub fn gz_map(alpha: &CMat) -> MinorSpectrum {
    let n = alpha.nrows();
    (1..n).map(|k| herm_eigvals(&alpha.view((0, 0), (k, k)).into_owned())).collect()
}

pub fn flatten(rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter().flatten().copied().collect()
}

/// Splits flat GZ coordinates into rows and appends the top row.
pub fn rows_with_top(flat: &[f64], lambda: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = lambda.len();
    if flat.len() != n * (n - 1) / 2 {
        return Err(GzError::Invalid(format!("expected {} GZ coordinates, got {}", n * (n - 1) / 2, flat.len())));
    }
    let mut rows = Vec::with_capacity(n);
    let mut at = 0;
    for k in 1..n {
        rows.push(flat[at..at + k].to_vec());
        at += k;
    }
    rows.push(lambda.to_vec());
    Ok(rows)
}

/// Smallest gap in the strict interlacing inequalities; positive iff the
/// array lies in the interior of the polytope.
pub fn interlacing_margin(rows: &[Vec<f64>]) -> f64 {
    let mut m = f64::INFINITY;
    for k in 1..rows.len() {
        let (lo, hi) = (&rows[k - 1], &rows[k]);
        for j in 0..k {
            m = m.min(hi[j] - lo[j]).min(lo[j] - hi[j + 1]);
        }
    }
    m
}

pub fn projector(z: &CVec) -> CMat {
    z * z.adjoint()
}

/// `(|z_2|^2, ..., |z_n|^2)`.
pub fn toric_moment(z: &CVec) -> Vec<f64> {
    z.iter().skip(1).map(|x| x.norm_sqr()).collect()
}

/// Whether `p v` is integral.
pub fn bohr_sommerfeld_level(v: &[Q], p: i64) -> bool {
    v.iter().all(|x| (x * p).is_integer())
}

/// `alpha([xi1, xi2])` with `alpha` read as the functional `Tr(alpha .) / (2 pi i)`.
pub fn kks_pairing(alpha: &CMat, xi1: &CMat, xi2: &CMat) -> f64 {
    let br = xi1 * xi2 - xi2 * xi1;
    ((alpha * br).trace() / (I * TAU)).re
}

/// Point of a toric fibre in angle coordinates. The coordinate `gauge` is
/// real and nonnegative; `angles` are the phases (in turns) of the others.
#[derive(Clone, Debug, Serialize)]
pub struct ToricFiberPoint {
    pub levels: Vec<f64>,
    pub gauge: usize,
    pub angles: Vec<f64>,
}

impl ToricFiberPoint {
    /// `levels` are the full moduli `|z_j|^2`, summing to 1.
    pub fn new(levels: Vec<f64>, angles: Vec<f64>) -> Self {
        let gauge = gauge_index(&levels);
        Self { levels, gauge, angles }
    }

    pub fn vector(&self) -> CVec {
        toric_vector(&self.levels, self.gauge, &self.angles)
    }

    /// Chart of an arbitrary unit vector on its own fibre.
    pub fn from_vector(z: &CVec) -> Self {
        let levels: Vec<f64> = z.iter().map(|x| x.norm_sqr()).collect();
        let gauge = gauge_index(&levels);
        let base = z[gauge].arg();
        let angles = (0..z.len())
            .filter(|&j| j != gauge)
            .map(|j| ((z[j].arg() - base) / TAU).rem_euclid(1.0))
            .collect();
        Self { levels, gauge, angles }
    }
}

/// Coordinate with the largest modulus; first on ties.
pub fn gauge_index(levels: &[f64]) -> usize {
    let mut best = 0;
    for (j, l) in levels.iter().enumerate() {
        if *l > levels[best] + 1e-15 {
            best = j;
        }
    }
    best
}

/// Full moduli `(1 - sum v, v_1, ..., v_{n-1})` from the toric moment.
pub fn full_levels(v: &[f64]) -> Vec<f64> {
    let mut out = vec![1.0 - v.iter().sum::<f64>()];
    out.extend_from_slice(v);
    out
}

pub fn toric_vector(levels: &[f64], gauge: usize, angles: &[f64]) -> CVec {
    let mut t = angles.iter();
    CVec::from_iterator(
        levels.len(),
        levels.iter().enumerate().map(|(j, l)| {
            let r = l.max(0.0).sqrt();
            if j == gauge {
                c(r, 0.0)
            } else {
                Complex64::from_polar(r, TAU * t.next().unwrap())
            }
        }),
    )
}

/// Holonomy of the tautological connection around the `j`-th angle loop of
/// the toric fibre, raised to the power `p`: the connection form
/// `Im <z, dz>` is integrated by the trapezoid rule on `nodes` steps. It is
/// `1` exactly at Bohr-Sommerfeld levels.
pub fn fibre_holonomy(levels: &[f64], j: usize, p: i64, nodes: usize) -> Complex64 {
    let n = levels.len();
    let form = |s: f64| -> f64 {
        let angles: Vec<f64> = (0..n).map(|k| if k == j { s } else { 0.0 }).collect();
        let z = CVec::from_iterator(n, levels.iter().zip(&angles).map(|(l, a)| Complex64::from_polar(l.sqrt(), TAU * a)));
        let mut dz = zero_vec(n);
        dz[j] = I * TAU * z[j];
        z.dotc(&dz).im
    };
    let h = 1.0 / nodes as f64;
    let acc: f64 = (0..nodes).map(|s| 0.5 * h * (form(s as f64 * h) + form((s + 1) as f64 * h))).sum();
    Complex64::from_polar(1.0, p as f64 * acc)
}

/// Matrix `alpha` on the GZ fibre over `rows` (top row included) at angle
/// coordinates `theta` (turns, flat layout), with the unitary `V` such that
/// `alpha = V diag(top) V^dagger`.
///
/// Level `k + 1` borders level `k`: in the eigenbasis of the `k x k` minor
/// the new column has moduli fixed by the interlacing data and free phases.
pub fn fibre_point(rows: &[Vec<f64>], theta: &[f64]) -> Result<(CMat, CMat)> {
    let n = rows.len();
    if theta.len() != n * (n - 1) / 2 {
        return Err(GzError::Invalid("angle count must be n(n-1)/2".into()));
    }
    if interlacing_margin(rows) <= 0.0 {
        return Err(GzError::NotInterior(flatten(&rows[..n - 1])));
    }
    let mut v = CMat::identity(1, 1);
    let mut at = 0;
    for k in 1..n {
        let (inner, outer) = (&rows[k - 1], &rows[k]);
        let z: Vec<Complex64> = (0..k)
            .map(|i| {
                let r = border_modulus(inner, outer, i);
                Complex64::from_polar(r, TAU * theta[at + i])
            })
            .collect();
        at += k;
        v = extend(&v, &border_basis(inner, outer, &z));
    }
    let top = &rows[n - 1];
    let d = CMat::from_diagonal(&CVec::from_iterator(n, top.iter().map(|x| c(*x, 0.0))));
    Ok((&v * d * v.adjoint(), v))
}

fn border_modulus(inner: &[f64], outer: &[f64], i: usize) -> f64 {
    let num: f64 = -outer.iter().map(|o| inner[i] - o).product::<f64>();
    let den: f64 = inner.iter().enumerate().filter(|(l, _)| *l != i).map(|(_, m)| inner[i] - m).product();
    (num / den).max(0.0).sqrt()
}

/// Eigenvectors of the bordered matrix `[[diag(inner), z], [z^dagger, *]]`.
fn border_basis(inner: &[f64], outer: &[f64], z: &[Complex64]) -> CMat {
    let k = inner.len();
    let mut q = CMat::zeros(k + 1, k + 1);
    for (m, o) in outer.iter().enumerate() {
        let mut col = CVec::from_iterator(k + 1, z.iter().zip(inner).map(|(zi, mu)| zi / (o - mu)).chain([c(1.0, 0.0)]));
        col /= c(col.norm(), 0.0);
        q.set_column(m, &col);
    }
    q
}

fn extend(v: &CMat, q: &CMat) -> CMat {
    let k = v.nrows();
    let mut w = CMat::identity(k + 1, k + 1);
    w.view_mut((0, 0), (k, k)).copy_from(v);
    w * q
}

/// Angle coordinates of a point on the GZ fibre over `rows`, inverse to
/// [`fibre_point`].
pub fn fibre_angles(rows: &[Vec<f64>], alpha: &CMat) -> Vec<f64> {
    let n = rows.len();
    let mut v = CMat::identity(1, 1);
    let mut theta = Vec::with_capacity(n * (n - 1) / 2);
    for k in 1..n {
        let col = alpha.view((0, k), (k, 1)).into_owned();
        let z: Vec<Complex64> = (v.adjoint() * col).iter().copied().collect();
        theta.extend(z.iter().map(|x| (x.arg() / TAU).rem_euclid(1.0)));
        v = extend(&v, &border_basis(&rows[k - 1], &rows[k], &z));
    }
    theta
}

/// Gradients of the GZ functions at `alpha` (projectors onto minor
/// eigenvectors, padded by zeros), flat order.
pub fn gz_gradients(alpha: &CMat) -> Vec<CMat> {
    let n = alpha.nrows();
    let mut out = Vec::new();
    for k in 1..n {
        let (_, vecs) = herm_eig(&alpha.view((0, 0), (k, k)).into_owned());
        for i in 0..k {
            let mut u = CVec::zeros(n);
            u.rows_mut(0, k).copy_from(&vecs.column(i));
            out.push(projector(&u));
        }
    }
    out
}

/// Random points of the GZ fibre over the interior point `v` (flat).
pub fn flag_fiber_sample<R: Rng>(lambda: &HighestWeight, v: &[f64], count: usize, rng: &mut R) -> Result<Vec<CMat>> {
    lambda.require_regular()?;
    let top: Vec<f64> = lambda.as_slice().iter().map(|x| *x as f64).collect();
    let rows = rows_with_top(v, &top)?;
    let d = v.len();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let theta: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        let (alpha, _) = fibre_point(&rows, &theta)?;
        let err = flatten(&gz_map(&alpha)).iter().zip(v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if err > 1e-8 {
            return Err(GzError::NoConvergence(format!("fibre reconstruction off by {err:e}")));
        }
        out.push(alpha);
    }
    Ok(out)
}

/// Largest deviation of the spectrum of `alpha` from `lambda`.
pub fn spectrum_error(alpha: &CMat, lambda: &[f64]) -> f64 {
    let mut l = lambda.to_vec();
    l.sort_by(|a, b| b.partial_cmp(a).unwrap());
    herm_eigvals(alpha).iter().zip(&l).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// `Tr(A) / n`-free check that a matrix is Hermitian.
pub fn hermitian_defect(a: &CMat) -> f64 {
    (a - a.adjoint()).iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn zero_vec(n: usize) -> CVec {
    CVec::from_element(n, Complex64::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{haar_unitary, random_orbit_point};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_minors() {
        let a = CMat::from_diagonal(&CVec::from_vec(vec![c(2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]));
        assert_eq!(gz_map(&a), vec![vec![2.0], vec![2.0, 1.0]]);
    }

    #[test]
    fn fibre_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows = vec![vec![0.9], vec![1.6, 0.4], vec![2.0, 1.0, 0.0]];
        let theta: Vec<f64> = (0..3).map(|_| rng.random()).collect();
        let (a, _) = fibre_point(&rows, &theta).unwrap();
        let m = gz_map(&a);
        assert!((m[0][0] - 0.9).abs() < 1e-12 && (m[1][0] - 1.6).abs() < 1e-12);
        assert!(spectrum_error(&a, &rows[2]) < 1e-12);
        let back = fibre_angles(&rows, &a);
        for (x, y) in back.iter().zip(&theta) {
            let d = (x - y).rem_euclid(1.0);
            assert!(d.min(1.0 - d) < 1e-10);
        }
    }

    #[test]
    fn projective_minor() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = haar_unitary(2, &mut rng);
        let z = u.column(0).into_owned();
        assert!((gz_map(&projector(&z))[0][0] - z[0].norm_sqr()).abs() < 1e-14);
        let _ = random_orbit_point(&[1.0, 0.0], &mut rng);
    }

    #[test]
    fn bohr_sommerfeld_holonomy() {
        let h = fibre_holonomy(&[0.5, 0.5], 1, 2, 64);
        assert!((h - c(1.0, 0.0)).norm() < 1e-8);
        let h = fibre_holonomy(&[2.0 / 3.0, 1.0 / 3.0], 1, 2, 64);
        assert!((h - c(1.0, 0.0)).norm() > 0.1);
    }
}
