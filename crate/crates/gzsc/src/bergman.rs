//! Bergman kernel of `O(p)` on projective space, isotropic states of torus
//! fibres and their norms.
//!
//! Sections of `O(p)` are homogeneous polynomials of degree `p`. The
//! Fubini-Study form represents `c_1(O(1))` (area 1 on lines) and `L^2`
//! norms use its Liouville measure, of total mass `1/(n-1)!`.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::combinatorics::compositions;
use crate::error::{GzError, Result};
use crate::geometry::full_levels;
use crate::linalg::{c, fit_line, TAU};

fn ln_fact(k: i64) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// `e_mu = exp(scale(mu)) z^mu` is orthonormal.
pub fn orthonormal_scale(mu: &[i64]) -> f64 {
    let n = mu.len() as i64;
    let p: i64 = mu.iter().sum();
    0.5 * (ln_fact(p + n - 1) - mu.iter().map(|m| ln_fact(*m)).sum::<f64>())
}

fn ln_kernel_constant(n: usize, p: i64) -> f64 {
    ln_fact(p + n as i64 - 1) - ln_fact(p)
}

fn monomial(z: &[Complex64], mu: &[i64]) -> Complex64 {
    z.iter().zip(mu).map(|(x, m)| x.powi(*m as i32)).product()
}

fn hermitian(z: &[Complex64], w: &[Complex64]) -> Complex64 {
    z.iter().zip(w).map(|(a, b)| a * b.conj()).sum()
}

/// Kernel of the orthogonal projection onto degree-`p` sections,
/// `(p + n - 1)!/p! * <z, w>^p`.
pub fn bergman_eval(p: i64, z: &[Complex64], w: &[Complex64]) -> Complex64 {
    ln_kernel_constant(z.len(), p).exp() * hermitian(z, w).powi(p as i32)
}

/// Product rule on the unit sphere in `C^n`: Gauss-Legendre in the moment
/// simplex (collapsed coordinates) times trapezoid in the relative phases.
/// Integrands must be invariant under the diagonal circle.
pub struct SphereRule {
    points: Vec<(Vec<Complex64>, f64)>,
}

impl SphereRule {
    /// Exact for integrands of bidegree up to `(p, p)`.
    pub fn for_degree(n: usize, p: usize) -> Self {
        Self::new(n, p / 2 + n + 1, 2 * p + 2)
    }

    pub fn new(n: usize, radial: usize, angular: usize) -> Self {
        let gl = GaussLegendre::new(NonZeroUsize::new(radial).unwrap());
        let nodes: Vec<(f64, f64)> = gl.iter().map(|(x, w)| ((x + 1.0) / 2.0, w / 2.0)).collect();
        let mut simplex = vec![(vec![], 1.0)];
        for j in 0..n - 1 {
            let mut next = Vec::with_capacity(simplex.len() * nodes.len());
            for (t, wt) in &simplex {
                let rest = 1.0 - t.iter().sum::<f64>();
                for (s, ws) in &nodes {
                    let mut t2: Vec<f64> = t.clone();
                    t2.push(rest * s);
                    next.push((t2, wt * ws * (1.0 - s).powi((n - 2 - j) as i32)));
                }
            }
            simplex = next;
        }
        let mut points = Vec::new();
        let total = angular.pow(n as u32 - 1);
        for (t, wt) in simplex {
            let last = (1.0 - t.iter().sum::<f64>()).max(0.0);
            for idx in 0..total {
                let mut z = vec![c(last.sqrt(), 0.0)];
                let mut k = idx;
                for tj in &t {
                    let th = TAU * (k % angular) as f64 / angular as f64;
                    k /= angular;
                    z.push(Complex64::from_polar(tj.max(0.0).sqrt(), th));
                }
                points.push((z, wt / total as f64));
            }
        }
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&[Complex64]) -> Complex64) -> Complex64 {
        self.points.iter().map(|(z, w)| f(z) * *w).sum()
    }
}

/// `∫ P_p(x, y) y^nu dσ(y)`, which reproduces `x^nu`.
pub fn reproduce_monomial(p: i64, nu: &[i64], x: &[Complex64], rule: &SphereRule) -> Complex64 {
    rule.integrate(|y| bergman_eval(p, x, y) * monomial(y, nu))
}

/// Riemannian volume of the torus fibre over full levels `levels`,
/// `(2 sqrt(pi))^d prod sqrt(levels)` over the nonzero levels.
pub fn fibre_volume(levels: &[f64]) -> f64 {
    let supp: Vec<f64> = levels.iter().copied().filter(|x| *x > 0.0).collect();
    let d = supp.len() as i32 - 1;
    (2.0 * std::f64::consts::PI.sqrt()).powi(d) * supp.iter().map(|x| x.sqrt()).product::<f64>()
}

pub fn fibre_dimension(levels: &[f64]) -> usize {
    levels.iter().filter(|x| **x > 0.0).count() - 1
}

#[derive(Clone, Debug, Serialize)]
pub struct IsotropicState {
    pub n: usize,
    pub p: i64,
    pub k_twist: i64,
    /// Full levels `(1 - sum v, v)`.
    pub levels: Vec<f64>,
    /// Weight of the flat section, `p * levels` less the twist.
    pub weight: Vec<i64>,
    pub resolution: usize,
    pub volume: f64,
    /// `(mu, coefficient on e_mu)` for every `mu` of degree `p - k_twist`.
    pub coefficients: Vec<(Vec<i64>, Complex64)>,
}

impl IsotropicState {
    pub fn norm_sq(&self) -> f64 {
        self.coefficients.iter().map(|(_, x)| x.norm_sqr()).sum()
    }

    /// Mass off the flat-section weight relative to the mass on it.
    pub fn leakage(&self) -> f64 {
        let (on, off) = self.coefficients.iter().fold((0.0, 0.0), |(a, b), (mu, x)| {
            if *mu == self.weight {
                (a + x.norm_sqr(), b)
            } else {
                (a, b + x.norm_sqr())
            }
        });
        (off / on).sqrt()
    }

    /// Value at `x` of the state as a polynomial.
    pub fn eval(&self, x: &[Complex64]) -> Complex64 {
        self.coefficients.iter().map(|(mu, a)| a * orthonormal_scale(mu).exp() * monomial(x, mu)).sum()
    }

    /// Flat section `y^w / |y^w|` on the fibre.
    fn flat(&self, y: &[Complex64]) -> Complex64 {
        let m = monomial(y, &self.weight);
        m / m.norm()
    }
}

fn trapezoid_mean(k: i64, nodes: usize) -> Complex64 {
    (0..nodes).map(|t| Complex64::from_polar(1.0, TAU * (k * t as i64) as f64 / nodes as f64)).sum::<Complex64>() / nodes as f64
}

fn state_coefficients(levels: &[f64], weight: &[i64], q: i64, volume: f64, nodes: usize) -> Vec<(Vec<i64>, Complex64)> {
    let n = levels.len();
    let dim_ln = ln_kernel_constant(n, q);
    compositions(n, q)
        .into_iter()
        .map(|mu| {
            if mu.iter().zip(levels).any(|(m, l)| *m > 0 && *l == 0.0) {
                return (mu, c(0.0, 0.0));
            }
            let ln_mag = dim_ln + ln_fact(q) - mu.iter().map(|m| ln_fact(*m)).sum::<f64>()
                + mu.iter().zip(levels).filter(|(m, _)| **m > 0).map(|(m, l)| 0.5 * *m as f64 * l.ln()).sum::<f64>()
                - orthonormal_scale(&mu);
            let phase: Complex64 = (1..n).filter(|j| levels[*j] > 0.0).map(|j| trapezoid_mean(weight[j] - mu[j], nodes)).product();
            (mu, phase * volume * ln_mag.exp())
        })
        .collect()
}

/// State obtained by projecting the flat section of the Bohr-Sommerfeld
/// fibre over `v` (length `n - 1`) onto holomorphic sections.
///
/// With `k_twist > 0` the flat section is tensored with a flat unit section
/// of `L^{-k_twist}` and projected onto degree `p - k_twist`.
pub fn isotropic_state(n: usize, p: i64, v: &[f64], k_twist: i64, resolution: usize) -> Result<IsotropicState> {
    if v.len() + 1 != n {
        return Err(GzError::Invalid(format!("need {} levels", n - 1)));
    }
    let levels = full_levels(v);
    if levels.iter().any(|x| *x < -1e-12) {
        return Err(GzError::NotInterior(v.to_vec()));
    }
    let levels: Vec<f64> = levels.iter().map(|x| if x.abs() < 1e-12 { 0.0 } else { *x }).collect();
    let mut weight = Vec::with_capacity(n);
    for l in &levels {
        let m = l * p as f64;
        if (m - m.round()).abs() > 1e-9 {
            return Err(GzError::NotBohrSommerfeld(m));
        }
        weight.push(m.round() as i64);
    }
    if k_twist < 0 || k_twist % n as i64 != 0 || k_twist > p {
        return Err(GzError::Invalid(format!("k_twist must be a multiple of {n} in [0, p]")));
    }
    let shift = k_twist / n as i64;
    let weight: Vec<i64> = weight.iter().zip(&levels).map(|(w, l)| if *l > 0.0 { w - shift } else { *w }).collect();
    let q: i64 = weight.iter().sum();
    if weight.iter().any(|w| *w < 0) || q != p - k_twist {
        return Err(GzError::Invalid("twist does not fit the fibre weight".into()));
    }
    let span = weight.iter().map(|w| *w as usize).max().unwrap_or(0) + q as usize;
    if resolution <= span {
        return Err(GzError::Invalid(format!("resolution {resolution} aliases weights up to {span}")));
    }
    let volume = fibre_volume(&levels);
    let coefficients = state_coefficients(&levels, &weight, q, volume, resolution);
    let check = state_coefficients(&levels, &weight, q, volume, resolution + 1);
    let drift = coefficients.iter().zip(&check).map(|(a, b)| (a.1 - b.1).norm()).fold(0.0, f64::max);
    let scale = coefficients.iter().map(|a| a.1.norm()).fold(0.0, f64::max);
    if drift > 1e-10 * scale.max(1e-300) {
        return Err(GzError::Invalid(format!("resolution {resolution} too low: coefficients moved by {drift:.2e}")));
    }
    Ok(IsotropicState { n, p, k_twist, levels, weight, resolution, volume, coefficients })
}

/// `<s, state>` computed from coefficients and as the fibre integral of the
/// pointwise pairing with the flat section.
pub fn pairing_check(state: &IsotropicState, rng: &mut impl Rng) -> (Complex64, Complex64) {
    let s: Vec<(Vec<i64>, Complex64)> =
        state.coefficients.iter().map(|(mu, _)| (mu.clone(), c(rng.sample(StandardNormal), rng.sample(StandardNormal)))).collect();
    let lhs: Complex64 = s.iter().zip(&state.coefficients).map(|((_, a), (_, b))| a * b.conj()).sum();
    let n = state.n;
    let nodes = state.resolution;
    let active: Vec<usize> = (1..n).filter(|j| state.levels[*j] > 0.0).collect();
    let total = nodes.pow(active.len() as u32);
    let mut acc = c(0.0, 0.0);
    for idx in 0..total {
        let mut y: Vec<Complex64> = state.levels.iter().map(|l| c(l.sqrt(), 0.0)).collect();
        let mut k = idx;
        for j in &active {
            y[*j] *= Complex64::from_polar(1.0, TAU * (k % nodes) as f64 / nodes as f64);
            k /= nodes;
        }
        let sy: Complex64 = s.iter().map(|(mu, a)| a * orthonormal_scale(mu).exp() * monomial(&y, mu)).sum();
        acc += sy * state.flat(&y).conj();
    }
    (lhs, acc * state.volume / total as f64)
}

/// `2^{d/2} p^{n-1-d/2} Vol`, the leading term of the squared norm.
pub fn norm_model(levels: &[f64], p: i64) -> f64 {
    let d = fibre_dimension(levels) as f64;
    let np = (levels.len() - 1) as f64;
    2f64.powf(d / 2.0) * (p as f64).powf(np - d / 2.0) * fibre_volume(levels)
}

#[derive(Clone, Debug, Serialize)]
pub struct NormRow {
    pub p: i64,
    pub norm_sq: f64,
    pub model: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormTable {
    pub rows: Vec<NormRow>,
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub model_exponent: f64,
}

/// Squared norms over the Bohr-Sommerfeld values of `p_list` with a
/// log-log fit of the exponent.
pub fn state_norm_asymptotics(n: usize, v: &[f64], p_list: &[i64]) -> Result<NormTable> {
    let mut rows = vec![];
    for &p in p_list {
        let st = match isotropic_state(n, p, v, 0, 4 * p.max(1) as usize) {
            Ok(s) => s,
            Err(GzError::NotBohrSommerfeld(_)) => continue,
            Err(e) => return Err(e),
        };
        let norm_sq = st.norm_sq();
        let model = norm_model(&st.levels, p);
        rows.push(NormRow { p, norm_sq, model, ratio: norm_sq / model });
    }
    if rows.len() < 2 {
        return Err(GzError::Invalid("fewer than two Bohr-Sommerfeld values of p".into()));
    }
    let x: Vec<f64> = rows.iter().map(|r| (r.p as f64).ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.norm_sq.ln()).collect();
    let (exponent, _, exponent_stderr) = fit_line(&x, &y);
    let levels = full_levels(v);
    let d = levels.iter().filter(|x| **x > 1e-12).count() as f64 - 1.0;
    Ok(NormTable { rows, exponent, exponent_stderr, model_exponent: (n - 1) as f64 - d / 2.0 })
}

/// Matrix of the Toeplitz operator of `f` in the orthonormal monomial basis.
pub fn toeplitz_matrix(n: usize, p: i64, f: impl Fn(&[Complex64]) -> Complex64, rule: &SphereRule) -> DMatrix<Complex64> {
    let basis = compositions(n, p);
    let scales: Vec<f64> = basis.iter().map(|m| orthonormal_scale(m).exp()).collect();
    let mut t = DMatrix::zeros(basis.len(), basis.len());
    for (y, w) in &rule.points {
        let e: Vec<Complex64> = basis.iter().zip(&scales).map(|(m, s)| monomial(y, m) * *s).collect();
        let fy = f(y) * *w;
        for (i, ei) in e.iter().enumerate() {
            let a = fy * ei.conj();
            for (j, ej) in e.iter().enumerate() {
                t[(i, j)] += a * ej;
            }
        }
    }
    t
}

/// Operator norm of `T(f) T(g) - T(fg)` on `CP^1` for
/// `f = Re(z0 conj z1)` and `g = |z0|^2`.
pub fn toeplitz_defect(p: i64) -> f64 {
    let f = |y: &[Complex64]| c((y[0] * y[1].conj()).re, 0.0);
    let g = |y: &[Complex64]| c(y[0].norm_sqr(), 0.0);
    let rule = SphereRule::for_degree(2, p as usize + 4);
    let tf = toeplitz_matrix(2, p, f, &rule);
    let tg = toeplitz_matrix(2, p, g, &rule);
    let tfg = toeplitz_matrix(2, p, |y| f(y) * g(y), &rule);
    (tf * tg - tfg).singular_values().max()
}
