//! Intersections `g Lambda_v ∩ Lambda_w` of torus fibres, by multistart
//! Newton iteration in the angle coordinates of one fibre.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::HighestWeight;
use crate::error::{GzError, Result};
use crate::geometry::{
    fibre_angles, fibre_point, flatten, full_levels, gauge_index, gz_gradients, gz_map, interlacing_margin,
    kks_pairing, projector, rows_with_top, toric_vector,
};
use crate::linalg::{c, dagger, CMat, CVec, I, TAU};

#[derive(Clone, Debug, Serialize)]
pub struct SolverConfig {
    pub starts: usize,
    pub newton_tol: f64,
    pub max_iter: usize,
    pub dedup_radius: f64,
    pub seed: u64,
}

impl SolverConfig {
    /// Defaults for a search over `dim` angles.
    pub fn for_dim(dim: usize) -> Self {
        Self { starts: 64 * dim.max(1), newton_tol: 1e-11, max_iter: 60, dedup_radius: 1e-6, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 || self.max_iter == 0 || self.newton_tol <= 0.0 {
            return Err(GzError::Invalid("starts, max_iter and newton_tol must be positive".into()));
        }
        if self.dedup_radius <= 10.0 * self.newton_tol {
            return Err(GzError::Invalid("dedup_radius must exceed 10 * newton_tol".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct IntersectionPoint {
    /// Point of `Lambda_w`, as a Hermitian matrix.
    pub alpha: CMat,
    /// Unit vector of `alpha` on projective space (toric mode).
    pub vector: Option<CVec>,
    /// Angle coordinates of the solver's unknown.
    pub angles: Vec<f64>,
    pub residual: f64,
    pub jac_det: f64,
    pub component_id: usize,
    /// Distance to the nearest other returned point.
    pub separation: f64,
}

#[derive(Clone, Debug)]
pub struct Intersections {
    pub points: Vec<IntersectionPoint>,
    /// Set when every start failed; emptiness is heuristic.
    pub none_found: bool,
    /// Smallest residual reached over all starts.
    pub residual_floor: f64,
    /// Dimension of the intersection when every root has a rank-deficient
    /// Jacobian (clean, not transversal).
    pub clean_dim: Option<usize>,
}

struct Root {
    x: Vec<f64>,
    residual: f64,
    rank: usize,
}

/// Damped Newton iteration for a square system with a supplied Jacobian.
/// Steps longer than 0.5 are shortened by backtracking.
fn newton<F, J>(f: &F, jac: &J, x0: Vec<f64>, cfg: &SolverConfig) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> Vec<f64>,
    J: Fn(&[f64]) -> DMatrix<f64>,
{
    let norm = |r: &[f64]| r.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let mut x = x0;
    let mut r = f(&x);
    for _ in 0..cfg.max_iter {
        if norm(&r) < cfg.newton_tol {
            break;
        }
        let jm = jac(&x);
        let svd = jm.svd(true, true);
        let rhs = DVector::from_column_slice(&r);
        let Ok(step) = svd.solve(&rhs, 1e-12) else { break };
        let mut t = 1.0f64;
        let len = step.amax();
        if len > 0.5 {
            t = 0.5 / len;
        }
        let before = norm(&r);
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
            let rt = f(&trial);
            if norm(&rt) < before || norm(&rt) < cfg.newton_tol {
                x = trial;
                r = rt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let res = norm(&r);
    (x, res)
}

fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().copied().fold(0.0, f64::max).max(1.0);
    sv.iter().filter(|s| **s > 1e-8 * top).count()
}

fn start_points(dim: usize, cfg: &SolverConfig) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let grid = ((cfg.starts as f64 / 2.0).powf(1.0 / dim.max(1) as f64).floor() as usize).max(1);
    let mut out = Vec::with_capacity(cfg.starts);
    let total = grid.pow(dim as u32);
    for idx in 0..total.min(cfg.starts / 2) {
        let mut k = idx;
        let mut x = Vec::with_capacity(dim);
        for _ in 0..dim {
            x.push((k % grid) as f64 / grid as f64 + 0.5 / grid as f64);
            k /= grid;
        }
        out.push(x);
    }
    while out.len() < cfg.starts {
        out.push((0..dim).map(|_| rng.random::<f64>()).collect());
    }
    out
}

fn run_starts<F, J>(f: &F, jac: &J, dim: usize, cfg: &SolverConfig) -> (Vec<Root>, f64)
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
    J: Fn(&[f64]) -> DMatrix<f64> + Sync,
{
    let starts = start_points(dim, cfg);
    let solve = |x0: &Vec<f64>| {
        let (x, res) = newton(f, jac, x0.clone(), cfg);
        let x: Vec<f64> = x.iter().map(|a| a.rem_euclid(1.0)).collect();
        let rank = numerical_rank(&jac(&x));
        Root { x, residual: res, rank }
    };
    #[cfg(feature = "parallel")]
    let roots: Vec<Root> = starts.par_iter().map(solve).collect();
    #[cfg(not(feature = "parallel"))]
    let roots: Vec<Root> = starts.iter().map(solve).collect();
    let floor = roots.iter().map(|r| r.residual).fold(f64::INFINITY, f64::min);
    let mut ok: Vec<Root> = roots.into_iter().filter(|r| r.residual < cfg.newton_tol).collect();
    ok.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
    (ok, floor)
}

fn matrix_distance(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn dedup(mut pts: Vec<IntersectionPoint>, radius: f64) -> Vec<IntersectionPoint> {
    let mut kept: Vec<IntersectionPoint> = Vec::new();
    for p in pts.drain(..) {
        if kept.iter().all(|q| matrix_distance(&q.alpha, &p.alpha) > radius) {
            kept.push(p);
        }
    }
    let n = kept.len();
    for i in 0..n {
        let sep = (0..n)
            .filter(|&j| j != i)
            .map(|j| matrix_distance(&kept[i].alpha, &kept[j].alpha))
            .fold(f64::INFINITY, f64::min);
        kept[i].separation = sep;
        kept[i].component_id = i;
    }
    kept
}

fn check_unitary(g: &CMat) -> Result<()> {
    let d = crate::linalg::unitarity_defect(g);
    if d > 1e-10 {
        return Err(GzError::Invalid(format!("g is not unitary (defect {d:e})")));
    }
    Ok(())
}

fn check_simplex(v: &[f64]) -> Result<()> {
    if v.iter().any(|x| *x < 0.0) || v.iter().sum::<f64>() > 1.0 + 1e-12 {
        return Err(GzError::Invalid(format!("{v:?} is outside the simplex")));
    }
    Ok(())
}

/// Points `z` with `|z_j|^2 = v_j` and `|(g z)_j|^2 = w_j` (`j >= 2`), up to
/// phase. `v` and `w` are toric moments of length `n - 1`. Returned points
/// carry `alpha = Pi_{g z}` on `Lambda_w`.
pub fn toric_intersections(g: &CMat, v: &[f64], w: &[f64], cfg: &SolverConfig) -> Result<Intersections> {
    cfg.validate()?;
    check_unitary(g)?;
    check_simplex(v)?;
    check_simplex(w)?;
    let n = g.nrows();
    if v.len() + 1 != n || w.len() + 1 != n {
        return Err(GzError::Invalid("levels must have length n - 1".into()));
    }
    let levels = full_levels(v);
    let gauge = gauge_index(&levels);
    let free: Vec<usize> = (0..n).filter(|&j| j != gauge).collect();
    let f = |th: &[f64]| -> Vec<f64> {
        let y = g * toric_vector(&levels, gauge, th);
        (1..n).map(|j| y[j].norm_sqr() - w[j - 1]).collect()
    };
    let jac = |th: &[f64]| -> DMatrix<f64> {
        let z = toric_vector(&levels, gauge, th);
        let y = g * &z;
        DMatrix::from_fn(n - 1, n - 1, |row, col| {
            let (j, k) = (row + 1, free[col]);
            2.0 * (y[j].conj() * g[(j, k)] * I * TAU * z[k]).re
        })
    };
    let (roots, floor) = run_starts(&f, &jac, n - 1, cfg);
    let mut rank_max = 0;
    let pts: Vec<IntersectionPoint> = roots
        .iter()
        .map(|r| {
            rank_max = rank_max.max(r.rank);
            let u = g * toric_vector(&levels, gauge, &r.x);
            let alpha = projector(&u);
            // independent re-evaluation
            let residual = (1..n).map(|j| (u[j].norm_sqr() - w[j - 1]).abs()).fold(0.0, f64::max);
            let jac_det = toric_pairing(g, &alpha).determinant();
            IntersectionPoint { alpha, vector: Some(u), angles: r.x.clone(), residual, jac_det, component_id: 0, separation: 0.0 }
        })
        .collect();
    let clean_dim = (!roots.is_empty() && rank_max < n - 1).then(|| n - 1 - rank_max);
    let points = dedup(pts, cfg.dedup_radius);
    Ok(Intersections { none_found: points.is_empty(), points, residual_floor: floor, clean_dim })
}

/// Intersections of `g Lambda_v` with `Lambda_w` on the orbit of a regular
/// `lambda`; `v`, `w` are flat interior GZ coordinates. The unknown runs over
/// the angle chart of `Lambda_w`.
pub fn flag_intersections(lambda: &HighestWeight, g: &CMat, v: &[f64], w: &[f64], cfg: &SolverConfig) -> Result<Intersections> {
    cfg.validate()?;
    check_unitary(g)?;
    lambda.require_regular()?;
    let top: Vec<f64> = lambda.as_slice().iter().map(|x| *x as f64).collect();
    let rows_v = rows_with_top(v, &top)?;
    let rows_w = rows_with_top(w, &top)?;
    for rows in [&rows_v, &rows_w] {
        if interlacing_margin(rows) <= 0.0 {
            return Err(GzError::NotInterior(flatten(&rows[..rows.len() - 1])));
        }
    }
    let d = v.len();
    let gi = dagger(g);
    let f = |th: &[f64]| -> Vec<f64> {
        let (a, _) = fibre_point(&rows_w, th).expect("interior rows");
        let back = &gi * a * g;
        flatten(&gz_map(&back)).iter().zip(v).map(|(x, y)| x - y).collect()
    };
    let jac = |th: &[f64]| -> DMatrix<f64> {
        let h = 1e-7;
        let mut m = DMatrix::zeros(d, d);
        for k in 0..d {
            let mut a = th.to_vec();
            let mut b = th.to_vec();
            a[k] += h;
            b[k] -= h;
            let (fa, fb) = (f(&a), f(&b));
            for j in 0..d {
                m[(j, k)] = (fa[j] - fb[j]) / (2.0 * h);
            }
        }
        m
    };
    let (roots, floor) = run_starts(&f, &jac, d, cfg);
    let mut rank_max = 0;
    let pts: Vec<IntersectionPoint> = roots
        .iter()
        .map(|r| {
            rank_max = rank_max.max(r.rank);
            let (alpha, _) = fibre_point(&rows_w, &r.x).expect("interior rows");
            let back = &gi * &alpha * g;
            let mut residual: f64 = flatten(&gz_map(&back)).iter().zip(v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            residual = residual.max(flatten(&gz_map(&alpha)).iter().zip(w).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
            let jac_det = flag_pairing(g, &alpha).determinant();
            IntersectionPoint { alpha, vector: None, angles: r.x.clone(), residual, jac_det, component_id: 0, separation: 0.0 }
        })
        .collect();
    let clean_dim = (!roots.is_empty() && rank_max < d).then(|| d - rank_max);
    let points = dedup(pts, cfg.dedup_radius);
    Ok(Intersections { none_found: points.is_empty(), points, residual_floor: floor, clean_dim })
}

/// Matrix `alpha([Ad_g xi_j, eta_k])`.
pub fn pairing_matrix(alpha: &CMat, left: &[CMat], right: &[CMat]) -> DMatrix<f64> {
    DMatrix::from_fn(left.len(), right.len(), |j, k| kks_pairing(alpha, &left[j], &right[k]))
}

fn lattice_generator(m: &CMat) -> CMat {
    m * (I * TAU)
}

/// Toric pairing at `alpha` for the lattice basis `2 pi i E_jj`, `j >= 2`.
pub fn toric_pairing(g: &CMat, alpha: &CMat) -> DMatrix<f64> {
    let n = g.nrows();
    let e = |j: usize| {
        let mut m = CMat::zeros(n, n);
        m[(j, j)] = c(1.0, 0.0);
        lattice_generator(&m)
    };
    let gi = dagger(g);
    let left: Vec<CMat> = (1..n).map(|j| g * e(j) * &gi).collect();
    let right: Vec<CMat> = (1..n).map(e).collect();
    pairing_matrix(alpha, &left, &right)
}

/// Poisson brackets `{g_* M_j, M_k}` of the GZ functions at `alpha`.
pub fn flag_pairing(g: &CMat, alpha: &CMat) -> DMatrix<f64> {
    let gi = dagger(g);
    let back = &gi * alpha * g;
    let left: Vec<CMat> = gz_gradients(&back).iter().map(|x| lattice_generator(&(g * x * &gi))).collect();
    let right: Vec<CMat> = gz_gradients(alpha).iter().map(lattice_generator).collect();
    pairing_matrix(alpha, &left, &right)
}

/// Angle coordinates of `alpha` on the fibre over `w` (flat).
pub fn flag_angles(lambda: &HighestWeight, w: &[f64], alpha: &CMat) -> Result<Vec<f64>> {
    let top: Vec<f64> = lambda.as_slice().iter().map(|x| *x as f64).collect();
    Ok(fibre_angles(&rows_with_top(w, &top)?, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rotation;

    #[test]
    fn equator_meets_rotated_equator_twice() {
        let beta = 1.0;
        let g = rotation(2, 0, 1, beta);
        let res = toric_intersections(&g, &[0.5], &[0.5], &SolverConfig::for_dim(1)).unwrap();
        assert_eq!(res.points.len(), 2);
        for p in &res.points {
            assert!((p.jac_det.abs() - std::f64::consts::PI * beta.sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn disjoint_latitudes() {
        let g = rotation(2, 0, 1, 0.1);
        let res = toric_intersections(&g, &[0.9], &[0.1], &SolverConfig::for_dim(1)).unwrap();
        assert!(res.none_found && res.residual_floor > 0.1);
    }

    #[test]
    fn identity_is_clean() {
        let g = CMat::identity(3, 3);
        let res = toric_intersections(&g, &[0.3, 0.3], &[0.3, 0.3], &SolverConfig::for_dim(2)).unwrap();
        assert_eq!(res.clean_dim, Some(2));
    }
}
