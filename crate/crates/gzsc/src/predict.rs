//! Semiclassical predictions for matrix elements between Bohr-Sommerfeld
//! fibres: determinant amplitudes, symplectic areas and Maslov offsets.

use itertools::Itertools;
use num_complex::Complex64;
use serde::Serialize;

use crate::combinatorics::HighestWeight;
use crate::error::{GzError, Result};
use crate::geometry::{fibre_angles, fibre_point, rows_with_top};
use crate::intersect::{flag_pairing, toric_pairing, IntersectionPoint, Intersections};
use crate::linalg::{dagger, unit, CMat, CVec, I, TAU};

/// One leg of an area path: straight in the angle chart of a fibre, with
/// constant actions. `frames` maps angle nodes to unitary frames whose
/// columns carry the weights of the path.
#[derive(Clone, Debug)]
pub struct FibreLeg {
    pub actions: Vec<f64>,
    pub nodes: Vec<Vec<f64>>,
    pub start_frame: CMat,
    pub end_frame: CMat,
}

impl FibreLeg {
    /// Straight leg from `from` to `to` (turns), with `steps` segments.
    pub fn straight(actions: Vec<f64>, from: &[f64], to: &[f64], steps: usize, frame: impl Fn(&[f64]) -> CMat) -> Self {
        let steps = steps.max(1);
        let nodes: Vec<Vec<f64>> = (0..=steps)
            .map(|s| {
                let t = s as f64 / steps as f64;
                from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
            })
            .collect();
        let start_frame = frame(&nodes[0]);
        let end_frame = frame(&nodes[steps]);
        Self { actions, nodes, start_frame, end_frame }
    }

    /// Trapezoid rule for `sum_j I_j d theta_j`.
    fn action_integral(&self) -> f64 {
        self.nodes
            .iter()
            .tuple_windows()
            .map(|(a, b)| self.actions.iter().zip(a.iter().zip(b)).map(|(i, (x, y))| i * (y - x)).sum::<f64>())
            .sum()
    }
}

/// Closed path: `leg1` inside `g Lambda_v`, then `leg2` inside `Lambda_w`.
#[derive(Clone, Debug)]
pub struct AreaPath {
    pub leg1: FibreLeg,
    pub leg2: FibreLeg,
    /// Weights attached to the frame columns (the orbit's spectrum).
    pub weight: Vec<f64>,
}

impl AreaPath {
    pub fn reversed(&self) -> Self {
        let rev = |l: &FibreLeg| FibreLeg {
            actions: l.actions.clone(),
            nodes: l.nodes.iter().rev().cloned().collect(),
            start_frame: l.end_frame.clone(),
            end_frame: l.start_frame.clone(),
        };
        Self { leg1: rev(&self.leg2), leg2: rev(&self.leg1), weight: self.weight.clone() }
    }
}

fn junction(weight: &[f64], from: &CMat, to: &CMat) -> f64 {
    let t = from.adjoint() * to;
    weight.iter().enumerate().map(|(j, w)| w * t[(j, j)].arg()).sum::<f64>() / TAU
}

/// Symplectic area (in units of the integral class) of a disk bounded by
/// `path`, from the action integrals of the legs and the frame mismatch at
/// the two junctions. Refines the legs once and fails if the value moves.
pub fn symplectic_area(path: &AreaPath) -> Result<f64> {
    let eval = |p: &AreaPath| {
        p.leg1.action_integral()
            + p.leg2.action_integral()
            + junction(&p.weight, &p.leg1.end_frame, &p.leg2.start_frame)
            + junction(&p.weight, &p.leg2.end_frame, &p.leg1.start_frame)
    };
    let coarse = eval(path);
    let refine = |l: &FibreLeg| {
        let mut nodes = Vec::with_capacity(2 * l.nodes.len());
        for (a, b) in l.nodes.iter().tuple_windows() {
            nodes.push(a.clone());
            nodes.push(a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect());
        }
        nodes.push(l.nodes.last().cloned().unwrap_or_default());
        FibreLeg { nodes, ..l.clone() }
    };
    let fine = eval(&AreaPath { leg1: refine(&path.leg1), leg2: refine(&path.leg2), weight: path.weight.clone() });
    if (fine - coarse).abs() > 1e-8 {
        return Err(GzError::NoConvergence(format!("area quadrature moved by {:e} under refinement", fine - coarse)));
    }
    Ok(fine)
}

fn principal_turns(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r > 0.5 {
        r - 1.0
    } else {
        r
    }
}

/// Endpoint `to + k`, `k` integral, with displacement from `from` nearest
/// `hint` (or the principal branch).
fn straight_to(from: &[f64], to: &[f64], hint: Option<&[f64]>) -> Vec<f64> {
    from.iter()
        .zip(to)
        .enumerate()
        .map(|(j, (a, b))| {
            let h = hint.map_or(0.0, |h| h[j]);
            a + h + principal_turns(b - a - h)
        })
        .collect()
}

/// Order of `points` following `anchors` (greedy nearest locations), or the
/// solver's order without anchors.
fn anchored_order(points: &Intersections, anchors: Option<&[Anchor]>) -> Result<Vec<usize>> {
    let m = points.points.len();
    let Some(anchors) = anchors else {
        return Ok((0..m).collect());
    };
    if anchors.len() != m {
        return Err(GzError::Invalid(format!("{m} intersection components, reference has {}", anchors.len())));
    }
    let locs: Vec<Vec<f64>> = points.points.iter().map(|q| location(&q.alpha)).collect();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let mut pairs: Vec<(f64, usize, usize)> =
        anchors.iter().enumerate().flat_map(|(i, r)| locs.iter().enumerate().map(move |(j, l)| (dist(&r.location, l), i, j))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut slot = vec![usize::MAX; m];
    let mut used = vec![false; m];
    for (_, i, j) in pairs {
        if slot[i] == usize::MAX && !used[j] {
            slot[i] = j;
            used[j] = true;
        }
    }
    Ok(slot)
}

fn split_hint(anchors: Option<&[Anchor]>, q: usize, first: usize) -> (Option<&[f64]>, Option<&[f64]>) {
    match anchors {
        Some(a) => (Some(&a[q].windings[..first]), Some(&a[q].windings[first..])),
        None => (None, None),
    }
}

fn windings(leg1: &FibreLeg, leg2: &FibreLeg) -> Vec<f64> {
    let d = |l: &FibreLeg| -> Vec<f64> {
        let (a, b) = (&l.nodes[0], l.nodes.last().unwrap());
        a.iter().zip(b).map(|(x, y)| y - x).collect()
    };
    let mut w = d(leg1);
    w.extend(d(leg2));
    w
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MaslovMode {
    Calibrated,
    Predicted,
}

#[derive(Clone, Debug, Serialize)]
pub struct Component {
    pub amplitude: f64,
    /// Area relative to the first component.
    pub area: f64,
    pub jac_det: f64,
    /// Signature of the symmetric part of the pairing matrix.
    pub signature: i32,
    pub maslov: u8,
    /// Real and imaginary parts of the intersection point, row-major.
    pub location: Vec<f64>,
    /// Angle displacements of the two legs of the area path, in turns.
    pub windings: Vec<f64>,
}

/// Identity of an intersection component across scales: where it sits and
/// which branch of the angle displacements its area path uses.
#[derive(Clone, Debug, Serialize)]
pub struct Anchor {
    pub location: Vec<f64>,
    pub windings: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Prediction {
    /// Representation degree or scale.
    pub p: i64,
    /// Semiclassical parameter multiplying areas.
    pub semiclassical: f64,
    /// `exact * semiclassical^power` is compared against `total`.
    pub power: f64,
    pub components: Vec<Component>,
    pub decay: bool,
}

impl Prediction {
    pub fn total(&self) -> Complex64 {
        let k: Vec<u8> = self.components.iter().map(|q| q.maslov).collect();
        self.total_with(&k)
    }

    pub fn total_with(&self, maslov: &[u8]) -> Complex64 {
        self.components
            .iter()
            .zip(maslov)
            .map(|(q, k)| I.powu(*k as u32) * Complex64::from_polar(q.amplitude, TAU * self.semiclassical * q.area))
            .sum()
    }

    pub fn scaled(&self, exact: Complex64) -> Complex64 {
        exact * self.semiclassical.powf(self.power)
    }

    /// Assigns Maslov offsets from signatures relative to the first component.
    pub fn predicted_maslov(&mut self) {
        let base = self.components.first().map(|q| q.signature).unwrap_or(0);
        for q in &mut self.components {
            q.maslov = ((q.signature - base) / 2).rem_euclid(4) as u8;
        }
    }

    /// Component identities to carry to other scales.
    pub fn anchors(&self) -> Vec<Anchor> {
        self.components.iter().map(|q| Anchor { location: q.location.clone(), windings: q.windings.clone() }).collect()
    }

    pub fn with_maslov(mut self, k: &[u8]) -> Self {
        for (q, m) in self.components.iter_mut().zip(k) {
            q.maslov = *m;
        }
        self
    }
}

/// Prefactor exponents: toric `(n - 1)/2`, flag `n(n - 1)/4`, both half the
/// complex dimension of the orbit.
pub fn prefactor_power(mode_flag: bool, n: usize) -> f64 {
    if mode_flag {
        (n * (n - 1)) as f64 / 4.0
    } else {
        (n - 1) as f64 / 2.0
    }
}

/// Aligns `exact` to `pred` by one unit scalar; returns the residual and the scalar.
pub fn align(exact: Complex64, pred: Complex64) -> (f64, Complex64) {
    let z = unit(pred * exact.conj());
    ((pred - exact * z).norm(), z)
}

/// Best offsets in `(Z/4)^{m-1}` (first fixed at 0) for one exact value.
pub fn calibrate_maslov(pred: &Prediction, exact: Complex64) -> Vec<u8> {
    calibrate_maslov_joint(&[(pred, exact)])
}

/// Offsets minimizing the summed squared aligned residual over several
/// samples with matched components.
pub fn calibrate_maslov_joint(samples: &[(&Prediction, Complex64)]) -> Vec<u8> {
    let m = samples.first().map(|s| s.0.components.len()).unwrap_or(0);
    if m == 0 {
        return vec![];
    }
    let cost = |k: &[u8]| -> f64 { samples.iter().map(|(pr, ex)| align(pr.scaled(*ex), pr.total_with(k)).0.powi(2)).sum() };
    std::iter::repeat_n(0u8..4, m - 1)
        .multi_cartesian_product()
        .map(|rest| {
            let mut k = vec![0u8];
            k.extend(rest);
            k
        })
        .min_by(|a, b| cost(a).total_cmp(&cost(b)))
        .unwrap_or_else(|| vec![0])
}

fn signature(m: &nalgebra::DMatrix<f64>) -> i32 {
    let s = (m + m.transpose()) * 0.5;
    s.symmetric_eigenvalues().iter().map(|x| x.signum() as i32).sum()
}

fn location(alpha: &CMat) -> Vec<f64> {
    alpha.transpose().iter().flat_map(|z| [z.re, z.im]).collect()
}

const AREA_STEPS: usize = 8;

/// Toric prediction for `<g e_nu, e_mu>` on degree-`p` polynomials, with
/// `points` the intersections at the semiclassical levels `(nu_j + 1/2)/P`,
/// `P = p + n/2`.
///
/// With `anchors`, components follow the anchors' order and area branches.
pub fn predict_toric(p: i64, g: &CMat, points: &Intersections, anchors: Option<&[Anchor]>) -> Result<Prediction> {
    let n = g.nrows();
    let big_p = p as f64 + n as f64 / 2.0;
    let mut pred = Prediction { p, semiclassical: big_p, power: prefactor_power(false, n), components: vec![], decay: points.points.is_empty() };
    if pred.decay {
        return Ok(pred);
    }
    if points.clean_dim.is_some() {
        return Err(GzError::Singular(0.0));
    }
    let gi = dagger(g);
    let order = anchored_order(points, anchors)?;
    let pts: Vec<&IntersectionPoint> = order.iter().map(|i| &points.points[*i]).collect();
    // phase fixed on coordinate 0, nonzero at interior levels, so windings
    // do not depend on the solver's gauge chart
    let us: Vec<CVec> = pts
        .iter()
        .map(|q| {
            let u = q.vector.clone().expect("toric point");
            let ph = unit(u[0]).conj();
            u * ph
        })
        .collect();
    let ys: Vec<CVec> = us.iter().map(|u| &gi * u).collect();
    let turns = |z: &CVec| -> Vec<f64> { z.iter().map(|x| x.arg() / TAU).collect() };
    let w: Vec<f64> = us[0].iter().map(|x| x.norm_sqr()).collect();
    let v: Vec<f64> = ys[0].iter().map(|x| x.norm_sqr()).collect();
    let chart = |levels: Vec<f64>, pre: Option<CMat>| {
        move |th: &[f64]| -> CMat {
            let z = CVec::from_iterator(levels.len(), levels.iter().zip(th).map(|(l, t)| Complex64::from_polar(l.sqrt(), TAU * t)));
            let col = CMat::from_column_slice(z.len(), 1, z.as_slice());
            match &pre {
                Some(m) => m * col,
                None => col,
            }
        }
    };
    for (q, pt) in pts.iter().enumerate() {
        if pt.jac_det.abs() < 1e-10 {
            return Err(GzError::Singular(pt.jac_det));
        }
        let (h1, h2) = split_hint(anchors, q, n);
        let (from1, to2) = (turns(&ys[q]), turns(&us[q]));
        let leg1 = FibreLeg::straight(v.clone(), &from1, &straight_to(&from1, &turns(&ys[0]), h1), AREA_STEPS, chart(v.clone(), Some(g.clone())));
        let from2 = turns(&us[0]);
        let leg2 = FibreLeg::straight(w.clone(), &from2, &straight_to(&from2, &to2, h2), AREA_STEPS, chart(w.clone(), None));
        let windings = windings(&leg1, &leg2);
        let area = symplectic_area(&AreaPath { leg1, leg2, weight: vec![1.0] })?;
        let b = toric_pairing(g, &pt.alpha);
        pred.components.push(Component {
            amplitude: pt.jac_det.abs().powf(-0.5),
            area,
            jac_det: pt.jac_det,
            signature: signature(&b),
            maslov: 0,
            location: location(&pt.alpha),
            windings,
        });
    }
    Ok(pred)
}

/// Flag-manifold prediction at scale `p` for flat levels `v`, `w`.
pub fn predict_flag(
    p: i64,
    lambda: &HighestWeight,
    g: &CMat,
    v: &[f64],
    w: &[f64],
    points: &Intersections,
    anchors: Option<&[Anchor]>,
) -> Result<Prediction> {
    let n = g.nrows();
    let mut pred = Prediction { p, semiclassical: p as f64, power: prefactor_power(true, n), components: vec![], decay: points.points.is_empty() };
    if pred.decay {
        return Ok(pred);
    }
    if points.clean_dim.is_some() {
        return Err(GzError::Singular(0.0));
    }
    let top: Vec<f64> = lambda.as_slice().iter().map(|x| *x as f64).collect();
    let rows_v = rows_with_top(v, &top)?;
    let rows_w = rows_with_top(w, &top)?;
    let gi = dagger(g);
    let order = anchored_order(points, anchors)?;
    let pts: Vec<&IntersectionPoint> = order.iter().map(|i| &points.points[*i]).collect();
    let angles_v: Vec<Vec<f64>> = pts.iter().map(|q| fibre_angles(&rows_v, &(&gi * &q.alpha * g))).collect();
    let angles_w: Vec<Vec<f64>> = pts.iter().map(|q| fibre_angles(&rows_w, &q.alpha)).collect();
    let frame_v = |th: &[f64]| g * fibre_point(&rows_v, th).expect("interior").1;
    let frame_w = |th: &[f64]| fibre_point(&rows_w, th).expect("interior").1;
    for (q, pt) in pts.iter().enumerate() {
        if pt.jac_det.abs() < 1e-10 {
            return Err(GzError::Singular(pt.jac_det));
        }
        let (h1, h2) = split_hint(anchors, q, v.len());
        let leg1 = FibreLeg::straight(v.to_vec(), &angles_v[q], &straight_to(&angles_v[q], &angles_v[0], h1), AREA_STEPS, frame_v);
        let leg2 = FibreLeg::straight(w.to_vec(), &angles_w[0], &straight_to(&angles_w[0], &angles_w[q], h2), AREA_STEPS, frame_w);
        let windings = windings(&leg1, &leg2);
        let area = symplectic_area(&AreaPath { leg1, leg2, weight: top.clone() })?;
        let b = flag_pairing(g, &pt.alpha);
        pred.components.push(Component {
            amplitude: pt.jac_det.abs().powf(-0.5),
            area,
            jac_det: pt.jac_det,
            signature: signature(&b),
            maslov: 0,
            location: location(&pt.alpha),
            windings,
        });
    }
    Ok(pred)
}

/// `sum_q a_q^2`, the window average of `|total|^2` under phase decoherence.
pub fn incoherent_sum(pred: &Prediction) -> f64 {
    pred.components.iter().map(|q| q.amplitude * q.amplitude).sum()
}
