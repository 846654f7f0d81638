//! Gelfand-Zetlin patterns, polytopes and the discrete data indexing bases.
//!
//! A pattern is stored row by row, `rows[k - 1]` holding the `k` entries of
//! level `k`; the top row is the highest weight. The interior of a pattern
//! (rows `1..n-1` concatenated) is the flat coordinate vector used everywhere
//! for GZ levels.

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{GzError, Result};

pub type Q = Ratio<i64>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HighestWeight {
    lambda: Vec<i64>,
}

impl HighestWeight {
    pub fn new(lambda: Vec<i64>) -> Result<Self> {
        if lambda.is_empty() || lambda.windows(2).any(|w| w[0] < w[1]) {
            return Err(GzError::NotDominant(lambda));
        }
        Ok(Self { lambda })
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.lambda
    }

    pub fn is_regular(&self) -> bool {
        self.lambda.windows(2).all(|w| w[0] > w[1])
    }

    pub fn require_regular(&self) -> Result<()> {
        if self.is_regular() {
            Ok(())
        } else {
            Err(GzError::NotRegular(self.lambda.clone()))
        }
    }

    /// `p * lambda + shift`, validated.
    pub fn scaled_shifted(&self, p: i64, shift: &[i64]) -> Result<Self> {
        Self::new(
            self.lambda
                .iter()
                .zip(shift)
                .map(|(l, s)| p * l + s)
                .collect(),
        )
    }

    /// Highest weight `(p, 0, ..., 0)` of the degree-`p` polynomial representation.
    pub fn symmetric_power(n: usize, p: i64) -> Self {
        let mut lambda = vec![0; n];
        lambda[0] = p;
        Self { lambda }
    }
}

impl std::fmt::Display for HighestWeight {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.lambda.iter().map(|x| x.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GzPattern {
    rows: Vec<Vec<i64>>,
}

impl GzPattern {
    /// Builds a pattern from rows listed bottom (length 1) to top (length n).
    pub fn from_rows(rows: Vec<Vec<i64>>) -> Result<Self> {
        for (k, row) in rows.iter().enumerate() {
            if row.len() != k + 1 {
                return Err(GzError::Invalid(format!("row {} has length {}", k + 1, row.len())));
            }
        }
        let pattern = Self { rows };
        if !pattern.interlaces() {
            return Err(GzError::Invalid("rows do not interlace".into()));
        }
        Ok(pattern)
    }

    /// Rebuilds a pattern from its top row and flat interior.
    pub fn from_interior(top: &[i64], interior: &[i64]) -> Result<Self> {
        let n = top.len();
        if interior.len() != n * (n - 1) / 2 {
            return Err(GzError::Invalid("interior has wrong length".into()));
        }
        let mut rows = Vec::with_capacity(n);
        let mut at = 0;
        for k in 1..n {
            rows.push(interior[at..at + k].to_vec());
            at += k;
        }
        rows.push(top.to_vec());
        Self::from_rows(rows)
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Row `k`, `1 <= k <= n`.
    pub fn row(&self, k: usize) -> &[i64] {
        &self.rows[k - 1]
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    pub fn top(&self) -> &[i64] {
        self.rows.last().unwrap()
    }

    pub fn row_sum(&self, k: usize) -> i64 {
        if k == 0 {
            0
        } else {
            self.rows[k - 1].iter().sum()
        }
    }

    /// Rows `1..n-1` concatenated.
    pub fn interior(&self) -> Vec<i64> {
        self.rows[..self.n() - 1].concat()
    }

    pub fn interlaces(&self) -> bool {
        (1..self.rows.len()).all(|k| {
            let (lower, upper) = (&self.rows[k - 1], &self.rows[k]);
            (0..k).all(|j| upper[j] >= lower[j] && lower[j] >= upper[j + 1])
        })
    }

    /// Full torus weight: entry `k` is row-sum(k) minus row-sum(k-1).
    pub fn weight(&self) -> Vec<i64> {
        (1..=self.n()).map(|k| self.row_sum(k) - self.row_sum(k - 1)).collect()
    }
}

/// Position of entry `j` (0-based) of row `k` (1-based) in the flat interior.
pub fn flat_index(k: usize, j: usize) -> usize {
    k * (k - 1) / 2 + j
}

/// All patterns with top row `lambda`, lexicographically decreasing from the
/// top row down, so `(1,0)` lists the bottom entry 1 before 0.
pub fn enumerate_patterns(lambda: &HighestWeight) -> Vec<GzPattern> {
    let n = lambda.n();
    let mut out = Vec::new();
    // rows are built from the top, stored in reverse until the pattern is complete
    let mut stack = vec![lambda.as_slice().to_vec()];
    fill(&mut stack, n, &mut out);
    out
}

fn fill(stack: &mut Vec<Vec<i64>>, n: usize, out: &mut Vec<GzPattern>) {
    let upper = stack.last().unwrap().clone();
    let k = upper.len();
    if k == 1 {
        let mut rows = stack.clone();
        rows.reverse();
        out.push(GzPattern { rows });
        return;
    }
    let mut row = vec![0i64; k - 1];
    choose(&upper, 0, &mut row, stack, n, out);
}

fn choose(
    upper: &[i64],
    j: usize,
    row: &mut Vec<i64>,
    stack: &mut Vec<Vec<i64>>,
    n: usize,
    out: &mut Vec<GzPattern>,
) {
    if j == row.len() {
        stack.push(row.clone());
        fill(stack, n, out);
        stack.pop();
        return;
    }
    let mut x = upper[j];
    while x >= upper[j + 1] {
        row[j] = x;
        choose(upper, j + 1, row, stack, n, out);
        x -= 1;
    }
}

/// Weyl dimension formula in exact integer arithmetic.
pub fn weyl_dimension(lambda: &HighestWeight) -> BigUint {
    let l = lambda.as_slice();
    let n = l.len();
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for i in 0..n {
        for j in i + 1..n {
            num *= BigUint::from((l[i] - l[j] + (j - i) as i64) as u64);
            den *= BigUint::from((j - i) as u64);
        }
    }
    num / den
}

/// Half-sums of roots in their three guises.
#[derive(Clone, Debug, PartialEq)]
pub struct RhoShift {
    /// `rho_n`, entries `(n - 2j + 1) / 2`.
    pub rho: Vec<Q>,
    /// Integral part, ceiling convention for half-integers.
    pub rho_bar: Vec<i64>,
    /// Triangular array with row `k` equal to `rho_k`.
    pub rho_tilde: Vec<Vec<Q>>,
}

impl RhoShift {
    pub fn new(n: usize) -> Self {
        let row = |k: usize| -> Vec<Q> {
            (1..=k)
                .map(|j| Q::new(k as i64 - 2 * j as i64 + 1, 2))
                .collect()
        };
        let rho = row(n);
        let rho_bar = rho
            .iter()
            .map(|r| {
                if *r >= Q::zero() {
                    r.ceil().to_integer()
                } else {
                    -((-*r).ceil().to_integer())
                }
            })
            .collect();
        Self {
            rho,
            rho_bar,
            rho_tilde: (1..=n).map(row).collect(),
        }
    }

    /// Integral weight used for the metaplectic twist: `rho` itself for odd
    /// `n`, `rho + (1/2, ..., 1/2)` for even `n`.
    pub fn metaplectic(&self) -> Vec<i64> {
        let half = if self.rho.len().is_multiple_of(2) { Q::new(1, 2) } else { Q::zero() };
        self.rho.iter().map(|r| (r + half).to_integer()).collect()
    }

    /// Offset added to pattern entries of `V(p lambda - metaplectic)` to
    /// obtain GZ levels scaled by `p`; flat layout.
    pub fn level_offset(&self) -> Vec<Q> {
        let n = self.rho.len();
        let half = if n.is_multiple_of(2) { Q::new(1, 2) } else { Q::zero() };
        self.rho_tilde[..n - 1]
            .iter()
            .flatten()
            .map(|r| r + half)
            .collect()
    }
}

/// Real GZ polytope of a highest weight: interlacing arrays with fixed top row.
#[derive(Clone, Debug)]
pub struct GzPolytope {
    lambda: Vec<i64>,
}

impl GzPolytope {
    pub fn new(lambda: &HighestWeight) -> Self {
        Self { lambda: lambda.as_slice().to_vec() }
    }

    pub fn dimension(&self) -> usize {
        let n = self.lambda.len();
        n * (n - 1) / 2
    }

    /// Constraints `x[a] >= x[b]` over the extended index set where
    /// `None` refers to a top-row constant.
    fn pairs(&self) -> Vec<(Slot, Slot)> {
        let n = self.lambda.len();
        let slot = |k: usize, j: usize| -> Slot {
            if k == n {
                Slot::Top(j)
            } else {
                Slot::Var(flat_index(k, j))
            }
        };
        let mut out = Vec::new();
        for k in 1..n {
            for j in 0..k {
                out.push((slot(k + 1, j), slot(k, j)));
                out.push((slot(k, j), slot(k + 1, j + 1)));
            }
        }
        out
    }

    pub fn contains(&self, x: &[Q]) -> bool {
        let get = |s: Slot| match s {
            Slot::Top(j) => Q::from_integer(self.lambda[j]),
            Slot::Var(i) => x[i],
        };
        x.len() == self.dimension() && self.pairs().into_iter().all(|(a, b)| get(a) >= get(b))
    }

    pub fn contains_f64(&self, x: &[f64], tol: f64) -> bool {
        self.margin(x) >= -tol
    }

    /// Smallest slack over all interlacing inequalities; positive inside,
    /// negative outside. Doubles as a distance-to-boundary diagnostic.
    pub fn margin(&self, x: &[f64]) -> f64 {
        let get = |s: Slot| match s {
            Slot::Top(j) => self.lambda[j] as f64,
            Slot::Var(i) => x[i],
        };
        self.pairs()
            .into_iter()
            .map(|(a, b)| get(a) - get(b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Sup-norm distance from `x` to the polytope, via feasibility of the
    /// difference-constraint system for a bisected radius.
    pub fn distance_linf(&self, x: &[f64]) -> f64 {
        if self.contains_f64(x, 0.0) {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        while !self.feasible_within(x, hi) {
            hi *= 2.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.feasible_within(x, mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    fn feasible_within(&self, x: &[f64], r: f64) -> bool {
        // node 0 is the zero reference, variables are 1..=d
        let d = self.dimension();
        let mut edges: Vec<(usize, usize, f64)> = Vec::new();
        let node = |i: usize| i + 1;
        for (i, xi) in x.iter().enumerate() {
            // y_i - 0 <= xi + r ; 0 - y_i <= -(xi - r)
            edges.push((0, node(i), xi + r));
            edges.push((node(i), 0, -(xi - r)));
        }
        for (a, b) in self.pairs() {
            // value(a) >= value(b), i.e. b - a <= 0
            match (a, b) {
                (Slot::Var(i), Slot::Var(j)) => edges.push((node(i), node(j), 0.0)),
                (Slot::Top(t), Slot::Var(j)) => edges.push((0, node(j), self.lambda[t] as f64)),
                (Slot::Var(i), Slot::Top(t)) => edges.push((node(i), 0, -(self.lambda[t] as f64))),
                (Slot::Top(s), Slot::Top(t)) => {
                    if self.lambda[s] < self.lambda[t] {
                        return false;
                    }
                }
            }
        }
        let mut dist = vec![0.0f64; d + 1];
        for _ in 0..=d {
            let mut changed = false;
            for &(u, v, w) in &edges {
                if dist[u] + w < dist[v] - 1e-15 {
                    dist[v] = dist[u] + w;
                    changed = true;
                }
            }
            if !changed {
                return true;
            }
        }
        false
    }
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    Top(usize),
    Var(usize),
}

/// `(1/p) (Delta_{p lambda + rho_bar} ∩ Z^{n(n-1)/2})` as exact rationals,
/// flat interior coordinates.
pub fn scaled_lattice(lambda: &HighestWeight, p: i64) -> Result<Vec<Vec<Q>>> {
    lambda.require_regular()?;
    if p <= 0 {
        return Err(GzError::Invalid("p must be positive".into()));
    }
    let shifted = lambda.scaled_shifted(p, &RhoShift::new(lambda.n()).rho_bar)?;
    Ok(enumerate_patterns(&shifted)
        .into_iter()
        .map(|g| g.interior().into_iter().map(|x| Q::new(x, p)).collect())
        .collect())
}

/// GZ levels `(nu + rho_tilde [+ 1/2]) / p` of the patterns of
/// `V(p lambda - rho_metaplectic)`; all lie strictly inside `Delta_lambda`.
pub fn semiclassical_lattice(lambda: &HighestWeight, p: i64) -> Result<Vec<(GzPattern, Vec<Q>)>> {
    lambda.require_regular()?;
    let rho = RhoShift::new(lambda.n());
    let shift: Vec<i64> = rho.metaplectic().iter().map(|x| -x).collect();
    let hw = lambda.scaled_shifted(p, &shift)?;
    let offset = rho.level_offset();
    Ok(enumerate_patterns(&hw)
        .into_iter()
        .map(|g| {
            let levels = g
                .interior()
                .iter()
                .zip(&offset)
                .map(|(x, o)| (Q::from_integer(*x) + o) / p)
                .collect();
            (g, levels)
        })
        .collect())
}

/// Sup-norm Hausdorff distance between a finite point set and the polytope,
/// the polytope side estimated on the supplied samples.
pub fn hausdorff_linf(points: &[Vec<f64>], polytope: &GzPolytope, samples: &[Vec<f64>]) -> f64 {
    let outward = points
        .iter()
        .map(|x| polytope.distance_linf(x))
        .fold(0.0, f64::max);
    let inward = samples
        .iter()
        .map(|s| {
            points
                .iter()
                .map(|x| x.iter().zip(s).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    outward.max(inward)
}

pub fn to_f64(x: &[Q]) -> Vec<f64> {
    x.iter().map(|q| q.to_f64().unwrap()).collect()
}

/// Multi-indices of total degree `p` in `n` variables, lexicographically decreasing.
pub fn compositions(n: usize, p: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur = vec![0i64; n];
    compose(0, p, &mut cur, &mut out);
    out
}

fn compose(j: usize, rest: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
    let n = cur.len();
    if j == n - 1 {
        cur[j] = rest;
        out.push(cur.clone());
        return;
    }
    for x in (0..=rest).rev() {
        cur[j] = x;
        compose(j + 1, rest - x, cur, out);
    }
}
