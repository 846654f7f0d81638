//! Sweeps over `p` comparing exact matrix elements with the semiclassical
//! predictions, and the statistics reported on them.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

use crate::cache::{cache_key, Cache, Lookup};
use crate::combinatorics::{semiclassical_lattice, to_f64, GzPolytope, HighestWeight};
use crate::error::{GzError, Result};
use crate::intersect::{flag_intersections, toric_intersections, Intersections, SolverConfig};
use crate::linalg::{c, fit_line, haar_unitary, near_identity, rotation, CMat};
use crate::monomial::{exact_matrix_element, wigner_d, MonomialModule};
use crate::predict::{align, calibrate_maslov_joint, incoherent_sum, predict_flag, predict_toric, Anchor, Component, MaslovMode, Prediction};
use crate::representation::GzModule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Toric,
    Flag,
    Wigner,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Double,
    High,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub n: usize,
    pub lambda: Option<HighestWeight>,
    pub g: CMat,
    pub g_label: String,
    /// Target levels: toric moments (length `n - 1`) or flat GZ coordinates.
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub p_list: Vec<i64>,
    pub maslov: MaslovMode,
    pub calibrate_p: Option<i64>,
    /// Number of consecutive sweep values, from `calibrate_p` on, used
    /// jointly to fit the offsets.
    pub calibrate_count: usize,
    pub precision: Precision,
    pub starts: Option<usize>,
    pub seed: u64,
    /// Largest representation dimension allowed on the exact side.
    pub guard: usize,
    /// Records with `p >= envelope_from` enter the envelope fit.
    pub envelope_from: i64,
    pub window: usize,
    pub decay_from: i64,
    pub csv: Option<String>,
    pub json: Option<String>,
    /// Prefix for two-column `p value` files.
    pub dat: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonRecord {
    pub p: i64,
    pub degree: i64,
    pub semiclassical: f64,
    /// Highest weight of the representation the exact value comes from.
    pub highest: Vec<i64>,
    pub source: Vec<i64>,
    pub target: Vec<i64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub exact: [f64; 2],
    pub predicted: [f64; 2],
    pub abs_scaled_exact: f64,
    pub abs_predicted: f64,
    pub residual: f64,
    /// Unit scalar applied to the exact value.
    pub alignment: [f64; 2],
    pub incoherent: f64,
    pub components: Vec<Component>,
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, Serialize, Default)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub ci95: [f64; 2],
    pub points: usize,
}

#[derive(Clone, Debug, Serialize, Default)]
pub struct EnvelopeFit {
    pub observed_max: f64,
    pub observed_min: f64,
    pub predicted_max: f64,
    pub predicted_min: f64,
    /// Largest of the two deviations relative to `predicted_max`.
    pub relative_error: f64,
}

#[derive(Clone, Debug, Serialize, Default)]
pub struct DecayVerdict {
    pub monotone: bool,
    pub final_value: f64,
    pub values: Vec<(i64, f64)>,
}

#[derive(Clone, Debug, Serialize, Default)]
pub struct WindowRms {
    pub start: i64,
    /// Mean of `|scaled exact|^2`.
    pub observed: f64,
    /// Mean of the incoherent sum `sum_q a_q^2`.
    pub predicted: f64,
    pub ratio: f64,
    /// Mean of `|predicted total|^2`, with interference.
    pub coherent: f64,
}

/// Frozen Maslov offsets and the scales they were fitted on.
#[derive(Clone, Debug, Serialize)]
pub struct Calibration {
    pub p: Vec<i64>,
    pub maslov: Vec<u8>,
}

#[derive(Clone, Debug, Serialize, Default)]
pub struct ReportSummary {
    pub slope: Option<SlopeFit>,
    pub envelope: Option<EnvelopeFit>,
    pub decay: Option<DecayVerdict>,
    pub windows: Vec<WindowRms>,
    pub calibration: Option<Calibration>,
    pub runtime_ms: u128,
    pub cache_hits: usize,
    pub cache_misses: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub mode: Mode,
    pub n: usize,
    pub g: String,
    pub records: Vec<ComparisonRecord>,
    pub summary: ReportSummary,
}

fn cfg_err(msg: impl Into<String>) -> GzError {
    GzError::Invalid(msg.into())
}

/// Reads `pi`, `k*pi/m`, `2pi/5` style angles and plain numbers.
pub fn parse_angle(s: &str) -> Result<f64> {
    let t = s.trim().replace(' ', "");
    if let Some(i) = t.find("pi") {
        let head = t[..i].trim_end_matches('*');
        let tail = &t[i + 2..];
        let k: f64 = if head.is_empty() { 1.0 } else { head.parse().map_err(|_| cfg_err(format!("bad angle {s}")))? };
        let m: f64 = match tail.strip_prefix('/') {
            Some(d) => d.parse().map_err(|_| cfg_err(format!("bad angle {s}")))?,
            None if tail.is_empty() => 1.0,
            None => return Err(cfg_err(format!("bad angle {s}"))),
        };
        return Ok(k * std::f64::consts::PI / m);
    }
    t.parse().map_err(|_| cfg_err(format!("bad angle {s}")))
}

/// Numbers or fractions `a/b`, separated by commas or spaces.
pub fn parse_floats(s: &str) -> Result<Vec<f64>> {
    let one = |x: &str| -> Result<f64> {
        let bad = || cfg_err(format!("bad number {x}"));
        match x.split_once('/') {
            Some((a, b)) => Ok(a.parse::<f64>().map_err(|_| bad())? / b.parse::<f64>().map_err(|_| bad())?),
            None => x.parse().map_err(|_| bad()),
        }
    };
    s.split([',', ' ']).filter(|x| !x.is_empty()).map(one).collect()
}

pub fn parse_ints(s: &str) -> Result<Vec<i64>> {
    s.split([',', ' ']).filter(|x| !x.is_empty()).map(|x| x.parse().map_err(|_| cfg_err(format!("bad integer {x}")))).collect()
}

/// `a..b` (inclusive), `a..b:step`, or a comma list.
pub fn parse_p_list(s: &str) -> Result<Vec<i64>> {
    if let Some((a, rest)) = s.split_once("..") {
        let (b, step) = match rest.split_once(':') {
            Some((b, st)) => (b, st.trim().parse::<i64>().map_err(|_| cfg_err("bad step"))?),
            None => (rest, 1),
        };
        let a: i64 = a.trim().parse().map_err(|_| cfg_err("bad range"))?;
        let b: i64 = b.trim().parse().map_err(|_| cfg_err("bad range"))?;
        if step <= 0 || a > b || a <= 0 {
            return Err(cfg_err("empty or nonpositive p range"));
        }
        return Ok((a..=b).step_by(step as usize).collect());
    }
    let v = parse_ints(s)?;
    if v.is_empty() || v.iter().any(|p| *p <= 0) {
        return Err(cfg_err("p list must be positive"));
    }
    Ok(v)
}

/// Square complex matrix, one row per line, entries `re,im` separated by
/// whitespace. Blank lines and `#` comments are skipped.
pub fn parse_matrix(text: &str) -> Result<CMat> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(parse_floats)
        .collect::<Result<_>>()?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != 2 * n) {
        return Err(cfg_err("matrix file must have n rows of n re,im pairs"));
    }
    Ok(CMat::from_fn(n, n, |i, j| c(rows[i][2 * j], rows[i][2 * j + 1])))
}

pub fn format_matrix(m: &CMat) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.17e},{:.17e}", m[(i, j)].re, m[(i, j)].im)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// `rotation:BETA`, `haar:SEED`, `near:SEED:SCALE` or `file:PATH`.
pub fn parse_g(spec: &str, n: usize) -> Result<CMat> {
    let (kind, arg) = spec.split_once(':').ok_or_else(|| cfg_err(format!("bad g source {spec}")))?;
    match kind.trim() {
        "rotation" => Ok(rotation(n, 0, 1, parse_angle(arg)?)),
        "haar" => {
            let seed: u64 = arg.trim().parse().map_err(|_| cfg_err("bad haar seed"))?;
            Ok(haar_unitary(n, &mut ChaCha8Rng::seed_from_u64(seed)))
        }
        "near" => {
            let (seed, scale) = arg.split_once(':').ok_or_else(|| cfg_err("near needs SEED:SCALE"))?;
            let seed: u64 = seed.trim().parse().map_err(|_| cfg_err("bad near seed"))?;
            let scale: f64 = scale.trim().parse().map_err(|_| cfg_err("bad near scale"))?;
            Ok(near_identity(n, scale, &mut ChaCha8Rng::seed_from_u64(seed)))
        }
        "file" => {
            let text = std::fs::read_to_string(arg.trim()).map_err(|e| cfg_err(format!("{arg}: {e}")))?;
            let g = parse_matrix(&text)?;
            if g.nrows() != n {
                return Err(cfg_err("matrix size does not match n"));
            }
            Ok(g)
        }
        other => Err(cfg_err(format!("unknown g source {other}"))),
    }
}

impl ExperimentConfig {
    /// Flat `key = value` text; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| cfg_err(format!("line {}: expected key = value", i + 1)))?;
            if kv.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(cfg_err(format!("line {}: duplicate key {}", i + 1, k.trim())));
            }
        }
        let take = |k: &str| kv.get(k).cloned();
        let need = |k: &str| take(k).ok_or_else(|| cfg_err(format!("missing key {k}")));
        let known = [
            "mode", "n", "lambda", "g", "v", "w", "p", "maslov", "calibrate_p", "calibrate_count", "precision", "starts", "seed", "guard",
            "envelope_from", "window", "decay_from", "csv", "json", "dat",
        ];
        if let Some(k) = kv.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(cfg_err(format!("unknown key {k}")));
        }
        let mode = match need("mode")?.as_str() {
            "toric" => Mode::Toric,
            "flag" => Mode::Flag,
            "wigner" => Mode::Wigner,
            m => return Err(cfg_err(format!("unknown mode {m}"))),
        };
        let lambda = take("lambda").map(|s| parse_ints(&s).and_then(HighestWeight::new)).transpose()?;
        let n = match (take("n"), &lambda) {
            (Some(s), _) => s.parse().map_err(|_| cfg_err("bad n"))?,
            (None, Some(l)) => l.n(),
            (None, None) if mode == Mode::Wigner => 2,
            _ => return Err(cfg_err("missing key n")),
        };
        if n < 2 {
            return Err(cfg_err("n must be at least 2"));
        }
        if mode == Mode::Wigner && n != 2 {
            return Err(cfg_err("wigner mode needs n = 2"));
        }
        if mode == Mode::Flag && lambda.as_ref().map(|l| l.n()) != Some(n) {
            return Err(cfg_err("flag mode needs lambda of length n"));
        }
        let g_label = need("g")?;
        if mode == Mode::Wigner && !g_label.starts_with("rotation:") {
            return Err(cfg_err("wigner mode needs g = rotation:BETA"));
        }
        let g = parse_g(&g_label, n)?;
        let v = parse_floats(&need("v")?)?;
        let w = parse_floats(&need("w")?)?;
        let want = if mode == Mode::Flag { n * (n - 1) / 2 } else { n - 1 };
        if v.len() != want || w.len() != want {
            return Err(cfg_err(format!("v and w need {want} entries")));
        }
        let inside = |t: &[f64]| match (&lambda, mode) {
            (Some(l), Mode::Flag) => GzPolytope::new(l).margin(t) > 0.0,
            _ => t.iter().all(|x| *x > 0.0) && t.iter().sum::<f64>() < 1.0,
        };
        if !inside(&v) || !inside(&w) {
            return Err(cfg_err("v and w must lie in the interior of the level polytope (flag levels are row 1, row 2, ...)"));
        }
        let maslov = match take("maslov").as_deref().unwrap_or("calibrated") {
            "calibrated" => MaslovMode::Calibrated,
            "predicted" => MaslovMode::Predicted,
            m => return Err(cfg_err(format!("unknown maslov mode {m}"))),
        };
        let precision = match take("precision").as_deref().unwrap_or("double") {
            "double" => Precision::Double,
            "high" => Precision::High,
            m => return Err(cfg_err(format!("unknown precision {m}"))),
        };
        let int = |k: &str, d: i64| -> Result<i64> { take(k).map(|s| s.parse().map_err(|_| cfg_err(format!("bad {k}")))).unwrap_or(Ok(d)) };
        Ok(Self {
            mode,
            n,
            lambda,
            g,
            g_label,
            v,
            w,
            p_list: parse_p_list(&need("p")?)?,
            maslov,
            calibrate_count: int("calibrate_count", 1)?.max(1) as usize,
            calibrate_p: take("calibrate_p").map(|s| s.parse().map_err(|_| cfg_err("bad calibrate_p"))).transpose()?,
            precision,
            starts: take("starts").map(|s| s.parse().map_err(|_| cfg_err("bad starts"))).transpose()?,
            seed: int("seed", 0)? as u64,
            guard: int("guard", 200_000)? as usize,
            envelope_from: int("envelope_from", 100)?,
            window: int("window", 8)? as usize,
            decay_from: int("decay_from", 30)?,
            csv: take("csv"),
            json: take("json"),
            dat: take("dat"),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| cfg_err(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }

    pub fn solver(&self, dim: usize) -> SolverConfig {
        let mut s = SolverConfig::for_dim(dim);
        if let Some(k) = self.starts {
            s.starts = k;
        }
        s.seed = self.seed;
        s
    }
}

/// Degree of the polynomial representation used at scale `p`: shifted by
/// `n/2` for even `n`.
pub fn toric_degree(n: usize, p: i64) -> i64 {
    if n.is_multiple_of(2) {
        p - n as i64 / 2
    } else {
        p
    }
}

/// Multi-index of degree `d` whose levels `(nu_j + 1/2) / (d + n/2)` are
/// nearest to `target`; ties go to the lexicographically smaller index.
pub fn nearest_multi_index(d: i64, target: &[f64]) -> Result<Vec<i64>> {
    let n = target.len() + 1;
    let big = d as f64 + n as f64 / 2.0;
    let cands: Vec<[i64; 2]> = target
        .iter()
        .map(|t| {
            let x = t * big - 0.5;
            [x.floor() as i64, x.ceil() as i64]
        })
        .collect();
    let mut best: Option<(f64, Vec<i64>)> = None;
    for mask in 0..(1u32 << (n - 1)) {
        let tail: Vec<i64> = (0..n - 1).map(|j| cands[j][((mask >> j) & 1) as usize]).collect();
        let head = d - tail.iter().sum::<i64>();
        if head < 0 || tail.iter().any(|x| *x < 0) {
            continue;
        }
        let dist: f64 = tail.iter().zip(target).map(|(x, t)| ((*x as f64 + 0.5) / big - t).powi(2)).sum();
        let mut nu = vec![head];
        nu.extend(tail);
        let better = match &best {
            None => true,
            Some((bd, bn)) => dist < bd - 1e-15 || ((dist - bd).abs() <= 1e-15 && nu < *bn),
        };
        if better {
            best = Some((dist, nu));
        }
    }
    best.map(|b| b.1).ok_or_else(|| cfg_err(format!("no multi-index of degree {d} near {target:?}")))
}

pub fn toric_levels(nu: &[i64]) -> Vec<f64> {
    let n = nu.len();
    let big = nu.iter().sum::<i64>() as f64 + n as f64 / 2.0;
    nu[1..].iter().map(|x| (*x as f64 + 0.5) / big).collect()
}

struct Sample {
    p: i64,
    degree: i64,
    highest: Vec<i64>,
    source: Vec<i64>,
    target: Vec<i64>,
    v: Vec<f64>,
    w: Vec<f64>,
    exact: Complex64,
    lookup: Lookup,
    points: Result<Intersections>,
}

fn exact_toric(cfg: &ExperimentConfig, d: i64, nu: &[i64], mu: &[i64]) -> Result<Complex64> {
    match (cfg.mode, cfg.precision) {
        (Mode::Wigner, _) => {
            let beta = parse_angle(cfg.g_label.trim_start_matches("rotation:"))?;
            Ok(c(wigner_d(d, mu[0] - mu[1], nu[0] - nu[1], beta)?, 0.0))
        }
        (_, Precision::High) => Ok(exact_matrix_element(&cfg.g, nu, mu)?.value),
        (_, Precision::Double) => {
            let m = MonomialModule::new(cfg.n, d);
            if m.dim() > cfg.guard {
                return Err(GzError::Guard { dim: m.dim(), guard: cfg.guard });
            }
            m.element(&cfg.g, nu, mu)
        }
    }
}

fn sample_toric(cfg: &ExperimentConfig, p: i64, cache: Option<&Cache>) -> Result<Sample> {
    let d = toric_degree(cfg.n, p);
    if d < 0 {
        return Err(cfg_err(format!("p = {p} too small for n = {}", cfg.n)));
    }
    let nu = nearest_multi_index(d, &cfg.v)?;
    let mu = nearest_multi_index(d, &cfg.w)?;
    let (v, w) = (toric_levels(&nu), toric_levels(&mu));
    let tag = match (cfg.mode, cfg.precision) {
        (Mode::Wigner, _) => "wigner",
        (_, Precision::High) => "toric-high",
        _ => "toric",
    };
    let (exact, lookup) = match cache {
        Some(ch) => ch.get_or_compute(&cache_key(tag, cfg.n, &[d], &cfg.g, &nu, &mu), || exact_toric(cfg, d, &nu, &mu))?,
        None => (exact_toric(cfg, d, &nu, &mu)?, Lookup::Miss),
    };
    let points = toric_intersections(&cfg.g, &v, &w, &cfg.solver(cfg.n - 1));
    let mut highest = vec![0; cfg.n];
    highest[0] = d;
    Ok(Sample { p, degree: d, highest, source: nu, target: mu, v, w, exact, lookup, points })
}

fn nearest_pattern(lattice: &[(crate::combinatorics::GzPattern, Vec<Ratio<i64>>)], target: &[f64]) -> Result<(Vec<i64>, Vec<f64>)> {
    lattice
        .iter()
        .map(|(g, lv)| {
            let x = to_f64(lv);
            let d: f64 = x.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum();
            (d, g.interior(), x)
        })
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(&b.1)))
        .map(|(_, i, x)| (i, x))
        .ok_or_else(|| cfg_err("empty lattice"))
}

fn sample_flag(cfg: &ExperimentConfig, p: i64, cache: Option<&Cache>) -> Result<Sample> {
    let lambda = cfg.lambda.as_ref().expect("flag mode has lambda");
    let lattice = semiclassical_lattice(lambda, p)?;
    let (nu, v) = nearest_pattern(&lattice, &cfg.v)?;
    let (mu, w) = nearest_pattern(&lattice, &cfg.w)?;
    let hw = lattice[0].0.top().to_vec();
    if lattice.len() > cfg.guard {
        return Err(GzError::Guard { dim: lattice.len(), guard: cfg.guard });
    }
    let compute = || -> Result<Complex64> {
        let module = GzModule::new(&HighestWeight::new(hw.clone())?);
        let src = module.index_of(&nu).expect("pattern in module");
        let dst = module.index_of(&mu).expect("pattern in module");
        module.matrix_element(&cfg.g, src, dst)
    };
    let (exact, lookup) = match cache {
        Some(ch) => ch.get_or_compute(&cache_key("flag", cfg.n, &hw, &cfg.g, &nu, &mu), compute)?,
        None => (compute()?, Lookup::Miss),
    };
    let points = flag_intersections(lambda, &cfg.g, &v, &w, &cfg.solver(v.len()));
    Ok(Sample { p, degree: p, highest: hw, source: nu, target: mu, v, w, exact, lookup, points })
}

#[cfg(not(target_arch = "wasm32"))]
fn stopwatch() -> impl Fn() -> u128 {
    let t0 = std::time::Instant::now();
    move || t0.elapsed().as_millis()
}

// no monotonic clock in the browser sandbox
#[cfg(target_arch = "wasm32")]
fn stopwatch() -> impl Fn() -> u128 {
    || 0
}

/// Runs the sweep described by `cfg`.
pub fn run_comparison(cfg: &ExperimentConfig, cache: Option<&Cache>) -> Result<Report> {
    let elapsed = stopwatch();
    let sample = |p: &i64| match cfg.mode {
        Mode::Flag => sample_flag(cfg, *p, cache),
        _ => sample_toric(cfg, *p, cache),
    };
    let mut ps = cfg.p_list.clone();
    ps.sort_unstable();
    ps.dedup();
    #[cfg(feature = "parallel")]
    let samples: Vec<Sample> = ps.par_iter().map(sample).collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let samples: Vec<Sample> = ps.iter().map(sample).collect::<Result<_>>()?;

    let mut summary = ReportSummary::default();
    for s in &samples {
        match s.lookup {
            Lookup::Hit => summary.cache_hits += 1,
            _ => summary.cache_misses += 1,
        }
    }
    let predict = |s: &Sample, anchors: Option<&[Anchor]>| -> Result<Prediction> {
        let points = s.points.as_ref().map_err(|e| e.clone())?;
        match cfg.mode {
            Mode::Flag => predict_flag(s.p, cfg.lambda.as_ref().expect("flag mode has lambda"), &cfg.g, &s.v, &s.w, points, anchors),
            _ => predict_toric(s.degree, &cfg.g, points, anchors),
        }
    };
    let reference_p = cfg.calibrate_p.unwrap_or(ps[0]);
    let reference = samples.iter().find(|s| s.p == reference_p).ok_or_else(|| cfg_err(format!("calibrate_p {reference_p} not in the p list")))?;
    let anchors = predict(reference, None).map_err(|e| GzError::Invalid(format!("prediction at p = {reference_p} failed: {e}")))?.anchors();
    let preds: Vec<Result<Prediction>> = samples.iter().map(|s| predict(s, Some(&anchors))).collect();
    let calib = match cfg.maslov {
        MaslovMode::Calibrated => {
            let (used, refs): (Vec<i64>, Vec<(&Prediction, Complex64)>) = samples
                .iter()
                .zip(&preds)
                .filter(|(s, _)| s.p >= reference_p)
                .filter_map(|(s, p)| Some((s.p, (p.as_ref().ok()?, s.exact))))
                .take(cfg.calibrate_count)
                .unzip();
            let k = calibrate_maslov_joint(&refs);
            summary.calibration = Some(Calibration { p: used, maslov: k.clone() });
            Some(k)
        }
        MaslovMode::Predicted => None,
    };

    let records: Vec<ComparisonRecord> = samples
        .into_iter()
        .zip(preds)
        .map(|(s, pred)| {
            let mut rec = ComparisonRecord {
                p: s.p,
                degree: s.degree,
                semiclassical: f64::NAN,
                highest: s.highest,
                source: s.source,
                target: s.target,
                v: s.v,
                w: s.w,
                exact: [s.exact.re, s.exact.im],
                predicted: [f64::NAN; 2],
                abs_scaled_exact: f64::NAN,
                abs_predicted: f64::NAN,
                residual: f64::NAN,
                alignment: [1.0, 0.0],
                incoherent: f64::NAN,
                components: vec![],
                skipped: None,
            };
            let mut pred = match pred {
                Ok(p) => p,
                Err(e) => {
                    rec.skipped = Some(format!("prediction refused: {e}"));
                    return rec;
                }
            };
            match &calib {
                Some(k) => pred = pred.with_maslov(k),
                None => pred.predicted_maslov(),
            }
            let scaled = pred.scaled(s.exact);
            let total = pred.total();
            let (res, z) = align(scaled, total);
            rec.semiclassical = pred.semiclassical;
            rec.predicted = [total.re, total.im];
            rec.abs_scaled_exact = scaled.norm();
            rec.abs_predicted = total.norm();
            rec.residual = res;
            rec.alignment = [z.re, z.im];
            rec.incoherent = incoherent_sum(&pred);
            rec.components = pred.components;
            rec
        })
        .collect();

    summary.slope = slope_fit(&records);
    summary.envelope = envelope_fit(&records, cfg.envelope_from);
    summary.decay = decay_verdict(&records, cfg.decay_from);
    summary.windows = window_rms(&records, cfg.window);
    summary.runtime_ms = elapsed();
    let report = Report { mode: cfg.mode, n: cfg.n, g: cfg.g_label.clone(), records, summary };
    if let Some(path) = &cfg.csv {
        write_file(path, &records_csv(&report.records))?;
    }
    if let Some(path) = &cfg.json {
        write_file(path, &serde_json::to_string_pretty(&report).map_err(|e| cfg_err(e.to_string()))?)?;
    }
    if let Some(prefix) = &cfg.dat {
        for (name, text) in records_dat(&report.records) {
            write_file(&format!("{prefix}.{name}.dat"), &text)?;
        }
    }
    Ok(report)
}

/// Gnuplot-ready `p value` columns: scaled exact, predicted and residual
/// magnitudes. Skipped records are left out.
pub fn records_dat(records: &[ComparisonRecord]) -> Vec<(&'static str, String)> {
    let col = |f: fn(&ComparisonRecord) -> f64| {
        records.iter().filter(|r| r.skipped.is_none()).map(|r| format!("{} {:e}\n", r.p, f(r))).collect::<String>()
    };
    vec![("exact", col(|r| r.abs_scaled_exact)), ("predicted", col(|r| r.abs_predicted)), ("residual", col(|r| r.residual))]
}

fn write_file(path: &str, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| cfg_err(format!("{path}: {e}")))
}

fn usable(r: &ComparisonRecord) -> bool {
    r.skipped.is_none() && !r.components.is_empty()
}

/// Least-squares slope of `log residual` against `log P`.
pub fn slope_fit(records: &[ComparisonRecord]) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| usable(r) && r.residual > 0.0)
        .map(|r| (r.semiclassical.ln(), r.residual.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let (slope, intercept, stderr) = fit_line(&x, &y);
    Some(SlopeFit { slope, intercept, stderr, ci95: [slope - 1.96 * stderr, slope + 1.96 * stderr], points: x.len() })
}

/// Two-component envelope: `|scaled exact|^2` is fitted by
/// `c0 + c1 cos(phi) + c2 sin(phi)` with the predicted beat phase
/// `phi = 2 pi P (eta_1 - eta_0)`; the envelope is `c0 ± |(c1, c2)|`.
pub fn envelope_fit(records: &[ComparisonRecord], from: i64) -> Option<EnvelopeFit> {
    let rows: Vec<&ComparisonRecord> = records.iter().filter(|r| usable(r) && r.p >= from && r.components.len() == 2).collect();
    if rows.len() < 4 {
        return None;
    }
    let m = nalgebra::DMatrix::from_fn(rows.len(), 3, |i, j| {
        let r = rows[i];
        let phi = std::f64::consts::TAU * r.semiclassical * (r.components[1].area - r.components[0].area);
        [1.0, phi.cos(), phi.sin()][j]
    });
    let y = nalgebra::DVector::from_iterator(rows.len(), rows.iter().map(|r| r.abs_scaled_exact.powi(2)));
    let sol = m.svd(true, true).solve(&y, 1e-14).ok()?;
    let amp = sol[1].hypot(sol[2]);
    let (a1, a2) = rows.iter().fold((0.0, 0.0), |acc, r| (acc.0 + r.components[0].amplitude, acc.1 + r.components[1].amplitude));
    let (a1, a2) = (a1 / rows.len() as f64, a2 / rows.len() as f64);
    let (pmax, pmin) = ((a1 + a2).powi(2), (a1 - a2).powi(2));
    let (omax, omin) = (sol[0] + amp, sol[0] - amp);
    Some(EnvelopeFit {
        observed_max: omax,
        observed_min: omin,
        predicted_max: pmax,
        predicted_min: pmin,
        relative_error: ((omax - pmax).abs()).max((omin - pmin).abs()) / pmax,
    })
}

/// `|exact| p^3` beyond `from`: monotone decrease and final value.
pub fn decay_verdict(records: &[ComparisonRecord], from: i64) -> Option<DecayVerdict> {
    let values: Vec<(i64, f64)> = records
        .iter()
        .filter(|r| r.p >= from && r.components.is_empty() && r.skipped.is_none())
        .map(|r| (r.p, r.exact[0].hypot(r.exact[1]) * (r.p as f64).powi(3)))
        .collect();
    if values.len() < 2 {
        return None;
    }
    let monotone = values.windows(2).all(|w| w[1].1 < w[0].1);
    Some(DecayVerdict { monotone, final_value: values.last().unwrap().1, values })
}

/// Window means of `|scaled exact|^2` against the incoherent sum.
pub fn window_rms(records: &[ComparisonRecord], width: usize) -> Vec<WindowRms> {
    let rows: Vec<&ComparisonRecord> = records.iter().filter(|r| r.skipped.is_none() && !r.components.is_empty()).collect();
    if width == 0 || rows.len() < width {
        return vec![];
    }
    rows.windows(width)
        .step_by(width)
        .map(|w| {
            let obs = w.iter().map(|r| r.abs_scaled_exact.powi(2)).sum::<f64>() / width as f64;
            let pred = w.iter().map(|r| r.incoherent).sum::<f64>() / width as f64;
            let coherent = w.iter().map(|r| r.abs_predicted.powi(2)).sum::<f64>() / width as f64;
            WindowRms { start: w[0].p, observed: obs, predicted: pred, ratio: obs / pred, coherent }
        })
        .collect()
}

pub const CSV_HEADER: &str =
    "p,degree,semiclassical,highest,source,target,exact_re,exact_im,predicted_re,predicted_im,abs_scaled_exact,abs_predicted,residual,align_re,align_im,incoherent,components,skipped";

pub fn records_csv(records: &[ComparisonRecord]) -> String {
    let ints = |v: &[i64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{},{:e},{},{}\n",
            r.p,
            r.degree,
            r.semiclassical,
            ints(&r.highest),
            ints(&r.source),
            ints(&r.target),
            r.exact[0],
            r.exact[1],
            r.predicted[0],
            r.predicted[1],
            r.abs_scaled_exact,
            r.abs_predicted,
            r.residual,
            r.alignment[0],
            r.alignment[1],
            r.incoherent,
            r.components.len(),
            r.skipped.as_deref().unwrap_or("").replace(',', ";"),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_angles_and_ranges() {
        assert!((parse_angle("pi/3").unwrap() - std::f64::consts::PI / 3.0).abs() < 1e-15);
        assert!((parse_angle("2pi/5").unwrap() - 0.4 * std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(parse_p_list("20..40:10").unwrap(), vec![20, 30, 40]);
        assert_eq!(parse_p_list("3,5").unwrap(), vec![3, 5]);
        assert!(parse_p_list("5..3").is_err());
    }

    #[test]
    fn nearest_index_hits_exact_levels() {
        assert_eq!(nearest_multi_index(40, &[0.5]).unwrap(), vec![20, 20]);
        let nu = nearest_multi_index(41, &[0.5]).unwrap();
        assert_eq!(nu.iter().sum::<i64>(), 41);
    }

    #[test]
    fn config_errors() {
        assert!(ExperimentConfig::parse("mode = toric\n").is_err());
        assert!(ExperimentConfig::parse("mode = wigner\ng = rotation:pi/3\nv = 0.5\nw = 0.5\np = 20..30\nbogus = 1\n").is_err());
        let c = ExperimentConfig::parse("mode = wigner\ng = rotation:pi/3\nv = 0.5\nw = 0.5\np = 20..30\n").unwrap();
        assert_eq!(c.n, 2);
    }
}
