use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use gzsc::bergman::{isotropic_state, norm_model};
use gzsc::cache::Cache;
use gzsc::combinatorics::{enumerate_patterns, HighestWeight};
use gzsc::geometry::{flag_fiber_sample, flatten, gz_map, spectrum_error};
use gzsc::harness::{
    parse_angle, parse_floats, parse_g, parse_ints, parse_matrix, parse_p_list, run_comparison, toric_degree, ExperimentConfig,
};
use gzsc::intersect::{flag_intersections, toric_intersections, Intersections, SolverConfig};
use gzsc::linalg::CMat;
use gzsc::monomial::{exact_matrix_element, wigner_d, MonomialModule};
use gzsc::predict::{predict_flag, predict_toric, Anchor, Prediction};
use gzsc::representation::GzModule;
use gzsc::{GzError, Result};

#[derive(Parser)]
#[command(name = "gzsc", version, about = "U(n) matrix elements, coadjoint orbit geometry and semiclassical checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeoMode {
    Toric,
    Flag,
}

#[derive(Clone, Copy, ValueEnum)]
enum MaslovArg {
    Calibrated,
    Predicted,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    Double,
    High,
}

/// Group element: a matrix file, or a generated source (`haar:SEED`,
/// `rotation:BETA`, `near:SEED:SCALE`).
#[derive(Args)]
struct GroupArg {
    #[arg(long = "g-file", visible_alias = "g")]
    g_file: Option<PathBuf>,
    #[arg(long = "g-spec", conflicts_with = "g_file")]
    g_spec: Option<String>,
}

impl GroupArg {
    fn load(&self, n: usize) -> Result<CMat> {
        match (&self.g_file, &self.g_spec) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path).map_err(|e| GzError::Invalid(format!("{}: {e}", path.display())))?;
                let g = parse_matrix(&text)?;
                if g.nrows() != n {
                    return Err(GzError::Invalid(format!("g is {}x{}, expected n = {n}", g.nrows(), g.ncols())));
                }
                Ok(g)
            }
            (None, Some(spec)) => parse_g(spec, n),
            (None, None) => Err(GzError::Invalid("give --g-file or --g-spec".into())),
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Enumerate Gelfand-Zetlin patterns with a given top row.
    Patterns {
        #[arg(long)]
        n: Option<usize>,
        /// Top row; defaults to the symmetric power `(p, 0, ..., 0)`.
        #[arg(long)]
        lambda: Option<String>,
        /// Scale applied to `lambda`.
        #[arg(long, default_value_t = 1)]
        p: i64,
        #[arg(long, value_enum, default_value_t = Emit::Json)]
        emit: Emit,
    },
    /// Full representation matrix in the Gelfand-Zetlin basis.
    Repmat {
        #[arg(long)]
        lambda: String,
        #[command(flatten)]
        g: GroupArg,
        #[arg(long, value_enum, default_value_t = Emit::Csv)]
        emit: Emit,
    },
    /// Wigner small-d element; `j`, `m`, `mp` may be half-integers.
    Wigner {
        #[arg(long)]
        j: String,
        #[arg(long, allow_hyphen_values = true)]
        m: String,
        #[arg(long, allow_hyphen_values = true)]
        mp: String,
        #[arg(long, allow_hyphen_values = true)]
        beta: String,
        #[arg(long, value_enum, default_value_t = Emit::Csv)]
        emit: Emit,
    },
    /// One matrix element: monomial basis of degree `p`, or Gelfand-Zetlin
    /// basis of `lambda` with interior entries as `nu`, `mu`.
    Matelem {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: Option<i64>,
        #[arg(long)]
        lambda: Option<String>,
        #[command(flatten)]
        g: GroupArg,
        #[arg(long)]
        nu: String,
        #[arg(long)]
        mu: String,
        #[arg(long, value_enum, default_value_t = PrecisionArg::Double)]
        precision: PrecisionArg,
    },
    /// Spectra of the leading minors of a Hermitian matrix.
    Gzmap {
        #[arg(long = "alpha-file")]
        alpha_file: PathBuf,
    },
    /// Random points of a Gelfand-Zetlin fibre.
    Fiber {
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        v: String,
        #[arg(long, default_value_t = 4)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Intersections of a fibre with the translate of another.
    Intersect {
        #[arg(long, value_enum)]
        mode: GeoMode,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        lambda: Option<String>,
        #[command(flatten)]
        g: GroupArg,
        #[arg(long)]
        v: String,
        #[arg(long)]
        w: String,
        #[arg(long)]
        starts: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Emit::Json)]
        emit: Emit,
    },
    /// Semiclassical prediction over a list of scales.
    Predict {
        #[arg(long, value_enum)]
        mode: GeoMode,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        lambda: Option<String>,
        #[command(flatten)]
        g: GroupArg,
        #[arg(long)]
        v: String,
        #[arg(long)]
        w: String,
        #[arg(long = "p-list")]
        p_list: String,
        #[arg(long, value_enum, default_value_t = MaslovArg::Predicted)]
        maslov: MaslovArg,
        #[arg(long)]
        starts: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Emit::Json)]
        emit: Emit,
    },
    /// Projection of a flat section on a toric fibre onto holomorphic sections.
    Bergman {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: i64,
        #[arg(long)]
        v: String,
        #[arg(long = "k-twist", default_value_t = 0)]
        k_twist: i64,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long, value_enum, default_value_t = Emit::Json)]
        emit: Emit,
    },
    /// Exact-versus-predicted sweep from a config file.
    Compare {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                GzError::Invalid(_) => 2,
                GzError::Guard { .. } => 3,
                _ => 1,
            })
        }
    }
}

fn weight(s: &str) -> Result<HighestWeight> {
    HighestWeight::new(parse_ints(s)?)
}

// a closed pipe ends output quietly
fn emit_line(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn print_json(v: &Value) {
    emit_line(&serde_json::to_string_pretty(v).expect("json"));
}

fn cplx(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn matrix_json(m: &CMat) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| cplx(m[(i, j)])).collect())).collect())
}

/// Half-integer from `3/2`, `1.5` or `2`, returned doubled.
fn doubled(s: &str) -> Result<i64> {
    let x = parse_floats(s)?;
    let d = 2.0 * x.first().copied().unwrap_or(f64::NAN);
    if x.len() != 1 || (d - d.round()).abs() > 1e-9 {
        return Err(GzError::Invalid(format!("{s} is not a half-integer")));
    }
    Ok(d.round() as i64)
}

fn dimension(n: Option<usize>, lambda: Option<&HighestWeight>) -> Result<usize> {
    match (n, lambda) {
        (Some(n), Some(l)) if n != l.n() => Err(GzError::Invalid(format!("--n {n} disagrees with lambda of length {}", l.n()))),
        (_, Some(l)) => Ok(l.n()),
        (Some(n), None) if n >= 2 => Ok(n),
        _ => Err(GzError::Invalid("need --n >= 2 or --lambda".into())),
    }
}

fn solver(dim: usize, starts: Option<usize>, seed: u64) -> SolverConfig {
    let mut s = SolverConfig::for_dim(dim);
    if let Some(k) = starts {
        s.starts = k;
    }
    s.seed = seed;
    s
}

fn intersections_json(pts: &Intersections) -> Value {
    json!({
        "none_found": pts.none_found,
        "residual_floor": pts.residual_floor,
        "clean_dim": pts.clean_dim,
        "count": pts.points.len(),
        "points": pts.points.iter().map(|q| json!({
            "alpha": matrix_json(&q.alpha),
            "vector": q.vector.as_ref().map(|v| Value::Array(v.iter().map(|z| cplx(*z)).collect())),
            "angles": q.angles,
            "residual": q.residual,
            "jac_det": q.jac_det,
            "component": q.component_id,
            "separation": q.separation,
        })).collect::<Vec<_>>(),
    })
}

fn csv_rows(header: &str, rows: impl IntoIterator<Item = String>) {
    emit_line(header);
    for r in rows {
        emit_line(&r);
    }
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Patterns { n, lambda, p, emit } => {
            let base = match &lambda {
                Some(s) => weight(s)?,
                None => HighestWeight::symmetric_power(dimension(n, None)?, p),
            };
            let hw = match &lambda {
                Some(_) => {
                    dimension(n, Some(&base))?;
                    HighestWeight::new(base.as_slice().iter().map(|x| x * p).collect())?
                }
                None => base,
            };
            let pats = enumerate_patterns(&hw);
            match emit {
                Emit::Json => print_json(&json!({
                    "lambda": hw.as_slice(),
                    "count": pats.len(),
                    "patterns": pats.iter().map(|q| q.rows().to_vec()).collect::<Vec<_>>(),
                    "weights": pats.iter().map(|q| q.weight()).collect::<Vec<_>>(),
                })),
                Emit::Csv => {
                    let join = |v: &[i64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
                    csv_rows("index,rows,weight", pats.iter().enumerate().map(|(i, q)| {
                        let rows: Vec<String> = q.rows().iter().map(|r| join(r)).collect();
                        format!("{i},{},{}", rows.join("|"), join(&q.weight()))
                    }))
                }
            }
        }
        Cmd::Repmat { lambda, g, emit } => {
            let hw = weight(&lambda)?;
            let g = g.load(hw.n())?;
            let m = GzModule::new(&hw).group_matrix(&g)?;
            match emit {
                Emit::Csv => csv_rows(
                    "row,col,re,im",
                    (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| (i, j))).map(|(i, j)| format!("{i},{j},{:e},{:e}", m[(i, j)].re, m[(i, j)].im)),
                ),
                Emit::Json => print_json(&json!({ "lambda": hw.as_slice(), "dim": m.nrows(), "matrix": matrix_json(&m) })),
            }
        }
        Cmd::Wigner { j, m, mp, beta, emit } => {
            let (j2, m2, mp2) = (doubled(&j)?, doubled(&m)?, doubled(&mp)?);
            let b = parse_angle(&beta)?;
            let d = wigner_d(j2, m2, mp2, b)?;
            match emit {
                Emit::Csv => csv_rows("j,m,mp,beta,d", [format!("{},{},{},{b:e},{d:e}", j2 as f64 / 2.0, m2 as f64 / 2.0, mp2 as f64 / 2.0)]),
                Emit::Json => print_json(&json!({ "j": j2 as f64 / 2.0, "m": m2 as f64 / 2.0, "mp": mp2 as f64 / 2.0, "beta": b, "d": d })),
            }
        }
        Cmd::Matelem { n, p, lambda, g, nu, mu, precision } => {
            let (nu, mu) = (parse_ints(&nu)?, parse_ints(&mu)?);
            let value = match &lambda {
                Some(s) => {
                    let hw = weight(s)?;
                    let g = g.load(dimension(n, Some(&hw))?)?;
                    let module = GzModule::new(&hw);
                    let find = |x: &[i64]| module.index_of(x).ok_or_else(|| GzError::Invalid(format!("{x:?} is not a pattern interior of {hw}")));
                    module.matrix_element(&g, find(&nu)?, find(&mu)?)?
                }
                None => {
                    let n = dimension(n, None)?;
                    let g = g.load(n)?;
                    let d = p.unwrap_or(nu.iter().sum());
                    if nu.iter().sum::<i64>() != d || mu.iter().sum::<i64>() != d {
                        return Err(GzError::Invalid(format!("nu and mu must have degree {d}")));
                    }
                    match precision {
                        PrecisionArg::High => exact_matrix_element(&g, &nu, &mu)?.value,
                        PrecisionArg::Double => MonomialModule::new(n, d).element(&g, &nu, &mu)?,
                    }
                }
            };
            emit_line(&format!("re,im\n{:e},{:e}", value.re, value.im));
        }
        Cmd::Gzmap { alpha_file } => {
            let text = std::fs::read_to_string(&alpha_file).map_err(|e| GzError::Invalid(format!("{}: {e}", alpha_file.display())))?;
            let a = parse_matrix(&text)?;
            let mut rows = gz_map(&a);
            rows.reverse();
            rows.insert(0, gzsc::linalg::herm_eigvals(&a));
            print_json(&json!({ "rows": rows, "hermitian_defect": gzsc::geometry::hermitian_defect(&a) }));
        }
        Cmd::Fiber { lambda, v, count, seed } => {
            let hw = weight(&lambda)?;
            let v = parse_floats(&v)?;
            let top: Vec<f64> = hw.as_slice().iter().map(|x| *x as f64).collect();
            let pts = flag_fiber_sample(&hw, &v, count, &mut ChaCha8Rng::seed_from_u64(seed))?;
            let samples: Vec<Value> = pts
                .iter()
                .map(|a| {
                    let got = flatten(&gz_map(a));
                    let err = got.iter().zip(&v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                    json!({ "alpha": matrix_json(a), "gz_error": err, "spectrum_error": spectrum_error(a, &top) })
                })
                .collect();
            print_json(&json!({ "lambda": hw.as_slice(), "v": v, "samples": samples }));
        }
        Cmd::Intersect { mode, n, lambda, g, v, w, starts, seed, emit } => {
            let (v, w) = (parse_floats(&v)?, parse_floats(&w)?);
            let pts = match mode {
                GeoMode::Toric => {
                    let n = dimension(n.or(Some(v.len() + 1)), None)?;
                    toric_intersections(&g.load(n)?, &v, &w, &solver(n - 1, starts, seed))?
                }
                GeoMode::Flag => {
                    let hw = weight(lambda.as_deref().ok_or_else(|| GzError::Invalid("flag mode needs --lambda".into()))?)?;
                    let gm = g.load(dimension(n, Some(&hw))?)?;
                    flag_intersections(&hw, &gm, &v, &w, &solver(v.len(), starts, seed))?
                }
            };
            match emit {
                Emit::Json => print_json(&intersections_json(&pts)),
                Emit::Csv => csv_rows(
                    "index,component,residual,jac_det,separation",
                    pts.points.iter().enumerate().map(|(i, q)| format!("{i},{},{:e},{:e},{:e}", q.component_id, q.residual, q.jac_det, q.separation)),
                ),
            }
        }
        Cmd::Predict { mode, n, lambda, g, v, w, p_list, maslov, starts, seed, emit } => {
            let ps = parse_p_list(&p_list)?;
            let preds = match maslov {
                MaslovArg::Predicted => predict_fixed(mode, n, lambda.as_deref(), &g, &parse_floats(&v)?, &parse_floats(&w)?, &ps, starts, seed)?,
                MaslovArg::Calibrated => predict_calibrated(mode, n, lambda.as_deref(), &g, &v, &w, &ps, starts, seed)?,
            };
            match emit {
                Emit::Json => print_json(&json!({ "maslov": maslov_name(maslov), "predictions": preds })),
                Emit::Csv => csv_rows(
                    "p,semiclassical,re,im,components",
                    preds.iter().map(|q| format!("{},{},{},{},{}", q["p"], q["semiclassical"], q["total"][0], q["total"][1], q["components"].as_array().map_or(0, |a| a.len()))),
                ),
            }
        }
        Cmd::Bergman { n, p, v, k_twist, resolution, emit } => {
            let v = parse_floats(&v)?;
            let st = isotropic_state(n, p, &v, k_twist, resolution.unwrap_or(4 * p.max(1) as usize))?;
            let model = norm_model(&st.levels, p);
            match emit {
                Emit::Json => print_json(&json!({
                    "state": st,
                    "norm_sq": st.norm_sq(),
                    "model": model,
                    "leakage": st.leakage(),
                })),
                Emit::Csv => {
                    let join = |v: &[i64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
                    csv_rows("mu,re,im", st.coefficients.iter().map(|(m, z)| format!("{},{:e},{:e}", join(m), z.re, z.im)))
                }
            }
        }
        Cmd::Compare { config } => {
            // any failure while reading the config is a config error
            let cfg = ExperimentConfig::load(&config).map_err(|e| match e {
                GzError::Invalid(_) => e,
                other => GzError::Invalid(other.to_string()),
            })?;
            let cache = Cache::from_env()?;
            let report = run_comparison(&cfg, cache.as_ref())?;
            print_json(&serde_json::to_value(&report.summary).map_err(|e| GzError::Invalid(e.to_string()))?);
        }
    }
    Ok(())
}

fn maslov_name(m: MaslovArg) -> &'static str {
    match m {
        MaslovArg::Calibrated => "calibrated",
        MaslovArg::Predicted => "predicted",
    }
}

fn prediction_json(pred: &Prediction) -> Value {
    json!({
        "p": pred.p,
        "semiclassical": pred.semiclassical,
        "power": pred.power,
        "decay": pred.decay,
        "total": cplx(pred.total()),
        "components": pred.components,
    })
}

/// Geometric prediction at fixed levels with signature offsets.
#[allow(clippy::too_many_arguments)]
fn predict_fixed(
    mode: GeoMode,
    n: Option<usize>,
    lambda: Option<&str>,
    g: &GroupArg,
    v: &[f64],
    w: &[f64],
    ps: &[i64],
    starts: Option<usize>,
    seed: u64,
) -> Result<Vec<Value>> {
    let run = |f: &dyn Fn(i64, Option<&[Anchor]>) -> Result<Prediction>| -> Result<Vec<Value>> {
        let anchors = f(ps[0], None)?.anchors();
        ps.iter()
            .map(|p| {
                let mut pred = f(*p, Some(&anchors))?;
                pred.predicted_maslov();
                Ok(prediction_json(&pred))
            })
            .collect()
    };
    match mode {
        GeoMode::Toric => {
            let n = dimension(n.or(Some(v.len() + 1)), None)?;
            let gm = g.load(n)?;
            let pts = toric_intersections(&gm, v, w, &solver(n - 1, starts, seed))?;
            run(&|p, a| predict_toric(toric_degree(n, p), &gm, &pts, a))
        }
        GeoMode::Flag => {
            let hw = weight(lambda.ok_or_else(|| GzError::Invalid("flag mode needs --lambda".into()))?)?;
            let gm = g.load(dimension(n, Some(&hw))?)?;
            let pts = flag_intersections(&hw, &gm, v, w, &solver(v.len(), starts, seed))?;
            run(&|p, a| predict_flag(p, &hw, &gm, v, w, &pts, a))
        }
    }
}

/// Offsets fitted against exact values at the first scale; levels snap to
/// the lattice at each scale, as in `compare`.
#[allow(clippy::too_many_arguments)]
fn predict_calibrated(
    mode: GeoMode,
    n: Option<usize>,
    lambda: Option<&str>,
    g: &GroupArg,
    v: &str,
    w: &str,
    ps: &[i64],
    starts: Option<usize>,
    seed: u64,
) -> Result<Vec<Value>> {
    let nv = parse_floats(v)?.len();
    let (mut text, dim) = match mode {
        GeoMode::Toric => (format!("mode = toric\nn = {}\n", dimension(n.or(Some(nv + 1)), None)?), dimension(n.or(Some(nv + 1)), None)?),
        GeoMode::Flag => {
            let l = lambda.ok_or_else(|| GzError::Invalid("flag mode needs --lambda".into()))?;
            (format!("mode = flag\nlambda = {l}\n"), dimension(n, Some(&weight(l)?))?)
        }
    };
    let gm = g.load(dim)?;
    let tmp = std::env::temp_dir().join(format!("gzsc-g-{}.txt", std::process::id()));
    std::fs::write(&tmp, gzsc::harness::format_matrix(&gm)).map_err(|e| GzError::Invalid(e.to_string()))?;
    let plist: Vec<String> = ps.iter().map(|p| p.to_string()).collect();
    text.push_str(&format!("g = file:{}\nv = {v}\nw = {w}\np = {}\nmaslov = calibrated\nseed = {seed}\n", tmp.display(), plist.join(",")));
    if let Some(s) = starts {
        text.push_str(&format!("starts = {s}\n"));
    }
    let cfg = ExperimentConfig::parse(&text);
    let _ = std::fs::remove_file(&tmp);
    let report = run_comparison(&cfg?, Cache::from_env()?.as_ref())?;
    let maslov = report.summary.calibration.as_ref().map(|c| c.maslov.clone());
    Ok(report
        .records
        .iter()
        .map(|r| {
            json!({
                "p": r.p,
                "semiclassical": r.semiclassical,
                "v": r.v,
                "w": r.w,
                "total": r.predicted,
                "exact": r.exact,
                "residual": r.residual,
                "maslov": maslov,
                "components": r.components,
                "skipped": r.skipped,
            })
        })
        .collect())
}
