//! Bound-versus-measurement experiments and their reports.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, FunctionSource, Omega};
use super::expr::parse_function;
use super::presets::Preset;
use crate::bounds::{
    class_error_deriv_lp, class_error_deriv_total, class_error_lp, class_error_total, ClassErrorResult,
    TheoremId,
};
use crate::error::{Error, Result};
use crate::extremal::{extremal_t1, extremal_t2, extremal_t4, extremal_t5, ExtremalFunction};
use crate::grid::{BlockIndex, Grid, MultiIndexIter};
use crate::spline::{node_indices, pointwise_error, DerivOrder, SplineData};

const MODULE: &str = "harness";

/// Upper limit on `blocks * samples^n` for one sup scan.
pub const MAX_SUP_SAMPLES: f64 = 1e8;

/// Step of the finite-difference derivative fallback.
pub const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    #[default]
    Parallel,
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub exec: Exec,
    /// Differentiate expression functions numerically when no derivative
    /// expression is given.
    pub fd_fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupEstimate {
    pub error: f64,
    pub argmax: Vec<f64>,
}

/// Lattice of `s` points on `[lo, hi]` with both endpoints and the midpoint.
fn axis_lattice(lo: f64, hi: f64, s: usize) -> Vec<f64> {
    (0..s)
        .map(|k| {
            if k + 1 == s {
                hi
            } else {
                lo + (k as f64 / (s - 1) as f64) * (hi - lo)
            }
        })
        .collect()
}

fn check_samples(g: &Grid, samples: usize) -> Result<()> {
    if samples < 3 || samples % 2 == 0 {
        return Err(Error::pre(MODULE, format!("samples must be odd and >= 3, got {samples}")));
    }
    let total = g.block_count() as f64 * (samples as f64).powi(g.dim() as i32);
    if total > MAX_SUP_SAMPLES {
        return Err(Error::ResourceCap {
            module: MODULE,
            msg: format!("{total:.3e} sup samples exceed the limit of {MAX_SUP_SAMPLES:.0e}"),
        });
    }
    Ok(())
}

fn build_spline<F>(g: &Grid, f: &F, exec: Exec) -> Result<SplineData>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let nodes: Vec<Vec<usize>> = node_indices(g).collect();
    let eval = |j: &Vec<usize>| g.node_coords(j).and_then(|x| f(&x));
    let values: Result<Vec<f64>> = match exec {
        Exec::Parallel => nodes.par_iter().map(eval).collect(),
        Exec::Sequential => nodes.iter().map(eval).collect(),
    };
    SplineData::from_values(g, values?)
}

fn scan_block<D>(
    s: &SplineData,
    d: &D,
    r: &DerivOrder,
    j: &BlockIndex,
    samples: usize,
) -> Result<(f64, Vec<f64>)>
where
    D: Fn(&[f64]) -> Result<f64>,
{
    let (lo, hi) = s.grid().block_bounds(j)?;
    let lattice: Vec<Vec<f64>> = lo.iter().zip(&hi).map(|(&a, &b)| axis_lattice(a, b, samples)).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut x = vec![0.0; lo.len()];
    for k in MultiIndexIter::new(vec![samples; lo.len()]) {
        for (i, &ki) in k.iter().enumerate() {
            x[i] = lattice[i][ki];
        }
        let exact = d(&x)?;
        let e = pointwise_error(|_: &[f64]| exact, s, r, &x)?;
        if best.as_ref().is_none_or(|(b, _)| e > *b) {
            best = Some((e, x.clone()));
        }
    }
    Ok(best.expect("lattice is non-empty"))
}

/// Like [`estimate_sup_error`] for fallible function handles.
pub fn estimate_sup_error_fallible<F, D>(
    f: F,
    f_deriv: D,
    g: &Grid,
    r: &DerivOrder,
    samples: usize,
    exec: Exec,
) -> Result<SupEstimate>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
    D: Fn(&[f64]) -> Result<f64> + Sync,
{
    if r.len() != g.dim() {
        return Err(Error::pre(MODULE, "derivative order does not match the grid"));
    }
    check_samples(g, samples)?;
    let s = build_spline(g, &f, exec)?;
    let blocks: Vec<BlockIndex> = g.blocks().collect();
    let scan = |j: &BlockIndex| scan_block(&s, &f_deriv, r, j, samples);
    let per_block: Vec<Result<(f64, Vec<f64>)>> = match exec {
        Exec::Parallel => blocks.par_iter().map(scan).collect(),
        Exec::Sequential => blocks.iter().map(scan).collect(),
    };
    // Block-index order with strict `>` keeps the lowest block on ties.
    let mut best: Option<(f64, Vec<f64>)> = None;
    for res in per_block {
        let (e, x) = res?;
        if best.as_ref().is_none_or(|(b, _)| e > *b) {
            best = Some((e, x));
        }
    }
    let (error, argmax) = best.expect("grid has at least one block");
    Ok(SupEstimate { error, argmax })
}

/// Max of `|f^{(r)} - S^{(r)}|` over a per-block lattice of `samples` points
/// per axis, endpoints and midpoint included. The spline is built once.
pub fn estimate_sup_error<F, D>(
    f: F,
    f_deriv: D,
    g: &Grid,
    r: &DerivOrder,
    samples: usize,
    exec: Exec,
) -> Result<SupEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
    D: Fn(&[f64]) -> f64 + Sync,
{
    estimate_sup_error_fallible(|x: &[f64]| Ok(f(x)), |x: &[f64]| Ok(f_deriv(x)), g, r, samples, exec)
}

/// Central difference of order `r` with step `h`. Evaluates `f` at
/// `2^|M|` points, which may lie up to `h` outside the cube; the error is
/// roughly `eps / h^|M|` from rounding plus `h^2` from truncation.
pub fn fd_derivative<F>(f: F, r: &DerivOrder, x: &[f64], h: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let axes = r.axes();
    if axes.is_empty() {
        return f(x);
    }
    let mut y = x.to_vec();
    let mut acc = 0.0;
    for mask in 0..(1usize << axes.len()) {
        let mut sign = 1.0;
        for (b, &i) in axes.iter().enumerate() {
            if mask >> b & 1 == 1 {
                y[i] = x[i] + h;
            } else {
                y[i] = x[i] - h;
                sign = -sign;
            }
        }
        acc += sign * f(&y);
    }
    acc / (2.0 * h).powi(axes.len() as i32)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem: TheoremId,
    pub n: usize,
    pub m: Vec<usize>,
    pub p: Option<f64>,
    pub r: Vec<u8>,
    pub bound: f64,
    pub quad_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub theorem: TheoremId,
    pub n: usize,
    pub m: Vec<usize>,
    pub p: Option<f64>,
    pub r: Vec<u8>,
    pub bound: f64,
    pub quad_err: f64,
    pub empirical: f64,
    pub argmax: Vec<f64>,
    /// `empirical / bound - 1`.
    pub gap: f64,
    pub ms: u64,
}

/// Theorem bound for a config.
pub fn compute_bound(cfg: &ExperimentConfig) -> Result<BoundReport> {
    cfg.validate()?;
    let g = cfg.grid()?;
    let r = cfg.order()?;
    let q = &cfg.quadrature;
    let res: ClassErrorResult = match (cfg.theorem, cfg.omega.build()?) {
        (TheoremId::T1, Omega::Multi(o)) => class_error_total(&o, &g)?,
        (TheoremId::T2, Omega::Uni(o)) => class_error_lp(&o, &g, cfg.metric()?)?,
        (TheoremId::T4, Omega::Multi(o)) => class_error_deriv_total(&o, &g, &r, q)?,
        (TheoremId::T5, Omega::Uni(o)) => class_error_deriv_lp(&o, &g, cfg.metric()?, &r, q)?,
        _ => unreachable!("validate() pairs theorem and omega kind"),
    };
    Ok(BoundReport {
        theorem: cfg.theorem,
        n: g.dim(),
        m: cfg.m.clone(),
        p: cfg.p,
        r: r.as_u8(),
        bound: res.value,
        quad_err: res.quadrature_estimate_error,
    })
}

/// Extremal function of the configured theorem. For `r = 0` the derivative
/// theorems fall back to the function-class bump.
pub fn build_extremal(cfg: &ExperimentConfig) -> Result<ExtremalFunction> {
    cfg.validate()?;
    let g = cfg.grid()?;
    let r = cfg.order()?;
    let q = &cfg.quadrature;
    match (cfg.theorem, cfg.omega.build()?) {
        (TheoremId::T1, Omega::Multi(o)) => extremal_t1(&o, &g, cfg.block_index()),
        (TheoremId::T4, Omega::Multi(o)) if r.is_zero() => extremal_t1(&o, &g, cfg.block_index()),
        (TheoremId::T4, Omega::Multi(o)) => extremal_t4(&o, &g, &r, q),
        (TheoremId::T2, Omega::Uni(o)) => extremal_t2(&o, &g, cfg.metric()?, cfg.block_index()),
        (TheoremId::T5, Omega::Uni(o)) if r.is_zero() => {
            extremal_t2(&o, &g, cfg.metric()?, cfg.block_index())
        }
        (TheoremId::T5, Omega::Uni(o)) => extremal_t5(&o, &g, cfg.metric()?, &r, q),
        _ => unreachable!("validate() pairs theorem and omega kind"),
    }
}

type Handle<'a> = Box<dyn Fn(&[f64]) -> Result<f64> + Sync + 'a>;

fn function_handles<'a>(
    cfg: &ExperimentConfig,
    r: &DerivOrder,
    opts: RunOptions,
    extremal: Option<&'a ExtremalFunction>,
) -> Result<(Handle<'a>, Handle<'a>)> {
    let n = cfg.m.len();
    match &cfg.function {
        FunctionSource::Extremal => {
            let e = extremal.expect("extremal built by caller");
            let r = r.clone();
            Ok((Box::new(move |x| e.value_at(x)), Box::new(move |x| e.deriv_at(x, &r))))
        }
        FunctionSource::Preset { name } => {
            let p = Preset::from_name(name)?;
            if !p.supports(r) {
                return Err(Error::Config(format!(
                    "preset {name:?} has no derivative of order {:?}",
                    r.as_u8()
                )));
            }
            let r = r.clone();
            Ok((
                Box::new(move |x| Ok(p.value(x))),
                Box::new(move |x| Ok(p.deriv(x, &r).expect("checked by supports"))),
            ))
        }
        FunctionSource::Expr { expr, deriv } => {
            let f = parse_function(expr, n)?;
            let d: Handle<'a> = match deriv {
                _ if r.is_zero() => {
                    let f = f.clone();
                    Box::new(move |x| Ok(f.eval(x)))
                }
                Some(src) => {
                    let d = parse_function(src, n)?;
                    Box::new(move |x| Ok(d.eval(x)))
                }
                None if opts.fd_fallback => {
                    let f = f.clone();
                    let r = r.clone();
                    Box::new(move |x| Ok(fd_derivative(|y| f.eval(y), &r, x, FD_STEP)))
                }
                None => {
                    return Err(Error::Config(
                        "r != 0 needs a derivative expression (\"deriv\") or --fd-fallback".into(),
                    ))
                }
            };
            Ok((Box::new(move |x| Ok(f.eval(x))), d))
        }
    }
}

fn relative_gap(empirical: f64, bound: f64) -> f64 {
    if bound == 0.0 {
        if empirical == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        empirical / bound - 1.0
    }
}

/// Computes the bound, measures the configured function's sup error and
/// reports both.
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<ErrorReport> {
    let start = Instant::now();
    let bound = compute_bound(cfg)?;
    let g = cfg.grid()?;
    let r = cfg.order()?;
    let extremal = match cfg.function {
        FunctionSource::Extremal => Some(build_extremal(cfg)?),
        _ => None,
    };
    let (f, d) = function_handles(cfg, &r, opts, extremal.as_ref())?;
    let sup = estimate_sup_error_fallible(f, d, &g, &r, cfg.samples, opts.exec)?;
    Ok(ErrorReport {
        theorem: bound.theorem,
        n: bound.n,
        m: bound.m,
        p: bound.p,
        r: bound.r,
        bound: bound.bound,
        quad_err: bound.quad_err,
        empirical: sup.error,
        argmax: sup.argmax,
        gap: relative_gap(sup.error, bound.bound),
        ms: start.elapsed().as_millis() as u64,
    })
}

/// Float formatting shared by every CSV report: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(";")
}

pub const BOUND_CSV_HEADER: &str = "theorem,n,m,p,r,bound,quad_err";
pub const ERROR_CSV_HEADER: &str = "theorem,n,m,p,r,bound,quad_err,empirical,argmax,gap,ms";

fn bound_fields(theorem: TheoremId, n: usize, m: &[usize], p: Option<f64>, r: &[u8], bound: f64, q: f64) -> String {
    format!(
        "{theorem},{n},{},{},{},{},{}",
        join(m, |v| v.to_string()),
        p.map(fmt_f64).unwrap_or_default(),
        join(r, |v| v.to_string()),
        fmt_f64(bound),
        fmt_f64(q)
    )
}

impl BoundReport {
    pub fn csv_row(&self) -> String {
        bound_fields(self.theorem, self.n, &self.m, self.p, &self.r, self.bound, self.quad_err)
    }
}

impl ErrorReport {
    pub fn csv_row(&self) -> String {
        let mut row = bound_fields(self.theorem, self.n, &self.m, self.p, &self.r, self.bound, self.quad_err);
        let _ = write!(
            row,
            ",{},{},{},{}",
            fmt_f64(self.empirical),
            join(&self.argmax, |v| fmt_f64(*v)),
            fmt_f64(self.gap),
            self.ms
        );
        row
    }
}

pub fn bound_csv(rows: &[BoundReport]) -> String {
    let mut out = format!("{BOUND_CSV_HEADER}\n");
    for row in rows {
        out.push_str(&row.csv_row());
        out.push('\n');
    }
    out
}

pub fn error_csv(rows: &[ErrorReport]) -> String {
    let mut out = format!("{ERROR_CSV_HEADER}\n");
    for row in rows {
        out.push_str(&row.csv_row());
        out.push('\n');
    }
    out
}

/// Pretty JSON; floats use the shortest representation that round-trips.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}
