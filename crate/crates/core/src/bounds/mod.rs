//! Worst-case interpolation error on smoothness classes.
//!
//! For a majorant `Omega` and grid `m`:
//!
//! * total-modulus class, function itself: `Omega(1/(2m))`;
//! * l_p class, function itself: `Omega((1/2) (sum m_i^-p)^{1/p})`;
//! * derivative of order `r` (axes `M`), total modulus:
//!   `(prod_{M} m_i) int_R Omega(h) dgamma`, `h_i = gamma_i` on `M` and
//!   `1/(2 m_i)` elsewhere, `R = prod_{M} [0, 1/m_i]`;
//! * the l_p analogue with `Omega((sum_M gamma_i^p + sum_{not M} (2 m_i)^-p)^{1/p})`.
//!
//! The first two are closed forms. The integrals run tensor Gauss-Legendre
//! ([`integrate_box`]) on each cell of a per-axis split of `R`: axes are cut
//! at the kinks of saturated majorant terms and the piece touching zero is
//! graded, since `Omega` may behave like `t^a` with `a < 1` there. With `M`
//! empty the integral forms collapse to the closed forms and are returned
//! from them directly.

mod pieces;
mod quadrature;

pub(crate) use pieces::{integrate_pieces, split_from_zero, Grade, Piece};

pub use quadrature::{gauss_legendre, integrate_box, QuadratureSpec, MAX_EVALS_PER_LEVEL, MAX_QUAD_DIM};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::moduli::{LpMetric, Majorant, McFunctionMulti, McFunctionUni, PowerTerm};
use crate::spline::DerivOrder;

const MODULE: &str = "bounds";

/// Largest `|M|` accepted by the derivative bounds.
pub const MAX_DERIV_ORDER: usize = 6;

/// Minimum starting panel count for the derivative-bound integrals.
const MIN_PANELS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TheoremId {
    T1,
    T2,
    T4,
    T5,
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TheoremId::T1 => "T1",
            TheoremId::T2 => "T2",
            TheoremId::T4 => "T4",
            TheoremId::T5 => "T5",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for TheoremId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T1" => Ok(TheoremId::T1),
            "T2" => Ok(TheoremId::T2),
            "T4" => Ok(TheoremId::T4),
            "T5" => Ok(TheoremId::T5),
            other => Err(Error::Config(format!("unknown theorem id {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassErrorResult {
    pub value: f64,
    /// Last refinement change of the quadrature; zero for closed forms.
    pub quadrature_estimate_error: f64,
    pub theorem: TheoremId,
}

fn check_dims(omega_dim: usize, g: &Grid) -> Result<()> {
    if omega_dim != g.dim() {
        return Err(Error::pre(
            MODULE,
            format!("majorant has {omega_dim} axes, grid has {}", g.dim()),
        ));
    }
    Ok(())
}

fn check_order(r: &DerivOrder, g: &Grid) -> Result<()> {
    if r.len() != g.dim() {
        return Err(Error::pre(
            MODULE,
            format!("derivative order has {} axes, grid has {}", r.len(), g.dim()),
        ));
    }
    if r.order() > MAX_DERIV_ORDER {
        return Err(Error::pre(
            MODULE,
            format!("|M| = {} exceeds the limit of {MAX_DERIV_ORDER}", r.order()),
        ));
    }
    Ok(())
}

fn half_steps(g: &Grid) -> Vec<f64> {
    g.m().iter().map(|&m| 1.0 / (2.0 * m as f64)).collect()
}

fn with_min_panels(q: &QuadratureSpec) -> QuadratureSpec {
    QuadratureSpec { panels_per_axis: q.panels_per_axis.max(MIN_PANELS), ..*q }
}

/// Upper corner of `R = prod_{i in M} [0, 1/m_i]` and `prod_{i in M} m_i`.
fn integration_box(g: &Grid, axes: &[usize]) -> (Vec<f64>, f64) {
    let upper = axes.iter().map(|&i| 1.0 / g.m()[i] as f64).collect();
    let scale = axes.iter().map(|&i| g.m()[i] as f64).product();
    (upper, scale)
}

/// Where a saturated term switches from `K t^a` to its cap.
pub(crate) fn term_kinks(term: &PowerTerm) -> Vec<f64> {
    match term.cap() {
        Some(c) if term.weight() > 0.0 => vec![(c / term.weight()).powf(1.0 / term.exponent())],
        _ => Vec::new(),
    }
}

/// Worst-case error of the spline on the total-modulus class of `omega`.
pub fn class_error_total(omega: &McFunctionMulti, g: &Grid) -> Result<ClassErrorResult> {
    check_dims(omega.dim(), g)?;
    if !omega.is_concave() {
        return Err(Error::pre(MODULE, "majorant must be concave in every variable"));
    }
    Ok(ClassErrorResult {
        value: omega.eval(&half_steps(g))?,
        quadrature_estimate_error: 0.0,
        theorem: TheoremId::T1,
    })
}

/// Worst-case error of the spline on the l_p class of `omega`.
pub fn class_error_lp(omega: &McFunctionUni, g: &Grid, metric: LpMetric) -> Result<ClassErrorResult> {
    if !omega.is_concave() {
        return Err(Error::pre(MODULE, "majorant must be concave"));
    }
    let s: f64 = g.m().iter().map(|&m| metric.pow(1.0 / m as f64)).sum();
    Ok(ClassErrorResult {
        value: omega.eval(0.5 * metric.root(s))?,
        quadrature_estimate_error: 0.0,
        theorem: TheoremId::T2,
    })
}

/// Worst-case error of the order-`r` spline derivative on the total-modulus
/// class. Concavity is required only on the undifferentiated axes.
pub fn class_error_deriv_total(
    omega: &McFunctionMulti,
    g: &Grid,
    r: &DerivOrder,
    q: &QuadratureSpec,
) -> Result<ClassErrorResult> {
    check_dims(omega.dim(), g)?;
    check_order(r, g)?;
    if r.is_zero() {
        return class_error_total(omega, g).map(|res| ClassErrorResult { theorem: TheoremId::T4, ..res });
    }
    let concave = omega.concave_per_axis();
    if let Some(i) = r.free_axes().into_iter().find(|&i| !concave[i]) {
        return Err(Error::pre(
            MODULE,
            format!("majorant must be concave in undifferentiated axis {i}"),
        ));
    }
    let axes = r.axes();
    let base = half_steps(g);
    let (upper, scale) = integration_box(g, &axes);
    let pieces: Vec<Vec<Piece>> = axes
        .iter()
        .zip(&upper)
        .map(|(&i, &len)| split_from_zero(len, &term_kinks(&omega.terms()[i])))
        .collect();
    let integrand = |gamma: &[f64]| {
        let mut h = base.clone();
        for (k, &i) in axes.iter().enumerate() {
            h[i] = gamma[k];
        }
        omega.eval_unchecked(&h)
    };
    let (v, e) = integrate_pieces(integrand, &pieces, &with_min_panels(q))?;
    Ok(ClassErrorResult {
        value: scale * v,
        quadrature_estimate_error: scale * e,
        theorem: TheoremId::T4,
    })
}

/// Worst-case error of the order-`r` spline derivative on the l_p class.
/// Concavity is waived when every axis is differentiated.
pub fn class_error_deriv_lp(
    omega: &McFunctionUni,
    g: &Grid,
    metric: LpMetric,
    r: &DerivOrder,
    q: &QuadratureSpec,
) -> Result<ClassErrorResult> {
    check_order(r, g)?;
    if r.is_zero() {
        return class_error_lp(omega, g, metric).map(|res| ClassErrorResult { theorem: TheoremId::T5, ..res });
    }
    if !r.is_full() && !omega.is_concave() {
        return Err(Error::pre(
            MODULE,
            "majorant must be concave unless every axis is differentiated",
        ));
    }
    let axes = r.axes();
    let offset: f64 = r
        .free_axes()
        .iter()
        .map(|&i| metric.pow(1.0 / (2.0 * g.m()[i] as f64)))
        .sum();
    let (upper, scale) = integration_box(g, &axes);
    let pieces: Vec<Vec<Piece>> = upper.iter().map(|&len| split_from_zero(len, &[])).collect();
    let integrand = |gamma: &[f64]| {
        let s: f64 = offset + gamma.iter().map(|&t| metric.pow(t)).sum::<f64>();
        omega.eval_unchecked(metric.root(s))
    };
    let (v, e) = integrate_pieces(integrand, &pieces, &with_min_panels(q))?;
    Ok(ClassErrorResult {
        value: scale * v,
        quadrature_estimate_error: scale * e,
        theorem: TheoremId::T5,
    })
}
