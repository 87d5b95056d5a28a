//! Tensor-product Gauss-Legendre quadrature with uniform panel doubling.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MODULE: &str = "bounds";

pub const MAX_QUAD_DIM: usize = 6;

/// Upper limit on integrand evaluations for a single refinement level.
pub const MAX_EVALS_PER_LEVEL: usize = 40_000_000;

/// Relative size of summation round-off, measured against `int |f|`.
const ROUNDING_FLOOR: f64 = 64.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    pub panels_per_axis: usize,
    pub points_per_panel: usize,
    pub rel_tol: f64,
    pub max_refinements: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            panels_per_axis: 4,
            points_per_panel: 20,
            rel_tol: 1e-10,
            max_refinements: 12,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.panels_per_axis < 1 {
            return Err(Error::pre(MODULE, "panels_per_axis must be >= 1"));
        }
        if !(4..=32).contains(&self.points_per_panel) {
            return Err(Error::pre(
                MODULE,
                format!("points_per_panel = {} must lie in 4..=32", self.points_per_panel),
            ));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::pre(MODULE, format!("rel_tol = {} must be > 0", self.rel_tol)));
        }
        if self.max_refinements < 1 {
            return Err(Error::pre(MODULE, "max_refinements must be >= 1"));
        }
        Ok(())
    }
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(z) and its derivative.
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite rule on `[a, b]` with `panels` equal panels.
fn composite(a: f64, b: f64, panels: usize, rule: &(Vec<f64>, Vec<f64>)) -> (Vec<f64>, Vec<f64>) {
    let h = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(panels * rule.0.len());
    let mut ws = Vec::with_capacity(panels * rule.0.len());
    for k in 0..panels {
        let lo = a + k as f64 * h;
        for (t, w) in rule.0.iter().zip(&rule.1) {
            xs.push(lo + 0.5 * h * (t + 1.0));
            ws.push(0.5 * h * w);
        }
    }
    (xs, ws)
}

/// Returns the weighted sum and the weighted sum of absolute values.
fn tensor_sum<F>(integrand: &F, axes: &[(Vec<f64>, Vec<f64>)]) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = axes.len();
    let outer = axes[0].0.len();
    let partials: Vec<Result<(f64, f64)>> = (0..outer)
        .into_par_iter()
        .map(|i0| {
            let mut idx = vec![0usize; d];
            idx[0] = i0;
            let mut x = vec![0.0; d];
            let mut sum = 0.0;
            let mut abs_sum = 0.0;
            loop {
                let mut w = 1.0;
                for k in 0..d {
                    x[k] = axes[k].0[idx[k]];
                    w *= axes[k].1[idx[k]];
                }
                let v = integrand(&x);
                if !v.is_finite() {
                    return Err(Error::Quadrature {
                        module: MODULE,
                        msg: format!("integrand is not finite at {x:?}"),
                    });
                }
                sum += w * v;
                abs_sum += (w * v).abs();
                // advance axes 1..d, last fastest
                let mut k = d;
                loop {
                    if k == 1 {
                        return Ok((sum, abs_sum));
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < axes[k].0.len() {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        })
        .collect();
    let mut total = 0.0;
    let mut abs_total = 0.0;
    for p in partials {
        let (v, a) = p?;
        total += v;
        abs_total += a;
    }
    Ok((total, abs_total))
}

/// Integrates over the box `prod [lower_i, upper_i]`, doubling the panel
/// count per axis until two successive estimates agree to `rel_tol`
/// relatively. Returns the finer estimate and the last change as its error.
///
/// Integrals that cancel to (nearly) zero cannot meet a relative test, so a
/// change below the rounding floor `ROUNDING_FLOOR * int |f|` is accepted
/// as well.
/// A zero-dimensional box integrates to the integrand at the empty point.
pub fn integrate_box<F>(
    integrand: F,
    lower: &[f64],
    upper: &[f64],
    q: &QuadratureSpec,
) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    q.validate()?;
    if lower.len() != upper.len() {
        return Err(Error::pre(MODULE, "box bounds differ in dimension"));
    }
    let d = lower.len();
    if d > MAX_QUAD_DIM {
        return Err(Error::pre(
            MODULE,
            format!("box dimension {d} exceeds the limit of {MAX_QUAD_DIM}"),
        ));
    }
    for (i, (a, b)) in lower.iter().zip(upper).enumerate() {
        if !(a.is_finite() && b.is_finite() && a <= b) {
            return Err(Error::pre(MODULE, format!("invalid bounds [{a}, {b}] on axis {i}")));
        }
    }
    if d == 0 {
        let v = integrand(&[]);
        if !v.is_finite() {
            return Err(Error::Quadrature { module: MODULE, msg: "integrand is not finite".into() });
        }
        return Ok((v, 0.0));
    }
    if lower.iter().zip(upper).any(|(a, b)| a == b) {
        return Ok((0.0, 0.0));
    }

    let rule = gauss_legendre(q.points_per_panel);
    let estimate = |panels: usize| -> Result<(f64, f64)> {
        let axes: Vec<_> = lower
            .iter()
            .zip(upper)
            .map(|(&a, &b)| composite(a, b, panels, &rule))
            .collect();
        tensor_sum(&integrand, &axes)
    };
    let evals = |panels: usize| {
        (panels * q.points_per_panel)
            .checked_pow(d as u32)
            .unwrap_or(usize::MAX)
    };

    let mut panels = q.panels_per_axis;
    if evals(panels) > MAX_EVALS_PER_LEVEL {
        return Err(Error::Quadrature {
            module: MODULE,
            msg: format!("initial level needs {} evaluations", evals(panels)),
        });
    }
    let (mut prev, _) = estimate(panels)?;
    let mut last_change = f64::INFINITY;
    for _ in 0..q.max_refinements {
        let next_panels = panels * 2;
        if evals(next_panels) > MAX_EVALS_PER_LEVEL {
            return Err(Error::Quadrature {
                module: MODULE,
                msg: format!(
                    "evaluation budget exhausted at {panels} panels/axis; estimate {prev:e}, last change {last_change:e}"
                ),
            });
        }
        let (cur, abs_cur) = estimate(next_panels)?;
        last_change = (cur - prev).abs();
        if last_change <= q.rel_tol * cur.abs() || last_change <= ROUNDING_FLOOR * abs_cur {
            return Ok((cur, last_change));
        }
        prev = cur;
        panels = next_panels;
    }
    Err(Error::Quadrature {
        module: MODULE,
        msg: format!(
            "rel_tol {:e} unmet after {} refinements; estimate {prev:e}, last change {last_change:e}",
            q.rel_tol, q.max_refinements
        ),
    })
}
