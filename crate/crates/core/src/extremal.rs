//! Functions that attain the class-error bounds.
//!
//! For the function-approximation classes the extremal function is a bump
//! supported on one block, `Omega` applied to the distance from the block
//! faces. It vanishes at every node, so its spline is identically zero and
//! its sup norm is the error.
//!
//! For the derivative classes the order-`r` derivative of the extremal
//! function is a periodic kernel
//!
//! ```text
//! k(x) = Omega(h(x)) - B
//! ```
//!
//! where `B` is the class bound and `h_i(x)` is a tent: on differentiated
//! axes the distance from `x_i` to the nearest odd multiple of `1/m_i`
//! (period `2/m_i`), on the others the distance to the nearest block
//! midpoint (period `1/m_i`). The function itself is the integral of the
//! kernel from the origin over the differentiated axes. Each half period of
//! a differentiated axis carries the same integral, and at nodes the other
//! axes sit where the tent equals `1/(2 m_i)`, so the kernel's integral over
//! every cell `[0, k/m]` cancels against `B`: the function vanishes at all
//! nodes. At `phi` (`1/m_i` on differentiated axes, `1/(2 m_i)` elsewhere)
//! every tent is zero and the kernel equals `-B`.
//!
//! The periodic extension is phased so that the first period starts at the
//! origin; later periods follow from periodicity alone.

use crate::bounds::{
    class_error_deriv_lp, class_error_deriv_total, class_error_lp, class_error_total,
    integrate_pieces, term_kinks, Grade, Piece, QuadratureSpec, TheoremId,
};
use crate::error::{Error, Result};
use crate::grid::{BlockIndex, Grid};
use crate::moduli::{LpMetric, Majorant, McFunctionMulti, McFunctionUni};
use crate::spline::DerivOrder;

const MODULE: &str = "extremal";

#[derive(Debug, Clone)]
enum Kind {
    Total { omega: McFunctionMulti, lo: Vec<f64>, hi: Vec<f64> },
    Lp { omega: McFunctionUni, metric: LpMetric, lo: Vec<f64>, hi: Vec<f64> },
    DerivTotal { omega: McFunctionMulti, r: DerivOrder, bound: f64 },
    DerivLp { omega: McFunctionUni, metric: LpMetric, r: DerivOrder, bound: f64 },
}

#[derive(Debug, Clone)]
pub struct ExtremalFunction {
    grid: Grid,
    kind: Kind,
    quad: QuadratureSpec,
}

/// Bump on block `j` (default: the block at the origin) for the
/// total-modulus class.
pub fn extremal_t1(omega: &McFunctionMulti, g: &Grid, j: Option<BlockIndex>) -> Result<ExtremalFunction> {
    class_error_total(omega, g)?;
    let j = j.unwrap_or_else(|| BlockIndex(vec![0; g.dim()]));
    let (lo, hi) = g.block_bounds(&j)?;
    Ok(ExtremalFunction {
        grid: g.clone(),
        kind: Kind::Total { omega: omega.clone(), lo, hi },
        quad: QuadratureSpec::default(),
    })
}

/// Bump on block `j` for the l_p class.
pub fn extremal_t2(
    omega: &McFunctionUni,
    g: &Grid,
    metric: LpMetric,
    j: Option<BlockIndex>,
) -> Result<ExtremalFunction> {
    class_error_lp(omega, g, metric)?;
    let j = j.unwrap_or_else(|| BlockIndex(vec![0; g.dim()]));
    let (lo, hi) = g.block_bounds(&j)?;
    Ok(ExtremalFunction {
        grid: g.clone(),
        kind: Kind::Lp { omega: *omega, metric, lo, hi },
        quad: QuadratureSpec::default(),
    })
}

fn reject_zero_order(r: &DerivOrder, alternative: &str) -> Result<()> {
    if r.is_zero() {
        return Err(Error::pre(
            MODULE,
            format!("derivative order is zero; use {alternative} for the function class"),
        ));
    }
    Ok(())
}

/// Extremal function for the order-`r` derivative on the total-modulus class.
pub fn extremal_t4(
    omega: &McFunctionMulti,
    g: &Grid,
    r: &DerivOrder,
    q: &QuadratureSpec,
) -> Result<ExtremalFunction> {
    reject_zero_order(r, "extremal_t1")?;
    let bound = class_error_deriv_total(omega, g, r, q)?.value;
    Ok(ExtremalFunction {
        grid: g.clone(),
        kind: Kind::DerivTotal { omega: omega.clone(), r: r.clone(), bound },
        quad: *q,
    })
}

/// Extremal function for the order-`r` derivative on the l_p class.
pub fn extremal_t5(
    omega: &McFunctionUni,
    g: &Grid,
    metric: LpMetric,
    r: &DerivOrder,
    q: &QuadratureSpec,
) -> Result<ExtremalFunction> {
    reject_zero_order(r, "extremal_t2")?;
    let bound = class_error_deriv_lp(omega, g, metric, r, q)?.value;
    Ok(ExtremalFunction {
        grid: g.clone(),
        kind: Kind::DerivLp { omega: *omega, metric, r: r.clone(), bound },
        quad: *q,
    })
}

/// Distance from `x` to the nearest point `(2k + 1) / (denom)`, `k` integer.
/// Zeros are computed the same way as grid nodes so they match bit for bit.
#[inline]
fn dist_to_odd(x: f64, denom: f64) -> f64 {
    let k = ((x * denom - 1.0) / 2.0).floor();
    let a = (2.0 * k + 1.0) / denom;
    let b = (2.0 * k + 3.0) / denom;
    let c = (2.0 * k - 1.0) / denom;
    (x - a).abs().min((x - b).abs()).min((x - c).abs())
}

impl ExtremalFunction {
    pub fn theorem(&self) -> TheoremId {
        match self.kind {
            Kind::Total { .. } => TheoremId::T1,
            Kind::Lp { .. } => TheoremId::T2,
            Kind::DerivTotal { .. } => TheoremId::T4,
            Kind::DerivLp { .. } => TheoremId::T5,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Derivative order whose sup norm attains the bound.
    pub fn order(&self) -> DerivOrder {
        match &self.kind {
            Kind::Total { .. } | Kind::Lp { .. } => DerivOrder::zero(self.grid.dim()),
            Kind::DerivTotal { r, .. } | Kind::DerivLp { r, .. } => r.clone(),
        }
    }

    /// Point where `|f^{(r)}|` equals the bound: the support block's midpoint,
    /// or `phi` for the derivative classes.
    pub fn maximizer(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Total { lo, hi, .. } | Kind::Lp { lo, hi, .. } => {
                lo.iter().zip(hi).map(|(a, b)| a + 0.5 * (b - a)).collect()
            }
            Kind::DerivTotal { r, .. } | Kind::DerivLp { r, .. } => (0..self.grid.dim())
                .map(|i| {
                    let m = self.grid.m()[i] as f64;
                    if r.contains(i) { 1.0 / m } else { 1.0 / (2.0 * m) }
                })
                .collect(),
        }
    }

    /// Tent coordinates `h(x)` of the periodic kernel. Defined on all of R^n.
    fn tents(&self, r: &DerivOrder, x: &[f64], out: &mut [f64]) {
        for i in 0..x.len() {
            let m = self.grid.m()[i] as f64;
            out[i] = if r.contains(i) {
                dist_to_odd(x[i], m)
            } else {
                dist_to_odd(x[i], 2.0 * m)
            };
        }
    }

    /// The periodic kernel `Omega(h(x)) - B` of the derivative classes,
    /// evaluated without restricting `x` to the cube. Errors for the
    /// function classes, which have no kernel.
    pub fn kernel(&self, x: &[f64]) -> Result<f64> {
        self.grid.check_len(x.len())?;
        let mut h = vec![0.0; x.len()];
        match &self.kind {
            Kind::DerivTotal { omega, r, bound } => {
                self.tents(r, x, &mut h);
                Ok(omega.eval_unchecked(&h) - bound)
            }
            Kind::DerivLp { omega, metric, r, bound } => {
                self.tents(r, x, &mut h);
                Ok(omega.eval_unchecked(metric.norm(&h)) - bound)
            }
            _ => Err(Error::pre(MODULE, "function-class extremals have no periodic kernel")),
        }
    }

    pub fn value_at(&self, x: &[f64]) -> Result<f64> {
        let x = self.grid.clamp_point(x)?;
        match &self.kind {
            Kind::Total { omega, lo, hi } => {
                if !inside(&x, lo, hi) {
                    return Ok(0.0);
                }
                let d: Vec<f64> = face_distances(&x, lo, hi);
                Ok(omega.eval_unchecked(&d))
            }
            Kind::Lp { omega, metric, lo, hi } => {
                if !inside(&x, lo, hi) {
                    return Ok(0.0);
                }
                Ok(omega.eval_unchecked(metric.norm(&face_distances(&x, lo, hi))))
            }
            Kind::DerivTotal { r, .. } | Kind::DerivLp { r, .. } => self.integrate_kernel(r, &x),
        }
    }

    /// `f^{(r)}(x)` for `r` equal to zero or to [`ExtremalFunction::order`].
    pub fn deriv_at(&self, x: &[f64], r: &DerivOrder) -> Result<f64> {
        if r.len() != self.grid.dim() {
            return Err(Error::pre(MODULE, "derivative order does not match the grid"));
        }
        if r.is_zero() {
            return self.value_at(x);
        }
        if *r != self.order() {
            return Err(Error::pre(
                MODULE,
                format!("derivative of order {:?} is not available for this extremal", r.as_u8()),
            ));
        }
        let x = self.grid.clamp_point(x)?;
        self.kernel(&x)
    }

    fn integrate_kernel(&self, r: &DerivOrder, x: &[f64]) -> Result<f64> {
        let axes = r.axes();
        let kinks: Vec<Vec<f64>> = match &self.kind {
            Kind::DerivTotal { omega, .. } => {
                axes.iter().map(|&i| term_kinks(&omega.terms()[i])).collect()
            }
            _ => vec![Vec::new(); axes.len()],
        };
        let pieces: Vec<Vec<Piece>> = axes
            .iter()
            .zip(&kinks)
            .map(|(&i, k)| axis_pieces(&self.grid, i, x[i], k))
            .collect();
        if pieces.iter().any(Vec::is_empty) {
            return Ok(0.0);
        }
        let kernel = |gamma: &[f64]| {
            let mut pt = [0.0; crate::spline::MAX_DIM];
            pt[..x.len()].copy_from_slice(x);
            for (k, &i) in axes.iter().enumerate() {
                pt[i] = gamma[k];
            }
            self.kernel(&pt[..x.len()]).unwrap_or(f64::NAN)
        };
        integrate_pieces(kernel, &pieces, &self.quad).map(|(v, _)| v)
    }
}

fn inside(x: &[f64], lo: &[f64], hi: &[f64]) -> bool {
    x.iter().zip(lo).zip(hi).all(|((v, a), b)| v >= a && v <= b)
}

fn face_distances(x: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(lo)
        .zip(hi)
        .map(|((v, a), b)| (v - a).min(b - v).max(0.0))
        .collect()
}

/// Splits `[0, end]` on a differentiated axis at the grid nodes, grading
/// each piece toward its tent zero (odd nodes) and cutting at saturation
/// kinks `zero +- t*`.
fn axis_pieces(g: &Grid, axis: usize, end: f64, kinks: &[f64]) -> Vec<Piece> {
    let m = g.m()[axis];
    let mut out = Vec::new();
    for k in 0..m {
        let lo = g.node(axis, k);
        if lo >= end {
            break;
        }
        let node_hi = g.node(axis, k + 1);
        let hi = node_hi.min(end);
        // tent zero sits at the odd node of this cell
        let (zero, zero_is_low) = if k % 2 == 1 { (lo, true) } else { (node_hi, false) };
        let mut cuts: Vec<f64> = kinks
            .iter()
            .map(|&t| if zero_is_low { zero + t } else { zero - t })
            .filter(|&c| c > lo && c < hi)
            .collect();
        cuts.sort_by(f64::total_cmp);
        let mut a = lo;
        let n_cuts = cuts.len();
        for (idx, c) in cuts.into_iter().chain(std::iter::once(hi)).enumerate() {
            let touches_zero = if zero_is_low { idx == 0 } else { idx == n_cuts && hi == node_hi };
            let grade = match (touches_zero, zero_is_low) {
                (true, true) => Grade::Low,
                (true, false) => Grade::High,
                _ => Grade::Flat,
            };
            out.push(Piece { lo: a, hi: c, grade });
            a = c;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spline::{node_indices, SplineData};
    use approx::assert_abs_diff_eq;

    fn lin2() -> McFunctionMulti {
        McFunctionMulti::power_sum(&[1.0, 1.0], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn t1_examples() {
        let g = Grid::new(&[2, 3]).unwrap();
        let f = extremal_t1(&lin2(), &g, None).unwrap();
        assert_abs_diff_eq!(f.value_at(&[0.25, 1.0 / 6.0]).unwrap(), 5.0 / 12.0, epsilon = 1e-15);
        assert_eq!(f.maximizer(), vec![0.25, 1.0 / 6.0]);
        for j in node_indices(&g) {
            assert_eq!(f.value_at(&g.node_coords(&j).unwrap()).unwrap(), 0.0);
        }
        assert_eq!(f.value_at(&[0.7, 0.1]).unwrap(), 0.0);
        assert!(extremal_t1(&lin2(), &g, Some(BlockIndex(vec![2, 0]))).is_err());
    }

    #[test]
    fn t2_examples() {
        let g = Grid::new(&[2, 2]).unwrap();
        let id = McFunctionUni::power(1.0, 1.0).unwrap();
        let f = extremal_t2(&id, &g, LpMetric::new(2.0).unwrap(), None).unwrap();
        assert_abs_diff_eq!(f.value_at(&[0.25, 0.25]).unwrap(), 2f64.sqrt() / 4.0, epsilon = 1e-15);
        for j in node_indices(&g) {
            assert_eq!(f.value_at(&g.node_coords(&j).unwrap()).unwrap(), 0.0);
        }
        let f1 = extremal_t2(&id, &g, LpMetric::new(1.0).unwrap(), None).unwrap();
        assert_eq!(f1.value_at(&[0.25, 0.25]).unwrap(), 0.5);
    }

    #[test]
    fn t4_examples() {
        let g = Grid::new(&[2, 4]).unwrap();
        let r = DerivOrder::new(&[1, 0]).unwrap();
        let q = QuadratureSpec::default();
        let f = extremal_t4(&lin2(), &g, &r, &q).unwrap();
        assert_eq!(f.maximizer(), vec![0.5, 0.125]);
        assert_abs_diff_eq!(f.deriv_at(&[0.5, 0.125], &r).unwrap().abs(), 0.375, epsilon = 1e-13);
        for j in node_indices(&g) {
            let v = f.value_at(&g.node_coords(&j).unwrap()).unwrap();
            assert!(v.abs() <= 1e-12, "node {j:?}: {v}");
        }
        // the kernel changes sign across the period but keeps its magnitude
        let a = f.kernel(&[0.2, 0.3]).unwrap();
        let b = f.kernel(&[0.8, 0.3]).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-15);
    }

    #[test]
    fn t5_examples() {
        let g = Grid::new(&[2, 2]).unwrap();
        let r = DerivOrder::new(&[1, 0]).unwrap();
        let q = QuadratureSpec::default();
        let id = McFunctionUni::power(1.0, 1.0).unwrap();
        let f = extremal_t5(&id, &g, LpMetric::new(2.0).unwrap(), &r, &q).unwrap();
        let v = f.deriv_at(&[0.5, 0.25], &r).unwrap().abs();
        assert_abs_diff_eq!(v, 0.369_735_714_386_149_36, epsilon = 1e-12);
        for j in node_indices(&g) {
            assert!(f.value_at(&g.node_coords(&j).unwrap()).unwrap().abs() <= 1e-12);
        }
        assert!(extremal_t5(&id, &g, LpMetric::new(2.0).unwrap(), &DerivOrder::zero(2), &q).is_err());
    }

    #[test]
    fn spline_of_extremal_vanishes() {
        let q = QuadratureSpec::default();
        let g = Grid::new(&[3, 2, 2]).unwrap();
        let omega = McFunctionMulti::saturated_power_sum(&[1.0, 2.0, 1.0], &[0.5, 1.0, 0.7], &[0.2, 1.0, 0.3]).unwrap();
        let r = DerivOrder::new(&[1, 0, 1]).unwrap();
        let f = extremal_t4(&omega, &g, &r, &q).unwrap();
        let s = SplineData::build(&g, |x| f.value_at(x).unwrap()).unwrap();
        assert!(s.values().iter().all(|v| v.abs() <= 1e-9), "{:?}", s.values());
    }

    #[test]
    fn unavailable_orders_are_rejected() {
        let g = Grid::new(&[2, 2]).unwrap();
        let q = QuadratureSpec::default();
        let f = extremal_t4(&lin2(), &g, &DerivOrder::new(&[1, 0]).unwrap(), &q).unwrap();
        assert!(f.deriv_at(&[0.1, 0.1], &DerivOrder::new(&[0, 1]).unwrap()).is_err());
        let f1 = extremal_t1(&lin2(), &g, None).unwrap();
        assert!(f1.deriv_at(&[0.1, 0.1], &DerivOrder::new(&[1, 1]).unwrap()).is_err());
        assert!(f1.kernel(&[0.1, 0.1]).is_err());
    }

    #[test]
    fn value_is_integral_of_kernel() {
        // d/dx of value_at matches the kernel away from kinks
        let g = Grid::new(&[4, 3]).unwrap();
        let q = QuadratureSpec::default();
        let omega = McFunctionMulti::power_sum(&[1.0, 0.5], &[0.6, 1.0]).unwrap();
        let r = DerivOrder::new(&[1, 0]).unwrap();
        let f = extremal_t4(&omega, &g, &r, &q).unwrap();
        for x in [[0.1, 0.4], [0.37, 0.9], [0.6, 0.05]] {
            let h = 1e-5;
            let fd = (f.value_at(&[x[0] + h, x[1]]).unwrap() - f.value_at(&[x[0] - h, x[1]]).unwrap()) / (2.0 * h);
            assert_abs_diff_eq!(fd, f.deriv_at(&x, &r).unwrap(), epsilon = 1e-7);
        }
    }
}
