//! Multilinear interpolating splines on a uniform grid and their mixed
//! first-order partial derivatives.
//!
//! On block `D_j` the spline is
//!
//! ```text
//! S(x) = sum_{l in {0,1}^n} f(x^{j+l}) prod_i H_{l_i}(x_i)
//! ```
//!
//! with `H_0(x_i) = m_i (x_i^{j_i+1} - x_i)` and `H_1 = 1 - H_0`. Mixed
//! derivatives replace each differentiated factor by its constant slope
//! `+-m_i`. Faces between blocks follow the grid's half-open convention, so
//! derivatives are defined everywhere on the cube and take the value from
//! the block on the right.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, MultiIndexIter};
use crate::moduli::LpMetric;

const MODULE: &str = "spline";

pub const MAX_DIM: usize = 8;
pub const MAX_NODES: usize = 10_000_000;

/// Derivative order `r in {0,1}^n`; axis `i` is differentiated once when
/// `r_i = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DerivOrder {
    r: Vec<bool>,
}

impl DerivOrder {
    pub fn new(r: &[u8]) -> Result<Self> {
        if let Some((i, v)) = r.iter().enumerate().find(|(_, &v)| v > 1) {
            return Err(Error::pre(MODULE, format!("r[{i}] = {v}, orders must be 0 or 1")));
        }
        Ok(DerivOrder { r: r.iter().map(|&v| v == 1).collect() })
    }

    pub fn from_axes(n: usize, axes: &[usize]) -> Result<Self> {
        let mut r = vec![false; n];
        for &a in axes {
            if a >= n {
                return Err(Error::pre(MODULE, format!("axis {a} out of range for n = {n}")));
            }
            r[a] = true;
        }
        Ok(DerivOrder { r })
    }

    pub fn zero(n: usize) -> Self {
        DerivOrder { r: vec![false; n] }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        !self.r.iter().any(|&b| b)
    }

    pub fn is_full(&self) -> bool {
        self.r.iter().all(|&b| b)
    }

    #[inline]
    pub fn contains(&self, axis: usize) -> bool {
        self.r[axis]
    }

    /// Differentiated axes, the index set `M`.
    pub fn axes(&self) -> Vec<usize> {
        (0..self.r.len()).filter(|&i| self.r[i]).collect()
    }

    /// Undifferentiated axes.
    pub fn free_axes(&self) -> Vec<usize> {
        (0..self.r.len()).filter(|&i| !self.r[i]).collect()
    }

    /// `|M|`.
    pub fn order(&self) -> usize {
        self.r.iter().filter(|&&b| b).count()
    }

    pub fn parity(&self) -> usize {
        self.order() % 2
    }

    pub fn as_u8(&self) -> Vec<u8> {
        self.r.iter().map(|&b| b as u8).collect()
    }
}

/// Local coordinate of `x` in `[node(j), node(j+1)]`, in `[0, 1]`. Exact 0
/// and 1 at the two nodes, which keeps nodal interpolation bit-exact.
#[inline]
fn local_coord(g: &Grid, axis: usize, j: usize, x: f64) -> f64 {
    let lo = g.node(axis, j);
    if x == lo {
        return 0.0;
    }
    if x == g.node(axis, j + 1) {
        return 1.0;
    }
    ((x - lo) * g.m()[axis] as f64).clamp(0.0, 1.0)
}

/// Basis factor `H_{l,j}(x)` on one axis: `H_0 = m (x^{j+1} - x)`,
/// `H_1 = 1 - H_0`.
pub fn basis_h(g: &Grid, axis: usize, l: u8, j: usize, x: f64) -> Result<f64> {
    if axis >= g.dim() {
        return Err(Error::pre(MODULE, format!("axis {axis} out of range")));
    }
    if j >= g.m()[axis] {
        return Err(Error::pre(MODULE, format!("block index {j} out of range on axis {axis}")));
    }
    if l > 1 {
        return Err(Error::pre(MODULE, format!("basis selector l = {l} must be 0 or 1")));
    }
    let (lo, hi) = (g.node(axis, j), g.node(axis, j + 1));
    let slack = crate::grid::CLAMP_SLACK;
    if !(x >= lo - slack && x <= hi + slack) {
        return Err(Error::pre(
            MODULE,
            format!("x = {x} lies outside block [{lo}, {hi}] on axis {axis}"),
        ));
    }
    let t = local_coord(g, axis, j, x.clamp(lo, hi));
    Ok(if l == 0 { 1.0 - t } else { t })
}

/// `lambda(x) = H_0(x)(x - x^j) + H_1(x)(x^{j+1} - x)` on the block of `x`.
/// Peaks at the block midpoint with value `1 / (2 m)`.
pub fn lambda_weight(g: &Grid, axis: usize, x: f64) -> Result<f64> {
    let j = g.locate_axis(axis, crate::grid::clamp_unit(x).ok_or_else(|| {
        Error::pre(MODULE, format!("x = {x} lies outside [0, 1]"))
    })?);
    let (lo, hi) = (g.node(axis, j), g.node(axis, j + 1));
    let h0 = basis_h(g, axis, 0, j, x)?;
    let h1 = basis_h(g, axis, 1, j, x)?;
    Ok(h0 * (x - lo) + h1 * (hi - x))
}

/// `alpha(x) = H_0(x)(x - x^j)^p + H_1(x)(x^{j+1} - x)^p`. Bounded by
/// `1 / (2 m)^p` for `1 <= p <= 3`.
pub fn alpha_weight(g: &Grid, axis: usize, x: f64, metric: LpMetric) -> Result<f64> {
    let j = g.locate_axis(axis, crate::grid::clamp_unit(x).ok_or_else(|| {
        Error::pre(MODULE, format!("x = {x} lies outside [0, 1]"))
    })?);
    let (lo, hi) = (g.node(axis, j), g.node(axis, j + 1));
    let h0 = basis_h(g, axis, 0, j, x)?;
    let h1 = basis_h(g, axis, 1, j, x)?;
    Ok(h0 * metric.pow((x - lo).max(0.0)) + h1 * metric.pow((hi - x).max(0.0)))
}

/// Nodal values of a function on a grid; the spline and all of its
/// derivatives are evaluated from these.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineData {
    grid: Grid,
    values: Vec<f64>,
    strides: Vec<usize>,
}

fn check_size(g: &Grid) -> Result<()> {
    if g.dim() > MAX_DIM {
        return Err(Error::ResourceCap {
            module: MODULE,
            msg: format!("dimension {} exceeds the limit of {MAX_DIM}", g.dim()),
        });
    }
    let nodes = g
        .nodes_per_axis()
        .iter()
        .try_fold(1usize, |acc, &k| acc.checked_mul(k))
        .filter(|&c| c <= MAX_NODES);
    if nodes.is_none() {
        return Err(Error::ResourceCap {
            module: MODULE,
            msg: format!("grid {:?} has more than {MAX_NODES} nodes", g.m()),
        });
    }
    Ok(())
}

fn strides_for(g: &Grid) -> Vec<usize> {
    let per_axis = g.nodes_per_axis();
    let mut strides = vec![1; g.dim()];
    for i in (0..g.dim().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * per_axis[i + 1];
    }
    strides
}

impl SplineData {
    /// Samples `f` once per node. Nodes are evaluated in parallel.
    pub fn build<F>(g: &Grid, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        check_size(g)?;
        let per_axis = g.nodes_per_axis();
        let values: Vec<f64> = (0..g.node_count())
            .into_par_iter()
            .map(|k| f(&node_of_flat(g, &per_axis, k)))
            .collect();
        Self::from_values(g, values)
    }

    /// Like [`SplineData::build`] but evaluates nodes one at a time in
    /// row-major order, for functions that are not thread safe.
    pub fn build_sequential<F>(g: &Grid, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> f64,
    {
        check_size(g)?;
        let per_axis = g.nodes_per_axis();
        let values = (0..g.node_count())
            .map(|k| f(&node_of_flat(g, &per_axis, k)))
            .collect();
        Self::from_values(g, values)
    }

    /// Wraps an existing row-major nodal tensor (axis 0 slowest).
    pub fn from_values(g: &Grid, values: Vec<f64>) -> Result<Self> {
        check_size(g)?;
        if values.len() != g.node_count() {
            return Err(Error::pre(
                MODULE,
                format!("expected {} nodal values, got {}", g.node_count(), values.len()),
            ));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            let per_axis = g.nodes_per_axis();
            return Err(Error::pre(
                MODULE,
                format!(
                    "function is not finite at node {:?}",
                    node_of_flat(g, &per_axis, k)
                ),
            ));
        }
        Ok(SplineData { grid: g.clone(), values, strides: strides_for(g) })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at_node(&self, j: &[usize]) -> f64 {
        self.values[j.iter().zip(&self.strides).map(|(a, b)| a * b).sum::<usize>()]
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.eval_deriv(&DerivOrder::zero(self.grid.dim()), x)
    }

    /// Mixed partial derivative of order `r`; `r = 0` is the spline itself.
    pub fn eval_deriv(&self, r: &DerivOrder, x: &[f64]) -> Result<f64> {
        let g = &self.grid;
        let n = g.dim();
        if r.len() != n {
            return Err(Error::pre(
                MODULE,
                format!("derivative order has {} axes, grid has {n}", r.len()),
            ));
        }
        let x = g.clamp_point(x)?;
        // Per-axis factors for l = 0 and l = 1.
        let mut f0 = [0.0; MAX_DIM];
        let mut f1 = [0.0; MAX_DIM];
        let mut base = 0usize;
        for i in 0..n {
            let j = g.locate_axis(i, x[i]);
            base += j * self.strides[i];
            if r.contains(i) {
                let m = g.m()[i] as f64;
                f0[i] = -m;
                f1[i] = m;
            } else {
                let t = local_coord(g, i, j, x[i]);
                f0[i] = 1.0 - t;
                f1[i] = t;
            }
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = base;
            for i in 0..n {
                if corner >> (n - 1 - i) & 1 == 1 {
                    w *= f1[i];
                    idx += self.strides[i];
                } else {
                    w *= f0[i];
                }
            }
            acc += w * self.values[idx];
        }
        Ok(acc)
    }
}

fn node_of_flat(g: &Grid, per_axis: &[usize], mut k: usize) -> Vec<f64> {
    let mut x = vec![0.0; g.dim()];
    for i in (0..g.dim()).rev() {
        x[i] = g.node(i, k % per_axis[i]);
        k /= per_axis[i];
    }
    x
}

/// Iterates all node multi-indices in storage order.
pub fn node_indices(g: &Grid) -> MultiIndexIter {
    MultiIndexIter::new(g.nodes_per_axis())
}

/// `(f(x) - f(y)) / prod_{i : x_i != y_i} (x_i - y_i)`.
pub fn divided_difference<F>(f: F, x: &[f64], y: &[f64]) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if x.len() != y.len() {
        return Err(Error::pre(MODULE, "points differ in dimension"));
    }
    let denom: f64 = x
        .iter()
        .zip(y)
        .filter(|(a, b)| a != b)
        .map(|(a, b)| a - b)
        .product();
    if x == y {
        return Err(Error::pre(MODULE, "divided difference of a point with itself"));
    }
    Ok((f(x) - f(y)) / denom)
}

/// `|f^{(r)}(x) - S^{(r)}(x)|`.
pub fn pointwise_error<D>(f_deriv: D, s: &SplineData, r: &DerivOrder, x: &[f64]) -> Result<f64>
where
    D: Fn(&[f64]) -> f64,
{
    let exact = f_deriv(x);
    let approx = s.eval_deriv(r, x)?;
    let e = (exact - approx).abs();
    if !e.is_finite() {
        return Err(Error::pre(
            MODULE,
            format!("non-finite error at {x:?} (f^(r) = {exact}, spline = {approx})"),
        ));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn xy(x: &[f64]) -> f64 {
        x[0] * x[1]
    }

    #[test]
    fn basis_examples() {
        let g = Grid::new(&[2]).unwrap();
        assert_eq!(basis_h(&g, 0, 0, 0, 0.0).unwrap(), 1.0);
        assert_eq!(basis_h(&g, 0, 0, 0, 0.25).unwrap(), 0.5);
        for x in [0.0, 0.1, 0.33, 0.5] {
            let s = basis_h(&g, 0, 0, 0, x).unwrap() + basis_h(&g, 0, 1, 0, x).unwrap();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-15);
        }
        assert!(basis_h(&g, 0, 0, 0, 0.7).is_err());
        assert!(basis_h(&g, 0, 2, 0, 0.2).is_err());
    }

    #[test]
    fn build_examples() {
        let g = Grid::new(&[2, 2]).unwrap();
        let s = SplineData::build(&g, xy).unwrap();
        assert_eq!(s.values(), &[0.0, 0.0, 0.0, 0.0, 0.25, 0.5, 0.0, 0.5, 1.0]);
        let s = SplineData::build(&g, |_| 3.5).unwrap();
        assert!(s.values().iter().all(|&v| v == 3.5));
        let g1 = Grid::new(&[2]).unwrap();
        let s = SplineData::build(&g1, |x| x[0] * x[0]).unwrap();
        assert_eq!(s.values(), &[0.0, 0.25, 1.0]);
    }

    #[test]
    fn build_calls_once_per_node() {
        let g = Grid::new(&[3, 4]).unwrap();
        let mut calls = 0;
        SplineData::build_sequential(&g, |x| {
            calls += 1;
            x[0]
        })
        .unwrap();
        assert_eq!(calls, 20);
    }

    #[test]
    fn build_rejects_non_finite() {
        let g = Grid::new(&[2]).unwrap();
        let err = SplineData::build(&g, |x| 1.0 / x[0]).unwrap_err();
        assert!(err.to_string().contains("not finite"));
    }

    #[test]
    fn build_caps_resources() {
        let g = Grid::new(&[2; 9]).unwrap();
        assert!(matches!(SplineData::build(&g, |_| 0.0), Err(Error::ResourceCap { .. })));
        let g = Grid::new(&[10_000, 10_000]).unwrap();
        assert!(matches!(SplineData::build(&g, |_| 0.0), Err(Error::ResourceCap { .. })));
    }

    #[test]
    fn eval_examples() {
        let g = Grid::new(&[2, 2]).unwrap();
        let s = SplineData::build(&g, xy).unwrap();
        assert_abs_diff_eq!(s.eval(&[0.3, 0.7]).unwrap(), 0.21, epsilon = 1e-15);
        let g1 = Grid::new(&[2]).unwrap();
        let sq = SplineData::build(&g1, |x| x[0] * x[0]).unwrap();
        assert_abs_diff_eq!(sq.eval(&[0.25]).unwrap(), 0.125, epsilon = 1e-16);
        assert!(s.eval(&[1.2, 0.0]).is_err());
    }

    #[test]
    fn interpolates_nodes_exactly() {
        let g = Grid::new(&[3, 7, 49]).unwrap();
        let f = |x: &[f64]| (x[0] * 3.1).sin() + x[1].exp() * x[2];
        let s = SplineData::build(&g, f).unwrap();
        for j in node_indices(&g) {
            let x = g.node_coords(&j).unwrap();
            assert_eq!(s.eval(&x).unwrap(), f(&x), "node {j:?}");
        }
    }

    #[test]
    fn deriv_examples() {
        let g = Grid::new(&[2, 2]).unwrap();
        let s = SplineData::build(&g, |x| x[0] * x[0]).unwrap();
        let r10 = DerivOrder::new(&[1, 0]).unwrap();
        assert_abs_diff_eq!(s.eval_deriv(&r10, &[0.25, 0.7]).unwrap(), 0.5, epsilon = 1e-15);
        // Finite difference inside block column 0 agrees.
        let h = 1e-6;
        let fd = (s.eval(&[0.25 + h, 0.7]).unwrap() - s.eval(&[0.25 - h, 0.7]).unwrap()) / (2.0 * h);
        assert_abs_diff_eq!(fd, 0.5, epsilon = 1e-8);

        let sxy = SplineData::build(&g, xy).unwrap();
        let r11 = DerivOrder::new(&[1, 1]).unwrap();
        for x in [[0.1, 0.2], [0.7, 0.3], [0.5, 0.5], [0.99, 0.01]] {
            assert_abs_diff_eq!(sxy.eval_deriv(&r11, &x).unwrap(), 1.0, epsilon = 1e-14);
        }
        let r00 = DerivOrder::zero(2);
        assert_eq!(sxy.eval_deriv(&r00, &[0.3, 0.8]).unwrap(), sxy.eval(&[0.3, 0.8]).unwrap());
    }

    #[test]
    fn deriv_on_faces_uses_right_block() {
        let g = Grid::new(&[2]).unwrap();
        let s = SplineData::build(&g, |x| x[0] * x[0]).unwrap();
        let r = DerivOrder::new(&[1]).unwrap();
        // slopes are 0.5 on [0, 0.5) and 1.5 on [0.5, 1]
        assert_abs_diff_eq!(s.eval_deriv(&r, &[0.5]).unwrap(), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.eval_deriv(&r, &[1.0]).unwrap(), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.eval_deriv(&r, &[0.0]).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn deriv_order_bookkeeping() {
        let r = DerivOrder::new(&[1, 0, 1]).unwrap();
        assert_eq!(r.axes(), vec![0, 2]);
        assert_eq!(r.free_axes(), vec![1]);
        assert_eq!(r.order(), 2);
        assert_eq!(r.parity(), 0);
        assert!(DerivOrder::new(&[2]).is_err());
        assert_eq!(DerivOrder::from_axes(3, &[1]).unwrap().as_u8(), vec![0, 1, 0]);
    }

    #[test]
    fn divided_difference_examples() {
        assert_eq!(divided_difference(xy, &[1.0, 1.0], &[0.0, 0.0]).unwrap(), 1.0);
        let d = divided_difference(xy, &[0.5, 0.3], &[0.5, 0.1]).unwrap();
        assert_abs_diff_eq!(d, 0.5, epsilon = 1e-15);
        assert_eq!(divided_difference(|_| 2.0, &[0.2, 0.3], &[0.5, 0.1]).unwrap(), 0.0);
        assert!(divided_difference(xy, &[0.2, 0.3], &[0.2, 0.3]).is_err());
    }

    #[test]
    fn pointwise_error_examples() {
        let g = Grid::new(&[2]).unwrap();
        let sq = |x: &[f64]| x[0] * x[0];
        let s = SplineData::build(&g, sq).unwrap();
        let r = DerivOrder::zero(1);
        assert_abs_diff_eq!(pointwise_error(sq, &s, &r, &[0.25]).unwrap(), 0.0625, epsilon = 1e-16);
        assert_eq!(pointwise_error(sq, &s, &r, &[0.5]).unwrap(), 0.0);
        let g2 = Grid::new(&[3, 2]).unwrap();
        let s2 = SplineData::build(&g2, xy).unwrap();
        assert!(pointwise_error(xy, &s2, &DerivOrder::zero(2), &[0.4, 0.9]).unwrap() < 1e-15);
        assert!(pointwise_error(|_| f64::NAN, &s, &r, &[0.3]).is_err());
    }

    #[test]
    fn lambda_peaks_at_midpoint() {
        let g = Grid::new(&[5]).unwrap();
        assert_abs_diff_eq!(lambda_weight(&g, 0, 0.3).unwrap(), 0.1, epsilon = 1e-15);
        assert_eq!(lambda_weight(&g, 0, 0.2).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn partition_of_unity(m in 2usize..40, u in 0.0..=1.0f64) {
            let g = Grid::new(&[m]).unwrap();
            let j = g.locate_axis(0, u);
            let s = basis_h(&g, 0, 0, j, u).unwrap() + basis_h(&g, 0, 1, j, u).unwrap();
            prop_assert!((s - 1.0).abs() <= 1e-14);
        }

        #[test]
        fn reproduces_multilinear(m0 in 2usize..9, m1 in 2usize..9, m2 in 2usize..9,
                                  x0 in 0.0..=1.0f64, x1 in 0.0..=1.0f64, x2 in 0.0..=1.0f64) {
            let g = Grid::new(&[m0, m1, m2]).unwrap();
            let f = |x: &[f64]| 1.0 + 2.0 * x[0] - x[1] * x[2] + 3.0 * x[0] * x[1] * x[2];
            let s = SplineData::build(&g, f).unwrap();
            let x = [x0, x1, x2];
            prop_assert!((s.eval(&x).unwrap() - f(&x)).abs() <= 1e-13);
        }

        #[test]
        fn alpha_bounded(m in 2usize..30, u in 0.0..=1.0f64, p in 1.0..=3.0f64) {
            let g = Grid::new(&[m]).unwrap();
            let a = alpha_weight(&g, 0, u, LpMetric::new(p).unwrap()).unwrap();
            prop_assert!(a <= (2.0 * m as f64).powf(-p) + 1e-12);
        }
    }
}
