//! Piecewise integration with endpoint grading, used for the theorem
//! integrals whose integrands have power-type singularities or kinks at
//! known locations.
//!
//! Each axis is a list of intervals. An interval graded toward an endpoint
//! is integrated in the variable `u` with `gamma = lo + (hi - lo) u^3` (or
//! the mirror image), which turns a `t^a` endpoint singularity into the
//! smooth-enough `u^{3a+2}`. Every tensor-product cell is then handed to
//! [`integrate_box`] on the unit box.

use super::quadrature::{integrate_box, QuadratureSpec};
use crate::error::Result;
use crate::grid::MultiIndexIter;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Grade {
    Flat,
    /// Singular behaviour at the lower end.
    Low,
    /// Singular behaviour at the upper end.
    High,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub grade: Grade,
}

impl Piece {
    #[inline]
    fn map(&self, u: f64) -> (f64, f64) {
        let w = self.hi - self.lo;
        match self.grade {
            Grade::Flat => (self.lo + w * u, w),
            Grade::Low => (self.lo + w * u * u * u, 3.0 * w * u * u),
            Grade::High => {
                let v = 1.0 - u;
                (self.hi - w * v * v * v, 3.0 * w * v * v)
            }
        }
    }
}

/// Splits `[0, len]` at the given interior breakpoints, grading the first
/// piece toward zero.
pub(crate) fn split_from_zero(len: f64, breaks: &[f64]) -> Vec<Piece> {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&b| b > 0.0 && b < len).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut lo = 0.0;
    for c in cuts.into_iter().chain(std::iter::once(len)) {
        let grade = if lo == 0.0 { Grade::Low } else { Grade::Flat };
        out.push(Piece { lo, hi: c, grade });
        lo = c;
    }
    out
}

/// Integrates over the tensor product of per-axis piece lists. Returns the
/// summed value and the summed refinement changes.
pub(crate) fn integrate_pieces<F>(integrand: F, axes: &[Vec<Piece>], q: &QuadratureSpec) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = axes.len();
    let mut value = 0.0;
    let mut err = 0.0;
    for cell in MultiIndexIter::new(axes.iter().map(Vec::len).collect()) {
        let pieces: Vec<Piece> = cell.iter().enumerate().map(|(i, &k)| axes[i][k]).collect();
        if pieces.iter().any(|p| p.hi <= p.lo) {
            continue;
        }
        let mapped = |u: &[f64]| {
            let mut gamma = [0.0; super::MAX_QUAD_DIM];
            let mut jac = 1.0;
            for i in 0..d {
                let (g, j) = pieces[i].map(u[i]);
                gamma[i] = g;
                jac *= j;
            }
            if jac == 0.0 {
                return 0.0;
            }
            jac * integrand(&gamma[..d])
        };
        let (v, e) = integrate_box(mapped, &vec![0.0; d], &vec![1.0; d], q)?;
        value += v;
        err += e;
    }
    Ok((value, err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn graded_pieces_handle_root_singularities() {
        let q = QuadratureSpec::default();
        let axes = vec![split_from_zero(1.0, &[])];
        let (v, _) = integrate_pieces(|g| g[0].powf(0.2), &axes, &q).unwrap();
        assert_abs_diff_eq!(v, 1.0 / 1.2, epsilon = 1e-12);
        let hi = vec![vec![Piece { lo: 0.0, hi: 1.0, grade: Grade::High }]];
        let (v, _) = integrate_pieces(|g| (1.0 - g[0]).powf(0.3), &hi, &q).unwrap();
        assert_abs_diff_eq!(v, 1.0 / 1.3, epsilon = 1e-12);
    }

    #[test]
    fn kinks_at_breakpoints_integrate_cleanly() {
        let q = QuadratureSpec::default();
        let axes = vec![split_from_zero(1.0, &[0.3]), split_from_zero(0.5, &[])];
        let (v, _) = integrate_pieces(|g| g[0].min(0.3) + g[1], &axes, &q).unwrap();
        // int_0^1 min(x, .3) dx * .5 + 1 * .125
        let exact = (0.045 + 0.7 * 0.3) * 0.5 + 0.125;
        assert_abs_diff_eq!(v, exact, epsilon = 1e-13);
    }

    #[test]
    fn split_sorts_and_filters() {
        let p = split_from_zero(1.0, &[0.7, 0.2, 1.5, 0.0, 0.2]);
        let ends: Vec<(f64, f64)> = p.iter().map(|p| (p.lo, p.hi)).collect();
        assert_eq!(ends, vec![(0.0, 0.2), (0.2, 0.7), (0.7, 1.0)]);
        assert_eq!(p[0].grade, Grade::Low);
        assert_eq!(p[1].grade, Grade::Flat);
    }
}
