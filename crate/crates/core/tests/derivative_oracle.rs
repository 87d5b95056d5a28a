//! The spline derivative checked against the literal signed corner sums
//! `F_M` (even |M|) and `F_{M'}` (odd |M|).

use proptest::prelude::*;

use mlspline::grid::Grid;
use mlspline::spline::{basis_h, DerivOrder, SplineData};

fn f(x: &[f64]) -> f64 {
    x.iter().enumerate().map(|(i, v)| (2.0 * v + 0.3 * i as f64).sin() + v * v).product::<f64>() + x[0].exp()
}

/// `sum_l (-1)^{sum_{i in M} l_i + shift} prod_{i not in M} H_{l_i}(x_i) f(x^{j+l})`.
fn signed_corner_sum(s: &SplineData, r: &DerivOrder, x: &[f64], shift: u32) -> f64 {
    let g = s.grid();
    let n = g.dim();
    let j = g.locate_block(x).unwrap().0;
    let mut acc = 0.0;
    for corner in 0..1usize << n {
        let l: Vec<usize> = (0..n).map(|i| corner >> i & 1).collect();
        let flips = r.axes().iter().map(|&i| l[i] as u32).sum::<u32>() + shift;
        let sign = if flips % 2 == 0 { 1.0 } else { -1.0 };
        let weight: f64 = r
            .free_axes()
            .iter()
            .map(|&i| basis_h(g, i, l[i] as u8, j[i], x[i]).unwrap())
            .product();
        let node: Vec<usize> = (0..n).map(|i| j[i] + l[i]).collect();
        acc += sign * weight * s.value_at_node(&node);
    }
    acc
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn derivative_matches_parity_formula(
        m in proptest::collection::vec(2usize..7, 1..=4),
        u in proptest::collection::vec(0.0..=1.0f64, 4),
        bits in 1u8..16,
    ) {
        let n = m.len();
        let g = Grid::new(&m).unwrap();
        let s = SplineData::build(&g, f).unwrap();
        let r = DerivOrder::new(&(0..n).map(|i| bits >> i & 1).collect::<Vec<u8>>()).unwrap();
        let x = &u[..n];
        let scale: f64 = r.axes().iter().map(|&i| m[i] as f64).product();
        // F_M for even |M|, F_{M'} (one extra sign flip) for odd |M|.
        let shift = (r.order() % 2) as u32;
        let oracle = scale * signed_corner_sum(&s, &r, x, shift);
        let got = s.eval_deriv(&r, x).unwrap();
        prop_assert!((got - oracle).abs() <= 1e-12 * oracle.abs().max(1.0), "{got} vs {oracle}");
    }
}
