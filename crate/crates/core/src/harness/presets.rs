//! Built-in test functions with analytic mixed derivatives.

use crate::error::{Error, Result};
use crate::spline::DerivOrder;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// `prod_i sin(x_i)`
    SinProduct,
    /// `sum_i exp(x_i)`
    ExpSum,
    /// `prod_i x_i`, multilinear so the spline reproduces it.
    Product,
    /// `sum_i x_i^2 / 2`
    Quadratic,
    /// `sum_i sqrt(x_i)`; only order zero is available.
    SqrtSum,
}

impl Preset {
    pub const ALL: [Preset; 5] =
        [Preset::SinProduct, Preset::ExpSum, Preset::Product, Preset::Quadratic, Preset::SqrtSum];

    pub fn name(self) -> &'static str {
        match self {
            Preset::SinProduct => "sin-product",
            Preset::ExpSum => "exp-sum",
            Preset::Product => "product",
            Preset::Quadratic => "quadratic",
            Preset::SqrtSum => "sqrt-sum",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name).ok_or_else(|| {
            let known: Vec<_> = Self::ALL.iter().map(|p| p.name()).collect();
            Error::Config(format!("unknown preset {name:?}; known: {}", known.join(", ")))
        })
    }

    pub fn value(self, x: &[f64]) -> f64 {
        match self {
            Preset::SinProduct => x.iter().map(|v| v.sin()).product(),
            Preset::ExpSum => x.iter().map(|v| v.exp()).sum(),
            Preset::Product => x.iter().product(),
            Preset::Quadratic => x.iter().map(|v| 0.5 * v * v).sum(),
            Preset::SqrtSum => x.iter().map(|v| v.sqrt()).sum(),
        }
    }

    /// Whether the order-`r` mixed derivative has a closed form here.
    pub fn supports(self, r: &DerivOrder) -> bool {
        !(self == Preset::SqrtSum && !r.is_zero())
    }

    /// `f^{(r)}(x)`; `None` when [`Preset::supports`] is false.
    pub fn deriv(self, x: &[f64], r: &DerivOrder) -> Option<f64> {
        if r.is_zero() {
            return Some(self.value(x));
        }
        let axes = r.axes();
        let v = match self {
            Preset::SinProduct => (0..x.len())
                .map(|i| if r.contains(i) { x[i].cos() } else { x[i].sin() })
                .product(),
            Preset::ExpSum => match axes.as_slice() {
                [k] => x[*k].exp(),
                _ => 0.0,
            },
            Preset::Product => r.free_axes().iter().map(|&i| x[i]).product(),
            Preset::Quadratic => match axes.as_slice() {
                [k] => x[*k],
                _ => 0.0,
            },
            Preset::SqrtSum => return None,
        };
        Some(v)
    }
}
